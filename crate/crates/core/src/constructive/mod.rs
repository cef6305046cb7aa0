//! Constructive decomposition of invariant subspaces of finite-rank
//! perturbations of `T_φ^*`, the model subspace `K` it induces, and the
//! converse and dual statements built on top of it.

mod dual;
mod wold;

pub use dual::{
    almost_bridge, forward_dual_representation, BridgeDirection, BridgeOutcome, ForwardDual,
};
pub use wold::{wold_expand, Layer, ModelProjector, WoldExpansion, WoldFrame};

use faer::Mat;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hardy::{HardyFunction, TruncationConfig, VectorHardyFunction};
use crate::linalg::{self, CMatrix};
use crate::operators::{
    assemble, sarason_backward, OperatorMatrix, PerturbationSpec, SarasonFlavor,
};
use crate::report::VerificationReport;
use crate::subspace::{invariance_residual, invariance_threshold, Subspace};
use crate::symbol::SymbolSpec;
use crate::C64;

/// An invariant subspace `M` together with the row `F_0 = [f_1, …, f_p]` and
/// the inner symbol used to read elements `f = F_0 F + f_0`.
#[derive(Debug, Clone)]
pub struct Representation {
    pub m: Subspace,
    fs: Vec<HardyFunction>,
    pub wold: WoldFrame,
}

impl Representation {
    pub fn new(
        m: Subspace,
        fs: Vec<HardyFunction>,
        phi: &SymbolSpec,
        cfg: &TruncationConfig,
    ) -> Result<Self> {
        let wold = WoldFrame::new(phi, cfg)?;
        if !wold.inner.vanishes_at_origin() {
            return Err(Error::Precondition(
                "the inner symbol must vanish at the origin".into(),
            ));
        }
        for f in &fs {
            if f.degree() != cfg.degree {
                return Err(Error::DimensionMismatch {
                    expected: cfg.degree,
                    found: f.degree(),
                });
            }
        }
        Ok(Self { m, fs, wold })
    }

    pub fn p(&self) -> usize {
        self.fs.len()
    }

    /// `F_0`.
    pub fn row(&self) -> &[HardyFunction] {
        &self.fs
    }

    /// `(F, f_0)` as truncated functions.
    pub fn functions(&self, k: &KElement) -> Result<(VectorHardyFunction, HardyFunction)> {
        let n = self.wold.degree();
        let powers = self.wold.powers(k.a.len().max(k.c.len()).min(n + 1));
        let mut channels = vec![HardyFunction::zero(n); self.p()];
        if let Some(a) = k.a.iter().find(|a| a.len() != self.p()) {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: a.len(),
            });
        }
        for (a, phi_j) in k.a.iter().zip(&powers) {
            for (ch, coef) in channels.iter_mut().zip(a.iter()) {
                ch.axpy(*coef, phi_j)?;
            }
        }
        let mut f0 = HardyFunction::zero(n);
        for (c, phi_j) in k.c.iter().zip(&powers) {
            f0 = f0.add(&c.multiply(phi_j)?)?;
        }
        Ok((VectorHardyFunction::new(channels)?, f0))
    }

    /// `F_0 F + f_0` modulo `z^{N+1}`.
    pub fn image(&self, k: &KElement) -> Result<HardyFunction> {
        let (big_f, f0) = self.functions(k)?;
        let h = if self.p() == 0 {
            HardyFunction::zero(self.wold.degree())
        } else {
            big_f.pair_with_row(&self.fs)?.0
        };
        h.add(&f0)
    }

    /// The two clauses defining membership in `K`.
    pub fn membership(&self, k: &KElement) -> Result<Membership> {
        let h = self.image(k)?;
        Ok(Membership {
            range_residual: self.m.residual(&h)?,
            norm_gap: (h.norm_squared() - k.norm_squared()).abs(),
            image: h,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Membership {
    /// `‖(I − P_M)(F_0 F + f_0)‖`.
    pub range_residual: f64,
    /// `|‖F_0 F + f_0‖² − ‖F‖² − ‖f_0‖²|`.
    pub norm_gap: f64,
    pub image: HardyFunction,
}

/// Element `(F, f_0)` of `H²_{C^p} ⊕ H²` stored in Wold coordinates:
/// `F = Σ A_j φ^j` and `f_0 = Σ c_{j+1} φ^j` with `c_j ∈ K_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct KElement {
    pub a: Vec<DVector<C64>>,
    /// Truncated `c_j`.
    pub c: Vec<HardyFunction>,
    /// Exact `‖c_j‖²`.
    pub c_norms_sq: Vec<f64>,
}

impl KElement {
    pub fn zero() -> Self {
        Self {
            a: Vec::new(),
            c: Vec::new(),
            c_norms_sq: Vec::new(),
        }
    }

    /// `(e_i, 0)`.
    pub fn constant(p: usize, i: usize) -> Self {
        let mut e = DVector::zeros(p);
        e[i] = C64::new(1.0, 0.0);
        Self {
            a: vec![e],
            c: Vec::new(),
            c_norms_sq: Vec::new(),
        }
    }

    /// `‖F‖² + ‖f_0‖²`, exact by orthogonality of the Wold layers.
    pub fn norm_squared(&self) -> f64 {
        self.a.iter().map(|a| a.norm_squared()).sum::<f64>() + self.c_norms_sq.iter().sum::<f64>()
    }

    /// `(T_Φ^* F, T_φ^* f_0)`: each Wold series moves down one layer.
    pub fn shifted(&self) -> Self {
        Self {
            a: self.a.iter().skip(1).cloned().collect(),
            c: self.c.iter().skip(1).cloned().collect(),
            c_norms_sq: self.c_norms_sq.iter().skip(1).copied().collect(),
        }
    }

    /// `F(0) = A_0`.
    pub fn value_at_origin(&self, p: usize) -> DVector<C64> {
        self.a.first().cloned().unwrap_or_else(|| DVector::zeros(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionOptions {
    /// Iteration cap; `N + 1` when unset.
    pub max_iterations: Option<usize>,
    /// Early stop once `‖l_n‖ ≤ tolerance · ‖f‖`; `10⁻³ · eps_residual` when unset.
    pub tolerance: Option<f64>,
    /// Return a convergence error when the final residual exceeds
    /// `eps_residual · ‖f‖`.
    pub require_convergence: bool,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        Self {
            max_iterations: None,
            tolerance: None,
            require_convergence: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub a: Vec<DVector<C64>>,
    /// `P_{K_φ} g_j` modulo `z^{N+1}`.
    pub g_kproj: Vec<HardyFunction>,
    /// Exact `‖P_{K_φ} g_j‖`.
    pub g_kproj_norms: Vec<f64>,
    pub big_f: VectorHardyFunction,
    pub f0: HardyFunction,
    /// `‖l_1‖, ‖l_2‖, …`.
    pub residual_norms: Vec<f64>,
    /// Per step `n`, `|‖f‖² − (Σ_{j≤n} ‖A_j‖² + ‖l_{n+1}‖² + Σ_{j≤n+1} ‖P_K g_j‖²)|`.
    pub norm_identity_trace: Vec<f64>,
    /// `|‖f‖² − ‖F‖² − ‖f_0‖²|`.
    pub norm_gap: f64,
    /// `‖f − (F_0 F + f_0)‖` modulo `z^{N+1}`.
    pub reconstruction_error: f64,
    /// Agreement of the two routes to `P_{K_φ} g_j` (direct and kernel Gram).
    pub kernel_route_gap: f64,
    /// `W = {0}`: `M` is `T_φ^*`-invariant and `F` is empty.
    pub degenerate: bool,
}

impl DecompositionResult {
    pub fn iterations(&self) -> usize {
        self.residual_norms.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(0.0)
    }

    pub fn element(&self) -> KElement {
        KElement {
            a: self.a.clone(),
            c: self.g_kproj.clone(),
            c_norms_sq: self.g_kproj_norms.iter().map(|x| x * x).collect(),
        }
    }
}

/// Everything `invariant_decomposition` derives from `(M, spec)` before it
/// touches a particular `f`.
#[derive(Debug, Clone)]
pub struct InvariantFrame {
    pub representation: Representation,
    cfg: TruncationConfig,
    w: CMatrix,
    mw: CMatrix,
    engine: Engine,
    operator: OperatorMatrix,
    invariance_residual: f64,
}

impl InvariantFrame {
    pub fn new(m: &Subspace, spec: &PerturbationSpec, cfg: &TruncationConfig) -> Result<Self> {
        let phi = spec.base.adjoint_symbol().ok_or_else(|| {
            Error::Precondition(
                "the base operator must be the adjoint of an analytic Toeplitz operator".into(),
            )
        })?;
        if m.degree() != cfg.degree {
            return Err(Error::DimensionMismatch {
                expected: cfg.degree,
                found: m.degree(),
            });
        }
        let operator = assemble(spec, cfg)?;
        let residual = invariance_residual(&operator, m)?;
        let threshold = invariance_threshold(&operator, cfg);
        if residual > threshold {
            return Err(Error::NotInvariant {
                residual,
                threshold,
            });
        }
        let functionals = spec.functional_directions();
        let scale = functionals
            .iter()
            .map(HardyFunction::norm)
            .fold(0.0, f64::max);
        let w = if functionals.is_empty() || m.is_zero() {
            CMatrix::zeros(cfg.dim(), 0)
        } else {
            let pm = m.basis() * (m.basis().adjoint() * linalg::columns(&functionals, cfg.dim()));
            linalg::range_basis(&pm, cfg.eps_rank * scale.max(1.0))
        };
        let mw = if m.is_zero() {
            CMatrix::zeros(cfg.dim(), 0)
        } else {
            let coords = m.basis().adjoint() * &w;
            m.basis() * linalg::complement(&coords)
        };
        let fs = linalg::column_functions(&w);
        let representation = Representation::new(m.clone(), fs, &phi, cfg)?;
        let engine = Engine::new(&w, &mw, &representation.wold);
        Ok(Self {
            representation,
            cfg: *cfg,
            engine,
            w,
            mw,
            operator,
            invariance_residual: residual,
        })
    }

    /// Same frame with `F_0` replaced by `F_0 U` for a `p × p` unitary `U`.
    pub fn with_rotated_row(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.p() || u.ncols() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: u.nrows(),
            });
        }
        let w = &self.w * u;
        let mut out = self.clone();
        out.representation.fs = linalg::column_functions(&w);
        out.engine.qw_h = to_mat(&w.adjoint());
        out.w = w;
        Ok(out)
    }

    pub fn p(&self) -> usize {
        self.w.ncols()
    }

    pub fn subspace(&self) -> &Subspace {
        &self.representation.m
    }

    pub fn row(&self) -> &[HardyFunction] {
        self.representation.row()
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.operator
    }

    pub fn invariance_residual(&self) -> f64 {
        self.invariance_residual
    }

    /// Orthogonal projection onto `M ∩ W^⊥`.
    pub fn complement_projector(&self) -> CMatrix {
        &self.mw * self.mw.adjoint()
    }

    pub fn decompose(
        &self,
        f: &HardyFunction,
        opts: &DecompositionOptions,
    ) -> Result<DecompositionResult> {
        let mut out = self.decompose_many(std::slice::from_ref(f), opts)?;
        Ok(out.remove(0))
    }

    /// Runs the iteration on several elements of `M` at once; each column
    /// stops recording once its own residual drops below the tolerance.
    pub fn decompose_many(
        &self,
        fs: &[HardyFunction],
        opts: &DecompositionOptions,
    ) -> Result<Vec<DecompositionResult>> {
        let cfg = &self.cfg;
        let d = cfg.dim();
        let s = fs.len();
        for f in fs {
            let off = self.subspace().residual(f)?;
            if off > cfg.eps_residual * f.norm().max(f64::MIN_POSITIVE) {
                return Err(Error::Precondition(format!(
                    "f is not in M: distance {off:e} for norm {:e}",
                    f.norm()
                )));
            }
        }
        let cap = opts.max_iterations.unwrap_or(DEFAULT_CAP_FACTOR * d).max(1);
        let tol = opts.tolerance.unwrap_or(1e-2 * cfg.eps_residual);
        let engine = &self.engine;
        let model = &self.representation.wold.model;

        let mut l = Mat::from_fn(d, s, |i, j| fs[j].coeff(i));
        let scale: Vec<f64> = fs.iter().map(HardyFunction::norm).collect();
        let total: Vec<f64> = fs.iter().map(HardyFunction::norm_squared).collect();
        let mut captured = vec![0.0; s];
        let mut active = vec![true; s];
        let mut runs: Vec<Run> = (0..s).map(|_| Run::default()).collect();
        let mut steps = 0;
        while steps < cap && active.iter().any(|&a| a) {
            steps += 1;
            let a = &engine.qw_h * &l;
            let g = &engine.proj * &l;
            let next = &engine.tadj * &g;
            let c = &engine.pk * &g;
            let b = &engine.gens_h * &g;
            for j in 0..s {
                if !active[j] {
                    continue;
                }
                let run = &mut runs[j];
                let coords = DVector::from_fn(a.nrows(), |i, _| a[(i, j)]);
                let g_sq = column_norm_sq(&g, j);
                let l_sq = column_norm_sq(&next, j);
                let c_sq = (g_sq - l_sq).max(0.0);
                let alpha = model.solve(&DVector::from_fn(b.nrows(), |i, _| b[(i, j)]))?;
                let c_fn = HardyFunction::from_vector(DVector::from_fn(d, |i, _| c[(i, j)]));
                run.route_gap = run
                    .route_gap
                    .max(c_fn.sub(&model.truncated(&alpha))?.norm())
                    .max((c_sq.sqrt() - model.norm_squared(&alpha).sqrt()).abs());
                captured[j] += coords.norm_squared() + c_sq;
                run.identity.push((total[j] - captured[j] - l_sq).abs());
                run.residuals.push(l_sq.sqrt());
                run.a.push(coords);
                run.c.push(c_fn);
                run.c_norms.push(c_sq.sqrt());
                if l_sq.sqrt() <= tol * scale[j] {
                    active[j] = false;
                }
            }
            l = next;
        }
        fs.iter()
            .zip(runs)
            .map(|(f, run)| self.finish(f, run, opts))
            .collect()
    }

    fn finish(
        &self,
        f: &HardyFunction,
        run: Run,
        opts: &DecompositionOptions,
    ) -> Result<DecompositionResult> {
        let cfg = &self.cfg;
        let last = run.residuals.last().copied().unwrap_or(0.0);
        if opts.require_convergence && last > cfg.eps_residual * f.norm() {
            return Err(Error::NonConvergence {
                iterations: run.residuals.len(),
                last,
                trace: run.residuals,
            });
        }
        let element = KElement {
            a: run.a,
            c: run.c,
            c_norms_sq: run.c_norms.iter().map(|x| x * x).collect(),
        };
        let (big_f, f0) = self.representation.functions(&element)?;
        let rebuilt = self.representation.image(&element)?;
        Ok(DecompositionResult {
            norm_gap: (f.norm_squared() - element.norm_squared()).abs(),
            reconstruction_error: f.sub(&rebuilt)?.norm(),
            degenerate: self.p() == 0,
            a: element.a,
            g_kproj: element.c,
            g_kproj_norms: run.c_norms,
            big_f,
            f0,
            residual_norms: run.residuals,
            norm_identity_trace: run.identity,
            kernel_route_gap: run.route_gap,
        })
    }
}

/// Default iteration cap per ambient dimension.
pub const DEFAULT_CAP_FACTOR: usize = 50;

#[derive(Debug, Default)]
struct Run {
    a: Vec<DVector<C64>>,
    c: Vec<HardyFunction>,
    c_norms: Vec<f64>,
    residuals: Vec<f64>,
    identity: Vec<f64>,
    route_gap: f64,
}

fn column_norm_sq(m: &Mat<C64>, j: usize) -> f64 {
    (0..m.nrows()).map(|i| m[(i, j)].norm_sqr()).sum()
}

fn to_mat(m: &CMatrix) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Dense matrices driving one step of the iteration.
#[derive(Debug, Clone)]
struct Engine {
    qw_h: Mat<C64>,
    /// `P_{M ∩ W^⊥}`
    proj: Mat<C64>,
    /// `T_φ^*`
    tadj: Mat<C64>,
    /// `I − T_φ T_φ^*` modulo `z^{N+1}`
    pk: Mat<C64>,
    gens_h: Mat<C64>,
}

impl Engine {
    fn new(w: &CMatrix, mw: &CMatrix, wold: &WoldFrame) -> Self {
        let d = w.nrows();
        let series = wold.series.coeffs();
        let mult = CMatrix::from_fn(d, d, |i, j| {
            if i >= j {
                series[i - j]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let tadj = wold.adjoint.entries();
        let pk = CMatrix::identity(d, d) - mult * tadj;
        Self {
            qw_h: to_mat(&w.adjoint()),
            proj: to_mat(&(mw * mw.adjoint())),
            tadj: to_mat(tadj),
            pk: to_mat(&pk),
            gens_h: to_mat(&wold.model.generator_matrix().adjoint()),
        }
    }
}

/// Decomposes `f ∈ M` as `F_0 F + f_0` for `M` invariant under
/// `T_φ^* ± Σ u_i ⊗ v_i` with `φ` a finite Blaschke product vanishing at 0.
pub fn invariant_decomposition(
    m: &Subspace,
    spec: &PerturbationSpec,
    f: &HardyFunction,
    cfg: &TruncationConfig,
    opts: &DecompositionOptions,
) -> Result<DecompositionResult> {
    InvariantFrame::new(m, spec, cfg)?.decompose(f, opts)
}

/// Sample elements of the subspace `K`.
#[derive(Debug, Clone)]
pub struct ModelSubspaceK {
    pub samples: Vec<KElement>,
}

impl ModelSubspaceK {
    /// Decomposes the given elements of `M` and adds the zero element and the
    /// constants `(e_i, 0)`.
    pub fn build(
        frame: &InvariantFrame,
        vectors: &[HardyFunction],
        opts: &DecompositionOptions,
    ) -> Result<Self> {
        let mut samples = vec![KElement::zero()];
        samples.extend((0..frame.p()).map(|i| KElement::constant(frame.p(), i)));
        samples.extend(
            frame
                .decompose_many(vectors, opts)?
                .iter()
                .map(DecompositionResult::element),
        );
        Ok(Self { samples })
    }

    /// Samples from the orthonormal basis of `M` plus `extra` random unit vectors.
    pub fn sampled(
        frame: &InvariantFrame,
        extra: usize,
        seed: u64,
        opts: &DecompositionOptions,
    ) -> Result<Self> {
        let vectors = frame.subspace().sample_vectors(extra, seed);
        Self::build(frame, &vectors, opts)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn membership_checks(
    report: &mut VerificationReport,
    rep: &Representation,
    label: &str,
    k: &KElement,
    cfg: &TruncationConfig,
) -> Result<()> {
    let mem = rep.membership(k)?;
    let n2 = k.norm_squared();
    report.at_most(
        format!("{label}.in_M"),
        mem.range_residual,
        cfg.eps_residual * n2.sqrt(),
    );
    report.at_most(
        format!("{label}.isometry"),
        mem.norm_gap,
        cfg.eps_residual * n2,
    );
    Ok(())
}

/// Checks that every sample and its image under `T_φ^* ⊗ I` satisfy the
/// membership predicate of `K`.
pub fn verify_k_shift_invariance(
    samples: &ModelSubspaceK,
    rep: &Representation,
    cfg: &TruncationConfig,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("k_shift_invariance");
    for (i, k) in samples.samples.iter().enumerate() {
        membership_checks(&mut report, rep, &format!("sample{i}"), k, cfg)?;
        membership_checks(
            &mut report,
            rep,
            &format!("sample{i}.shifted"),
            &k.shifted(),
            cfg,
        )?;
    }
    Ok(report)
}

/// Converse direction: from a representation of `M` through `K`-samples,
/// concludes invariance of `M` under `T_φ^* − Σ T_φ^* f_i ⊗ f_i`.
pub fn sarason_converse_check(
    rep: &Representation,
    samples: &ModelSubspaceK,
    phi: &SymbolSpec,
    cfg: &TruncationConfig,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("sarason_converse");
    let mut worst_identity: f64 = 0.0;
    for (i, k) in samples.samples.iter().enumerate() {
        let mem = rep.membership(k)?;
        let n2 = k.norm_squared();
        if mem.range_residual > cfg.eps_residual * n2.sqrt() || mem.norm_gap > cfg.eps_residual * n2
        {
            return Err(Error::Precondition(format!(
                "sample {i} is not isometrically mapped into M (range residual {:e}, norm gap {:e})",
                mem.range_residual, mem.norm_gap
            )));
        }
        let origin = k.value_at_origin(rep.p());
        for (j, f) in rep.row().iter().enumerate() {
            let lhs = mem.image.inner_product(f)?;
            worst_identity = worst_identity.max((lhs - origin[j]).norm() / n2.sqrt().max(1.0));
        }
    }
    report.at_most(
        "pairing_with_f_i_equals_F_at_0",
        worst_identity,
        cfg.eps_residual,
    );
    let spec = sarason_backward(phi, rep.row(), SarasonFlavor::AdjointFirst, cfg)?;
    let t = assemble(&spec, cfg)?;
    report.at_most(
        "invariance_under_sarason_perturbation",
        invariance_residual(&t, &rep.m)?,
        invariance_threshold(&t, cfg),
    );
    Ok(report)
}
