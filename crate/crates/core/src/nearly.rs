//! Nearly `T^*_{z,B}`-invariant subspaces: isometric multiplier
//! representation, the perturbation bridge, kernels of perturbed Toeplitz
//! operators and the comparison with plain near invariance.

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::blaschke::BlaschkeProduct;
use crate::constructive::{KElement, Representation};
use crate::error::{Error, Result};
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::linalg::{self, CMatrix};
use crate::operators::{
    assemble, backshift_matrix, sarason_backward, toeplitz_matrix, BaseOperator, OperatorMatrix,
    PerturbationSpec, RankOneTerm, SarasonFlavor, Sign,
};
use crate::report::VerificationReport;
use crate::subspace::{
    intersect, invariance_residual, invariance_threshold, nearly_invariant_check, ortho_diff,
    orthonormalize, require_origin_zero, NearlyReport, Subspace,
};
use crate::symbol::SymbolSpec;
use crate::C64;

#[derive(Debug, Clone)]
pub struct NearlyDecomposition {
    /// Orthonormal basis of `M ⊖ (M ∩ B H²)`.
    pub g0: Vec<HardyFunction>,
    /// Samples `K` with `f = G_0 K`, stored as Taylor blocks `K = Σ A_t z^t`.
    pub samples: Vec<KElement>,
    /// `‖f_T‖ / ‖f‖` at the last step for each decomposed sample.
    pub final_residuals: Vec<f64>,
    pub theta_zero_flag: bool,
    pub report: VerificationReport,
    representation: Representation,
}

impl NearlyDecomposition {
    pub fn r(&self) -> usize {
        self.g0.len()
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearlyOptions {
    /// Random unit samples added to the orthonormal basis of `M`.
    pub extra_samples: usize,
    pub seed: u64,
    /// Iteration cap per sample; `50 (N + 1)` when unset.
    pub max_iterations: Option<usize>,
    /// Stop once `‖f_t‖ ≤ tolerance · ‖f‖`.
    pub tolerance: f64,
}

impl Default for NearlyOptions {
    fn default() -> Self {
        Self {
            extra_samples: 16,
            seed: 0,
            max_iterations: None,
            tolerance: 1e-13,
        }
    }
}

/// `dim M ⊖ (M ∩ B H²)`.
pub fn defect_index(m: &Subspace, b: &BlaschkeProduct, cfg: &TruncationConfig) -> Result<usize> {
    Ok(ortho_diff(m, &Subspace::blaschke_range(b, cfg), cfg)?.dim())
}

pub fn nearly_decompose(
    m: &Subspace,
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<NearlyDecomposition> {
    nearly_decompose_with(m, b, cfg, &NearlyOptions::default())
}

/// Writes every sample `f ∈ M` as `G_0 K` by repeatedly splitting off the
/// `M ⊖ (M ∩ BH²)` part and dividing the rest by `z`.
pub fn nearly_decompose_with(
    m: &Subspace,
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
    opts: &NearlyOptions,
) -> Result<NearlyDecomposition> {
    let check = nearly_invariant_check(m, b, cfg)?;
    if !check.is_nearly {
        return Err(Error::Precondition(format!(
            "M is not nearly invariant (residual {:e})",
            check.worst_residual
        )));
    }
    if m.is_zero() {
        return Err(Error::Degenerate("M = {0}".into()));
    }
    let range = Subspace::blaschke_range(b, cfg);
    let j = intersect(m, &range, cfg)?;
    let g = ortho_diff(m, &range, cfg)?;
    if g.is_zero() {
        return Err(Error::Degenerate("M ⊆ B·H² forces M = {0}".into()));
    }
    let g0 = g.basis_functions();
    let representation = Representation::new(m.clone(), g0.clone(), &SymbolSpec::z(), cfg)?;
    let p = g0.len();
    let cap = opts
        .max_iterations
        .unwrap_or(crate::constructive::DEFAULT_CAP_FACTOR * cfg.dim());
    let tol = opts.tolerance;
    let gh = g.basis().adjoint();
    let pj = j.projector();
    let back = backshift_matrix(cfg);

    let mut samples = vec![KElement::zero()];
    samples.extend((0..p).map(|i| KElement::constant(p, i)));
    let mut final_residuals = Vec::new();
    for f in m.sample_vectors(opts.extra_samples, opts.seed) {
        let scale = f.norm();
        let mut ft = f.into_vector();
        let mut a = Vec::new();
        let mut last = scale;
        while a.len() < cap {
            a.push(&gh * &ft);
            ft = back.entries() * (&pj * &ft);
            last = ft.norm();
            if last <= tol * scale {
                break;
            }
        }
        final_residuals.push(last / scale);
        samples.push(KElement {
            a,
            c: Vec::new(),
            c_norms_sq: Vec::new(),
        });
    }

    let mut report = VerificationReport::new("nearly_decompose");
    report.at_most("r_at_most_n", p as f64, b.n() as f64);
    report.at_most(
        "samples_converged",
        final_residuals.iter().copied().fold(0.0, f64::max),
        cfg.eps_residual,
    );
    let mut theta_zero_flag = true;
    for (i, k) in samples.iter().enumerate() {
        let n2 = k.norm_squared();
        let mem = representation.membership(k)?;
        let shifted = representation.membership(&k.shifted())?;
        let sn2 = k.shifted().norm_squared();
        let ok = report.at_most(
            format!("sample{i}.isometry"),
            mem.norm_gap,
            cfg.eps_residual * n2,
        ) & report.at_most(
            format!("sample{i}.in_M"),
            mem.range_residual,
            cfg.eps_residual * n2.sqrt(),
        );
        report.at_most(
            format!("sample{i}.shifted.isometry"),
            shifted.norm_gap,
            cfg.eps_residual * sn2,
        );
        report.at_most(
            format!("sample{i}.shifted.in_M"),
            shifted.range_residual,
            cfg.eps_residual * sn2.sqrt(),
        );
        if (1..=p).contains(&i) {
            theta_zero_flag &= ok;
        }
    }
    report.holds("theta_zero", theta_zero_flag);
    Ok(NearlyDecomposition {
        g0,
        samples,
        final_residuals,
        theta_zero_flag,
        report,
        representation,
    })
}

/// `M = span{G_0 K}` over the samples and their backward shifts is nearly
/// invariant for `B`. Shifts whose norm falls below `sqrt(eps_residual) ‖K‖`
/// are left out of the span.
pub fn nearly_converse_check(
    g0: &[HardyFunction],
    samples: &[KElement],
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<VerificationReport> {
    require_origin_zero(b)?;
    let mut images = Vec::new();
    let mut report = VerificationReport::new("nearly_converse");
    let provisional = Representation::new(Subspace::full(cfg), g0.to_vec(), &SymbolSpec::z(), cfg)?;
    for (i, k) in samples.iter().enumerate() {
        let mut cur = k.clone();
        let mut depth = 0;
        let floor = cfg.eps_residual.sqrt() * k.norm_squared().sqrt();
        while !cur.a.is_empty() && cur.norm_squared().sqrt() >= floor {
            let mem = provisional.membership(&cur)?;
            let n2 = cur.norm_squared();
            if depth == 0 {
                report.at_most(
                    format!("sample{i}.isometry"),
                    mem.norm_gap,
                    cfg.eps_residual * n2,
                );
            }
            if mem.image.norm() > 0.0 {
                images.push(mem.image);
            }
            cur = cur.shifted();
            depth += 1;
        }
    }
    let m = orthonormalize(&images, cfg);
    let nearly = nearly_invariant_check(&m, b, cfg)?;
    report.at_most("nearly_invariant", nearly.worst_residual, cfg.eps_residual);
    report.trace("span_dimension", vec![m.dim() as f64]);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearlyBridgeDirection {
    /// Invariance under `T_z^* − Σ T_z^* k_{z_i} ⊗ k_{z_i}` gives near invariance.
    Forward,
    /// Near invariance gives invariance under `T_z^* − Σ T_z^* g_i ⊗ g_i`.
    Converse,
}

/// `T_z^* − Σ T_z^* k_i ⊗ k_i` with (derivative) kernels at the zeros of `B`.
pub fn kernel_perturbation(
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<PerturbationSpec> {
    let back = backshift_matrix(cfg);
    let terms = b
        .model_space_generators(cfg)
        .into_iter()
        .map(|k| RankOneTerm::new(back.apply(&k)?, k))
        .collect::<Result<Vec<_>>>()?;
    PerturbationSpec::new(BaseOperator::BackwardShift, terms, Sign::Minus)
}

pub fn kernel_perturbation_bridge(
    m: &Subspace,
    b: &BlaschkeProduct,
    direction: NearlyBridgeDirection,
    cfg: &TruncationConfig,
) -> Result<VerificationReport> {
    require_origin_zero(b)?;
    let mut report = VerificationReport::new("kernel_perturbation_bridge");
    match direction {
        NearlyBridgeDirection::Forward => {
            let spec = kernel_perturbation(b, cfg)?;
            let t = assemble(&spec, cfg)?;
            let residual = invariance_residual(&t, m)?;
            let threshold = invariance_threshold(&t, cfg);
            if residual > threshold {
                return Err(Error::NotInvariant {
                    residual,
                    threshold,
                });
            }
            let j = intersect(m, &Subspace::blaschke_range(b, cfg), cfg)?;
            let mut worst: f64 = 0.0;
            for q in j.basis_functions() {
                for term in &spec.terms {
                    worst = worst.max(q.inner_product(&term.v)?.norm() / term.v.norm());
                }
            }
            report.at_most("terms_vanish_on_intersection", worst, cfg.eps_residual);
            let nearly = nearly_invariant_check(m, b, cfg)?;
            report.at_most("nearly_invariant", nearly.worst_residual, cfg.eps_residual);
        }
        NearlyBridgeDirection::Converse => {
            let nearly = nearly_invariant_check(m, b, cfg)?;
            if !nearly.is_nearly {
                return Err(Error::Precondition(format!(
                    "M is not nearly invariant (residual {:e})",
                    nearly.worst_residual
                )));
            }
            let g0 = ortho_diff(m, &Subspace::blaschke_range(b, cfg), cfg)?.basis_functions();
            let t = assemble(
                &sarason_backward(&SymbolSpec::z(), &g0, SarasonFlavor::AdjointFirst, cfg)?,
                cfg,
            )?;
            report.at_most(
                "invariance_under_g_perturbation",
                invariance_residual(&t, m)?,
                invariance_threshold(&t, cfg),
            );
        }
    }
    Ok(report)
}

/// Orthonormal basis of `K_B` from the exact kernel Gram matrix: the
/// generators are mixed by `L^{-H}` where `G = L L^H`.
pub fn model_space_basis(
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<Vec<HardyFunction>> {
    let gens = linalg::columns(&b.model_space_generators(cfg), cfg.dim());
    let rows = b.model_space_gram();
    let k = rows.len();
    let gram = CMatrix::from_fn(k, k, |i, j| rows[i][j]);
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::Degenerate("model-space Gram is not positive definite".into()))?;
    let l = chol.l();
    let mix = l
        .adjoint()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("model-space Gram is singular".into()))?;
    Ok(linalg::column_functions(&(gens * mix)))
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisChoice {
    /// Orthonormalized (derivative) kernels at the zeros.
    KernelGram,
    /// [`BasisChoice::KernelGram`] mixed by a seeded random unitary.
    Rotated {
        seed: u64,
    },
    UserSupplied(Vec<HardyFunction>),
}

#[derive(Debug, Clone)]
pub struct ToeplitzKernel {
    pub kernel: Subspace,
    pub basis: Vec<HardyFunction>,
    pub nearly: NearlyReport,
    /// Some kernel vector carries more than `eps_residual` of its mass in the
    /// guard band (degrees above `N − g`).
    pub truncation_suspect: bool,
    pub report: VerificationReport,
}

/// `T_φ + Σ f_i ⊗ T_z^* f_i` for an orthonormal basis `f_i` of `K_B`.
pub fn perturbed_toeplitz_operator(
    phi: &SymbolSpec,
    basis: &[HardyFunction],
    cfg: &TruncationConfig,
) -> Result<OperatorMatrix> {
    let back = backshift_matrix(cfg);
    let terms = basis
        .iter()
        .map(|f| RankOneTerm::new(f.clone(), back.apply(f)?))
        .collect::<Result<Vec<_>>>()?;
    toeplitz_matrix(phi, cfg).perturbed(&terms, Sign::Plus)
}

pub fn perturbed_toeplitz_kernel(
    phi: &SymbolSpec,
    b: &BlaschkeProduct,
    choice: &BasisChoice,
    cfg: &TruncationConfig,
) -> Result<ToeplitzKernel> {
    require_origin_zero(b)?;
    let basis = match choice {
        BasisChoice::KernelGram => model_space_basis(b, cfg)?,
        BasisChoice::Rotated { seed } => {
            let base = model_space_basis(b, cfg)?;
            let mut rng = crate::random::stream(*seed, 0x7b);
            let u = crate::random::unitary(&mut rng, base.len());
            linalg::column_functions(&(linalg::columns(&base, cfg.dim()) * u))
        }
        BasisChoice::UserSupplied(fs) => {
            if fs.len() != b.n() {
                return Err(Error::Precondition(format!(
                    "expected {} basis functions, got {}",
                    b.n(),
                    fs.len()
                )));
            }
            let q = linalg::columns(fs, cfg.dim());
            let defect = linalg::orthonormality_defect(&q);
            if defect > cfg.eps_residual {
                return Err(Error::Precondition(format!(
                    "basis is not orthonormal (defect {defect:e})"
                )));
            }
            let model = Subspace::model_space(b, cfg);
            let outside = orthonormalize(fs, cfg).containment_residual(&model)?;
            if outside > cfg.eps_residual {
                return Err(Error::Precondition(format!(
                    "basis leaves the model space (residual {outside:e})"
                )));
            }
            fs.clone()
        }
    };
    let t = perturbed_toeplitz_operator(phi, &basis, cfg)?;
    let kernel = crate::subspace::kernel(&t, cfg);
    let nearly = nearly_invariant_check(&kernel, b, cfg)?;
    let edge = cfg.degree - cfg.guard;
    let truncation_suspect = kernel
        .basis_functions()
        .iter()
        .any(|k| k.norm_above(edge) > cfg.eps_residual);
    let mut report = VerificationReport::new("toeplitz_kernel");
    report.at_most("nearly_invariant", nearly.worst_residual, cfg.eps_residual);
    report.trace("kernel_dimension", vec![kernel.dim() as f64]);
    report.trace(
        "intersection_dimension",
        vec![nearly.intersection_dim as f64],
    );
    Ok(ToeplitzKernel {
        kernel,
        basis,
        nearly,
        truncation_suspect,
        report,
    })
}

/// `M = span{B', z B', z² B'}` for `B' = B_minor` is nearly invariant for
/// `z B_minor` but neither nearly invariant for `z` nor backshift invariant.
pub fn counterexample_suite(
    b_minor: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<VerificationReport> {
    require_origin_zero(b_minor)?;
    let bn = b_minor.times_z();
    let minor = b_minor.series(cfg).function;
    let major = bn.series(cfg).function;
    let m = orthonormalize(&[minor, major.clone(), major.times_z()], cfg);
    let mut report = VerificationReport::new("counterexample");
    let for_bn = nearly_invariant_check(&m, &bn, cfg)?;
    let for_z = nearly_invariant_check(&m, &BlaschkeProduct::monomial(1), cfg)?;
    let back = backshift_matrix(cfg);
    report.at_most("nearly_for_B_n", for_bn.worst_residual, cfg.eps_residual);
    report.exceeds("not_nearly_for_z", for_z.worst_residual, cfg.eps_residual);
    report.exceeds(
        "not_backshift_invariant",
        invariance_residual(&back, &m)?,
        invariance_threshold(&back, cfg),
    );
    report.holds("inclusion", !nearly_inclusion(&m, &bn, cfg)?.violation);
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inclusion {
    pub for_z: NearlyReport,
    pub for_b: NearlyReport,
    /// Nearly invariant for `z` but not for `B`.
    pub violation: bool,
}

/// Every nearly `T_z^*`-invariant subspace is nearly `T^*_{z,B}`-invariant.
pub fn nearly_inclusion(
    m: &Subspace,
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<Inclusion> {
    let for_z = nearly_invariant_check(m, &BlaschkeProduct::monomial(1), cfg)?;
    let for_b = nearly_invariant_check(m, b, cfg)?;
    Ok(Inclusion {
        violation: for_z.is_nearly && !for_b.is_nearly,
        for_z,
        for_b,
    })
}

/// Co-analytic rational symbol `conj(c + z^d / Π (1 − a_j z))`, expanded up
/// to degree `N`, which is exact on the truncated space.
pub fn coanalytic_rational(
    d: usize,
    poles: &[C64],
    constant: C64,
    cfg: &TruncationConfig,
) -> Result<SymbolSpec> {
    for &a in poles {
        crate::hardy::check_in_disc(a)?;
    }
    let n = cfg.degree;
    let mut psi = vec![C64::new(0.0, 0.0); n + 1];
    if d <= n {
        psi[d] = C64::new(1.0, 0.0);
    }
    for &a in poles {
        for k in 1..=n {
            let prev = psi[k - 1];
            psi[k] += a * prev;
        }
    }
    psi[0] += constant;
    Ok(SymbolSpec::CoAnalyticPolynomial {
        coeffs: psi.iter().map(|c| c.conj()).collect(),
    })
}

/// Subspace invariant under `T_z^* − Σ T_z^* k_i ⊗ k_i`: the span of the
/// leading `dim` Schur vectors of that operator on the truncated space.
pub fn kernel_perturbation_invariant(
    b: &BlaschkeProduct,
    dim: usize,
    cfg: &TruncationConfig,
) -> Result<Subspace> {
    let t = assemble(&kernel_perturbation(b, cfg)?, cfg)?;
    let (q, _) = nalgebra::Schur::new(t.entries().clone()).unpack();
    let k = dim.min(cfg.dim());
    Subspace::from_orthonormal(q.columns(0, k).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use nalgebra::DVector;

    fn cfg(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn model_space_of_z_squared_for_b_equal_z() {
        let cfg = cfg(10);
        let m = Subspace::polynomials(1, &cfg);
        let b = BlaschkeProduct::monomial(1);
        let d = nearly_decompose(&m, &b, &cfg).unwrap();
        assert_eq!(d.r(), 1);
        assert!((d.g0[0].coeff(0).norm() - 1.0).abs() < 1e-14);
        assert!(d.theta_zero_flag);
        assert!(
            d.report.passed(),
            "{:?}",
            d.report.failures().collect::<Vec<_>>()
        );
        for k in &d.samples[2..] {
            assert!(k.a.len() <= 2);
        }
    }

    #[test]
    fn single_function_gives_constant_k() {
        let cfg = cfg(12);
        let g = HardyFunction::from_real(12, &[1.0, 0.5, -0.25])
            .normalized()
            .unwrap();
        let m = orthonormalize(&[g], &cfg);
        let d = nearly_decompose(&m, &BlaschkeProduct::monomial(2), &cfg).unwrap();
        assert_eq!(d.r(), 1);
        assert!(d.samples.iter().all(|k| k.a.len() <= 1));
    }

    #[test]
    fn subspace_inside_range_is_degenerate() {
        let cfg = cfg(12);
        let b = BlaschkeProduct::monomial(2);
        assert!(matches!(
            nearly_decompose(&Subspace::zero(&cfg), &b, &cfg),
            Err(Error::Degenerate(_))
        ));
        let m = orthonormalize(&[HardyFunction::monomial(12, 3)], &cfg);
        assert!(matches!(
            nearly_decompose(&m, &b, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn converse_for_constants_times_model_space() {
        let cfg = cfg(16);
        let g0 = vec![HardyFunction::one(16)];
        let samples: Vec<KElement> = (0..3)
            .map(|k| {
                let mut a = vec![DVector::zeros(1); k + 1];
                a[k][0] = c(1.0, 0.0);
                KElement {
                    a,
                    c: vec![],
                    c_norms_sq: vec![],
                }
            })
            .collect();
        for zeros in [
            vec![c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.5, 0.0)],
            vec![c(0.0, 0.0); 3],
        ] {
            let b = BlaschkeProduct::new(zeros).unwrap();
            let r = nearly_converse_check(&g0, &samples, &b, &cfg).unwrap();
            assert!(r.passed());
        }
    }

    #[test]
    fn round_trip_on_kernel_perturbation_subspaces() {
        let cfg = cfg(32);
        for seed in 0..6 {
            let mut rng = random::stream(seed, 1);
            let b = random::blaschke_with_origin(&mut rng, 1 + seed as usize % 3, 0.6, 0.2);
            let m = kernel_perturbation_invariant(&b, 3 + 5 * seed as usize, &cfg).unwrap();
            let fwd =
                kernel_perturbation_bridge(&m, &b, NearlyBridgeDirection::Forward, &cfg).unwrap();
            assert!(fwd.passed(), "{:?}", fwd.failures().collect::<Vec<_>>());
            let conv =
                kernel_perturbation_bridge(&m, &b, NearlyBridgeDirection::Converse, &cfg).unwrap();
            assert!(conv.passed(), "{:?}", conv.failures().collect::<Vec<_>>());
            let d = nearly_decompose(&m, &b, &cfg).unwrap();
            assert!(d.r() <= b.n());
            assert!(
                d.report.passed(),
                "{:?}",
                d.report.failures().collect::<Vec<_>>()
            );
            let back = nearly_converse_check(&d.g0, &d.samples, &b, &cfg).unwrap();
            assert!(back.passed(), "{:?}", back.failures().collect::<Vec<_>>());
        }
    }

    #[test]
    fn converse_bridge_for_span_one_z() {
        let cfg = cfg(16);
        let m = Subspace::polynomials(1, &cfg);
        let r = kernel_perturbation_bridge(
            &m,
            &BlaschkeProduct::monomial(2),
            NearlyBridgeDirection::Converse,
            &cfg,
        )
        .unwrap();
        assert!(r.checks[0].residual <= 1e-10);
    }

    #[test]
    fn toeplitz_kernel_hand_cases() {
        let cfg = cfg(24);
        let one = perturbed_toeplitz_kernel(
            &SymbolSpec::z_bar(),
            &BlaschkeProduct::monomial(1),
            &BasisChoice::KernelGram,
            &cfg,
        )
        .unwrap();
        assert_eq!(one.kernel.dim(), 1);
        assert!((one.kernel.basis()[(0, 0)].norm() - 1.0).abs() < 1e-12);
        assert!(one.nearly.is_nearly);

        let two = perturbed_toeplitz_kernel(
            &SymbolSpec::z_bar(),
            &BlaschkeProduct::monomial(2),
            &BasisChoice::KernelGram,
            &cfg,
        )
        .unwrap();
        assert_eq!(two.kernel.dim(), 1);
        let expected = HardyFunction::from_real(24, &[1.0, 0.0, -1.0])
            .normalized()
            .unwrap();
        let got = &two.kernel.basis_functions()[0];
        let overlap = got.inner_product(&expected).unwrap().norm();
        assert!((1.0 - overlap).abs() < 1e-12);
        assert!(two.nearly.vacuous);
        assert!(!two.truncation_suspect);
    }

    #[test]
    fn rejects_b_without_origin_zero() {
        let cfg = cfg(8);
        let b = BlaschkeProduct::new(vec![c(0.5, 0.0)]).unwrap();
        assert!(matches!(
            perturbed_toeplitz_kernel(&SymbolSpec::z_bar(), &b, &BasisChoice::KernelGram, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exact_model_basis_is_orthonormal_and_spans_model_space() {
        let cfg = cfg(64);
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.3, -0.2), c(0.3, -0.2)]).unwrap();
        let fs = model_space_basis(&b, &cfg).unwrap();
        let q = linalg::columns(&fs, cfg.dim());
        assert!(linalg::orthonormality_defect(&q) < 1e-12);
        let s = orthonormalize(&fs, &cfg);
        assert!(s.distance(&Subspace::model_space(&b, &cfg)).unwrap() < 1e-12);
    }

    #[test]
    fn counterexamples() {
        let cfg = cfg(64);
        let z = BlaschkeProduct::monomial(1);
        assert!(counterexample_suite(&z, &cfg).unwrap().passed());
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let r = counterexample_suite(&b, &cfg).unwrap();
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn coanalytic_rational_coefficients() {
        let cfg = cfg(8);
        let a = c(0.5, 0.0);
        let SymbolSpec::CoAnalyticPolynomial { coeffs } =
            coanalytic_rational(2, &[a], c(0.0, 0.0), &cfg).unwrap()
        else {
            panic!("unexpected symbol");
        };
        for (k, v) in coeffs.iter().enumerate() {
            let expected = if k >= 2 {
                0.5f64.powi(k as i32 - 2)
            } else {
                0.0
            };
            assert!((v.re - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn defect_dimension_equality_for_model_space_supersets() {
        let cfg = cfg(32);
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(-0.4, 0.1), c(0.2, 0.5)]).unwrap();
        let mut vectors = b.model_space_generators(&cfg);
        vectors.push(HardyFunction::monomial(32, 7));
        let m = orthonormalize(&vectors, &cfg);
        assert_eq!(defect_index(&m, &b, &cfg).unwrap(), 3);
    }
}
