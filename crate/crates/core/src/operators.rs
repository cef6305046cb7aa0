//! Shift, Toeplitz and finite-rank perturbation matrices on the truncated
//! Hardy space.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::linalg::{self, CMatrix};
use crate::symbol::SymbolSpec;
use crate::C64;

/// Dense operator on polynomials of degree at most `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    pub label: String,
}

impl OperatorMatrix {
    pub fn new(entries: CMatrix, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Precondition(format!(
                "operator matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self {
            entries,
            label: label.into(),
        })
    }

    pub fn identity(cfg: &TruncationConfig) -> Self {
        Self {
            entries: CMatrix::identity(cfg.dim(), cfg.dim()),
            label: "I".into(),
        }
    }

    pub fn degree(&self) -> usize {
        self.entries.nrows() - 1
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            label: format!("({})*", self.label),
        }
    }

    fn check_degree(&self, degree: usize) -> Result<()> {
        if self.degree() == degree {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.degree(),
                found: degree,
            })
        }
    }

    pub fn apply(&self, f: &HardyFunction) -> Result<HardyFunction> {
        self.check_degree(f.degree())?;
        Ok(HardyFunction::from_vector(&self.entries * f.as_vector()))
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_degree(other.degree())?;
        Ok(Self {
            entries: &self.entries * &other.entries,
            label: format!("{}·{}", self.label, other.label),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_degree(other.degree())?;
        Ok(Self {
            entries: &self.entries - &other.entries,
            label: format!("{} - {}", self.label, other.label),
        })
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        linalg::spectral_norm(&self.entries)
    }

    /// `self + sign · Σ u_i ⊗ v_i`.
    pub fn perturbed(&self, terms: &[RankOneTerm], sign: Sign) -> Result<Self> {
        let mut entries = self.entries.clone();
        for t in terms {
            t.check()?;
            self.check_degree(t.u.degree())?;
            entries += t.matrix() * C64::new(sign.factor(), 0.0);
        }
        Ok(Self {
            entries,
            label: format!("{} {} Σ{} rank-one", self.label, sign.symbol(), terms.len()),
        })
    }

    /// Max entrywise distance on the leading `size × size` block.
    pub fn block_distance(&self, other: &Self, size: usize) -> Result<f64> {
        self.check_degree(other.degree())?;
        let size = size.min(self.entries.nrows());
        let a = self.entries.view((0, 0), (size, size));
        let b = other.entries.view((0, 0), (size, size));
        Ok((a - b).iter().map(|c| c.norm()).fold(0.0, f64::max))
    }

    pub fn max_entry_distance(&self, other: &Self) -> Result<f64> {
        self.block_distance(other, self.entries.nrows())
    }

    /// Numerical rank at relative threshold `eps_rank`.
    pub fn effective_rank(&self, eps_rank: f64) -> usize {
        let s = linalg::singular_values(&self.entries);
        let top = s.first().copied().unwrap_or(0.0);
        if top <= f64::MIN_POSITIVE {
            return 0;
        }
        s.iter().filter(|&&x| x > eps_rank * top).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// `(u ⊗ v) f = ⟨f, v⟩ u`: `u` is the output direction, `v` the functional.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneTerm {
    pub u: HardyFunction,
    pub v: HardyFunction,
}

impl RankOneTerm {
    pub fn new(u: HardyFunction, v: HardyFunction) -> Result<Self> {
        let t = Self { u, v };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        if self.u.degree() != self.v.degree() {
            return Err(Error::DimensionMismatch {
                expected: self.u.degree(),
                found: self.v.degree(),
            });
        }
        Ok(())
    }

    pub fn matrix(&self) -> CMatrix {
        linalg::outer(self.u.as_vector(), self.v.as_vector())
    }

    pub fn apply(&self, f: &HardyFunction) -> Result<HardyFunction> {
        Ok(self.u.scale(f.inner_product(&self.v)?))
    }

    /// `(u ⊗ v)* = v ⊗ u`.
    pub fn adjoint(&self) -> Self {
        Self {
            u: self.v.clone(),
            v: self.u.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseOperator {
    BackwardShift,
    ForwardShift,
    ToeplitzAdjoint { symbol: SymbolSpec },
    Toeplitz { symbol: SymbolSpec },
}

impl BaseOperator {
    pub fn matrix(&self, cfg: &TruncationConfig) -> OperatorMatrix {
        match self {
            Self::BackwardShift => backshift_matrix(cfg),
            Self::ForwardShift => shift_matrix(cfg),
            Self::ToeplitzAdjoint { symbol } => toeplitz_matrix(symbol, cfg).adjoint(),
            Self::Toeplitz { symbol } => toeplitz_matrix(symbol, cfg),
        }
    }

    /// Symbol `φ` when the base is `T_φ^*` (the backward shift counts as `φ = z`).
    pub fn adjoint_symbol(&self) -> Option<SymbolSpec> {
        match self {
            Self::BackwardShift => Some(SymbolSpec::z()),
            Self::ToeplitzAdjoint { symbol } => Some(symbol.clone()),
            _ => None,
        }
    }

    /// Base of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        match self {
            Self::BackwardShift => Self::ForwardShift,
            Self::ForwardShift => Self::BackwardShift,
            Self::ToeplitzAdjoint { symbol } => Self::Toeplitz {
                symbol: symbol.clone(),
            },
            Self::Toeplitz { symbol } => Self::ToeplitzAdjoint {
                symbol: symbol.clone(),
            },
        }
    }
}

/// `base + sign · Σ u_i ⊗ v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub base: BaseOperator,
    pub terms: Vec<RankOneTerm>,
    pub sign: Sign,
}

impl PerturbationSpec {
    pub fn new(base: BaseOperator, terms: Vec<RankOneTerm>, sign: Sign) -> Result<Self> {
        if let Some(first) = terms.first() {
            for t in &terms {
                t.check()?;
                if t.u.degree() != first.u.degree() {
                    return Err(Error::DimensionMismatch {
                        expected: first.u.degree(),
                        found: t.u.degree(),
                    });
                }
            }
        }
        Ok(Self { base, terms, sign })
    }

    /// Nominal rank `m`.
    pub fn nominal_rank(&self) -> usize {
        self.terms.len()
    }

    pub fn output_directions(&self) -> Vec<HardyFunction> {
        self.terms.iter().map(|t| t.u.clone()).collect()
    }

    pub fn functional_directions(&self) -> Vec<HardyFunction> {
        self.terms.iter().map(|t| t.v.clone()).collect()
    }

    /// Spec of the adjoint operator.
    pub fn adjoint(&self) -> Self {
        Self {
            base: self.base.adjoint(),
            terms: self.terms.iter().map(RankOneTerm::adjoint).collect(),
            sign: self.sign,
        }
    }

    /// Matrix of `Σ u_i ⊗ v_i` with the sign applied.
    pub fn correction(&self, cfg: &TruncationConfig) -> Result<OperatorMatrix> {
        let zero = OperatorMatrix {
            entries: CMatrix::zeros(cfg.dim(), cfg.dim()),
            label: "0".into(),
        };
        zero.perturbed(&self.terms, self.sign)
    }
}

/// `T_z`: ones on the first subdiagonal, `z^N ↦ 0`.
pub fn shift_matrix(cfg: &TruncationConfig) -> OperatorMatrix {
    let d = cfg.dim();
    let mut m = CMatrix::zeros(d, d);
    for k in 0..d - 1 {
        m[(k + 1, k)] = C64::new(1.0, 0.0);
    }
    OperatorMatrix {
        entries: m,
        label: "T_z".into(),
    }
}

/// `T_z^*`, the adjoint of [`shift_matrix`].
pub fn backshift_matrix(cfg: &TruncationConfig) -> OperatorMatrix {
    let mut s = shift_matrix(cfg).adjoint();
    s.label = "T_z*".into();
    s
}

/// Orthogonal projection onto the constants.
pub fn constants_projection(cfg: &TruncationConfig) -> OperatorMatrix {
    let d = cfg.dim();
    let mut m = CMatrix::zeros(d, d);
    m[(0, 0)] = C64::new(1.0, 0.0);
    OperatorMatrix {
        entries: m,
        label: "P_C".into(),
    }
}

/// Compression of multiplication by `φ`: entry `(j, k) = φ̂(j - k)`.
pub fn toeplitz_matrix(sym: &SymbolSpec, cfg: &TruncationConfig) -> OperatorMatrix {
    let data = sym.fourier_data(cfg);
    let d = cfg.dim();
    let m = CMatrix::from_fn(d, d, |j, k| data.at(j as i64 - k as i64));
    OperatorMatrix {
        entries: m,
        label: "T_φ".into(),
    }
}

/// Base matrix plus the signed sum of rank-one terms.
pub fn assemble(spec: &PerturbationSpec, cfg: &TruncationConfig) -> Result<OperatorMatrix> {
    let base = spec.base.matrix(cfg);
    let mut out = base.perturbed(&spec.terms, spec.sign)?;
    out.label = format!(
        "{:?} {} Σ{} terms",
        spec.base,
        spec.sign.symbol(),
        spec.terms.len()
    );
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SarasonFlavor {
    /// `T_φ^* − Σ (T_φ^* f_i) ⊗ f_i`
    AdjointFirst,
    /// `T_φ^* − Σ f_i ⊗ (T_φ^* f_i)`
    FunctionFirst,
}

fn check_orthonormal(fs: &[HardyFunction], cfg: &TruncationConfig) -> Result<()> {
    if fs.is_empty() {
        return Ok(());
    }
    let q = linalg::columns(fs, fs[0].degree() + 1);
    let deviation = linalg::orthonormality_defect(&q);
    if deviation > cfg.eps_residual {
        let g = q.adjoint() * &q;
        let gram = (0..g.nrows())
            .map(|i| {
                (0..g.ncols())
                    .map(|j| (g[(i, j)].re, g[(i, j)].im))
                    .collect()
            })
            .collect();
        return Err(Error::NotOrthonormal { deviation, gram });
    }
    Ok(())
}

/// Sarason-type perturbation of `T_φ^*` built from an orthonormal set.
pub fn sarason_backward(
    phi: &SymbolSpec,
    fs: &[HardyFunction],
    flavor: SarasonFlavor,
    cfg: &TruncationConfig,
) -> Result<PerturbationSpec> {
    check_orthonormal(fs, cfg)?;
    let adj = toeplitz_matrix(phi, cfg).adjoint();
    let terms = fs
        .iter()
        .map(|f| {
            let tf = adj.apply(f)?;
            match flavor {
                SarasonFlavor::AdjointFirst => RankOneTerm::new(tf, f.clone()),
                SarasonFlavor::FunctionFirst => RankOneTerm::new(f.clone(), tf),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PerturbationSpec::new(
        BaseOperator::ToeplitzAdjoint {
            symbol: phi.clone(),
        },
        terms,
        Sign::Minus,
    )
}

/// Sarason-type perturbation of the forward shift, `T_z − Σ φ_i ⊗ T_z^* φ_i`.
pub fn sarason_forward(fs: &[HardyFunction], cfg: &TruncationConfig) -> Result<PerturbationSpec> {
    check_orthonormal(fs, cfg)?;
    let terms = fs
        .iter()
        .map(|f| RankOneTerm::new(f.clone(), f.backward_shift()))
        .collect::<Result<Vec<_>>>()?;
    PerturbationSpec::new(BaseOperator::ForwardShift, terms, Sign::Minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `‖S^n h‖`
    Direct,
    /// `‖(S^*)^n h‖`
    Adjoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    /// `norms[n]` is the norm after `n` applications, `norms[0] = ‖h‖`.
    pub norms: Vec<f64>,
    pub pass: bool,
}

impl DecayProfile {
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.norms.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.norms.iter().position(|&x| x <= threshold)
    }
}

/// Norms of iterated powers applied to `h`, with a pass flag when the last
/// one falls below `eps_residual · ‖h‖`.
pub fn c0_decay_profile(
    s: &OperatorMatrix,
    h: &HardyFunction,
    n_max: usize,
    orientation: Orientation,
    cfg: &TruncationConfig,
) -> Result<DecayProfile> {
    if n_max == 0 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    let op = match orientation {
        Orientation::Direct => s.clone(),
        Orientation::Adjoint => s.adjoint(),
    };
    let mut x: DVector<C64> = h.as_vector().clone();
    op.check_degree(h.degree())?;
    let mut norms = vec![x.norm()];
    for _ in 0..n_max {
        x = op.entries() * x;
        norms.push(x.norm());
    }
    let pass = *norms.last().unwrap() <= cfg.eps_residual * h.norm();
    Ok(DecayProfile { norms, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blaschke::BlaschkeProduct;

    fn cfg(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    #[test]
    fn backshift_examples() {
        let c = cfg(6);
        let b = backshift_matrix(&c);
        assert_eq!(
            b.apply(&HardyFunction::one(6)).unwrap(),
            HardyFunction::zero(6)
        );
        assert_eq!(
            b.apply(&HardyFunction::monomial(6, 2)).unwrap(),
            HardyFunction::monomial(6, 1)
        );
    }

    #[test]
    fn shift_backshift_relations() {
        let c = cfg(7);
        let s = shift_matrix(&c);
        let b = backshift_matrix(&c);
        let id = OperatorMatrix::identity(&c);
        // exact except on z^N, which the truncated shift annihilates
        let bs = b.compose(&s).unwrap();
        assert_eq!(bs.block_distance(&id, 7).unwrap(), 0.0);
        assert_eq!(bs.entries()[(7, 7)], C64::new(0.0, 0.0));
        let sb = s.compose(&b).unwrap();
        let e = sb.entries() + constants_projection(&c).entries();
        assert_eq!((e - id.entries()).norm(), 0.0);
    }

    #[test]
    fn toeplitz_examples() {
        let c = cfg(5);
        let id = OperatorMatrix::identity(&c);
        assert_eq!(
            toeplitz_matrix(&SymbolSpec::constant(C64::new(1.0, 0.0)), &c)
                .max_entry_distance(&id)
                .unwrap(),
            0.0
        );
        assert_eq!(
            toeplitz_matrix(&SymbolSpec::z(), &c)
                .max_entry_distance(&shift_matrix(&c))
                .unwrap(),
            0.0
        );
        let window = SymbolSpec::FourierWindow {
            coeffs: vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)],
        };
        let t = toeplitz_matrix(&window, &c);
        // P(z̄ z^k) = z^{k-1}, column by column
        for k in 0..=5 {
            let image = t.apply(&HardyFunction::monomial(5, k)).unwrap();
            let expected = if k == 0 {
                HardyFunction::zero(5)
            } else {
                HardyFunction::monomial(5, k - 1)
            };
            assert_eq!(image, expected);
        }
        assert_eq!(t.max_entry_distance(&backshift_matrix(&c)).unwrap(), 0.0);
    }

    #[test]
    fn analytic_toeplitz_is_lower_triangular() {
        let c = cfg(10);
        let b = BlaschkeProduct::new(vec![C64::new(0.0, 0.0), C64::new(0.3, 0.2)]).unwrap();
        let t = toeplitz_matrix(&SymbolSpec::Blaschke { zeros: b }, &c);
        for j in 0..=10 {
            for k in (j + 1)..=10 {
                assert_eq!(t.entries()[(j, k)], C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn assemble_examples() {
        let c = cfg(4);
        let empty = PerturbationSpec::new(BaseOperator::BackwardShift, vec![], Sign::Plus).unwrap();
        assert_eq!(
            assemble(&empty, &c)
                .unwrap()
                .max_entry_distance(&backshift_matrix(&c))
                .unwrap(),
            0.0
        );
        let one = HardyFunction::one(4);
        let spec = PerturbationSpec::new(
            BaseOperator::BackwardShift,
            vec![RankOneTerm::new(one.clone(), one).unwrap()],
            Sign::Plus,
        )
        .unwrap();
        let m = assemble(&spec, &c).unwrap();
        let mut expected = backshift_matrix(&c).entries().clone();
        expected[(0, 0)] += C64::new(1.0, 0.0);
        assert_eq!((m.entries() - expected).norm(), 0.0);
    }

    #[test]
    fn sarason_constant_correction_vanishes_for_shift() {
        let c = cfg(6);
        let spec = sarason_backward(
            &SymbolSpec::z(),
            &[HardyFunction::one(6)],
            SarasonFlavor::AdjointFirst,
            &c,
        )
        .unwrap();
        let m = assemble(&spec, &c).unwrap();
        assert_eq!(m.max_entry_distance(&backshift_matrix(&c)).unwrap(), 0.0);
    }

    #[test]
    fn sarason_rejects_non_orthonormal_with_gram_report() {
        let c = cfg(3);
        let f = HardyFunction::from_real(3, &[1.0, 1.0]);
        let err =
            sarason_backward(&SymbolSpec::z(), &[f], SarasonFlavor::AdjointFirst, &c).unwrap_err();
        match err {
            Error::NotOrthonormal { deviation, gram } => {
                assert!((deviation - 1.0).abs() < 1e-14);
                assert_eq!(gram.len(), 1);
                assert!((gram[0][0].0 - 2.0).abs() < 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sarason_adjoint_first_is_backshift_times_complement_projection() {
        // matrix-product oracle at N = 3 with fs = {1, z}
        let c = cfg(3);
        let fs = [HardyFunction::one(3), HardyFunction::monomial(3, 1)];
        let spec =
            sarason_backward(&SymbolSpec::z(), &fs, SarasonFlavor::AdjointFirst, &c).unwrap();
        let m = assemble(&spec, &c).unwrap();
        let mut proj = CMatrix::identity(4, 4);
        proj[(0, 0)] = C64::new(0.0, 0.0);
        proj[(1, 1)] = C64::new(0.0, 0.0);
        let expected = backshift_matrix(&c).entries() * proj;
        assert!((m.entries() - expected).norm() < 1e-15);
    }

    #[test]
    fn flavors_are_adjoint_to_each_other() {
        let c = cfg(8);
        let f1 = HardyFunction::from_real(8, &[0.6, 0.0, 0.8]);
        let f2 = HardyFunction::from_real(8, &[0.0, 1.0]);
        let fs = [f1, f2];
        let back =
            sarason_backward(&SymbolSpec::z(), &fs, SarasonFlavor::AdjointFirst, &c).unwrap();
        let adj = assemble(&back, &c).unwrap().adjoint();
        let forward = assemble(&sarason_forward(&fs, &c).unwrap(), &c).unwrap();
        assert!(adj.max_entry_distance(&forward).unwrap() < 1e-15);
    }

    #[test]
    fn decay_profiles() {
        let c = cfg(10);
        let p = c0_decay_profile(
            &backshift_matrix(&c),
            &HardyFunction::monomial(10, 3),
            6,
            Orientation::Direct,
            &c,
        )
        .unwrap();
        assert_eq!(&p.norms[..5], &[1.0, 1.0, 1.0, 1.0, 0.0]);
        assert!(p.pass);
        let id = c0_decay_profile(
            &OperatorMatrix::identity(&c),
            &HardyFunction::one(10),
            5,
            Orientation::Direct,
            &c,
        )
        .unwrap();
        assert!(id.norms.iter().all(|&x| x == 1.0));
        assert!(!id.pass);
        assert!(c0_decay_profile(
            &OperatorMatrix::identity(&c),
            &HardyFunction::one(10),
            0,
            Orientation::Direct,
            &c
        )
        .is_err());
    }
}
