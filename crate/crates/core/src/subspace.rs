//! Subspaces of the truncated Hardy space and the three invariance notions.

use serde::{Deserialize, Serialize};

use crate::blaschke::BlaschkeProduct;
use crate::error::{Error, Result};
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::linalg::{self, CMatrix};
use crate::operators::{backshift_matrix, OperatorMatrix};
use crate::random;

/// Orthonormal basis `Q` ((N+1) × d) of a subspace of the polynomials of
/// degree at most `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: CMatrix,
}

impl Subspace {
    pub fn zero(cfg: &TruncationConfig) -> Self {
        Self {
            basis: CMatrix::zeros(cfg.dim(), 0),
        }
    }

    pub fn full(cfg: &TruncationConfig) -> Self {
        Self {
            basis: CMatrix::identity(cfg.dim(), cfg.dim()),
        }
    }

    /// Wraps a matrix with orthonormal columns.
    pub fn from_orthonormal(basis: CMatrix) -> Result<Self> {
        let deviation = linalg::orthonormality_defect(&basis);
        if basis.ncols() > 0 && deviation > 1e-10 {
            let g = basis.adjoint() * &basis;
            let gram = (0..g.nrows())
                .map(|i| {
                    (0..g.ncols())
                        .map(|j| (g[(i, j)].re, g[(i, j)].im))
                        .collect()
                })
                .collect();
            return Err(Error::NotOrthonormal { deviation, gram });
        }
        Ok(Self { basis })
    }

    /// Effective span of arbitrary columns.
    pub fn span_of_matrix(m: &CMatrix, cfg: &TruncationConfig) -> Self {
        Self {
            basis: linalg::orthonormal_span(m, cfg.eps_rank),
        }
    }

    /// `span{1, z, …, z^d}`.
    pub fn polynomials(d: usize, cfg: &TruncationConfig) -> Self {
        let k = (d + 1).min(cfg.dim());
        Self {
            basis: CMatrix::identity(cfg.dim(), k),
        }
    }

    /// Truncated model space: the span of the (derivative) reproducing kernels
    /// at the zeros of `B`.
    pub fn model_space(b: &BlaschkeProduct, cfg: &TruncationConfig) -> Self {
        orthonormalize(&b.model_space_generators(cfg), cfg)
    }

    /// Truncated `B·H²`: polynomials of degree at most `N` vanishing at every
    /// zero of `B` to the prescribed multiplicity. This is the orthogonal
    /// complement of [`model_space`](Self::model_space) and has codimension `n`.
    pub fn blaschke_range(b: &BlaschkeProduct, cfg: &TruncationConfig) -> Self {
        Self::model_space(b, cfg).complement()
    }

    /// `span{B z^j : 0 ≤ j ≤ N − n − g}` from the truncated series of `B`.
    pub fn blaschke_multiples(b: &BlaschkeProduct, cfg: &TruncationConfig) -> Self {
        let series = b.series(cfg).function;
        let top = cfg.degree as i64 - b.n() as i64 - cfg.guard as i64;
        let mut gens = Vec::new();
        let mut f = series;
        for _ in 0..=top.max(-1) {
            gens.push(f.clone());
            f = f.times_z();
        }
        if top < 0 {
            gens.clear();
        }
        orthonormalize(&gens, cfg)
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn degree(&self) -> usize {
        self.basis.nrows() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_functions(&self) -> Vec<HardyFunction> {
        linalg::column_functions(&self.basis)
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
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

    pub fn project(&self, f: &HardyFunction) -> Result<HardyFunction> {
        self.check_degree(f.degree())?;
        let coords = self.basis.adjoint() * f.as_vector();
        Ok(HardyFunction::from_vector(&self.basis * coords))
    }

    /// `‖f − P f‖`.
    pub fn residual(&self, f: &HardyFunction) -> Result<f64> {
        Ok(f.sub(&self.project(f)?)?.norm())
    }

    /// Orthogonal complement inside the ambient space.
    pub fn complement(&self) -> Self {
        Self {
            basis: linalg::complement(&self.basis),
        }
    }

    /// Distance between orthogonal projectors (operator norm).
    pub fn distance(&self, other: &Self) -> Result<f64> {
        other.check_degree(self.degree())?;
        Ok(linalg::spectral_norm(
            &(self.projector() - other.projector()),
        ))
    }

    /// Largest distance from a column of `self` to `other`.
    pub fn containment_residual(&self, other: &Self) -> Result<f64> {
        other.check_degree(self.degree())?;
        if self.is_zero() {
            return Ok(0.0);
        }
        let r = &self.basis - other.projector() * &self.basis;
        Ok(linalg::spectral_norm(&r))
    }

    /// The orthonormal basis followed by `extra` random unit combinations.
    pub fn sample_vectors(&self, extra: usize, seed: u64) -> Vec<HardyFunction> {
        let mut out = self.basis_functions();
        out.extend(self.random_members(extra, seed));
        out
    }

    /// `count` random unit vectors of the subspace (none when it is `{0}`).
    pub fn random_members(&self, count: usize, seed: u64) -> Vec<HardyFunction> {
        let mut out = Vec::new();
        if self.is_zero() {
            return out;
        }
        let mut rng = random::stream(seed, 0x5a_4d_50);
        for _ in 0..count {
            let c = random::matrix(&mut rng, self.dim(), 1);
            let v = &self.basis * c;
            let f = HardyFunction::from_vector(v.column(0).into_owned());
            if let Some(u) = f.normalized() {
                out.push(u);
            }
        }
        out
    }

    /// Basis of `self` rotated by a `d × d` unitary.
    pub fn rotated(&self, u: &CMatrix) -> Result<Self> {
        if u.nrows() != self.dim() || u.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: u.nrows(),
            });
        }
        Self::from_orthonormal(&self.basis * u)
    }
}

/// Orthonormal basis of the effective span; directions below
/// `eps_rank · σ_max` are dropped.
pub fn orthonormalize(vectors: &[HardyFunction], cfg: &TruncationConfig) -> Subspace {
    if vectors.is_empty() {
        return Subspace::zero(cfg);
    }
    let m = linalg::columns(vectors, cfg.dim());
    Subspace::span_of_matrix(&m, cfg)
}

fn check_pair(t: &OperatorMatrix, m: &Subspace) -> Result<()> {
    if t.degree() != m.degree() {
        return Err(Error::DimensionMismatch {
            expected: t.degree(),
            found: m.degree(),
        });
    }
    Ok(())
}

/// `‖(I − P_M) T P_M‖`.
pub fn invariance_residual(t: &OperatorMatrix, m: &Subspace) -> Result<f64> {
    check_pair(t, m)?;
    if m.is_zero() {
        return Ok(0.0);
    }
    let tq = t.entries() * m.basis();
    let r = &tq - m.basis() * (m.basis().adjoint() * &tq);
    Ok(linalg::spectral_norm(&r))
}

/// Tolerance used to declare invariance: `eps_residual · max(1, ‖T‖)`.
pub fn invariance_threshold(t: &OperatorMatrix, cfg: &TruncationConfig) -> f64 {
    cfg.eps_residual * t.norm().max(1.0)
}

pub fn is_invariant(t: &OperatorMatrix, m: &Subspace, cfg: &TruncationConfig) -> Result<bool> {
    Ok(invariance_residual(t, m)? <= invariance_threshold(t, cfg))
}

/// Principal-vector split of `M` relative to `S`: returns `(M ∩ S, M ⊖ (M ∩ S))`.
fn split(m: &Subspace, s: &Subspace, cfg: &TruncationConfig) -> Result<(Subspace, Subspace)> {
    s.check_degree(m.degree())?;
    let dim = m.degree() + 1;
    if m.is_zero() || s.is_zero() {
        return Ok((
            Subspace {
                basis: CMatrix::zeros(dim, 0),
            },
            m.clone(),
        ));
    }
    let cross = m.basis().adjoint() * s.basis();
    let svd = linalg::svd(&cross, false);
    let u = svd.u;
    let keep: Vec<usize> = (0..svd.s.len())
        .filter(|&i| svd.s[i] >= 1.0 - cfg.eps_rank)
        .collect();
    let mut sel = CMatrix::zeros(m.dim(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        sel.set_column(j, &u.column(i));
    }
    let rest = linalg::complement(&sel);
    Ok((
        Subspace {
            basis: m.basis() * &sel,
        },
        Subspace {
            basis: m.basis() * rest,
        },
    ))
}

pub fn intersect(m: &Subspace, s: &Subspace, cfg: &TruncationConfig) -> Result<Subspace> {
    split(m, s, cfg).map(|(i, _)| i)
}

/// `M ⊖ (M ∩ S)`.
pub fn ortho_diff(m: &Subspace, s: &Subspace, cfg: &TruncationConfig) -> Result<Subspace> {
    split(m, s, cfg).map(|(_, d)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearlyReport {
    pub is_nearly: bool,
    /// `M ∩ B·H² = {0}`, so the condition holds for want of test vectors.
    pub vacuous: bool,
    pub worst_residual: f64,
    pub intersection_dim: usize,
}

pub(crate) fn require_origin_zero(b: &BlaschkeProduct) -> Result<()> {
    if b.has_zero_at_origin() {
        Ok(())
    } else {
        Err(Error::Precondition(
            "the Blaschke product must vanish at the origin".into(),
        ))
    }
}

/// Checks that `T_z^*` maps `M ∩ B·H²` into `M`.
pub fn nearly_invariant_check(
    m: &Subspace,
    b: &BlaschkeProduct,
    cfg: &TruncationConfig,
) -> Result<NearlyReport> {
    require_origin_zero(b)?;
    m.check_degree(cfg.degree)?;
    let range = Subspace::blaschke_range(b, cfg);
    let j = intersect(m, &range, cfg)?;
    if j.is_zero() {
        return Ok(NearlyReport {
            is_nearly: true,
            vacuous: true,
            worst_residual: 0.0,
            intersection_dim: 0,
        });
    }
    let image = backshift_matrix(cfg).entries() * j.basis();
    let r = &image - m.basis() * (m.basis().adjoint() * &image);
    let worst = (0..r.ncols())
        .map(|c| r.column(c).norm())
        .fold(0.0, f64::max);
    let worst = worst.max(linalg::spectral_norm(&r));
    Ok(NearlyReport {
        is_nearly: worst <= cfg.eps_residual,
        vacuous: false,
        worst_residual: worst,
        intersection_dim: j.dim(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefectResult {
    pub defect: usize,
    pub defect_basis: Vec<HardyFunction>,
    /// `‖(I − P_M − P_F) T P_M‖`.
    pub residual: f64,
}

impl DefectResult {
    pub fn space(&self, cfg: &TruncationConfig) -> Subspace {
        orthonormalize(&self.defect_basis, cfg)
    }
}

/// Minimal defect space `span P_{M⊥} T M` and its dimension.
pub fn almost_invariant_defect(
    t: &OperatorMatrix,
    m: &Subspace,
    cfg: &TruncationConfig,
) -> Result<DefectResult> {
    check_pair(t, m)?;
    if m.is_zero() {
        return Ok(DefectResult {
            defect: 0,
            defect_basis: Vec::new(),
            residual: 0.0,
        });
    }
    let tq = t.entries() * m.basis();
    let d = &tq - m.basis() * (m.basis().adjoint() * &tq);
    let f = linalg::range_basis(&d, invariance_threshold(t, cfg));
    let r = &d - &f * (f.adjoint() * &d);
    Ok(DefectResult {
        defect: f.ncols(),
        defect_basis: linalg::column_functions(&f),
        residual: linalg::spectral_norm(&r),
    })
}

/// Numerical null space: right singular vectors with singular value at most
/// `eps_rank · σ_max`. The zero operator has the whole space as kernel.
pub fn kernel(t: &OperatorMatrix, cfg: &TruncationConfig) -> Subspace {
    let smax = t.norm();
    if smax <= f64::MIN_POSITIVE {
        return Subspace::full(cfg);
    }
    Subspace {
        basis: linalg::null_basis(t.entries(), cfg.eps_rank * smax),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{shift_matrix, toeplitz_matrix};
    use crate::symbol::SymbolSpec;
    use crate::C64;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn cfg(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    fn mono(n: usize, k: usize) -> HardyFunction {
        HardyFunction::monomial(n, k)
    }

    #[test]
    fn orthonormalize_examples() {
        let cf = cfg(6);
        let s = orthonormalize(&[mono(6, 0), mono(6, 1)], &cf);
        assert_eq!(s.dim(), 2);
        assert!((s.projector() - Subspace::polynomials(1, &cf).projector()).norm() < 1e-14);
        assert_eq!(orthonormalize(&[mono(6, 0), mono(6, 0)], &cf).dim(), 1);
        assert_eq!(orthonormalize(&[], &cf).dim(), 0);
    }

    #[test]
    fn kernel_pair_gram_determinant() {
        let cf = cfg(64);
        let k1 = crate::hardy::kernel_function(c(0.3, 0.0), &cf).unwrap();
        let k2 = crate::hardy::kernel_function(c(0.6, 0.0), &cf).unwrap();
        let s = orthonormalize(&[k1.clone(), k2.clone()], &cf);
        assert_eq!(s.dim(), 2);
        let g11 = k1.norm_squared();
        let g22 = k2.norm_squared();
        let g12 = k1.inner_product(&k2).unwrap().norm();
        let det = g11 * g22 - g12 * g12;
        let oracle = 1.0 / (1.0 - 0.09) / (1.0 - 0.36) - (1.0 / (1.0 - 0.18f64)).powi(2);
        assert!((det - oracle).abs() < 1e-12);
    }

    #[test]
    fn invariance_examples() {
        let cf = cfg(12);
        let k = Subspace::model_space(&BlaschkeProduct::monomial(3), &cf);
        assert_eq!(k.dim(), 3);
        assert!(invariance_residual(&backshift_matrix(&cf), &k).unwrap() <= 1e-12);
        let span_z = orthonormalize(&[mono(12, 1)], &cf);
        let r = invariance_residual(&backshift_matrix(&cf), &span_z).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn blaschke_range_is_nearly_shift_invariant() {
        let cf = cfg(64);
        let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0), c(-0.2, 0.4)]).unwrap();
        let range = Subspace::blaschke_range(&b, &cf);
        assert_eq!(range.dim(), 65 - 3);
        let r = invariance_residual(&shift_matrix(&cf), &range).unwrap();
        assert!(r <= b.tail_bound(cf.degree - 3) + 1e-12, "{r}");
        let mults = Subspace::blaschke_multiples(&b, &cf);
        assert_eq!(mults.dim(), 65 - 3 - 16);
        assert!(mults.containment_residual(&range).unwrap() <= b.tail_bound(cf.degree - 3) + 1e-12);
    }

    #[test]
    fn intersection_examples() {
        let cf = cfg(8);
        let m = orthonormalize(&[mono(8, 0), mono(8, 2)], &cf);
        let s = orthonormalize(&[mono(8, 2), mono(8, 3)], &cf);
        let i = intersect(&m, &s, &cf).unwrap();
        let d = ortho_diff(&m, &s, &cf).unwrap();
        assert_eq!(i.dim(), 1);
        assert!(i.residual(&mono(8, 2)).unwrap() < 1e-14);
        assert_eq!(d.dim(), 1);
        assert!(d.residual(&mono(8, 0)).unwrap() < 1e-14);
        assert_eq!(intersect(&m, &m, &cf).unwrap().dim(), 2);
        assert_eq!(ortho_diff(&m, &m, &cf).unwrap().dim(), 0);
    }

    #[test]
    fn counterexample_geometry() {
        let cf = cfg(40);
        let minor = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let bn = minor.times_z();
        let f1 = minor.series(&cf).function;
        let f2 = bn.series(&cf).function;
        let f3 = f2.times_z();
        let m = orthonormalize(&[f1.clone(), f2, f3], &cf);
        let range = Subspace::blaschke_range(&bn, &cf);
        let d = ortho_diff(&m, &range, &cf).unwrap();
        assert_eq!(d.dim(), 1);
        let g = f1.normalized().unwrap();
        // the truncated series of B_{n-1} is orthogonal to B_n H² up to the tail
        assert!(d.residual(&g).unwrap() < 1e-9);
    }

    #[test]
    fn nearly_examples() {
        let cf = cfg(16);
        let b2 = BlaschkeProduct::monomial(2);
        let z = BlaschkeProduct::monomial(1);
        let m = orthonormalize(&[mono(16, 1), mono(16, 2), mono(16, 3)], &cf);
        assert!(nearly_invariant_check(&m, &b2, &cf).unwrap().is_nearly);
        let r = nearly_invariant_check(&m, &z, &cf).unwrap();
        assert!(!r.is_nearly);
        assert!((r.worst_residual - 1.0).abs() < 1e-12);
        let k = Subspace::model_space(&BlaschkeProduct::monomial(4), &cf);
        assert!(nearly_invariant_check(&k, &b2, &cf).unwrap().is_nearly);
        let one = orthonormalize(&[mono(16, 0)], &cf);
        let v = nearly_invariant_check(&one, &b2, &cf).unwrap();
        assert!(v.is_nearly && v.vacuous);
        let no_origin = BlaschkeProduct::new(vec![c(0.5, 0.0)]).unwrap();
        assert!(matches!(
            nearly_invariant_check(&one, &no_origin, &cf),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn defect_examples() {
        let cf = cfg(64);
        let t = backshift_matrix(&cf);
        let d = almost_invariant_defect(&t, &orthonormalize(&[mono(64, 1)], &cf), &cf).unwrap();
        assert_eq!(d.defect, 1);
        assert!((d.defect_basis[0].coeff(0).norm() - 1.0).abs() < 1e-14);
        let kw = crate::hardy::kernel_function(c(0.3, -0.2), &cf).unwrap();
        let d = almost_invariant_defect(&t, &orthonormalize(&[kw], &cf), &cf).unwrap();
        assert_eq!(d.defect, 0);
        let k = Subspace::model_space(&BlaschkeProduct::monomial(3), &cf);
        assert_eq!(almost_invariant_defect(&t, &k, &cf).unwrap().defect, 0);
    }

    #[test]
    fn kernel_examples() {
        let cf = cfg(10);
        let k = kernel(&backshift_matrix(&cf), &cf);
        assert_eq!(k.dim(), 1);
        assert!(k.residual(&mono(10, 0)).unwrap() < 1e-14);
        let zbar2 = SymbolSpec::CoAnalyticPolynomial {
            coeffs: vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        };
        let k = kernel(&toeplitz_matrix(&zbar2, &cf), &cf);
        assert!(k.residual(&mono(10, 0)).unwrap() < 1e-14);
        assert!(k.residual(&mono(10, 1)).unwrap() < 1e-14);
        assert_eq!(kernel(&OperatorMatrix::identity(&cf), &cf).dim(), 0);
    }

    #[test]
    fn sample_vectors_are_unit_and_inside() {
        let cf = cfg(10);
        let k = Subspace::model_space(&BlaschkeProduct::monomial(3), &cf);
        let s = k.sample_vectors(16, 9);
        assert_eq!(s.len(), 19);
        for f in &s {
            assert!((f.norm() - 1.0).abs() < 1e-13);
            assert!(k.residual(f).unwrap() < 1e-13);
        }
        assert_eq!(s, k.sample_vectors(16, 9));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pythagoras_and_duality(seed in 0u64..10_000, dm in 1usize..8, ds in 1usize..8, shared in 0usize..4) {
            let cf = cfg(12);
            let mut rng = random::stream(seed, 0);
            let common: Vec<HardyFunction> = (0..shared).map(|_| random::polynomial(&mut rng, 12, 12)).collect();
            let mut mv = common.clone();
            mv.extend((0..dm).map(|_| random::polynomial(&mut rng, 12, 12)));
            let mut sv = common;
            sv.extend((0..ds).map(|_| random::polynomial(&mut rng, 12, 12)));
            let m = orthonormalize(&mv, &cf);
            let s = orthonormalize(&sv, &cf);
            let i = intersect(&m, &s, &cf).unwrap();
            let d = ortho_diff(&m, &s, &cf).unwrap();
            prop_assert_eq!(m.dim(), i.dim() + d.dim());
            prop_assert!(i.dim() >= shared.min(m.dim()));

            let t = OperatorMatrix::new(random::matrix(&mut rng, 13, 13), "G").unwrap();
            let a = invariance_residual(&t, &m).unwrap();
            let b = invariance_residual(&t.adjoint(), &m.complement()).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
        }

        #[test]
        fn defect_dimension_bound(seed in 0u64..10_000, n in 1usize..7, dm in 1usize..20) {
            let cf = cfg(24);
            let mut rng = random::stream(seed, 1);
            let b = random::blaschke_with_origin(&mut rng, n, 0.85, 0.25);
            let gens: Vec<HardyFunction> = (0..dm).map(|_| random::polynomial(&mut rng, 24, 24)).collect();
            let m = orthonormalize(&gens, &cf);
            let d = ortho_diff(&m, &Subspace::blaschke_range(&b, &cf), &cf).unwrap();
            prop_assert!(d.dim() <= n);
        }

        #[test]
        fn defect_space_completes_image(seed in 0u64..10_000, dm in 1usize..6) {
            let cf = cfg(10);
            let mut rng = random::stream(seed, 2);
            let gens: Vec<HardyFunction> = (0..dm).map(|_| random::polynomial(&mut rng, 10, 10)).collect();
            let m = orthonormalize(&gens, &cf);
            let t = OperatorMatrix::new(random::matrix(&mut rng, 11, 11), "G").unwrap();
            let d = almost_invariant_defect(&t, &m, &cf).unwrap();
            prop_assert!(d.defect <= m.dim());
            prop_assert!(d.residual <= 1e-10 * t.norm());
        }
    }
}
