//! Seeded generators for randomized scenarios.
//!
//! Every stream is a ChaCha8 generator keyed by the scenario seed, with a
//! 64-bit stream id selecting independent substreams, so draws are
//! reproducible across platforms and do not depend on call order between
//! streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blaschke::BlaschkeProduct;
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::linalg::{self, CMatrix};
use crate::operators::{OperatorMatrix, RankOneTerm};
use crate::subspace::{orthonormalize, Subspace};
use crate::C64;

pub type LabRng = ChaCha8Rng;

pub fn stream(seed: u64, id: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Standard complex Gaussian (`E|c|² = 1`).
pub fn complex_normal(rng: &mut LabRng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Gaussian polynomial supported on degrees `0..=support` inside the ambient.
pub fn polynomial(rng: &mut LabRng, degree: usize, support: usize) -> HardyFunction {
    let coeffs: Vec<C64> = (0..=support.min(degree))
        .map(|_| complex_normal(rng))
        .collect();
    HardyFunction::from_coeffs(degree, &coeffs)
}

pub fn unit_polynomial(rng: &mut LabRng, degree: usize, support: usize) -> HardyFunction {
    loop {
        if let Some(f) = polynomial(rng, degree, support).normalized() {
            return f;
        }
    }
}

pub fn matrix(rng: &mut LabRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-like random unitary of size `k` (QR of a Gaussian matrix).
pub fn unitary(rng: &mut LabRng, k: usize) -> CMatrix {
    let g = matrix(rng, k, k);
    let q = linalg::range_basis(&g, 0.0);
    if q.ncols() == k {
        q
    } else {
        CMatrix::identity(k, k)
    }
}

/// Point drawn uniformly from the disc of radius `rmax`.
pub fn disc_point(rng: &mut LabRng, rmax: f64) -> C64 {
    let r = rmax * rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>() * std::f64::consts::TAU;
    C64::from_polar(r, t)
}

/// Blaschke product with `n` zeros, the first at the origin, the others in
/// the disc of radius `rmax`. Repeated zeros occur with probability `repeat`.
pub fn blaschke_with_origin(rng: &mut LabRng, n: usize, rmax: f64, repeat: f64) -> BlaschkeProduct {
    let mut zeros = vec![C64::new(0.0, 0.0)];
    while zeros.len() < n.max(1) {
        if rng.gen::<f64>() < repeat {
            let i = rng.gen_range(0..zeros.len());
            zeros.push(zeros[i]);
        } else {
            zeros.push(disc_point(rng, rmax));
        }
    }
    BlaschkeProduct::new(zeros).expect("points drawn inside the disc")
}

/// Subspace `M` invariant under `T + Σ u_i ⊗ v_i` together with the terms.
///
/// `M` is the Krylov space of `T` generated by `seeds` random vectors, each
/// iterated at most `depth` times. The terms cancel `P_{M⊥} T|_M` and carry
/// random components that do not affect invariance; `extra` further terms
/// have functionals in `M⊥`.
pub fn perturbation_invariant_subspace(
    t: &OperatorMatrix,
    seeds: usize,
    depth: usize,
    extra: usize,
    rng: &mut LabRng,
    cfg: &TruncationConfig,
) -> (Subspace, Vec<RankOneTerm>) {
    let n = cfg.degree;
    let mut krylov = Vec::new();
    for _ in 0..seeds.max(1) {
        let mut v = unit_polynomial(rng, n, n);
        let steps = rng.gen_range(0..=depth);
        for _ in 0..=steps {
            let next = t.apply(&v).expect("degrees agree");
            krylov.push(v);
            v = next;
        }
    }
    let m = orthonormalize(&krylov, cfg);
    let q = m.basis();
    let tq = t.entries() * q;
    let d = &tq - q * (q.adjoint() * &tq);
    let svd = linalg::svd(&d, false);
    let cutoff = 1e-14 * t.norm().max(1.0);
    let mut terms = Vec::new();
    for (i, &s) in svd.s.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        let in_m = q * matrix(rng, q.ncols(), 1) * C64::new(0.3, 0.0);
        let u = -svd.u.column(i) * C64::new(s, 0.0) + in_m.column(0);
        let b_i = svd.v.column(i);
        let r = matrix(rng, cfg.dim(), 1);
        let off = &r - q * (q.adjoint() * &r);
        let v = q * b_i + off.column(0) * C64::new(0.5, 0.0);
        terms.push(
            RankOneTerm::new(HardyFunction::from_vector(u), HardyFunction::from_vector(v))
                .expect("degrees agree"),
        );
    }
    if q.ncols() < cfg.dim() {
        for _ in 0..extra {
            let r = matrix(rng, cfg.dim(), 1);
            let v = &r - q * (q.adjoint() * &r);
            let u = polynomial(rng, n, n);
            terms.push(
                RankOneTerm::new(u, HardyFunction::from_vector(v.column(0).into_owned()))
                    .expect("degrees agree"),
            );
        }
    }
    (m, terms)
}

pub fn config(degree: usize) -> TruncationConfig {
    TruncationConfig::new(degree).expect("degree at least one")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_terms_make_subspace_invariant() {
        let cfg = config(20);
        let t = crate::operators::backshift_matrix(&cfg);
        for seed in 0..10 {
            let mut rng = stream(seed, 4);
            let (m, terms) = perturbation_invariant_subspace(&t, 2, 4, 1, &mut rng, &cfg);
            let p = t.perturbed(&terms, crate::operators::Sign::Plus).unwrap();
            assert!(crate::subspace::invariance_residual(&p, &m).unwrap() < 1e-12);
            assert!(m.dim() < cfg.dim());
        }
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream(7, 1).gen()).collect();
        let mut r = stream(7, 1);
        let b: Vec<u64> = (0..4).map(|_| r.gen()).collect();
        assert_eq!(a[0], b[0]);
        let mut other = stream(7, 2);
        assert_ne!(b[0], other.gen::<u64>());
    }

    #[test]
    fn unitary_is_unitary() {
        let mut r = stream(1, 0);
        let u = unitary(&mut r, 5);
        assert!(linalg::orthonormality_defect(&u) < 1e-13);
    }

    #[test]
    fn blaschke_draw_has_origin_zero() {
        let mut r = stream(3, 0);
        for n in 1..6 {
            let b = blaschke_with_origin(&mut r, n, 0.8, 0.3);
            assert_eq!(b.n(), n);
            assert!(b.has_zero_at_origin());
            assert!(b.rho() < 0.8);
        }
    }
}
