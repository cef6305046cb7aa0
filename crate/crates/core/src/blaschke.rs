//! Finite Blaschke products and their truncated Taylor series.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hardy::{
    check_in_disc, derivative_kernel, derivative_kernel_gram, HardyFunction, TruncationConfig,
};
use crate::C64;

/// Finite Blaschke product with prescribed zeros (repetition allowed).
///
/// Factors use the normalization `b_0(z) = z` and
/// `b_a(z) = (|a| / a) (a - z) / (1 - conj(a) z)` for `a ≠ 0`, so every factor
/// has a nonnegative value at the origin. Unimodular constants do not change
/// `B H²` or the model space `K_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<C64>", into = "Vec<C64>")]
pub struct BlaschkeProduct {
    zeros: Vec<C64>,
}

impl TryFrom<Vec<C64>> for BlaschkeProduct {
    type Error = crate::Error;

    fn try_from(zeros: Vec<C64>) -> Result<Self> {
        Self::new(zeros)
    }
}

impl From<BlaschkeProduct> for Vec<C64> {
    fn from(b: BlaschkeProduct) -> Self {
        b.zeros
    }
}

/// Truncated series of a Blaschke product with an a-priori bound on the ℓ²
/// norm of the discarded tail.
#[derive(Debug, Clone, PartialEq)]
pub struct BlaschkeSeries {
    pub function: HardyFunction,
    pub tail_bound: f64,
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<C64>) -> Result<Self> {
        if zeros.is_empty() {
            return Err(crate::Error::Precondition(
                "a Blaschke product needs at least one zero".into(),
            ));
        }
        for &z in &zeros {
            check_in_disc(z)?;
        }
        Ok(Self { zeros })
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        Self {
            zeros: vec![C64::new(0.0, 0.0); n.max(1)],
        }
    }

    pub fn zeros(&self) -> &[C64] {
        &self.zeros
    }

    pub fn n(&self) -> usize {
        self.zeros.len()
    }

    pub fn has_zero_at_origin(&self) -> bool {
        self.zeros.iter().any(|z| *z == C64::new(0.0, 0.0))
    }

    /// Largest zero modulus.
    pub fn rho(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `z · B`.
    pub fn times_z(&self) -> Self {
        let mut zeros = self.zeros.clone();
        zeros.push(C64::new(0.0, 0.0));
        Self { zeros }
    }

    /// Distinct zeros with multiplicities, in order of first appearance.
    pub fn distinct_zeros(&self) -> Vec<(C64, usize)> {
        let mut out: Vec<(C64, usize)> = Vec::new();
        for &z in &self.zeros {
            match out.iter_mut().find(|(w, _)| *w == z) {
                Some((_, m)) => *m += 1,
                None => out.push((z, 1)),
            }
        }
        out
    }

    fn factor_value(a: C64, z: C64) -> C64 {
        if a == C64::new(0.0, 0.0) {
            z
        } else {
            let unimodular = a.conj() / a.norm();
            unimodular * (a - z) / (C64::new(1.0, 0.0) - a.conj() * z)
        }
    }

    /// Exact value of the rational function at a point of the disc.
    pub fn eval(&self, z: C64) -> Result<C64> {
        check_in_disc(z)?;
        Ok(self
            .zeros
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, &a| acc * Self::factor_value(a, z)))
    }

    fn factor_series(a: C64, degree: usize) -> HardyFunction {
        let mut coeffs = vec![C64::new(0.0, 0.0); degree + 1];
        if a == C64::new(0.0, 0.0) {
            if degree >= 1 {
                coeffs[1] = C64::new(1.0, 0.0);
            }
        } else {
            // (|a|/a)(a - z) Σ (ā z)^k
            let unimodular = a.conj() / a.norm();
            let ab = a.conj();
            coeffs[0] = C64::new(a.norm(), 0.0);
            let scale = unimodular * (a.norm_sqr() - 1.0);
            let mut power = C64::new(1.0, 0.0);
            for c in coeffs.iter_mut().skip(1) {
                *c = scale * power;
                power *= ab;
            }
        }
        HardyFunction::from_coeffs(degree, &coeffs)
    }

    /// Taylor coefficients up to `z^N` with a certified tail bound.
    pub fn series(&self, cfg: &TruncationConfig) -> BlaschkeSeries {
        let mut acc = HardyFunction::one(cfg.degree);
        for &a in &self.zeros {
            acc = acc
                .multiply(&Self::factor_series(a, cfg.degree))
                .expect("factors share the ambient degree");
        }
        BlaschkeSeries {
            function: acc,
            tail_bound: self.tail_bound(cfg.degree),
        }
    }

    /// Bound on `‖B - P_N B‖₂`.
    ///
    /// Each factor's coefficients are dominated by those of
    /// `1 + z / (1 - ρ z)`, so the n-fold product is dominated by
    /// `(1 + (1-ρ) z)^n (1 - ρ z)^{-n}`; the ℓ¹ tail of that majorant is summed
    /// until the terms become negligible.
    pub fn tail_bound(&self, degree: usize) -> f64 {
        let n = self.n();
        let rho = self.rho();
        let zero_count = self.zeros.iter().filter(|z| z.norm() == 0.0).count();
        if rho == 0.0 {
            return if degree >= zero_count { 0.0 } else { 1.0 };
        }
        // numerator coefficients binom(n, j) (1-ρ)^j
        let numer: Vec<f64> = (0..=n)
            .map(|j| binomial(n, j) * (1.0 - rho).powi(j as i32))
            .collect();
        // denominator coefficient d_k = binom(k+n-1, n-1) ρ^k, computed in log space
        let denom =
            |k: usize| -> f64 { (ln_binomial(k + n - 1, n - 1) + k as f64 * rho.ln()).exp() };
        let mut total = 0.0;
        let mut k = degree + 1;
        loop {
            let term: f64 = numer
                .iter()
                .enumerate()
                .filter(|(j, _)| *j <= k)
                .map(|(j, c)| c * denom(k - j))
                .sum();
            total += term;
            if (term < 1e-300 || term < total * 1e-17) && k > degree + n + 8 {
                break;
            }
            k += 1;
            if k > degree + 100_000 {
                break;
            }
        }
        total.min(1.0)
    }

    /// Spanning set of the model space `K_B = H² ⊖ B H²`: reproducing kernels
    /// at the distinct zeros plus derivative kernels for repeated zeros.
    pub fn model_space_generators(&self, cfg: &TruncationConfig) -> Vec<HardyFunction> {
        self.distinct_zeros()
            .into_iter()
            .flat_map(|(w, m)| {
                (0..m).map(move |order| {
                    derivative_kernel(w, order, cfg).expect("zeros were validated")
                })
            })
            .collect()
    }

    /// Exact Gram matrix of [`model_space_generators`](Self::model_space_generators)
    /// in H² (no truncation), row `i`, column `j` holding `⟨e_j, e_i⟩`.
    pub fn model_space_gram(&self) -> Vec<Vec<C64>> {
        let labels: Vec<(C64, usize)> = self
            .distinct_zeros()
            .into_iter()
            .flat_map(|(w, m)| (0..m).map(move |o| (w, o)))
            .collect();
        labels
            .iter()
            .map(|&(wi, oi)| {
                labels
                    .iter()
                    .map(|&(wj, oj)| derivative_kernel_gram(wj, oj, wi, oi))
                    .collect()
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    ln_binomial(n, k).exp().round()
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

pub fn blaschke_series(b: &BlaschkeProduct, cfg: &TruncationConfig) -> BlaschkeSeries {
    b.series(cfg)
}
