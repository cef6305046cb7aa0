//! Truncated Hardy-space arithmetic.
//!
//! An element of H² is represented by its Taylor coefficients `a_0, ..., a_N`,
//! i.e. by its image in `C[z] / z^{N+1}`. For polynomials of degree at most `N`
//! this is exact; for general power series every ring operation (sums and
//! products) is still exact coefficient-wise, only the tail beyond `z^N` is
//! discarded. Norms computed here are norms of the retained coefficients.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Finite section of H²: polynomials of degree at most `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    pub degree: usize,
    /// Highest coefficients excluded from identity checks.
    pub guard: usize,
    pub eps_residual: f64,
    /// Relative singular-value threshold for numerical rank.
    pub eps_rank: f64,
}

impl TruncationConfig {
    pub const DEFAULT_EPS_RESIDUAL: f64 = 1e-8;
    pub const DEFAULT_EPS_RANK: f64 = 1e-10;

    pub fn new(degree: usize) -> Result<Self> {
        let cfg = Self {
            degree,
            guard: degree / 4,
            eps_residual: Self::DEFAULT_EPS_RESIDUAL,
            eps_rank: Self::DEFAULT_EPS_RANK,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_guard(mut self, guard: usize) -> Result<Self> {
        self.guard = guard;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(mut self, eps_residual: f64, eps_rank: f64) -> Result<Self> {
        self.eps_residual = eps_residual;
        self.eps_rank = eps_rank;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::InvalidConfig("degree must be at least 1".into()));
        }
        if self.guard > self.degree {
            return Err(Error::InvalidConfig(format!(
                "guard band {} exceeds degree {}",
                self.guard, self.degree
            )));
        }
        if !(self.eps_residual >= 0.0) || !self.eps_residual.is_finite() {
            return Err(Error::InvalidConfig(
                "eps_residual must be nonnegative".into(),
            ));
        }
        if !(self.eps_rank > 0.0) || !self.eps_rank.is_finite() {
            return Err(Error::InvalidConfig("eps_rank must be positive".into()));
        }
        Ok(())
    }

    /// Dimension `N + 1` of the truncated space.
    pub fn dim(&self) -> usize {
        self.degree + 1
    }
}

pub(crate) fn check_in_disc(z: C64) -> Result<()> {
    let modulus = z.norm();
    if modulus < 1.0 {
        Ok(())
    } else {
        Err(Error::OutsideDisc {
            point: format!("{z}"),
            modulus,
        })
    }
}

/// Truncated power series `Σ_{k ≤ N} a_k z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyFunction {
    coeffs: DVector<C64>,
}

impl HardyFunction {
    pub fn zero(degree: usize) -> Self {
        Self {
            coeffs: DVector::zeros(degree + 1),
        }
    }

    pub fn one(degree: usize) -> Self {
        Self::monomial(degree, 0)
    }

    /// `z^k`; the zero function when `k > degree`.
    pub fn monomial(degree: usize, k: usize) -> Self {
        let mut f = Self::zero(degree);
        if k <= degree {
            f.coeffs[k] = C64::new(1.0, 0.0);
        }
        f
    }

    /// Pads with zeros or truncates so the result lives on `degree`.
    pub fn from_coeffs(degree: usize, coeffs: &[C64]) -> Self {
        let mut f = Self::zero(degree);
        for (slot, c) in f.coeffs.iter_mut().zip(coeffs) {
            *slot = *c;
        }
        f
    }

    pub fn from_real(degree: usize, coeffs: &[f64]) -> Self {
        let cs: Vec<C64> = coeffs.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_coeffs(degree, &cs)
    }

    pub fn from_vector(coeffs: DVector<C64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a Hardy function needs at least one coefficient"
        );
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        self.coeffs.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.coeffs
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.coeffs
    }

    pub fn coeff(&self, k: usize) -> C64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.degree() == other.degree() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.degree(),
                found: other.degree(),
            })
        }
    }

    /// `⟨self, other⟩ = Σ a_k conj(b_k)`.
    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        self.check_same(other)?;
        Ok(other.coeffs.dotc(&self.coeffs))
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// Horner evaluation at a point of the open disc.
    pub fn eval(&self, z: C64) -> Result<C64> {
        check_in_disc(z)?;
        Ok(self
            .coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c))
    }

    /// Value at the origin, `a_0`.
    pub fn at_origin(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coeffs: &self.coeffs + &other.coeffs,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coeffs: &self.coeffs - &other.coeffs,
        })
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            coeffs: &self.coeffs * s,
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) -> Result<()> {
        self.check_same(other)?;
        self.coeffs.axpy(s, &other.coeffs, C64::new(1.0, 0.0));
        Ok(())
    }

    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(C64::new(1.0 / n, 0.0)))
    }

    /// Coefficient convolution modulo `z^{N+1}`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.multiply_with_loss(other).map(|(f, _)| f)
    }

    /// Product modulo `z^{N+1}` together with the ℓ² norm of the discarded
    /// coefficients of degree `N+1 ..= 2N`. The loss is zero exactly when
    /// the polynomial product fits in the truncation.
    pub fn multiply_with_loss(&self, other: &Self) -> Result<(Self, f64)> {
        self.check_same(other)?;
        let n = self.degree();
        let a = self.coeffs.as_slice();
        let b = other.coeffs.as_slice();
        let mut full = vec![C64::new(0.0, 0.0); 2 * n + 1];
        for (i, &ai) in a.iter().enumerate() {
            if ai == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, &bj) in b.iter().enumerate() {
                full[i + j] += ai * bj;
            }
        }
        let lost = full[n + 1..]
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
        full.truncate(n + 1);
        Ok((Self::from_coeffs(n, &full), lost))
    }

    /// Multiplication by `z` modulo `z^{N+1}`.
    pub fn times_z(&self) -> Self {
        let n = self.degree();
        let mut out = Self::zero(n);
        for k in 0..n {
            out.coeffs[k + 1] = self.coeffs[k];
        }
        out
    }

    /// `(f - f(0)) / z`.
    pub fn backward_shift(&self) -> Self {
        let n = self.degree();
        let mut out = Self::zero(n);
        for k in 0..n {
            out.coeffs[k] = self.coeffs[k + 1];
        }
        out
    }

    /// Re-embed on another ambient degree (zero padding or truncation).
    pub fn resized(&self, degree: usize) -> Self {
        Self::from_coeffs(degree, self.coeffs())
    }

    /// Norm of the coefficients with index strictly above `degree`.
    pub fn norm_above(&self, degree: usize) -> f64 {
        self.coeffs
            .iter()
            .skip(degree + 1)
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Element of the `C^p`-valued Hardy space, one truncated channel per component.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorHardyFunction {
    channels: Vec<HardyFunction>,
}

impl VectorHardyFunction {
    pub fn new(channels: Vec<HardyFunction>) -> Result<Self> {
        if let Some(first) = channels.first() {
            for c in &channels[1..] {
                first.check_same(c)?;
            }
        }
        Ok(Self { channels })
    }

    pub fn zero(degree: usize, p: usize) -> Self {
        Self {
            channels: vec![HardyFunction::zero(degree); p],
        }
    }

    /// Constant vector function `1 ⊗ eta`.
    pub fn constant(degree: usize, eta: &[C64]) -> Self {
        Self {
            channels: eta
                .iter()
                .map(|&c| HardyFunction::one(degree).scale(c))
                .collect(),
        }
    }

    pub fn p(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[HardyFunction] {
        &self.channels
    }

    pub fn channel(&self, i: usize) -> &HardyFunction {
        &self.channels[i]
    }

    pub fn norm_squared(&self) -> f64 {
        self.channels.iter().map(HardyFunction::norm_squared).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn inner_product(&self, other: &Self) -> Result<C64> {
        if self.p() != other.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: other.p(),
            });
        }
        self.channels
            .iter()
            .zip(&other.channels)
            .try_fold(C64::new(0.0, 0.0), |acc, (a, b)| {
                Ok(acc + a.inner_product(b)?)
            })
    }

    /// Row-times-column product `Σ_i g_i · K_i` modulo `z^{N+1}`, plus the
    /// norm of what the truncation dropped.
    pub fn pair_with_row(&self, row: &[HardyFunction]) -> Result<(HardyFunction, f64)> {
        if row.len() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: row.len(),
            });
        }
        let degree = self.channels.first().map_or(0, HardyFunction::degree);
        let mut acc = HardyFunction::zero(row.first().map_or(degree, HardyFunction::degree));
        let mut lost = 0.0;
        for (g, k) in row.iter().zip(&self.channels) {
            let (prod, loss) = g.multiply_with_loss(k)?;
            acc = acc.add(&prod)?;
            lost += loss;
        }
        Ok((acc, lost))
    }

    /// `(T_z^* ⊗ I) K`.
    pub fn backward_shift(&self) -> Self {
        Self {
            channels: self
                .channels
                .iter()
                .map(HardyFunction::backward_shift)
                .collect(),
        }
    }

    /// Stacked coefficient vector (channel-major).
    pub fn stacked(&self) -> DVector<C64> {
        let parts: Vec<C64> = self
            .channels
            .iter()
            .flat_map(|c| c.coeffs().iter().copied())
            .collect();
        DVector::from_vec(parts)
    }
}

/// Szegő kernel `k_w(z) = 1 / (1 - conj(w) z)`, truncated.
pub fn kernel_function(w: C64, cfg: &TruncationConfig) -> Result<HardyFunction> {
    derivative_kernel(w, 0, cfg)
}

/// `∂^order k_w / ∂ conj(w)^order`, the function reproducing `f^{(order)}(w)`.
pub fn derivative_kernel(w: C64, order: usize, cfg: &TruncationConfig) -> Result<HardyFunction> {
    check_in_disc(w)?;
    let wb = w.conj();
    let mut f = HardyFunction::zero(cfg.degree);
    for k in order..=cfg.degree {
        let falling: f64 = ((k - order + 1)..=k).map(|j| j as f64).product();
        f.coeffs[k] = wb.powu((k - order) as u32) * falling;
    }
    Ok(f)
}

/// Exact H² inner product `⟨∂^a k_w, ∂^b k_v⟩ = (∂^a k_w)^{(b)}(v)`.
pub fn derivative_kernel_gram(w: C64, a: usize, v: C64, b: usize) -> C64 {
    // d^b/dz^b [ a! z^a (1 - w̄ z)^{-a-1} ] at z = v, by Leibniz.
    let wb = w.conj();
    let base = C64::new(1.0, 0.0) - wb * v;
    let fact = |n: usize| -> f64 { (1..=n).map(|x| x as f64).product() };
    let mut total = C64::new(0.0, 0.0);
    for j in 0..=b.min(a) {
        let binom = fact(b) / (fact(j) * fact(b - j));
        let poly = fact(a) / fact(a - j) * v.powu((a - j) as u32);
        let m = b - j;
        let rising = fact(a + m) / fact(a);
        let tail = rising * wb.powu(m as u32) / base.powu((a + 1 + m) as u32);
        total += poly * tail * binom;
    }
    total * fact(a)
}

pub fn inner_product(f: &HardyFunction, h: &HardyFunction) -> Result<C64> {
    f.inner_product(h)
}

pub fn eval(f: &HardyFunction, z: C64) -> Result<C64> {
    f.eval(z)
}

pub fn multiply(f: &HardyFunction, h: &HardyFunction) -> Result<HardyFunction> {
    f.multiply(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constants_and_monomials_pair_as_expected() {
        let one = HardyFunction::one(8);
        let z = HardyFunction::monomial(8, 1);
        assert_eq!(one.inner_product(&one).unwrap(), c(1.0, 0.0));
        assert_eq!(z.inner_product(&one).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_product_rejects_mismatched_degrees() {
        let err = HardyFunction::one(3)
            .inner_product(&HardyFunction::one(4))
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn kernel_gram_matches_geometric_sum() {
        let cfg = TruncationConfig::new(64).unwrap();
        let (w, v) = (c(0.3, 0.2), c(-0.4, 0.1));
        let kw = kernel_function(w, &cfg).unwrap();
        let kv = kernel_function(v, &cfg).unwrap();
        let exact = c(1.0, 0.0) / (c(1.0, 0.0) - w.conj() * v);
        let tail = (v.norm() * w.norm()).powi(65) / (1.0 - v.norm() * w.norm());
        let got = kw.inner_product(&kv).unwrap();
        assert!((got - exact).norm() <= tail + 1e-15);
    }

    #[test]
    fn eval_examples() {
        let one = HardyFunction::one(5);
        assert_eq!(one.eval(c(0.3, 0.0)).unwrap(), c(1.0, 0.0));
        let z2 = HardyFunction::monomial(5, 2);
        assert_abs_diff_eq!(z2.eval(c(0.5, 0.0)).unwrap().re, 0.25, epsilon = 1e-15);
        let cfg = TruncationConfig::new(64).unwrap();
        let k = kernel_function(c(0.5, 0.0), &cfg).unwrap();
        let v = k.eval(c(0.5, 0.0)).unwrap();
        let tail = 0.25f64.powi(65) / 0.75;
        assert!((v - c(4.0 / 3.0, 0.0)).norm() <= tail + 1e-14);
    }

    #[test]
    fn eval_outside_disc_is_domain_error() {
        let f = HardyFunction::one(3);
        assert!(matches!(
            f.eval(c(1.0, 0.0)),
            Err(Error::OutsideDisc { .. })
        ));
        let cfg = TruncationConfig::new(3).unwrap();
        assert!(kernel_function(c(0.0, 1.2), &cfg).is_err());
    }

    #[test]
    fn kernel_coefficients() {
        let cfg = TruncationConfig::new(3).unwrap();
        let k0 = kernel_function(c(0.0, 0.0), &cfg).unwrap();
        assert_eq!(k0, HardyFunction::one(3));
        let k = kernel_function(c(0.5, 0.0), &cfg).unwrap();
        let expected = [1.0, 0.5, 0.25, 0.125];
        for (a, b) in k.coeffs().iter().zip(expected) {
            assert_abs_diff_eq!(a.re, b, epsilon = 1e-15);
            assert_eq!(a.im, 0.0);
        }
        let z2 = HardyFunction::monomial(3, 2);
        assert_abs_diff_eq!(z2.inner_product(&k).unwrap().re, 0.25, epsilon = 1e-15);
    }

    #[test]
    fn derivative_kernel_reproduces_derivatives() {
        let cfg = TruncationConfig::new(10).unwrap();
        // f = 1 + 2z + 3z^3, f'(w) = 2 + 9 w^2, f''(w) = 18 w
        let f = HardyFunction::from_real(10, &[1.0, 2.0, 0.0, 3.0]);
        let w = c(0.2, -0.3);
        let d1 = derivative_kernel(w, 1, &cfg).unwrap();
        let d2 = derivative_kernel(w, 2, &cfg).unwrap();
        let got1 = f.inner_product(&d1).unwrap();
        let got2 = f.inner_product(&d2).unwrap();
        assert!((got1 - (c(2.0, 0.0) + w * w * 9.0)).norm() < 1e-13);
        assert!((got2 - w * 18.0).norm() < 1e-13);
    }

    #[test]
    fn derivative_gram_closed_form_matches_long_truncation() {
        let cfg = TruncationConfig::new(400).unwrap();
        let (w, v) = (c(0.4, 0.1), c(-0.2, 0.3));
        for a in 0..3 {
            for b in 0..3 {
                let ka = derivative_kernel(w, a, &cfg).unwrap();
                let kb = derivative_kernel(v, b, &cfg).unwrap();
                let truncated = ka.inner_product(&kb).unwrap();
                let exact = derivative_kernel_gram(w, a, v, b);
                assert!((truncated - exact).norm() < 1e-12, "a={a} b={b}");
            }
        }
    }

    #[test]
    fn multiply_examples_and_loss_flag() {
        let z = HardyFunction::monomial(4, 1);
        let f = HardyFunction::from_real(4, &[1.0, -2.0, 0.5]);
        assert_eq!(HardyFunction::one(4).multiply(&f).unwrap(), f);
        assert_eq!(z.multiply(&z).unwrap(), HardyFunction::monomial(4, 2));
        let (_, loss) = HardyFunction::monomial(4, 3)
            .multiply_with_loss(&HardyFunction::monomial(4, 2))
            .unwrap();
        assert_eq!(loss, 1.0);
        let (_, loss) = HardyFunction::monomial(4, 2)
            .multiply_with_loss(&HardyFunction::monomial(4, 2))
            .unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(TruncationConfig::new(0).is_err());
        let cfg = TruncationConfig::new(64).unwrap();
        assert_eq!(cfg.guard, 16);
        assert!(cfg.with_guard(65).is_err());
        assert!(cfg.with_eps(0.0, 1e-10).is_ok());
        assert!(cfg.with_eps(-1e-8, 1e-10).is_err());
        assert!(cfg.with_eps(1e-8, 0.0).is_err());
        assert!(cfg.with_eps(1e-8, -1.0).is_err());
    }
}
