//! Toeplitz symbols with finitely representable Fourier data.

use serde::{Deserialize, Serialize};

use crate::blaschke::BlaschkeProduct;
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolSpec {
    /// `Σ c_k z^k`.
    AnalyticPolynomial {
        coeffs: Vec<C64>,
    },
    /// `Σ c_k conj(z)^k`.
    CoAnalyticPolynomial {
        coeffs: Vec<C64>,
    },
    /// `φ̂(k)` for `-K ≤ k ≤ K`, stored from lag `-K` upward (length `2K + 1`).
    FourierWindow {
        coeffs: Vec<C64>,
    },
    Blaschke {
        zeros: BlaschkeProduct,
    },
    ConjugateBlaschke {
        zeros: BlaschkeProduct,
    },
}

/// Fourier coefficients `φ̂(k)` for `|k| ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierData {
    degree: usize,
    /// index `k + N`
    values: Vec<C64>,
    /// Truncation residual carried over from rational symbols.
    pub tail_bound: f64,
}

impl FourierData {
    pub fn at(&self, lag: i64) -> C64 {
        let idx = lag + self.degree as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            C64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
}

impl SymbolSpec {
    pub fn z() -> Self {
        Self::monomial(1)
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[k] = C64::new(1.0, 0.0);
        Self::AnalyticPolynomial { coeffs }
    }

    pub fn z_bar() -> Self {
        Self::CoAnalyticPolynomial {
            coeffs: vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        }
    }

    pub fn constant(c: C64) -> Self {
        Self::AnalyticPolynomial { coeffs: vec![c] }
    }

    pub fn fourier_data(&self, cfg: &TruncationConfig) -> FourierData {
        let n = cfg.degree;
        let mut values = vec![C64::new(0.0, 0.0); 2 * n + 1];
        let mut tail_bound = 0.0;
        let mut put = |lag: i64, v: C64| {
            let idx = lag + n as i64;
            if idx >= 0 && (idx as usize) < values.len() {
                values[idx as usize] += v;
            }
        };
        match self {
            Self::AnalyticPolynomial { coeffs } => {
                for (k, &c) in coeffs.iter().enumerate() {
                    put(k as i64, c);
                }
            }
            Self::CoAnalyticPolynomial { coeffs } => {
                for (k, &c) in coeffs.iter().enumerate() {
                    put(-(k as i64), c);
                }
            }
            Self::FourierWindow { coeffs } => {
                let half = (coeffs.len() as i64 - 1) / 2;
                for (i, &c) in coeffs.iter().enumerate() {
                    put(i as i64 - half, c);
                }
            }
            Self::Blaschke { zeros } => {
                let s = zeros.series(cfg);
                tail_bound = s.tail_bound;
                for (k, &c) in s.function.coeffs().iter().enumerate() {
                    put(k as i64, c);
                }
            }
            Self::ConjugateBlaschke { zeros } => {
                let s = zeros.series(cfg);
                tail_bound = s.tail_bound;
                for (k, &c) in s.function.coeffs().iter().enumerate() {
                    put(-(k as i64), c.conj());
                }
            }
        }
        FourierData {
            degree: n,
            values,
            tail_bound,
        }
    }

    /// The inner function this symbol represents, as a Blaschke product,
    /// when it is one: Blaschke symbols and unimodular monomials `c z^k`.
    pub fn as_inner(&self) -> Option<InnerSymbol> {
        match self {
            Self::Blaschke { zeros } => Some(InnerSymbol {
                blaschke: zeros.clone(),
                unimodular: C64::new(1.0, 0.0),
            }),
            Self::AnalyticPolynomial { coeffs } => {
                let nonzero: Vec<(usize, C64)> = coeffs
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, c)| *c != C64::new(0.0, 0.0))
                    .collect();
                match nonzero.as_slice() {
                    [(k, c)] if *k >= 1 && (c.norm() - 1.0).abs() < 1e-14 => Some(InnerSymbol {
                        blaschke: BlaschkeProduct::monomial(*k),
                        unimodular: *c,
                    }),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Analytic part as a truncated power series; `None` for symbols with
    /// negative Fourier modes.
    pub fn analytic_series(&self, cfg: &TruncationConfig) -> Option<HardyFunction> {
        let data = self.fourier_data(cfg);
        let has_negative = (1..=cfg.degree as i64).any(|k| data.at(-k) != C64::new(0.0, 0.0));
        if has_negative {
            return None;
        }
        let coeffs: Vec<C64> = (0..=cfg.degree as i64).map(|k| data.at(k)).collect();
        Some(HardyFunction::from_coeffs(cfg.degree, &coeffs))
    }

    /// True when every nonzero Fourier mode has nonpositive index.
    pub fn is_coanalytic(&self, cfg: &TruncationConfig) -> bool {
        let data = self.fourier_data(cfg);
        (1..=cfg.degree as i64).all(|k| data.at(k) == C64::new(0.0, 0.0))
    }
}

/// Inner symbol `c · B` with `|c| = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerSymbol {
    pub blaschke: BlaschkeProduct,
    pub unimodular: C64,
}

impl InnerSymbol {
    pub fn vanishes_at_origin(&self) -> bool {
        self.blaschke.has_zero_at_origin()
    }

    pub fn series(&self, cfg: &TruncationConfig) -> HardyFunction {
        self.blaschke.series(cfg).function.scale(self.unimodular)
    }

    /// True for `c z` (the plain shift up to a constant).
    pub fn is_shift(&self) -> bool {
        self.blaschke.n() == 1 && self.blaschke.has_zero_at_origin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourier_window_lags() {
        let cfg = TruncationConfig::new(6).unwrap();
        let sym = SymbolSpec::FourierWindow {
            coeffs: vec![
                C64::new(1.0, 0.0),
                C64::new(2.0, 0.0),
                C64::new(3.0, 0.0),
                C64::new(4.0, 0.0),
                C64::new(5.0, 0.0),
            ],
        };
        let d = sym.fourier_data(&cfg);
        assert_eq!(d.at(-2), C64::new(1.0, 0.0));
        assert_eq!(d.at(0), C64::new(3.0, 0.0));
        assert_eq!(d.at(2), C64::new(5.0, 0.0));
        assert_eq!(d.at(3), C64::new(0.0, 0.0));
    }

    #[test]
    fn inner_detection() {
        assert!(SymbolSpec::z().as_inner().unwrap().is_shift());
        assert_eq!(SymbolSpec::monomial(2).as_inner().unwrap().blaschke.n(), 2);
        assert!(SymbolSpec::AnalyticPolynomial {
            coeffs: vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0)]
        }
        .as_inner()
        .is_none());
        assert!(SymbolSpec::z_bar().as_inner().is_none());
    }

    #[test]
    fn serde_shape_is_tagged() {
        let sym = SymbolSpec::Blaschke {
            zeros: BlaschkeProduct::new(vec![C64::new(0.0, 0.0), C64::new(0.5, 0.0)]).unwrap(),
        };
        let json = serde_json::to_string(&sym).unwrap();
        assert_eq!(json, r#"{"kind":"blaschke","zeros":[[0.0,0.0],[0.5,0.0]]}"#);
        let back: SymbolSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, sym);
        let bad = r#"{"kind":"blaschke","zeros":[[1.5,0.0]]}"#;
        assert!(serde_json::from_str::<SymbolSpec>(bad).is_err());
    }
}
