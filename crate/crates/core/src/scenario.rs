//! Seeded families of invariant subspaces used by the test suites and the CLI.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hardy::TruncationConfig;
use crate::operators::{BaseOperator, PerturbationSpec, RankOneTerm, Sign};
use crate::random;
use crate::subspace::Subspace;
use crate::symbol::SymbolSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceFamily {
    /// `M = H²_N` with arbitrary rank-one terms.
    Full,
    /// Krylov spaces of `T_φ^*` from random seeds, made invariant by the terms.
    Krylov,
}

#[derive(Debug, Clone)]
pub struct InvariantScenario {
    pub m: Subspace,
    pub spec: PerturbationSpec,
}

/// Random invariant pair `(M, T_φ^* + Σ u_i ⊗ v_i)` with at most `rank` terms.
pub fn invariant_scenario(
    phi: &SymbolSpec,
    family: SubspaceFamily,
    rank: usize,
    seed: u64,
    cfg: &TruncationConfig,
) -> Result<InvariantScenario> {
    if rank == 0 {
        return Err(Error::InvalidConfig("rank must be at least 1".into()));
    }
    let base = BaseOperator::ToeplitzAdjoint {
        symbol: phi.clone(),
    };
    let mut rng = random::stream(seed, 0x5c);
    let n = cfg.degree;
    let (m, terms) = match family {
        SubspaceFamily::Full => {
            let terms = (0..rank)
                .map(|_| {
                    RankOneTerm::new(
                        random::polynomial(&mut rng, n, n),
                        random::polynomial(&mut rng, n, n),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            (Subspace::full(cfg), terms)
        }
        SubspaceFamily::Krylov => {
            let seeds = rng.gen_range(1..=rank);
            let extra = rng.gen_range(0..=rank - seeds);
            let t = base.matrix(cfg);
            random::perturbation_invariant_subspace(&t, seeds, n / 4, extra, &mut rng, cfg)
        }
    };
    let spec = PerturbationSpec::new(base, terms, Sign::Plus)?;
    Ok(InvariantScenario { m, spec })
}

/// `z`, `z²` or a Blaschke product with two zeros, one at the origin.
pub fn inner_symbol_family(index: usize, seed: u64) -> SymbolSpec {
    match index % 3 {
        0 => SymbolSpec::z(),
        1 => SymbolSpec::monomial(2),
        _ => {
            let mut rng = random::stream(seed, 0xb1);
            SymbolSpec::Blaschke {
                zeros: random::blaschke_with_origin(&mut rng, 2, 0.8, 0.0),
            }
        }
    }
}
