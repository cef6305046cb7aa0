//! Dual statements: the forward-shift representation through `M⊥` and the
//! passage between perturbation invariance and almost invariance.

use crate::error::{Error, Result};
use crate::hardy::{HardyFunction, TruncationConfig};
use crate::operators::PerturbationSpec;
use crate::operators::{
    assemble, sarason_forward, toeplitz_matrix, OperatorMatrix, RankOneTerm, Sign,
};
use crate::report::VerificationReport;
use crate::subspace::{
    almost_invariant_defect, invariance_residual, invariance_threshold, orthonormalize,
    DefectResult, Subspace,
};
use crate::symbol::SymbolSpec;

use super::{DecompositionOptions, InvariantFrame, KElement};

#[derive(Debug, Clone)]
pub struct ForwardDual {
    /// Orthonormal basis `φ_1, …, φ_p` of `L`.
    pub phi_basis: Vec<HardyFunction>,
    pub report: VerificationReport,
}

/// Pairing vector `(⟨T_{φ̄_i} g, F_i⟩, ⟨g, f_0⟩)` of `g` against one sample.
fn pairing(
    adjoints: &[OperatorMatrix],
    g: &HardyFunction,
    frame: &InvariantFrame,
    k: &KElement,
) -> Result<f64> {
    let (big_f, f0) = frame.representation.functions(k)?;
    let mut total = g.inner_product(&f0)?;
    for (adj, ch) in adjoints.iter().zip(big_f.channels()) {
        total += adj.apply(g)?.inner_product(ch)?;
    }
    Ok(total.norm())
}

/// Representation of `M` invariant under `T_z ± Σ u_i ⊗ v_i` through the
/// decomposition of `M⊥` for the adjoint perturbation of `T_z^*`.
pub fn forward_dual_representation(
    m: &Subspace,
    spec: &PerturbationSpec,
    probes: &[HardyFunction],
    cfg: &TruncationConfig,
    opts: &DecompositionOptions,
) -> Result<ForwardDual> {
    let t = assemble(spec, cfg)?;
    let residual = invariance_residual(&t, m)?;
    let threshold = invariance_threshold(&t, cfg);
    if residual > threshold {
        return Err(Error::NotInvariant {
            residual,
            threshold,
        });
    }
    let perp = m.complement();
    let adjoint_spec = spec.adjoint();
    let mut report = VerificationReport::new("forward_dual");
    let adjoint_op = assemble(&adjoint_spec, cfg)?;
    report.at_most(
        "complement_invariant_under_adjoint",
        invariance_residual(&adjoint_op, &perp)?,
        invariance_threshold(&adjoint_op, cfg),
    );
    let frame = InvariantFrame::new(&perp, &adjoint_spec, cfg)?;
    let phi_basis = frame.row().to_vec();
    let adjoints: Vec<OperatorMatrix> = phi_basis
        .iter()
        .map(|f| {
            let sym = SymbolSpec::AnalyticPolynomial {
                coeffs: f.coeffs().to_vec(),
            };
            toeplitz_matrix(&sym, cfg).adjoint()
        })
        .collect();
    let samples: Vec<KElement> = perp
        .basis_functions()
        .iter()
        .map(|g| frame.decompose(g, opts).map(|r| r.element()))
        .collect::<Result<_>>()?;

    let mut member_pairing: f64 = 0.0;
    let mut isometry_gap: f64 = 0.0;
    for g in m.sample_vectors(2, 0x6475_616c).iter().chain(probes) {
        let mut sq = 0.0;
        for k in &samples {
            let v = pairing(&adjoints, g, &frame, k)?;
            sq += v * v;
        }
        let off = perp.project(g)?.norm();
        let scale = g.norm().max(f64::MIN_POSITIVE);
        isometry_gap = isometry_gap.max((sq.sqrt() - off).abs() / scale);
        if m.residual(g)? <= cfg.eps_residual * scale {
            member_pairing = member_pairing.max(sq.sqrt() / scale);
        }
    }
    report.at_most("members_pair_to_zero", member_pairing, cfg.eps_residual);
    report.at_most(
        "pairing_detects_distance_to_M",
        isometry_gap,
        cfg.eps_residual,
    );
    let forward = assemble(&sarason_forward(&phi_basis, cfg)?, cfg)?;
    report.at_most(
        "invariance_under_forward_sarason",
        invariance_residual(&forward, m)?,
        invariance_threshold(&forward, cfg),
    );
    Ok(ForwardDual { phi_basis, report })
}

#[derive(Debug, Clone, PartialEq)]
pub enum BridgeDirection {
    /// `M` invariant under `T ± Σ u_i ⊗ v_i` implies `M` almost invariant
    /// for `T` with defect at most `m`.
    PerturbationToAlmost { terms: Vec<RankOneTerm>, sign: Sign },
    /// `M` almost invariant for `T` is invariant under `T − Σ f_i ⊗ T^* f_i`
    /// for an orthonormal basis of the defect space.
    AlmostToPerturbation,
}

#[derive(Debug, Clone)]
pub struct BridgeOutcome {
    pub report: VerificationReport,
    pub defect: DefectResult,
    /// Terms of the perturbation built in the converse direction.
    pub terms: Vec<RankOneTerm>,
}

pub fn almost_bridge(
    t: &OperatorMatrix,
    m: &Subspace,
    direction: &BridgeDirection,
    cfg: &TruncationConfig,
) -> Result<BridgeOutcome> {
    let defect = almost_invariant_defect(t, m, cfg)?;
    let threshold = invariance_threshold(t, cfg);
    let mut report = VerificationReport::new("almost_bridge");
    match direction {
        BridgeDirection::PerturbationToAlmost { terms, sign } => {
            let p = t.perturbed(terms, *sign)?;
            let residual = invariance_residual(&p, m)?;
            let pthr = invariance_threshold(&p, cfg);
            if residual > pthr {
                return Err(Error::NotInvariant {
                    residual,
                    threshold: pthr,
                });
            }
            report.at_most(
                "defect_at_most_rank",
                defect.defect as f64,
                terms.len() as f64,
            );
            let outputs: Vec<HardyFunction> = terms.iter().map(|t| t.u.clone()).collect();
            let projected: Vec<HardyFunction> = outputs
                .iter()
                .map(|u| m.complement().project(u))
                .collect::<Result<_>>()?;
            let space = orthonormalize(&projected, cfg);
            report.at_most(
                "defect_space_in_projected_outputs",
                defect.space(cfg).containment_residual(&space)?,
                cfg.eps_residual,
            );
            let mut spanning = m.basis_functions();
            spanning.extend(outputs);
            let sum = orthonormalize(&spanning, cfg);
            let tq = t.entries() * m.basis();
            let off = &tq - sum.projector() * &tq;
            report.at_most(
                "image_in_M_plus_outputs",
                crate::linalg::spectral_norm(&off),
                threshold,
            );
            Ok(BridgeOutcome {
                report,
                defect,
                terms: terms.clone(),
            })
        }
        BridgeDirection::AlmostToPerturbation => {
            let adj = t.adjoint();
            let terms = defect
                .defect_basis
                .iter()
                .map(|f| RankOneTerm::new(f.clone(), adj.apply(f)?))
                .collect::<Result<Vec<_>>>()?;
            let p = t.perturbed(&terms, Sign::Minus)?;
            report.at_most(
                "invariance_after_removing_defect",
                invariance_residual(&p, m)?,
                invariance_threshold(&p, cfg),
            );
            let again = almost_bridge(
                t,
                m,
                &BridgeDirection::PerturbationToAlmost {
                    terms: terms.clone(),
                    sign: Sign::Minus,
                },
                cfg,
            )?;
            report.at_most(
                "round_trip_defect",
                again.defect.defect as f64,
                defect.defect as f64,
            );
            Ok(BridgeOutcome {
                report,
                defect,
                terms,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{backshift_matrix, BaseOperator};
    use crate::random;

    fn cfg(n: usize) -> TruncationConfig {
        TruncationConfig::new(n).unwrap()
    }

    #[test]
    fn span_z_has_defect_one_along_constants() {
        let cfg = cfg(12);
        let m = orthonormalize(&[HardyFunction::monomial(12, 1)], &cfg);
        let t = backshift_matrix(&cfg);
        let out = almost_bridge(&t, &m, &BridgeDirection::AlmostToPerturbation, &cfg).unwrap();
        assert_eq!(out.defect.defect, 1);
        assert!((out.defect.defect_basis[0].coeff(0).norm() - 1.0).abs() < 1e-12);
        assert!(out.report.passed());
    }

    #[test]
    fn random_bridges_in_both_directions() {
        let cfg = cfg(24);
        let t = backshift_matrix(&cfg);
        for seed in 0..8 {
            let mut rng = random::stream(seed, 3);
            let (m, terms) = random::perturbation_invariant_subspace(&t, 2, 4, 1, &mut rng, &cfg);
            let fwd = almost_bridge(
                &t,
                &m,
                &BridgeDirection::PerturbationToAlmost {
                    terms,
                    sign: Sign::Plus,
                },
                &cfg,
            )
            .unwrap();
            assert!(
                fwd.report.passed(),
                "{:?}",
                fwd.report.failures().collect::<Vec<_>>()
            );
            let back = almost_bridge(&t, &m, &BridgeDirection::AlmostToPerturbation, &cfg).unwrap();
            assert!(
                back.report.passed(),
                "{:?}",
                back.report.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn forward_direction_requires_invariance() {
        let cfg = cfg(8);
        let t = backshift_matrix(&cfg);
        let m = orthonormalize(&[HardyFunction::monomial(8, 3)], &cfg);
        let dir = BridgeDirection::PerturbationToAlmost {
            terms: vec![],
            sign: Sign::Plus,
        };
        assert!(matches!(
            almost_bridge(&t, &m, &dir, &cfg),
            Err(Error::NotInvariant { .. })
        ));
    }

    #[test]
    fn forward_dual_on_shift_invariant_subspace() {
        let cfg = cfg(16);
        // z²H² truncated is invariant under the forward shift.
        let m = Subspace::polynomials(1, &cfg).complement();
        let spec = PerturbationSpec::new(BaseOperator::ForwardShift, vec![], Sign::Plus).unwrap();
        let out = forward_dual_representation(
            &m,
            &spec,
            &[HardyFunction::one(16)],
            &cfg,
            &DecompositionOptions::default(),
        )
        .unwrap();
        assert!(
            out.report.passed(),
            "{:?}",
            out.report.failures().collect::<Vec<_>>()
        );
    }
}
