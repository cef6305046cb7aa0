use hardy_lab::constructive::{
    sarason_converse_check, verify_k_shift_invariance, DecompositionOptions, InvariantFrame,
    ModelSubspaceK,
};
use hardy_lab::nearly::{
    counterexample_suite, model_space_basis, nearly_decompose, perturbed_toeplitz_kernel,
    BasisChoice,
};
use hardy_lab::scenario::{invariant_scenario, SubspaceFamily};
use hardy_lab::{BlaschkeProduct, Subspace, SymbolSpec, TruncationConfig, C64};

fn cfg() -> TruncationConfig {
    TruncationConfig::new(24).unwrap().with_guard(6).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn invariant_subspace_round_trip() {
    let cfg = cfg();
    for (s, phi) in [SymbolSpec::z(), SymbolSpec::monomial(2)]
        .into_iter()
        .enumerate()
    {
        let sc = invariant_scenario(&phi, SubspaceFamily::Krylov, 2, s as u64, &cfg).unwrap();
        let frame = InvariantFrame::new(&sc.m, &sc.spec, &cfg).unwrap();
        assert!(frame.invariance_residual() < 1e-10);

        let opts = DecompositionOptions::default();
        let results = frame
            .decompose_many(&sc.m.random_members(4, 7), &opts)
            .unwrap();
        for r in &results {
            assert!(r.reconstruction_error < 1e-8, "{}", r.reconstruction_error);
            assert!(r.norm_gap < 1e-8);
        }

        let k = ModelSubspaceK::sampled(&frame, 4, 3, &opts).unwrap();
        assert!(verify_k_shift_invariance(&k, &frame.representation, &cfg)
            .unwrap()
            .passed());
        assert!(
            sarason_converse_check(&frame.representation, &k, &phi, &cfg)
                .unwrap()
                .passed()
        );
    }
}

#[test]
fn model_space_is_nearly_invariant_with_small_defect() {
    let cfg = cfg();
    let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.4, -0.3), c(-0.5, 0.2)]).unwrap();
    assert_eq!(model_space_basis(&b, &cfg).unwrap().len(), 3);
    let m = Subspace::model_space(&b, &cfg);
    let d = nearly_decompose(&m, &b, &cfg).unwrap();
    assert!(d.r() <= b.n());
    assert!(
        d.report.passed(),
        "{:?}",
        d.report.failures().collect::<Vec<_>>()
    );
}

#[test]
fn counterexample_holds_for_several_products() {
    // the series of a zero at 0.5 needs about 48 coefficients to drop below 1e-14
    let cfg = TruncationConfig::new(48).unwrap().with_guard(8).unwrap();
    for zeros in [
        vec![c(0.0, 0.0)],
        vec![c(0.0, 0.0), c(0.5, 0.0)],
        vec![c(0.0, 0.0), c(0.0, 0.0)],
    ] {
        let b = BlaschkeProduct::new(zeros).unwrap();
        let report = counterexample_suite(&b, &cfg).unwrap();
        assert!(
            report.passed(),
            "{:?}",
            report.failures().collect::<Vec<_>>()
        );
    }
}

#[test]
fn toeplitz_kernel_does_not_depend_on_basis() {
    let cfg = cfg();
    let b = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.3, 0.3)]).unwrap();
    let phi = SymbolSpec::z_bar();
    let a = perturbed_toeplitz_kernel(&phi, &b, &BasisChoice::KernelGram, &cfg).unwrap();
    let r = perturbed_toeplitz_kernel(&phi, &b, &BasisChoice::Rotated { seed: 9 }, &cfg).unwrap();
    assert_eq!(a.kernel.dim(), r.kernel.dim());
    assert!(a.kernel.distance(&r.kernel).unwrap() < 1e-8);
    assert!(a.nearly.is_nearly && r.nearly.is_nearly);
}
