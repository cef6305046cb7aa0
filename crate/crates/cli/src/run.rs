//! Executes one scenario and assembles its report.

use std::collections::BTreeMap;
use std::time::Instant;

use hardy_lab::constructive::{
    almost_bridge, forward_dual_representation, sarason_converse_check, verify_k_shift_invariance,
    BridgeDirection, DecompositionOptions, InvariantFrame, ModelSubspaceK,
};
use hardy_lab::nearly::{
    counterexample_suite, kernel_perturbation_bridge, kernel_perturbation_invariant,
    nearly_converse_check, nearly_decompose, nearly_inclusion, perturbed_toeplitz_kernel,
    BasisChoice, NearlyBridgeDirection,
};
use hardy_lab::operators::{
    backshift_matrix, c0_decay_profile, shift_matrix, toeplitz_matrix, BaseOperator, Orientation,
};
use hardy_lab::report::{CheckRecord, Environment, Trace};
use hardy_lab::scenario::invariant_scenario;
use hardy_lab::subspace::{orthonormalize, Subspace};
use hardy_lab::{
    random, BlaschkeProduct, Error, HardyFunction, OperatorMatrix, PerturbationSpec,
    TruncationConfig, VerificationReport, C64,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{functions, Basis, BridgeSubspace, Loaded, NearlySubspace, Scenario};

pub const REPORT_SCHEMA: &str = "hardy-lab/report";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub schema: String,
    pub schema_version: u32,
    pub id: String,
    pub kind: String,
    pub tag: String,
    pub pass: bool,
    pub environment: Environment,
    pub repetitions: usize,
    pub checks: Vec<CheckRecord>,
    pub traces: Vec<Trace>,
    /// Kind-specific results keyed by name (for repeated runs, prefixed `rep{i}.`).
    pub artifacts: BTreeMap<String, Value>,
    pub wall_time_seconds: f64,
}

impl ScenarioReport {
    pub fn failed_checks(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    /// Largest residual over checks of the form `residual ≤ threshold`.
    pub fn worst_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.relation == hardy_lab::report::Relation::AtMost)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }
}

struct Outcome {
    report: VerificationReport,
    artifacts: BTreeMap<String, Value>,
}

impl Outcome {
    fn new(name: &str) -> Self {
        Self {
            report: VerificationReport::new(name),
            artifacts: BTreeMap::new(),
        }
    }
}

pub fn execute(loaded: &Loaded) -> ScenarioReport {
    let start = Instant::now();
    let cfg = &loaded.cfg;
    let base_seed = loaded.config.seed;
    let reps = loaded.config.repetitions;
    let mut checks = Vec::new();
    let mut traces = Vec::new();
    let mut artifacts = BTreeMap::new();
    for rep in 0..reps {
        let seed = base_seed.wrapping_add(rep as u64);
        let prefix = if reps == 1 {
            String::new()
        } else {
            format!("rep{rep}.")
        };
        let outcome = match run_kind(&loaded.config.scenario, cfg, seed) {
            Ok(o) => o,
            Err(e) => failed_run(e),
        };
        for mut c in outcome.report.checks {
            c.name = format!("{prefix}{}", c.name);
            checks.push(c);
        }
        for mut t in outcome.report.traces {
            t.name = format!("{prefix}{}", t.name);
            traces.push(t);
        }
        for (k, v) in outcome.artifacts {
            artifacts.insert(format!("{prefix}{k}"), v);
        }
    }
    ScenarioReport {
        schema: REPORT_SCHEMA.into(),
        schema_version: crate::config::SCHEMA_VERSION,
        id: loaded.id.clone(),
        kind: loaded.config.scenario.kind().into(),
        tag: loaded.tag.clone(),
        pass: checks.iter().all(|c| c.pass),
        environment: Environment::new(cfg, base_seed),
        repetitions: reps,
        checks,
        traces,
        artifacts,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// A library error during a run is a failed check, not a crash.
fn failed_run(e: Error) -> Outcome {
    let mut o = Outcome::new("error");
    match &e {
        Error::NonConvergence {
            iterations,
            last,
            trace,
        } => {
            o.report.at_most("converged", *last, 0.0);
            o.report.trace("residual_norms", trace.clone());
            o.artifacts.insert("iterations".into(), json!(iterations));
        }
        _ => {
            o.report.holds("completed", false);
        }
    }
    o.artifacts.insert("error".into(), json!(e.to_string()));
    o
}

fn run_kind(s: &Scenario, cfg: &TruncationConfig, seed: u64) -> hardy_lab::Result<Outcome> {
    match s {
        Scenario::Decompose {
            symbol,
            subspace,
            samples,
            max_iterations,
        } => decompose(
            &symbol.spec(cfg)?,
            subspace,
            *samples,
            *max_iterations,
            cfg,
            seed,
            false,
        ),
        Scenario::Sarason {
            symbol,
            subspace,
            samples,
            max_iterations,
        } => decompose(
            &symbol.spec(cfg)?,
            subspace,
            *samples,
            *max_iterations,
            cfg,
            seed,
            true,
        ),
        Scenario::ForwardDual { rank, probes } => forward_dual(*rank, *probes, cfg, seed),
        Scenario::AlmostBridge { symbol, subspace } => {
            bridge(&symbol.spec(cfg)?, subspace, cfg, seed)
        }
        Scenario::Nearly { zeros, subspace } => nearly(zeros, subspace, cfg),
        Scenario::ToeplitzKernel {
            symbol,
            zeros,
            basis,
        } => toeplitz_kernel(&symbol.spec(cfg)?, zeros, basis, cfg, seed),
        Scenario::Counterexample { b_minor } => counterexample(b_minor, cfg),
        Scenario::C0Profile {
            symbol,
            functions,
            samples,
            steps,
        } => c0_profile(&symbol.spec(cfg)?, *functions, *samples, *steps, cfg, seed),
    }
}

fn decompose(
    phi: &hardy_lab::SymbolSpec,
    subspace: &crate::config::InvariantSubspace,
    samples: usize,
    max_iterations: Option<usize>,
    cfg: &TruncationConfig,
    seed: u64,
    converse: bool,
) -> hardy_lab::Result<Outcome> {
    let sc = invariant_scenario(phi, subspace.family, subspace.rank, seed, cfg)?;
    let frame = InvariantFrame::new(&sc.m, &sc.spec, cfg)?;
    let opts = DecompositionOptions {
        max_iterations,
        require_convergence: false,
        ..Default::default()
    };
    let vectors = sc.m.random_members(samples, seed);
    let results = frame.decompose_many(&vectors, &opts)?;
    let mut o = Outcome::new(if converse { "sarason" } else { "decompose" });
    let eps = cfg.eps_residual;
    let mut iterations = Vec::new();
    for (i, (f, r)) in vectors.iter().zip(&results).enumerate() {
        let n = f.norm();
        o.report.at_most(
            format!("sample{i}.reconstruction"),
            r.reconstruction_error,
            eps * n,
        );
        o.report
            .at_most(format!("sample{i}.norm_identity"), r.norm_gap, eps * n * n);
        o.report.at_most(
            format!("sample{i}.final_residual"),
            r.final_residual(),
            eps * n,
        );
        iterations.push(r.iterations());
    }
    if let Some(first) = results.first() {
        o.report
            .trace("sample0.residual_norms", first.residual_norms.clone());
    }
    let mut all = ModelSubspaceK::build(&frame, &[], &opts)?.samples;
    all.extend(results.iter().map(|r| r.element()));
    let samples = ModelSubspaceK { samples: all };
    let rep = &frame.representation;
    o.report
        .merge("k.", verify_k_shift_invariance(&samples, rep, cfg)?);
    if converse {
        o.report.merge(
            "converse.",
            sarason_converse_check(rep, &samples, phi, cfg)?,
        );
    }
    o.artifacts
        .insert("subspace_dimension".into(), json!(sc.m.dim()));
    o.artifacts.insert("row_length".into(), json!(frame.p()));
    o.artifacts.insert("iterations".into(), json!(iterations));
    Ok(o)
}

fn forward_dual(
    rank: usize,
    probes: usize,
    cfg: &TruncationConfig,
    seed: u64,
) -> hardy_lab::Result<Outcome> {
    let mut rng = random::stream(seed, 0xfd);
    let t = shift_matrix(cfg);
    let (m, terms) =
        random::perturbation_invariant_subspace(&t, rank, cfg.degree / 4, 0, &mut rng, cfg);
    let spec = PerturbationSpec::new(
        BaseOperator::ForwardShift,
        terms,
        hardy_lab::operators::Sign::Plus,
    )?;
    let probes: Vec<HardyFunction> = (0..probes)
        .map(|_| random::unit_polynomial(&mut rng, cfg.degree, cfg.degree))
        .collect();
    let dual =
        forward_dual_representation(&m, &spec, &probes, cfg, &DecompositionOptions::default())?;
    let mut o = Outcome::new("forward_dual");
    o.report = dual.report;
    o.artifacts
        .insert("subspace_dimension".into(), json!(m.dim()));
    o.artifacts
        .insert("row_length".into(), json!(dual.phi_basis.len()));
    Ok(o)
}

fn bridge(
    phi: &hardy_lab::SymbolSpec,
    subspace: &BridgeSubspace,
    cfg: &TruncationConfig,
    seed: u64,
) -> hardy_lab::Result<Outcome> {
    let t: OperatorMatrix = toeplitz_matrix(phi, cfg).adjoint();
    let mut o = Outcome::new("almost_bridge");
    let m = match subspace {
        BridgeSubspace::Random { rank } => {
            let mut rng = random::stream(seed, 0xab);
            let (m, terms) = random::perturbation_invariant_subspace(
                &t,
                *rank,
                cfg.degree / 8,
                0,
                &mut rng,
                cfg,
            );
            let fwd = almost_bridge(
                &t,
                &m,
                &BridgeDirection::PerturbationToAlmost {
                    terms,
                    sign: hardy_lab::operators::Sign::Plus,
                },
                cfg,
            )?;
            o.report.merge("forward.", fwd.report);
            m
        }
        BridgeSubspace::Span { vectors } => orthonormalize(&functions(vectors, cfg), cfg),
    };
    let back = almost_bridge(&t, &m, &BridgeDirection::AlmostToPerturbation, cfg)?;
    o.report.merge("converse.", back.report);
    o.artifacts
        .insert("subspace_dimension".into(), json!(m.dim()));
    o.artifacts
        .insert("defect".into(), json!(back.defect.defect));
    o.artifacts.insert(
        "defect_basis".into(),
        functions_json(&back.defect.defect_basis, cfg),
    );
    Ok(o)
}

fn nearly(
    b: &BlaschkeProduct,
    subspace: &NearlySubspace,
    cfg: &TruncationConfig,
) -> hardy_lab::Result<Outcome> {
    let m = match subspace {
        NearlySubspace::ModelSpace => Subspace::model_space(&b.times_z(), cfg),
        NearlySubspace::KernelPerturbation { dim } => kernel_perturbation_invariant(b, *dim, cfg)?,
        NearlySubspace::Span { vectors } => orthonormalize(&functions(vectors, cfg), cfg),
    };
    let mut o = Outcome::new("nearly");
    let d = nearly_decompose(&m, b, cfg)?;
    let converse = nearly_converse_check(&d.g0, &d.samples, b, cfg)?;
    o.artifacts.insert("r".into(), json!(d.r()));
    o.artifacts
        .insert("subspace_dimension".into(), json!(m.dim()));
    o.artifacts
        .insert("theta_zero".into(), json!(d.theta_zero_flag));
    o.report.merge("decompose.", d.report);
    o.report.merge("converse.", converse);
    o.report.merge(
        "perturbation.",
        kernel_perturbation_bridge(&m, b, NearlyBridgeDirection::Converse, cfg)?,
    );
    if matches!(subspace, NearlySubspace::KernelPerturbation { .. }) {
        o.report.merge(
            "kernel_perturbation.",
            kernel_perturbation_bridge(&m, b, NearlyBridgeDirection::Forward, cfg)?,
        );
    }
    o.report
        .holds("inclusion", !nearly_inclusion(&m, b, cfg)?.violation);
    Ok(o)
}

fn toeplitz_kernel(
    phi: &hardy_lab::SymbolSpec,
    b: &BlaschkeProduct,
    basis: &Basis,
    cfg: &TruncationConfig,
    seed: u64,
) -> hardy_lab::Result<Outcome> {
    let choice = match basis {
        Basis::KernelGram => BasisChoice::KernelGram,
        Basis::Rotated => BasisChoice::Rotated { seed },
        Basis::UserSupplied { vectors } => BasisChoice::UserSupplied(functions(vectors, cfg)),
    };
    let k = perturbed_toeplitz_kernel(phi, b, &choice, cfg)?;
    let mut o = Outcome::new("toeplitz_kernel");
    o.report = k.report;
    o.artifacts
        .insert("kernel_dimension".into(), json!(k.kernel.dim()));
    o.artifacts.insert(
        "kernel_basis".into(),
        functions_json(&k.kernel.basis_functions(), cfg),
    );
    o.artifacts
        .insert("nearly".into(), json!(k.nearly.is_nearly));
    o.artifacts
        .insert("vacuous".into(), json!(k.nearly.vacuous));
    o.artifacts
        .insert("truncation_suspect".into(), json!(k.truncation_suspect));
    Ok(o)
}

fn counterexample(b_minor: &BlaschkeProduct, cfg: &TruncationConfig) -> hardy_lab::Result<Outcome> {
    let report = counterexample_suite(b_minor, cfg)?;
    let pass_of = |name: &str| report.checks.iter().any(|c| c.name == name && c.pass);
    let mut o = Outcome::new("counterexample");
    o.artifacts
        .insert("nearly_for_b".into(), json!(pass_of("nearly_for_B_n")));
    o.artifacts
        .insert("nearly_for_z".into(), json!(!pass_of("not_nearly_for_z")));
    o.artifacts.insert(
        "backshift_invariant".into(),
        json!(!pass_of("not_backshift_invariant")),
    );
    o.report = report;
    Ok(o)
}

fn c0_profile(
    phi: &hardy_lab::SymbolSpec,
    count: usize,
    samples: usize,
    steps: Option<usize>,
    cfg: &TruncationConfig,
    seed: u64,
) -> hardy_lab::Result<Outcome> {
    let mut rng = random::stream(seed, 0xc0);
    let fs: Vec<HardyFunction> = (0..count)
        .map(|_| random::unit_polynomial(&mut rng, cfg.degree, cfg.degree))
        .collect();
    let w = orthonormalize(&fs, cfg);
    let tadj = if *phi == hardy_lab::SymbolSpec::z() {
        backshift_matrix(cfg)
    } else {
        toeplitz_matrix(phi, cfg).adjoint()
    };
    let x = OperatorMatrix::new(
        tadj.entries() * w.complement().projector(),
        "compressed adjoint",
    )?;
    let steps = steps.unwrap_or(100 * cfg.dim());
    let mut o = Outcome::new("c0_profile");
    let mut first_below = Vec::new();
    for i in 0..samples {
        let g = random::unit_polynomial(&mut rng, cfg.degree, cfg.degree);
        let p = c0_decay_profile(&x, &g, steps, Orientation::Direct, cfg)?;
        o.report.at_most(
            format!("sample{i}.decay"),
            *p.norms.last().unwrap(),
            cfg.eps_residual * g.norm(),
        );
        o.report.holds(
            format!("sample{i}.non_increasing"),
            p.is_non_increasing(1e-14),
        );
        first_below.push(
            p.first_below(cfg.eps_residual * g.norm())
                .map(|n| n as i64)
                .unwrap_or(-1),
        );
        if i == 0 {
            let keep = p.norms.len().min(cfg.dim() + 1);
            o.report.trace("sample0.norms", p.norms[..keep].to_vec());
        }
    }
    o.artifacts
        .insert("first_below_eps".into(), json!(first_below));
    o.artifacts.insert("steps".into(), json!(steps));
    Ok(o)
}

/// Coefficients as `[re, im]` pairs with trailing zeros dropped, each vector
/// rotated so that its first coefficient above `eps_rank` is real and positive.
fn functions_json(fs: &[HardyFunction], cfg: &TruncationConfig) -> Value {
    let out: Vec<Vec<[f64; 2]>> = fs
        .iter()
        .map(|f| {
            let c = f.coeffs();
            let phase = c
                .iter()
                .find(|x| x.norm() > cfg.eps_rank)
                .map(|x| x.conj() / x.norm())
                .unwrap_or(C64::new(1.0, 0.0));
            let mut v: Vec<[f64; 2]> = c
                .iter()
                .map(|x| {
                    let y = x * phase;
                    [clean(y.re, cfg), clean(y.im, cfg)]
                })
                .collect();
            while v.last().is_some_and(|x| x == &[0.0, 0.0]) {
                v.pop();
            }
            v
        })
        .collect();
    json!(out)
}

fn clean(x: f64, cfg: &TruncationConfig) -> f64 {
    if x.abs() <= cfg.eps_rank {
        0.0
    } else {
        x
    }
}
