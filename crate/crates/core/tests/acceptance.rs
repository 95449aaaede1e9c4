//! One PASS/FAIL line per acceptance criterion. Tolerances are pinned here.

use std::f64::consts::PI;
use std::time::Instant;

use lelong::bergman::{
    bergman_kernel, brute_force_quotient_norm, extension_jumping_numbers, moment, n1_estimate, reproduce_monomial, JetIdealProblem,
};
use lelong::family::{closed_grid, MetricFamily};
use lelong::filtration::{build_filtration, quotient_violation, DirectionProbe, Integrability};
use lelong::fit::TailFit;
use lelong::flow::{check_lambda_monotone, compute_flow, dominated_by, flat_limit, flat_limit_from_flow, relative_range, CLUSTER_TOL, DEFAULT_GRID_POINTS};
use lelong::hermitian::{subspace_angle, FiberVector, C64};
use lelong::openness::{identity_grid, lemma_identity, openness_interval, ModelWeight, OpennessConfig, MODEL_REL_TOL};
use lelong::quad::Quadrature;
use lelong::radial::RadialProfile;
use lelong::synth::{gaussian_vector, random_family, rng, SynthConfig, SynthFamily};
use rand::Rng;

const SEED: u64 = 20_240_601;
const FAMILIES: usize = 50;
const DUALS_PER_FAMILY: usize = 20;
const DIRECTIONS: usize = 100;

const BETA_TOL: f64 = 5e-2;
const DOMINATION_TOL: f64 = 1e-6;
const BASE_TOL: f64 = 1e-8;
const EXPONENT_TOL: f64 = 2e-3;
const IDEMPOTENCE_ANGLE: f64 = 1e-8;
const MONOTONE_TOL: f64 = 1e-7;
const IDENTITY_TOL: f64 = 1e-8;
const P_MAX_TOL: f64 = 1e-2;
const MOMENT_TOL: f64 = 1e-10;
const JUMP_TOL: f64 = 1e-3;
const ORACLE_TOL: f64 = 1e-8;
const SHARPNESS_TOL: f64 = 1e-9;
const KERNEL_TOL: f64 = 1e-9;
const REPRODUCE_TOL: f64 = 1e-7;

struct Outcome {
    pass: bool,
    detail: String,
}

fn families() -> Vec<SynthFamily> {
    let mut r = rng(SEED);
    (0..FAMILIES).map(|_| random_family(&mut r, &SynthConfig::default()).unwrap()).collect()
}

fn theorem_suite(fams: &[SynthFamily]) -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED + 1);
    let (mut total, mut consistent, mut worst_gap) = (0, 0, 0.0f64);
    let mut failures = Vec::new();
    for (i, sf) in fams.iter().enumerate() {
        let fam = &sf.family;
        let flow = compute_flow(fam, &fam.default_grid(DEFAULT_GRID_POINTS)).unwrap();
        let flat = flat_limit_from_flow(fam, &flow, &TailFit::default()).unwrap();
        let filt = build_filtration(&flat, CLUSTER_TOL);
        let probe = DirectionProbe::with_flow(fam, flow, TailFit::decay());
        let k = filt.len();
        for _ in 0..DUALS_PER_FAMILY {
            let j = r.random_range(0..k);
            let coeffs: Vec<C64> = gaussian_vector(&mut r, fam.dim()).iter().copied().collect();
            let v = filt.dual_in(j, &coeffs).unwrap();
            total += 1;
            match probe.verify_theorem(&v, &filt) {
                Ok(rep) => {
                    let gap = (rep.beta - filt.jumps[j]).abs();
                    worst_gap = worst_gap.max(gap);
                    if rep.verdicts.consistent && rep.j_index == j && gap <= BETA_TOL {
                        consistent += 1;
                    } else if failures.len() < 5 {
                        failures.push(format!("family {i} j {j}: j_index {} beta {:.4} target {:.4} verdicts {:?}", rep.j_index, rep.beta, filt.jumps[j], rep.verdicts));
                    }
                }
                Err(e) => {
                    if failures.len() < 5 {
                        failures.push(format!("family {i} j {j}: {e}"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: consistent == total,
        detail: format!("{consistent}/{total} consistent, worst |beta - alpha| {worst_gap:.2e}, {secs:.1}s {}", failures.join("; ")),
    }
}

fn flat_limit_suite(fams: &[SynthFamily]) -> Outcome {
    let (mut worst_dom, mut worst_base, mut worst_exp) = (0.0f64, 0.0f64, 0.0f64);
    let (mut worst_idem_exp, mut worst_angle) = (0.0f64, 0.0f64);
    for sf in fams {
        let fam = &sf.family;
        let flat = flat_limit(fam, &TailFit::default()).unwrap();
        for (a, b) in flat.exponents.iter().zip(&sf.alphas) {
            worst_exp = worst_exp.max((a - b).abs());
        }
        let horizon = flat.comparison_horizon().min(fam.t_max());
        let dom = dominated_by(fam, &flat, &closed_grid(0.0, horizon, 41)).unwrap();
        worst_dom = worst_dom.max(dom.worst_ratio - 1.0);
        let (lo, hi) = relative_range(fam, &flat, 0.0).unwrap();
        worst_base = worst_base.max((lo - 1.0).abs()).max((hi - 1.0).abs());

        let again = flat_limit(&flat.family(fam.t_max()).unwrap(), &TailFit::default()).unwrap();
        for (a, b) in again.exponents.iter().zip(&flat.exponents) {
            worst_idem_exp = worst_idem_exp.max((a - b).abs());
        }
        let f1 = build_filtration(&flat, CLUSTER_TOL);
        let f2 = build_filtration(&again, CLUSTER_TOL);
        for (a, b) in f1.v_spaces.iter().zip(&f2.v_spaces) {
            worst_angle = worst_angle.max(subspace_angle(a, b));
        }
    }
    Outcome {
        pass: worst_dom <= DOMINATION_TOL && worst_base <= BASE_TOL && worst_exp <= EXPONENT_TOL && worst_idem_exp <= 1e-12 && worst_angle < IDEMPOTENCE_ANGLE,
        detail: format!(
            "domination excess {worst_dom:.1e}, base mismatch {worst_base:.1e}, exponent error {worst_exp:.1e}, idempotence exponent {worst_idem_exp:.1e} angle {worst_angle:.1e}"
        ),
    }
}

fn monotonicity_suite(fams: &[SynthFamily]) -> Outcome {
    let mut r = rng(SEED + 2);
    let (mut worst_lambda, mut worst_quotient) = (0.0f64, 0.0f64);
    let mut extra: Vec<MetricFamily> = vec![
        MetricFamily::flat_diagonal(&[0.0, 1.0], 200.0).unwrap(),
        MetricFamily::diagonal(vec![lelong::profile::ScalarProfile::Hyperbolic { scale: 1.0, slope: 0.0, intercept: 0.0 }], 200.0).unwrap(),
    ];
    extra.extend(fams.iter().map(|f| f.family.clone()));
    for fam in &extra {
        let grid = fam.default_grid(DEFAULT_GRID_POINTS);
        let flow = compute_flow(fam, &grid).unwrap();
        worst_lambda = worst_lambda.max(check_lambda_monotone(&flow).worst_violation);
        for _ in 0..DIRECTIONS {
            let u = FiberVector::new(gaussian_vector(&mut r, fam.dim()));
            worst_quotient = worst_quotient.max(quotient_violation(fam, &u, &grid, TailFit::default().trust_ratio).unwrap());
        }
    }
    Outcome {
        pass: worst_lambda <= MONOTONE_TOL && worst_quotient <= MONOTONE_TOL,
        detail: format!("{} families: lambda violation {worst_lambda:.1e}, quotient violation {worst_quotient:.1e}", extra.len()),
    }
}

fn identity_suite() -> Outcome {
    let q = Quadrature::with_rel_tol(MODEL_REL_TOL);
    let xs = closed_grid(-2.0, 0.0, 5);
    let ps = closed_grid(0.25, 1.75, 5);
    let grid = identity_grid(&xs, &ps, &q).unwrap();
    let worst = grid.iter().map(|c| c.relative_residual).fold(0.0, f64::max);
    let a = lemma_identity(0.0, 1.0, &q).unwrap();
    let b = lemma_identity(-1.0, 1.0, &q).unwrap();
    let anchors = (a.lhs - 2.0).abs() / 2.0 + (b.lhs - 2.0 * 1f64.exp()).abs() / (2.0 * 1f64.exp());
    Outcome {
        pass: worst < IDENTITY_TOL && anchors < IDENTITY_TOL,
        detail: format!("max residual {worst:.1e} on 25 points, anchor error {anchors:.1e}"),
    }
}

fn openness_suite() -> Outcome {
    let q = Quadrature::with_rel_tol(MODEL_REL_TOL);
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, m) in [(1.0, 0u32), (1.0, 1), (2.0, 1)] {
        let w = ModelWeight::log_pole(c).unwrap();
        let expect = (2.0 * m as f64 + 2.0) / c;
        match openness_interval(&w, m, &OpennessConfig::default(), &q) {
            Ok(r) => {
                let good = (r.p_max - expect).abs() < P_MAX_TOL && r.endpoint.verdict != Integrability::Finite && r.pass;
                ok &= good;
                parts.push(format!("(c={c},m={m}) p_max {:.5} vs {expect}", r.p_max));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("(c={c},m={m}) {e}"));
            }
        }
    }
    Outcome { pass: ok, detail: parts.join(", ") }
}

fn bergman_suite() -> Outcome {
    let zero = RadialProfile::Zero;
    let mut worst_moment = 0.0f64;
    for k in 0..=8 {
        for t in [0.0, 0.5, 1.0, 2.0] {
            let exact = PI * (-((k + 1) as f64) * t).exp() / (k + 1) as f64;
            worst_moment = worst_moment.max((moment(&zero, k, t).unwrap() / exact - 1.0).abs());
        }
    }
    let mut worst_jump = 0.0f64;
    for n in 0..=3 {
        let j = extension_jumping_numbers(&zero, n, 200.0, DEFAULT_GRID_POINTS, &TailFit::default()).unwrap();
        if j.jumps.len() != n + 1 {
            worst_jump = f64::INFINITY;
        }
        for (i, a) in j.jumps.iter().enumerate() {
            worst_jump = worst_jump.max((a - (i + 1) as f64).abs());
        }
    }
    let mut r = rng(SEED + 3);
    let mut worst_oracle = 0.0f64;
    let weights = [RadialProfile::Zero, RadialProfile::Quadratic { a: 1.0 }];
    for i in 0..20 {
        let n = r.random_range(0..=3);
        let jets: Vec<C64> = gaussian_vector(&mut r, n + 1).iter().copied().collect();
        let p = JetIdealProblem::new(weights[i % 2].clone(), &jets).unwrap();
        let t = [0.0, 0.5, 1.0][i % 3];
        worst_oracle = worst_oracle.max(brute_force_quotient_norm(&p, t, 16).unwrap().relative_difference);
    }
    Outcome {
        pass: worst_moment <= MOMENT_TOL && worst_jump <= JUMP_TOL && worst_oracle <= ORACLE_TOL,
        detail: format!("moment error {worst_moment:.1e}, jump error {worst_jump:.1e}, oracle gap {worst_oracle:.1e}"),
    }
}

fn sharpness_suite() -> Outcome {
    let mut r = rng(SEED + 4);
    let (mut worst_sharp, mut worst_below) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..10 {
        let f = gaussian_vector(&mut r, 2);
        let e = n1_estimate(&RadialProfile::Zero, f[0], f[1]).unwrap();
        worst_sharp = worst_sharp.max((e.bound - e.exact).abs() / e.exact);
        let e = n1_estimate(&RadialProfile::Quadratic { a: 1.0 }, f[0], f[1]).unwrap();
        worst_below = worst_below.max((e.exact - e.bound) / e.exact);
    }
    Outcome {
        pass: worst_sharp <= SHARPNESS_TOL && worst_below <= SHARPNESS_TOL,
        detail: format!("phi=0 relative gap {worst_sharp:.1e}, phi=r^2 worst shortfall {worst_below:.2e}"),
    }
}

fn kernel_suite() -> Outcome {
    let mut r = rng(SEED + 5);
    let mut worst_kernel = 0.0f64;
    for _ in 0..10 {
        let z = C64::from_polar(r.random_range(0.0..0.9), r.random_range(0.0..2.0 * PI));
        let w = C64::from_polar(r.random_range(0.0..0.9), r.random_range(0.0..2.0 * PI));
        let k = bergman_kernel(&RadialProfile::Zero, z, w, 0.0).unwrap();
        let exact = 1.0 / (PI * (1.0 - z * w.conj()).powi(2));
        worst_kernel = worst_kernel.max((k.value - exact).norm());
    }
    let mut worst_repro = 0.0f64;
    for weight in [RadialProfile::Zero, RadialProfile::Quadratic { a: 1.0 }] {
        for t in [0.0, 1.0] {
            let w = C64::from_polar(0.5 * (-0.5 * t as f64).exp(), 0.7);
            for j in 0..3 {
                let v = reproduce_monomial(&weight, j, w, t, 64).unwrap();
                worst_repro = worst_repro.max((v - w.powu(j)).norm());
            }
        }
    }
    Outcome {
        pass: worst_kernel <= KERNEL_TOL && worst_repro <= REPRODUCE_TOL,
        detail: format!("closed-form gap {worst_kernel:.1e}, reproducing error {worst_repro:.1e}"),
    }
}

fn determinism_suite() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("family.json");
    let mut r = rng(SEED + 6);
    let sf = random_family(&mut r, &SynthConfig::default()).unwrap();
    std::fs::write(&input, lelong::family::family_to_json(&sf.family)).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_lelong"))
            .args(["analyze", "--input"])
            .arg(&input)
            .arg("--output")
            .arg(&out)
            .args(["--seed", "7"])
            .status()
            .unwrap();
        let text = std::fs::read_to_string(&out).unwrap_or_default();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap_or(serde_json::Value::Null);
        if let Some(obj) = v.as_object_mut() {
            obj.remove("metadata");
        }
        (status.code(), serde_json::to_string(&v).unwrap())
    };
    let (c1, a) = run("a.json");
    let (c2, b) = run("b.json");
    Outcome {
        pass: c1 == Some(0) && c2 == Some(0) && a == b && a != "null",
        detail: format!("exit codes {c1:?}/{c2:?}, {} bytes, identical {}", a.len(), a == b),
    }
}

#[test]
fn acceptance() {
    let fams = families();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 theorem equivalences on random families", Box::new(|| theorem_suite(&fams))),
        ("2 flat limit domination, agreement and idempotence", Box::new(|| flat_limit_suite(&fams))),
        ("3 spectral flow and log-quotient monotonicity", Box::new(|| monotonicity_suite(&fams))),
        ("4 calculus identity grid", Box::new(identity_suite)),
        ("5 openness thresholds", Box::new(openness_suite)),
        ("6 Bergman moments, jumping numbers, extension oracle", Box::new(bergman_suite)),
        ("7 first-order jet estimate", Box::new(sharpness_suite)),
        ("8 kernel closed form and reproducing property", Box::new(kernel_suite)),
        ("9 deterministic analyze reports", Box::new(determinism_suite)),
    ];
    let mut all = true;
    for (name, run) in criteria {
        let o = run();
        all &= o.pass;
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    assert!(all, "some acceptance criteria failed");
}
