//! Acceptance suite. Runs without the libtest harness so that every check
//! prints exactly one PASS/FAIL line; exits non-zero if any check fails.

use std::time::{Duration, Instant};

use ddestab::criteria::{Analysis, CriterionId};
use ddestab::eqspec::{CoefficientFn, EquationForm, EquationSpec};
use ddestab::odebounds::{default_quadrature_horizon, quadrature_y};
use ddestab::solver::{
    default_horizon, default_step, estimate_decay, fundamental_function, integrate, verify_variation_of_constants,
    DecayVerdict, InitialValueProblem,
};
use ddestab::sweep::{run_sweep, Axis, Param, RegionSweep, SweepPlan};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Check = fn() -> Outcome;

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn ab_sweep(b: f64, criteria: &[CriterionId]) -> RegionSweep {
    let plan = SweepPlan::new(
        EquationSpec::constant_mixed(3.0, b, 0.0, 0.0, 0.1, 0.2).unwrap(),
        Axis::new(Param::A1, -1.5, 1.5, 201),
        Axis::new(Param::B1, -1.5, 1.5, 201),
    )
    .with_criteria(criteria);
    run_sweep(&plan).expect("valid plan")
}

/// Count grid points where `criterion` disagrees with an integer-index
/// oracle; `k`, `m` run over `-100..=100`.
fn mismatches(sweep: &RegionSweep, criterion: CriterionId, oracle: impl Fn(i64, i64) -> bool) -> usize {
    let field = sweep.field(criterion).expect("criterion swept");
    let mut bad = 0;
    for i in 0..201 {
        for j in 0..201 {
            let (k, m) = (i as i64 - 100, j as i64 - 100);
            if field.satisfied[sweep.index(i, j)] != oracle(k, m) {
                bad += 1;
            }
        }
    }
    bad
}

/// (a1, b1) rhombus regions: a1 = 3k/200, b1 = 3m/200.
fn ac1() -> Outcome {
    let start = Instant::now();
    let ids = [CriterionId::Theorem1, CriterionId::Corollary1];
    let s1 = ab_sweep(2.0, &ids);
    // 3|a1| + 0.5|b1| < 1  ⇔  18|k| + 3|m| < 400
    let r1 = |k: i64, m: i64| 18 * k.abs() + 3 * m.abs() < 400;
    let s2 = ab_sweep(2.5, &ids);
    // 2|a1| + |b1| < 0.75  ⇔  2|k| + |m| < 50
    let r2 = |k: i64, m: i64| 2 * k.abs() + m.abs() < 50;
    let bad: Vec<usize> = vec![
        mismatches(&s1, ids[0], r1),
        mismatches(&s1, ids[1], r1),
        mismatches(&s2, ids[0], r2),
        mismatches(&s2, ids[1], r2),
    ];
    let t = start.elapsed();
    let ok = bad.iter().all(|&b| b == 0) && t < Duration::from_secs(10);
    outcome(ok, format!("2×201² points, mismatches (Thm1, Cor1) b=2: {:?}, b=2.5: {:?}; {:.2}s < 10s", &bad[..2], &bad[2..], secs(t)))
}

/// (tau, delta) triangle regions: tau = 9i/1000, delta = j/1000.
fn ac2() -> Outcome {
    let sweep = |b: f64| {
        let plan = SweepPlan::new(
            EquationSpec::constant_pure(3.0, b, 0.0, 0.0).unwrap(),
            Axis::new(Param::Tau, 0.0, 1.8, 201),
            Axis::new(Param::Delta, 0.0, 0.2, 201),
        )
        .with_criteria(&[CriterionId::Corollary2]);
        run_sweep(&plan).expect("valid plan")
    };
    // 3δ ≤ 1/e  ⇔  3j ≤ 367  (1000/e = 367.88)
    let gate = |j: usize| 3 * j <= 367;
    // 6δ + (2/3)τ < 1  ⇔  6(i + j) < 1000
    let r1 = |i: usize, j: usize| 6 * (i + j) < 1000 && gate(j);
    // 20δ + (25/9)τ < 1  ⇔  4j + 5i < 200
    let r2 = |i: usize, j: usize| 4 * j + 5 * i < 200 && gate(j);
    let (s1, s2) = (sweep(2.0), sweep(2.5));
    let (f1, f2) = (s1.field(CriterionId::Corollary2).unwrap(), s2.field(CriterionId::Corollary2).unwrap());
    let (mut bad1, mut bad2, mut escapes, mut inner) = (0, 0, 0, 0);
    for i in 0..201 {
        for j in 0..201 {
            let idx = s1.index(i, j);
            bad1 += (f1.satisfied[idx] != r1(i, j)) as usize;
            bad2 += (f2.satisfied[idx] != r2(i, j)) as usize;
            inner += f2.satisfied[idx] as usize;
            escapes += (f2.satisfied[idx] && !f1.satisfied[idx]) as usize;
        }
    }
    let ok = bad1 == 0 && bad2 == 0 && escapes == 0 && inner > 0;
    outcome(ok, format!("mismatches b=2: {bad1}, b=2.5: {bad2}; containment violations {escapes} ({inner} inner points)"))
}

/// (a1, b1) rhombus region under the overdamped gates.
fn ac3() -> Outcome {
    let s = ab_sweep(2.0, &[CriterionId::Corollary4]);
    // 4|a1| + 3|b1| < 6  ⇔  4|k| + 3|m| < 400; |a1| ≤ 1.5 < a and a² = 9 ≥ 8 = 4b
    let bad = mismatches(&s, CriterionId::Corollary4, |k, m| 4 * k.abs() + 3 * m.abs() < 400);
    let certified = s.field(CriterionId::Corollary4).unwrap().satisfied.iter().filter(|&&x| x).count();
    outcome(bad == 0, format!("mismatches {bad} ({certified} certified points)"))
}

/// The a = 1/3, b = 1/48 equation: Cor3 threshold and simulated decay at τ = 16.
fn ac4() -> Outcome {
    let start = Instant::now();
    let (a, b) = (1.0 / 3.0, 1.0 / 48.0);
    let mut bad = Vec::new();
    for k in 0..=200u32 {
        let tau = k as f64 / 10.0;
        let spec = EquationSpec::constant_pure(a, b, 0.0, tau).unwrap();
        let c = CriterionId::Corollary3.check(&Analysis::new(&spec).unwrap());
        // τ/48 < 1/3  ⇔  k < 160
        if c.satisfied != (k < 160) {
            bad.push(tau);
        }
    }
    let spec = EquationSpec::constant_pure(a, b, 0.0, 16.0).unwrap();
    let traj = integrate(&InitialValueProblem::new(spec, 1.0, 0.0, 600.0), 1e-2).unwrap();
    let d = estimate_decay(&traj);
    let t = start.elapsed();
    let ok = bad.is_empty() && d.verdict == DecayVerdict::Decaying && d.lambda_hat > 0.0 && t < Duration::from_secs(30);
    outcome(
        ok,
        format!(
            "threshold mismatches {:?}; τ=16 over 600: {:?}, λ̂ = {:.5}; {:.2}s < 30s",
            bad,
            d.verdict,
            d.lambda_hat,
            secs(t)
        ),
    )
}

fn ac5() -> Outcome {
    let q1 = quadrature_y(3.0, 2.0, default_quadrature_horizon(3.0, 2.0)).unwrap();
    let q2 = quadrature_y(2.0, 1.0, default_quadrature_horizon(2.0, 1.0)).unwrap();
    let ok = (q1.y - 0.5).abs() <= 1e-6 && q1.yp <= 3.0 + 1e-6 && (q2.y - 1.0).abs() <= 1e-6;
    outcome(ok, format!("(3,2): Y = {:.9}, Y' = {:.9}; (2,1): Y = {:.9}", q1.y, q1.yp, q2.y))
}

fn random_lag(rng: &mut ChaCha8Rng) -> f64 {
    if rng.gen_bool(0.3) {
        0.0
    } else {
        // log-uniform on [0.02, 5]
        0.02 * 250f64.powf(rng.gen::<f64>())
    }
}

fn random_constant_spec(rng: &mut ChaCha8Rng, form: EquationForm) -> EquationSpec {
    let a = rng.gen_range(0.2..6.0);
    let b = rng.gen_range(0.2..6.0);
    let (delta, tau) = (random_lag(rng), random_lag(rng));
    match form {
        EquationForm::PureDelay => EquationSpec::constant_pure(a, b, delta, tau).unwrap(),
        EquationForm::Mixed => {
            let a1 = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-3.0..3.0) };
            let b1 = rng.gen_range(-3.0..3.0);
            EquationSpec::constant_mixed(a, b, a1, b1, delta, tau).unwrap()
        }
    }
}

/// Simulate the fundamental function, doubling the horizon while the
/// estimate is inconclusive.
fn simulated_verdict(spec: &EquationSpec) -> (DecayVerdict, f64) {
    let step = default_step(spec);
    let mut horizon = default_horizon(spec);
    let mut last = (DecayVerdict::Inconclusive, f64::NAN);
    for _ in 0..3 {
        let traj = fundamental_function(spec, spec.t0, horizon, step).expect("integrable");
        let d = estimate_decay(&traj);
        last = (d.verdict, d.lambda_hat);
        if d.verdict != DecayVerdict::Inconclusive {
            break;
        }
        horizon = spec.t0 + 2.0 * (horizon - spec.t0);
    }
    last
}

/// 500 random certified specs per criterion all decay.
fn ac6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut specs: Vec<(CriterionId, EquationSpec)> = Vec::new();
    let mut short = Vec::new();
    for c in CriterionId::ALL {
        let mut found = 0;
        for _ in 0..2_000_000 {
            let spec = random_constant_spec(&mut rng, c.form());
            if c.check(&Analysis::new(&spec).unwrap()).satisfied {
                specs.push((c, spec));
                found += 1;
                if found == 500 {
                    break;
                }
            }
        }
        if found < 500 {
            short.push(c.as_str());
        }
    }
    let counterexamples: Vec<String> = specs
        .par_iter()
        .filter_map(|(c, spec)| {
            let (verdict, lambda) = simulated_verdict(spec);
            (verdict != DecayVerdict::Decaying).then(|| format!("{c} {} {verdict:?} λ̂={lambda:.3e}", spec.to_json()))
        })
        .collect();
    let t = start.elapsed();
    for c in &counterexamples {
        eprintln!("  counterexample: {c}");
    }
    let ok = short.is_empty() && counterexamples.is_empty() && t < Duration::from_secs(300);
    outcome(
        ok,
        format!(
            "{} certified specs ({} criteria short of 500: {:?}), counterexamples {}; {:.1}s < 300s",
            specs.len(),
            short.len(),
            short,
            counterexamples.len(),
            secs(t)
        ),
    )
}

/// Forced solution vs. the fundamental-function convolution.
fn ac7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let cases: Vec<(EquationSpec, CoefficientFn)> = (0..20)
        .map(|k| {
            let form = if k % 2 == 0 { EquationForm::PureDelay } else { EquationForm::Mixed };
            let a = rng.gen_range(1.0..5.0);
            let b = rng.gen_range(0.5..4.0);
            let (d, t) = (rng.gen_range(0.02..0.5), rng.gen_range(0.02..0.5));
            let spec = match form {
                EquationForm::PureDelay => EquationSpec::constant_pure(a, b, d, t).unwrap(),
                EquationForm::Mixed => {
                    EquationSpec::constant_mixed(a, b, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), d, t).unwrap()
                }
            };
            let f = format!(
                "{:.3}*sin({:.3}*t) + {:.3}*cos({:.3}*t)",
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.2..3.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(0.2..3.0)
            );
            (spec, CoefficientFn::parse(&f).unwrap())
        })
        .collect();
    let residuals: Vec<f64> = cases
        .par_iter()
        .map(|(spec, f)| verify_variation_of_constants(spec, f, 5.0, 1e-3).unwrap().max_residual)
        .collect();
    let worst = residuals.iter().cloned().fold(0.0, f64::max);
    outcome(worst < 1e-3, format!("20 specs, max residual {worst:.3e} < 1e-3"))
}

/// Theorems 1 and 4 coincide when a1 ≡ 0.
fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut disagreements = 0;
    let mut satisfied = 0;
    for k in 0..100 {
        let mut spec = EquationSpec::constant_mixed(
            rng.gen_range(0.2..6.0),
            rng.gen_range(0.2..6.0),
            0.0,
            rng.gen_range(-4.0..4.0),
            random_lag(&mut rng),
            random_lag(&mut rng),
        )
        .unwrap();
        if k % 4 == 0 {
            // time-varying coefficients take the positive-kernel route
            spec.a = CoefficientFn::parse(&format!("{:.3} + 0.5*sin(t)", rng.gen_range(3.0..5.0))).unwrap();
            spec.b = CoefficientFn::parse(&format!("{:.3} + 0.25*cos(t)", rng.gen_range(0.5..2.0))).unwrap();
            spec.norm_window = Some(50.0);
            spec.norm_grid = Some(5001);
        }
        let an = Analysis::new(&spec).unwrap();
        let (c1, c4) = (CriterionId::Theorem1.check(&an), CriterionId::Theorem4.check(&an));
        let same_margin = c1.margin == c4.margin || (c1.margin.is_nan() && c4.margin.is_nan());
        if c1.satisfied != c4.satisfied || !same_margin {
            disagreements += 1;
        }
        satisfied += c1.satisfied as usize;
    }
    outcome(disagreements == 0, format!("100 specs ({satisfied} certified), disagreements {disagreements}"))
}

/// Observed RK4 order on x'' + 3x' + 2x = 0.
fn ac9() -> Outcome {
    let spec = EquationSpec::constant_pure(3.0, 2.0, 0.0, 0.0).unwrap();
    let err = |step: f64| {
        let traj = fundamental_function(&spec, 0.0, 10.0, step).unwrap();
        (0..traj.len())
            .map(|k| {
                let t = traj.node(k);
                (traj.x()[k] - ((-t).exp() - (-2.0 * t).exp())).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(1e-2), err(1e-3));
    let order = (e1 / e2).log10();
    outcome((order - 4.0).abs() <= 0.5, format!("errors {e1:.3e} → {e2:.3e}, order {order:.3}"))
}

fn main() {
    let checks: [(&str, &str, Check); 9] = [
        ("1", "(a1, b1) rhombus regions (Thm1/Cor1)", ac1),
        ("2", "(tau, delta) triangle regions and containment (Cor2)", ac2),
        ("3", "(a1, b1) rhombus region (Cor4)", ac3),
        ("4", "Burton condition and simulated decay", ac4),
        ("5", "comparison-kernel quadrature", ac5),
        ("6", "soundness sweep", ac6),
        ("7", "variation of constants", ac7),
        ("8", "Thm1/Thm4 consistency", ac8),
        ("9", "integrator order", ac9),
    ];
    let mut failed = 0;
    for (id, name, run) in checks {
        let o = run();
        println!("[{}] acceptance {id}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += !o.pass as usize;
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
