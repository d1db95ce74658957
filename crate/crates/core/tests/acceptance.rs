//! Acceptance suite: one function per criterion, each printing a PASS/FAIL line.
//! Runs without the libtest harness so every line shows in plain `cargo test` output.

use std::f64::consts::PI;

use es_accel::dynamics::{
    analytic_basic_trajectory, simulate_bernoulli, DriftParams, GridSpec, LoopParams,
};
use es_accel::extraction::{compute_g, extract_l_basic, extract_theta, SampleQuadruple};
use es_accel::perturbation::{
    alpha_sequence, gamma_criterion, generating_function_coefficient, partial_sum_basel,
    richardson_accelerate, series_discrepancy, solve_full_deviation, solve_series_terms,
    stirling_coefficient, sup_abs_on,
};
use es_accel::report::trace_csv;
use es_accel::scenarios::{noise_breakdown_study, presets, run_scenario, sweep, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, detail: String) -> bool {
    println!(
        "{} [{id:>2}] {title}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

fn fig7_params() -> DriftParams {
    match presets::load("fig7").unwrap().loop_params {
        ModelParams::Drift(p) => p,
        _ => unreachable!(),
    }
}

fn criterion_01_basel() -> bool {
    let s10 = partial_sum_basel(10);
    let acc = richardson_accelerate(partial_sum_basel, 10);
    let limit = PI * PI / 6.0;
    let pass = (1.54976..=1.54977).contains(&s10)
        && (acc - 1.64481).abs() <= 5e-6
        && (limit - 1.64493).abs() <= 5e-6;
    report(
        1,
        "Basel partial sums",
        pass,
        format!("S10 = {s10:.7}, accelerated = {acc:.7}, limit = {limit:.7}"),
    )
}

fn criterion_02_theta_extraction() -> bool {
    let config = presets::load("fig2").unwrap();
    let run = run_scenario(&config).unwrap();
    let theta = (-0.06f64).exp();
    let t_from = 2.0 * config.loop_params.period();
    let mut worst = 0.0f64;
    let mut missing = 0;
    for (t, th) in run.series.t_grid.iter().zip(&run.series.theta_hat) {
        if *t < t_from {
            continue;
        }
        match th {
            Some(v) => worst = worst.max((v - theta).abs()),
            None => missing += 1,
        }
    }
    report(
        2,
        "theta extraction on the noiseless loop",
        worst < 1e-3 && missing == 0,
        format!("max |theta_hat - e^-0.06| for t >= 2T = {worst:.3e}, invalid samples = {missing}"),
    )
}

fn criterion_03_eps_squared_band() -> bool {
    let config = presets::load("fig2").unwrap();
    let eps = config.loop_params.epsilon();
    let full = run_scenario(&config).unwrap().summary.l_residual_max_tail;
    let halved = run_scenario(&config.with_param("epsilon", eps / 2.0).unwrap())
        .unwrap()
        .summary
        .l_residual_max_tail;
    let ratio = full / halved;
    report(
        3,
        "accelerated residual scales with eps^2",
        full <= 10.0 * eps * eps && (3.0..=5.0).contains(&ratio),
        format!(
            "tail(eps) = {full:.3e} (bound {:.1e}), tail(eps/2) = {halved:.3e}, ratio = {ratio:.2}",
            10.0 * eps * eps
        ),
    )
}

fn criterion_04_closed_form() -> bool {
    let p = LoopParams {
        epsilon: 0.01,
        b: 2.0,
        period: 3.0,
        l_true: 0.0,
        x_init: 1.3,
    };
    let rk4 = simulate_bernoulli(&p, 2048, 30.0).unwrap();
    let grid = GridSpec::new(0.0, p.period, 2048).unwrap();
    let exact = analytic_basic_trajectory(&p, p.c_const(), grid, 30.0).unwrap();
    let err = rk4
        .values
        .iter()
        .zip(&exact.values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    report(
        4,
        "RK4 against the closed-form solution on [0, 30]",
        err <= 1e-8 && rk4.len() == exact.len(),
        format!("max abs deviation = {err:.3e}"),
    )
}

fn criterion_05_exact_model_recovery() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_l = 0.0f64;
    for _ in 0..1000 {
        let l: f64 = rng.gen_range(-50.0..50.0);
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let c: f64 = sign * rng.gen_range(1.0..5.0);
        let theta: f64 = rng.gen_range(0.05..0.95);
        let x = rng.gen_range(-0.5..2.0) * c * (1.0 - theta);
        let x0: f64 = rng.gen_range(0.01..1.0);
        let xs: Vec<f64> = (0..3)
            .map(|n| {
                let tn = theta.powi(n);
                l + tn * x0 / (c + x * (1.0 - tn) / (1.0 - theta))
            })
            .collect();
        let got = extract_l_basic(xs[0], xs[1], xs[2], theta).unwrap();
        worst_l = worst_l.max((got - l).abs() / (f64::EPSILON * l.abs().max(1.0)));
    }
    let mut worst_theta = 0.0f64;
    for _ in 0..1000 {
        let l: f64 = rng.gen_range(-10.0..10.0);
        let a: f64 = rng.gen_range(0.01..5.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let theta: f64 = rng.gen_range(0.05..0.95);
        let q = SampleQuadruple::new(
            l + a,
            l + a * theta,
            l + a * theta * theta,
            l + a * theta.powi(3),
        );
        let (g, _) = compute_g(&q).unwrap();
        worst_theta = worst_theta.max((extract_theta(g).unwrap() - theta).abs());
    }
    report(
        5,
        "exact-model recovery",
        worst_l <= 1e3 && worst_theta <= 1e-10,
        format!("max L error = {worst_l:.1} eps, max theta error = {worst_theta:.2e}"),
    )
}

fn criterion_06_gamma() -> bool {
    let g = gamma_criterion(&fig7_params()).gamma;
    report(
        6,
        "Gamma of the reference drift loop",
        (g - 0.79).abs() <= 0.01,
        format!("Gamma = {g:.4}"),
    )
}

fn criterion_07_drift_acceleration() -> bool {
    let fig7 = run_scenario(&presets::load("fig7").unwrap())
        .unwrap()
        .summary;
    let fig8 = sweep(&presets::load("fig8").unwrap(), "delta", &[1.0, 0.1, 1e-9]);
    let breakdown = sweep(&presets::load("breakdown").unwrap(), "q0", &[0.4, 0.05]);
    let ratios = |rs: &[es_accel::Result<es_accel::scenarios::RunSummary>]| {
        rs.iter()
            .map(|r| {
                r.as_ref()
                    .map(|s| format!("{:.3}", s.residual_ratio()))
                    .unwrap_or_else(|e| e.to_string())
            })
            .collect::<Vec<_>>()
            .join(", ")
    };
    let pass = fig7.dominant()
        && fig8.iter().all(|r| r.as_ref().is_ok_and(|s| s.dominant()))
        && breakdown
            .iter()
            .all(|r| r.as_ref().is_ok_and(|s| s.broken()));
    report(
        7,
        "drift acceleration and breakdown",
        pass,
        format!(
            "ratio fig7 = {:.3}; delta sweep = [{}]; q0 sweep = [{}]",
            fig7.residual_ratio(),
            ratios(&fig8),
            ratios(&breakdown)
        ),
    )
}

fn criterion_08_noise_regimes() -> bool {
    let base = presets::load("fig4").unwrap();
    let eps = base.loop_params.epsilon();
    let mut lines = Vec::new();
    let mut reference = None;
    let mut all = true;
    let mut invariant = true;
    for dt in [0.25, 0.5, 1.0] {
        for offset in [0.0, eps * eps] {
            let config = base
                .with_param("hold_interval", dt)
                .and_then(|c| c.with_param("offset", offset))
                .unwrap();
            let study = noise_breakdown_study(&config).unwrap();
            let v = study.verdicts();
            let ratio = |s: &es_accel::scenarios::RunSummary| format!("{:.3}", s.residual_ratio());
            lines.push(format!(
                "dt={dt} offset={offset:e}: low instant {} | mid instant {} exact {} averaged(3) {} | high instant {} averaged(3) {} -> {:?}",
                ratio(&study.levels[0].instant),
                ratio(&study.levels[1].instant),
                ratio(&study.levels[1].exact),
                ratio(study.levels[1].averaged_with(3).unwrap()),
                ratio(&study.levels[2].instant),
                ratio(study.levels[2].averaged_with(3).unwrap()),
                v
            ));
            all &= v.all();
            match reference {
                None => reference = Some(v),
                Some(r) => invariant &= r == v,
            }
        }
    }
    for l in &lines {
        println!("       {l}");
    }
    report(
        8,
        "noise regimes",
        all && invariant,
        format!(
            "all regimes as expected = {all}, verdicts invariant under dt/offset = {invariant}"
        ),
    )
}

fn criterion_09_perturbation_series() -> bool {
    let p = fig7_params();
    let t_to = 1.0 / (2.0 * p.delta);
    let grid = GridSpec::new(0.0, p.period, 2048).unwrap();
    let terms = solve_series_terms(&p, 4, grid, t_to).unwrap();
    let discrepancy = |coupling: f64| {
        let dev = solve_full_deviation(&p, coupling, grid, t_to).unwrap();
        series_discrepancy(&terms, coupling, &dev, 0.0, t_to).unwrap()
    };
    let full = discrepancy(p.delta);
    let half = discrepancy(p.delta / 2.0);
    let ratio = full / half;
    report(
        9,
        "perturbation series against the full solution",
        full <= 1e-4 && (24.0..=40.0).contains(&ratio),
        format!("discrepancy = {full:.3e}, at delta/2 = {half:.3e}, ratio = {ratio:.2}"),
    )
}

fn criterion_10_majorants() -> bool {
    let p = fig7_params();
    let r = gamma_criterion(&p);
    let alpha = alpha_sequence(r.c_const, r.alpha0, 20);
    let worst_gf = (0..=20)
        .map(|n| {
            let gf = generating_function_coefficient(r.c_const, r.alpha0, n);
            (alpha.values[n] - gf).abs() / gf.abs()
        })
        .fold(0.0f64, f64::max);

    let grid = GridSpec::new(0.0, p.period, 2048).unwrap();
    let terms = solve_series_terms(&p, 4, grid, r.horizon).unwrap();
    let sups: Vec<f64> = terms
        .iter()
        .map(|t| sup_abs_on(&t.samples, 0.0, r.horizon))
        .collect();
    let majorized = sups.iter().zip(&alpha.values).all(|(s, a)| s <= a);

    let stirling = generating_function_coefficient(r.c_const, r.alpha0, 50)
        / stirling_coefficient(r.c_const, r.alpha0, 50);
    report(
        10,
        "majorizing sequence and generating function",
        worst_gf <= 1e-9 && majorized && (stirling - 1.0).abs() <= 0.05,
        format!(
            "max rel gf mismatch = {worst_gf:.2e}; sup|z_n| = {:?} vs alpha = {:?}; Stirling ratio(50) = {stirling:.4}",
            sups.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>(),
            alpha.values[..5].iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_11_determinism() -> bool {
    let mut names = Vec::new();
    let mut differing = Vec::new();
    for (name, _) in presets::bundled() {
        let config = presets::load(name).unwrap();
        let a = trace_csv(&config, &run_scenario(&config).unwrap());
        let b = trace_csv(&config, &run_scenario(&config).unwrap());
        if a != b {
            differing.push(name);
        }
        names.push(name);
    }
    report(
        11,
        "byte-identical preset traces",
        differing.is_empty(),
        format!(
            "{} presets checked, differing = {:?}",
            names.len(),
            differing
        ),
    )
}

fn main() {
    let criteria: [(u32, fn() -> bool); 11] = [
        (1, criterion_01_basel),
        (2, criterion_02_theta_extraction),
        (3, criterion_03_eps_squared_band),
        (4, criterion_04_closed_form),
        (5, criterion_05_exact_model_recovery),
        (6, criterion_06_gamma),
        (7, criterion_07_drift_acceleration),
        (8, criterion_08_noise_regimes),
        (9, criterion_09_perturbation_series),
        (10, criterion_10_majorants),
        (11, criterion_11_determinism),
    ];
    let mut failed = Vec::new();
    for (id, criterion) in criteria {
        match std::panic::catch_unwind(criterion) {
            Ok(true) => {}
            Ok(false) => failed.push(id),
            Err(_) => {
                println!("FAIL [{id:>2}] panicked");
                failed.push(id);
            }
        }
    }
    println!(
        "acceptance: {} passed, {} failed {:?}",
        criteria.len() - failed.len(),
        failed.len(),
        failed
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
