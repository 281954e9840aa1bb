//! Acceptance criteria. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use pds_core::dictionary::{hermite_deriv, hermite_eval};
use pds_core::inference::{functional_estimate, FunctionalKind, FunctionalSpec};
use pds_core::lasso::{initial_loadings, kkt_violation, lasso_objective, lasso_solve, penalty_level, LassoConfig, Stage};
use pds_core::linalg::{lstsq, with_intercept};
use pds_core::montecarlo::{run_monte_carlo_with, DgpConfig, Design, McReport, McSettings};
use pds_core::selection::{final_ols, Estimator, PdsFit};
use pds_core::dictionary::DictionarySpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const THETA1: FunctionalKind = FunctionalKind::AverageDerivative;

struct Outcome {
    pass: bool,
    detail: String,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| normal(rng))
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (n, m) = (50, 20);
    let mut worst: f64 = 0.0;
    let mut ok = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = gaussian(&mut rng, n, m);
        let mut beta = DVector::zeros(m);
        for j in 0..3 {
            beta[(seed as usize * 7 + j * 5) % m] = if j % 2 == 0 { 1.5 } else { -1.0 };
        }
        let y = &x * &beta + DVector::from_fn(n, |_, _| normal(&mut rng));
        let cfg = LassoConfig::for_problem(1, m, n);
        let psi = initial_loadings(&x, &y).unwrap();
        let scale = [0.25, 0.5, 1.0][seed as usize % 3];
        let lambda = scale * penalty_level(n, Stage::ReducedForm, m, &cfg).unwrap();
        let fit = lasso_solve(&x, &y, lambda, &psi, &cfg).unwrap();
        let v = kkt_violation(&x, &y, &fit.coefficients, lambda, &fit.loadings);
        let nonzero: Vec<usize> = (0..m).filter(|&j| fit.coefficients[j] != 0.0).collect();
        worst = worst.max(v);
        if v <= 1e-6 && nonzero == fit.active_set {
            ok += 1;
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: ok == 100 && secs(elapsed) < 10.0,
        detail: format!(
            "{ok}/100 fits satisfy KKT at 1e-6 (max violation {worst:.2e}); {:.2} s (limit 10 s)",
            secs(elapsed)
        ),
    }
}

/// Minimizer by enumeration of sign patterns: for every `s` in
/// `{-1, 0, 1}^M` solve the stationarity system on `{s != 0}` and keep the
/// sign-consistent solution with the smallest objective.
fn sign_pattern_oracle(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64, psi: &DVector<f64>) -> DVector<f64> {
    let m = x.ncols();
    let mut best = DVector::zeros(m);
    let mut best_obj = lasso_objective(x, y, &best, lambda, psi);
    for code in 0..3usize.pow(m as u32) {
        let mut c = code;
        let signs: Vec<f64> = (0..m)
            .map(|_| {
                let s = (c % 3) as f64 - 1.0;
                c /= 3;
                s
            })
            .collect();
        let active: Vec<usize> = (0..m).filter(|&j| signs[j] != 0.0).collect();
        if active.is_empty() {
            continue;
        }
        let xa = DMatrix::from_fn(x.nrows(), active.len(), |i, a| x[(i, active[a])]);
        let gram = xa.tr_mul(&xa);
        let rhs = xa.tr_mul(y) - DVector::from_fn(active.len(), |a, _| 0.5 * lambda * psi[active[a]] * signs[active[a]]);
        let Some(t) = gram.lu().solve(&rhs) else { continue };
        if active.iter().zip(t.iter()).any(|(&j, &v)| v * signs[j] <= 0.0) {
            continue;
        }
        let mut full = DVector::zeros(m);
        for (&j, &v) in active.iter().zip(t.iter()) {
            full[j] = v;
        }
        let obj = lasso_objective(x, y, &full, lambda, psi);
        if obj < best_obj {
            best_obj = obj;
            best = full;
        }
    }
    best
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let m = 1 + seed as usize % 4;
        let n = 30;
        let x = gaussian(&mut rng, n, m);
        let beta = DVector::from_fn(m, |j, _| if j % 2 == 0 { 1.0 } else { -0.3 });
        let y = &x * beta + DVector::from_fn(n, |_, _| normal(&mut rng));
        let psi = DVector::from_fn(m, |_, _| rng.random_range(0.5..1.5));
        let lambda = rng.random_range(1.0..40.0);
        let cfg = LassoConfig::for_problem(1, m, n);
        let fit = lasso_solve(&x, &y, lambda, &psi, &cfg).unwrap();
        let oracle = sign_pattern_oracle(&x, &y, lambda, &psi);
        worst = worst.max((fit.coefficients - oracle).amax());
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst <= 1e-6 && secs(elapsed) < 5.0,
        detail: format!(
            "50 instances with M <= 4; max coefficient gap {worst:.2e} (limit 1e-6); {:.2} s (limit 5 s)",
            secs(elapsed)
        ),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let (n, m) = (40, 2 + seed as usize % 7);
        let x = gaussian(&mut rng, n, m);
        let y = DVector::from_fn(n, |_, _| normal(&mut rng));
        let cfg = LassoConfig::for_problem(1, m, n);
        let fit = lasso_solve(&x, &y, 0.0, &DVector::from_element(m, 1.0), &cfg).unwrap();
        let (ols, _) = lstsq(&x, &y);
        worst = worst.max((fit.coefficients - ols).amax());
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("20 full-rank designs at lambda = 0; max gap to least squares {worst:.2e} (limit 1e-6)"),
    }
}

fn monomial_form(x: f64, k: usize) -> f64 {
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    (0..=k / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * fact(k) / (fact(m) * fact(k - 2 * m) * 2f64.powi(m as i32)) * x.powi((k - 2 * m) as i32)
        })
        .sum()
}

fn criterion_4() -> Outcome {
    let grid: Vec<f64> = (0..41).map(|i| -4.0 + 0.2 * i as f64).collect();
    let mut recurrence_bad = 0;
    let mut monomial_bad = 0;
    let mut fd_bad = Vec::new();
    let h = 1e-5;
    for k in 0..=8usize {
        for &x in &grid {
            let he = hermite_eval(x, k);
            if k >= 1 {
                let next = x * he - k as f64 * hermite_eval(x, k - 1);
                if (hermite_eval(x, k + 1) - next).abs() > 1e-10 * next.abs().max(1.0) {
                    recurrence_bad += 1;
                }
            }
            let direct = monomial_form(x, k);
            if (he - direct).abs() > 1e-10 * direct.abs().max(1.0) {
                monomial_bad += 1;
            }
            let fd = (hermite_eval(x + h, k) - hermite_eval(x - h, k)) / (2.0 * h);
            let err = (hermite_deriv(x, k) - fd).abs();
            if err > 1e-6 {
                fd_bad.push(format!("k={k} x={x:.1} err={err:.1e}"));
            }
        }
    }
    Outcome {
        pass: recurrence_bad == 0 && monomial_bad == 0 && fd_bad.is_empty(),
        detail: format!(
            "k <= 8 on 41 points in [-4, 4]: recurrence {recurrence_bad} misses, monomial form {monomial_bad} misses (1e-10 rel), \
             central difference h=1e-5 {} misses at 1e-6 abs{}",
            fd_bad.len(),
            if fd_bad.is_empty() {
                String::new()
            } else {
                format!(" [{}]; these are h^2/6 f''' truncation errors of the difference quotient", fd_bad.join(", "))
            }
        ),
    }
}

fn table1_settings() -> McSettings {
    McSettings {
        functionals: vec![THETA1],
        ..McSettings::new(vec![Estimator::PostDouble, Estimator::PostSingleII, Estimator::Oracle], 200)
    }
}

fn metrics(report: &McReport, est: Estimator) -> (f64, f64, f64, usize) {
    let row = report.row(THETA1, est).expect("estimator in report");
    (row.metrics.median_bias, row.metrics.mad, row.metrics.rp5, row.failures)
}

fn criterion_5() -> (Outcome, String, f64) {
    let start = Instant::now();
    let cfg = DgpConfig::new(Design::LowDim, 500, 1.0, 1.0, 20240501);
    let report = run_monte_carlo_with(&cfg, &table1_settings()).unwrap();
    let elapsed = secs(start.elapsed());
    let (pd_bias, pd_mad, pd_rp, pd_fail) = metrics(&report, Estimator::PostDouble);
    let (_, _, or_rp, or_fail) = metrics(&report, Estimator::Oracle);
    let (ps_bias, _, ps_rp, ps_fail) = metrics(&report, Estimator::PostSingleII);
    let gates = [
        ("Post-Double MAD in [0.05, 0.11]", within(pd_mad, 0.05, 0.11), pd_mad),
        ("Post-Double RP5 in [0.02, 0.15]", within(pd_rp, 0.02, 0.15), pd_rp),
        ("Oracle RP5 in [0.02, 0.11]", within(or_rp, 0.02, 0.11), or_rp),
        ("Post-Single II RP5 >= 0.15", ps_rp >= 0.15, ps_rp),
    ];
    let pass = gates.iter().all(|g| g.1) && elapsed < 900.0;
    let detail = format!(
        "low_dim n=500 sigma_v=1 sigma_eps=1, 200 reps: {}; Post-Double bias {pd_bias:.3}, Post-Single II bias {ps_bias:.3}; \
         failures {}/{}/{}; {elapsed:.1} s (limit 900 s)",
        gates
            .iter()
            .map(|(name, ok, v)| format!("{name}: {v:.3} {}", if *ok { "ok" } else { "MISS" }))
            .collect::<Vec<_>>()
            .join("; "),
        pd_fail,
        ps_fail,
        or_fail
    );
    (Outcome { pass, detail }, report.to_csv_string(), elapsed)
}

fn low_design_at_higher_noise() -> String {
    let cfg = DgpConfig::new(Design::LowDim, 500, 1.0, 2.0, 20240501);
    let report = run_monte_carlo_with(&cfg, &table1_settings()).unwrap();
    let (pd_bias, pd_mad, pd_rp, _) = metrics(&report, Estimator::PostDouble);
    let (or_bias, or_mad, or_rp, _) = metrics(&report, Estimator::Oracle);
    let (ps_bias, ps_mad, ps_rp, _) = metrics(&report, Estimator::PostSingleII);
    format!(
        "low_dim n=500 sigma_v=1 sigma_eps=2, 200 reps (bias, MAD, RP5): Post-Double {pd_bias:.3} {pd_mad:.3} {pd_rp:.3}; \
         Post-Single II {ps_bias:.3} {ps_mad:.3} {ps_rp:.3}; Oracle {or_bias:.3} {or_mad:.3} {or_rp:.3}"
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let cfg = DgpConfig::new(Design::HighDim, 500, 1.0, 1.0, 20240502);
    let settings = McSettings {
        functionals: vec![THETA1],
        ..McSettings::new(vec![Estimator::PostDouble, Estimator::PostSingleII], 100)
    };
    let report = run_monte_carlo_with(&cfg, &settings).unwrap();
    let elapsed = secs(start.elapsed());
    let (pd_bias, pd_mad, pd_rp, _) = metrics(&report, Estimator::PostDouble);
    let (ps_bias, ps_mad, ps_rp, _) = metrics(&report, Estimator::PostSingleII);
    let gates = [
        ("Post-Double |Med.Bias| <= 0.04", pd_bias.abs() <= 0.04, pd_bias),
        ("Post-Double RP5 in [0.01, 0.13]", within(pd_rp, 0.01, 0.13), pd_rp),
        ("Post-Single II Med.Bias <= -0.4", ps_bias <= -0.4, ps_bias),
        ("Post-Single II RP5 >= 0.9", ps_rp >= 0.9, ps_rp),
    ];
    Outcome {
        pass: gates.iter().all(|g| g.1) && elapsed < 1800.0,
        detail: format!(
            "high_dim n=500 dim_z=1000 sigma_v=1 sigma_eps=1, 100 reps: {}; MADs {pd_mad:.3}/{ps_mad:.3}; {elapsed:.1} s (limit 1800 s)",
            gates
                .iter()
                .map(|(name, ok, v)| format!("{name}: {v:.3} {}", if *ok { "ok" } else { "MISS" }))
                .collect::<Vec<_>>()
                .join("; ")
        ),
    }
}

fn random_fit(seed: u64) -> (PdsFit, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(3000 + seed);
    let n = 80 + (seed as usize % 5) * 20;
    let k = 1 + seed as usize % 6;
    let l = seed as usize % 4;
    let x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let spec = DictionarySpec::hermite_univariate(k);
    let p = spec.evaluate(&DMatrix::from_column_slice(n, 1, &x)).unwrap();
    let q = DMatrix::from_fn(n, l, |i, _| 0.5 * x[i] + normal(&mut rng));
    let y = DVector::from_fn(n, |i, _| x[i].sin() + (0.5 + x[i].abs()) * normal(&mut rng));
    let mut fit = final_ols(&p, &q, &y, (0..l).collect()).unwrap();
    fit.p_spec = Some(spec);
    (fit, x)
}

fn criterion_7() -> Outcome {
    let mut sym: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut min_v = f64::INFINITY;
    let mut ratio_gap: f64 = 0.0;
    for seed in 0..50u64 {
        let (fit, x) = random_fit(seed);
        let spec = FunctionalSpec::average_derivative(fit.p_spec.as_ref().unwrap(), &x).unwrap();
        let res = functional_estimate(&fit, &spec).unwrap();
        sym = sym
            .max((&res.omega_hat - res.omega_hat.transpose()).amax())
            .max((&res.sigma_hat - res.sigma_hat.transpose()).amax());
        min_eig = min_eig.min(res.sigma_hat.clone().symmetric_eigen().eigenvalues.min());
        min_v = min_v.min(res.v_hat);

        let n = fit.n();
        let idx: Vec<usize> = (0..2 * n).map(|i| i % n).collect();
        let y = &fit.p * &fit.beta_hat + with_intercept(&[&fit.controls]) * &fit.eta_hat + &fit.residuals;
        let mut twice = final_ols(&fit.p.select_rows(&idx), &fit.controls.select_rows(&idx), &y.select_rows(&idx), fit.selected.clone()).unwrap();
        twice.p_spec = fit.p_spec.clone();
        let xx: Vec<f64> = idx.iter().map(|&i| x[i]).collect();
        let spec2 = FunctionalSpec::average_derivative(fit.p_spec.as_ref().unwrap(), &xx).unwrap();
        let res2 = functional_estimate(&twice, &spec2).unwrap();
        ratio_gap = ratio_gap.max((res.se / res2.se - 2f64.sqrt()).abs());
    }
    Outcome {
        pass: sym <= 1e-12 && min_eig >= -1e-10 && min_v >= 0.0 && ratio_gap <= 1e-8,
        detail: format!(
            "50 fits: max asymmetry {sym:.1e} (1e-12), min Sigma eigenvalue {min_eig:.2e} (>= -1e-10), min V {min_v:.2e} (>= 0), \
             duplication se ratio off sqrt(2) by {ratio_gap:.1e} (1e-8)"
        ),
    }
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cfg = DgpConfig::new(Design::Unconfounded, 1000, 1.0, 1.0, 20240503);
    let settings = McSettings {
        functionals: vec![THETA1],
        ..McSettings::new(vec![Estimator::PostDouble, Estimator::Oracle], 500)
    };
    let report = run_monte_carlo_with(&cfg, &settings).unwrap();
    let cover = |e| {
        let row = report.row(THETA1, e).unwrap();
        (1.0 - row.metrics.rp5, row.failures)
    };
    let (pd, pd_fail) = cover(Estimator::PostDouble);
    let (or, or_fail) = cover(Estimator::Oracle);
    Outcome {
        pass: within(pd, 0.91, 0.99) && within(or, 0.91, 0.99) && pd_fail == 0 && or_fail == 0,
        detail: format!(
            "no confounding, n=1000, 500 reps: Post-Double coverage {pd:.3}, Oracle coverage {or:.3} (target 0.95 +/- 0.04); \
             failures {pd_fail}/{or_fail}; {:.1} s",
            secs(start.elapsed())
        ),
    }
}

fn report(id: usize, title: &str, outcome: &Outcome) {
    println!(
        "criterion {id} ({title}): {} | {}",
        if outcome.pass { "PASS" } else { "FAIL" },
        outcome.detail
    );
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; only a name filter is honoured.
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |id: usize| filter.as_deref().is_none_or(|f| f == id.to_string() || f == format!("criterion_{id}"));
    let mut all = true;
    let run = |id: usize, title: &str, f: &dyn Fn() -> Outcome| -> bool {
        if !wanted(id) {
            return true;
        }
        let outcome = f();
        report(id, title, &outcome);
        outcome.pass
    };
    all &= run(1, "lasso KKT suite", &criterion_1);
    all &= run(2, "lasso sign-pattern oracle", &criterion_2);
    all &= run(3, "OLS limit", &criterion_3);
    all &= run(4, "basis identities", &criterion_4);
    let mut first_csv = None;
    if wanted(5) || wanted(9) {
        let (first, csv, _) = criterion_5();
        if wanted(5) {
            report(5, "low-dimensional design, average derivative", &first);
            all &= first.pass;
            println!("  info (not a gate): {}", low_design_at_higher_noise());
        }
        first_csv = Some(csv);
    }
    all &= run(6, "high-dimensional design, average derivative", &criterion_6);
    all &= run(7, "variance estimator properties", &criterion_7);
    all &= run(8, "coverage without confounding", &criterion_8);
    if let (true, Some(csv_a)) = (wanted(9), first_csv) {
        let (_, csv_b, _) = criterion_5();
        let outcome = Outcome {
            pass: csv_a == csv_b,
            detail: format!(
                "two seeded runs of criterion 5: {} vs {} bytes of CSV, {}",
                csv_a.len(),
                csv_b.len(),
                if csv_a == csv_b { "byte-identical" } else { "different" }
            ),
        };
        report(9, "determinism", &outcome);
        all &= outcome.pass;
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
