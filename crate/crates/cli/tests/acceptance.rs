//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

use std::path::PathBuf;
use std::process::Command;

use normalvv::bachelier::{greeks, price, put_price};
use normalvv::density::{density_from_prices, uniform_grid, vv_density, DensitySource};
use normalvv::implied_vol::implied_normal_vol;
use normalvv::normal::pdf;
use normalvv::sabr::{sabr_fit, sabr_normal_vol, SABRParams};
use normalvv::vanna_volga::{
    calibrate_reference_vol, verify_risk_elimination, vv_smile_exact, vv_smile_first_order,
    vv_smile_second_order, vv_weights, SmileValue,
};
use normalvv::{Market, OptionKind, OptionSpec, Pivot, PivotSet};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn pivots(f: f64, vols: [f64; 3], reference: f64) -> PivotSet {
    PivotSet::new(
        Market::new(f, 1.0, 1.0).unwrap(),
        [
            Pivot::new(-50.0, vols[0]),
            Pivot::new(0.0, vols[1]),
            Pivot::new(50.0, vols[2]),
        ],
        Some(reference),
    )
    .unwrap()
}

fn figure_grid() -> Vec<f64> {
    uniform_grid(-150.0, 150.0, 5.0).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// AC1: Analytic Greeks vs central differences (relative 1e-6) and put-call
/// parity (1e-13) on 1000 random options.
fn pricing_and_greeks() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let (mut worst_greek, mut worst_parity) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let f = rng.gen_range(-100.0..100.0);
        let s = rng.gen_range(1.0..200.0);
        let t = rng.gen_range(0.05..30.0);
        let df = rng.gen_range(0.5..=1.0);
        let d = rng.gen_range(-3.0..3.0);
        let sd = s * f64::sqrt(t);
        let k = f - d * sd;
        let spec = OptionSpec::call(f, k, t, df).unwrap();
        let g = greeks(&spec, s).unwrap();
        let p = |ff: f64, ss: f64| price(&OptionSpec::call(ff, k, t, df).unwrap(), ss).unwrap();
        // Central differences with steps 1e-3 of the natural scales
        // sigma*sqrt(T) and sigma, Richardson-extrapolated from h and h/2.
        let (hf, hs) = (1e-3 * sd, 1e-3 * s);
        let central = |h: f64| {
            let (a, b) = (h * hf, h * hs);
            [
                (p(f + a, s) - p(f - a, s)) / (2.0 * a),
                (p(f, s + b) - p(f, s - b)) / (2.0 * b),
                (p(f + a, s) - 2.0 * p(f, s) + p(f - a, s)) / (a * a),
                (p(f + a, s + b) - p(f + a, s - b) - p(f - a, s + b) + p(f - a, s - b))
                    / (4.0 * a * b),
                (p(f, s + b) - 2.0 * p(f, s) + p(f, s - b)) / (b * b),
            ]
        };
        let (coarse, fine) = (central(2.0), central(1.0));
        let fd: Vec<f64> = (0..5).map(|i| (4.0 * fine[i] - coarse[i]) / 3.0).collect();
        let analytic = [g.delta_forward, g.vega, g.gamma_forward, g.vanna_forward, g.volga];
        // Greeks that pass through zero (vanna, volga at d = 0) are measured
        // against their natural magnitude vega/(sigma sqrt T) and vega/sigma.
        let scale = [
            df,
            g.vega,
            g.gamma_forward,
            g.vega / (s * t.sqrt()),
            g.vega / s,
        ];
        for i in 0..5 {
            let denom = analytic[i].abs().max(scale[i]);
            worst_greek = worst_greek.max((analytic[i] - fd[i]).abs() / denom);
        }
        let c = g.price;
        let put = put_price(&spec, s).unwrap();
        let parity = (c - put - df * (f - k)).abs() / c.abs().max(put.abs()).max(1.0);
        worst_parity = worst_parity.max(parity);
    }
    check(
        worst_greek <= 1e-6 && worst_parity <= 1e-13,
        format!("max greek rel err {worst_greek:.2e} (tol 1e-6), max parity err {worst_parity:.2e} (tol 1e-13)"),
    )
}

/// AC2: Inversion round-trip to 1e-10 over the vol/expiry/moneyness grid.
/// Prices are quoted on the out-of-the-money side.
fn inversion_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for &s in &[1.0, 5.0, 25.0, 50.0, 100.0, 500.0] {
        for &t in &[0.05, 0.25, 1.0, 5.0, 30.0] {
            for i in 0..=600 {
                let d = -6.0 + 12.0 * i as f64 / 600.0;
                let k = -d * s * f64::sqrt(t);
                let kind = if k < 0.0 { OptionKind::Put } else { OptionKind::Call };
                let spec = OptionSpec::new(0.0, k, t, 1.0, kind).unwrap();
                let got = implied_normal_vol(price(&spec, s).unwrap(), &spec).unwrap();
                worst = worst.max((got - s).abs() / s);
                count += 1;
            }
        }
    }
    check(worst <= 1e-10, format!("{count} points, max rel err {worst:.2e} (tol 1e-10)"))
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= m * a[col][c];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// AC3: Risk-constraint residuals <= 1e-12 relative to the target vega and
/// agreement with a generic 3x3 solve to 1e-12, over 1000 random draws.
fn weight_system() -> Outcome {
    let mut rng = StdRng::seed_from_u64(3);
    let (mut worst_res, mut worst_solve) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let f = rng.gen_range(-50.0..50.0);
        let t = rng.gen_range(0.25..5.0);
        let reference = rng.gen_range(20.0..100.0);
        let sd = reference * f64::sqrt(t);
        let k1 = f - rng.gen_range(0.3..1.5) * sd;
        let k2 = f + rng.gen_range(-0.2..0.2) * sd;
        let k3 = f + rng.gen_range(0.3..1.5) * sd;
        let vols = [0, 1, 2].map(|_| rng.gen_range(20.0..100.0));
        let set = PivotSet::new(
            Market::new(f, t, rng.gen_range(0.8..=1.0)).unwrap(),
            [Pivot::new(k1, vols[0]), Pivot::new(k2, vols[1]), Pivot::new(k3, vols[2])],
            Some(reference),
        )
        .unwrap();
        let k0 = f + rng.gen_range(-2.0..2.0) * sd;
        let r = verify_risk_elimination(&set, k0).unwrap();
        worst_res = worst_res.max(r.max_relative());

        let w = vv_weights(&set, k0).unwrap();
        let (y, d) = (w.pivot_vegas, w.pivot_moneyness);
        let a = [
            [y[0], y[1], y[2]],
            [y[0] * d[0], y[1] * d[1], y[2] * d[2]],
            [y[0] * d[0] * d[0], y[1] * d[1] * d[1], y[2] * d[2] * d[2]],
        ];
        let (y0, d0) = (w.target_vega, w.target_moneyness);
        let x = solve3(a, [y0, y0 * d0, y0 * d0 * d0]);
        for i in 0..3 {
            worst_solve = worst_solve.max((x[i] - w.hedge[i]).abs() / w.hedge[i].abs().max(1.0));
        }
    }
    check(
        worst_res <= 1e-12 && worst_solve <= 1e-12,
        format!("max residual/Y0 {worst_res:.2e}, max |w - solve| {worst_solve:.2e} (tol 1e-12)"),
    )
}

/// AC4: All three constructions reproduce the pivots.
fn interpolation() -> Outcome {
    let mut worst = [0.0f64; 3];
    let sets = [
        ([51.0, 50.0, 52.0], [40.0, 45.0, 50.0, 55.0, 60.0].as_slice()),
        ([48.0, 50.0, 49.0], [40.0, 50.0, 60.0].as_slice()),
        ([45.0, 50.0, 45.0], [30.0, 50.0].as_slice()),
    ];
    for (vols, refs) in sets {
        for &r in refs {
            let set = pivots(0.0, vols, r);
            for p in set.pivots() {
                let e = vv_smile_exact(&set, p.strike).unwrap().vol().unwrap();
                let s = vv_smile_second_order(&set, p.strike).unwrap();
                worst[0] = worst[0].max((vv_smile_first_order(&set, p.strike) - p.vol).abs());
                worst[1] = worst[1].max((s - p.vol).abs());
                worst[2] = worst[2].max((e - p.vol).abs());
            }
        }
    }
    check(
        worst[0] <= 1e-12 && worst[1] <= 1e-9 && worst[2] <= 1e-9,
        format!(
            "first {:.1e} (tol 1e-12), second {:.1e}, exact {:.1e} (tol 1e-9)",
            worst[0], worst[1], worst[2]
        ),
    )
}

/// AC5: Scenario 1: VV and SABR agree within 0.5 on [-50, 50]; wings at
/// |K| = 150 rise with the reference vol.
fn scenario_one() -> Outcome {
    let vols = [51.0, 50.0, 52.0];
    let fit = sabr_fit(0.0, 1.0, pivots(0.0, vols, 50.0).pivots()).unwrap();
    let refs = [40.0, 45.0, 50.0, 55.0, 60.0];
    let mut gap = 0.0f64;
    let mut wings: Vec<(f64, f64)> = Vec::new();
    for &r in &refs {
        let set = pivots(0.0, vols, r);
        for k in uniform_grid(-50.0, 50.0, 1.0).unwrap() {
            let vv = vv_smile_exact(&set, k).unwrap().vol().unwrap();
            let sabr = sabr_normal_vol(&fit.params, 0.0, 1.0, k).unwrap();
            gap = gap.max((vv - sabr).abs());
        }
        let wing = |k| vv_smile_exact(&set, k).unwrap().vol().unwrap_or(f64::NAN);
        wings.push((wing(-150.0), wing(150.0)));
    }
    let increasing = wings.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
    check(
        gap <= 0.5 && increasing,
        format!("max |VV - SABR| on [-50,50] {gap:.3} (tol 0.5); wings at +/-150 by ref {wings:.2?}"),
    )
}

/// AC6: Scenario 2 (frown): SABR misfit >= 0.1, VV exact on pivots, ref 60
/// fails at some |K| >= 100, ref 40 succeeds on [-150, 150].
fn scenario_two() -> Outcome {
    let vols = [48.0, 50.0, 49.0];
    let fit = sabr_fit(0.0, 1.0, pivots(0.0, vols, 50.0).pivots()).unwrap();
    let sabr_misfit = fit.residuals.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut pivot_err = 0.0f64;
    for r in [40.0, 50.0, 60.0] {
        let set = pivots(0.0, vols, r);
        for p in set.pivots() {
            let v = vv_smile_exact(&set, p.strike).unwrap().vol().unwrap();
            pivot_err = pivot_err.max((v - p.vol).abs());
        }
    }
    let high = pivots(0.0, vols, 60.0);
    let failed_wing = figure_grid().iter().any(|&k| {
        k.abs() >= 100.0
            && matches!(vv_smile_exact(&high, k).unwrap(), SmileValue::FailedBelowIntrinsic { .. })
    });
    let low = pivots(0.0, vols, 40.0);
    let low_ok = figure_grid()
        .iter()
        .all(|&k| vv_smile_exact(&low, k).unwrap().vol().is_some());
    check(
        sabr_misfit >= 0.1 && pivot_err <= 1e-9 && failed_wing && low_ok,
        format!(
            "SABR max residual {sabr_misfit:.3} (>= 0.1), VV pivot err {pivot_err:.1e}, \
             ref 60 wing failure {failed_wing}, ref 40 complete {low_ok}"
        ),
    )
}

/// AC7: Densities: flat smile vs normal pdf, scenario 3 non-negative,
/// scenario 4 bimodal and normalised.
fn densities() -> Outcome {
    let m = Market::new(0.0, 1.0, 1.0).unwrap();
    let grid = uniform_grid(-200.0, 200.0, 1.0).unwrap();
    let flat = density_from_prices(
        |k, kind| price(&m.option(k, kind), 50.0).ok(),
        &m,
        &grid,
        0.01,
        DensitySource::Custom,
    )
    .unwrap();
    let sup = grid
        .iter()
        .zip(&flat.values)
        .map(|(&x, v)| (v.unwrap() - pdf(x / 50.0) / 50.0).abs())
        .fold(0.0f64, f64::max);
    let s3 = vv_density(&pivots(0.0, [48.0, 50.0, 49.0], 40.0), &grid, 0.1).unwrap();
    let s4 = vv_density(&pivots(0.0, [45.0, 50.0, 45.0], 30.0), &grid, 0.1).unwrap();
    let d4 = s4.diagnostics;
    check(
        sup <= 1e-6 && s3.diagnostics.min >= 0.0 && d4.modes == 2 && (d4.integral - 1.0).abs() <= 1e-3,
        format!(
            "flat sup err {sup:.1e} (tol 1e-6); scenario 3 min {:.2e}; scenario 4 modes {} integral {:.6}",
            s3.diagnostics.min, d4.modes, d4.integral
        ),
    )
}

/// AC8: Fourth-quote calibration recovers a planted reference vol of 55.
fn four_pivot_calibration() -> Outcome {
    let planted = pivots(0.0, [51.0, 50.0, 52.0], 55.0);
    let quote = vv_smile_exact(&planted, 100.0).unwrap().vol().unwrap();
    let got = calibrate_reference_vol(&pivots(0.0, [51.0, 50.0, 52.0], 50.0), Pivot::new(100.0, quote))
        .map_err(|e| e.to_string())?;
    check((got - 55.0).abs() <= 1e-6, format!("recovered {got:.10} (tol 1e-6)"))
}

/// AC9: SABR second differences >= -1e-9 on the tested grids, and
/// self-calibration round-trip residual < 1e-8.
fn sabr_convexity_and_round_trip() -> Outcome {
    let grid = figure_grid();
    let mut cases: Vec<(String, SABRParams)> = vec![(
        "planted(50, 0.6, 0.2)".into(),
        SABRParams::new(50.0, 0.6, 0.2).unwrap(),
    )];
    for (name, vols) in [
        ("fit figure 1", [51.0, 50.0, 52.0]),
        ("fit frown 48/50/49", [48.0, 50.0, 49.0]),
        ("fit frown 45/50/45", [45.0, 50.0, 45.0]),
    ] {
        let fit = sabr_fit(0.0, 1.0, pivots(0.0, vols, 50.0).pivots()).unwrap();
        cases.push((name.into(), fit.params));
    }
    let mut report = Vec::new();
    let mut convex = true;
    for (name, p) in &cases {
        let v: Vec<f64> = grid.iter().map(|&k| sabr_normal_vol(p, 0.0, 1.0, k).unwrap()).collect();
        let min = v.windows(3).map(|w| w[0] + w[2] - 2.0 * w[1]).fold(f64::INFINITY, f64::min);
        convex &= min >= -1e-9;
        report.push(format!("{name} [nu={:.3}, rho={:.3}] min d2 {min:.2e}", p.nu, p.rho));
    }
    let planted = cases[0].1;
    let strikes = [-50.0, 0.0, 50.0];
    let sampled = strikes.map(|k| Pivot::new(k, sabr_normal_vol(&planted, 0.0, 1.0, k).unwrap()));
    let refit = sabr_fit(0.0, 1.0, &sampled).unwrap();
    let figure1 = cases[1].1;
    let sampled = strikes.map(|k| Pivot::new(k, sabr_normal_vol(&figure1, 0.0, 1.0, k).unwrap()));
    let idem = sabr_fit(0.0, 1.0, &sampled).unwrap();
    let round_trip = refit.residual_norm().max(idem.residual_norm());
    check(
        convex && round_trip < 1e-8,
        format!(
            "{}; round-trip residual {round_trip:.1e} (tol 1e-8)",
            report.join("; ")
        ),
    )
}

/// AC10: Bundled scenarios produce byte-identical output on repeated runs.
fn cli_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut runs = 0;
    for f in &files {
        for cmd in ["compare", "vv-smile", "sabr-smile", "sabr-fit", "vv-fit", "density"] {
            let go = || {
                Command::new(env!("CARGO_BIN_EXE_normalvv"))
                    .args([cmd, f.to_str().unwrap()])
                    .output()
                    .expect("binary runs")
            };
            let (a, b) = (go(), go());
            if a.stdout != b.stdout || a.stderr != b.stderr || a.status != b.status {
                return Err(format!("{cmd} {} differs between runs", f.display()));
            }
            runs += 1;
        }
    }
    check(files.len() == 4, format!("{} scenario files, {runs} command pairs identical", files.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1 pricing/greeks", pricing_and_greeks),
        ("AC2 inversion round-trip", inversion_round_trip),
        ("AC3 weight system", weight_system),
        ("AC4 pivot interpolation", interpolation),
        ("AC5 scenario 1 smile", scenario_one),
        ("AC6 scenario 2 frown", scenario_two),
        ("AC7 densities", densities),
        ("AC8 four-pivot calibration", four_pivot_calibration),
        ("AC9 SABR convexity/round-trip", sabr_convexity_and_round_trip),
        ("AC10 CLI determinism", cli_determinism),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
