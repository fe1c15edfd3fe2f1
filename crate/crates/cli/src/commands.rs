//! Subcommand implementations. Each writes its primary output to `out` and
//! diagnostics to `err`.

use std::io::Write;

use normalvv::bachelier::greeks;
use normalvv::density::{self, DensityGrid};
use normalvv::implied_vol::implied_normal_vol;
use normalvv::sabr::{sabr_fit, sabr_normal_vol, SABRFit};
use normalvv::vanna_volga::{
    calibrate_reference_vol, vv_smile_exact, vv_smile_first_order, vv_smile_second_order,
    SmileValue,
};
use normalvv::{Error, OptionKind, OptionSpec, Pivot};
use rayon::prelude::*;
use serde_json::json;

use crate::format::{json_num, num};
use crate::scenario::{with_df_hint, Method, Scenario};
use crate::CliError;

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn option_spec(
    forward: f64,
    strike: f64,
    expiry: f64,
    df: f64,
    put: bool,
) -> Result<OptionSpec, CliError> {
    let kind = if put { OptionKind::Put } else { OptionKind::Call };
    OptionSpec::new(forward, strike, expiry, df, kind)
        .map_err(|e| CliError::Usage(with_df_hint(e.to_string(), df)))
}

pub fn price(
    out: &mut dyn Write,
    forward: f64,
    strike: f64,
    expiry: f64,
    df: f64,
    vol: f64,
    put: bool,
) -> Result<(), CliError> {
    let spec = option_spec(forward, strike, expiry, df, put)?;
    let g = greeks(&spec, vol).map_err(|e| CliError::Usage(e.to_string()))?;
    let record = json!({
        "kind": if put { "put" } else { "call" },
        "price": json_num(g.price),
        "delta": json_num(g.delta_forward),
        "vega": json_num(g.vega),
        "gamma": json_num(g.gamma_forward),
        "vanna": json_num(g.vanna_forward),
        "volga": json_num(g.volga),
        "moneyness": json_num(g.moneyness),
    });
    writeln!(out, "{record}").map_err(io)
}

pub fn invert(
    out: &mut dyn Write,
    price: f64,
    forward: f64,
    strike: f64,
    expiry: f64,
    df: f64,
    put: bool,
) -> Result<(), CliError> {
    let spec = option_spec(forward, strike, expiry, df, put)?;
    match implied_normal_vol(price, &spec) {
        Ok(vol) => writeln!(out, "{}", json!({ "vol": json_num(vol) })).map_err(io),
        Err(e @ Error::ArbitrageViolation { .. }) => Err(CliError::Numerical {
            message: e.to_string(),
            payload: json!({
                "error": "arbitrage_violation",
                "price": json_num(price),
                "intrinsic": json_num(spec.intrinsic()),
            }),
        }),
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}

/// One CSV row of a smile grid.
struct Row {
    strike: f64,
    vol: Option<f64>,
    method: Method,
    reference_vol: Option<f64>,
    status: &'static str,
}

fn vv_rows(scenario: &Scenario, method: Method, reference: f64) -> Result<Vec<Row>, CliError> {
    let set = scenario.pivot_set(Some(reference))?;
    scenario
        .strikes()
        .par_iter()
        .map(|&k| {
            let (vol, status) = match method {
                Method::VvFirst => (Some(vv_smile_first_order(&set, k)), "ok"),
                Method::VvSecond => match vv_smile_second_order(&set, k) {
                    Ok(v) => (Some(v), "ok"),
                    Err(Error::NegativeDiscriminant { .. }) => {
                        (None, "failed_negative_discriminant")
                    }
                    Err(e) => return Err(CliError::numerical(e)),
                },
                Method::VvExact => match vv_smile_exact(&set, k).map_err(CliError::numerical)? {
                    SmileValue::Vol(v) => (Some(v), "ok"),
                    SmileValue::FailedBelowIntrinsic { .. } => (None, "failed_below_intrinsic"),
                },
                Method::Sabr => unreachable!("sabr rows are built separately"),
            };
            Ok(Row {
                strike: k,
                vol,
                method,
                reference_vol: Some(reference),
                status,
            })
        })
        .collect()
}

fn fit_sabr(scenario: &Scenario) -> Result<SABRFit, CliError> {
    sabr_fit(scenario.forward, scenario.expiry, &scenario.pivots()).map_err(|e| {
        CliError::Numerical {
            message: e.to_string(),
            payload: json!({ "error": "calibration_failure", "message": e.to_string() }),
        }
    })
}

fn sabr_rows(scenario: &Scenario) -> Result<Vec<Row>, CliError> {
    let fit = fit_sabr(scenario)?;
    scenario
        .strikes()
        .par_iter()
        .map(|&k| {
            let v = sabr_normal_vol(&fit.params, scenario.forward, scenario.expiry, k)
                .map_err(CliError::numerical)?;
            Ok(Row {
                strike: k,
                vol: Some(v),
                method: Method::Sabr,
                reference_vol: None,
                status: "ok",
            })
        })
        .collect()
}

/// Which curves a smile subcommand emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmileKind {
    VannaVolga,
    Sabr,
    Compare,
}

pub fn smile(
    out: &mut dyn Write,
    scenario: &Scenario,
    kind: SmileKind,
    method_override: &[Method],
) -> Result<(), CliError> {
    let listed: Vec<Method> = if method_override.is_empty() {
        scenario.methods.clone()
    } else {
        method_override.to_vec()
    };
    let mut vv: Vec<Method> = listed.iter().copied().filter(Method::is_vv).collect();
    if vv.is_empty() {
        vv.push(Method::VvExact);
    }
    let (with_vv, with_sabr) = match kind {
        SmileKind::VannaVolga => (true, false),
        SmileKind::Sabr => (false, true),
        SmileKind::Compare => (true, true),
    };
    let mut rows = Vec::new();
    if with_vv {
        for &m in &vv {
            for r in scenario.reference_vols() {
                rows.extend(vv_rows(scenario, m, r)?);
            }
        }
    }
    if with_sabr {
        rows.extend(sabr_rows(scenario)?);
    }
    writeln!(out, "strike,vol,method,reference_vol,status").map_err(io)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            num(r.strike),
            r.vol.map(num).unwrap_or_default(),
            r.method.as_str(),
            r.reference_vol.map(num).unwrap_or_default(),
            r.status
        )
        .map_err(io)?;
    }
    Ok(())
}

pub fn vv_fit(out: &mut dyn Write, scenario: &Scenario) -> Result<(), CliError> {
    let quote = scenario
        .fourth_quote
        .ok_or_else(|| CliError::Usage("vv-fit needs a fourth_quote in the scenario".into()))?;
    let base = scenario.pivot_set(None)?;
    let quote = Pivot::new(quote.strike, quote.vol);
    match calibrate_reference_vol(&base, quote) {
        Ok(reference) => {
            let set = base.with_reference_vol(reference).map_err(CliError::numerical)?;
            let fitted = vv_smile_exact(&set, quote.strike)
                .map_err(CliError::numerical)?
                .vol();
            let record = json!({
                "method": "vv",
                "reference_vol": json_num(reference),
                "fourth_quote": { "strike": json_num(quote.strike), "vol": json_num(quote.vol) },
                "fitted_vol": fitted.map(json_num),
                "residual": fitted.map(|v| json_num(v - quote.vol)),
            });
            writeln!(out, "{record}").map_err(io)
        }
        Err(Error::NoRoot {
            lo,
            hi,
            residual_lo,
            residual_hi,
        }) => Err(CliError::Numerical {
            message: format!("no reference vol in [{lo}, {hi}] reproduces the fourth quote"),
            payload: json!({
                "error": "no_root",
                "bracket": [json_num(lo), json_num(hi)],
                "residual_lo": residual_lo.map(json_num),
                "residual_hi": residual_hi.map(json_num),
            }),
        }),
        Err(e @ Error::Domain(_)) => Err(CliError::Usage(e.to_string())),
        Err(e) => Err(CliError::numerical(e)),
    }
}

pub fn sabr_fit_cmd(out: &mut dyn Write, scenario: &Scenario) -> Result<(), CliError> {
    let fit = fit_sabr(scenario)?;
    let record = json!({
        "method": "sabr",
        "alpha": json_num(fit.params.alpha),
        "nu": json_num(fit.params.nu),
        "rho": json_num(fit.params.rho),
        "residuals": fit.residuals.map(json_num),
        "residual_norm": json_num(fit.residual_norm()),
    });
    writeln!(out, "{record}").map_err(io)
}

pub fn density(
    out: &mut dyn Write,
    err: &mut dyn Write,
    scenario: &Scenario,
    delta_override: Option<f64>,
    sidecar: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let market = scenario.market()?;
    let spec = scenario.density;
    let (def_lo, def_hi) = density::default_window(&market, scenario.atm_vol());
    let lo = spec.min.unwrap_or(def_lo);
    let hi = spec.max.unwrap_or(def_hi);
    let step = spec.step.unwrap_or(scenario.grid.step);
    let grid = density::uniform_grid(lo, hi, step).map_err(|e| CliError::Usage(e.to_string()))?;
    let delta = delta_override.or(spec.delta).unwrap_or(step / 10.0);
    if !(delta > 0.0) {
        return Err(CliError::Usage(format!("density delta must be > 0, got {delta}")));
    }

    let mut curves: Vec<(DensityGrid, Option<f64>)> = Vec::new();
    let wants_sabr = scenario.methods.contains(&Method::Sabr);
    let wants_vv = scenario.methods.iter().any(Method::is_vv) || scenario.methods.is_empty();
    if wants_vv {
        let reference = spec
            .reference_vol
            .unwrap_or_else(|| scenario.reference_vols()[0]);
        let set = scenario.pivot_set(Some(reference))?;
        let d = density::vv_density(&set, &grid, delta).map_err(CliError::numerical)?;
        curves.push((d, Some(reference)));
    }
    if wants_sabr {
        let fit = fit_sabr(scenario)?;
        let d = density::sabr_density(&fit.params, &market, &grid, delta)
            .map_err(CliError::numerical)?;
        curves.push((d, None));
    }

    writeln!(out, "x,density,method").map_err(io)?;
    let mut diagnostics = Vec::new();
    for (d, reference) in &curves {
        for (x, v) in d.points.iter().zip(&d.values) {
            writeln!(
                out,
                "{},{},{}",
                num(*x),
                v.map(num).unwrap_or_default(),
                d.source.as_str()
            )
            .map_err(io)?;
        }
        let g = d.diagnostics;
        diagnostics.push(json!({
            "method": d.source.as_str(),
            "reference_vol": reference.map(json_num),
            "delta": json_num(d.delta),
            "integral": json_num(g.integral),
            "mean": json_num(g.mean),
            "min": json_num(g.min),
            "modes": g.modes,
            "gaps": g.gaps,
        }));
    }
    let line = serde_json::Value::Array(diagnostics).to_string();
    writeln!(err, "{line}").map_err(io)?;
    if let Some(path) = sidecar {
        std::fs::write(path, format!("{line}\n"))
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

