//! Normal SABR (beta = 0) implied normal volatility and three-pivot
//! calibration.

use crate::error::{domain, Error, Result};
use crate::solver::nelder_mead_bounded;
use crate::vanna_volga::Pivot;

pub const RHO_BOUND: f64 = 0.999;
pub const NU_MAX: f64 = 10.0;

/// Below this `|zeta|` the ratio `zeta/x(zeta)` is taken from its series.
const ZETA_SERIES: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SABRParams {
    /// Initial normal volatility.
    pub alpha: f64,
    /// Volatility of volatility.
    pub nu: f64,
    pub rho: f64,
}

impl SABRParams {
    pub fn new(alpha: f64, nu: f64, rho: f64) -> Result<Self> {
        let p = Self { alpha, nu, rho };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(domain(format!("alpha must be > 0, got {}", self.alpha)));
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(domain(format!("nu must be >= 0, got {}", self.nu)));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(domain(format!("rho must lie in (-1, 1), got {}", self.rho)));
        }
        Ok(())
    }
}

/// `x(zeta) = log((sqrt(1 - 2 rho zeta + zeta^2) - rho + zeta) / (1 - rho))`.
///
/// Uses `x(zeta, rho) = -x(-zeta, -rho)` to evaluate only non-negative
/// `zeta`, where the argument is written for `log1p` without cancellation.
pub fn x_of_zeta(zeta: f64, rho: f64) -> f64 {
    if zeta < 0.0 {
        return -x_of_zeta(-zeta, -rho);
    }
    let root = (1.0 - 2.0 * rho * zeta + zeta * zeta).sqrt();
    let num = zeta * (root + zeta - rho + 1.0 - rho);
    (num / ((root + 1.0) * (1.0 - rho))).ln_1p()
}

/// `zeta / x(zeta)`, with the series `1 - rho zeta/2 + (2 - 3 rho^2) zeta^2/12`
/// near zero.
pub fn zeta_ratio(zeta: f64, rho: f64) -> f64 {
    if zeta.abs() < ZETA_SERIES {
        1.0 - 0.5 * rho * zeta + (2.0 - 3.0 * rho * rho) * zeta * zeta / 12.0
    } else {
        zeta / x_of_zeta(zeta, rho)
    }
}

pub fn sabr_normal_vol(params: &SABRParams, forward: f64, expiry: f64, strike: f64) -> Result<f64> {
    params.validate()?;
    if !(expiry > 0.0) {
        return Err(domain("expiry must be > 0"));
    }
    Ok(vol_unchecked(params, forward, expiry, strike))
}

fn vol_unchecked(p: &SABRParams, forward: f64, expiry: f64, strike: f64) -> f64 {
    let zeta = p.nu / p.alpha * (forward - strike);
    let correction = 1.0 + (2.0 - 3.0 * p.rho * p.rho) / 24.0 * p.nu * p.nu * expiry;
    p.alpha * zeta_ratio(zeta, p.rho) * correction
}

#[derive(Debug, Clone, PartialEq)]
pub struct SABRFit {
    pub params: SABRParams,
    /// Model minus market vol at each pivot.
    pub residuals: [f64; 3],
    pub iterations: usize,
}

impl SABRFit {
    /// Root of the summed squared residuals.
    pub fn residual_norm(&self) -> f64 {
        self.residuals.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// Fits `(alpha, nu, rho)` to three pivots by least squares.
///
/// A bounded simplex search runs from a deterministic grid of `(nu, rho)`
/// starts, with alpha seeded so the pivot nearest the forward is matched at
/// the money; the best run is restarted until it stops improving.
pub fn sabr_fit(forward: f64, expiry: f64, pivots: &[Pivot; 3]) -> Result<SABRFit> {
    if !(expiry > 0.0) {
        return Err(domain("expiry must be > 0"));
    }
    if !(pivots[0].strike < pivots[1].strike && pivots[1].strike < pivots[2].strike) {
        return Err(domain("pivot strikes must be strictly increasing"));
    }
    if pivots.iter().any(|p| !(p.vol > 0.0)) {
        return Err(domain("pivot vols must be > 0"));
    }
    let atm = pivots
        .iter()
        .min_by(|a, b| (a.strike - forward).abs().total_cmp(&(b.strike - forward).abs()))
        .expect("three pivots");
    // alpha is searched as a multiple of the ATM vol so all coordinates are O(1).
    let scale = atm.vol;
    let objective = |x: &[f64]| -> f64 {
        let p = SABRParams {
            alpha: x[0] * scale,
            nu: x[1],
            rho: x[2],
        };
        pivots
            .iter()
            .map(|q| {
                let r = (vol_unchecked(&p, forward, expiry, q.strike) - q.vol) / scale;
                r * r
            })
            .sum()
    };
    let lower = [1e-6, 0.0, -RHO_BOUND];
    let upper = [100.0, NU_MAX, RHO_BOUND];

    let mut best: Option<(Vec<f64>, f64, usize)> = None;
    for &nu in &[0.05, 0.3, 0.8, 2.0] {
        for &rho in &[-0.6, 0.0, 0.6] {
            let correction = 1.0 + (2.0 - 3.0 * rho * rho) / 24.0 * nu * nu * expiry;
            let start = [1.0 / correction, nu, rho];
            let r = nelder_mead_bounded(
                objective,
                &start,
                &[0.05, 0.5 * nu.max(0.1), 0.2],
                &lower,
                &upper,
                1e-15,
                4000,
            );
            if r.value.is_finite() && best.as_ref().is_none_or(|b| r.value < b.1) {
                best = Some((r.x, r.value, r.iterations));
            }
        }
    }
    let (mut x, mut value, mut iterations) =
        best.ok_or_else(|| Error::CalibrationFailure("no start produced a finite objective".into()))?;
    for _ in 0..50 {
        let r = nelder_mead_bounded(
            objective,
            &x,
            &[0.01, 0.05 * x[1].max(0.02), 0.02],
            &lower,
            &upper,
            1e-16,
            4000,
        );
        iterations += r.iterations;
        let improved = r.value < value * (1.0 - 1e-6);
        if r.value < value {
            x = r.x;
            value = r.value;
        }
        if !improved || value < 1e-30 {
            break;
        }
    }
    let params = SABRParams {
        alpha: x[0] * scale,
        nu: x[1],
        rho: x[2],
    };
    let residuals = pivots.map(|q| vol_unchecked(&params, forward, expiry, q.strike) - q.vol);
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::CalibrationFailure("non-finite residual at optimum".into()));
    }
    Ok(SABRFit {
        params,
        residuals,
        iterations,
    })
}
