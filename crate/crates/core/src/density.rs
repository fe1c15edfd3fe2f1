//! Risk-neutral densities from second strike differences of option prices.
//!
//! `f(x) = [C(x+h) + C(x-h) - 2C(x)] / (DF h^2)`. The second difference is
//! the same for calls and puts, so each triplet is priced with the
//! out-of-the-money option at `x`. That keeps the tails free of the
//! cancellation an in-the-money call would cause.

use crate::bachelier::{self, Market, OptionKind};
use crate::error::{domain, Result};
use crate::sabr::{sabr_normal_vol, SABRParams};
use crate::vanna_volga::{vv_price_of, PivotSet};

/// Two grid values closer than this are one plateau when counting modes.
pub const PLATEAU_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySource {
    VannaVolga,
    Sabr,
    /// Any other price function (flat vol, test oracles).
    Custom,
}

impl DensitySource {
    pub fn as_str(&self) -> &'static str {
        match self {
            DensitySource::VannaVolga => "vv",
            DensitySource::Sabr => "sabr",
            DensitySource::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    /// Trapezoidal integral of the density over the grid.
    pub integral: f64,
    /// Trapezoidal first moment, normalised by `integral`.
    pub mean: f64,
    pub min: f64,
    pub modes: usize,
    /// Grid points where the price function was undefined.
    pub gaps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub points: Vec<f64>,
    /// `None` marks points where a triplet price was unavailable.
    pub values: Vec<Option<f64>>,
    pub delta: f64,
    pub source: DensitySource,
    pub diagnostics: DensityDiagnostics,
}

/// Uniform grid from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(lo < hi) {
        return Err(domain("grid needs lo < hi and step > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// Default evaluation window `F +/- 4 sigma_atm sqrt(T)`.
pub fn default_window(market: &Market, atm_vol: f64) -> (f64, f64) {
    let half = 4.0 * atm_vol * market.expiry().sqrt();
    (market.forward() - half, market.forward() + half)
}

/// Density from an arbitrary price function `(strike, kind) -> price`.
pub fn density_from_prices<P>(
    price_fn: P,
    market: &Market,
    grid: &[f64],
    delta: f64,
    source: DensitySource,
) -> Result<DensityGrid>
where
    P: Fn(f64, OptionKind) -> Option<f64>,
{
    if !(delta > 0.0) {
        return Err(domain(format!("density step must be > 0, got {delta}")));
    }
    check_uniform(grid)?;
    let denom = market.discount() * delta * delta;
    let values = grid
        .iter()
        .map(|&x| {
            let kind = market.otm_option(x).kind();
            let up = price_fn(x + delta, kind)?;
            let mid = price_fn(x, kind)?;
            let down = price_fn(x - delta, kind)?;
            Some((up + down - 2.0 * mid) / denom)
        })
        .collect::<Vec<_>>();
    let diagnostics = density_diagnostics(grid, &values);
    Ok(DensityGrid {
        points: grid.to_vec(),
        values,
        delta,
        source,
        diagnostics,
    })
}

/// Density implied by the vanna-volga prices of `pivots`.
pub fn vv_density(pivots: &PivotSet, grid: &[f64], delta: f64) -> Result<DensityGrid> {
    density_from_prices(
        |k, kind| vv_price_of(pivots, k, kind).ok(),
        pivots.market(),
        grid,
        delta,
        DensitySource::VannaVolga,
    )
}

/// Density implied by Bachelier prices at the SABR smile.
pub fn sabr_density(
    params: &SABRParams,
    market: &Market,
    grid: &[f64],
    delta: f64,
) -> Result<DensityGrid> {
    params.validate()?;
    density_from_prices(
        |k, kind| {
            let vol = sabr_normal_vol(params, market.forward(), market.expiry(), k).ok()?;
            bachelier::price(&market.option(k, kind), vol).ok()
        },
        market,
        grid,
        delta,
        DensitySource::Sabr,
    )
}

fn check_uniform(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(domain("density grid needs at least two points"));
    }
    let step = grid[1] - grid[0];
    if !(step > 0.0) {
        return Err(domain("density grid must be strictly increasing"));
    }
    let scale = grid[0].abs().max(grid[grid.len() - 1].abs()).max(step);
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-9 * scale {
            return Err(domain("density grid must be uniformly spaced"));
        }
    }
    Ok(())
}

pub fn density_diagnostics(points: &[f64], values: &[Option<f64>]) -> DensityDiagnostics {
    let mut integral = 0.0;
    let mut first = 0.0;
    for i in 1..points.len() {
        if let (Some(a), Some(b)) = (values[i - 1], values[i]) {
            let h = points[i] - points[i - 1];
            integral += 0.5 * h * (a + b);
            first += 0.5 * h * (a * points[i - 1] + b * points[i]);
        }
    }
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    DensityDiagnostics {
        integral,
        mean: if integral != 0.0 { first / integral } else { f64::NAN },
        min: present.iter().copied().fold(f64::INFINITY, f64::min),
        modes: count_modes(values),
        gaps: values.len() - present.len(),
    }
}

/// Number of local maxima. Runs of values within [`PLATEAU_TOLERANCE`] of
/// each other count once; a run is a peak when it strictly exceeds both
/// neighbouring runs (or its single neighbour at the grid edge). Gaps split
/// the grid into independent segments.
pub fn count_modes(values: &[Option<f64>]) -> usize {
    values
        .split(|v| v.is_none())
        .map(|segment| {
            let mut runs: Vec<f64> = Vec::new();
            for v in segment.iter().flatten() {
                match runs.last() {
                    Some(last) if (v - last).abs() <= PLATEAU_TOLERANCE => {}
                    _ => runs.push(*v),
                }
            }
            if runs.len() == 1 {
                return 1;
            }
            (0..runs.len())
                .filter(|&i| {
                    let left = i == 0 || runs[i] > runs[i - 1];
                    let right = i + 1 == runs.len() || runs[i] > runs[i + 1];
                    left && right
                })
                .count()
        })
        .sum()
}
