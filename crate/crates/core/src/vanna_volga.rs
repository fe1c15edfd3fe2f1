//! Vanna-volga smile construction for normal volatilities.
//!
//! Three pivot quotes `(K_i, sigma_i)` and a flat reference volatility
//! determine a hedge portfolio whose weights cancel the vega, vanna and
//! volga of an option struck at `K_0`. The weights reduce to strike ratios
//! scaled by vegas, so the smile follows either from Taylor expansions
//! (first- and second-order) or from the exact vanna-volga price, inverted
//! back to a normal volatility.

use crate::bachelier::{self, Market, OptionKind};
use crate::error::{domain, Error, Result};
use crate::implied_vol::implied_normal_vol;
use crate::solver::brent;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pivot {
    pub strike: f64,
    pub vol: f64,
}

impl Pivot {
    pub fn new(strike: f64, vol: f64) -> Self {
        Self { strike, vol }
    }
}

/// Three market pivots with strictly increasing strikes plus the reference
/// volatility the expansions are taken around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotSet {
    market: Market,
    pivots: [Pivot; 3],
    reference_vol: f64,
}

impl PivotSet {
    /// Builds a pivot set. Without an explicit reference volatility the
    /// middle pivot's volatility is used.
    pub fn new(market: Market, pivots: [Pivot; 3], reference_vol: Option<f64>) -> Result<Self> {
        for p in &pivots {
            if !p.strike.is_finite() {
                return Err(domain("pivot strikes must be finite"));
            }
            if !(p.vol > 0.0 && p.vol.is_finite()) {
                return Err(domain(format!("pivot vol must be > 0, got {}", p.vol)));
            }
        }
        if !(pivots[0].strike < pivots[1].strike && pivots[1].strike < pivots[2].strike) {
            return Err(domain("pivot strikes must be strictly increasing"));
        }
        let reference_vol = reference_vol.unwrap_or(pivots[1].vol);
        if !(reference_vol > 0.0 && reference_vol.is_finite()) {
            return Err(domain(format!(
                "reference vol must be > 0, got {reference_vol}"
            )));
        }
        Ok(Self {
            market,
            pivots,
            reference_vol,
        })
    }

    pub fn market(&self) -> &Market {
        &self.market
    }
    pub fn pivots(&self) -> &[Pivot; 3] {
        &self.pivots
    }
    pub fn reference_vol(&self) -> f64 {
        self.reference_vol
    }

    pub fn with_reference_vol(&self, reference_vol: f64) -> Result<Self> {
        Self::new(self.market, self.pivots, Some(reference_vol))
    }

    fn moneyness(&self, strike: f64) -> f64 {
        (self.market.forward() - strike) / (self.reference_vol * self.market.expiry().sqrt())
    }
}

/// Hedge weights `w_i` and interpolation weights `y_i` for one target strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VVWeights {
    pub target_strike: f64,
    pub hedge: [f64; 3],
    pub interpolation: [f64; 3],
    /// Vega of the target option at the reference vol.
    pub target_vega: f64,
    pub pivot_vegas: [f64; 3],
    pub target_moneyness: f64,
    pub pivot_moneyness: [f64; 3],
}

/// Lagrange basis of the three pivot strikes evaluated at `k0`.
fn strike_ratios(k: [f64; 3], k0: f64) -> [f64; 3] {
    [
        (k[1] - k0) * (k[2] - k0) / ((k[1] - k[0]) * (k[2] - k[0])),
        (k[0] - k0) * (k[2] - k0) / ((k[0] - k[1]) * (k[2] - k[1])),
        (k[0] - k0) * (k[1] - k0) / ((k[0] - k[2]) * (k[1] - k[2])),
    ]
}

pub fn vv_weights(pivots: &PivotSet, k0: f64) -> Result<VVWeights> {
    if !k0.is_finite() {
        return Err(domain("target strike must be finite"));
    }
    let k = pivots.pivots.map(|p| p.strike);
    let m = &pivots.market;
    let sigma = pivots.reference_vol;
    let y = strike_ratios(k, k0);
    let y0 = bachelier::vega(&m.call(k0), sigma)?;
    let mut yi = [0.0; 3];
    for (v, &strike) in yi.iter_mut().zip(&k) {
        *v = bachelier::vega(&m.call(strike), sigma)?;
    }
    let mut hedge = [0.0; 3];
    for i in 0..3 {
        if y[i] == 0.0 {
            continue;
        }
        if yi[i] == 0.0 {
            return Err(domain(format!(
                "vega of the pivot at strike {} underflows to zero",
                k[i]
            )));
        }
        hedge[i] = y0 / yi[i] * y[i];
    }
    Ok(VVWeights {
        target_strike: k0,
        hedge,
        interpolation: y,
        target_vega: y0,
        pivot_vegas: yi,
        target_moneyness: pivots.moneyness(k0),
        pivot_moneyness: k.map(|s| pivots.moneyness(s)),
    })
}

/// First-order smile `sum y_i sigma_i`: the quadratic through the pivots.
/// Does not depend on the reference volatility.
pub fn vv_smile_first_order(pivots: &PivotSet, k0: f64) -> f64 {
    let y = strike_ratios(pivots.pivots.map(|p| p.strike), k0);
    y.iter().zip(&pivots.pivots).map(|(y, p)| y * p.vol).sum()
}

/// Second-order smile, the root of the quadratic in `sigma_0 - sigma`.
pub fn vv_smile_second_order(pivots: &PivotSet, k0: f64) -> Result<f64> {
    let w = vv_weights(pivots, k0)?;
    let sigma = pivots.reference_vol;
    let y = w.interpolation;
    let p = -sigma + (0..3).map(|i| y[i] * pivots.pivots[i].vol).sum::<f64>();
    let q: f64 = (0..3)
        .map(|i| {
            let d = w.pivot_moneyness[i];
            y[i] * d * d * (pivots.pivots[i].vol - sigma).powi(2)
        })
        .sum();
    let d0 = w.target_moneyness;
    if d0 == 0.0 {
        return Ok(sigma + p + q / (2.0 * sigma));
    }
    let d0sq = d0 * d0;
    let disc = sigma * sigma + d0sq * (2.0 * sigma * p + q);
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant {
            strike: k0,
            discriminant: disc,
        });
    }
    // (-sigma + sqrt(disc)) / d0^2, rationalised to avoid cancellation near ATM.
    Ok(sigma + (2.0 * sigma * p + q) / (sigma + disc.sqrt()))
}

/// Vanna-volga price of the option of `kind` struck at `k0`:
/// the flat-vol price plus the weighted pivot market-minus-model spreads.
pub fn vv_price_of(pivots: &PivotSet, k0: f64, kind: OptionKind) -> Result<f64> {
    let w = vv_weights(pivots, k0)?;
    let m = &pivots.market;
    let sigma = pivots.reference_vol;
    let mut price = bachelier::price(&m.option(k0, kind), sigma)?;
    for (wi, p) in w.hedge.iter().zip(&pivots.pivots) {
        if *wi != 0.0 {
            // Market-minus-model spreads are identical for calls and puts.
            let spec = m.option(p.strike, kind);
            price += wi * (bachelier::price(&spec, p.vol)? - bachelier::price(&spec, sigma)?);
        }
    }
    Ok(price)
}

/// Vanna-volga call price at `k0`. Not guaranteed to exceed intrinsic value.
pub fn vv_price(pivots: &PivotSet, k0: f64) -> Result<f64> {
    vv_price_of(pivots, k0, OptionKind::Call)
}

/// Exact vanna-volga smile value at one strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmileValue {
    Vol(f64),
    /// The vanna-volga call price does not exceed intrinsic value, so no
    /// normal volatility reproduces it.
    FailedBelowIntrinsic { call_price: f64, intrinsic: f64 },
}

impl SmileValue {
    pub fn vol(&self) -> Option<f64> {
        match *self {
            SmileValue::Vol(v) => Some(v),
            SmileValue::FailedBelowIntrinsic { .. } => None,
        }
    }
}

/// Implied normal volatility of the vanna-volga price at `k0`.
///
/// The out-of-the-money option is priced and inverted, which is equivalent to
/// the call by parity but keeps the time value free of cancellation.
pub fn vv_smile_exact(pivots: &PivotSet, k0: f64) -> Result<SmileValue> {
    let m = &pivots.market;
    let spec = m.otm_option(k0);
    let otm = vv_price_of(pivots, k0, spec.kind())?;
    match implied_normal_vol(otm, &spec) {
        Ok(v) => Ok(SmileValue::Vol(v)),
        Err(Error::ArbitrageViolation { .. }) => {
            let call = m.call(k0);
            let call_price = match spec.kind() {
                OptionKind::Call => otm,
                OptionKind::Put => otm + m.discount() * (m.forward() - k0),
            };
            Ok(SmileValue::FailedBelowIntrinsic {
                call_price,
                intrinsic: call.intrinsic(),
            })
        }
        Err(e) => Err(e),
    }
}

/// One row of a smile grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmilePoint {
    pub strike: f64,
    pub first_order: f64,
    /// `None` where the second-order discriminant is negative.
    pub second_order: Option<f64>,
    pub exact: SmileValue,
    pub call_price: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmileGrid {
    pub reference_vol: f64,
    pub points: Vec<SmilePoint>,
}

/// Evaluates all three constructions on `strikes`, which must be sorted.
pub fn smile_grid(pivots: &PivotSet, strikes: &[f64]) -> Result<SmileGrid> {
    if strikes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("grid strikes must be strictly increasing"));
    }
    let points = strikes
        .iter()
        .map(|&k| {
            Ok(SmilePoint {
                strike: k,
                first_order: vv_smile_first_order(pivots, k),
                second_order: match vv_smile_second_order(pivots, k) {
                    Ok(v) => Some(v),
                    Err(Error::NegativeDiscriminant { .. }) => None,
                    Err(e) => return Err(e),
                },
                exact: vv_smile_exact(pivots, k)?,
                call_price: vv_price(pivots, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SmileGrid {
        reference_vol: pivots.reference_vol,
        points,
    })
}

/// Number of samples used to locate a sign change before refining with Brent.
const SCAN_POINTS: usize = 64;

/// Finds the reference volatility for which the exact smile passes through a
/// fourth quote.
///
/// The bracket `[0.2 min sigma_i, 5 max sigma_i]` is scanned from below and
/// the first sign change of the residual is refined; if there is none the
/// bracket is widened once to `[0.1 min, 10 max]`. With several roots the
/// lowest one found is returned.
pub fn calibrate_reference_vol(pivots: &PivotSet, quote: Pivot) -> Result<f64> {
    if !(quote.vol > 0.0 && quote.vol.is_finite()) {
        return Err(domain("fourth quote vol must be > 0"));
    }
    if pivots.pivots.iter().any(|p| p.strike == quote.strike) {
        return Err(domain("fourth quote strike must differ from the pivots"));
    }
    let residual = |sigma: f64| -> Option<f64> {
        let set = pivots.with_reference_vol(sigma).ok()?;
        match vv_smile_exact(&set, quote.strike).ok()? {
            SmileValue::Vol(v) => Some(v - quote.vol),
            SmileValue::FailedBelowIntrinsic { .. } => None,
        }
    };
    let lo_vol = pivots.pivots.iter().map(|p| p.vol).fold(f64::INFINITY, f64::min);
    let hi_vol = pivots.pivots.iter().map(|p| p.vol).fold(0.0, f64::max);

    let mut last = None;
    for (lo, hi) in [(0.2 * lo_vol, 5.0 * hi_vol), (0.1 * lo_vol, 10.0 * hi_vol)] {
        let samples: Vec<(f64, Option<f64>)> = (0..SCAN_POINTS)
            .map(|i| {
                let s = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
                (s, residual(s))
            })
            .collect();
        for pair in samples.windows(2) {
            if let ((a, Some(ra)), (b, Some(rb))) = (pair[0], pair[1]) {
                if ra == 0.0 {
                    return Ok(a);
                }
                if ra.signum() != rb.signum() {
                    let f = |s: f64| residual(s).unwrap_or(f64::NAN);
                    if let Some(root) = brent(f, a, b, 1e-13, 200) {
                        return Ok(root);
                    }
                }
            }
        }
        last = Some(Error::NoRoot {
            lo,
            hi,
            residual_lo: samples[0].1,
            residual_hi: samples[SCAN_POINTS - 1].1,
        });
    }
    Err(last.expect("at least one bracket is scanned"))
}

/// Absolute residuals of the vega, vanna and volga constraints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskResiduals {
    pub vega: f64,
    pub vanna: f64,
    pub volga: f64,
    pub target_vega: f64,
}

impl RiskResiduals {
    /// Largest residual relative to the target vega.
    pub fn max_relative(&self) -> f64 {
        let m = self.vega.max(self.vanna).max(self.volga);
        if self.target_vega > 0.0 {
            m / self.target_vega
        } else {
            m
        }
    }
}

/// Plugs the hedge weights back into the three risk constraints.
pub fn verify_risk_elimination(pivots: &PivotSet, k0: f64) -> Result<RiskResiduals> {
    let w = vv_weights(pivots, k0)?;
    let (y0, d0) = (w.target_vega, w.target_moneyness);
    let mut sums = [0.0; 3];
    for i in 0..3 {
        let wy = w.hedge[i] * w.pivot_vegas[i];
        let d = w.pivot_moneyness[i];
        sums[0] += wy;
        sums[1] += wy * d;
        sums[2] += wy * d * d;
    }
    Ok(RiskResiduals {
        vega: (y0 - sums[0]).abs(),
        vanna: (y0 * d0 - sums[1]).abs(),
        volga: (y0 * d0 * d0 - sums[2]).abs(),
        target_vega: y0,
    })
}
