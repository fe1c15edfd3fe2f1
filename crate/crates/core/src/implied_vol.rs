//! Implied normal volatility from an option price.
//!
//! The straddle `V = C + P` and `theta = (F-K)/V` determine
//! `eta = theta / atanh(theta)`, and a fixed rational function `h(eta)`
//! gives `sigma = sqrt(pi/(2T)) * V * h(eta)` (Choi, Kim and Kwak, 2007).
//! One Newton step on the out-of-the-money option then takes the result to
//! machine precision.

use crate::bachelier::{self, OptionKind, OptionSpec};
use crate::error::{domain, Error, Result};
use crate::normal::sqrt_2pi;
use std::f64::consts::PI;

/// Numerator coefficients `a_0..a_7`.
pub const NUMERATOR: [f64; 8] = [
    3.994961687345134e-1,
    2.100960795068497e+1,
    4.980340217855084e+1,
    5.988761102690991e+2,
    1.848489695437094e+3,
    6.106322407867059e+3,
    2.493415285349361e+4,
    1.266458051348246e+4,
];

/// Denominator coefficients `b_0..b_9`.
pub const DENOMINATOR: [f64; 10] = [
    1.0,
    4.990534153589422e+1,
    3.093573936743112e+1,
    1.495105008310999e+3,
    1.323614537899738e+3,
    1.598919697679745e+4,
    2.392008891720782e+4,
    3.608817108375034e+3,
    -2.067719486400926e+2,
    1.174240599306013e+1,
];

/// Relative width of the band around `F = K` that is treated as ATM.
pub const ATM_TOLERANCE: f64 = 1e-14;

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// `sqrt(eta) * A(eta) / B(eta)`.
pub fn rational_h(eta: f64) -> f64 {
    eta.sqrt() * horner(&NUMERATOR, eta) / horner(&DENOMINATOR, eta)
}

/// `theta / atanh(theta)`, equal to 1 in the limit theta -> 0.
fn eta_of(theta: f64) -> f64 {
    if theta == 0.0 {
        1.0
    } else {
        theta / theta.atanh()
    }
}

fn is_atm(forward: f64, strike: f64) -> bool {
    (forward - strike).abs() <= ATM_TOLERANCE * (forward.abs() + strike.abs()).max(1.0)
}

/// Rational approximation only, without the Newton step. Exposed for the
/// diagnostics that compare the raw approximation with the polished value.
pub fn approximate_normal_vol(price: f64, spec: &OptionSpec) -> Result<f64> {
    let (straddle, _) = straddle_and_otm(price, spec)?;
    let diff = spec.forward() - spec.strike();
    if is_atm(spec.forward(), spec.strike()) {
        return Ok(0.5 * straddle * sqrt_2pi() / spec.expiry().sqrt());
    }
    let theta = diff / straddle;
    if !(theta.abs() < 1.0) {
        return Err(Error::ArbitrageViolation {
            price,
            intrinsic: spec.intrinsic(),
        });
    }
    Ok((PI / (2.0 * spec.expiry())).sqrt() * straddle * rational_h(eta_of(theta)))
}

/// Undiscounted straddle value and the (discounted) price of the
/// out-of-the-money leg, derived from the quoted price by put-call parity.
fn straddle_and_otm(price: f64, spec: &OptionSpec) -> Result<(f64, (OptionSpec, f64))> {
    let intrinsic = spec.intrinsic();
    if !price.is_finite() || price <= intrinsic {
        return Err(Error::ArbitrageViolation { price, intrinsic });
    }
    let df = spec.discount();
    let parity = df * (spec.forward() - spec.strike());
    let (call, put) = match spec.kind() {
        OptionKind::Call => (price, price - parity),
        OptionKind::Put => (price + parity, price),
    };
    let otm = if spec.forward() >= spec.strike() {
        (spec.with_kind(OptionKind::Put), put)
    } else {
        (spec.with_kind(OptionKind::Call), call)
    };
    if otm.1 <= 0.0 {
        return Err(Error::ArbitrageViolation { price, intrinsic });
    }
    Ok(((call + put) / df, otm))
}

/// Implied normal volatility of `price`, quoted for the option described by
/// `spec` (a call or a put).
///
/// Fails with [`Error::ArbitrageViolation`] when the price does not exceed
/// intrinsic value.
pub fn implied_normal_vol(price: f64, spec: &OptionSpec) -> Result<f64> {
    let (_, (otm_spec, otm_price)) = straddle_and_otm(price, spec)?;
    let sigma = approximate_normal_vol(price, spec)?;
    let g = bachelier::greeks(&otm_spec, sigma)?;
    if g.vega <= 0.0 {
        return Ok(sigma);
    }
    let polished = sigma - (g.price - otm_price) / g.vega;
    Ok(if polished > 0.0 { polished } else { sigma })
}

/// Direct inversion at the money: `sigma = C*sqrt(2*pi/T)/DF`.
pub fn implied_normal_vol_atm(price: f64, spec: &OptionSpec) -> Result<f64> {
    if spec.forward() != spec.strike() {
        return Err(domain("ATM inversion needs forward == strike"));
    }
    if !(price > 0.0 && price.is_finite()) {
        return Err(domain(format!("ATM price must be > 0, got {price}")));
    }
    Ok(price * sqrt_2pi() / (spec.expiry().sqrt() * spec.discount()))
}
