//! Bachelier (Normal) pricing of European options on a forward.
//!
//! The forward follows `dF = sigma dW`, so the terminal forward is
//! `N(F, sigma^2 T)` and both forward and strike may be negative. The
//! volatility is quoted in the same absolute units as the forward.

use crate::error::{domain, Result};
use crate::normal::{cdf, pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptionKind {
    Call,
    Put,
}

impl OptionKind {
    /// +1 for calls, -1 for puts.
    pub fn sign(self) -> f64 {
        match self {
            OptionKind::Call => 1.0,
            OptionKind::Put => -1.0,
        }
    }
}

/// A single European option on a forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    forward: f64,
    strike: f64,
    expiry: f64,
    discount: f64,
    kind: OptionKind,
}

impl OptionSpec {
    pub fn new(
        forward: f64,
        strike: f64,
        expiry: f64,
        discount: f64,
        kind: OptionKind,
    ) -> Result<Self> {
        check_market(forward, expiry, discount)?;
        if !strike.is_finite() {
            return Err(domain("strike must be finite"));
        }
        Ok(Self {
            forward,
            strike,
            expiry,
            discount,
            kind,
        })
    }

    pub fn call(forward: f64, strike: f64, expiry: f64, discount: f64) -> Result<Self> {
        Self::new(forward, strike, expiry, discount, OptionKind::Call)
    }

    pub fn put(forward: f64, strike: f64, expiry: f64, discount: f64) -> Result<Self> {
        Self::new(forward, strike, expiry, discount, OptionKind::Put)
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }
    pub fn strike(&self) -> f64 {
        self.strike
    }
    pub fn expiry(&self) -> f64 {
        self.expiry
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }
    pub fn kind(&self) -> OptionKind {
        self.kind
    }

    /// Same market and option type, different strike.
    pub fn with_strike(self, strike: f64) -> Self {
        Self { strike, ..self }
    }

    pub fn with_kind(self, kind: OptionKind) -> Self {
        Self { kind, ..self }
    }

    /// `DF * max(phi*(F-K), 0)` for the option's type.
    pub fn intrinsic(&self) -> f64 {
        self.discount * (self.kind.sign() * (self.forward - self.strike)).max(0.0)
    }

    /// Normal moneyness `(F-K)/(sigma*sqrt(T))`.
    pub fn moneyness(&self, sigma: f64) -> f64 {
        (self.forward - self.strike) / (sigma * self.expiry.sqrt())
    }
}

/// Forward, expiry and discount factor shared by every option on a smile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Market {
    forward: f64,
    expiry: f64,
    discount: f64,
}

impl Market {
    pub fn new(forward: f64, expiry: f64, discount: f64) -> Result<Self> {
        check_market(forward, expiry, discount)?;
        Ok(Self {
            forward,
            expiry,
            discount,
        })
    }

    pub fn forward(&self) -> f64 {
        self.forward
    }
    pub fn expiry(&self) -> f64 {
        self.expiry
    }
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn option(&self, strike: f64, kind: OptionKind) -> OptionSpec {
        OptionSpec {
            forward: self.forward,
            strike,
            expiry: self.expiry,
            discount: self.discount,
            kind,
        }
    }

    pub fn call(&self, strike: f64) -> OptionSpec {
        self.option(strike, OptionKind::Call)
    }

    /// The out-of-the-money option at `strike`: a put below the forward,
    /// a call at or above it.
    pub fn otm_option(&self, strike: f64) -> OptionSpec {
        if strike < self.forward {
            self.option(strike, OptionKind::Put)
        } else {
            self.call(strike)
        }
    }
}

/// Shared validation of the market context: finite forward, `T > 0`,
/// `0 < DF <= 1`.
pub(crate) fn check_market(forward: f64, expiry: f64, discount: f64) -> Result<()> {
    if !forward.is_finite() {
        return Err(domain("forward must be finite"));
    }
    if !(expiry > 0.0 && expiry.is_finite()) {
        return Err(domain(format!("expiry must be > 0, got {expiry}")));
    }
    if !(discount > 0.0 && discount <= 1.0) {
        return Err(domain(format!(
            "discount factor must lie in (0, 1], got {discount}"
        )));
    }
    Ok(())
}

fn check_vol(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("volatility must be > 0, got {sigma}")))
    }
}

/// Price and forward Greeks of one option under the Bachelier model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreekSet {
    pub price: f64,
    /// dPrice/dF
    pub delta_forward: f64,
    /// dPrice/dsigma
    pub vega: f64,
    /// d2Price/dF2
    pub gamma_forward: f64,
    /// d2Price/dF dsigma
    pub vanna_forward: f64,
    /// d2Price/dsigma2
    pub volga: f64,
    pub moneyness: f64,
}

/// Undiscounted price for unit discount, computed directly for the
/// option's type so out-of-the-money prices keep full relative precision.
fn undiscounted(spec: &OptionSpec, sigma: f64) -> f64 {
    let sd = sigma * spec.expiry.sqrt();
    let d = (spec.forward - spec.strike) / sd;
    let phi = spec.kind.sign();
    phi * (spec.forward - spec.strike) * cdf(phi * d) + sd * pdf(d)
}

/// Price of `spec` at normal volatility `sigma`:
/// `DF*[(F-K)N(d) + sigma*sqrt(T)*n(d)]` for a call, and the put by parity.
pub fn price(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    check_vol(sigma)?;
    Ok(spec.discount * undiscounted(spec, sigma))
}

/// Call price regardless of `spec.kind`.
pub fn call_price(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    price(&spec.with_kind(OptionKind::Call), sigma)
}

pub fn put_price(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    price(&spec.with_kind(OptionKind::Put), sigma)
}

pub fn greeks(spec: &OptionSpec, sigma: f64) -> Result<GreekSet> {
    check_vol(sigma)?;
    let sqrt_t = spec.expiry.sqrt();
    let d = spec.moneyness(sigma);
    let df = spec.discount;
    let vega = df * sqrt_t * pdf(d);
    let delta_forward = match spec.kind {
        OptionKind::Call => df * cdf(d),
        OptionKind::Put => -df * cdf(-d),
    };
    Ok(GreekSet {
        price: df * undiscounted(spec, sigma),
        delta_forward,
        vega,
        gamma_forward: vega / (sigma * spec.expiry),
        vanna_forward: -vega * d / (sqrt_t * sigma),
        volga: vega * d * d / sigma,
        moneyness: d,
    })
}

/// Vega alone; the vanna-volga weights need nothing else.
pub fn vega(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    check_vol(sigma)?;
    Ok(spec.discount * spec.expiry.sqrt() * pdf(spec.moneyness(sigma)))
}

/// Black-76 price with lognormal volatility. Only used to cross-check the
/// normal prices near the money.
pub fn black76_price(spec: &OptionSpec, sigma: f64) -> Result<f64> {
    check_vol(sigma)?;
    let (f, k) = (spec.forward, spec.strike);
    if f <= 0.0 || k <= 0.0 {
        return Err(domain("Black-76 needs positive forward and strike"));
    }
    let sd = sigma * spec.expiry.sqrt();
    let d1 = ((f / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    let phi = spec.kind.sign();
    Ok(spec.discount * phi * (f * cdf(phi * d1) - k * cdf(phi * d2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn call(f: f64, k: f64, t: f64, df: f64) -> OptionSpec {
        OptionSpec::call(f, k, t, df).unwrap()
    }

    /// Composite Simpson integration of DF*E[(F_T-K)^+], F_T ~ N(F, sigma^2 T).
    fn integrated_call(spec: &OptionSpec, sigma: f64) -> f64 {
        let sd = sigma * spec.expiry().sqrt();
        let lo = spec.strike().max(spec.forward() - 14.0 * sd);
        let hi = spec.forward() + 14.0 * sd;
        let n = 200_000;
        let h = (hi - lo) / n as f64;
        let f = |x: f64| {
            let z = (x - spec.forward()) / sd;
            (x - spec.strike()).max(0.0) * (-0.5 * z * z).exp() / (sd * crate::normal::sqrt_2pi())
        };
        let mut acc = f(lo) + f(hi);
        for i in 1..n {
            acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        spec.discount() * acc * h / 3.0
    }

    #[test]
    fn atm_closed_form() {
        let c = price(&call(0.0, 0.0, 1.0, 1.0), 50.0).unwrap();
        assert!((c - 50.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
        assert!((c - 19.947_114_020_071_634).abs() < 1e-12);
    }

    #[test]
    fn itm_price_matches_quadrature_and_frozen_value() {
        let spec = call(0.0, -50.0, 1.0, 1.0);
        let c = price(&spec, 51.0).unwrap();
        // 40-digit adaptive quadrature of the same expectation.
        assert!((c - 54.410_132_020_290_93).abs() < 1e-11, "{c}");
        assert!((c - integrated_call(&spec, 51.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(OptionSpec::call(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(OptionSpec::call(0.0, 0.0, 1.0, 0.0).is_err());
        assert!(OptionSpec::call(0.0, 0.0, 1.0, 1.5).is_err());
        let spec = call(0.0, 0.0, 1.0, 1.0);
        assert!(price(&spec, 0.0).is_err());
        assert!(price(&spec, -1.0).is_err());
        assert!(greeks(&spec, 0.0).is_err());
    }

    #[test]
    fn atm_greeks() {
        let spec = call(1.5, 1.5, 2.0, 0.9);
        let g = greeks(&spec, 0.7).unwrap();
        let want = 0.9 * 2f64.sqrt() / crate::normal::sqrt_2pi();
        assert!((g.vega - want).abs() < 1e-15);
        assert_eq!(g.vanna_forward, 0.0);
        assert_eq!(g.volga, 0.0);
    }

    #[test]
    fn greeks_match_central_differences() {
        for kind in [OptionKind::Call, OptionKind::Put] {
            let spec = OptionSpec::new(0.0, -50.0, 1.0, 1.0, kind).unwrap();
            let sigma = 51.0;
            let g = greeks(&spec, sigma).unwrap();
            let p = |f: f64, s: f64| {
                price(&OptionSpec::new(f, -50.0, 1.0, 1.0, kind).unwrap(), s).unwrap()
            };
            // Steps of ~1e-3 of the natural scale balance truncation and rounding.
            let (hf, hs) = (0.05, 0.05);
            let delta = (p(hf, sigma) - p(-hf, sigma)) / (2.0 * hf);
            let vega = (p(0.0, sigma + hs) - p(0.0, sigma - hs)) / (2.0 * hs);
            let gamma = (p(hf, sigma) - 2.0 * p(0.0, sigma) + p(-hf, sigma)) / (hf * hf);
            let volga =
                (p(0.0, sigma + hs) - 2.0 * p(0.0, sigma) + p(0.0, sigma - hs)) / (hs * hs);
            let vanna = (p(hf, sigma + hs) - p(hf, sigma - hs) - p(-hf, sigma + hs)
                + p(-hf, sigma - hs))
                / (4.0 * hf * hs);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(g.delta_forward, delta) < 1e-6);
            assert!(rel(g.vega, vega) < 1e-6);
            assert!(rel(g.gamma_forward, gamma) < 1e-6);
            assert!(rel(g.volga, volga) < 1e-6, "{} {}", g.volga, volga);
            assert!(rel(g.vanna_forward, vanna) < 1e-6);
        }
    }

    #[test]
    fn black76_degenerate_and_near_atm() {
        let spec = call(100.0, 100.0, 1.0, 1.0);
        assert!(black76_price(&spec, 1e-10).unwrap() < 1e-6);
        let ln = black76_price(&spec, 0.20).unwrap();
        let n = price(&spec, 20.0).unwrap();
        assert!((ln - n).abs() / n < 0.01, "{ln} {n}");
        assert!(black76_price(&call(-1.0, 1.0, 1.0, 1.0), 0.2).is_err());
        let p = black76_price(&spec.with_kind(OptionKind::Put).with_strike(90.0), 0.2).unwrap();
        let c = black76_price(&spec.with_strike(90.0), 0.2).unwrap();
        assert!((c - p - 10.0).abs() < 1e-12);
    }

    fn inputs() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
        (
            -200.0..200.0f64,
            -200.0..200.0f64,
            0.01..30.0f64,
            0.05..=1.0f64,
            0.5..200.0f64,
        )
    }

    proptest! {
        #[test]
        fn above_intrinsic_and_parity((f, k, t, df, s) in inputs()) {
            let spec = call(f, k, t, df);
            let c = price(&spec, s).unwrap();
            let p = put_price(&spec, s).unwrap();
            prop_assert!(c >= df * (f - k).max(0.0));
            let scale = c.abs().max(p.abs()).max(1.0);
            prop_assert!((c - p - df * (f - k)).abs() <= 1e-13 * scale);
        }

        #[test]
        fn monotone_in_strike_and_vol((f, k, t, df, s) in inputs()) {
            let spec = call(f, k, t, df);
            let sd = s * t.sqrt();
            let c = price(&spec, s).unwrap();
            // Skip regions where the call has rounded to intrinsic or zero.
            prop_assume!(spec.moneyness(s).abs() < 5.0);
            prop_assert!(price(&spec.with_strike(k + 0.01 * sd), s).unwrap() < c);
            prop_assert!(price(&spec, s * 1.01).unwrap() > c);
        }

        #[test]
        fn greek_identities((f, k, t, df, s) in inputs()) {
            let spec = call(f, k, t, df);
            let g = greeks(&spec, s).unwrap();
            prop_assert!(g.vega >= 0.0 && g.gamma_forward >= 0.0);
            let d = g.moneyness;
            let tol = 1e-14 * g.vega.max(1e-300);
            prop_assert!((g.gamma_forward * s * t - g.vega).abs() <= tol);
            prop_assert!((g.volga - g.vega * d * d / s).abs() <= 1e-14 * g.volga.abs() + 1e-300);
            prop_assert!((g.vanna_forward + g.vega * d / (t.sqrt() * s)).abs()
                <= 1e-14 * g.vanna_forward.abs() + 1e-300);
        }
    }
}
