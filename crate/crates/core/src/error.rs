use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the domain of the formula (non-positive vol,
    /// expiry or discount factor, coincident strikes, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// The option price cannot be produced by any positive normal volatility.
    #[error("arbitrage violation: price {price} is not above intrinsic value {intrinsic}")]
    ArbitrageViolation { price: f64, intrinsic: f64 },

    #[error("negative discriminant {discriminant} in second-order smile at strike {strike}")]
    NegativeDiscriminant { strike: f64, discriminant: f64 },

    /// The residual does not change sign anywhere on the search bracket.
    /// `None` residuals mark ends where the smile could not be evaluated.
    #[error("no root on [{lo}, {hi}] (residuals {residual_lo:?}, {residual_hi:?})")]
    NoRoot {
        lo: f64,
        hi: f64,
        residual_lo: Option<f64>,
        residual_hi: Option<f64>,
    },

    #[error("calibration failure: {0}")]
    CalibrationFailure(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
