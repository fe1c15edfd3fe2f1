//! Normal (Bachelier) volatility smiles.
//!
//! Closed-form Bachelier pricing and Greeks, implied normal volatility
//! inversion, vanna-volga smile construction with an optional fourth-quote
//! reference volatility fit, the Normal SABR (beta = 0) comparator, and
//! Breeden-Litzenberger density extraction.

// `!(x > 0.0)` style checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bachelier;
pub mod density;
pub mod error;
pub mod implied_vol;
pub mod normal;
pub mod sabr;
pub mod solver;
pub mod vanna_volga;

pub use bachelier::{GreekSet, Market, OptionKind, OptionSpec};
pub use vanna_volga::{Pivot, PivotSet, SmileValue, VVWeights};
pub use error::{Error, Result};
pub use sabr::{SABRFit, SABRParams};
