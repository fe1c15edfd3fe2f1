//! JSON scenario files.

use normalvv::{Market, Pivot, PivotSet};
use serde::Deserialize;
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Method {
    #[serde(rename = "vv-exact")]
    VvExact,
    #[serde(rename = "vv-first")]
    VvFirst,
    #[serde(rename = "vv-second")]
    VvSecond,
    #[serde(rename = "sabr")]
    Sabr,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::VvExact => "vv-exact",
            Method::VvFirst => "vv-first",
            Method::VvSecond => "vv-second",
            Method::Sabr => "sabr",
        }
    }

    pub fn is_vv(&self) -> bool {
        !matches!(self, Method::Sabr)
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quote {
    pub strike: f64,
    pub vol: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub step: Option<f64>,
    pub delta: Option<f64>,
    pub reference_vol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    // Free-text fields for people reading the file.
    #[allow(dead_code)]
    #[serde(default)]
    pub name: Option<String>,
    #[allow(dead_code)]
    #[serde(default)]
    pub comment: Option<String>,
    pub forward: f64,
    pub expiry: f64,
    pub discount: f64,
    pub pivots: Vec<Quote>,
    #[serde(default)]
    pub fourth_quote: Option<Quote>,
    #[serde(default)]
    pub reference_vols: Vec<f64>,
    pub grid: GridSpec,
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub density: DensitySpec,
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = if path == Path::new("-") {
            std::io::read_to_string(std::io::stdin())
        } else {
            std::fs::read_to_string(path)
        }
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("invalid scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.market()?;
        if self.pivots.len() != 3 {
            return Err(CliError::Usage(format!(
                "scenario needs exactly three pivots, got {}",
                self.pivots.len()
            )));
        }
        self.pivot_set(None)?;
        for &r in &self.reference_vols {
            self.pivot_set(Some(r))?;
        }
        let g = &self.grid;
        if !(g.min < g.max && g.step > 0.0) {
            return Err(CliError::Usage("grid needs min < max and step > 0".into()));
        }
        Ok(())
    }

    pub fn market(&self) -> Result<Market, CliError> {
        Market::new(self.forward, self.expiry, self.discount)
            .map_err(|e| CliError::Usage(with_df_hint(e.to_string(), self.discount)))
    }

    pub fn pivots(&self) -> [Pivot; 3] {
        [0, 1, 2].map(|i| Pivot::new(self.pivots[i].strike, self.pivots[i].vol))
    }

    pub fn pivot_set(&self, reference_vol: Option<f64>) -> Result<PivotSet, CliError> {
        PivotSet::new(self.market()?, self.pivots(), reference_vol)
            .map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Reference vols to sweep; the middle pivot vol when none are listed.
    pub fn reference_vols(&self) -> Vec<f64> {
        if self.reference_vols.is_empty() {
            vec![self.pivots[1].vol]
        } else {
            self.reference_vols.clone()
        }
    }

    pub fn strikes(&self) -> Vec<f64> {
        normalvv::density::uniform_grid(self.grid.min, self.grid.max, self.grid.step)
            .expect("validated grid")
    }

    /// Vol of the pivot closest to the forward.
    pub fn atm_vol(&self) -> f64 {
        self.pivots
            .iter()
            .min_by(|a, b| {
                (a.strike - self.forward)
                    .abs()
                    .total_cmp(&(b.strike - self.forward).abs())
            })
            .map(|q| q.vol)
            .expect("three pivots")
    }
}

/// The published examples quote a zero discount factor; explain why that is
/// rejected.
pub fn with_df_hint(msg: String, discount: f64) -> String {
    if discount == 0.0 {
        format!(
            "{msg}\nnote: DF = P(0,T) must be > 0. A printed value of P(0,T) = 0 is a typo; \
             the reference scenarios use DF = 1."
        )
    } else {
        msg
    }
}
