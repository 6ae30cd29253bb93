use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which test produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Martingale MMD, Gaussian calibration.
    Mmmd,
    /// Self-normalized `i^-γ` weighted family.
    Gamma,
    /// Multi-kernel martingale MMD, chi-squared calibration.
    Mmmmd,
    /// Quadratic-time MMD with permutation calibration.
    MmdPerm,
    Block,
    Linear,
    Cross,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Mmmd => "mmmd",
            Method::Gamma => "gamma",
            Method::Mmmmd => "mmmmd",
            Method::MmdPerm => "mmd-perm",
            Method::Block => "block",
            Method::Linear => "linear",
            Method::Cross => "cross",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mmmd" => Method::Mmmd,
            "gamma" => Method::Gamma,
            "mmmmd" => Method::Mmmmd,
            "mmd-perm" => Method::MmdPerm,
            "block" => Method::Block,
            "linear" => Method::Linear,
            "cross" => Method::Cross,
            other => return Err(Error::InvalidParameter(format!("unknown method '{other}'"))),
        })
    }
}

/// Result of one two-sample test.
///
/// `reject == (statistic > threshold)` unless the outcome is degenerate, in
/// which case the test abstains (`reject == false`, `p_value == Some(1.0)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub method: Method,
    pub statistic: f64,
    pub threshold: f64,
    pub p_value: Option<f64>,
    pub reject: bool,
    pub alpha: f64,
    pub degenerate: bool,
    pub diagnostics: BTreeMap<String, f64>,
}

impl TestOutcome {
    pub(crate) fn decided(method: Method, statistic: f64, threshold: f64, p_value: f64, alpha: f64) -> Self {
        Self {
            method,
            statistic,
            threshold,
            p_value: Some(p_value.clamp(0.0, 1.0)),
            reject: statistic > threshold,
            alpha,
            degenerate: false,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn degenerate(method: Method, threshold: f64, alpha: f64) -> Self {
        Self {
            method,
            statistic: 0.0,
            threshold,
            p_value: Some(1.0),
            reject: false,
            alpha,
            degenerate: true,
            diagnostics: BTreeMap::new(),
        }
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_owned(), value);
        self
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}
