use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::QueryLedger;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Hadamard,
    AeBiased,
    AeUnbiased,
    Lode,
    Carleman,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::Hadamard,
        Pipeline::AeBiased,
        Pipeline::AeUnbiased,
        Pipeline::Lode,
        Pipeline::Carleman,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Pipeline::Hadamard => "hadamard",
            Pipeline::AeBiased => "ae_biased",
            Pipeline::AeUnbiased => "ae_unbiased",
            Pipeline::Lode => "lode",
            Pipeline::Carleman => "carleman",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Pipeline::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown pipeline `{s}`")))
    }
}

/// Outcome of one pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub pipeline: Pipeline,
    pub scenario: String,
    pub horizon: f64,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub estimate: f64,
    pub true_value: f64,
    pub abs_error: f64,
    pub ledger: QueryLedger,
    /// Shots per node (Hadamard), median count (AE) or passes (unbiased AE).
    pub shots: u64,
    /// Reflection uses per estimate, or shots for the Hadamard test.
    pub depth: u64,
    pub n_t: usize,
}

impl EstimateReport {
    pub fn signed_error(&self) -> f64 {
        self.estimate - self.true_value
    }

    pub fn within(&self, eps: f64) -> bool {
        self.abs_error <= eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            assert_eq!(p.as_str().parse::<Pipeline>().unwrap(), p);
        }
        assert!("nope".parse::<Pipeline>().is_err());
    }
}
