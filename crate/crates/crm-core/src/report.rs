//! JSON run reports emitted by the verification commands.

use crate::config::Config;
use crate::sampler::McEstimate;
use crate::verify::VerifyReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimateJson {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl From<McEstimate> for EstimateJson {
    fn from(e: McEstimate) -> Self {
        EstimateJson { mean: e.mean, se: e.std_error, n: e.n_samples }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportJson {
    pub op: String,
    pub config_echo: BTreeMap<String, String>,
    pub lhs: EstimateJson,
    pub rhs: EstimateJson,
    pub z: f64,
    pub pass: bool,
    pub seed: u64,
    pub runtime_ms: u128,
}

impl ReportJson {
    pub fn from_verify(op: &str, config: &Config, r: &VerifyReport, runtime_ms: u128) -> Self {
        ReportJson {
            op: op.to_string(),
            config_echo: config.entries().clone(),
            lhs: r.lhs.into(),
            rhs: r.rhs.into(),
            z: r.z,
            pass: r.pass,
            seed: r.seed,
            runtime_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrips_through_json() {
        let r = ReportJson {
            op: "verify-current".into(),
            config_echo: BTreeMap::from([("family".into(), "gamma".into())]),
            lhs: EstimateJson { mean: 0.5, se: 0.01, n: 1000 },
            rhs: EstimateJson { mean: 0.49, se: 0.01, n: 1000 },
            z: 1.0,
            pass: true,
            seed: 42,
            runtime_ms: 12,
        };
        let s = serde_json::to_string_pretty(&r).unwrap();
        let back: ReportJson = serde_json::from_str(&s).unwrap();
        assert_eq!(back.op, r.op);
        assert_eq!(back.pass, r.pass);
        assert_eq!(back.config_echo["family"], "gamma");
    }
}
