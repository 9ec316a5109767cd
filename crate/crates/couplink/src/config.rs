//! Run configuration: one self-describing JSON document carrying every
//! weight, constraint, and coupler parameter. Every field is optional and
//! defaults to the documented operating point (α=γ=δ=ε=1, β=10, λ=1,
//! coupler 235 ns at 3.5% error). CLI flags override config values, and the
//! resolved config is echoed into every output file.

use serde::{Deserialize, Serialize};

use crate::cost::{Constraints, CostWeights};
use crate::device::CouplerSpec;
use crate::error::{Error, Result};
use crate::ttf::TtfConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealOpts {
    /// Overrides the default T0 (10% of the greedy cost) when set.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    pub iterations_per_link: u32,
}

impl Default for AnnealOpts {
    fn default() -> Self {
        AnnealOpts {
            initial_temperature: None,
            cooling_factor: 0.97,
            iterations_per_link: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct RunConfig {
    pub weights: CostWeights,
    pub ttf: TtfConfig,
    pub constraints: Constraints,
    pub coupler: CouplerSpec,
    pub anneal: AnnealOpts,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        self.ttf.validate()?;
        self.constraints.validate()?;
        CouplerSpec::new(self.coupler.latency_ns, self.coupler.error)?;
        if !(self.anneal.cooling_factor > 0.0 && self.anneal.cooling_factor < 1.0) {
            return Err(Error::validation("cooling_factor", "must be in (0,1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_operating_point() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.weights.alpha, 1.0);
        assert_eq!(cfg.weights.beta, 10.0);
        assert_eq!(cfg.weights.gamma, 1.0);
        assert_eq!(cfg.weights.delta, 1.0);
        assert_eq!(cfg.weights.epsilon, 1.0);
        assert_eq!(cfg.coupler.latency_ns, 235.0);
        assert_eq!(cfg.coupler.error, 0.035);
        assert_eq!(cfg.ttf.lambda, 1.0);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = RunConfig::from_json(r#"{"weights":{"alpha":2.0,"beta":10.0,"gamma":1.0,"delta":1.0,"epsilon":1.0,"eta":1.0}}"#).unwrap();
        assert_eq!(cfg.weights.alpha, 2.0);
        assert_eq!(cfg.coupler.latency_ns, 235.0);
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn bad_values_rejected() {
        assert!(RunConfig::from_json(r#"{"coupler":{"latency_ns":235.0,"error":1.5}}"#).is_err());
    }
}
