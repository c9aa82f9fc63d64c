//! Budget-constrained mixed-precision search.
//!
//! Each episode an actor-critic agent proposes per-layer weight/activation
//! bitwidths. The proposal is pushed under the episode's performance budget by
//! greedy bitwidth decrements ([`constrain_policy`]), replication is optimized
//! for the result, and the agent is rewarded on accuracy change and relative
//! performance. The budget tightens geometrically from episode to episode.

mod agent;
mod constrain;
mod search;

pub use agent::{decode_bits, encode_bits, Agent, AgentConfig, Transition, ACTION_DIM, STATE_DIM};
pub use constrain::{constrain_policy, Constrained, DesignSpace};
pub use search::{layer_states, run_search, EpisodeRecord, SearchTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::replicate::Objective;

/// Bitwidth of the fixed-precision reference design.
pub const BASELINE_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub episodes: usize,
    /// Budget of the first episode, as a fraction of the baseline metric.
    pub budget_start_ratio: f64,
    /// Budget of the last episode, as a fraction of the baseline metric.
    pub budget_end_ratio: f64,
    pub objective: Objective,
    /// Weight of the accuracy term of the reward.
    pub lambda: f64,
    /// Weight of the performance term of the reward.
    pub alpha: f64,
    pub seed: u64,
    pub b_min: u32,
    pub b_max: u32,
    /// Tile budget as a multiple of the baseline design's tile count.
    pub tile_budget_ratio: f64,
    /// Spend spare tiles on replication. Off means precision-only search.
    pub replicate: bool,
    pub agent: AgentConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            episodes: 300,
            budget_start_ratio: 0.35,
            budget_end_ratio: 0.2,
            objective: Objective::Latency,
            lambda: 10.0,
            alpha: 1.0,
            seed: 0,
            b_min: 2,
            b_max: 8,
            tile_budget_ratio: 1.0,
            replicate: true,
            agent: AgentConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SearchConfig = toml::from_str(text).map_err(|e| Error::Config(format!("search config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if !(self.budget_end_ratio > 0.0
            && self.budget_end_ratio <= self.budget_start_ratio
            && self.budget_start_ratio <= 1.0)
        {
            return bad(format!(
                "need 0 < budget_end_ratio ({}) <= budget_start_ratio ({}) <= 1",
                self.budget_end_ratio, self.budget_start_ratio
            ));
        }
        if self.b_min == 0 || self.b_min > self.b_max {
            return bad(format!("need 1 <= b_min ({}) <= b_max ({})", self.b_min, self.b_max));
        }
        if !(self.tile_budget_ratio.is_finite() && self.tile_budget_ratio > 0.0) {
            return bad("tile_budget_ratio must be positive".into());
        }
        if !(self.lambda.is_finite() && self.alpha.is_finite()) {
            return bad("lambda and alpha must be finite".into());
        }
        self.agent.validate()
    }
}

/// Performance budget of `episode`: geometric interpolation from
/// `baseline * start` (first episode) to `baseline * end` (last episode).
/// A single-episode search uses the end ratio.
pub fn budget_at(episode: usize, cfg: &SearchConfig, baseline_metric: f64) -> f64 {
    let last = cfg.episodes.saturating_sub(1);
    if last == 0 || episode >= last {
        return baseline_metric * cfg.budget_end_ratio;
    }
    if episode == 0 {
        return baseline_metric * cfg.budget_start_ratio;
    }
    let t = episode as f64 / last as f64;
    baseline_metric * cfg.budget_start_ratio * (cfg.budget_end_ratio / cfg.budget_start_ratio).powf(t)
}

/// `lambda * (acc_q - acc_o) + alpha * (1 - t_q / t_o)`.
pub fn reward(acc_q: f64, acc_o: f64, t_q: f64, t_o: f64, lambda: f64, alpha: f64) -> f64 {
    lambda * (acc_q - acc_o) + alpha * (1.0 - t_q / t_o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn budget_endpoints() {
        let cfg = SearchConfig { episodes: 100, ..SearchConfig::default() };
        assert_eq!(budget_at(0, &cfg, 1.0), 0.35);
        assert_eq!(budget_at(99, &cfg, 1.0), 0.2);
        assert_eq!(budget_at(0, &cfg, 3.0), 3.0 * 0.35);
    }

    #[test]
    fn budget_midpoint_is_geometric_mean() {
        let cfg =
            SearchConfig { episodes: 3, budget_start_ratio: 0.32, budget_end_ratio: 0.02, ..SearchConfig::default() };
        assert!((budget_at(1, &cfg, 1.0) - 0.08).abs() < 1e-15);
    }

    #[test]
    fn single_episode_uses_end_ratio() {
        let cfg = SearchConfig { episodes: 1, ..SearchConfig::default() };
        assert_eq!(budget_at(0, &cfg, 2.0), 0.4);
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(0.7, 0.7, 1.0, 1.0, 10.0, 1.0), 0.0);
        assert!((reward(0.7, 0.7, 0.5, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-12);
        assert!((reward(0.69, 0.70, 3.0, 1.0, 10.0, 0.0) + 0.1).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(SearchConfig::default().validate().is_ok());
        let bad = SearchConfig { budget_end_ratio: 0.5, ..SearchConfig::default() };
        assert!(bad.validate().is_err());
        assert!(SearchConfig::from_toml_str("episodes = 0").is_err());
        assert!(SearchConfig::from_toml_str("epochs = 3").is_err());
        let c =
            SearchConfig::from_toml_str("episodes = 7\nobjective = \"throughput\"\n[agent]\nhidden = 16\n").unwrap();
        assert_eq!((c.episodes, c.objective, c.agent.hidden), (7, Objective::Throughput, 16));
    }

    proptest! {
        #[test]
        fn budget_strictly_decreasing(
            episodes in 2usize..400,
            start in 0.05f64..1.0,
            frac in 0.01f64..0.95,
        ) {
            let cfg = SearchConfig {
                episodes,
                budget_start_ratio: start,
                budget_end_ratio: start * frac,
                ..SearchConfig::default()
            };
            let b: Vec<f64> = (0..episodes).map(|e| budget_at(e, &cfg, 1.0)).collect();
            prop_assert_eq!(b[0], start);
            prop_assert_eq!(b[episodes - 1], start * frac);
            for w in b.windows(2) {
                prop_assert!(w[1] < w[0]);
            }
        }

        #[test]
        fn reward_scales_linearly(
            acc_q in 0.0f64..1.0, acc_o in 0.0f64..1.0,
            t_q in 0.01f64..10.0, t_o in 0.01f64..10.0,
            lambda in -5.0f64..5.0, alpha in -5.0f64..5.0, k in 0.1f64..10.0,
        ) {
            let r = reward(acc_q, acc_o, t_q, t_o, lambda, alpha);
            let scaled = reward(acc_q, acc_o, t_q, t_o, k * lambda, k * alpha);
            prop_assert!((scaled - k * r).abs() <= 1e-9 * (1.0 + scaled.abs()));
            let split = reward(acc_q, acc_o, t_q, t_o, lambda, 0.0) + reward(acc_q, acc_o, t_q, t_o, 0.0, alpha);
            prop_assert!((split - r).abs() <= 1e-12 * (1.0 + r.abs()));
        }
    }
}
