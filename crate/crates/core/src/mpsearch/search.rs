use std::io::Write;

use serde::{Deserialize, Serialize};

use super::agent::{decode_bits, encode_bits, Agent, Transition, STATE_DIM};
use super::constrain::{constrain_policy, DesignSpace};
use super::{budget_at, reward, SearchConfig, BASELINE_BITS};
use crate::accoracle::AccuracyOracle;
use crate::error::{Error, Result};
use crate::hwmodel::{tile_count, HwConfig};
use crate::netgraph::{LayerKind, NetworkGraph};
use crate::policy::{LayerBits, QuantPolicy};
use crate::replicate::{Objective, ReplicationPlan};

/// Static per-layer features, each scaled to `[0, 1]`. The last two slots
/// (previous layer's action) are zero here and filled in during rollout.
pub fn layer_states(net: &NetworkGraph, cfg: &HwConfig) -> Vec<[f64; STATE_DIM]> {
    let lowered = net.lowered();
    let tiles: Vec<u64> = lowered.iter().map(|lm| tile_count(lm, BASELINE_BITS, cfg)).collect();
    let max_of = |f: &dyn Fn(usize) -> u64| (0..net.len()).map(f).max().unwrap_or(1).max(1) as f64;
    let max_rows = max_of(&|l| lowered[l].rows);
    let max_cols = max_of(&|l| lowered[l].cols);
    let max_vec = max_of(&|l| lowered[l].num_vectors);
    let max_tiles = max_of(&|l| tiles[l]);
    let denom = net.len().saturating_sub(1).max(1) as f64;
    net.layers
        .iter()
        .enumerate()
        .map(|(l, layer)| {
            let lm = &lowered[l];
            [
                l as f64 / denom,
                match layer.kind {
                    LayerKind::Conv => 0.0,
                    LayerKind::Fc => 1.0,
                },
                lm.rows as f64 / max_rows,
                lm.cols as f64 / max_cols,
                lm.num_vectors as f64 / max_vec,
                tiles[l] as f64 / max_tiles,
                0.0,
                0.0,
            ]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub budget_s: f64,
    pub noise: f64,
    /// Bitwidths decoded from the agent's actions.
    pub proposed: Vec<LayerBits>,
    /// Bitwidths after budget enforcement; these are what got evaluated.
    pub policy: Vec<LayerBits>,
    pub replication: Option<Vec<u64>>,
    pub tiles_used: Option<u64>,
    pub budget_miss: bool,
    pub accuracy: Option<f64>,
    /// Post-replication value of the search objective, in seconds.
    pub metric_s: Option<f64>,
    pub latency_s: Option<f64>,
    pub bottleneck_s: Option<f64>,
    pub reward: Option<f64>,
    /// Why the episode failed, if it did.
    pub error: Option<String>,
}

impl EpisodeRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub network: String,
    pub objective: Objective,
    pub seed: u64,
    /// Uniform 8-bit, unreplicated.
    pub baseline_metric_s: f64,
    pub baseline_latency_s: f64,
    pub baseline_bottleneck_s: f64,
    pub baseline_accuracy: f64,
    pub baseline_tiles: u64,
    pub tile_budget: u64,
    pub records: Vec<EpisodeRecord>,
    /// Index of the highest-reward successful episode that met its budget.
    pub best: Option<usize>,
}

impl SearchTrace {
    pub fn best_record(&self) -> Option<&EpisodeRecord> {
        self.best.map(|i| &self.records[i])
    }

    pub fn best_policy(&self) -> Option<QuantPolicy> {
        self.best_record().map(|r| QuantPolicy { bits: r.policy.clone() })
    }

    pub fn best_plan(&self) -> Option<ReplicationPlan> {
        let rec = self.best_record()?;
        Some(ReplicationPlan {
            r: rec.replication.clone()?,
            objective_value: rec.metric_s?,
            tiles_used: rec.tiles_used?,
        })
    }

    /// One JSON object per episode, one per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for rec in &self.records {
            serde_json::to_writer(&mut out, rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

fn noise_at(episode: usize, scfg: &SearchConfig) -> f64 {
    let a = &scfg.agent;
    let last = scfg.episodes.saturating_sub(1).max(1);
    a.noise_init * a.noise_final_fraction.powf(episode.min(last) as f64 / last as f64)
}

/// Runs the mixed-precision search.
///
/// The reference design is uniform 8-bit without replication; its metric
/// anchors the budget schedule and the reward, and its tile count times
/// `tile_budget_ratio` is the tile budget. The reference accuracy comes from
/// the same oracle. An oracle failure on an episode is recorded and skipped;
/// an oracle failure on the reference aborts the search.
pub fn run_search(
    net: &NetworkGraph,
    cfg: &HwConfig,
    scfg: &SearchConfig,
    oracle: &mut dyn AccuracyOracle,
) -> Result<SearchTrace> {
    scfg.validate()?;
    cfg.validate()?;
    if !(scfg.b_min..=scfg.b_max).contains(&BASELINE_BITS) {
        return Err(Error::Config(format!(
            "bit range [{}, {}] must include the {BASELINE_BITS}-bit reference",
            scfg.b_min, scfg.b_max
        )));
    }
    let l_count = net.len();
    let baseline_policy = QuantPolicy::uniform(l_count, BASELINE_BITS);
    let probe = DesignSpace::new(net, cfg, scfg.objective, u64::MAX, false, scfg.b_min, scfg.b_max);
    let baseline_tiles = probe.tiles(&baseline_policy);
    let tile_budget = (baseline_tiles as f64 * scfg.tile_budget_ratio).floor() as u64;
    // the reference may exceed the tile budget, so score it before applying one
    let base_plan = ReplicationPlan::unreplicated(&probe.instance(&baseline_policy), scfg.objective);
    let (lat, bot) = probe.latency_and_bottleneck(&baseline_policy, &base_plan);
    let clock = cfg.clock_hz;
    let mut space = probe;
    space.n_tiles = tile_budget;
    space.replicate = scfg.replicate;

    let baseline_metric_s = base_plan.objective_value / clock;
    let baseline_accuracy = oracle.evaluate(net, &baseline_policy)?;

    let mut agent = Agent::new(scfg.agent.clone(), scfg.seed);
    let states = layer_states(net, cfg);
    let updates = if scfg.agent.updates_per_episode == 0 { l_count } else { scfg.agent.updates_per_episode };

    let mut records = Vec::with_capacity(scfg.episodes);
    for episode in 0..scfg.episodes {
        let budget_s = budget_at(episode, scfg, baseline_metric_s);
        let noise = noise_at(episode, scfg);
        let warmup = episode < scfg.agent.warmup_episodes;

        let mut episode_states = Vec::with_capacity(l_count);
        let mut proposed = Vec::with_capacity(l_count);
        let mut prev = [1.0, 1.0];
        for base in &states {
            let mut s = *base;
            s[STATE_DIM - 2] = prev[0];
            s[STATE_DIM - 1] = prev[1];
            let a = if warmup { agent.random_action() } else { agent.act(&s, noise) };
            proposed.push(LayerBits::new(
                decode_bits(a[0], scfg.b_min, scfg.b_max),
                decode_bits(a[1], scfg.b_min, scfg.b_max),
            ));
            episode_states.push(s);
            prev = a;
        }

        let raw = QuantPolicy { bits: proposed.clone() };
        let out = constrain_policy(&space, &raw, budget_s);
        let mut rec = EpisodeRecord {
            episode,
            budget_s,
            noise,
            proposed,
            policy: out.policy.bits.clone(),
            replication: out.plan.as_ref().map(|p| p.r.clone()),
            tiles_used: out.plan.as_ref().map(|p| p.tiles_used),
            budget_miss: out.budget_miss,
            accuracy: None,
            metric_s: out.metric_s,
            latency_s: None,
            bottleneck_s: None,
            reward: None,
            error: None,
        };

        let Some(plan) = &out.plan else {
            rec.error = Some(format!("policy does not fit the tile budget of {tile_budget}"));
            records.push(rec);
            continue;
        };
        let (lat_c, bot_c) = space.latency_and_bottleneck(&out.policy, plan);
        rec.latency_s = Some(lat_c / clock);
        rec.bottleneck_s = Some(bot_c / clock);

        match oracle.evaluate(net, &out.policy) {
            Ok(acc) => {
                let metric_s = plan.objective_value / clock;
                let r = reward(acc, baseline_accuracy, metric_s, baseline_metric_s, scfg.lambda, scfg.alpha);
                rec.accuracy = Some(acc);
                rec.reward = Some(r);
                let target = agent.center_reward(r);
                for (l, s) in episode_states.iter().enumerate() {
                    let b = out.policy.bits[l];
                    let action =
                        [encode_bits(b.w_bits, scfg.b_min, scfg.b_max), encode_bits(b.a_bits, scfg.b_min, scfg.b_max)];
                    agent.remember(Transition { state: *s, action, target });
                }
                if episode + 1 >= scfg.agent.warmup_episodes {
                    agent.update(updates);
                }
            }
            Err(e) => rec.error = Some(format!("oracle: {e}")),
        }
        records.push(rec);
    }

    let best = pick_best(&records);
    Ok(SearchTrace {
        network: net.name.clone(),
        objective: scfg.objective,
        seed: scfg.seed,
        baseline_metric_s,
        baseline_latency_s: lat / clock,
        baseline_bottleneck_s: bot / clock,
        baseline_accuracy,
        baseline_tiles,
        tile_budget,
        records,
        best,
    })
}

fn pick_best(records: &[EpisodeRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, rec) in records.iter().enumerate() {
        if rec.budget_miss {
            continue;
        }
        if let Some(r) = rec.reward {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((i, r));
            }
        }
    }
    best.map(|(i, _)| i)
}
