//! DDPG-style actor-critic over per-layer states.
//!
//! The actor maps a layer state to two actions in `[0, 1]` (weight and
//! activation precision); the critic scores `(state, action)` pairs against
//! the episode reward. Both are small fully connected networks trained with
//! Adam. Everything is driven by one seeded ChaCha generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layer index, kind, rows, cols, vectors, tiles at 8 bits, previous action (2).
pub const STATE_DIM: usize = 8;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub hidden: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub batch_size: usize,
    /// Replay capacity in transitions (one per layer per episode).
    pub replay_size: usize,
    /// Episodes of uniformly random actions before learning starts.
    pub warmup_episodes: usize,
    /// Exploration noise standard deviation of the first episode.
    pub noise_init: f64,
    /// Final noise as a fraction of `noise_init`; decays geometrically.
    pub noise_final_fraction: f64,
    /// Gradient steps after each episode; 0 means one per layer.
    pub updates_per_episode: usize,
    /// Decay of the moving reward baseline subtracted from critic targets.
    pub baseline_decay: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            batch_size: 64,
            replay_size: 4000,
            warmup_episodes: 20,
            noise_init: 0.5,
            noise_final_fraction: 0.01,
            updates_per_episode: 0,
            baseline_decay: 0.95,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.batch_size == 0 || self.replay_size == 0 {
            return Err(Error::Config("agent hidden, batch_size and replay_size must be positive".into()));
        }
        if !(self.noise_final_fraction > 0.0 && self.noise_final_fraction <= 1.0) {
            return Err(Error::Config("noise_final_fraction must be in (0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::Config("baseline_decay must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Maps an action in `[0, 1]` to `round_half_up(b_min + a * (b_max - b_min))`.
pub fn decode_bits(action: f64, b_min: u32, b_max: u32) -> u32 {
    let a = action.clamp(0.0, 1.0);
    let v = (f64::from(b_min) + a * f64::from(b_max - b_min) + 0.5).floor();
    (v as u32).clamp(b_min, b_max)
}

pub fn encode_bits(bits: u32, b_min: u32, b_max: u32) -> f64 {
    if b_max == b_min {
        0.0
    } else {
        f64::from(bits.clamp(b_min, b_max) - b_min) / f64::from(b_max - b_min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: [f64; STATE_DIM],
    pub action: [f64; ACTION_DIM],
    /// Critic target (episode reward minus the running baseline).
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Output {
    Linear,
    Sigmoid,
}

#[derive(Debug, Clone)]
struct Dense {
    n_in: usize,
    n_out: usize,
    w: Vec<f64>,
    b: Vec<f64>,
    // Adam moments
    mw: Vec<f64>,
    vw: Vec<f64>,
    mb: Vec<f64>,
    vb: Vec<f64>,
}

impl Dense {
    fn new(n_in: usize, n_out: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        let w = (0..n_in * n_out).map(|_| rng.random_range(-bound..bound)).collect();
        let b = (0..n_out).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            n_in,
            n_out,
            w,
            b,
            mw: vec![0.0; n_in * n_out],
            vw: vec![0.0; n_in * n_out],
            mb: vec![0.0; n_out],
            vb: vec![0.0; n_out],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_out)
            .map(|o| {
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                self.b[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }
}

struct Grads {
    w: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

/// Fully connected network: ReLU hidden layers, linear or sigmoid output.
#[derive(Debug, Clone)]
struct Mlp {
    layers: Vec<Dense>,
    output: Output,
    steps: i32,
}

impl Mlp {
    fn new(sizes: &[usize], output: Output, rng: &mut ChaCha8Rng) -> Self {
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, s)| {
                let bound = if i == last { 3e-3 } else { 1.0 / (s[0] as f64).sqrt() };
                Dense::new(s[0], s[1], bound, rng)
            })
            .collect();
        Self { layers, output, steps: 0 }
    }

    /// Activations of every layer, input first.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().unwrap());
            if i + 1 < self.layers.len() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            } else if self.output == Output::Sigmoid {
                z.iter_mut().for_each(|v| *v = 1.0 / (1.0 + (-*v).exp()));
            }
            acts.push(z);
        }
        acts
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().unwrap()
    }

    fn zero_grads(&self) -> Grads {
        Grads {
            w: self.layers.iter().map(|l| vec![0.0; l.w.len()]).collect(),
            b: self.layers.iter().map(|l| vec![0.0; l.b.len()]).collect(),
        }
    }

    /// Accumulates parameter gradients of `grad_out . output` into `grads` and
    /// returns the gradient with respect to the input.
    fn backward(&self, acts: &[Vec<f64>], grad_out: &[f64], grads: &mut Grads) -> Vec<f64> {
        let n = self.layers.len();
        let mut delta: Vec<f64> = grad_out.to_vec();
        if self.output == Output::Sigmoid {
            for (d, y) in delta.iter_mut().zip(&acts[n]) {
                *d *= y * (1.0 - y);
            }
        }
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            let input = &acts[i];
            let mut prev = vec![0.0; layer.n_in];
            for (o, &d) in delta.iter().enumerate() {
                grads.b[i][o] += d;
                let span = o * layer.n_in..(o + 1) * layer.n_in;
                for (g, x) in grads.w[i][span.clone()].iter_mut().zip(input) {
                    *g += d * x;
                }
                for (p, w) in prev.iter_mut().zip(&layer.w[span]) {
                    *p += d * w;
                }
            }
            if i > 0 {
                // ReLU derivative from the stored post-activation
                for (p, a) in prev.iter_mut().zip(input) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    fn adam(&mut self, grads: &Grads, lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.steps += 1;
        let c1 = 1.0 - B1.powi(self.steps);
        let c2 = 1.0 - B2.powi(self.steps);
        let step = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                m[i] = B1 * m[i] + (1.0 - B1) * g[i];
                v[i] = B2 * v[i] + (1.0 - B2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + EPS);
            }
        };
        for (i, layer) in self.layers.iter_mut().enumerate() {
            step(&mut layer.w, &mut layer.mw, &mut layer.vw, &grads.w[i]);
            step(&mut layer.b, &mut layer.mb, &mut layer.vb, &grads.b[i]);
        }
    }
}

pub struct Agent {
    cfg: AgentConfig,
    actor: Mlp,
    critic: Mlp,
    replay: Vec<Transition>,
    replay_next: usize,
    reward_baseline: Option<f64>,
    rng: ChaCha8Rng,
}

impl Agent {
    pub fn new(cfg: AgentConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = cfg.hidden;
        let actor = Mlp::new(&[STATE_DIM, h, h, ACTION_DIM], Output::Sigmoid, &mut rng);
        let critic = Mlp::new(&[STATE_DIM + ACTION_DIM, h, h, 1], Output::Linear, &mut rng);
        Self { cfg, actor, critic, replay: Vec::new(), replay_next: 0, reward_baseline: None, rng }
    }

    pub fn config(&self) -> &AgentConfig {
        &self.cfg
    }

    /// Actor output plus Gaussian noise of `noise_scale`, clipped to `[0, 1]`.
    pub fn act(&mut self, state: &[f64; STATE_DIM], noise_scale: f64) -> [f64; ACTION_DIM] {
        let mu = self.actor.forward(state);
        let mut a = [0.0; ACTION_DIM];
        for (i, v) in a.iter_mut().enumerate() {
            let noise = if noise_scale > 0.0 {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                noise_scale * z
            } else {
                0.0
            };
            *v = (mu[i] + noise).clamp(0.0, 1.0);
        }
        a
    }

    pub fn random_action(&mut self) -> [f64; ACTION_DIM] {
        [self.rng.random::<f64>(), self.rng.random::<f64>()]
    }

    /// Folds `reward` into the running baseline and returns the centered target.
    pub fn center_reward(&mut self, reward: f64) -> f64 {
        let base = match self.reward_baseline {
            None => reward,
            Some(b) => self.cfg.baseline_decay * b + (1.0 - self.cfg.baseline_decay) * reward,
        };
        self.reward_baseline = Some(base);
        reward - base
    }

    pub fn remember(&mut self, t: Transition) {
        if self.replay.len() < self.cfg.replay_size {
            self.replay.push(t);
        } else {
            self.replay[self.replay_next] = t;
            self.replay_next = (self.replay_next + 1) % self.cfg.replay_size;
        }
    }

    pub fn replay_len(&self) -> usize {
        self.replay.len()
    }

    pub fn q_value(&self, state: &[f64; STATE_DIM], action: &[f64; ACTION_DIM]) -> f64 {
        let input: Vec<f64> = state.iter().chain(action).copied().collect();
        self.critic.forward(&input)[0]
    }

    /// Mean squared critic error on `batch`.
    pub fn critic_loss(&self, batch: &[Transition]) -> f64 {
        batch.iter().map(|t| (self.q_value(&t.state, &t.action) - t.target).powi(2)).sum::<f64>() / batch.len() as f64
    }

    /// One critic regression step on `batch`; returns the loss before the step.
    pub fn train_critic(&mut self, batch: &[Transition]) -> f64 {
        let n = batch.len() as f64;
        let mut grads = self.critic.zero_grads();
        let mut loss = 0.0;
        for t in batch {
            let input: Vec<f64> = t.state.iter().chain(&t.action).copied().collect();
            let acts = self.critic.forward_all(&input);
            let err = acts.last().unwrap()[0] - t.target;
            loss += err * err / n;
            self.critic.backward(&acts, &[2.0 * err / n], &mut grads);
        }
        self.critic.adam(&grads, self.cfg.lr_critic);
        loss
    }

    /// One deterministic policy-gradient step: move the actor along the
    /// critic's action gradient.
    pub fn train_actor(&mut self, batch: &[Transition]) {
        let n = batch.len() as f64;
        let mut grads = self.actor.zero_grads();
        let mut scratch = self.critic.zero_grads();
        for t in batch {
            let acts = self.actor.forward_all(&t.state);
            let action = acts.last().unwrap();
            let input: Vec<f64> = t.state.iter().chain(action).copied().collect();
            let critic_acts = self.critic.forward_all(&input);
            let dq = self.critic.backward(&critic_acts, &[-1.0 / n], &mut scratch);
            self.actor.backward(&acts, &dq[STATE_DIM..], &mut grads);
        }
        self.actor.adam(&grads, self.cfg.lr_actor);
    }

    /// Runs `steps` critic + actor updates on batches sampled from replay.
    /// Returns the mean critic loss observed.
    pub fn update(&mut self, steps: usize) -> f64 {
        if self.replay.is_empty() || steps == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for _ in 0..steps {
            let batch: Vec<Transition> = (0..self.cfg.batch_size.min(self.replay.len()))
                .map(|_| self.replay[self.rng.random_range(0..self.replay.len())].clone())
                .collect();
            total += self.train_critic(&batch);
            self.train_actor(&batch);
        }
        total / steps as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(v: f64) -> [f64; STATE_DIM] {
        let mut s = [0.0; STATE_DIM];
        s.iter_mut().enumerate().for_each(|(i, x)| *x = v * (i + 1) as f64 / STATE_DIM as f64);
        s
    }

    #[test]
    fn decode_endpoints_and_midpoint() {
        assert_eq!(decode_bits(0.0, 2, 8), 2);
        assert_eq!(decode_bits(1.0, 2, 8), 8);
        assert_eq!(decode_bits(0.5, 2, 8), 5);
        assert_eq!(decode_bits(-3.0, 2, 8), 2);
        for b in 2..=8 {
            assert_eq!(decode_bits(encode_bits(b, 2, 8), 2, 8), b);
        }
    }

    #[test]
    fn noiseless_actions_are_deterministic() {
        let mut a = Agent::new(AgentConfig::default(), 11);
        let s = state(0.3);
        let x = a.act(&s, 0.0);
        assert_eq!(x, a.act(&s, 0.0));
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
        let mut b = Agent::new(AgentConfig::default(), 11);
        let mut c = Agent::new(AgentConfig::default(), 11);
        assert_eq!(b.act(&s, 0.2), c.act(&s, 0.2));
        assert_eq!(b.random_action(), c.random_action());
    }

    #[test]
    fn critic_fit_improves_on_fixed_batch() {
        let mut agent = Agent::new(AgentConfig::default(), 3);
        let batch: Vec<Transition> = (0..32)
            .map(|i| {
                let s = state(i as f64 / 32.0);
                let a = [i as f64 / 32.0, 1.0 - i as f64 / 32.0];
                Transition { state: s, action: a, target: 0.5 * a[0] - 0.2 * a[1] }
            })
            .collect();
        let before = agent.critic_loss(&batch);
        for _ in 0..200 {
            agent.train_critic(&batch);
        }
        let after = agent.critic_loss(&batch);
        assert!(after < before, "{after} >= {before}");
        assert!(after < 0.25 * before);
    }

    #[test]
    fn actor_follows_critic_gradient() {
        // critic trained to prefer high first action; the actor should raise it
        let mut agent = Agent::new(AgentConfig { lr_actor: 1e-2, ..AgentConfig::default() }, 5);
        let batch: Vec<Transition> = (0..64)
            .map(|i| {
                let x = (i % 8) as f64 / 7.0;
                let y = (i / 8) as f64 / 7.0;
                Transition { state: state(0.5), action: [x, y], target: x }
            })
            .collect();
        for _ in 0..300 {
            agent.train_critic(&batch);
        }
        let s = state(0.5);
        let before = agent.act(&s, 0.0)[0];
        for _ in 0..100 {
            agent.train_actor(&batch);
        }
        assert!(agent.act(&s, 0.0)[0] > before);
    }

    #[test]
    fn replay_is_bounded() {
        let mut agent = Agent::new(AgentConfig { replay_size: 4, ..AgentConfig::default() }, 0);
        for i in 0..10 {
            agent.remember(Transition { state: state(0.0), action: [0.0, 0.0], target: i as f64 });
        }
        assert_eq!(agent.replay_len(), 4);
    }
}
