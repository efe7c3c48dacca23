//! Weight optimization after search: a sweep over one shared weight, and
//! population-based REINFORCE over individual connection weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{derive_seed, Episode, Task};
use crate::genome::{Genome, Network, WeightMap, Weights};

/// 40 evenly spaced weights: `-2, -1.9, ..., 1.9, 2` without 0.
pub fn default_grid() -> Vec<f64> {
    (0..=40)
        .filter(|&i| i != 20)
        .map(|i| -2.0 + 0.1 * i as f64)
        .collect()
}

/// Episode seeds for `episodes` rollouts; they depend only on the episode
/// index, so every weight is scored on the same environments.
fn shared_episode(seed: u64, episode: usize) -> Episode {
    Episode {
        seed: derive_seed(&[seed, 0x5EE9, episode as u64]),
        common_seed: derive_seed(&[seed, 0xC044, episode as u64]),
    }
}

/// Mean reward of `net` at shared weight `w` over `episodes` rollouts.
pub fn shared_weight_score<T: Task + ?Sized>(net: &Network, task: &T, w: f64, episodes: usize, seed: u64) -> f64 {
    let n = episodes.max(1);
    (0..n)
        .map(|e| task.rollout(net, Weights::Shared(w), shared_episode(seed, e)))
        .sum::<f64>()
        / n as f64
}

/// Scores every grid value and returns the best `(weight, mean score)`;
/// the earliest grid value wins ties.
pub fn sweep_shared_weight<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    grid: &[f64],
    episodes: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::ConfigInvalid("sweep grid is empty".into()));
    }
    task.check_arity(genome)?;
    let net = Network::compile(genome)?;
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&w| shared_weight_score(&net, task, w, episodes, seed))
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((grid[best], scores[best]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneConfig {
    /// Candidates sampled per generation.
    pub population: usize,
    pub episodes_per_candidate: usize,
    pub generations: usize,
    /// Standard deviation of the isotropic search distribution.
    pub sigma: f64,
    /// Adam step size.
    pub learning_rate: f64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            population: 384,
            episodes_per_candidate: 16,
            generations: 3000,
            sigma: 0.1,
            learning_rate: 0.01,
        }
    }
}

impl TuneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population == 0 || self.episodes_per_candidate == 0 {
            return Err(Error::ConfigInvalid("tuner population and episodes must be positive".into()));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::ConfigInvalid(format!("tuner sigma {} must be finite and >= 0", self.sigma)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "tuner learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    pub weights: WeightMap,
    /// The shared weight the search distribution started from.
    pub initial_shared: f64,
    /// Mean candidate reward per generation.
    pub history: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(dim: usize) -> Self {
        Adam {
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            t: 0,
        }
    }

    /// Ascent step along `grad`.
    fn step(&mut self, theta: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            theta[i] += lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

/// REINFORCE on the mean of an isotropic Gaussian over the connection
/// weights, starting from `initial_shared` on every connection.
///
/// Each generation samples `population` weight vectors, scores each by its
/// mean reward over `episodes_per_candidate` rollouts (all candidates of a
/// generation share the same environment seeds), and moves the mean along
/// `sum_i (R_i - mean R) eps_i / (n sigma)` with Adam.
pub fn reinforce_tune_from<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    cfg: &TuneConfig,
    initial_shared: f64,
    seed: u64,
) -> Result<TuneOutcome> {
    cfg.validate()?;
    task.check_arity(genome)?;
    let net = Network::compile(genome)?;
    let dim = genome.n_enabled();
    if dim == 0 {
        return Err(Error::NoConnections);
    }
    let mut mean = vec![initial_shared; dim];
    let mut history = Vec::with_capacity(cfg.generations);
    if cfg.sigma == 0.0 {
        return Ok(TuneOutcome {
            weights: net.weight_map(&mean),
            initial_shared,
            history,
        });
    }
    let mut adam = Adam::new(dim);
    for gen in 0..cfg.generations {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, gen as u64]));
        let noise: Vec<Vec<f64>> = (0..cfg.population)
            .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let env_seed = derive_seed(&[seed, gen as u64, 0xE5]);
        let rewards: Vec<f64> = noise
            .par_iter()
            .map_init(
                || Vec::with_capacity(dim),
                |w: &mut Vec<f64>, eps| {
                    w.clear();
                    w.extend(mean.iter().zip(eps).map(|(m, e)| m + cfg.sigma * e));
                    (0..cfg.episodes_per_candidate)
                        .map(|e| task.rollout(&net, Weights::PerEdge(w), shared_episode(env_seed, e)))
                        .sum::<f64>()
                        / cfg.episodes_per_candidate as f64
                },
            )
            .collect();
        let baseline = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let mut grad = vec![0.0; dim];
        for (r, eps) in rewards.iter().zip(&noise) {
            for (g, e) in grad.iter_mut().zip(eps) {
                *g += (r - baseline) * e;
            }
        }
        let scale = 1.0 / (cfg.population as f64 * cfg.sigma);
        grad.iter_mut().for_each(|g| *g *= scale);
        adam.step(&mut mean, &grad, cfg.learning_rate);
        history.push(baseline);
        if gen % 100 == 0 {
            log::debug!("tune generation {gen}: mean candidate reward {baseline:.4}");
        }
    }
    Ok(TuneOutcome {
        weights: net.weight_map(&mean),
        initial_shared,
        history,
    })
}

/// Sweeps the default grid for the best shared weight, then tunes the
/// individual weights from it.
pub fn reinforce_tune<T: Task + ?Sized>(genome: &Genome, task: &T, cfg: &TuneConfig, seed: u64) -> Result<TuneOutcome> {
    if genome.n_enabled() == 0 {
        return Err(Error::NoConnections);
    }
    let (w0, _) = sweep_shared_weight(genome, task, &default_grid(), cfg.episodes_per_candidate, seed)?;
    reinforce_tune_from(genome, task, cfg, w0, derive_seed(&[seed, 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    RandomWeights,
    RandomSharedWeight,
    TunedSharedWeight,
    TunedWeights,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::RandomWeights,
        Condition::RandomSharedWeight,
        Condition::TunedSharedWeight,
        Condition::TunedWeights,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Condition::RandomWeights => "random_weights",
            Condition::RandomSharedWeight => "random_shared_weight",
            Condition::TunedSharedWeight => "tuned_shared_weight",
            Condition::TunedWeights => "tuned_weights",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Condition::RandomWeights => "Random Weights",
            Condition::RandomSharedWeight => "Random Shared Weight",
            Condition::TunedSharedWeight => "Tuned Shared Weight",
            Condition::TunedWeights => "Tuned Weights",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: Condition,
    pub mean: f64,
    /// Sample standard deviation over trials.
    pub stddev: f64,
    pub scores: Vec<f64>,
}

impl ConditionRow {
    fn from_scores(condition: Condition, scores: Vec<f64>) -> Self {
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let stddev = if scores.len() > 1 {
            (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        ConditionRow {
            condition,
            mean,
            stddev,
            scores,
        }
    }

    pub fn std_error(&self) -> f64 {
        self.stddev / (self.scores.len() as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourConditions {
    pub rows: Vec<ConditionRow>,
    /// The shared weight picked by the sweep.
    pub tuned_shared: f64,
}

impl FourConditions {
    pub fn row(&self, condition: Condition) -> Option<&ConditionRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }
}

/// Scores the genome over `trials` rollouts under each weight condition:
/// individual weights from U(-2, 2), one shared weight from U(-2, 2), the
/// best shared weight of a sweep over the default grid, and the tuned
/// individual weights when given. Random weights are redrawn every trial,
/// and trial `t` runs the same environment under every condition.
pub fn report_four_conditions<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    trials: usize,
    seed: u64,
    tuned: Option<&WeightMap>,
) -> Result<FourConditions> {
    if trials == 0 {
        return Err(Error::ConfigInvalid("trials must be at least 1".into()));
    }
    task.check_arity(genome)?;
    let net = Network::compile(genome)?;
    let tuned_vec = tuned.map(|m| net.weight_vector(m)).transpose()?;
    let (tuned_shared, _) = sweep_shared_weight(genome, task, &default_grid(), trials, derive_seed(&[seed, 0x5A]))?;
    let trial_seed = derive_seed(&[seed, 0x7A]);
    let score = |cond: Condition| -> Option<ConditionRow> {
        if cond == Condition::TunedWeights && tuned_vec.is_none() {
            return None;
        }
        let scores = (0..trials)
            .into_par_iter()
            .map(|t| {
                let episode = shared_episode(trial_seed, t);
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, t as u64, cond as u64]));
                match cond {
                    Condition::RandomWeights => {
                        let w: Vec<f64> = (0..net.n_weights()).map(|_| rng.random_range(-2.0..2.0)).collect();
                        task.rollout(&net, Weights::PerEdge(&w), episode)
                    }
                    Condition::RandomSharedWeight => {
                        task.rollout(&net, Weights::Shared(rng.random_range(-2.0..2.0)), episode)
                    }
                    Condition::TunedSharedWeight => task.rollout(&net, Weights::Shared(tuned_shared), episode),
                    Condition::TunedWeights => {
                        let w = tuned_vec.as_deref().expect("checked above");
                        task.rollout(&net, Weights::PerEdge(w), episode)
                    }
                }
            })
            .collect();
        Some(ConditionRow::from_scores(cond, scores))
    };
    Ok(FourConditions {
        rows: Condition::ALL.into_iter().filter_map(score).collect(),
        tuned_shared,
    })
}
