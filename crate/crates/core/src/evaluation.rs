//! Scoring genomes over a series of shared weight values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{Genome, Network, Weights};

/// Seeds handed to a single rollout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Episode {
    /// Unique to this (genome, weight, episode) triple.
    pub seed: u64,
    /// Shared by every rollout with the same episode index in one
    /// evaluation call, so tasks can draw common data (e.g. a minibatch).
    pub common_seed: u64,
}

impl Episode {
    pub fn new(seed: u64) -> Self {
        Episode {
            seed,
            common_seed: seed,
        }
    }
}

/// An environment that scores a network by cumulative reward.
pub trait Task: Send + Sync {
    fn name(&self) -> &str;

    fn n_inputs(&self) -> usize;

    fn n_outputs(&self) -> usize;

    /// Runs one episode and returns its cumulative reward. The network's
    /// arity has already been checked against the task.
    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64;

    fn check_arity(&self, genome: &Genome) -> Result<()> {
        if genome.n_inputs() != self.n_inputs() || genome.n_outputs() != self.n_outputs() {
            return Err(Error::ArityMismatch {
                expected_inputs: self.n_inputs(),
                expected_outputs: self.n_outputs(),
                inputs: genome.n_inputs(),
                outputs: genome.n_outputs(),
            });
        }
        Ok(())
    }
}

impl<T: Task + ?Sized> Task for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64 {
        (**self).rollout(net, weights, episode)
    }
}

impl<T: Task + ?Sized> Task for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn n_inputs(&self) -> usize {
        (**self).n_inputs()
    }
    fn n_outputs(&self) -> usize {
        (**self).n_outputs()
    }
    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64 {
        (**self).rollout(net, weights, episode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightSeries(Vec<f64>);

impl WeightSeries {
    /// The series used while searching.
    pub const SEARCH: [f64; 6] = [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0];
    /// The wider series used to re-evaluate finished networks.
    pub const EXTENDED: [f64; 8] = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];

    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::ConfigInvalid("weight series is empty".into()));
        }
        if let Some(bad) = values.iter().find(|w| **w == 0.0 || !w.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "weight series values must be finite and nonzero, got {bad}"
            )));
        }
        Ok(WeightSeries(values))
    }

    pub fn extended() -> Self {
        WeightSeries(Self::EXTENDED.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for WeightSeries {
    fn default() -> Self {
        WeightSeries(Self::SEARCH.to_vec())
    }
}

impl TryFrom<Vec<f64>> for WeightSeries {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightSeries::new(v)
    }
}

impl From<WeightSeries> for Vec<f64> {
    fn from(s: WeightSeries) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean_perf: f64,
    pub max_perf: f64,
    pub n_conn: usize,
    /// `(weight, mean score over episodes)` in series order.
    pub per_weight: Vec<(f64, f64)>,
}

impl EvalResult {
    pub fn from_scores(n_conn: usize, per_weight: Vec<(f64, f64)>) -> Self {
        let n = per_weight.len() as f64;
        let mean_perf = per_weight.iter().map(|&(_, s)| s).sum::<f64>() / n;
        let max_perf = per_weight.iter().map(|&(_, s)| s).fold(f64::NEG_INFINITY, f64::max);
        EvalResult {
            // the sum/n rounding can overshoot the max when all scores agree
            mean_perf: mean_perf.min(max_perf),
            max_perf,
            n_conn,
            per_weight,
        }
    }
}

/// Mixes a sequence of words into one seed (splitmix64 finalizer per word).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &p in parts {
        h = splitmix64(h ^ splitmix64(p.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeds for rollout `episode` of genome `genome_index` at weight position
/// `weight_index`, all under the evaluation seed `seed`.
pub fn episode_seeds(seed: u64, genome_index: u64, weight_index: u64, episode: u64) -> Episode {
    Episode {
        seed: derive_seed(&[seed, genome_index, weight_index, episode]),
        common_seed: derive_seed(&[seed, u64::MAX, episode]),
    }
}

pub(crate) fn evaluate_indexed<T: Task + ?Sized>(
    genome: &Genome,
    genome_index: u64,
    task: &T,
    series: &WeightSeries,
    episodes_per_weight: usize,
    seed: u64,
) -> Result<EvalResult> {
    task.check_arity(genome)?;
    let net = Network::compile(genome)?;
    let episodes = episodes_per_weight.max(1);
    let per_weight = series
        .values()
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let total: f64 = (0..episodes)
                .map(|e| {
                    let ep = episode_seeds(seed, genome_index, wi as u64, e as u64);
                    task.rollout(&net, Weights::Shared(w), ep)
                })
                .sum();
            (w, total / episodes as f64)
        })
        .collect();
    Ok(EvalResult::from_scores(genome.n_enabled(), per_weight))
}

/// Scores one genome: `episodes_per_weight` rollouts at every weight of the
/// series, averaged per weight.
pub fn evaluate<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    series: &WeightSeries,
    episodes_per_weight: usize,
    seed: u64,
) -> Result<EvalResult> {
    evaluate_indexed(genome, 0, task, series, episodes_per_weight, seed)
}

/// Scores every genome in parallel on the current rayon pool. The result is
/// independent of the number of workers.
pub fn evaluate_population<T: Task + ?Sized>(
    genomes: &[Genome],
    task: &T,
    series: &WeightSeries,
    episodes_per_weight: usize,
    seed: u64,
) -> Result<Vec<EvalResult>> {
    genomes
        .par_iter()
        .enumerate()
        .map(|(i, g)| evaluate_indexed(g, i as u64, task, series, episodes_per_weight, seed))
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads (`None` keeps the
/// global pool).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("failed to build worker pool")
            .install(f),
    }
}
