//! One genome instantiated at several shared weights, used as a voting
//! classifier.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::WeightSeries;
use crate::genome::{Genome, Network, Weights};
use crate::tasks::mnist::{argmax, MnistDataset, CLASSES, PIXELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub weights: Vec<f64>,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            weights: WeightSeries::EXTENDED.to_vec(),
        }
    }
}

impl EnsembleSpec {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        WeightSeries::new(weights.clone())?;
        Ok(EnsembleSpec { weights })
    }
}

/// A compiled classifier ensemble.
#[derive(Debug, Clone)]
pub struct Ensemble {
    net: Network,
    weights: Vec<f64>,
}

impl Ensemble {
    pub fn new(genome: &Genome, spec: &EnsembleSpec) -> Result<Self> {
        if genome.n_inputs() != PIXELS || genome.n_outputs() != CLASSES {
            return Err(Error::ArityMismatch {
                expected_inputs: PIXELS,
                expected_outputs: CLASSES,
                inputs: genome.n_inputs(),
                outputs: genome.n_outputs(),
            });
        }
        if spec.weights.is_empty() {
            return Err(Error::ConfigInvalid("ensemble needs at least one weight".into()));
        }
        Ok(Ensemble {
            net: Network::compile(genome)?,
            weights: spec.weights.clone(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The digit each weight instantiation votes for, in weight order.
    pub fn individual_votes(&self, image: &[f64], scratch: &mut Vec<f64>) -> Vec<usize> {
        self.weights
            .iter()
            .map(|&w| argmax(self.net.activate(image, Weights::Shared(w), scratch)))
            .collect()
    }

    pub fn vote_counts(&self, image: &[f64], scratch: &mut Vec<f64>) -> [usize; CLASSES] {
        let mut counts = [0; CLASSES];
        for d in self.individual_votes(image, scratch) {
            counts[d] += 1;
        }
        counts
    }

    /// The most-voted digit; ties go to the lowest digit.
    pub fn predict(&self, image: &[f64], scratch: &mut Vec<f64>) -> usize {
        let counts = self.vote_counts(image, scratch);
        let mut best = 0;
        for d in 1..CLASSES {
            if counts[d] > counts[best] {
                best = d;
            }
        }
        best
    }

    pub fn accuracy(&self, data: &MnistDataset) -> f64 {
        if data.is_empty() {
            return 0.0;
        }
        let correct: usize = (0..data.len())
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| {
                usize::from(self.predict(data.image(i), scratch) == data.labels[i] as usize)
            })
            .sum();
        correct as f64 / data.len() as f64
    }

    /// Accuracy of each single weight instantiation, in weight order.
    pub fn single_weight_accuracies(&self, data: &MnistDataset) -> Vec<f64> {
        self.per_weight_digit_hits(data)
            .iter()
            .map(|row| {
                let hits: usize = row.iter().map(|&(h, _)| h).sum();
                hits as f64 / data.len().max(1) as f64
            })
            .collect()
    }

    /// `(correct, total)` per weight per digit.
    fn per_weight_digit_hits(&self, data: &MnistDataset) -> Vec<[(usize, usize); CLASSES]> {
        let zero = || vec![[(0usize, 0usize); CLASSES]; self.weights.len()];
        (0..data.len())
            .into_par_iter()
            .fold(
                || (zero(), Vec::new()),
                |(mut acc, mut scratch), i| {
                    let label = data.labels[i] as usize;
                    for (wi, d) in self.individual_votes(data.image(i), &mut scratch).into_iter().enumerate() {
                        acc[wi][label].1 += 1;
                        if d == label {
                            acc[wi][label].0 += 1;
                        }
                    }
                    (acc, scratch)
                },
            )
            .map(|(acc, _)| acc)
            .reduce(zero, |mut a, b| {
                for (ra, rb) in a.iter_mut().zip(b) {
                    for (ca, cb) in ra.iter_mut().zip(rb) {
                        ca.0 += cb.0;
                        ca.1 += cb.1;
                    }
                }
                a
            })
    }

    /// Entry `[i][d]` is the accuracy on samples of digit `d` under weight
    /// `i`, or `None` when the dataset has no sample of that digit.
    pub fn per_weight_digit_accuracy(&self, data: &MnistDataset) -> Vec<[Option<f64>; CLASSES]> {
        self.per_weight_digit_hits(data)
            .into_iter()
            .map(|row| row.map(|(hit, total)| (total > 0).then(|| hit as f64 / total as f64)))
            .collect()
    }
}

pub fn ensemble_predict(genome: &Genome, spec: &EnsembleSpec, image: &[f64]) -> Result<usize> {
    Ok(Ensemble::new(genome, spec)?.predict(image, &mut Vec::new()))
}

pub fn per_weight_digit_accuracy(
    genome: &Genome,
    spec: &EnsembleSpec,
    data: &MnistDataset,
) -> Result<Vec<[Option<f64>; CLASSES]>> {
    Ok(Ensemble::new(genome, spec)?.per_weight_digit_accuracy(data))
}

/// CSV with one row per weight: `weight,digit_0,...,digit_9`; digits absent
/// from the data are left empty.
pub fn write_digit_accuracy_csv<W: Write>(
    out: &mut W,
    weights: &[f64],
    matrix: &[[Option<f64>; CLASSES]],
) -> std::io::Result<()> {
    write!(out, "weight")?;
    for d in 0..CLASSES {
        write!(out, ",digit_{d}")?;
    }
    writeln!(out)?;
    for (w, row) in weights.iter().zip(matrix) {
        write!(out, "{w}")?;
        for cell in row {
            match cell {
                Some(a) => write!(out, ",{a}")?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    Ok(())
}
