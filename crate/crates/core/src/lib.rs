//! Weight agnostic neural network search.
//!
//! Searches for feed-forward network topologies that solve a task when every
//! connection carries the same weight value. Topologies are scored over a
//! series of shared weights, ranked by Pareto dominance on performance and
//! connection count, and varied with three topology operators. The crate
//! also ships a cart-pole swing-up environment, an MNIST pipeline, ensemble
//! classification over weight values, and post-search weight tuning.

pub mod activation;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod genome;
pub mod ranking;
pub mod report;
pub mod search;
pub mod tasks;
pub mod tuner;
pub mod variation;

pub use activation::{apply_activation, ActivationKind};
pub use error::{Error, Result};
pub use evaluation::{evaluate, evaluate_population, EvalResult, Episode, Task, WeightSeries};
pub use genome::{forward, forward_individual, topo_order, ConnGene, Genome, GenomeFile, Network, NodeGene, NodeKind, WeightMap, Weights};
pub use ranking::{dominates, rank_population, tournament_select, ObjectiveMode, RankedPopulation};
pub use variation::{mutate, InnovationCounter, MutationConfig};
