//! Initial populations and the three topology operators.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::genome::{topo_order, ConnGene, Genome, NodeGene, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub p_change_activation: f64,
    pub p_add_node: f64,
    pub p_add_conn: f64,
    /// Fraction of the possible input/bias -> output connections enabled in
    /// a fresh genome.
    pub initial_active_frac: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        MutationConfig {
            p_change_activation: 0.5,
            p_add_node: 0.25,
            p_add_conn: 0.25,
            initial_active_frac: 0.5,
        }
    }
}

impl MutationConfig {
    pub fn with_initial_active(initial_active_frac: f64) -> Self {
        MutationConfig {
            initial_active_frac,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.p_change_activation, self.p_add_node, self.p_add_conn];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::ConfigInvalid(format!(
                "operator probabilities must lie in [0, 1], got {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::ConfigInvalid(format!(
                "operator probabilities sum to {sum}, expected 1"
            )));
        }
        if !(self.initial_active_frac > 0.0 && self.initial_active_frac <= 1.0) {
            return Err(Error::ConfigInvalid(format!(
                "initial_active_frac must be in (0, 1], got {}",
                self.initial_active_frac
            )));
        }
        Ok(())
    }
}

/// Run-global source of connection innovation numbers.
#[derive(Debug, Default)]
pub struct InnovationCounter(AtomicU64);

impl InnovationCounter {
    pub fn starting_at(next: u64) -> Self {
        InnovationCounter(AtomicU64::new(next))
    }

    /// A counter that will not collide with anything already in `genomes`.
    pub fn after<'a>(genomes: impl IntoIterator<Item = &'a Genome>) -> Self {
        let next = genomes
            .into_iter()
            .filter_map(Genome::max_innovation)
            .max()
            .map_or(0, |m| m + 1);
        Self::starting_at(next)
    }

    pub fn next(&self) -> u64 {
        self.0.fetch_add(1, Ordering::Relaxed)
    }

    /// The value the next call to [`next`](Self::next) will return.
    pub fn peek(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    ChangeActivation,
    InsertNode,
    AddConnection,
}

/// Sparse genomes with no hidden nodes.
pub fn init_population<R: Rng + ?Sized>(
    size: usize,
    n_inputs: usize,
    n_outputs: usize,
    cfg: &MutationConfig,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Vec<Genome> {
    (0..size)
        .map(|_| init_genome(n_inputs, n_outputs, cfg, innovations, rng))
        .collect()
}

fn init_genome<R: Rng + ?Sized>(
    n_inputs: usize,
    n_outputs: usize,
    cfg: &MutationConfig,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Genome {
    let (mut nodes, _, _, _) = Genome::skeleton(n_inputs, n_outputs, ActivationKind::Linear).into_parts();
    for n in nodes.iter_mut().filter(|n| n.kind == NodeKind::Output) {
        n.activation = ActivationKind::random(rng);
    }
    let sources: Vec<u64> = nodes.iter().filter(|n| n.kind.is_source()).map(|n| n.id).collect();
    let outputs: Vec<u64> = nodes.iter().filter(|n| n.kind == NodeKind::Output).map(|n| n.id).collect();
    let mut conns = Vec::new();
    for &src in &sources {
        for &dst in &outputs {
            if rng.random::<f64>() < cfg.initial_active_frac {
                conns.push(ConnGene {
                    innovation: innovations.next(),
                    src,
                    dst,
                    enabled: true,
                });
            }
        }
    }
    Genome::from_parts_unchecked(nodes, conns, n_inputs, n_outputs)
}

/// Splits a uniformly chosen enabled connection through a new hidden node.
pub fn insert_node<R: Rng + ?Sized>(
    genome: &Genome,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Result<Genome> {
    let enabled: Vec<usize> = genome
        .conns()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.enabled)
        .map(|(i, _)| i)
        .collect();
    if enabled.is_empty() {
        return Err(Error::NoConnections);
    }
    let pick = enabled[rng.random_range(0..enabled.len())];
    let new_id = genome.max_node_id() + 1;
    let activation = ActivationKind::random(rng);

    let (mut nodes, mut conns, n_in, n_out) = genome.clone().into_parts();
    let split = conns[pick];
    conns[pick].enabled = false;
    nodes.push(NodeGene {
        id: new_id,
        kind: NodeKind::Hidden,
        activation,
    });
    conns.push(ConnGene {
        innovation: innovations.next(),
        src: split.src,
        dst: new_id,
        enabled: true,
    });
    conns.push(ConnGene {
        innovation: innovations.next(),
        src: new_id,
        dst: split.dst,
        enabled: true,
    });
    Ok(Genome::from_parts_unchecked(nodes, conns, n_in, n_out))
}

/// Every `(src, dst)` pair that [`add_connection`] may choose from, in
/// canonical order.
pub fn connection_candidates(genome: &Genome) -> Result<Vec<(u64, u64)>> {
    let order = topo_order(genome)?;
    let existing: HashSet<(u64, u64)> = genome.conns().iter().map(|c| (c.src, c.dst)).collect();
    let kind = |id: u64| genome.node(id).map(|n| n.kind).expect("ordered id exists");
    let kinds: Vec<NodeKind> = order.iter().map(|&id| kind(id)).collect();
    let mut out = Vec::new();
    for (i, &src) in order.iter().enumerate() {
        if kinds[i] == NodeKind::Output {
            continue;
        }
        for (j, &dst) in order.iter().enumerate().skip(i + 1) {
            if kinds[j].is_source() || existing.contains(&(src, dst)) {
                continue;
            }
            out.push((src, dst));
        }
    }
    Ok(out)
}

/// Connects a uniformly chosen pair of previously unconnected nodes that
/// respects the canonical topological order.
pub fn add_connection<R: Rng + ?Sized>(
    genome: &Genome,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Result<Genome> {
    let candidates = connection_candidates(genome)?;
    if candidates.is_empty() {
        return Err(Error::Saturated);
    }
    let (src, dst) = candidates[rng.random_range(0..candidates.len())];
    let (nodes, mut conns, n_in, n_out) = genome.clone().into_parts();
    conns.push(ConnGene {
        innovation: innovations.next(),
        src,
        dst,
        enabled: true,
    });
    Ok(Genome::from_parts_unchecked(nodes, conns, n_in, n_out))
}

/// Reassigns the activation of one uniformly chosen hidden or output node.
/// The new kind is drawn from all ten, so it may equal the old one.
pub fn change_activation<R: Rng + ?Sized>(genome: &Genome, rng: &mut R) -> Result<Genome> {
    let mutable: Vec<usize> = genome
        .nodes()
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n.kind, NodeKind::Hidden | NodeKind::Output))
        .map(|(i, _)| i)
        .collect();
    if mutable.is_empty() {
        return Err(Error::NoMutableNodes);
    }
    let pick = mutable[rng.random_range(0..mutable.len())];
    let (mut nodes, conns, n_in, n_out) = genome.clone().into_parts();
    nodes[pick].activation = ActivationKind::random(rng);
    Ok(Genome::from_parts_unchecked(nodes, conns, n_in, n_out))
}

#[derive(Debug, Clone)]
pub struct MutationOutcome {
    pub genome: Genome,
    pub drawn: Operator,
    /// `None` only when every fallback failed and the parent was copied.
    pub applied: Option<Operator>,
}

/// Applies one operator drawn by the configured probabilities. A failing
/// add-connection falls back to change-activation; a failing insert-node
/// falls back to add-connection, then change-activation.
pub fn mutate<R: Rng + ?Sized>(
    genome: &Genome,
    cfg: &MutationConfig,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Genome {
    mutate_detailed(genome, cfg, innovations, rng).genome
}

pub fn mutate_detailed<R: Rng + ?Sized>(
    genome: &Genome,
    cfg: &MutationConfig,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> MutationOutcome {
    let r: f64 = rng.random();
    let drawn = if r < cfg.p_change_activation {
        Operator::ChangeActivation
    } else if r < cfg.p_change_activation + cfg.p_add_node {
        Operator::InsertNode
    } else {
        Operator::AddConnection
    };
    let chain: &[Operator] = match drawn {
        Operator::ChangeActivation => &[Operator::ChangeActivation],
        Operator::AddConnection => &[Operator::AddConnection, Operator::ChangeActivation],
        Operator::InsertNode => &[
            Operator::InsertNode,
            Operator::AddConnection,
            Operator::ChangeActivation,
        ],
    };
    for &op in chain {
        let attempt = match op {
            Operator::ChangeActivation => change_activation(genome, rng),
            Operator::InsertNode => insert_node(genome, innovations, rng),
            Operator::AddConnection => add_connection(genome, innovations, rng),
        };
        if let Ok(child) = attempt {
            return MutationOutcome {
                genome: child,
                drawn,
                applied: Some(op),
            };
        }
    }
    MutationOutcome {
        genome: genome.clone(),
        drawn,
        applied: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::topo_order;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn one_conn_genome() -> Genome {
        let (nodes, _, _, _) = Genome::skeleton(1, 1, ActivationKind::Linear).into_parts();
        let conns = vec![ConnGene {
            innovation: 0,
            src: 0,
            dst: 2,
            enabled: true,
        }];
        Genome::new(nodes, conns, 1, 1).unwrap()
    }

    #[test]
    fn config_validation() {
        MutationConfig::default().validate().unwrap();
        let mut bad = MutationConfig::default();
        bad.p_add_conn = 0.3;
        assert!(bad.validate().is_err());
        let mut bad = MutationConfig::default();
        bad.initial_active_frac = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = MutationConfig::default();
        bad.p_change_activation = -0.5;
        bad.p_add_node = 1.25;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn full_initial_connectivity() {
        let cfg = MutationConfig::with_initial_active(1.0);
        let pop = init_population(20, 5, 2, &cfg, &InnovationCounter::default(), &mut rng(1));
        for g in &pop {
            assert_eq!(g.n_enabled(), 6 * 2);
            assert_eq!(g.n_hidden(), 0);
        }
    }

    #[test]
    fn initial_connection_count_is_binomial() {
        let cfg = MutationConfig::with_initial_active(0.5);
        let n = 10_000;
        let pop = init_population(n, 5, 1, &cfg, &InnovationCounter::default(), &mut rng(2));
        assert!(pop.iter().all(|g| g.n_hidden() == 0));
        let mean = pop.iter().map(|g| g.n_enabled() as f64).sum::<f64>() / n as f64;
        // Binomial(6, 0.5): variance 1.5, std error of the mean sqrt(1.5 / n)
        let bound = 3.0 * (1.5f64 / n as f64).sqrt();
        assert!((mean - 3.0).abs() <= bound, "mean {mean}, bound {bound}");
    }

    #[test]
    fn innovations_are_unique_across_population() {
        let counter = InnovationCounter::default();
        let pop = init_population(50, 4, 3, &MutationConfig::default(), &counter, &mut rng(3));
        let mut seen = HashSet::new();
        for g in &pop {
            for c in g.conns() {
                assert!(seen.insert(c.innovation));
            }
        }
        assert_eq!(counter.peek() as usize, seen.len());
    }

    #[test]
    fn insert_node_on_single_connection() {
        let g = one_conn_genome();
        let counter = InnovationCounter::after([&g]);
        let child = insert_node(&g, &counter, &mut rng(4)).unwrap();
        assert_eq!(child.n_hidden(), 1);
        assert_eq!(child.n_enabled(), 2);
        assert!(!child.conns()[0].enabled);
        let hidden = child.nodes().iter().find(|n| n.kind == NodeKind::Hidden).unwrap().id;
        assert!(child.enabled_conns().any(|c| c.src == 0 && c.dst == hidden));
        assert!(child.enabled_conns().any(|c| c.src == hidden && c.dst == 2));
        assert_eq!(child.conns()[1].innovation, 1);
        assert_eq!(child.conns()[2].innovation, 2);
    }

    #[test]
    fn repeated_insert_counts_nodes() {
        let mut g = one_conn_genome();
        let counter = InnovationCounter::after([&g]);
        let mut r = rng(5);
        for n in 1..=25 {
            g = insert_node(&g, &counter, &mut r).unwrap();
            assert_eq!(g.n_hidden(), n);
            topo_order(&g).unwrap();
        }
    }

    #[test]
    fn insert_node_needs_a_connection() {
        let g = Genome::skeleton(2, 1, ActivationKind::Tanh);
        let err = insert_node(&g, &InnovationCounter::default(), &mut rng(6)).unwrap_err();
        assert!(matches!(err, Error::NoConnections));
    }

    #[test]
    fn saturated_minimal_genome() {
        let cfg = MutationConfig::with_initial_active(1.0);
        let counter = InnovationCounter::default();
        let g = init_population(1, 3, 2, &cfg, &counter, &mut rng(7)).remove(0);
        let err = add_connection(&g, &counter, &mut rng(8)).unwrap_err();
        assert!(matches!(err, Error::Saturated));
    }

    #[test]
    fn add_connection_single_candidate() {
        // A(in) -> B(hidden) -> C(out), bias wired to B and C; only A -> C is missing.
        let nodes = vec![
            NodeGene { id: 0, kind: NodeKind::Input, activation: ActivationKind::Linear },
            NodeGene { id: 1, kind: NodeKind::Bias, activation: ActivationKind::Linear },
            NodeGene { id: 2, kind: NodeKind::Output, activation: ActivationKind::Linear },
            NodeGene { id: 3, kind: NodeKind::Hidden, activation: ActivationKind::Tanh },
        ];
        let c = |innovation, src, dst| ConnGene { innovation, src, dst, enabled: true };
        let conns = vec![c(0, 0, 3), c(1, 3, 2), c(2, 1, 3), c(3, 1, 2)];
        let g = Genome::new(nodes, conns, 1, 1).unwrap();
        assert_eq!(connection_candidates(&g).unwrap(), vec![(0, 2)]);
        let counter = InnovationCounter::after([&g]);
        let child = add_connection(&g, &counter, &mut rng(9)).unwrap();
        let added = child.conns().last().unwrap();
        assert_eq!((added.src, added.dst, added.innovation), (0, 2, 4));
    }

    #[test]
    fn change_activation_keeps_topology() {
        let g = one_conn_genome();
        let counter = InnovationCounter::after([&g]);
        let g = insert_node(&g, &counter, &mut rng(10)).unwrap();
        let mut r = rng(11);
        for _ in 0..100 {
            let child = change_activation(&g, &mut r).unwrap();
            assert_eq!(child.conns(), g.conns());
            assert_eq!(child.nodes().len(), g.nodes().len());
            let changed = child
                .nodes()
                .iter()
                .zip(g.nodes())
                .filter(|(a, b)| a.activation != b.activation)
                .count();
            assert!(changed <= 1);
        }
    }

    #[test]
    fn change_activation_frequencies() {
        // One mutable node only: output of a 1->1 skeleton.
        let g = Genome::skeleton(1, 1, ActivationKind::Linear);
        let mut r = rng(12);
        let n = 10_000;
        let mut counts = [0usize; 10];
        for _ in 0..n {
            let child = change_activation(&g, &mut r).unwrap();
            let act = child.nodes()[2].activation;
            counts[ActivationKind::ALL.iter().position(|&k| k == act).unwrap()] += 1;
        }
        let sigma = (n as f64 * 0.1 * 0.9).sqrt();
        for (k, &c) in counts.iter().enumerate() {
            assert!((c as f64 - n as f64 * 0.1).abs() <= 3.0 * sigma, "kind {k}: {c}");
        }
    }

    #[test]
    fn degenerate_mix_only_changes_activations() {
        let cfg = MutationConfig {
            p_change_activation: 1.0,
            p_add_node: 0.0,
            p_add_conn: 0.0,
            initial_active_frac: 0.5,
        };
        let counter = InnovationCounter::default();
        let mut r = rng(13);
        let mut g = init_population(1, 4, 2, &cfg, &counter, &mut r).remove(0);
        let conns = g.conns().to_vec();
        for _ in 0..200 {
            let out = mutate_detailed(&g, &cfg, &counter, &mut r);
            assert_eq!(out.applied, Some(Operator::ChangeActivation));
            g = out.genome;
            assert_eq!(g.conns(), &conns[..]);
        }
    }

    #[test]
    fn saturated_add_connection_falls_back() {
        let cfg = MutationConfig {
            p_change_activation: 0.0,
            p_add_node: 0.0,
            p_add_conn: 1.0,
            initial_active_frac: 1.0,
        };
        let counter = InnovationCounter::default();
        let mut r = rng(14);
        let g = init_population(1, 2, 1, &cfg, &counter, &mut r).remove(0);
        let out = mutate_detailed(&g, &cfg, &counter, &mut r);
        assert_eq!(out.drawn, Operator::AddConnection);
        assert_eq!(out.applied, Some(Operator::ChangeActivation));
    }

    #[test]
    fn empty_insert_node_falls_back_to_add_connection() {
        let cfg = MutationConfig {
            p_change_activation: 0.0,
            p_add_node: 1.0,
            p_add_conn: 0.0,
            initial_active_frac: 1.0,
        };
        let g = Genome::skeleton(2, 1, ActivationKind::Linear);
        let out = mutate_detailed(&g, &cfg, &InnovationCounter::default(), &mut rng(15));
        assert_eq!(out.applied, Some(Operator::AddConnection));
        assert_eq!(out.genome.n_enabled(), 1);
    }

    #[test]
    fn mutate_is_seed_deterministic() {
        let cfg = MutationConfig::default();
        let run = || {
            let counter = InnovationCounter::default();
            let mut r = rng(16);
            let mut g = init_population(1, 5, 1, &cfg, &counter, &mut r).remove(0);
            for _ in 0..100 {
                g = mutate(&g, &cfg, &counter, &mut r);
            }
            g
        };
        assert_eq!(run(), run());
    }
}
