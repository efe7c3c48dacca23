//! Network topologies as feed-forward DAGs, and their evaluation with one
//! weight shared by every connection.
//!
//! A [`Genome`] is an immutable description: node genes carrying an
//! activation, plus connection genes that may be enabled or disabled.
//! Evaluating it repeatedly goes through a compiled [`Network`], which fixes
//! the evaluation order once and can then run with either a shared weight or
//! a per-connection weight vector along the same arithmetic path.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};

/// Per-connection weights keyed by innovation number.
pub type WeightMap = BTreeMap<u64, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Input,
    Bias,
    Hidden,
    Output,
}

impl NodeKind {
    /// Input and bias nodes never receive connections.
    pub fn is_source(self) -> bool {
        matches!(self, NodeKind::Input | NodeKind::Bias)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u64,
    pub kind: NodeKind,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnGene {
    pub innovation: u64,
    pub src: u64,
    pub dst: u64,
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGenome")]
pub struct Genome {
    nodes: Vec<NodeGene>,
    conns: Vec<ConnGene>,
    n_inputs: usize,
    n_outputs: usize,
}

#[derive(Deserialize)]
struct RawGenome {
    nodes: Vec<NodeGene>,
    conns: Vec<ConnGene>,
    n_inputs: usize,
    n_outputs: usize,
}

impl TryFrom<RawGenome> for Genome {
    type Error = Error;

    fn try_from(raw: RawGenome) -> Result<Self> {
        Genome::new(raw.nodes, raw.conns, raw.n_inputs, raw.n_outputs)
    }
}

impl Genome {
    /// Builds a genome and checks every structural invariant, including
    /// acyclicity of the enabled connections.
    pub fn new(
        nodes: Vec<NodeGene>,
        conns: Vec<ConnGene>,
        n_inputs: usize,
        n_outputs: usize,
    ) -> Result<Self> {
        let genome = Genome {
            nodes,
            conns,
            n_inputs,
            n_outputs,
        };
        genome.validate()?;
        Ok(genome)
    }

    /// Skips validation. Only for operators that preserve invariants by
    /// construction; debug builds still check.
    pub(crate) fn from_parts_unchecked(
        nodes: Vec<NodeGene>,
        conns: Vec<ConnGene>,
        n_inputs: usize,
        n_outputs: usize,
    ) -> Self {
        let genome = Genome {
            nodes,
            conns,
            n_inputs,
            n_outputs,
        };
        debug_assert!(genome.validate().is_ok(), "{:?}", genome.validate());
        genome
    }

    /// The I/O skeleton every genome for an `n_inputs -> n_outputs` task
    /// starts from: inputs get ids `0..n_inputs`, the bias `n_inputs`, and
    /// outputs follow. No connections.
    pub fn skeleton(n_inputs: usize, n_outputs: usize, output_activation: ActivationKind) -> Self {
        let mut nodes = Vec::with_capacity(n_inputs + 1 + n_outputs);
        for i in 0..n_inputs {
            nodes.push(NodeGene {
                id: i as u64,
                kind: NodeKind::Input,
                activation: ActivationKind::Linear,
            });
        }
        nodes.push(NodeGene {
            id: n_inputs as u64,
            kind: NodeKind::Bias,
            activation: ActivationKind::Linear,
        });
        for o in 0..n_outputs {
            nodes.push(NodeGene {
                id: (n_inputs + 1 + o) as u64,
                kind: NodeKind::Output,
                activation: output_activation,
            });
        }
        Genome::from_parts_unchecked(nodes, Vec::new(), n_inputs, n_outputs)
    }

    pub fn nodes(&self) -> &[NodeGene] {
        &self.nodes
    }

    pub fn conns(&self) -> &[ConnGene] {
        &self.conns
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn node(&self, id: u64) -> Option<&NodeGene> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn enabled_conns(&self) -> impl Iterator<Item = &ConnGene> {
        self.conns.iter().filter(|c| c.enabled)
    }

    /// Number of enabled connections; the complexity objective.
    pub fn n_enabled(&self) -> usize {
        self.conns.iter().filter(|c| c.enabled).count()
    }

    pub fn n_hidden(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden).count()
    }

    /// Ids of input nodes in input-vector order.
    pub fn input_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Input).map(|n| n.id)
    }

    /// Ids of output nodes in output-vector order.
    pub fn output_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Output).map(|n| n.id)
    }

    pub fn bias_id(&self) -> u64 {
        self.nodes
            .iter()
            .find(|n| n.kind == NodeKind::Bias)
            .map(|n| n.id)
            .expect("validated genome has a bias node")
    }

    pub fn max_node_id(&self) -> u64 {
        self.nodes.iter().map(|n| n.id).max().unwrap_or(0)
    }

    pub fn max_innovation(&self) -> Option<u64> {
        self.conns.iter().map(|c| c.innovation).max()
    }

    pub(crate) fn into_parts(self) -> (Vec<NodeGene>, Vec<ConnGene>, usize, usize) {
        (self.nodes, self.conns, self.n_inputs, self.n_outputs)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidGenome(msg));
        let mut kinds = HashMap::with_capacity(self.nodes.len());
        for n in &self.nodes {
            if kinds.insert(n.id, n.kind).is_some() {
                return invalid(format!("duplicate node id {}", n.id));
            }
        }
        let count = |k: NodeKind| self.nodes.iter().filter(|n| n.kind == k).count();
        if count(NodeKind::Bias) != 1 {
            return invalid(format!("expected one bias node, found {}", count(NodeKind::Bias)));
        }
        if count(NodeKind::Input) != self.n_inputs {
            return invalid(format!(
                "n_inputs is {} but {} input nodes present",
                self.n_inputs,
                count(NodeKind::Input)
            ));
        }
        if count(NodeKind::Output) != self.n_outputs {
            return invalid(format!(
                "n_outputs is {} but {} output nodes present",
                self.n_outputs,
                count(NodeKind::Output)
            ));
        }
        let mut innovations = HashSet::with_capacity(self.conns.len());
        let mut pairs = HashSet::with_capacity(self.conns.len());
        for c in &self.conns {
            if !innovations.insert(c.innovation) {
                return invalid(format!("duplicate innovation {}", c.innovation));
            }
            if !pairs.insert((c.src, c.dst)) {
                return invalid(format!("duplicate connection {} -> {}", c.src, c.dst));
            }
            let (Some(&src), Some(&dst)) = (kinds.get(&c.src), kinds.get(&c.dst)) else {
                return invalid(format!(
                    "connection {} references a missing node",
                    c.innovation
                ));
            };
            if c.src == c.dst {
                return invalid(format!("self loop on node {}", c.src));
            }
            if dst.is_source() {
                return invalid(format!("connection {} targets an input or bias", c.innovation));
            }
            if src == NodeKind::Output {
                return invalid(format!("connection {} leaves an output", c.innovation));
            }
        }
        topo_order_of(&self.nodes, &self.conns).map(|_| ())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// A genome together with optional tuned per-connection weights, the on-disk
/// form written by the tools in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenomeFile {
    #[serde(flatten)]
    pub genome: Genome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightMap>,
}

impl GenomeFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

/// A total order of node ids such that every enabled connection points
/// forward. Non-output nodes are ordered by Kahn's algorithm taking the
/// smallest available id first; outputs (which are always sinks) follow by
/// id.
pub fn topo_order(genome: &Genome) -> Result<Vec<u64>> {
    topo_order_of(&genome.nodes, &genome.conns)
}

fn topo_order_of(nodes: &[NodeGene], conns: &[ConnGene]) -> Result<Vec<u64>> {
    let mut indegree: HashMap<u64, usize> = nodes
        .iter()
        .filter(|n| n.kind != NodeKind::Output)
        .map(|n| (n.id, 0))
        .collect();
    let mut succ: HashMap<u64, Vec<u64>> = HashMap::new();
    for c in conns.iter().filter(|c| c.enabled) {
        if let Some(d) = indegree.get_mut(&c.dst) {
            *d += 1;
            succ.entry(c.src).or_default().push(c.dst);
        }
    }
    let mut ready: BinaryHeap<Reverse<u64>> = indegree
        .iter()
        .filter(|&(_, &d)| d == 0)
        .map(|(&id, _)| Reverse(id))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(id)) = ready.pop() {
        order.push(id);
        if let Some(next) = succ.get(&id) {
            for dst in next {
                let d = indegree.get_mut(dst).expect("successor is a non-output node");
                *d -= 1;
                if *d == 0 {
                    ready.push(Reverse(*dst));
                }
            }
        }
    }
    if order.len() != indegree.len() {
        return Err(Error::CycleDetected);
    }
    let mut outputs: Vec<u64> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Output)
        .map(|n| n.id)
        .collect();
    outputs.sort_unstable();
    order.extend(outputs);
    Ok(order)
}

/// Connection weights for one activation of a [`Network`].
#[derive(Debug, Clone, Copy)]
pub enum Weights<'a> {
    Shared(f64),
    /// Indexed like [`Network::innovations`].
    PerEdge(&'a [f64]),
}

#[derive(Debug, Clone)]
struct NodeStep {
    slot: usize,
    activation: ActivationKind,
    edges: std::ops::Range<usize>,
}

/// A genome compiled for repeated evaluation.
///
/// Nodes that cannot reach any output are dropped; they cannot influence the
/// result.
#[derive(Debug, Clone)]
pub struct Network {
    n_inputs: usize,
    n_slots: usize,
    input_slots: Vec<usize>,
    bias_slot: usize,
    output_slots: Vec<usize>,
    steps: Vec<NodeStep>,
    // (source slot, weight index) per incoming edge, grouped by step
    edges: Vec<(usize, usize)>,
    innovations: Vec<u64>,
}

impl Network {
    pub fn compile(genome: &Genome) -> Result<Self> {
        let order = topo_order(genome)?;
        let slot_of: HashMap<u64, usize> = genome
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();

        let enabled: Vec<&ConnGene> = genome.enabled_conns().collect();
        let innovations: Vec<u64> = enabled.iter().map(|c| c.innovation).collect();

        let mut incoming: HashMap<u64, Vec<(usize, usize)>> = HashMap::new();
        let mut succ: HashMap<u64, Vec<u64>> = HashMap::new();
        for (w_idx, c) in enabled.iter().enumerate() {
            incoming.entry(c.dst).or_default().push((slot_of[&c.src], w_idx));
            succ.entry(c.src).or_default().push(c.dst);
        }

        // Backward reachability from the outputs.
        let mut useful: HashSet<u64> = genome.output_ids().collect();
        for &id in order.iter().rev() {
            let feeds_useful = succ
                .get(&id)
                .is_some_and(|next| next.iter().any(|d| useful.contains(d)));
            if feeds_useful {
                useful.insert(id);
            }
        }

        let mut steps = Vec::new();
        let mut edges = Vec::new();
        for id in order {
            let node = &genome.nodes[slot_of[&id]];
            if node.kind.is_source() || !useful.contains(&id) {
                continue;
            }
            let start = edges.len();
            if let Some(inc) = incoming.get(&id) {
                edges.extend_from_slice(inc);
            }
            steps.push(NodeStep {
                slot: slot_of[&id],
                activation: node.activation,
                edges: start..edges.len(),
            });
        }

        Ok(Network {
            n_inputs: genome.n_inputs,
            n_slots: genome.nodes.len(),
            input_slots: genome.input_ids().map(|id| slot_of[&id]).collect(),
            bias_slot: slot_of[&genome.bias_id()],
            output_slots: genome.output_ids().map(|id| slot_of[&id]).collect(),
            steps,
            edges,
            innovations,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.output_slots.len()
    }

    /// Innovation numbers of the enabled connections, in weight-vector order.
    pub fn innovations(&self) -> &[u64] {
        &self.innovations
    }

    pub fn n_weights(&self) -> usize {
        self.innovations.len()
    }

    /// Lays out a weight map as a per-edge vector.
    pub fn weight_vector(&self, map: &WeightMap) -> Result<Vec<f64>> {
        self.innovations
            .iter()
            .map(|inn| {
                map.get(inn)
                    .copied()
                    .ok_or(Error::MissingWeight { innovation: *inn })
            })
            .collect()
    }

    pub fn weight_map(&self, vector: &[f64]) -> WeightMap {
        self.innovations.iter().copied().zip(vector.iter().copied()).collect()
    }

    /// Evaluates the network, using `scratch` as node storage. Returns the
    /// output values in output order.
    pub fn activate<'s>(
        &self,
        inputs: &[f64],
        weights: Weights<'_>,
        scratch: &'s mut Vec<f64>,
    ) -> &'s [f64] {
        assert_eq!(inputs.len(), self.n_inputs, "input vector length");
        if let Weights::PerEdge(w) = weights {
            assert_eq!(w.len(), self.innovations.len(), "weight vector length");
        }
        let n_out = self.output_slots.len();
        scratch.clear();
        scratch.resize(self.n_slots + n_out, 0.0);
        let (values, out) = scratch.split_at_mut(self.n_slots);
        for (&slot, &x) in self.input_slots.iter().zip(inputs) {
            values[slot] = x;
        }
        values[self.bias_slot] = 1.0;
        for step in &self.steps {
            let mut sum = 0.0;
            for &(src, w_idx) in &self.edges[step.edges.clone()] {
                let w = match weights {
                    Weights::Shared(w) => w,
                    Weights::PerEdge(ws) => ws[w_idx],
                };
                sum += w * values[src];
            }
            values[step.slot] = step.activation.apply(sum);
        }
        for (o, &slot) in out.iter_mut().zip(&self.output_slots) {
            *o = values[slot];
        }
        &scratch[self.n_slots..]
    }

    pub fn forward(&self, inputs: &[f64], weights: Weights<'_>) -> Vec<f64> {
        let mut scratch = Vec::new();
        self.activate(inputs, weights, &mut scratch).to_vec()
    }
}

fn check_inputs(genome: &Genome, inputs: &[f64]) -> Result<()> {
    if inputs.len() != genome.n_inputs {
        return Err(Error::ArityMismatch {
            expected_inputs: inputs.len(),
            expected_outputs: genome.n_outputs,
            inputs: genome.n_inputs,
            outputs: genome.n_outputs,
        });
    }
    Ok(())
}

/// Evaluates `genome` with every enabled connection set to `shared_weight`.
pub fn forward(genome: &Genome, inputs: &[f64], shared_weight: f64) -> Result<Vec<f64>> {
    check_inputs(genome, inputs)?;
    let net = Network::compile(genome)?;
    Ok(net.forward(inputs, Weights::Shared(shared_weight)))
}

/// Evaluates `genome` with a weight per enabled connection.
pub fn forward_individual(genome: &Genome, inputs: &[f64], weights: &WeightMap) -> Result<Vec<f64>> {
    check_inputs(genome, inputs)?;
    let net = Network::compile(genome)?;
    let w = net.weight_vector(weights)?;
    Ok(net.forward(inputs, Weights::PerEdge(&w)))
}
