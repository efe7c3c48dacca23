#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::Rng;
use wann::genome::{ConnGene, Genome, Network, NodeKind, Weights};
use wann::variation::{init_population, mutate, InnovationCounter, MutationConfig};
use wann::{ActivationKind, Episode, Task};

/// A genome grown by `steps` random mutations from a random sparse start.
pub fn random_genome<R: Rng>(rng: &mut R, n_in: usize, n_out: usize, steps: usize) -> Genome {
    let cfg = MutationConfig::with_initial_active(rng.random_range(0.2..=1.0));
    let innov = InnovationCounter::starting_at(0);
    let mut g = init_population(1, n_in, n_out, &cfg, &innov, rng).pop().unwrap();
    for _ in 0..steps {
        g = mutate(&g, &cfg, &innov, rng);
    }
    g
}

/// Activation formulas written out independently of the crate.
pub fn reference_activation(kind: ActivationKind, x: f64) -> f64 {
    use std::f64::consts::PI;
    match kind {
        ActivationKind::Linear => x,
        ActivationKind::Step => {
            if x > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        ActivationKind::Sin => (PI * x).sin(),
        ActivationKind::Cosine => (PI * x).cos(),
        ActivationKind::Gaussian => (-x * x / 2.0).exp(),
        ActivationKind::Tanh => x.tanh(),
        ActivationKind::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        ActivationKind::Abs => x.abs(),
        ActivationKind::Invert => -x,
        ActivationKind::ReLU => x.max(0.0),
    }
}

/// Memoized recursion from each output back through enabled connections.
pub fn recursive_forward(genome: &Genome, inputs: &[f64], weight: impl Fn(&ConnGene) -> f64) -> Vec<f64> {
    fn value(
        id: u64,
        genome: &Genome,
        inputs: &HashMap<u64, f64>,
        weight: &dyn Fn(&ConnGene) -> f64,
        memo: &mut HashMap<u64, f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&id) {
            return v;
        }
        let node = genome.node(id).unwrap();
        let v = match node.kind {
            NodeKind::Input => inputs[&id],
            NodeKind::Bias => 1.0,
            NodeKind::Hidden | NodeKind::Output => {
                let mut sum = 0.0;
                for c in genome.conns().iter().filter(|c| c.enabled && c.dst == id) {
                    sum += weight(c) * value(c.src, genome, inputs, weight, memo);
                }
                reference_activation(node.activation, sum)
            }
        };
        memo.insert(id, v);
        v
    }
    let by_id: HashMap<u64, f64> = genome.input_ids().zip(inputs.iter().copied()).collect();
    let mut memo = HashMap::new();
    genome
        .output_ids()
        .collect::<Vec<_>>()
        .into_iter()
        .map(|o| value(o, genome, &by_id, &weight, &mut memo))
        .collect()
}

pub fn dominates(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

/// Peels off the non-dominated set of the remaining points, one layer at a
/// time.
pub fn brute_force_fronts(points: &[[f64; 2]]) -> Vec<usize> {
    let mut front = vec![usize::MAX; points.len()];
    let mut remaining: Vec<usize> = (0..points.len()).collect();
    let mut k = 0;
    while !remaining.is_empty() {
        let layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(&points[j], &points[i])))
            .collect();
        for &i in &layer {
            front[i] = k;
        }
        remaining.retain(|i| !layer.contains(i));
        k += 1;
    }
    front
}

/// The MNIST directory, or `None` when the IDX files are not present.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = wann::tasks::mnist::default_data_dir();
    dir.join(wann::tasks::mnist::TRAIN_IMAGES).exists().then_some(dir)
}

/// Statements recovered from a DOT document.
#[derive(Debug, Default)]
pub struct DotGraph {
    pub directed: bool,
    pub nodes: BTreeSet<String>,
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Id(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Eq,
    Semi,
    Comma,
    Arrow,
    Line,
}

fn tokenize(text: &str) -> Result<Vec<Tok>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let single = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '=' => Some(Tok::Eq),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            toks.push(t);
            i += 1;
            continue;
        }
        let pair = [c, chars.get(i + 1).copied().unwrap_or(' ')];
        if pair == ['-', '>'] || pair == ['-', '-'] {
            toks.push(if pair[1] == '>' { Tok::Arrow } else { Tok::Line });
            i += 2;
            continue;
        }
        match c {
            c if c.is_whitespace() => i += 1,
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err("unterminated string".into()),
                        Some('\\') => {
                            s.push(*chars.get(i + 1).ok_or("dangling escape")?);
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                toks.push(Tok::Id(s));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Id(chars[start..i].iter().collect()));
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let start = i;
                i += 1;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let num: String = chars[start..i].iter().collect();
                if num == "-" || num.matches('.').count() > 1 {
                    return Err(format!("bad numeral {num}"));
                }
                toks.push(Tok::Id(num));
            }
            other => return Err(format!("unexpected character {other:?}")),
        }
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    graph: DotGraph,
}

const KEYWORDS: [&str; 6] = ["strict", "graph", "digraph", "node", "edge", "subgraph"];

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<(), String> {
        match self.bump() {
            Some(ref got) if *got == t => Ok(()),
            got => Err(format!("expected {t:?}, got {got:?} at token {}", self.pos - 1)),
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Id(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn id(&mut self) -> Result<String, String> {
        match self.bump() {
            Some(Tok::Id(s)) if !KEYWORDS.iter().any(|k| s.eq_ignore_ascii_case(k)) => Ok(s),
            got => Err(format!("expected an ID, got {got:?}")),
        }
    }

    fn graph(&mut self) -> Result<(), String> {
        if self.keyword("strict") {
            self.bump();
        }
        self.graph.directed = if self.keyword("digraph") {
            true
        } else if self.keyword("graph") {
            false
        } else {
            return Err("expected graph or digraph".into());
        };
        self.bump();
        if matches!(self.peek(), Some(Tok::Id(_))) {
            self.id()?;
        }
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)?;
        if self.pos != self.toks.len() {
            return Err("trailing tokens after graph".into());
        }
        Ok(())
    }

    fn stmt_list(&mut self) -> Result<(), String> {
        while !matches!(self.peek(), Some(Tok::RBrace) | None) {
            self.stmt()?;
            if self.peek() == Some(&Tok::Semi) {
                self.bump();
            }
        }
        Ok(())
    }

    fn stmt(&mut self) -> Result<(), String> {
        if self.keyword("graph") || self.keyword("node") || self.keyword("edge") {
            self.bump();
            return self.attr_list(true);
        }
        if self.keyword("subgraph") || self.peek() == Some(&Tok::LBrace) {
            let members = self.subgraph()?;
            if matches!(self.peek(), Some(Tok::Arrow | Tok::Line)) {
                return self.edge_rhs(members);
            }
            return Ok(());
        }
        if matches!(self.peek(), Some(Tok::Id(_))) && self.peek_at(1) == Some(&Tok::Eq) {
            self.id()?;
            self.bump();
            self.id()?;
            return Ok(());
        }
        let first = self.id()?;
        self.graph.nodes.insert(first.clone());
        if matches!(self.peek(), Some(Tok::Arrow | Tok::Line)) {
            return self.edge_rhs(vec![first]);
        }
        self.attr_list(false)
    }

    fn edge_rhs(&mut self, mut from: Vec<String>) -> Result<(), String> {
        while let Some(op) = self.peek().cloned() {
            match op {
                Tok::Arrow if !self.graph.directed => return Err("-> in an undirected graph".into()),
                Tok::Line if self.graph.directed => return Err("-- in a directed graph".into()),
                Tok::Arrow | Tok::Line => {}
                _ => break,
            }
            self.bump();
            let to = if self.keyword("subgraph") || self.peek() == Some(&Tok::LBrace) {
                self.subgraph()?
            } else {
                let id = self.id()?;
                self.graph.nodes.insert(id.clone());
                vec![id]
            };
            for a in &from {
                for b in &to {
                    self.graph.edges.push((a.clone(), b.clone()));
                }
            }
            from = to;
        }
        self.attr_list(false)
    }

    fn subgraph(&mut self) -> Result<Vec<String>, String> {
        if self.keyword("subgraph") {
            self.bump();
            if matches!(self.peek(), Some(Tok::Id(_))) {
                self.id()?;
            }
        }
        let before = self.graph.nodes.clone();
        self.expect(Tok::LBrace)?;
        self.stmt_list()?;
        self.expect(Tok::RBrace)?;
        Ok(self.graph.nodes.difference(&before).cloned().collect())
    }

    fn attr_list(&mut self, required: bool) -> Result<(), String> {
        if required && self.peek() != Some(&Tok::LBracket) {
            return Err("attribute statement without a list".into());
        }
        while self.peek() == Some(&Tok::LBracket) {
            self.bump();
            while self.peek() != Some(&Tok::RBracket) {
                self.id()?;
                self.expect(Tok::Eq)?;
                self.id()?;
                if matches!(self.peek(), Some(Tok::Semi | Tok::Comma)) {
                    self.bump();
                }
            }
            self.expect(Tok::RBracket)?;
        }
        Ok(())
    }
}

/// Checks `text` against the DOT language grammar (without ports and HTML
/// strings) and returns the node and edge statements it contains.
pub fn parse_dot(text: &str) -> Result<DotGraph, String> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
        graph: DotGraph::default(),
    };
    p.graph()?;
    Ok(p.graph)
}

/// Reward `-|w - target|^2` over the weights of a 3-input, 1-output genome
/// with one connection per input.
pub struct Quadratic {
    pub target: [f64; 3],
}

impl Quadratic {
    pub fn genome() -> Genome {
        let skel = Genome::skeleton(3, 1, ActivationKind::Linear);
        let conns = (0..3)
            .map(|i| ConnGene {
                innovation: i,
                src: i,
                dst: 4,
                enabled: true,
            })
            .collect();
        Genome::new(skel.nodes().to_vec(), conns, 3, 1).unwrap()
    }
}

impl Task for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn n_inputs(&self) -> usize {
        3
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn rollout(&self, net: &Network, weights: Weights<'_>, _episode: Episode) -> f64 {
        let w = |i: usize| match weights {
            Weights::Shared(v) => v,
            Weights::PerEdge(ws) => ws[i],
        };
        let by_innovation = |k: u64| net.innovations().iter().position(|&n| n == k).unwrap();
        -(0..3).map(|k| (w(by_innovation(k as u64)) - self.target[k]).powi(2)).sum::<f64>()
    }
}
