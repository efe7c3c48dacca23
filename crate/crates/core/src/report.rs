//! Inspection and reporting: DOT export, per-output subnetwork tracing, and
//! the four-condition weight report.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evaluation::{derive_seed, Task};
use crate::genome::{Genome, Network, NodeGene, NodeKind, WeightMap};
use crate::tuner::{default_grid, report_four_conditions, shared_weight_score, FourConditions};

fn node_label(n: &NodeGene) -> String {
    match n.kind {
        NodeKind::Input => format!("{}:input", n.id),
        NodeKind::Bias => format!("{}:bias", n.id),
        NodeKind::Hidden | NodeKind::Output => format!("{}:{}", n.id, n.activation.name()),
    }
}

/// Renders the genome as a Graphviz digraph. Inputs and the bias share the
/// source rank, outputs the sink rank; nodes are listed by id and edges
/// (enabled connections only) by innovation number.
pub fn export_dot(genome: &Genome) -> String {
    let mut nodes: Vec<&NodeGene> = genome.nodes().iter().collect();
    nodes.sort_by_key(|n| n.id);
    let line = |out: &mut String, n: &NodeGene, indent: &str| {
        let shape = match n.kind {
            NodeKind::Input | NodeKind::Bias => "box",
            NodeKind::Hidden => "ellipse",
            NodeKind::Output => "doublecircle",
        };
        let _ = writeln!(out, "{indent}n{} [label=\"{}\", shape={shape}];", n.id, node_label(n));
    };

    let mut out = String::from("digraph wann {\n    rankdir=LR;\n");
    out.push_str("    subgraph sources {\n        rank=source;\n");
    for n in nodes.iter().filter(|n| n.kind.is_source()) {
        line(&mut out, n, "        ");
    }
    out.push_str("    }\n    subgraph sinks {\n        rank=sink;\n");
    for n in nodes.iter().filter(|n| n.kind == NodeKind::Output) {
        line(&mut out, n, "        ");
    }
    out.push_str("    }\n");
    for n in nodes.iter().filter(|n| n.kind == NodeKind::Hidden) {
        line(&mut out, n, "    ");
    }
    let mut edges: Vec<_> = genome.enabled_conns().collect();
    edges.sort_by_key(|c| c.innovation);
    for c in edges {
        let _ = writeln!(out, "    n{} -> n{} [label=\"{}\"];", c.src, c.dst, c.innovation);
    }
    out.push_str("}\n");
    out
}

/// The part of the genome that feeds output `output_index`: every node with
/// an enabled path to that output, the output itself, and the enabled
/// connections between them. All inputs and the bias are kept so the result
/// takes the same input vector; ids and innovation numbers are preserved.
pub fn trace_subnetwork(genome: &Genome, output_index: usize) -> Result<Genome> {
    let target = genome.output_ids().nth(output_index).ok_or(Error::BadIndex {
        index: output_index,
        outputs: genome.n_outputs(),
    })?;
    let mut preds: HashMap<u64, Vec<u64>> = HashMap::new();
    for c in genome.enabled_conns() {
        preds.entry(c.dst).or_default().push(c.src);
    }
    let mut keep: HashSet<u64> = HashSet::from([target]);
    let mut stack = vec![target];
    while let Some(id) = stack.pop() {
        for &p in preds.get(&id).into_iter().flatten() {
            if keep.insert(p) {
                stack.push(p);
            }
        }
    }
    let nodes = genome
        .nodes()
        .iter()
        .filter(|n| n.kind.is_source() || keep.contains(&n.id))
        .cloned()
        .collect();
    let conns = genome
        .enabled_conns()
        .filter(|c| keep.contains(&c.dst))
        .cloned()
        .collect();
    Genome::new(nodes, conns, genome.n_inputs(), 1)
}

pub fn conditions_csv(table: &FourConditions) -> String {
    let mut out = String::from("condition,mean,stddev\n");
    for r in &table.rows {
        let _ = writeln!(out, "{},{},{}", r.condition.label(), r.mean, r.stddev);
    }
    out
}

pub fn conditions_table(table: &FourConditions) -> String {
    let mut out = format!("{:<22} {:>12} {:>10}\n", "Condition", "Mean", "Std");
    for r in &table.rows {
        let _ = writeln!(out, "{:<22} {:>12.2} {:>10.2}", r.condition.title(), r.mean, r.stddev);
    }
    let _ = writeln!(out, "tuned shared weight: {}", table.tuned_shared);
    out
}

/// Mean score at each weight of `grid`, `(weight, mean)` in grid order.
pub fn per_weight_curve<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    grid: &[f64],
    episodes: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    task.check_arity(genome)?;
    let net = Network::compile(genome)?;
    Ok(grid
        .par_iter()
        .map(|&w| (w, shared_weight_score(&net, task, w, episodes, seed)))
        .collect())
}

/// Writes `report.csv`, `report.txt` and `per_weight.csv` into `dir`.
pub fn emit_report<T: Task + ?Sized>(
    genome: &Genome,
    task: &T,
    trials: usize,
    seed: u64,
    tuned: Option<&WeightMap>,
    dir: &Path,
) -> Result<FourConditions> {
    let table = report_four_conditions(genome, task, trials, seed, tuned)?;
    let curve = per_weight_curve(genome, task, &default_grid(), trials, derive_seed(&[seed, 0xC0]))?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    };
    write("report.csv", conditions_csv(&table))?;
    write("report.txt", conditions_table(&table))?;
    let mut csv = String::from("weight,mean\n");
    for (w, s) in &curve {
        let _ = writeln!(csv, "{w},{s}");
    }
    write("per_weight.csv", csv)?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind;
    use crate::evaluation::Episode;
    use crate::genome::{forward, ConnGene, Weights};
    use std::collections::BTreeSet;

    fn hidden_ids(genome: &Genome) -> BTreeSet<u64> {
        genome
            .nodes()
            .iter()
            .filter(|n| n.kind == NodeKind::Hidden)
            .map(|n| n.id)
            .collect()
    }

    fn conn(innovation: u64, src: u64, dst: u64) -> ConnGene {
        ConnGene {
            innovation,
            src,
            dst,
            enabled: true,
        }
    }

    /// Two inputs (0, 1), bias 2, outputs 3 and 4, hidden 5 and 6.
    /// 0 -> 5 -> 3, 1 -> 6 -> 4, 5 -> 4, and a disabled 2 -> 3.
    fn two_headed() -> Genome {
        let (mut nodes, _, _, _) = Genome::skeleton(2, 2, ActivationKind::Tanh).into_parts();
        for (id, act) in [(5, ActivationKind::Sin), (6, ActivationKind::Gaussian)] {
            nodes.push(NodeGene {
                id,
                kind: NodeKind::Hidden,
                activation: act,
            });
        }
        let mut conns = vec![conn(1, 0, 5), conn(2, 5, 3), conn(3, 1, 6), conn(4, 6, 4), conn(5, 5, 4)];
        conns.push(ConnGene {
            enabled: false,
            ..conn(6, 2, 3)
        });
        Genome::new(nodes, conns, 2, 2).unwrap()
    }

    #[test]
    fn dot_of_empty_genome_has_no_edges() {
        let dot = export_dot(&Genome::skeleton(2, 1, ActivationKind::Sigmoid));
        assert!(!dot.contains("->"));
        assert!(dot.contains("n3 [label=\"3:sigmoid\""));
        assert!(dot.contains("n2 [label=\"2:bias\""));
    }

    #[test]
    fn dot_has_one_line_per_enabled_edge() {
        let dot = export_dot(&two_headed());
        assert_eq!(dot.lines().filter(|l| l.contains("->")).count(), 5);
        assert!(!dot.contains("n2 -> n3"));
        assert_eq!(dot, export_dot(&two_headed()));
        let first = dot.find("n0 -> n5").unwrap();
        let last = dot.find("n5 -> n4").unwrap();
        assert!(first < last);
    }

    #[test]
    fn trace_drops_the_other_head() {
        let g = two_headed();
        let sub = trace_subnetwork(&g, 0).unwrap();
        assert_eq!(sub.n_outputs(), 1);
        assert_eq!(sub.output_ids().collect::<Vec<_>>(), vec![3]);
        assert_eq!(hidden_ids(&sub), BTreeSet::from([5]));
        assert_eq!(sub.conns().iter().map(|c| c.innovation).collect::<Vec<_>>(), vec![1, 2]);

        let sub = trace_subnetwork(&g, 1).unwrap();
        assert_eq!(hidden_ids(&sub), BTreeSet::from([5, 6]));
        assert_eq!(sub.n_enabled(), 4);
    }

    #[test]
    fn trace_matches_full_network_output() {
        let g = two_headed();
        for idx in 0..2 {
            let sub = trace_subnetwork(&g, idx).unwrap();
            for x in [[0.3, -0.7], [1.5, 0.2], [-2.0, 2.0]] {
                for w in [-1.5, 0.5, 2.0] {
                    assert_eq!(forward(&sub, &x, w).unwrap()[0], forward(&g, &x, w).unwrap()[idx]);
                }
            }
        }
    }

    #[test]
    fn trace_of_disconnected_output_is_bare() {
        let g = Genome::skeleton(3, 2, ActivationKind::Step);
        let sub = trace_subnetwork(&g, 1).unwrap();
        assert_eq!(sub.n_enabled(), 0);
        assert_eq!(sub.output_ids().collect::<Vec<_>>(), vec![5]);
        assert_eq!(sub.nodes().len(), 5);
    }

    #[test]
    fn trace_rejects_bad_index() {
        assert!(matches!(
            trace_subnetwork(&two_headed(), 2),
            Err(Error::BadIndex { index: 2, outputs: 2 })
        ));
    }

    struct Flat;

    impl Task for Flat {
        fn name(&self) -> &str {
            "flat"
        }
        fn n_inputs(&self) -> usize {
            2
        }
        fn n_outputs(&self) -> usize {
            2
        }
        fn rollout(&self, _: &Network, _: Weights<'_>, _: Episode) -> f64 {
            1.25
        }
    }

    #[test]
    fn report_files_for_constant_task() {
        let dir = tempfile::tempdir().unwrap();
        let g = two_headed();
        let tuned: WeightMap = (1..=5).map(|i| (i, 0.5)).collect();
        let table = emit_report(&g, &Flat, 5, 1, Some(&tuned), dir.path()).unwrap();
        assert_eq!(table.rows.len(), 4);
        let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 5);
        for l in &lines {
            assert_eq!(l.split(',').count(), 3);
        }
        for l in &lines[1..] {
            assert!(l.ends_with(",1.25,0"), "{l}");
        }
        let curve = fs::read_to_string(dir.path().join("per_weight.csv")).unwrap();
        assert_eq!(curve.lines().count(), 41);
        assert!(fs::read_to_string(dir.path().join("report.txt"))
            .unwrap()
            .contains("Tuned Shared Weight"));
    }
}
