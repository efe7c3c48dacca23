//! Sweeps the shared weight of a hand-built swing-up network, then tunes the
//! individual weights and compares all four weight conditions.
//!
//! cargo run --release --example weight_tuning

use wann::genome::{ConnGene, Genome, NodeGene, NodeKind};
use wann::tasks::SwingUp;
use wann::tuner::{default_grid, reinforce_tune, report_four_conditions, sweep_shared_weight, TuneConfig};
use wann::ActivationKind;

/// Inputs x, x_dot, cos, sin, theta_dot; bias 5; output 6; one hidden node 7.
fn controller() -> wann::Result<Genome> {
    let mut nodes = Genome::skeleton(5, 1, ActivationKind::Tanh).nodes().to_vec();
    nodes.push(NodeGene {
        id: 7,
        kind: NodeKind::Hidden,
        activation: ActivationKind::Sin,
    });
    let edges = [(4, 7), (3, 7), (7, 6), (1, 6), (0, 6)];
    let conns = edges
        .iter()
        .enumerate()
        .map(|(i, &(src, dst))| ConnGene {
            innovation: i as u64,
            src,
            dst,
            enabled: true,
        })
        .collect();
    Genome::new(nodes, conns, 5, 1)
}

fn main() -> wann::Result<()> {
    let genome = controller()?;
    let task = SwingUp::default();

    let (w, score) = sweep_shared_weight(&genome, &task, &default_grid(), 8, 0)?;
    println!("best shared weight {w}: {score:.2}");

    let cfg = TuneConfig {
        population: 64,
        episodes_per_candidate: 4,
        generations: 100,
        ..TuneConfig::default()
    };
    let tuned = reinforce_tune(&genome, &task, &cfg, 0)?;
    println!(
        "tuning: mean candidate reward {:.2} -> {:.2}",
        tuned.history[0],
        tuned.history.last().unwrap()
    );

    let table = report_four_conditions(&genome, &task, 30, 1, Some(&tuned.weights))?;
    print!("{}", wann::report::conditions_table(&table));
    Ok(())
}
