//! Grows a random network, prints it as Graphviz DOT and traces the
//! sub-network behind one output.
//!
//! cargo run --example inspect_network | dot -Tsvg > net.svg

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use wann::report::{export_dot, trace_subnetwork};
use wann::variation::{init_population, mutate, InnovationCounter, MutationConfig};

fn main() -> wann::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = MutationConfig::with_initial_active(0.3);
    let innov = InnovationCounter::starting_at(0);
    let mut g = init_population(1, 4, 3, &cfg, &innov, &mut rng).pop().unwrap();
    for _ in 0..25 {
        g = mutate(&g, &cfg, &innov, &mut rng);
    }
    print!("{}", export_dot(&g));

    let sub = trace_subnetwork(&g, 1)?;
    eprintln!(
        "output 1 depends on {} of {} enabled connections and {} of {} hidden nodes",
        sub.n_enabled(),
        g.n_enabled(),
        sub.n_hidden(),
        g.n_hidden()
    );
    let x = [0.1, -0.4, 0.8, 0.3];
    eprintln!(
        "full output 1: {:.6}, traced: {:.6}",
        wann::forward(&g, &x, 1.5)?[1],
        wann::forward(&sub, &x, 1.5)?[0]
    );
    Ok(())
}
