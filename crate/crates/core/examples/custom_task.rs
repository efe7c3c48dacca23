//! Plugs a user-defined task into the search: a single-input network that
//! should output the sign of its input, for any shared weight.
//!
//! cargo run --release --example custom_task

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wann::search::{Search, SearchConfig};
use wann::{Episode, Network, Task, Weights};

struct Sign;

impl Task for Sign {
    fn name(&self) -> &str {
        "sign"
    }

    fn n_inputs(&self) -> usize {
        1
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn rollout(&self, net: &Network, weights: Weights<'_>, episode: Episode) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(episode.seed);
        let mut scratch = Vec::new();
        (0..20)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y = net.activate(&[x], weights, &mut scratch)[0];
                -(y - x.signum()).powi(2)
            })
            .sum()
    }
}

fn main() -> wann::Result<()> {
    // task-specific fields are ignored when the task is passed in directly
    let mut cfg = SearchConfig::defaults_for("swingup")?;
    cfg.task = "sign".into();
    cfg.population = 64;
    cfg.generations = 40;
    cfg.episodes_per_weight = 2;
    let mut search = Search::new(cfg, Arc::new(Sign))?;
    let champ = search.run()?.best.clone().expect("champion");
    println!("mean reward {:.3} with {} connections", champ.mean, champ.genome.n_enabled());
    for w in [-2.0, -0.5, 0.5, 2.0] {
        let out: Vec<String> = [-0.8, -0.1, 0.1, 0.8]
            .iter()
            .map(|&x| format!("{:+.2}", wann::forward(&champ.genome, &[x], w).unwrap()[0]))
            .collect();
        println!("w = {w:+}: {}", out.join(" "));
    }
    Ok(())
}
