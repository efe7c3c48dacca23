//! Runs three short swing-up searches with different seeds and picks the
//! best champion by re-evaluating each on the extended weight series.
//!
//! cargo run --release --example champion_selection

use wann::search::{run_search, select_champion, SearchConfig, SELECTION_TRIALS};
use wann::tasks::SwingUp;
use wann::WeightSeries;

fn main() -> wann::Result<()> {
    let mut archives = Vec::new();
    for seed in 1..=3 {
        let mut cfg = SearchConfig::defaults_for("swingup")?;
        cfg.population = 48;
        cfg.generations = 32;
        cfg.seed = seed;
        let archive = run_search(cfg)?;
        println!("seed {seed}: search mean {:.2}", archive.best_mean().unwrap());
        archives.push(archive);
    }
    let choice = select_champion(&archives, &SwingUp::default(), &WeightSeries::extended(), SELECTION_TRIALS, 0)?;
    for (i, m) in choice.means.iter().enumerate() {
        println!("run {}: re-evaluated mean {:.2}", i + 1, m.unwrap());
    }
    println!("selected run {}", choice.index + 1);
    Ok(())
}
