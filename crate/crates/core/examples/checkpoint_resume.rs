//! Interrupts a search, saves a checkpoint, and shows the resumed run
//! finishing exactly where an uninterrupted one does.
//!
//! cargo run --release --example checkpoint_resume

use std::sync::Arc;

use wann::search::{Checkpoint, Search, SearchConfig};
use wann::tasks::SwingUp;

fn config() -> wann::Result<SearchConfig> {
    let mut cfg = SearchConfig::defaults_for("swingup")?;
    cfg.population = 32;
    cfg.generations = 20;
    cfg.seed = 11;
    Ok(cfg)
}

fn main() -> wann::Result<()> {
    let dir = std::env::temp_dir().join("wann-checkpoint-example");
    std::fs::create_dir_all(&dir).map_err(|e| wann::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let path = dir.join("checkpoint.json");

    let mut first = Search::new(config()?, Arc::new(SwingUp::default()))?;
    for _ in 0..8 {
        first.step()?;
    }
    first.checkpoint().save(&path)?;
    println!("saved at generation {} to {}", first.generation(), path.display());

    let ck = Checkpoint::load(&path)?;
    let mut resumed = Search::from_checkpoint(ck, Arc::new(SwingUp::default()))?;
    let a = resumed.run()?.clone();

    let mut straight = Search::new(config()?, Arc::new(SwingUp::default()))?;
    let b = straight.run()?.clone();

    println!("resumed champion mean   {:?}", a.best_mean());
    println!("straight champion mean  {:?}", b.best_mean());
    println!("identical: {}", a == b && resumed.metrics() == straight.metrics());
    Ok(())
}
