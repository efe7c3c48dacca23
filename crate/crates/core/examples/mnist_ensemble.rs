//! Short MNIST search, then the champion as a multi-weight voting ensemble.
//!
//! Needs the IDX files in data/mnist (or $WANN_MNIST_DIR).
//! cargo run --release --example mnist_ensemble -- [generations]

use std::sync::Arc;

use wann::ensemble::{Ensemble, EnsembleSpec};
use wann::search::{Search, SearchConfig};
use wann::tasks::mnist::{default_data_dir, load_split, MnistTask, Split};

fn main() -> wann::Result<()> {
    let generations = std::env::args().nth(1).map_or(32, |s| s.parse().expect("generations"));
    let dir = default_data_dir();
    let train = Arc::new(load_split(&dir, Split::Train, true)?);
    let test = load_split(&dir, Split::Test, true)?;

    let mut cfg = SearchConfig::defaults_for("mnist")?;
    cfg.population = 96;
    cfg.generations = generations;
    cfg.batch_size = 500;
    let task = Arc::new(MnistTask::new(train, cfg.batch_size));
    let mut search = Search::new(cfg, task)?;
    let champ = search.run()?.best.clone().expect("champion");

    let spec = EnsembleSpec::default();
    let ens = Ensemble::new(&champ.genome, &spec)?;
    println!("champion: {} connections, {} hidden nodes", champ.genome.n_enabled(), champ.genome.n_hidden());
    println!("ensemble test accuracy: {:.4}", ens.accuracy(&test));

    let digits = ens.per_weight_digit_accuracy(&test);
    print!("weight ");
    (0..10).for_each(|d| print!("    {d}"));
    println!();
    for (w, row) in spec.weights.iter().zip(digits) {
        print!("{w:>6} ");
        for a in row {
            print!(" {:.2}", a.unwrap_or(f64::NAN));
        }
        println!();
    }
    Ok(())
}
