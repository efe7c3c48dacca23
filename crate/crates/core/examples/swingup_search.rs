//! Evolves a swing-up controller with a small budget and prints the champion.
//!
//! cargo run --release --example swingup_search -- [generations] [output dir]

use wann::search::{Search, SearchConfig};
use wann::tuner::{report_four_conditions, Condition};
use wann::tasks::SwingUp;

fn main() -> wann::Result<()> {
    let mut args = std::env::args().skip(1);
    let generations = args.next().map_or(64, |s| s.parse().expect("generations"));

    let mut cfg = SearchConfig::defaults_for("swingup")?;
    cfg.population = 64;
    cfg.generations = generations;
    cfg.output_dir = args.next().map(Into::into);
    cfg.seed = 7;

    let mut search = Search::from_config(cfg)?;
    while search.generation() < search.config().generations {
        let m = search.step()?;
        if m.generation % 8 == 0 {
            println!(
                "gen {:4}  best {:7.2}  median {:7.2}  fewest conns on front 0: {}",
                m.generation, m.best_mean, m.median_mean, m.min_conn_front0
            );
        }
    }
    search.finish()?;
    search.write_outputs()?;

    let champ = search.archive().best.clone().expect("champion");
    println!("\nchampion: mean {:.2}, {} connections", champ.mean, champ.genome.n_enabled());
    let table = report_four_conditions(&champ.genome, &SwingUp::default(), 20, 1, None)?;
    for c in [Condition::RandomWeights, Condition::RandomSharedWeight, Condition::TunedSharedWeight] {
        let row = table.row(c).unwrap();
        println!("{:<22} {:8.2} +- {:.2}", c.title(), row.mean, row.std_error());
    }
    println!("best shared weight: {}", table.tuned_shared);
    Ok(())
}
