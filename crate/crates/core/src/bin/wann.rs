use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wann::ensemble::{write_digit_accuracy_csv, Ensemble, EnsembleSpec};
use wann::report::{conditions_table, emit_report, export_dot, trace_subnetwork};
use wann::search::{build_task, select_champion, ChampionArchive, Search, SearchConfig, SELECTION_TRIALS};
use wann::tasks::mnist::{default_data_dir, load_split, Split};
use wann::tuner::{default_grid, reinforce_tune, sweep_shared_weight, TuneConfig};
use wann::{Error, GenomeFile, Result, WeightSeries};

#[derive(Parser)]
#[command(name = "wann", version, about = "Weight agnostic neural network search")]
struct Cli {
    /// Worker threads for evaluation (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory holding the MNIST IDX files.
    #[arg(long, global = true)]
    mnist_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a search from a TOML config.
    Search {
        config: PathBuf,
        /// Continue from a checkpoint file instead of starting fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Score a genome under the four weight conditions.
    Report {
        genome: PathBuf,
        task: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Find the best shared weight on a grid over [-2, 2].
    Sweep {
        genome: PathBuf,
        task: String,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tune individual connection weights with population-based REINFORCE.
    Tune {
        genome: PathBuf,
        task: String,
        #[arg(long, default_value_t = 384)]
        population: usize,
        #[arg(long, default_value_t = 16)]
        episodes: usize,
        #[arg(long, default_value_t = 3000)]
        generations: usize,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output genome file with the tuned weights (default: overwrite input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a genome as a Graphviz digraph.
    ExportDot {
        genome: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract the subnetwork feeding one output.
    Trace {
        genome: PathBuf,
        output_idx: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate the champions of several runs and pick the best.
    SelectChampion {
        #[arg(required = true)]
        archives: Vec<PathBuf>,
        /// Task to evaluate on (default: inferred from the genome arity).
        #[arg(long)]
        task: Option<String>,
        #[arg(long, default_value_t = SELECTION_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the chosen champion genome.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    }
    let mnist_dir = cli.mnist_dir.as_deref();
    let task_for = |name: &str| build_task(name, mnist_dir, 1000);
    match cli.command {
        Command::Search { config, resume } => {
            let mut search = match resume {
                Some(ck) => Search::resume(ck)?,
                None => {
                    let mut cfg = SearchConfig::load(&config)?;
                    if cli.mnist_dir.is_some() {
                        cfg.mnist_dir = cli.mnist_dir.clone();
                    }
                    Search::from_config(cfg)?
                }
            };
            let archive = search.run()?;
            match &archive.best {
                Some(c) => println!(
                    "champion: mean {:.4}, {} connections, found at generation {}",
                    c.mean,
                    c.genome.n_enabled(),
                    c.generation
                ),
                None => println!("no champion"),
            }
        }
        Command::Report {
            genome,
            task,
            trials,
            seed,
            out,
        } => {
            let file = GenomeFile::load(&genome)?;
            let t = task_for(&task)?;
            let table = emit_report(&file.genome, &*t, trials, seed, file.weights.as_ref(), &out)?;
            print!("{}", conditions_table(&table));
            if task == "mnist" {
                let test = load_split(mnist_dir.map_or_else(default_data_dir, Path::to_path_buf), Split::Test, true)?;
                let spec = EnsembleSpec::default();
                let ens = Ensemble::new(&file.genome, &spec)?;
                println!("ensemble test accuracy: {:.4}", ens.accuracy(&test));
                for (w, a) in spec.weights.iter().zip(ens.single_weight_accuracies(&test)) {
                    println!("  weight {w:>5}: {a:.4}");
                }
                let path = out.join("digit_accuracy.csv");
                let mut f = fs::File::create(&path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                write_digit_accuracy_csv(&mut f, &spec.weights, &ens.per_weight_digit_accuracy(&test))
                    .map_err(|e| Error::Io { path, source: e })?;
            }
            println!("report written to {}", out.display());
        }
        Command::Sweep {
            genome,
            task,
            episodes,
            seed,
        } => {
            let file = GenomeFile::load(&genome)?;
            let t = task_for(&task)?;
            let (w, s) = sweep_shared_weight(&file.genome, &*t, &default_grid(), episodes, seed)?;
            println!("best shared weight {w} with mean {s:.4} over {episodes} episodes");
        }
        Command::Tune {
            genome,
            task,
            population,
            episodes,
            generations,
            sigma,
            learning_rate,
            seed,
            out,
        } => {
            let mut file = GenomeFile::load(&genome)?;
            let t = task_for(&task)?;
            let cfg = TuneConfig {
                population,
                episodes_per_candidate: episodes,
                generations,
                sigma,
                learning_rate,
            };
            let outcome = reinforce_tune(&file.genome, &*t, &cfg, seed)?;
            println!(
                "started from shared weight {}; final mean candidate reward {:.4}",
                outcome.initial_shared,
                outcome.history.last().copied().unwrap_or(f64::NAN)
            );
            file.weights = Some(outcome.weights);
            let dest = out.unwrap_or(genome);
            file.save(&dest)?;
            println!("tuned genome written to {}", dest.display());
        }
        Command::ExportDot { genome, out } => {
            let file = GenomeFile::load(&genome)?;
            write_or_print(out.as_deref(), &export_dot(&file.genome))?;
        }
        Command::Trace { genome, output_idx, out } => {
            let file = GenomeFile::load(&genome)?;
            let sub = trace_subnetwork(&file.genome, output_idx)?;
            let weights = file.weights.map(|w| {
                w.into_iter()
                    .filter(|(inn, _)| sub.conns().iter().any(|c| c.innovation == *inn))
                    .collect()
            });
            let json = serde_json::to_string_pretty(&GenomeFile { genome: sub, weights })?;
            write_or_print(out.as_deref(), &(json + "\n"))?;
        }
        Command::SelectChampion {
            archives,
            task,
            trials,
            seed,
            out,
        } => {
            let loaded = archives
                .iter()
                .map(ChampionArchive::load)
                .collect::<Result<Vec<_>>>()?;
            let name = match task {
                Some(t) => t,
                None => infer_task(&loaded)?,
            };
            let t = task_for(&name)?;
            let choice = select_champion(&loaded, &*t, &WeightSeries::extended(), trials, seed)?;
            for (path, m) in archives.iter().zip(&choice.means) {
                match m {
                    Some(m) => println!("{}: {m:.4}", path.display()),
                    None => println!("{}: no champion", path.display()),
                }
            }
            println!("champion: {}", archives[choice.index].display());
            if let Some(out) = out {
                let genome = loaded[choice.index].best.clone().expect("chosen archive has a champion").genome;
                GenomeFile { genome, weights: None }.save(out)?;
            }
        }
    }
    Ok(())
}

fn infer_task(archives: &[ChampionArchive]) -> Result<String> {
    let g = archives
        .iter()
        .find_map(|a| a.best.as_ref())
        .ok_or_else(|| Error::ConfigInvalid("no archive holds a champion".into()))?;
    match (g.genome.n_inputs(), g.genome.n_outputs()) {
        (5, 1) => Ok("swingup".into()),
        (256, 10) => Ok("mnist".into()),
        (i, o) => Err(Error::UnknownTask(format!("genome with {i} inputs and {o} outputs"))),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
