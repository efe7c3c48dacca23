//! The generational search loop: configuration, champion tracking,
//! checkpoints and metrics.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{derive_seed, evaluate, evaluate_population, with_workers, EvalResult, Task, WeightSeries};
use crate::genome::{Genome, GenomeFile};
use crate::ranking::{next_generation, rank_population, ObjectiveMode, RankedPopulation};
use crate::tasks::mnist::{default_data_dir, load_split, MnistTask, Split};
use crate::tasks::SwingUp;
use crate::variation::{init_population, InnovationCounter, MutationConfig};

pub const TASK_NAMES: [&str; 2] = ["swingup", "mnist"];

/// Re-evaluation rollouts per weight when picking a champion across runs.
pub const SELECTION_TRIALS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub task: String,
    pub population: usize,
    pub generations: usize,
    pub tournament_size: usize,
    pub mutation: MutationConfig,
    pub weights: WeightSeries,
    pub episodes_per_weight: usize,
    pub seed: u64,
    /// Where checkpoints, metrics and the archive are written; nothing is
    /// written when unset.
    pub output_dir: Option<PathBuf>,
    /// Rollouts per weight when re-evaluating a champion candidate.
    pub champion_trials: usize,
    /// Generations between champion checks.
    pub champion_interval: usize,
    /// Generations between checkpoint writes.
    pub checkpoint_interval: usize,
    /// Worker threads for evaluation; unset uses every core.
    pub workers: Option<usize>,
    pub mnist_dir: Option<PathBuf>,
    pub batch_size: usize,
}

impl SearchConfig {
    /// The standard hyperparameters for a task.
    pub fn defaults_for(task: &str) -> Result<Self> {
        let (population, generations, tournament_size, initial_active) = match task {
            "swingup" => (192, 1024, 8, 0.5),
            "mnist" => (960, 4096, 32, 0.05),
            other => return Err(Error::UnknownTask(other.to_string())),
        };
        Ok(SearchConfig {
            task: task.to_string(),
            population,
            generations,
            tournament_size,
            mutation: MutationConfig::with_initial_active(initial_active),
            weights: WeightSeries::default(),
            episodes_per_weight: 1,
            seed: 0,
            output_dir: None,
            champion_trials: 96,
            champion_interval: 16,
            checkpoint_interval: 16,
            workers: None,
            mnist_dir: None,
            batch_size: 1000,
        })
    }

    /// Parses a TOML config. `task` is required; every other top-level key
    /// overrides the task defaults, and keys in a table named after the task
    /// (e.g. `[swingup]`) override those in turn. Tables for other tasks are
    /// ignored.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        let task = match table.get("task") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::ConfigInvalid("`task` must be a string".into())),
            None => return Err(Error::ConfigInvalid("missing `task`".into())),
        };
        let mut cfg = Self::defaults_for(&task)?;
        let section = match table.remove(&task) {
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => return Err(Error::ConfigInvalid(format!("`{task}` must be a table"))),
            None => None,
        };
        for name in TASK_NAMES {
            table.remove(name);
        }
        let parse = |t: toml::Table| -> Result<Overrides> {
            toml::Value::Table(t)
                .try_into()
                .map_err(|e: toml::de::Error| Error::ConfigInvalid(e.to_string()))
        };
        cfg.apply(parse(table)?)?;
        if let Some(section) = section {
            if section.contains_key("task") {
                return Err(Error::ConfigInvalid("`task` cannot be set inside a task table".into()));
            }
            cfg.apply(parse(section)?)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.output_dir, &mut cfg.mnist_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    fn apply(&mut self, o: Overrides) -> Result<()> {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        set!(population, generations, tournament_size, episodes_per_weight, seed, champion_trials);
        set!(champion_interval, checkpoint_interval, batch_size);
        if let Some(w) = o.weights {
            self.weights = WeightSeries::new(w)?;
        }
        if o.output_dir.is_some() {
            self.output_dir = o.output_dir;
        }
        if o.mnist_dir.is_some() {
            self.mnist_dir = o.mnist_dir;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        let m = &mut self.mutation;
        if let Some(v) = o.p_change_activation {
            m.p_change_activation = v;
        }
        if let Some(v) = o.p_add_node {
            m.p_add_node = v;
        }
        if let Some(v) = o.p_add_conn {
            m.p_add_conn = v;
        }
        if let Some(v) = o.initial_active_frac {
            m.initial_active_frac = v;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !TASK_NAMES.contains(&self.task.as_str()) {
            return Err(Error::UnknownTask(self.task.clone()));
        }
        self.validate_params()
    }

    /// Checks everything but the task name, for searches handed a task
    /// object directly.
    pub fn validate_params(&self) -> Result<()> {
        self.mutation.validate()?;
        let positive = [
            ("population", self.population),
            ("tournament_size", self.tournament_size),
            ("episodes_per_weight", self.episodes_per_weight),
            ("champion_trials", self.champion_trials),
            ("champion_interval", self.champion_interval),
            ("checkpoint_interval", self.checkpoint_interval),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::ConfigInvalid(format!("{name} must be positive")));
            }
        }
        if self.tournament_size > self.population {
            return Err(Error::ConfigInvalid(format!(
                "tournament_size {} exceeds population {}",
                self.tournament_size, self.population
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::ConfigInvalid("workers must be positive".into()));
        }
        Ok(())
    }

    /// Builds the task this config names.
    pub fn build_task(&self) -> Result<Arc<dyn Task>> {
        build_task(&self.task, self.mnist_dir.as_deref(), self.batch_size)
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    #[allow(dead_code)]
    task: Option<String>,
    population: Option<usize>,
    generations: Option<usize>,
    tournament_size: Option<usize>,
    episodes_per_weight: Option<usize>,
    seed: Option<u64>,
    champion_trials: Option<usize>,
    champion_interval: Option<usize>,
    checkpoint_interval: Option<usize>,
    batch_size: Option<usize>,
    weights: Option<Vec<f64>>,
    output_dir: Option<PathBuf>,
    mnist_dir: Option<PathBuf>,
    workers: Option<usize>,
    p_change_activation: Option<f64>,
    p_add_node: Option<f64>,
    p_add_conn: Option<f64>,
    initial_active_frac: Option<f64>,
}

/// Instantiates a task by name. MNIST reads the training split from
/// `mnist_dir` (or the default data directory), caching the preprocessed
/// images next to the raw files.
pub fn build_task(name: &str, mnist_dir: Option<&Path>, batch_size: usize) -> Result<Arc<dyn Task>> {
    match name {
        "swingup" => Ok(Arc::new(SwingUp::default())),
        "mnist" => {
            let dir = mnist_dir.map_or_else(default_data_dir, Path::to_path_buf);
            let train = load_split(&dir, Split::Train, true)?;
            Ok(Arc::new(MnistTask::new(Arc::new(train), batch_size)))
        }
        other => Err(Error::UnknownTask(other.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Champion {
    pub genome: Genome,
    /// Mean over the champion re-evaluation rollouts.
    pub mean: f64,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub generation: usize,
    pub mean_perf: f64,
    pub max_perf: f64,
    pub n_conn: usize,
}

/// The best network found so far, kept apart from the population, with the
/// population best of every generation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChampionArchive {
    pub best: Option<Champion>,
    pub history: Vec<HistoryEntry>,
}

impl ChampionArchive {
    pub fn best_mean(&self) -> Option<f64> {
        self.best.as_ref().map(|c| c.mean)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetrics {
    pub generation: usize,
    pub best_mean: f64,
    pub best_max: f64,
    pub median_mean: f64,
    /// Fewest enabled connections among the first Pareto front.
    pub min_conn_front0: usize,
    pub mode: ObjectiveMode,
}

impl GenerationMetrics {
    fn new(generation: usize, evals: &[EvalResult], ranked: &RankedPopulation) -> Self {
        let mut means: Vec<f64> = evals.iter().map(|e| e.mean_perf).collect();
        means.sort_by(f64::total_cmp);
        let n = means.len();
        let median_mean = if n % 2 == 1 {
            means[n / 2]
        } else {
            0.5 * (means[n / 2 - 1] + means[n / 2])
        };
        GenerationMetrics {
            generation,
            best_mean: means[n - 1],
            best_max: evals.iter().map(|e| e.max_perf).fold(f64::NEG_INFINITY, f64::max),
            median_mean,
            min_conn_front0: ranked.front(0).map(|i| evals[i].n_conn).min().unwrap_or(0),
            mode: ranked.mode,
        }
    }
}

pub fn metrics_csv(rows: &[GenerationMetrics]) -> String {
    let mut out = String::from("generation,best_mean,best_max,median_mean,min_conn_front0,mode\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.generation,
            r.best_mean,
            r.best_max,
            r.median_mean,
            r.min_conn_front0,
            r.mode.label()
        );
    }
    out
}

/// Index of the highest mean performance; ties go to the lowest index.
fn population_best(evals: &[EvalResult]) -> usize {
    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.mean_perf > evals[best].mean_perf {
            best = i;
        }
    }
    best
}

/// Everything needed to continue a search exactly where it stopped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: SearchConfig,
    pub generation: usize,
    pub population: Vec<Genome>,
    pub next_innovation: u64,
    pub rng: ChaCha8Rng,
    pub archive: ChampionArchive,
    pub metrics: Vec<GenerationMetrics>,
}

impl Checkpoint {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &serde_json::to_string(self)?)
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub struct Search {
    config: SearchConfig,
    task: Arc<dyn Task>,
    population: Vec<Genome>,
    innovations: InnovationCounter,
    rng: ChaCha8Rng,
    generation: usize,
    archive: ChampionArchive,
    metrics: Vec<GenerationMetrics>,
}

impl Search {
    /// A fresh search on `task`. The config's task name is not consulted.
    pub fn new(config: SearchConfig, task: Arc<dyn Task>) -> Result<Self> {
        config.validate_params()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let innovations = InnovationCounter::starting_at(0);
        let population = init_population(
            config.population,
            task.n_inputs(),
            task.n_outputs(),
            &config.mutation,
            &innovations,
            &mut rng,
        );
        Ok(Search {
            config,
            task,
            population,
            innovations,
            rng,
            generation: 0,
            archive: ChampionArchive::default(),
            metrics: Vec::new(),
        })
    }

    pub fn from_config(config: SearchConfig) -> Result<Self> {
        let task = config.build_task()?;
        Self::new(config, task)
    }

    pub fn from_checkpoint(ck: Checkpoint, task: Arc<dyn Task>) -> Result<Self> {
        ck.config.validate_params()?;
        if ck.population.len() != ck.config.population {
            return Err(Error::ConfigInvalid(format!(
                "checkpoint holds {} genomes, config expects {}",
                ck.population.len(),
                ck.config.population
            )));
        }
        for g in &ck.population {
            task.check_arity(g)?;
        }
        Ok(Search {
            innovations: InnovationCounter::starting_at(ck.next_innovation),
            config: ck.config,
            task,
            population: ck.population,
            rng: ck.rng,
            generation: ck.generation,
            archive: ck.archive,
            metrics: ck.metrics,
        })
    }

    /// Loads a checkpoint file and rebuilds its task from the stored config.
    pub fn resume(path: impl AsRef<Path>) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        let task = ck.config.build_task()?;
        Self::from_checkpoint(ck, task)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.config.clone(),
            generation: self.generation,
            population: self.population.clone(),
            next_innovation: self.innovations.peek(),
            rng: self.rng.clone(),
            archive: self.archive.clone(),
            metrics: self.metrics.clone(),
        }
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn population(&self) -> &[Genome] {
        &self.population
    }

    pub fn archive(&self) -> &ChampionArchive {
        &self.archive
    }

    pub fn metrics(&self) -> &[GenerationMetrics] {
        &self.metrics
    }

    fn evaluate_current(&self) -> Result<Vec<EvalResult>> {
        let cfg = &self.config;
        let seed = derive_seed(&[cfg.seed, self.generation as u64]);
        let task = &*self.task;
        let pop = &self.population;
        with_workers(cfg.workers, || {
            evaluate_population(pop, task, &cfg.weights, cfg.episodes_per_weight, seed)
        })
    }

    /// Compares the population best with the archived champion. A candidate
    /// with a higher search mean is re-evaluated with `champion_trials`
    /// rollouts per weight and replaces the champion only if that mean is
    /// higher too.
    fn champion_check(&mut self, evals: &[EvalResult]) -> Result<()> {
        let best = population_best(evals);
        let candidate_mean = evals[best].mean_perf;
        if self.archive.best_mean().is_some_and(|m| candidate_mean <= m) {
            return Ok(());
        }
        let cfg = &self.config;
        let genome = &self.population[best];
        let seed = derive_seed(&[cfg.seed, self.generation as u64, 0xC4A3]);
        let task = &*self.task;
        let re = with_workers(cfg.workers, || {
            evaluate(genome, task, &cfg.weights, cfg.champion_trials, seed)
        })?;
        if self.archive.best_mean().is_none_or(|m| re.mean_perf > m) {
            log::info!(
                "generation {}: new champion, mean {:.4} over {} rollouts per weight ({} connections)",
                self.generation,
                re.mean_perf,
                cfg.champion_trials,
                genome.n_enabled()
            );
            self.archive.best = Some(Champion {
                genome: genome.clone(),
                mean: re.mean_perf,
                generation: self.generation,
            });
        }
        Ok(())
    }

    /// Evaluates, ranks and varies the current population once.
    pub fn step(&mut self) -> Result<&GenerationMetrics> {
        let evals = self.evaluate_current()?;
        let ranked = rank_population(&evals, &mut self.rng);
        let best = &evals[population_best(&evals)];
        self.archive.history.push(HistoryEntry {
            generation: self.generation,
            mean_perf: best.mean_perf,
            max_perf: best.max_perf,
            n_conn: best.n_conn,
        });
        if self.generation.is_multiple_of(self.config.champion_interval) {
            self.champion_check(&evals)?;
        }
        let row = GenerationMetrics::new(self.generation, &evals, &ranked);
        log::debug!(
            "generation {}: best mean {:.4}, median {:.4}, mode {}",
            row.generation,
            row.best_mean,
            row.median_mean,
            row.mode.label()
        );
        self.metrics.push(row);
        self.population = next_generation(
            &self.population,
            &ranked,
            &self.config.mutation,
            self.config.tournament_size,
            &self.innovations,
            &mut self.rng,
        );
        self.generation += 1;
        Ok(self.metrics.last().expect("just pushed"))
    }

    /// Evaluates the final population and gives its best a last champion
    /// check, so the archive is filled even after zero generations.
    pub fn finish(&mut self) -> Result<&ChampionArchive> {
        let evals = self.evaluate_current()?;
        self.champion_check(&evals)?;
        Ok(&self.archive)
    }

    /// Writes the checkpoint, metrics log and archive into the output
    /// directory, if one is configured.
    pub fn write_outputs(&self) -> Result<()> {
        let Some(dir) = &self.config.output_dir else {
            return Ok(());
        };
        self.checkpoint().save(dir.join("checkpoint.json"))?;
        write_atomic(&dir.join("metrics.csv"), &metrics_csv(&self.metrics))?;
        self.archive.save(dir.join("archive.json"))?;
        if let Some(champ) = &self.archive.best {
            let file = GenomeFile {
                genome: champ.genome.clone(),
                weights: None,
            };
            file.save(dir.join("champion.json"))?;
        }
        Ok(())
    }

    /// Runs the remaining generations, then the final champion check.
    pub fn run(&mut self) -> Result<&ChampionArchive> {
        while self.generation < self.config.generations {
            self.step()?;
            if self.generation.is_multiple_of(self.config.checkpoint_interval) {
                self.write_outputs()?;
            }
            if self.generation.is_multiple_of(16) {
                let m = self.metrics.last().expect("stepped");
                log::info!(
                    "generation {}/{}: best mean {:.4}, champion {:?}",
                    self.generation,
                    self.config.generations,
                    m.best_mean,
                    self.archive.best_mean()
                );
            }
        }
        self.finish()?;
        self.write_outputs()?;
        Ok(&self.archive)
    }
}

pub fn run_search(config: SearchConfig) -> Result<ChampionArchive> {
    let mut search = Search::from_config(config)?;
    search.run()?;
    Ok(search.archive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChampionChoice {
    /// Position of the winning archive.
    pub index: usize,
    /// Re-evaluated mean per archive; `None` for archives without a champion.
    pub means: Vec<Option<f64>>,
}

/// Re-evaluates the champion of every archive `trials` times on each weight
/// of `series` and picks the highest mean (first on ties). All archives are
/// scored on the same rollout seeds.
pub fn select_champion<T: Task + ?Sized>(
    archives: &[ChampionArchive],
    task: &T,
    series: &WeightSeries,
    trials: usize,
    seed: u64,
) -> Result<ChampionChoice> {
    let means = archives
        .iter()
        .map(|a| {
            a.best
                .as_ref()
                .map(|c| evaluate(&c.genome, task, series, trials, seed).map(|r| r.mean_perf))
                .transpose()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut index = None;
    for (i, m) in means.iter().enumerate() {
        if let Some(m) = m {
            if index.is_none_or(|j: usize| *m > means[j].expect("scored")) {
                index = Some(i);
            }
        }
    }
    let index = index.ok_or_else(|| Error::ConfigInvalid("no archive holds a champion".into()))?;
    Ok(ChampionChoice { index, means })
}
