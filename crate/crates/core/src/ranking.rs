//! Pareto ranking with the probabilistic complexity objective, and
//! tournament selection over the ranked population.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::evaluation::EvalResult;
use crate::genome::Genome;
use crate::variation::{mutate, InnovationCounter, MutationConfig};

/// Probability that a ranking event uses the connection-count objective.
pub const CONNECTION_OBJECTIVE_PROB: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveMode {
    /// Maximize mean performance, minimize enabled connections.
    MeanAndConnections,
    /// Maximize mean performance and max performance.
    MeanAndMax,
}

impl ObjectiveMode {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random::<f64>() < CONNECTION_OBJECTIVE_PROB {
            ObjectiveMode::MeanAndConnections
        } else {
            ObjectiveMode::MeanAndMax
        }
    }

    /// Both objectives, oriented so that larger is better.
    pub fn objectives(self, r: &EvalResult) -> [f64; 2] {
        match self {
            ObjectiveMode::MeanAndConnections => [r.mean_perf, -(r.n_conn as f64)],
            ObjectiveMode::MeanAndMax => [r.mean_perf, r.max_perf],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ObjectiveMode::MeanAndConnections => "mean_conn",
            ObjectiveMode::MeanAndMax => "mean_max",
        }
    }
}

pub fn dominates(a: &EvalResult, b: &EvalResult, mode: ObjectiveMode) -> bool {
    dominates_obj(&mode.objectives(a), &mode.objectives(b))
}

fn dominates_obj(a: &[f64; 2], b: &[f64; 2]) -> bool {
    a[0] >= b[0] && a[1] >= b[1] && (a[0] > b[0] || a[1] > b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// Position of the genome in the evaluated population.
    pub index: usize,
    pub front: usize,
    pub crowding: f64,
}

/// Entries sorted best first: ascending front, descending crowding
/// distance, ascending index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPopulation {
    pub entries: Vec<RankEntry>,
    pub mode: ObjectiveMode,
}

impl RankedPopulation {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> usize {
        self.entries[0].index
    }

    /// Genome indices of front `k`, in rank order.
    pub fn front(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().filter(move |e| e.front == k).map(|e| e.index)
    }

    pub fn n_fronts(&self) -> usize {
        self.entries.iter().map(|e| e.front + 1).max().unwrap_or(0)
    }
}

/// Non-dominated sorting: returns the front number of each point.
pub fn non_dominated_fronts(points: &[[f64; 2]]) -> Vec<usize> {
    let n = points.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates_obj(&points[i], &points[j]) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates_obj(&points[j], &points[i]) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut front_of = vec![usize::MAX; n];
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    let mut k = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            front_of[i] = k;
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        current = next;
        k += 1;
    }
    front_of
}

/// Crowding distance of each member of one front; `members` index into
/// `points`.
pub fn crowding_distance(points: &[[f64; 2]], members: &[usize]) -> Vec<f64> {
    let m = members.len();
    let mut dist = vec![0.0; m];
    if m <= 2 {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        return dist;
    }
    for obj in 0..2 {
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            points[members[a]][obj]
                .total_cmp(&points[members[b]][obj])
                .then(members[a].cmp(&members[b]))
        });
        let lo = points[members[order[0]]][obj];
        let hi = points[members[order[m - 1]]][obj];
        let range = hi - lo;
        // a flat objective has no boundary to protect
        if range <= 0.0 {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[m - 1]] = f64::INFINITY;
        for w in 1..m - 1 {
            let prev = points[members[order[w - 1]]][obj];
            let next = points[members[order[w + 1]]][obj];
            dist[order[w]] += (next - prev) / range;
        }
    }
    dist
}

/// Ranks with a fixed objective mode.
pub fn rank_with_mode(evals: &[EvalResult], mode: ObjectiveMode) -> RankedPopulation {
    let points: Vec<[f64; 2]> = evals.iter().map(|r| mode.objectives(r)).collect();
    let fronts = non_dominated_fronts(&points);
    let n_fronts = fronts.iter().map(|f| f + 1).max().unwrap_or(0);
    let mut entries = Vec::with_capacity(evals.len());
    for k in 0..n_fronts {
        let members: Vec<usize> = (0..evals.len()).filter(|&i| fronts[i] == k).collect();
        let crowd = crowding_distance(&points, &members);
        entries.extend(members.iter().zip(crowd).map(|(&index, crowding)| RankEntry {
            index,
            front: k,
            crowding,
        }));
    }
    entries.sort_by(|a, b| {
        a.front
            .cmp(&b.front)
            .then_with(|| b.crowding.total_cmp(&a.crowding))
            .then_with(|| a.index.cmp(&b.index))
    });
    RankedPopulation { entries, mode }
}

/// Draws the objective mode for this generation, then ranks.
pub fn rank_population<R: Rng + ?Sized>(evals: &[EvalResult], rng: &mut R) -> RankedPopulation {
    let mode = ObjectiveMode::draw(rng);
    rank_with_mode(evals, mode)
}

/// Samples `tournament_size` ranked entries uniformly with replacement and
/// returns the genome index of the best of them.
pub fn tournament_select<R: Rng + ?Sized>(
    ranked: &RankedPopulation,
    tournament_size: usize,
    rng: &mut R,
) -> usize {
    assert!(!ranked.is_empty(), "tournament over an empty population");
    let n = ranked.len();
    let best_pos = (0..tournament_size.max(1))
        .map(|_| rng.random_range(0..n))
        .min()
        .expect("at least one draw");
    ranked.entries[best_pos].index
}

/// Keeps the top-ranked genome and fills the rest with mutated tournament
/// winners.
pub fn next_generation<R: Rng + ?Sized>(
    population: &[Genome],
    ranked: &RankedPopulation,
    cfg: &MutationConfig,
    tournament_size: usize,
    innovations: &InnovationCounter,
    rng: &mut R,
) -> Vec<Genome> {
    assert_eq!(population.len(), ranked.len(), "population and ranking sizes differ");
    let mut next = Vec::with_capacity(population.len());
    next.push(population[ranked.best()].clone());
    while next.len() < population.len() {
        let parent = tournament_select(ranked, tournament_size, rng);
        next.push(mutate(&population[parent], cfg, innovations, rng));
    }
    next
}
