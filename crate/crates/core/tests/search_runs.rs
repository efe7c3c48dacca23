use std::fs;
use std::path::Path;

use wann::search::{Checkpoint, Search, SearchConfig};

fn small_config(dir: &Path, workers: usize) -> SearchConfig {
    let mut cfg = SearchConfig::defaults_for("swingup").unwrap();
    cfg.population = 24;
    cfg.generations = 12;
    cfg.tournament_size = 4;
    cfg.episodes_per_weight = 1;
    cfg.champion_trials = 2;
    cfg.champion_interval = 4;
    cfg.checkpoint_interval = 5;
    cfg.seed = 31;
    cfg.workers = Some(workers);
    cfg.output_dir = Some(dir.to_path_buf());
    cfg
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{}: {e}", dir.join(name).display()))
}

#[test]
fn identical_runs_write_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs: Vec<_> = ["one_a", "one_b", "many_a", "many_b"].iter().map(|d| tmp.path().join(d)).collect();
    for (dir, workers) in dirs.iter().zip([1, 1, 4, 4]) {
        fs::create_dir_all(dir).unwrap();
        Search::from_config(small_config(dir, workers)).unwrap().run().unwrap();
    }
    for name in ["metrics.csv", "archive.json", "champion.json"] {
        let reference = read(&dirs[0], name);
        for dir in &dirs[1..] {
            assert!(read(dir, name) == reference, "{name} differs in {}", dir.display());
        }
    }
    let metrics = String::from_utf8(read(&dirs[0], "metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 13);
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let tmp = tempfile::tempdir().unwrap();
    let straight = tmp.path().join("straight");
    let resumed = tmp.path().join("resumed");
    fs::create_dir_all(&straight).unwrap();
    fs::create_dir_all(&resumed).unwrap();

    Search::from_config(small_config(&straight, 2)).unwrap().run().unwrap();

    let mut first = Search::from_config(small_config(&resumed, 2)).unwrap();
    for _ in 0..7 {
        first.step().unwrap();
    }
    first.write_outputs().unwrap();
    drop(first);
    let mut second = Search::resume(resumed.join("checkpoint.json")).unwrap();
    assert_eq!(second.generation(), 7);
    second.run().unwrap();

    for name in ["metrics.csv", "archive.json", "champion.json"] {
        assert!(read(&straight, name) == read(&resumed, name), "{name} differs");
    }
    let mut a = Checkpoint::load(straight.join("checkpoint.json")).unwrap();
    let mut b = Checkpoint::load(resumed.join("checkpoint.json")).unwrap();
    a.config.output_dir = None;
    b.config.output_dir = None;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn checkpoint_file_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let mut search = Search::from_config(small_config(tmp.path(), 1)).unwrap();
    search.step().unwrap();
    search.step().unwrap();
    let ck = search.checkpoint();
    let path = tmp.path().join("ck.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(serde_json::to_string(&ck).unwrap(), serde_json::to_string(&back).unwrap());
}
