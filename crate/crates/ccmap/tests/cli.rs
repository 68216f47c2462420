use std::fs;
use std::path::Path;

use ccmap::cli::main_with_args;
use ccmap::output::{self, MapDump, MetricsRow};
use ccmap::scenario_file;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> i32 {
    let out = dir.to_str().unwrap();
    let mut all = vec!["ccmap"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["--out", out, "--no-timestamp"]);
    main_with_args(all)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn head_on_plan_shrinks_the_obstacle() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["plan", "--template", "head_on"]), 0);
    let a = MapDump::parse(&read(dir.path(), "map_avus.txt")).unwrap();
    let c = MapDump::parse(&read(dir.path(), "map_cous.txt")).unwrap();
    assert!(c.obstacle_count() < a.obstacle_count(), "{} vs {}", c.obstacle_count(), a.obstacle_count());
    assert!(!read(dir.path(), "path_cous.csv").is_empty());
    assert!(read(dir.path(), "params.txt").contains("lattice.coupling"));
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = ["simulate", "--template", "cluttered_flow", "--seed", "3"];
    assert_eq!(run(a.path(), &args), 0);
    assert_eq!(run(b.path(), &args), 0);
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 6);
    for n in names {
        let n = n.to_str().unwrap();
        assert_eq!(read(a.path(), n), read(b.path(), n), "{n}");
    }
    let rows: Vec<MetricsRow> = output::read_csv(&read(a.path(), "metrics.csv")).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn written_scenario_plans_like_the_template() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["plan", "--template", "dynamic_demo", "--seed", "7", "--mode", "cous"]), 0);
    let text = read(dir.path(), "scenario.txt");
    let map = read(dir.path(), "map_cous.txt");
    let s = scenario_file::parse_scenario(&text).unwrap();
    assert_eq!(scenario_file::emit_scenario(&s), text);

    let again = TempDir::new().unwrap();
    let file = dir.path().join("scenario.txt");
    assert_eq!(run(again.path(), &["plan", "--scenario", file.to_str().unwrap(), "--mode", "cous"]), 0);
    assert_eq!(read(again.path(), "map_cous.txt"), map);
}

#[test]
fn timestamp_is_the_only_difference() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(main_with_args(["ccmap", "calibrate", "--set", "calibration.sizes=40", "--out", out]), 0);
    let stamped = read(dir.path(), "calibration.csv");
    assert_eq!(run(dir.path(), &["calibrate", "--set", "calibration.sizes=40"]), 0);
    let plain = read(dir.path(), "calibration.csv");
    assert_ne!(stamped, plain);
    assert!(stamped.ends_with(&plain));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["plan", "--template", "head_on", "--set", "no.such.key=1"]), 1);
    assert_eq!(run(d, &["plan", "--template", "head_on", "--set", "lattice.dt=abc"]), 1);
    assert_eq!(run(d, &["plan", "--template", "nowhere"]), 1);
    assert_eq!(run(d, &["plan"]), 1);
    assert_eq!(run(d, &["ensemble", "--template", "head_on", "--runs", "0"]), 1);
    assert_eq!(main_with_args(["ccmap", "frobnicate"]), 1);
    assert_eq!(run(d, &["plan", "--template", "head_on", "--set", "tmnn.learning_rate=10"]), 2);
    assert_eq!(run(d, &["plan", "--template", "head_on", "--set", "lattice.blowup_bound=0.5"]), 2);
    assert_eq!(main_with_args(["ccmap", "--help"]), 0);
}

#[test]
fn small_ensemble_reports_every_run() {
    let dir = TempDir::new().unwrap();
    assert_eq!(run(dir.path(), &["ensemble", "--template", "line_up", "--runs", "3", "--seed", "11"]), 0);
    let rows: Vec<MetricsRow> = output::read_csv(&read(dir.path(), "metrics.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows.iter().map(|r| r.seed).collect::<Vec<_>>(), [11, 11, 12, 12, 13, 13]);
    let stats = read(dir.path(), "stats.csv");
    assert_eq!(stats.lines().count(), 4);
}
