use std::fs;
use std::path::Path;
use std::process::Command;

use protoselect::eval::Algorithm;
use protoselect_harness::config::ExperimentConfig;
use protoselect_harness::grid::{cells, load_dataset, run_cell, run_experiments, skew_instances};
use protoselect_harness::output::read_csv;

fn config_text(output: &Path, extra: &str) -> String {
    format!(
        r#"
source_size = 100
skew = [50.0, 100.0]
k = [4]
epsilon = [0.2]
nu = [0.05]
delta = 0.04
algorithms = ["build", "pam", "spot_greedy", "spot_m", "protobandit"]
strategies = ["aba", "kl_lucb_early"]
runs_per_cell = 3
exact_runs_per_cell = 2
base_seed = 17
record_wall_time = false
output = "{}"
{extra}

[dataset.synthetic]
components = 4
points = 400
dims = 3
seed = 2
"#,
        output.display()
    )
}

#[test]
fn grid_runs_every_cell_with_distinct_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::parse(&config_text(&dir.path().join("run"), "")).unwrap();
    let records = run_experiments(&config).unwrap();
    // 2 skews × (4 exact cells × 2 runs + 2 strategies × 3 runs)
    assert_eq!(records.len(), 2 * (4 * 2 + 2 * 3));
    assert!(
        records.iter().all(|r| r.error.is_none()),
        "{:?}",
        records.iter().find(|r| r.error.is_some())
    );
    for r in &records {
        assert_eq!(r.objective_trace.len(), 4);
        assert_eq!(r.total_queries, r.bai_queries + r.maintenance_queries);
        assert!(r.accuracy.is_some_and(|a| (0.0..=1.0).contains(&a)));
        assert_eq!(r.wall_time_ms, 0.0);
    }
    let pb: Vec<_> = records
        .iter()
        .filter(|r| r.algorithm == Algorithm::ProtoBandit)
        .collect();
    let mut seeds: Vec<u64> = pb.iter().map(|r| r.params.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), pb.len());
}

#[test]
fn memoized_cell_stays_within_matrix_size() {
    let dir = tempfile::tempdir().unwrap();
    let text = config_text(&dir.path().join("run"), "").replace("skew = [50.0, 100.0]\n", "");
    let config = ExperimentConfig::parse(&text).unwrap();
    let (source, pool) = load_dataset(&config).unwrap();
    let instances = skew_instances(&config, &source, &pool).unwrap();
    let (_, base) = &instances[0];
    let cell = cells(&config)
        .into_iter()
        .find(|c| c.algorithm == Algorithm::SpotM)
        .unwrap();
    let record = run_cell(&config, &cell, base, 1).unwrap();
    assert!(record.total_queries <= (base.n_sources() * base.n_targets()) as u64);
}

#[test]
fn broken_cell_reports_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::parse(&config_text(&dir.path().join("run"), "")).unwrap();
    let (source, pool) = load_dataset(&config).unwrap();
    let instances = skew_instances(&config, &source, &pool).unwrap();
    let mut cell = cells(&config)
        .into_iter()
        .find(|c| c.algorithm == Algorithm::ProtoBandit)
        .unwrap();
    cell.nu = None;
    assert!(run_cell(&config, &cell, &instances[0].1, 0).is_err());
}

#[test]
fn cli_round_trip_is_reproducible() {
    let exe = env!("CARGO_BIN_EXE_protoselect");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("mix.csv");
    let status = Command::new(exe)
        .args([
            "gen-synth",
            "--components",
            "3",
            "--points",
            "300",
            "--dims",
            "2",
            "--seed",
            "4",
            "--out",
        ])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let cfg = dir.path().join(format!("{name}.toml"));
        let text = config_text(Path::new(name), "")
            .replace(
                "[dataset.synthetic]\ncomponents = 4\npoints = 400\ndims = 3\nseed = 2\n",
                "[dataset.source]\nformat = \"csv\"\npath = \"mix.csv\"\nhas_labels = true\n",
            )
            .replace("\"pam\", ", "");
        fs::write(&cfg, text).unwrap();
        let out = Command::new(exe)
            .env("PROTOSELECT_THREADS", "2")
            .args(["run", "--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        outputs.push((
            fs::read(dir.path().join(format!("{name}.csv"))).unwrap(),
            fs::read(dir.path().join(format!("{name}.jsonl"))).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);

    let rows = read_csv(&dir.path().join("a.csv")).unwrap();
    assert!(rows.iter().all(|r| r.error.is_none()));
    let summary = dir.path().join("summary.csv");
    let traces = dir.path().join("traces.jsonl");
    let status = Command::new(exe)
        .args(["summarize", "--input"])
        .arg(dir.path().join("a.jsonl"))
        .arg("--output")
        .arg(&summary)
        .arg("--traces")
        .arg(&traces)
        .status()
        .unwrap();
    assert!(status.success());
    let table = fs::read_to_string(&summary).unwrap();
    // header plus one line per cell: 2 skews × (3 exact + 2 strategies)
    assert_eq!(table.lines().count(), 1 + 2 * 5);
    assert_eq!(fs::read_to_string(&traces).unwrap().lines().count(), 2 * 5);
}
