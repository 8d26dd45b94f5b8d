use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fedsim_core::data::{generate_federation, load_manifest, DomainShiftSpec};
use fedsim_harness::{compare, gen_data, run_experiment, ExperimentConfig, Summary, RESULT_COLUMNS};

fn fedsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fedsim")).args(args).output().unwrap()
}

fn small_config(out: &Path, runs: &str) -> String {
    format!(
        r#"
output_dir = "{}"
master_seed = 3
[data.synthetic]
num_clients = 3
num_classes = 3
feature_dim = 4
samples_per_client = 30
shift_scale = 1.0
[model]
hidden_dims = [8]
dropout_rate = 0.0
{runs}
"#,
        out.display()
    )
}

const FOUR: &str = r#"
[[runs]]
strategy = "fedavg"
rounds = 3
[[runs]]
strategy = "fed_cyclic"
rounds = 3
[[runs]]
strategy = "fed_star"
rounds = 2
[[runs]]
strategy = "ringfed"
rounds = 2
"#;

#[test]
fn four_strategies_share_seed_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&small_config(dir.path(), FOUR)).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.runs.len(), 4);
    let w0 = &out.runs[0].1.initial_weights;
    assert!(out.runs.iter().all(|(_, o)| o.initial_weights.bitwise_eq(w0)));
    for (p, _) in &out.runs {
        assert!(dir.path().join("runs").join(&p.id).join("results.csv").is_file());
        assert_eq!(p.config.master_seed, 3);
    }
}

#[test]
fn results_csv_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(&small_config(dir.path(), FOUR)).unwrap();
    let out = run_experiment(&cfg).unwrap();
    let mut reader = csv::Reader::from_path(dir.path().join("results.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, RESULT_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let expected_rows: usize = out.runs.iter().map(|(_, o)| o.traces.len()).sum();
    assert_eq!(rows.len(), expected_rows);
    let first = &rows[0];
    let trace = &out.runs[0].1.traces[0];
    assert_eq!(&first[0], "fedavg");
    assert_eq!(first[8].parse::<f64>().unwrap(), trace.global_accuracy);
    let accs: Vec<f64> = serde_json::from_str(&first[11]).unwrap();
    assert_eq!(accs, trace.client_accuracies);
    assert_eq!(first[12].parse::<usize>().unwrap(), trace.transfers);

    let ledger = fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    let total: usize = out.runs.iter().map(|(_, o)| o.ledger.len()).sum();
    assert_eq!(ledger.lines().count(), total + 1);
}

#[test]
fn learning_rate_sweep_runs_every_value() {
    let dir = tempfile::tempdir().unwrap();
    let runs = format!("{FOUR}\n[sweep]\nlearning_rate = [1e-3, 3e-3, 7e-3, 3e-4]\n");
    let cfg = ExperimentConfig::from_toml(&small_config(dir.path(), &runs)).unwrap();
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.summary.runs.len(), 16);
    for strategy in ["fedavg", "fed_cyclic", "fed_star", "ringfed"] {
        let lrs: Vec<f64> = out.summary.runs.iter().filter(|r| r.strategy == strategy).map(|r| r.lr).collect();
        assert_eq!(lrs, vec![1e-3, 3e-3, 7e-3, 3e-4]);
    }
}

#[test]
fn compare_sorts_by_strategy_and_names_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let one = |strategy: &str| format!("[[runs]]\nstrategy = \"{strategy}\"\nrounds = 2\n");
    run_experiment(&ExperimentConfig::from_toml(&small_config(&a, &one("ringfed"))).unwrap()).unwrap();
    run_experiment(&ExperimentConfig::from_toml(&small_config(&b, &one("fed_cyclic"))).unwrap()).unwrap();

    let single = compare(&[a.join("summary.json")]).unwrap();
    let table_rows = |text: &str| text.lines().skip(1).take_while(|l| !l.is_empty()).count();
    assert_eq!(table_rows(&single), 1);

    let both = compare(&[a.join("summary.json"), b.join("summary.json")]).unwrap();
    let cyclic = both.find("fed_cyclic").unwrap();
    let ring = both.find("ringfed").unwrap();
    assert!(cyclic < ring, "{both}");

    let missing = dir.path().join("nope.json");
    let err = compare(std::slice::from_ref(&missing)).unwrap_err().to_string();
    assert!(err.contains(&missing.display().to_string()), "{err}");
    let cli = fedsim(&["compare", missing.to_str().unwrap()]);
    assert!(!cli.status.success());
    assert!(String::from_utf8_lossy(&cli.stderr).contains("nope.json"));
}

#[test]
fn summary_reports_threshold_and_survives_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let text = small_config(dir.path(), FOUR).replace("master_seed = 3", "master_seed = 3\nthreshold = 0.0");
    let out = run_experiment(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(out.summary.runs.iter().all(|r| r.rounds_to_threshold == Some(1)));
    assert_eq!(Summary::read(&dir.path().join("summary.json")).unwrap(), out.summary);
}

#[test]
fn gen_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DomainShiftSpec::new(8, 4, 5, 20).with_shift(2.0).with_skew(0.2).with_seed(12);
    let manifest = gen_data(&spec, dir.path()).unwrap();
    let csvs = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 8);
    assert_eq!(load_manifest(&manifest).unwrap(), generate_federation(&spec).unwrap());

    let other = tempfile::tempdir().unwrap();
    gen_data(&spec.clone().with_seed(13), other.path()).unwrap();
    let a = fs::read(dir.path().join("client-0.csv")).unwrap();
    let b = fs::read(other.path().join("client-0.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn cli_gen_data_then_run_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let gen = fedsim(&[
        "gen-data", "--clients", "3", "--classes", "3", "--dim", "4", "--samples", "20", "--shift", "1.0",
        "--out", data.to_str().unwrap(),
    ]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "output_dir = \"ignored\"\ndata.manifest = \"data/manifest.toml\"\n[model]\nhidden_dims = [4]\n[[runs]]\nstrategy = \"fed_star\"\nrounds = 2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let run = fedsim(&[
        "run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "5", "--workers", "2",
        "--strict-star-aggregation",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = Summary::read(&out.join("summary.json")).unwrap();
    assert_eq!(summary.master_seed, 5);
    assert_eq!(summary.clients, vec!["client-0", "client-1", "client-2"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, small_config(dir.path(), "[[runs]]\nstrategy = \"fedavg\"\nlearning_rat = 0.1\n")).unwrap();
    let out = fedsim(&["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line") && stderr.contains("learning_rat"), "{stderr}");

    let lonely = dir.path().join("lonely.toml");
    let text = small_config(&dir.path().join("o"), "[[runs]]\nstrategy = \"fed_star\"\nrounds = 1\n")
        .replace("num_clients = 3", "num_clients = 1");
    fs::write(&lonely, text).unwrap();
    let out = fedsim(&["run", lonely.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fed_star"));
}
