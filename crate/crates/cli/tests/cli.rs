use std::fs;
use std::path::Path;
use std::process::Command;

use advlin::{run, ExperimentConfig, Scenario};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_advlin"))
}

fn small_figure2(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        scenario: Scenario::Figure2,
        mu_grid: vec![2.0, 4.0],
        eta_grid: vec![0.0, 0.3],
        d: 20,
        n_train: 200,
        n_test: 200,
        replicates: 3,
        output: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        seen += 1;
    }
    assert!(seen >= Scenario::ALL.len());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    let mut cfg = small_figure2(&dir.path().join("a"));
    fs::write(&cfg_path, serde_json::to_string(&cfg).unwrap()).unwrap();
    for sub in ["a", "b"] {
        let status = bin()
            .args(["figure2", "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(dir.path().join(sub))
            .env("ADVLIN_THREADS", if sub == "a" { "1" } else { "3" })
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(dir.path().join("a/figure2.csv")).unwrap();
    let b = fs::read(dir.path().join("b/figure2.csv")).unwrap();
    assert_eq!(a, b);

    cfg.seed += 1;
    cfg.output = dir.path().join("c");
    run(&cfg).unwrap();
    assert_ne!(a, fs::read(dir.path().join("c/figure2.csv")).unwrap());
}

#[test]
fn figure2_has_every_column_family() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&small_figure2(dir.path())).unwrap();
    let header = summary.table.header();
    for family in ["formula", "empirical", "asymptotic", "bayes"] {
        for rate in ["p_m", "p_err", "p_s_err"] {
            let name = format!("{family}_{rate}");
            assert!(header.contains(&name), "missing {name}");
        }
    }
    assert_eq!(summary.table.len(), 4);
}

#[test]
fn zero_budget_gives_zero_adversarial_rates() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        scenario: Scenario::Sweep,
        eta_grid: vec![0.0],
        p_grid: vec![advlin_core::NormOrder::L2, advlin_core::NormOrder::Infinity],
        d: 10,
        n_train: 100,
        n_test: 100,
        n_mc: 2000,
        output: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let table = run(&cfg).unwrap().table;
    for i in 0..table.len() {
        for col in ["cf_p_adv", "mc_p_adv", "cf_p_s_adv"] {
            assert_eq!(table.real(i, col), Some(0.0), "row {i} {col}");
        }
    }
}

#[test]
fn exit_codes() {
    let ok = bin().args(["rates", "--mu", "3", "--eta", "0.1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((report["p_m"].as_f64().unwrap() - 0.001_349_898).abs() < 1e-8);

    let bad = bin().args(["rates", "--mu", "-1"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"scenario": "figure2", "mu_grid": [1.0], "bogus": 1}"#).unwrap();
    let unknown = bin().args(["figure2", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(unknown.code(), Some(2));

    let short = dir.path().join("short.txt");
    fs::write(&short, "1 2 3").unwrap();
    let render = bin()
        .args(["render", "--input"])
        .arg(&short)
        .arg("--out")
        .arg(dir.path().join("x.pgm"))
        .status()
        .unwrap();
    assert_eq!(render.code(), Some(2));

    let missing = bin()
        .args(["render", "--input"])
        .arg(dir.path().join("absent.txt"))
        .arg("--out")
        .arg(dir.path().join("x.pgm"))
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(1));
}

#[test]
fn render_writes_a_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("v.txt");
    let values: Vec<String> = (0..361).map(|k| (k % 256).to_string()).collect();
    fs::write(&input, values.join(",")).unwrap();
    let out = dir.path().join("v.pgm");
    let status = bin().args(["render", "--input"]).arg(&input).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let bytes = fs::read(out).unwrap();
    assert!(bytes.starts_with(b"P"));
}

#[test]
fn image_scenario_writes_four_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        scenario: Scenario::Image,
        n_train: 300,
        n_test: 10,
        output: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let table = run(&cfg).unwrap().table;
    assert_eq!(table.len(), 4);
    for name in ["clean", "random", "adversarial", "strong"] {
        assert!(dir.path().join(format!("figure1_{name}.pgm")).exists());
    }
    // Every perturbation has the same l2 size.
    let eps: Vec<f64> = (1..4).map(|i| table.real(i, "perturbation_l2").unwrap()).collect();
    assert!(eps.iter().all(|e| (e - eps[0]).abs() < 1e-9));
}
