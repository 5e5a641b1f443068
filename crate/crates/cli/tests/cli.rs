use std::fs;
use std::process::{Command, Output};

fn hproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hproj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn path_prints_reference_thresholds() {
    let o = hproj(&["path"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("tau1,tau_tilde,tau2,tau3"));
    assert_eq!(lines.next(), Some("0.076667,0.340000,0.596667,0.853333"));
}

#[test]
fn path_writes_regime_table_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("regimes.csv");
    let o = hproj(&["path", "--tau-points", "11", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
    let table = fs::read_to_string(out).unwrap();
    assert_eq!(table.lines().count(), 12);
    assert!(table.starts_with("tau,sigma_star,optimal_regime,hp_regime,distortion\n"));
}

#[test]
fn equilibria_reports_canonical_over_adoption() {
    let o = hproj(&["equilibria"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["distortion"], "over-adoption");
    assert_eq!(v["optimal_profile"], "HA");
    let profiles: Vec<&str> = v["equilibria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["profile"].as_str().unwrap())
        .collect();
    assert_eq!(profiles, ["HH", "AA"]);
    assert!((v["sigma"].as_f64().unwrap() - 0.31).abs() < 1e-12);
}

#[test]
fn region_sweep_grid_has_one_row_per_cell() {
    let o = hproj(&["region-sweep", "--grid", "3"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 10);
}

#[test]
fn simulate_requires_seed() {
    assert_eq!(
        hproj(&["simulate", "--episodes", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_single_index_is_all_or_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("episodes.csv");
    let o = hproj(&[
        "simulate",
        "--agent",
        "single-index",
        "--episodes",
        "100",
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["shares"]["all_or_nothing"], 1.0);
    assert_eq!(fs::read_to_string(out).unwrap().lines().count(), 101);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 9\n[sim]\nagent = \"pool-specific\"\nepisodes = 20\n",
    )
    .unwrap();
    let o = hproj(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["seed"], 9);
    assert_eq!(v["agent"]["belief_kind"], "pool-specific");
    assert_eq!(v["shares"]["episodes"], 20);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[sim]\nagents = 3\n").unwrap();
    assert_eq!(
        hproj(&["path", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_files_exit_with_io_code() {
    assert_eq!(
        hproj(&["path", "--config", "/nonexistent/run.toml"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        hproj(&[
            "distortion",
            "--items",
            "/nonexistent/items.csv",
            "--intercept",
            "0.9"
        ])
        .status
        .code(),
        Some(3)
    );
}

#[test]
fn invalid_input_exits_with_usage_code() {
    assert_eq!(
        hproj(&["equilibria", "--qa", "1.5", "0.2"]).status.code(),
        Some(2)
    );
    assert_eq!(hproj(&["bogus"]).status.code(), Some(2));
}

#[test]
fn verify_passes_on_builtin_models() {
    let o = hproj(&["verify", "all", "--instances", "20"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn verify_reports_planted_mlrp_violation() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("table.csv"),
        "theta,delta,p\n0,0,0.5\n0,1,0.4\n1,0,0.9\n1,1,0.5\n",
    )
    .unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[model]\nlink = \"lookup\"\ntable = \"table.csv\"\n").unwrap();
    let o = hproj(&["verify", "props", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("MLRP"), "{text}");
    assert!(
        text.contains("theta=") && text.contains("delta'="),
        "{text}"
    );
}

#[test]
fn distortion_with_fixed_rule() {
    let dir = tempfile::tempdir().unwrap();
    let items = dir.path().join("items.csv");
    fs::write(
        &items,
        "item_id,difficulty,correct\na,0.2,1\nb,0.5,0\nc,0.8,0\nd,0.4,1\n",
    )
    .unwrap();
    let o = hproj(&[
        "distortion",
        "--items",
        items.to_str().unwrap(),
        "--intercept",
        "0.9",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "4");
    assert_eq!(row[1], "0.500000");
    assert_eq!(row[2], "-0.400000");
    assert_eq!(row[4], "0.900000");
}

#[test]
fn reasonableness_scores_answer_from_similarity_table() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim.csv");
    fs::write(&sim, "id,a,b,c\na,1,0.5,0\nb,0.5,1,0.25\nc,0,0.25,1\n").unwrap();
    let o = hproj(&[
        "reasonableness",
        "--format",
        "json",
        "--similarity",
        sim.to_str().unwrap(),
        "--useful",
        "a",
        "b",
        "--answer",
        "c",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["answer_score"], 0.25);
    assert_eq!(v["score_mlrp"], true);
}
