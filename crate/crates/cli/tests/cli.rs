use std::path::PathBuf;
use std::process::{Command, Output};

fn hyperpants(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperpants"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = hyperpants(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hyperpants-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn hexagon_json_reports_constants() {
    let v: serde_json::Value =
        serde_json::from_str(&stdout_ok(&["hexagon", "--a", "2", "--json"])).unwrap();
    let b = v["b"].as_f64().unwrap();
    let expected = (2f64.cosh() / (2f64.cosh() - 1.0)).acosh();
    assert!((b - expected).abs() < 1e-12);
    assert!(v["residuals"]["closure"].as_f64().unwrap() < 1e-12);
}

#[test]
fn count_is_monotone_in_radius() {
    let small: u64 = stdout_ok(&["count", "--a", "2", "--r", "4"])
        .trim()
        .parse()
        .unwrap();
    let large: u64 = stdout_ok(&["count", "--a", "2", "--r", "7"])
        .trim()
        .parse()
        .unwrap();
    assert!(small >= 1 && small <= large);
}

#[test]
fn sampled_graph_feeds_on_graph_exploration() {
    let path = scratch("graph.txt");
    let p = path.to_str().unwrap();
    stdout_ok(&["sample-graph", "--n", "40", "--seed", "9", "--out", p]);
    assert!(std::fs::read_to_string(&path)
        .unwrap()
        .starts_with("n=40 seed=9"));
    let v: serde_json::Value = serde_json::from_str(&stdout_ok(&[
        "explore", "--n", "40", "--a", "1", "--seed", "9", "--graph", p,
    ]))
    .unwrap();
    assert!(v["vertices_found"].as_u64().unwrap() >= 1);
    assert!(v["radius"].as_f64().unwrap() > 0.0);
}

#[test]
fn explore_batch_writes_one_row_per_run() {
    let csv = stdout_ok(&[
        "explore-batch",
        "--n",
        "64",
        "--a",
        "2",
        "--seed",
        "1",
        "--runs",
        "5",
    ]);
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "seed,n,a,steps,vertices_found,bad_phase1,bad_total,radius,disconnected"
    );
    assert_eq!(lines.len(), 6);
    assert_eq!(
        csv,
        stdout_ok(&[
            "explore-batch",
            "--n",
            "64",
            "--a",
            "2",
            "--seed",
            "1",
            "--runs",
            "5"
        ])
    );
}

#[test]
fn diameter_bounds_are_ordered() {
    let v: serde_json::Value = serde_json::from_str(&stdout_ok(&[
        "diameter", "--n", "12", "--a", "2", "--seed", "3", "--json",
    ]))
    .unwrap();
    let lower = v["lower"].as_f64().unwrap();
    let md = v["midpoint_diameter"].as_f64().unwrap();
    let upper = v["upper"].as_f64().unwrap();
    assert!(lower <= upper && md <= upper);
}

#[test]
fn experiment_writes_csv_and_summary() {
    let csv = scratch("rows.csv");
    let json = scratch("summary.json");
    let cfg = scratch("campaign.txt");
    std::fs::write(
        &cfg,
        format!(
            "# small campaign\na_grid=2\nn_grid=8,16\nruns=2\nseed=11\nout_csv={}\nout_json={}\n",
            csv.display(),
            json.display()
        ),
    )
    .unwrap();
    stdout_ok(&["experiment", "--config", cfg.to_str().unwrap()]);
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("# hyperpants campaign schema=1"));
    assert_eq!(rows.lines().count(), 2 + 4);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 2);
}

#[test]
fn bad_input_is_rejected() {
    assert!(!hyperpants(&["hexagon", "--a", "-1"]).status.success());
    assert!(!hyperpants(&[
        "diameter",
        "--n",
        "4",
        "--a",
        "1",
        "--seed",
        "0",
        "--sources",
        "x"
    ])
    .status
    .success());
    let cfg = scratch("bad.txt");
    std::fs::write(&cfg, "a_grid=2\nn_grid=8\nruns=1\ncolour=blue\n").unwrap();
    assert!(
        !hyperpants(&["experiment", "--config", cfg.to_str().unwrap()])
            .status
            .success()
    );
}
