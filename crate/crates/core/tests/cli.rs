use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_antjam"))
}

fn scenario(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "scenarios", name]
        .iter()
        .collect()
}

fn run(args: &[&str]) -> Output {
    bin()
        .args(args)
        .env("ANTJAM_WORKERS", "2")
        .output()
        .unwrap()
}

fn text(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &str = r#"
[network]
kind = "grid"
rows = 3
cols = 5
pe = 9

[[jammers]]
kind = "constant"
x = 20.0
y = 10.0
power = 1.5e-3
start = 10

[search]
n_spsl = 4
n_hpsl = 4
iterations = 30

[traffic]
sources = [5]
duration = 60
"#;

fn small(dir: &Path) -> PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, SMALL).unwrap();
    p
}

#[test]
fn single_clean_run_delivers_everything() {
    let out = run(&[
        "run",
        "--config",
        scenario("clean.toml").to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_str(&text(&out)).unwrap();
    assert_eq!(report["pdr"], 1.0);
    assert_eq!(report["sent"], 100);
    assert_eq!(report["seed"], 3);
}

#[test]
fn csv_report_and_side_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out_path = dir.path().join("run.csv");
    let eta = dir.path().join("eta.csv");
    let stats = dir.path().join("stats.csv");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "1",
        "--format",
        "csv",
        "--out",
        out_path.to_str().unwrap(),
        "--eta-out",
        eta.to_str().unwrap(),
        "--stats-out",
        stats.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("seed,pdr,mean_delay,reroutes,duration,jammer_kind")
    );
    assert!(lines.next().unwrap().ends_with(",60,constant"));
    assert!(fs::read_to_string(&eta)
        .unwrap()
        .starts_with("i,j,H,E,B,SNR,Pd,Pl,eta\n"));
    let stats = fs::read_to_string(&stats).unwrap();
    assert!(stats
        .starts_with("iteration,best_score,mean_score,successes,mean_psl_spsl,mean_psl_hpsl\n"));
    assert_eq!(stats.lines().count(), 31);
}

#[test]
fn identical_runs_write_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let a = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    let b = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["run", "--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn sweep_rows_follow_seed_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "1..20",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let body = text(&out);
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(
        lines[0],
        "seed,pdr,mean_delay,reroutes,sent,delivered,dropped,jammed_peak"
    );
    assert_eq!(lines.len(), 1 + 20 + 1);
    for (k, l) in lines[1..21].iter().enumerate() {
        assert!(l.starts_with(&format!("{},", k + 1)));
    }
    assert!(lines[21].starts_with("mean,"));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("min=") && summary.contains("max="));

    // Worker count does not change the bytes.
    let one = bin()
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--seeds",
            "1..20",
        ])
        .env("ANTJAM_WORKERS", "1")
        .output()
        .unwrap();
    assert_eq!(one.stdout, body.as_bytes());
}

#[test]
fn compare_never_loses_to_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cmp.csv");
    let out = run(&[
        "compare",
        "--config",
        scenario("grid_7x7.toml").to_str().unwrap(),
        "--seeds",
        "1..5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(&out_path).unwrap();
    let mut rows = csv.lines();
    assert_eq!(
        rows.next(),
        Some("seed,pdr_on,pdr_off,delta_pdr,reroutes_on")
    );
    for row in rows {
        let delta: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
        assert!(delta >= 0.0, "{row}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "[network]\nkind = \"grid\"\nrows = 2\ncols = 2\n[search]\nrho = 1.5\n",
    )
    .unwrap();
    let out = run(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(
        err.contains("search.rho") && err.contains("[0, 1]"),
        "{err}"
    );

    let missing = dir.path().join("nope.toml");
    let out = run(&["run", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let cfg = small(dir.path());
    let unwritable = dir.path().join("no/such/dir/out.json");
    let out = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        unwritable.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "9..2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
