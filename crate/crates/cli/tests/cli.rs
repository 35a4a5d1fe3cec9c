use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str =
    "sweep_kind,sweep_value,trial,scheme,objective_watts,iterations,converged,rank_SE,feasible,runtime_ms,seed";

fn swipt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swipt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let out = swipt(&["init-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout)
        .unwrap()
        .replace("irs_elements = 40", "irs_elements = 4");
    let path = dir.join("small.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn gamma_sweep_writes_rows_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("g.csv");
    let res = swipt(&[
        "run",
        "--config",
        &cfg,
        "--sweep",
        "gamma",
        "--grid",
        "5,15",
        "--trials",
        "2",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    assert_eq!(lines.count(), 2 * 2 * 4);
    let summary = fs::read_to_string(dir.path().join("g.summary.csv")).unwrap();
    assert!(summary.starts_with(
        "sweep_kind,sweep_value,scheme,n_feasible,n_infeasible,mean_watts,stderr_watts,mean_dbm"
    ));
    assert_eq!(summary.lines().count(), 1 + 2 * 4);
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec![
            "run", "--config", &cfg, "--sweep", "power", "--grid", "4,8", "--trials", "1", "--out",
        ];
        args.push(out.to_str().unwrap());
        args.extend_from_slice(extra);
        assert!(swipt(&args).status.success());
        fs::read(out).unwrap()
    };
    let a = run("a.csv", &[]);
    assert_eq!(a, run("b.csv", &[]));
    assert_eq!(a, run("c.csv", &["--sequential"]));
}

#[test]
fn convergence_with_scheme_subset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("c.csv");
    let res = swipt(&[
        "run",
        "--config",
        &cfg,
        "--sweep",
        "convergence",
        "--trials",
        "1",
        "--schemes",
        "proposed",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.starts_with("convergence,") && l.contains(",proposed,")));
}

#[test]
fn infeasible_convergence_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let text = fs::read_to_string(&cfg)
        .unwrap()
        .replace("    15.0,", "    90.0,");
    fs::write(&cfg, text).unwrap();
    let out = dir.path().join("c.csv");
    let res = swipt(&[
        "run",
        "--config",
        &cfg,
        "--sweep",
        "convergence",
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!res.status.success());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().contains(",false,"));
}

#[test]
fn bad_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = out.to_str().unwrap();
    assert!(
        !swipt(&["run", "--sweep", "gamma", "--grid", "15,5", "--trials", "1", "--out", o])
            .status
            .success()
    );
    assert!(!swipt(&[
        "run",
        "--sweep",
        "gamma",
        "--schemes",
        "nope",
        "--trials",
        "1",
        "--out",
        o
    ])
    .status
    .success());
    assert!(!swipt(&[
        "run",
        "--config",
        "/nonexistent.toml",
        "--sweep",
        "power",
        "--out",
        o
    ])
    .status
    .success());
    assert!(!swipt(&["run", "--sweep", "fig5", "--out", o])
        .status
        .success());
}

#[test]
fn dump_writes_channels_and_problems() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("dump");
    let res = swipt(&[
        "dump",
        "--config",
        &cfg,
        "--seed",
        "1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let json = fs::read_to_string(out.join("channels.json")).unwrap();
    assert!(json.contains("\"t\""));
    for f in ["active.sdpa", "passive.sdpa"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        assert!(
            text.lines()
                .filter(|l| !l.starts_with('"') && !l.starts_with('*'))
                .count()
                > 3
        );
    }
}

#[test]
fn init_config_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.toml");
    assert!(swipt(&["init-config", "--out", path.to_str().unwrap()])
        .status
        .success());
    let out = dir.path().join("c.csv");
    let res = swipt(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--sweep",
        "gamma",
        "--grid",
        "90",
        "--trials",
        "1",
        "--schemes",
        "info_only_no_irs",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
}

#[test]
fn check_suite_passes() {
    let res = swipt(&["check", "--seed", "2"]);
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(res.status.success(), "{text}");
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
