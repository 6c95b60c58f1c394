use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dynsched::metrics::stability_estimate;
use dynsched::{interference_measure, RequestVector};
use dynsched_cli::commands::parse_triplets;
use dynsched_cli::config::ScenarioConfig;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dynsched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Network file for `pairs` over nodes `0..nodes`.
fn network(nodes: u64, pairs: &[(u64, u64)], d: usize) -> String {
    let mut s = format!("D = {d}\nnodes = {:?}\n", (0..nodes).collect::<Vec<_>>());
    for (i, (a, b)) in pairs.iter().enumerate() {
        s.push_str(&format!("\n[[links]]\nid = {i}\nsender = {a}\nreceiver = {b}\n"));
    }
    s
}

struct Scenario {
    dir: TempDir,
}

impl Scenario {
    fn new(net: &str, config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("net.toml"), net).unwrap();
        fs::write(dir.path().join("scenario.toml"), config).unwrap();
        Scenario { dir }
    }

    fn file(&self, name: &str, text: &str) -> &Self {
        fs::write(self.dir.path().join(name), text).unwrap();
        self
    }

    fn config(&self) -> String {
        self.path("scenario.toml").display().to_string()
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn out(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn cmd(&self, sub: &str, out: &str, extra: &[&str]) -> Output {
        let (cfg, out) = (self.config(), self.out(out));
        let mut args = vec![sub, "--config", &cfg, "--out", &out];
        args.extend_from_slice(extra);
        run(&args)
    }
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn triplet_rows(text: &str) -> Vec<(usize, usize, String)> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].to_string())
        })
        .collect()
}

#[test]
fn mac_matrix_is_all_ones() {
    let s = Scenario::new(
        &network(4, &[(0, 1), (1, 2), (2, 3)], 1),
        "seed = 1\nnetwork = \"net.toml\"\n[model]\nkind = \"mac\"\n",
    );
    let o = s.cmd("build-matrix", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = triplet_rows(&read(&s.path("out/matrix.txt")));
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.2 == "1"));
    assert!(read(&s.path("out/matrix_report.txt")).contains("validation ok"));
}

#[test]
fn routing_matrix_is_diagonal() {
    let s = Scenario::new(
        &network(4, &[(0, 1), (1, 2), (2, 3)], 3),
        "seed = 1\nnetwork = \"net.toml\"\n[model]\nkind = \"routing\"\n",
    );
    assert!(s.cmd("build-matrix", "out", &[]).status.success());
    let rows = triplet_rows(&read(&s.path("out/matrix.txt")));
    assert_eq!(rows, vec![(0, 0, "1".into()), (1, 1, "1".into()), (2, 2, "1".into())]);
}

#[test]
fn sinr_matrix_file_replays_into_the_measure() {
    // Three parallel unit links spaced 4 apart on a line.
    let pts: [(f64, f64); 6] = [(0.0, 0.0), (1.0, 0.0), (0.0, 4.0), (1.0, 4.0), (0.0, 8.0), (1.0, 8.0)];
    let mut geo = String::new();
    for (i, (x, y)) in pts.iter().enumerate() {
        geo.push_str(&format!("[[points]]\nnode = {i}\nx = {x}\ny = {y}\n\n"));
    }
    let s = Scenario::new(
        &network(6, &[(0, 1), (2, 3), (4, 5)], 1),
        "seed = 1\nnetwork = \"net.toml\"\ngeometry = \"geo.toml\"\n[model]\nkind = \"sinr-linear\"\nalpha = 3.0\nbeta = 1.0\n",
    );
    s.file("geo.toml", &geo);
    let o = s.cmd("build-matrix", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let w = parse_triplets(&read(&s.path("out/matrix.txt"))).unwrap();

    // Linear power p = d^alpha with unit links gives affectance
    // beta / cross^alpha from sender l' to receiver l.
    let d = |a: usize, b: usize| {
        let (p, q) = (pts[a], pts[b]);
        ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
    };
    let counts = [2u64, 1, 3];
    let mut want = 0.0f64;
    for l in 0..3 {
        let mut acc = 0.0;
        for l2 in 0..3 {
            let a = if l == l2 { 1.0 } else { (1.0 / d(2 * l2, 2 * l + 1).powi(3)).min(1.0) };
            acc += a * counts[l2] as f64;
        }
        want = want.max(acc);
    }
    let got = interference_measure(&w, &RequestVector::from_counts(counts.to_vec())).unwrap();
    assert!((got - want).abs() <= 1e-8 * want, "{got} vs {want}");
}

const RRW: &str = r#"
seed = 5
network = "net.toml"
[model]
kind = "mac"
[scheduler]
kind = "round-robin-withholding"
[requests]
queues = [2, 0, 1]
"#;

#[test]
fn rrw_static_run_takes_six_slots() {
    let s = Scenario::new(&network(4, &[(0, 1), (1, 2), (2, 3)], 1), RRW);
    let o = s.cmd("run-static", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read(&s.path("out/summary.txt"));
    assert!(summary.contains("slotsUsed 6\n"), "{summary}");
    assert!(summary.contains("unserved none\n"));
    assert!(summary.contains("validation ok\n"));
}

#[test]
fn empty_request_set_uses_no_slots() {
    let s = Scenario::new(
        &network(2, &[(0, 1)], 1),
        "seed = 5\nnetwork = \"net.toml\"\n[model]\nkind = \"mac\"\n[scheduler]\nkind = \"random-access\"\n[requests]\nlinks = []\n",
    );
    let o = s.cmd("run-static", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read(&s.path("out/summary.txt")).contains("slotsUsed 0\n"));
}

#[test]
fn static_runs_are_byte_identical_per_seed() {
    let cfg = "seed = 11\nnetwork = \"net.toml\"\n[model]\nkind = \"mac\"\nack_only = true\n\
               [scheduler]\nkind = \"mac-symmetric\"\nphi = 1.0\ndelta = 0.5\n[requests]\nqueues = [1000]\n";
    let s = Scenario::new(&network(2, &[(0, 1)], 1), cfg);
    assert!(s.cmd("run-static", "a", &[]).status.success());
    assert!(s.cmd("run-static", "b", &[]).status.success());
    assert!(s.cmd("run-static", "c", &["--seed", "12"]).status.success());
    let (a, b, c) = (
        read(&s.path("a/schedule.txt")),
        read(&s.path("b/schedule.txt")),
        read(&s.path("c/schedule.txt")),
    );
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(read(&s.path("a/summary.txt")), read(&s.path("b/summary.txt")));
}

#[test]
fn channel_state_scheduler_rejects_ack_only_oracle() {
    let cfg = RRW.replace("kind = \"mac\"", "kind = \"mac\"\nack_only = true");
    let s = Scenario::new(&network(4, &[(0, 1), (1, 2), (2, 3)], 1), &cfg);
    let o = s.cmd("run-static", "out", &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("channel-state"), "{}", stderr(&o));
}

/// `top` holds top-level keys, `tail` any trailing tables.
fn dynamic_cfg(top: &str, tail: &str) -> String {
    format!(
        "seed = 21\nnetwork = \"net.toml\"\nepsilon = 0.5\n{top}[model]\nkind = \"mac\"\n\
         [scheduler]\nkind = \"round-robin-withholding\"\n{tail}"
    )
}

#[test]
fn zero_rate_run_has_all_zero_frames() {
    let s = Scenario::new(&network(3, &[(0, 1), (1, 2)], 1), &dynamic_cfg("horizon = 5\n", ""));
    let o = s.cmd("run-dynamic", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frames = read(&s.path("out/frames.csv"));
    let rows: Vec<&str> = frames.lines().skip(1).collect();
    assert_eq!(rows.len(), 5);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(*r, format!("{i},0,0,0,0,0,0"));
    }
    assert_eq!(read(&s.path("out/packets.csv")).lines().count(), 1);
}

#[test]
fn stable_mac_run_feeds_the_stability_estimate() {
    let s = Scenario::new(
        &network(3, &[(0, 1), (1, 2)], 1),
        &dynamic_cfg("horizon = 1300\n", "[injection]\nkind = \"stochastic\"\nfile = \"spec.txt\"\n"),
    );
    s.file("spec.txt", "0 0.1 0\n1 0.1 1\n");
    let o = s.cmd("run-dynamic", "out", &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let backlog: Vec<f64> = read(&s.path("out/frames.csv"))
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(backlog.len(), 1300);
    let e = stability_estimate(&backlog, 0.2).unwrap();
    assert!(e.slope.abs() < 0.01, "{e:?}");
    let summary = read(&s.path("out/summary.txt"));
    assert!(summary.contains("outOfTheory false"));
    assert!(summary.contains("backlogSlope "));

    // Same seed, same bytes.
    assert!(s.cmd("run-dynamic", "again", &[]).status.success());
    assert_eq!(read(&s.path("out/frames.csv")), read(&s.path("again/frames.csv")));
    assert_eq!(read(&s.path("out/packets.csv")), read(&s.path("again/packets.csv")));
}

#[test]
fn override_t_is_flagged() {
    let s = Scenario::new(&network(3, &[(0, 1), (1, 2)], 1), &dynamic_cfg("horizon = 2\n", ""));
    let o = s.cmd("run-dynamic", "out", &["--override-T", "400"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read(&s.path("out/summary.txt"));
    assert!(summary.contains("T 400\n") && summary.contains("outOfTheory true"), "{summary}");
}

#[test]
fn broken_trace_is_rejected_with_its_window_start() {
    // w = 4, rate 0.5: at most 2 packets per 4-slot window on the MAC.
    let trace = "window 4 rate 0.5\n0 0\n5 1\n7 0\n8 1\n";
    let s = Scenario::new(
        &network(3, &[(0, 1), (1, 2)], 1),
        &dynamic_cfg("horizon = 3\n", "[injection]\nkind = \"adversarial\"\nfile = \"trace.txt\"\n"),
    );
    s.file("trace.txt", trace);
    let o = s.cmd("run-dynamic", "out", &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("starting at slot 5"), "{}", stderr(&o));
    assert!(!s.path("out/frames.csv").exists());

    let v = s.cmd("validate-trace", "out", &[]);
    assert_eq!(v.status.code(), Some(2));
    assert!(stdout(&v).contains("verdict violation window_start 5 measure 3 limit 2"), "{}", stdout(&v));

    s.file("ok.txt", "window 4 rate 0.5\n0 0\n5 1\n9 0\n");
    let ok = s.path("ok.txt").display().to_string();
    let v = s.cmd("validate-trace", "out", &["--trace", &ok]);
    assert!(v.status.success(), "{}", stderr(&v));
    assert!(stdout(&v).contains("verdict ok"));
}

#[test]
fn adversarial_run_with_valid_trace() {
    let trace = "window 10 rate 0.2\n0 0\n10 1\n20 0\n";
    let s = Scenario::new(
        &network(3, &[(0, 1), (1, 2)], 1),
        &dynamic_cfg("horizon = 4\n", "[injection]\nkind = \"adversarial\"\nfile = \"trace.txt\"\n"),
    );
    s.file("trace.txt", trace);
    let o = s.cmd("run-dynamic", "out", &["--override-T", "300"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let frames = read(&s.path("out/frames.csv"));
    let injected: u64 = frames.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(injected, 3);
}

#[test]
fn unknown_experiment_lists_the_registered_ones() {
    let o = run(&["experiment", "no-such-thing"]);
    assert!(!o.status.success());
    let e = stderr(&o);
    for name in ["mac-stability", "latency-scaling", "adversarial-stability", "cleanup-rate", "local-clock"] {
        assert!(e.contains(name), "{e}");
    }
}

#[test]
fn experiment_writes_its_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let o = run(&["experiment", "cleanup-rate", "--seed", "4", "--frames", "3000", "--out", &out, "--jobs", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = read(&dir.path().join("cleanup-rate.txt"));
    assert!(report.starts_with("# scenario cleanup-rate\n# seeds 4\n"), "{report}");
    assert!(report.lines().last().unwrap().ends_with("PASS"), "{report}");
    assert_eq!(stdout(&o), report);
}

#[test]
fn config_file_round_trips() {
    let s = Scenario::new(&network(2, &[(0, 1)], 1), &dynamic_cfg("horizon = 9\noverride_t = 77\n", ""));
    let a = ScenarioConfig::parse(&read(&s.path("scenario.toml"))).unwrap();
    let b = ScenarioConfig::parse(&a.to_toml().unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_config_names_the_file() {
    let s = Scenario::new(&network(2, &[(0, 1)], 1), "network = \"net.toml\"\n[model]\nkind = \"mac\"\n");
    let o = s.cmd("build-matrix", "out", &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("scenario.toml"), "{}", stderr(&o));
}
