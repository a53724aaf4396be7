use std::path::Path;
use std::process::{Command, Output};

fn qgt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qgt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_well_formed_invocation() {
    let o = qgt(&[
        "simulate", "--model", "gaussian", "--sigma2", "1.0", "--n", "500", "--k", "5", "--m", "800", "--trials", "200",
        "--seed", "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "model,decoder,n,k,m,sigma2,p,trials,successes,rate,ci_lo,ci_hi,seed");
    assert_eq!(lines.len(), 2);
    let f: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&f[..8], &["gaussian", "linear", "500", "5", "800", "1.0", "", "200"]);
    assert_eq!(f[12], "7");
    let rate: f64 = f[9].parse().unwrap();
    let (lo, hi): (f64, f64) = (f[10].parse().unwrap(), f[11].parse().unwrap());
    assert!(lo <= rate && rate <= hi);
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["simulate", "--model", "zchannel", "--p", "1.2", "--n", "50", "--k", "2", "--m", "10"],
        &["simulate", "--n", "50", "--k", "2", "--m", "10", "--unknown-flag"],
        &["simulate", "--n", "50", "--k", "2"],
        &["simulate", "--n", "50", "--k", "50", "--m", "10"],
        &["simulate", "--model", "gaussian", "--n", "50", "--k", "2", "--m", "10"],
        &["sweep", "--n", "50", "--k", "2", "--m-range", "10:5:1"],
        &["transition", "--n", "50", "--k", "2", "--probe-trials", "10"],
        &["bounds", "--n", "10", "--k", "2", "--log-base", "1"],
        &["verify"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = qgt(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_1_without_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = qgt(&[
        "transition", "--n", "400", "--k", "8", "--probe-trials", "50", "--m-max", "2", "--threshold", "0.99", "--output",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no transition"));
    assert!(!out.exists());

    let o = qgt(&[
        "simulate", "--n", "200", "--k", "10", "--m", "20", "--decoder", "lse-exhaustive", "--budget", "1000",
        "--output", path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn bounds_rows_match_applicable_pairs() {
    let count = |args: &[&str]| {
        let o = qgt(args);
        assert_eq!(o.status.code(), Some(0), "{args:?}");
        stdout(&o).lines().count() - 1
    };
    assert_eq!(count(&["bounds", "--model", "all", "--n", "1000", "--k", "10", "--sigma2", "1", "--p", "0.1"]), 7);
    assert_eq!(count(&["bounds", "--n", "1000", "--k", "10"]), 1);
    assert_eq!(count(&["bounds", "--n", "1000", "--k", "10", "--sigma2", "2"]), 4);
    assert_eq!(count(&["bounds", "--model", "zchannel", "--n", "1000", "--k", "10", "--p", "0.3"]), 3);

    let o = qgt(&["bounds", "--model", "noiseless", "--n", "1000", "--k", "10"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,kind,n,k,sigma2,p,log_base,tests_real,tests_ceil,constant_caveat,degenerate"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "noiseless");
    assert_eq!(row[1], "achievability-linear");
    assert_eq!(row[8], "1347");
    assert_eq!(row[9], "false");
}

#[test]
fn bounds_json_mirrors_csv() {
    let o = qgt(&["bounds", "--n", "500", "--k", "5", "--p", "0.1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["model"], "zchannel");
    assert_eq!(rows[3]["kind"], "achievability-linear");
    assert_eq!(rows[3]["p"], 0.1);
    assert!(rows[0]["sigma2"].is_null());
}

#[test]
fn sweep_is_byte_identical_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let svg = dir.path().join(format!("{name}.svg"));
        let o = qgt(&[
            "sweep", "--n", "100", "--k", "3", "--m-list", "20,40,80,160", "--trials", "50", "--seed", "11",
            "--decoder", "lse-local", "--restarts", "2", "--output", path_str(&out), "--plot", path_str(&svg),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out).unwrap(), std::fs::read_to_string(svg).unwrap())
    };
    let (a, svg_a) = run("a.csv");
    let (b, svg_b) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(svg_a, svg_b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 5);
    assert_eq!(svg_a.matches("<circle").count(), 4);
}

#[test]
fn simulate_matches_sweep_row() {
    let base = ["--n", "80", "--k", "3", "--trials", "40", "--seed", "5", "--model", "zchannel", "--p", "0.2"];
    let mut sim = vec!["simulate", "--m", "60"];
    sim.extend(base);
    let mut sweep = vec!["sweep", "--m-list", "30,60"];
    sweep.extend(base);
    let sim_out = stdout(&qgt(&sim));
    let sweep_out = stdout(&qgt(&sweep));
    assert_eq!(sim_out.lines().nth(1), sweep_out.lines().nth(2));
}

#[test]
fn transition_csv_has_m_star_on_every_probe() {
    let o = qgt(&["transition", "--n", "200", "--k", "3", "--probe-trials", "60", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.last(), Some(&"m_star"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    let m_star = rows[0][13].clone();
    assert!(rows.iter().all(|r| r[13] == m_star));
    let ms: Vec<usize> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(ms.windows(2).all(|w| w[0] < w[1]));
    let star: usize = m_star.parse().unwrap();
    let at_star = rows.iter().find(|r| r[4] == m_star).unwrap();
    assert!(at_star[9].parse::<f64>().unwrap() >= 0.95);
    if star > 1 {
        let below = rows.iter().find(|r| r[4] == (star - 1).to_string()).unwrap();
        assert!(below[9].parse::<f64>().unwrap() < 0.95);
    }
}

#[test]
fn config_file_merges_with_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 60, "k": 2, "m": 30, "trials": 20, "seed": 3, "model": "zchannel", "p": 0.25}"#).unwrap();
    let o = qgt(&["simulate", "--config", path_str(&cfg), "--m", "45"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[0], "zchannel");
    assert_eq!(row[2], "60");
    assert_eq!(row[4], "45");
    assert_eq!(row[6], "0.25");
    assert_eq!(row[7], "20");

    std::fs::write(&cfg, r#"{"n": 60, "colour": "blue"}"#).unwrap();
    assert_eq!(qgt(&["simulate", "--config", path_str(&cfg)]).status.code(), Some(2));
    assert_eq!(qgt(&["simulate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
}

#[test]
fn verify_checks_report_rows() {
    let o = qgt(&["verify", "--check", "continuity"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next().unwrap(), "check,case,measured,reference,tolerance,passed");
    assert_eq!(text.lines().count(), 7);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));

    let o = qgt(&["verify", "--check", "score-gap", "--model", "zchannel", "--p", "0.1", "--trials", "2000"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("score-gap,zchannel p=0.1"));

    let o = qgt(&["verify", "--check", "inverse-count", "--k", "8", "--n", "64"]);
    assert_eq!(o.status.code(), Some(2));
}
