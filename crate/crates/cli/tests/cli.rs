//! End-to-end checks of the `spiralflow` binary: output schemas, exit
//! codes, determinism, and the CSV → analysis round trip.

use std::path::Path;
use std::process::{Command, Output};

use spiralflow_core::analysis::{geometry_report, PathSample, ReportConfig, SampledPath};
use spiralflow_core::geom::{CartesianPoint, LogPolarPoint};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spiralflow"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn parse_csv(content: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .expect("csv has a header")
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .map(|v| v.parse::<f64>().expect("numeric cell"))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn claims_all_passes_and_is_deterministic() {
    let a = run(&["claims", "--all"]);
    assert!(a.status.success(), "claims must exit 0");
    let b = run(&["claims", "--all"]);
    assert_eq!(a.stdout, b.stdout, "consecutive runs must be byte-identical");

    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&a)).expect("valid JSON");
    let claims = doc["claims"].as_array().expect("claims array");
    assert_eq!(claims.len(), 14);
    for c in claims {
        let kind = c["kind"].as_str().unwrap();
        let verdict = c["verdict"].as_str().unwrap();
        match kind {
            "assert" => assert_eq!(verdict, "pass", "claim {} failed", c["id"]),
            "report" => assert_eq!(verdict, "info"),
            other => panic!("unexpected kind {other}"),
        }
    }
    assert!(doc["run_id"].as_str().unwrap().starts_with("claims-"));
    assert_eq!(doc["config_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn claims_subset_and_failure_exit_code() {
    let ok = run(&["claims", "--claim", "C6", "--claim", "C9"]);
    assert!(ok.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout_str(&ok)).unwrap();
    assert_eq!(doc["claims"].as_array().unwrap().len(), 2);

    // An unknown claim id yields a fail record, which must flip the exit
    // status to 1.
    let bad = run(&["claims", "--claim", "C99"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["claims", "--out", "/no/such/dir/report.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_bowl_hits_radius_with_fixed_angle() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bowl.csv");
    let out = run(&[
        "simulate",
        "--field",
        "bowl",
        "--x0",
        "0.5,0.9272952180016122",
        "--rho-max",
        "13.815510557964274",
        "--no-domain-exit",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&std::fs::read_to_string(&csv_path).unwrap());
    assert_eq!(
        header.join(","),
        "s,rho,theta_unwrapped,r,x,y,f_sign,f_log,grad_factored"
    );
    let last = rows.last().unwrap();
    let (s, theta, r) = (last[0], last[2], last[3]);
    assert!((theta - 0.927_295_218_001_612_2).abs() <= 1e-9);
    assert!(r <= 1e-6 * (1.0 + 1e-6));
    assert!((s - (0.5 - 1e-6)).abs() <= 1e-7);
}

#[test]
fn simulate_csv_round_trips_into_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "simulate",
        "--field",
        "spiral",
        "--out",
        csv_path.to_str().unwrap(),
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let (_, rows) = parse_csv(&std::fs::read_to_string(&csv_path).unwrap());
    let samples: Vec<PathSample> = rows
        .iter()
        .map(|row| PathSample {
            s: row[0],
            q: LogPolarPoint::new(row[1], row[2]),
        })
        .collect();
    let path = SampledPath::from_samples(samples);
    let rebuilt = geometry_report(&path, CartesianPoint::ORIGIN, &ReportConfig::default()).unwrap();

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let geo = &doc["geometry"];
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
    assert!(close(
        rebuilt.total_length,
        geo["total_length"].as_f64().unwrap()
    ));
    assert!(close(
        rebuilt.winding_count,
        geo["winding_count"].as_f64().unwrap()
    ));
    assert!(close(
        rebuilt.oscillation,
        geo["oscillation"].as_f64().unwrap()
    ));
    assert_eq!(
        rebuilt.ratio_series.len(),
        geo["ratio_series"].as_array().unwrap().len()
    );
    for (mine, theirs) in rebuilt
        .ratio_series
        .iter()
        .zip(geo["ratio_series"].as_array().unwrap())
    {
        assert!(close(mine.ratio, theirs["ratio"].as_f64().unwrap()));
    }
    assert_eq!(
        rebuilt.tangent_exists,
        geo["tangent_exists"].as_bool().unwrap()
    );
}

#[test]
fn curve_table_at_start() {
    let out = run(&["curve", "--t", "2"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv(&stdout_str(&out));
    assert_eq!(header.join(","), "t,r,theta,speed,tail_length,ratio");
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(row[0], 2.0);
    assert_eq!(row[1], 0.5);
    assert!((row[2] - -0.366_512_920_581_664_33).abs() < 1e-15);
    assert!((row[3] - 0.438_845_714_702_616_74).abs() < 1e-15);
    // Tail length within its certified bracket.
    assert!(row[4] >= 0.5 && row[4] <= 1.540_684_490_502_804);
    assert!((row[5] - row[4] * 2.0).abs() < 1e-15);
}

#[test]
fn gradcheck_reports_agreement() {
    let out = run(&["gradcheck", "--count", "40"]);
    assert!(out.status.success());
    let (header, rows) = parse_csv_with_strings(&stdout_str(&out));
    assert_eq!(header[0], "expr");
    assert_eq!(rows.len(), 40 * 6);
    for row in &rows {
        let dual: f64 = row[4].parse().unwrap();
        let abs_diff: f64 = row[7].parse().unwrap();
        assert!(
            abs_diff <= (1e-6 * dual.abs()).max(1e-9),
            "oracle disagreement in row {row:?}"
        );
    }
}

fn parse_csv_with_strings(content: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = content.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .unwrap()
        .split(',')
        .map(|s| s.to_string())
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.to_string()).collect())
        .collect();
    (header, rows)
}

#[test]
fn export_figure_writes_grid_and_curve() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.csv");
    let curve = dir.path().join("curve.csv");
    let out = run(&[
        "export-figure",
        "--r-count",
        "12",
        "--theta-count",
        "16",
        "--curve-count",
        "30",
        "--grid-out",
        grid.to_str().unwrap(),
        "--curve-out",
        curve.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    let (gh, grows) = parse_csv(&std::fs::read_to_string(&grid).unwrap());
    assert_eq!(gh.join(","), "r,theta,f_sign,f_log");
    assert_eq!(grows.len(), 12 * 16);
    for row in &grows {
        assert!(row[0] >= 1e-3 && row[0] <= 0.5);
        assert!(row[1] >= 0.0 && row[1] < 2.0 * std::f64::consts::PI);
    }

    let (ch, crows) = parse_csv(&std::fs::read_to_string(&curve).unwrap());
    assert_eq!(ch.join(","), "t,r,theta,x,y");
    assert_eq!(crows.len(), 30);
    assert_eq!(crows[0][0], 2.0);
}

#[test]
fn trajectory_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.csv");
    let p2 = dir.path().join("b.csv");
    for p in [&p1, &p2] {
        let out = run(&[
            "simulate",
            "--field",
            "spiral",
            "--rho-max",
            "8",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        std::fs::read(&p1).unwrap(),
        std::fs::read(&p2).unwrap(),
        "trajectory CSV must be byte-identical for fixed flags"
    );
    assert!(Path::new(&p1).exists());
}
