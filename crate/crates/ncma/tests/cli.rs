//! End-to-end checks of the command-line interface: reproducibility,
//! exit codes, config file handling, and trace input.

use std::path::Path;
use std::process::{Command, Output};

fn ncma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

const HEADER: &str = "scheme,decoder,antennas,snr_db,dphi1,dphi2,metric,value,trials,seed";

#[test]
fn identical_runs_are_byte_identical() {
    let args = [
        "ber", "--scheme", "qpsk", "--decoder", "pnc_bit", "--antennas", "2", "--snr", "6,8",
        "--dphi1", "0.7853981633974483", "--trials", "150", "--seed", "33",
    ];
    let first = ncma(&args);
    let second = ncma(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let base = [
        "ber", "--scheme", "qpsk", "--decoder", "mud_bit", "--snr", "9", "--trials", "80",
        "--seed", "5",
    ];
    let on_stdout = stdout_of(&ncma(&base));
    let mut with_out: Vec<&str> = base.to_vec();
    let path_str = path.display().to_string();
    with_out.extend(["--out", &path_str]);
    let out = ncma(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), on_stdout);
}

#[test]
fn different_seeds_differ() {
    let args = |seed: &'static str| {
        vec![
            "ber", "--scheme", "qpsk", "--decoder", "pnc_bit", "--snr", "7", "--dphi1",
            "uniform", "--trials", "200", "--seed", seed,
        ]
    };
    let a = stdout_of(&ncma(&args("1")));
    let b = stdout_of(&ncma(&args("2")));
    assert_ne!(a, b);
}

#[test]
fn config_errors_exit_with_code_2() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["ber", "--scheme", "qpsk", "--decoder", "mud_reduced", "--snr", "8"],
        vec!["ber", "--scheme", "bpsk", "--decoder", "pnc_symbol", "--snr", "8"],
        vec!["ber", "--snr", "8", "--trials", "0"],
        vec!["ber", "--snr", "4:0:8"],
        vec!["ber", "--snr", "8", "--antennas", "3"],
        vec![
            "ber", "--scheme", "qam16", "--decoder", "pnc_nearest_k", "--snr", "14",
            "--nearest-k", "3",
        ],
    ];
    for case in cases {
        let out = ncma(&case);
        assert_eq!(out.status.code(), Some(2), "case {:?}", case);
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("error"), "case {:?}: {}", case, err);
        assert!(out.stdout.is_empty(), "case {:?}", case);
    }
}

#[test]
fn unknown_flags_exit_with_code_2() {
    let out = ncma(&["ber", "--snr", "8", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    std::fs::write(
        &path,
        r#"
scheme = "qpsk"
decoder = "pnc_bit"
antennas = 1
snr_db = [6.0]
dphi1 = 0.7853981633974483
trials = 60
seed = 9
"#,
    )
    .unwrap();
    let path_str = path.display().to_string();

    let from_file = stdout_of(&ncma(&["ber", "--config", &path_str]));
    assert!(from_file.contains("qpsk,pnc_bit,1,6,"));
    assert!(from_file.lines().all(|l| l == HEADER || l.ends_with(",60,9")));

    let overridden = stdout_of(&ncma(&["ber", "--config", &path_str, "--seed", "10", "--snr", "7"]));
    assert!(overridden.contains("qpsk,pnc_bit,1,7,"));
    assert!(overridden.lines().all(|l| l == HEADER || l.ends_with(",60,10")));

    let missing = ncma(&["ber", "--config", "/nonexistent/exp.toml"]);
    assert_eq!(missing.status.code(), Some(2));

    std::fs::write(&path, "decoder = \"warp_drive\"").unwrap();
    let bad = ncma(&["ber", "--config", &path_str]);
    assert_eq!(bad.status.code(), Some(2));
}

fn write_trace(path: &Path, lines: &[&str]) {
    let mut text = String::from("slot_outcomes_v1\n");
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn trace_driven_throughput_matches_the_hand_computed_value() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("session.trace");
    write_trace(&path, &["1,1,0", "0,0,1", "0,1,0", "1,0,0", "1,0,0"]);
    let path_str = path.display().to_string();
    let out = stdout_of(&ncma(&[
        "throughput", "--trace", &path_str, "--l-a", "3", "--l-b", "3", "--n-packets", "6",
        "--packet-bytes", "4",
    ]));
    let th_line = out
        .lines()
        .find(|l| l.contains(",throughput,"))
        .expect("throughput row present");
    assert!(th_line.contains(",throughput,1.2e0,"), "line: {}", th_line);
    let ub_line = out.lines().find(|l| l.contains(",upper_bound,")).unwrap();
    assert!(ub_line.contains(",upper_bound,1.2e0,"), "line: {}", ub_line);
}

#[test]
fn empty_trace_yields_a_header_only_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.trace");
    write_trace(&path, &[]);
    let path_str = path.display().to_string();
    let out = stdout_of(&ncma(&["throughput", "--trace", &path_str]));
    assert_eq!(out.trim_end(), HEADER);
}

#[test]
fn malformed_traces_report_the_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.trace");
    write_trace(&path, &["1,1,1", "2,0,1"]);
    let path_str = path.display().to_string();
    let out = ncma(&["throughput", "--trace", &path_str]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "stderr: {}", err);

    std::fs::write(&path, "wrong_header\n1,1,1\n").unwrap();
    let out = ncma(&["throughput", "--trace", &path_str]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn full_phy_throughput_runs_end_to_end() {
    let out = stdout_of(&ncma(&[
        "throughput", "--mode", "full", "--scheme", "qpsk", "--decoder", "pnc_bit", "--snr",
        "30", "--dphi1", "0.5", "--beacons", "24", "--l-a", "2", "--l-b", "2", "--n-packets",
        "4", "--packet-bytes", "4", "--trials", "1",
    ]));
    let th_line = out.lines().find(|l| l.contains(",throughput,")).unwrap();
    assert!(th_line.contains(",throughput,2e0,"), "line: {}", th_line);
}
