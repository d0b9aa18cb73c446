use std::path::Path;
use std::process::{Command, Output};

fn dropqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dropqed")).args(args).output().expect("binary runs")
}

fn single_json_line(stderr: &[u8]) -> serde_json::Value {
    let text = String::from_utf8_lossy(stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    serde_json::from_str(lines[0]).expect("error line is JSON")
}

const NET: [&str; 6] = ["--dims", "3,2", "--gammas", "1,0.4", "--theta-over-pi", "0.37"];

#[test]
fn compare_passes_and_is_byte_identical() {
    let args: Vec<&str> = ["compare"].iter().chain(NET.iter()).copied().collect();
    let a = dropqed(&args);
    let b = dropqed(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(doc.is_object());
}

#[test]
fn csv_has_header_and_one_row_per_rate() {
    let args: Vec<&str> = ["drop"].iter().chain(NET.iter()).chain(["--format", "csv"].iter()).copied().collect();
    let out = dropqed(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("method,re,im,tuple,k"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn files_are_written_whole() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rates.json");
    let svg = dir.path().join("rates.svg");
    let args: Vec<&str> = ["compare"]
        .iter()
        .chain(NET.iter())
        .copied()
        .chain(["--out", out.to_str().unwrap(), "--svg", svg.to_str().unwrap()])
        .collect();
    let run = dropqed(&args);
    assert_eq!(run.status.code(), Some(0));
    assert!(run.stdout.is_empty());
    serde_json::from_slice::<serde_json::Value>(&std::fs::read(&out).unwrap()).unwrap();
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<svg "));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn usage_errors_exit_one_with_a_json_line() {
    for args in [
        vec!["compare", "--dims", "3,x", "--gammas", "1,1", "--theta-over-pi", "0.3"],
        vec!["compare", "--dims", "3,2", "--gammas", "1", "--theta-over-pi", "0.3"],
        vec!["compare", "--gammas", "1"],
        vec![],
    ] {
        let out = dropqed(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        single_json_line(&out.stderr);
    }
}

#[test]
fn config_file_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, "{\n  \"dims\": [3, 2],\n  \"bogus\": 1\n}\n").unwrap();
    let out = dropqed(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = single_json_line(&out.stderr);
    assert_eq!(err["line"], 3);
}

#[test]
fn config_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    std::fs::write(&path, r#"{"dims":[2,2],"gammas":[1,1],"theta_over_pi":0.5,"method":"compare"}"#).unwrap();
    let out = dropqed(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn noisy_compare_fails_validation() {
    let args: Vec<&str> =
        ["compare"].iter().chain(NET.iter()).chain(["--noise-eps", "0.2", "--noise-seed", "3"].iter()).copied().collect();
    let out = dropqed(&args);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_output_directory_is_an_io_error() {
    let bad = Path::new("/nonexistent-dir/x.json");
    let args: Vec<&str> = ["drop"].iter().chain(NET.iter()).copied().chain(["--out", bad.to_str().unwrap()]).collect();
    let out = dropqed(&args);
    assert_eq!(out.status.code(), Some(4));
    single_json_line(&out.stderr);
}

#[test]
fn thread_variable_is_validated() {
    let args: Vec<&str> = ["drop"].iter().chain(NET.iter()).copied().collect();
    let ok = Command::new(env!("CARGO_BIN_EXE_dropqed")).args(&args).env("DROPQED_THREADS", "2").output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_dropqed")).args(&args).env("DROPQED_THREADS", "0").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    single_json_line(&bad.stderr);
}

#[test]
fn chain_at_pi_has_one_bright_state() {
    let out = dropqed(&["chain", "--n", "3", "--theta-over-pi", "1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let re: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(re.len(), 3);
    assert!((re[2] - 3.0).abs() < 1e-10 && re[0].abs() < 1e-10 && re[1].abs() < 1e-10);
}
