use std::process::{Command, Output};

fn aka(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aka")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn matrix_matches_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = aka(&["matrix", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    assert!(table.contains("replay-suci-same/out-of-window"));
    assert!(table.contains("uniform-reject"));
    let csv = std::fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(dir.path().join("matrix.txt").exists());
}

#[test]
fn run_writes_transcript_and_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let out = aka(&[
        "run",
        "--variant",
        "baseline",
        "--scenario",
        "replay-auth-same",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("outcome:  synch-failure"));
    let jsonl = std::fs::read_to_string(dir.path().join("transcript.jsonl")).unwrap();
    assert!(jsonl.lines().count() > 6);
    let outcome: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome["outcome"], "synch-failure");
}

#[test]
fn run_reads_toml_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(
        &path,
        "variant = \"nonce-in-suci\"\nscenario = \"replay-suci-diff\"\nseed = 3\n",
    )
    .unwrap();
    let out = aka(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("outcome:  uniform-reject"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "window = 0\n").unwrap();
    assert_eq!(aka(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&path, "no-such-key = 1\n").unwrap();
    assert_eq!(aka(&["run", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        aka(&["attack", "--kind", "suci-replay", "--victim", "9", "--subscribers", "2"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn attacks_report_verdicts() {
    let out = aka(&["attack", "--kind", "failure-message", "--victim", "1", "--probe", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("verdict:     different-subscriber"));
    assert!(text.contains("cause=mac-failure"));

    let out = aka(&["attack", "--kind", "suci-replay", "--variant", "nonce-in-suci"]);
    assert!(stdout(&out).contains("verdict:     indeterminate"));

    let out = aka(&["attack", "--kind", "auts-differential", "--initial-sqn", "41"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("contains true counter"));
    assert!(text.trim_end().ends_with("true"));
}
