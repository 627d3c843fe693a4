use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn cartprl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cartprl")).args(args).output().expect("run cartprl")
}

#[test]
fn corpus_files_check() {
    for name in ["bool.prl", "pi.prl", "sigma.prl", "path.prl", "circle.prl", "eq.prl", "shannon.prl"] {
        let path = corpus(name);
        let out = cartprl(&["check", path.to_str().unwrap()]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{name}:\n{stdout}{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout.contains("ok     thm"), "{stdout}");
    }
}

#[test]
fn open_goals_fail_the_check() {
    let path = corpus("open_aux.prl");
    let out = cartprl(&["check", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[1] >> bool type (kan)"), "{stdout}");
}

#[test]
fn json_report() {
    let path = corpus("sigma.prl");
    let out = cartprl(&["check", "--json", path.to_str().unwrap()]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], true);
    let pair = v["declarations"].as_array().unwrap().iter().find(|d| d["name"] == "pair").unwrap();
    assert_eq!(pair["extract"], "\\x y. (x, y)");
}

#[test]
fn trace_prints_the_steps() {
    let path = corpus("eq.prl");
    let out = cartprl(&["check", "--trace", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("value: "));
}

#[test]
fn parse_errors_name_the_position() {
    let dir = std::env::temp_dir().join(format!("cartprl-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.prl");
    std::fs::write(&bad, "thm x : (bool by { id }").unwrap();
    let out = cartprl(&["check", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.prl:1:15: expected"));
    let out = cartprl(&["check", "--json", bad.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["parse_error"]["col"], 15);
    std::fs::remove_dir_all(&dir).unwrap();
}
