use std::process::{Command, Output};

use serde_json::Value;

fn forestperm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_forestperm"))
        .args(args)
        .env_remove("FORESTPERM_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json output")
}

#[test]
fn count_defaults_to_csv() {
    let o = forestperm(&["count", "--n", "6"]);
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines[0], "n,t_n,f_n");
    assert_eq!(lines[6], "6,16,89");
}

#[test]
fn occ_agrees_and_reports_schema() {
    let o = forestperm(&["occ", "--pattern", "312", "--host", "31524"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["schema"], "forestperm/1");
    assert_eq!(v["brute"], "2");
    assert_eq!(v["equal"], true);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(forestperm(&["clt", "--n", "3"]).status.code(), Some(2));
    assert_eq!(forestperm(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(forestperm(&["occ", "--pattern", "11", "--host", "12"]).status.code(), Some(2));
}

#[test]
fn clt_is_identical_across_worker_counts() {
    let args = ["clt", "--class", "forest", "--pattern", "21", "--n", "100", "--trials", "200", "--seed", "5"];
    let one = forestperm(&[&args[..], &["--workers", "1"]].concat());
    let four = forestperm(&[&args[..], &["--workers", "4"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let v = json(&one);
    assert_eq!(v["experiment"], "forest-clt");
    assert_eq!(v["config"]["trials"], 200);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sampler run\nseed = 9\ncount = 4\nn = 7\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = forestperm(&["sample", "--class", "tree", "--config", cfg]);
    assert!(from_file.status.success());
    assert_eq!(stdout(&from_file).lines().count(), 4);
    let explicit = forestperm(&["sample", "--class", "tree", "--seed", "9", "--count", "4", "--n", "7"]);
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = forestperm(&["sample", "--class", "tree", "--config", cfg, "--count", "2"]);
    assert_eq!(stdout(&overridden).lines().count(), 2);
    std::fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    let bad = forestperm(&["count", "--config", dir.path().join("bad.cfg").to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t1.csv");
    let o = forestperm(&["constants", "--which", "table1", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("103010"));
}

#[test]
fn verify_passes() {
    let o = forestperm(&["verify", "--suite", "laga", "--workers", "2"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["passed"], true);
}

#[test]
fn expect_check_matches_brute_force() {
    let o = forestperm(&["expect", "--pattern", "2413", "--n", "9", "--check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
