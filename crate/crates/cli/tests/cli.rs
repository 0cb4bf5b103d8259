use std::process::{Command, Output};

fn ghostlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ghostlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn build_and_dem_emit_text() {
    let o = ghostlab(&["build", "--family", "memory", "--d", "3", "--p", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("DETECTOR"));
    let o = ghostlab(&["dem", "--family", "tproxy", "--d", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("detectors "));
    assert!(text.lines().any(|l| l.starts_with("error(")));
}

#[test]
fn run_report_has_schema_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let args = [
        "run", "--family", "tproxy", "--d", "3", "--p", "0.003", "--shots", "300", "--seed", "7", "--mode", "windowed",
        "--compare-global", "--no-timing", "--out",
    ];
    let mut a: Vec<&str> = args.to_vec();
    a.push(path.to_str().unwrap());
    assert!(ghostlab(&a).status.success());
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(ghostlab(&a).status.success());
    assert_eq!(first, std::fs::read_to_string(&path).unwrap());
    let header = first.lines().next().unwrap();
    assert_eq!(
        header,
        "family,d,p,mode,shots,gates,failures,rate,ci_lo,ci_hi,tw_rate,heralds_w,heralds_c,avg_delay,secs_per_shot"
    );
    assert!(first.lines().nth(1).unwrap().starts_with("tproxy,3,0.003,windowed,300,300,"));
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(&cfg, "family = memory\nd = 3\np = 0\nshots = 20\nmode = global\n").unwrap();
    let o = ghostlab(&["run", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["failures"], 0);
    assert_eq!(v[0]["shots"], 20);
}

#[test]
fn decode_single_syndrome() {
    let dir = tempfile::tempdir().unwrap();
    let syn = dir.path().join("s.txt");
    std::fs::write(&syn, "").unwrap();
    let o = ghostlab(&["decode", "--d", "3", "--mode", "global", "--syndrome", syn.to_str().unwrap()]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["decisions"], serde_json::json!([false]));
    std::fs::write(&syn, "D100000").unwrap();
    assert!(!ghostlab(&["decode", "--d", "3", "--syndrome", syn.to_str().unwrap()]).status.success());
}

#[test]
fn search_exit_code_follows_expectation() {
    let base = ["search", "--family", "tproxy", "--d", "3", "--w-max", "2", "--expect"];
    let mut ok = base.to_vec();
    ok.push("2");
    let o = ghostlab(&ok);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["witness"]["weight"], 2);
    let mut bad = base.to_vec();
    bad.push("1");
    assert_eq!(ghostlab(&bad).status.code(), Some(2));
}

#[test]
fn crosscheck_passes_and_bad_input_fails() {
    let o = ghostlab(&["crosscheck", "--family", "memory", "--d", "3", "--n-r", "2", "--shots", "100", "--exhaustive"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("\"passed\":true"));
    assert!(!ghostlab(&["run", "--family", "deep-clifford", "--mode", "patient"]).status.success());
    assert!(!ghostlab(&["run", "--family", "tproxy", "--d", "4"]).status.success());
}
