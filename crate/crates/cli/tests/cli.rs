use std::process::Command;

const Q_E: &str = "Name the sea into which Danish Straits flows and has Kaliningrad as one of the city on the shore";

fn kgqa() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kgqa"));
    for (key, _) in std::env::vars().filter(|(k, _)| k.starts_with("KGQA_")) {
        c.env_remove(key);
    }
    c
}

#[test]
fn answer_against_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let probes = dir.path().join("probes.jsonl");
    let out = kgqa().args(["--fixture", "--probe-log"]).arg(&probes).args(["answer", Q_E]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "http://dbpedia.org/resource/Baltic_Sea");
    let log = std::fs::read_to_string(&probes).unwrap();
    assert!(log.lines().any(|l| l.contains("\"kind\":\"vertex\"")));
}

#[test]
fn bench_prints_macro_scores() {
    let file = kgqa_fixture::data_path("benchmark.json");
    let out = kgqa().args(["--fixture", "bench", "--json"]).arg(&file).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["macro"]["f1"].as_f64().unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn flags_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("kgqa.toml");
    std::fs::write(&config, "top_k = 1\n").unwrap();
    let out = kgqa().arg("--config").arg(&config).args(["--fixture", "answer", "--json", Q_E]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["plans"].as_array().unwrap().len(), 1);

    let out = kgqa()
        .arg("--config")
        .arg(&config)
        .args(["--max-queries", "3", "--fixture", "answer", "--json", Q_E])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["plans"].as_array().unwrap().len(), 3);

    let out = kgqa().env("KGQA_MAX_QUERIES", "2").args(["--fixture", "answer", "--json", Q_E]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["plans"].as_array().unwrap().len(), 2);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "tau = 0.5\nunknown_key = 1\n").unwrap();
    let out = kgqa().arg("--config").arg(&config).args(["answer", "x"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.toml:2:"), "{err}");
}

#[test]
fn unreachable_endpoint_fails_in_linking() {
    let out = kgqa().args(["--endpoint", "http://127.0.0.1:9/sparql", "answer", Q_E]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("linking failed"));
}
