use std::path::Path;
use std::process::{Command, Output};

fn colgrove(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colgrove"))
        .args(args)
        .output()
        .expect("run colgrove")
}

fn ok(args: &[&str]) -> String {
    let out = colgrove(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    colgrove(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["generate", "--kind", "nope", "--records", "1", "--out", "x"]), 1);
    assert_eq!(code(&["scan", "--data", "/nonexistent", "--format", "seq", "--job", "checksum"]), 1);
    assert_eq!(code(&["scan", "--data", "/nonexistent", "--format", "parquet", "--job", "checksum"]), 1);
}

#[test]
fn generate_load_scan_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("crawl.seq");
    let cif = dir.path().join("crawl.cif");
    let txt = dir.path().join("crawl.txt");
    ok(&["generate", "--kind", "crawl", "--records", "400", "--seed", "3", "--out", s(&seq), "--content-bytes", "32"]);
    ok(&["load", "--in", s(&seq), "--in-format", "seq", "--out", s(&cif), "--out-format", "cif", "--layout", "skiplist,metadata=dcsl:100"]);
    ok(&["load", "--in", s(&seq), "--in-format", "seq", "--out", s(&txt), "--out-format", "txt"]);
    let distinct = |data: &Path, format: &str, mode: &str| {
        ok(&[
            "scan", "--data", s(data), "--format", format, "--job", "distinct",
            "--predicate-col", "url", "--pattern", "ibm.com/jp", "--target-col", "metadata",
            "--map-key", "content-type", "--mode", mode, "--verify",
        ])
        .lines()
        .filter(|l| !l.starts_with("records="))
        .map(str::to_owned)
        .collect::<Vec<_>>()
    };
    let reference = distinct(&seq, "seq", "eager");
    assert!(!reference.is_empty());
    assert_eq!(distinct(&cif, "cif", "lazy"), reference);
    assert_eq!(distinct(&txt, "txt", "lazy"), reference);

    let metrics = dir.path().join("m.json");
    ok(&["scan", "--data", s(&cif), "--format", "cif", "--job", "checksum", "--metrics-json", s(&metrics)]);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["records_emitted"], 400);

    let sim = ok(&["simulate", "--data", s(&cif), "--nodes", "5", "--slots", "2", "--replication", "3",
        "--block-bytes", "65536", "--policy", "cpp", "--seed", "1", "--columns", "url,metadata", "--scan"]);
    let j: serde_json::Value = serde_json::from_str(&sim).unwrap();
    assert_eq!(j["fully_co_located_fraction"], 1.0);
    assert_eq!(j["remote_bytes"], 0);

    let reports = dir.path().join("loc");
    ok(&["simulate", "--data", s(&cif), "--policy", "default", "--report-dir", s(&reports)]);
    assert!(reports.join("locality.csv").is_file());
    assert!(reports.join("locality.json").is_file());
}

#[test]
fn corrupted_data_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let seq = dir.path().join("d.seq");
    let cif = dir.path().join("d.cif");
    ok(&["generate", "--kind", "synthetic", "--records", "300", "--out", s(&seq)]);
    ok(&["load", "--in", s(&seq), "--in-format", "seq", "--out", s(&cif), "--out-format", "cif"]);
    std::fs::remove_file(cif.join("s0/c3_str3")).unwrap();
    assert_eq!(code(&["scan", "--data", s(&cif), "--format", "cif", "--job", "checksum"]), 2);

    let bytes = std::fs::read(&seq).unwrap();
    std::fs::write(&seq, &bytes[..bytes.len() - 5]).unwrap();
    assert_eq!(code(&["scan", "--data", s(&seq), "--format", "seq", "--job", "checksum"]), 2);
}

#[test]
fn invariant_errors_map_to_three() {
    assert_eq!(colgrove::Error::Invariant("x".into()).exit_code(), 3);
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"data_bytes": 2097152, "repetitions": 1, "placement_seeds": 2}"#).unwrap();
    let reports = dir.path().join("reports");
    ok(&["bench", "--experiment", "placement", "--spec", s(&spec), "--report-dir", s(&reports)]);
    let csv = std::fs::read_to_string(reports.join("placement.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(reports.join("placement.json")).unwrap()).unwrap();
    assert_eq!(json["spec"]["placement_seeds"], 2);

    std::fs::write(&spec, r#"{"bogus": 1}"#).unwrap();
    assert_eq!(code(&["bench", "--experiment", "placement", "--spec", s(&spec), "--report-dir", s(&reports)]), 1);
}
