use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mmscbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmscbm"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = mmscbm(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/fao_trade_mini")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_detect_eval_analyze() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("inst");
    let det = tmp.path().join("det");
    ok(&["generate", "--n", "90", "--k", "3", "--n0-r", "15", "--n0-c", "15", "--layers", "6", "--rho", "0.5", "--seed", "4", "--out", s(&inst)]);
    for f in ["manifest.json", "mixing.json", "pi_r.csv", "pi_c.csv", "network.edges", "nodes.txt", "layers.txt"] {
        assert!(inst.join(f).exists(), "{f}");
    }
    ok(&["detect", s(&inst), "--k", "3", "--out", s(&det)]);
    let header = std::fs::read_to_string(det.join("pi_r.csv")).unwrap();
    assert!(header.starts_with("node_id,w1,w2,w3,home_base,mixed_flag\n"));

    let report: serde_json::Value = serde_json::from_str(&ok(&["eval", "--estimate", s(&det), "--truth", s(&inst)])).unwrap();
    let h = report["hamming"].as_f64().unwrap();
    assert!((0.0..=2.0).contains(&h));
    assert_eq!(report["hamming_perm_r"].as_array().unwrap().len(), 3);

    let analysis: serde_json::Value = serde_json::from_str(&ok(&["analyze", s(&det), "--threshold", "0.6"])).unwrap();
    assert_eq!(analysis["nodes"].as_array().unwrap().len(), 90);
    assert_eq!(analysis["threshold"].as_f64(), Some(0.6));
}

#[test]
fn detect_on_fixture_with_preprocessing() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = fixture();
    for method in ["cspdsos", "cspsos", "cspsum"] {
        let out = tmp.path().join(method);
        ok(&[
            "detect",
            s(&dir.join("fao_trade_multiplex.edges")),
            "--nodes",
            s(&dir.join("fao_trade_nodes.txt")),
            "--layer-table",
            s(&dir.join("fao_trade_layers.txt")),
            "--merge-spec",
            s(&dir.join("merge.tsv")),
            "--top-layers",
            "5",
            "--k",
            "3",
            "--method",
            method,
            "--threshold",
            "0.5",
            "--out",
            s(&out),
        ]);
        let csv = std::fs::read_to_string(out.join("pi_c.csv")).unwrap();
        assert_eq!(csv.lines().count(), 36, "{method}: header plus 35 merged nodes");
        assert!(!csv.contains("China, mainland"));
        let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
        assert_eq!(summary["method"], method);
    }
}

#[test]
fn experiment_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("grid.toml");
    std::fs::write(&cfg, "n = [60]\nlayers = [3, 6]\nrho = [0.5]\nk = 3\nn0_r = 10\nn0_c = 0.2\nreplicates = 2\nseed = 5\nmethods = [\"cspdsos\", \"cspsum\"]\n").unwrap();
    let table = ok(&["experiment", s(&cfg)]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "n,L,rho,method,hamming_mean,hamming_sd,relative_mean,relative_sd,replicates");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("60,3,0.5,cspdsos,"));
    assert!(lines[4].ends_with(",2"));
    let file = tmp.path().join("table.csv");
    ok(&["experiment", s(&cfg), "--out", s(&file)]);
    assert_eq!(std::fs::read_to_string(file).unwrap(), table);
}

#[test]
fn bad_inputs_fail_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let edges = tmp.path().join("bad.edges");
    std::fs::write(&edges, "1 1 2\n1 2\n").unwrap();
    let out = mmscbm(&["detect", s(&edges), "--k", "2", "--out", s(&tmp.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = mmscbm(&["detect", s(&edges), "--k", "2", "--method", "kmeans", "--out", "x"]);
    assert!(!out.status.success());
}
