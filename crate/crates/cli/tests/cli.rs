use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tcvqite(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcvqite"))
        .args(args)
        .arg("--output")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn bad_config_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tcvqite(&["evolve", "--dtau", "-0.1"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).lines().last().unwrap()).unwrap();
    assert_eq!(err["error"], "config");
    assert!(err["message"].as_str().unwrap().contains("dtau"));

    let cfg = tmp.path().join("bad.json");
    std::fs::write(&cfg, "{\"rows\": 2, \"colums\": 2}").unwrap();
    let out = tcvqite(&["build", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn build_writes_dimer_hamiltonian() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tcvqite(&["build", "--rows", "1", "--cols", "2", "--j", "0", "--name", "dimer"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("dimer");
    let text = std::fs::read_to_string(dir.join("hamiltonian_regular.txt")).unwrap();
    let strings: Vec<&str> = text.lines().filter_map(|l| l.split_whitespace().nth(2)).collect();
    assert_eq!(strings.iter().filter(|s| **s != "IIII").count(), 10);
    assert!(strings.contains(&"IIII"));
    // at J = 0 both files describe the same operator
    assert_eq!(text, std::fs::read_to_string(dir.join("hamiltonian.txt")).unwrap());
    let generators = std::fs::read_to_string(dir.join("generators.txt")).unwrap();
    assert_eq!(generators.lines().count(), 10);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("parameters 31"), "{stdout}");
}

#[test]
fn exact_reports_matching_ground_energies() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tcvqite(&["exact", "--rows", "1", "--cols", "2", "--j", "-0.5", "--name", "x", "--dump-eigenvectors", "true"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("x");
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("exact.json")).unwrap()).unwrap();
    let (reg, tc) = (report["regular"]["eigenvalue"].as_f64().unwrap(), report["tc"]["eigenvalue"].as_f64().unwrap());
    assert!((reg - tc).abs() < 1e-8);
    // the global ground state holds a single particle in the bonding orbital
    assert!((reg + 1.0).abs() < 1e-10, "{reg}");
    for f in ["regular.bin", "tc_right.bin", "tc_left.bin"] {
        assert_eq!(std::fs::metadata(dir.join(f)).unwrap().len(), 8 + 16 * 16);
    }
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["evolve", "--rows", "1", "--cols", "2", "--layers", "1", "--steps", "20", "--seed", "4", "--name", "a"];
    let first = tcvqite(&args, tmp.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let m = manifest(&tmp.path().join("a"));
    assert_eq!(m["manifest"]["subcommand"], "evolve");
    assert_eq!(m["seed"], 4);

    // feed the manifest back as a config under a new name
    let cfg = tmp.path().join("again.json");
    std::fs::write(&cfg, serde_json::to_string(&m).unwrap()).unwrap();
    let second = tcvqite(&["evolve", "--config", cfg.to_str().unwrap(), "--name", "b"], tmp.path());
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    let read = |d: &str| std::fs::read(tmp.path().join(d).join("trace_4.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn trace_has_expected_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tcvqite(&["evolve", "--rows", "1", "--cols", "2", "--layers", "1", "--steps", "25", "--record-interval", "10"], tmp.path());
    assert!(out.status.success());
    let text = std::fs::read_to_string(tmp.path().join("evolve").join("trace_0.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,e_real,e_imag,fid_right,fid_left,grad_norm,a_rank");
    // steps 0, 10, 20 and the final step 25
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("2.500000000000e-01,"));
}

#[test]
fn sweep_records_depth_zero_and_each_method() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tcvqite(
        &["sweep", "--rows", "1", "--cols", "2", "--layers-list", "0,1", "--repetitions", "2", "--steps", "10", "--name", "s"],
        tmp.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("s");
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    // header, then depth 0 and depth 1 for each of two methods
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.join("L1_gradient_descent_right_tc").join("trace_1.csv").exists());
    assert_eq!(manifest(&dir)["manifest"]["failures"], Value::Array(vec![]));
}
