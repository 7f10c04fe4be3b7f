use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn wavefock(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavefock"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("wavefock-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn haar_verifies() {
    let out = wavefock(&["verify", "--builtin", "haar"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["relations"]["verdicts"]["cuntz"], true);
    assert_eq!(v["passed"], true);
}

#[test]
fn self_dual_stretched_haar_fails_verdict() {
    let out = wavefock(&["verify", "--builtin", "stretched-haar-self-dual"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stretched_haar_with_duals_is_biorthogonal() {
    let out = wavefock(&["verify", "--builtin", "stretched-haar"]);
    assert_eq!(out.status.code(), Some(0));
    let out = wavefock(&["verify", "--builtin", "stretched-haar", "--require", "cuntz"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_input_is_usage_error() {
    let path = scratch("bad.json");
    fs::write(&path, "{\"N\": 2, \"filters\": [").unwrap();
    let out = wavefock(&["verify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(wavefock(&["verify", "--builtin", "nope"]).status.code(), Some(2));
    assert_eq!(wavefock(&["verify", "--scale", "1", "--builtin", "haar"]).status.code(), Some(2));
    assert_eq!(wavefock(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn loop_round_trip_is_identical() {
    for (bank, seed) in [("haar", "0"), ("stretched-haar", "0"), ("random-biorthogonal", "11"), ("random-orthogonal", "12")] {
        let l1 = scratch(&format!("{bank}-loop.json"));
        let f = scratch(&format!("{bank}-filters.json"));
        let l2 = scratch(&format!("{bank}-loop2.json"));
        let args = ["loop", "--builtin", bank, "--seed", seed, "--scale", "3", "--degree", "2"];
        let n = if bank.starts_with("random") { args.len() } else { 3 };
        let mut a = args[..n].to_vec();
        a.extend(["--output", l1.to_str().unwrap()]);
        assert_eq!(wavefock(&a).status.code(), Some(0));
        let out = wavefock(&["loop", "--direction", "to-filters", "-i", l1.to_str().unwrap(), "-o", f.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(wavefock(&["loop", "-i", f.to_str().unwrap(), "-o", l2.to_str().unwrap()]).status.code(), Some(0));
        assert_eq!(fs::read(&l1).unwrap(), fs::read(&l2).unwrap(), "{bank}");
    }
}

#[test]
fn singular_loop_is_rejected() {
    let path = scratch("singular.json");
    fs::write(&path, r#"{"loop": {"N": 2, "entries": [[[], []], [[], []]]}}"#).unwrap();
    let out = wavefock(&["loop", "--direction", "to-filters", "-i", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

fn quotient_dims(args: &[&str]) -> Vec<u64> {
    let out = wavefock(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    v["quotient_dims"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect()
}

#[test]
fn fock_builtins() {
    assert_eq!(quotient_dims(&["fock", "--builtin", "cuntz", "--levels", "3"]), vec![1, 2, 4, 8]);
    assert_eq!(quotient_dims(&["fock", "--builtin", "collapse", "--levels", "3"]), vec![1, 2, 4, 8]);
    assert_eq!(quotient_dims(&["fock", "--builtin", "cuntz", "-n", "3", "-k", "2"]), vec![1, 3, 9]);
}

#[test]
fn fock_on_bank_and_exported_choi() {
    let choi = scratch("haar-choi.json");
    let dims = quotient_dims(&["fock", "--bank", "--builtin", "haar", "--export-choi", choi.to_str().unwrap()]);
    assert_eq!(dims, vec![8, 16, 32]);
    // The exported 2N×2N matrix is itself a valid Fock input.
    assert_eq!(quotient_dims(&["fock", "-i", choi.to_str().unwrap(), "-k", "1"]), vec![8, 16]);
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["verify", "--builtin", "random-biorthogonal", "--seed", "5"],
        vec!["anchor", "--builtin", "stretched-haar"],
        vec!["fock", "--bank", "--builtin", "random-orthogonal", "--seed", "2"],
        vec!["product", "--builtin", "haar", "--csv"],
    ] {
        let a = wavefock(&args);
        let b = wavefock(&args);
        assert_eq!(a.status.code(), Some(0), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn anchor_csv_lists_depths() {
    let out = wavefock(&["anchor", "--builtin", "haar", "--csv", "--modes", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,depth"));
    assert!(lines.any(|l| l == "4,3"));
}

#[test]
fn pyramid_csv_round_trip() {
    let sig = scratch("signal.csv");
    fs::write(&sig, "# test signal\nindex,re,im\n-2,1.5,0\n-1,0.25,1\n0,-3,0.5\n1,2,0\n2,0.75\n").unwrap();
    let out = wavefock(&["pyramid", "--builtin", "stretched-haar", "--signal", sig.to_str().unwrap(), "--csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let mut seen = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        assert!((f(1) - f(3)).abs() < 1e-10 && (f(2) - f(4)).abs() < 1e-10);
        seen += 1;
    }
    assert!(seen >= 5);

    let bad = scratch("gap.csv");
    fs::write(&bad, "0,1\n2,1\n").unwrap();
    let out = wavefock(&["pyramid", "--builtin", "haar", "--signal", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn product_csv_header() {
    let out = wavefock(&["product", "--builtin", "haar", "--csv", "--points", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("t,re,im,abs"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn acceptance_passes_and_names_failures() {
    let out = wavefock(&["acceptance"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("11 of 11 passed"));

    let out = wavefock(&["acceptance", "--seed", "9", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 11);

    let out = wavefock(&["acceptance", "--tolerance", "1e-15"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("failed:"));
    assert!(stdout(&out).contains("[FAIL]"));
}
