use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_stratorder")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn reproduce_prints_exact_fractions() {
    let (code, text) = run(&["reproduce", "--n", "5"]);
    assert_eq!(code, 0);
    assert!(text.contains("2: 1/16, 3: 1/4, 4: 3/8, 5: 1/4, 6: 1/16"));
    assert!(text.contains("D 3/4  A 1"));
    assert!(text.contains("variances: A 1/25  D 1/25"));
    let (_, json) = run(&["reproduce", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["coarse_below_fine"]["witness_point"], "5");
}

#[test]
fn verify_writes_a_deterministic_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for path in [&a, &b] {
        let (code, text) = run(&["verify", "--theorem", "4.3", "--trials", "20", "--seed", "5", "--out", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert!(text.contains("20/20 pass"));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn injected_counterexample_keeps_exit_code_zero() {
    let (code, text) = run(&["verify", "--theorem", "4.5", "--trials", "3", "--seed", "1", "--inject-counterexample"]);
    assert_eq!(code, 0);
    assert!(text.contains("precondition violated, witness 4"));
}

#[test]
fn invalid_input_exits_with_two() {
    assert_eq!(run(&["verify", "--theorem", "4.1", "--seed", "1", "--trials", "0"]).0, 2);
    assert_eq!(run(&["verify", "--theorem", "4.1", "--seed", "1", "--noise-variance", "-1"]).0, 2);
    assert_eq!(run(&["verify", "--trials", "3"]).0, 2);
}
