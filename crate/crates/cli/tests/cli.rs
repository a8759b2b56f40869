//! End-to-end tests running the compiled binary. Every subcommand is
//! exercised at least once, and the exit code contract (0 success,
//! 1 domain error, 2 usage error) is pinned down.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transversal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "stdout: {}\nstderr: {}",
        stdout(output),
        stderr(output)
    );
}

#[test]
fn help_enumerates_every_subcommand() {
    let output = run(&["--help"]);
    assert_success(&output);
    let text = stdout(&output);
    for subcommand in [
        "delta",
        "classify",
        "scan",
        "local-model",
        "verify-local",
        "regularity",
        "examples",
        "sup",
    ] {
        assert!(text.contains(subcommand), "help misses {subcommand}");
    }
}

#[test]
fn classify_reports_the_open_segment_stratum() {
    let output = run(&["classify", "--builtin", "example3", "--point", "1/2,0"]);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("stratum = Wtilde(1)"));
    assert!(text.contains("delta_family = 1"));
    assert!(text.contains("delta_slice = 2"));
    assert!(text.contains("mather_hypothesis = true"));
}

#[test]
fn delta_prints_both_defects() {
    let output = run(&["delta", "--builtin", "example1", "--point", "0,0"]);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("on_Z = true"));
    assert!(text.contains("delta_family = 1"));
    assert!(text.contains("delta_slice = 1"));
}

#[test]
fn wrong_point_arity_is_a_usage_error() {
    let output = run(&["classify", "--builtin", "example2", "--point", "1,1,1"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("expected 2"));
}

#[test]
fn domain_errors_exit_one() {
    let output = run(&["delta", "--builtin", "nope", "--point", "0,0"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("nope"));

    let output = run(&["delta", "--builtin", "example1", "--point", "abc,0"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("bad point"));

    let output = run(&["classify", "--scenario", "/no/such/file.scn", "--point", "0,0"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_source_is_a_usage_error() {
    let output = run(&["classify", "--point", "0,0"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn scan_writes_a_deterministic_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "scan",
        "--builtin",
        "example1",
        "--x-count",
        "5",
        "--a-count",
        "5",
        "--out",
        out,
    ];
    let first = run(&args);
    assert_success(&first);
    let text = stdout(&first);
    assert!(text.contains("freq_w = 5/5"));
    assert!(text.contains("agreement = true"));
    assert!(text.contains("manifest = "));

    let files = ["manifest.txt", "genericity.txt", "defect_table.csv"];
    let snapshot: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(Path::new(out).join(f)).unwrap())
        .collect();

    let second = run(&args);
    assert_success(&second);
    assert_eq!(stdout(&first), stdout(&second));
    for (file, before) in files.iter().zip(&snapshot) {
        let after = std::fs::read(Path::new(out).join(file)).unwrap();
        assert_eq!(&after, before, "{file} changed between identical runs");
    }
}

#[test]
fn scan_takes_the_output_dir_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_transversal"))
        .args([
            "scan",
            "--builtin",
            "parabola",
            "--x-count",
            "9",
            "--a-count",
            "4",
        ])
        .env("TRANSVERSAL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_success(&output);
    assert!(dir.path().join("manifest.txt").exists());
    assert!(dir.path().join("genericity.txt").exists());
}

#[test]
fn local_model_builds_and_optionally_verifies() {
    let base = [
        "local-model",
        "--builtin",
        "example3",
        "--point",
        "1/2,0",
        "--x-count",
        "7",
        "--a-count",
        "7",
    ];
    let output = run(&base);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("case = QPosPartial"));
    assert!(text.contains("ztilde_zeroed = 2"));
    assert!(text.contains("ztilde_dim = 2"));
    assert!(text.contains("verification = not run"));

    let mut with_verify = base.to_vec();
    with_verify.push("--verify");
    let output = run(&with_verify);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("all_passed = true"));
    assert!(text.contains("block_identity = pass"));
}

#[test]
fn verify_local_always_verifies() {
    let output = run(&[
        "verify-local",
        "--builtin",
        "example3",
        "--point",
        "1/2,0",
        "--x-count",
        "7",
        "--a-count",
        "7",
    ]);
    assert_success(&output);
    assert!(stdout(&output).contains("all_passed = true"));
}

#[test]
fn full_defect_base_is_a_domain_error_for_local_model() {
    let output = run(&["local-model", "--builtin", "example1", "--point", "0,0"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("defect 1 fills the whole target"));
}

#[test]
fn regularity_flags_the_parabola_vertex() {
    let output = run(&["regularity", "--builtin", "parabola", "--point", "0,0"]);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("regularity = critical"));
    assert!(text.contains("kernel_dim = 1"));

    let output = run(&["regularity", "--builtin", "parabola", "--point", "1/10,1/100"]);
    assert_success(&output);
    assert!(stdout(&output).contains("regularity = regular"));

    // off the preimage there is nothing to project
    let output = run(&["regularity", "--builtin", "parabola", "--point", "1,0"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn sup_estimates_the_defect_supremum() {
    let output = run(&[
        "sup",
        "--builtin",
        "example1",
        "--x-count",
        "5",
        "--a-count",
        "5",
    ]);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("delta_sup_estimate = 1"));
    assert!(text.contains("points_classified = 25"));
}

#[test]
fn examples_lists_prints_and_checks() {
    let output = run(&["examples", "--list"]);
    assert_success(&output);
    assert_eq!(stdout(&output), "example1\nexample2\nexample3\nparabola\n");

    let output = run(&["examples", "--name", "example2"]);
    assert_success(&output);
    let text = stdout(&output);
    assert!(text.contains("name = example2"));
    assert!(text.contains("F1 = ((a1 ^ 2) * (x1 ^ 2))"));

    let output = run(&["examples", "--name", "bogus"]);
    assert_eq!(output.status.code(), Some(1));

    let output = run(&["examples", "--check", "--name", "example3"]);
    assert_success(&output);
    assert_eq!(stdout(&output), "example3: pass\n");
}

#[test]
fn scenario_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("segment.scn");
    let source = run(&["examples", "--name", "example3"]);
    assert_success(&source);
    std::fs::write(&path, stdout(&source)).unwrap();

    let output = run(&[
        "classify",
        "--scenario",
        path.to_str().unwrap(),
        "--point",
        "1/2,0",
    ]);
    assert_success(&output);
    assert!(stdout(&output).contains("stratum = Wtilde(1)"));
}
