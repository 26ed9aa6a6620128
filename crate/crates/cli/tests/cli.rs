use std::path::Path;
use std::process::{Command, Output};

fn heatchan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatchan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_reports_bounded_memory() {
    let o = heatchan(&["classify", "--coeffs", "geometric:0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("Bounded") || stderr(&o).contains("Bounded"));
}

#[test]
fn bounds_gives_the_high_snr_limit() {
    let o = heatchan(&["bounds", "--coeffs", "geometric:0.5", "--L", "2", "--snr", "1e6"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o) + &stderr(&o);
    assert!(text.contains("0.3466") || text.contains("3.4657"), "{text}");
}

#[test]
fn out_of_range_coefficients_are_a_usage_error() {
    let o = heatchan(&["bounds", "--coeffs", "geometric:1.5", "--L", "2", "--snr", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("(0, 1)"), "{}", stderr(&o));
}

#[test]
fn unknown_flags_and_conflicts_are_usage_errors() {
    assert_eq!(heatchan(&["classify", "--bogus"]).status.code(), Some(2));
    let o = heatchan(&["bounds", "--coeffs", "geometric:0.5", "--L", "2", "--snr", "10", "--power", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergent_memory_is_a_runtime_error() {
    let o = heatchan(&["bounds", "--coeffs", "example1", "--L", "2", "--snr", "10"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn every_subcommand_documents_its_flags() {
    let cases: &[(&str, &[&str])] = &[
        ("classify", &["--coeffs", "--horizon"]),
        ("simulate", &["--coeffs", "--inputs", "--trials", "--seed"]),
        ("code", &["--snr", "--power", "--rate", "--messages", "--workers"]),
        ("bounds", &["--snr", "--rho", "--max-l0"]),
        ("sweep", &["--n", "--rate", "--rate-fraction"]),
        ("lemma1", &["--delta", "--trials"]),
        ("lemma2", &["--eps", "--n"]),
        ("demo", &["--coeffs", "--L"]),
    ];
    for (cmd, flags) in cases {
        let o = heatchan(&[cmd, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let help = stdout(&o);
        for flag in *flags {
            assert!(help.contains(flag), "`{cmd} --help` lacks {flag}");
        }
    }
}

#[test]
fn jsonl_output_is_one_object_per_line() {
    let o = heatchan(&[
        "lemma2", "--coeffs", "geometric:0.5", "--power", "10", "--L", "2", "--n", "40", "--trials", "20",
        "--seed", "5", "--format", "jsonl",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let head: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(head["header"]["command"], "lemma2");
    let row: serde_json::Value = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(row["n"], 40);
    assert!(row["mean_y"].is_f64());
}

fn rerun_matches(args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["-o", path_arg(&first)]);
    let o = heatchan(&full);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = heatchan(&[args[0], "--config", path_arg(&first), "-o", path_arg(&second)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap(), "{}", args[0]);
}

#[test]
fn result_files_reproduce_their_run() {
    rerun_matches(&[
        "code", "--coeffs", "truncated:4:1", "--snr", "100", "--L", "4", "--n", "24", "--rate", "0.25",
        "--trials", "40", "--seed", "3",
    ]);
    rerun_matches(&[
        "sweep", "--coeffs", "geometric:0.5", "--snr", "10,100", "--L", "2", "--n", "16", "--rate-fraction",
        "0.5", "--trials", "30", "--seed", "9",
    ]);
    rerun_matches(&[
        "lemma2", "--coeffs", "geometric:0.5", "--power", "10", "--L", "2", "--n", "40,80", "--trials", "20",
        "--seed", "5",
    ]);
}

#[test]
fn key_value_config_files_fill_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# bounded memory\ncoeffs = geometric:0.5\nL = 2\nsnr = 1e6\n").unwrap();
    let o = heatchan(&["bounds", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // the command line wins over the file
    let o = heatchan(&["bounds", "--config", path_arg(&cfg), "--coeffs", "geometric:1.5"]);
    assert_eq!(o.status.code(), Some(2));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = heatchan(&["bounds", "--config", path_arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn worker_count_does_not_change_results() {
    let base = [
        "code", "--coeffs", "geometric:0.5", "--snr", "30", "--L", "2", "--n", "20", "--rate", "0.2", "--trials",
        "130", "--seed", "17",
    ];
    let outputs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|w| {
            let mut args = base.to_vec();
            args.extend(["--workers", w]);
            let o = heatchan(&args);
            assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
            o.stdout
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}
