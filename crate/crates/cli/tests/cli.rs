use std::path::Path;
use std::process::{Command, Output};

fn capgaps(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capgaps"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = capgaps(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn capacities_are_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "--seed", "5", "sample", "--rank", "2", "--count", "8", "--out", "b.json",
        ],
    );
    let mut outputs = Vec::new();
    for threads in ["1", "2"] {
        let csv = format!("t{threads}.csv");
        let svg = format!("t{threads}.svg");
        ok(
            d,
            &[
                "--threads",
                threads,
                "capacities",
                "--in",
                "b.json",
                "--out",
                &csv,
                "--restarts",
                "4",
            ],
        );
        ok(d, &["figure", "--in", &csv, "--y", "q5", "--out", &svg]);
        outputs.push((
            std::fs::read(d.join(&csv)).unwrap(),
            std::fs::read(d.join(&svg)).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert!(text.starts_with("#capgaps-results v1\nindex,rank,seed,"));
    assert_eq!(text.lines().count(), 2 + 8);
    let svg = String::from_utf8(outputs[0].1.clone()).unwrap();
    // legend markers use r="4"
    assert_eq!(svg.matches(r#"r="3""#).count(), 8);
}

#[test]
fn sampling_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (name, seed) in [("a.json", "3"), ("b.json", "3"), ("c.json", "4")] {
        ok(
            d,
            &[
                "--seed", seed, "sample", "--rank", "3", "--count", "4", "--out", name,
            ],
        );
    }
    let read = |n: &str| std::fs::read(d.join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
}

#[test]
fn code_check_reports_repetition_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "code-check",
            "--code",
            "three_qubit_bitflip",
            "--noise",
            "bitflip:0.1",
        ],
    );
    assert!(out.contains("coding_error    0.028000000000"), "{out}");
    assert!(out.contains("bare_error      0.100000000000"), "{out}");
    assert!(out.contains("works           true"), "{out}");
    // single-qubit Z errors are not correctable by the repetition code
    assert!(out.contains("kl_single_qubit false"), "{out}");
}

#[test]
fn summary_prints_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "--seed", "1", "sample", "--rank", "2", "--count", "4", "--out", "b.json",
        ],
    );
    ok(
        d,
        &[
            "capacities",
            "--in",
            "b.json",
            "--out",
            "r.csv",
            "--restarts",
            "2",
        ],
    );
    let out = ok(d, &["summary", "--in", "r.csv"]);
    assert!(out.starts_with("rows                         4\n"), "{out}");
    assert!(out.contains("rank 3-4: q5 <= 1e-3         n/a"), "{out}");
}

#[test]
fn exit_codes_distinguish_bad_input_from_io() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let code = |args: &[&str]| capgaps(d, args).status.code();
    // precondition violations
    assert_eq!(
        code(&["sample", "--rank", "0", "--count", "3", "--out", "x.json"]),
        Some(2)
    );
    assert_eq!(
        code(&["code-check", "--code", "steane", "--noise", "bitflip:0.1"]),
        Some(2)
    );
    assert_eq!(
        code(&[
            "code-check",
            "--code",
            "three_qubit_bitflip",
            "--noise",
            "bitflip:2"
        ]),
        Some(2)
    );
    // missing or unwritable files
    assert_eq!(code(&["summary", "--in", "missing.csv"]), Some(3));
    assert_eq!(
        code(&[
            "sample",
            "--rank",
            "2",
            "--count",
            "1",
            "--out",
            "no/such/dir/x.json"
        ]),
        Some(3)
    );
    // a corrupt results file is bad input, not an I/O failure
    std::fs::write(d.join("bad.csv"), "not a results file\n").unwrap();
    assert_eq!(code(&["summary", "--in", "bad.csv"]), Some(2));
}
