//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use capgaps::capacity::{ea_classical, q1_capacity, q2_capacity, q4_capacity, OptimizerConfig};
use capgaps::channel::QChannel;
use capgaps::coding::{
    bare_error, builtin_code, coding_error, kl_check, single_qubit_paulis, Coding, KL_TOL,
};
use capgaps::experiments::{evaluate_all, summarize, ResultRow, WorkItem};
use capgaps::linalg::pauli;
use capgaps::sampling::sample_one;
use capgaps::CMatrix;

const SEED: u64 = 2024;
/// Rank-2 channels for the scatter statistics; the ordering suite uses the first 100.
const RANK2_COUNT: usize = 200;
const RANK34_COUNT: usize = 100;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn optimizer() -> OptimizerConfig {
    OptimizerConfig {
        restarts: 16,
        ..OptimizerConfig::default()
    }
}

fn items(rank: usize, count: usize) -> Vec<WorkItem> {
    (0..count)
        .map(|index| WorkItem {
            rank,
            index,
            channel: sample_one(SEED, rank, index).unwrap().0,
        })
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn criterion_1() -> Outcome {
    let cfg = optimizer();
    let id = QChannel::identity(2);
    let repl = QChannel::replacement(&CMatrix::maximally_mixed(2), 2).unwrap();
    let deph = QChannel::completely_dephasing();
    let mut bad = Vec::new();
    for (name, ch, q1) in [
        ("identity", &id, 1.0),
        ("replacement", &repl, -1.0),
        ("dephasing", &deph, 0.0),
    ] {
        let (got1, got2) = (q1_capacity(ch), q2_capacity(ch));
        if !close(got1, q1) {
            bad.push(format!("q1({name}) = {got1}"));
        }
        if !close(got2, (1.0 + q1) / 2.0) {
            bad.push(format!("q2({name}) = {got2}"));
        }
    }
    let q4 = q4_capacity(&deph, &cfg).unwrap().value;
    if !close(q4, 0.5) {
        bad.push(format!("q4(dephasing) = {q4}"));
    }
    let (c2, c4) = ea_classical(&deph, &cfg).unwrap();
    if !close(c2, 1.0) || !close(c4, 1.0) {
        bad.push(format!("ea_classical(dephasing) = ({c2}, {c4})"));
    }
    let detail = if bad.is_empty() {
        "all identities within 1e-9".to_string()
    } else {
        bad.join("; ")
    };
    outcome(bad.is_empty(), detail)
}

fn criterion_2(rows: &[ResultRow]) -> Outcome {
    let suite: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.rank != 2 || r.index < 100)
        .collect();
    let mut violations = 0;
    for r in &suite {
        let ok = r.q5 >= r.q1.max(0.0) - 1e-7
            && r.q4 >= r.q2 - 1e-7
            && r.q5 <= r.q2 + 1e-6
            && r.q4 <= (1.0 + r.q5) / 2.0 + 1e-6
            && r.dq24 <= r.dq15 / 2.0 + 1e-6;
        if !ok {
            violations += 1;
        }
    }
    outcome(
        violations == 0 && suite.len() == 300,
        format!("{} channels, {violations} violations", suite.len()),
    )
}

fn criterion_3(rows: &[ResultRow]) -> Outcome {
    let s = summarize(rows);
    let pos = s.rank2_positive_low_t.unwrap_or(f64::NAN);
    let zero = s.rank34_zero.unwrap_or(f64::NAN);
    let trans = s.rank2_transition.unwrap_or(f64::NAN);
    outcome(
        pos >= 0.95 && zero >= 0.90 && trans >= 0.05,
        format!(
            "rank-2 positive at t<0.4 {pos:.3} (need 0.95), rank-3/4 zero {zero:.3} (need 0.90), transition {trans:.4} (need 0.05)"
        ),
    )
}

fn criterion_4(rows: &[ResultRow]) -> Outcome {
    let m = summarize(rows).rank2_median_abs_dq24.unwrap_or(f64::NAN);
    outcome(m <= 0.01, format!("median |dq24| = {m:.2e} (need 0.01)"))
}

fn criterion_5(rows: &[ResultRow]) -> Outcome {
    let rank34: Vec<&ResultRow> = rows.iter().filter(|r| r.rank >= 3).collect();
    let accepted: Vec<&ResultRow> = rank34
        .iter()
        .copied()
        .filter(|r| r.q3_ub.is_some())
        .collect();
    let invalid = accepted
        .iter()
        .filter(|r| r.q3_ub.unwrap() < r.q5 - 1e-4 || r.residual.is_none_or(|res| res > 1e-3))
        .count();
    let s = summarize(rows);
    let p34 = s.rank34_dq34_positive.unwrap_or(f64::NAN);
    let n23 = s.rank34_dq23_negative.unwrap_or(f64::NAN);
    outcome(
        invalid == 0 && !accepted.is_empty() && p34 >= 0.6 && n23 >= 0.6,
        format!(
            "{} of {} decomposed, {invalid} invalid bounds, dq34>0 {p34:.3}, dq23<0 {n23:.3} (need 0.6)",
            accepted.len(),
            rank34.len()
        ),
    )
}

/// Coding error of the three-qubit repetition code under independent bit
/// flips by enumerating all flip patterns: majority vote fails on two or more.
fn repetition_oracle(p: f64) -> f64 {
    (0u32..8)
        .filter(|pattern| pattern.count_ones() >= 2)
        .map(|pattern| {
            let w = pattern.count_ones() as i32;
            p.powi(w) * (1.0 - p).powi(3 - w)
        })
        .sum()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let noise = QChannel::bit_flip(0.1).unwrap();
    let rep = builtin_code("three_qubit_bitflip").unwrap();
    let eps = coding_error(&Coding::from_code(&rep).unwrap(), &noise).unwrap();
    let bare = bare_error(&noise, 1).unwrap();
    let oracle = repetition_oracle(0.1);
    let five = builtin_code("five_qubit_perfect").unwrap();
    let kl_five = kl_check(&five, &single_qubit_paulis(5), KL_TOL).unwrap();
    let z1 = vec![pauli::string("III").unwrap(), pauli::string("ZII").unwrap()];
    let kl_rep = kl_check(&rep, &z1, KL_TOL).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (eps - oracle).abs() <= 1e-9
            && (oracle - 0.028).abs() <= 1e-9
            && eps < bare
            && close(bare, 0.1)
            && kl_five.satisfied
            && !kl_rep.satisfied
            && secs < 10.0,
        format!(
            "coding_error {eps:.12} (oracle {oracle:.12}), bare {bare:.12}, five-qubit KL {}, repetition KL on {{I, Z1}} {}, {secs:.2} s",
            kl_five.satisfied, kl_rep.satisfied
        ),
    )
}

fn cli(dir: &Path, args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_capgaps"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "capgaps {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Runs the sample, capacities, decompose and figure pipeline; returns the CSV and SVG bytes.
fn pipeline(threads: &str) -> (Vec<u8>, Vec<u8>) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = ["--seed", "11", "--threads", threads];
    let opt = ["--restarts", "4"];
    for rank in ["2", "3"] {
        let out = format!("r{rank}.json");
        cli(
            d,
            &[
                &common[..],
                &["sample", "--rank", rank, "--count", "6", "--out", &out],
            ]
            .concat(),
        );
    }
    let inputs = ["--in", "r2.json", "--in", "r3.json"];
    cli(
        d,
        &[
            &common[..],
            &["capacities"],
            &inputs[..],
            &["--out", "res.csv"],
            &opt[..],
        ]
        .concat(),
    );
    cli(
        d,
        &[
            &common[..],
            &["decompose"],
            &inputs[..],
            &["--append", "res.csv"],
            &opt[..],
        ]
        .concat(),
    );
    cli(
        d,
        &[
            &common[..],
            &["figure", "--in", "res.csv", "--y", "q5", "--out", "fig.svg"],
        ]
        .concat(),
    );
    (
        std::fs::read(d.join("res.csv")).unwrap(),
        std::fs::read(d.join("fig.svg")).unwrap(),
    )
}

fn criterion_7() -> Outcome {
    let a = pipeline("1");
    let b = pipeline("1");
    let c = pipeline("3");
    let same = a == b && a == c;
    outcome(
        same,
        format!(
            "CSV ({} bytes) and SVG ({} bytes) identical across reruns and 1 vs 3 threads: {same}",
            a.0.len(),
            a.1.len()
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, Outcome, f64)> = Vec::new();
    let mut run = |n: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {n}: {} - {} [{secs:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, o, secs));
    };

    run(1, &criterion_1);
    run(6, &criterion_6);
    run(7, &criterion_7);

    let start = Instant::now();
    let cfg = optimizer();
    let rank2 = evaluate_all(&items(2, RANK2_COUNT), SEED, &cfg, false, 0).unwrap();
    let mut higher = items(3, RANK34_COUNT);
    higher.extend(items(4, RANK34_COUNT));
    let capacities_only = evaluate_all(&higher, SEED, &cfg, false, 0).unwrap();
    println!(
        "scatter: {} channels evaluated in {:.1} s",
        rank2.len() + capacities_only.len(),
        start.elapsed().as_secs_f64()
    );
    let rows: Vec<ResultRow> = rank2.iter().chain(&capacities_only).cloned().collect();
    run(2, &|| criterion_2(&rows));
    run(3, &|| criterion_3(&rows));
    run(4, &|| criterion_4(&rows));

    let start = Instant::now();
    let decomposed = evaluate_all(&higher, SEED, &cfg, true, 0).unwrap();
    println!(
        "decomposition: {} channels in {:.1} s",
        decomposed.len(),
        start.elapsed().as_secs_f64()
    );
    let rows: Vec<ResultRow> = rank2.iter().chain(&decomposed).cloned().collect();
    run(5, &|| criterion_5(&rows));

    results.sort_by_key(|r| r.0);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
