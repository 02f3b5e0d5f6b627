//! One line per acceptance criterion, measured against pinned thresholds.
//!
//! Criterion 9 asks for five valid inputs for 3-posRic at n = 7, q = 4. A
//! disc metric there is a product with flat ℝ³, so three Ricci eigenvalues
//! vanish and no input exists (the condition needs codimension 6 > q). The
//! fixture set is empty and the criterion fails; the test pins that failure
//! to exactly this cause.

use std::time::{Duration, Instant};

use curvlab::verify::{run_check, run_suite, Check, VerifyConfig, CRITERIA};

const ROUND_SPHERE_RUNTIME: Duration = Duration::from_secs(1);
const STABILITY_RUNTIME: Duration = Duration::from_secs(60);
const BENDING_RUNTIME: Duration = Duration::from_secs(10);
const PIPELINE_RUNTIME: Duration = Duration::from_secs(120);
const EXPECTED_9_WITNESS: &str = "k_pos_ric3: only 0 valid inputs";

fn runtime_limit(id: u32) -> Option<Duration> {
    match id {
        1 => Some(ROUND_SPHERE_RUNTIME),
        2 => Some(STABILITY_RUNTIME),
        6 => Some(BENDING_RUNTIME),
        9 => Some(PIPELINE_RUNTIME),
        _ => None,
    }
}

fn verdict(check: &Check, elapsed: Duration) -> (bool, String) {
    let within = runtime_limit(check.id).is_none_or(|l| elapsed <= l);
    let timing = match runtime_limit(check.id) {
        Some(l) => format!("{:.2}s (limit {}s)", elapsed.as_secs_f64(), l.as_secs()),
        None => format!("{:.2}s", elapsed.as_secs_f64()),
    };
    (check.pass && within, timing)
}

#[test]
fn acceptance() {
    let cfg = VerifyConfig::default();
    let mut checks = Vec::new();
    let mut unexpected = Vec::new();
    for id in CRITERIA {
        let start = Instant::now();
        let check = run_check(id, &cfg);
        let (pass, timing) = verdict(&check, start.elapsed());
        println!("criterion {id:>2}: {} {timing} | {}", if pass { "PASS" } else { "FAIL" }, check.line());
        let expected_failure = id == 9 && !check.pass && check.witness.as_deref() == Some(EXPECTED_9_WITNESS);
        if !pass && !expected_failure {
            unexpected.push(id);
        }
        checks.push(check);
    }

    // determinism: a second full run serializes to the same bytes
    let first = run_suite(&cfg, &CRITERIA);
    let second = run_suite(&cfg, &CRITERIA);
    let same = first.to_json() == second.to_json() && first.checks == checks;
    println!("criterion 11: {} | two runs with seed {:#x} give identical reports", if same { "PASS" } else { "FAIL" }, cfg.seed);
    if !same {
        unexpected.push(11);
    }

    let failed: Vec<u32> = checks.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    println!("{} of 11 criteria pass; failing: {failed:?} (9 is the documented 3-posRic gap)", 11 - failed.len() - usize::from(!same));
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
    assert_eq!(failed, vec![9], "criterion 9 is expected to fail until 3-posRic inputs exist");
}
