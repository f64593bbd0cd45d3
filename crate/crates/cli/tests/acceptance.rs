//! Acceptance run: the `verify` subcommand of the binary evaluates criteria
//! 1–9; criterion 10 (determinism and wall-clock) is judged here by running it
//! twice with different thread counts and comparing the CSV artifacts byte for
//! byte. One pass/fail line is printed per criterion.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

/// Wall-clock limit of one full `verify` run, in seconds.
const VERIFY_TIME_LIMIT_S: f64 = 600.0;

/// Artifacts that must be reproducible; the manifest carries timings.
const DETERMINISTIC_OUTPUTS: [&str; 2] = ["verify_metrics.csv", "verify_reports.csv"];

struct VerifyRun {
    manifest: serde_json::Value,
    seconds: f64,
}

fn run_verify(out: &Path, threads: usize) -> VerifyRun {
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_mq"))
        .args(["verify", "--seed", "1", "--threads", &threads.to_string(), "--out"])
        .arg(out)
        .output()
        .expect("mq binary runs");
    let seconds = start.elapsed().as_secs_f64();
    let text = fs::read_to_string(out.join("manifest.json")).unwrap_or_else(|e| {
        panic!("no manifest ({e}); stderr: {}", String::from_utf8_lossy(&status.stderr))
    });
    VerifyRun {
        manifest: serde_json::from_str(&text).expect("manifest is JSON"),
        seconds,
    }
}

#[test]
fn acceptance_criteria() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_verify(d1.path(), 1);
    let second = run_verify(d2.path(), 2);
    assert!(first.manifest["error"].is_null(), "verify failed: {}", first.manifest["error"]);

    let mut all_pass = true;
    let verdicts = first.manifest["verdicts"].as_array().expect("verdict list");
    assert_eq!(verdicts.len(), 9, "criteria 1–9 are evaluated by verify");
    for v in verdicts {
        println!("{}", v["detail"].as_str().unwrap());
        all_pass &= v["passed"].as_bool().unwrap();
    }

    let mut problems = Vec::new();
    for name in DETERMINISTIC_OUTPUTS {
        let (a, b) = (fs::read(d1.path().join(name)).unwrap(), fs::read(d2.path().join(name)).unwrap());
        if a != b {
            problems.push(format!("{name} differs between 1 and 2 threads"));
        }
    }
    for (label, run) in [("1 thread", &first), ("2 threads", &second)] {
        if run.seconds > VERIFY_TIME_LIMIT_S {
            problems.push(format!("verify with {label} took {:.0}s", run.seconds));
        }
    }
    let timing = format!("{:.1}s and {:.1}s of {VERIFY_TIME_LIMIT_S:.0}s", first.seconds, second.seconds);
    if problems.is_empty() {
        println!("criterion 10 [PASS] determinism — CSV artifacts byte-identical across thread counts, {timing}");
    } else {
        all_pass = false;
        println!("criterion 10 [FAIL] determinism — {}; {timing}", problems.join("; "));
    }
    assert!(all_pass, "at least one acceptance criterion failed (see lines above)");
}
