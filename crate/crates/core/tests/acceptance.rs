use torus_control::experiments::{verify, Suite};

#[test]
fn acceptance_criteria() {
    let out = verify(Suite::Fast).expect("suite runs");
    for v in &out.report.verdicts {
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.criterion, v.detail);
    }
    println!("suite runtime {:.1} s", out.report.runtime_seconds);
    let failed: Vec<_> = out.report.failures().map(|v| v.criterion.clone()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
