//! Runs every acceptance criterion at full scale and prints one verdict line
//! per criterion, then checks that the `accept` command is byte-for-byte
//! reproducible.

use std::process::Command;

use primecouple::experiments::{acceptance_suite, Lab, DEFAULT_TABLES_LIMIT};

fn accept_csv(dir: &std::path::Path, name: &str) -> (Vec<u8>, Option<i32>) {
    let path = dir.join(name);
    let status = Command::new(env!("CARGO_BIN_EXE_primecouple"))
        .args(["accept", "--out"])
        .arg(&path)
        .output()
        .expect("accept runs");
    (std::fs::read(&path).unwrap_or_default(), status.status.code())
}

#[test]
fn acceptance_criteria() {
    let lab = Lab::new(DEFAULT_TABLES_LIMIT).unwrap();
    let outcomes = acceptance_suite(&lab, &[]);
    let mut lines: Vec<String> = outcomes.iter().map(|o| o.summary()).collect();
    let mut failed: Vec<u32> = outcomes.iter().filter(|o| !o.passed()).map(|o| o.id).collect();

    let dir = std::env::temp_dir().join(format!("primecouple-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (first, code1) = accept_csv(&dir, "first.csv");
    let (second, code2) = accept_csv(&dir, "second.csv");
    let _ = std::fs::remove_dir_all(&dir);
    let deterministic = !first.is_empty() && first == second && code1 == code2 && matches!(code1, Some(0 | 1));
    lines.push(format!(
        "criterion 18: {} accept output byte-identical across runs ({} bytes)",
        if deterministic { "PASS" } else { "FAIL" },
        first.len()
    ));
    if !deterministic {
        failed.push(18);
    }
    for l in &lines {
        println!("{l}");
    }
    assert!(failed.is_empty(), "failing criteria {failed:?}:\n{}", lines.join("\n"));
}
