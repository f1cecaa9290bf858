//! Acceptance battery: one test per criterion, each printing a single
//! `ACCEPTANCE n: PASS/FAIL` line and enforcing the criterion's runtime
//! budget. Run with `--nocapture` to see the lines inline.

use growthlab::suite::{format_line, run_criterion};

fn run(id: u32, budget_secs: u64) {
    let report = run_criterion(id).expect("criterion runner failed");
    println!("{}", format_line(&report));
    assert!(report.passed, "{}", report.detail);
    assert!(
        report.millis <= budget_secs * 1000,
        "criterion {id} took {} ms, budget {budget_secs} s",
        report.millis
    );
}

#[test]
fn acceptance_01_short_loxodromic() {
    run(1, 10);
}

#[test]
fn acceptance_02_quasi_center() {
    run(2, 10);
}

#[test]
fn acceptance_03_displacement_transfer() {
    run(3, 30);
}

#[test]
fn acceptance_04_translation_length() {
    run(4, 20);
}

#[test]
fn acceptance_05_free_semigroup() {
    run(5, 60);
}

#[test]
fn acceptance_06_schreier() {
    run(6, 30);
}

#[test]
fn acceptance_07_growth_closed_forms() {
    run(7, 120);
}

#[test]
fn acceptance_08_commutator_growth() {
    run(8, 60);
}

#[test]
fn acceptance_09_chaining_arithmetic() {
    run(9, 5);
}

#[test]
fn acceptance_10_determinism() {
    // No budget in the criteria list; allow the growth budget.
    run(10, 120);
}
