//! Release-gate battery, one test per check so the harness prints one
//! verdict line each. Checks share process-global caches and several are
//! timed against wall-clock budgets, so they hold a common lock and run
//! serially even under a threaded test runner.

use std::sync::Mutex;

use frameward_core::acceptance::{format_line, run_check};

static GATE: Mutex<()> = Mutex::new(());

fn run(id: usize) {
    let _guard = GATE.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    let result = run_check(id);
    println!("{}", format_line(&result));
    assert!(result.pass, "{}", format_line(&result));
}

#[test]
fn check_01_arrow_family_closed_form_bounds() {
    run(1);
}

#[test]
fn check_02_assembled_entries_vs_quadrature_oracle() {
    run(2);
}

#[test]
fn check_03_extension_condition_growth_rate() {
    run(3);
}

#[test]
fn check_04_augmented_family_algebraic_growth() {
    run(4);
}

#[test]
fn check_05_weighted_family_geometric_floor() {
    run(5);
}

#[test]
fn check_06_reference_coefficient_norms() {
    run(6);
}

#[test]
fn check_07_square_system_error_plateau() {
    run(7);
}

#[test]
fn check_08_oversampled_error_plateau() {
    run(8);
}

#[test]
fn check_09_projection_error_inequality() {
    run(9);
}

#[test]
fn check_10_coefficient_norm_inequality() {
    run(10);
}

#[test]
fn check_11_perturbation_amplification_bound() {
    run(11);
}

#[test]
fn check_12_sigma_orthogonality_of_spectral_basis() {
    run(12);
}

#[test]
fn check_13_frame_bound_monotonicity() {
    run(13);
}

#[test]
fn check_14_synthetic_target_coefficient_blowup() {
    run(14);
}

#[test]
fn check_15_dual_gap_and_iteration_contraction() {
    run(15);
}
