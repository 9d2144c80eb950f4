//! Statistical checks at a reduced sample size. The full-size runs live in
//! the acceptance target of the CLI crate.

use solvdiff_core::experiments::{self, Check};

const N: usize = 20_000;
const SEED: u64 = 2024;

fn assert_all(checks: Vec<Check>) {
    assert!(!checks.is_empty());
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    assert!(failed.is_empty(), "{failed:#?}");
}

#[test]
fn hitting_time_of_sqb() {
    assert_all(experiments::check_fht_law(N, SEED).unwrap());
}

#[test]
fn schemes_share_marginals() {
    assert_all(experiments::check_cross_scheme(N, SEED).unwrap());
}

#[test]
fn randomizers_goodness_of_fit() {
    assert_all(experiments::check_randomizers(N, SEED).unwrap());
}

#[test]
fn hypergeometric_hitting_times() {
    assert_all(experiments::check_hitting_time_laws(N, SEED).unwrap());
}

#[test]
fn densities_have_unit_mass() {
    assert_all(experiments::check_density_mass().unwrap());
}

#[test]
fn sqb_mean_without_absorption() {
    assert_all(experiments::check_sqb_mean(N, SEED).unwrap());
}

#[test]
fn discounted_prices_are_martingales() {
    assert_all(experiments::check_martingale(N, SEED).unwrap());
}

#[test]
fn cev_approaches_coincide_at_zero_rate() {
    assert_all(experiments::check_cev_approaches(500, SEED).unwrap());
}

#[test]
fn map_round_trips() {
    assert_all(experiments::check_round_trips().unwrap());
}

#[test]
fn suites_are_reproducible() {
    let a = experiments::distribution_suite(2000, 9).unwrap();
    let b = experiments::distribution_suite(2000, 9).unwrap();
    assert_eq!(a, b);
}
