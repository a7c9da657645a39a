use infoloss::entropy::Caps;
use infoloss_cli::{run_experiment, run_suite, ExperimentConfig, RunOptions, SuiteName, SuiteOptions};

fn opts() -> SuiteOptions {
    SuiteOptions {
        identity_tol: 1e-9,
        bracket_tol: 1e-3,
        caps: Caps::default(),
    }
}

#[test]
fn suite_instances_do_not_depend_on_run_size() {
    let short = run_suite(SuiteName::Thm2Bound, 5, 6, opts());
    let long = run_suite(SuiteName::Thm2Bound, 5, 12, opts());
    assert_eq!(short.results[..], long.results[..6]);
}

#[test]
fn every_suite_passes_a_small_run() {
    for name in [
        SuiteName::Dpi,
        SuiteName::Thm1Identity,
        SuiteName::Thm2Bound,
        SuiteName::Thm3Additivity,
        SuiteName::Thm4Finite,
        SuiteName::Cor2Lossless,
        SuiteName::ZooAll,
    ] {
        let r = run_suite(name, 11, 14, opts());
        assert_eq!(r.failed, 0, "{name:?}: {:?}", r.results.iter().find(|i| !i.passed));
    }
}

#[test]
fn round_trip_of_lossy_system_is_an_error() {
    // y = 2x over ℤ_4 maps 0 and 2 to the same output
    let cfg = ExperimentConfig::parse(
        r#"
        [alphabets.q]
        ring = "mod-4"
        [source]
        alphabet = "q"
        pmf = [0.25, 0.25, 0.25, 0.25]
        [system]
        kind = "ring-filter"
        alphabet = "q"
        b = [2]
        [[analysis]]
        kind = "round-trip"
        sequences = 3
        "#,
    )
    .unwrap();
    assert!(run_experiment(&cfg, RunOptions::default()).is_err());
}
