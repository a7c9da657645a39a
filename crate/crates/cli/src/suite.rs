//! Randomized suites that check one identity or bound per instance.
//!
//! Instance `i` of a run with seed `s` draws from a ChaCha8 stream keyed by
//! `(s, i)`, so results do not depend on scheduling and any single instance
//! can be regenerated alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use infoloss::checks::{cascade_additivity, joint_entropy_collapse};
use infoloss::entropy::{finite_length_losses, loss_rate_report, Caps};
use infoloss::instances::{random_invertible_system, random_markov_source, random_table_system};
use infoloss::zoo::{
    fixed_point_filter, hammerstein_system, multiplier_system, ring_linear_filter, squarer,
    static_map, xor_filter, FilterCoeffs, FixedPointFormat, Placement, Product, Quantizer,
};
use infoloss::{Alphabet, Error, MarkovSource, SystemSpec};

use crate::experiment::{round_trip, PRUNED_MASS_LIMIT};

/// Largest block length for the rate brackets in suites.
pub const SUITE_MAX_N: usize = 8;
/// Largest block length for the joint-entropy identity.
pub const COLLAPSE_MAX_N: usize = 10;
/// Largest `K` for the finite-length identity.
pub const FINITE_MAX_K: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    Dpi,
    Thm1Identity,
    Thm2Bound,
    Thm3Additivity,
    Thm4Finite,
    Cor2Lossless,
    ZooAll,
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub identity_tol: f64,
    pub bracket_tol: f64,
    pub caps: Caps,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceResult {
    pub index: usize,
    pub passed: bool,
    pub values: Value,
    /// The instance itself, dumped only on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: SuiteName,
    pub seed: u64,
    pub instances: usize,
    pub passed: usize,
    pub failed: usize,
    pub results: Vec<InstanceResult>,
}

pub fn run_suite(name: SuiteName, seed: u64, instances: usize, opts: SuiteOptions) -> SuiteReport {
    let results: Vec<InstanceResult> = (0..instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let outcome = match name {
                SuiteName::Dpi => dpi(&mut rng, opts),
                SuiteName::Thm1Identity => thm1(&mut rng, opts),
                SuiteName::Thm2Bound => thm2(&mut rng, opts),
                SuiteName::Thm3Additivity => thm3(&mut rng, opts),
                SuiteName::Thm4Finite => thm4(&mut rng, opts),
                SuiteName::Cor2Lossless => cor2(&mut rng, opts),
                SuiteName::ZooAll => zoo(i, &mut rng, opts),
            };
            let (passed, values, dump) = match outcome {
                Ok(o) => (o.passed, o.values, o.instance),
                Err((e, instance)) => (false, json!({ "error": e.to_string() }), instance),
            };
            InstanceResult {
                index: i,
                passed,
                values,
                counterexample: (!passed).then_some(dump),
            }
        })
        .collect();
    let passed = results.iter().filter(|r| r.passed).count();
    SuiteReport {
        suite: name,
        seed,
        instances,
        passed,
        failed: instances - passed,
        results,
    }
}

struct Outcome {
    passed: bool,
    values: Value,
    instance: Value,
}

type Attempt = std::result::Result<Outcome, (Error, Value)>;

fn dump_source(s: &MarkovSource) -> Value {
    json!({ "alphabet": s.alphabet().symbols(), "transition": s.transition() })
}

fn dump_system(s: &SystemSpec) -> Value {
    json!({
        "input": s.input_alphabet().symbols(),
        "output": s.output_alphabet().symbols(),
        "n": s.input_memory(),
        "m": s.output_memory(),
        "table": s.table(),
    })
}

fn small_alphabet(rng: &mut ChaCha8Rng, lo: usize) -> Alphabet {
    Alphabet::modular(rng.random_range(lo..=3)).expect("positive modulus")
}

fn random_pair(rng: &mut ChaCha8Rng, invertible: bool) -> (MarkovSource, SystemSpec) {
    let x = small_alphabet(rng, 2);
    let y = small_alphabet(rng, if invertible { x.len() } else { 1 });
    let (n, m) = (rng.random_range(0..=2), rng.random_range(0..=2));
    let source = random_markov_source(rng, &x).expect("regular source");
    let system = if invertible {
        random_invertible_system(rng, &x, &y, n, m)
    } else {
        random_table_system(rng, &x, &y, n, m)
    }
    .expect("valid table");
    (source, system)
}

fn pair_dump(source: &MarkovSource, system: &SystemSpec) -> Value {
    json!({ "source": dump_source(source), "system": dump_system(system) })
}

fn dpi(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let (source, system) = random_pair(rng, false);
    let dump = pair_dump(&source, &system);
    let r = loss_rate_report(&source, &system, o.caps, SUITE_MAX_N, o.bracket_tol)
        .map_err(|e| (e, dump.clone()))?;
    let excess = r.output_bracket.lower - r.input_rate;
    Ok(Outcome {
        passed: excess <= o.identity_tol && r.diagnostics.pruned_mass < PRUNED_MASS_LIMIT,
        values: json!({
            "input_rate": r.input_rate,
            "output_lower": r.output_bracket.lower,
            "block_length": r.output_bracket.block_length,
        }),
        instance: dump,
    })
}

fn thm1(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let (source, system) = random_pair(rng, false);
    let dump = pair_dump(&source, &system);
    let rows = joint_entropy_collapse(&source, &system, COLLAPSE_MAX_N, o.caps)
        .map_err(|e| (e, dump.clone()))?;
    let worst = rows.iter().map(|r| r.gap()).fold(0.0, f64::max);
    Ok(Outcome {
        passed: worst <= o.identity_tol,
        values: json!({ "max_gap": worst, "block_lengths": rows.len() }),
        instance: dump,
    })
}

fn thm2(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let (source, system) = random_pair(rng, false);
    let dump = pair_dump(&source, &system);
    let r = loss_rate_report(&source, &system, o.caps, SUITE_MAX_N, o.bracket_tol)
        .map_err(|e| (e, dump.clone()))?;
    let upper_end = r.input_rate - r.output_bracket.lower;
    let bound_ok = !r.invertible || r.preimage_bound == 0.0;
    Ok(Outcome {
        passed: upper_end <= r.preimage_bound + o.identity_tol && bound_ok,
        values: json!({
            "loss_upper_end": upper_end,
            "loss_lower": r.loss_bracket.lower,
            "preimage_bound": r.preimage_bound,
            "invertible": r.invertible,
        }),
        instance: dump,
    })
}

fn thm3(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let x = small_alphabet(rng, 2);
    let v = small_alphabet(rng, 2);
    let z = small_alphabet(rng, 1);
    let (n1, m1) = (rng.random_range(0..=1), rng.random_range(0..=1));
    let (n2, m2) = (rng.random_range(0..=1), rng.random_range(0..=1));
    let first = random_table_system(rng, &x, &v, n1, m1).expect("valid table");
    let second = random_table_system(rng, &v, &z, n2, m2).expect("valid table");
    let source = random_markov_source(rng, &x).expect("regular source");
    let dump = json!({
        "source": dump_source(&source),
        "first": dump_system(&first),
        "second": dump_system(&second),
    });
    let c = cascade_additivity(&source, &first, &second, o.caps, SUITE_MAX_N, o.bracket_tol)
        .map_err(|e| (e, dump.clone()))?;
    Ok(Outcome {
        passed: c.gap <= c.total_width() + o.identity_tol,
        values: json!({ "gap": c.gap, "total_width": c.total_width() }),
        instance: dump,
    })
}

fn thm4(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let (source, system) = random_pair(rng, true);
    let dump = pair_dump(&source, &system);
    let rows = finite_length_losses(&source, &system, FINITE_MAX_K, o.caps)
        .map_err(|e| (e, dump.clone()))?;
    let worst = rows.iter().map(|f| (f.lhs - f.rhs).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        passed: worst <= o.identity_tol,
        values: json!({ "max_gap": worst, "block_lengths": rows.len() }),
        instance: dump,
    })
}

fn cor2(rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let (source, system) = random_pair(rng, true);
    let dump = pair_dump(&source, &system);
    let r = loss_rate_report(&source, &system, o.caps, SUITE_MAX_N, o.bracket_tol)
        .map_err(|e| (e, dump.clone()))?;
    Ok(Outcome {
        passed: r.loss_bracket.contains(0.0, o.identity_tol) && r.loss_bracket.width() <= o.bracket_tol,
        values: json!({
            "loss_lower": r.loss_bracket.lower,
            "loss_upper": r.loss_bracket.upper,
        }),
        instance: dump,
    })
}

/// Named zoo systems with small fixed parameters.
pub fn zoo_systems() -> Vec<(&'static str, SystemSpec)> {
    let z3 = Alphabet::modular(3).expect("positive modulus");
    let tri = Alphabet::from_integers(&[-1, 0, 1]).expect("distinct labels");
    let pos = Alphabet::from_integers(&[1, 2]).expect("distinct labels");
    let fmt = FixedPointFormat::new(2, 1).expect("small format");
    let fp = |placement| {
        fixed_point_filter(
            &FilterCoeffs { b: vec![fmt.one(), 3], a: vec![5] },
            &Quantizer::truncating(fmt),
            placement,
        )
        .expect("valid fixed-point filter")
    };
    vec![
        ("xor-filter", xor_filter()),
        (
            "ring-filter mod 3",
            ring_linear_filter(&z3, &FilterCoeffs { b: vec![1, 2], a: vec![1] }).expect("valid"),
        ),
        ("fixed-point after-multiply", fp(Placement::AfterMultiply)),
        ("fixed-point after-accumulate", fp(Placement::AfterAccumulate)),
        ("multiplier {1,2}", multiplier_system(&pos, &Product::Rational).expect("valid")),
        ("squarer {-1,0,1}", squarer(&tri).expect("valid")),
        (
            "hammerstein",
            hammerstein_system(
                &static_map(&tri, &z3, &[2, 0, 1]).expect("valid"),
                &ring_linear_filter(&z3, &FilterCoeffs { b: vec![1, 1], a: vec![] }).expect("valid"),
            )
            .expect("valid"),
        ),
    ]
}

/// Zoo system `i mod 7` under a random Markov source: the report checks
/// must hold, invertible systems must be lossless and round-trip.
fn zoo(i: usize, rng: &mut ChaCha8Rng, o: SuiteOptions) -> Attempt {
    let zoo = zoo_systems();
    let (label, system) = &zoo[i % zoo.len()];
    let source = random_markov_source(rng, system.input_alphabet()).expect("regular source");
    let dump = json!({ "zoo": label, "source": dump_source(&source) });
    let r = loss_rate_report(&source, system, o.caps, SUITE_MAX_N, o.bracket_tol)
        .map_err(|e| (e, dump.clone()))?;
    let mut passed = r.diagnostics.pruned_mass < PRUNED_MASS_LIMIT;
    let mut round_trips = None;
    if r.invertible {
        passed &= r.loss_bracket.contains(0.0, o.identity_tol);
        let rt = round_trip(system, 100, 32, rng.random()).map_err(|e| {
            (Error::InvariantViolation { name: "round trip".into(), detail: e.to_string() }, dump.clone())
        })?;
        passed &= rt.first_failure.is_none();
        round_trips = Some(rt.passed);
    }
    Ok(Outcome {
        passed,
        values: json!({
            "system": label,
            "invertible": r.invertible,
            "loss_lower": r.loss_bracket.lower,
            "loss_upper": r.loss_bracket.upper,
            "preimage_bound": r.preimage_bound,
            "round_trips": round_trips,
        }),
        instance: dump,
    })
}
