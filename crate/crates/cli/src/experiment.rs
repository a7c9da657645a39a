//! Runs the analyses requested by an [`ExperimentConfig`].

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use infoloss::checks::{cascade_additivity, CascadeAdditivity};
use infoloss::entropy::{
    finite_length_losses, loss_rate_report, plugin_estimate, Caps, FiniteLengthLoss, LossReport,
    PluginEstimate,
};
use infoloss::filter_analysis::{
    is_minimum_phase, rate_change_integral, rate_change_roots, TransferFunction,
};
use infoloss::reconstruction::reconstruct;
use infoloss::system::Witness;
use infoloss::{
    check_partial_invertibility, preimage_bound, Error, MarkovSource, PathStart, Symbol, SystemSpec,
};

use crate::config::{AnalysisConfig, ExperimentConfig};
use crate::error::{CliError, Result};

/// Agreement required between the two rate-change evaluations, in nats.
pub const FILTER_AGREEMENT: f64 = 1e-6;
/// Identities are asserted only below this pruned probability mass.
pub const PRUNED_MASS_LIMIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Not asserted, for example because pruning dropped too much mass.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    fn guarded(name: &str, pruned_mass: f64, passed: bool, detail: String) -> Self {
        if pruned_mass >= PRUNED_MASS_LIMIT {
            Self {
                name: name.into(),
                status: Status::Skipped,
                detail: format!("pruned mass {pruned_mass:e}; {detail}"),
            }
        } else {
            Self::new(name, passed, detail)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SourceSummary {
    pub alphabet: Vec<String>,
    pub iid: bool,
    pub entropy_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemSummary {
    pub input_alphabet: Vec<String>,
    pub output_alphabet: Vec<String>,
    pub input_memory: usize,
    pub output_memory: usize,
    pub states: Option<usize>,
    pub cascade: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripFailure {
    pub sequence: usize,
    /// First index where the reconstruction differs from the input.
    pub first_mismatch: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTrip {
    pub sequences: usize,
    pub length: usize,
    pub seed: u64,
    pub passed: usize,
    pub first_failure: Option<RoundTripFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterReport {
    pub quantity: &'static str,
    pub unit: &'static str,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub integral: f64,
    pub integral_grid: usize,
    pub roots: f64,
    /// `None` when a zero lies within 1e-9 of the unit circle.
    pub minimum_phase: Option<bool>,
    pub zeros: Vec<[f64; 2]>,
    pub poles: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalysisResult {
    LossReport(LossReport),
    FiniteLength { rows: Vec<FiniteLengthLoss> },
    Bound { preimage_bound: f64 },
    Invertibility { invertible: bool, witness: Option<Witness> },
    RoundTrip(RoundTrip),
    FilterAnalysis(FilterReport),
    Plugin(PluginEstimate),
    Additivity(CascadeAdditivity),
    /// An invariant violation detected inside the library.
    Violation { analysis: String, name: String, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub analysis: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: Option<String>,
    pub caps: Caps,
    pub source: Option<SourceSummary>,
    pub system: Option<SystemSummary>,
    pub analyses: Vec<AnalysisResult>,
    pub checks: Vec<Check>,
    /// False iff any check failed.
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Vec<Timing>>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Include wall-clock timings; they make reports non-reproducible.
    pub timings: bool,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    caps: Caps,
    source: Option<MarkovSource>,
    system: Option<SystemSpec>,
}

impl Context<'_> {
    fn source(&self) -> &MarkovSource {
        self.source.as_ref().expect("validated: source present")
    }

    fn system(&self) -> &SystemSpec {
        self.system.as_ref().expect("validated: system present")
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    let ctx = Context {
        cfg,
        caps: cfg.caps()?,
        source: cfg.build_source()?,
        system: cfg.build_system()?,
    };
    let mut analyses = Vec::new();
    let mut checks = Vec::new();
    let mut timings = Vec::new();
    let total = Instant::now();
    for a in &cfg.analysis {
        let start = Instant::now();
        let result = match run_analysis(&ctx, a, &mut checks) {
            Err(CliError::Core(Error::InvariantViolation { name, detail })) => {
                checks.push(Check::new(&name, false, detail.clone()));
                AnalysisResult::Violation {
                    analysis: a.name().into(),
                    name,
                    detail,
                }
            }
            other => other?,
        };
        analyses.push(result);
        timings.push(Timing {
            analysis: a.name().into(),
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    timings.push(Timing {
        analysis: "total".into(),
        seconds: total.elapsed().as_secs_f64(),
    });
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        caps: ctx.caps,
        source: ctx.source.as_ref().map(|s| SourceSummary {
            alphabet: s.alphabet().symbols().to_vec(),
            iid: s.is_iid(),
            entropy_rate: s.entropy_rate(),
        }),
        system: ctx.system.as_ref().map(|s| SystemSummary {
            input_alphabet: s.input_alphabet().symbols().to_vec(),
            output_alphabet: s.output_alphabet().symbols().to_vec(),
            input_memory: s.input_memory(),
            output_memory: s.output_memory(),
            states: s.state_count().ok(),
            cascade: s.stages().is_some(),
        }),
        passed: checks.iter().all(|c| c.status != Status::Fail),
        analyses,
        checks,
        timings: opts.timings.then_some(timings),
    })
}

fn run_analysis(
    ctx: &Context,
    analysis: &AnalysisConfig,
    checks: &mut Vec<Check>,
) -> Result<AnalysisResult> {
    let tol = ctx.cfg.tolerances;
    Ok(match analysis {
        AnalysisConfig::LossReport => {
            let r = loss_rate_report(
                ctx.source(),
                ctx.system(),
                ctx.caps,
                tol.max_block_length,
                tol.bracket,
            )?;
            checks.extend(loss_report_checks(&r, tol.identity));
            AnalysisResult::LossReport(r)
        }
        AnalysisConfig::FiniteLength { k } => {
            let rows = finite_length_losses(ctx.source(), ctx.system(), *k, ctx.caps)?;
            let worst = rows.iter().map(|f| (f.lhs - f.rhs).abs()).fold(0.0, f64::max);
            if check_partial_invertibility(ctx.system())?.invertible {
                checks.push(Check::new(
                    "finite-length identity",
                    worst <= tol.identity,
                    format!("max |H(X^K|Y^K) − H(X^L|Y^K)| = {worst:e} over {} block lengths", rows.len()),
                ));
            }
            AnalysisResult::FiniteLength { rows }
        }
        AnalysisConfig::Bound => AnalysisResult::Bound {
            preimage_bound: preimage_bound(ctx.system())?,
        },
        AnalysisConfig::Invertibility => {
            let v = check_partial_invertibility(ctx.system())?;
            AnalysisResult::Invertibility {
                invertible: v.invertible,
                witness: v.witness,
            }
        }
        AnalysisConfig::RoundTrip {
            sequences,
            length,
            seed,
        } => {
            let rt = round_trip(ctx.system(), *sequences, *length, *seed)?;
            checks.push(Check::new(
                "round trip",
                rt.first_failure.is_none(),
                format!("{} of {} sequences reconstructed", rt.passed, rt.sequences),
            ));
            AnalysisResult::RoundTrip(rt)
        }
        AnalysisConfig::FilterAnalysis { b, a } => {
            let f = filter_report(b.clone(), a.clone())?;
            let gap = (f.integral - f.roots).abs();
            checks.push(Check::new(
                "rate change agreement",
                gap <= FILTER_AGREEMENT,
                format!("|integral − roots| = {gap:e} nats"),
            ));
            AnalysisResult::FilterAnalysis(f)
        }
        AnalysisConfig::Plugin {
            length,
            block,
            seed,
        } => {
            let sys = ctx.system();
            let x = ctx.source().sample_path(*length, *seed, PathStart::Stationary)?;
            let y = sys.simulate(&x, &sys.initial_state())?;
            AnalysisResult::Plugin(plugin_estimate(&x, &y, *block)?)
        }
        AnalysisConfig::Additivity => {
            let (first, second) = ctx.cfg.cascade_stages()?.ok_or_else(|| {
                CliError::Config("analysis `additivity` needs a cascade with exactly two stages".into())
            })?;
            let c = cascade_additivity(
                ctx.source(),
                &first,
                &second,
                ctx.caps,
                tol.max_block_length,
                tol.bracket,
            )?;
            let allowed = c.total_width() + tol.identity;
            checks.push(Check::new(
                "cascade additivity",
                c.gap <= allowed,
                format!("gap {:e} against combined width {:e}", c.gap, allowed),
            ));
            AnalysisResult::Additivity(c)
        }
    })
}

/// The identity and bound checks implied by a loss-rate report.
pub fn loss_report_checks(r: &LossReport, tol: f64) -> Vec<Check> {
    let pm = r.diagnostics.pruned_mass;
    let b = &r.output_bracket;
    let mut out = vec![
        Check::guarded(
            "data processing",
            pm,
            b.lower <= r.input_rate + tol,
            format!("output rate lower {} vs input rate {}", b.lower, r.input_rate),
        ),
        Check::guarded(
            "preimage bound",
            pm,
            r.input_rate - b.lower <= r.preimage_bound + tol,
            format!(
                "loss upper end {} vs bound {}",
                r.input_rate - b.lower,
                r.preimage_bound
            ),
        ),
    ];
    if r.invertible {
        out.push(Check::guarded(
            "lossless inversion",
            pm,
            r.loss_bracket.contains(0.0, tol),
            format!("loss bracket [{}, {}]", r.loss_bracket.lower, r.loss_bracket.upper),
        ));
    }
    out
}

/// Simulates `sequences` random inputs from random initial states and
/// reconstructs each from its output and true seed.
pub fn round_trip(system: &SystemSpec, sequences: usize, length: usize, seed: u64) -> Result<RoundTrip> {
    let verdict = check_partial_invertibility(system)?;
    let inv = verdict.inverse.ok_or_else(|| {
        CliError::Core(Error::Precondition(format!(
            "round trip needs a partially invertible system; witness {:?}",
            verdict.witness
        )))
    })?;
    if length == 0 {
        return Err(CliError::Config("round-trip length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = system.input_alphabet().len();
    let states = system.state_count()?;
    let mut passed = 0;
    let mut first_failure = None;
    for i in 0..sequences {
        let x: Vec<Symbol> = (0..length).map(|_| rng.random_range(0..nx)).collect();
        let init = system.decode_state(rng.random_range(0..states));
        let y = system.simulate(&x, &init)?;
        let lead = system.memory().min(length);
        match reconstruct(&inv, &y, &x[..lead], Some(&init)) {
            Ok(r) if r == x => passed += 1,
            outcome => {
                if first_failure.is_none() {
                    first_failure = Some(RoundTripFailure {
                        sequence: i,
                        first_mismatch: outcome
                            .as_ref()
                            .ok()
                            .and_then(|r| first_mismatch(r, &x)),
                        error: outcome.err().map(|e| e.to_string()),
                    });
                }
            }
        }
    }
    Ok(RoundTrip {
        sequences,
        length,
        seed,
        passed,
        first_failure,
    })
}

pub fn first_mismatch(a: &[Symbol], b: &[Symbol]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(p, q)| p != q)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

pub fn filter_report(b: Vec<f64>, a: Vec<f64>) -> Result<FilterReport> {
    let tf = TransferFunction::new(b.clone(), a.clone())?;
    let integral = rate_change_integral(&tf, 1 << 10)?;
    let pair = |z: num::complex::Complex64| [z.re, z.im];
    Ok(FilterReport {
        quantity: "differential-entropy-rate change",
        unit: "nats",
        integral: integral.value,
        integral_grid: integral.grid,
        roots: rate_change_roots(&tf)?,
        minimum_phase: match is_minimum_phase(&tf) {
            Ok(v) => Some(v),
            Err(Error::Indeterminate { .. }) => None,
            Err(e) => return Err(e.into()),
        },
        zeros: tf.zeros()?.into_iter().map(pair).collect(),
        poles: tf.poles()?.into_iter().map(pair).collect(),
        b,
        a,
    })
}
