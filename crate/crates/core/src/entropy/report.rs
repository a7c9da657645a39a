//! Information-loss reports.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::source::MarkovSource;
use crate::system::{check_partial_invertibility, preimage_bound, SystemSpec};

use super::bracket::{sequences, RateBracket};
use super::chain::{build_joint_chain, JointChain};
use super::enumerate::{block_entropy_profile, KeyPlan, Start};
use super::{Caps, IDENTITY_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lower - tol && v <= self.upper + tol
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// States in the recurrent class used for the analysis.
    pub chain_states: usize,
    /// States reachable from the start set.
    pub reachable_states: usize,
    /// Leaves of the stationary output tree at the final block length.
    pub paths: u64,
    /// Probability mass dropped by pruning.
    pub pruned_mass: f64,
    /// `H(X_n | X_1^{n−1}, Y_1^n)` at the largest block length within the
    /// path cap, an upper bound on the loss rate; `None` if even `n = 2`
    /// exceeds it.
    pub conditional_loss_bound: Option<f64>,
}

/// Loss-rate analysis of one source and system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossReport {
    pub input_rate: f64,
    pub output_bracket: RateBracket,
    /// `(max(0, H̄X − upper), min(H̄X − lower, conditional bound))`.
    pub loss_bracket: Interval,
    /// Whether the loss bracket width met the tolerance.
    pub converged: bool,
    pub preimage_bound: f64,
    pub invertible: bool,
    pub diagnostics: Diagnostics,
}

/// Computes the loss-rate report and checks its internal consistency; any
/// violation beyond `1e-9` bits is returned as an error.
///
/// The block length is deepened from 2 until the loss bracket is at most
/// `tol` wide, `max_n` is reached, or the next level would exceed the path
/// cap.
pub fn loss_rate_report(
    source: &MarkovSource,
    system: &SystemSpec,
    caps: Caps,
    max_n: usize,
    tol: f64,
) -> Result<LossReport> {
    if max_n < 2 {
        return Err(Error::Precondition("max_n must be at least 2".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Precondition("tolerance must be non-negative".into()));
    }
    let chain = build_joint_chain(source, system, caps)?;
    let input_rate = source.entropy_rate();
    let cap = caps.max_paths as f64;
    let mut conditional: Option<f64> = None;
    let mut conditional_open = true;
    let mut last = None;
    for d in 2..=max_n {
        let seq = match sequences(&chain, d) {
            Ok(s) => s,
            Err(Error::PathCapExceeded { .. }) if last.is_some() => break,
            Err(e) => return Err(e),
        };
        if conditional_open {
            match conditional_loss_bound(&chain, d) {
                Ok(v) => conditional = Some(v),
                Err(Error::PathCapExceeded { .. }) => conditional_open = false,
                Err(e) => return Err(e),
            }
        }
        let b = seq.bracket(d, tol);
        let loss = Interval {
            lower: (input_rate - b.upper).max(0.0),
            upper: conditional.map_or(input_rate - b.lower, |c| c.min(input_rate - b.lower)),
        };
        let done = loss.width() <= tol;
        let stop = done || b.converged || seq.predicted_next_leaves() > cap;
        last = Some((b, loss, done, seq.paths(), seq.pruned_mass));
        if stop {
            break;
        }
    }
    let (b, loss, converged, paths, pruned_mass) = last.expect("at least one depth is evaluated");
    let report = LossReport {
        input_rate,
        output_bracket: b,
        loss_bracket: loss,
        converged,
        preimage_bound: preimage_bound(system)?,
        invertible: check_partial_invertibility(system)?.invertible,
        diagnostics: Diagnostics {
            chain_states: chain.len(),
            reachable_states: chain.reachable_states(),
            paths,
            pruned_mass,
            conditional_loss_bound: conditional,
        },
    };
    report.check()?;
    Ok(report)
}

impl LossReport {
    /// Verifies the ordering and bound relations the report must satisfy.
    pub fn check(&self) -> Result<()> {
        let t = IDENTITY_TOLERANCE;
        let b = &self.output_bracket;
        let fail = |name: &str, detail: String| {
            Err(Error::InvariantViolation {
                name: name.into(),
                detail,
            })
        };
        if b.lower > b.upper + t {
            return fail("bracket order", format!("lower {} > upper {}", b.lower, b.upper));
        }
        if b.lower > self.input_rate + t {
            return fail(
                "data processing",
                format!("output rate bound {} exceeds input rate {}", b.lower, self.input_rate),
            );
        }
        if self.input_rate - b.lower > self.preimage_bound + t {
            return fail(
                "preimage bound",
                format!(
                    "loss upper end {} exceeds {}",
                    self.input_rate - b.lower,
                    self.preimage_bound
                ),
            );
        }
        if self.loss_bracket.lower > self.loss_bracket.upper + t {
            return fail(
                "loss bracket order",
                format!("[{}, {}]", self.loss_bracket.lower, self.loss_bracket.upper),
            );
        }
        if self.invertible && !self.loss_bracket.contains(0.0, t) {
            return fail(
                "lossless inversion",
                format!(
                    "invertible system has loss bracket [{}, {}]",
                    self.loss_bracket.lower, self.loss_bracket.upper
                ),
            );
        }
        Ok(())
    }
}

/// `H(X_n | X_1^{n−1}, Y_1^n)`, which decreases in `n` and bounds the loss
/// rate from above. On a tapped chain the same quantity bounds the loss
/// of the second stage.
pub fn conditional_loss_bound(chain: &JointChain, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("block length must be positive".into()));
    }
    let full = block_entropy_profile(chain, KeyPlan { x_len: n, y_len: n }, Start::Stationary)?;
    let head = block_entropy_profile(chain, KeyPlan { x_len: n - 1, y_len: n }, Start::Stationary)?;
    Ok(full.at(n) - head.at(n))
}

/// `H(X_1^K | Y_1^K)` and `H(X_1^L | Y_1^K)` with `L = max(M, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteLengthLoss {
    pub block_length: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Finite-length loss for one `K > max(M, N)`.
pub fn finite_length_loss(
    source: &MarkovSource,
    system: &SystemSpec,
    k: usize,
    caps: Caps,
) -> Result<FiniteLengthLoss> {
    let lead = system.memory();
    if k <= lead {
        return Err(Error::Precondition(format!(
            "block length {k} must exceed max(M, N) = {lead}"
        )));
    }
    Ok(*finite_length_losses(source, system, k, caps)?
        .last()
        .expect("k exceeds the memory"))
}

/// Finite-length losses for every `K` in `max(M, N) + 1 ..= k_max`.
pub fn finite_length_losses(
    source: &MarkovSource,
    system: &SystemSpec,
    k_max: usize,
    caps: Caps,
) -> Result<Vec<FiniteLengthLoss>> {
    let lead = system.memory();
    let chain = build_joint_chain(source, system, caps)?;
    let joint = block_entropy_profile(&chain, KeyPlan { x_len: k_max, y_len: k_max }, Start::Stationary)?;
    let out = block_entropy_profile(&chain, KeyPlan { x_len: 0, y_len: k_max }, Start::Stationary)?;
    let head = block_entropy_profile(&chain, KeyPlan { x_len: lead, y_len: k_max }, Start::Stationary)?;
    Ok((lead + 1..=k_max)
        .map(|k| FiniteLengthLoss {
            block_length: k,
            lhs: joint.at(k) - out.at(k),
            rhs: head.at(k) - out.at(k),
        })
        .collect())
}
