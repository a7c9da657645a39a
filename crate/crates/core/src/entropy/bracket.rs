//! Two-sided bounds on the output entropy rate.
//!
//! For a stationary hidden-Markov output `Y` driven by chain state `S`,
//! `H(Y_n | Y_1^{n−1}, S_0)` increases and `H(Y_n | Y_1^{n−1})` decreases
//! towards `H̄(Y)` as `n` grows. The upper sequence comes from one
//! `Y`-keyed tree under the stationary law; the lower one is the
//! `π`-weighted average of trees started in each chain state.

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::chain::JointChain;
use super::enumerate::{block_entropy_profile, KeyPlan, Start};
use super::{CompensatedSum, BRACKET_TOLERANCE};

/// `lower ≤ H̄(Y) ≤ upper` at block length `block_length`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateBracket {
    pub lower: f64,
    pub upper: f64,
    pub block_length: usize,
    pub converged: bool,
}

impl RateBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Entropy sequences for one tree depth.
pub(crate) struct Sequences {
    /// `H(Y_1^d)` for `d = 0..=depth`.
    pub plain: Vec<f64>,
    /// `H(Y_1^d | S_0)` for `d = 0..=depth`.
    pub conditioned: Vec<f64>,
    /// Leaves of the stationary tree at each depth.
    pub plain_nodes: Vec<u64>,
    /// Largest leaf count of any conditioned tree at each depth.
    pub conditioned_nodes: Vec<u64>,
    pub pruned_mass: f64,
}

impl Sequences {
    pub(crate) fn bracket(&self, n: usize, tol: f64) -> RateBracket {
        let upper = self.plain[n] - self.plain[n - 1];
        let lower = self.conditioned[n] - self.conditioned[n - 1];
        RateBracket {
            lower,
            upper,
            block_length: n,
            converged: upper - lower <= tol,
        }
    }

    pub(crate) fn paths(&self) -> u64 {
        self.plain_nodes.last().copied().unwrap_or(0)
    }

    /// Guess of the leaf count one level deeper, from the last growth ratio.
    pub(crate) fn predicted_next_leaves(&self) -> f64 {
        let guess = |nodes: &[u64]| -> f64 {
            match nodes {
                [.., a, b] if *a > 0 => *b as f64 * (*b as f64 / *a as f64),
                [b] => *b as f64 * *b as f64,
                _ => 0.0,
            }
        };
        guess(&self.plain_nodes).max(guess(&self.conditioned_nodes))
    }
}

pub(crate) fn sequences(chain: &JointChain, depth: usize) -> Result<Sequences> {
    let plan = KeyPlan {
        x_len: 0,
        y_len: depth,
    };
    let plain = block_entropy_profile(chain, plan, Start::Stationary)?;
    let pi = chain.stationary();
    let per_state: Vec<Result<(f64, super::Profile)>> = (0..chain.len())
        .into_par_iter()
        .filter(|&s| pi[s] > 0.0)
        .map(|s| Ok((pi[s], block_entropy_profile(chain, plan, Start::State(s))?)))
        .collect();
    let mut acc = vec![CompensatedSum::default(); depth];
    let mut cond_nodes = vec![0u64; depth];
    let mut pruned = CompensatedSum::default();
    pruned.add(plain.pruned_mass);
    for item in per_state {
        let (w, prof) = item?;
        for (a, h) in acc.iter_mut().zip(&prof.entropies) {
            a.add(w * h);
        }
        for (c, n) in cond_nodes.iter_mut().zip(&prof.nodes) {
            *c = (*c).max(*n);
        }
        pruned.add(w * prof.pruned_mass);
    }
    let with_zero = |v: Vec<f64>| std::iter::once(0.0).chain(v).collect::<Vec<_>>();
    Ok(Sequences {
        plain: with_zero(plain.entropies),
        conditioned: with_zero(acc.iter().map(CompensatedSum::value).collect()),
        plain_nodes: plain.nodes,
        conditioned_nodes: cond_nodes,
        pruned_mass: pruned.value(),
    })
}

/// Bracket on `H̄(Y)`, deepening the block length until the width is at
/// most `tol`, `max_n` is reached, or the next level would exceed the path
/// cap. `converged` reports whether the width target was met.
pub fn output_rate_bracket(chain: &JointChain, max_n: usize, tol: f64) -> Result<RateBracket> {
    if max_n < 2 {
        return Err(Error::Precondition("max_n must be at least 2".into()));
    }
    if !(tol >= 0.0) {
        return Err(Error::Precondition("tolerance must be non-negative".into()));
    }
    let cap = chain.caps().max_paths as f64;
    let mut best = None;
    for d in 2..=max_n {
        let seq = match sequences(chain, d) {
            Ok(s) => s,
            Err(Error::PathCapExceeded { .. }) if best.is_some() => break,
            Err(e) => return Err(e),
        };
        let bracket = seq.bracket(d, tol);
        best = Some(bracket);
        if bracket.converged || seq.predicted_next_leaves() > cap {
            break;
        }
    }
    Ok(best.expect("at least one depth is evaluated"))
}

/// The brackets for every block length `1..=max_n`, computed from one
/// depth-`max_n` pass. `converged` uses the default bracket tolerance.
pub fn output_rate_brackets(chain: &JointChain, max_n: usize) -> Result<Vec<RateBracket>> {
    if max_n == 0 {
        return Err(Error::Precondition("max_n must be at least 1".into()));
    }
    let seq = sequences(chain, max_n)?;
    Ok((1..=max_n)
        .map(|n| seq.bracket(n, BRACKET_TOLERANCE))
        .collect())
}
