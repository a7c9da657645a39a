//! Exact finite-length checks of the loss-rate identities and bounds.

use serde::Serialize;

use crate::entropy::{
    block_entropy_profile, build_joint_chain, build_tapped_chain, conditional_loss_bound,
    output_rate_bracket, Caps, Interval, KeyPlan, Start,
};
use crate::error::{Error, Result};
use crate::source::MarkovSource;
use crate::system::{cascade, SystemSpec};

/// Two quantities that must agree, at one block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityRow {
    pub block_length: usize,
    pub lhs: f64,
    pub rhs: f64,
}

impl IdentityRow {
    pub fn gap(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// `H(X_1^n, Y_1^n)` against `H(X_1^n, Y_1^{max(M,N)})` for
/// `n = max(M,N)+1 ..= n_max`: once the first outputs are known, the rest
/// are functions of the inputs.
pub fn joint_entropy_collapse(
    source: &MarkovSource,
    system: &SystemSpec,
    n_max: usize,
    caps: Caps,
) -> Result<Vec<IdentityRow>> {
    let lead = system.memory();
    let chain = build_joint_chain(source, system, caps)?;
    let full = block_entropy_profile(&chain, KeyPlan { x_len: n_max, y_len: n_max }, Start::Stationary)?;
    let head = block_entropy_profile(&chain, KeyPlan { x_len: n_max, y_len: lead }, Start::Stationary)?;
    Ok((lead + 1..=n_max)
        .map(|n| IdentityRow {
            block_length: n,
            lhs: full.at(n),
            rhs: head.at(n),
        })
        .collect())
}

/// `H(X_1^n | Y_1^m) ≤ H(X_1^n) ≤ H(X_1^n, Y_1^m)` at one `n ≥ m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichRow {
    pub block_length: usize,
    pub conditional: f64,
    pub marginal: f64,
    pub joint: f64,
}

impl SandwichRow {
    pub fn holds(&self, tol: f64) -> bool {
        self.conditional <= self.marginal + tol && self.marginal <= self.joint + tol
    }
}

/// The sandwich rows for `n = max(m, 1) ..= n_max`.
pub fn entropy_sandwich(
    source: &MarkovSource,
    system: &SystemSpec,
    m: usize,
    n_max: usize,
    caps: Caps,
) -> Result<Vec<SandwichRow>> {
    if n_max < m {
        return Err(Error::Precondition(format!("n_max {n_max} below m = {m}")));
    }
    let chain = build_joint_chain(source, system, caps)?;
    let joint = block_entropy_profile(&chain, KeyPlan { x_len: n_max, y_len: m }, Start::Stationary)?;
    let xs = block_entropy_profile(&chain, KeyPlan { x_len: n_max, y_len: 0 }, Start::Stationary)?;
    let ys = block_entropy_profile(&chain, KeyPlan { x_len: 0, y_len: m }, Start::Stationary)?;
    Ok((m.max(1)..=n_max)
        .map(|n| SandwichRow {
            block_length: n,
            conditional: joint.at(n) - ys.at(m),
            marginal: xs.at(n),
            joint: joint.at(n),
        })
        .collect())
}

/// Loss brackets of a two-stage cascade and of its stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CascadeAdditivity {
    pub cascade: Interval,
    pub first: Interval,
    pub second: Interval,
    /// `first + second`.
    pub sum: Interval,
    /// Distance between `cascade` and `sum`; zero when they overlap.
    pub gap: f64,
}

impl CascadeAdditivity {
    pub fn total_width(&self) -> f64 {
        self.cascade.width() + self.first.width() + self.second.width()
    }
}

/// Brackets `loss(X→Z)`, `loss(X→V)` and `loss(V→Z)` for `Z` the output of
/// `cascade(first, second)` driven by `source`.
///
/// The second stage's input `V` is not Markov, so its loss is bracketed as
/// `H̄V − H̄Z` from the two rate brackets, and the upper end is tightened by
/// `H(V_n | V_1^{n−1}, Z_1^n)` on the tapped chain.
pub fn cascade_additivity(
    source: &MarkovSource,
    first: &SystemSpec,
    second: &SystemSpec,
    caps: Caps,
    max_n: usize,
    tol: f64,
) -> Result<CascadeAdditivity> {
    let hx = source.entropy_rate();
    let composite = cascade(first, second)?;
    let v = output_rate_bracket(&build_joint_chain(source, first, caps)?, max_n, tol)?;
    let z = output_rate_bracket(&build_joint_chain(source, &composite, caps)?, max_n, tol)?;
    let tapped = build_tapped_chain(source, first, second, caps)?;
    let mut second_upper = v.upper - z.lower;
    match conditional_loss_bound(&tapped, z.block_length) {
        Ok(u) => second_upper = second_upper.min(u),
        Err(Error::PathCapExceeded { .. }) => {}
        Err(e) => return Err(e),
    }
    let first_loss = Interval {
        lower: hx - v.upper,
        upper: hx - v.lower,
    };
    let second_loss = Interval {
        lower: v.lower - z.upper,
        upper: second_upper,
    };
    let cascade_loss = Interval {
        lower: hx - z.upper,
        upper: hx - z.lower,
    };
    let sum = Interval {
        lower: first_loss.lower + second_loss.lower,
        upper: first_loss.upper + second_loss.upper,
    };
    let gap = (sum.lower - cascade_loss.upper)
        .max(cascade_loss.lower - sum.upper)
        .max(0.0);
    Ok(CascadeAdditivity {
        cascade: cascade_loss,
        first: first_loss,
        second: second_loss,
        sum,
        gap,
    })
}
