//! Exact entropy computations for a Markov source driving a system.
//!
//! The pair (source, system) is lifted to a [`JointChain`] whose
//! transitions emit `(X_n, Y_n)`. Block entropies of any prefix marginal of
//! `(X_1^n, Y_1^n)` are computed exactly by a forward pass over the tree of
//! emitted keys: each tree node holds the (unnormalized) distribution of the
//! chain state given the key prefix, so identical keys are aggregated by
//! construction. Output entropy rates, which have no closed form for
//! deterministic functions of Markov chains, are bracketed by
//! `H(Y_n | Y_1^{n−1}, S_0) ≤ H̄(Y) ≤ H(Y_n | Y_1^{n−1})`.

mod bracket;
mod chain;
mod enumerate;
mod plugin;
mod report;

pub use bracket::{output_rate_bracket, output_rate_brackets, RateBracket};
pub use chain::{
    build_joint_chain, build_tapped_chain, check_emissions, ChainState, JointChain, Transition,
};
pub use enumerate::{
    block_entropy_profile, exact_block_entropy, BlockEntropy, KeyPlan, Marginal, Profile, Start,
};
pub use plugin::{plugin_estimate, PluginEstimate};
pub use report::{
    conditional_loss_bound, finite_length_loss, finite_length_losses, loss_rate_report,
    Diagnostics, FiniteLengthLoss, Interval, LossReport,
};

/// Default tolerance for exact identities, in bits.
pub const IDENTITY_TOLERANCE: f64 = 1e-9;
/// Default bracket-convergence tolerance, in bits.
pub const BRACKET_TOLERANCE: f64 = 1e-3;
/// Probability mass below which a path-tree node is pruned.
pub const PRUNE_THRESHOLD: f64 = 1e-300;

/// Resource limits for exact analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Caps {
    /// Upper limit on joint-chain states.
    pub max_states: u64,
    /// Upper limit on distinct key paths at the deepest block length.
    pub max_paths: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_states: 1_000_000,
            max_paths: 1 << 24,
        }
    }
}

/// `p log₂ p` with `0 log 0 = 0`.
pub fn xlog2x(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

/// Shannon entropy in bits of a probability vector.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().map(|&v| xlog2x(v)).sum::<f64>()
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}
