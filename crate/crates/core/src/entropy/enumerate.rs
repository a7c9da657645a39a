//! Exact block entropies by a forward pass over the key tree.
//!
//! A node at depth `t` stands for one realized key prefix `k_1..k_t` and
//! carries the vector `α(s) = P(k_1..k_t, S_t = s)`. Its mass `Σ α` is the
//! probability of the prefix, so summing `−m log₂ m` over the nodes at depth
//! `t` gives the block entropy at `t`. Children are formed by pushing `α`
//! through the labelled transitions and grouping by the next key.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

use super::chain::JointChain;
use super::{xlog2x, CompensatedSum, PRUNE_THRESHOLD};

/// Which coordinates of the joint process a block entropy covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Marginal {
    X,
    Y,
    XY,
}

/// Key layout: step `t` contributes `X_t` when `t ≤ x_len` and `Y_t` when
/// `t ≤ y_len`. The tree depth is `max(x_len, y_len)` and depth `d` yields
/// `H(X_1^{min(d, x_len)}, Y_1^{min(d, y_len)})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyPlan {
    pub x_len: usize,
    pub y_len: usize,
}

impl KeyPlan {
    pub fn marginal(which: Marginal, n: usize) -> Self {
        match which {
            Marginal::X => Self { x_len: n, y_len: 0 },
            Marginal::Y => Self { x_len: 0, y_len: n },
            Marginal::XY => Self { x_len: n, y_len: n },
        }
    }

    pub fn depth(&self) -> usize {
        self.x_len.max(self.y_len)
    }
}

/// Law of the chain state at time 0.
#[derive(Debug, Clone, Copy)]
pub enum Start<'a> {
    Stationary,
    State(usize),
    Distribution(&'a [f64]),
}

/// Block entropies at every depth of one tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    /// `entropies[d − 1]` is the entropy in bits at depth `d`.
    pub entropies: Vec<f64>,
    /// Number of tree nodes at each depth.
    pub nodes: Vec<u64>,
    /// Probability mass dropped by pruning.
    pub pruned_mass: f64,
}

impl Profile {
    pub fn leaves(&self) -> u64 {
        self.nodes.last().copied().unwrap_or(0)
    }

    /// Entropy at depth `d`, with depth 0 giving 0.
    pub fn at(&self, d: usize) -> f64 {
        if d == 0 {
            0.0
        } else {
            self.entropies[d - 1]
        }
    }
}

/// A single block entropy with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BlockEntropy {
    pub bits: f64,
    pub paths: u64,
    pub pruned_mass: f64,
}

/// `H(X_1^n)`, `H(Y_1^n)` or `H(X_1^n, Y_1^n)` under the stationary law.
pub fn exact_block_entropy(chain: &JointChain, n: usize, which: Marginal) -> Result<BlockEntropy> {
    if n == 0 {
        return Ok(BlockEntropy {
            bits: 0.0,
            paths: 1,
            pruned_mass: 0.0,
        });
    }
    let p = block_entropy_profile(chain, KeyPlan::marginal(which, n), Start::Stationary)?;
    Ok(BlockEntropy {
        bits: p.at(n),
        paths: p.leaves(),
        pruned_mass: p.pruned_mass,
    })
}

type Alpha = Vec<(u32, f64)>;

#[derive(Clone)]
struct Accum {
    entropy: Vec<CompensatedSum>,
    nodes: Vec<u64>,
    pruned: CompensatedSum,
}

impl Accum {
    fn new(depth: usize) -> Self {
        Self {
            entropy: vec![CompensatedSum::default(); depth],
            nodes: vec![0; depth],
            pruned: CompensatedSum::default(),
        }
    }

    fn record(&mut self, t: usize, mass: f64) {
        self.entropy[t - 1].add(-xlog2x(mass));
        self.nodes[t - 1] += 1;
    }

    fn merge(&mut self, other: &Accum) {
        for (a, b) in self.entropy.iter_mut().zip(&other.entropy) {
            a.merge(b);
        }
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            *a += b;
        }
        self.pruned.merge(&other.pruned);
    }
}

struct Walker<'a> {
    chain: &'a JointChain,
    plan: KeyPlan,
    depth: usize,
    cap: u64,
    leaves: AtomicU64,
}

const PARALLEL_FRONTIER: usize = 256;

/// Runs the key tree for `plan` from `start` and returns the entropy at
/// every depth. Fails with [`Error::PathCapExceeded`] once the number of
/// leaves exceeds the chain's path cap.
pub fn block_entropy_profile(chain: &JointChain, plan: KeyPlan, start: Start) -> Result<Profile> {
    let depth = plan.depth();
    let root = root_alpha(chain, start)?;
    if depth == 0 {
        return Ok(Profile {
            entropies: vec![],
            nodes: vec![],
            pruned_mass: 0.0,
        });
    }
    let walker = Walker {
        chain,
        plan,
        depth,
        cap: chain.caps().max_paths,
        leaves: AtomicU64::new(0),
    };
    let mut acc = Accum::new(depth);

    // breadth-first until the frontier is wide enough to share out
    let mut level: Vec<Alpha> = vec![root];
    let mut t = 0;
    while t + 1 < depth && level.len() < PARALLEL_FRONTIER {
        let mut next_level = Vec::new();
        for alpha in &level {
            for (_, child) in walker.children(alpha, t + 1) {
                let mass = mass_of(&child);
                if mass < PRUNE_THRESHOLD {
                    acc.pruned.add(mass);
                    continue;
                }
                acc.record(t + 1, mass);
                next_level.push(child);
            }
        }
        level = next_level;
        t += 1;
    }
    let parts: Vec<Result<Accum>> = level
        .par_iter()
        .map(|alpha| {
            let mut local = Accum::new(depth);
            walker.expand(alpha, t, &mut local)?;
            Ok(local)
        })
        .collect();
    for part in parts {
        acc.merge(&part?);
    }
    Ok(Profile {
        entropies: acc.entropy.iter().map(CompensatedSum::value).collect(),
        nodes: acc.nodes,
        pruned_mass: acc.pruned.value(),
    })
}

fn root_alpha(chain: &JointChain, start: Start) -> Result<Alpha> {
    match start {
        Start::Stationary => Ok(sparse(chain.stationary())),
        Start::State(s) => {
            if s >= chain.len() {
                return Err(Error::Precondition(format!(
                    "start state {s} outside the chain (0..{})",
                    chain.len()
                )));
            }
            Ok(vec![(s as u32, 1.0)])
        }
        Start::Distribution(d) => {
            if d.len() != chain.len() {
                return Err(Error::Precondition(format!(
                    "start distribution has {} entries, chain has {} states",
                    d.len(),
                    chain.len()
                )));
            }
            Ok(sparse(d))
        }
    }
}

fn sparse(d: &[f64]) -> Alpha {
    d.iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i as u32, p))
        .collect()
}

fn mass_of(alpha: &[(u32, f64)]) -> f64 {
    let mut s = CompensatedSum::default();
    for &(_, p) in alpha {
        s.add(p);
    }
    s.value()
}

impl Walker<'_> {
    /// Children of a node for the key emitted at `step` (1-based), in key
    /// order.
    fn children(&self, alpha: &[(u32, f64)], step: usize) -> Vec<(u32, Alpha)> {
        let use_x = step <= self.plan.x_len;
        let use_y = step <= self.plan.y_len;
        let ny = self.chain.output_size() as u32;
        let mut buf: Vec<(u32, u32, f64)> = Vec::new();
        for &(s, p) in alpha {
            for tr in self.chain.transitions(s as usize) {
                let key = match (use_x, use_y) {
                    (true, true) => tr.x * ny + tr.y,
                    (true, false) => tr.x,
                    (false, true) => tr.y,
                    (false, false) => 0,
                };
                buf.push((key, tr.next, p * tr.prob));
            }
        }
        buf.sort_unstable_by_key(|&(k, n, _)| (k, n));
        let mut out: Vec<(u32, Alpha)> = Vec::new();
        for (key, next, p) in buf {
            match out.last_mut() {
                Some((k, child)) if *k == key => match child.last_mut() {
                    Some((n, q)) if *n == next => *q += p,
                    _ => child.push((next, p)),
                },
                _ => out.push((key, vec![(next, p)])),
            }
        }
        out
    }

    /// Depth-first expansion below a node at depth `t` that has already
    /// been recorded.
    fn expand(&self, alpha: &[(u32, f64)], t: usize, acc: &mut Accum) -> Result<()> {
        if t == self.depth {
            let seen = self.leaves.fetch_add(1, Ordering::Relaxed) + 1;
            if seen > self.cap {
                return Err(Error::PathCapExceeded {
                    block_length: self.depth,
                    cap: self.cap,
                });
            }
            return Ok(());
        }
        if self.leaves.load(Ordering::Relaxed) > self.cap {
            return Err(Error::PathCapExceeded {
                block_length: self.depth,
                cap: self.cap,
            });
        }
        for (_, child) in self.children(alpha, t + 1) {
            let mass = mass_of(&child);
            if mass < PRUNE_THRESHOLD {
                acc.pruned.add(mass);
                continue;
            }
            acc.record(t + 1, mass);
            self.expand(&child, t + 1, acc)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{Alphabet, Symbol};
    use crate::entropy::{build_joint_chain, Caps};
    use crate::source::{make_iid, MarkovSource};
    use crate::system::SystemSpec;
    use std::collections::HashMap;

    fn z2() -> Alphabet {
        Alphabet::modular(2).unwrap()
    }

    /// Brute force: enumerate every (chain state, input word) and
    /// aggregate the probability of each key word in a hash map.
    fn brute_force(chain: &JointChain, plan: KeyPlan) -> Vec<f64> {
        let depth = plan.depth();
        let src = chain.source();
        let sys = chain.system();
        let nx = src.alphabet().len();
        let mut out = vec![0.0; depth];
        for d in 1..=depth {
            let mut agg: HashMap<Vec<(Option<Symbol>, Option<Symbol>)>, f64> = HashMap::new();
            for (s0, state) in chain.states().iter().enumerate() {
                let w0 = chain.stationary()[s0];
                if w0 == 0.0 {
                    continue;
                }
                for code in 0..nx.pow(d as u32) {
                    let mut word = vec![0; d];
                    let mut c = code;
                    for v in word.iter_mut().rev() {
                        *v = c % nx;
                        c /= nx;
                    }
                    let mut p = w0;
                    let mut prev = state.last_input;
                    for &x in &word {
                        p *= src.transition()[prev][x];
                        prev = x;
                    }
                    if p == 0.0 {
                        continue;
                    }
                    let mut theta = state.theta;
                    let mut key = Vec::with_capacity(d);
                    for (t, &x) in word.iter().enumerate() {
                        let (y, next) = sys.step(theta, x);
                        theta = next;
                        key.push((
                            (t < plan.x_len).then_some(x),
                            (t < plan.y_len).then_some(y),
                        ));
                    }
                    *agg.entry(key).or_default() += p;
                }
            }
            out[d - 1] = -agg.values().map(|&p| xlog2x(p)).sum::<f64>();
        }
        out
    }

    fn assert_matches(chain: &JointChain, plan: KeyPlan) {
        let fast = block_entropy_profile(chain, plan, Start::Stationary).unwrap();
        let slow = brute_force(chain, plan);
        for (a, b) in fast.entropies.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-10, "{plan:?}: {a} vs {b}");
        }
    }

    #[test]
    fn matches_brute_force_on_small_systems() {
        let markov =
            MarkovSource::new(z2(), vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let systems = [
            SystemSpec::from_fn(z2(), z2(), 1, 0, |x, _| x[0] & x[1]).unwrap(),
            SystemSpec::from_fn(z2(), z2(), 1, 1, |x, y| x[0] ^ x[1] ^ y[0]).unwrap(),
            SystemSpec::from_fn(z2(), z2(), 2, 0, |x, _| x[0] | (x[1] & x[2])).unwrap(),
        ];
        for sys in &systems {
            let chain = build_joint_chain(&markov, sys, Caps::default()).unwrap();
            for plan in [
                KeyPlan { x_len: 6, y_len: 0 },
                KeyPlan { x_len: 0, y_len: 6 },
                KeyPlan { x_len: 6, y_len: 6 },
                KeyPlan { x_len: 2, y_len: 6 },
                KeyPlan { x_len: 6, y_len: 2 },
            ] {
                assert_matches(&chain, plan);
            }
        }
    }

    #[test]
    fn ternary_feedback_matches_brute_force() {
        let q = Alphabet::modular(3).unwrap();
        let src = make_iid(q.clone(), &[0.5, 0.3, 0.2]).unwrap();
        let sys = SystemSpec::from_fn(q.clone(), q, 1, 1, |x, y| (x[1] * y[0] + x[0]) % 3).unwrap();
        let chain = build_joint_chain(&src, &sys, Caps::default()).unwrap();
        assert_matches(&chain, KeyPlan { x_len: 5, y_len: 5 });
        assert_matches(&chain, KeyPlan { x_len: 0, y_len: 5 });
    }

    #[test]
    fn iid_input_entropy_is_linear() {
        let src = make_iid(z2(), &[0.1, 0.9]).unwrap();
        let id = SystemSpec::identity(z2());
        let chain = build_joint_chain(&src, &id, Caps::default()).unwrap();
        let h = src.entropy_rate();
        let p = block_entropy_profile(&chain, KeyPlan::marginal(Marginal::X, 10), Start::Stationary)
            .unwrap();
        for (d, v) in p.entropies.iter().enumerate() {
            assert!((v - h * (d + 1) as f64).abs() < 1e-12);
        }
        assert_eq!(p.leaves(), 1024);
        assert_eq!(p.pruned_mass, 0.0);
    }

    #[test]
    fn path_cap_triggers() {
        let src = make_iid(z2(), &[0.5, 0.5]).unwrap();
        let chain = build_joint_chain(
            &src,
            &SystemSpec::identity(z2()),
            Caps {
                max_states: 100,
                max_paths: 1000,
            },
        )
        .unwrap();
        let err = exact_block_entropy(&chain, 10, Marginal::X).unwrap_err();
        assert!(matches!(err, Error::PathCapExceeded { block_length: 10, cap: 1000 }));
        assert!(exact_block_entropy(&chain, 9, Marginal::X).is_ok());
    }

    #[test]
    fn deterministic_across_runs() {
        let markov =
            MarkovSource::new(z2(), vec![vec![0.6, 0.4], vec![0.2, 0.8]]).unwrap();
        let sys = SystemSpec::from_fn(z2(), z2(), 2, 1, |x, y| (x[0] & x[2]) ^ y[0]).unwrap();
        let chain = build_joint_chain(&markov, &sys, Caps::default()).unwrap();
        let plan = KeyPlan { x_len: 12, y_len: 12 };
        let a = block_entropy_profile(&chain, plan, Start::Stationary).unwrap();
        let b = block_entropy_profile(&chain, plan, Start::Stationary).unwrap();
        assert_eq!(a, b);
    }
}
