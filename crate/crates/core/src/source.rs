//! Stationary Markov input processes and their exact entropy rates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Alphabet, Symbol};
use crate::entropy::xlog2x;
use crate::error::{validation, Error, Result};

const ROW_TOLERANCE: f64 = 1e-12;
const STATIONARY_TOLERANCE: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 1_000_000;

/// A regular (irreducible, aperiodic) stationary Markov chain on an alphabet.
///
/// An iid source is the special case in which every transition row equals
/// the marginal pmf.
#[derive(Debug, Clone)]
pub struct MarkovSource {
    alphabet: Alphabet,
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
    iid: bool,
    zero_support: Vec<Symbol>,
}

/// Where a sampled path starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathStart {
    /// First symbol drawn from the stationary law.
    Stationary,
    /// First symbol fixed.
    Symbol(Symbol),
}

fn check_pmf(row: &[f64], n: usize, what: &str) -> Result<()> {
    if row.len() != n {
        return Err(validation(format!(
            "{what} has length {}, alphabet has {n} symbols",
            row.len()
        )));
    }
    if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(validation(format!("{what} has invalid probability {p}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(validation(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// iid source with the given marginal.
///
/// Zero-probability symbols are allowed; they are recorded in
/// [`MarkovSource::zero_support`] since they shrink the effective alphabet.
pub fn make_iid(alphabet: Alphabet, pmf: &[f64]) -> Result<MarkovSource> {
    check_pmf(pmf, alphabet.len(), "pmf")?;
    let zero_support = (0..pmf.len()).filter(|&i| pmf[i] == 0.0).collect();
    Ok(MarkovSource {
        transition: vec![pmf.to_vec(); alphabet.len()],
        stationary: pmf.to_vec(),
        alphabet,
        iid: true,
        zero_support,
    })
}

impl MarkovSource {
    /// Markov source from a row-stochastic matrix. The chain must be regular;
    /// the stationary law is found by power iteration.
    pub fn new(alphabet: Alphabet, transition: Vec<Vec<f64>>) -> Result<Self> {
        let n = alphabet.len();
        if transition.len() != n {
            return Err(validation(format!(
                "transition matrix has {} rows, alphabet has {n} symbols",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            check_pmf(row, n, &format!("transition row {i}"))?;
        }
        let adjacency: Vec<Vec<usize>> = transition
            .iter()
            .map(|row| (0..n).filter(|&j| row[j] > 0.0).collect())
            .collect();
        if !is_strongly_connected(&adjacency) {
            return Err(validation("transition graph is not irreducible"));
        }
        if period(&adjacency) != 1 {
            return Err(validation("transition graph is periodic"));
        }
        let stationary = power_iteration(&transition)?;
        let iid = transition.iter().all(|row| row == &transition[0]);
        Ok(Self {
            alphabet,
            transition,
            stationary,
            iid,
            zero_support: Vec::new(),
        })
    }

    /// Binary symmetric chain that flips state with probability `flip`.
    pub fn binary_symmetric(flip: f64) -> Result<Self> {
        Self::new(
            Alphabet::modular(2)?,
            vec![vec![1.0 - flip, flip], vec![flip, 1.0 - flip]],
        )
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn is_iid(&self) -> bool {
        self.iid
    }

    pub fn zero_support(&self) -> &[Symbol] {
        &self.zero_support
    }

    /// Exact entropy rate in bits: −Σᵢ πᵢ Σⱼ Pᵢⱼ log₂ Pᵢⱼ.
    pub fn entropy_rate(&self) -> f64 {
        self.stationary
            .iter()
            .zip(&self.transition)
            .map(|(&pi, row)| pi * row.iter().map(|&p| -xlog2x(p)).sum::<f64>())
            .sum()
    }

    /// Largest componentwise deviation of πP from π.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.stationary.len();
        (0..n)
            .map(|j| {
                let v: f64 = (0..n).map(|i| self.stationary[i] * self.transition[i][j]).sum();
                (v - self.stationary[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Draws a path of `length` symbols; deterministic in `seed`.
    pub fn sample_path(&self, length: usize, seed: u64, start: PathStart) -> Result<Vec<Symbol>> {
        if length == 0 {
            return Err(Error::Precondition("path length must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cumulative: Vec<Vec<f64>> = self.transition.iter().map(|r| cumsum(r)).collect();
        let first = match start {
            PathStart::Stationary => draw(&cumsum(&self.stationary), rng.random()),
            PathStart::Symbol(s) => {
                if !self.alphabet.contains(s) {
                    return Err(validation(format!("start symbol {s} outside alphabet")));
                }
                s
            }
        };
        let mut path = Vec::with_capacity(length);
        path.push(first);
        let mut cur = first;
        for _ in 1..length {
            cur = draw(&cumulative[cur], rng.random());
            path.push(cur);
        }
        Ok(path)
    }
}

/// Free-function form of [`MarkovSource::entropy_rate`].
pub fn source_entropy_rate(source: &MarkovSource) -> f64 {
    source.entropy_rate()
}

fn cumsum(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

fn draw(cumulative: &[f64], u: f64) -> Symbol {
    let target = u * cumulative[cumulative.len() - 1];
    let i = cumulative.partition_point(|&c| c <= target);
    // never return a zero-probability symbol, even at the top edge
    let mut i = i.min(cumulative.len() - 1);
    while i > 0 && cumulative[i] == cumulative[i - 1] {
        i -= 1;
    }
    i
}

fn power_iteration(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..STATIONARY_MAX_ITER {
        next.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[i][j];
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let delta: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if delta < STATIONARY_TOLERANCE {
            return Ok(pi);
        }
    }
    Err(Error::Numeric(
        "stationary distribution did not converge".into(),
    ))
}

pub(crate) fn is_strongly_connected(adj: &[Vec<usize>]) -> bool {
    let n = adj.len();
    let reach = |graph: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &graph[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    let mut rev = vec![Vec::new(); n];
    for (u, outs) in adj.iter().enumerate() {
        for &v in outs {
            rev[v].push(u);
        }
    }
    reach(adj) && reach(&rev)
}

/// Period of an irreducible graph: gcd of level differences along edges.
pub(crate) fn period(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    let mut g = 0usize;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            } else {
                let diff = (level[u] + 1).abs_diff(level[v]);
                g = gcd(g, diff);
            }
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
