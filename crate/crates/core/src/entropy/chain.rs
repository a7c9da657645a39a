//! The joint Markov chain of source and system.
//!
//! A chain state is the pair `(x_{n}, θ_{n+1})`: the last source symbol and
//! the system state after consuming it. From `(a, θ)` the chain moves to
//! `(x, θ')` with probability `P[a][x]`, emitting `(x, f_θ(x))`. Only pairs
//! reachable from `(a, θ₀)` with `a` in the support of the source's
//! stationary law and `θ₀` the default initial state are materialized, and
//! the analysis is restricted to one closed recurrent class among them.

use crate::alphabet::Symbol;
use crate::error::{validation, Error, Result};
use crate::source::{period, MarkovSource};
use crate::system::SystemSpec;

use super::Caps;

const STATIONARY_TOLERANCE: f64 = 1e-13;
const STATIONARY_MAX_ITER: usize = 1_000_000;

/// One labelled transition of the joint chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub x: u32,
    pub y: u32,
    pub next: u32,
    pub prob: f64,
}

/// `(last input, system state index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub last_input: Symbol,
    pub theta: usize,
}

#[derive(Debug, Clone)]
pub struct JointChain {
    source: MarkovSource,
    system: SystemSpec,
    states: Vec<ChainState>,
    transitions: Vec<Vec<Transition>>,
    stationary: Vec<f64>,
    caps: Caps,
    reachable: usize,
    period: usize,
}

impl JointChain {
    pub fn source(&self) -> &MarkovSource {
        &self.source
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[ChainState] {
        &self.states
    }

    pub fn transitions(&self, state: usize) -> &[Transition] {
        &self.transitions[state]
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Number of pairs reachable from the start set, before restriction to
    /// the recurrent class.
    pub fn reachable_states(&self) -> usize {
        self.reachable
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn input_size(&self) -> usize {
        self.system.input_alphabet().len()
    }

    pub fn output_size(&self) -> usize {
        self.system.output_alphabet().len()
    }

    /// Largest absolute violation of `Σ_next P = 1` or `πP = π`.
    pub fn residuals(&self) -> (f64, f64) {
        let row = self
            .transitions
            .iter()
            .map(|ts| (ts.iter().map(|t| t.prob).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max);
        let mut next = vec![0.0; self.len()];
        for (s, ts) in self.transitions.iter().enumerate() {
            for t in ts {
                next[t.next as usize] += self.stationary[s] * t.prob;
            }
        }
        let fix = next
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (row, fix)
    }
}

/// Builds the joint chain, enforcing `caps.max_states` on the full pair
/// space `|𝒳| · |𝒯|` before any allocation.
pub fn build_joint_chain(
    source: &MarkovSource,
    system: &SystemSpec,
    caps: Caps,
) -> Result<JointChain> {
    if source.alphabet() != system.input_alphabet() {
        return Err(validation(
            "source alphabet differs from the system input alphabet",
        ));
    }
    let theta_count = system.state_count()?;
    let nx = source.alphabet().len();
    let space = nx as u128 * theta_count as u128;
    if space > caps.max_states as u128 {
        return Err(Error::StateCapExceeded {
            states: space,
            cap: caps.max_states,
        });
    }
    let theta0 = system.encode_state(&system.initial_state())?;
    let p = source.transition();
    let pair = |a: Symbol, theta: usize| a * theta_count + theta;

    // breadth-first discovery of reachable pairs
    let mut local = vec![u32::MAX; space as usize];
    let mut found: Vec<ChainState> = Vec::new();
    for (a, &w) in source.stationary().iter().enumerate() {
        if w > 0.0 {
            let key = pair(a, theta0);
            local[key] = found.len() as u32;
            found.push(ChainState {
                last_input: a,
                theta: theta0,
            });
        }
    }
    let mut edges: Vec<Vec<Transition>> = Vec::new();
    let mut head = 0usize;
    while head < found.len() {
        let ChainState { last_input, theta } = found[head];
        let mut out = Vec::new();
        for (x, &prob) in p[last_input].iter().enumerate() {
            if prob <= 0.0 {
                continue;
            }
            let (y, next_theta) = system.step(theta, x);
            let key = pair(x, next_theta);
            if local[key] == u32::MAX {
                local[key] = found.len() as u32;
                found.push(ChainState {
                    last_input: x,
                    theta: next_theta,
                });
            }
            out.push(Transition {
                x: x as u32,
                y: y as u32,
                next: local[key],
                prob,
            });
        }
        edges.push(out);
        head += 1;
    }
    let reachable = found.len();

    let class = first_closed_class(&edges);
    let mut remap = vec![u32::MAX; reachable];
    for (i, &s) in class.iter().enumerate() {
        remap[s] = i as u32;
    }
    let states: Vec<ChainState> = class.iter().map(|&s| found[s]).collect();
    let transitions: Vec<Vec<Transition>> = class
        .iter()
        .map(|&s| {
            edges[s]
                .iter()
                .map(|t| Transition {
                    next: remap[t.next as usize],
                    ..*t
                })
                .collect()
        })
        .collect();

    let adj: Vec<Vec<usize>> = transitions
        .iter()
        .map(|ts| ts.iter().map(|t| t.next as usize).collect())
        .collect();
    let period = period(&adj);
    let stationary = stationary_law(&transitions, period > 1)?;

    let chain = JointChain {
        source: source.clone(),
        system: system.clone(),
        states,
        transitions,
        stationary,
        caps,
        reachable,
        period,
    };
    check_emissions(&chain)?;
    let (row, fix) = chain.residuals();
    if row > 1e-12 || fix > 1e-10 {
        return Err(Error::InvariantViolation {
            name: "joint chain".into(),
            detail: format!("row-sum residual {row:e}, stationarity residual {fix:e}"),
        });
    }
    Ok(chain)
}

/// Joint chain of `source` through `cascade(first, second)` whose emitted
/// input symbol is the intermediate signal `V_n` rather than `X_n`. Block
/// entropies keyed on this chain describe the pair `(V, Y)`.
pub fn build_tapped_chain(
    source: &MarkovSource,
    first: &SystemSpec,
    second: &SystemSpec,
    caps: Caps,
) -> Result<JointChain> {
    let composite = crate::system::cascade(first, second)?;
    let mut chain = build_joint_chain(source, &composite, caps)?;
    let nb = second.state_count()?;
    for (s, ts) in chain.transitions.iter_mut().enumerate() {
        let sa = chain.states[s].theta / nb;
        for t in ts.iter_mut() {
            t.x = first.apply(sa, t.x as Symbol) as u32;
        }
    }
    Ok(chain)
}

/// Checks every transition against the system's static view: the emitted
/// output must be `f_θ(x)` and the target state must carry `x`.
pub fn check_emissions(chain: &JointChain) -> Result<()> {
    for (s, ts) in chain.transitions.iter().enumerate() {
        let theta = chain.states[s].theta;
        let view = chain.system.view(theta)?;
        for t in ts {
            let target = chain.states[t.next as usize];
            if view.apply(t.x as Symbol) != t.y as Symbol || target.last_input != t.x as Symbol {
                return Err(Error::InvariantViolation {
                    name: "joint chain emission".into(),
                    detail: format!("state {s}, input {}", t.x),
                });
            }
        }
    }
    Ok(())
}

/// Members (ascending) of the closed strongly connected component that
/// contains the lowest-numbered state among all closed components.
fn first_closed_class(edges: &[Vec<Transition>]) -> Vec<usize> {
    let comp = tarjan(edges);
    let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut closed = vec![true; ncomp];
    for (u, ts) in edges.iter().enumerate() {
        for t in ts {
            if comp[t.next as usize] != comp[u] {
                closed[comp[u]] = false;
            }
        }
    }
    let chosen = (0..edges.len())
        .find(|&u| closed[comp[u]])
        .map(|u| comp[u])
        .expect("a finite chain has a closed class");
    (0..edges.len()).filter(|&u| comp[u] == chosen).collect()
}

/// Iterative Tarjan; returns a component id per vertex.
fn tarjan(edges: &[Vec<Transition>]) -> Vec<usize> {
    const UNSEEN: usize = usize::MAX;
    let n = edges.len();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack = Vec::new();
    let mut counter = 0usize;
    let mut ncomp = 0usize;
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        call.push((root, 0));
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos < edges[u].len() {
                let w = edges[u][*pos].next as usize;
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[u] = low[u].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[u]);
                }
                if low[u] == index[u] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == u {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

fn stationary_law(transitions: &[Vec<Transition>], lazy: bool) -> Result<Vec<f64>> {
    let n = transitions.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..STATIONARY_MAX_ITER {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (s, ts) in transitions.iter().enumerate() {
            for t in ts {
                next[t.next as usize] += pi[s] * t.prob;
            }
        }
        if lazy {
            next.iter_mut().zip(&pi).for_each(|(v, &p)| *v = 0.5 * (*v + p));
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
        "joint-chain stationary distribution did not converge".into(),
    ))
}
