//! Finite-memory deterministic input-output systems
//! `Y_n = f(X_{n−N}^n, Y_{n−M}^{n−1})`, their simulation, and the static
//! views `f_θ` obtained by freezing the history `θ ∈ 𝒳^N × 𝒴^M`.
//!
//! # Update-table layout
//!
//! A dense table has `|𝒳|^(N+1) · |𝒴|^M` entries and is the row-major
//! flattening of the tuple `(x_{n−N}, …, x_{n−1}, x_n, y_{n−M}, …, y_{n−1})`,
//! oldest sample first within each group, the last coordinate varying
//! fastest:
//!
//! ```text
//! in  = Σ_{k=0..N}   x_{n−N+k} · |𝒳|^(N−k)
//! out = Σ_{l=0..M−1} y_{n−M+l} · |𝒴|^(M−1−l)
//! idx = in · |𝒴|^M + out
//! ```
//!
//! History states `θ` are indexed the same way with `x_n` dropped:
//! `θ = (Σ_{k<N} x_{n−N+k}|𝒳|^(N−1−k)) · |𝒴|^M + out`.

use std::fmt;
use std::sync::Arc;

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{validation, Error, Result};
use crate::reconstruction::PartialInverse;

type OpaqueFn = dyn Fn(&[Symbol], &[Symbol]) -> Symbol + Send + Sync;

#[derive(Clone)]
enum Update {
    Table(Arc<[Symbol]>),
    Cascade(Arc<SystemSpec>, Arc<SystemSpec>),
    Opaque(Arc<OpaqueFn>),
}

/// A deterministic finite-memory system.
///
/// Three representations share this type: a dense update table (all exact
/// analyses available), a cascade of two systems that carries both stage
/// states internally, and an opaque callable that only supports simulation.
#[derive(Clone)]
pub struct SystemSpec {
    input: Alphabet,
    output: Alphabet,
    input_memory: usize,
    output_memory: usize,
    update: Update,
}

impl fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match &self.update {
            Update::Table(t) => format!("table[{}]", t.len()),
            Update::Cascade(..) => "cascade".to_string(),
            Update::Opaque(_) => "opaque".to_string(),
        };
        f.debug_struct("SystemSpec")
            .field("input", &self.input.symbols())
            .field("output", &self.output.symbols())
            .field("N", &self.input_memory)
            .field("M", &self.output_memory)
            .field("update", &mode)
            .finish()
    }
}

/// Realization of the system state before the next input arrives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemState {
    /// Last `N` inputs and last `M` outputs, oldest first.
    History {
        recent_inputs: Vec<Symbol>,
        recent_outputs: Vec<Symbol>,
    },
    /// States of the two stages of a cascade.
    Cascade(Box<SystemState>, Box<SystemState>),
}

impl SystemState {
    pub fn history(recent_inputs: Vec<Symbol>, recent_outputs: Vec<Symbol>) -> Self {
        SystemState::History {
            recent_inputs,
            recent_outputs,
        }
    }
}

/// A collision of the static view: `f_θ(x) = f_θ(x′)` with `x < x′`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Witness {
    pub theta: usize,
    pub x: Symbol,
    pub x_prime: Symbol,
}

/// Outcome of [`check_partial_invertibility`].
#[derive(Debug, Clone)]
pub struct InvertibilityVerdict {
    pub invertible: bool,
    pub witness: Option<Witness>,
    /// The materialized partial inverse, present iff `invertible`.
    pub inverse: Option<Arc<PartialInverse>>,
}

fn pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32)
        .ok_or_else(|| validation(format!("{base}^{exp} overflows")))
}

impl SystemSpec {
    /// Dense-table system; the table layout is documented at module level.
    pub fn from_table(
        input: Alphabet,
        output: Alphabet,
        input_memory: usize,
        output_memory: usize,
        table: Vec<Symbol>,
    ) -> Result<Self> {
        let expected = pow(input.len(), input_memory + 1)?
            .checked_mul(pow(output.len(), output_memory)?)
            .ok_or_else(|| validation("table size overflows"))?;
        if table.len() != expected {
            return Err(validation(format!(
                "update table has {} entries, expected {expected}",
                table.len()
            )));
        }
        if let Some(pos) = table.iter().position(|&y| y >= output.len()) {
            return Err(validation(format!(
                "table entry {pos} = {} is outside the output alphabet",
                table[pos]
            )));
        }
        Ok(Self {
            input,
            output,
            input_memory,
            output_memory,
            update: Update::Table(table.into()),
        })
    }

    /// Builds the table by evaluating `f(inputs, outputs)` on every history,
    /// where `inputs = (x_{n−N}, …, x_n)` and `outputs = (y_{n−M}, …, y_{n−1})`.
    pub fn from_fn(
        input: Alphabet,
        output: Alphabet,
        input_memory: usize,
        output_memory: usize,
        f: impl Fn(&[Symbol], &[Symbol]) -> Symbol,
    ) -> Result<Self> {
        let nx = input.len();
        let ny = output.len();
        let n_in = pow(nx, input_memory + 1)?;
        let n_out = pow(ny, output_memory)?;
        let mut table = Vec::with_capacity(n_in * n_out);
        let mut xs = vec![0; input_memory + 1];
        let mut ys = vec![0; output_memory];
        for i in 0..n_in {
            decode_digits(i, nx, &mut xs);
            for o in 0..n_out {
                decode_digits(o, ny, &mut ys);
                table.push(f(&xs, &ys));
            }
        }
        Self::from_table(input, output, input_memory, output_memory, table)
    }

    /// Simulation-only system driven by an arbitrary callable.
    pub fn opaque(
        input: Alphabet,
        output: Alphabet,
        input_memory: usize,
        output_memory: usize,
        f: impl Fn(&[Symbol], &[Symbol]) -> Symbol + Send + Sync + 'static,
    ) -> Self {
        Self {
            input,
            output,
            input_memory,
            output_memory,
            update: Update::Opaque(Arc::new(f)),
        }
    }

    /// `Y_n = X_n`.
    pub fn identity(alphabet: Alphabet) -> Self {
        let n = alphabet.len();
        Self::from_table(alphabet.clone(), alphabet, 0, 0, (0..n).collect())
            .expect("identity table is well formed")
    }

    /// `Y_n = c` for every input.
    pub fn constant(input: Alphabet, output: Alphabet, c: Symbol) -> Result<Self> {
        if !output.contains(c) {
            return Err(validation(format!("constant {c} outside output alphabet")));
        }
        let n = input.len();
        Self::from_table(input, output, 0, 0, vec![c; n])
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output
    }

    /// Input memory depth `N`.
    pub fn input_memory(&self) -> usize {
        self.input_memory
    }

    /// Output memory depth `M`.
    pub fn output_memory(&self) -> usize {
        self.output_memory
    }

    /// `max(M, N)`: the number of leading inputs that stay uncertain for a
    /// partially invertible system.
    pub fn memory(&self) -> usize {
        self.input_memory.max(self.output_memory)
    }

    pub fn table(&self) -> Option<&[Symbol]> {
        match &self.update {
            Update::Table(t) => Some(t),
            _ => None,
        }
    }

    pub fn stages(&self) -> Option<(&SystemSpec, &SystemSpec)> {
        match &self.update {
            Update::Cascade(a, b) => Some((a, b)),
            _ => None,
        }
    }

    pub fn is_opaque(&self) -> bool {
        matches!(self.update, Update::Opaque(_))
    }

    /// Number of history states `|𝒯|`; for cascades the product of the
    /// stage state counts.
    pub fn state_count(&self) -> Result<usize> {
        match &self.update {
            Update::Table(_) => Ok(self.theta_inputs() * self.theta_outputs()),
            Update::Cascade(a, b) => a
                .state_count()?
                .checked_mul(b.state_count()?)
                .ok_or_else(|| validation("cascade state count overflows")),
            Update::Opaque(_) => Err(Error::UnsupportedAnalysis(
                "opaque systems have no enumerable state space".into(),
            )),
        }
    }

    fn theta_inputs(&self) -> usize {
        self.input.len().pow(self.input_memory as u32)
    }

    fn theta_outputs(&self) -> usize {
        self.output.len().pow(self.output_memory as u32)
    }

    /// One step from state index `theta` on input `x`: returns the output
    /// and the next state index. Panics on opaque systems.
    pub fn step(&self, theta: usize, x: Symbol) -> (Symbol, usize) {
        match &self.update {
            Update::Table(t) => {
                let n_out = self.theta_outputs();
                let (xin, yout) = (theta / n_out, theta % n_out);
                let row = xin * self.input.len() + x;
                let y = t[row * n_out + yout];
                let next_in = if self.input_memory == 0 {
                    0
                } else {
                    row % self.theta_inputs()
                };
                let next_out = if self.output_memory == 0 {
                    0
                } else {
                    (yout * self.output.len() + y) % n_out
                };
                (y, next_in * n_out + next_out)
            }
            Update::Cascade(a, b) => {
                let nb = b.state_count().expect("cascade stages are enumerable");
                let (sa, sb) = (theta / nb, theta % nb);
                let (v, na) = a.step(sa, x);
                let (z, nbn) = b.step(sb, v);
                (z, na * nb + nbn)
            }
            Update::Opaque(_) => panic!("step() requires an enumerable system"),
        }
    }

    /// The static view `f_θ(x)`.
    pub fn apply(&self, theta: usize, x: Symbol) -> Symbol {
        self.step(theta, x).0
    }

    /// Default initial state: buffers filled with the zero symbol.
    pub fn initial_state(&self) -> SystemState {
        match &self.update {
            Update::Cascade(a, b) => {
                SystemState::Cascade(Box::new(a.initial_state()), Box::new(b.initial_state()))
            }
            _ => SystemState::History {
                recent_inputs: vec![self.input.zero_symbol(); self.input_memory],
                recent_outputs: vec![self.output.zero_symbol(); self.output_memory],
            },
        }
    }

    fn check_state(&self, state: &SystemState) -> Result<()> {
        match (&self.update, state) {
            (Update::Cascade(a, b), SystemState::Cascade(sa, sb)) => {
                a.check_state(sa)?;
                b.check_state(sb)
            }
            (
                Update::Table(_) | Update::Opaque(_),
                SystemState::History {
                    recent_inputs,
                    recent_outputs,
                },
            ) => {
                if recent_inputs.len() != self.input_memory
                    || recent_outputs.len() != self.output_memory
                {
                    return Err(validation(format!(
                        "state buffers have lengths ({}, {}), expected ({}, {})",
                        recent_inputs.len(),
                        recent_outputs.len(),
                        self.input_memory,
                        self.output_memory
                    )));
                }
                if recent_inputs.iter().any(|&x| !self.input.contains(x))
                    || recent_outputs.iter().any(|&y| !self.output.contains(y))
                {
                    return Err(validation("state buffer symbol outside alphabet"));
                }
                Ok(())
            }
            _ => Err(validation("state shape does not match system")),
        }
    }

    /// State index of a state realization.
    pub fn encode_state(&self, state: &SystemState) -> Result<usize> {
        self.check_state(state)?;
        match (&self.update, state) {
            (Update::Cascade(a, b), SystemState::Cascade(sa, sb)) => {
                Ok(a.encode_state(sa)? * b.state_count()? + b.encode_state(sb)?)
            }
            (
                Update::Table(_),
                SystemState::History {
                    recent_inputs,
                    recent_outputs,
                },
            ) => {
                let xin = encode_digits(recent_inputs, self.input.len());
                let yout = encode_digits(recent_outputs, self.output.len());
                Ok(xin * self.theta_outputs() + yout)
            }
            _ => Err(Error::UnsupportedAnalysis(
                "opaque systems have no state indices".into(),
            )),
        }
    }

    pub fn decode_state(&self, theta: usize) -> SystemState {
        match &self.update {
            Update::Cascade(a, b) => {
                let nb = b.state_count().expect("enumerable");
                SystemState::Cascade(
                    Box::new(a.decode_state(theta / nb)),
                    Box::new(b.decode_state(theta % nb)),
                )
            }
            _ => {
                let n_out = self.theta_outputs();
                let mut recent_inputs = vec![0; self.input_memory];
                let mut recent_outputs = vec![0; self.output_memory];
                decode_digits(theta / n_out, self.input.len(), &mut recent_inputs);
                decode_digits(theta % n_out, self.output.len(), &mut recent_outputs);
                SystemState::History {
                    recent_inputs,
                    recent_outputs,
                }
            }
        }
    }

    /// Runs the recursion on `input` starting from `init`.
    pub fn simulate(&self, input: &[Symbol], init: &SystemState) -> Result<Vec<Symbol>> {
        if let Some(i) = input.iter().position(|&x| !self.input.contains(x)) {
            return Err(validation(format!(
                "input symbol {} at position {i} outside alphabet",
                input[i]
            )));
        }
        self.check_state(init)?;
        let mut out = Vec::with_capacity(input.len());
        match &self.update {
            Update::Opaque(f) => {
                let mut xs: Vec<Symbol> = Vec::with_capacity(self.input_memory + 1);
                let mut ys: Vec<Symbol> = Vec::with_capacity(self.output_memory);
                if let SystemState::History {
                    recent_inputs,
                    recent_outputs,
                } = init
                {
                    xs.extend_from_slice(recent_inputs);
                    ys.extend_from_slice(recent_outputs);
                }
                for &x in input {
                    xs.push(x);
                    let y = f(&xs, &ys);
                    if !self.output.contains(y) {
                        return Err(validation(format!("opaque update produced symbol {y}")));
                    }
                    out.push(y);
                    xs.remove(0);
                    if self.output_memory > 0 {
                        ys.remove(0);
                        ys.push(y);
                    }
                }
            }
            _ => {
                let mut theta = self.encode_state(init)?;
                for &x in input {
                    let (y, next) = self.step(theta, x);
                    out.push(y);
                    theta = next;
                }
            }
        }
        Ok(out)
    }

    /// `f_θ` for one frozen history.
    pub fn view(&self, theta: usize) -> Result<ParamView<'_>> {
        let count = self.state_count()?;
        if theta >= count {
            return Err(validation(format!("theta {theta} out of range 0..{count}")));
        }
        Ok(ParamView {
            parent: self,
            theta,
        })
    }
}

/// The parameterized static map `f_θ : 𝒳 → 𝒴`.
#[derive(Debug, Clone, Copy)]
pub struct ParamView<'a> {
    parent: &'a SystemSpec,
    theta: usize,
}

impl ParamView<'_> {
    pub fn theta(&self) -> usize {
        self.theta
    }

    pub fn apply(&self, x: Symbol) -> Symbol {
        self.parent.apply(self.theta, x)
    }

    /// `|f_θ⁻¹[y]|` for every output symbol.
    pub fn preimage_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.parent.output.len()];
        for x in 0..self.parent.input.len() {
            counts[self.apply(x)] += 1;
        }
        counts
    }
}

pub(crate) fn encode_digits(digits: &[Symbol], radix: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * radix + d)
}

pub(crate) fn decode_digits(mut value: usize, radix: usize, out: &mut [Symbol]) {
    for d in out.iter_mut().rev() {
        *d = value % radix;
        value /= radix;
    }
}

/// Thm. 2 bound `max_{(x,θ)} log₂ |f_θ⁻¹[f_θ(x)]|` in bits.
pub fn preimage_bound(system: &SystemSpec) -> Result<f64> {
    let count = system.state_count()?;
    let mut worst = 1usize;
    for theta in 0..count {
        let sizes = system.view(theta)?.preimage_sizes();
        worst = worst.max(sizes.into_iter().max().unwrap_or(1));
    }
    Ok((worst as f64).log2())
}

/// Checks that every `f_θ` is injective. On success the partial inverse
/// table is materialized; on failure the lexicographically smallest
/// collision `(θ, x, x′)` is returned.
pub fn check_partial_invertibility(system: &SystemSpec) -> Result<InvertibilityVerdict> {
    let count = system.state_count()?;
    let nx = system.input.len();
    let ny = system.output.len();
    let mut inverse = vec![None; count * ny];
    for theta in 0..count {
        let mut first: Vec<Option<Symbol>> = vec![None; ny];
        let mut collision: Option<(Symbol, Symbol)> = None;
        for x in 0..nx {
            let y = system.apply(theta, x);
            match first[y] {
                Some(x0) => {
                    // smallest x that collides, paired with its smallest partner
                    let cand = (x0, x);
                    if collision.is_none_or(|c| cand < c) {
                        collision = Some(cand);
                    }
                }
                None => {
                    first[y] = Some(x);
                    inverse[theta * ny + y] = Some(x);
                }
            }
        }
        if let Some((x, x_prime)) = collision {
            return Ok(InvertibilityVerdict {
                invertible: false,
                witness: Some(Witness { theta, x, x_prime }),
                inverse: None,
            });
        }
    }
    Ok(InvertibilityVerdict {
        invertible: true,
        witness: None,
        inverse: Some(Arc::new(PartialInverse::from_parts(system.clone(), inverse))),
    })
}

/// Serial composition: the output of `first` drives `second`.
///
/// The composed system carries both stage states; its declared depths are
/// `N₁ + N₂` and `M₁ + M₂`. Simulation is bit-exact with running the two
/// stages one after the other.
pub fn cascade(first: &SystemSpec, second: &SystemSpec) -> Result<SystemSpec> {
    if first.output != second.input {
        return Err(validation(
            "first stage output alphabet differs from second stage input alphabet",
        ));
    }
    if first.is_opaque() || second.is_opaque() {
        return Err(Error::UnsupportedAnalysis(
            "cascades of opaque systems are not supported".into(),
        ));
    }
    Ok(SystemSpec {
        input: first.input.clone(),
        output: second.output.clone(),
        input_memory: first.input_memory + second.input_memory,
        output_memory: first.output_memory + second.output_memory,
        update: Update::Cascade(Arc::new(first.clone()), Arc::new(second.clone())),
    })
}
