//! Input reconstruction for partially invertible systems.
//!
//! Given the first `max(M, N)` inputs, every later input of a partially
//! invertible system is recovered from the output and the inputs already
//! reconstructed: `x_n = f_θ⁻¹(y_n)` with `θ = (x_{n−N}^{n−1}, y_{n−M}^{n−1})`.

use num::{BigRational, Zero};

use crate::alphabet::Symbol;
use crate::error::{validation, Error, Result};
use crate::system::{check_partial_invertibility, encode_digits, SystemSpec, SystemState};

/// `f_inv` as a table over `(θ, y)`.
#[derive(Debug, Clone)]
pub struct PartialInverse {
    system: SystemSpec,
    inverse_table: Vec<Option<Symbol>>,
}

impl PartialInverse {
    /// Verifies invertibility and materializes the inverse table.
    pub fn new(system: &SystemSpec) -> Result<Self> {
        let verdict = check_partial_invertibility(system)?;
        match verdict.inverse {
            Some(inv) => Ok((*inv).clone()),
            None => {
                let w = verdict.witness.expect("non-invertible verdict carries a witness");
                Err(validation(format!(
                    "system is not partially invertible: f_θ({}) = f_θ({}) at θ = {}",
                    w.x, w.x_prime, w.theta
                )))
            }
        }
    }

    pub(crate) fn from_parts(system: SystemSpec, inverse_table: Vec<Option<Symbol>>) -> Self {
        Self {
            system,
            inverse_table,
        }
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    /// `f_θ⁻¹(y)`, or `None` when `y` is not in the range of `f_θ`.
    pub fn invert(&self, theta: usize, y: Symbol) -> Option<Symbol> {
        let ny = self.system.output_alphabet().len();
        if y >= ny {
            return None;
        }
        self.inverse_table.get(theta * ny + y).copied().flatten()
    }

    fn history_theta(&self, xs: &[Symbol], ys: &[Symbol]) -> usize {
        let nx = self.system.input_alphabet().len();
        let ny = self.system.output_alphabet().len();
        encode_digits(xs, nx) * ny.pow(self.system.output_memory() as u32) + encode_digits(ys, ny)
    }
}

/// Recovers the input sequence from `y`, given the true first
/// `max(M, N)` inputs in `seed`.
///
/// If `init` is supplied, the seed is checked against it: simulating the
/// seed from `init` must reproduce the first outputs. For table systems the
/// remaining inputs are recovered from `y` and earlier reconstructions only;
/// cascades track their internal stage states and therefore need `init`.
pub fn reconstruct(
    inv: &PartialInverse,
    y: &[Symbol],
    seed: &[Symbol],
    init: Option<&SystemState>,
) -> Result<Vec<Symbol>> {
    let system = &inv.system;
    let lead = system.memory().min(y.len());
    if seed.len() != lead {
        return Err(Error::Precondition(format!(
            "seed must hold the first {lead} inputs, got {}",
            seed.len()
        )));
    }
    let mut state = None;
    if let Some(init) = init {
        let y_seed = system.simulate(seed, init)?;
        if let Some(i) = (0..lead).find(|&i| y_seed[i] != y[i]) {
            return Err(Error::InconsistentObservation {
                index: i,
                reason: "seed does not reproduce the observed output".into(),
            });
        }
        let mut theta = system.encode_state(init)?;
        for &x in seed {
            theta = system.step(theta, x).1;
        }
        state = Some(theta);
    }
    let mut x: Vec<Symbol> = seed.to_vec();
    x.reserve(y.len() - lead);

    if system.table().is_some() {
        let (n, m) = (system.input_memory(), system.output_memory());
        for t in lead..y.len() {
            let theta = inv.history_theta(&x[t - n..t], &y[t - m..t]);
            x.push(invert_at(inv, theta, y[t], t)?);
        }
        return Ok(x);
    }

    let mut theta = state.ok_or_else(|| {
        Error::Precondition("cascade reconstruction needs the initial state".into())
    })?;
    for (t, &yt) in y.iter().enumerate().skip(lead) {
        let xt = invert_at(inv, theta, yt, t)?;
        theta = system.step(theta, xt).1;
        x.push(xt);
    }
    Ok(x)
}

fn invert_at(inv: &PartialInverse, theta: usize, y: Symbol, index: usize) -> Result<Symbol> {
    inv.invert(theta, y)
        .ok_or_else(|| Error::InconsistentObservation {
            index,
            reason: format!("output symbol {y} is not in the range of f_θ at θ = {theta}"),
        })
}

/// Diagnostic mode: tries every seed in `𝒳^max(M,N)` and returns the seeds
/// whose reconstruction is consistent with `y`, with the reconstructions.
pub fn reconstruct_candidates(
    inv: &PartialInverse,
    y: &[Symbol],
) -> Result<Vec<(Vec<Symbol>, Vec<Symbol>)>> {
    if inv.system.table().is_none() {
        return Err(Error::UnsupportedAnalysis(
            "seed enumeration requires a table system".into(),
        ));
    }
    let lead = inv.system.memory().min(y.len());
    let nx = inv.system.input_alphabet().len();
    let total = nx.pow(lead as u32);
    let mut out = Vec::new();
    let mut seed = vec![0; lead];
    for code in 0..total {
        crate::system::decode_digits(code, nx, &mut seed);
        if let Ok(x) = reconstruct(inv, y, &seed, None) {
            out.push((seed.clone(), x));
        }
    }
    Ok(out)
}

/// Closed-form inversion of `Y_n = X_n X_{n−1}` from `X_1` and `Y_2^n`:
/// odd `n` gives `X_1 Π_{k=1}^{(n−1)/2} Y_{2k+1}/Y_{2k}`, even `n` gives
/// `(Y_n/X_1) Π_{k=1}^{n/2−1} Y_{2k}/Y_{2k+1}`.
///
/// `y[0]` (which involves the unknown `X_0`) is not used.
pub fn multiplier_closed_form(y: &[BigRational], x1: &BigRational) -> Result<Vec<BigRational>> {
    if x1.is_zero() {
        return Err(Error::Domain("X_1 must be nonzero".into()));
    }
    if let Some(i) = y.iter().position(Zero::is_zero) {
        return Err(Error::Domain(format!("zero output symbol at index {i}")));
    }
    let mut out = Vec::with_capacity(y.len());
    if y.is_empty() {
        return Ok(out);
    }
    out.push(x1.clone());
    // with 1-based indices: odd_prod = Π Y_{2k+1}/Y_{2k}, even_prod = Π Y_{2k}/Y_{2k+1}
    let mut odd_prod = BigRational::from_integer(1.into());
    let mut even_prod = BigRational::from_integer(1.into());
    let at = |n: usize| &y[n - 1];
    for n in 2..=y.len() {
        if n % 2 == 1 {
            odd_prod = odd_prod * at(n) / at(n - 1);
            out.push(x1 * &odd_prod);
        } else {
            if n >= 4 {
                even_prod = even_prod * at(n - 2) / at(n - 1);
            }
            out.push(at(n) / x1 * &even_prod);
        }
    }
    Ok(out)
}
