//! Differential-entropy-rate change of stable causal linear filters.
//!
//! For `G(z) = B(z)/A(z)` with `B(z) = Σ b_k z^{−k}` and
//! `A(z) = 1 − Σ a_l z^{−l}`, the change `h̄(Y) − h̄(X)` equals
//! `(1/2π) ∫ ln|G(e^{jθ})| dθ`, which in turn equals
//! `ln|b_0| + Σ_{|z_i|>1} ln|z_i|` over the zeros of `B`. Both sides are
//! computed here independently. The quantity is a change in differential
//! entropy rate and is not an information loss: a pure gain changes it while
//! being invertible.

use nalgebra::DMatrix;
use num::complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

const UNIT_CIRCLE_GUARD: f64 = 1e-9;
const ROOT_RESIDUAL: f64 = 1e-10;
const MIN_GRID: usize = 1 << 10;
const MAX_GRID: usize = 1 << 24;
const GRID_TOLERANCE: f64 = 1e-8;

/// `G(z) = (b_0 + b_1 z^{−1} + …) / (1 − a_1 z^{−1} − …)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferFunction {
    b: Vec<f64>,
    a: Vec<f64>,
}

impl TransferFunction {
    /// Validates `b_0 ≠ 0` and that every pole lies strictly inside the
    /// unit circle.
    pub fn new(b: Vec<f64>, a: Vec<f64>) -> Result<Self> {
        if b.is_empty() || b[0] == 0.0 {
            return Err(Error::Validation("b_0 must be nonzero".into()));
        }
        if b.iter().chain(&a).any(|v| !v.is_finite()) {
            return Err(Error::Validation("coefficients must be finite".into()));
        }
        let tf = Self { b, a };
        for p in tf.poles()? {
            if p.norm() >= 1.0 {
                return Err(Error::Validation(format!(
                    "unstable: pole at {} + {}j has modulus {}",
                    p.re,
                    p.im,
                    p.norm()
                )));
            }
        }
        Ok(tf)
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Roots of `b_0 z^N + b_1 z^{N−1} + … + b_N`.
    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        polynomial_roots(&self.b)
    }

    /// Roots of `z^M − a_1 z^{M−1} − … − a_M`.
    pub fn poles(&self) -> Result<Vec<Complex64>> {
        let mut den = vec![1.0];
        den.extend(self.a.iter().map(|v| -v));
        polynomial_roots(&den)
    }

    /// `G(e^{jθ})`.
    pub fn response(&self, theta: f64) -> Complex64 {
        let w = Complex64::from_polar(1.0, -theta);
        let horner = |c: &mut dyn Iterator<Item = f64>| {
            // Σ c_k w^k evaluated from the highest power down
            let coeffs: Vec<f64> = c.collect();
            coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &ck| acc * w + ck)
        };
        let num = horner(&mut self.b.iter().copied());
        let den = horner(&mut std::iter::once(1.0).chain(self.a.iter().map(|v| -v)));
        num / den
    }
}

/// Result of the frequency-domain evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralValue {
    /// Nats per sample.
    pub value: f64,
    /// Grid size at which successive doublings agreed.
    pub grid: usize,
}

/// `(1/2π) ∫_{−π}^{π} ln|G(e^{jθ})| dθ` by the trapezoidal rule on a uniform
/// periodic grid, doubled from `grid` until two successive values agree to
/// `1e-8`. Zeros within `1e-9` of the unit circle are rejected.
pub fn rate_change_integral(tf: &TransferFunction, grid: usize) -> Result<IntegralValue> {
    if grid < MIN_GRID {
        return Err(Error::Precondition(format!("grid must be at least {MIN_GRID}")));
    }
    if let Some(z) = tf
        .zeros()?
        .into_iter()
        .find(|z| (z.norm() - 1.0).abs() < UNIT_CIRCLE_GUARD)
    {
        return Err(Error::UnitCircleZero { re: z.re, im: z.im });
    }
    let mean = |n: usize| {
        let step = std::f64::consts::TAU / n as f64;
        let mut acc = crate::entropy::CompensatedSum::default();
        for i in 0..n {
            acc.add(tf.response(-std::f64::consts::PI + i as f64 * step).norm().ln());
        }
        acc.value() / n as f64
    };
    let mut n = grid;
    let mut prev = mean(n);
    while n < MAX_GRID {
        n *= 2;
        let next = mean(n);
        if (next - prev).abs() < GRID_TOLERANCE {
            return Ok(IntegralValue { value: next, grid: n });
        }
        prev = next;
    }
    Err(Error::Numeric(format!(
        "log-magnitude integral did not converge by grid {MAX_GRID}"
    )))
}

/// `ln|b_0| + Σ_{|z_i|>1} ln|z_i|` in nats per sample.
pub fn rate_change_roots(tf: &TransferFunction) -> Result<f64> {
    let outside: f64 = tf
        .zeros()?
        .iter()
        .filter(|z| z.norm() > 1.0)
        .map(|z| z.norm().ln())
        .sum();
    Ok(tf.b[0].abs().ln() + outside)
}

/// True iff every zero lies strictly inside the unit circle.
pub fn is_minimum_phase(tf: &TransferFunction) -> Result<bool> {
    let zeros = tf.zeros()?;
    if let Some(z) = zeros
        .iter()
        .find(|z| (z.norm() - 1.0).abs() < UNIT_CIRCLE_GUARD)
    {
        return Err(Error::Indeterminate { modulus: z.norm() });
    }
    Ok(zeros.iter().all(|z| z.norm() < 1.0))
}

/// Roots of `c_0 x^d + c_1 x^{d−1} + … + c_d` from the companion matrix,
/// polished by Newton steps on the original polynomial. Trailing zero
/// coefficients contribute roots at the origin.
pub fn polynomial_roots(c: &[f64]) -> Result<Vec<Complex64>> {
    let lead = c.iter().position(|&v| v != 0.0).unwrap_or(c.len());
    let c = &c[lead..];
    if c.len() <= 1 {
        return Ok(Vec::new());
    }
    let trailing = c.iter().rev().take_while(|&&v| v == 0.0).count();
    let core = &c[..c.len() - trailing];
    let mut roots = vec![Complex64::new(0.0, 0.0); trailing];
    let d = core.len() - 1;
    if d == 0 {
        return Ok(roots);
    }
    let monic: Vec<f64> = core.iter().map(|v| v / core[0]).collect();
    let mut companion = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        companion[(0, j)] = -monic[j + 1];
    }
    for i in 1..d {
        companion[(i, i - 1)] = 1.0;
    }
    let eig = companion.complex_eigenvalues();
    for z0 in eig.iter() {
        let z = polish(&monic, *z0);
        let r = relative_residual(&monic, z);
        if !(r < ROOT_RESIDUAL) {
            return Err(Error::Numeric(format!(
                "root near {} + {}j has relative residual {r:e}",
                z.re, z.im
            )));
        }
        roots.push(z);
    }
    Ok(roots)
}

fn eval(monic: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in monic {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn relative_residual(monic: &[f64], z: Complex64) -> f64 {
    let scale: f64 = monic
        .iter()
        .rev()
        .enumerate()
        .map(|(k, c)| c.abs() * z.norm().powi(k as i32))
        .sum();
    eval(monic, z).0.norm() / scale.max(f64::MIN_POSITIVE)
}

fn polish(monic: &[f64], mut z: Complex64) -> Complex64 {
    let mut best = (relative_residual(monic, z), z);
    for _ in 0..50 {
        let (p, dp) = eval(monic, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        z -= p / dp;
        let r = relative_residual(monic, z);
        if r < best.0 {
            best = (r, z);
        }
        if r < 1e-15 {
            break;
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn tf(b: &[f64], a: &[f64]) -> TransferFunction {
        TransferFunction::new(b.to_vec(), a.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_gain() {
        let one = tf(&[1.0], &[]);
        assert_eq!(rate_change_roots(&one).unwrap(), 0.0);
        assert!(rate_change_integral(&one, 1024).unwrap().value.abs() < 1e-12);
        assert!(is_minimum_phase(&one).unwrap());

        let three = tf(&[3.0], &[]);
        assert!((rate_change_roots(&three).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((rate_change_integral(&three, 1024).unwrap().value - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_zero_examples() {
        let outside = tf(&[1.0, -2.0], &[]);
        assert!((rate_change_roots(&outside).unwrap() - LN_2).abs() < 1e-12);
        assert!((rate_change_integral(&outside, 1024).unwrap().value - LN_2).abs() < 1e-8);
        assert!(!is_minimum_phase(&outside).unwrap());

        let inside = tf(&[1.0, -0.5], &[]);
        assert!(rate_change_roots(&inside).unwrap().abs() < 1e-15);
        assert!(rate_change_integral(&inside, 1024).unwrap().value.abs() < 1e-8);
        assert!(is_minimum_phase(&inside).unwrap());
    }

    #[test]
    fn poles_do_not_change_the_rate() {
        let g = tf(&[1.0, -2.0], &[0.5, -0.06]);
        let by_roots = rate_change_roots(&g).unwrap();
        let by_integral = rate_change_integral(&g, 1024).unwrap().value;
        assert!((by_roots - LN_2).abs() < 1e-12);
        assert!((by_integral - LN_2).abs() < 1e-8);
    }

    #[test]
    fn unit_circle_zero_rejected() {
        let g = tf(&[1.0, 1.0], &[]);
        assert!(matches!(
            rate_change_integral(&g, 1024),
            Err(Error::UnitCircleZero { .. })
        ));
        assert!(matches!(is_minimum_phase(&g), Err(Error::Indeterminate { .. })));
    }

    #[test]
    fn unstable_rejected() {
        assert!(TransferFunction::new(vec![1.0], vec![1.5]).is_err());
        assert!(TransferFunction::new(vec![0.0, 1.0], vec![]).is_err());
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (z − 2)(z + 0.5)(z² + 1) = z⁴ − 1.5z³ + 0z² − 1.5z − 1
        let r = polynomial_roots(&[1.0, -1.5, 0.0, -1.5, -1.0]).unwrap();
        let mut mods: Vec<f64> = r.iter().map(|z| z.norm()).collect();
        mods.sort_by(f64::total_cmp);
        for (m, e) in mods.iter().zip([0.5, 1.0, 1.0, 2.0]) {
            assert!((m - e).abs() < 1e-10);
        }
        let with_origin = polynomial_roots(&[1.0, -3.0, 0.0]).unwrap();
        assert_eq!(with_origin.len(), 2);
        assert!(with_origin.iter().any(|z| z.norm() == 0.0));
    }
}
