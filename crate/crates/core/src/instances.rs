//! Random problem instances for property tests and experiment suites.
//!
//! Sources draw each transition row from Dirichlet(1); update tables are
//! drawn uniformly over all maps. All generators are driven by a caller
//! supplied RNG so that runs are reproducible from a seed.

use num::complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;

use crate::alphabet::{Alphabet, Symbol};
use crate::error::{Error, Result};
use crate::filter_analysis::TransferFunction;
use crate::source::{make_iid, MarkovSource};
use crate::system::SystemSpec;
use crate::zoo::{fixed_point_filter, FilterCoeffs, FixedPointFormat, Placement, Quantizer};

const MAX_REJECTIONS: usize = 1000;

/// A Dirichlet(1) probability vector of length `k`.
pub fn random_pmf<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// Markov source with Dirichlet(1) rows, redrawn until regular.
pub fn random_markov_source<R: Rng + ?Sized>(
    rng: &mut R,
    alphabet: &Alphabet,
) -> Result<MarkovSource> {
    let k = alphabet.len();
    for _ in 0..MAX_REJECTIONS {
        let rows = (0..k).map(|_| random_pmf(rng, k)).collect();
        if let Ok(src) = MarkovSource::new(alphabet.clone(), rows) {
            return Ok(src);
        }
    }
    Err(Error::Numeric("no regular Markov source drawn".into()))
}

/// iid source with a Dirichlet(1) marginal.
pub fn random_iid_source<R: Rng + ?Sized>(rng: &mut R, alphabet: &Alphabet) -> Result<MarkovSource> {
    let pmf = random_pmf(rng, alphabet.len());
    make_iid(alphabet.clone(), &pmf)
}

/// Table system with every entry uniform over the output alphabet.
pub fn random_table_system<R: Rng + ?Sized>(
    rng: &mut R,
    input: &Alphabet,
    output: &Alphabet,
    n: usize,
    m: usize,
) -> Result<SystemSpec> {
    let size = input.len().pow(n as u32 + 1) * output.len().pow(m as u32);
    let table: Vec<Symbol> = (0..size).map(|_| rng.random_range(0..output.len())).collect();
    SystemSpec::from_table(input.clone(), output.clone(), n, m, table)
}

/// Table system whose static view `f_θ` is a uniformly drawn injection for
/// every `θ`. Needs `|𝒴| ≥ |𝒳|`.
pub fn random_invertible_system<R: Rng + ?Sized>(
    rng: &mut R,
    input: &Alphabet,
    output: &Alphabet,
    n: usize,
    m: usize,
) -> Result<SystemSpec> {
    let (nx, ny) = (input.len(), output.len());
    if ny < nx {
        return Err(Error::Precondition(
            "an injective update needs at least as many outputs as inputs".into(),
        ));
    }
    let n_in = nx.pow(n as u32);
    let n_out = ny.pow(m as u32);
    let mut table = vec![0; n_in * nx * n_out];
    for xin in 0..n_in {
        for yout in 0..n_out {
            let mut pool: Vec<Symbol> = (0..ny).collect();
            for x in 0..nx {
                let pick = rng.random_range(0..pool.len());
                let y = pool.swap_remove(pick);
                table[(xin * nx + x) * n_out + yout] = y;
            }
        }
    }
    SystemSpec::from_table(input.clone(), output.clone(), n, m, table)
}

/// Fixed-point filter with `b_0 = 1` and uniformly drawn raw coefficients.
pub fn random_fixed_point_filter<R: Rng + ?Sized>(
    rng: &mut R,
    format: FixedPointFormat,
    n: usize,
    m: usize,
    quantizer: &Quantizer,
    placement: Placement,
) -> Result<(FilterCoeffs<u64>, SystemSpec)> {
    let qs = format.raw_modulus();
    let mut b = vec![format.one()];
    b.extend((0..n).map(|_| rng.random_range(0..qs)));
    let a = (0..m).map(|_| rng.random_range(0..qs)).collect();
    let coeffs = FilterCoeffs { b, a };
    let sys = fixed_point_filter(&coeffs, quantizer, placement)?;
    Ok((coeffs, sys))
}

/// Stable real filter with numerator and denominator degrees at most
/// `max_degree`, every zero and pole at least `margin` away from the unit
/// circle and every pole inside it.
pub fn random_stable_filter<R: Rng + ?Sized>(
    rng: &mut R,
    max_degree: usize,
    margin: f64,
) -> Result<TransferFunction> {
    let zero_radius = |rng: &mut R| {
        if rng.random_bool(0.5) {
            rng.random_range(0.05..1.0 - margin)
        } else {
            rng.random_range(1.0 + margin..2.5)
        }
    };
    let pole_radius = |rng: &mut R| rng.random_range(0.0..1.0 - margin);
    let (nz, np) = (rng.random_range(0..=max_degree), rng.random_range(0..=max_degree));
    let zeros = random_roots(rng, nz, zero_radius);
    let poles = random_roots(rng, np, pole_radius);
    let gain = rng.random_range(0.5..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let b: Vec<f64> = expand(&zeros).into_iter().map(|c| gain * c).collect();
    let a: Vec<f64> = expand(&poles).into_iter().skip(1).map(|c| -c).collect();
    TransferFunction::new(b, a)
}

/// `degree` roots closed under conjugation.
fn random_roots<R: Rng + ?Sized>(
    rng: &mut R,
    degree: usize,
    mut radius: impl FnMut(&mut R) -> f64,
) -> Vec<Complex64> {
    let mut roots = Vec::with_capacity(degree);
    while roots.len() < degree {
        let r = radius(rng);
        if degree - roots.len() >= 2 && rng.random_bool(0.5) {
            let z = Complex64::from_polar(r, rng.random_range(0.0..std::f64::consts::PI));
            roots.push(z);
            roots.push(z.conj());
        } else {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            roots.push(Complex64::new(sign * r, 0.0));
        }
    }
    roots
}

/// Coefficients of `Π (1 − z_i w)` in increasing powers of `w`.
fn expand(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for z in roots {
        let mut next = c.clone();
        next.push(Complex64::new(0.0, 0.0));
        for (k, ck) in c.iter().enumerate() {
            next[k + 1] -= ck * z;
        }
        c = next;
    }
    c.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_analysis::is_minimum_phase;
    use crate::system::check_partial_invertibility;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pmf_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..6 {
            let p = random_pmf(&mut rng, k);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn invertible_generator_is_invertible() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let nx = rng.random_range(1..=3);
            let ny = rng.random_range(nx..=3);
            let x = Alphabet::modular(nx).unwrap();
            let y = Alphabet::modular(ny).unwrap();
            let (n, m) = (rng.random_range(0..=2), rng.random_range(0..=2));
            let s = random_invertible_system(&mut rng, &x, &y, n, m).unwrap();
            assert!(check_partial_invertibility(&s).unwrap().invertible);
        }
    }

    #[test]
    fn stable_filters_respect_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let tf = random_stable_filter(&mut rng, 6, 0.05).unwrap();
            for p in tf.poles().unwrap() {
                assert!(p.norm() < 0.95 + 1e-9);
            }
            for z in tf.zeros().unwrap() {
                assert!((z.norm() - 1.0).abs() > 0.05 - 1e-6);
            }
            is_minimum_phase(&tf).unwrap();
        }
    }

    #[test]
    fn expand_matches_product() {
        // (1 − 2w)(1 + 0.5w) = 1 − 1.5w − w²
        let c = expand(&[Complex64::new(2.0, 0.0), Complex64::new(-0.5, 0.0)]);
        assert_eq!(c, vec![1.0, -1.5, -1.0]);
    }
}
