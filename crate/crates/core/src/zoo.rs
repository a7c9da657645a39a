//! Constructors for the standard example systems.
//!
//! Fixed-point filters use a two's-complement style model: inputs and
//! outputs live in `ℤ_q` with `q = 2^k`, coefficients are fixed-point
//! numbers with `f` fractional bits stored as raw integers in `ℤ_{q·2^f}`,
//! and the quantizer maps a raw intermediate value back to `ℤ_q`. With
//! `s = 2^f`, the embedding of an input `x` is `x·s` and the fixed-point one
//! is the raw value `s`.

use std::collections::BTreeMap;

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::alphabet::{rational_label, Alphabet, Symbol};
use crate::error::{validation, Error, Result};
use crate::system::{cascade, SystemSpec};

/// Feedforward `b_0..b_N` and feedback `a_1..a_M` coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCoeffs<T = Symbol> {
    pub b: Vec<T>,
    pub a: Vec<T>,
}

impl<T> FilterCoeffs<T> {
    pub fn new(b: Vec<T>, a: Vec<T>) -> Result<Self> {
        if b.is_empty() {
            return Err(validation("at least one feedforward coefficient is required"));
        }
        Ok(Self { b, a })
    }

    /// `N`.
    pub fn input_memory(&self) -> usize {
        self.b.len() - 1
    }

    /// `M`.
    pub fn output_memory(&self) -> usize {
        self.a.len()
    }
}

/// `Y_n = Σ b_k X_{n−k} + Σ a_l Y_{n−l}` in the alphabet's ring.
pub fn ring_linear_filter(alphabet: &Alphabet, coeffs: &FilterCoeffs) -> Result<SystemSpec> {
    let ring = alphabet
        .ring()
        .ok_or_else(|| validation("ring filters need an alphabet with a ring"))?
        .clone();
    if let Some(c) = coeffs.b.iter().chain(&coeffs.a).find(|&&c| !alphabet.contains(c)) {
        return Err(validation(format!("coefficient {c} is not an alphabet element")));
    }
    let (n, m) = (coeffs.input_memory(), coeffs.output_memory());
    let (b, a) = (coeffs.b.clone(), coeffs.a.clone());
    SystemSpec::from_fn(alphabet.clone(), alphabet.clone(), n, m, move |xs, ys| {
        let mut acc = ring.zero;
        for (k, &bk) in b.iter().enumerate() {
            acc = ring.add[acc][ring.mul[bk][xs[n - k]]];
        }
        for (l, &al) in a.iter().enumerate() {
            acc = ring.add[acc][ring.mul[al][ys[m - 1 - l]]];
        }
        acc
    })
}

/// The XOR filter `Y_n = X_n ⊕ X_{n−1}` over `ℤ₂`.
pub fn xor_filter() -> SystemSpec {
    let z2 = Alphabet::modular(2).expect("ℤ₂");
    ring_linear_filter(&z2, &FilterCoeffs { b: vec![1, 1], a: vec![] }).expect("valid filter")
}

/// Word layout of a fixed-point filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    /// `k`: the sample alphabet is `ℤ_{2^k}`.
    pub word_bits: u32,
    /// `f`: coefficients carry `f` fractional bits.
    pub frac_bits: u32,
}

const MAX_RAW_BITS: u32 = 20;

impl FixedPointFormat {
    pub fn new(word_bits: u32, frac_bits: u32) -> Result<Self> {
        if word_bits == 0 || word_bits + frac_bits > MAX_RAW_BITS {
            return Err(validation(format!(
                "fixed-point format needs 1 ≤ k and k + f ≤ {MAX_RAW_BITS}"
            )));
        }
        Ok(Self {
            word_bits,
            frac_bits,
        })
    }

    /// `q = 2^k`.
    pub fn modulus(&self) -> u64 {
        1 << self.word_bits
    }

    /// `s = 2^f`.
    pub fn scale(&self) -> u64 {
        1 << self.frac_bits
    }

    /// `q·s`, the size of the intermediate set.
    pub fn raw_modulus(&self) -> u64 {
        self.modulus() * self.scale()
    }

    /// Raw value of the fixed-point one.
    pub fn one(&self) -> u64 {
        self.scale()
    }

    pub fn embed(&self, x: Symbol) -> u64 {
        (x as u64 * self.scale()) % self.raw_modulus()
    }

    /// Raw representation of a rational coefficient, if exact.
    pub fn raw_from_value(&self, v: &BigRational) -> Result<u64> {
        let scaled = v * BigRational::from_integer(self.scale().into());
        if !scaled.is_integer() {
            return Err(validation(format!(
                "{v} is not representable with {} fractional bits",
                self.frac_bits
            )));
        }
        let qs = num::BigInt::from(self.raw_modulus());
        let raw = ((scaled.to_integer() % &qs) + &qs) % &qs;
        Ok(u64::try_from(raw).expect("raw value below q·s"))
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::modular(self.modulus() as usize).expect("positive modulus")
    }
}

/// A map from raw intermediate values `ℤ_{q·s}` to samples `ℤ_q` with
/// `Q(a + x·s) = Q(a) ⊕ x` for every `a` and `x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantizer {
    format: FixedPointFormat,
    map: Vec<Symbol>,
}

impl Quantizer {
    /// Drops the fractional bits.
    pub fn truncating(format: FixedPointFormat) -> Self {
        let map = (0..format.raw_modulus())
            .map(|p| (p >> format.frac_bits) as Symbol)
            .collect();
        Self { format, map }
    }

    /// Rounds half up, wrapping modulo `q`.
    pub fn rounding(format: FixedPointFormat) -> Self {
        let half = format.scale() / 2;
        let map = (0..format.raw_modulus())
            .map(|p| (((p + half) % format.raw_modulus()) >> format.frac_bits) as Symbol)
            .collect();
        Self { format, map }
    }

    /// A user-supplied map, checked exhaustively for compatibility.
    pub fn custom(format: FixedPointFormat, map: Vec<Symbol>) -> Result<Self> {
        if map.len() as u64 != format.raw_modulus() {
            return Err(validation(format!(
                "quantizer table has {} entries, expected {}",
                map.len(),
                format.raw_modulus()
            )));
        }
        let q = format.modulus() as Symbol;
        if let Some(v) = map.iter().find(|&&v| v >= q) {
            return Err(validation(format!("quantizer output {v} outside ℤ_{q}")));
        }
        let quant = Self { format, map };
        quant.check_compatibility()?;
        Ok(quant)
    }

    pub fn format(&self) -> FixedPointFormat {
        self.format
    }

    pub fn apply(&self, raw: u64) -> Symbol {
        self.map[(raw % self.format.raw_modulus()) as usize]
    }

    /// Returns the first `(a, x)` with `Q(a + x·s) ≠ Q(a) ⊕ x` as an error.
    pub fn check_compatibility(&self) -> Result<()> {
        let fmt = self.format;
        let q = fmt.modulus() as Symbol;
        for a in 0..fmt.raw_modulus() {
            for x in 0..q {
                let lhs = self.apply(a + fmt.embed(x));
                let rhs = (self.apply(a) + x) % q;
                if lhs != rhs {
                    return Err(validation(format!(
                        "quantizer incompatible at (a = {a}, x = {x}): Q(a + x) = {lhs}, Q(a) ⊕ x = {rhs}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Where the quantizer sits in a fixed-point filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// `Y_n = ⊕ Q(b_k X_{n−k}) ⊕ ⊕ Q(a_l Y_{n−l})`.
    AfterMultiply,
    /// `Y_n = Q(Σ b_k X_{n−k} + Σ a_l Y_{n−l})`.
    AfterAccumulate,
}

/// Fixed-point filter over `ℤ_{2^k}` with raw coefficients in `ℤ_{q·s}`.
pub fn fixed_point_filter(
    coeffs: &FilterCoeffs<u64>,
    quantizer: &Quantizer,
    placement: Placement,
) -> Result<SystemSpec> {
    let fmt = quantizer.format();
    quantizer.check_compatibility()?;
    let qs = fmt.raw_modulus();
    if let Some(c) = coeffs.b.iter().chain(&coeffs.a).find(|&&c| c >= qs) {
        return Err(validation(format!("raw coefficient {c} outside ℤ_{qs}")));
    }
    let alphabet = fmt.alphabet();
    let q = fmt.modulus() as Symbol;
    let (n, m) = (coeffs.input_memory(), coeffs.output_memory());
    let (b, a) = (coeffs.b.clone(), coeffs.a.clone());
    let quant = quantizer.clone();
    let terms = move |xs: &[Symbol], ys: &[Symbol]| {
        let fb = b.iter().enumerate().map(|(k, &bk)| bk * xs[n - k] as u64 % qs);
        let fa = a.iter().enumerate().map(|(l, &al)| al * ys[m - 1 - l] as u64 % qs);
        fb.chain(fa).collect::<Vec<u64>>()
    };
    match placement {
        Placement::AfterMultiply => {
            SystemSpec::from_fn(alphabet.clone(), alphabet, n, m, move |xs, ys| {
                terms(xs, ys)
                    .into_iter()
                    .fold(0, |acc, p| (acc + quant.apply(p)) % q)
            })
        }
        Placement::AfterAccumulate => {
            SystemSpec::from_fn(alphabet.clone(), alphabet, n, m, move |xs, ys| {
                quant.apply(terms(xs, ys).into_iter().fold(0, |acc, p| (acc + p) % qs))
            })
        }
    }
}

/// How the multiplier forms `X_n X_{n−1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Product {
    /// Exact multiplication of the rational symbol labels.
    Rational,
    /// `table[i][j]` is the label of the product of symbols `i` and `j`.
    Table(Vec<Vec<String>>),
}

/// `Y_n = X_n X_{n−1}`; the output alphabet is the set of products that
/// occur, ordered by value (rational mode) or first appearance (table).
pub fn multiplier_system(alphabet: &Alphabet, product: &Product) -> Result<SystemSpec> {
    let nx = alphabet.len();
    let labels: Vec<Vec<String>> = match product {
        Product::Rational => {
            let vals = alphabet
                .rational_values()
                .ok_or_else(|| validation("rational multiplier needs numeric symbol labels"))?;
            let mut rows = Vec::with_capacity(nx);
            for u in &vals {
                rows.push(vals.iter().map(|v| rational_label(&(u * v))).collect());
            }
            rows
        }
        Product::Table(t) => {
            if t.len() != nx || t.iter().any(|r| r.len() != nx) {
                return Err(validation(format!("product table must be {nx}x{nx}")));
            }
            t.clone()
        }
    };
    let mut outputs: Vec<String> = Vec::new();
    for l in labels.iter().flatten() {
        if !outputs.contains(l) {
            outputs.push(l.clone());
        }
    }
    if matches!(product, Product::Rational) {
        let mut keyed: BTreeMap<BigRational, String> = BTreeMap::new();
        for l in outputs.drain(..) {
            let v = crate::alphabet::parse_rational(&l).expect("labels were produced from values");
            keyed.insert(v, l);
        }
        outputs = keyed.into_values().collect();
    }
    let out_alphabet = Alphabet::new(outputs.clone())?;
    let index: Vec<Vec<Symbol>> = labels
        .iter()
        .map(|r| {
            r.iter()
                .map(|l| out_alphabet.index_of(l).expect("output closure"))
                .collect()
        })
        .collect();
    SystemSpec::from_fn(alphabet.clone(), out_alphabet, 1, 0, move |xs, _| index[xs[1]][xs[0]])
}

/// Memoryless system `Y_n = g(X_n)`.
pub fn static_map(input: &Alphabet, output: &Alphabet, g: &[Symbol]) -> Result<SystemSpec> {
    if g.len() != input.len() {
        return Err(validation(format!(
            "static map has {} entries for {} input symbols",
            g.len(),
            input.len()
        )));
    }
    SystemSpec::from_table(input.clone(), output.clone(), 0, 0, g.to_vec())
}

/// `Y_n = X_n²` on an alphabet with rational labels; the output alphabet
/// is the sorted set of squares.
pub fn squarer(alphabet: &Alphabet) -> Result<SystemSpec> {
    let vals = alphabet
        .rational_values()
        .ok_or_else(|| validation("squarer needs numeric symbol labels"))?;
    let squares: BTreeMap<BigRational, ()> = vals.iter().map(|v| (v * v, ())).collect();
    let keys: Vec<BigRational> = squares.into_keys().collect();
    let output = Alphabet::new(keys.iter().map(rational_label))?;
    let g: Vec<Symbol> = vals
        .iter()
        .map(|v| keys.iter().position(|k| *k == v * v).expect("square present"))
        .collect();
    static_map(alphabet, &output, &g)
}

/// Static nonlinearity `g` followed by a filter over `g`'s output alphabet.
pub fn hammerstein_system(g: &SystemSpec, filter: &SystemSpec) -> Result<SystemSpec> {
    if g.input_memory() != 0 || g.output_memory() != 0 || g.table().is_none() {
        return Err(validation("the nonlinearity of a Hammerstein system must be static"));
    }
    if g.output_alphabet() != filter.input_alphabet() {
        return Err(validation(
            "filter input alphabet must equal the range alphabet of g",
        ));
    }
    cascade(g, filter)
}

/// `Y_n = Σ b_k X_{n−k} + Σ a_l Y_{n−l}` over the rationals. The alphabet
/// is infinite, so this filter is simulation-only and cannot be handed to
/// the exact analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFilter {
    coeffs: FilterCoeffs<BigRational>,
}

impl RationalFilter {
    pub fn new(coeffs: FilterCoeffs<BigRational>) -> Result<Self> {
        if coeffs.b.is_empty() {
            return Err(validation("at least one feedforward coefficient is required"));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &FilterCoeffs<BigRational> {
        &self.coeffs
    }

    /// Runs the filter from all-zero initial buffers.
    pub fn simulate(&self, x: &[BigRational]) -> Vec<BigRational> {
        let mut y: Vec<BigRational> = Vec::with_capacity(x.len());
        for n in 0..x.len() {
            let mut acc = BigRational::zero();
            for (k, bk) in self.coeffs.b.iter().enumerate() {
                if k <= n {
                    acc += bk * &x[n - k];
                }
            }
            for (l, al) in self.coeffs.a.iter().enumerate() {
                if l < n {
                    acc += al * &y[n - 1 - l];
                }
            }
            y.push(acc);
        }
        y
    }

    /// Inverts [`simulate`](Self::simulate); requires `b_0 ≠ 0`.
    pub fn invert(&self, y: &[BigRational]) -> Result<Vec<BigRational>> {
        let b0 = &self.coeffs.b[0];
        if b0.is_zero() {
            return Err(Error::Domain("b_0 = 0 has no inverse".into()));
        }
        let inv_b0 = BigRational::one() / b0;
        let mut x: Vec<BigRational> = Vec::with_capacity(y.len());
        for n in 0..y.len() {
            let mut acc = y[n].clone();
            for (k, bk) in self.coeffs.b.iter().enumerate().skip(1) {
                if k <= n {
                    acc -= bk * &x[n - k];
                }
            }
            for (l, al) in self.coeffs.a.iter().enumerate() {
                if l < n {
                    acc -= al * &y[n - 1 - l];
                }
            }
            x.push(acc * &inv_b0);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::{reconstruct, PartialInverse};
    use crate::system::{check_partial_invertibility, preimage_bound, SystemState};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn ring_filter_examples() {
        let xor = xor_filter();
        assert!(check_partial_invertibility(&xor).unwrap().invertible);

        let z4 = Alphabet::modular(4).unwrap();
        let double = ring_linear_filter(&z4, &FilterCoeffs { b: vec![2, 0], a: vec![] }).unwrap();
        assert!(!check_partial_invertibility(&double).unwrap().invertible);
        assert_eq!(preimage_bound(&double).unwrap(), 1.0);

        let z3 = Alphabet::modular(3).unwrap();
        let acc = ring_linear_filter(&z3, &FilterCoeffs { b: vec![1], a: vec![1] }).unwrap();
        assert!(check_partial_invertibility(&acc).unwrap().invertible);
        let y = acc.simulate(&[1, 2, 2, 0, 1], &acc.initial_state()).unwrap();
        assert_eq!(y, vec![1, 0, 2, 2, 0]);

        assert!(ring_linear_filter(&z3, &FilterCoeffs { b: vec![3], a: vec![] }).is_err());
    }

    #[test]
    fn unit_filter_is_identity() {
        let z5 = Alphabet::modular(5).unwrap();
        let f = ring_linear_filter(&z5, &FilterCoeffs { b: vec![1], a: vec![] }).unwrap();
        let id = SystemSpec::identity(z5);
        let x = vec![3, 1, 4, 1, 0, 2];
        assert_eq!(
            f.simulate(&x, &f.initial_state()).unwrap(),
            id.simulate(&x, &id.initial_state()).unwrap()
        );
    }

    #[test]
    fn quantizers_are_compatible() {
        for (k, f) in [(1, 0), (2, 1), (3, 2), (4, 3), (3, 0)] {
            let fmt = FixedPointFormat::new(k, f).unwrap();
            Quantizer::truncating(fmt).check_compatibility().unwrap();
            Quantizer::rounding(fmt).check_compatibility().unwrap();
        }
    }

    #[test]
    fn incompatible_quantizer_reports_pair() {
        let fmt = FixedPointFormat::new(2, 1).unwrap();
        // saturating instead of wrapping
        let map: Vec<Symbol> = (0..8).map(|p: usize| (p >> 1).min(2)).collect();
        let err = Quantizer::custom(fmt, map).unwrap_err();
        assert!(err.to_string().contains("(a = "), "{err}");
    }

    #[test]
    fn degenerate_quantizer_matches_ring_filter() {
        let fmt = FixedPointFormat::new(3, 0).unwrap();
        let quant = Quantizer::truncating(fmt);
        let coeffs = FilterCoeffs { b: vec![1u64, 3, 5], a: vec![7] };
        let ring_coeffs = FilterCoeffs { b: vec![1, 3, 5], a: vec![7] };
        let ring = ring_linear_filter(&fmt.alphabet(), &ring_coeffs).unwrap();
        for placement in [Placement::AfterMultiply, Placement::AfterAccumulate] {
            let fp = fixed_point_filter(&coeffs, &quant, placement).unwrap();
            assert_eq!(fp.table(), ring.table());
        }
    }

    #[test]
    fn normalized_fixed_point_filters_invert() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in 1..=4u32 {
            for f in 0..=2u32 {
                let fmt = FixedPointFormat::new(k, f).unwrap();
                let qs = fmt.raw_modulus();
                for _ in 0..4 {
                    let n = rng.random_range(0..=2);
                    let m = rng.random_range(0..=1);
                    let mut b = vec![fmt.one()];
                    b.extend((0..n).map(|_| rng.random_range(0..qs)));
                    let a = (0..m).map(|_| rng.random_range(0..qs)).collect();
                    let coeffs = FilterCoeffs { b, a };
                    for quant in [Quantizer::truncating(fmt), Quantizer::rounding(fmt)] {
                        for placement in [Placement::AfterMultiply, Placement::AfterAccumulate] {
                            let sys = fixed_point_filter(&coeffs, &quant, placement).unwrap();
                            assert!(check_partial_invertibility(&sys).unwrap().invertible);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn unnormalized_gain_can_lose() {
        // b_0 = 2.0 on ℤ_4 with one fractional bit
        let fmt = FixedPointFormat::new(2, 1).unwrap();
        let b0 = fmt.raw_from_value(&r(2)).unwrap();
        let sys = fixed_point_filter(
            &FilterCoeffs { b: vec![b0], a: vec![] },
            &Quantizer::truncating(fmt),
            Placement::AfterMultiply,
        )
        .unwrap();
        assert!(!check_partial_invertibility(&sys).unwrap().invertible);
    }

    #[test]
    fn raw_from_value_wraps_negative() {
        let fmt = FixedPointFormat::new(3, 2).unwrap();
        assert_eq!(fmt.raw_from_value(&r(-1)).unwrap(), 32 - 4);
        assert_eq!(
            fmt.raw_from_value(&BigRational::new(3.into(), 4.into())).unwrap(),
            3
        );
        assert!(fmt.raw_from_value(&BigRational::new(1.into(), 8.into())).is_err());
    }

    #[test]
    fn multiplier_examples() {
        let a12 = Alphabet::from_integers(&[1, 2]).unwrap();
        let m = multiplier_system(&a12, &Product::Rational).unwrap();
        assert_eq!(m.output_alphabet().symbols(), ["1", "2", "4"]);
        assert!(check_partial_invertibility(&m).unwrap().invertible);

        let a01 = Alphabet::from_integers(&[0, 1]).unwrap();
        let m0 = multiplier_system(&a01, &Product::Rational).unwrap();
        let v = check_partial_invertibility(&m0).unwrap();
        assert!(!v.invertible);
        let w = v.witness.unwrap();
        assert_eq!((w.theta, w.x, w.x_prime), (0, 0, 1));

        let pm = Alphabet::from_integers(&[-1, 1]).unwrap();
        assert!(check_partial_invertibility(&multiplier_system(&pm, &Product::Rational).unwrap())
            .unwrap()
            .invertible);
    }

    #[test]
    fn multiplier_simulates_products() {
        let vals = [-2i64, -1, 1, 3];
        let alpha = Alphabet::from_integers(&vals).unwrap();
        let m = multiplier_system(&alpha, &Product::Rational).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<Symbol> = (0..50).map(|_| rng.random_range(0..4)).collect();
        let init = SystemState::history(vec![2], vec![]);
        let y = m.simulate(&x, &init).unwrap();
        let mut prev = 2;
        for (t, &xt) in x.iter().enumerate() {
            let expect = r(vals[xt] * vals[prev]);
            assert_eq!(m.output_alphabet().rational_value(y[t]).unwrap(), expect);
            prev = xt;
        }
    }

    #[test]
    fn table_multiplier_uses_labels() {
        let a = Alphabet::new(["a", "b"]).unwrap();
        let t = vec![
            vec!["p".to_string(), "q".to_string()],
            vec!["q".to_string(), "p".to_string()],
        ];
        let m = multiplier_system(&a, &Product::Table(t)).unwrap();
        assert_eq!(m.output_alphabet().symbols(), ["p", "q"]);
        assert!(check_partial_invertibility(&m).unwrap().invertible);
    }

    #[test]
    fn squarer_and_hammerstein() {
        let x = Alphabet::from_integers(&[-1, 0, 1]).unwrap();
        let sq = squarer(&x).unwrap();
        assert_eq!(sq.output_alphabet().symbols(), ["0", "1"]);
        assert_eq!(preimage_bound(&sq).unwrap(), 1.0);

        let v = sq.output_alphabet().clone();
        let ring_v = Alphabet::modular(2).unwrap();
        assert_eq!(v.symbols(), ring_v.symbols());
        let filt = ring_linear_filter(&ring_v, &FilterCoeffs { b: vec![1, 1], a: vec![] }).unwrap();
        // the squarer's output alphabet has no ring; rebuild it over ℤ₂
        let g = static_map(&x, &ring_v, &[1, 0, 1]).unwrap();
        let h = hammerstein_system(&g, &filt).unwrap();
        assert_eq!(preimage_bound(&h).unwrap(), 1.0);
        assert!(hammerstein_system(&sq, &filt).is_err());

        let neg = static_map(&x, &x, &[2, 1, 0]).unwrap();
        let z3 = Alphabet::modular(3).unwrap();
        let relabel = static_map(&x, &z3, &[2, 0, 1]).unwrap();
        let acc = ring_linear_filter(&z3, &FilterCoeffs { b: vec![1], a: vec![1] }).unwrap();
        let h2 = hammerstein_system(&cascade(&neg, &SystemSpec::identity(x.clone())).unwrap(), &acc);
        assert!(h2.is_err(), "a cascade is not a static map");
        let h3 = hammerstein_system(&relabel, &acc).unwrap();
        assert!(check_partial_invertibility(&h3).unwrap().invertible);
    }

    #[test]
    fn rational_filter_round_trip() {
        let f = RationalFilter::new(FilterCoeffs {
            b: vec![r(2), BigRational::new((-1).into(), 3.into())],
            a: vec![BigRational::new(1.into(), 2.into())],
        })
        .unwrap();
        let x: Vec<_> = [1, -4, 7, 0, 3].iter().map(|&v| r(v)).collect();
        let y = f.simulate(&x);
        assert_eq!(y[0], r(2));
        assert_eq!(f.invert(&y).unwrap(), x);
    }

    #[test]
    fn reconstruction_of_fixed_point_filter() {
        let fmt = FixedPointFormat::new(3, 2).unwrap();
        let sys = fixed_point_filter(
            &FilterCoeffs { b: vec![4, 9], a: vec![27] },
            &Quantizer::truncating(fmt),
            Placement::AfterAccumulate,
        )
        .unwrap();
        let inv = PartialInverse::new(&sys).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<Symbol> = (0..200).map(|_| rng.random_range(0..8)).collect();
        let init = sys.decode_state(rng.random_range(0..64));
        let y = sys.simulate(&x, &init).unwrap();
        assert_eq!(reconstruct(&inv, &y, &x[..1], Some(&init)).unwrap(), x);
    }
}
