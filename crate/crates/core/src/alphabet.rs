//! Finite alphabets with optional ring structure.
//!
//! Symbols are referred to by their index in the alphabet's ordered symbol
//! list. Labels are free-form strings; alphabets whose labels parse as
//! rationals (`"3"`, `"-1"`, `"1/2"`) can be used by the arithmetic
//! constructors in [`crate::zoo`].

use std::collections::HashSet;
use std::sync::Arc;

use num::{BigInt, BigRational};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Index of a symbol inside its alphabet.
pub type Symbol = usize;

/// Addition and multiplication tables over the symbol indices of an alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ring {
    pub add: Vec<Vec<Symbol>>,
    pub mul: Vec<Vec<Symbol>>,
    pub zero: Symbol,
    pub one: Symbol,
}

#[derive(Debug, PartialEq, Eq)]
struct Inner {
    symbols: Vec<String>,
    ring: Option<Ring>,
}

/// An ordered set of distinct symbol labels, optionally carrying a ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    inner: Arc<Inner>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(validation("alphabet must contain at least one symbol"));
        }
        let mut seen = HashSet::new();
        for s in &symbols {
            if !seen.insert(s.as_str()) {
                return Err(validation(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Self {
            inner: Arc::new(Inner {
                symbols,
                ring: None,
            }),
        })
    }

    /// Alphabet with explicit ring tables; the ring axioms are checked
    /// exhaustively.
    pub fn with_ring<S: Into<String>>(
        symbols: impl IntoIterator<Item = S>,
        ring: Ring,
    ) -> Result<Self> {
        let plain = Self::new(symbols)?;
        check_ring(plain.len(), &ring)?;
        Ok(Self {
            inner: Arc::new(Inner {
                symbols: plain.inner.symbols.clone(),
                ring: Some(ring),
            }),
        })
    }

    /// The residues `0..q` with modular addition and multiplication.
    pub fn modular(q: usize) -> Result<Self> {
        if q == 0 {
            return Err(validation("modulus must be positive"));
        }
        let add = (0..q).map(|i| (0..q).map(|j| (i + j) % q).collect()).collect();
        let mul = (0..q).map(|i| (0..q).map(|j| (i * j) % q).collect()).collect();
        Self::with_ring(
            (0..q).map(|i| i.to_string()),
            Ring {
                add,
                mul,
                zero: 0,
                one: 1 % q,
            },
        )
    }

    /// Alphabet whose labels are the given integers, in the given order.
    pub fn from_integers(values: &[i64]) -> Result<Self> {
        Self::new(values.iter().map(|v| v.to_string()))
    }

    pub fn len(&self) -> usize {
        self.inner.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.inner.symbols
    }

    pub fn label(&self, s: Symbol) -> &str {
        &self.inner.symbols[s]
    }

    pub fn index_of(&self, label: &str) -> Option<Symbol> {
        self.inner.symbols.iter().position(|s| s == label)
    }

    pub fn contains(&self, s: Symbol) -> bool {
        s < self.len()
    }

    pub fn ring(&self) -> Option<&Ring> {
        self.inner.ring.as_ref()
    }

    /// Symbol used to fill default initial buffers: the ring zero when a
    /// ring is present, otherwise the first symbol.
    pub fn zero_symbol(&self) -> Symbol {
        self.ring().map_or(0, |r| r.zero)
    }

    pub fn add(&self, a: Symbol, b: Symbol) -> Option<Symbol> {
        self.ring().map(|r| r.add[a][b])
    }

    pub fn mul(&self, a: Symbol, b: Symbol) -> Option<Symbol> {
        self.ring().map(|r| r.mul[a][b])
    }

    /// Returns `q` if this alphabet is exactly ℤ_q: symbol `i` is the
    /// residue `i` and both tables are the modular ones.
    pub fn cyclic_modulus(&self) -> Option<usize> {
        let ring = self.ring()?;
        let q = self.len();
        for i in 0..q {
            if self.label(i) != i.to_string() {
                return None;
            }
            for j in 0..q {
                if ring.add[i][j] != (i + j) % q || ring.mul[i][j] != (i * j) % q {
                    return None;
                }
            }
        }
        Some(q)
    }

    /// Parses the label of `s` as an exact rational (`"7"`, `"-1"`, `"3/4"`).
    pub fn rational_value(&self, s: Symbol) -> Option<BigRational> {
        parse_rational(self.label(s))
    }

    /// Rational values of every symbol; `None` if any label does not parse.
    pub fn rational_values(&self) -> Option<Vec<BigRational>> {
        (0..self.len()).map(|s| self.rational_value(s)).collect()
    }
}

pub fn parse_rational(label: &str) -> Option<BigRational> {
    let label = label.trim();
    match label.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d == BigInt::from(0) {
                return None;
            }
            Some(BigRational::new(n, d))
        }
        None => label.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

/// Canonical label of a rational: `"p"` for integers, `"p/q"` otherwise.
pub fn rational_label(v: &BigRational) -> String {
    if v.is_integer() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

fn check_ring(q: usize, ring: &Ring) -> Result<()> {
    let square = |t: &Vec<Vec<Symbol>>, name: &str| -> Result<()> {
        if t.len() != q || t.iter().any(|row| row.len() != q) {
            return Err(validation(format!("{name} table must be {q}x{q}")));
        }
        if t.iter().flatten().any(|&v| v >= q) {
            return Err(validation(format!("{name} table is not closed over the alphabet")));
        }
        Ok(())
    };
    square(&ring.add, "add")?;
    square(&ring.mul, "mul")?;
    if ring.zero >= q || ring.one >= q {
        return Err(validation("ring zero/one must be alphabet indices"));
    }
    for a in 0..q {
        if ring.add[a][ring.zero] != a || ring.add[ring.zero][a] != a {
            return Err(validation(format!("zero is not an additive identity for symbol {a}")));
        }
        if ring.mul[a][ring.one] != a || ring.mul[ring.one][a] != a {
            return Err(validation(format!("one is not a multiplicative identity for symbol {a}")));
        }
        if !(0..q).any(|b| ring.add[a][b] == ring.zero) {
            return Err(validation(format!("symbol {a} has no additive inverse")));
        }
        for b in 0..q {
            if ring.add[a][b] != ring.add[b][a] {
                return Err(validation(format!("addition not commutative at ({a}, {b})")));
            }
            for c in 0..q {
                if ring.add[ring.add[a][b]][c] != ring.add[a][ring.add[b][c]] {
                    return Err(validation(format!(
                        "addition not associative at ({a}, {b}, {c})"
                    )));
                }
            }
        }
    }
    Ok(())
}
