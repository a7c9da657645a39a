//! Information loss in finite-memory deterministic systems over finite
//! alphabets.
//!
//! A system computes `Y_n = f(X_{n−N}^n, Y_{n−M}^{n−1})` from a stationary
//! Markov input `X`. The crate builds such systems, decides partial
//! invertibility, reconstructs inputs, and computes exact (or exactly
//! bracketed) information-loss rates `H̄(X) − H̄(Y)`.

pub mod alphabet;
pub mod checks;
pub mod entropy;
pub mod error;
pub mod filter_analysis;
pub mod instances;
pub mod reconstruction;
pub mod source;
pub mod system;
pub mod zoo;

pub use alphabet::{Alphabet, Ring, Symbol};
pub use error::{Error, Result};
pub use source::{make_iid, MarkovSource, PathStart};
pub use system::{cascade, check_partial_invertibility, preimage_bound, SystemSpec, SystemState};
