//! Plug-in entropy-rate estimates from sample paths.

use std::collections::HashMap;

use serde::Serialize;

use crate::alphabet::Symbol;
use crate::error::{Error, Result};

use super::xlog2x;

/// Block-`n` plug-in estimates of `H̄X`, `H̄Y` and their difference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PluginEstimate {
    pub block_length: usize,
    pub input_rate: f64,
    pub output_rate: f64,
    pub loss: f64,
    /// `None` when the path holds at least `100 · |𝒳|^n` samples.
    pub warning: Option<String>,
}

/// Empirical `H(W_1^n)/n` from the overlapping `n`-grams of each path.
pub fn plugin_estimate(x: &[Symbol], y: &[Symbol], block: usize) -> Result<PluginEstimate> {
    if x.len() != y.len() {
        return Err(Error::Precondition(format!(
            "paths differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if block == 0 || block > x.len() {
        return Err(Error::Precondition(format!(
            "block length {block} must be in 1..={}",
            x.len()
        )));
    }
    let hx = block_rate(x, block);
    let hy = block_rate(y, block);
    let distinct = x.iter().chain(y).copied().max().map_or(1, |m| m + 1);
    let needed = 100f64 * (distinct as f64).powi(block as i32);
    let warning = ((x.len() as f64) < needed).then(|| {
        format!(
            "{} samples is below 100·{distinct}^{block} = {needed}; estimates are biased low",
            x.len()
        )
    });
    Ok(PluginEstimate {
        block_length: block,
        input_rate: hx,
        output_rate: hy,
        loss: hx - hy,
        warning,
    })
}

fn block_rate(path: &[Symbol], block: usize) -> f64 {
    let mut counts: HashMap<&[Symbol], u64> = HashMap::new();
    for w in path.windows(block) {
        *counts.entry(w).or_default() += 1;
    }
    let total = (path.len() - block + 1) as f64;
    let mut values: Vec<u64> = counts.into_values().collect();
    values.sort_unstable();
    -values
        .iter()
        .map(|&c| xlog2x(c as f64 / total))
        .sum::<f64>()
        / block as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;
    use crate::source::{make_iid, PathStart};

    #[test]
    fn fair_coin_estimate_near_one_bit() {
        let src = make_iid(Alphabet::modular(2).unwrap(), &[0.5, 0.5]).unwrap();
        let x = src.sample_path(200_000, 7, PathStart::Stationary).unwrap();
        let y = vec![0; x.len()];
        let e = plugin_estimate(&x, &y, 4).unwrap();
        assert!((e.input_rate - 1.0).abs() < 0.01);
        assert_eq!(e.output_rate, 0.0);
        assert!(e.warning.is_none());
    }

    #[test]
    fn short_path_warns() {
        let e = plugin_estimate(&[0, 1, 1, 0], &[0, 1, 1, 0], 2).unwrap();
        assert!(e.warning.is_some());
        assert!(plugin_estimate(&[0], &[0, 1], 1).is_err());
        assert!(plugin_estimate(&[0, 1], &[0, 1], 3).is_err());
    }
}
