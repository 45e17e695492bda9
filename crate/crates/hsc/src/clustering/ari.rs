//! Adjusted Rand Index (Hubert-Arabie).

use std::collections::HashMap;

use crate::error::{Error, Result};

fn choose2(x: u64) -> f64 {
    (x * x.saturating_sub(1)) as f64 / 2.0
}

/// Chance-corrected agreement of two partitions. Returns 0 when the index is
/// degenerate (expected index equals its maximum, e.g. both partitions trivial).
pub fn adjusted_rand_index(z1: &[usize], z2: &[usize]) -> Result<f64> {
    if z1.len() != z2.len() {
        return Err(Error::LengthMismatch { expected: z1.len(), got: z2.len() });
    }
    let n = z1.len() as u64;
    let mut table: HashMap<(usize, usize), u64> = HashMap::new();
    let mut a: HashMap<usize, u64> = HashMap::new();
    let mut b: HashMap<usize, u64> = HashMap::new();
    for (&x, &y) in z1.iter().zip(z2) {
        *table.entry((x, y)).or_default() += 1;
        *a.entry(x).or_default() += 1;
        *b.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = a.values().map(|&c| choose2(c)).sum();
    let sb: f64 = b.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return Ok(0.0);
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return Ok(0.0);
    }
    Ok((index - expected) / (max - expected))
}
