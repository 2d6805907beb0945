use serde::Serialize;

use super::un::sigma_sq;
use crate::construction::{y_i_blocks, y_law_for_blocks};
use crate::error::{Error, Result};
use crate::numeric::Neumaier;

/// Indices `i` in `1..n` sharing one set of qualifying blocks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LindebergGroup {
    pub blocks: Vec<u32>,
    pub first_i: u64,
    pub count: u64,
    /// `E[Y² ; Y² > ε²σ²n]` for one index of the group.
    pub truncated_moment: f64,
}

/// Runs of `i ∈ [1, n)` over which `y_i_blocks(i, n)` is constant.
pub fn lindeberg_groups(n: u64) -> Vec<(Vec<u32>, u64, u64)> {
    let mut out: Vec<(Vec<u32>, u64, u64)> = Vec::new();
    let mut i = 1;
    while i < n {
        let blocks = y_i_blocks(i, n);
        // the set changes only when i + 1 reaches the next p_k
        let next = (i..n)
            .find(|&j| y_i_blocks(j, n).len() != blocks.len())
            .unwrap_or(n);
        out.push((blocks, i, next - i));
        i = next;
    }
    out
}

/// `(1/(nσ²)) Σ_{i=1}^{n−1} E[Y_i(n)² ; Y_i(n)² > ε²σ²n]`, with the
/// per-group breakdown.
pub fn lindeberg_detailed(n: u64, eps: f64) -> Result<(f64, Vec<LindebergGroup>)> {
    if n < 5 || !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("lindeberg needs n >= 5 and eps > 0 (n = {n}, eps = {eps})")));
    }
    let s2 = sigma_sq();
    let threshold = eps * eps * s2 * n as f64;
    let mut total = Neumaier::new();
    let mut groups = Vec::new();
    for (blocks, first_i, count) in lindeberg_groups(n) {
        let law = y_law_for_blocks(&blocks)?;
        let mut acc = Neumaier::new();
        for (y, p) in law.points() {
            let y2 = (y as f64) * (y as f64);
            if y2 > threshold {
                acc.add(y2 * p);
            }
        }
        let truncated_moment = acc.value();
        total.add(truncated_moment * count as f64);
        groups.push(LindebergGroup {
            blocks,
            first_i,
            count,
            truncated_moment,
        });
    }
    Ok((total.value() / (n as f64 * s2), groups))
}

pub fn lindeberg(n: u64, eps: f64) -> Result<f64> {
    Ok(lindeberg_detailed(n, eps)?.0)
}
