use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest block index supported (`p_k²` must fit in `u128`).
pub const MAX_K: u32 = 62;

/// `log2(k)` when it is an integer.
pub fn exact_log2(k: u64) -> Option<u32> {
    k.is_power_of_two().then(|| k.trailing_zeros())
}

/// `k * log2(k)`, the recurring normalizer of the block variances.
pub fn k_log_k(k: u32) -> f64 {
    k as f64 * (k as f64).log2()
}

/// `n < 2^e` without overflow.
pub fn lt_pow2(n: u64, e: u64) -> bool {
    e >= 64 || n < (1u64 << e)
}

/// `p_k`: `2^k` for even `k`, `2^{k-1} + 1` for odd `k`.
pub fn p_k(k: u32) -> u64 {
    if k % 2 == 0 {
        1u64 << k
    } else {
        (1u64 << (k - 1)) + 1
    }
}

/// Squared amplitude `α_k² = 1 / (p_k² · k · log2 k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AlphaSq {
    pub k: u32,
    pub p_sq: u128,
}

impl AlphaSq {
    pub fn value(&self) -> f64 {
        1.0 / (self.p_sq as f64 * k_log_k(self.k))
    }

    /// Exact rational value when `log2 k` is an integer.
    pub fn exact(&self) -> Option<BigRational> {
        let lg = exact_log2(self.k as u64)?;
        let denom = BigInt::from(self.p_sq) * BigInt::from(self.k) * BigInt::from(lg);
        Some(BigRational::new(BigInt::one(), denom))
    }

    /// `p_k² α_k² = 1 / (k log2 k)`.
    pub fn scaled_variance(&self) -> f64 {
        1.0 / k_log_k(self.k)
    }
}

impl std::fmt::Display for AlphaSq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.exact() {
            Some(q) => write!(f, "{q}"),
            None => write!(f, "1/({}*{}*log2({}))", self.p_sq, self.k, self.k),
        }
    }
}

/// Parameters of block `k` of the construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConstructionParams {
    pub k: u32,
    pub p_k: u64,
    /// `log2 d_k = k²`.
    pub d_log2: u32,
    pub alpha_sq: AlphaSq,
}

impl ConstructionParams {
    /// `d_k = 2^{k²}` when it fits in 128 bits.
    pub fn d_k(&self) -> Option<u128> {
        (self.d_log2 < 128).then(|| 1u128 << self.d_log2)
    }

    /// `d_k <= n`.
    pub fn d_at_most(&self, n: u64) -> bool {
        !lt_pow2(n, self.d_log2 as u64)
    }
}

/// Parameters of block `k >= 2`.
pub fn params(k: u32) -> Result<ConstructionParams> {
    if k <= 1 {
        return Err(Error::AlphaUndefined(k));
    }
    if k > MAX_K {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds the supported maximum {MAX_K}")));
    }
    let p = p_k(k);
    Ok(ConstructionParams {
        k,
        p_k: p,
        d_log2: k * k,
        alpha_sq: AlphaSq {
            k,
            p_sq: (p as u128) * (p as u128),
        },
    })
}

/// The index sets `I_n` and `J_n` at a given `n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexWindow {
    pub n: u64,
    pub i_set: Vec<u32>,
    pub j_set: Vec<u32>,
}

impl IndexWindow {
    pub fn new(n: u64) -> Result<Self> {
        Ok(Self {
            n,
            i_set: index_i(n)?,
            j_set: index_j(n)?,
        })
    }
}

/// `I_n = { k even : 2^k < n < 2^{k²} }`.
pub fn index_i(n: u64) -> Result<Vec<u32>> {
    if n < 2 {
        return Err(Error::InvalidArgument("index windows need n >= 2".into()));
    }
    Ok((2..64u32)
        .step_by(2)
        .take_while(|&k| (1u64 << k) < n)
        .filter(|&k| lt_pow2(n, (k * k) as u64))
        .collect())
}

/// `J_n = { k : 2^k <= n^{1/4}/3, n < 2^{k²} }`, evaluated with integer
/// arithmetic as `81 · 16^k <= n` and `n < 2^{k²}`.
pub fn index_j(n: u64) -> Result<Vec<u32>> {
    if n < 2 {
        return Err(Error::InvalidArgument("index windows need n >= 2".into()));
    }
    Ok((1..16u32)
        .filter(|&k| 81u128 * (1u128 << (4 * k)) <= n as u128)
        .filter(|&k| lt_pow2(n, (k * k) as u64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn params_small_k() {
        let p2 = params(2).unwrap();
        assert_eq!((p2.p_k, p2.d_k(), p2.alpha_sq.exact()), (4, Some(16), Some(q(1, 32))));
        let p4 = params(4).unwrap();
        assert_eq!((p4.p_k, p4.d_k(), p4.alpha_sq.exact()), (16, Some(65536), Some(q(1, 2048))));
        assert_eq!(p4.alpha_sq.to_string(), "1/2048");
        let p3 = params(3).unwrap();
        assert_eq!(p3.p_k, 5);
        assert!(p3.alpha_sq.exact().is_none());
        assert!((p3.alpha_sq.value() - 1.0 / (25.0 * 3.0 * 3f64.log2())).abs() < 1e-18);
    }

    #[test]
    fn alpha_undefined_at_one() {
        assert_eq!(params(1).unwrap_err(), Error::AlphaUndefined(1));
        assert!(params(0).is_err());
    }

    #[test]
    fn alpha_sq_at_most_one() {
        for k in 2..=MAX_K {
            assert!(params(k).unwrap().alpha_sq.value() <= 1.0);
        }
    }

    #[test]
    fn index_i_examples() {
        assert_eq!(index_i(1000).unwrap(), vec![4, 6, 8]);
        assert!(index_i(16).unwrap().is_empty());
        assert_eq!(index_i(5).unwrap(), vec![2]);
    }

    #[test]
    fn index_j_examples() {
        assert!(index_j(1000).unwrap().is_empty());
        assert_eq!(index_j(1 << 36).unwrap(), vec![7]);
        assert_eq!(index_j(1 << 49).unwrap(), vec![8, 9, 10]);
    }

    #[test]
    fn index_j_matches_real_interval() {
        // (sqrt(log n), log n / 4 - log 3] ∩ N at powers of two
        for e in 2..63u32 {
            let n = 1u64 << e;
            let lo = (e as f64).sqrt();
            let hi = e as f64 / 4.0 - 3f64.log2();
            let expected: Vec<u32> = (1..64).filter(|&k| (k as f64) > lo && (k as f64) <= hi).collect();
            assert_eq!(index_j(n).unwrap(), expected, "n = 2^{e}");
        }
    }
}
