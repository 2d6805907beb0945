use num_rational::BigRational;
use num_traits::Num;

use super::params::{lt_pow2, p_k, params};
use crate::error::{Error, Result};
use crate::lattice::{convolve, LatticePmf, Mode};
use crate::numeric::one_minus_cos;

fn build_law(points_exact: Option<Vec<(i64, BigRational)>>, points_float: Vec<(i64, f64)>) -> Result<LatticePmf> {
    match points_exact {
        Some(pts) => LatticePmf::exact_from_points(pts),
        None => LatticePmf::float_from_points(points_float),
    }
}

fn two<T: Num + Clone>() -> T {
    T::one() + T::one()
}

/// `{-1: a/2, 0: 1 - a, +1: a/2}`.
pub fn three_point_table<T: Num + Clone>(a: T) -> Vec<(i64, T)> {
    let half = a.clone() / two::<T>();
    vec![(-1, half.clone()), (0, T::one() - a), (1, half)]
}

/// Marginal law of `f̄_k`.
pub fn fbar_pmf(k: u32) -> Result<LatticePmf> {
    let a = params(k)?.alpha_sq;
    build_law(
        a.exact().map(three_point_table),
        three_point_table(a.value()),
    )
}

/// Nine-point law of `p_k V + p_{k+1} V'` with `V ~ f̄_k`, `V' ~ f̄_{k+1}`
/// independent, in terms of `a = α_k²`, `b = α_{k+1}²` and `s = 2^k`.
pub fn block_table<T: Num + Clone>(s: i64, a: T, b: T) -> Vec<(i64, T)> {
    let one = T::one();
    let (two, four) = (two::<T>(), two::<T>() * two::<T>());
    let zero_mass = (one.clone() - a.clone()) * (one.clone() - b.clone());
    let at_s = a.clone() / two.clone() * (one.clone() - b.clone());
    let at_s1 = b.clone() / two * (one - a.clone());
    let corner = a * b / four;
    vec![
        (-(2 * s + 1), corner.clone()),
        (-(s + 1), at_s1.clone()),
        (-s, at_s.clone()),
        (-1, corner.clone()),
        (0, zero_mass),
        (1, corner.clone()),
        (s, at_s),
        (s + 1, at_s1),
        (2 * s + 1, corner),
    ]
}

/// Brute-force law of `p_k V + p_{k+1} V'` by enumerating the 3×3 product.
pub fn block_product_enumeration<T: Num + Clone>(k: u32, a: T, b: T) -> Vec<(i64, T)> {
    let (pk, pk1) = (p_k(k) as i64, p_k(k + 1) as i64);
    let mut out = Vec::with_capacity(9);
    for (u, pu) in three_point_table(a) {
        for (v, pv) in three_point_table(b.clone()) {
            out.push((pk * u + pk1 * v, pu.clone() * pv));
        }
    }
    out
}

/// Law of one block variable `X_k(1)` for even `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockPmf {
    pub k: u32,
    pub law: LatticePmf,
}

fn check_even(k: u32) -> Result<()> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidArgument(format!("block index k = {k} must be even and >= 2")));
    }
    Ok(())
}

/// Law of `X_k(1) = p_k f̄_k + p_{k+1} f̄_{k+1}` for even `k`.
pub fn block_pmf(k: u32) -> Result<BlockPmf> {
    check_even(k)?;
    let (a, b) = (params(k)?.alpha_sq, params(k + 1)?.alpha_sq);
    let s = 1i64 << k;
    let exact = match (a.exact(), b.exact()) {
        (Some(x), Some(y)) => Some(block_table(s, x, y)),
        _ => None,
    };
    Ok(BlockPmf {
        k,
        law: build_law(exact, block_table(s, a.value(), b.value()))?,
    })
}

/// Exact block law at caller-supplied rational amplitudes (used where the
/// true `α_{k+1}²` is irrational but a symbolic identity is being checked).
pub fn block_pmf_with_alphas(k: u32, a: &BigRational, b: &BigRational) -> Result<BlockPmf> {
    check_even(k)?;
    Ok(BlockPmf {
        k,
        law: LatticePmf::exact_from_points(block_table(1i64 << k, a.clone(), b.clone()))?,
    })
}

/// `1 - E cos(t X_k(1))`, accumulated from nonnegative terms.
pub fn block_char_deficit(k: u32, t: f64) -> Result<f64> {
    check_even(k)?;
    let (a, b) = (params(k)?.alpha_sq.value(), params(k + 1)?.alpha_sq.value());
    let s = (1u64 << k) as f64;
    Ok(a * (1.0 - b) * one_minus_cos(s * t)
        + b * (1.0 - a) * one_minus_cos((s + 1.0) * t)
        + 0.5 * a * b * one_minus_cos(t)
        + 0.5 * a * b * one_minus_cos((2.0 * s + 1.0) * t))
}

/// `E exp(i t X_k(1))` in closed form (the law is symmetric, so this is real).
pub fn block_char(k: u32, t: f64) -> Result<f64> {
    check_even(k)?;
    let (a, b) = (params(k)?.alpha_sq.value(), params(k + 1)?.alpha_sq.value());
    let s = (1u64 << k) as f64;
    Ok((1.0 - a) * (1.0 - b)
        + a * (1.0 - b) * (s * t).cos()
        + b * (1.0 - a) * ((s + 1.0) * t).cos()
        + 0.5 * a * b * (t.cos() + ((2.0 * s + 1.0) * t).cos()))
}

/// The aperiodicity deficit `((α_k α_{k+1})² / 2)(1 - cos t)`.
pub fn block_aperiodic_deficit(k: u32, t: f64) -> Result<f64> {
    check_even(k)?;
    let (a, b) = (params(k)?.alpha_sq.value(), params(k + 1)?.alpha_sq.value());
    Ok(0.5 * a * b * one_minus_cos(t))
}

/// `E X_k(1)² = 1/(k log k) + 1/((k+1) log(k+1))`.
pub fn block_second_moment(k: u32) -> Result<f64> {
    check_even(k)?;
    Ok(params(k)?.alpha_sq.scaled_variance() + params(k + 1)?.alpha_sq.scaled_variance())
}

/// Law of `p (V - V')` with `V, V'` i.i.d. `{-1, 0, 1}` with `P(±1) = a/2`.
pub fn difference_table<T: Num + Clone>(p: i64, a: T) -> Vec<(i64, T)> {
    let one = T::one();
    let half = a.clone() / two::<T>();
    let rest = one - a;
    let edge = half.clone() * half.clone();
    let mid = two::<T>() * half.clone() * rest.clone();
    let centre = rest.clone() * rest + two::<T>() * half.clone() * half;
    vec![
        (-2 * p, edge.clone()),
        (-p, mid.clone()),
        (0, centre),
        (p, mid),
        (2 * p, edge),
    ]
}

/// Blocks `k` contributing to `Y_i(n)`: `p_k <= i + 1` and `p_k < n < d_k`.
pub fn y_i_blocks(i: u64, n: u64) -> Vec<u32> {
    (2..=super::params::MAX_K)
        .take_while(|&k| p_k(k) <= i.saturating_add(1))
        .filter(|&k| p_k(k) < n && lt_pow2(n, (k * k) as u64))
        .collect()
}

/// Law of `Y_i(n) = Σ_k p_k (U^i f̄_k − U^{d_k+i} f̄_k)` over the qualifying `k`.
pub fn y_i_pmf(i: u64, n: u64) -> Result<LatticePmf> {
    if n < 2 || i >= n {
        return Err(Error::InvalidArgument(format!("y_i_pmf needs i <= n - 1 (i = {i}, n = {n})")));
    }
    y_law_for_blocks(&y_i_blocks(i, n))
}

/// Law of `Σ_{k ∈ blocks} p_k (V_k − V_k')`.
pub fn y_law_for_blocks(blocks: &[u32]) -> Result<LatticePmf> {
    let laws = blocks
        .iter()
        .map(|&k| {
            let a = params(k)?.alpha_sq;
            let p = p_k(k) as i64;
            build_law(a.exact().map(|q| difference_table(p, q)), difference_table(p, a.value()))
        })
        .collect::<Result<Vec<_>>>()?;
    let all_exact = laws.iter().all(|l| l.mode() == Mode::Exact);
    let mode = if all_exact { Mode::Exact } else { Mode::Float };
    let mut acc = LatticePmf::delta(0, mode);
    for l in laws {
        let l = if all_exact { l } else { l.to_float() };
        acc = convolve(&acc, &l)?;
    }
    Ok(acc)
}
