use num_bigint::{BigInt, BigUint};
use num_traits::ToPrimitive;
use serde::Serialize;

use super::params::{index_i, k_log_k, params, MAX_K};
use crate::error::{Error, Result};

/// Coefficient profile of `S_n(f_k)` in the basis `U^j f̄_k`: the trapezoid
/// `𝟙_[0,n) ⋆ 𝟙_[0,p_k)` minus the same trapezoid shifted by `d_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowCoeffs {
    pub k: u32,
    pub n: u64,
    pub p: u64,
    /// `d_k`, or `None` when it exceeds 128 bits (no overlap is then possible).
    pub d: Option<u128>,
}

impl WindowCoeffs {
    fn short(&self) -> u128 {
        self.n.min(self.p) as u128
    }

    /// Length of the unshifted trapezoid, `n + p - 1`.
    pub fn trapezoid_len(&self) -> u128 {
        self.n as u128 + self.p as u128 - 1
    }

    fn trapezoid(&self, j: u128) -> i64 {
        let len = self.trapezoid_len();
        if j >= len {
            return 0;
        }
        (j + 1).min(self.short()).min(len - j) as i64
    }

    /// Coefficient at index `j`.
    pub fn coeff(&self, j: u128) -> i64 {
        let shifted = match self.d {
            Some(d) if j >= d => self.trapezoid(j - d),
            _ => 0,
        };
        self.trapezoid(j) - shifted
    }

    fn overlaps(&self) -> bool {
        matches!(self.d, Some(d) if d < self.trapezoid_len())
    }

    /// Nonzero `(j, c(j))` pairs in increasing `j`.
    pub fn entries(&self, cap: u64) -> Result<Vec<(u128, i64)>> {
        let d = self
            .d
            .ok_or_else(|| Error::MemoryCap(format!("d_{} does not fit in 128 bits", self.k)))?;
        let len = self.trapezoid_len();
        if 2 * len > cap as u128 {
            return Err(Error::MemoryCap(format!("window of {} coefficients exceeds {cap}", 2 * len)));
        }
        let mut idx: Vec<u128> = (0..len).chain((0..len).map(|j| j + d)).collect();
        idx.sort_unstable();
        idx.dedup();
        Ok(idx
            .into_iter()
            .map(|j| (j, self.coeff(j)))
            .filter(|(_, c)| *c != 0)
            .collect())
    }

    /// `Σ_j c(j)²`, exact.
    pub fn sum_sq(&self) -> BigUint {
        let t = trapezoid_sum_sq(self.n, self.p);
        let mut total: BigInt = BigInt::from(t) * 2;
        if self.overlaps() {
            let d = self.d.unwrap_or(0);
            let len = self.trapezoid_len();
            let cross: i128 = (d..len)
                .map(|j| self.trapezoid(j) as i128 * self.trapezoid(j - d) as i128)
                .sum();
            total -= BigInt::from(cross) * 2;
        }
        total.to_biguint().expect("sum of squares is nonnegative")
    }

    /// `Var S_n(f_k) = α_k² Σ_j c(j)²`.
    pub fn variance(&self) -> f64 {
        let alpha = params(self.k).map(|p| p.alpha_sq.value()).unwrap_or(0.0);
        alpha * self.sum_sq().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// `Σ_j (𝟙_[0,a) ⋆ 𝟙_[0,b))(j)²` in closed form.
pub fn trapezoid_sum_sq(a: u64, b: u64) -> BigUint {
    let (s, l) = (BigUint::from(a.min(b)), BigUint::from(a.max(b)));
    let one = BigUint::from(1u8);
    let rise = (&s - &one) * &s * (&s * 2u8 - &one) / 3u8;
    rise + (&l - &s + &one) * &s * &s
}

pub fn window_coeffs(k: u32, n: u64) -> Result<WindowCoeffs> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let p = params(k)?;
    Ok(WindowCoeffs {
        k,
        n,
        p: p.p_k,
        d: p.d_k(),
    })
}

/// `Var 𝖴_n = 2 Σ_{k ∈ I_n} (n − 2^k)(1/(k log k) + 1/((k+1) log(k+1)))`.
pub fn var_un(n: u64) -> Result<f64> {
    Ok(2.0
        * index_i(n)?
            .into_iter()
            .map(|k| (n - (1u64 << k)) as f64 * (1.0 / k_log_k(k) + 1.0 / k_log_k(k + 1)))
            .sum::<f64>())
}

/// Certified bound on `Σ_{k > K} ‖S_n(f_k)‖²`.
pub fn tail_bound(n: u64, big_k: u32) -> f64 {
    8.0 * (n as f64).powi(2) / (2f64.powi(big_k as i32) * k_log_k(big_k))
}

/// Smallest truncation level with tail bound below `1e-12 · n`.
pub fn truncation_level(n: u64) -> u32 {
    (2..=MAX_K)
        .find(|&k| tail_bound(n, k) < 1e-12 * n as f64)
        .unwrap_or(MAX_K)
}

/// Exact finite-`n` second moments of every term in the decompositions of
/// `S_n(f)` and of the main term `𝖴_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SecondMoments {
    pub n: u64,
    pub k_max: u32,
    pub var_sn_f: f64,
    pub var_zsm: f64,
    pub var_yhat: f64,
    pub var_zla: f64,
    pub var_ak: Vec<(u32, f64)>,
    pub var_bk: Vec<(u32, f64)>,
    pub var_ck: Vec<(u32, f64)>,
    pub var_gk: Vec<(u32, f64)>,
    /// `Var W_n`, `W_n = Σ_{i=1}^{n-1} Y_i(n)`.
    pub var_w: f64,
    pub var_en: f64,
    pub var_un: f64,
    pub tail_bound: f64,
}

/// Index range `[lo, hi]` (inclusive) of `U^i f̄_k` terms, or empty.
type Range = Option<(u64, u64)>;

fn range_len(r: Range) -> u64 {
    r.map_or(0, |(a, b)| if b >= a { b - a + 1 } else { 0 })
}

fn intersect(a: Range, b: Range) -> u64 {
    match (a, b) {
        (Some((a0, a1)), Some((b0, b1))) => range_len(Some((a0.max(b0), a1.min(b1)))),
        _ => 0,
    }
}

pub fn second_moments(n: u64) -> Result<SecondMoments> {
    if n < 5 {
        return Err(Error::InvalidArgument("second moments need n >= 5".into()));
    }
    let k_max = truncation_level(n);
    let i_set = index_i(n)?;
    let mut out = SecondMoments {
        n,
        k_max,
        var_sn_f: 0.0,
        var_zsm: 0.0,
        var_yhat: 0.0,
        var_zla: 0.0,
        var_ak: vec![],
        var_bk: vec![],
        var_ck: vec![],
        var_gk: vec![],
        var_w: 0.0,
        var_en: 0.0,
        var_un: var_un(n)?,
        tail_bound: tail_bound(n, k_max),
    };
    for k in 2..=k_max {
        let pr = params(k)?;
        let alpha = pr.alpha_sq.value();
        let p = pr.p_k;
        let v = window_coeffs(k, n)?.variance();
        let hat = p < n && !pr.d_at_most(n);
        if pr.d_at_most(n) {
            out.var_zsm += v;
            let d = pr.d_k().expect("d_k <= n fits");
            out.var_gk.push((k, alpha * trapezoid_sum_sq(p, d as u64).to_f64().unwrap_or(f64::INFINITY)));
        } else if hat {
            out.var_yhat += v;
            let rise = alpha * ((p - 1) as f64) * (p as f64) * ((2 * p - 1) as f64) / 6.0;
            let b = (n + 1 - p) as f64 / k_log_k(k);
            out.var_ak.push((k, rise));
            out.var_bk.push((k, b));
            out.var_ck.push((k, rise));
            out.var_w += 2.0 * b;
        } else {
            out.var_zla += v;
        }

        // E_n = W_n − 𝖴_n, term by term in the basis U^i f̄_k
        let w_range: Range = hat.then(|| (p - 1, n - 1));
        let u_start = if k % 2 == 0 && i_set.contains(&k) {
            Some(1u64 << k)
        } else if k % 2 == 1 && i_set.contains(&(k - 1)) {
            Some(1u64 << (k - 1))
        } else {
            None
        };
        let u_range: Range = u_start.map(|s| (s, n - 1));
        let sym_diff = range_len(w_range) + range_len(u_range) - 2 * intersect(w_range, u_range);
        out.var_en += 2.0 * sym_diff as f64 / k_log_k(k);
    }
    out.var_sn_f = out.var_zsm + out.var_yhat + out.var_zla;
    Ok(out)
}

/// Outcome of [`geometric_tail_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeometricCheck {
    pub ratio_holds: bool,
    pub partial_sums_hold: bool,
    pub min_ratio: f64,
}

impl GeometricCheck {
    pub fn holds(&self) -> bool {
        self.ratio_holds && self.partial_sums_hold
    }
}

/// Checks `a_{m+1}/a_m >= q` and `Σ_{i<=m} a_i <= a_m / (1 − 1/q)` for all `m`.
pub fn geometric_tail_check(a: &[f64], q: f64) -> Result<GeometricCheck> {
    if !(q > 1.0) {
        return Err(Error::InvalidArgument("q must exceed 1".into()));
    }
    if a.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument("sequence must be positive".into()));
    }
    let min_ratio = a.windows(2).map(|w| w[1] / w[0]).fold(f64::INFINITY, f64::min);
    let factor = 1.0 / (1.0 - 1.0 / q);
    let mut partial = 0.0;
    let mut partial_sums_hold = true;
    for &x in a {
        partial += x;
        partial_sums_hold &= partial <= x * factor * (1.0 + 1e-12);
    }
    Ok(GeometricCheck {
        ratio_holds: min_ratio >= q,
        partial_sums_hold,
        min_ratio,
    })
}

/// `Σ_{2 <= k <= √log n} 2^{k²}/(k log k)` divided by `n/√log n`.
pub fn small_block_ratio(n: u64) -> f64 {
    let lg = (n as f64).log2();
    let s: f64 = (2u32..)
        .take_while(|&k| ((k * k) as f64) <= lg)
        .map(|k| 2f64.powi((k * k) as i32) / k_log_k(k))
        .sum();
    s / (n as f64 / lg.sqrt())
}

/// `Σ_{k : 2^k <= n} 2^k / k` divided by `n / log n`.
pub fn dyadic_block_ratio(n: u64) -> f64 {
    let lg = (n as f64).log2();
    let s: f64 = (1u32..64)
        .take_while(|&k| (1u64 << k) <= n)
        .map(|k| 2f64.powi(k as i32) / k as f64)
        .sum();
    s / (n as f64 / lg)
}
