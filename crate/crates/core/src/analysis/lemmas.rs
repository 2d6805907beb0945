use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::un::log_phi_n;
use crate::construction::{block_aperiodic_deficit, fbar_pmf, index_i, index_j, k_log_k, p_k};
use crate::error::{Error, Result};
use crate::lattice::{convolve, LatticePmf, Mode};
use crate::numeric::Neumaier;
use crate::report::BoundReport;

/// Log-spaced points per decade on scan grids.
pub const POINTS_PER_DECADE: usize = 512;

/// Integer points are added when the scanned range is at most this long.
pub const INTEGER_GRID_LIMIT: f64 = 4096.0;

/// The explicit near-zero constant `(ln 2)² / 72`.
pub fn near_zero_l() -> f64 {
    LN_2 * LN_2 / 72.0
}

/// Geometric grid on `[lo, hi]` with at least `min_points` points and at least
/// [`POINTS_PER_DECADE`] per decade.
pub fn log_grid(lo: f64, hi: f64, min_points: usize) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let per_decade = (POINTS_PER_DECADE as f64 * (hi / lo).log10()).ceil() as usize;
    let count = per_decade.max(min_points).max(2);
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo * (ratio * i as f64).exp() })
        .collect()
}

fn finish_grid(mut g: Vec<f64>) -> Vec<f64> {
    g.sort_by(|a, b| a.total_cmp(b));
    g.dedup();
    g
}

/// The `x`-grid on `[∜n, π√n]`: log-spaced points, all integers when the
/// range is short, and every `x = √n · 2πm/q` for the resonant moduli
/// `q ∈ {2^k, 2^k + 1, 2^{k+1} + 1}`, `k ∈ I_n`.
pub fn away_grid(n: u64, min_points: usize) -> Result<Vec<f64>> {
    let root = (n as f64).sqrt();
    let (lo, hi) = ((n as f64).powf(0.25), PI * root);
    let mut g = log_grid(lo, hi, min_points);
    if hi - lo <= INTEGER_GRID_LIMIT {
        g.extend((lo.ceil() as u64..=hi.floor() as u64).map(|x| x as f64));
    }
    for k in index_i(n)? {
        let s = 1u64 << k;
        for q in [s, s + 1, 2 * s + 1] {
            for m in 1..=q / 2 {
                let x = root * 2.0 * PI * m as f64 / q as f64;
                if x >= lo && x <= hi {
                    g.push(x);
                }
            }
        }
    }
    Ok(finish_grid(g))
}

/// `ln Π_{k ∈ I_n} (1 − ((α_k α_{k+1})²/2)(1 − cos t))^{2(n − 2^k)}`.
pub fn log_aperiodic_bound(n: u64, t: f64) -> Result<f64> {
    let mut acc = 0.0;
    for k in index_i(n)? {
        let m = 2 * (n - (1u64 << k));
        acc += m as f64 * (-block_aperiodic_deficit(k, t)?).ln_1p();
    }
    Ok(acc)
}

/// Scans `|φ_n(x/√n)|` on `x ∈ [∜n, π√n]` against the aperiodicity product
/// bound; `fitted_constant` is `min −ln|φ_n| / ∜n`.
pub fn check_lemma_away(n: u64, x_grid_size: usize) -> Result<BoundReport> {
    if n < 81 {
        return Err(Error::InvalidArgument(format!("lemma scan away from 0 needs n >= 81, got {n}")));
    }
    let root = (n as f64).sqrt();
    let quarter = (n as f64).powf(0.25);
    let grid = away_grid(n, x_grid_size)?;
    let rows: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&x| {
            let t = x / root;
            Ok((log_phi_n(n, t)?, log_aperiodic_bound(n, t)?))
        })
        .collect::<Result<_>>()?;
    let lhs = rows.iter().map(|r| r.0.exp()).collect();
    let rhs = rows.iter().map(|r| r.1.exp()).collect();
    let ratio = rows.iter().map(|r| (r.0 - r.1).exp()).collect();
    let c = rows.iter().map(|r| -r.0 / quarter).fold(f64::INFINITY, f64::min);
    Ok(BoundReport::new(n, grid, lhs, rhs, ratio, c))
}

/// `cos(n^{-1/4}) <= 1 − 1/(4√n)`.
pub fn trig_step_holds(n: u64) -> bool {
    let nf = n as f64;
    nf.powf(-0.25).cos() <= 1.0 - 1.0 / (4.0 * nf.sqrt())
}

/// Scans `|φ_n(x/√n)|` on `10⁻³ <= x <= ∜n` against `exp(−L x²)` with the
/// explicit `L`; `fitted_constant` is `min −ln|φ_n| / x²`.
pub fn check_lemma_near(n: u64) -> Result<BoundReport> {
    let root = (n as f64).sqrt();
    let hi = (n as f64).powf(0.25);
    let lo = 1e-3;
    let mut g = log_grid(lo, hi, 0);
    if hi - lo <= INTEGER_GRID_LIMIT {
        g.extend((1..=hi.floor() as u64).map(|x| x as f64));
    }
    let grid = finish_grid(g);
    let l = near_zero_l();
    let logs: Vec<f64> = grid
        .par_iter()
        .map(|&x| log_phi_n(n, x / root))
        .collect::<Result<_>>()?;
    let lhs = logs.iter().map(|v| v.exp()).collect();
    let rhs = grid.iter().map(|x| (-l * x * x).exp()).collect();
    let ratio = logs.iter().zip(&grid).map(|(v, x)| (v + l * x * x).exp()).collect();
    let fitted = logs
        .iter()
        .zip(&grid)
        .map(|(v, x)| -v / (x * x))
        .fold(f64::INFINITY, f64::min);
    Ok(BoundReport::new(n, grid, lhs, rhs, ratio, fitted))
}

/// Moments of `Υ_n(j) = Σ_{k ∈ J, 2^k <= j} p_k f̄_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpsilonMoments {
    pub ks: Vec<u32>,
    /// `Σ 1/(k log k)`.
    pub m2: f64,
    /// Third moment of the explicit law, paired as `Σ_{x>0} x³(p(x) − p(−x))`.
    pub m3: f64,
    /// `Σ p_k⁴ α_k² + 6 Σ_{k<l} p_k² α_k² p_l² α_l²`.
    pub m4: f64,
    /// Fourth moment summed from the explicit law.
    pub m4_law: f64,
    /// `Σ p_k⁴ α_k²`, the fourth cumulant.
    pub fourth_cumulant: f64,
    /// `m4 − 3 m2² <= Σ p_k⁴ α_k²`.
    pub cumulant_bound_holds: bool,
    /// `m4 <= (√n/9) m2 + 3 m2²`, checked only for `J = J_n`.
    pub regime_bound_holds: Option<bool>,
}

pub fn upsilon_moments(j: u64, n: u64, j_override: Option<&[u32]>) -> Result<UpsilonMoments> {
    let base = match j_override {
        Some(js) => js.to_vec(),
        None => index_j(n)?,
    };
    let ks: Vec<u32> = base.into_iter().filter(|&k| k < 64 && (1u64 << k) <= j).collect();
    let mut law = LatticePmf::delta(0, Mode::Exact);
    let mut m2 = 0.0;
    let mut fourth = 0.0;
    let mut pair = 0.0;
    for &k in &ks {
        let v = 1.0 / k_log_k(k);
        let p = p_k(k) as f64;
        pair += v * m2;
        m2 += v;
        fourth += p * p * v;
        let step = fbar_pmf(k)?.scaled(p_k(k) as i64)?;
        law = match (law.mode(), step.mode()) {
            (Mode::Exact, Mode::Exact) => convolve(&law, &step)?,
            _ => convolve(&law.to_float(), &step.to_float())?,
        };
    }
    let m4 = fourth + 6.0 * pair;
    let mut m3 = Neumaier::new();
    for (x, px) in law.points().filter(|p| p.0 > 0) {
        let xf = x as f64;
        m3.add(xf * xf * xf * (px - law.prob(-x)));
    }
    Ok(UpsilonMoments {
        m2,
        m3: m3.value(),
        m4,
        m4_law: law.moment(4),
        fourth_cumulant: fourth,
        cumulant_bound_holds: m4 - 3.0 * m2 * m2 <= fourth * (1.0 + 1e-12),
        regime_bound_holds: j_override
            .is_none()
            .then(|| m4 <= (n as f64).sqrt() / 9.0 * m2 + 3.0 * m2 * m2),
        ks,
    })
}
