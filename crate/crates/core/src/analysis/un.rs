use num_complex::Complex64;
use serde::Serialize;

use crate::construction::{block_char_deficit, block_pmf, index_i, params, second_moments, var_un};
use crate::error::{Error, Result};
use crate::lattice::{
    convolve_capped, convolve_power_capped, invert_to_pmf_capped, sup_gaussian_distance_detailed, GaussianRef,
    LatticePmf, Mode, SupDistance, DEFAULT_SUPPORT_CAP,
};

/// Laws whose full support fits in this bound are built by direct convolution.
pub const DIRECT_SUPPORT_LIMIT: u64 = 1 << 13;

/// Target for the certified mass outside the inversion window.
pub const TAIL_TARGET: f64 = 1.0 / (1u64 << 60) as f64;

/// `2 (ln 2)²`.
pub fn sigma_sq() -> f64 {
    GaussianRef::limit().sigma_sq()
}

fn check_n(n: u64) -> Result<()> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!("n = {n} must be at least 5")));
    }
    Ok(())
}

/// Number of copies of `X_k(1)` in `𝖴_n`.
fn copies(n: u64, k: u32) -> u64 {
    2 * (n - (1u64 << k))
}

/// `ln φ_n(t)`, summed as `Σ m_k ln(1 − deficit_k(t))`.
pub fn log_phi_n(n: u64, t: f64) -> Result<f64> {
    check_n(n)?;
    let mut acc = 0.0;
    for k in index_i(n)? {
        let d = block_char_deficit(k, t)?;
        assert!(d < 1.0, "block characteristic function must stay positive");
        acc += copies(n, k) as f64 * (-d).ln_1p();
    }
    Ok(acc)
}

/// `φ_n(t) = Π_{k ∈ I_n} E[e^{itX_k(1)}]^{2(n − 2^k)}`.
pub fn phi_n(n: u64, t: f64) -> Result<f64> {
    Ok(log_phi_n(n, t)?.exp())
}

/// `Σ_{k ∈ I_n} 2(n − 2^k)(2^{k+1} + 1)`, the largest value `𝖴_n` can take.
pub fn full_support_bound(n: u64) -> Result<u64> {
    check_n(n)?;
    Ok(index_i(n)?
        .into_iter()
        .map(|k| copies(n, k).saturating_mul((1u64 << (k + 1)) + 1))
        .fold(0u64, u64::saturating_add))
}

fn cosh_m1(x: f64) -> f64 {
    let s = (0.5 * x).sinh();
    2.0 * s * s
}

/// `ln E[e^{θ 𝖴_n}]`.
pub fn log_mgf(n: u64, theta: f64) -> Result<f64> {
    check_n(n)?;
    let mut acc = 0.0;
    for k in index_i(n)? {
        let (a, b) = (params(k)?.alpha_sq.value(), params(k + 1)?.alpha_sq.value());
        let s = (1u64 << k) as f64;
        let excess = a * (1.0 - b) * cosh_m1(s * theta)
            + b * (1.0 - a) * cosh_m1((s + 1.0) * theta)
            + 0.5 * a * b * (cosh_m1(theta) + cosh_m1((2.0 * s + 1.0) * theta));
        acc += copies(n, k) as f64 * excess.ln_1p();
    }
    Ok(acc)
}

/// Chernoff bound on `P(|𝖴_n| > b)`, minimized over a logarithmic `θ` grid.
pub fn chernoff_tail(n: u64, b: u64) -> Result<f64> {
    let mut best = 1.0f64;
    for j in 0..=600 {
        let theta = 1e-6 * 10f64.powf(j as f64 / 100.0);
        let lm = log_mgf(n, theta)?;
        if !lm.is_finite() {
            break;
        }
        best = best.min(2.0 * (lm - theta * (b as f64 + 1.0)).exp());
    }
    Ok(best)
}

/// Smallest `b` with certified `P(|𝖴_n| > b) < TAIL_TARGET`, capped at the
/// full support bound.
pub fn effective_support_bound(n: u64) -> Result<u64> {
    let full = full_support_bound(n)?;
    if full == 0 || chernoff_tail(n, full)? >= TAIL_TARGET {
        return Ok(full);
    }
    let (mut lo, mut hi) = (0u64, full);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if chernoff_tail(n, mid)? < TAIL_TARGET {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnPath {
    Direct,
    Inversion,
}

/// Law of `𝖴_n` with a record of how it was obtained.
#[derive(Clone, Debug)]
pub struct UnLaw {
    pub n: u64,
    pub pmf: LatticePmf,
    pub path: UnPath,
    pub support_bound: u64,
    /// Certified mass outside `[-support_bound, support_bound]` (0 when the
    /// window covers the full support).
    pub tail_bound: f64,
    pub renormalization_delta: f64,
}

/// Convolution powers of the block laws.
pub fn un_pmf_direct(n: u64, cap: u64) -> Result<LatticePmf> {
    let full = full_support_bound(n)?;
    if 2 * full + 1 > cap {
        return Err(Error::SupportCap {
            requested: 2 * full + 1,
            cap,
        });
    }
    let mut acc = LatticePmf::delta(0, Mode::Float);
    for k in index_i(n)? {
        let block = block_pmf(k)?.law.to_float();
        acc = convolve_capped(&acc, &convolve_power_capped(&block, copies(n, k), cap)?, cap)?;
    }
    Ok(acc)
}

/// Fourier inversion of `φ_n` on `[-b, b]`.
pub fn un_pmf_inversion(n: u64, support_bound: u64, cap: u64) -> Result<UnLaw> {
    let phi = move |t: f64| Complex64::new(phi_n(n, t).expect("n validated"), 0.0);
    check_n(n)?;
    let inv = invert_to_pmf_capped(&phi, support_bound, cap)?;
    let full = full_support_bound(n)?;
    let tail_bound = if support_bound >= full {
        0.0
    } else {
        chernoff_tail(n, support_bound)?
    };
    Ok(UnLaw {
        n,
        pmf: inv.pmf,
        path: UnPath::Inversion,
        support_bound,
        tail_bound,
        renormalization_delta: inv.renormalization_delta,
    })
}

pub fn un_law_capped(n: u64, cap: u64) -> Result<UnLaw> {
    let full = full_support_bound(n)?;
    if full <= DIRECT_SUPPORT_LIMIT {
        return Ok(UnLaw {
            n,
            pmf: un_pmf_direct(n, cap)?,
            path: UnPath::Direct,
            support_bound: full,
            tail_bound: 0.0,
            renormalization_delta: 0.0,
        });
    }
    un_pmf_inversion(n, effective_support_bound(n)?, cap)
}

pub fn un_law(n: u64) -> Result<UnLaw> {
    un_law_capped(n, DEFAULT_SUPPORT_CAP)
}

/// Law of `𝖴_n = Σ_{k ∈ I_n} V_k`.
pub fn un_pmf(n: u64) -> Result<LatticePmf> {
    Ok(un_law(n)?.pmf)
}

/// Gaussian used in a local limit comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// `σ² = 2 (ln 2)²`.
    Limit,
    /// `σ² = Var 𝖴_n / n`.
    VarianceMatched,
}

impl Reference {
    pub fn gaussian(self, n: u64) -> Result<GaussianRef> {
        match self {
            Reference::Limit => Ok(GaussianRef::limit()),
            Reference::VarianceMatched => GaussianRef::variance_matched(var_un(n)?, n),
        }
    }
}

/// `sup_x |√n P(𝖴_n = x) − e^{−x²/(2nσ²)}/√(2πσ²)|`.
pub fn llt_sup_error(n: u64, reference: Reference) -> Result<SupDistance> {
    let law = un_pmf(n)?;
    Ok(sup_gaussian_distance_detailed(&law, n, reference.gaussian(n)?))
}

/// `Var 𝖴_n / n` together with the limit it approaches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceRatio {
    pub n: u64,
    pub ratio: f64,
    pub limit: f64,
}

pub fn variance_ratio(n: u64) -> Result<VarianceRatio> {
    check_n(n)?;
    Ok(VarianceRatio {
        n,
        ratio: second_moments(n)?.var_un / n as f64,
        limit: sigma_sq(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{params, var_un};
    use crate::lattice::char_fn;

    #[test]
    fn phi_at_zero_and_symmetry() {
        for n in [5u64, 100, 1000] {
            assert_eq!(phi_n(n, 0.0).unwrap(), 1.0);
            assert_eq!(phi_n(n, 0.7).unwrap(), phi_n(n, -0.7).unwrap());
        }
        // I_16 is empty
        assert_eq!(phi_n(16, 1.3).unwrap(), 1.0);
    }

    #[test]
    fn phi_matches_direct_law() {
        for n in [5u64, 10, 20] {
            let law = un_pmf_direct(n, 1 << 20).unwrap();
            for t in [0.1, 1.0, 2.9] {
                let direct = char_fn(&law, t);
                assert!((direct.re - phi_n(n, t).unwrap()).abs() < 1e-12, "n={n} t={t}");
            }
        }
    }

    #[test]
    fn u5_top_atom() {
        let (a, b) = (params(2).unwrap().alpha_sq.value(), params(3).unwrap().alpha_sq.value());
        let expected = (a / 2.0).powi(2) * (b / 2.0).powi(2);
        let direct = un_pmf_direct(5, 1 << 10).unwrap();
        assert_eq!(direct.max_support(), 18);
        assert!((direct.prob(18) - expected).abs() <= 1e-15 * expected);
        let inv = un_pmf_inversion(5, 18, 1 << 10).unwrap();
        assert!((inv.pmf.prob(18) - expected).abs() < 1e-15);
    }

    #[test]
    fn chernoff_window_is_conservative() {
        let n = 100;
        let law = un_pmf_direct(n, 1 << 20).unwrap();
        let b = effective_support_bound(n).unwrap();
        assert!(b < full_support_bound(n).unwrap());
        let outside: f64 = law.points().filter(|p| p.0.unsigned_abs() > b).map(|p| p.1).sum();
        assert!(outside <= chernoff_tail(n, b).unwrap());
    }

    #[test]
    fn direct_variance_matches_formula() {
        let law = un_pmf_direct(100, 1 << 20).unwrap();
        let v = var_un(100).unwrap();
        assert!((law.variance() - v).abs() / v < 1e-12);
    }
}
