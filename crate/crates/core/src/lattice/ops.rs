use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::FftPlanner;

use super::pmf::{LatticePmf, Masses};
use crate::error::{Error, Result};
use crate::numeric::{self, Neumaier};

/// Default cap on the number of lattice points a law may span.
pub const DEFAULT_SUPPORT_CAP: u64 = 1 << 26;

/// Negative masses of at most this size produced by inversion are round-off.
pub const CLIP_THRESHOLD: f64 = 1.0 / (1u64 << 35) as f64;

/// Law of `X + Y` for independent `X ~ a`, `Y ~ b`.
pub fn convolve(a: &LatticePmf, b: &LatticePmf) -> Result<LatticePmf> {
    convolve_capped(a, b, DEFAULT_SUPPORT_CAP)
}

pub fn convolve_capped(a: &LatticePmf, b: &LatticePmf, cap: u64) -> Result<LatticePmf> {
    let span = (a.span() + b.span() - 1) as u64;
    if span > cap {
        return Err(Error::SupportCap { requested: span, cap });
    }
    let offset = a.offset() + b.offset();
    let masses = match (a.masses(), b.masses()) {
        (Masses::Exact(x), Masses::Exact(y)) => {
            let mut out = vec![BigRational::zero(); span as usize];
            for (i, xi) in x.iter().enumerate() {
                if xi.is_zero() {
                    continue;
                }
                for (j, yj) in y.iter().enumerate() {
                    if !yj.is_zero() {
                        out[i + j] += xi * yj;
                    }
                }
            }
            Masses::Exact(out)
        }
        (Masses::Float(x), Masses::Float(y)) => Masses::Float(convolve_f64(x, y)),
        (l, r) => {
            return Err(Error::ModeMismatch(format!(
                "cannot convolve {} with {}",
                l.mode(),
                r.mode()
            )))
        }
    };
    Ok(LatticePmf::from_parts_unchecked(offset, masses))
}

/// Direct convolution of nonnegative float vectors with per-output
/// compensation, split over output blocks.
fn convolve_f64(x: &[f64], y: &[f64]) -> Vec<f64> {
    const BLOCK: usize = 1024;
    let (outer, inner) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let nz: Vec<(usize, f64)> = outer.iter().copied().enumerate().filter(|p| p.1 != 0.0).collect();
    let mut out = vec![0.0; x.len() + y.len() - 1];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        let lo = b * BLOCK;
        let hi = lo + chunk.len();
        let mut acc = vec![Neumaier::new(); chunk.len()];
        for &(i, xi) in &nz {
            // outputs lo..hi need inner indices (lo - i)..(hi - i)
            let j0 = lo.saturating_sub(i);
            let j1 = (hi.saturating_sub(i)).min(inner.len());
            for j in j0..j1 {
                let yj = inner[j];
                if yj != 0.0 {
                    acc[i + j - lo].add(xi * yj);
                }
            }
        }
        for (o, a) in chunk.iter_mut().zip(acc) {
            *o = a.value();
        }
    });
    out
}

/// `m`-fold convolution power by binary exponentiation.
pub fn convolve_power(p: &LatticePmf, m: u64) -> Result<LatticePmf> {
    convolve_power_capped(p, m, DEFAULT_SUPPORT_CAP)
}

pub fn convolve_power_capped(p: &LatticePmf, m: u64, cap: u64) -> Result<LatticePmf> {
    if m == 0 {
        return Err(Error::InvalidArgument("convolution power needs m >= 1".into()));
    }
    let final_span = (p.span() as u64 - 1).saturating_mul(m) + 1;
    if final_span > cap {
        return Err(Error::SupportCap { requested: final_span, cap });
    }
    let mut result: Option<LatticePmf> = None;
    let mut base = p.clone();
    let mut e = m;
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => convolve_capped(&r, &base, cap)?,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = convolve_capped(&base, &base, cap)?;
    }
    Ok(result.expect("m >= 1"))
}

/// Characteristic function `Σ_x p(x) e^{itx}`.
pub fn char_fn(p: &LatticePmf, t: f64) -> Complex64 {
    let mut re = Neumaier::new();
    let mut im = Neumaier::new();
    for (x, m) in p.points() {
        let (s, c) = (t * x as f64).sin_cos();
        re.add(m * c);
        im.add(m * s);
    }
    Complex64::new(re.value(), im.value())
}

/// Characteristic-function samples on an increasing grid of `t` values.
#[derive(Clone, Debug, PartialEq)]
pub struct CharGrid {
    n_label: u64,
    points: Vec<(f64, Complex64)>,
}

impl CharGrid {
    pub fn sample(n_label: u64, ts: &[f64], phi: impl Fn(f64) -> Complex64 + Sync) -> Result<Self> {
        if n_label == 0 {
            return Err(Error::InvalidArgument("n_label must be positive".into()));
        }
        if ts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("t grid must be strictly increasing".into()));
        }
        if ts.iter().any(|t| !(-PI..=PI).contains(t)) {
            return Err(Error::InvalidArgument("t grid must lie in [-pi, pi]".into()));
        }
        let points = ts.par_iter().map(|&t| (t, phi(t))).collect();
        Ok(Self { n_label, points })
    }

    /// `m` equispaced points on `[-π, π]` including both ends.
    pub fn uniform_ts(m: usize) -> Vec<f64> {
        if m < 2 {
            return vec![0.0];
        }
        (0..m).map(|j| -PI + 2.0 * PI * j as f64 / (m - 1) as f64).collect()
    }

    pub fn n_label(&self) -> u64 {
        self.n_label
    }

    pub fn points(&self) -> &[(f64, Complex64)] {
        &self.points
    }
}

/// Result of [`invert_to_pmf`].
#[derive(Clone, Debug)]
pub struct Inversion {
    pub pmf: LatticePmf,
    /// `1 - Σ masses` after clipping, before renormalization.
    pub renormalization_delta: f64,
    /// Largest imaginary residue dropped from the inverse transform.
    pub max_imaginary: f64,
    /// Number of negative round-off masses set to zero.
    pub clipped: usize,
    /// Transform length used.
    pub grid_len: usize,
}

/// Recovers a lattice law supported in `[-bound, bound]` from its
/// characteristic function by sampling `[-π, π)` and applying a DFT.
pub fn invert_to_pmf(phi: &(dyn Fn(f64) -> Complex64 + Sync), support_bound: u64) -> Result<Inversion> {
    invert_to_pmf_capped(phi, support_bound, DEFAULT_SUPPORT_CAP)
}

pub fn invert_to_pmf_capped(
    phi: &(dyn Fn(f64) -> Complex64 + Sync),
    support_bound: u64,
    cap: u64,
) -> Result<Inversion> {
    let len = numeric::next_pow2(2 * support_bound + 2);
    if len > cap {
        return Err(Error::SupportCap { requested: len, cap });
    }
    let m = len as usize;
    // t_j = -π + 2πj/M, so e^{-i t_j x} = (-1)^x e^{-2πi jx/M}
    let mut buf: Vec<Complex64> = (0..m)
        .into_par_iter()
        .map(|j| phi(-PI + 2.0 * PI * j as f64 / m as f64))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(m).process(&mut buf);

    let b = support_bound as i64;
    let mut masses = Vec::with_capacity((2 * b + 1) as usize);
    let mut max_imaginary = 0.0f64;
    let mut clipped = 0;
    for x in -b..=b {
        let idx = x.rem_euclid(m as i64) as usize;
        let sign = if x.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let v = buf[idx] * (sign / m as f64);
        max_imaginary = max_imaginary.max(v.im.abs());
        let mut mass = v.re;
        if mass < 0.0 {
            if -mass > CLIP_THRESHOLD {
                return Err(Error::NegativeMass { point: x, mass });
            }
            mass = 0.0;
            clipped += 1;
        }
        masses.push(mass);
    }
    let total = numeric::sum(masses.iter().copied());
    let renormalization_delta = 1.0 - total;
    let pmf = LatticePmf::float_normalized(-b, masses)?;
    Ok(Inversion {
        pmf,
        renormalization_delta,
        max_imaginary,
        clipped,
        grid_len: m,
    })
}

/// Centered Gaussian reference used in local limit comparisons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianRef {
    sigma_sq: f64,
}

impl GaussianRef {
    pub fn new(sigma_sq: f64) -> Result<Self> {
        if !(sigma_sq > 0.0) || !sigma_sq.is_finite() {
            return Err(Error::InvalidArgument(format!("sigma^2 must be positive, got {sigma_sq}")));
        }
        Ok(Self { sigma_sq })
    }

    /// The limiting variance `2 (ln 2)^2`.
    pub fn limit() -> Self {
        let ln2 = std::f64::consts::LN_2;
        Self {
            sigma_sq: 2.0 * ln2 * ln2,
        }
    }

    /// Gaussian whose `n`-scaled variance matches a finite-`n` variance.
    pub fn variance_matched(variance: f64, n: u64) -> Result<Self> {
        Self::new(variance / n as f64)
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    /// `e^{-x²/(2nσ²)} / √(2πσ²)`, the `√n`-scaled local density at `x`.
    pub fn scaled_density(&self, x: f64, n: u64) -> f64 {
        (-x * x / (2.0 * n as f64 * self.sigma_sq)).exp() / (2.0 * PI * self.sigma_sq).sqrt()
    }
}

/// Location and value of a sup-norm Gaussian distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupDistance {
    pub value: f64,
    pub argmax: i64,
}

/// `sup_x |√n p(x) − e^{−x²/(2nσ²)}/√(2πσ²)|` over the support and a
/// `±10√(nσ²)` window.
pub fn sup_gaussian_distance(p: &LatticePmf, n: u64, g: GaussianRef) -> f64 {
    sup_gaussian_distance_detailed(p, n, g).value
}

pub fn sup_gaussian_distance_detailed(p: &LatticePmf, n: u64, g: GaussianRef) -> SupDistance {
    let w = (10.0 * (n as f64 * g.sigma_sq()).sqrt()).ceil() as i64;
    let lo = p.min_support().min(-w);
    let hi = p.max_support().max(w);
    let root_n = (n as f64).sqrt();
    let masses = p.float_masses();
    let off = p.offset();
    (lo..=hi)
        .into_par_iter()
        .map(|x| {
            let i = x - off;
            let mass = if i >= 0 && (i as usize) < masses.len() {
                masses[i as usize]
            } else {
                0.0
            };
            let d = (root_n * mass - g.scaled_density(x as f64, n)).abs();
            SupDistance { value: d, argmax: x }
        })
        .reduce(
            || SupDistance {
                value: 0.0,
                argmax: 0,
            },
            |a, b| {
                if b.value > a.value || (b.value == a.value && b.argmax < a.argmax) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Exact discretized Gaussian heat kernel: masses proportional to
/// `e^{-x²/(2 s)}` on `|x| <= 12√s + 1`, normalized.
pub fn discrete_gaussian(scale: f64) -> Result<LatticePmf> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    let b = (12.0 * scale.sqrt()).ceil() as i64 + 1;
    let w: Vec<f64> = (-b..=b)
        .map(|x| (-(x as f64).powi(2) / (2.0 * scale)).exp())
        .collect();
    LatticePmf::float_normalized(-b, w)
}
