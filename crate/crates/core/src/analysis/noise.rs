use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{convolve, discrete_gaussian, sup_gaussian_distance, GaussianRef, LatticePmf};
use crate::numeric::Neumaier;

/// `a_n = (n / (log₂ n)^{1/4})^{1/2}`.
pub fn noise_cutoff(n: u64) -> f64 {
    let nf = n as f64;
    (nf / nf.log2().powf(0.25)).sqrt()
}

/// The small independent perturbation `Z_n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub z_law: LatticePmf,
    pub second_moment: f64,
    pub a_n: f64,
    /// Markov tail bound scaled back to the unnormalized local scale,
    /// `(E Z² / a_n²) / √n`.
    pub r_n: f64,
}

impl NoiseSpec {
    pub fn new(z_law: LatticePmf, n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("noise cutoff needs n >= 2".into()));
        }
        let second_moment = z_law.moment(2);
        let a_n = noise_cutoff(n);
        Ok(Self {
            r_n: second_moment / (a_n * a_n) / (n as f64).sqrt(),
            z_law,
            second_moment,
            a_n,
        })
    }

    /// Symmetric law on `{−z, 0, z}` with `P(±z) = q` and `E Z² = n / √(log₂ n)`,
    /// `q = n / (2 z² √(log₂ n))`.
    pub fn three_point(n: u64, z: i64) -> Result<Self> {
        let target = n as f64 / (n as f64).log2().sqrt();
        let q = target / (2.0 * (z as f64).powi(2));
        if z <= 0 || !(q <= 0.5) {
            return Err(Error::InvalidArgument(format!("atom {z} too small for second moment {target}")));
        }
        Self::new(LatticePmf::float_from_points([(-z, q), (0, 1.0 - 2.0 * q), (z, q)])?, n)
    }

    /// `E Z² / a_n²`, which dominates `P(|Z| >= a_n)`.
    pub fn markov_bound(&self) -> f64 {
        self.second_moment / (self.a_n * self.a_n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoiseReport {
    #[serde(skip)]
    pub x_law: LatticePmf,
    pub sup_error_before: f64,
    pub sup_error_after: f64,
    pub tail_mass_beyond_a_n: f64,
    pub markov_bound: f64,
    /// `max(sup √n P(Y = x), sup of the reference density)`.
    pub local_max: f64,
    /// `sup_x Σ_{|z| < a_n} P(Z = z) |g(x − z) − g(x)|`.
    pub interior_drift: f64,
    /// `sup_error_before + 2 (local_max · markov_bound + interior_drift)`.
    pub budget: f64,
}

impl NoiseReport {
    pub fn within_budget(&self) -> bool {
        self.sup_error_after <= self.budget
    }
}

/// Compares `Y` and `X = Y + Z` with the reference Gaussian and splits the
/// change into the part from `|z| >= a_n` and the interior drift.
pub fn noise_stability(y: &LatticePmf, z: &NoiseSpec, n: u64, reference: GaussianRef) -> Result<NoiseReport> {
    let x_law = convolve(&y.to_float(), &z.z_law.to_float())?;
    let before = sup_gaussian_distance(y, n, reference);
    let after = sup_gaussian_distance(&x_law, n, reference);
    let mut tail = Neumaier::new();
    let mut interior = Vec::new();
    for (v, p) in z.z_law.points() {
        if (v as f64).abs() >= z.a_n {
            tail.add(p);
        } else {
            interior.push((v, p));
        }
    }
    let root = (n as f64).sqrt();
    let y_max = y.points().map(|p| p.1).fold(0.0, f64::max) * root;
    let local_max = y_max.max(reference.scaled_density(0.0, n));
    let w = (10.0 * (n as f64 * reference.sigma_sq()).sqrt()).ceil() as i64;
    let span = w + y.max_support().abs().max(y.min_support().abs()) + x_law.max_support().abs();
    let interior_drift = (-span..=span)
        .map(|x| {
            let g = reference.scaled_density(x as f64, n);
            interior
                .iter()
                .map(|&(v, p)| p * (reference.scaled_density((x - v) as f64, n) - g).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    let markov_bound = z.markov_bound();
    Ok(NoiseReport {
        x_law,
        sup_error_before: before,
        sup_error_after: after,
        tail_mass_beyond_a_n: tail.value(),
        markov_bound,
        local_max,
        interior_drift,
        budget: before + 2.0 * (local_max * markov_bound + interior_drift),
    })
}

/// Discrete Gaussian kernel at scale `nσ²`, the reference `Y` of the
/// noise-stability experiment.
pub fn gaussian_kernel(n: u64, reference: GaussianRef) -> Result<LatticePmf> {
    discrete_gaussian(n as f64 * reference.sigma_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Mode;

    #[test]
    fn cutoff_at_2_16() {
        assert!((noise_cutoff(1 << 16) - (65536.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn identity_noise_changes_nothing() {
        let n = 1024;
        let g = GaussianRef::limit();
        let y = gaussian_kernel(n, g).unwrap();
        let z = NoiseSpec::new(LatticePmf::delta(0, Mode::Float), n).unwrap();
        let r = noise_stability(&y, &z, n, g).unwrap();
        assert_eq!(r.sup_error_after, r.sup_error_before);
        assert_eq!(r.tail_mass_beyond_a_n, 0.0);
        assert!(r.within_budget());
    }

    #[test]
    fn markov_dominates_tail() {
        let n = 4096;
        let g = GaussianRef::limit();
        let y = gaussian_kernel(n, g).unwrap();
        for z0 in [40, 60, 100, 200] {
            let z = NoiseSpec::three_point(n, z0).unwrap();
            assert!((z.second_moment - 4096.0 / 12f64.sqrt()).abs() < 1e-9);
            let r = noise_stability(&y, &z, n, g).unwrap();
            assert!(r.tail_mass_beyond_a_n <= r.markov_bound);
            assert!(r.within_budget());
        }
    }
}
