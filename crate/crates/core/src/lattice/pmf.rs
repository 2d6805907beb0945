use std::collections::BTreeMap;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, Neumaier};

/// Allowed drift of the total mass of a float-mode law.
pub const FLOAT_MASS_TOLERANCE: f64 = 1.0 / (1u64 << 40) as f64;

/// Arithmetic mode of a [`LatticePmf`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Float,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Float => write!(f, "float"),
        }
    }
}

/// Mass vector of a lattice law, indexed from the law's offset.
#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

impl Masses {
    pub fn len(&self) -> usize {
        match self {
            Masses::Exact(v) => v.len(),
            Masses::Float(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self {
            Masses::Exact(_) => Mode::Exact,
            Masses::Float(_) => Mode::Float,
        }
    }
}

/// A probability mass function on the integers with finite support.
///
/// Masses are stored densely from `offset`; the first and last entries are
/// always nonzero. Exact laws sum to one exactly, float laws to within
/// [`FLOAT_MASS_TOLERANCE`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct LatticePmf {
    offset: i64,
    masses: Masses,
}

impl LatticePmf {
    /// Exact law from a dense mass vector starting at `offset`.
    pub fn exact(offset: i64, masses: Vec<BigRational>) -> Result<Self> {
        if let Some(m) = masses.iter().find(|m| m.is_negative()) {
            return Err(Error::InvalidLaw(format!("negative mass {m}")));
        }
        let total: BigRational = masses.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::InvalidLaw(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::trimmed(offset, Masses::Exact(masses)))
    }

    /// Float law from a dense mass vector starting at `offset`.
    pub fn float(offset: i64, masses: Vec<f64>) -> Result<Self> {
        if let Some(m) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidLaw(format!("invalid mass {m}")));
        }
        let total = numeric::sum(masses.iter().copied());
        if (total - 1.0).abs() > FLOAT_MASS_TOLERANCE {
            return Err(Error::InvalidLaw(format!("masses sum to {total}, not 1")));
        }
        Ok(Self::trimmed(offset, Masses::Float(masses)))
    }

    /// Float law from nonnegative weights, normalized to total mass one.
    pub fn float_normalized(offset: i64, weights: Vec<f64>) -> Result<Self> {
        let total = numeric::sum(weights.iter().copied());
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidLaw(format!("weights sum to {total}")));
        }
        Self::float(offset, weights.into_iter().map(|w| w / total).collect())
    }

    /// Exact law from `(point, mass)` pairs; repeated points are merged.
    pub fn exact_from_points(points: impl IntoIterator<Item = (i64, BigRational)>) -> Result<Self> {
        let mut map: BTreeMap<i64, BigRational> = BTreeMap::new();
        for (x, m) in points {
            *map.entry(x).or_insert_with(BigRational::zero) += m;
        }
        let (offset, dense) = densify(map, BigRational::zero)?;
        Self::exact(offset, dense)
    }

    /// Float law from `(point, mass)` pairs; repeated points are merged.
    pub fn float_from_points(points: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        let mut map: BTreeMap<i64, f64> = BTreeMap::new();
        for (x, m) in points {
            *map.entry(x).or_insert(0.0) += m;
        }
        let (offset, dense) = densify(map, || 0.0)?;
        Self::float(offset, dense)
    }

    /// Point mass at `x`.
    pub fn delta(x: i64, mode: Mode) -> Self {
        let masses = match mode {
            Mode::Exact => Masses::Exact(vec![BigRational::one()]),
            Mode::Float => Masses::Float(vec![1.0]),
        };
        Self { offset: x, masses }
    }

    pub(crate) fn from_parts_unchecked(offset: i64, masses: Masses) -> Self {
        Self::trimmed(offset, masses)
    }

    fn trimmed(offset: i64, masses: Masses) -> Self {
        fn bounds<T>(v: &[T], nonzero: impl Fn(&T) -> bool) -> (usize, usize) {
            let first = v.iter().position(&nonzero).unwrap_or(0);
            let last = v.iter().rposition(&nonzero).map_or(first, |i| i + 1);
            (first, last.max(first))
        }
        match masses {
            Masses::Exact(v) => {
                let (a, b) = bounds(&v, |m| !m.is_zero());
                Self {
                    offset: offset + a as i64,
                    masses: Masses::Exact(v[a..b].to_vec()),
                }
            }
            Masses::Float(v) => {
                let (a, b) = bounds(&v, |m| *m != 0.0);
                Self {
                    offset: offset + a as i64,
                    masses: Masses::Float(v[a..b].to_vec()),
                }
            }
        }
    }

    pub fn mode(&self) -> Mode {
        self.masses.mode()
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    /// Smallest support point.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn min_support(&self) -> i64 {
        self.offset
    }

    pub fn max_support(&self) -> i64 {
        self.offset + self.masses.len() as i64 - 1
    }

    /// Number of lattice points spanned by the support.
    pub fn span(&self) -> usize {
        self.masses.len()
    }

    /// Probability of `x` as a float.
    pub fn prob(&self, x: i64) -> f64 {
        let i = x - self.offset;
        if i < 0 || i as usize >= self.masses.len() {
            return 0.0;
        }
        match &self.masses {
            Masses::Exact(v) => v[i as usize].to_f64().unwrap_or(0.0),
            Masses::Float(v) => v[i as usize],
        }
    }

    /// Exact probability of `x`; `None` for float laws.
    pub fn exact_prob(&self, x: i64) -> Option<BigRational> {
        match &self.masses {
            Masses::Exact(v) => {
                let i = x - self.offset;
                if i < 0 || i as usize >= v.len() {
                    Some(BigRational::zero())
                } else {
                    Some(v[i as usize].clone())
                }
            }
            Masses::Float(_) => None,
        }
    }

    /// `(point, probability)` pairs over the support, zeros skipped.
    pub fn points(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let floats: Vec<f64> = match &self.masses {
            Masses::Exact(v) => v.iter().map(|m| m.to_f64().unwrap_or(0.0)).collect(),
            Masses::Float(v) => v.clone(),
        };
        let offset = self.offset;
        floats
            .into_iter()
            .enumerate()
            .filter(|(_, m)| *m != 0.0)
            .map(move |(i, m)| (offset + i as i64, m))
    }

    /// Exact `(point, probability)` pairs; `None` for float laws.
    pub fn exact_points(&self) -> Option<Vec<(i64, BigRational)>> {
        match &self.masses {
            Masses::Exact(v) => Some(
                v.iter()
                    .enumerate()
                    .filter(|(_, m)| !m.is_zero())
                    .map(|(i, m)| (self.offset + i as i64, m.clone()))
                    .collect(),
            ),
            Masses::Float(_) => None,
        }
    }

    /// Dense float masses (converted if the law is exact).
    pub fn float_masses(&self) -> Vec<f64> {
        match &self.masses {
            Masses::Exact(v) => v.iter().map(|m| m.to_f64().unwrap_or(0.0)).collect(),
            Masses::Float(v) => v.clone(),
        }
    }

    pub fn to_float(&self) -> Self {
        Self {
            offset: self.offset,
            masses: Masses::Float(self.float_masses()),
        }
    }

    /// Law of `factor * X`.
    pub fn scaled(&self, factor: i64) -> Result<Self> {
        if factor == 0 {
            return Ok(Self::delta(0, self.mode()));
        }
        match &self.masses {
            Masses::Exact(_) => {
                let pts = self.exact_points().unwrap_or_default();
                Self::exact_from_points(pts.into_iter().map(|(x, m)| (x * factor, m)))
            }
            Masses::Float(_) => {
                let pts: Vec<_> = self.points().collect();
                Self::float_from_points(pts.into_iter().map(|(x, m)| (x * factor, m)))
            }
        }
    }

    /// Float moment `E[X^r]`, compensated.
    pub fn moment(&self, r: u32) -> f64 {
        self.points()
            .map(|(x, m)| (x as f64).powi(r as i32) * m)
            .collect::<Neumaier>()
            .value()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.points()
            .map(|(x, m)| {
                let d = x as f64 - mu;
                d * d * m
            })
            .collect::<Neumaier>()
            .value()
    }

    /// Exact moment `E[X^r]`; `None` for float laws.
    pub fn exact_moment(&self, r: u32) -> Option<BigRational> {
        let pts = self.exact_points()?;
        Some(
            pts.into_iter()
                .map(|(x, m)| m * BigRational::from_integer(BigInt::from(x).pow(r)))
                .sum(),
        )
    }

    /// `P(X = x) == P(X = -x)` for every `x`; exact equality in exact mode,
    /// `tol` absolute otherwise.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.min_support() != -self.max_support() {
            return false;
        }
        match &self.masses {
            Masses::Exact(v) => v.iter().eq(v.iter().rev()),
            Masses::Float(v) => v.iter().zip(v.iter().rev()).all(|(a, b)| (a - b).abs() <= tol),
        }
    }

    /// Total mass as a float.
    pub fn total_mass(&self) -> f64 {
        numeric::sum(self.float_masses())
    }

    /// Supremum distance `max_x |p(x) - q(x)|`.
    pub fn sup_distance(&self, other: &LatticePmf) -> f64 {
        let lo = self.min_support().min(other.min_support());
        let hi = self.max_support().max(other.max_support());
        (lo..=hi)
            .map(|x| (self.prob(x) - other.prob(x)).abs())
            .fold(0.0, f64::max)
    }

    /// Total variation distance `½ Σ |p(x) - q(x)|`.
    pub fn total_variation(&self, other: &LatticePmf) -> f64 {
        let lo = self.min_support().min(other.min_support());
        let hi = self.max_support().max(other.max_support());
        0.5 * numeric::sum((lo..=hi).map(|x| (self.prob(x) - other.prob(x)).abs()))
    }
}

fn densify<T: Clone>(map: BTreeMap<i64, T>, zero: impl Fn() -> T) -> Result<(i64, Vec<T>)> {
    let (Some((&lo, _)), Some((&hi, _))) = (map.first_key_value(), map.last_key_value()) else {
        return Err(Error::InvalidLaw("empty support".into()));
    };
    let mut dense = vec![zero(); (hi - lo + 1) as usize];
    for (x, m) in map {
        dense[(x - lo) as usize] = m;
    }
    Ok((lo, dense))
}

/// Wire form: `{"offset": int, "masses": [...], "mode": "exact" | "float"}`
/// with exact masses written as rational strings.
#[derive(Serialize, Deserialize)]
struct PmfRepr {
    offset: i64,
    masses: Vec<serde_json::Value>,
    mode: Mode,
}

impl From<LatticePmf> for PmfRepr {
    fn from(p: LatticePmf) -> Self {
        let masses = match &p.masses {
            Masses::Exact(v) => v.iter().map(|m| serde_json::Value::String(m.to_string())).collect(),
            Masses::Float(v) => v.iter().map(|m| serde_json::json!(m)).collect(),
        };
        PmfRepr {
            offset: p.offset,
            masses,
            mode: p.mode(),
        }
    }
}

impl TryFrom<PmfRepr> for LatticePmf {
    type Error = Error;

    fn try_from(r: PmfRepr) -> Result<Self> {
        match r.mode {
            Mode::Exact => {
                let masses = r
                    .masses
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => BigRational::from_str(s.trim())
                            .map_err(|e| Error::InvalidLaw(format!("bad rational {s:?}: {e}"))),
                        serde_json::Value::Number(n) if n.is_i64() => {
                            Ok(BigRational::from_integer(BigInt::from(n.as_i64().unwrap_or(0))))
                        }
                        other => Err(Error::InvalidLaw(format!("exact mass must be a rational string, got {other}"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                LatticePmf::exact(r.offset, masses)
            }
            Mode::Float => {
                let masses = r
                    .masses
                    .iter()
                    .map(|v| {
                        v.as_f64()
                            .ok_or_else(|| Error::InvalidLaw(format!("float mass must be a number, got {v}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                LatticePmf::float(r.offset, masses)
            }
        }
    }
}

/// Parses `"a/b"` or `"a"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    BigRational::from_str(s.trim()).map_err(|e| Error::InvalidArgument(format!("bad rational {s:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn exact_rejects_bad_total() {
        assert!(LatticePmf::exact(0, vec![q(1, 2), q(1, 3)]).is_err());
        assert!(LatticePmf::exact(0, vec![q(3, 2), q(-1, 2)]).is_err());
    }

    #[test]
    fn trims_zero_ends() {
        let p = LatticePmf::exact(-2, vec![q(0, 1), q(1, 2), q(0, 1), q(1, 2), q(0, 1)]).unwrap();
        assert_eq!(p.min_support(), -1);
        assert_eq!(p.max_support(), 1);
        assert_eq!(p.span(), 3);
    }

    #[test]
    fn float_tolerance_boundary() {
        assert!(LatticePmf::float(0, vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(LatticePmf::float(0, vec![0.5, 0.5 + 1e-10]).is_err());
    }

    #[test]
    fn json_round_trip_exact() {
        let p = LatticePmf::exact(-1, vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"offset":-1,"masses":["1/4","1/2","1/4"],"mode":"exact"}"#);
        let back: LatticePmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_rejects_invalid_law() {
        let bad = r#"{"offset":0,"masses":["1/4","1/4"],"mode":"exact"}"#;
        assert!(serde_json::from_str::<LatticePmf>(bad).is_err());
    }

    #[test]
    fn symmetric_check_and_moments() {
        let p = LatticePmf::exact(-1, vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
        assert!(p.is_symmetric(0.0));
        assert_eq!(p.exact_moment(1).unwrap(), q(0, 1));
        assert_eq!(p.exact_moment(2).unwrap(), q(1, 2));
        let s = p.scaled(3).unwrap();
        assert_eq!(s.exact_prob(3).unwrap(), q(1, 4));
        assert_eq!(s.exact_prob(1).unwrap(), q(0, 1));
    }
}
