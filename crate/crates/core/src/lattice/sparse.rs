use std::collections::HashMap;

use super::pmf::LatticePmf;
use crate::error::{Error, Result};

/// Float law stored as sorted `(point, mass)` pairs, for convolutions whose
/// support is wide but carries mass on few points. Masses below `prune` are
/// dropped after each product.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseLaw {
    points: Vec<(i64, f64)>,
    prune: f64,
}

impl SparseLaw {
    pub fn from_pmf(p: &LatticePmf, prune: f64) -> Self {
        Self {
            points: p.points().filter(|(_, m)| *m >= prune).collect(),
            prune,
        }
    }

    pub fn delta(x: i64, prune: f64) -> Self {
        Self {
            points: vec![(x, 1.0)],
            prune,
        }
    }

    pub fn points(&self) -> &[(i64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mass dropped by pruning so far (`1 - Σ masses`).
    pub fn missing_mass(&self) -> f64 {
        1.0 - crate::numeric::sum(self.points.iter().map(|p| p.1))
    }

    pub fn convolve(&self, other: &SparseLaw) -> SparseLaw {
        let mut acc: HashMap<i64, f64> = HashMap::with_capacity(self.len().max(other.len()) * 2);
        for &(x, a) in &self.points {
            for &(y, b) in &other.points {
                let m = a * b;
                if m >= self.prune * 1e-20 {
                    *acc.entry(x + y).or_insert(0.0) += m;
                }
            }
        }
        let mut points: Vec<(i64, f64)> = acc.into_iter().filter(|(_, m)| *m >= self.prune).collect();
        points.sort_unstable_by_key(|p| p.0);
        SparseLaw {
            points,
            prune: self.prune,
        }
    }

    pub fn power(&self, m: u64) -> Result<SparseLaw> {
        if m == 0 {
            return Err(Error::InvalidArgument("convolution power needs m >= 1".into()));
        }
        let mut result: Option<SparseLaw> = None;
        let mut base = self.clone();
        let mut e = m;
        loop {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.convolve(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.convolve(&base);
        }
        Ok(result.expect("m >= 1"))
    }

    /// Dense law, renormalized over the retained points.
    pub fn to_pmf(&self, cap: u64) -> Result<LatticePmf> {
        let (Some(first), Some(last)) = (self.points.first(), self.points.last()) else {
            return Err(Error::InvalidLaw("empty sparse law".into()));
        };
        let span = (last.0 - first.0 + 1) as u64;
        if span > cap {
            return Err(Error::SupportCap { requested: span, cap });
        }
        let mut dense = vec![0.0; span as usize];
        for &(x, m) in &self.points {
            dense[(x - first.0) as usize] = m;
        }
        LatticePmf::float_normalized(first.0, dense)
    }
}
