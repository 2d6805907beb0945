use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub type Label = u16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Tower {
    B,
    F,
}

impl Tower {
    pub fn index(self) -> usize {
        match self {
            Tower::B => 0,
            Tower::F => 1,
        }
    }
}

/// A base cell together with the rungs stacked over it. Every rung of the
/// column has the column's mass; `xi[j]` is the ξ-atom containing rung `j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Column {
    pub tower: Tower,
    pub xi: Vec<Label>,
    #[serde(serialize_with = "ser_rational")]
    pub mass: BigRational,
}

impl Column {
    pub fn top_label(&self) -> Label {
        *self.xi.last().expect("columns are nonempty")
    }
}

pub(crate) fn ser_rational<S: serde::Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn ser_rationals<S: serde::Serializer>(qs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(qs.len()))?;
    for q in qs {
        seq.serialize_element(&q.to_string())?;
    }
    seq.end()
}

/// `{2l, 2l+1}` castle presented as columns over the two bases `B` and `F`.
/// `T` moves a point one rung up; on the top it maps column `c` onto the
/// bases proportionally, `m(c → s) = m(c) m(s) / m(B ⊎ F)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CastleModel {
    pub l: u32,
    pub xi_atoms: u32,
    #[serde(serialize_with = "ser_rationals")]
    pub base_mass: Vec<BigRational>,
    #[serde(serialize_with = "ser_rationals")]
    pub xi_weights: Vec<BigRational>,
    pub columns: Vec<Column>,
}

/// Outcome of [`CastleModel::audit`]; `failures` lists every broken invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CastleAudit {
    pub mass_balance: bool,
    pub rung_masses: bool,
    pub xi_independence: bool,
    pub top_map: bool,
    pub failures: Vec<String>,
}

impl CastleAudit {
    pub fn ok(&self) -> bool {
        self.mass_balance && self.rung_masses && self.xi_independence && self.top_map
    }
}

fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl CastleModel {
    pub fn height(&self, t: Tower) -> usize {
        2 * self.l as usize + t.index()
    }

    /// `m(B) + m(F)`.
    pub fn base_total(&self) -> BigRational {
        self.columns.iter().map(|c| c.mass.clone()).sum()
    }

    /// Explicit top-to-base transport `(from, to, mass)`.
    pub fn top_map(&self) -> Vec<(usize, usize, BigRational)> {
        let total = self.base_total();
        let mut out = Vec::with_capacity(self.columns.len().pow(2));
        for (i, c) in self.columns.iter().enumerate() {
            for (j, s) in self.columns.iter().enumerate() {
                out.push((i, j, &c.mass * &s.mass / &total));
            }
        }
        out
    }

    /// Rung cells and the top transport with masses as exact rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        let mut cells = Vec::new();
        for (i, c) in self.columns.iter().enumerate() {
            for (rung, d) in c.xi.iter().enumerate() {
                cells.push(serde_json::json!({
                    "column": i,
                    "tower": c.tower,
                    "rung": rung,
                    "xi_label": d,
                    "mass": c.mass.to_string(),
                }));
            }
        }
        let top_map: Vec<_> = self
            .top_map()
            .into_iter()
            .map(|(from, to, m)| serde_json::json!({"from": from, "to": to, "mass": m.to_string()}))
            .collect();
        serde_json::json!({
            "l": self.l,
            "xi_atoms": self.xi_atoms,
            "base_mass": self.base_mass.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "xi_weights": self.xi_weights.iter().map(|m| m.to_string()).collect::<Vec<_>>(),
            "cells": cells,
            "top_map": top_map,
        })
    }

    /// Exact audit of the castle invariants.
    pub fn audit(&self) -> CastleAudit {
        let mut failures = Vec::new();
        let two_l = BigRational::from_integer(BigInt::from(2 * self.l));
        let balance = &two_l * &self.base_mass[0] + (&two_l + BigRational::one()) * &self.base_mass[1];
        let mass_balance = balance.is_one();
        if !mass_balance {
            failures.push(format!("2l m(B) + (2l+1) m(F) = {balance}"));
        }

        let mut rung_masses = true;
        for t in [Tower::B, Tower::F] {
            let tower_mass: BigRational = self.columns.iter().filter(|c| c.tower == t).map(|c| c.mass.clone()).sum();
            if tower_mass != self.base_mass[t.index()] {
                rung_masses = false;
                failures.push(format!("tower {t:?} base mass {tower_mass}"));
            }
            if self.columns.iter().any(|c| c.tower == t && c.xi.len() != self.height(t)) {
                rung_masses = false;
                failures.push(format!("tower {t:?} has a column of the wrong height"));
            }
        }

        let mut xi_independence = true;
        let xi_total: BigRational = self.xi_weights.iter().cloned().sum();
        if !xi_total.is_one() {
            xi_independence = false;
            failures.push(format!("xi weights sum to {xi_total}"));
        }
        for t in [Tower::B, Tower::F] {
            for j in 0..self.height(t) {
                for (d, w) in self.xi_weights.iter().enumerate() {
                    let inter: BigRational = self
                        .columns
                        .iter()
                        .filter(|c| c.tower == t && c.xi.get(j) == Some(&(d as Label)))
                        .map(|c| c.mass.clone())
                        .sum();
                    if inter != &self.base_mass[t.index()] * w {
                        xi_independence = false;
                        failures.push(format!("rung {t:?}{j} and atom {d}: {inter}"));
                    }
                }
            }
        }

        let map = self.top_map();
        let mut top_map = true;
        for (i, c) in self.columns.iter().enumerate() {
            let out: BigRational = map.iter().filter(|e| e.0 == i).map(|e| e.2.clone()).sum();
            let inn: BigRational = map.iter().filter(|e| e.1 == i).map(|e| e.2.clone()).sum();
            if out != c.mass || inn != c.mass {
                top_map = false;
                failures.push(format!("top map not mass preserving at column {i}"));
            }
        }
        CastleAudit {
            mass_balance,
            rung_masses,
            xi_independence,
            top_map,
            failures,
        }
    }
}

/// Castle with the given tower weights and ξ weights. Each tower is cut into
/// one column per ξ-atom in proportion to the ξ weights; rung `j` relabels the
/// columns by a random permutation that preserves weights, so every rung is
/// independent of ξ while labels still vary along a column.
pub fn build_castle_with_xi(l: u32, tower_weights: [u64; 2], xi_weights: Vec<BigRational>, rng: &mut ChaCha8Rng) -> Result<CastleModel> {
    if l == 0 {
        return Err(Error::InvalidArgument("castle needs l >= 1".into()));
    }
    if xi_weights.is_empty() || xi_weights.iter().any(|w| !w.is_positive()) {
        return Err(Error::InvalidArgument("xi weights must be positive".into()));
    }
    if tower_weights.contains(&0) {
        return Err(Error::InvalidArgument("tower weights must be positive".into()));
    }
    let norm = 2 * l as u64 * tower_weights[0] + (2 * l as u64 + 1) * tower_weights[1];
    let base_mass = vec![q(tower_weights[0], norm), q(tower_weights[1], norm)];
    // ξ-atoms of equal weight may be permuted between columns at each rung
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (d, w) in xi_weights.iter().enumerate() {
        match classes.iter_mut().find(|c| &xi_weights[c[0]] == w) {
            Some(c) => c.push(d),
            None => classes.push(vec![d]),
        }
    }
    let mut columns = Vec::new();
    for t in [Tower::B, Tower::F] {
        let h = 2 * l as usize + t.index();
        let mut words = vec![Vec::with_capacity(h); xi_weights.len()];
        for _ in 0..h {
            let mut perm: Vec<usize> = (0..xi_weights.len()).collect();
            for class in &classes {
                let mut shuffled = class.clone();
                shuffled.shuffle(rng);
                for (from, to) in class.iter().zip(shuffled) {
                    perm[*from] = to;
                }
            }
            for (i, w) in words.iter_mut().enumerate() {
                w.push(perm[i] as Label);
            }
        }
        for (i, xi) in words.into_iter().enumerate() {
            columns.push(Column {
                tower: t,
                xi,
                mass: &base_mass[t.index()] * &xi_weights[i],
            });
        }
    }
    let xi_atoms = xi_weights.len() as u32;
    Ok(CastleModel {
        l,
        xi_atoms,
        base_mass,
        xi_weights,
        columns,
    })
}

/// Random rational castle: tower weights in `1..=9`, ξ weights in `1..=3`
/// (repeats make rung relabelling possible), normalized.
pub fn build_synthetic_castle(l: u32, xi_atoms: u32, seed: u64) -> Result<CastleModel> {
    if xi_atoms == 0 {
        return Err(Error::InvalidArgument("xi_atoms must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tw = [rng.random_range(1..=9u64), rng.random_range(1..=9u64)];
    let raw: Vec<u64> = (0..xi_atoms).map(|_| rng.random_range(1..=3u64)).collect();
    let total: u64 = raw.iter().sum();
    let xi = raw.into_iter().map(|w| q(w, total)).collect();
    build_castle_with_xi(l, tw, xi, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_castle_is_valid() {
        let c = build_synthetic_castle(1, 1, 0).unwrap();
        assert_eq!(c.columns.len(), 2);
        assert!(c.audit().ok());
    }

    #[test]
    fn two_atom_castle_audits() {
        let c = build_synthetic_castle(2, 2, 7).unwrap();
        let a = c.audit();
        assert!(a.ok(), "{:?}", a.failures);
        assert_eq!(c.height(Tower::B), 4);
        assert_eq!(c.height(Tower::F), 5);
    }

    #[test]
    fn labels_vary_when_weights_repeat() {
        let xi = vec![q(1, 4); 4];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = build_castle_with_xi(3, [2, 3], xi, &mut rng).unwrap();
        assert!(c.audit().ok());
        assert!(c.columns.iter().any(|col| col.xi.iter().any(|&d| d != col.xi[0])));
    }

    #[test]
    fn corrupted_balance_detected() {
        let mut c = build_synthetic_castle(1, 2, 1).unwrap();
        c.columns[0].mass += q(1, 1_000_000);
        let a = c.audit();
        assert!(!a.rung_masses && !a.xi_independence);
    }
}
