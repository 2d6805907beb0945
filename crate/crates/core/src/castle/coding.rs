use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use super::model::{CastleModel, Label, Tower};
use crate::error::{Error, Result};

/// Default bound on the number of refined cells.
pub const CELL_CAP: u64 = 10_000_000;

/// Every cell mass is a multiple of `1/RESOLUTION` of the common unit, so a
/// perturbation of `10⁻⁶` stays representable.
pub const RESOLUTION: u128 = 1_000_000;

/// The `ζ₁′`-cell of a column top: the column, the top label of its
/// predecessor when the column is in `B`, and the word written on its top `l`
/// rungs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TopSummary {
    pub col: u32,
    pub pred_top_label: Option<Label>,
    pub top: u32,
}

/// Atom of the final refinement: a column, the summary of the column below it
/// in the orbit, and the words written on its top and bottom rungs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RefinedCell {
    pub col: u32,
    pub pred: u32,
    pub top: u32,
    pub base: u32,
    /// Numerator over [`SymbolAssignment::den`].
    pub mass: u128,
}

/// Symbols written on a castle by one coding step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolAssignment {
    pub l: u32,
    pub alphabet: Vec<String>,
    #[serde(serialize_with = "ser_rationals")]
    pub marginal: Vec<BigRational>,
    /// Integer weights of the marginal over `weight_total`.
    pub weights: Vec<u128>,
    pub weight_total: u128,
    pub den: u128,
    pub summaries: Vec<TopSummary>,
    pub cells: Vec<RefinedCell>,
}

fn ser_rationals<S: serde::Serializer>(qs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(qs.iter().map(|q| q.to_string()))
}

pub(crate) fn overflow() -> Error {
    Error::InvalidArgument("exact cell masses exceed 128-bit numerators".into())
}

pub(crate) fn mul(a: u128, b: u128) -> Result<u128> {
    a.checked_mul(b).ok_or_else(overflow)
}

fn pow(a: u128, e: usize) -> Result<u128> {
    a.checked_pow(e as u32).ok_or_else(overflow)
}

/// Integer numerators of `xs` over their least common denominator.
fn common_denominator(xs: &[BigRational]) -> Result<(Vec<u128>, u128)> {
    let den = xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let nums = xs
        .iter()
        .map(|x| (x.numer() * (&den / x.denom())).to_u128().ok_or_else(overflow))
        .collect::<Result<Vec<_>>>()?;
    Ok((nums, den.to_u128().ok_or_else(overflow)?))
}

impl SymbolAssignment {
    pub fn alphabet_size(&self) -> u64 {
        self.alphabet.len() as u64
    }

    /// Length of the word written on the bottom rungs of a column.
    pub fn base_len(&self, t: Tower) -> usize {
        self.l as usize + t.index()
    }

    /// Word along the whole column as a base-`|A|` index, bottom rung first.
    pub fn column_word(&self, c: &CastleModel, r: &RefinedCell) -> u64 {
        let t = c.columns[r.col as usize].tower;
        r.base as u64 + r.top as u64 * self.alphabet_size().pow(self.base_len(t) as u32)
    }

    pub fn decode(&self, mut word: u64, len: usize) -> Vec<usize> {
        let k = self.alphabet_size();
        (0..len)
            .map(|_| {
                let a = word % k;
                word /= k;
                a as usize
            })
            .collect()
    }

    pub fn word_weight(&self, word: u64, len: usize) -> u128 {
        self.decode(word, len).into_iter().map(|a| self.weights[a]).product()
    }

    pub fn mass(&self, r: &RefinedCell) -> BigRational {
        BigRational::new(BigInt::from(r.mass), BigInt::from(self.den))
    }

    /// Exact check that coding only subdivided the castle: each column keeps
    /// its mass, and the tops carrying a summary weigh as much as the bases
    /// whose predecessor carries it.
    pub fn audit(&self, c: &CastleModel) -> Vec<String> {
        let mut failures = Vec::new();
        let mut per_col = vec![0u128; c.columns.len()];
        let mut tops: HashMap<TopSummary, u128> = HashMap::new();
        let mut bases = vec![0u128; self.summaries.len()];
        for r in &self.cells {
            per_col[r.col as usize] += r.mass;
            *tops.entry(self.own_summary(c, r)).or_default() += r.mass;
            bases[r.pred as usize] += r.mass;
        }
        for (i, col) in c.columns.iter().enumerate() {
            let got = BigRational::new(BigInt::from(per_col[i]), BigInt::from(self.den));
            if got != col.mass {
                failures.push(format!("column {i} carries {got}, castle says {}", col.mass));
            }
        }
        for (i, s) in self.summaries.iter().enumerate() {
            let top = tops.get(s).copied().unwrap_or(0);
            if top != bases[i] {
                failures.push(format!("summary {s:?}: top mass {top} but base mass {}", bases[i]));
            }
        }
        failures
    }

    /// `ζ₁′`-cell of the top of `r`'s column.
    pub fn own_summary(&self, c: &CastleModel, r: &RefinedCell) -> TopSummary {
        let col = &c.columns[r.col as usize];
        let pred_top_label = match col.tower {
            Tower::B => Some(c.columns[self.summaries[r.pred as usize].col as usize].top_label()),
            Tower::F => None,
        };
        TopSummary {
            col: r.col,
            pred_top_label,
            top: r.top,
        }
    }

    /// Refined cells with their words spelled out and masses as reduced
    /// rational strings.
    pub fn to_json(&self, c: &CastleModel) -> serde_json::Value {
        let spell = |w: u64, len: usize| -> Vec<String> { self.decode(w, len).into_iter().map(|a| self.alphabet[a].clone()).collect() };
        let cells: Vec<_> = self
            .cells
            .iter()
            .map(|r| {
                let t = c.columns[r.col as usize].tower;
                serde_json::json!({
                    "column": r.col,
                    "tower": t,
                    "pred": self.summaries[r.pred as usize],
                    "base_word": spell(r.base as u64, self.base_len(t)),
                    "top_word": spell(r.top as u64, self.l as usize),
                    "mass": self.mass(r).to_string(),
                })
            })
            .collect();
        serde_json::json!({
            "l": self.l,
            "alphabet": self.alphabet,
            "marginal": self.marginal.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "cells": cells,
        })
    }

    /// Adds `10⁻⁶` to the mass of one cell, for negative tests.
    pub fn corrupt(&mut self, cell: usize) {
        self.cells[cell].mass += self.den / RESOLUTION;
    }
}

/// Number of refined cells [`code_level`] would create.
pub fn refined_cell_count(c: &CastleModel, alphabet_size: u64) -> u64 {
    let k = alphabet_size as u128;
    let l = c.l as usize;
    let mut tops: Vec<Label> = c.columns.iter().map(|x| x.top_label()).collect();
    tops.sort_unstable();
    tops.dedup();
    let labels = tops.len() as u128;
    let b_cols = c.columns.iter().filter(|x| x.tower == Tower::B).count() as u128;
    let f_cols = c.columns.len() as u128 - b_cols;
    let summaries = (b_cols * labels + f_cols).saturating_mul(k.saturating_pow(l as u32));
    let per_top = k.saturating_pow(l as u32);
    let cells = summaries
        .saturating_mul(per_top)
        .saturating_mul(b_cols.saturating_mul(k.saturating_pow(l as u32)) + f_cols.saturating_mul(k.saturating_pow(l as u32 + 1)));
    cells.min(u64::MAX as u128) as u64
}

pub fn code_level(c: &CastleModel, alphabet: &[String], marginal: &[BigRational], l: u32) -> Result<SymbolAssignment> {
    code_level_capped(c, alphabet, marginal, l, CELL_CAP)
}

/// One coding step. Each `ζ₁`-cell of the top splits into `|A|^l` pieces with
/// product masses and the word goes on the top `l` rungs; each `ζ`-cell of the
/// base (own top summary joined with the predecessor's) splits into `|A|^l`
/// pieces in `B` or `|A|^{l+1}` in `F`, written on the bottom rungs.
pub fn code_level_capped(c: &CastleModel, alphabet: &[String], marginal: &[BigRational], l: u32, cap: u64) -> Result<SymbolAssignment> {
    if l != c.l {
        return Err(Error::InvalidArgument(format!("castle has l = {}, coding asked for {l}", c.l)));
    }
    if alphabet.len() < 2 || alphabet.len() != marginal.len() {
        return Err(Error::InvalidArgument("alphabet needs at least two symbols and one weight per symbol".into()));
    }
    if marginal.iter().any(|p| !p.is_positive()) || marginal.iter().cloned().sum::<BigRational>() != BigRational::one() {
        return Err(Error::InvalidLaw("marginal must be positive and sum to 1".into()));
    }
    let count = refined_cell_count(c, alphabet.len() as u64);
    if count > cap {
        return Err(Error::CellCap { requested: count, cap });
    }
    if (alphabet.len() as u128).checked_pow(2 * l + 2).is_none_or(|x| x > u64::MAX as u128) {
        return Err(overflow());
    }
    let (weights, sq) = common_denominator(marginal)?;
    let col_masses: Vec<BigRational> = c.columns.iter().map(|x| x.mass.clone()).collect();
    let (colw, colden) = common_denominator(&col_masses)?;
    let mw: u128 = colw.iter().sum();
    let mut rhow: HashMap<Label, u128> = HashMap::new();
    for (x, w) in c.columns.iter().zip(&colw) {
        *rhow.entry(x.top_label()).or_default() += w;
    }
    let k = alphabet.len() as u64;
    let lu = l as usize;
    let word_weight = |mut word: u64, len: usize| -> Result<u128> {
        let mut acc = 1u128;
        for _ in 0..len {
            acc = mul(acc, weights[(word % k) as usize])?;
            word /= k;
        }
        Ok(acc)
    };
    let top_words = k.pow(l);
    let top_w = (0..top_words).map(|w| word_weight(w, lu)).collect::<Result<Vec<_>>>()?;

    let mut labels: Vec<Label> = rhow.keys().copied().collect();
    labels.sort_unstable();
    let mut summaries = Vec::new();
    let mut summary_w = Vec::new();
    for (pc, col) in c.columns.iter().enumerate() {
        let pps: Vec<Option<Label>> = match col.tower {
            Tower::B => labels.iter().map(|&d| Some(d)).collect(),
            Tower::F => vec![None],
        };
        for pp in pps {
            let pp_w = pp.map_or(mw, |d| rhow[&d]);
            for top in 0..top_words {
                summaries.push(TopSummary {
                    col: pc as u32,
                    pred_top_label: pp,
                    top: top as u32,
                });
                summary_w.push(mul(mul(colw[pc], pp_w)?, top_w[top as usize])?);
            }
        }
    }

    let den = mul(mul(mul(colden, mul(mw, mw)?)?, pow(sq, 3 * lu + 1)?)?, RESOLUTION)?;
    let mut cells = Vec::with_capacity(count as usize);
    for (ci, col) in c.columns.iter().enumerate() {
        let base_len = lu + col.tower.index();
        let pad = if col.tower == Tower::B { sq } else { 1 };
        let base_w = (0..k.pow(base_len as u32)).map(|w| word_weight(w, base_len)).collect::<Result<Vec<_>>>()?;
        let col_part = mul(mul(colw[ci], pad)?, RESOLUTION)?;
        for (si, sw) in summary_w.iter().enumerate() {
            let cs = mul(col_part, *sw)?;
            for (top, tw) in top_w.iter().enumerate() {
                let cst = mul(cs, *tw)?;
                for (base, bw) in base_w.iter().enumerate() {
                    cells.push(RefinedCell {
                        col: ci as u32,
                        pred: si as u32,
                        top: top as u32,
                        base: base as u32,
                        mass: mul(cst, *bw)?,
                    });
                }
            }
        }
    }
    Ok(SymbolAssignment {
        l,
        alphabet: alphabet.to_vec(),
        marginal: marginal.to_vec(),
        weights,
        weight_total: sq,
        den,
        summaries,
        cells,
    })
}

/// Symbols `"0"`, `"1"`, ... for a marginal given only by its weights.
pub fn numeric_alphabet(size: usize) -> Vec<String> {
    (0..size).map(|i| i.to_string()).collect()
}
