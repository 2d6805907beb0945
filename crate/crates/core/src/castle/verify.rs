use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use super::coding::{overflow, SymbolAssignment, TopSummary};
use super::model::{CastleModel, Label, Tower};
use crate::error::{Error, Result};

/// A failing equality: which identity, on which set, for which word.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub identity: String,
    pub set: String,
    pub word: Vec<String>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub holds: bool,
    pub equalities: u64,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.checks.iter().find_map(|c| c.witness.as_ref())
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Names of the checked identities, in report order.
pub const IDENTITIES: [&str; 6] = ["eq1B", "eq1F", "eq1All", "eq2", "eq3", "main"];

#[derive(Clone, Copy)]
struct Win {
    key: u64,
    level: usize,
    len: usize,
}

struct Tally {
    /// Per key: mass of the set the windows start from, and the window length.
    expected: BTreeMap<u64, (u128, usize)>,
    inside: HashMap<(u64, u64), u128>,
    cross: HashMap<(u64, u64), BigRational>,
}

/// Windows inside a column are plain integer sums over the common
/// denominator; windows running over the top follow the transport, which
/// splits the mass of a top summary `σ` over the bases whose predecessor
/// carries `σ` in proportion to their masses.
struct Engine<'a> {
    c: &'a CastleModel,
    s: &'a SymbolAssignment,
    k: u64,
    own: Vec<u32>,
    succ: Vec<Vec<u32>>,
    z: Vec<u128>,
    words: Vec<u64>,
    class: Vec<u64>,
    label_slots: u64,
}

fn add(a: &mut u128, b: u128) -> Result<()> {
    *a = a.checked_add(b).ok_or_else(overflow)?;
    Ok(())
}

impl<'a> Engine<'a> {
    fn new(c: &'a CastleModel, s: &'a SymbolAssignment) -> Result<Self> {
        if s.l != c.l {
            return Err(Error::InvalidArgument("assignment was coded on a different castle".into()));
        }
        let index: HashMap<TopSummary, u32> = s.summaries.iter().enumerate().map(|(i, x)| (*x, i as u32)).collect();
        let mut succ = vec![Vec::new(); s.summaries.len()];
        let mut z = vec![0u128; s.summaries.len()];
        let label_slots = c.columns.iter().flat_map(|x| x.xi.iter()).map(|&d| d as u64 + 2).max().unwrap_or(2);
        let mut own = Vec::with_capacity(s.cells.len());
        let mut words = Vec::with_capacity(s.cells.len());
        let mut class = Vec::with_capacity(s.cells.len());
        for (i, r) in s.cells.iter().enumerate() {
            succ[r.pred as usize].push(i as u32);
            add(&mut z[r.pred as usize], r.mass)?;
            let summary = s.own_summary(c, r);
            own.push(index.get(&summary).copied().unwrap_or(u32::MAX));
            words.push(s.column_word(c, r));
            class.push(r.col as u64 * label_slots + summary.pred_top_label.map_or(0, |d| d as u64 + 1));
        }
        Ok(Self {
            c,
            s,
            k: s.alphabet_size(),
            own,
            succ,
            z,
            words,
            class,
            label_slots,
        })
    }

    fn height(&self, i: usize) -> usize {
        self.c.height(self.c.columns[self.s.cells[i].col as usize].tower)
    }

    fn tower(&self, i: usize) -> Tower {
        self.c.columns[self.s.cells[i].col as usize].tower
    }

    fn tally(&self, spec: impl Fn(&Self, usize, &mut Vec<Win>)) -> Result<Tally> {
        let mut expected: BTreeMap<u64, (u128, usize)> = BTreeMap::new();
        let mut inside: HashMap<(u64, u64), u128> = HashMap::new();
        let mut pending: HashMap<(u32, u64, u64, usize, usize), u128> = HashMap::new();
        let mut buf = Vec::new();
        for (i, r) in self.s.cells.iter().enumerate() {
            buf.clear();
            spec(self, i, &mut buf);
            let h = self.height(i);
            for w in &buf {
                let e = expected.entry(w.key).or_insert((0, w.len));
                add(&mut e.0, r.mass)?;
                let shifted = self.words[i] / self.k.pow(w.level as u32);
                if w.level + w.len <= h {
                    let word = shifted % self.k.pow(w.len as u32);
                    add(inside.entry((w.key, word)).or_default(), r.mass)?;
                } else {
                    let own_len = h - w.level;
                    let key = (self.own[i], w.key, shifted, own_len, w.len - own_len);
                    add(pending.entry(key).or_default(), r.mass)?;
                }
            }
        }
        let mut prefixes: HashMap<(u32, usize), HashMap<u64, u128>> = HashMap::new();
        let mut cross: HashMap<(u64, u64), BigRational> = HashMap::new();
        for ((sigma, key, own, own_len, need), a) in pending {
            if sigma == u32::MAX || self.z[sigma as usize] == 0 {
                // nothing continues this orbit; the mass is lost
                continue;
            }
            if !prefixes.contains_key(&(sigma, need)) {
                let mut table: HashMap<u64, u128> = HashMap::new();
                let modulus = self.k.pow(need as u32);
                for &s in &self.succ[sigma as usize] {
                    add(table.entry(self.words[s as usize] % modulus).or_default(), self.s.cells[s as usize].mass)?;
                }
                prefixes.insert((sigma, need), table);
            }
            let z = BigInt::from(self.z[sigma as usize]);
            let a = BigRational::new(BigInt::from(a), BigInt::from(self.s.den) * &z);
            for (prefix, b) in &prefixes[&(sigma, need)] {
                let word = own + prefix * self.k.pow(own_len as u32);
                *cross.entry((key, word)).or_insert_with(BigRational::zero) += &a * BigInt::from(*b);
            }
        }
        Ok(Tally { expected, inside, cross })
    }

    fn lhs(&self, t: &Tally, key: u64, word: u64) -> BigRational {
        let inside = BigRational::new(BigInt::from(t.inside.get(&(key, word)).copied().unwrap_or(0)), BigInt::from(self.s.den));
        match t.cross.get(&(key, word)) {
            Some(x) => inside + x,
            None => inside,
        }
    }

    /// `m(set ∩ window = a) = m(set) Π P(a_i)` for every key and every word.
    fn check(&self, name: &str, t: &Tally, describe: impl Fn(u64) -> String) -> IdentityCheck {
        let mut equalities = 0u64;
        for (&key, &(exp, len)) in &t.expected {
            for word in 0..self.k.pow(len as u32) {
                equalities += 1;
                let q = self.s.word_weight(word, len);
                let sq = self.s.weight_total.pow(len as u32);
                let holds = match t.cross.get(&(key, word)) {
                    None => {
                        let inside = t.inside.get(&(key, word)).copied().unwrap_or(0);
                        match (inside.checked_mul(sq), exp.checked_mul(q)) {
                            (Some(a), Some(b)) => a == b,
                            _ => BigUint::from(inside) * BigUint::from(sq) == BigUint::from(exp) * BigUint::from(q),
                        }
                    }
                    Some(_) => self.lhs(t, key, word) == self.rhs(exp, q, sq),
                };
                if !holds {
                    return IdentityCheck {
                        name: name.to_string(),
                        holds: false,
                        equalities,
                        witness: Some(Witness {
                            identity: name.to_string(),
                            set: describe(key),
                            word: self.s.decode(word, len).into_iter().map(|a| self.s.alphabet[a].clone()).collect(),
                            lhs: self.lhs(t, key, word).to_string(),
                            rhs: self.rhs(exp, q, sq).to_string(),
                        }),
                    };
                }
            }
        }
        IdentityCheck {
            name: name.to_string(),
            holds: true,
            equalities,
            witness: None,
        }
    }

    fn rhs(&self, exp: u128, q: u128, sq: u128) -> BigRational {
        BigRational::new(BigInt::from(exp) * BigInt::from(q), BigInt::from(self.s.den) * BigInt::from(sq))
    }

    fn describe_class(&self, class: u64) -> String {
        let col = (class / self.label_slots) as usize;
        let pp = class % self.label_slots;
        let t = self.c.columns[col].tower;
        if pp == 0 {
            format!("zeta1 cell (tower {t:?}, column {col})")
        } else {
            format!("zeta1 cell (tower {t:?}, column {col}, predecessor top label {})", pp - 1)
        }
    }

    fn label_at(&self, i: usize, level: usize) -> Label {
        self.c.columns[self.s.cells[i].col as usize].xi[level]
    }
}

const SUB: u64 = 64;

/// Exact traversal of the refined partition checking the six identities of
/// the coding step.
pub fn verify_identities(c: &CastleModel, s: &SymbolAssignment) -> Result<IdentityReport> {
    let e = Engine::new(c, s)?;
    let l = c.l as usize;
    let mut checks = Vec::new();

    for (name, tower) in [("eq1B", Tower::B), ("eq1F", Tower::F)] {
        let t = e.tally(|e, i, out| {
            if e.tower(i) == tower {
                out.push(Win {
                    key: e.class[i],
                    level: 0,
                    len: e.height(i),
                })
            }
        })?;
        checks.push(e.check(name, &t, |k| format!("base of {}", e.describe_class(k))));
    }

    let t = e.tally(|e, i, out| {
        for k in 0..=l {
            out.push(Win {
                key: e.class[i] * SUB + k as u64,
                level: k,
                len: e.height(i) - k,
            })
        }
    })?;
    checks.push(e.check("eq1All", &t, |k| format!("rung {} over {}", k % SUB, e.describe_class(k / SUB))));

    let t = e.tally(|e, i, out| {
        for k in 0..l {
            out.push(Win {
                key: e.class[i] * SUB + k as u64,
                level: e.height(i) - l + k,
                len: 2 * l,
            })
        }
    })?;
    checks.push(e.check("eq2", &t, |k| format!("T^{} of {} top rung block", k % SUB, e.describe_class(k / SUB))));

    let t = e.tally(|e, i, out| {
        for level in 0..e.height(i) {
            out.push(Win {
                key: e.class[i] * SUB + level as u64,
                level,
                len: l,
            })
        }
    })?;
    checks.push(e.check("eq3", &t, |k| format!("rung {} under {}", k % SUB, e.describe_class(k / SUB))));

    let t = main_tally(&e)?;
    checks.push(e.check("main", &t, |k| format!("xi atom {k}")));
    Ok(IdentityReport { checks })
}

fn main_tally(e: &Engine) -> Result<Tally> {
    let l = e.c.l as usize;
    e.tally(|e, i, out| {
        for level in 0..e.height(i) {
            out.push(Win {
                key: e.label_at(i, level) as u64,
                level,
                len: l,
            })
        }
    })
}

/// `m(D ∩ ⋂_{i<l} [f∘T^i = a_i])` for every ξ-atom `D` (outer index) and every
/// word `a` (inner index, first symbol least significant).
pub fn joint_word_law(c: &CastleModel, s: &SymbolAssignment) -> Result<Vec<Vec<BigRational>>> {
    let e = Engine::new(c, s)?;
    let t = main_tally(&e)?;
    let words = e.k.pow(c.l);
    Ok((0..c.xi_atoms as u64)
        .map(|d| (0..words).map(|w| e.lhs(&t, d, w)).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::castle::coding::{code_level, numeric_alphabet};
    use crate::castle::model::build_synthetic_castle;

    fn marginal(ps: &[(i64, i64)]) -> Vec<BigRational> {
        ps.iter().map(|&(a, b)| BigRational::new(a.into(), b.into())).collect()
    }

    #[test]
    fn smallest_castle_satisfies_all() {
        let c = build_synthetic_castle(1, 1, 0).unwrap();
        let s = code_level(&c, &numeric_alphabet(2), &marginal(&[(1, 3), (2, 3)]), 1).unwrap();
        let r = verify_identities(&c, &s).unwrap();
        assert!(r.all_hold(), "{:?}", r.witness());
        assert_eq!(r.checks.len(), 6);
    }

    #[test]
    fn two_atoms_seed_seven() {
        let c = build_synthetic_castle(2, 2, 7).unwrap();
        let s = code_level(&c, &numeric_alphabet(3), &marginal(&[(1, 2), (1, 3), (1, 6)]), 2).unwrap();
        let r = verify_identities(&c, &s).unwrap();
        assert!(r.all_hold(), "{:?}", r.witness());
    }

    #[test]
    fn corruption_yields_witness() {
        let c = build_synthetic_castle(2, 2, 7).unwrap();
        let mut s = code_level(&c, &numeric_alphabet(2), &marginal(&[(1, 3), (2, 3)]), 2).unwrap();
        s.corrupt(5);
        let r = verify_identities(&c, &s).unwrap();
        assert!(!r.get("main").unwrap().holds);
        let w = r.witness().unwrap();
        assert_ne!(w.lhs, w.rhs);
        assert!(!s.audit(&c).is_empty());
    }

    #[test]
    fn correlated_words_fail_despite_mass_audit() {
        let c = build_synthetic_castle(2, 1, 3).unwrap();
        let mut s = code_level(&c, &numeric_alphabet(2), &marginal(&[(1, 3), (2, 3)]), 2).unwrap();
        // rotate masses inside one (column, predecessor, top word) group
        let group: Vec<usize> = (0..s.cells.len())
            .filter(|&i| s.cells[i].col == 0 && s.cells[i].pred == 0 && s.cells[i].top == 0)
            .collect();
        let masses: Vec<u128> = group.iter().map(|&i| s.cells[i].mass).collect();
        for (j, &i) in group.iter().enumerate() {
            s.cells[i].mass = masses[(j + 1) % masses.len()];
        }
        assert!(s.audit(&c).is_empty());
        assert!(!verify_identities(&c, &s).unwrap().all_hold());
    }

    #[test]
    fn word_law_on_quarter_atom() {
        // m(D) = 1/4, P(1) = 1/3: the word (1, 0) has mass 1/4 · 1/3 · 2/3
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(2);
        let xi = marginal(&[(1, 4), (3, 4)]);
        let c = crate::castle::model::build_castle_with_xi(2, [1, 1], xi, &mut rng).unwrap();
        let s = code_level(&c, &numeric_alphabet(2), &marginal(&[(2, 3), (1, 3)]), 2).unwrap();
        let law = joint_word_law(&c, &s).unwrap();
        // word (1, 0): first symbol 1 is the least significant digit
        assert_eq!(law[0][1], BigRational::new(1.into(), 18.into()));
    }
}
