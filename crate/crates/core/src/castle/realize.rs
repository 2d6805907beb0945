use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::coding::{code_level_capped, refined_cell_count, CELL_CAP};
use super::model::build_castle_with_xi;
use super::verify::{joint_word_law, verify_identities, IdentityReport};
use crate::error::{Error, Result};

/// One level of an array: alphabet, marginal and window length `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSpec {
    pub alphabet: Vec<String>,
    pub marginal: Vec<BigRational>,
    pub length: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub length: u32,
    pub xi_atoms: u32,
    pub cells: u64,
    pub identities: IdentityReport,
}

/// Joint law of all level windows at the origin. Atoms are indexed with the
/// first level least significant, each level's word with its first symbol
/// least significant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RealizedArray {
    pub levels: Vec<LevelRecord>,
    #[serde(serialize_with = "ser_rationals")]
    pub joint: Vec<BigRational>,
    #[serde(serialize_with = "ser_rationals")]
    pub product: Vec<BigRational>,
    pub factorizes: bool,
}

fn ser_rationals<S: serde::Serializer>(qs: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(qs.iter().map(|q| q.to_string()))
}

fn word_probability(spec: &LevelSpec, mut word: u64) -> BigRational {
    let k = spec.alphabet.len() as u64;
    let mut p = BigRational::one();
    for _ in 0..spec.length {
        p *= &spec.marginal[(word % k) as usize];
        word /= k;
    }
    p
}

pub fn realize_array(specs: &[LevelSpec], seed: u64) -> Result<RealizedArray> {
    realize_array_capped(specs, seed, CELL_CAP)
}

/// Codes the levels one after another. Level `j` runs on a fresh castle whose
/// ξ is the partition by the words of levels `1..j`, weighted by the law the
/// earlier levels actually produced.
pub fn realize_array_capped(specs: &[LevelSpec], seed: u64, cap: u64) -> Result<RealizedArray> {
    if specs.is_empty() {
        return Err(Error::InvalidArgument("array needs at least one level".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = vec![BigRational::one()];
    let mut levels = Vec::new();
    let mut product = vec![BigRational::one()];
    for spec in specs {
        let tower_weights = [rng.random_range(1..=9u64), rng.random_range(1..=9u64)];
        let castle = build_castle_with_xi(spec.length, tower_weights, xi.clone(), &mut rng)?;
        let cells = refined_cell_count(&castle, spec.alphabet.len() as u64);
        if cells > cap {
            return Err(Error::CellCap { requested: cells, cap });
        }
        let assignment = code_level_capped(&castle, &spec.alphabet, &spec.marginal, spec.length, cap)?;
        let identities = verify_identities(&castle, &assignment)?;
        let law = joint_word_law(&castle, &assignment)?;
        let atoms = xi.len();
        let words = law.first().map_or(0, Vec::len);
        let mut next = vec![BigRational::one(); atoms * words];
        let mut next_product = vec![BigRational::one(); atoms * words];
        for (d, row) in law.into_iter().enumerate() {
            for (w, mass) in row.into_iter().enumerate() {
                next[d + atoms * w] = mass;
                next_product[d + atoms * w] = &product[d] * word_probability(spec, w as u64);
            }
        }
        levels.push(LevelRecord {
            length: spec.length,
            xi_atoms: castle.xi_atoms,
            cells,
            identities,
        });
        xi = next;
        product = next_product;
    }
    let factorizes = xi == product;
    Ok(RealizedArray {
        levels,
        joint: xi,
        product,
        factorizes,
    })
}

/// `a/b` for small literals.
pub fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}
