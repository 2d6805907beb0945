//! Seeded sampling oracle for `𝖴_n` and the truncated ergodic sum.
//!
//! Draws are split into fixed-size chunks; chunk `c` of stream `(seed, id)`
//! uses its own ChaCha key derived from `(seed, c)` and stream number `id`,
//! so results do not depend on how chunks are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt::Write;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Binomial;
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::construction::{block_table, index_i, params, window_coeffs};
use crate::error::{Error, Result};
use crate::lattice::LatticePmf;

/// Samples per chunk.
pub const CHUNK: u64 = 1 << 14;

/// Largest `d_K` the truncated sampler accepts, mirroring a literal
/// simulation over indices `0..n + d_K + p_K`.
pub const MEMORY_CAP: u128 = 1 << 26;

/// Window entries simulated per sample are capped at this count.
pub const ENTRY_CAP: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SeededStream {
    pub seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Generator for chunk `chunk` of this stream.
    pub fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(chunk)));
        rng.set_stream(self.stream_id);
        rng
    }
}

/// Integer histogram of i.i.d. draws.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Empirical {
    pub samples: u64,
    pub counts: BTreeMap<i64, u64>,
}

impl Empirical {
    fn merge(mut self, other: Empirical) -> Empirical {
        self.samples += other.samples;
        for (x, c) in other.counts {
            *self.counts.entry(x).or_insert(0) += c;
        }
        self
    }

    fn push(&mut self, x: i64) {
        self.samples += 1;
        *self.counts.entry(x).or_insert(0) += 1;
    }

    pub fn pmf(&self) -> Result<LatticePmf> {
        let n = self.samples as f64;
        LatticePmf::float_from_points(self.counts.iter().map(|(&x, &c)| (x, c as f64 / n)))
    }

    pub fn mean(&self) -> f64 {
        self.counts.iter().map(|(&x, &c)| x as f64 * c as f64).sum::<f64>() / self.samples as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.counts
            .iter()
            .map(|(&x, &c)| (x as f64 - m).powi(2) * c as f64)
            .sum::<f64>()
            / (self.samples as f64 - 1.0)
    }

    /// CSV with columns `x, count, empirical_p, exact_p` over the union of
    /// both supports.
    pub fn histogram_csv(&self, exact: &LatticePmf) -> String {
        let mut xs: Vec<i64> = self.counts.keys().copied().collect();
        xs.extend(exact.points().filter(|p| p.1 > 0.0).map(|p| p.0));
        xs.sort_unstable();
        xs.dedup();
        let mut s = String::from("x,count,empirical_p,exact_p\n");
        for x in xs {
            let c = self.counts.get(&x).copied().unwrap_or(0);
            let _ = writeln!(s, "{x},{c},{},{}", c as f64 / self.samples as f64, exact.prob(x));
        }
        s
    }
}

fn run_chunks<F>(samples: u64, s: SeededStream, draw: F) -> Result<Empirical>
where
    F: Fn(&mut ChaCha8Rng) -> i64 + Sync,
{
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let chunks = samples.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = s.chunk_rng(c);
            let mut e = Empirical::default();
            for _ in 0..CHUNK.min(samples - c * CHUNK) {
                e.push(draw(&mut rng));
            }
            e
        })
        .reduce(Empirical::default, Empirical::merge))
}

/// `m` copies of one block variable: nonzero copies counted by a binomial
/// draw, their values from the conditional law.
struct BlockSampler {
    copies: Binomial,
    values: Vec<i64>,
    pick: WeightedIndex<f64>,
}

impl BlockSampler {
    fn new(k: u32, m: u64) -> Result<Self> {
        let (a, b) = (params(k)?.alpha_sq.value(), params(k + 1)?.alpha_sq.value());
        let table: Vec<(i64, f64)> = block_table(1i64 << k, a, b).into_iter().filter(|p| p.0 != 0).collect();
        let nonzero: f64 = table.iter().map(|p| p.1).sum();
        let copies = Binomial::new(m, nonzero.min(1.0)).map_err(|e| Error::InvalidLaw(e.to_string()))?;
        let pick = WeightedIndex::new(table.iter().map(|p| p.1)).map_err(|e| Error::InvalidLaw(e.to_string()))?;
        Ok(Self {
            copies,
            values: table.into_iter().map(|p| p.0).collect(),
            pick,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> i64 {
        let hits = self.copies.sample(rng);
        (0..hits).map(|_| self.values[self.pick.sample(rng)]).sum()
    }
}

/// Empirical law of `𝖴_n` from i.i.d. simulation of the block variables.
pub fn sample_un(n: u64, samples: u64, s: SeededStream) -> Result<Empirical> {
    if n < 5 {
        return Err(Error::InvalidArgument(format!("n = {n} must be at least 5")));
    }
    let blocks = index_i(n)?
        .into_iter()
        .map(|k| BlockSampler::new(k, 2 * (n - (1u64 << k))))
        .collect::<Result<Vec<_>>>()?;
    run_chunks(samples, s, |rng| blocks.iter().map(|b| b.draw(rng)).sum())
}

/// Nonzero window coefficients of one `k`.
struct WindowSampler {
    coeffs: Vec<i64>,
    hits: Binomial,
}

impl WindowSampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> i64 {
        let h = self.hits.sample(rng) as usize;
        if h == 0 {
            return 0;
        }
        rand::seq::index::sample(rng, self.coeffs.len(), h)
            .into_iter()
            .map(|i| if rng.random_bool(0.5) { self.coeffs[i] } else { -self.coeffs[i] })
            .sum()
    }
}

/// Empirical law of `Σ_{k=2}^{K} S_n(f_k)`: each index carries an independent
/// `f̄_k` value, nonzero with probability `α_k²`.
pub fn sample_sn_truncated(n: u64, big_k: u32, samples: u64, s: SeededStream) -> Result<Empirical> {
    if big_k < 2 {
        return Err(Error::InvalidArgument("truncation level K must be at least 2".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    let top = params(big_k)?;
    if top.d_k().is_none_or(|d| d >= MEMORY_CAP) {
        return Err(Error::MemoryCap(format!("d_{big_k} = 2^{} exceeds 2^26", top.d_log2)));
    }
    let samplers = (2..=big_k)
        .map(|k| {
            let w = window_coeffs(k, n)?;
            let coeffs: Vec<i64> = w.entries(ENTRY_CAP)?.into_iter().map(|e| e.1).collect();
            let alpha_sq = params(k)?.alpha_sq.value();
            let hits =
                Binomial::new(coeffs.len() as u64, alpha_sq).map_err(|e| Error::InvalidLaw(e.to_string()))?;
            Ok(WindowSampler { coeffs, hits })
        })
        .collect::<Result<Vec<_>>>()?;
    run_chunks(samples, s, |rng| samplers.iter().map(|w| w.draw(rng)).sum())
}

/// Chi-square goodness-of-fit result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub cells: usize,
    pub df: usize,
    /// `P(χ²_df > statistic)`.
    pub p_value: f64,
    pub quantile_999: f64,
}

impl ChiSquare {
    pub fn passes(&self) -> bool {
        self.statistic < self.quantile_999
    }
}

/// Pearson statistic with adjacent cells pooled until each expected count
/// reaches 5; a short final run is merged into the previous cell.
pub fn chi_square(emp: &Empirical, exact: &LatticePmf) -> Result<ChiSquare> {
    let n = emp.samples as f64;
    let lo = exact.min_support().min(*emp.counts.keys().next().unwrap_or(&0));
    let hi = exact.max_support().max(*emp.counts.keys().next_back().unwrap_or(&0));
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for x in lo..=hi {
        e_acc += exact.prob(x) * n;
        o_acc += emp.counts.get(&x).copied().unwrap_or(0) as f64;
        if e_acc >= 5.0 {
            cells.push((e_acc, o_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if e_acc > 0.0 || o_acc > 0.0 {
        match cells.last_mut() {
            Some(last) => {
                last.0 += e_acc;
                last.1 += o_acc;
            }
            None => cells.push((e_acc, o_acc)),
        }
    }
    if cells.len() < 2 {
        return Err(Error::InvalidArgument("chi-square needs at least two pooled cells".into()));
    }
    let statistic = cells.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let df = cells.len() - 1;
    let dist = ChiSquared::new(df as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(ChiSquare {
        statistic,
        cells: cells.len(),
        df,
        p_value: 1.0 - dist.cdf(statistic),
        quantile_999: dist.inverse_cdf(0.999),
    })
}
