use num_rational::BigRational;
use serde_json::{json, Value};

use llt_core::analysis::{
    check_lemma_away, check_lemma_near, gaussian_kernel, lindeberg_detailed, noise_stability, phi_n, un_law,
    upsilon_moments, NoiseSpec, Reference,
};
use llt_core::castle::{build_synthetic_castle, code_level, realize_array, verify_identities, IdentityReport, LevelSpec};
use llt_core::construction::{block_pmf, index_i, index_j, params, second_moments};
use llt_core::lattice::{parse_rational, sup_gaussian_distance_detailed, CharGrid, GaussianRef, LatticePmf, Mode as PmfMode};
use llt_core::montecarlo::{chi_square, sample_sn_truncated, sample_un, SeededStream};
use llt_core::report::BoundReport;

use crate::table::Table;
use crate::{Command, Failure, Global, Mode, RefArg};

pub struct Outcome {
    pub table: Table,
    /// Set when the artifact was produced but a verification failed.
    pub verification_failure: Option<String>,
}

impl From<Table> for Outcome {
    fn from(table: Table) -> Self {
        Self {
            table,
            verification_failure: None,
        }
    }
}

fn join(ks: &[u32]) -> String {
    ks.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}

fn bound_table(r: &BoundReport) -> Table {
    let mut t = Table::new(&["n", "x_or_t", "lhs", "rhs", "ratio"]);
    for i in 0..r.len() {
        t.push(vec![json!(r.n), json!(r.grid[i]), json!(r.lhs[i]), json!(r.rhs[i]), json!(r.ratio[i])]);
    }
    t.summarize("worst_ratio", r.worst_ratio);
    t.summarize("fitted_constant", r.fitted_constant);
    t.summarize("verified", r.verified());
    t
}

fn noise_law(spec: &str, n: u64) -> Result<NoiseSpec, Failure> {
    if spec == "delta" {
        return Ok(NoiseSpec::new(LatticePmf::delta(0, PmfMode::Float), n)?);
    }
    if let Some(z) = spec.strip_prefix("three-point:") {
        let z: i64 = z.parse().map_err(|_| Failure::Usage(format!("bad atom in {spec:?}")))?;
        return Ok(NoiseSpec::three_point(n, z)?);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("cannot read noise law {spec}: {e}")))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("noise law {spec}: {e}")))?;
    let law = match serde_json::from_value::<LatticePmf>(value.clone()) {
        Ok(law) => law,
        Err(_) => law_from_table(&value).ok_or_else(|| Failure::Usage(format!("{spec} is neither a lattice law nor a table with x and p columns")))??,
    };
    Ok(NoiseSpec::new(law, n)?)
}

/// Reads back a table written with `--format json` whose columns include `x`
/// and a probability column (`p` or `empirical_p`).
fn law_from_table(v: &Value) -> Option<Result<LatticePmf, Failure>> {
    let cols: Vec<&str> = v.get("columns")?.as_array()?.iter().filter_map(|c| c.as_str()).collect();
    let xi = cols.iter().position(|&c| c == "x")?;
    let pi = cols.iter().position(|&c| c == "p").or_else(|| cols.iter().position(|&c| c == "empirical_p"))?;
    let mut points = Vec::new();
    for row in v.get("rows")?.as_array()? {
        points.push((row.get(xi)?.as_i64()?, row.get(pi)?.as_f64()?));
    }
    Some(LatticePmf::float_from_points(points).map_err(Failure::from))
}

fn identity_rows(t: &mut Table, level: usize, r: &IdentityReport) {
    for c in &r.checks {
        t.push(vec![json!(level), json!(c.name), json!(c.holds), json!(c.equalities)]);
    }
}

fn witness_text(r: &IdentityReport) -> Option<String> {
    r.witness()
        .map(|w| serde_json::to_string(w).expect("witness serializes"))
}

pub fn run(cmd: &Command, g: &Global) -> Result<Outcome, Failure> {
    let table = match cmd {
        Command::Params { k } => {
            let p = params(*k)?;
            let mut t = Table::new(&["k", "p_k", "d_k", "alpha_sq"]);
            let d = p.d_k().map_or_else(|| format!("2^{}", p.d_log2), |d| d.to_string());
            t.push(vec![json!(k), json!(p.p_k), json!(d), json!(p.alpha_sq.to_string())]);
            t
        }
        Command::BlockPmf { k } => {
            let law = block_pmf(*k)?.law;
            if g.mode == Mode::Exact && law.exact_points().is_none() {
                return Err(Failure::Usage(format!(
                    "block law for k = {k} has irrational masses (alpha_{}^2 involves log2 {}); use --mode float",
                    k + 1,
                    k + 1
                )));
            }
            let mut t = Table::new(&["x", "p"]);
            for (x, p) in law.points() {
                t.push(vec![json!(x), json!(p)]);
            }
            t.summarize("variance", law.variance());
            t
        }
        Command::Index { n } => {
            let mut t = Table::new(&["n", "I", "J"]);
            t.push(vec![json!(n), json!(join(&index_i(*n)?)), json!(join(&index_j(*n)?))]);
            t
        }
        Command::VarianceScan { n_list } => {
            let mut ns = n_list.clone();
            ns.sort_unstable();
            let mut t = Table::new(&[
                "n", "var_un", "var_un_over_n", "sigma_sq_limit", "var_sn_f", "var_zsm", "var_yhat", "var_zla", "var_w", "var_en",
                "tail_bound", "k_max",
            ]);
            for n in ns {
                let m = second_moments(n)?;
                t.push(vec![
                    json!(n),
                    json!(m.var_un),
                    json!(m.var_un / n as f64),
                    json!(GaussianRef::limit().sigma_sq()),
                    json!(m.var_sn_f),
                    json!(m.var_zsm),
                    json!(m.var_yhat),
                    json!(m.var_zla),
                    json!(m.var_w),
                    json!(m.var_en),
                    json!(m.tail_bound),
                    json!(m.k_max),
                ]);
            }
            t
        }
        Command::LltScan { n_list, reference } => {
            let mut ns = n_list.clone();
            ns.sort_unstable();
            let reference = match reference {
                RefArg::Limit => Reference::Limit,
                RefArg::VarianceMatched => Reference::VarianceMatched,
            };
            let mut t = Table::new(&["n", "reference", "sigma_sq", "sup_error", "argmax", "path", "support_bound", "tail_bound"]);
            for n in ns {
                let law = un_law(n)?;
                let g = reference.gaussian(n)?;
                let d = sup_gaussian_distance_detailed(&law.pmf, n, g);
                t.push(vec![
                    json!(n),
                    serde_json::to_value(reference).expect("enum serializes"),
                    json!(g.sigma_sq()),
                    json!(d.value),
                    json!(d.argmax),
                    serde_json::to_value(law.path).expect("enum serializes"),
                    json!(law.support_bound),
                    json!(law.tail_bound),
                ]);
            }
            t
        }
        Command::Charfn { n, grid } => {
            let ts = CharGrid::uniform_ts(*grid);
            let mut t = Table::new(&["t", "phi_re", "phi_im"]);
            for s in ts {
                t.push(vec![json!(s), json!(phi_n(*n, s)?), json!(0.0)]);
            }
            t
        }
        Command::LemmaAway { n, grid } => bound_table(&check_lemma_away(*n, *grid)?),
        Command::LemmaNear { n } => bound_table(&check_lemma_near(*n)?),
        Command::Lindeberg { n, eps } => {
            let (value, groups) = lindeberg_detailed(*n, *eps)?;
            let mut t = Table::new(&["blocks", "first_i", "count", "truncated_moment"]);
            for gr in &groups {
                t.push(vec![json!(join(&gr.blocks)), json!(gr.first_i), json!(gr.count), json!(gr.truncated_moment)]);
            }
            t.summarize("n", *n);
            t.summarize("eps", *eps);
            t.summarize("lindeberg", value);
            t
        }
        Command::Upsilon { j, n, j_override } => {
            let u = upsilon_moments(*j, *n, j_override.as_deref())?;
            let mut t = Table::new(&[
                "j", "n", "ks", "m2", "m3", "m4", "m4_law", "fourth_cumulant", "cumulant_bound_holds", "regime_bound_holds",
            ]);
            t.push(vec![
                json!(j),
                json!(n),
                json!(join(&u.ks)),
                json!(u.m2),
                json!(u.m3),
                json!(u.m4),
                json!(u.m4_law),
                json!(u.fourth_cumulant),
                json!(u.cumulant_bound_holds),
                json!(u.regime_bound_holds),
            ]);
            t
        }
        Command::Noise { n, noise_law: spec } => {
            let z = noise_law(spec, *n)?;
            let g = GaussianRef::limit();
            let y = gaussian_kernel(*n, g)?;
            let r = noise_stability(&y, &z, *n, g)?;
            let mut t = Table::new(&[
                "n", "second_moment", "a_n", "sup_error_before", "sup_error_after", "tail_mass_beyond_a_n", "markov_bound", "local_max",
                "interior_drift", "budget", "within_budget",
            ]);
            t.push(vec![
                json!(n),
                json!(z.second_moment),
                json!(z.a_n),
                json!(r.sup_error_before),
                json!(r.sup_error_after),
                json!(r.tail_mass_beyond_a_n),
                json!(r.markov_bound),
                json!(r.local_max),
                json!(r.interior_drift),
                json!(r.budget),
                json!(r.within_budget()),
            ]);
            t
        }
        Command::Simulate {
            n,
            samples,
            truncate_k,
            stream,
        } => {
            let s = SeededStream::new(g.seed, *stream);
            let (emp, exact) = match truncate_k {
                Some(k) => (sample_sn_truncated(*n, *k, *samples, s)?, None),
                None => (sample_un(*n, *samples, s)?, Some(un_law(*n)?.pmf)),
            };
            let mut t = Table::new(&["x", "count", "empirical_p", "exact_p"]);
            for (&x, &c) in &emp.counts {
                let exact_p = exact.as_ref().map_or(Value::Null, |e| json!(e.prob(x)));
                t.push(vec![json!(x), json!(c), json!(c as f64 / emp.samples as f64), exact_p]);
            }
            t.summarize("samples", emp.samples);
            t.summarize("mean", emp.mean());
            t.summarize("variance", emp.variance());
            if let Some(e) = &exact {
                let chi = chi_square(&emp, e)?;
                t.summarize("chi_square", chi.statistic);
                t.summarize("df", chi.df);
                t.summarize("p_value", chi.p_value);
                t.summarize("quantile_999", chi.quantile_999);
                t.summarize("passes", chi.passes());
            }
            t
        }
        Command::Castle {
            l,
            xi_atoms,
            alphabet,
            marginal,
            levels,
            dump_witness,
            emit_model,
            corrupt_cell,
        } => {
            let marginal = marginal
                .iter()
                .map(|m| parse_rational(m))
                .collect::<llt_core::Result<Vec<BigRational>>>()?;
            let mut t = Table::new(&["level", "identity", "holds", "equalities"]);
            let mut failure = None;
            match levels {
                Some(ds) => {
                    let specs: Vec<LevelSpec> = ds
                        .iter()
                        .map(|&d| LevelSpec {
                            alphabet: alphabet.clone(),
                            marginal: marginal.clone(),
                            length: d,
                        })
                        .collect();
                    let r = realize_array(&specs, g.seed)?;
                    for (i, lv) in r.levels.iter().enumerate() {
                        identity_rows(&mut t, i + 1, &lv.identities);
                        if !lv.identities.all_hold() {
                            failure = Some(format!("level {} identities fail", i + 1));
                            if *dump_witness {
                                eprintln!("{}", witness_text(&lv.identities).unwrap_or_default());
                            }
                        }
                    }
                    t.summarize("joint_entries", r.joint.len());
                    t.summarize("factorizes", r.factorizes);
                    if !r.factorizes {
                        failure.get_or_insert_with(|| "joint law does not factorize".to_string());
                    }
                    if *emit_model {
                        t.attach("realization", serde_json::to_value(&r).expect("realization serializes"));
                    }
                }
                None => {
                    let l = l.expect("clap requires --l without --levels");
                    let castle = build_synthetic_castle(l, *xi_atoms, g.seed)?;
                    let mut s = code_level(&castle, alphabet, &marginal, l)?;
                    if let Some(cell) = corrupt_cell {
                        if *cell >= s.cells.len() {
                            return Err(Failure::Usage(format!("cell {cell} out of range ({} cells)", s.cells.len())));
                        }
                        s.corrupt(*cell);
                    }
                    let r = verify_identities(&castle, &s)?;
                    identity_rows(&mut t, 1, &r);
                    t.summarize("cells", s.cells.len());
                    t.summarize("castle_audit", castle.audit().ok());
                    t.summarize("mass_audit", s.audit(&castle).is_empty());
                    if let Some(w) = r.witness() {
                        failure = Some(format!("{} fails on {}", w.identity, w.set));
                        if *dump_witness {
                            eprintln!("{}", witness_text(&r).unwrap_or_default());
                        }
                        t.attach("witness", serde_json::to_value(w).expect("witness serializes"));
                    }
                    if *emit_model {
                        t.attach("castle", castle.to_json());
                        t.attach("assignment", s.to_json(&castle));
                    }
                }
            }
            return Ok(Outcome {
                table: t,
                verification_failure: failure,
            });
        }
    };
    Ok(table.into())
}
