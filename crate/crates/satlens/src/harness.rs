//! Experiment harness: restart-policy comparison runs, structural parameter
//! sweeps, CSV emission, and ridge regression with product feature expansion.

use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cdcl::{self, RestartPolicy, SolveStatus, SolverConfig};
use crate::cnf::{Cnf, Lit, Var};
use crate::lsr;
use crate::structure;

/// Feature columns of a parameter sweep, in CSV order.
pub const FEATURE_COLUMNS: &[&str] = &[
    "V", "C", "C/V", "Cmtys", "Q", "Q/Cmtys", "LSR", "LSR/V", "TW", "TW/V", "Bones", "Bones/V",
    "Weak", "Weak/V", "#Min_Weak",
];

/// Named features of one instance. A feature that could not be computed is
/// absent, never zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub instance: String,
    values: BTreeMap<String, f64>,
    /// Base-10 log of the tracked solve's wall time in seconds.
    pub log_time: Option<f64>,
}

impl FeatureRow {
    pub fn new(instance: impl Into<String>) -> FeatureRow {
        FeatureRow { instance: instance.into(), values: BTreeMap::new(), log_time: None }
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("no base features selected")]
    EmptyBase,
    #[error("feature {0} is absent from every row")]
    UnknownFeature(String),
    #[error("negative ridge penalty {0}")]
    BadLambda(f64),
    #[error("{have} usable rows, but {need} are needed to fit {p} features")]
    TooFewRows { have: usize, need: usize, p: usize },
    #[error("design matrix is singular even after the ridge penalty")]
    DegenerateDesign,
    #[error("feature file: {0}")]
    BadCsv(String),
}

/// Names for every nonempty product of distinct base features, in subset-mask
/// order, followed by the intercept.
pub fn expand_feature_names(base: &[String]) -> Result<Vec<String>, HarnessError> {
    if base.is_empty() {
        return Err(HarnessError::EmptyBase);
    }
    let k = base.len();
    let mut names = Vec::with_capacity((1 << k) as usize);
    for mask in 1u64..(1 << k) {
        let parts: Vec<&str> =
            (0..k).filter(|i| mask >> i & 1 == 1).map(|i| base[i].as_str()).collect();
        names.push(parts.join("*"));
    }
    names.push("intercept".to_string());
    Ok(names)
}

/// Expands base rows into product columns plus an intercept column of ones.
/// Returns the expanded names and the column-major matrix.
pub fn expand_features(
    base: &[String],
    rows: &[Vec<f64>],
) -> Result<(Vec<String>, Vec<Vec<f64>>), HarnessError> {
    let names = expand_feature_names(base)?;
    let k = base.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); names.len()];
    for row in rows {
        assert_eq!(row.len(), k, "base row width must match base names");
        for mask in 1u64..(1 << k) {
            let mut prod = 1.0;
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    prod *= row[i];
                }
            }
            cols[(mask - 1) as usize].push(prod);
        }
        cols[names.len() - 1].push(1.0);
    }
    Ok((names, cols))
}

/// Centers each column to mean 0 and scales it to standard deviation 1.
/// Columns with no variance are only centered and their indices returned.
pub fn standardize_columns(cols: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let mut means = Vec::with_capacity(cols.len());
    let mut sds = Vec::with_capacity(cols.len());
    let mut degenerate = Vec::new();
    for (j, col) in cols.iter_mut().enumerate() {
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        for x in col.iter_mut() {
            *x -= mean;
        }
        let sd = (col.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
        if sd < 1e-12 {
            degenerate.push(j);
        } else {
            for x in col.iter_mut() {
                *x /= sd;
            }
        }
        means.push(mean);
        sds.push(sd);
    }
    (means, sds, degenerate)
}

#[derive(Clone, Debug)]
pub struct RidgeModel {
    /// Post-expansion names, intercept last.
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub n_samples: usize,
    /// Rows skipped because a selected feature or the target was absent.
    pub excluded_rows: usize,
    /// Expanded features dropped for having no variance.
    pub dropped_features: Vec<String>,
}

/// Fits ridge regression of the log-time target on the product expansion of the
/// selected base features. Features are standardized first; the intercept is
/// neither standardized nor penalized.
pub fn ridge_fit(
    rows: &[FeatureRow],
    base: &[String],
    lambda: f64,
) -> Result<RidgeModel, HarnessError> {
    if base.is_empty() {
        return Err(HarnessError::EmptyBase);
    }
    if !(lambda >= 0.0) {
        return Err(HarnessError::BadLambda(lambda));
    }
    for name in base {
        if rows.iter().all(|r| r.get(name).is_none()) {
            return Err(HarnessError::UnknownFeature(name.clone()));
        }
    }
    let mut data: Vec<Vec<f64>> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for r in rows {
        let vals: Option<Vec<f64>> = base.iter().map(|n| r.get(n)).collect();
        if let (Some(vals), Some(t)) = (vals, r.log_time) {
            data.push(vals);
            y.push(t);
        }
    }
    let excluded_rows = rows.len() - data.len();

    let (names, mut cols) = expand_features(base, &data)?;
    let intercept = cols.pop().expect("expansion always has an intercept");
    let (_, _, degenerate) = standardize_columns(&mut cols);
    let mut dropped_features = Vec::new();
    let mut kept_names = Vec::new();
    let mut kept_cols = Vec::new();
    for (j, col) in cols.into_iter().enumerate() {
        if degenerate.contains(&j) {
            dropped_features.push(names[j].clone());
        } else {
            kept_names.push(names[j].clone());
            kept_cols.push(col);
        }
    }
    let p = kept_cols.len();
    let n = y.len();
    if n < p + 2 {
        return Err(HarnessError::TooFewRows { have: n, need: p + 2, p });
    }
    kept_names.push("intercept".to_string());
    kept_cols.push(intercept);

    let x = DMatrix::from_fn(n, p + 1, |r, c| kept_cols[c][r]);
    let yv = DVector::from_column_slice(&y);
    let xt = x.transpose();
    let mut a = &xt * &x;
    for j in 0..p {
        a[(j, j)] += lambda;
    }
    let b = &xt * &yv;
    let beta = a.lu().solve(&b).ok_or(HarnessError::DegenerateDesign)?;

    let resid = &yv - &x * &beta;
    let ssr: f64 = resid.iter().map(|e| e * e).sum();
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - mean_y).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n as f64 - p as f64 - 1.0);

    Ok(RidgeModel {
        feature_names: kept_names,
        coefficients: beta.iter().copied().collect(),
        lambda,
        r2,
        adjusted_r2,
        n_samples: n,
        excluded_rows,
        dropped_features,
    })
}

pub fn render_model(m: &RidgeModel) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "ridge fit: lambda={} n={} excluded={} r2={:.6} adjusted_r2={:.6}\n",
        m.lambda, m.n_samples, m.excluded_rows, m.r2, m.adjusted_r2
    ));
    for (name, c) in m.feature_names.iter().zip(&m.coefficients) {
        s.push_str(&format!("  {:<24} {:+.6}\n", name, c));
    }
    for d in &m.dropped_features {
        s.push_str(&format!("  {:<24} dropped (no variance)\n", d));
    }
    s
}

/// One solve of one instance under one restart policy.
#[derive(Clone, Debug)]
pub struct LensRow {
    pub instance: String,
    pub policy: String,
    pub status: SolveStatus,
    /// Absent unless the run settled and the backdoor was extracted.
    pub lsr_over_v: Option<f64>,
    pub avg_clause_lsr_over_v: Option<f64>,
    pub conflicts: u64,
    pub time_s: f64,
}

pub fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Sat => "sat",
        SolveStatus::Unsat => "unsat",
        SolveStatus::Inconclusive => "inconclusive",
        SolveStatus::Limit => "limit",
    }
}

/// The three policies compared by the lens, in table order.
pub fn lens_policies() -> Vec<(String, RestartPolicy)> {
    vec![
        ("luby".to_string(), RestartPolicy::Luby { base: 100 }),
        ("always".to_string(), RestartPolicy::Always),
        ("never".to_string(), RestartPolicy::Never),
    ]
}

/// Solves every instance under every policy with dependency tracking and
/// extracts the backdoor bound. Instances run in parallel; the output order is
/// the corpus order, one row per policy.
pub fn run_lens(
    corpus: &[(String, Cnf)],
    policies: &[(String, RestartPolicy)],
    seed: u64,
    conflict_limit: Option<u64>,
) -> Vec<LensRow> {
    corpus
        .par_iter()
        .map(|(name, f)| {
            let mut rows = Vec::with_capacity(policies.len());
            for (pname, policy) in policies {
                let cfg = SolverConfig {
                    restart_policy: policy.clone(),
                    seed,
                    conflict_limit,
                    ..SolverConfig::default()
                };
                let t0 = Instant::now();
                let (out, records) = cdcl::solve(f, cfg).expect("lens solver configuration");
                let time_s = t0.elapsed().as_secs_f64();
                let report = lsr::extract_lsr(&out, &records).ok();
                rows.push(LensRow {
                    instance: name.clone(),
                    policy: pname.clone(),
                    status: out.status,
                    lsr_over_v: report.as_ref().map(|r| r.size_over_vars),
                    avg_clause_lsr_over_v: report.as_ref().map(|r| r.avg_clause_dep_over_vars),
                    conflicts: out.stats.conflicts,
                    time_s,
                });
            }
            rows
        })
        .flatten()
        .collect()
}

#[derive(Clone, Debug)]
pub struct LensAggregate {
    pub policy: String,
    /// Instances that settled under every policy.
    pub instances: usize,
    pub mean_lsr_over_v: f64,
    pub mean_avg_clause_lsr_over_v: f64,
    pub mean_conflicts: f64,
    pub mean_time_s: f64,
}

/// Per-policy means over the instances that settled under every policy.
pub fn lens_aggregate(rows: &[LensRow], policies: &[String]) -> Vec<LensAggregate> {
    let mut settled: BTreeMap<&str, usize> = BTreeMap::new();
    for r in rows {
        if r.lsr_over_v.is_some() {
            *settled.entry(r.instance.as_str()).or_insert(0) += 1;
        }
    }
    let keep: Vec<&str> = settled
        .iter()
        .filter(|&(_, &k)| k == policies.len())
        .map(|(&name, _)| name)
        .collect();
    policies
        .iter()
        .map(|pname| {
            let sel: Vec<&LensRow> = rows
                .iter()
                .filter(|r| &r.policy == pname && keep.contains(&r.instance.as_str()))
                .collect();
            let n = sel.len();
            let mean = |f: &dyn Fn(&LensRow) -> f64| {
                if n == 0 {
                    0.0
                } else {
                    sel.iter().map(|r| f(r)).sum::<f64>() / n as f64
                }
            };
            LensAggregate {
                policy: pname.clone(),
                instances: n,
                mean_lsr_over_v: mean(&|r| r.lsr_over_v.unwrap_or(0.0)),
                mean_avg_clause_lsr_over_v: mean(&|r| r.avg_clause_lsr_over_v.unwrap_or(0.0)),
                mean_conflicts: mean(&|r| r.conflicts as f64),
                mean_time_s: mean(&|r| r.time_s),
            }
        })
        .collect()
}

/// Lays the aggregates out in the comparison-table shape: one column per
/// policy, one row per measure.
pub fn render_lens_table(aggs: &[LensAggregate]) -> String {
    let mut s = String::new();
    s.push_str(&format!("{:<20}", ""));
    for a in aggs {
        s.push_str(&format!("{:>16}", a.policy));
    }
    s.push('\n');
    for (label, measure) in
        [("LSR Size", 0), ("Avg. Clause LSR", 1), ("Num Conflicts", 2), ("Solving Time (s)", 3)]
    {
        s.push_str(&format!("{:<20}", label));
        for a in aggs {
            let cell = match measure {
                0 => format!("{:.4}", a.mean_lsr_over_v),
                1 => format!("{:.4}", a.mean_avg_clause_lsr_over_v),
                2 => format!("{:.1}", a.mean_conflicts),
                _ => format!("{:.4}", a.mean_time_s),
            };
            s.push_str(&format!("{:>16}", cell));
        }
        s.push('\n');
    }
    let n = aggs.first().map_or(0, |a| a.instances);
    s.push_str(&format!("instances with complete data under every policy: {}\n", n));
    s
}

fn opt_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn lens_csv(rows: &[LensRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["instance", "policy", "status", "lsr_over_v", "avg_clause_lsr_over_v", "conflicts", "time_s"])
        .expect("csv write");
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.policy.clone(),
            status_str(r.status).to_string(),
            opt_field(r.lsr_over_v),
            opt_field(r.avg_clause_lsr_over_v),
            r.conflicts.to_string(),
            r.time_s.to_string(),
        ])
        .expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Budgets for the per-instance parameter computations.
#[derive(Clone, Copy, Debug)]
pub struct ParamBudgets {
    pub solve_conflicts: Option<u64>,
    pub backbone_conflicts: Option<u64>,
    pub weak_replays: u64,
}

impl Default for ParamBudgets {
    fn default() -> ParamBudgets {
        ParamBudgets {
            solve_conflicts: Some(200_000),
            backbone_conflicts: Some(200_000),
            weak_replays: 20_000,
        }
    }
}

/// Computes the feature row of every instance: size counts, community
/// structure, the tracked-solve backdoor bound, the treewidth bound, and on
/// satisfiable instances backbone and weak backdoor. Whatever a budget cuts
/// off stays absent.
pub fn run_params(corpus: &[(String, Cnf)], budgets: ParamBudgets, seed: u64) -> Vec<FeatureRow> {
    corpus
        .par_iter()
        .map(|(name, f)| {
            let mut row = FeatureRow::new(name.clone());
            let v = f.num_vars as f64;
            row.set("V", v);
            row.set("C", f.clauses.len() as f64);
            if v > 0.0 {
                row.set("C/V", f.clauses.len() as f64 / v);
            }
            let g = structure::build_vig(f);
            let (p, q) = structure::louvain(&g, seed);
            let cmtys = p.num_communities() as f64;
            row.set("Cmtys", cmtys);
            row.set("Q", q.q);
            if cmtys > 0.0 {
                row.set("Q/Cmtys", q.q / cmtys);
            }
            let tw = structure::treewidth_ub(f) as f64;
            row.set("TW", tw);
            if v > 0.0 {
                row.set("TW/V", tw / v);
            }

            let cfg = SolverConfig {
                seed,
                conflict_limit: budgets.solve_conflicts,
                ..SolverConfig::default()
            };
            let t0 = Instant::now();
            let (out, records) = cdcl::solve(f, cfg).expect("params solver configuration");
            let time_s = t0.elapsed().as_secs_f64();
            row.log_time = Some(time_s.max(1e-9).log10());
            if let Ok(rep) = lsr::extract_lsr(&out, &records) {
                row.set("LSR", rep.size as f64);
                if v > 0.0 {
                    row.set("LSR/V", rep.size_over_vars);
                }
            }
            if out.status == SolveStatus::Sat {
                if let Ok(bb) = structure::backbone(f, budgets.backbone_conflicts) {
                    if bb.complete {
                        row.set("Bones", bb.literals.len() as f64);
                        if v > 0.0 {
                            row.set("Bones/V", bb.literals.len() as f64 / v);
                        }
                    }
                }
                if let Ok(wb) = structure::weak_backdoor(f, budgets.weak_replays, seed) {
                    row.set("Weak", wb.backdoor.len() as f64);
                    if v > 0.0 {
                        row.set("Weak/V", wb.backdoor.len() as f64 / v);
                    }
                    row.set("#Min_Weak", wb.minimal_sets_found as f64);
                }
            }
            row
        })
        .collect()
}

pub fn params_csv(rows: &[FeatureRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["instance"];
    header.extend_from_slice(FEATURE_COLUMNS);
    header.push("log_time");
    w.write_record(&header).expect("csv write");
    for r in rows {
        let mut rec = vec![r.instance.clone()];
        for col in FEATURE_COLUMNS {
            rec.push(opt_field(r.get(col)));
        }
        rec.push(opt_field(r.log_time));
        w.write_record(&rec).expect("csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Reads rows written by `params_csv`. Columns other than `instance` and
/// `log_time` become named features; empty cells stay absent.
pub fn parse_features_csv(text: &str) -> Result<Vec<FeatureRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| HarnessError::BadCsv(e.to_string()))?.clone();
    if headers.iter().next() != Some("instance") {
        return Err(HarnessError::BadCsv("first column must be instance".to_string()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HarnessError::BadCsv(e.to_string()))?;
        let mut row = FeatureRow::new(record.get(0).unwrap_or_default());
        for (name, field) in headers.iter().zip(record.iter()).skip(1) {
            if field.is_empty() {
                continue;
            }
            let value: f64 = field
                .parse()
                .map_err(|_| HarnessError::BadCsv(format!("bad number {:?} in {}", field, name)))?;
            if name == "log_time" {
                row.log_time = Some(value);
            } else {
                row.set(name, value);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Uniform random 3-CNF: each clause picks three distinct variables and
/// independent polarities.
pub fn random_3cnf(num_vars: usize, num_clauses: usize, rng: &mut impl Rng) -> Cnf {
    assert!(num_vars >= 3, "three distinct variables per clause");
    let mut f = Cnf::new(num_vars);
    for _ in 0..num_clauses {
        let a = rng.gen_range(0..num_vars);
        let b = loop {
            let b = rng.gen_range(0..num_vars);
            if b != a {
                break b;
            }
        };
        let c = loop {
            let c = rng.gen_range(0..num_vars);
            if c != a && c != b {
                break c;
            }
        };
        f.add_clause([
            Lit::new(a as Var, rng.gen()),
            Lit::new(b as Var, rng.gen()),
            Lit::new(c as Var, rng.gen()),
        ]);
    }
    f
}
