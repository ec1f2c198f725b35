//! Dependency-set bookkeeping and backdoor extraction from finished solver runs.
//!
//! Each learnt clause carries the set of variables its derivation depended on. A SAT
//! run yields the backdoor made of the final trail's decision variables together with
//! the dependency sets of the learnt reason clauses on that trail; an UNSAT run yields
//! the dependency union over the learnt clauses participating in the final root-level
//! conflict. Both sets make the formula solvable by a solver restricted to deciding
//! only those variables.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::cdcl::{LearntRecord, SolveOutcome, SolveStatus};
use crate::cnf::{Lit, VarSet};

#[derive(Clone, Debug)]
pub struct LsrReport {
    pub backdoor: VarSet,
    pub size: usize,
    pub size_over_vars: f64,
    /// Mean dependency-set size over every clause ever learnt.
    pub avg_clause_dep: f64,
    pub avg_clause_dep_over_vars: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("expected a SAT outcome, got {0:?}")]
    NotSat(SolveStatus),
    #[error("expected an UNSAT outcome, got {0:?}")]
    NotUnsat(SolveStatus),
    #[error("run ended {0:?}; no backdoor can be extracted")]
    NotSettled(SolveStatus),
    #[error("unknown learnt-clause record id {0}")]
    UnknownRecord(u32),
}

/// Dependency set of a clause derived from a conflict: the clause's own variables plus
/// the dependency sets of every learnt clause resolved on the conflict side or consulted
/// by the minimizer. Records fold their ancestors in at creation, so one level of
/// lookup suffices.
pub fn compute_dep_set(
    learnt_lits: &[Lit],
    conflict_side: &[u32],
    minimizer_clauses: &[u32],
    records: &[LearntRecord],
) -> VarSet {
    let mut dep: VarSet = learnt_lits.iter().map(|l| l.var()).collect();
    for &rid in conflict_side.iter().chain(minimizer_clauses) {
        dep = dep.union(&records[rid as usize].dep_vars);
    }
    dep
}

fn report(backdoor: VarSet, num_vars: usize, records: &[LearntRecord]) -> LsrReport {
    let avg = if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.dep_vars.len() as f64).sum::<f64>() / records.len() as f64
    };
    let nv = num_vars.max(1) as f64;
    LsrReport {
        size: backdoor.len(),
        size_over_vars: backdoor.len() as f64 / nv,
        backdoor,
        avg_clause_dep: avg,
        avg_clause_dep_over_vars: avg / nv,
    }
}

/// Backdoor from a satisfying run: final-trail decision variables united with the
/// dependency sets of the learnt reason clauses on the final trail. Original reason
/// clauses contribute nothing.
pub fn extract_lsr_sat(
    outcome: &SolveOutcome,
    records: &[LearntRecord],
) -> Result<LsrReport, ExtractError> {
    if outcome.status != SolveStatus::Sat {
        return Err(ExtractError::NotSat(outcome.status));
    }
    let mut backdoor: VarSet = outcome.final_decisions.iter().map(|l| l.var()).collect();
    for &rid in &outcome.final_prop_dep_records {
        let rec = records.get(rid as usize).ok_or(ExtractError::UnknownRecord(rid))?;
        backdoor = backdoor.union(&rec.dep_vars);
    }
    Ok(report(backdoor, outcome.num_vars, records))
}

/// Backdoor from a refuting run: the dependency union over the learnt clauses in the
/// final root-level conflict, as folded by the solver.
pub fn extract_lsr_unsat(
    outcome: &SolveOutcome,
    records: &[LearntRecord],
) -> Result<LsrReport, ExtractError> {
    if outcome.status != SolveStatus::Unsat {
        return Err(ExtractError::NotUnsat(outcome.status));
    }
    let backdoor = outcome
        .final_conflict_deps
        .clone()
        .expect("UNSAT outcome carries final conflict deps");
    Ok(report(backdoor, outcome.num_vars, records))
}

/// Dispatches on the outcome status.
pub fn extract_lsr(
    outcome: &SolveOutcome,
    records: &[LearntRecord],
) -> Result<LsrReport, ExtractError> {
    match outcome.status {
        SolveStatus::Sat => extract_lsr_sat(outcome, records),
        SolveStatus::Unsat => extract_lsr_unsat(outcome, records),
        s => Err(ExtractError::NotSettled(s)),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DepStats {
    pub avg: f64,
    pub max: usize,
    /// dep-set size -> number of learnt clauses with that size.
    pub histogram: BTreeMap<usize, usize>,
}

/// Aggregates dependency-set sizes over every clause ever learnt, deleted ones included.
pub fn dep_stats(records: &[LearntRecord]) -> DepStats {
    let mut stats = DepStats::default();
    if records.is_empty() {
        return stats;
    }
    let mut total = 0usize;
    for r in records {
        let n = r.dep_vars.len();
        total += n;
        stats.max = stats.max.max(n);
        *stats.histogram.entry(n).or_insert(0) += 1;
    }
    stats.avg = total as f64 / records.len() as f64;
    stats
}

/// Renders a report as text: a summary header, then one backdoor variable per line
/// in DIMACS numbering.
pub fn render_report(r: &LsrReport) -> String {
    let mut out = format!(
        "size {} size_over_vars {:.6} avg_clause_dep {:.6} avg_clause_dep_over_vars {:.6}\n",
        r.size, r.size_over_vars, r.avg_clause_dep, r.avg_clause_dep_over_vars
    );
    for v in r.backdoor.iter() {
        out.push_str(&format!("{}\n", v + 1));
    }
    out
}
