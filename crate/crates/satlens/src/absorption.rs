//! Clause absorption machinery and the backdoor verifier built on it.
//!
//! A clause is absorbed by a clause database when every non-conflicting solver state
//! falsifying all but one of its literals propagates the remaining literal. The checks
//! here probe that property, along with 1-provability (unit propagation refutes the
//! clause's negation) and 1-empowerment (some literal is not derivable by unit
//! propagation alone). `absorb_clause` makes a solver absorb a 1-provable clause by
//! repeatedly falsifying it, learning from the conflict, and restarting.
//!
//! The verifier replays a logged run, collects the learnt clauses whose dependency
//! sets fit inside the claimed backdoor, absorbs that sequence into a fresh solver,
//! and then requires a solver deciding only backdoor variables to finish the formula.

use thiserror::Error;

use crate::cdcl::{
    ConfigError, DeletionPolicy, LearntRecord, SolveOutcome, SolveStatus, Solver, SolverConfig,
};
use crate::cnf::{Cnf, Lit, VarSet};

/// Per-literal absorption evidence: the state falsifying the rest of the clause either
/// cannot be reached without conflict, or propagates the literal, or refutes absorption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LitWitness {
    Vacuous,
    Implied,
    /// Number of assigned variables in the non-conflicting state that falsifies the
    /// other literals yet leaves this one underived.
    Counterexample { assigned: usize },
}

#[derive(Clone, Debug)]
pub struct AbsorptionOutcome {
    pub absorbed: bool,
    /// One witness per literal of the clause, in stored order.
    pub witnesses: Vec<LitWitness>,
}

#[derive(Debug, Error)]
pub enum AbsorbError {
    #[error("clause is not 1-provable, absorption cannot make progress")]
    NotOneProvable,
    #[error("absorption still incomplete after {used} conflicts (cap {cap})")]
    IterationCap { used: u64, cap: u64 },
}

fn negations_of_rest(c: &[Lit], omit: usize) -> Vec<Lit> {
    c.iter()
        .enumerate()
        .filter(|&(k, _)| k != omit)
        .map(|(_, &l)| !l)
        .collect()
}

/// Unit propagation refutes the clause's negation against the solver's live database.
pub fn is_1_provable(s: &Solver, c: &[Lit]) -> bool {
    if s.is_root_unsat() {
        return true;
    }
    let fp = s.state_fingerprint();
    let negated: Vec<Lit> = c.iter().map(|&l| !l).collect();
    let out = s.probe_closure(&negated);
    assert_eq!(fp, s.state_fingerprint(), "probe must not disturb the solver");
    out.conflict
}

/// Probes every literal of the clause per the absorption definition; literal order is
/// the stored order, the omitted literal iterating first to last.
pub fn is_absorbed(s: &Solver, c: &[Lit]) -> AbsorptionOutcome {
    let fp = s.state_fingerprint();
    let mut witnesses = Vec::with_capacity(c.len());
    for (k, &l) in c.iter().enumerate() {
        if s.is_root_unsat() {
            witnesses.push(LitWitness::Vacuous);
            continue;
        }
        let out = s.probe_closure(&negations_of_rest(c, k));
        let w = if out.conflict {
            LitWitness::Vacuous
        } else if out.values[l.var() as usize] == Some(l.is_pos()) {
            LitWitness::Implied
        } else {
            let assigned = out.values.iter().filter(|v| v.is_some()).count();
            LitWitness::Counterexample { assigned }
        };
        witnesses.push(w);
    }
    assert_eq!(fp, s.state_fingerprint(), "probe must not disturb the solver");
    let absorbed = !witnesses.iter().any(|w| matches!(w, LitWitness::Counterexample { .. }));
    AbsorptionOutcome { absorbed, witnesses }
}

/// Some literal of the clause is underivable by unit propagation from the falsified
/// rest; with `check_entailment` the clause must also follow from the live database,
/// established by a full solve of the database plus the clause's negation.
pub fn is_1_empowering(s: &Solver, c: &[Lit], check_entailment: bool) -> bool {
    if c.is_empty() || s.is_root_unsat() {
        return false;
    }
    let fp = s.state_fingerprint();
    let empowering = (0..c.len()).any(|k| {
        let out = s.probe_closure(&negations_of_rest(c, k));
        let l = c[k];
        !out.conflict && out.values[l.var() as usize] != Some(l.is_pos())
    });
    assert_eq!(fp, s.state_fingerprint(), "probe must not disturb the solver");
    if !empowering {
        return false;
    }
    if check_entailment {
        let mut refute = Cnf::new(s.num_vars());
        for (lits, _) in s.live_clauses() {
            refute.add_clause(lits.iter().copied());
        }
        for &l in c {
            refute.add_clause([!l]);
        }
        let mut checker = Solver::new(&refute, SolverConfig::default())
            .expect("negation formula is well formed");
        if checker.solve().status != SolveStatus::Unsat {
            return false;
        }
    }
    true
}

pub fn default_iteration_cap(c: &[Lit]) -> u64 {
    16 * c.len().max(1) as u64
}

/// Drives the solver until it absorbs `c`: find a literal whose absorption probe fails,
/// falsify the rest of the clause as decisions, falsify that literal, learn from the
/// resulting conflict, restart. Terminates within the cap for any 1-provable clause.
/// Returns the number of conflicts spent.
pub fn absorb_clause(s: &mut Solver, c: &[Lit], cap: Option<u64>) -> Result<u64, AbsorbError> {
    assert!(!c.is_empty(), "cannot absorb the empty clause");
    let cap = cap.unwrap_or_else(|| default_iteration_cap(c));
    let mut used = 0u64;
    let mut provability_checked = false;
    loop {
        s.restart();
        if s.propagate_root() {
            return Ok(used);
        }
        let outcome = is_absorbed(s, c);
        if outcome.absorbed {
            return Ok(used);
        }
        if !provability_checked {
            if !is_1_provable(s, c) {
                return Err(AbsorbError::NotOneProvable);
            }
            provability_checked = true;
        }
        if used >= cap {
            return Err(AbsorbError::IterationCap { used, cap });
        }
        let failing = outcome
            .witnesses
            .iter()
            .position(|w| matches!(w, LitWitness::Counterexample { .. }))
            .expect("unabsorbed clause has a failing literal");
        for (k, &m) in c.iter().enumerate() {
            if k == failing {
                continue;
            }
            match s.value(m) {
                Some(false) => {}
                Some(true) => unreachable!("probe reported a reachable falsifying state"),
                None => {
                    s.decide(!m);
                    let confl = s.propagate();
                    debug_assert!(confl.is_none(), "probe reported a conflict-free state");
                }
            }
        }
        debug_assert_eq!(s.value(c[failing]), None);
        s.decide(!c[failing]);
        let confl = s.propagate().expect("1-provable clause fully falsified");
        s.resolve_conflict(confl);
        used += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ClauseCheck {
    AlreadyAbsorbed,
    AbsorbedNow { conflicts: u64 },
    NotOneProvable,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Phase3Result {
    Pass { status: SolveStatus },
    Fail { reason: String, failing_clause: Option<usize> },
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub phase1_backdoor: VarSet,
    pub phase2_sequence_len: usize,
    /// One entry per recorded clause, in birth order, up to the first failure.
    pub checks: Vec<ClauseCheck>,
    pub phase3_result: Phase3Result,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        matches!(self.phase3_result, Phase3Result::Pass { .. })
    }
}

fn fail(b: VarSet, len: usize, checks: Vec<ClauseCheck>, reason: String, at: Option<usize>) -> VerifyReport {
    VerifyReport {
        phase1_backdoor: b,
        phase2_sequence_len: len,
        checks,
        phase3_result: Phase3Result::Fail { reason, failing_clause: at },
    }
}

enum AbsorbRun {
    Complete(Solver, Vec<ClauseCheck>),
    Failed(Vec<ClauseCheck>, String, Option<usize>),
}

fn absorb_recorded(
    f: &Cnf,
    checker_cfg: &SolverConfig,
    recorded: &[&LearntRecord],
) -> Result<AbsorbRun, ConfigError> {
    let mut s = Solver::new(f, checker_cfg.clone())?;
    let mut checks = Vec::with_capacity(recorded.len());
    for (i, rec) in recorded.iter().enumerate() {
        s.restart();
        if s.propagate_root() {
            checks.push(ClauseCheck::AlreadyAbsorbed);
            continue;
        }
        if is_absorbed(&s, &rec.lits).absorbed {
            checks.push(ClauseCheck::AlreadyAbsorbed);
            continue;
        }
        if !is_1_provable(&s, &rec.lits) {
            checks.push(ClauseCheck::NotOneProvable);
            return Ok(AbsorbRun::Failed(
                checks,
                "recorded clause is neither absorbed nor 1-provable".into(),
                Some(i),
            ));
        }
        match absorb_clause(&mut s, &rec.lits, None) {
            Ok(conflicts) => checks.push(ClauseCheck::AbsorbedNow { conflicts }),
            Err(e) => return Ok(AbsorbRun::Failed(checks, e.to_string(), Some(i))),
        }
    }
    Ok(AbsorbRun::Complete(s, checks))
}

/// Checks a claimed backdoor against a finished logging run. The recorded sequence is
/// the birth-ordered learnt clauses whose dependency sets fit inside `b`; a fresh
/// solver absorbs them in order, then must finish the formula deciding only inside `b`.
/// Completion tries the logged run's final decisions, then its full decision log, then
/// unaided search; every attempt starts over from the post-absorption state, so clauses
/// learnt during a failed attempt cannot derail the replay of the next one.
pub fn verify_logged(
    f: &Cnf,
    b: &VarSet,
    cfg: &SolverConfig,
    logged: &SolveOutcome,
    records: &[LearntRecord],
) -> Result<VerifyReport, ConfigError> {
    let recorded: Vec<&LearntRecord> =
        records.iter().filter(|r| r.dep_vars.is_subset_of(b)).collect();
    let n = recorded.len();
    let checker_cfg = SolverConfig {
        restart_policy: cfg.restart_policy.clone(),
        seed: cfg.seed,
        allowed_decision_vars: Some(b.clone()),
        deletion: DeletionPolicy::Off,
        polarity: cfg.polarity,
        conflict_limit: None,
        random_decision_frac: 0.0,
        check_learnt_birth: false,
    };
    let (mut s, checks) = match absorb_recorded(f, &checker_cfg, &recorded)? {
        AbsorbRun::Complete(s, checks) => (s, checks),
        AbsorbRun::Failed(checks, reason, at) => {
            return Ok(fail(b.clone(), n, checks, reason, at));
        }
    };
    let attempts: [Vec<Lit>; 3] =
        [logged.final_decisions.clone(), logged.decision_log.clone(), Vec::new()];
    for (k, hints) in attempts.into_iter().enumerate() {
        if k > 0 {
            s = match absorb_recorded(f, &checker_cfg, &recorded)? {
                AbsorbRun::Complete(fresh, _) => fresh,
                AbsorbRun::Failed(checks, reason, at) => {
                    return Ok(fail(b.clone(), n, checks, reason, at));
                }
            };
        }
        s.restart();
        s.set_decision_hints(hints);
        let out = s.solve();
        match out.status {
            SolveStatus::Sat | SolveStatus::Unsat => {
                return Ok(VerifyReport {
                    phase1_backdoor: b.clone(),
                    phase2_sequence_len: n,
                    checks,
                    phase3_result: Phase3Result::Pass { status: out.status },
                });
            }
            SolveStatus::Inconclusive => {}
            SolveStatus::Limit => unreachable!("checker runs without a conflict limit"),
        }
    }
    Ok(fail(
        b.clone(),
        n,
        checks,
        "restricted search stayed inconclusive after the absorbed sequence".into(),
        None,
    ))
}

/// Runs a fresh logging solve of `f` under `cfg`, then checks `b` against it.
pub fn verify_lsr(f: &Cnf, b: &VarSet, cfg: &SolverConfig) -> Result<VerifyReport, ConfigError> {
    let mut logger = Solver::new(f, cfg.clone())?;
    let logged = logger.solve();
    let records = logger.records().to_vec();
    verify_logged(f, b, cfg, &logged, &records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::parse_dimacs;
    use crate::lsr;

    fn cnf(text: &str) -> Cnf {
        parse_dimacs(text).unwrap().cnf
    }

    fn solver(text: &str) -> Solver {
        Solver::new(&cnf(text), SolverConfig::default()).unwrap()
    }

    fn lit(dimacs: i64) -> Lit {
        let v = (dimacs.unsigned_abs() - 1) as u32;
        Lit::new(v, dimacs > 0)
    }

    #[test]
    fn provability_follows_unit_chains() {
        let mut s = solver("p cnf 2 2\n1 0\n-1 2 0\n");
        assert!(!s.propagate_root());
        assert!(is_1_provable(&s, &[lit(2)]));
        assert!(!is_1_provable(&s, &[lit(-2)]));
    }

    #[test]
    fn provability_fails_without_clauses() {
        let s = solver("p cnf 3 1\n1 2 3 0\n");
        assert!(!is_1_provable(&s, &[lit(3)]));
        assert!(is_1_provable(&s, &[lit(1), lit(2), lit(3)]));
    }

    #[test]
    fn absorption_of_present_clause() {
        let s = solver("p cnf 2 1\n1 2 0\n");
        let out = is_absorbed(&s, &[lit(1), lit(2)]);
        assert!(out.absorbed);
        assert_eq!(out.witnesses, vec![LitWitness::Implied, LitWitness::Implied]);
    }

    #[test]
    fn absorption_through_resolution_chain() {
        let s = solver("p cnf 3 2\n1 3 0\n-3 2 0\n");
        assert!(is_absorbed(&s, &[lit(1), lit(2)]).absorbed);
    }

    #[test]
    fn wide_clause_does_not_absorb_narrow_one() {
        let s = solver("p cnf 3 1\n1 2 3 0\n");
        let out = is_absorbed(&s, &[lit(1), lit(2)]);
        assert!(!out.absorbed);
        assert!(matches!(out.witnesses[0], LitWitness::Counterexample { .. }));
    }

    #[test]
    fn empowerment_spots_the_resolvent() {
        let s = solver("p cnf 3 2\n1 2 3 0\n1 2 -3 0\n");
        let c = [lit(1), lit(2)];
        assert!(is_1_empowering(&s, &c, false));
        assert!(is_1_empowering(&s, &c, true));
        assert!(!is_1_empowering(&s, &[lit(1), lit(3)], true));
    }

    #[test]
    fn absorbed_clause_is_not_empowering() {
        let s = solver("p cnf 2 1\n1 2 0\n");
        assert!(!is_1_empowering(&s, &[lit(1), lit(2)], false));
    }

    #[test]
    fn absorb_learns_the_resolvent_in_one_conflict() {
        let mut s = solver("p cnf 3 2\n1 2 3 0\n1 2 -3 0\n");
        let c = [lit(1), lit(2)];
        let used = absorb_clause(&mut s, &c, None).unwrap();
        assert_eq!(used, 1);
        assert!(is_absorbed(&s, &c).absorbed);
        assert_eq!(s.records().len(), 1);
        let learnt: VarSet = s.records()[0].lits.iter().map(|l| l.var()).collect();
        assert_eq!(learnt, [0u32, 1].into_iter().collect());
    }

    #[test]
    fn absorb_rejects_unprovable_clause() {
        let mut s = Solver::new(&Cnf::new(2), SolverConfig::default()).unwrap();
        match absorb_clause(&mut s, &[lit(1), lit(2)], None) {
            Err(AbsorbError::NotOneProvable) => {}
            other => panic!("expected NotOneProvable, got {other:?}"),
        }
    }

    #[test]
    fn absorb_already_absorbed_is_free() {
        let mut s = solver("p cnf 2 1\n1 2 0\n");
        assert_eq!(absorb_clause(&mut s, &[lit(1), lit(2)], None).unwrap(), 0);
    }

    #[test]
    fn absorb_decisions_stay_inside_clause_vars() {
        let mut s = solver("p cnf 4 3\n1 2 3 0\n1 2 -3 4 0\n1 2 -4 0\n");
        let c = [lit(1), lit(2)];
        absorb_clause(&mut s, &c, None).unwrap();
        assert!(!s.records().is_empty());
        assert!(is_absorbed(&s, &c).absorbed);
        let vars: VarSet = c.iter().map(|l| l.var()).collect();
        assert!(!s.decision_log().is_empty());
        assert!(s.decision_log().iter().all(|l| vars.contains(l.var())));
    }

    #[test]
    fn verify_accepts_extracted_backdoor_on_tiny_unsat() {
        let f = cnf("p cnf 2 4\n1 2 0\n1 -2 0\n-1 2 0\n-1 -2 0\n");
        let cfg = SolverConfig::default();
        let (out, records) = crate::cdcl::solve(&f, cfg.clone()).unwrap();
        let report = lsr::extract_lsr(&out, &records).unwrap();
        let vr = verify_logged(&f, &report.backdoor, &cfg, &out, &records).unwrap();
        assert!(vr.passed(), "{:?}", vr.phase3_result);
    }

    #[test]
    fn verify_accepts_empty_backdoor_for_up_refutable() {
        let f = cnf("p cnf 1 2\n1 0\n-1 0\n");
        let vr = verify_lsr(&f, &VarSet::new(), &SolverConfig::default()).unwrap();
        assert!(vr.passed());
        assert_eq!(vr.phase2_sequence_len, 0);
    }

    #[test]
    fn verify_passes_single_var_backdoor_when_learning_finishes_the_job() {
        let f = cnf("p cnf 2 4\n1 2 0\n1 -2 0\n-1 2 0\n-1 -2 0\n");
        let b: VarSet = [0u32].into_iter().collect();
        let vr = verify_lsr(&f, &b, &SolverConfig::default()).unwrap();
        assert!(vr.passed());
    }

    #[test]
    fn verify_rejects_backdoor_that_cannot_reach_the_conflict() {
        let f = cnf("p cnf 3 4\n2 3 0\n2 -3 0\n-2 3 0\n-2 -3 0\n");
        let b: VarSet = [0u32].into_iter().collect();
        let vr = verify_lsr(&f, &b, &SolverConfig::default()).unwrap();
        assert!(!vr.passed());
        assert!(matches!(vr.phase3_result, Phase3Result::Fail { failing_clause: None, .. }));
    }

    #[test]
    fn completion_survives_an_unproductive_first_attempt() {
        use crate::sepgen::{drive_schedule, gen_fo, Ordering};
        let inst = gen_fo(&Ordering::interleaved(4).unwrap());
        let cfg = SolverConfig::default();
        let rep = drive_schedule(&inst, &cfg);
        assert_eq!(rep.outcome.status, SolveStatus::Unsat);
        let vr =
            verify_logged(&inst.cnf, &inst.x_vars(), &cfg, &rep.outcome, &rep.records).unwrap();
        assert!(
            matches!(vr.phase3_result, Phase3Result::Pass { status: SolveStatus::Unsat }),
            "{:?}",
            vr.phase3_result
        );
    }
}
