//! Reference unit propagation over a plain clause list.
//!
//! Deliberately naive (no watch lists): every fixpoint round rescans all clauses. The
//! point is an implementation independent of the solver's propagation path, for use by
//! oracles and redundancy checks on small inputs.

use crate::cnf::{Clause, Lit};

/// Fixpoint of unit propagation from a set of assumptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpResult {
    pub assigns: Vec<Option<bool>>,
    pub conflict: bool,
    /// Every clause has a satisfied literal under `assigns`.
    pub all_satisfied: bool,
}

#[derive(Clone, Debug)]
pub struct UpEngine {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl UpEngine {
    pub fn new(num_vars: usize, clauses: impl IntoIterator<Item = Clause>) -> UpEngine {
        UpEngine { num_vars, clauses: clauses.into_iter().collect() }
    }

    pub fn push_clause(&mut self, clause: Clause) {
        self.clauses.push(clause);
    }

    /// Assigns `assumptions` and propagates to fixpoint. Stops at the first conflict,
    /// including contradictory assumptions.
    pub fn closure(&self, assumptions: &[Lit]) -> UpResult {
        let mut assigns: Vec<Option<bool>> = vec![None; self.num_vars];
        let value = |assigns: &[Option<bool>], l: Lit| assigns[l.var() as usize].map(|b| b == l.is_pos());
        for &l in assumptions {
            if value(&assigns, l) == Some(false) {
                return UpResult { assigns, conflict: true, all_satisfied: false };
            }
            assigns[l.var() as usize] = Some(l.is_pos());
        }
        loop {
            let mut changed = false;
            for clause in &self.clauses {
                let mut unassigned = None;
                let mut false_count = 0;
                let mut satisfied = false;
                for &l in clause {
                    match value(&assigns, l) {
                        Some(true) => {
                            satisfied = true;
                            break;
                        }
                        Some(false) => false_count += 1,
                        None => unassigned = Some(l),
                    }
                }
                if satisfied {
                    continue;
                }
                if false_count == clause.len() {
                    return UpResult { assigns, conflict: true, all_satisfied: false };
                }
                if false_count + 1 == clause.len() {
                    let l = unassigned.expect("exactly one literal left open");
                    assigns[l.var() as usize] = Some(l.is_pos());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let all_satisfied = self
            .clauses
            .iter()
            .all(|c| c.iter().any(|&l| value(&assigns, l) == Some(true)));
        UpResult { assigns, conflict: false, all_satisfied }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::parse_dimacs;

    fn lit(l: i64, n: usize) -> Lit {
        Lit::from_dimacs(l, n).unwrap()
    }

    #[test]
    fn closure_chases_units() {
        let cnf = parse_dimacs("p cnf 3 2\n-1 2 0\n-2 3 0\n").unwrap().cnf;
        let up = UpEngine::new(3, cnf.clauses);
        let res = up.closure(&[lit(1, 3)]);
        assert!(!res.conflict);
        assert_eq!(res.assigns, vec![Some(true), Some(true), Some(true)]);
        assert!(res.all_satisfied);
    }

    #[test]
    fn closure_detects_conflict() {
        let cnf = parse_dimacs("p cnf 2 2\n-1 2 0\n-1 -2 0\n").unwrap().cnf;
        let up = UpEngine::new(2, cnf.clauses);
        assert!(up.closure(&[lit(1, 2)]).conflict);
        assert!(up.closure(&[lit(1, 2), lit(-1, 2)]).conflict);
    }

    #[test]
    fn closure_reports_unsatisfied_clauses() {
        let cnf = parse_dimacs("p cnf 3 2\n1 2 0\n2 3 0\n").unwrap().cnf;
        let up = UpEngine::new(3, cnf.clauses);
        let res = up.closure(&[lit(1, 3)]);
        assert!(!res.conflict);
        assert!(!res.all_satisfied);
        assert_eq!(res.assigns[1], None);
    }
}
