//! Brute-force oracles shared by the integration suites. Everything here is
//! deliberately naive so it cannot share bugs with the library implementations.

#![allow(dead_code)]

use rand::Rng;
use satlens::cnf::{Cnf, Lit};

/// Exhaustive satisfiability check, usable up to ~20 variables.
pub fn enumerate_sat(f: &Cnf) -> bool {
    assert!(f.num_vars <= 24, "enumeration oracle limited to small formulas");
    first_model(f).is_some()
}

pub fn model_satisfies(f: &Cnf, model: &[bool]) -> bool {
    f.clauses
        .iter()
        .all(|c| c.iter().any(|l| model[l.var() as usize] == l.is_pos()))
}

fn bits_satisfy(f: &Cnf, bits: u64) -> bool {
    f.clauses
        .iter()
        .all(|c| c.iter().any(|l| (bits >> l.var() & 1 == 1) == l.is_pos()))
}

fn assignment(bits: u64, num_vars: usize) -> Vec<bool> {
    (0..num_vars).map(|v| bits >> v & 1 == 1).collect()
}

pub fn first_model(f: &Cnf) -> Option<Vec<bool>> {
    (0..1u64 << f.num_vars)
        .find(|&bits| bits_satisfy(f, bits))
        .map(|bits| assignment(bits, f.num_vars))
}

/// Every satisfying assignment, indexed by variable.
pub fn all_models(f: &Cnf) -> Vec<Vec<bool>> {
    assert!(f.num_vars <= 20);
    (0..1u64 << f.num_vars)
        .map(|bits| assignment(bits, f.num_vars))
        .filter(|m| model_satisfies(f, m))
        .collect()
}

/// Backbone literals straight from the model set: variables fixed one way in
/// every model. Empty when the formula has no models.
pub fn backbone_from_models(models: &[Vec<bool>]) -> Vec<Lit> {
    let Some(first) = models.first() else { return Vec::new() };
    (0..first.len() as u32)
        .filter(|&v| models.iter().all(|m| m[v as usize] == first[v as usize]))
        .map(|v| Lit::new(v, first[v as usize]))
        .collect()
}

/// Displacement by the definition: count the elements of `o` for which some
/// later element of `o` precedes them in `ot`. Quadratic on purpose.
pub fn d_def(o: &[u32], ot: &[u32]) -> u64 {
    assert_eq!(o.len(), ot.len());
    let mut pos = vec![0usize; ot.len()];
    for (p, &alpha) in ot.iter().enumerate() {
        pos[alpha as usize] = p;
    }
    let mut count = 0;
    for (i, &ap) in o.iter().enumerate() {
        if o[i + 1..].iter().any(|&a| pos[a as usize] < pos[ap as usize]) {
            count += 1;
        }
    }
    count
}

/// Orderings induced by every complete decision tree over `vars`, built by a
/// recursion independent of the library's enumerator. Bits outside `vars` are 0;
/// `n` fixes the x_1-is-most-significant packing.
pub fn sub_orderings(vars: &[u32], n: u32) -> Vec<Vec<u32>> {
    if vars.is_empty() {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for &var in vars {
        let rest: Vec<u32> = vars.iter().copied().filter(|&v| v != var).collect();
        let subs = sub_orderings(&rest, n);
        let bit = 1u32 << (n - var);
        for first_mask in [0, bit] {
            let second_mask = bit ^ first_mask;
            for lo in &subs {
                for ro in &subs {
                    let mut seq = Vec::with_capacity(lo.len() + ro.len());
                    seq.extend(lo.iter().map(|&s| s | first_mask));
                    seq.extend(ro.iter().map(|&s| s | second_mask));
                    out.push(seq);
                }
            }
        }
    }
    out
}

/// A consistent decision prefix: distinct variables in random order with random
/// polarities, any length up to the variable count.
pub fn random_prefix(num_vars: usize, rng: &mut impl Rng) -> Vec<Lit> {
    use rand::seq::SliceRandom;
    let k = rng.gen_range(0..=num_vars);
    let mut vars: Vec<u32> = (0..num_vars as u32).collect();
    vars.shuffle(rng);
    vars.truncate(k);
    vars.into_iter().map(|v| Lit::new(v, rng.gen())).collect()
}

/// The corpus generator used by the oracle-equivalence suites: seeded random
/// 3-CNFs with 8..=16 variables at clause/variable ratios between 2 and 6.
pub fn random_corpus_instance(rng: &mut impl Rng) -> Cnf {
    let num_vars = rng.gen_range(8..=16usize);
    let ratio = rng.gen_range(2.0..=6.0f64);
    let num_clauses = (num_vars as f64 * ratio).round() as usize;
    satlens::harness::random_3cnf(num_vars, num_clauses, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use satlens::cnf::parse_dimacs;

    #[test]
    fn enumeration_agrees_on_hand_checked_formulas() {
        let sat = parse_dimacs("p cnf 2 2\n1 2 0\n-1 2 0\n").unwrap().cnf;
        let unsat = parse_dimacs("p cnf 1 2\n1 0\n-1 0\n").unwrap().cnf;
        assert!(enumerate_sat(&sat));
        assert!(!enumerate_sat(&unsat));
        assert_eq!(all_models(&sat).len(), 2);
        let bb = backbone_from_models(&all_models(&sat));
        assert_eq!(bb, vec![Lit::new(1, true)]);
    }

    #[test]
    fn definitional_displacement_matches_worked_examples() {
        let o = [0u32, 1, 2, 3];
        assert_eq!(d_def(&o, &o), 0);
        assert_eq!(d_def(&o, &[0, 2, 1, 3]), 1);
        assert_eq!(d_def(&o, &[3, 2, 1, 0]), 3);
    }

    #[test]
    fn tree_enumeration_counts_match_the_recurrence() {
        assert_eq!(sub_orderings(&[1], 1).len(), 2);
        assert_eq!(sub_orderings(&[1, 2], 2).len(), 16);
        assert_eq!(sub_orderings(&[1, 2, 3], 3).len(), 1536);
    }
}
