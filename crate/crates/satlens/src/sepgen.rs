//! Generator for an ordered formula family whose refutation order is controlled by an
//! enumeration of {0,1}^n, plus the machinery around it: bit-string orderings,
//! complete decision trees and the orderings they induce, a displacement measure
//! between orderings, minimization of that measure over trees, and a scripted solver
//! drive that walks the family in its defining order.
//!
//! For an ordering alpha_1, ..., alpha_N of the n-bit strings (N = 2^n), the formula
//! has variables x_1..x_n and per position k a guard triple (q_k, a_k, b_k). Block k
//! emits the wide clause (C_{alpha_k} OR ~q_1 OR ... OR ~q_k), where C_beta is the
//! clause uniquely falsified by x = beta, followed by (q_k OR a_k), (q_k OR b_k),
//! (q_k OR ~a_k OR ~b_k). Assigning x to alpha_k after the earlier guards are learnt
//! propagates ~q_k and conflicts inside the triple, so a solver restricted to the
//! x variables refutes the formula one block at a time.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::cdcl::{LearntRecord, SolveOutcome, Solver, SolverConfig};
use crate::cnf::{Cnf, Lit, Var, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingKind {
    Lex,
    Interleaved,
    Explicit,
}

/// A total ordering of the n-bit strings. Strings pack into u32 with x_1 as the most
/// significant of the n bits, so lexicographic order equals numeric order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ordering {
    pub n: u32,
    pub kind: OrderingKind,
    seq: Vec<u32>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SepError {
    #[error("bit width {0} outside supported range 1..=20")]
    BadWidth(u32),
    #[error("explicit sequence is not a bijection on {0}-bit strings")]
    NotBijective(u32),
    #[error("orderings have different widths {0} and {1}")]
    WidthMismatch(u32, u32),
    #[error("tree enumeration infeasible at n={0}")]
    TooManyTrees(u32),
    #[error("decision tree is not complete over x_1..x_{0}")]
    MalformedTree(u32),
}

fn check_width(n: u32) -> Result<(), SepError> {
    if (1..=20).contains(&n) {
        Ok(())
    } else {
        Err(SepError::BadWidth(n))
    }
}

impl Ordering {
    pub fn lex(n: u32) -> Result<Ordering, SepError> {
        check_width(n)?;
        Ok(Ordering { n, kind: OrderingKind::Lex, seq: (0..1u32 << n).collect() })
    }

    /// beta_1, ~beta_1, beta_2, ~beta_2, ... where the beta_i are the strings with
    /// leading bit 0 in lexicographic order and ~beta flips every bit.
    pub fn interleaved(n: u32) -> Result<Ordering, SepError> {
        check_width(n)?;
        let mask = (1u32 << n) - 1;
        let mut seq = Vec::with_capacity(1 << n);
        for beta in 0..1u32 << (n - 1) {
            seq.push(beta);
            seq.push(!beta & mask);
        }
        Ok(Ordering { n, kind: OrderingKind::Interleaved, seq })
    }

    pub fn explicit(n: u32, seq: Vec<u32>) -> Result<Ordering, SepError> {
        check_width(n)?;
        let size = 1usize << n;
        let mut hit = vec![false; size];
        if seq.len() != size {
            return Err(SepError::NotBijective(n));
        }
        for &s in &seq {
            if (s as usize) >= size || hit[s as usize] {
                return Err(SepError::NotBijective(n));
            }
            hit[s as usize] = true;
        }
        Ok(Ordering { n, kind: OrderingKind::Explicit, seq })
    }

    pub fn seq(&self) -> &[u32] {
        &self.seq
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }
}

/// Bit of `alpha` read by x_i (1-based), x_1 being the most significant of n bits.
pub fn alpha_bit(alpha: u32, n: u32, i: u32) -> bool {
    debug_assert!((1..=n).contains(&i));
    (alpha >> (n - i)) & 1 == 1
}

/// A complete decision tree over x_1..x_n: every root-to-leaf path queries each
/// variable exactly once; `first_value` is the branch taken first (left).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecisionTree {
    Leaf,
    Node {
        var: u32,
        first_value: bool,
        first: Box<DecisionTree>,
        second: Box<DecisionTree>,
    },
}

impl DecisionTree {
    /// Uniform random complete tree over the given variables.
    pub fn random(vars: &[u32], rng: &mut ChaCha8Rng) -> DecisionTree {
        if vars.is_empty() {
            return DecisionTree::Leaf;
        }
        let at = rng.gen_range(0..vars.len());
        let var = vars[at];
        let rest: Vec<u32> = vars.iter().copied().filter(|&v| v != var).collect();
        DecisionTree::Node {
            var,
            first_value: rng.gen(),
            first: Box::new(DecisionTree::random(&rest, rng)),
            second: Box::new(DecisionTree::random(&rest, rng)),
        }
    }
}

/// The ordering read off the tree's leaves left to right, the first branch being the
/// assignment `var = first_value`.
pub fn ordering_from_tree(t: &DecisionTree, n: u32) -> Result<Ordering, SepError> {
    fn walk(
        t: &DecisionTree,
        n: u32,
        partial: u32,
        used: u32,
        out: &mut Vec<u32>,
    ) -> Result<(), SepError> {
        match t {
            DecisionTree::Leaf => {
                if used.count_ones() != n {
                    return Err(SepError::MalformedTree(n));
                }
                out.push(partial);
                Ok(())
            }
            DecisionTree::Node { var, first_value, first, second } => {
                if !(1..=n).contains(var) {
                    return Err(SepError::MalformedTree(n));
                }
                let bit = 1u32 << (n - var);
                if used & bit != 0 {
                    return Err(SepError::MalformedTree(n));
                }
                let with = |value: bool| if value { partial | bit } else { partial };
                walk(first, n, with(*first_value), used | bit, out)?;
                walk(second, n, with(!*first_value), used | bit, out)
            }
        }
    }
    check_width(n)?;
    let mut seq = Vec::with_capacity(1 << n);
    walk(t, n, 0, 0, &mut seq)?;
    Ordering::explicit(n, seq).map_err(|_| SepError::MalformedTree(n))
}

/// Displacement of `o` against `ot`: the number of strings that some later string of
/// `o` precedes in `ot`. Computed by a right-to-left suffix-minimum scan of
/// ot-positions, linear in the ordering length.
pub fn d_measure(o: &Ordering, ot: &Ordering) -> Result<u64, SepError> {
    if o.n != ot.n {
        return Err(SepError::WidthMismatch(o.n, ot.n));
    }
    let mut pos = vec![0u32; ot.len()];
    for (p, &alpha) in ot.seq.iter().enumerate() {
        pos[alpha as usize] = p as u32;
    }
    Ok(d_scan(&[o.seq.as_slice()], &pos))
}

fn d_scan(parts: &[&[u32]], pos_ot: &[u32]) -> u64 {
    let mut count = 0u64;
    let mut suffix_min = u32::MAX;
    for part in parts.iter().rev() {
        for &alpha in part.iter().rev() {
            let p = pos_ot[alpha as usize];
            if suffix_min < p {
                count += 1;
            }
            suffix_min = suffix_min.min(p);
        }
    }
    count
}

#[derive(Clone, Debug)]
pub enum MinDMode {
    /// True minimum over every complete tree; n <= 4.
    Exhaustive,
    /// Minimum over `k` seeded uniform trees; an upper bound on the true minimum.
    Sample { k: u64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct MinDResult {
    pub value: u64,
    pub witness: DecisionTree,
    pub trees_examined: u64,
}

/// Every (tree, induced partial ordering) over the variable set, in a canonical order:
/// root variable ascending, first branch value false before true, then first and
/// second subtree choices. Orderings carry only the bits of `vars`.
fn enumerate_sub(vars: &[u32], n: u32) -> Vec<(DecisionTree, Vec<u32>)> {
    if vars.is_empty() {
        return vec![(DecisionTree::Leaf, vec![0])];
    }
    let mut out = Vec::new();
    for &var in vars {
        let rest: Vec<u32> = vars.iter().copied().filter(|&v| v != var).collect();
        let subs = enumerate_sub(&rest, n);
        let bit = 1u32 << (n - var);
        for first_value in [false, true] {
            let first_mask = if first_value { bit } else { 0 };
            let second_mask = bit ^ first_mask;
            for (lt, lo) in &subs {
                for (rt, ro) in &subs {
                    let tree = DecisionTree::Node {
                        var,
                        first_value,
                        first: Box::new(lt.clone()),
                        second: Box::new(rt.clone()),
                    };
                    let mut seq = Vec::with_capacity(lo.len() + ro.len());
                    seq.extend(lo.iter().map(|&s| s | first_mask));
                    seq.extend(ro.iter().map(|&s| s | second_mask));
                    out.push((tree, seq));
                }
            }
        }
    }
    out
}

/// All complete trees over x_1..x_n in canonical order. Sized for n <= 3
/// (1,536 trees); larger widths go through `min_d_over_trees` directly.
pub fn enumerate_trees(n: u32) -> Result<Vec<DecisionTree>, SepError> {
    check_width(n)?;
    if n > 3 {
        return Err(SepError::TooManyTrees(n));
    }
    let vars: Vec<u32> = (1..=n).collect();
    Ok(enumerate_sub(&vars, n).into_iter().map(|(t, _)| t).collect())
}

/// Minimizes the displacement of tree-induced orderings against `o` and reports the
/// first tree attaining it in canonical (exhaustive) or draw (sample) order.
pub fn min_d_over_trees(o: &Ordering, mode: &MinDMode) -> Result<MinDResult, SepError> {
    let n = o.n;
    let mut pos = vec![0u32; o.len()];
    for (p, &alpha) in o.seq.iter().enumerate() {
        pos[alpha as usize] = p as u32;
    }
    match mode {
        MinDMode::Sample { k, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let vars: Vec<u32> = (1..=n).collect();
            let mut best: Option<MinDResult> = None;
            for _ in 0..*k {
                let t = DecisionTree::random(&vars, &mut rng);
                let ot = ordering_from_tree(&t, n).expect("random tree is complete");
                let d = d_scan(&[ot.seq()], &pos);
                if best.as_ref().map_or(true, |b| d < b.value) {
                    best = Some(MinDResult { value: d, witness: t, trees_examined: 0 });
                }
            }
            let mut best = best.expect("sample count is positive");
            best.trees_examined = *k;
            Ok(best)
        }
        MinDMode::Exhaustive => {
            if n > 4 {
                return Err(SepError::TooManyTrees(n));
            }
            let vars: Vec<u32> = (1..=n).collect();
            if n <= 3 {
                let all = enumerate_sub(&vars, n);
                let examined = all.len() as u64;
                let mut best: Option<(u64, DecisionTree)> = None;
                for (t, seq) in all {
                    let d = d_scan(&[&seq], &pos);
                    if best.as_ref().map_or(true, |b| d < b.0) {
                        best = Some((d, t));
                    }
                }
                let (value, witness) = best.expect("at least one tree");
                return Ok(MinDResult { value, witness, trees_examined: examined });
            }
            // Split on the root: both subtrees range over the same var subset, so
            // enumerate each subset's sub-orderings once and walk the cross product.
            let branches: Vec<(u32, bool)> = vars
                .iter()
                .flat_map(|&v| [(v, false), (v, true)])
                .collect();
            let per_branch: Vec<(u64, usize, usize)> = branches
                .par_iter()
                .map(|&(var, first_value)| {
                    let rest: Vec<u32> = vars.iter().copied().filter(|&v| v != var).collect();
                    let subs = enumerate_sub(&rest, n);
                    let bit = 1u32 << (n - var);
                    let first_mask = if first_value { bit } else { 0 };
                    let second_mask = bit ^ first_mask;
                    let firsts: Vec<Vec<u32>> = subs
                        .iter()
                        .map(|(_, s)| s.iter().map(|&x| x | first_mask).collect())
                        .collect();
                    let seconds: Vec<Vec<u32>> = subs
                        .iter()
                        .map(|(_, s)| s.iter().map(|&x| x | second_mask).collect())
                        .collect();
                    let mut best = (u64::MAX, 0usize, 0usize);
                    for (li, lo) in firsts.iter().enumerate() {
                        for (ri, ro) in seconds.iter().enumerate() {
                            let d = d_scan(&[lo.as_slice(), ro.as_slice()], &pos);
                            if d < best.0 {
                                best = (d, li, ri);
                            }
                        }
                    }
                    best
                })
                .collect();
            let mut bi = 0;
            for i in 1..per_branch.len() {
                if per_branch[i].0 < per_branch[bi].0 {
                    bi = i;
                }
            }
            let (value, li, ri) = per_branch[bi];
            let (var, first_value) = branches[bi];
            let rest: Vec<u32> = vars.iter().copied().filter(|&v| v != var).collect();
            let subs = enumerate_sub(&rest, n);
            let sub_count = subs.len() as u64;
            let witness = DecisionTree::Node {
                var,
                first_value,
                first: Box::new(subs[li].0.clone()),
                second: Box::new(subs[ri].0.clone()),
            };
            Ok(MinDResult {
                value,
                witness,
                trees_examined: branches.len() as u64 * sub_count * sub_count,
            })
        }
    }
}

/// A bit position and value constant on the ordering's first half and flipped on the
/// second, if one exists. Orderings induced by trees have this at the root variable.
pub fn key_property(o: &Ordering) -> Option<(u32, bool)> {
    let half = o.len() / 2;
    if half == 0 {
        return None;
    }
    'bits: for i in 1..=o.n {
        let b = alpha_bit(o.seq[0], o.n, i);
        for &alpha in &o.seq[..half] {
            if alpha_bit(alpha, o.n, i) != b {
                continue 'bits;
            }
        }
        for &alpha in &o.seq[half..] {
            if alpha_bit(alpha, o.n, i) == b {
                continue 'bits;
            }
        }
        return Some((i, b));
    }
    None
}

/// The generated formula plus the layout needed to address its variables.
#[derive(Clone, Debug)]
pub struct FoInstance {
    pub cnf: Cnf,
    pub n: u32,
    pub ordering: Ordering,
}

impl FoInstance {
    /// Internal variable index of x_i, 1-based i.
    pub fn x_var(&self, i: u32) -> Var {
        debug_assert!((1..=self.n).contains(&i));
        i - 1
    }

    /// Guard variables of the block at 0-based ordering position k.
    pub fn q_var(&self, k: usize) -> Var {
        self.n + 3 * k as u32
    }

    pub fn a_var(&self, k: usize) -> Var {
        self.n + 3 * k as u32 + 1
    }

    pub fn b_var(&self, k: usize) -> Var {
        self.n + 3 * k as u32 + 2
    }

    pub fn x_vars(&self) -> VarSet {
        (0..self.n).collect()
    }

    /// DIMACS text with comment lines recording the construction.
    pub fn to_dimacs(&self) -> String {
        let kind = match self.ordering.kind {
            OrderingKind::Lex => "lex",
            OrderingKind::Interleaved => "interleaved",
            OrderingKind::Explicit => "explicit",
        };
        let seq = self
            .ordering
            .seq()
            .iter()
            .map(|a| format!("{a:0w$b}", w = self.n as usize))
            .collect::<Vec<_>>()
            .join(" ");
        let comments = vec![
            format!("ordered family: n={} ordering={kind}", self.n),
            format!("sequence: {seq}"),
        ];
        crate::cnf::write_dimacs(&self.cnf, &comments)
    }
}

/// Builds the formula for the given ordering: per position the wide guarded clause,
/// then the (q, a), (q, b), (q, ~a, ~b) triple.
pub fn gen_fo(o: &Ordering) -> FoInstance {
    let n = o.n;
    let num_vars = n as usize + 3 * o.len();
    let mut cnf = Cnf::new(num_vars);
    let q_var = |k: usize| n + 3 * k as u32;
    for (k, &alpha) in o.seq().iter().enumerate() {
        let mut wide: Vec<Lit> = (1..=n)
            .map(|i| Lit::new(i - 1, !alpha_bit(alpha, n, i)))
            .collect();
        for j in 0..=k {
            wide.push(Lit::new(q_var(j), false));
        }
        cnf.add_clause(wide);
        let q = Lit::new(q_var(k), true);
        let a = Lit::new(q_var(k) + 1, true);
        let b = Lit::new(q_var(k) + 2, true);
        cnf.add_clause([q, a]);
        cnf.add_clause([q, b]);
        cnf.add_clause([q, !a, !b]);
    }
    FoInstance { cnf, n, ordering: o.clone() }
}

#[derive(Clone, Debug)]
pub struct DriveReport {
    pub outcome: SolveOutcome,
    pub records: Vec<LearntRecord>,
    /// Clauses learnt by the scripted per-position passes, before the closing search.
    pub harvest_len: usize,
}

/// Walks the formula in its defining order with decisions restricted to the x
/// variables: per position, restart, assign x to the position's string bit by bit,
/// learn from the resulting conflict, and move on; a closing restricted search then
/// refutes the formula.
pub fn drive_schedule(inst: &FoInstance, base_cfg: &SolverConfig) -> DriveReport {
    let cfg = SolverConfig {
        allowed_decision_vars: Some(inst.x_vars()),
        ..base_cfg.clone()
    };
    let mut s = Solver::new(&inst.cnf, cfg).expect("generated instance is well formed");
    let n = inst.n;
    'blocks: for &alpha in inst.ordering.seq() {
        s.restart();
        if s.propagate_root() {
            break 'blocks;
        }
        for i in 1..=n {
            let l = Lit::new(inst.x_var(i), alpha_bit(alpha, n, i));
            match s.value(l) {
                Some(true) => continue,
                Some(false) => {
                    debug_assert!(false, "drive propagated against the scheduled string");
                    continue;
                }
                None => {
                    s.decide(l);
                    if let Some(confl) = s.propagate() {
                        if s.resolve_conflict(confl) {
                            break 'blocks;
                        }
                        continue 'blocks;
                    }
                }
            }
        }
        debug_assert!(false, "complete x assignment must conflict");
    }
    let harvest_len = s.records().len();
    s.restart();
    let outcome = s.solve();
    DriveReport { outcome, records: s.records().to_vec(), harvest_len }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cdcl::{solve, RestartPolicy, SolveStatus};

    #[test]
    fn lex_and_interleaved_small_cases() {
        assert_eq!(Ordering::lex(2).unwrap().seq(), &[0b00, 0b01, 0b10, 0b11]);
        assert_eq!(Ordering::interleaved(1).unwrap().seq(), &[0, 1]);
        assert_eq!(Ordering::interleaved(2).unwrap().seq(), &[0b00, 0b11, 0b01, 0b10]);
    }

    #[test]
    fn interleaved_halves_balance_every_coordinate() {
        for n in 2..=6u32 {
            let o = Ordering::interleaved(n).unwrap();
            let half = o.len() / 2;
            for i in 1..=n {
                for b in [false, true] {
                    let in_first = o.seq()[..half]
                        .iter()
                        .filter(|&&a| alpha_bit(a, n, i) == b)
                        .count();
                    assert_eq!(in_first, 1 << (n - 2), "n={n} i={i} b={b}");
                }
            }
        }
    }

    #[test]
    fn explicit_rejects_non_bijections() {
        assert!(Ordering::explicit(1, vec![0, 0]).is_err());
        assert!(Ordering::explicit(1, vec![0]).is_err());
        assert!(Ordering::explicit(1, vec![1, 0]).is_ok());
    }

    #[test]
    fn tree_orderings_follow_leaves() {
        let t = DecisionTree::Node {
            var: 1,
            first_value: false,
            first: Box::new(DecisionTree::Leaf),
            second: Box::new(DecisionTree::Leaf),
        };
        assert_eq!(ordering_from_tree(&t, 1).unwrap().seq(), &[0, 1]);

        let sub = |fv| DecisionTree::Node {
            var: 1,
            first_value: fv,
            first: Box::new(DecisionTree::Leaf),
            second: Box::new(DecisionTree::Leaf),
        };
        let t = DecisionTree::Node {
            var: 2,
            first_value: true,
            first: Box::new(sub(false)),
            second: Box::new(sub(false)),
        };
        assert_eq!(ordering_from_tree(&t, 2).unwrap().seq(), &[0b01, 0b11, 0b00, 0b10]);
    }

    #[test]
    fn tree_ordering_key_property_sits_at_the_root() {
        let trees = enumerate_trees(3).unwrap();
        assert_eq!(trees.len(), 1536);
        for t in &trees {
            let o = ordering_from_tree(t, 3).unwrap();
            let (var, value) = key_property(&o).expect("tree ordering has the property");
            match t {
                DecisionTree::Node { var: root, first_value, .. } => {
                    assert_eq!(var, *root);
                    assert_eq!(value, *first_value);
                }
                DecisionTree::Leaf => unreachable!(),
            }
        }
    }

    #[test]
    fn tree_enumeration_is_injective_on_orderings() {
        for n in 1..=3u32 {
            let trees = enumerate_trees(n).unwrap();
            let mut seen: Vec<Vec<u32>> = trees
                .iter()
                .map(|t| ordering_from_tree(t, n).unwrap().seq().to_vec())
                .collect();
            let total = seen.len();
            seen.sort();
            seen.dedup();
            assert_eq!(seen.len(), total, "n={n}");
        }
    }

    #[test]
    fn malformed_trees_are_rejected() {
        assert!(matches!(
            ordering_from_tree(&DecisionTree::Leaf, 1),
            Err(SepError::MalformedTree(_))
        ));
        let repeat = DecisionTree::Node {
            var: 1,
            first_value: false,
            first: Box::new(DecisionTree::Node {
                var: 1,
                first_value: false,
                first: Box::new(DecisionTree::Leaf),
                second: Box::new(DecisionTree::Leaf),
            }),
            second: Box::new(DecisionTree::Node {
                var: 2,
                first_value: false,
                first: Box::new(DecisionTree::Leaf),
                second: Box::new(DecisionTree::Leaf),
            }),
        };
        assert!(ordering_from_tree(&repeat, 2).is_err());
    }

    #[test]
    fn d_measure_examples() {
        let o = Ordering::lex(2).unwrap();
        assert_eq!(d_measure(&o, &o).unwrap(), 0);
        let ot = Ordering::explicit(2, vec![0b00, 0b10, 0b01, 0b11]).unwrap();
        assert_eq!(d_measure(&o, &ot).unwrap(), 1);
        let rev = Ordering::explicit(2, o.seq().iter().rev().copied().collect()).unwrap();
        assert_eq!(d_measure(&rev, &o).unwrap(), 3);
        assert_eq!(d_measure(&o, &rev).unwrap(), 3);
    }

    #[test]
    fn min_d_identity_tree_reaches_zero_on_lex() {
        let o = Ordering::lex(1).unwrap();
        let r = min_d_over_trees(&o, &MinDMode::Exhaustive).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.trees_examined, 2);
        let o = Ordering::lex(3).unwrap();
        let r = min_d_over_trees(&o, &MinDMode::Exhaustive).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(r.trees_examined, 1536);
        assert_eq!(ordering_from_tree(&r.witness, 3).unwrap().seq(), o.seq());
    }

    #[test]
    fn min_d_interleaved_two_bits() {
        let o = Ordering::interleaved(2).unwrap();
        let r = min_d_over_trees(&o, &MinDMode::Exhaustive).unwrap();
        assert_eq!(r.value, 1);
        let ot = ordering_from_tree(&r.witness, 2).unwrap();
        assert_eq!(d_measure(&o, &ot).unwrap(), 1);
    }

    #[test]
    fn min_d_sampling_bounds_the_exhaustive_value() {
        let o = Ordering::interleaved(3).unwrap();
        let exh = min_d_over_trees(&o, &MinDMode::Exhaustive).unwrap();
        let sam = min_d_over_trees(&o, &MinDMode::Sample { k: 500, seed: 9 }).unwrap();
        assert!(sam.value >= exh.value);
        let again = min_d_over_trees(&o, &MinDMode::Sample { k: 500, seed: 9 }).unwrap();
        assert_eq!(sam.value, again.value);
    }

    #[test]
    fn gen_fo_counts_match_closed_forms() {
        for (n, ord) in [(1u32, "lex"), (2, "lex"), (3, "int")] {
            let o = if ord == "lex" { Ordering::lex(n) } else { Ordering::interleaved(n) };
            let inst = gen_fo(&o.unwrap());
            assert_eq!(inst.cnf.num_vars, n as usize + 3 * (1 << n));
            assert_eq!(inst.cnf.clauses.len(), 4 * (1 << n));
        }
    }

    #[test]
    fn gen_fo_last_wide_clause_carries_every_guard() {
        let inst = gen_fo(&Ordering::lex(2).unwrap());
        let wide = &inst.cnf.clauses[4 * 3];
        assert_eq!(wide.len(), 2 + 4);
        for k in 0..4 {
            assert!(wide.contains(&Lit::new(inst.q_var(k), false)));
        }
        let first = &inst.cnf.clauses[0];
        assert_eq!(first.len(), 2 + 1);
        assert_eq!(first[..2], [Lit::new(0, true), Lit::new(1, true)]);
    }

    #[test]
    fn family_is_unsatisfiable() {
        for o in [Ordering::lex(2).unwrap(), Ordering::interleaved(3).unwrap()] {
            let inst = gen_fo(&o);
            let (out, _) = solve(&inst.cnf, SolverConfig::default()).unwrap();
            assert_eq!(out.status, SolveStatus::Unsat);
        }
    }

    #[test]
    fn drive_harvests_one_guard_unit_per_position() {
        let inst = gen_fo(&Ordering::lex(2).unwrap());
        let report = drive_schedule(&inst, &SolverConfig::default());
        assert_eq!(report.outcome.status, SolveStatus::Unsat);
        assert_eq!(report.harvest_len, 4);
        for (k, rec) in report.records[..4].iter().enumerate() {
            assert_eq!(rec.lits, vec![Lit::new(inst.q_var(k), true)]);
            assert_eq!(rec.dep_vars, [inst.q_var(k)].into_iter().collect());
        }
        let xs = inst.x_vars();
        assert!(report.outcome.decision_log.iter().all(|l| xs.contains(l.var())));
    }

    #[test]
    fn drive_stays_on_x_for_both_orderings() {
        for o in [Ordering::lex(3).unwrap(), Ordering::interleaved(3).unwrap()] {
            let inst = gen_fo(&o);
            let cfg = SolverConfig { restart_policy: RestartPolicy::Always, ..Default::default() };
            let report = drive_schedule(&inst, &cfg);
            assert_eq!(report.outcome.status, SolveStatus::Unsat);
            let xs = inst.x_vars();
            assert!(report.outcome.decision_log.iter().all(|l| xs.contains(l.var())));
        }
    }

    #[test]
    fn dimacs_emission_mentions_the_ordering() {
        let inst = gen_fo(&Ordering::interleaved(2).unwrap());
        let text = inst.to_dimacs();
        assert!(text.contains("ordering=interleaved"));
        assert!(text.contains("00 11 01 10"));
        assert!(text.contains("p cnf 14 16"));
    }
}
