//! Structural parameters of a formula: variable incidence graph, community
//! structure, backbone, a treewidth upper bound, and weak backdoor search.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cdcl::{self, SolveOutcome, SolveStatus, SolverConfig};
use crate::cnf::{Cnf, Lit, Var, VarSet};
use crate::up::UpEngine;

/// Variable incidence graph. One node per variable; each clause with `k >= 2`
/// distinct variables adds `1/(k-1)` to the weight of every pair.
#[derive(Clone, Debug)]
pub struct Vig {
    adj: Vec<Vec<(Var, f64)>>,
    deg: Vec<f64>,
    total_weight: f64,
    num_edges: usize,
}

impl Vig {
    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn neighbors(&self, v: Var) -> &[(Var, f64)] {
        &self.adj[v as usize]
    }

    /// Weighted degree of `v`.
    pub fn degree_weight(&self, v: Var) -> f64 {
        self.deg[v as usize]
    }

    pub fn edge_weight(&self, x: Var, y: Var) -> Option<f64> {
        self.adj[x as usize].iter().find(|&&(u, _)| u == y).map(|&(_, w)| w)
    }
}

pub fn build_vig(f: &Cnf) -> Vig {
    let mut weights: BTreeMap<(Var, Var), f64> = BTreeMap::new();
    let mut closed_form = 0.0;
    for c in &f.clauses {
        let mut vars: Vec<Var> = c.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        vars.dedup();
        if vars.len() < 2 {
            continue;
        }
        closed_form += vars.len() as f64 / 2.0;
        let w = 1.0 / (vars.len() as f64 - 1.0);
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                *weights.entry((vars[i], vars[j])).or_insert(0.0) += w;
            }
        }
    }
    let mut adj = vec![Vec::new(); f.num_vars];
    let mut deg = vec![0.0; f.num_vars];
    let mut total = 0.0;
    for (&(x, y), &w) in &weights {
        adj[x as usize].push((y, w));
        adj[y as usize].push((x, w));
        deg[x as usize] += w;
        deg[y as usize] += w;
        total += w;
    }
    for nb in &mut adj {
        nb.sort_unstable_by_key(|&(u, _)| u);
    }
    debug_assert!((total - closed_form).abs() <= 1e-9 * closed_form.max(1.0));
    Vig { adj, deg, total_weight: total, num_edges: weights.len() }
}

/// Community id per node, ids dense in `0..num_communities`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    comm: Vec<u32>,
    num_communities: u32,
}

impl Partition {
    /// Renumbers arbitrary labels densely in order of first appearance.
    pub fn from_labels(labels: Vec<u32>) -> Partition {
        let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
        let mut comm = Vec::with_capacity(labels.len());
        for l in labels {
            let next = remap.len() as u32;
            comm.push(*remap.entry(l).or_insert(next));
        }
        Partition { num_communities: remap.len() as u32, comm }
    }

    pub fn singletons(n: usize) -> Partition {
        Partition { comm: (0..n as u32).collect(), num_communities: n as u32 }
    }

    pub fn community_of(&self, v: Var) -> u32 {
        self.comm[v as usize]
    }

    pub fn num_communities(&self) -> u32 {
        self.num_communities
    }

    pub fn len(&self) -> usize {
        self.comm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comm.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.comm
    }
}

/// Newman modularity, in `[-1/2, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QValue {
    pub q: f64,
}

/// Q = sum over communities of `w_in/m - (deg/(2m))^2`. Zero on an edgeless graph.
pub fn modularity(g: &Vig, p: &Partition) -> QValue {
    assert_eq!(p.len(), g.num_nodes());
    let m = g.total_weight();
    if m == 0.0 {
        return QValue { q: 0.0 };
    }
    let k = p.num_communities() as usize;
    let mut w_in = vec![0.0; k];
    let mut deg = vec![0.0; k];
    for v in 0..g.num_nodes() as Var {
        let cv = p.community_of(v) as usize;
        deg[cv] += g.degree_weight(v);
        for &(u, w) in g.neighbors(v) {
            if u > v && p.community_of(u) as usize == cv {
                w_in[cv] += w;
            }
        }
    }
    let mut q = 0.0;
    for c in 0..k {
        q += w_in[c] / m - (deg[c] / (2.0 * m)).powi(2);
    }
    debug_assert!(q > -0.5 - 1e-9 && q < 1.0 + 1e-9);
    QValue { q }
}

struct LevelGraph {
    adj: Vec<Vec<(u32, f64)>>,
    loops: Vec<f64>,
    deg: Vec<f64>,
    m: f64,
}

fn level_from_vig(g: &Vig) -> LevelGraph {
    let n = g.num_nodes();
    LevelGraph {
        adj: (0..n).map(|v| g.adj[v].clone()).collect(),
        loops: vec![0.0; n],
        deg: g.deg.clone(),
        m: g.total_weight(),
    }
}

const LOUVAIN_EPS: f64 = 1e-7;

/// One local-move phase: every node starts in its own community and greedily
/// joins the neighboring community with the best modularity gain.
fn local_moves(g: &LevelGraph, rng: &mut ChaCha8Rng) -> (Vec<u32>, bool) {
    let n = g.adj.len();
    let mut comm: Vec<u32> = (0..n as u32).collect();
    let mut tot: Vec<f64> = g.deg.clone();
    let mut order: Vec<usize> = (0..n).collect();
    let mut moved_any = false;
    loop {
        let mut moved = false;
        order.shuffle(rng);
        for &v in &order {
            let cv = comm[v];
            let mut to: BTreeMap<u32, f64> = BTreeMap::new();
            to.insert(cv, 0.0);
            for &(u, w) in &g.adj[v] {
                *to.entry(comm[u as usize]).or_insert(0.0) += w;
            }
            tot[cv as usize] -= g.deg[v];
            let kv = g.deg[v];
            let mut best_c = cv;
            let mut best_gain = to[&cv] - tot[cv as usize] * kv / (2.0 * g.m);
            for (&c, &kin) in &to {
                if c == cv {
                    continue;
                }
                let gain = kin - tot[c as usize] * kv / (2.0 * g.m);
                if gain > best_gain + LOUVAIN_EPS {
                    best_c = c;
                    best_gain = gain;
                }
            }
            tot[best_c as usize] += kv;
            if best_c != cv {
                comm[v] = best_c;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            return (comm, moved_any);
        }
    }
}

fn aggregate(g: &LevelGraph, comm: &[u32], k: usize) -> LevelGraph {
    let mut loops = vec![0.0; k];
    let mut maps: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); k];
    for v in 0..g.adj.len() {
        let cv = comm[v] as usize;
        loops[cv] += g.loops[v];
        for &(u, w) in &g.adj[v] {
            let cu = comm[u as usize] as usize;
            if cu == cv {
                if u as usize > v {
                    loops[cv] += w;
                }
            } else {
                *maps[cv].entry(cu as u32).or_insert(0.0) += w;
            }
        }
    }
    let adj: Vec<Vec<(u32, f64)>> = maps.into_iter().map(|m| m.into_iter().collect()).collect();
    let mut deg = vec![0.0; k];
    let mut m_tot = 0.0;
    for c in 0..k {
        let mut d = 2.0 * loops[c];
        for &(_, w) in &adj[c] {
            d += w;
        }
        deg[c] = d;
        m_tot += loops[c];
        for &(u, w) in &adj[c] {
            if (u as usize) > c {
                m_tot += w;
            }
        }
    }
    LevelGraph { adj, loops, deg, m: m_tot }
}

/// Greedy community detection: local moves, then aggregation, repeated until no
/// move improves Q by more than the fixed threshold. Node visit order is
/// shuffled by `seed`; ties break toward the lower community id.
pub fn louvain(g: &Vig, seed: u64) -> (Partition, QValue) {
    let n = g.num_nodes();
    if n == 0 || g.total_weight() == 0.0 {
        return (Partition::singletons(n), QValue { q: 0.0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut node_comm: Vec<u32> = (0..n as u32).collect();
    let mut level = level_from_vig(g);
    let mut last_q = modularity(g, &Partition::from_labels(node_comm.clone())).q;
    loop {
        let (comm, moved) = local_moves(&level, &mut rng);
        if !moved {
            break;
        }
        let dense = Partition::from_labels(comm);
        for c in node_comm.iter_mut() {
            *c = dense.community_of(*c);
        }
        let q_now = modularity(g, &Partition::from_labels(node_comm.clone())).q;
        debug_assert!(q_now >= last_q - 1e-9);
        last_q = q_now;
        let k = dense.num_communities() as usize;
        level = aggregate(&level, dense.labels(), k);
        debug_assert!((level.m - g.total_weight()).abs() <= 1e-6 * g.total_weight().max(1.0));
    }
    let p = Partition::from_labels(node_comm);
    let q = modularity(g, &p);
    (p, q)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructError {
    #[error("formula is unsatisfiable")]
    Unsat,
}

fn capped_solve(f: &Cnf, cap: Option<u64>) -> SolveOutcome {
    let cfg = SolverConfig { conflict_limit: cap, ..SolverConfig::default() };
    let (out, _) = cdcl::solve(f, cfg).expect("structure analysis solver configuration");
    out
}

#[derive(Clone, Debug)]
pub struct BackboneResult {
    /// Literals true in every model, sorted by variable.
    pub literals: Vec<Lit>,
    /// False when the conflict budget ran out before every candidate was settled.
    pub complete: bool,
    pub solve_calls: u64,
    pub conflicts: u64,
}

/// Computes the backbone by iterative literal tests: starting from one model,
/// each surviving candidate literal `l` is tested with a solve of `f && !l`;
/// UNSAT confirms it, a model filters the remaining candidates. `budget` caps
/// the total conflicts across all calls.
pub fn backbone(f: &Cnf, budget: Option<u64>) -> Result<BackboneResult, StructError> {
    let mut calls = 0u64;
    let mut spent = 0u64;
    let remaining = |spent: u64| budget.map(|b| b.saturating_sub(spent));

    let out = capped_solve(f, remaining(spent));
    calls += 1;
    spent += out.stats.conflicts;
    match out.status {
        SolveStatus::Unsat => return Err(StructError::Unsat),
        SolveStatus::Limit => {
            return Ok(BackboneResult {
                literals: Vec::new(),
                complete: false,
                solve_calls: calls,
                conflicts: spent,
            });
        }
        SolveStatus::Sat => {}
        SolveStatus::Inconclusive => unreachable!("unrestricted solve cannot be inconclusive"),
    }
    let model = out.model.expect("sat outcome carries a model");
    let mut candidate: Vec<Option<bool>> = model.iter().map(|&b| Some(b)).collect();
    let mut confirmed: Vec<Lit> = Vec::new();
    let mut complete = true;

    for v in 0..f.num_vars as Var {
        let polarity = match candidate[v as usize] {
            Some(p) => p,
            None => continue,
        };
        let lit = Lit::new(v, polarity);
        let mut g = f.clone();
        g.add_clause([!lit]);
        let out = capped_solve(&g, remaining(spent));
        calls += 1;
        spent += out.stats.conflicts;
        match out.status {
            SolveStatus::Unsat => confirmed.push(lit),
            SolveStatus::Sat => {
                let m = out.model.expect("sat outcome carries a model");
                for u in 0..f.num_vars {
                    if let Some(p) = candidate[u] {
                        if p != m[u] {
                            candidate[u] = None;
                        }
                    }
                }
            }
            SolveStatus::Limit => {
                complete = false;
                break;
            }
            SolveStatus::Inconclusive => unreachable!("unrestricted solve cannot be inconclusive"),
        }
    }
    Ok(BackboneResult { literals: confirmed, complete, solve_calls: calls, conflicts: spent })
}

/// Width of a min-degree greedy elimination ordering on the primal graph (the
/// unweighted incidence-graph skeleton). An upper bound on treewidth; exact for
/// trees and cliques.
pub fn treewidth_ub(f: &Cnf) -> usize {
    let n = f.num_vars;
    let mut adj: Vec<BTreeSet<Var>> = vec![BTreeSet::new(); n];
    for c in &f.clauses {
        let mut vars: Vec<Var> = c.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        vars.dedup();
        for i in 0..vars.len() {
            for j in i + 1..vars.len() {
                adj[vars[i] as usize].insert(vars[j]);
                adj[vars[j] as usize].insert(vars[i]);
            }
        }
    }
    let mut alive = vec![true; n];
    let mut width = 0usize;
    for _ in 0..n {
        let mut pick: Option<(usize, usize)> = None;
        for v in 0..n {
            if alive[v] && pick.map_or(true, |(pd, _)| adj[v].len() < pd) {
                pick = Some((adj[v].len(), v));
            }
        }
        let (d, v) = match pick {
            Some(p) => p,
            None => break,
        };
        width = width.max(d);
        let nbs: Vec<Var> = adj[v].iter().copied().collect();
        for i in 0..nbs.len() {
            for j in i + 1..nbs.len() {
                adj[nbs[i] as usize].insert(nbs[j]);
                adj[nbs[j] as usize].insert(nbs[i]);
            }
        }
        for &u in &nbs {
            adj[u as usize].remove(&(v as Var));
        }
        adj[v].clear();
        alive[v] = false;
    }
    width
}

#[derive(Clone, Debug)]
pub struct WeakBackdoorResult {
    pub backdoor: VarSet,
    /// Assignment to the backdoor variables under which propagation alone
    /// satisfies every clause.
    pub witness: Vec<Lit>,
    /// Distinct locally-minimal sets seen during the search. Experimental.
    pub minimal_sets_found: usize,
    /// Propagation replays consumed.
    pub replays: u64,
}

const TABU_TENURE: usize = 7;
const SWAP_TRIES: usize = 8;

/// Searches for a small weak backdoor under the unit-propagation subsolver.
/// Starts from the decision variables of a model-finding run, then shrinks the
/// set by tabu local search with remove-one and swap-one moves. Every candidate
/// is validated by replaying its witness assignment through propagation;
/// `budget` caps the number of replays.
pub fn weak_backdoor(f: &Cnf, budget: u64, seed: u64) -> Result<WeakBackdoorResult, StructError> {
    let out = capped_solve(f, None);
    match out.status {
        SolveStatus::Unsat => return Err(StructError::Unsat),
        SolveStatus::Sat => {}
        _ => unreachable!("uncapped unrestricted solve must settle"),
    }
    let model = out.model.expect("sat outcome carries a model");
    let engine = UpEngine::new(f.num_vars, f.clauses.iter().cloned());
    let mut replays = 0u64;

    let assumptions = |b: &[Var]| -> Vec<Lit> {
        b.iter().map(|&v| Lit::new(v, model[v as usize])).collect()
    };
    let witnesses = |b: &[Var], replays: &mut u64| -> bool {
        *replays += 1;
        let r = engine.closure(&assumptions(b));
        debug_assert!(!r.conflict);
        r.all_satisfied
    };

    let mut cur: Vec<Var> = out.final_decisions.iter().map(|l| l.var()).collect();
    cur.sort_unstable();
    cur.dedup();
    while !witnesses(&cur, &mut replays) {
        let r = engine.closure(&assumptions(&cur));
        let mut grown = false;
        'clauses: for c in &f.clauses {
            if c.iter().any(|l| r.assigns[l.var() as usize] == Some(l.is_pos())) {
                continue;
            }
            for l in c {
                if model[l.var() as usize] == l.is_pos() {
                    cur.push(l.var());
                    cur.sort_unstable();
                    grown = true;
                    break 'clauses;
                }
            }
        }
        assert!(grown, "the model must satisfy every clause");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = cur.clone();
    let mut tabu: VecDeque<Var> = VecDeque::new();
    let mut minimal: HashSet<Vec<Var>> = HashSet::new();

    'search: while replays < budget {
        let mut order = cur.clone();
        order.shuffle(&mut rng);
        let mut applied = false;
        let mut any_removal = false;
        for &v in &order {
            if replays >= budget {
                break 'search;
            }
            let trial: Vec<Var> = cur.iter().copied().filter(|&u| u != v).collect();
            if !witnesses(&trial, &mut replays) {
                continue;
            }
            any_removal = true;
            if tabu.contains(&v) {
                continue;
            }
            cur = trial;
            tabu.push_back(v);
            if tabu.len() > TABU_TENURE {
                tabu.pop_front();
            }
            if cur.len() < best.len() {
                best = cur.clone();
            }
            applied = true;
            break;
        }
        if applied {
            continue;
        }
        if !any_removal {
            minimal.insert(cur.clone());
        }
        if cur.is_empty() {
            break;
        }
        let outside: Vec<Var> = (0..f.num_vars as Var).filter(|v| !cur.contains(v)).collect();
        if outside.is_empty() {
            break;
        }
        let mut swapped = false;
        for _ in 0..SWAP_TRIES {
            if replays >= budget {
                break 'search;
            }
            let &v = cur.choose(&mut rng).expect("nonempty current set");
            let &u = outside.choose(&mut rng).expect("nonempty outside set");
            if tabu.contains(&u) {
                continue;
            }
            let mut trial: Vec<Var> = cur.iter().copied().filter(|&w| w != v).collect();
            trial.push(u);
            trial.sort_unstable();
            if witnesses(&trial, &mut replays) {
                cur = trial;
                tabu.push_back(v);
                if tabu.len() > TABU_TENURE {
                    tabu.pop_front();
                }
                swapped = true;
                break;
            }
        }
        if !swapped {
            break;
        }
    }

    assert!(witnesses(&best, &mut replays), "best set lost its witness");
    let witness = assumptions(&best);
    Ok(WeakBackdoorResult {
        backdoor: VarSet::from_vec(best),
        witness,
        minimal_sets_found: minimal.len(),
        replays,
    })
}
