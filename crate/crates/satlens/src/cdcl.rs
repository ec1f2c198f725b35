//! CDCL solver with two-watched-literal propagation, first-UIP learning, recursive
//! clause minimization, activity branching, Luby/always/never restarts, and
//! activity-based clause deletion.
//!
//! Beyond solving, the engine records for every learnt clause the set of variables its
//! derivation depended on: the clause's own variables plus, recursively, the recorded
//! sets of every learnt clause resolved on the conflict side, consulted by the
//! minimizer, or sitting in the root-level reason chain of a dropped literal. Records
//! outlive clause deletion. A finished run reports its final trail split into decisions
//! and propagation reasons, the dependency union of a root-level refutation, and the
//! full chronological decision log, which is what the backdoor extraction and
//! verification layers consume.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cnf::{Clause, Cnf, Lit, Var, VarSet};
use crate::lsr;
use crate::up::UpEngine;

pub type ClauseId = u32;

/// Luby sequence value at 1-based index `i`: 1, 1, 2, 1, 1, 2, 4, 1, ...
pub fn luby(i: u64) -> u64 {
    assert!(i >= 1, "luby index is 1-based");
    let mut x = i - 1;
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) / 2;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

#[derive(Clone, Debug, PartialEq)]
pub enum RestartPolicy {
    /// Restart every `base * luby(k)` conflicts, `k` counting restarts from 1.
    Luby { base: u64 },
    /// Restart after every conflict.
    Always,
    Never,
}

impl Default for RestartPolicy {
    fn default() -> RestartPolicy {
        RestartPolicy::Luby { base: 100 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeletionPolicy {
    Off,
    /// Keep at most `cap` learnt clauses (growing geometrically after each
    /// reduction); clause activities decay by `decay` per conflict.
    Activity { cap: usize, decay: f64 },
}

impl Default for DeletionPolicy {
    fn default() -> DeletionPolicy {
        DeletionPolicy::Activity { cap: 2000, decay: 0.999 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PolarityMode {
    /// Decide the last assigned polarity, initially false.
    #[default]
    Saved,
    /// Always decide the negative literal first.
    FalseFirst,
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub restart_policy: RestartPolicy,
    pub seed: u64,
    /// When set, decisions may only pick these variables; search can then end
    /// INCONCLUSIVE instead of SAT/UNSAT.
    pub allowed_decision_vars: Option<VarSet>,
    pub deletion: DeletionPolicy,
    pub polarity: PolarityMode,
    /// Stop with LIMIT once more than this many conflicts occur.
    pub conflict_limit: Option<u64>,
    /// Fraction of decisions taken uniformly at random from the unassigned vars.
    pub random_decision_frac: f64,
    /// Check every learnt clause for 1-provability and 1-empowerment at birth with the
    /// reference propagator, counting failures in the stats. Expensive; meant for tests.
    pub check_learnt_birth: bool,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig {
            restart_policy: RestartPolicy::default(),
            seed: 0,
            allowed_decision_vars: None,
            deletion: DeletionPolicy::default(),
            polarity: PolarityMode::default(),
            conflict_limit: None,
            random_decision_frac: 0.0,
            check_learnt_birth: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("luby restart base must be at least 1")]
    ZeroLubyBase,
    #[error("deletion cap must be at least 1 and decay within (0, 1]")]
    BadDeletion,
    #[error("random decision fraction {0} outside [0, 1]")]
    BadRandomFraction(f64),
    #[error("allowed decision variable {var} out of range for {num_vars} variables")]
    AllowedVarOutOfRange { var: Var, num_vars: usize },
    #[error("clause literal over variable {var} out of range for {num_vars} variables")]
    LitOutOfRange { var: Var, num_vars: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
    /// Restricted branching exhausted its allowed variables without settling the formula.
    Inconclusive,
    /// Conflict limit exhausted.
    Limit,
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub decisions: u64,
    pub propagations: u64,
    pub conflicts: u64,
    pub restarts: u64,
    pub learnt: u64,
    pub deleted: u64,
    pub birth_check_failures: u64,
    pub wall_time_s: f64,
}

impl Stats {
    pub fn as_map(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("decisions", self.decisions as f64),
            ("propagations", self.propagations as f64),
            ("conflicts", self.conflicts as f64),
            ("restarts", self.restarts as f64),
            ("learnt", self.learnt as f64),
            ("deleted", self.deleted as f64),
            ("birth_check_failures", self.birth_check_failures as f64),
            ("wall_time_s", self.wall_time_s),
        ]
    }
}

/// Archived learning event. Survives deletion of the clause it describes.
#[derive(Clone, Debug)]
pub struct LearntRecord {
    /// Birth index among learnt clauses, 0-based.
    pub id: u32,
    pub lits: Clause,
    /// Variables the derivation depended on, folded forward at learning time.
    pub dep_vars: VarSet,
    /// Value of the conflict counter when the clause was learnt.
    pub birth_conflict: u64,
    pub lbd: u32,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub num_vars: usize,
    /// Total assignment; SAT only.
    pub model: Option<Vec<bool>>,
    /// Decision literals of the final trail in trail order; SAT only.
    pub final_decisions: Vec<Lit>,
    /// Reason clause ids of the propagated final-trail literals in trail order; SAT only.
    pub final_prop_reasons: Vec<ClauseId>,
    /// Deduplicated record ids of the learnt clauses among `final_prop_reasons`.
    pub final_prop_dep_records: Vec<u32>,
    /// Dependency union over the learnt clauses in the final refutation; UNSAT only.
    pub final_conflict_deps: Option<VarSet>,
    /// Every decision the solver ever made, chronologically, across restarts.
    pub decision_log: Vec<Lit>,
    pub stats: Stats,
}

#[derive(Clone, Copy, Debug)]
struct Watcher {
    clause: ClauseId,
    blocker: Lit,
}

/// Result of an overlay unit-propagation probe.
#[derive(Clone, Debug)]
pub(crate) struct ProbeOutcome {
    pub conflict: bool,
    pub values: Vec<Option<bool>>,
}

#[derive(Clone, Debug)]
struct ClauseSlot {
    lits: Clause,
    learnt: bool,
    deleted: bool,
    activity: f64,
    record: Option<u32>,
}

/// Max-heap over variable activities with an index position table; ties break toward
/// the lower variable index.
#[derive(Clone, Debug, Default)]
struct VarOrder {
    heap: Vec<Var>,
    pos: Vec<i32>,
}

impl VarOrder {
    fn new(n: usize) -> VarOrder {
        VarOrder { heap: Vec::with_capacity(n), pos: vec![-1; n] }
    }

    fn better(a: Var, b: Var, act: &[f64]) -> bool {
        act[a as usize] > act[b as usize] || (act[a as usize] == act[b as usize] && a < b)
    }

    fn contains(&self, v: Var) -> bool {
        self.pos[v as usize] >= 0
    }

    fn percolate_up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) >> 1;
            if Self::better(v, self.heap[parent], act) {
                self.heap[i] = self.heap[parent];
                self.pos[self.heap[i] as usize] = i as i32;
                i = parent;
            } else {
                break;
            }
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn percolate_down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let left = 2 * i + 1;
            if left >= self.heap.len() {
                break;
            }
            let right = left + 1;
            let child = if right < self.heap.len()
                && Self::better(self.heap[right], self.heap[left], act)
            {
                right
            } else {
                left
            };
            if Self::better(self.heap[child], v, act) {
                self.heap[i] = self.heap[child];
                self.pos[self.heap[i] as usize] = i as i32;
                i = child;
            } else {
                break;
            }
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn insert(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        self.percolate_up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: Var, act: &[f64]) {
        if self.contains(v) {
            self.percolate_up(self.pos[v as usize] as usize, act);
        }
    }

    fn pop_max(&mut self, act: &[f64]) -> Option<Var> {
        let top = *self.heap.first()?;
        self.pos[top as usize] = -1;
        let last = self.heap.pop().expect("heap nonempty");
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.percolate_down(0, act);
        }
        Some(top)
    }

    fn clear(&mut self) {
        self.heap.clear();
        self.pos.iter_mut().for_each(|p| *p = -1);
    }

    fn peek_slice(&self) -> &[Var] {
        &self.heap
    }
}

pub struct Solver {
    cfg: SolverConfig,
    num_vars: usize,
    clauses: Vec<ClauseSlot>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<Option<bool>>,
    phase: Vec<bool>,
    level: Vec<u32>,
    reason: Vec<Option<ClauseId>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    learnt_cap: f64,
    live_learnts: usize,
    order: VarOrder,
    allowed: Option<Vec<bool>>,
    rng: ChaCha8Rng,
    records: Vec<LearntRecord>,
    stats: Stats,
    decision_log: Vec<Lit>,
    hints: Vec<Lit>,
    hint_cursor: usize,
    root_unsat: bool,
    root_conflict_deps: VarSet,
    seen: Vec<bool>,
    root_seen: Vec<bool>,
    root_seen_clear: Vec<Var>,
}

const VAR_DECAY: f64 = 0.95;
const CAP_GROWTH: f64 = 1.1;

impl Solver {
    pub fn new(f: &Cnf, cfg: SolverConfig) -> Result<Solver, ConfigError> {
        if let RestartPolicy::Luby { base } = cfg.restart_policy {
            if base == 0 {
                return Err(ConfigError::ZeroLubyBase);
            }
        }
        if let DeletionPolicy::Activity { cap, decay } = cfg.deletion {
            if cap == 0 || !(decay > 0.0 && decay <= 1.0) {
                return Err(ConfigError::BadDeletion);
            }
        }
        if !(0.0..=1.0).contains(&cfg.random_decision_frac) {
            return Err(ConfigError::BadRandomFraction(cfg.random_decision_frac));
        }
        let n = f.num_vars;
        if let Some(allowed) = &cfg.allowed_decision_vars {
            if let Some(v) = allowed.iter().find(|&v| v as usize >= n) {
                return Err(ConfigError::AllowedVarOutOfRange { var: v, num_vars: n });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let activity: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 1e-5).collect();
        let allowed = cfg
            .allowed_decision_vars
            .as_ref()
            .map(|set| {
                let mut mask = vec![false; n];
                set.iter().for_each(|v| mask[v as usize] = true);
                mask
            });
        let learnt_cap = match cfg.deletion {
            DeletionPolicy::Activity { cap, .. } => cap as f64,
            DeletionPolicy::Off => f64::INFINITY,
        };
        let mut s = Solver {
            cfg,
            num_vars: n,
            clauses: Vec::with_capacity(f.clauses.len()),
            watches: vec![Vec::new(); 2 * n],
            assigns: vec![None; n],
            phase: vec![false; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::with_capacity(n),
            trail_lim: Vec::new(),
            qhead: 0,
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            learnt_cap,
            live_learnts: 0,
            order: VarOrder::new(n),
            allowed,
            rng,
            records: Vec::new(),
            stats: Stats::default(),
            decision_log: Vec::new(),
            hints: Vec::new(),
            hint_cursor: 0,
            root_unsat: false,
            root_conflict_deps: VarSet::new(),
            seen: vec![false; n],
            root_seen: vec![false; n],
            root_seen_clear: Vec::new(),
        };
        for v in 0..n as Var {
            if s.var_decidable(v) {
                s.order.insert(v, &s.activity);
            }
        }
        for clause in &f.clauses {
            s.add_original_clause(clause)?;
        }
        Ok(s)
    }

    fn var_decidable(&self, v: Var) -> bool {
        self.allowed.as_ref().map_or(true, |mask| mask[v as usize])
    }

    fn add_original_clause(&mut self, lits: &[Lit]) -> Result<(), ConfigError> {
        if let Some(l) = lits.iter().find(|l| l.var() as usize >= self.num_vars) {
            return Err(ConfigError::LitOutOfRange { var: l.var(), num_vars: self.num_vars });
        }
        let mut clause: Clause = Vec::with_capacity(lits.len());
        for &l in lits {
            if clause.contains(&!l) {
                return Ok(());
            }
            if !clause.contains(&l) {
                clause.push(l);
            }
        }
        if self.root_unsat {
            return Ok(());
        }
        match clause.len() {
            0 => {
                self.root_unsat = true;
            }
            1 => {
                let l = clause[0];
                let cid = self.push_slot(clause, false, None);
                match self.value(l) {
                    Some(false) => {
                        self.stats.conflicts += 1;
                        self.finalize_root_conflict(cid);
                    }
                    Some(true) => {}
                    None => self.assign(l, Some(cid)),
                }
            }
            _ => {
                let cid = self.push_slot(clause, false, None);
                self.attach(cid);
            }
        }
        Ok(())
    }

    fn push_slot(&mut self, lits: Clause, learnt: bool, record: Option<u32>) -> ClauseId {
        let id = self.clauses.len() as ClauseId;
        self.clauses.push(ClauseSlot { lits, learnt, deleted: false, activity: 0.0, record });
        if learnt {
            self.live_learnts += 1;
        }
        id
    }

    fn attach(&mut self, cid: ClauseId) {
        let (w0, w1) = {
            let c = &self.clauses[cid as usize].lits;
            debug_assert!(c.len() >= 2);
            (c[0], c[1])
        };
        self.watches[(!w0).code()].push(Watcher { clause: cid, blocker: w1 });
        self.watches[(!w1).code()].push(Watcher { clause: cid, blocker: w0 });
    }

    fn detach(&mut self, cid: ClauseId) {
        let (w0, w1) = {
            let c = &self.clauses[cid as usize].lits;
            (c[0], c[1])
        };
        for w in [w0, w1] {
            let list = &mut self.watches[(!w).code()];
            let at = list.iter().position(|x| x.clause == cid).expect("watcher present");
            list.swap_remove(at);
        }
    }

    pub fn value(&self, l: Lit) -> Option<bool> {
        self.assigns[l.var() as usize].map(|b| b == l.is_pos())
    }

    pub fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn records(&self) -> &[LearntRecord] {
        &self.records
    }

    pub fn decision_log(&self) -> &[Lit] {
        &self.decision_log
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn is_root_unsat(&self) -> bool {
        self.root_unsat
    }

    /// Live clauses as `(literals, learnt)`, order-stable across calls.
    pub fn live_clauses(&self) -> impl Iterator<Item = (&[Lit], bool)> {
        self.clauses
            .iter()
            .filter(|c| !c.deleted)
            .map(|c| (c.lits.as_slice(), c.learnt))
    }

    /// Replaces the restricted-branching filter and rebuilds the decision order.
    pub fn set_decision_filter(&mut self, allowed: Option<VarSet>) {
        self.allowed = allowed.map(|set| {
            let mut mask = vec![false; self.num_vars];
            set.iter().for_each(|v| mask[v as usize] = true);
            mask
        });
        self.cfg.allowed_decision_vars = None;
        self.order.clear();
        for v in 0..self.num_vars as Var {
            if self.var_decidable(v) && self.assigns[v as usize].is_none() {
                self.order.insert(v, &self.activity);
            }
        }
    }

    /// Queues decision literals to try, in order, before the activity heuristic.
    /// Hints over assigned or non-decidable variables are skipped when reached.
    pub fn set_decision_hints(&mut self, hints: Vec<Lit>) {
        self.hints = hints;
        self.hint_cursor = 0;
    }

    /// Order-insensitive digest of the search state, for restoration checks.
    pub fn state_fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        self.trail.iter().for_each(|l| l.code().hash(&mut h));
        self.trail_lim.hash(&mut h);
        self.qhead.hash(&mut h);
        for v in 0..self.num_vars {
            self.assigns[v].hash(&mut h);
            self.phase[v].hash(&mut h);
            self.activity[v].to_bits().hash(&mut h);
        }
        self.var_inc.to_bits().hash(&mut h);
        self.cla_inc.to_bits().hash(&mut h);
        for list in &self.watches {
            list.len().hash(&mut h);
            list.iter().for_each(|w| (w.clause, w.blocker.code()).hash(&mut h));
        }
        self.clauses.len().hash(&mut h);
        self.records.len().hash(&mut h);
        self.order.peek_slice().hash(&mut h);
        h.finish()
    }

    fn assign(&mut self, l: Lit, reason: Option<ClauseId>) {
        debug_assert!(self.value(l).is_none());
        let v = l.var() as usize;
        self.assigns[v] = Some(l.is_pos());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    pub(crate) fn push_level(&mut self) {
        self.trail_lim.push(self.trail.len());
    }

    /// Makes `l` a decision at a fresh level.
    pub(crate) fn decide(&mut self, l: Lit) {
        debug_assert!(self.value(l).is_none());
        self.push_level();
        self.assign(l, None);
        self.stats.decisions += 1;
        self.decision_log.push(l);
    }

    pub(crate) fn cancel_until(&mut self, target: u32) {
        if self.decision_level() <= target {
            return;
        }
        let keep = self.trail_lim[target as usize];
        for i in (keep..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var() as usize;
            self.phase[v] = l.is_pos();
            self.assigns[v] = None;
            self.reason[v] = None;
            if self.var_decidable(l.var()) {
                self.order.insert(l.var(), &self.activity);
            }
        }
        self.trail.truncate(keep);
        self.trail_lim.truncate(target as usize);
        self.qhead = keep;
    }

    pub(crate) fn restart(&mut self) {
        self.cancel_until(0);
        self.stats.restarts += 1;
    }

    /// Propagates to fixpoint; returns the falsified clause on conflict.
    pub(crate) fn propagate(&mut self) -> Option<ClauseId> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let mut i = 0;
            let mut j = 0;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut conflict = None;
            'watchers: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == Some(true) {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cid = w.clause;
                let false_lit = !p;
                {
                    let lits = &mut self.clauses[cid as usize].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                    debug_assert_eq!(lits[1], false_lit);
                }
                let first = self.clauses[cid as usize].lits[0];
                if first != w.blocker && self.value(first) == Some(true) {
                    ws[j] = Watcher { clause: cid, blocker: first };
                    j += 1;
                    continue;
                }
                let other = (2..self.clauses[cid as usize].lits.len()).find(|&k| {
                    self.value(self.clauses[cid as usize].lits[k]) != Some(false)
                });
                if let Some(k) = other {
                    self.clauses[cid as usize].lits.swap(1, k);
                    let new_watch = self.clauses[cid as usize].lits[1];
                    self.watches[(!new_watch).code()].push(Watcher { clause: cid, blocker: first });
                    continue 'watchers;
                }
                ws[j] = w;
                j += 1;
                if self.value(first) == Some(false) {
                    conflict = Some(cid);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.stats.propagations += 1;
                    self.assign(first, Some(cid));
                }
            }
            ws.truncate(j);
            debug_assert!(self.watches[p.code()].is_empty());
            self.watches[p.code()] = ws;
            if conflict.is_some() {
                return conflict;
            }
        }
        #[cfg(debug_assertions)]
        self.check_reason_soundness();
        None
    }

    #[cfg(debug_assertions)]
    fn check_reason_soundness(&self) {
        let mut pos = vec![usize::MAX; self.num_vars];
        for (i, l) in self.trail.iter().enumerate() {
            pos[l.var() as usize] = i;
        }
        for (i, &l) in self.trail.iter().enumerate() {
            let Some(cid) = self.reason[l.var() as usize] else { continue };
            let lits = &self.clauses[cid as usize].lits;
            assert_eq!(lits[0], l, "reason clause leads with its propagated literal");
            for &other in &lits[1..] {
                assert_eq!(self.value(other), Some(false), "reason side literal is false");
                assert!(pos[other.var() as usize] < i, "reason precedes its consequence");
            }
        }
    }

    fn bump_var(&mut self, v: Var) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.order.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cid: ClauseId) {
        let slot = &mut self.clauses[cid as usize];
        if !slot.learnt {
            return;
        }
        slot.activity += self.cla_inc;
        if slot.activity > 1e20 {
            for c in &mut self.clauses {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn decay_activities(&mut self) {
        self.var_inc /= VAR_DECAY;
        if let DeletionPolicy::Activity { decay, .. } = self.cfg.deletion {
            self.cla_inc /= decay;
        }
    }

    /// Collects the record ids of learnt clauses in the root-level reason chain of `v`,
    /// transitively, deduplicating through `root_seen`.
    fn collect_root_ancestors(&mut self, v: Var, out: &mut Vec<u32>) {
        debug_assert_eq!(self.level[v as usize], 0);
        if self.root_seen[v as usize] {
            return;
        }
        self.root_seen[v as usize] = true;
        self.root_seen_clear.push(v);
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            let Some(cid) = self.reason[u as usize] else {
                debug_assert!(false, "root-level assignment without a reason");
                continue;
            };
            if let Some(rid) = self.clauses[cid as usize].record {
                out.push(rid);
            }
            for k in 0..self.clauses[cid as usize].lits.len() {
                let w = self.clauses[cid as usize].lits[k].var();
                if w != u && !self.root_seen[w as usize] {
                    self.root_seen[w as usize] = true;
                    self.root_seen_clear.push(w);
                    stack.push(w);
                }
            }
        }
    }

    fn clear_root_seen(&mut self) {
        for v in self.root_seen_clear.drain(..) {
            self.root_seen[v as usize] = false;
        }
    }

    /// First-UIP conflict analysis with recursive minimization. Returns the learnt
    /// clause (asserting literal first), the backjump level, and the dependency set
    /// folded from the conflict side, the minimizer, and root-level reason chains.
    fn analyze(&mut self, confl: ClauseId) -> (Clause, u32, VarSet) {
        let current = self.decision_level();
        let mut learnt: Clause = vec![Lit::new(0, true)];
        let mut side_records: Vec<u32> = Vec::new();
        let mut path = 0u32;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let mut to_clear: Vec<Var> = Vec::new();
        let mut cid = confl;
        loop {
            self.bump_clause(cid);
            if let Some(rid) = self.clauses[cid as usize].record {
                side_records.push(rid);
            }
            let start = if p.is_none() { 0 } else { 1 };
            for k in start..self.clauses[cid as usize].lits.len() {
                let q = self.clauses[cid as usize].lits[k];
                let v = q.var();
                debug_assert_eq!(self.value(q), Some(false));
                if self.level[v as usize] == 0 {
                    self.collect_root_ancestors(v, &mut side_records);
                    continue;
                }
                if !self.seen[v as usize] {
                    self.seen[v as usize] = true;
                    to_clear.push(v);
                    self.bump_var(v);
                    if self.level[v as usize] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[idx];
            self.seen[pl.var() as usize] = false;
            path -= 1;
            p = Some(pl);
            if path == 0 {
                break;
            }
            cid = self.reason[pl.var() as usize].expect("resolved literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis resolved a UIP");

        self.minimize(&mut learnt, &mut to_clear, &mut side_records);

        let backjump = if learnt.len() == 1 {
            0
        } else {
            let mut at = 1;
            for k in 2..learnt.len() {
                if self.level[learnt[k].var() as usize] > self.level[learnt[at].var() as usize] {
                    at = k;
                }
            }
            learnt.swap(1, at);
            self.level[learnt[1].var() as usize]
        };

        let dep = lsr::compute_dep_set(&learnt, &side_records, &[], &self.records);
        for v in to_clear {
            self.seen[v as usize] = false;
        }
        self.clear_root_seen();
        (learnt, backjump, dep)
    }

    /// Recursive (reason-chain) minimization. Every reason clause consulted is reported
    /// into `consulted` so the dependency set covers minimized-away derivations.
    fn minimize(&mut self, learnt: &mut Clause, to_clear: &mut Vec<Var>, consulted: &mut Vec<u32>) {
        let abstract_levels = learnt[1..]
            .iter()
            .fold(0u32, |acc, l| acc | 1 << (self.level[l.var() as usize] & 31));
        let mut keep = vec![learnt[0]];
        for k in 1..learnt.len() {
            let l = learnt[k];
            if self.reason[l.var() as usize].is_none()
                || !self.lit_redundant(l, abstract_levels, to_clear, consulted)
            {
                keep.push(l);
            }
        }
        *learnt = keep;
    }

    fn lit_redundant(
        &mut self,
        l: Lit,
        abstract_levels: u32,
        to_clear: &mut Vec<Var>,
        consulted: &mut Vec<u32>,
    ) -> bool {
        let mut stack = vec![l];
        let undo_from = to_clear.len();
        while let Some(q) = stack.pop() {
            let cid = self.reason[q.var() as usize].expect("redundancy walk stays on propagations");
            if let Some(rid) = self.clauses[cid as usize].record {
                consulted.push(rid);
            }
            for k in 1..self.clauses[cid as usize].lits.len() {
                let r = self.clauses[cid as usize].lits[k];
                let v = r.var();
                if self.level[v as usize] == 0 {
                    self.collect_root_ancestors(v, consulted);
                    continue;
                }
                if self.seen[v as usize] {
                    continue;
                }
                if self.reason[v as usize].is_some()
                    && (1u32 << (self.level[v as usize] & 31)) & abstract_levels != 0
                {
                    self.seen[v as usize] = true;
                    to_clear.push(v);
                    stack.push(r);
                } else {
                    for &u in &to_clear[undo_from..] {
                        self.seen[u as usize] = false;
                    }
                    to_clear.truncate(undo_from);
                    return false;
                }
            }
        }
        true
    }

    fn lbd(&self, lits: &[Lit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|l| self.level[l.var() as usize]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    /// Checks the learnt clause against the reference propagator before it joins the db.
    fn birth_check(&mut self, learnt: &[Lit]) {
        let up = UpEngine::new(self.num_vars, self.live_clauses().map(|(c, _)| c.to_vec()));
        let negated: Vec<Lit> = learnt.iter().map(|&l| !l).collect();
        let provable = up.closure(&negated).conflict;
        let empowering = learnt.iter().any(|&l| {
            let others: Vec<Lit> = learnt.iter().filter(|&&m| m != l).map(|&m| !m).collect();
            let res = up.closure(&others);
            !res.conflict && res.assigns[l.var() as usize].map(|b| b == l.is_pos()) != Some(true)
        });
        if !(provable && empowering) {
            self.stats.birth_check_failures += 1;
        }
    }

    /// Learns from a conflict at a positive decision level: analyze, record the
    /// dependency set, backjump, attach, assert.
    pub(crate) fn learn_from(&mut self, confl: ClauseId) {
        debug_assert!(self.decision_level() > 0);
        let (learnt, backjump, dep) = self.analyze(confl);
        if self.cfg.check_learnt_birth {
            self.birth_check(&learnt);
        }
        let lbd = self.lbd(&learnt);
        let rid = self.records.len() as u32;
        self.records.push(LearntRecord {
            id: rid,
            lits: learnt.clone(),
            dep_vars: dep,
            birth_conflict: self.stats.conflicts,
            lbd,
        });
        self.stats.learnt += 1;
        self.cancel_until(backjump);
        let assert_lit = learnt[0];
        let cid = self.push_slot(learnt, true, Some(rid));
        if self.clauses[cid as usize].lits.len() >= 2 {
            self.attach(cid);
        }
        self.bump_clause(cid);
        self.assign(assert_lit, Some(cid));
        self.decay_activities();
    }

    /// Derives the dependency union of a refutation discovered at level 0.
    fn finalize_root_conflict(&mut self, confl: ClauseId) {
        debug_assert_eq!(self.decision_level(), 0);
        self.root_unsat = true;
        let mut involved: Vec<u32> = Vec::new();
        if let Some(rid) = self.clauses[confl as usize].record {
            involved.push(rid);
        }
        for k in 0..self.clauses[confl as usize].lits.len() {
            let v = self.clauses[confl as usize].lits[k].var();
            self.collect_root_ancestors(v, &mut involved);
        }
        self.clear_root_seen();
        involved.sort_unstable();
        involved.dedup();
        let mut deps = VarSet::new();
        for rid in involved {
            deps = deps.union(&self.records[rid as usize].dep_vars);
        }
        self.root_conflict_deps = deps;
    }

    /// Handles a detected conflict wherever it occurred. Returns true when the formula
    /// is refuted at the root.
    pub(crate) fn resolve_conflict(&mut self, confl: ClauseId) -> bool {
        self.stats.conflicts += 1;
        if self.decision_level() == 0 {
            self.finalize_root_conflict(confl);
            return true;
        }
        self.learn_from(confl);
        false
    }

    /// Propagates at the root, finalizing the refutation on conflict. Returns true when
    /// the solver became (or already was) root-unsat.
    pub(crate) fn propagate_root(&mut self) -> bool {
        debug_assert_eq!(self.decision_level(), 0);
        if self.root_unsat {
            return true;
        }
        if let Some(confl) = self.propagate() {
            self.stats.conflicts += 1;
            self.finalize_root_conflict(confl);
            return true;
        }
        false
    }

    /// Unit-propagation closure of the current assignment extended by `assumptions`,
    /// computed on an overlay without touching the search state. Conflicting
    /// assumptions or a falsified live clause set the conflict flag.
    pub(crate) fn probe_closure(&self, assumptions: &[Lit]) -> ProbeOutcome {
        let mut values = self.assigns.clone();
        for &l in assumptions {
            let v = l.var() as usize;
            match values[v] {
                Some(b) if b != l.is_pos() => {
                    return ProbeOutcome { conflict: true, values };
                }
                _ => values[v] = Some(l.is_pos()),
            }
        }
        loop {
            let mut changed = false;
            for slot in self.clauses.iter().filter(|c| !c.deleted) {
                let mut unassigned = None;
                let mut satisfied = false;
                let mut free = 0;
                for &l in &slot.lits {
                    match values[l.var() as usize] {
                        Some(b) if b == l.is_pos() => {
                            satisfied = true;
                            break;
                        }
                        Some(_) => {}
                        None => {
                            free += 1;
                            unassigned = Some(l);
                        }
                    }
                }
                if satisfied {
                    continue;
                }
                match free {
                    0 => return ProbeOutcome { conflict: true, values },
                    1 => {
                        let l = unassigned.expect("single free literal");
                        values[l.var() as usize] = Some(l.is_pos());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                return ProbeOutcome { conflict: false, values };
            }
        }
    }

    fn maybe_reduce(&mut self) {
        let DeletionPolicy::Activity { .. } = self.cfg.deletion else { return };
        if (self.live_learnts as f64) <= self.learnt_cap {
            return;
        }
        let mut candidates: Vec<ClauseId> = (0..self.clauses.len() as ClauseId)
            .filter(|&cid| {
                let c = &self.clauses[cid as usize];
                c.learnt && !c.deleted && c.lits.len() > 2 && !self.is_locked(cid)
            })
            .collect();
        candidates.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            ca.activity.partial_cmp(&cb.activity).expect("activities are finite").then(a.cmp(&b))
        });
        for &cid in candidates.iter().take(candidates.len() / 2) {
            self.delete_clause(cid);
        }
        self.learnt_cap *= CAP_GROWTH;
    }

    fn is_locked(&self, cid: ClauseId) -> bool {
        let first = self.clauses[cid as usize].lits[0];
        self.value(first) == Some(true) && self.reason[first.var() as usize] == Some(cid)
    }

    fn delete_clause(&mut self, cid: ClauseId) {
        debug_assert!(!self.is_locked(cid));
        self.detach(cid);
        let slot = &mut self.clauses[cid as usize];
        slot.deleted = true;
        self.live_learnts -= 1;
        self.stats.deleted += 1;
    }

    fn next_hint(&mut self) -> Option<Lit> {
        while self.hint_cursor < self.hints.len() {
            let h = self.hints[self.hint_cursor];
            self.hint_cursor += 1;
            if self.value(h).is_none() && self.var_decidable(h.var()) {
                return Some(h);
            }
        }
        None
    }

    fn pick_branch_lit(&mut self) -> Option<Lit> {
        if let Some(h) = self.next_hint() {
            return Some(h);
        }
        if self.cfg.random_decision_frac > 0.0
            && self.rng.gen::<f64>() < self.cfg.random_decision_frac
            && !self.order.peek_slice().is_empty()
        {
            for _ in 0..10 {
                let at = self.rng.gen_range(0..self.order.peek_slice().len());
                let v = self.order.peek_slice()[at];
                if self.assigns[v as usize].is_none() {
                    return Some(self.decision_polarity(v));
                }
            }
        }
        while let Some(v) = self.order.pop_max(&self.activity) {
            if self.assigns[v as usize].is_none() {
                return Some(self.decision_polarity(v));
            }
        }
        None
    }

    fn decision_polarity(&self, v: Var) -> Lit {
        match self.cfg.polarity {
            PolarityMode::Saved => Lit::new(v, self.phase[v as usize]),
            PolarityMode::FalseFirst => Lit::new(v, false),
        }
    }

    /// All original clauses have a literal satisfied by the current assignment.
    fn originals_satisfied(&self) -> bool {
        self.clauses
            .iter()
            .filter(|c| !c.learnt && !c.deleted)
            .all(|c| c.lits.iter().any(|&l| self.value(l) == Some(true)))
    }

    fn completed_model(&self) -> Vec<bool> {
        (0..self.num_vars)
            .map(|v| self.assigns[v].unwrap_or(self.phase[v]))
            .collect()
    }

    fn sat_outcome(&mut self, started: Instant) -> SolveOutcome {
        let mut final_decisions = Vec::new();
        let mut final_prop_reasons = Vec::new();
        let mut final_prop_dep_records = Vec::new();
        for &l in &self.trail {
            match self.reason[l.var() as usize] {
                None => final_decisions.push(l),
                Some(cid) => {
                    final_prop_reasons.push(cid);
                    if let Some(rid) = self.clauses[cid as usize].record {
                        final_prop_dep_records.push(rid);
                    }
                }
            }
        }
        final_prop_dep_records.sort_unstable();
        final_prop_dep_records.dedup();
        self.stats.wall_time_s += started.elapsed().as_secs_f64();
        SolveOutcome {
            status: SolveStatus::Sat,
            num_vars: self.num_vars,
            model: Some(self.completed_model()),
            final_decisions,
            final_prop_reasons,
            final_prop_dep_records,
            final_conflict_deps: None,
            decision_log: self.decision_log.clone(),
            stats: self.stats.clone(),
        }
    }

    fn bare_outcome(&mut self, status: SolveStatus, started: Instant) -> SolveOutcome {
        self.stats.wall_time_s += started.elapsed().as_secs_f64();
        SolveOutcome {
            status,
            num_vars: self.num_vars,
            model: None,
            final_decisions: Vec::new(),
            final_prop_reasons: Vec::new(),
            final_prop_dep_records: Vec::new(),
            final_conflict_deps: match status {
                SolveStatus::Unsat => Some(self.root_conflict_deps.clone()),
                _ => None,
            },
            decision_log: self.decision_log.clone(),
            stats: self.stats.clone(),
        }
    }

    /// Runs the search from the current state to a terminal status. Restartable: manual
    /// driving (decisions, absorbed clauses) composes with a later `solve` call.
    pub fn solve(&mut self) -> SolveOutcome {
        let started = Instant::now();
        if self.root_unsat {
            return self.bare_outcome(SolveStatus::Unsat, started);
        }
        let mut luby_index = 1u64;
        let mut conflicts_since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts_since_restart += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.finalize_root_conflict(confl);
                    return self.bare_outcome(SolveStatus::Unsat, started);
                }
                if let Some(limit) = self.cfg.conflict_limit {
                    if self.stats.conflicts > limit {
                        self.cancel_until(0);
                        return self.bare_outcome(SolveStatus::Limit, started);
                    }
                }
                self.learn_from(confl);
                self.maybe_reduce();
                match self.cfg.restart_policy {
                    RestartPolicy::Always => {
                        self.restart();
                        conflicts_since_restart = 0;
                    }
                    RestartPolicy::Luby { base } => {
                        if conflicts_since_restart >= base * luby(luby_index) {
                            luby_index += 1;
                            self.restart();
                            conflicts_since_restart = 0;
                        }
                    }
                    RestartPolicy::Never => {}
                }
            } else {
                match self.pick_branch_lit() {
                    Some(l) => self.decide(l),
                    None => {
                        if self.allowed.is_none() {
                            debug_assert!(self.assigns.iter().all(|a| a.is_some()));
                            debug_assert!(self.originals_satisfied());
                            return self.sat_outcome(started);
                        }
                        if self.originals_satisfied() {
                            return self.sat_outcome(started);
                        }
                        return self.bare_outcome(SolveStatus::Inconclusive, started);
                    }
                }
            }
        }
    }
}

/// Builds a solver and runs it to a terminal status.
pub fn solve(f: &Cnf, cfg: SolverConfig) -> Result<(SolveOutcome, Vec<LearntRecord>), ConfigError> {
    let mut s = Solver::new(f, cfg)?;
    let outcome = s.solve();
    Ok((outcome, s.records().to_vec()))
}
