mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satlens::cnf::{parse_dimacs, Cnf};
use satlens::harness::random_3cnf;
use satlens::structure::{
    backbone, build_vig, louvain, modularity, treewidth_ub, weak_backdoor, Partition,
    StructError,
};
use satlens::up::UpEngine;

fn small_cnf() -> impl Strategy<Value = Cnf> {
    (3usize..=10, 1usize..=30, any::<u64>()).prop_map(|(nv, nc, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_3cnf(nv, nc, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn backbone_matches_model_enumeration(f in small_cnf()) {
        let models = common::all_models(&f);
        match backbone(&f, None) {
            Ok(res) => {
                prop_assert!(!models.is_empty());
                prop_assert!(res.complete);
                let mut expect = common::backbone_from_models(&models);
                expect.sort_by_key(|l| l.code());
                let mut got = res.literals.clone();
                got.sort_by_key(|l| l.code());
                prop_assert_eq!(got, expect);
            }
            Err(StructError::Unsat) => prop_assert!(models.is_empty()),
        }
    }

    #[test]
    fn weak_backdoor_witness_closes_the_formula_under_up(f in small_cnf(), seed in any::<u64>()) {
        prop_assume!(common::enumerate_sat(&f));
        let res = weak_backdoor(&f, 10_000, seed).unwrap();
        let mut vars: Vec<u32> = res.witness.iter().map(|l| l.var()).collect();
        vars.sort_unstable();
        prop_assert_eq!(vars.as_slice(), res.backdoor.as_slice());
        let engine = UpEngine::new(f.num_vars, f.clauses.iter().cloned());
        let out = engine.closure(&res.witness);
        prop_assert!(!out.conflict && out.all_satisfied);
    }

    #[test]
    fn vig_total_weight_matches_the_closed_form(f in small_cnf()) {
        let g = build_vig(&f);
        let expect: f64 = f
            .clauses
            .iter()
            .map(|c| {
                let mut vs: Vec<u32> = c.iter().map(|l| l.var()).collect();
                vs.sort_unstable();
                vs.dedup();
                if vs.len() >= 2 { vs.len() as f64 / 2.0 } else { 0.0 }
            })
            .sum();
        prop_assert!((g.total_weight() - expect).abs() < 1e-9);
        for v in 0..f.num_vars as u32 {
            for &(u, w) in g.neighbors(v) {
                prop_assert!(w > 0.0);
                prop_assert!((g.edge_weight(v, u).unwrap() - w).abs() < 1e-12);
                prop_assert!((g.edge_weight(u, v).unwrap() - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn louvain_reports_its_own_partition_quality(f in small_cnf(), seed in any::<u64>()) {
        let g = build_vig(&f);
        let (p, q) = louvain(&g, seed);
        let recomputed = modularity(&g, &p);
        prop_assert!((q.q - recomputed.q).abs() < 1e-9);
        let baseline = modularity(&g, &Partition::singletons(g.num_nodes()));
        prop_assert!(q.q >= baseline.q - 1e-12);
    }

    #[test]
    fn elimination_width_stays_within_graph_bounds(f in small_cnf()) {
        let w = treewidth_ub(&f);
        prop_assert!(w < f.num_vars.max(1));
    }
}

#[test]
fn elimination_width_is_exact_on_cliques_and_trees() {
    for k in 2..=6usize {
        let mut f = Cnf::new(k);
        f.add_clause((0..k as u32).map(|v| satlens::cnf::Lit::new(v, true)));
        assert_eq!(treewidth_ub(&f), k - 1);
    }
    let star = parse_dimacs("p cnf 5 4\n1 2 0\n1 3 0\n1 4 0\n1 5 0\n").unwrap().cnf;
    assert_eq!(treewidth_ub(&star), 1);
}

#[test]
fn budget_zero_flags_partial_backbones() {
    let f = parse_dimacs("p cnf 3 4\n1 2 3 0\n1 2 -3 0\n1 -2 3 0\n1 -2 -3 0\n")
        .unwrap()
        .cnf;
    let res = backbone(&f, Some(0)).unwrap();
    assert!(!res.complete);
}
