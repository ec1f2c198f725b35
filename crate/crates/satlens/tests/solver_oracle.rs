mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use satlens::cdcl::{solve, RestartPolicy, SolveStatus, SolverConfig};
use satlens::cnf::{Cnf, Lit};
use satlens::harness::random_3cnf;

fn policies() -> [RestartPolicy; 3] {
    [RestartPolicy::Luby { base: 100 }, RestartPolicy::Always, RestartPolicy::Never]
}

fn arbitrary_cnf() -> impl Strategy<Value = Cnf> {
    (3usize..=10, 0usize..=50, any::<u64>()).prop_map(|(nv, nc, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_3cnf(nv, nc, &mut rng)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn status_matches_enumeration_under_every_policy(f in arbitrary_cnf(), seed in any::<u64>()) {
        let expect = common::enumerate_sat(&f);
        for policy in policies() {
            let cfg = SolverConfig { restart_policy: policy, seed, ..SolverConfig::default() };
            let (out, _) = solve(&f, cfg).unwrap();
            let got = match out.status {
                SolveStatus::Sat => true,
                SolveStatus::Unsat => false,
                s => panic!("unlimited solve ended {s:?}"),
            };
            prop_assert_eq!(got, expect);
        }
    }

    #[test]
    fn reported_models_satisfy_the_formula(f in arbitrary_cnf(), seed in any::<u64>()) {
        let (out, _) = solve(&f, SolverConfig { seed, ..SolverConfig::default() }).unwrap();
        if out.status == SolveStatus::Sat {
            let model = out.model.as_ref().expect("SAT outcome carries a model");
            prop_assert!(common::model_satisfies(&f, model));
        } else {
            prop_assert!(out.model.is_none());
        }
    }

    #[test]
    fn same_seed_gives_identical_runs(f in arbitrary_cnf(), seed in any::<u64>()) {
        let cfg = SolverConfig { seed, ..SolverConfig::default() };
        let (a, ra) = solve(&f, cfg.clone()).unwrap();
        let (b, rb) = solve(&f, cfg).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(&a.decision_log, &b.decision_log);
        prop_assert_eq!(a.stats.conflicts, b.stats.conflicts);
        prop_assert_eq!(ra.len(), rb.len());
        for (x, y) in ra.iter().zip(&rb) {
            prop_assert_eq!(&x.lits, &y.lits);
            prop_assert_eq!(x.dep_vars.as_slice(), y.dep_vars.as_slice());
        }
    }

    #[test]
    fn conflict_limit_never_misreports(f in arbitrary_cnf(), seed in any::<u64>(), limit in 0u64..=20) {
        let cfg = SolverConfig {
            seed,
            conflict_limit: Some(limit),
            ..SolverConfig::default()
        };
        let (out, _) = solve(&f, cfg).unwrap();
        match out.status {
            SolveStatus::Sat => prop_assert!(common::enumerate_sat(&f)),
            SolveStatus::Unsat => prop_assert!(!common::enumerate_sat(&f)),
            SolveStatus::Limit => {}
            SolveStatus::Inconclusive => prop_assert!(false, "no decision filter was set"),
        }
    }
}

#[test]
fn fixed_corpus_spot_check_against_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(417);
    for _ in 0..50 {
        let f = common::random_corpus_instance(&mut rng);
        let (out, _) = solve(&f, SolverConfig::default()).unwrap();
        assert_eq!(out.status == SolveStatus::Sat, common::enumerate_sat(&f));
    }
}

#[test]
fn restricted_branching_cannot_claim_sat_outside_its_vars() {
    // x3 is forced by x1,x2 only through the last clause; deciding {x1,x2} alone
    // either settles the formula by propagation or must stop INCONCLUSIVE.
    let mut f = Cnf::new(4);
    f.add_clause([Lit::new(0, true), Lit::new(1, true)]);
    f.add_clause([Lit::new(2, true), Lit::new(3, true)]);
    let cfg = SolverConfig {
        allowed_decision_vars: Some(vec![0, 1].into_iter().collect()),
        ..SolverConfig::default()
    };
    let (out, _) = solve(&f, cfg).unwrap();
    assert_eq!(out.status, SolveStatus::Inconclusive);
}
