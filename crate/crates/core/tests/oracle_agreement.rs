use ffactor_core::blowup::{lift_factor, project_factor, BlowupGraph};
use ffactor_core::graph::{Edge, FFactor, OrigGraph};
use ffactor_core::oracle::{brute_force_optimum, enumerate_all, gen_instance, verify_solution, GenParams, OracleLimits};
use ffactor_core::scaling::{solve, SolveConfig};
use ffactor_core::search::Tracer;
use ffactor_core::Error;
use proptest::prelude::*;

/// Arbitrary small graph with arbitrary demands, so infeasible cases show up.
fn arb_graph() -> impl Strategy<Value = OrigGraph> {
    (3usize..7).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let np = pairs.len();
        (
            proptest::collection::vec(any::<bool>(), np),
            proptest::collection::vec(1i64..10, np),
            proptest::collection::vec(1i64..4, n),
        )
            .prop_map(move |(keep, w, f)| {
                let edges: Vec<Edge> = pairs
                    .iter()
                    .zip(keep.iter().zip(&w))
                    .filter(|(_, (k, _))| **k)
                    .take(12)
                    .map(|(&(u, v), (_, &w))| Edge { u, v, w })
                    .collect();
                OrigGraph::new(n, edges, f).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn branch_and_bound_matches_enumeration(g in arb_graph()) {
        prop_assert_eq!(brute_force_optimum(&g, OracleLimits::default()).unwrap(), enumerate_all(&g).unwrap());
    }

    #[test]
    fn solver_matches_enumeration(g in arb_graph()) {
        let want = enumerate_all(&g).unwrap();
        match solve(&g, &SolveConfig::default(), &mut Tracer::off()) {
            Ok(sol) => {
                prop_assert_eq!(Some(sol.weight), want.map(|w| w.0));
                let edges: Vec<usize> = sol.factor.edges().collect();
                prop_assert!(verify_solution(&g, &edges, Some(sol.weight)).is_ok());
            }
            Err(Error::Infeasible) => prop_assert!(want.is_none()),
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn lift_then_project_is_identity(seed in any::<u64>(), n in 2usize..12) {
        let inst = gen_instance(seed, GenParams::new(n, 0.3, 9)).unwrap();
        let bg = BlowupGraph::build(&inst.graph);
        let lifted = lift_factor(&inst.graph, &bg, &inst.witness);
        prop_assert!(lifted.validate(&bg).is_ok());
        prop_assert_eq!(project_factor(&inst.graph, &bg, &lifted).unwrap(), inst.witness);
    }
}

#[test]
fn planted_instances_match_oracle_with_clean_invariants() {
    for seed in 0..150u64 {
        let mut p = GenParams::new(4 + (seed % 7) as usize, 0.4, 16);
        p.max_edges = Some(20);
        let inst = gen_instance(seed, p).unwrap();
        let (w, set) = brute_force_optimum(&inst.graph, OracleLimits::default()).unwrap().unwrap();
        let cfg = SolveConfig {
            check_invariants: true,
            reference: Some(FFactor::from_edges(&inst.graph, set).unwrap()),
            ..SolveConfig::default()
        };
        let sol = solve(&inst.graph, &cfg, &mut Tracer::off()).unwrap();
        assert_eq!(sol.weight, w, "seed {seed}");
        assert_eq!(sol.invariants.total(), 0, "seed {seed}: {:?}", sol.invariants);
        assert!(sol.invariants.gap.is_some_and(|g| g >= 0));
    }
}
