use proptest::prelude::*;

use equimetric::lift::{build_allowability_graph, lift_metric, CoverOptions, LiftMode};
use equimetric::orbital::{build_orbital_metric, GroupMetric};
use equimetric::quotient::{compute_orbits, quotient_metric, QuotientMetricMode};
use equimetric::scenario::{generate_scenario, GSpaceFile, ScenarioSpec};
use equimetric::slices::{build_slice_family, verify_slice_family, SliceOptions};
use equimetric::verify::format_sig;

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(48)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn built_slices_satisfy_every_condition(seed in any::<u64>(), shrink in prop::option::of(0.3f64..0.95)) {
        let gs = generate_scenario(&ScenarioSpec::Random { seed }).unwrap().gspace;
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(&gs, &q, SliceOptions { shrink_factor: shrink });
        let rep = verify_slice_family(&gs, &q, &fam, None);
        prop_assert_eq!(rep.violation_count(), 0, "{:?}", rep.results.iter().find(|r| !r.violations.is_empty()));
    }

    #[test]
    fn general_lift_is_invariant_and_above_quotient(seed in any::<u64>(), scale in 0.1f64..3.0) {
        let gs = generate_scenario(&ScenarioSpec::Random { seed }).unwrap().gspace;
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(&gs, &q, SliceOptions::default());
        let dg = GroupMetric::discrete(gs.group(), scale).unwrap();
        let d_o = build_orbital_metric(&gs, &q, &fam, &dg).unwrap();
        let graph = build_allowability_graph(&gs, &q, &fam, Some(&d_o), LiftMode::General, CoverOptions::default()).unwrap();
        let rho = lift_metric(&graph);
        let n = gs.len();
        for x in 0..n {
            for y in 0..n {
                let r = rho.rho(x, y);
                prop_assert!(r + 1e-12 >= q.dp(x, y));
                for g in gs.total_elements() {
                    let (gx, gy) = (gs.act(g, x).unwrap(), gs.act(g, y).unwrap());
                    prop_assert!((rho.rho(gx, gy) - r).abs() <= 1e-12 || (r.is_infinite() && rho.rho(gx, gy).is_infinite()));
                }
                for z in 0..n {
                    prop_assert!(r <= rho.rho(x, z) + rho.rho(z, y) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn witness_paths_are_tight(seed in any::<u64>()) {
        let gs = generate_scenario(&ScenarioSpec::Random { seed }).unwrap().gspace;
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(&gs, &q, SliceOptions::default());
        let dg = GroupMetric::discrete(gs.group(), 1.0).unwrap();
        let d_o = build_orbital_metric(&gs, &q, &fam, &dg).unwrap();
        let graph = build_allowability_graph(&gs, &q, &fam, Some(&d_o), LiftMode::General, CoverOptions::default()).unwrap();
        let rho = lift_metric(&graph);
        for x in 0..gs.len() {
            for y in 0..gs.len() {
                let Some(path) = rho.witness(x, y) else {
                    prop_assert!(rho.rho(x, y).is_infinite());
                    continue;
                };
                let cost: f64 = path.windows(2).map(|w| graph.edge(w[0], w[1]).unwrap().weight).sum();
                prop_assert!((cost - rho.rho(x, y)).abs() <= 1e-9);
            }
        }
    }

    /// Splitting a cover step at a third point of the same small set never
    /// makes it cheaper.
    #[test]
    fn refining_a_cover_step_never_decreases_cost(n in 2usize..10, k in 1usize..4) {
        let gs = generate_scenario(&ScenarioSpec::Circle { n: n * k, k }).unwrap().gspace;
        let q = quotient_metric(&gs, compute_orbits(&gs), &QuotientMetricMode::Graph).unwrap();
        let fam = build_slice_family(&gs, &q, SliceOptions::default());
        let graph = build_allowability_graph(&gs, &q, &fam, None, LiftMode::Cover, CoverOptions::default()).unwrap();
        for set in graph.small_sets() {
            for &u in set {
                for &v in set {
                    for &w in set {
                        prop_assert!(q.dp(u, w) + q.dp(w, v) + 1e-12 >= q.dp(u, v));
                    }
                }
            }
        }
    }

    #[test]
    fn gspace_files_round_trip(seed in any::<u64>()) {
        let gs = generate_scenario(&ScenarioSpec::Random { seed }).unwrap().gspace;
        let text = serde_json::to_string(&GSpaceFile::from_gspace(&gs)).unwrap();
        let back = serde_json::from_str::<GSpaceFile>(&text).unwrap().into_gspace().unwrap();
        prop_assert_eq!(back, gs);
    }

    #[test]
    fn format_sig_keeps_nine_digits(v in -1e6f64..1e6) {
        let back: f64 = format_sig(v).parse().unwrap();
        prop_assert!((back - v).abs() <= 1e-8 * v.abs().max(1e-300));
    }
}
