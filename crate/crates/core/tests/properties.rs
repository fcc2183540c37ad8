use std::collections::HashSet;

use proptest::prelude::*;

use povtrap_core::analysis::gini;
use povtrap_core::cpt::{attention_update, cpt_utility, decision_weights, CptParams, Portfolio, ReturnMatrix};
use povtrap_core::experiments::{classify_values, RegimeTag};
use povtrap_core::rng::child_seed;
use povtrap_core::social_graph::{build_sda_graph, detect_communities, sample_initial_wealth};

fn simplex(n: usize) -> impl Strategy<Value = Portfolio> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        Portfolio::new(v.iter().map(|x| x / s).collect()).unwrap()
    })
}

fn on_simplex(w: &[f64]) -> bool {
    w.iter().all(|&x| x >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-12
}

proptest! {
    #[test]
    fn gini_bounded_and_scale_free(v in prop::collection::vec(0.0f64..1e3, 1..60), c in 0.01f64..100.0) {
        let g = gini(&v).unwrap();
        let n = v.len() as f64;
        prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / n + 1e-12);
        let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
        prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-9);
    }

    #[test]
    fn attention_stays_on_simplex_and_is_affine(
        (p, q) in (2usize..6).prop_flat_map(|n| (simplex(n), simplex(n))),
        a in 0.0f64..=1.0,
    ) {
        let mixed = attention_update(&p, &q, a).unwrap();
        prop_assert!(on_simplex(mixed.weights()));
        for ((m, x), y) in mixed.weights().iter().zip(p.weights()).zip(q.weights()) {
            prop_assert!((m - ((1.0 - a) * x + a * y)).abs() < 1e-12);
        }
    }

    #[test]
    fn decision_weights_non_decreasing(np in 0usize..200, nn in 0usize..200, dp in 0.5f64..0.7, dm in 0.71f64..0.9) {
        let w = decision_weights(np, nn, &CptParams::new(10.0, 40.0, dp, dm).unwrap());
        for side in [&w.plus, &w.minus] {
            prop_assert_eq!(side.len(), np + nn);
            prop_assert!(side.windows(2).all(|p| p[0] <= p[1]));
            prop_assert!(side.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn cpt_value_of_sure_gain_is_bounded_by_its_utility(rows in 1usize..40, r in 0.0f64..0.5, gp in 5.0f64..30.0) {
        // The repaired weights of a riskless gain sum to at most one.
        let m = ReturnMatrix::new(rows, 2, (0..rows).flat_map(|i| [i as f64 * 0.01 - 0.2, r]).collect()).unwrap();
        let p = CptParams::new(gp, 40.0, 0.6, 0.8).unwrap();
        let v = cpt_utility(&Portfolio::vertex(2, 1), &m, &p).unwrap();
        prop_assert!(v >= 0.0 && v <= 1.0 - (-gp * r).exp() + 1e-12);
    }

    #[test]
    fn regimes_partition(init in prop::collection::vec(0.1f64..10.0, 1..30), f in prop::collection::vec(0.0f64..3.0, 30)) {
        let last: Vec<f64> = init.iter().zip(&f).map(|(w, k)| w * k).collect();
        let tag = classify_values(&init, &last);
        let richer = init.iter().zip(&last).filter(|(a, b)| b > a).count();
        let want = match richer {
            0 => RegimeTag::AllPoor,
            n if n == init.len() => RegimeTag::AllRich,
            _ => RegimeTag::SomeRich,
        };
        prop_assert_eq!(tag, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sda_graph_is_connected_and_covered(n in 5usize..80, alpha in 2.0f64..10.0, seed in any::<u64>()) {
        let w = sample_initial_wealth(n, 10.0, 1.0, seed).unwrap();
        let g = build_sda_graph(&w, alpha, seed).unwrap();
        prop_assert!(g.is_connected());
        let c = detect_communities(&g, seed).unwrap();
        for i in 0..n {
            prop_assert!(c.extended_membership[i].contains(&c.core_label[i]));
        }
        let total: usize = c.members.iter().map(Vec::len).sum();
        prop_assert_eq!(total, n);
    }
}

#[test]
fn child_seeds_are_distinct() {
    let mut seen = HashSet::new();
    for row in 0..300 {
        for rep in 0..40 {
            assert!(seen.insert(child_seed(99, row, rep)));
        }
    }
}
