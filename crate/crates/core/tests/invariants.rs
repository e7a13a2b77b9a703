use proptest::prelude::*;

use torus_gibbs::configs::PatchConfig;
use torus_gibbs::{GibbsParams, Lattice, LatticeSpec, LocalFrame, Norm, SpinField};

fn lattice(d: usize, n: usize, q: Norm, rho: usize) -> Lattice {
    Lattice::new(LatticeSpec::new(d, n, q, rho)).unwrap()
}

fn norm_strategy() -> impl Strategy<Value = Norm> {
    prop_oneof![Just(Norm::Inf), Just(Norm::L(1)), Just(Norm::L(2))]
}

/// Disjoint random patches on a lattice of `sites` vertices.
fn disjoint_patches(sites: usize) -> impl Strategy<Value = (PatchConfig, PatchConfig)> {
    proptest::collection::vec(0u8..3, sites).prop_map(|labels| {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (v, l) in labels.iter().enumerate() {
            // 0: unused, 1: left, 2: right; spin from a parity hash.
            let plus = (v * 7 + *l as usize * 3) % 5 < 2;
            match l {
                1 => left.push((v, plus)),
                2 => right.push((v, plus)),
                _ => {}
            }
        }
        (PatchConfig::new(left).unwrap(), PatchConfig::new(right).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn neighborhoods_are_symmetric_and_translation_invariant(
        d in 1usize..=2, n in 3usize..=7, q in norm_strategy(), rho in 1usize..=2, x in 0usize..49, y in 0usize..49,
    ) {
        let l = lattice(d, n, q, rho);
        let (x, y) = (x % l.n_sites(), y % l.n_sites());
        prop_assert_eq!(l.is_edge(x, y), l.is_edge(y, x));
        prop_assert_eq!(l.graph_distance(x, y), l.graph_distance(y, x));
        let shift = l.add(x, y);
        for &z in l.neighbors(x) {
            prop_assert!(l.is_edge(shift, l.add(z as usize, y)));
        }
        prop_assert_eq!(l.neighbors(x).len(), l.degree());
        prop_assert_eq!(l.sub(l.add(x, y), y), x);
    }

    #[test]
    fn perimeter_connection_identity((left, right) in disjoint_patches(64), q in norm_strategy()) {
        let l = lattice(2, 8, q, 1);
        let joined = left.compose(&right).unwrap();
        let conn = left.connection(&l, &right).unwrap();
        prop_assert_eq!(joined.perimeter(&l) + 2 * conn, left.perimeter(&l) + right.perimeter(&l));
        prop_assert_eq!(conn, right.connection(&l, &left).unwrap());
    }

    #[test]
    fn weight_factorizes_over_separated_supports(
        (left, right) in disjoint_patches(64), a in -3.0f64..0.0, b in 0.0f64..1.0,
    ) {
        let l = lattice(2, 8, Norm::Inf, 1);
        let p = GibbsParams::new(a, b).unwrap();
        let joined = left.compose(&right).unwrap();
        let sum = left.log_weight(&l, &p) + right.log_weight(&l, &p);
        let conn = left.connection(&l, &right).unwrap() as f64;
        // In general the log weights differ by exactly 4 b conn.
        prop_assert!((joined.log_weight(&l, &p) - (sum + 4.0 * b * conn)).abs() < 1e-9);
        if l.v_disjoint(&left.support(), &right.support()) {
            prop_assert_eq!(conn, 0.0);
            prop_assert!((joined.log_weight(&l, &p) - sum).abs() < 1e-9);
        }
    }

    #[test]
    fn local_weights_match_patch_weights(bits in 0u64..512, a in -3.0f64..0.0, b in 0.0f64..1.0, x in 0usize..64) {
        let l = lattice(2, 8, Norm::Inf, 1);
        let p = GibbsParams::new(a, b).unwrap();
        let frame = LocalFrame::new(&l, 1).unwrap();
        let c = frame.config(bits).unwrap();
        let patch = frame.translate(&l, &c, x);
        prop_assert!((c.log_weight(&p) - patch.log_weight(&l, &p)).abs() < 1e-12);
        prop_assert_eq!(c.gamma(), patch.perimeter(&l));
        prop_assert_eq!(frame.parse_config(&frame.record(&c)).unwrap(), c);
    }

    #[test]
    fn weight_ratio_is_monotone_in_added_plus(bits in 0u64..512, extra in 0usize..9, a in -3.0f64..0.0, b in 0.0f64..0.2) {
        // With a + 2Vb <= 0, raising one spin never increases the weight.
        let l = lattice(2, 8, Norm::Inf, 1);
        let p = GibbsParams::new(a.min(-2.0 * 8.0 * b), b).unwrap();
        let frame = LocalFrame::new(&l, 1).unwrap();
        let lo = frame.config(bits).unwrap();
        let hi = frame.config(bits | 1 << extra).unwrap();
        prop_assert!(lo.plus_subset_of(&hi));
        prop_assert!(hi.log_weight(&p) <= lo.log_weight(&p) + 1e-12);
    }

    #[test]
    fn energy_is_flip_dual(state in 0u64..(1 << 12), a in -2.0f64..2.0, b in 0.0f64..1.0) {
        let l = lattice(2, 4, Norm::L(1), 1);
        let f = SpinField::from_state(16, state);
        let p = GibbsParams::new(a, b).unwrap();
        prop_assert!((f.energy(&l, &p) - f.flipped().energy(&l, &p.flipped())).abs() < 1e-12);
    }
}
