mod common;

use common::{is_plus, Torus};
use torus_gibbs::configs::PatchConfig;
use torus_gibbs::geography::{self, OccurrenceScan};
use torus_gibbs::measure::{self, ExactMeasure};
use torus_gibbs::sampler::{self, ChainSettings};
use torus_gibbs::ubiquity::{self, BlockField, BlockMap, BlockSpec};
use torus_gibbs::{EventPredicate, GibbsParams, Lattice, LatticeSpec, LocalFrame, Norm};

fn lattice(d: usize, n: usize, q: Norm) -> Lattice {
    Lattice::new(LatticeSpec::new(d, n, q, 1)).unwrap()
}

#[test]
fn exact_measure_matches_brute_force_law() {
    for (d, n, q, chebyshev) in [(1, 7, Norm::Inf, true), (2, 3, Norm::Inf, true), (2, 4, Norm::L(1), false)] {
        let l = lattice(d, n, q);
        let oracle = Torus::new(d, n, chebyshev);
        for (a, b) in [(-0.7, 0.2), (0.3, 0.0), (-1.2, 0.45)] {
            let m = ExactMeasure::new(&l, GibbsParams::new(a, b).unwrap()).unwrap();
            let law = oracle.law(a, b);
            for (s, &p) in law.iter().enumerate() {
                let got = m.log_prob_state(s as u64).exp();
                assert!((got - p).abs() <= 1e-12 * p.max(1e-300) + 1e-15, "d={d} n={n} state {s}");
            }
        }
    }
}

#[test]
fn lattice_neighbors_match_coordinate_oracle() {
    for (d, n, q, chebyshev) in [(1, 9, Norm::Inf, true), (2, 5, Norm::Inf, true), (2, 6, Norm::L(1), false), (3, 4, Norm::L(1), false)] {
        let l = lattice(d, n, q);
        let oracle = Torus::new(d, n, chebyshev);
        for x in 0..l.n_sites() {
            let mut ours = l.neighbor_set(x);
            ours.sort_unstable();
            assert_eq!(ours, oracle.neighbors[x], "d={d} n={n} x={x}");
        }
    }
}

#[test]
fn closed_form_conditional_matches_enumeration() {
    let l = lattice(2, 4, Norm::L(1));
    let oracle = Torus::new(2, 4, false);
    let frame = LocalFrame::new(&l, 1).unwrap();
    let (a, b) = (-0.6, 0.25);
    let p = GibbsParams::new(a, b).unwrap();
    let law = oracle.law(a, b);
    let ball: Vec<usize> = frame.ball_shifts().to_vec();
    let boundary: Vec<usize> = frame.boundary_shifts().to_vec();
    for eta_bits in [0u64, 1, 0b10101, 0b11111] {
        let eta = frame.config(eta_bits).unwrap();
        for key in 0..1u64 << boundary.len() {
            let mut joint = 0.0;
            let mut marginal = 0.0;
            for (s, &w) in law.iter().enumerate() {
                let s = s as u64;
                if boundary.iter().enumerate().any(|(j, &v)| is_plus(s, v) != (key >> j & 1 == 1)) {
                    continue;
                }
                marginal += w;
                if ball.iter().enumerate().all(|(j, &v)| is_plus(s, v) == (eta_bits >> j & 1 == 1)) {
                    joint += w;
                }
            }
            let spins: Vec<bool> = (0..boundary.len()).map(|j| key >> j & 1 == 1).collect();
            let got = measure::conditional_occurrence(&frame, &p, &eta, &spins).unwrap();
            assert!((got - joint / marginal).abs() < 1e-12, "eta {eta_bits} key {key}");
        }
    }
}

#[test]
fn heat_bath_reproduces_exact_marginals() {
    let l = lattice(1, 6, Norm::Inf);
    let oracle = Torus::new(1, 6, true);
    let (a, b) = (-0.4, 0.35);
    let law = oracle.law(a, b);
    let p = GibbsParams::new(a, b).unwrap();
    let events = [
        EventPredicate::site_plus(0),
        EventPredicate::site_plus(0).and(&EventPredicate::site_plus(1)),
        EventPredicate::site_plus(0).and(&EventPredicate::site_plus(3)),
    ];
    let exact = [
        law.iter().enumerate().filter(|(s, _)| is_plus(*s as u64, 0)).map(|x| x.1).sum::<f64>(),
        law.iter().enumerate().filter(|(s, _)| is_plus(*s as u64, 0) && is_plus(*s as u64, 1)).map(|x| x.1).sum(),
        law.iter().enumerate().filter(|(s, _)| is_plus(*s as u64, 0) && is_plus(*s as u64, 3)).map(|x| x.1).sum(),
    ];
    let settings = ChainSettings {
        burn_in_sweeps: 200,
        thinning_sweeps: 2,
        chains: 2,
        ..ChainSettings::new(11, 40_000)
    };
    let refs: Vec<&EventPredicate> = events.iter().collect();
    let est = sampler::estimate_events(&l, &p, &refs, &settings).unwrap();
    for (e, x) in est.iter().zip(exact) {
        assert!((e.mean - x).abs() <= 4.0 * geography::effective_se(e), "{} vs {x}", e.mean);
    }
}

#[test]
fn clamped_chain_matches_exact_conditional() {
    let l = lattice(1, 8, Norm::Inf);
    let frame = LocalFrame::new(&l, 1).unwrap();
    let p = GibbsParams::new(-0.5, 0.3).unwrap();
    let eta = frame.single_center_plus();
    let target = EventPredicate::site_plus(4);
    let m = ExactMeasure::new(&l, p).unwrap();
    let occ = EventPredicate::occurrence(&l, &frame, &eta, 0);
    let exact = m.probability(&target.and(&occ)).unwrap() / m.probability(&occ).unwrap();
    let settings = ChainSettings {
        burn_in_sweeps: 200,
        thinning_sweeps: 2,
        ..ChainSettings::new(5, 30_000)
    };
    let est = sampler::estimate_conditional(&l, &p, &frame, &target, &eta, 0, &settings).unwrap();
    assert!((est.mean - exact).abs() <= 4.0 * geography::effective_se(&est));
}

#[test]
fn clamps_conflicts_are_reported() {
    let s = ChainSettings::new(0, 10)
        .with_clamp(&PatchConfig::new(vec![(0, true)]).unwrap())
        .unwrap();
    assert!(s.with_clamp(&PatchConfig::new(vec![(0, false)]).unwrap()).is_err());
    assert!(s.with_clamp(&PatchConfig::new(vec![(0, true), (1, false)]).unwrap()).is_ok());
}

#[test]
fn copy_counts_match_coordinate_scan() {
    let l = lattice(2, 6, Norm::Inf);
    let oracle = Torus::new(2, 6, true);
    let frame = LocalFrame::new(&l, 1).unwrap();
    let eta = frame.single_center_plus();
    let scan = OccurrenceScan::new(&l, &frame, &[eta], (0..36).collect()).unwrap();
    let mut rng = 0x9e3779b97f4a7c15u64;
    for _ in 0..200 {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        let state = rng & ((1 << 36) - 1) & (rng >> 3);
        let field = torus_gibbs::SpinField::from_state(36, state);
        let expected = (0..36)
            .filter(|&x| {
                oracle
                    .cube(x, 1)
                    .iter()
                    .all(|&y| is_plus(state, y) == (y == x))
            })
            .count();
        assert_eq!(scan.count(&field), expected);
        assert_eq!(geography::count_copies(&l, &frame, &field, &eta), expected);
    }
}

#[test]
fn pushforward_matches_brute_force_on_other_sizes() {
    // n = 12 = 2^2 * 3: four blocks of radius 1.
    let l = lattice(1, 12, Norm::Inf);
    let frame = LocalFrame::new(&l, 1).unwrap();
    let blocks = BlockSpec::new(&l).unwrap();
    for eta_bits in [0b010u64, 0b110] {
        let eta = frame.config(eta_bits).unwrap();
        let map = BlockMap::new(&l, &frame, &blocks, eta).unwrap();
        let m = ExactMeasure::new(&l, GibbsParams::new(-0.8, 0.2).unwrap()).unwrap();
        let ours = ubiquity::induced_measure_exact(&m, &map).unwrap();
        let theirs = common::brute_pushforward(12, 1, eta_bits, -0.8, 0.2);
        for (x, y) in ours.iter().zip(&theirs) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn block_markov_identity_diagnostic() {
    // The induced block measure need not be Markov on the supergraph: the
    // detection windows of adjacent blocks overlap. Measure the deviation
    // rather than assume the identity.
    let l = lattice(1, 12, Norm::Inf);
    let frame = LocalFrame::new(&l, 1).unwrap();
    let blocks = BlockSpec::new(&l).unwrap();
    let map = BlockMap::new(&l, &frame, &blocks, frame.single_center_plus()).unwrap();
    let m = ExactMeasure::new(&l, GibbsParams::new(-0.5, 0.4).unwrap()).unwrap();
    let law = ubiquity::induced_measure_exact(&m, &map).unwrap();
    let total: f64 = law.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    let event = |f: &BlockField| f.plus[0];
    let report = ubiquity::verify_block_markov(&blocks, &law, &[0], &[1, 2, 3], &event).unwrap();
    // Conditioning on {1, 2, 3} versus the supergraph boundary {1, 3} differs
    // through block 2, whose window shares spins with those of blocks 1 and 3.
    assert!(report.assignments > 0);
    assert!(!report.passed, "deviation {:.3e}", report.deviation);
    assert!(report.deviation > 1e-4 && report.deviation < 1e-2);
}
