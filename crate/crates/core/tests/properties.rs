//! Randomized invariants for the kernel, geometry and posterior layers.

use bcl_core::geometry::{greedy_maximal_separated, is_maximal_separated};
use bcl_core::hellinger::{
    affinity, check_kl_hellinger_sandwich, hellinger_affinity, kl_ratio_bound, product_affinity,
    product_hellinger_sq, ProbabilityTable,
};
use bcl_core::metric::DistanceMatrix;
use bcl_core::posterior::normalize_log_weights;
use proptest::prelude::*;

const TOL: f64 = 1e-10;

fn simplex(len: usize) -> impl Strategy<Value = ProbabilityTable> {
    prop::collection::vec(0.0f64..10.0, len).prop_map(|mut v| {
        let s: f64 = v.iter().sum();
        if s == 0.0 {
            v[0] = 1.0;
        }
        ProbabilityTable::normalized(v).unwrap()
    })
}

fn simplex_pos(len: usize) -> impl Strategy<Value = ProbabilityTable> {
    prop::collection::vec(1e-4f64..10.0, len).prop_map(|v| {
        ProbabilityTable::normalized(v).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn affinity_identity_and_symmetry(p in simplex(6), q in simplex(6)) {
        let a = affinity(&p, &q).unwrap();
        // same arithmetic path: h2 is literally 1 - rho and h = sqrt(h2)
        prop_assert_eq!(a.h2.to_bits(), (1.0 - a.rho).to_bits());
        prop_assert_eq!(a.h.to_bits(), a.h2.sqrt().to_bits());
        let b = affinity(&q, &p).unwrap();
        prop_assert!((a.rho - b.rho).abs() <= 1e-14);
        prop_assert!((0.0..=1.0).contains(&a.rho));
    }

    #[test]
    fn hellinger_triangle_inequality(p in simplex(5), q in simplex(5), r in simplex(5)) {
        let pq = affinity(&p, &q).unwrap().h;
        let qr = affinity(&q, &r).unwrap().h;
        let pr = affinity(&p, &r).unwrap().h;
        prop_assert!(pr <= pq + qr + TOL);
    }

    #[test]
    fn product_affinity_dominated(rho in 0.0f64..=1.0, n in 1u32..200) {
        let out = product_affinity(rho, n).unwrap();
        prop_assert!(out.value <= out.bound + 1e-15);
    }

    #[test]
    fn product_hellinger_dominated(h2 in 0.0f64..=1.0, n in 1u32..200) {
        let v = product_hellinger_sq(h2, n).unwrap();
        prop_assert!(v <= (n as f64 * h2).min(1.0) + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
    }

    #[test]
    fn kl_chain_holds(p in simplex(6), q in simplex(6)) {
        // K >= -2 log rho >= 2 h^2, with K possibly infinite
        let rep = check_kl_hellinger_sandwich(&p, &q).unwrap();
        prop_assert!(rep.chain_holds);
    }

    #[test]
    fn kl_ratio_sandwich_holds(p in simplex_pos(6), q in simplex_pos(6)) {
        let rep = check_kl_hellinger_sandwich(&p, &q).unwrap();
        if let Some(flag) = rep.ratio_holds {
            prop_assert!(flag);
        }
        if let Some(m) = rep.density_ratio_max {
            if m >= 1.0 {
                prop_assert!(rep.ratio_bound.unwrap() <= 4.0 + 2.0 * m.ln() + TOL);
            }
        }
    }

    #[test]
    fn separated_sets_are_maximal(points in prop::collection::vec(0.0f64..1.0, 1..40), x in 0.01f64..0.6) {
        let metric = DistanceMatrix::from_points_1d(&points);
        let subset: Vec<usize> = (0..points.len()).collect();
        let set = greedy_maximal_separated(&metric, &subset, x).unwrap();
        prop_assert!(is_maximal_separated(&metric, &subset, &set));
    }

    // Multiplying every likelihood by a representable positive constant C
    // shifts all log weights by ln C, which stays within about +-700.
    #[test]
    fn log_weight_shift_invariance(
        raw in prop::collection::vec(-500.0f64..500.0, 2..12),
        shift in -700.0f64..700.0,
    ) {
        let (w0, _) = normalize_log_weights(&raw).unwrap();
        let shifted: Vec<f64> = raw.iter().map(|&v| v + shift).collect();
        let (w1, _) = normalize_log_weights(&shifted).unwrap();
        for (a, b) in w0.iter().zip(&w1) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn ratio_bound_monotone_on_coarse_grid() {
    let mut prev = kl_ratio_bound(0.0).unwrap();
    for i in 1..=400 {
        let z = i as f64 * 0.25;
        let v = kl_ratio_bound(z).unwrap();
        assert!(v + 1e-12 >= prev);
        if z >= 1.0 {
            assert!(v <= 4.0 + 2.0 * z.ln() + TOL);
        }
        prev = v;
    }
}

#[test]
fn affinity_is_one_only_at_equality() {
    // rho < 1 whenever the tables differ measurably
    let p = ProbabilityTable::new(vec![0.5, 0.3, 0.2]).unwrap();
    let q = ProbabilityTable::new(vec![0.5, 0.2, 0.3]).unwrap();
    assert!(hellinger_affinity(&p, &q).unwrap() < 1.0);
    assert_eq!(hellinger_affinity(&p, &p).unwrap(), 1.0);
}
