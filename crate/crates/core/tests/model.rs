mod common;

use mmscbm::model::{build_expectations, derive_seed, sample_network, synth_instance};
use mmscbm::{MixingSequence, SparsityParam};
use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;

fn rho(v: f64) -> SparsityParam {
    SparsityParam::new(v).unwrap()
}

#[test]
fn empirical_edge_frequencies_match_probabilities() {
    const SEEDS: u64 = 2000;
    let inst = synth_instance(20, 3, 4, 5, 3, rho(0.6), 31).unwrap();
    let mut hits = vec![DMatrix::<f64>::zeros(20, 20); 3];
    for s in 0..SEEDS {
        let a = sample_network(&inst.omega, derive_seed(42, s, 0)).unwrap();
        for (l, layer) in a.layers().iter().enumerate() {
            for (i, j) in layer.edges() {
                hits[l][(i, j)] += 1.0;
            }
        }
    }
    let reps = SEEDS as f64;
    let mut outside = Vec::new();
    for (l, omega) in inst.omega.layers().iter().enumerate() {
        for ((i, j), &p) in omega.iter().enumerate().map(|(idx, p)| ((idx % 20, idx / 20), p)) {
            let band = 3.0 * (p * (1.0 - p) / reps).sqrt();
            let mean = hits[l][(i, j)] / reps;
            if (mean - p).abs() > band {
                outside.push((l, i, j, mean, p));
            }
        }
    }
    // every cell sits in its own 3-sigma band with probability ~0.9973, so
    // over 1200 cells a handful of exceedances is expected; the count must
    // be consistent with that tail and no cell may be far out
    let cells: f64 = 3.0 * 400.0;
    let tail = 0.0027;
    let allowed = cells * tail + 4.0 * (cells * tail * (1.0 - tail)).sqrt();
    assert!(
        (outside.len() as f64) <= allowed,
        "{} cells outside the 3-sigma band (allowed {allowed:.1}): {outside:?}",
        outside.len()
    );
    for &(l, i, j, mean, p) in &outside {
        let z = (mean - p).abs() / (p * (1.0 - p) / reps).sqrt();
        assert!(z <= 5.0, "layer {l} cell ({i}, {j}) is {z:.1} sigma out");
    }
}

#[test]
fn edge_totals_concentrate() {
    let inst = synth_instance(150, 3, 20, 30, 4, rho(0.2), 5).unwrap();
    let mean: f64 = inst.omega.layers().iter().map(|o| o.sum()).sum();
    let var: f64 = inst.omega.layers().iter().flat_map(|o| o.iter().map(|p| p * (1.0 - p))).sum();
    for seed in 0..20 {
        let a = sample_network(&inst.omega, seed).unwrap();
        let total: usize = a.edge_counts().iter().sum();
        assert!((total as f64 - mean).abs() <= 4.0 * var.sqrt(), "seed {seed}: {total} edges vs mean {mean}");
    }
}

#[test]
fn equal_seeds_equal_networks_across_thread_counts() {
    let inst = synth_instance(60, 3, 10, 10, 6, rho(0.5), 9).unwrap();
    let a = sample_network(&inst.omega, 1234).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| sample_network(&inst.omega, 1234).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, sample_network(&inst.omega, 1235).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn expectations_never_exceed_rho(
        seed in any::<u64>(),
        k in 1usize..5,
        layers in 1usize..4,
        r in 0.01f64..=1.0,
    ) {
        let n = 4 * k + 7;
        let inst = synth_instance(n, k, 2, 3, layers, rho(r), seed).unwrap();
        for omega in inst.omega.layers() {
            prop_assert!(omega.iter().all(|&p| (0.0..=r).contains(&p)));
        }
    }

    #[test]
    fn generated_truth_is_valid_with_pure_nodes(seed in any::<u64>(), k in 1usize..6) {
        let n = 40;
        let inst = synth_instance(n, k, 3, 2, 2, rho(0.5), seed).unwrap();
        for (pi, pure) in [(&inst.truth.pi_r, &inst.truth.pure_r), (&inst.truth.pi_c, &inst.truth.pure_c)] {
            prop_assert!(pi.matrix().row_iter().all(|row| (row.sum() - 1.0).abs() <= 1e-12));
            for (c, &i) in pure.iter().enumerate() {
                prop_assert_eq!(pi.pure_community(i), Some(c));
            }
        }
    }

    #[test]
    fn one_community_expectation_is_flat(b in 0.0f64..=1.0, r in 0.01f64..=1.0, seed in any::<u64>()) {
        let mut g = rng(seed);
        let pi = random_membership(&mut g, 6, 1);
        let mixing = MixingSequence::new(vec![DMatrix::from_element(1, 1, b)]).unwrap();
        let omega = build_expectations(&pi, &pi, &mixing, rho(r)).unwrap();
        prop_assert!(omega.layers()[0].iter().all(|&p| (p - r * b).abs() <= 1e-15));
    }
}
