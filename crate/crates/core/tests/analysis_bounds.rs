use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scs_core::analysis::{
    elasticity_report, envy_report, factorize, protection_report, surrogate_report,
};
use scs_core::engines::SolverOptions;
use scs_core::model::PopulationState;
use scs_core::sampling::{
    random_instance, random_parallel_instance, random_scwa_weights, rescale_to_unit_demands,
    InstanceShape,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn sharing_never_hurts_a_slice_at_alpha_one() {
    let opts = SolverOptions::default();
    let mut rng = rng(11);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, &InstanceShape::default());
        let q = random_scwa_weights(&mut rng, &inst);
        for rep in protection_report(&inst, &q, 1.0, &opts).unwrap() {
            assert!(rep.gap <= 1e-9, "{rep:?}");
        }
    }
}

#[test]
fn partition_gain_within_price_bound() {
    let opts = SolverOptions::default();
    let mut rng = rng(12);
    for _ in 0..100 {
        let inst = random_instance(&mut rng, &InstanceShape::default());
        let q = random_scwa_weights(&mut rng, &inst);
        for alpha in [0.5, 2.0] {
            for rep in protection_report(&inst, &q, alpha, &opts).unwrap() {
                assert!(rep.holds(1e-6), "{rep:?}");
            }
        }
    }
}

#[test]
fn swapping_bundles_within_envy_bound() {
    let opts = SolverOptions::default();
    let mut rng = rng(13);
    for _ in 0..60 {
        let inst = random_instance(&mut rng, &InstanceShape::default());
        let q = random_scwa_weights(&mut rng, &inst);
        for alpha in [0.5, 1.0, 2.0] {
            let rep = envy_report(&inst, &q, alpha, 0, 1, &opts).unwrap();
            assert!(rep.holds(1e-6), "{rep:?}");
            if alpha == 1.0 {
                assert!((rep.bound - (inst.share(1) - inst.share(0))).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn maxmin_surrogate_loss_bounded() {
    let opts = SolverOptions {
        tolerance: 1e-13,
        ..SolverOptions::default()
    };
    let mut rng = rng(14);
    for _ in 0..100 {
        let inst = rescale_to_unit_demands(&random_instance(&mut rng, &InstanceShape::default()));
        let q = random_scwa_weights(&mut rng, &inst);
        let rep = surrogate_report(&inst, &q, &opts).unwrap();
        assert!(rep.bound.gap >= -1e-12, "{rep:?}");
        assert!(rep.bound.holds(1e-6), "{rep:?}");
        assert!(rep.bound.bound <= rep.cap + 1e-12);
    }
}

#[test]
fn factorization_is_exact() {
    let mut rng = rng(15);
    for _ in 0..300 {
        let n = rng.random_range(2..=6);
        let nv = rng.random_range(1..=3usize.min(n));
        let slice_of: Vec<usize> = (0..n)
            .map(|c| if c < nv { c } else { rng.random_range(0..nv) })
            .collect();
        let raw: Vec<f64> = (0..nv).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let shares: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let mut sums = vec![0.0; nv];
        for c in 0..n {
            sums[slice_of[c]] += w[c];
        }
        let q: Vec<f64> = (0..n)
            .map(|c| shares[slice_of[c]] * w[c] / sums[slice_of[c]])
            .collect();
        let phi: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..2.0)).collect();
        let alpha = rng.random_range(0.1..5.0);
        for a in [alpha, 1.0] {
            let rep = factorize(&phi, &q, &slice_of, &shares, a).unwrap();
            assert!(rep.relative_error <= 1e-8, "{rep:?}");
            assert!((rep.slice_weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn rates_grow_with_own_population() {
    let opts = SolverOptions::default();
    let mut rng = rng(16);
    for _ in 0..20 {
        let inst = random_parallel_instance(&mut rng, &InstanceShape::default());
        let base = PopulationState::new(
            (0..inst.num_classes())
                .map(|_| rng.random_range(1..=3))
                .collect(),
        );
        let c = rng.random_range(0..inst.num_classes());
        for alpha in [0.5, 1.0, 2.0] {
            let rep = elasticity_report(&inst, &base, c, 10, alpha, &opts).unwrap();
            assert!(rep.monotone, "{rep:?}");
            assert!(rep.proportionality_error <= 1e-6, "{rep:?}");
        }
    }
}
