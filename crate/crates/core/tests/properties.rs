use proptest::prelude::*;

use privqkd::bounds::{binary_entropy, chernoff_e, key_rate, sampling_term, BoundTerm};
use privqkd::estimation::{group_sizes, rng_from_seed};
use privqkd::linalg::{
    from_local_grouping, kron, max_abs_diff, partial_trace_dims, random_density, random_hermitian, to_local_grouping,
    trace, validate_density, SystemShape,
};
use privqkd::observables::decompose_product;
use privqkd::private_states::{make_private_state, maximally_mixed, Twisting};
use privqkd::protocol::{apply_channel, AttackSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_trace_of_product(seed in any::<u64>(), da in 1usize..5, db in 1usize..5) {
        let mut rng = rng_from_seed(seed);
        let ra = random_density::<f64, _>(da, &mut rng);
        let rb = random_density(db, &mut rng);
        let joint = kron(&ra, &rb);
        prop_assert!(max_abs_diff(&partial_trace_dims(&joint, &[da, db], &[0]).unwrap(), &ra) < 1e-12);
        prop_assert!(max_abs_diff(&partial_trace_dims(&joint, &[da, db], &[1]).unwrap(), &rb) < 1e-12);
    }

    #[test]
    fn local_grouping_round_trips(seed in any::<u64>(), a in 1usize..3) {
        let shape = SystemShape::new(2, a).unwrap();
        let m = random_hermitian::<f64, _>(shape.total_dim(), &mut rng_from_seed(seed));
        let back = from_local_grouping(&to_local_grouping(&m, &shape).unwrap(), &shape).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn decomposition_reconstructs(seed in any::<u64>(), a in 1usize..3) {
        let shape = SystemShape::new(2, a).unwrap();
        let m = random_hermitian::<f64, _>(shape.total_dim(), &mut rng_from_seed(seed));
        let dec = decompose_product(&m, &shape).unwrap();
        prop_assert!(max_abs_diff(&dec.reconstruct(), &m) < 1e-10);
    }

    #[test]
    fn channels_are_trace_preserving(seed in any::<u64>(), p in 0.0f64..=1.0, a in 1usize..3, dephase in any::<bool>()) {
        let shape = SystemShape::new(2, a).unwrap();
        let mut rng = rng_from_seed(seed);
        let gamma = make_private_state(maximally_mixed(shape.d_prime()), Twisting::random(shape, &mut rng)).unwrap().gamma;
        let attack = if dephase { AttackSpec::Dephasing { p } } else { AttackSpec::Depolarizing { p } };
        let out = apply_channel(&gamma, &shape, &attack).unwrap();
        prop_assert!((trace(&out).re - 1.0).abs() < 1e-10);
        prop_assert!(validate_density(&out, 1e-10).is_ok());
    }

    #[test]
    fn groups_cover_all_copies(m in 1usize..10_000, k in 1usize..300) {
        prop_assume!(m >= k);
        let sizes = group_sizes(m, k);
        prop_assert_eq!(sizes.iter().sum::<usize>(), m);
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(x in 0.0f64..=1.0) {
        let h = binary_entropy(x).unwrap();
        prop_assert!((0.0..=1.0).contains(&h));
        prop_assert!((h - binary_entropy(1.0 - x).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn key_rate_in_unit_interval(ex in -0.1f64..0.7, ez in -0.1f64..0.7) {
        let k = key_rate(ex, ez);
        prop_assert!((0.0..=1.0).contains(&k));
    }

    #[test]
    fn sampling_decreases_once_negative(k in 1u64..1_000_000, eps in 0.01f64..2.0, z in 2u64..32) {
        let a = sampling_term(k, eps, z);
        let b = sampling_term(k + 1, eps, z);
        prop_assert!(b.log2 < a.log2);
        if a.log2 < 0.0 {
            prop_assert!(b.value <= a.value);
        }
    }

    #[test]
    fn chernoff_decreases_in_n_when_negative(n in 100u64..1_000_000, delta in 0.5f64..2.0) {
        let a = chernoff_e(delta, n, 0, 2).unwrap();
        let b = chernoff_e(delta, n * 2, 0, 2).unwrap();
        if a.log2 < 0.0 {
            prop_assert!(b.log2 < a.log2);
        }
    }

    #[test]
    fn linear_value_tracks_log(log2 in -1000.0f64..50.0) {
        let t = BoundTerm::from_log2(log2);
        prop_assert_eq!(t.vacuous, log2 >= 0.0);
        let expect = log2.exp2().min(1.0);
        prop_assert!((t.value - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn twisting_json_round_trip(seed in any::<u64>(), a in 1usize..3) {
        let shape = SystemShape::new(2, a).unwrap();
        let t = Twisting::<f64>::random(shape, &mut rng_from_seed(seed));
        let back: Twisting<f64> = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(back, t);
    }
}
