use proptest::prelude::*;
use ruelle_core::dlr::{dlr_check, GibbsKernel};
use ruelle_core::entropy::{relative_entropy_volume, specific_entropy_markov, volume_entropy};
use ruelle_core::exec;
use ruelle_core::measures::{cylinder_weights, MeasureRecord};
use ruelle_core::symbolic::{decode_word, word_index};
use ruelle_core::transfer::{normalization_residual, normalize, solve};
use ruelle_core::variational::pressure;
use ruelle_core::{Alphabet, Error, MarkovMeasure, Mixture, Potential, Sequence};

fn alphabet() -> impl Strategy<Value = Alphabet> {
    prop::collection::vec(0.05f64..1.0, 2..=4).prop_map(|w| Alphabet::finite_with_weights(&w).unwrap())
}

fn potential_on(m: usize, depth: usize) -> impl Strategy<Value = Potential> {
    prop::collection::vec(-2.0f64..2.0, m.pow(depth as u32))
        .prop_map(move |v| Potential::new(depth, m, v).unwrap())
}

fn setup() -> impl Strategy<Value = (Alphabet, Potential)> {
    (alphabet(), 2usize..=3).prop_flat_map(|(a, depth)| {
        let m = a.len();
        (Just(a), potential_on(m, depth))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn normalized_potential_sums_to_one((a, f) in setup()) {
        let bar = normalize(&f, &solve(&f, &a).unwrap()).unwrap();
        prop_assert!(normalization_residual(&bar, &a).unwrap() <= 1e-11);
    }

    #[test]
    fn pressure_shifts_with_constants((a, f) in setup(), c in -3.0f64..3.0) {
        let shifted = pressure(&f.shifted(c), &a).unwrap();
        prop_assert!((shifted - pressure(&f, &a).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn pressure_is_convex_along_lines((a, f) in setup(), b1 in -1.5f64..1.5, b2 in -1.5f64..1.5) {
        // near-degenerate spectra can exhaust the power iteration
        let p = |b: f64| pressure(&f.scaled(b), &a);
        let (lo, mid, hi) = (p(b1), p(0.5 * (b1 + b2)), p(b2));
        let stalled = |r: &Result<f64, Error>| matches!(r, Err(Error::NonConvergence { .. }));
        prop_assume!(!(stalled(&lo) || stalled(&mid) || stalled(&hi)));
        let (lo, mid, hi) = (lo.unwrap(), mid.unwrap(), hi.unwrap());
        prop_assert!(mid <= 0.5 * (lo + hi) + 1e-12);
    }

    #[test]
    fn entropies_have_the_right_sign(a in alphabet(), seed in any::<u64>(), n in 1usize..6) {
        let mu = MarkovMeasure::random_markov(&a, seed).unwrap();
        let nu = MarkovMeasure::random_markov(&a, seed ^ 1).unwrap();
        prop_assert!(volume_entropy(&mu, &a, n).unwrap().expect_finite("H") <= 1e-15);
        prop_assert!(relative_entropy_volume(&mu, &nu, n).unwrap().expect_finite("H") >= -1e-15);
        prop_assert!(specific_entropy_markov(&mu, &a).unwrap() <= 1e-15);
    }

    #[test]
    fn volume_entropy_is_concave(a in alphabet(), seed in any::<u64>(), t in 0.0f64..=1.0, n in 1usize..5) {
        let mu = MarkovMeasure::random_markov(&a, seed).unwrap();
        let nu = MarkovMeasure::random_markov(&a, seed.wrapping_add(3)).unwrap();
        let mix = Mixture::new(vec![(t, mu.clone()), (1.0 - t, nu.clone())]).unwrap();
        let h = |x: &dyn ruelle_core::CylinderMeasure| volume_entropy(x, &a, n).unwrap().expect_finite("H");
        prop_assert!(h(&mix) >= t * h(&mu) + (1.0 - t) * h(&nu) - 1e-13);
    }

    #[test]
    fn kernels_are_proper_and_gibbs_is_consistent((a, f) in setup(), n in 1usize..5) {
        let bar = normalize(&f, &solve(&f, &a).unwrap()).unwrap();
        prop_assert!(GibbsKernel::new(&bar, &a, n).unwrap().properness_residual() < 1e-12);
        let mu = MarkovMeasure::gibbs_from_normalized(&bar, &a).unwrap();
        prop_assert!(dlr_check(&mu, &bar, n).unwrap() <= 1e-12);
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise(a in alphabet(), seed in any::<u64>()) {
        let mu = MarkovMeasure::random_markov(&a, seed).unwrap();
        let nu = MarkovMeasure::random_markov(&a, !seed).unwrap();
        let n = 14 - 2 * a.len();
        let par = relative_entropy_volume(&mu, &nu, n).unwrap();
        let seq = exec::sequential(|| relative_entropy_volume(&mu, &nu, n).unwrap());
        prop_assert_eq!(par, seq);
    }

    #[test]
    fn markov_measures_are_shift_invariant(a in alphabet(), seed in any::<u64>(), memory in 1usize..3) {
        let mu = MarkovMeasure::random_markov_with_memory(&a, memory, seed).unwrap();
        prop_assert!(mu.shift_invariance_residual() < 1e-12);
        let total: f64 = cylinder_weights(&mu, 4).unwrap().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn measure_records_roundtrip(a in alphabet(), seed in any::<u64>()) {
        let mu = MarkovMeasure::random_markov(&a, seed).unwrap();
        let json = serde_json::to_string(&mu.to_record()).unwrap();
        let record: MeasureRecord = serde_json::from_str(&json).unwrap();
        let back = MarkovMeasure::from_record(&a, &record).unwrap();
        prop_assert_eq!(back.joint(), mu.joint());
    }

    #[test]
    fn potentials_roundtrip((_, f) in setup()) {
        let json = serde_json::to_string(&f).unwrap();
        let back: Potential = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn word_indices_roundtrip(m in 2usize..6, n in 1usize..8, seed in any::<u64>()) {
        let index = (seed % (m.pow(n as u32) as u64)) as usize;
        let mut w = vec![0; n];
        decode_word(index, m, &mut w);
        prop_assert_eq!(word_index(&w, m), index);
    }

    #[test]
    fn concat_then_shift_recovers_the_tail(
        x in prop::collection::vec(0usize..3, 0..6),
        period in prop::collection::vec(0usize..3, 1..4),
        i in 0usize..20,
    ) {
        let y = Sequence::periodic(period).unwrap();
        let z = Sequence::concat(&x, &y);
        prop_assert_eq!(z.take(x.len()), x.clone());
        prop_assert_eq!(z.at(x.len() + i), y.at(x.len() + i));
        prop_assert_eq!(z.shift_by(x.len()).at(i), z.at(x.len() + i));
    }

    #[test]
    fn walters_modulus_of_depth_two_vanishes((a, f) in setup()) {
        let _ = a;
        if f.depth() == 2 {
            for j in 1..4 {
                prop_assert_eq!(f.walters_modulus(6, j).unwrap(), 0.0);
            }
        }
    }
}
