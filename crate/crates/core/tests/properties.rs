use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rrt_cut::cutter::{exact_pmf_for_tree, isolate, select_labels, LabelSet, Rule};
use rrt_cut::exactdist::{pmf, ExactPmf};
use rrt_cut::montecarlo::{run_experiment, run_replicate_direct, ExperimentConfig, Sampler, Splitter};
use rrt_cut::numeric::Rational;
use rrt_cut::series::{BivariateSeries, Poly};
use rrt_cut::splitprob::{table_mass, JointKind};
use rrt_cut::tree::{grow_random, RecursiveTree};

fn rule() -> impl Strategy<Value = Rule> {
    prop_oneof![Just(Rule::First), Just(Rule::Last), Just(Rule::Random)]
}

fn rule_n_ell(max_n: usize) -> impl Strategy<Value = (Rule, usize, usize)> {
    (rule(), 1..=max_n).prop_flat_map(|(r, n)| (Just(r), Just(n), 1..=n))
}

fn small_series(z: usize) -> impl Strategy<Value = BivariateSeries> {
    prop::collection::vec(prop::collection::vec(-4i64..5, 0..3), z + 1)
        .prop_map(move |cs| BivariateSeries::from_coeffs(z, cs.iter().map(|c| Poly::from_ints(c)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grown_trees_are_recursive(n in 1usize..300, seed: u64) {
        let t = grow_random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(t.size(), n);
        prop_assert_eq!(t.edge_count(), n - 1);
        for i in 2..=n {
            let p = t.parent(i).unwrap();
            prop_assert!(p >= 1 && p < i);
        }
        let again: RecursiveTree = t.to_string().parse().unwrap();
        prop_assert_eq!(again, t);
    }

    #[test]
    fn exact_laws_are_distributions((rule, n, ell) in rule_n_ell(25)) {
        let p = pmf::<Rational>(rule, n, ell).unwrap();
        let total = p.probs().iter().fold(Rational::zero(), |a, x| a + x);
        prop_assert!(total.is_one());
        prop_assert!(p.probs().iter().all(|x| *x >= Rational::zero()));
        if n == 1 {
            prop_assert_eq!(p.probs().len(), 1);
        } else {
            prop_assert!(p.prob(0).is_zero());
            prop_assert!(p.probs().len() <= n);
        }
        if ell == n {
            // every edge has to go
            prop_assert!(p.prob(n - 1).is_one());
        }
    }

    #[test]
    fn float_backend_tracks_rationals((rule, n, ell) in rule_n_ell(24)) {
        let exact = pmf::<Rational>(rule, n, ell).unwrap().to_f64();
        let float = pmf::<f64>(rule, n, ell).unwrap();
        prop_assert_eq!(exact.probs().len(), float.probs().len());
        for (a, b) in exact.probs().iter().zip(float.probs()) {
            prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn stirling_moments_agree((rule, n, ell) in rule_n_ell(20), s in 0usize..5) {
        let p = pmf::<Rational>(rule, n, ell).unwrap();
        prop_assert_eq!(p.raw_moment(s), p.direct_raw_moment(s));
    }

    #[test]
    fn json_round_trip((rule, n, ell) in rule_n_ell(20)) {
        let p = pmf::<Rational>(rule, n, ell).unwrap();
        let text = serde_json::to_string(&p.to_json()).unwrap();
        let back = ExactPmf::<Rational>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(&back, &p);
        let f = p.to_f64();
        let text = serde_json::to_string(&f.to_json()).unwrap();
        let back = ExactPmf::<f64>::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn joint_tables_have_unit_mass(n in 2usize..30, ell_frac in 0.0f64..1.0) {
        let ell = 1 + ((n - 1) as f64 * ell_frac) as usize;
        for kind in [JointKind::R, JointKind::L, JointKind::Y] {
            prop_assert!(table_mass(kind, n, ell).unwrap().is_one(), "{:?} n={} l={}", kind, n, ell);
        }
    }

    #[test]
    fn simulated_counts_lie_in_exact_support(n in 2usize..8, seed: u64, rule in rule()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = grow_random(n, &mut rng).unwrap();
        let ell = 1 + (seed as usize) % n;
        let s = select_labels(rule, n, ell, &mut rng).unwrap();
        let law = exact_pmf_for_tree(&t, &s).unwrap();
        for _ in 0..20 {
            let rec = isolate(&t, &s, &mut rng, true).unwrap();
            prop_assert!(law.prob(rec.cuts as usize) > Rational::zero());
            prop_assert_eq!(rec.trace.unwrap().len() as u64, rec.cuts);
        }
    }

    #[test]
    fn splitting_counts_stay_in_range(n in 2u64..5000, seed: u64, ranks in prop::collection::btree_set(1u32..5000, 1..5)) {
        let ranks: Vec<u32> = ranks.into_iter().filter(|&r| r as u64 <= n).collect();
        prop_assume!(!ranks.is_empty());
        let cuts = Splitter::default().run(n, &ranks, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(cuts >= 1 && cuts < n);
        let k = ranks.len() as u64;
        let cuts = Splitter::default().run_uniform(n, k, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(cuts >= 1 && cuts < n);
        if k == n {
            prop_assert_eq!(cuts, n - 1);
        }
    }

    #[test]
    fn replicates_are_reproducible((rule, n, ell) in rule_n_ell(60), seed: u64, index in 0u64..50) {
        let cfg = ExperimentConfig::new(rule, n, ell, 1, seed);
        let a = run_replicate_direct(&cfg, index, true).unwrap();
        let b = run_replicate_direct(&cfg, index, false).unwrap();
        prop_assert_eq!(a.cuts, b.cuts);
    }

    #[test]
    fn experiments_ignore_worker_count((rule, n, ell) in rule_n_ell(500), seed: u64, workers in 1usize..5) {
        for sampler in [Sampler::Direct, Sampler::Splitting] {
            let mut cfg = ExperimentConfig::new(rule, n, ell, 64, seed);
            cfg.sampler = sampler;
            let base = run_experiment(&cfg).unwrap();
            cfg.workers = Some(workers);
            prop_assert_eq!(run_experiment(&cfg).unwrap().cuts, base.cuts);
        }
    }

    #[test]
    fn label_sets_validate(labels in prop::collection::vec(0u32..12, 0..6), n in 1usize..10) {
        let ok = !labels.is_empty()
            && labels.iter().all(|&l| l >= 1 && l as usize <= n)
            && {
                let mut s = labels.clone();
                s.sort();
                s.dedup();
                s.len() == labels.len()
            };
        prop_assert_eq!(LabelSet::new(labels, n).is_ok(), ok);
    }

    #[test]
    fn series_ring_laws(a in small_series(6), b in small_series(6), c in small_series(6)) {
        let left = a.add(&b).unwrap().mul(&c).unwrap();
        let right = a.mul(&c).unwrap().add(&b.mul(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert!(a.add(&a.neg()).unwrap().is_zero());
        prop_assert_eq!(a.mul(&BivariateSeries::one(6)).unwrap(), a.clone());
    }

    #[test]
    fn integration_inverts_differentiation(a in small_series(7)) {
        let back = a.integrate_z().differentiate_z().unwrap();
        prop_assert_eq!(back, a.clone());
        let d = a.differentiate_z().unwrap().integrate_z();
        let mut expected = a.coeffs().to_vec();
        expected[0] = Poly::zero();
        prop_assert_eq!(d, BivariateSeries::from_coeffs(7, expected));
    }
}
