use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trotterlab::charges::{assemble, density, Branch, ChargeSpec, DeltaPoly, PauliPolynomial, Variant};
use trotterlab::measure::{build_cover, collect_pure, estimate, MeasurementPlan, PauliWord, ShotRecords};
use trotterlab::pauli::{Letter, PauliString};
use trotterlab::sim::{exact_expectation, Counts, StateVector};

fn poly(n: usize, terms: &[(&str, i64)]) -> PauliPolynomial {
    let mut q = PauliPolynomial::new(n);
    for (s, c) in terms {
        assert_eq!(s.len(), n);
        q.add_term(s.parse().unwrap(), &DeltaPoly::constant(*c)).unwrap();
    }
    q
}

fn all_words(n: usize) -> Vec<PauliWord> {
    (0..3usize.pow(n as u32))
        .map(|mut k| {
            let mut l = Vec::new();
            for _ in 0..n {
                l.push(Letter::NON_IDENTITY[k % 3]);
                k /= 3;
            }
            PauliWord::new(l).unwrap()
        })
        .collect()
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1 << n)
        .map(|_| num_complex::Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    StateVector::from_amplitudes(amps).unwrap()
}

fn records(entries: &[(&str, &[(&str, u64)])]) -> ShotRecords {
    ShotRecords {
        records: entries
            .iter()
            .map(|(w, outcomes)| {
                let mut c = Counts::new(w.len());
                for (b, k) in *outcomes {
                    c.add(trotterlab::sim::parse_bitstring(b, w.len()).unwrap(), *k);
                }
                (w.parse().unwrap(), c)
            })
            .collect(),
    }
}

#[test]
fn single_term_cover() {
    let words = build_cover(&poly(2, &[("ZZ", 1)])).unwrap();
    assert_eq!(words, vec!["ZZ".parse::<PauliWord>().unwrap()]);
}

#[test]
fn unconstrained_sites_are_completed_with_z() {
    let words = build_cover(&poly(4, &[("XIII", 1), ("IXII", 2)])).unwrap();
    assert_eq!(words, vec!["XXZZ".parse::<PauliWord>().unwrap()]);
}

#[test]
fn window_cover_is_complete_and_near_minimal() {
    let q = density(1, Branch::Plus).unwrap();
    let words = build_cover(&q).unwrap();
    for (p, _) in q.terms() {
        assert!(words.iter().any(|w| w.contains(p).unwrap()), "{p} uncovered");
    }
    // Exhaustive minimum over subsets of the 27 window words.
    let cands = all_words(3);
    let terms: Vec<&PauliString> = q.terms().map(|(p, _)| p).collect();
    let masks: Vec<u32> = cands
        .iter()
        .map(|w| terms.iter().enumerate().filter(|(_, p)| w.contains(p).unwrap()).fold(0, |m, (i, _)| m | 1 << i))
        .collect();
    let full = (1u32 << terms.len()) - 1;
    let mut minimum = None;
    'size: for k in 1..=cands.len() {
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            if idx.iter().fold(0, |m, &i| m | masks[i]) == full {
                minimum = Some(k);
                break 'size;
            }
            let mut i = k;
            while i > 0 && idx[i - 1] == cands.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    let minimum = minimum.unwrap();
    let largest = masks.iter().map(|m| m.count_ones()).max().unwrap() as usize;
    let harmonic: f64 = (1..=largest).map(|k| 1.0 / k as f64).sum();
    assert!(words.len() >= minimum);
    assert!(words.len() as f64 <= harmonic * minimum as f64, "{} vs {minimum}", words.len());
}

#[test]
fn chain_cover_covers_every_charge_term() {
    for (order, n) in [(1, 4), (1, 8), (2, 8), (3, 8)] {
        for variant in [Variant::Plus, Variant::Dif] {
            let q = assemble(&ChargeSpec::new(order, variant, n).unwrap()).unwrap();
            let words = build_cover(&q).unwrap();
            let plan = MeasurementPlan { words, shots_per_word: 1 };
            plan.covers(&q).unwrap();
            assert_eq!(build_cover(&q).unwrap(), plan.words);
        }
    }
}

#[test]
fn deterministic_outcome_has_zero_uncertainty() {
    let q = poly(2, &[("ZZ", 1)]);
    let plan = MeasurementPlan::with_total_shots(build_cover(&q).unwrap(), 500).unwrap();
    let recs = collect_pure(&StateVector::zero(2).unwrap(), &plan, 3, None).unwrap();
    recs.validate(&plan).unwrap();
    let e = estimate(&recs, &q, 0.0).unwrap();
    assert_eq!(e.value, 1.0);
    assert_eq!(e.std_uncertainty, 0.0);
    assert_eq!(e.terms[0].n_p, 500);
}

#[test]
fn hand_computed_estimate() {
    // Z1 appears in ZZ and ZX; Z1Z2 only in ZZ.
    let q = poly(2, &[("ZI", 2), ("ZZ", 1)]);
    let r = records(&[("ZZ", &[("00", 3), ("11", 1)]), ("ZX", &[("00", 1), ("10", 3)])]);
    let e = estimate(&r, &q, 0.0).unwrap();
    // <Z1> = (3 - 1 + 1 - 3)/8 = 0, <Z1Z2> = (3 + 1)/4 = 1.
    assert!((e.value - 1.0).abs() < 1e-15);
    assert_eq!(e.terms.iter().map(|t| t.n_p).collect::<Vec<_>>(), vec![8, 4]);
    // Z1 with itself: 8 shots of ±1 with mean 0 -> Σ(Π-0)^2 = 8, weight 8/(64·7).
    // Z1Z2 with itself: constant, zero. Cross term: shots in ZZ, Π_Z1 = (1,1,1,-1), Π_ZZ = 1 -> zero.
    let want = 4.0 * 8.0 / (64.0 * 7.0) * 8.0;
    assert!((e.raw_variance - want).abs() < 1e-14);
}

#[test]
fn shared_words_give_covariance_disjoint_words_none() {
    let shared = poly(2, &[("ZI", 1), ("IZ", 1)]);
    let r = records(&[("ZZ", &[("00", 5), ("11", 5)])]);
    let e = estimate(&r, &shared, 0.0).unwrap();
    let single = |t: &str| estimate(&r, &poly(2, &[(t, 1)]), 0.0).unwrap().raw_variance;
    assert!((e.raw_variance - single("ZI") - single("IZ")).abs() > 1e-3);

    let disjoint = poly(2, &[("ZZ", 1), ("XX", 1)]);
    let r2 = records(&[("ZZ", &[("00", 4), ("01", 2)]), ("XX", &[("00", 3), ("10", 3)])]);
    let e2 = estimate(&r2, &disjoint, 0.0).unwrap();
    let a = estimate(&r2, &poly(2, &[("ZZ", 1)]), 0.0).unwrap().raw_variance;
    let b = estimate(&r2, &poly(2, &[("XX", 1)]), 0.0).unwrap().raw_variance;
    assert_eq!(e2.raw_variance, a + b);
}

#[test]
fn single_shot_pairs_are_skipped_with_warning() {
    let q = poly(1, &[("Z", 1)]);
    let r = records(&[("Z", &[("1", 1)])]);
    let e = estimate(&r, &q, 0.0).unwrap();
    assert_eq!(e.value, -1.0);
    assert_eq!(e.std_uncertainty, 0.0);
    assert_eq!(e.warnings.len(), 1);
}

#[test]
fn uncovered_term_is_an_error() {
    let q = poly(2, &[("ZZ", 1), ("XI", 1)]);
    let r = records(&[("ZZ", &[("00", 4)])]);
    assert!(estimate(&r, &q, 0.0).is_err());
    let plan = MeasurementPlan { words: vec!["ZZ".parse().unwrap()], shots_per_word: 4 };
    assert!(plan.covers(&q).is_err());
}

#[test]
fn record_validation() {
    let plan = MeasurementPlan { words: vec!["ZZ".parse().unwrap()], shots_per_word: 5 };
    assert!(records(&[("ZZ", &[("00", 4)])]).validate(&plan).is_err());
    assert!(records(&[("ZZ", &[("00", 5)])]).validate(&plan).is_ok());
    assert!(records(&[("XZ", &[("00", 5)])]).validate(&plan).is_err());
}

#[test]
fn estimator_and_variance_are_unbiased() {
    let n = 4;
    let delta = 0.3f64.tan();
    let q = assemble(&ChargeSpec::new(1, Variant::Plus, n).unwrap()).unwrap();
    let psi = random_state(n, 21);
    let exact = exact_expectation(&psi, &q, delta).unwrap();
    let plan = MeasurementPlan::with_total_shots(build_cover(&q).unwrap(), 2000).unwrap();
    let reps = 800u64;
    let (mut vals, mut vars) = (Vec::new(), Vec::new());
    for r in 0..reps {
        let recs = collect_pure(&psi, &plan, 1000 + r, None).unwrap();
        let e = estimate(&recs, &q, delta).unwrap();
        vals.push(e.value);
        vars.push(e.raw_variance);
    }
    let m = vals.iter().sum::<f64>() / reps as f64;
    let emp = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let mean_var = vars.iter().sum::<f64>() / reps as f64;
    assert!((m - exact).abs() < 4.0 * (emp / reps as f64).sqrt(), "{m} vs {exact}");
    assert!((mean_var / emp - 1.0).abs() < 0.15, "{mean_var} vs {emp}");
}
