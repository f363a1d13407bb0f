use super::*;
use crate::degree::CodeRegistry;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn reg36() -> DegreeDistribution {
    DegreeDistribution::regular(3, 6).unwrap()
}

fn fast() -> DensityEvolution {
    DensityEvolution::new(DensityEvolutionConfig::fast()).unwrap()
}

fn certified() -> DensityEvolution {
    DensityEvolution::new(DensityEvolutionConfig::default()).unwrap()
}

/// Sample-based density evolution with exact boxplus arithmetic. Shares no
/// code with the quantized engine.
fn population_error(dv: usize, dc: usize, p: f64, samples: usize, iters: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let l0 = ((1.0 - p) / p).ln();
    let chan = |rng: &mut ChaCha8Rng| if rng.random_bool(p) { -l0 } else { l0 };
    let mut v: Vec<f64> = (0..samples).map(|_| chan(&mut rng)).collect();
    let mut err = 1.0;
    for _ in 0..iters {
        let c: Vec<f64> = (0..samples)
            .map(|_| {
                let t: f64 = (0..dc - 1)
                    .map(|_| (v[rng.random_range(0..samples)] / 2.0).tanh())
                    .product();
                2.0 * t.clamp(-1.0 + 1e-15, 1.0 - 1e-15).atanh()
            })
            .collect();
        v = (0..samples)
            .map(|_| {
                chan(&mut rng) + (0..dv - 1).map(|_| c[rng.random_range(0..samples)]).sum::<f64>()
            })
            .collect();
        err = v.iter().filter(|&&x| x < 0.0).count() as f64 / samples as f64;
        if err == 0.0 {
            break;
        }
    }
    err
}

#[test]
fn population_oracle_brackets_regular_threshold() {
    assert!(population_error(3, 6, 0.070, 50_000, 200) < 1e-3);
    assert!(population_error(3, 6, 0.095, 50_000, 200) > 1e-2);
    let de = fast();
    assert!(de.de_iterate(&reg36(), 0.070).unwrap().converged);
    assert!(!de.de_iterate(&reg36(), 0.095).unwrap().converged);
}

#[test]
fn regular_far_below_and_above_threshold() {
    let de = certified();
    let below = de.de_iterate(&reg36(), 0.02).unwrap();
    assert!(below.converged);
    assert!(below.error < 1e-7);
    let above = de.de_iterate(&reg36(), 0.12).unwrap();
    assert!(!above.converged);
    assert!(above.error > 0.01);
}

#[test]
fn noiseless_channel_converges_immediately() {
    let out = certified().de_iterate(&reg36(), 0.0).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, 1);
    assert!(out.error < 1e-12, "{}", out.error);
}

#[test]
fn regular_threshold_matches_classical_value() {
    let r = certified().find_threshold(&reg36()).unwrap();
    assert!((r.threshold - 0.084).abs() <= 0.002, "{}", r.threshold);
    assert!(r.width <= 1e-4);
    assert!(r.iterations() > 0);
    // 1 probe at the bracket end, then bisection down to the width
    assert_eq!(r.probes.len(), 1 + 11);
}

#[test]
fn convergence_is_monotone_in_p() {
    let de = fast();
    let dd = CodeRegistry::bundled().entry_for_rate(0.5).unwrap().dd.clone();
    let mut seen_failure = false;
    for s in 0..=24 {
        let p = 0.06 + 0.002 * s as f64;
        let ok = de.de_iterate(&dd, p).unwrap().converged;
        assert!(!(ok && seen_failure), "converges at {p} after failing below");
        seen_failure |= !ok;
    }
    assert!(seen_failure);
}

#[test]
fn halving_step_moves_threshold_less_than_width() {
    let at = |step: f64| {
        let cfg = DensityEvolutionConfig {
            llr_step: step,
            bisection_width: 5e-4,
            ..DensityEvolutionConfig::default()
        };
        DensityEvolution::new(cfg).unwrap().find_threshold(&reg36()).unwrap()
    };
    let coarse = at(1.0 / 32.0);
    let fine = at(1.0 / 64.0);
    assert!(
        (coarse.threshold - fine.threshold).abs() <= coarse.width.max(fine.width),
        "{} vs {}",
        coarse.threshold,
        fine.threshold
    );
}

#[test]
fn fast_preset_reproduces_listed_thresholds() {
    let de = DensityEvolution::new(DensityEvolutionConfig {
        max_iterations: 2000,
        target_error: 1e-7,
        bisection_width: 1e-4,
        ..DensityEvolutionConfig::fast()
    })
    .unwrap();
    for e in CodeRegistry::bundled().entries() {
        let r = de.find_threshold(&e.dd).unwrap();
        assert!(
            (r.threshold - e.threshold).abs() <= 0.002,
            "rate {}: {} vs {}",
            e.rate,
            r.threshold,
            e.threshold
        );
    }
}

#[test]
fn threshold_above_agrees_with_full_search() {
    let de = fast();
    let full = de.find_threshold(&reg36()).unwrap();
    let partial = de.threshold_above(&reg36(), 0.05).unwrap().unwrap();
    assert!((full.threshold - partial).abs() <= de.config().bisection_width);
    assert_eq!(de.threshold_above(&reg36(), 0.15).unwrap(), None);
}

#[test]
fn channel_density_is_symmetric() {
    let de = certified();
    for p in [0.01, 0.05, 0.11, 0.3] {
        let d = de.channel_density(p);
        assert!((d.total() - 1.0).abs() < 1e-12);
        assert!((d.error_probability() - p).abs() < 1e-12);
        let mean: f64 = d
            .masses()
            .iter()
            .enumerate()
            .map(|(i, m)| m * d.value(i))
            .sum();
        let l0 = ((1.0 - p) / p).ln();
        assert!((mean - (1.0 - 2.0 * p) * l0).abs() < 1e-9);
    }
}

#[test]
fn phi_is_an_involution() {
    for x in [1e-3, 0.1, 1.0, 5.0, 20.0, 30.0] {
        assert!((phi(phi(x)) - x).abs() < 1e-9 * x.max(1.0), "{x}");
    }
}

#[test]
fn shannon_gap_examples() {
    // h^-1(0.5) = 0.11002786443836, h^-1(0.1) = 0.0129868620555178
    assert!((shannon_gap(0.5, 0.1071).unwrap() - 0.00292786443836).abs() < 1e-8);
    assert!((shannon_gap(0.9, 0.0109).unwrap() - 0.0020868620555178).abs() < 1e-8);
    let exact = inverse_binary_entropy(0.5, 1e-12).unwrap();
    assert!(shannon_gap(0.5, exact).unwrap().abs() < 1e-8);
    assert!(shannon_gap(1.0, 0.1).is_err());
    assert!(shannon_gap(0.0, 0.1).is_err());
}

#[test]
fn csv_row_format() {
    let r = ThresholdResult {
        threshold: 0.1071,
        width: 1e-4,
        probes: vec![ThresholdProbe {
            p: 0.1071,
            outcome: DeOutcome {
                converged: true,
                error: 5e-8,
                iterations: 812,
            },
        }],
    };
    assert_eq!(r.csv_row(0.5).unwrap(), "0.500000,0.107100,0.002928,812");
    assert_eq!(
        ThresholdResult::CSV_HEADER,
        "rate,threshold,gap_to_shannon,iterations"
    );
}

#[test]
fn rejects_bad_settings_and_inputs() {
    let bad = DensityEvolutionConfig {
        llr_step: 0.0,
        ..Default::default()
    };
    assert!(DensityEvolution::new(bad).is_err());
    let bad = DensityEvolutionConfig {
        bracket: (0.2, 0.1),
        ..Default::default()
    };
    assert!(DensityEvolution::new(bad).is_err());
    assert!(fast().de_iterate(&reg36(), 0.5).is_err());
    assert!(fast().de_iterate(&reg36(), -0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn never_beats_shannon(dv in 3usize..6, extra in 1usize..8) {
        let dc = dv + extra;
        let dd = DegreeDistribution::regular(dv, dc).unwrap();
        let r = fast().find_threshold(&dd).unwrap();
        let limit = inverse_binary_entropy(1.0 - dd.design_rate(), 1e-9).unwrap();
        prop_assert!(r.threshold <= limit + 1e-3, "({dv},{dc}) {} > {limit}", r.threshold);
    }
}
