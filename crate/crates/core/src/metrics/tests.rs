use super::*;
use crate::ldpc::sample_code;
use proptest::prelude::*;

// Reference values computed independently with 30-digit mpmath.
const Q_0_09: f64 = 0.132_232_865_820_280_1;
const E_0_09: f64 = 0.020_853_658_536_585_37;
const KTR_0_09: f64 = 0.103_729_330_712_874_3;
const KREAL_0_09: f64 = 0.063_530_182_935_897_02;
const CAP_0_05: f64 = 0.427_206_085_768_087_7;
const CAP_0_11: f64 = 0.000_168_083_670_944_008_7;
const KREAL_0_10: f64 = -0.055_240_085_575_882_75;
const KREAL_0_10_HALF: f64 = 0.031_004_406_410_718_78;
const KTR_0_10_HALF: f64 = 0.050_007_168_648_195_84;

#[test]
fn capacity_values() {
    assert_eq!(secret_capacity_bb84(0.0).unwrap(), 1.0);
    assert!((secret_capacity_bb84(0.05).unwrap() - CAP_0_05).abs() < 1e-12);
    let at_11 = secret_capacity_bb84(0.11).unwrap();
    assert!((at_11 - CAP_0_11).abs() < 1e-12);
    assert!(at_11.abs() < 2e-3);
    assert!(secret_capacity_bb84(0.5).is_err());
    assert!(secret_capacity_bb84(-0.1).is_err());
}

#[test]
fn real_key_rate_values() {
    assert!((key_rate_real(0.09, 0.5 / h(0.09)).unwrap() - KREAL_0_09).abs() < 1e-12);
    assert!((key_rate_real(0.09, 1.146).unwrap() - 0.0633).abs() < 1e-4);
    let k = key_rate_real(0.10, 1.25).unwrap();
    assert!((k - KREAL_0_10).abs() < 1e-12);
    assert!(k < 0.0);
    assert!(key_rate_real(0.1, 0.9).is_err());
    assert!(key_rate_real(0.0, 1.1).is_err());
}

#[test]
fn eve_error_value() {
    assert!((eve_error(0.09).unwrap() - Q_0_09).abs() < 1e-11);
    assert_eq!(eve_error(0.0).unwrap(), 0.5);
}

#[test]
fn randomized_rate_at_the_rate_half_threshold() {
    let b = 0.1071;
    let f_b = 0.5 / h(b);
    assert!((f_b - 1.018110).abs() < 1e-6);
    assert!((randomization_flip(0.09, b).unwrap() - E_0_09).abs() < 1e-15);
    let k_tr = key_rate_randomized(0.09, b, f_b).unwrap();
    assert!((k_tr - KTR_0_09).abs() < 1e-10);
    assert!(k_tr > key_rate_real(0.09, 0.5 / h(0.09)).unwrap());
    assert!(key_rate_randomized(0.11, 0.1, 1.0).is_err());
}

#[test]
fn randomized_rate_can_be_negative() {
    // f(b) h(b) of 0.9 exceeds h of Eve's effective error at p = 0.1
    let k = key_rate_randomized(0.1, 0.1071, 0.9 / h(0.1071)).unwrap();
    assert!(k < 0.0);
}

#[test]
fn model_collects_the_operating_point() {
    let m = KeyRateModel::new(0.09, 0.5 / h(0.09), Some(0.1071)).unwrap();
    assert!((m.q - Q_0_09).abs() < 1e-11);
    assert!((m.e.unwrap() - E_0_09).abs() < 1e-15);
    assert!((m.k_real().unwrap() - KREAL_0_09).abs() < 1e-12);
    assert!((m.k_tr(0.5 / h(0.1071)).unwrap().unwrap() - KTR_0_09).abs() < 1e-10);
    let plain = KeyRateModel::new(0.09, 1.2, None).unwrap();
    assert_eq!(plain.k_tr(1.0).unwrap(), None);
    assert!(KeyRateModel::new(0.12, 1.2, Some(0.1)).is_err());
}

#[test]
fn ldpc_curve_has_the_saw_shape() {
    let reg = CodeRegistry::bundled();
    let g = grid(0.001, 0.12, 0.001).unwrap();
    let points = ldpc_curve(&reg, &g, None).unwrap();
    let saw: Vec<&CurvePoint> = points.iter().filter(|p| p.scheme == Scheme::Ldpc).collect();
    // no code beyond the largest threshold
    assert!(saw.iter().all(|p| p.p < 0.1071));
    for w in saw.windows(2) {
        let (a, b) = (w[0], w[1]);
        let same_code = reg.select_code(a.p).unwrap().rate == reg.select_code(b.p).unwrap().rate;
        if same_code {
            assert!(b.f < a.f, "f rose within a code at p = {}", b.p);
        } else {
            assert!(b.f > a.f, "no jump at the switch to p = {}", b.p);
        }
    }
    for e in reg.entries() {
        let f_b = ldpc_efficiency(e.rate, e.threshold, None);
        assert!(f_b >= 1.0);
    }
    let at_half = ldpc_efficiency(0.5, 0.1071, None);
    assert!((at_half - 1.018110).abs() < 1e-6);
}

#[test]
fn randomized_curve_is_continuous_within_a_code() {
    let reg = CodeRegistry::bundled();
    let g = grid(0.005, 0.107, 0.001).unwrap();
    let points = ldpc_curve(&reg, &g, None).unwrap();
    let rnd: Vec<&CurvePoint> = points
        .iter()
        .filter(|p| p.scheme == Scheme::LdpcRandomized)
        .collect();
    for w in rnd.windows(2) {
        let same = reg.select_code(w[0].p).unwrap().rate == reg.select_code(w[1].p).unwrap().rate;
        if same {
            let jump = (w[1].k_tr.unwrap() - w[0].k_tr.unwrap()).abs();
            assert!(jump < 1e-2, "jump {jump} at p = {}", w[1].p);
        }
    }
}

#[test]
fn randomization_at_the_threshold_matches_the_plain_rate() {
    // p = b: e = 0, and K_tr = 1 - h(p) - f h(p) = K_real
    for p in [0.02, 0.05, 0.1] {
        let f = 1.1;
        let k_tr = key_rate_randomized(p, p, f).unwrap();
        assert!((k_tr - key_rate_real(p, f).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn csv_rows() {
    let pts = cascade_curve(&[(0.05, 1.16)]).unwrap();
    let mut rows = pts.clone();
    // p = 0.1 falls to the rate 0.5 code
    rows.extend(ldpc_curve(&CodeRegistry::bundled(), &[0.1], None).unwrap());
    let text = curve_csv(&rows);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "p,scheme,f,K_real,K_tr,secure");
    assert!(lines[1].starts_with("0.050000,cascade,1.160000,"));
    assert!(lines[1].ends_with(",,true"));
    assert_eq!(
        lines[2],
        format!("0.100000,ldpc,{:.6},{KREAL_0_10_HALF:.6},,true", 0.5 / h(0.1))
    );
    assert_eq!(
        lines[3],
        format!("0.100000,ldpc_randomized,{:.6},,{KTR_0_10_HALF:.6},true", 0.5 / h(0.1071))
    );
    let negative = cascade_curve(&[(0.1, 1.25)]).unwrap();
    assert!(!negative[0].secure());
    assert!(negative[0].csv_row().ends_with(",false"));
}

#[test]
fn crossings_and_grids() {
    assert_eq!(zero_crossing(&[(0.0, 1.0), (1.0, -1.0)]), Some(0.5));
    assert_eq!(zero_crossing(&[(0.0, 1.0), (1.0, 0.5)]), None);
    assert_eq!(zero_crossing(&[(0.0, -1.0), (1.0, -2.0)]), None);
    assert_eq!(grid(0.01, 0.05, 0.01).unwrap().len(), 5);
    assert_eq!(grid(0.1, 0.1, 0.01).unwrap(), vec![0.1]);
    assert!(grid(0.1, 0.0, 0.01).is_err());
    assert!(grid(0.0, 0.1, 0.0).is_err());
}

#[test]
fn trial_harnesses_are_reproducible() {
    let a = cascade_trials(0.03, 2000, 6, Seed(1)).unwrap();
    let b = cascade_trials(0.03, 2000, 6, Seed(1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trials, 6);
    assert!(a.mean_f > 1.0 && a.mean_f < 1.6);

    let dd = crate::degree::DegreeDistribution::regular(3, 6).unwrap();
    let code = sample_code(&dd, 2000, Seed(2)).unwrap();
    let cfg = BpConfig::default();
    let l = ldpc_trials(&code, 0.03, 6, Seed(3), &cfg).unwrap();
    assert_eq!(l, ldpc_trials(&code, 0.03, 6, Seed(3), &cfg).unwrap());
    assert_eq!(l.mean_rounds, 1.0);
    assert_eq!(l.mean_leaked, 1000.0 + HASH_BITS as f64);
    assert_eq!(l.undetected, 0);

    let empty = cascade_trials(0.03, 100, 0, Seed(1)).unwrap();
    assert_eq!((empty.trials, empty.success_rate()), (0, 0.0));
}

proptest! {
    #[test]
    fn eve_error_solves_its_equation(p in 0.0f64..0.49) {
        let q = eve_error(p).unwrap();
        prop_assert!(q > 0.0 && q <= 0.5);
        prop_assert!((h(q) - (1.0 - h(p))).abs() < 1e-9);
    }

    #[test]
    fn perfect_reconciliation_reaches_capacity(p in 0.001f64..0.49) {
        prop_assert_eq!(key_rate_real(p, 1.0).unwrap(), secret_capacity_bb84(p).unwrap());
    }

    #[test]
    fn flip_lands_on_the_threshold(p in 0.0f64..0.3, gap in 0.0f64..0.19) {
        let b = p + gap;
        let e = randomization_flip(p, b).unwrap();
        prop_assert!((0.0..0.5).contains(&e));
        prop_assert!((p + e - 2.0 * p * e - b).abs() < 1e-12);
    }
}
