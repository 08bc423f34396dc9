use nonclass::data::{DetectorModel, DistributionKind, JointDistribution, Matrix, TwinBeamModel};
use nonclass::moments::factorial_moments;
use nonclass::sim::{
    choose_n_max, detect, mandel_rice_vec, povm, povm_exact, sample_histogram, twinbeam_distribution, Scenario,
};
use proptest::prelude::*;

fn brute_mandel_rice(n: usize, m: f64, b: f64) -> f64 {
    // Gamma(n+M)/(n! Gamma(M)) via the running product
    let mut coeff = 1.0;
    for j in 0..n {
        coeff *= (m + j as f64) / (j + 1) as f64;
    }
    coeff * (b / (1.0 + b)).powi(n as i32) / (1.0 + b).powf(m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn povm_columns_are_complete(
        pixels in 50u32..8000,
        eta in 0.05f64..0.95,
        dark in 0.0f64..0.2,
        n_max in 0usize..30,
    ) {
        let det = DetectorModel::new(pixels, eta, dark / pixels as f64).unwrap();
        let c_max = (n_max + 25).min(pixels as usize);
        let t = povm(&det, c_max, n_max).unwrap();
        prop_assert!(t.completeness_error() < 1e-8);
        for c in 0..=c_max {
            for n in 0..=n_max {
                prop_assert!((0.0..=1.0).contains(&t.get(c, n)));
            }
        }
    }

    #[test]
    fn povm_matches_rational_sum(eta in 0.1f64..0.9, dark in 0.0f64..0.1, c in 0usize..8, n in 0usize..20) {
        let det = DetectorModel::new(500, eta, dark / 500.0).unwrap();
        let t = povm(&det, 30, 20).unwrap();
        let e = povm_exact(&det, c, n).unwrap();
        prop_assert!((t.get(c, n) - e).abs() <= 1e-12 + 1e-9 * e);
    }

    #[test]
    fn mandel_rice_matches_product_form(m in 0.01f64..300.0, b in 0.001f64..8.0) {
        let v = mandel_rice_vec(m, b, 60).unwrap();
        for (n, p) in v.iter().enumerate().take(40) {
            let e = brute_mandel_rice(n, m, b);
            prop_assert!((p - e).abs() <= 1e-10 * e.max(1e-300) + 1e-300, "n={n}: {p} vs {e}");
        }
    }

    #[test]
    fn twin_beam_means_and_normalization(m_p in 1.0f64..50.0, b_p in 0.01f64..0.2, b_s in 0.1f64..2.0) {
        let model = TwinBeamModel { m_p, b_p, m_s: 0.5, b_s, m_i: 0.3, b_i: 1.0 };
        let n_max = choose_n_max(&model, 1e-12).unwrap();
        let d = twinbeam_distribution(&model, n_max).unwrap();
        let total: f64 = d.probs().as_slice().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let (ms, mi) = d.means();
        let (es, ei) = model.means();
        prop_assert!((ms - es).abs() < 1e-8 * es.max(1.0));
        prop_assert!((mi - ei).abs() < 1e-8 * ei.max(1.0));
    }
}

#[test]
fn detected_mean_follows_efficiency_and_dark_counts() {
    let s = Scenario::reference();
    let (p, f) = s.exact().unwrap();
    let (ds, di) = s.detectors().unwrap();
    let (ns, ni) = p.means();
    let (cs, ci) = f.means();
    // saturation of the 6.5k-pixel arrays costs about n^2 eta^2 / 2N
    assert!((cs - (ds.efficiency * ns + ds.dark_total())).abs() < 0.01, "{cs}");
    assert!((ci - (di.efficiency * ni + di.dark_total())).abs() < 0.01, "{ci}");
    assert!((ns - 8.716).abs() < 0.01 && (ni - 8.778).abs() < 0.01, "{ns} {ni}");
}

#[test]
fn paired_photons_keep_correlation_under_detection() {
    let model = TwinBeamModel { m_p: 10.0, b_p: 0.2, m_s: 1.0, b_s: 0.1, m_i: 1.0, b_i: 0.1 };
    let p = twinbeam_distribution(&model, 60).unwrap();
    let det = DetectorModel::new(5000, 0.4, 0.0).unwrap();
    let f = detect(&p, &det, &det).unwrap();
    let tp = factorial_moments(&p, 2).unwrap();
    let tf = factorial_moments(&f, 2).unwrap();
    // binomial thinning scales factorial moments by eta^(k+l) apart from saturation
    for (k, l) in [(1, 0), (0, 1), (1, 1), (2, 0)] {
        let expect = tp.get(k, l) * 0.4f64.powi((k + l) as i32);
        assert!((tf.get(k, l) - expect).abs() < 2e-3 * expect, "({k},{l}) {} vs {expect}", tf.get(k, l));
    }
}

#[test]
fn histogram_sampling_is_seeded() {
    let f = JointDistribution::new(
        Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]).unwrap(),
        DistributionKind::Photocount,
    )
    .unwrap();
    let a = sample_histogram(&f, 10_000, 3).unwrap();
    let b = sample_histogram(&f, 10_000, 3).unwrap();
    let c = sample_histogram(&f, 10_000, 4).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.total(), 10_000);
    let freq = a.counts().get(1, 1) as f64 / 10_000.0;
    assert!((freq - 0.3).abs() < 5.0 * (0.3f64 * 0.7 / 1e4).sqrt());
}

#[test]
fn scenario_file_round_trips() {
    let s = Scenario::reference();
    let back = Scenario::parse_json(&s.to_json()).unwrap();
    assert_eq!(back, s);
    let on_disk = Scenario::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/twin_beam.json")).unwrap();
    assert_eq!(on_disk.twinbeam, s.twinbeam);
    assert_eq!(on_disk.detectors().unwrap(), s.detectors().unwrap());
}
