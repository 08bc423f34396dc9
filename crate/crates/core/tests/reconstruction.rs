use nonclass::data::{DetectorModel, JointDistribution, JointHistogram, Matrix, TwinBeamModel};
use nonclass::reconstruct::{calibrate, cropped, em_reconstruct, em_with, CalibrationOptions, CalibrationParams, EmOptions};
use nonclass::sim::{detect, povm, twinbeam_distribution};

/// Counts proportional to `f` over a very large number of frames.
fn expected_histogram(f: &JointDistribution, frames: u64) -> JointHistogram {
    let m = cropped(f);
    let counts = Matrix::from_fn(m.rows(), m.cols(), |r, c| (m.get(r, c) * frames as f64).round() as u64);
    let total: u64 = counts.as_slice().iter().sum();
    JointHistogram::new(counts, total.max(frames)).unwrap()
}

fn small_model() -> TwinBeamModel {
    TwinBeamModel { m_p: 4.0, b_p: 0.3, m_s: 1.0, b_s: 0.2, m_i: 1.0, b_i: 0.15 }
}

#[test]
fn em_inverts_an_efficient_detector() {
    let p = twinbeam_distribution(&small_model(), 30).unwrap();
    let det = DetectorModel::new(20_000, 0.9, 1e-7).unwrap();
    let f = detect(&p, &det, &det).unwrap();
    let t = povm(&det, 60, 30).unwrap();
    let opts = EmOptions { accelerate: true, max_iter: 50_000, ..EmOptions::default() };
    let out = em_with(&cropped(&f), &t, &t, &opts).unwrap();
    assert!(out.converged, "{:?}", out.stop);
    let tv = out.distribution.total_variation(&p);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn em_likelihood_never_decreases() {
    let p = twinbeam_distribution(&small_model(), 25).unwrap();
    let det = DetectorModel::new(5000, 0.5, 1e-5).unwrap();
    let h = expected_histogram(&detect(&p, &det, &det).unwrap(), 1_000_000);
    let mut prev = f64::NEG_INFINITY;
    for iters in [1, 2, 5, 10, 50, 200] {
        let opts = EmOptions { n_max: Some(25), max_iter: iters, tol: 1e-300, rel_ll_tol: 0.0, ..EmOptions::default() };
        let out = em_reconstruct(&h, &det, &det, &opts).unwrap();
        assert!(out.log_likelihood >= prev - 1e-12, "{iters}: {} < {prev}", out.log_likelihood);
        prev = out.log_likelihood;
    }
}

#[test]
fn em_output_is_a_distribution_on_the_grid() {
    let p = twinbeam_distribution(&small_model(), 25).unwrap();
    let det = DetectorModel::new(5000, 0.5, 1e-5).unwrap();
    let h = expected_histogram(&detect(&p, &det, &det).unwrap(), 100_000);
    let opts = EmOptions { n_max: Some(20), max_iter: 300, ..EmOptions::default() };
    let out = em_reconstruct(&h, &det, &det, &opts).unwrap();
    let d = out.distribution;
    assert_eq!((d.rows(), d.cols()), (21, 21));
    let total: f64 = d.probs().as_slice().iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(d.probs().as_slice().iter().all(|v| *v >= 0.0));
}

#[test]
fn calibration_recovers_efficiencies_and_pairs() {
    let truth = small_model();
    let det_s = DetectorModel::new(5000, 0.35, 1e-5).unwrap();
    let det_i = DetectorModel::new(5000, 0.30, 1e-5).unwrap();
    let p = twinbeam_distribution(&truth, 40).unwrap();
    let h = expected_histogram(&detect(&p, &det_s, &det_i).unwrap(), 1_000_000_000);
    let init = CalibrationParams {
        eta_s: 0.3,
        eta_i: 0.35,
        twinbeam: TwinBeamModel { m_p: 3.0, b_p: 0.4, m_s: 1.0, b_s: 0.2, m_i: 1.0, b_i: 0.15 },
    };
    // the noise components are held at their true values
    let free = [true, true, true, true, false, false, false, false];
    let opts = CalibrationOptions { starts: 2, max_iter: 800, restarts: 3, n_max: Some(40), free, ..CalibrationOptions::default() };
    let r = calibrate(&h, &init, &det_s, &det_i, &opts).unwrap();
    assert!(r.residual < r.initial_residual);
    assert!((r.params.eta_s - 0.35).abs() < 0.01, "{:?}", r.params);
    assert!((r.params.eta_i - 0.30).abs() < 0.01, "{:?}", r.params);
    let pairs = r.params.twinbeam.mean_pairs();
    assert!((pairs / truth.mean_pairs() - 1.0).abs() < 0.03, "{pairs}");
}

#[test]
fn calibration_rejects_bad_input() {
    let h = JointHistogram::new(Matrix::from_rows(&[vec![5, 1], vec![1, 3]]).unwrap(), 10).unwrap();
    let det = DetectorModel::new(100, 0.5, 0.0).unwrap();
    let init = CalibrationParams { eta_s: 1.5, eta_i: 0.5, twinbeam: small_model() };
    assert!(calibrate(&h, &init, &det, &det, &CalibrationOptions::default()).is_err());
    let init = CalibrationParams { eta_s: 0.5, ..init };
    let none = CalibrationOptions { free: [false; 8], ..CalibrationOptions::default() };
    assert!(calibrate(&h, &init, &det, &det, &none).is_err());
}
