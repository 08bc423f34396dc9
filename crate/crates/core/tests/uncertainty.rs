use nonclass::analysis::{AnalysisConfig, Pipeline};
use nonclass::criteria::{CriterionResult, Family, Scope};
use nonclass::data::JointHistogram;
use nonclass::moments::factorial_moments;
use nonclass::sim::{sample_histogram, Scenario};
use nonclass::uncertainty::{bootstrap, bootstrap_with};
use nonclass::Result;

fn cross_moment(h: &JointHistogram) -> Result<Vec<CriterionResult>> {
    let t = factorial_moments(&h.to_distribution()?, 2)?;
    let v = t.get(1, 1);
    Ok(vec![CriterionResult {
        id: "WsWi".into(),
        family: Family::M,
        scope: Scope::Global,
        order: 2,
        value: v,
        normalized: v,
        stderr: None,
        violated: false,
        ncd: None,
        ncd_bracketed: None,
        redundant: false,
    }])
}

#[test]
fn stderr_shrinks_like_inverse_root_frames() {
    let (_, f) = Scenario::reference().exact().unwrap();
    let small = sample_histogram(&f, 100_000, 11).unwrap();
    let large = sample_histogram(&f, 200_000, 12).unwrap();
    let a = bootstrap_with(&small, 1000, 5, cross_moment).unwrap().stderr["WsWi"];
    let b = bootstrap_with(&large, 1000, 6, cross_moment).unwrap().stderr["WsWi"];
    let ratio = a / b;
    assert!((1.30..=1.53).contains(&ratio), "ratio {ratio}");
}

#[test]
fn bootstrap_is_reproducible() {
    let (_, f) = Scenario::reference().exact().unwrap();
    let h = sample_histogram(&f, 20_000, 1).unwrap();
    let pipeline = Pipeline::direct(AnalysisConfig { families: vec![Family::E], ncd: None, ..AnalysisConfig::default() });
    let a = bootstrap(&h, &pipeline, 20, 9).unwrap();
    let b = bootstrap(&h, &pipeline, 20, 9).unwrap();
    assert_eq!(a, b);
    let c = bootstrap(&h, &pipeline, 20, 10).unwrap();
    assert_ne!(a.stderr, c.stderr);
    assert_eq!(a.failures, 0);
}

#[test]
fn e001_violation_is_many_sigma() {
    let out = Scenario::reference().run().unwrap();
    let pipeline = Pipeline::direct(AnalysisConfig { families: vec![Family::E], ncd: None, ..AnalysisConfig::default() });
    let results = pipeline.run(&out.histogram).unwrap();
    let s = bootstrap(&out.histogram, &pipeline, 100, 2).unwrap();
    let e = results.iter().find(|r| r.id == "E_001").unwrap();
    let sigma = s.normalized_stderr["E_001"];
    assert!(e.normalized < -5.0 * sigma, "{} vs sigma {sigma}", e.normalized);
}
