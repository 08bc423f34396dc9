//! Forward model: noisy twin beam, camera detection and finite sampling.

mod povm;
mod scenario;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use statrs::function::gamma::ln_gamma;

use crate::data::{DetectorModel, DistributionKind, JointDistribution, JointHistogram, Matrix, TwinBeamModel};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

pub use povm::{povm, povm_exact, povm_rows, PovmMatrix, COMPLETENESS_TOL};
pub use scenario::{DetectorSpec, Scenario, SimulationOutput};

/// Tail mass allowed beyond the photon-number grid.
pub const TAIL_LIMIT: f64 = 1e-8;

fn check_mandel_rice(m: f64, b: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Invalid(format!("Mandel-Rice mode number M = {m} must be positive")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::Invalid(format!("Mandel-Rice mean per mode B = {b} must be non-negative")));
    }
    Ok(())
}

/// `p(n; M, B) = Gamma(n+M) / (n! Gamma(M)) B^n / (1+B)^(n+M)`.
pub fn mandel_rice(n: usize, m: f64, b: f64) -> Result<f64> {
    check_mandel_rice(m, b)?;
    if b == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    let ln_p = ln_gamma(nf + m) - ln_gamma(nf + 1.0) - ln_gamma(m) + nf * b.ln() - (nf + m) * b.ln_1p();
    Ok(ln_p.exp())
}

/// `p(0..=n_max; M, B)` by the term ratio `(n+M)/(n+1) * B/(1+B)`.
pub fn mandel_rice_vec(m: f64, b: f64, n_max: usize) -> Result<Vec<f64>> {
    check_mandel_rice(m, b)?;
    let mut p = Vec::with_capacity(n_max + 1);
    p.push((-m * b.ln_1p()).exp());
    let r = b / (1.0 + b);
    for n in 0..n_max {
        let next = p[n] * (n as f64 + m) / (n as f64 + 1.0) * r;
        p.push(next);
    }
    Ok(p)
}

/// Probability mass above `n_max`.
pub fn mandel_rice_tail(m: f64, b: f64, n_max: usize) -> Result<f64> {
    let p = mandel_rice_vec(m, b, n_max)?;
    let head = crate::numeric::neumaier_sum(p.iter().copied());
    Ok((1.0 - head).max(0.0))
}

/// Smallest grid size whose joint tail stays below `tail`, from the two
/// marginal tails.
pub fn choose_n_max(model: &TwinBeamModel, tail: f64) -> Result<usize> {
    model.validate()?;
    let mut len = 64;
    loop {
        let pp = mandel_rice_vec(model.m_p, model.b_p, len)?;
        let mut found = None;
        let marg_tail = |m: f64, b: f64| -> Result<Vec<f64>> {
            let noise = mandel_rice_vec(m, b, len)?;
            let mut head = CompensatedSum::new();
            let mut tails = Vec::with_capacity(len + 1);
            for n in 0..=len {
                let mut acc = CompensatedSum::new();
                for j in 0..=n {
                    acc.add(noise[n - j] * pp[j]);
                }
                head.add(acc.value());
                tails.push((1.0 - head.value()).max(0.0));
            }
            Ok(tails)
        };
        let ts = marg_tail(model.m_s, model.b_s)?;
        let ti = marg_tail(model.m_i, model.b_i)?;
        for n in 0..=len {
            if ts[n] + ti[n] <= tail {
                found = Some(n);
                break;
            }
        }
        if let Some(n) = found {
            return Ok(n);
        }
        if len > 20_000 {
            return Err(Error::Numerical("no grid size keeps the Mandel-Rice tail small".into()));
        }
        len *= 2;
    }
}

/// Joint photon-number distribution of the paired plus noise model on
/// `0..=n_max` in each beam, renormalized after the tail check.
pub fn twinbeam_distribution(model: &TwinBeamModel, n_max: usize) -> Result<JointDistribution> {
    let probs = twinbeam_weights(model, n_max)?;
    let mass = crate::numeric::neumaier_sum(probs.as_slice().iter().copied());
    let tail = 1.0 - mass;
    if tail > TAIL_LIMIT {
        return Err(Error::TailMass { mass: tail, limit: TAIL_LIMIT });
    }
    Ok(JointDistribution::normalized(probs, DistributionKind::PhotonNumber)?.0)
}

/// The truncated convolution itself, not renormalized.
pub fn twinbeam_weights(model: &TwinBeamModel, n_max: usize) -> Result<Matrix<f64>> {
    model.validate()?;
    let pp = mandel_rice_vec(model.m_p, model.b_p, n_max)?;
    let ps = mandel_rice_vec(model.m_s, model.b_s, n_max)?;
    let pi = mandel_rice_vec(model.m_i, model.b_i, n_max)?;
    let probs = Matrix::from_fn(n_max + 1, n_max + 1, |a, b| {
        let mut acc = CompensatedSum::new();
        for n in 0..=a.min(b) {
            acc.add(ps[a - n] * pi[b - n] * pp[n]);
        }
        acc.value()
    });
    Ok(probs)
}

/// `f = T_s p T_i^T` with each POVM sized to the distribution's grid.
pub fn detect(p: &JointDistribution, det_s: &DetectorModel, det_i: &DetectorModel) -> Result<JointDistribution> {
    let c_s = ((p.rows() - 1) + 20).min(det_s.pixels as usize);
    let c_i = ((p.cols() - 1) + 20).min(det_i.pixels as usize);
    let ts = povm(det_s, c_s, p.rows() - 1)?;
    let ti = povm(det_i, c_i, p.cols() - 1)?;
    detect_with(p, &ts, &ti)
}

pub fn detect_with(p: &JointDistribution, ts: &PovmMatrix, ti: &PovmMatrix) -> Result<JointDistribution> {
    if ts.n_max() + 1 != p.rows() || ti.n_max() + 1 != p.cols() {
        return Err(Error::Invalid(format!(
            "POVM grids {}x{} do not match distribution grid {}x{}",
            ts.n_max() + 1,
            ti.n_max() + 1,
            p.rows(),
            p.cols()
        )));
    }
    let f = ts.forward(p.probs(), ti);
    let (d, deficit) = JointDistribution::normalized(f, DistributionKind::Photocount)?;
    if deficit.abs() > 1e-8 {
        return Err(Error::Completeness { n: p.rows().max(p.cols()) - 1, sum: 1.0 - deficit });
    }
    Ok(d)
}

/// Multinomial draw of `frames` events, reproducible for a fixed seed.
pub fn sample_histogram(f: &JointDistribution, frames: u64, seed: u64) -> Result<JointHistogram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(f, frames, &mut rng)
}

pub fn sample_with(f: &JointDistribution, frames: u64, rng: &mut impl rand::Rng) -> Result<JointHistogram> {
    if frames == 0 {
        return Err(Error::Invalid("frames must be positive".into()));
    }
    let probs = f.probs().as_slice();
    let counts = multinomial(probs, frames, rng)?;
    let m = Matrix::from_fn(f.rows(), f.cols(), |r, c| counts[r * f.cols() + c]);
    JointHistogram::new(m, frames)
}

/// Sequential-binomial multinomial sampler.
pub fn multinomial(probs: &[f64], trials: u64, rng: &mut impl rand::Rng) -> Result<Vec<u64>> {
    let mut out = vec![0u64; probs.len()];
    let mut left = trials;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            out[k] = left;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let draw = Binomial::new(left, q).map_err(|e| Error::Numerical(format!("binomial sampler: {e}")))?.sample(rng);
        out[k] = draw;
        left -= draw;
        mass -= p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mandel_rice_closed_forms() {
        assert!((mandel_rice(0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        for n in 0..20 {
            let p = mandel_rice(n, 1.0, 1.0).unwrap();
            assert!((p - 0.5f64.powi(n as i32 + 1)).abs() < 1e-14);
        }
        assert!(mandel_rice(1, 0.0, 1.0).is_err());
        assert_eq!(mandel_rice(0, 2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn mandel_rice_vector_agrees() {
        let v = mandel_rice_vec(270.0, 0.032, 60).unwrap();
        for (n, p) in v.iter().enumerate() {
            let direct = mandel_rice(n, 270.0, 0.032).unwrap();
            assert!((p - direct).abs() <= 1e-12 * direct.max(1e-300), "{n}");
        }
        let mean: f64 = v.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((mean - 8.64).abs() < 1e-6);
    }

    #[test]
    fn pure_pairing_is_diagonal() {
        let model = TwinBeamModel { m_p: 3.0, b_p: 0.5, m_s: 1.0, b_s: 0.0, m_i: 1.0, b_i: 0.0 };
        let d = twinbeam_distribution(&model, 60).unwrap();
        assert!((d.p(2, 2) - mandel_rice(2, 3.0, 0.5).unwrap()).abs() < 1e-12);
        assert_eq!(d.p(2, 3), 0.0);
    }

    #[test]
    fn tail_is_checked() {
        let model = TwinBeamModel { m_p: 270.0, b_p: 0.032, m_s: 0.01, b_s: 7.6, m_i: 0.026, b_i: 5.3 };
        assert!(matches!(twinbeam_distribution(&model, 20), Err(Error::TailMass { .. })));
    }

    #[test]
    fn one_frame_one_cell() {
        let d = JointDistribution::normalized(Matrix::from_fn(3, 3, |_, _| 1.0), DistributionKind::Photocount).unwrap().0;
        let h = sample_histogram(&d, 1, 7).unwrap();
        assert_eq!(h.counts().as_slice().iter().filter(|&&c| c > 0).count(), 1);
        assert!(sample_histogram(&d, 0, 7).is_err());
    }
}
