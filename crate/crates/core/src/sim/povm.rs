//! Photocount POVM of a multi-pixel camera arm with dark counts.
//!
//! The closed form is an alternating sum whose terms cancel to roughly
//! `(eta / N)^c` relative precision, so it is unusable in floating point
//! beyond a few counts. The matrix is built instead from the pixel
//! occupancy recurrence, which sums only non-negative terms:
//! `Q_n(j)` is the probability that `n` photons fire exactly `j` pixels,
//! and the remaining `N - j` pixels fire on dark counts independently.
//! `povm_exact` evaluates the closed form in rational arithmetic as a check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::data::{DetectorModel, Matrix};
use crate::error::{Error, Result};
use crate::numeric::{ln_choose, CompensatedSum};

pub const COMPLETENESS_TOL: f64 = 1e-8;

/// `T(c, n)` for `c <= c_max`, `n <= n_max`.
#[derive(Debug, Clone)]
pub struct PovmMatrix {
    t: Matrix<f64>,
}

impl PovmMatrix {
    pub fn c_max(&self) -> usize {
        self.t.rows() - 1
    }

    pub fn n_max(&self) -> usize {
        self.t.cols() - 1
    }

    pub fn get(&self, c: usize, n: usize) -> f64 {
        self.t.get(c, n)
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.t
    }

    /// Ideal photon-number resolving detector, `T(c, n) = delta_cn`.
    pub fn identity(n_max: usize) -> PovmMatrix {
        PovmMatrix { t: Matrix::from_fn(n_max + 1, n_max + 1, |c, n| if c == n { 1.0 } else { 0.0 }) }
    }

    /// Rows `0..=c` only. The result is no longer complete.
    pub fn rows_upto(&self, c: usize) -> PovmMatrix {
        let rows = (c + 1).min(self.t.rows());
        PovmMatrix { t: Matrix::from_fn(rows, self.t.cols(), |r, n| self.t.get(r, n)) }
    }

    /// Largest `|1 - sum_c T(c, n)|` over the columns.
    pub fn completeness_error(&self) -> f64 {
        (0..=self.n_max())
            .map(|n| {
                let s: f64 = (0..=self.c_max()).map(|c| self.get(c, n)).sum();
                (1.0 - s).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `T_s p T_i^T`.
    pub fn forward(&self, p: &Matrix<f64>, ti: &PovmMatrix) -> Matrix<f64> {
        let (ns, ni) = (p.rows(), p.cols());
        let (cs, ci) = (self.t.rows(), ti.t.rows());
        // a[n_s][c_i] = sum_ni p[n_s][n_i] T_i[c_i][n_i]
        let mut a = vec![0.0; ns * ci];
        for r in 0..ns {
            let prow = p.row(r);
            for c in 0..ci {
                let trow = ti.t.row(c);
                let mut acc = 0.0;
                for k in 0..ni {
                    acc += prow[k] * trow[k];
                }
                a[r * ci + c] = acc;
            }
        }
        let mut f = Matrix::zeros(cs, ci);
        let out = f.as_mut_slice();
        for c_s in 0..cs {
            let trow = self.t.row(c_s);
            let dst = &mut out[c_s * ci..(c_s + 1) * ci];
            for (r, &t) in trow.iter().enumerate().take(ns) {
                if t == 0.0 {
                    continue;
                }
                let src = &a[r * ci..(r + 1) * ci];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += t * s;
                }
            }
        }
        f
    }

    /// `T_s^T r T_i`, the adjoint of [`PovmMatrix::forward`].
    pub fn backward(&self, r: &Matrix<f64>, ti: &PovmMatrix) -> Matrix<f64> {
        let cs = r.rows();
        let (ns, ni) = (self.t.cols(), ti.t.cols());
        // b[c_s][n_i] = sum_ci r[c_s][c_i] T_i[c_i][n_i]
        let mut b = vec![0.0; cs * ni];
        for c_s in 0..cs {
            let rrow = r.row(c_s);
            let dst = &mut b[c_s * ni..(c_s + 1) * ni];
            for (c, &v) in rrow.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                for (d, &t) in dst.iter_mut().zip(ti.t.row(c)) {
                    *d += v * t;
                }
            }
        }
        let mut g = Matrix::zeros(ns, ni);
        let out = g.as_mut_slice();
        for c_s in 0..cs {
            let trow = self.t.row(c_s);
            let src = &b[c_s * ni..(c_s + 1) * ni];
            for (n, &t) in trow.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                for (d, &s) in out[n * ni..(n + 1) * ni].iter_mut().zip(src) {
                    *d += t * s;
                }
            }
        }
        g
    }
}

/// Builds and validates the POVM of one detector arm.
pub fn povm(det: &DetectorModel, c_max: usize, n_max: usize) -> Result<PovmMatrix> {
    let mut t = povm_rows(det, c_max, n_max)?.t;
    for n in 0..=n_max {
        let s = crate::numeric::neumaier_sum((0..=c_max).map(|c| t.get(c, n)));
        if (1.0 - s).abs() > COMPLETENESS_TOL {
            return Err(Error::Completeness { n, sum: s });
        }
    }
    for v in t.as_mut_slice() {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(PovmMatrix { t })
}

/// Rows `0..=c_max` of the POVM without the completeness check, for fits
/// that only look at part of the photocount range.
pub fn povm_rows(det: &DetectorModel, c_max: usize, n_max: usize) -> Result<PovmMatrix> {
    det.validate()?;
    let big_n = det.pixels as usize;
    if c_max > big_n {
        return Err(Error::Invalid(format!("c_max = {c_max} exceeds the pixel count {big_n}")));
    }
    let (eta, dark) = (det.efficiency, det.dark_mean_per_pixel);
    let nf = big_n as f64;

    // dark[j][m]: m dark counts among the N - j idle pixels
    let dark_pmf: Vec<Vec<f64>> = (0..=c_max)
        .map(|j| {
            let idle = (big_n - j) as f64;
            let len = c_max - j + 1;
            let mut v = vec![0.0; len];
            if dark == 0.0 {
                v[0] = 1.0;
                return v;
            }
            v[0] = (idle * (-dark).ln_1p()).exp();
            let ratio = dark / (1.0 - dark);
            for m in 1..len {
                v[m] = v[m - 1] * (idle - (m - 1) as f64) / m as f64 * ratio;
            }
            v
        })
        .collect();

    let mut t = Matrix::zeros(c_max + 1, n_max + 1);
    let mut q = vec![0.0; c_max + 1];
    q[0] = 1.0;
    for n in 0..=n_max {
        if n > 0 {
            for j in (0..=c_max.min(n)).rev() {
                let stay = q[j] * (1.0 - eta + eta * j as f64 / nf);
                let fire = if j > 0 { q[j - 1] * eta * (nf - (j - 1) as f64) / nf } else { 0.0 };
                q[j] = stay + fire;
            }
        }
        for c in 0..=c_max {
            let mut acc = CompensatedSum::new();
            for j in 0..=c {
                if q[j] != 0.0 {
                    acc.add(q[j] * dark_pmf[j][c - j]);
                }
            }
            t.set(c, n, acc.value());
        }
    }
    Ok(PovmMatrix { t })
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::Invalid(format!("{x} has no exact rational value")))
}

/// The closed-form alternating sum,
/// `C(N,c) (1-D)^(N-c) sum_l C(c,l) (-1)^(c-l) (1-D)^(c-l) (1 - eta + eta l/N)^n`,
/// with the inner sum in exact rational arithmetic. Limited to `c <= 20`.
pub fn povm_exact(det: &DetectorModel, c: usize, n: usize) -> Result<f64> {
    det.validate()?;
    if c > 20 {
        return Err(Error::Invalid(format!("exact POVM limited to c <= 20, got {c}")));
    }
    let big_n = det.pixels as usize;
    if c > big_n {
        return Ok(0.0);
    }
    let eta = exact(det.efficiency)?;
    let keep = BigRational::one() - exact(det.dark_mean_per_pixel)?;
    let pixels = BigRational::from_integer(BigInt::from(big_n));
    let mut inner = BigRational::zero();
    let mut binom = BigInt::one();
    for l in 0..=c {
        if l > 0 {
            binom = binom * BigInt::from(c - l + 1) / BigInt::from(l);
        }
        let base = BigRational::one() - &eta + &eta * BigRational::from_integer(BigInt::from(l)) / &pixels;
        let mut term = BigRational::from_integer(binom.clone()) * pow(&keep, c - l) * pow(&base, n);
        if (c - l) % 2 == 1 {
            term = -term;
        }
        inner += term;
    }
    let inner = inner.to_f64().ok_or_else(|| Error::Numerical("exact POVM sum not representable".into()))?;
    let prefactor = (ln_choose(big_n as f64, c as f64) + (big_n - c) as f64 * (-det.dark_mean_per_pixel).ln_1p()).exp();
    Ok(prefactor * inner)
}

fn pow(x: &BigRational, e: usize) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn camera(pixels: u32, eta: f64, dark_total: f64) -> DetectorModel {
        DetectorModel::new(pixels, eta, dark_total / pixels as f64).unwrap()
    }

    #[test]
    fn no_dark_counts_zero_row() {
        let det = camera(100, 0.3, 0.0);
        let t = povm(&det, 30, 10).unwrap();
        for n in 0..=10 {
            assert!((t.get(0, n) - 0.7f64.powi(n as i32)).abs() < 1e-14);
        }
    }

    #[test]
    fn vacuum_column_is_binomial() {
        let det = camera(6528, 0.23, 0.04);
        let t = povm(&det, 10, 3).unwrap();
        let d = det.dark_mean_per_pixel;
        for c in 0..=10 {
            let binom: f64 = (0..c).map(|j| (6528 - j) as f64 / (j + 1) as f64).product();
            let expect = binom * (1.0 - d).powi(6528 - c as i32) * d.powi(c as i32);
            assert!((t.get(c, 0) - expect).abs() <= 1e-12 * expect.max(1e-300));
        }
    }

    #[test]
    fn recurrence_matches_exact_sum() {
        let det = camera(6528, 0.23, 0.04);
        let t = povm(&det, 30, 25).unwrap();
        for (c, n) in [(0, 0), (1, 3), (5, 20), (8, 25), (12, 25), (3, 2)] {
            let e = povm_exact(&det, c, n).unwrap();
            assert!((t.get(c, n) - e).abs() <= 1e-12 + 1e-10 * e, "T({c},{n}) = {} vs {e}", t.get(c, n));
        }
    }

    #[test]
    fn c_max_bounded_by_pixels() {
        assert!(povm(&camera(5, 0.5, 0.0), 6, 3).is_err());
    }

    #[test]
    fn truncation_breaks_completeness() {
        let det = camera(6528, 0.9, 0.04);
        assert!(matches!(povm(&det, 5, 40), Err(Error::Completeness { .. })));
    }
}
