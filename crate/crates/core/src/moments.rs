//! Intensity (normally ordered, factorial) moments, photon-number moments,
//! Stirling conversions between them, and s-ordered moment tables.

use serde::{Deserialize, Serialize};

use crate::data::JointDistribution;
use crate::error::{Error, Result};
use crate::numeric::{binomial, factorial, falling_factorial, CompensatedSum};

/// Highest moment order accepted by default.
pub const MAX_ORDER: usize = 8;

/// Default truncation order of moment tables.
pub const DEFAULT_ORDER: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentBasis {
    /// `<W_s^k W_i^l>`, i.e. joint factorial moments of the photon numbers.
    Intensity,
    /// Raw power moments `<n_s^k n_i^l>`.
    PhotonNumber,
}

/// Moments `m[k][l]` for all `k + l <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    order: usize,
    basis: MomentBasis,
    m: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct MomentTableJson {
    #[serde(rename = "K")]
    order: usize,
    #[serde(default = "default_basis")]
    basis: MomentBasis,
    m: Vec<Vec<f64>>,
}

fn default_basis() -> MomentBasis {
    MomentBasis::Intensity
}

impl MomentTable {
    /// Builds a table from triangular rows: row `k` holds `m[k][0..=K-k]`.
    pub fn from_rows(order: usize, basis: MomentBasis, m: Vec<Vec<f64>>) -> Result<Self> {
        if m.len() != order + 1 || m.iter().enumerate().any(|(k, row)| row.len() != order + 1 - k) {
            return Err(Error::Invalid(format!("moment table is not complete up to order {order}")));
        }
        if m[0][0] != 1.0 {
            return Err(Error::Invalid(format!("m[0][0] = {} must equal 1", m[0][0])));
        }
        Ok(MomentTable { order, basis, m })
    }

    /// Builds a table from a function of `(k, l)`; `(0, 0)` is forced to 1.
    pub fn from_fn(order: usize, basis: MomentBasis, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = (0..=order)
            .map(|k| (0..=order - k).map(|l| if k == 0 && l == 0 { 1.0 } else { f(k, l) }).collect())
            .collect();
        MomentTable { order, basis, m }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn basis(&self) -> MomentBasis {
        self.basis
    }

    /// `m[k][l]`; panics when `k + l` exceeds the order.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.m[k][l]
    }

    pub fn try_get(&self, k: usize, l: usize) -> Option<f64> {
        (k + l <= self.order).then(|| self.m[k][l])
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.m
    }

    /// `<W> = (<W_s> + <W_i>) / 2`.
    pub fn mean_intensity(&self) -> f64 {
        0.5 * (self.m[1][0] + self.m[0][1])
    }

    /// Table with the signal and idler indices exchanged.
    pub fn swapped(&self) -> MomentTable {
        MomentTable::from_fn(self.order, self.basis, |k, l| self.m[l][k])
    }

    /// Scales each entry by `lambda^(k+l)`.
    pub fn scaled(&self, lambda: f64) -> MomentTable {
        MomentTable::from_fn(self.order, self.basis, |k, l| self.m[k][l] * lambda.powi((k + l) as i32))
    }

    /// Moments of the product of the two marginals, `m[k][0] * m[0][l]`.
    pub fn factorized(&self) -> MomentTable {
        MomentTable::from_fn(self.order, self.basis, |k, l| self.m[k][0] * self.m[0][l])
    }

    pub fn truncated(&self, order: usize) -> Result<MomentTable> {
        if order > self.order {
            return Err(Error::InsufficientOrder { needed: order, available: self.order });
        }
        Ok(MomentTable::from_fn(order, self.basis, |k, l| self.m[k][l]))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MomentTableJson { order: self.order, basis: self.basis, m: self.m.clone() })
            .expect("moment table serializes")
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let doc: MomentTableJson = serde_json::from_str(text)?;
        MomentTable::from_rows(doc.order, doc.basis, doc.m)
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::OrderTooLarge(order, MAX_ORDER));
    }
    if order < 1 {
        return Err(Error::Invalid("moment order must be at least 1".into()));
    }
    Ok(())
}

fn weighted_moments(
    d: &JointDistribution,
    order: usize,
    basis: MomentBasis,
    weight: impl Fn(usize, usize) -> f64,
) -> Result<MomentTable> {
    check_order(order)?;
    let rows = d.rows();
    let cols = d.cols();
    let table_s: Vec<Vec<f64>> = (0..rows).map(|n| (0..=order).map(|k| weight(n, k)).collect()).collect();
    let table_i: Vec<Vec<f64>> = (0..cols).map(|n| (0..=order).map(|k| weight(n, k)).collect()).collect();
    let mut acc: Vec<Vec<CompensatedSum>> =
        (0..=order).map(|k| vec![CompensatedSum::new(); order + 1 - k]).collect();
    for ns in 0..rows {
        let ws = &table_s[ns];
        for ni in 0..cols {
            let p = d.p(ns, ni);
            if p == 0.0 {
                continue;
            }
            let wi = &table_i[ni];
            for k in 0..=order {
                let a = p * ws[k];
                if a == 0.0 {
                    continue;
                }
                for l in 0..=order - k {
                    acc[k][l].add(a * wi[l]);
                }
            }
        }
    }
    let m: Vec<Vec<f64>> = acc
        .iter()
        .enumerate()
        .map(|(k, row)| row.iter().enumerate().map(|(l, s)| if k + l == 0 { 1.0 } else { s.value() }).collect())
        .collect();
    Ok(MomentTable { order, basis, m })
}

/// Intensity moments `<W_s^k W_i^l> = < n_s!/(n_s-k)! n_i!/(n_i-l)! >`.
pub fn factorial_moments(d: &JointDistribution, order: usize) -> Result<MomentTable> {
    weighted_moments(d, order, MomentBasis::Intensity, falling_factorial)
}

/// Power moments `<n_s^k n_i^l>`.
pub fn photon_number_moments(d: &JointDistribution, order: usize) -> Result<MomentTable> {
    weighted_moments(d, order, MomentBasis::PhotonNumber, |n, k| (n as f64).powi(k as i32))
}

/// Stirling numbers of the second kind `S(k, l)` and their inverse, the signed
/// Stirling numbers of the first kind, for `0 <= k, l <= K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirlingMatrices {
    order: usize,
    second: Vec<Vec<i64>>,
    first: Vec<Vec<i64>>,
}

impl StirlingMatrices {
    pub fn new(order: usize) -> Result<Self> {
        let n = order + 1;
        let overflow = || Error::Numerical(format!("Stirling numbers overflow at order {order}"));
        let mut second = vec![vec![0i64; n]; n];
        let mut first = vec![vec![0i64; n]; n];
        second[0][0] = 1;
        first[0][0] = 1;
        for k in 1..n {
            for l in 1..=k {
                let a = (l as i64).checked_mul(second[k - 1][l]).ok_or_else(overflow)?;
                second[k][l] = a.checked_add(second[k - 1][l - 1]).ok_or_else(overflow)?;
                let b = ((k - 1) as i64).checked_mul(first[k - 1][l]).ok_or_else(overflow)?;
                first[k][l] = first[k - 1][l - 1].checked_sub(b).ok_or_else(overflow)?;
            }
        }
        let s = StirlingMatrices { order, second, first };
        s.verify_inverse()?;
        Ok(s)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `S(k, l)`: `n^k = sum_l S(k, l) n!/(n-l)!`.
    pub fn second_kind(&self, k: usize, l: usize) -> i64 {
        self.second[k][l]
    }

    /// `s(k, l)`: `n!/(n-k)! = sum_l s(k, l) n^l`.
    pub fn first_kind(&self, k: usize, l: usize) -> i64 {
        self.first[k][l]
    }

    /// `K x K` block of the second-kind matrix for `k, l = 1..=K`.
    pub fn second_block(&self) -> Vec<Vec<i64>> {
        (1..=self.order).map(|k| self.second[k][1..=self.order].to_vec()).collect()
    }

    /// `K x K` block of the first-kind (inverse) matrix for `k, l = 1..=K`.
    pub fn first_block(&self) -> Vec<Vec<i64>> {
        (1..=self.order).map(|k| self.first[k][1..=self.order].to_vec()).collect()
    }

    fn verify_inverse(&self) -> Result<()> {
        let n = self.order + 1;
        for i in 0..n {
            for j in 0..n {
                let mut acc: i128 = 0;
                for k in 0..n {
                    acc += self.second[i][k] as i128 * self.first[k][j] as i128;
                }
                if acc != (i == j) as i128 {
                    return Err(Error::Numerical(format!("S * S^-1 differs from identity at ({i}, {j})")));
                }
            }
        }
        Ok(())
    }
}

pub fn stirling_matrices(order: usize) -> Result<StirlingMatrices> {
    StirlingMatrices::new(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conversion {
    IntensityToPhoton,
    PhotonToIntensity,
}

/// Converts joint moment tables between intensity and photon-number moments,
/// applying the Stirling transform independently to each beam index.
pub fn convert_moments(table: &MomentTable, direction: Conversion) -> Result<MomentTable> {
    let (expected, target) = match direction {
        Conversion::IntensityToPhoton => (MomentBasis::Intensity, MomentBasis::PhotonNumber),
        Conversion::PhotonToIntensity => (MomentBasis::PhotonNumber, MomentBasis::Intensity),
    };
    if table.basis() != expected {
        return Err(Error::Invalid(format!("expected a {expected:?} table for {direction:?}")));
    }
    let order = table.order();
    let st = StirlingMatrices::new(order)?;
    let coef = |k: usize, a: usize| -> f64 {
        match direction {
            Conversion::IntensityToPhoton => st.second_kind(k, a) as f64,
            Conversion::PhotonToIntensity => st.first_kind(k, a) as f64,
        }
    };
    Ok(MomentTable::from_fn(order, target, |k, l| {
        let mut acc = CompensatedSum::new();
        for a in 0..=k {
            let ca = coef(k, a);
            if ca == 0.0 {
                continue;
            }
            for b in 0..=l {
                let cb = coef(l, b);
                if cb != 0.0 {
                    acc.add(ca * cb * table.get(a, b));
                }
            }
        }
        acc.value()
    }))
}

/// How the ordering parameter `s` acts on intensity moments; `t = (1 - s)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderingConvention {
    /// Each beam's intensity gains an independent exponentially distributed
    /// noise intensity of mean `t`:
    /// `<W^k>_s = sum_j C(k,j) j! t^j <W^(k-j)>`.
    #[default]
    IntensityNoise,
    /// Laguerre form with `k! t^k` prefactor,
    /// `<W^k>_s = k! t^k <L_k(-W/t)>`, i.e. complex Gaussian amplitude noise
    /// of mean intensity `t`; reproduces antinormal moments at `s = -1`.
    Laguerre,
    /// Laguerre form with the `t^-k` prefactor, `t^-k <L_k(-W/t)>`.
    /// Diverges as `s -> 1`; kept for comparison only.
    LaguerreUnscaled,
}

impl OrderingConvention {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingConvention::IntensityNoise => "intensity_noise",
            OrderingConvention::Laguerre => "laguerre",
            OrderingConvention::LaguerreUnscaled => "laguerre_unscaled",
        }
    }

    /// Coefficients `c[j]` with `<W^k>_s = sum_j c[j] <W^(k-j)>`.
    fn kernel(&self, k: usize, t: f64) -> Vec<f64> {
        (0..=k)
            .map(|j| match self {
                OrderingConvention::IntensityNoise => binomial(k, j) * factorial(j) * t.powi(j as i32),
                OrderingConvention::Laguerre => {
                    let b = binomial(k, j);
                    b * b * factorial(j) * t.powi(j as i32)
                }
                OrderingConvention::LaguerreUnscaled => {
                    // t^-k C(k, k-j) / (k-j)! t^-(k-j)
                    binomial(k, j) / factorial(k - j) / t.powi((2 * k - j) as i32)
                }
            })
            .collect()
    }
}

/// s-ordered moments of a normally ordered intensity table with the default
/// convention.
pub fn s_ordered_moments(table: &MomentTable, s: f64) -> Result<MomentTable> {
    s_ordered_moments_with(table, s, OrderingConvention::default())
}

pub fn s_ordered_moments_with(table: &MomentTable, s: f64, convention: OrderingConvention) -> Result<MomentTable> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Invalid(format!("ordering parameter s = {s} outside [-1, 1]")));
    }
    if convention == OrderingConvention::LaguerreUnscaled && s == 1.0 {
        return Err(Error::Invalid("unscaled Laguerre form is undefined at s = 1".into()));
    }
    add_noise(table, 0.5 * (1.0 - s), convention)
}

/// Applies noise of mean `t` to both beams of an intensity table.
pub fn add_noise(table: &MomentTable, t: f64, convention: OrderingConvention) -> Result<MomentTable> {
    if table.basis() != MomentBasis::Intensity {
        return Err(Error::Invalid("s-ordering applies to intensity moments".into()));
    }
    if t == 0.0 && convention != OrderingConvention::LaguerreUnscaled {
        return Ok(table.clone());
    }
    let order = table.order();
    let kernels: Vec<Vec<f64>> = (0..=order).map(|k| convention.kernel(k, t)).collect();
    Ok(MomentTable::from_fn(order, MomentBasis::Intensity, |k, l| {
        let mut acc = CompensatedSum::new();
        for (j, cj) in kernels[k].iter().enumerate() {
            for (m, cm) in kernels[l].iter().enumerate() {
                acc.add(cj * cm * table.get(k - j, l - m));
            }
        }
        acc.value()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DistributionKind, Matrix};

    fn thermal_paired(b: f64, n_max: usize) -> JointDistribution {
        let probs = Matrix::from_fn(n_max + 1, n_max + 1, |r, c| {
            if r == c {
                b.powi(r as i32) / (1.0 + b).powi(r as i32 + 1)
            } else {
                0.0
            }
        });
        JointDistribution::normalized(probs, DistributionKind::PhotonNumber).unwrap().0
    }

    #[test]
    fn stirling_blocks() {
        let st = stirling_matrices(5).unwrap();
        assert_eq!(
            st.second_block(),
            vec![
                vec![1, 0, 0, 0, 0],
                vec![1, 1, 0, 0, 0],
                vec![1, 3, 1, 0, 0],
                vec![1, 7, 6, 1, 0],
                vec![1, 15, 25, 10, 1]
            ]
        );
        assert_eq!(st.first_block()[4], vec![24, -50, 35, -10, 1]);
        assert_eq!(st.first_block()[3], vec![-6, 11, -6, 1, 0]);
        for k in 1..=8 {
            assert!(stirling_matrices(k).is_ok());
        }
    }

    #[test]
    fn vacuum_moments() {
        let d = JointDistribution::vacuum(3, 3, DistributionKind::PhotonNumber);
        let m = factorial_moments(&d, 5).unwrap();
        let n = photon_number_moments(&d, 5).unwrap();
        for k in 0..=5 {
            for l in 0..=5 - k {
                let expect = if k + l == 0 { 1.0 } else { 0.0 };
                assert_eq!(m.get(k, l), expect);
                assert_eq!(n.get(k, l), expect);
            }
        }
    }

    #[test]
    fn order_limit() {
        let d = JointDistribution::vacuum(2, 2, DistributionKind::PhotonNumber);
        assert!(matches!(factorial_moments(&d, 9), Err(Error::OrderTooLarge(9, 8))));
    }

    #[test]
    fn photon_number_identity() {
        let d = thermal_paired(1.0, 200);
        let w = factorial_moments(&d, 4).unwrap();
        let n = photon_number_moments(&d, 4).unwrap();
        assert!((n.get(2, 0) - (w.get(1, 0) + w.get(2, 0))).abs() < 1e-10);
        assert!((n.get(1, 0) - 1.0).abs() < 1e-10);
        assert!((n.get(2, 0) - 3.0).abs() < 1e-10);
        assert!((n.get(3, 0) - 13.0).abs() < 1e-9);
        assert!((n.get(4, 0) - 75.0).abs() < 1e-8);
    }

    #[test]
    fn round_trip_conversion() {
        let t = MomentTable::from_fn(5, MomentBasis::Intensity, |k, l| 1.0 + (k * 3 + l * 7) as f64 * 0.37);
        let n = convert_moments(&t, Conversion::IntensityToPhoton).unwrap();
        let back = convert_moments(&n, Conversion::PhotonToIntensity).unwrap();
        for k in 0..=5 {
            for l in 0..=5 - k {
                let a = t.get(k, l);
                assert!((back.get(k, l) - a).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
        assert!(convert_moments(&t, Conversion::PhotonToIntensity).is_err());
    }

    #[test]
    fn poisson_conversion() {
        let mu: f64 = 2.0;
        let t = MomentTable::from_fn(4, MomentBasis::Intensity, |k, l| mu.powi((k + l) as i32));
        let n = convert_moments(&t, Conversion::IntensityToPhoton).unwrap();
        assert!((n.get(2, 0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn s_ordering_limits() {
        let t = MomentTable::from_fn(4, MomentBasis::Intensity, |k, l| 0.5 + (k + 2 * l) as f64);
        assert_eq!(s_ordered_moments(&t, 1.0).unwrap(), t);
        for conv in [OrderingConvention::IntensityNoise, OrderingConvention::Laguerre] {
            let u = s_ordered_moments_with(&t, 0.2, conv).unwrap();
            assert!((u.get(1, 0) - (t.get(1, 0) + 0.4)).abs() < 1e-12);
            assert_eq!(u.get(0, 0), 1.0);
        }
        assert!(s_ordered_moments(&t, 1.5).is_err());
        assert!(s_ordered_moments(&t, -1.01).is_err());
    }

    #[test]
    fn antinormal_second_moment() {
        let t = MomentTable::from_fn(2, MomentBasis::Intensity, |k, l| [[1.0, 1.0, 2.0], [1.0, 3.0, 0.0], [2.0, 0.0, 0.0]][k][l]);
        let lag = s_ordered_moments_with(&t, -1.0, OrderingConvention::Laguerre).unwrap();
        assert!((lag.get(2, 0) - (2.0 + 4.0 + 2.0)).abs() < 1e-12);
        let intensity = s_ordered_moments_with(&t, -1.0, OrderingConvention::IntensityNoise).unwrap();
        assert!((intensity.get(2, 0) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unscaled_laguerre_blows_up() {
        let t = MomentTable::from_fn(2, MomentBasis::Intensity, |_, _| 1.0);
        assert!(s_ordered_moments_with(&t, 1.0, OrderingConvention::LaguerreUnscaled).is_err());
        let near = s_ordered_moments_with(&t, 0.999, OrderingConvention::LaguerreUnscaled).unwrap();
        assert!(near.get(2, 0) > 1e6);
    }

    #[test]
    fn table_json_round_trip() {
        let t = MomentTable::from_fn(3, MomentBasis::Intensity, |k, l| (k * 10 + l) as f64);
        let text = t.to_json();
        assert!(text.contains("\"K\":3"));
        assert_eq!(MomentTable::parse_json(&text).unwrap(), t);
        assert!(MomentTable::parse_json("{\"K\":3,\"m\":[[1,2],[3]]}").is_err());
    }
}
