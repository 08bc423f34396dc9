//! Polynomials in moment-table entries with exact rational coefficients.
//!
//! A [`Poly`] is a sum of terms `c * m[k1][l1] * m[k2][l2] * ...`. Criteria
//! are stored in this form so that decomposition identities can be checked
//! symbolically rather than only numerically.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::moments::MomentTable;

/// Index `(k, l)` of the moment `<W_s^k W_i^l>`.
pub type MomentIndex = (u8, u8);

/// Sorted multiset of moment factors; `(0, 0)` is never stored.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<MomentIndex>);

impl Monomial {
    pub fn new(mut factors: Vec<MomentIndex>) -> Self {
        factors.retain(|&f| f != (0, 0));
        factors.sort_unstable();
        Monomial(factors)
    }

    pub fn factors(&self) -> &[MomentIndex] {
        &self.0
    }

    /// Sum of `k + l` over the factors.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(k, l)| (k + l) as u32).sum()
    }

    fn product(&self, other: &Monomial) -> Monomial {
        let mut f = self.0.clone();
        f.extend_from_slice(&other.0);
        Monomial::new(f)
    }

    fn swapped(&self) -> Monomial {
        Monomial::new(self.0.iter().map(|&(k, l)| (l, k)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn constant(c: i64) -> Self {
        Poly::term(Rational64::from_integer(c), Monomial::default())
    }

    pub fn term(coeff: Rational64, mono: Monomial) -> Self {
        let mut p = Poly::zero();
        p.add_term(mono, coeff);
        p
    }

    /// The single moment `<W_s^k W_i^l>`.
    pub fn moment(k: u8, l: u8) -> Self {
        Poly::term(Rational64::one(), Monomial::new(vec![(k, l)]))
    }

    /// Product of moments with an integer coefficient.
    pub fn product(coeff: i64, factors: &[MomentIndex]) -> Self {
        Poly::term(Rational64::from_integer(coeff), Monomial::new(factors.to_vec()))
    }

    fn add_term(&mut self, mono: Monomial, coeff: Rational64) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: Rational64) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), *v * c);
        }
        out
    }

    pub fn scale_int(&self, c: i64) -> Poly {
        self.scale(Rational64::from_integer(c))
    }

    /// Largest single-moment order `k + l` appearing in any factor.
    pub fn max_order(&self) -> usize {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|&(k, l)| (k + l) as usize))
            .max()
            .unwrap_or(0)
    }

    /// Common total degree if every term has the same degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degrees = self.terms.keys().map(Monomial::degree);
        let first = degrees.next()?;
        degrees.all(|d| d == first).then_some(first)
    }

    /// Exchange of the signal and idler indices.
    pub fn swapped(&self) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            out.add_term(m.swapped(), *v);
        }
        out
    }

    /// Replaces each moment factor by a polynomial.
    pub fn substitute(&self, f: impl Fn(MomentIndex) -> Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, v) in &self.terms {
            let mut acc = Poly::term(*v, Monomial::default());
            for &idx in m.factors() {
                acc = &acc * &f(idx);
            }
            out = &out + &acc;
        }
        out
    }

    pub fn eval(&self, table: &MomentTable) -> f64 {
        let mut acc = crate::numeric::CompensatedSum::new();
        for (m, v) in &self.terms {
            let mut x = v.to_f64().expect("finite coefficient");
            for &(k, l) in m.factors() {
                x *= table.get(k as usize, l as usize);
            }
            acc.add(x);
        }
        acc.value()
    }

    /// Sum of term magnitudes, a scale for relative comparisons.
    pub fn eval_abs(&self, table: &MomentTable) -> f64 {
        self.terms
            .iter()
            .map(|(m, v)| {
                let mut x = v.to_f64().expect("finite coefficient").abs();
                for &(k, l) in m.factors() {
                    x *= table.get(k as usize, l as usize).abs();
                }
                x
            })
            .sum()
    }

    /// `Some(c)` with `c > 0` if `self == c * other`.
    pub fn positive_multiple_of(&self, other: &Poly) -> Option<Rational64> {
        let (m, v) = other.terms.iter().next()?;
        let c = *self.terms.get(m)? / *v;
        (c.is_positive() && *self == other.scale(c)).then_some(c)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(m.clone(), *v);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, v) in &rhs.terms {
            out.add_term(m.clone(), -*v);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, va) in &self.terms {
            for (b, vb) in &rhs.terms {
                out.add_term(a.product(b), *va * *vb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale_int(-1)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $f(self, rhs: Poly) -> Poly {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $f(self, rhs: &Poly) -> Poly {
                (&self).$f(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

impl Mul<Poly> for i64 {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        rhs.scale_int(self)
    }
}

impl Mul<&Poly> for i64 {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        rhs.scale_int(self)
    }
}

fn fmt_moment(f: &mut fmt::Formatter<'_>, (k, l): MomentIndex) -> fmt::Result {
    let part = |f: &mut fmt::Formatter<'_>, name: &str, e: u8| -> fmt::Result {
        match e {
            0 => Ok(()),
            1 => write!(f, "{name}"),
            _ => write!(f, "{name}^{e}"),
        }
    };
    write!(f, "<")?;
    part(f, "Ws", k)?;
    part(f, "Wi", l)?;
    write!(f, ">")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // larger degree first, then lexicographic
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|a, b| b.0.degree().cmp(&a.0.degree()).then_with(|| b.0.cmp(a.0)));
        for (i, (m, v)) in terms.into_iter().enumerate() {
            let neg = v.is_negative();
            let mag = v.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            let is_one = mag.is_one();
            if !is_one || m.factors().is_empty() {
                write!(f, "{mag}")?;
            }
            for &idx in m.factors().iter().rev() {
                fmt_moment(f, idx)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentBasis;

    fn w(k: u8, l: u8) -> Poly {
        Poly::moment(k, l)
    }

    #[test]
    fn algebra_cancels() {
        let e = &(&w(2, 0) + &w(0, 2)) - &w(1, 1).scale_int(2);
        let z = &(&e - &w(2, 0)) - &(&w(0, 2) - &(2 * w(1, 1)));
        assert!(z.is_zero());
        assert_eq!(e.homogeneous_degree(), Some(2));
        assert_eq!(e.max_order(), 2);
    }

    #[test]
    fn products_merge() {
        let p = &w(1, 0) * &w(0, 1);
        let q = &w(0, 1) * &w(1, 0);
        assert_eq!(p, q);
        assert_eq!((&p + &q).to_string(), "2<Ws><Wi>");
        assert_eq!((&w(0, 0) * &w(1, 0)), w(1, 0));
    }

    #[test]
    fn swap_and_eval() {
        let e = &w(3, 0) - &(&w(1, 0) * &w(2, 1));
        let t = MomentTable::from_fn(3, MomentBasis::Intensity, |k, l| (1 + k + 4 * l) as f64);
        let ts = t.swapped();
        assert!((e.swapped().eval(&t) - e.eval(&ts)).abs() < 1e-12);
    }

    #[test]
    fn multiples() {
        let e = &w(2, 0) - &w(1, 1);
        assert_eq!(e.scale_int(3).positive_multiple_of(&e), Some(Rational64::from_integer(3)));
        assert_eq!(e.scale_int(-3).positive_multiple_of(&e), None);
        assert_eq!((&e + &w(1, 0)).positive_multiple_of(&e), None);
    }
}
