//! Generating rules behind the criteria.
//!
//! Every hand-transcribed criterion records the rule it was derived from.
//! The rules are expanded here mechanically, independent of the transcribed
//! formulas, so the catalog can be checked term by term.

use num_rational::Rational64;

use crate::expr::{MomentIndex, Monomial, Poly};

/// Independent factor of the averaging measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// `P_si(W_s, W_i)`: contributes the two variables `W_s`, `W_i`.
    Joint,
    /// `P_s(W_s)`: one signal variable.
    Signal,
    /// `P_i(W_i)`: one idler variable.
    Idler,
}

impl Factor {
    fn arity(&self) -> usize {
        match self {
            Factor::Joint => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    /// Muirhead inequality `sum_sigma x^major >= sum_sigma x^minor` averaged
    /// over a product of the listed factors.
    Majorization { major: Vec<u8>, minor: Vec<u8>, averaging: Vec<Factor> },
    /// `<W_s^k W_i^l (W_s - W_i)^(2m)>`.
    DifferencePower { k: u8, l: u8, m: u8 },
    /// `<W_s^k W_i^l (W_s - <W_s>)^(2m) (W_i - <W_i>)^(2n)>`.
    CenteredPower { k: u8, l: u8, m: u8, n: u8 },
    /// Determinant of the moment matrix built over monomials `W_s^a W_i^b`.
    Gram { basis: Vec<MomentIndex> },
    /// `<f^2><g^2> - <f g>^2` with `f^2 = W_s^a W_i^b`, `g^2 = W_s^c W_i^d`.
    CauchySchwarz { f2: MomentIndex, g2: MomentIndex },
}

fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn average(exponents: &[u8], averaging: &[Factor]) -> Poly {
    let mut factors = Vec::new();
    let mut pos = 0;
    for f in averaging {
        match f {
            Factor::Joint => factors.push((exponents[pos], exponents[pos + 1])),
            Factor::Signal => factors.push((exponents[pos], 0)),
            Factor::Idler => factors.push((0, exponents[pos])),
        }
        pos += f.arity();
    }
    Poly::term(Rational64::from_integer(1), Monomial::new(factors))
}

fn symmetric_sum(exponents: &[u8], averaging: &[Factor]) -> Poly {
    permutations(exponents).iter().fold(Poly::zero(), |acc, p| &acc + &average(p, averaging))
}

fn binom(n: u8, k: u8) -> i64 {
    (0..k as i64).fold(1i64, |acc, j| acc * (n as i64 - j) / (j + 1))
}

/// `(x - y)^p` as a list of `(coefficient, power of x, power of y)`.
fn binomial_terms(p: u8) -> Vec<(i64, u8, u8)> {
    (0..=p).map(|j| (binom(p, j) * if (p - j) % 2 == 0 { 1 } else { -1 }, j, p - j)).collect()
}

fn determinant(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero();
    for col in 0..n {
        let minor: Vec<Vec<Poly>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != col).map(|(_, v)| v.clone()).collect()).collect();
        let term = &m[0][col] * &determinant(&minor);
        acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

impl Origin {
    pub fn majorization(major: &[u8], minor: &[u8], averaging: &[Factor]) -> Origin {
        Origin::Majorization { major: major.to_vec(), minor: minor.to_vec(), averaging: averaging.to_vec() }
    }

    /// Expands the rule into a polynomial in moments.
    pub fn expand(&self) -> Poly {
        match self {
            Origin::Majorization { major, minor, averaging } => {
                let vars: usize = averaging.iter().map(Factor::arity).sum();
                assert_eq!(vars, major.len(), "majorization vector does not match averaging");
                assert_eq!(vars, minor.len(), "majorization vector does not match averaging");
                &symmetric_sum(major, averaging) - &symmetric_sum(minor, averaging)
            }
            Origin::DifferencePower { k, l, m } => {
                let mut acc = Poly::zero();
                for (c, a, b) in binomial_terms(2 * m) {
                    acc = &acc + &Poly::moment(k + a, l + b).scale_int(c);
                }
                acc
            }
            Origin::CenteredPower { k, l, m, n } => {
                let mut acc = Poly::zero();
                let mean_s = Poly::moment(1, 0);
                let mean_i = Poly::moment(0, 1);
                for (cs, a, pa) in binomial_terms(2 * m) {
                    for (ci, b, pb) in binomial_terms(2 * n) {
                        let mut t = Poly::moment(k + a, l + b).scale_int(cs * ci);
                        for _ in 0..pa {
                            t = &t * &mean_s;
                        }
                        for _ in 0..pb {
                            t = &t * &mean_i;
                        }
                        acc = &acc + &t;
                    }
                }
                acc
            }
            Origin::Gram { basis } => {
                let m: Vec<Vec<Poly>> = basis
                    .iter()
                    .map(|&(a, b)| basis.iter().map(|&(c, d)| Poly::moment(a + c, b + d)).collect())
                    .collect();
                determinant(&m)
            }
            Origin::CauchySchwarz { f2, g2 } => {
                let cross = ((f2.0 + g2.0) / 2, (f2.1 + g2.1) / 2);
                assert_eq!((cross.0 * 2, cross.1 * 2), (f2.0 + g2.0, f2.1 + g2.1), "odd cross exponent");
                &(&Poly::moment(f2.0, f2.1) * &Poly::moment(g2.0, g2.1))
                    - &(&Poly::moment(cross.0, cross.1) * &Poly::moment(cross.0, cross.1))
            }
        }
    }

    /// Whether a transcribed criterion agrees with this rule: exactly, or up
    /// to a positive factor for majorization sums.
    pub fn matches(&self, expr: &Poly) -> bool {
        let expanded = self.expand();
        match self {
            Origin::Majorization { .. } => expr.positive_multiple_of(&expanded).is_some(),
            _ => *expr == expanded,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_variable_majorization() {
        // {2,0} > {1,1} with joint averaging
        let p = Origin::majorization(&[2, 0], &[1, 1], &[Factor::Joint]).expand();
        let e = &(&Poly::moment(2, 0) + &Poly::moment(0, 2)) - &Poly::moment(1, 1).scale_int(2);
        assert_eq!(p.positive_multiple_of(&e), Some(Rational64::from_integer(1)));
    }

    #[test]
    fn difference_power() {
        let p = Origin::DifferencePower { k: 1, l: 0, m: 1 }.expand();
        let e = &(&Poly::moment(3, 0) + &Poly::moment(1, 2)) - &Poly::moment(2, 1).scale_int(2);
        assert_eq!(p, e);
    }

    #[test]
    fn gram_two_by_two() {
        let p = Origin::Gram { basis: vec![(1, 0), (0, 1)] }.expand();
        let e = &(&Poly::moment(2, 0) * &Poly::moment(0, 2)) - &(&Poly::moment(1, 1) * &Poly::moment(1, 1));
        assert_eq!(p, e);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(&[2, 1, 1, 0]).len(), 24);
    }
}
