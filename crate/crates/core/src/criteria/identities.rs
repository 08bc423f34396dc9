//! Linear relations between criteria that must hold on any moment table.

use num_rational::Rational64;
use num_traits::ToPrimitive;

use super::{CriterionSpec, Registry, Tables};
use crate::error::{Error, Result};
use crate::expr::Poly;
use crate::moments::{stirling_matrices, MomentBasis};

/// `lhs = sum_j c_j rhs_j`.
#[derive(Debug, Clone)]
pub struct Identity {
    pub lhs: &'static str,
    pub rhs: Vec<(&'static str, Rational64)>,
}

fn id(lhs: &'static str, rhs: &[(&'static str, i64)]) -> Identity {
    Identity { lhs, rhs: rhs.iter().map(|&(n, c)| (n, Rational64::from_integer(c))).collect() }
}

/// Rewrites a photon-number criterion in intensity moments.
pub fn to_intensity(spec: &CriterionSpec) -> Poly {
    match spec.basis {
        MomentBasis::Intensity => spec.expr.clone(),
        MomentBasis::PhotonNumber => {
            let order = spec.order().max(1);
            let st = stirling_matrices(order).expect("criterion order within limits");
            spec.expr.substitute(|(k, l)| {
                let mut acc = Poly::zero();
                for a in 0..=k as usize {
                    for b in 0..=l as usize {
                        let c = st.second_kind(k as usize, a) * st.second_kind(l as usize, b);
                        if c != 0 {
                            acc = &acc + &Poly::moment(a as u8, b as u8).scale_int(c);
                        }
                    }
                }
                acc
            })
        }
    }
}

impl Identity {
    pub fn all() -> Vec<Identity> {
        let e_low = [("E_101", 1), ("E_011", 1), ("E_001", 1)];
        let mut n31 = vec![("E_201", 1), ("E_021", 1), ("E_111", 1)];
        n31.extend(e_low.iter().map(|&(n, _)| (n, 3)));
        let mut n22 = vec![("E_201", 1), ("E_021", 1), ("E_111", 2)];
        n22.extend(e_low.iter().map(|&(n, _)| (n, 2)));
        let mut n41 = vec![("E_301", 1), ("E_031", 1), ("E_211", 1), ("E_121", 1), ("E_201", 6), ("E_021", 6), ("E_111", 6)];
        n41.extend(e_low.iter().map(|&(n, _)| (n, 7)));
        vec![
            id("E_002", &[("E_201", 1), ("E_021", 1), ("E_111", -2)]),
            id("E_102", &[("E_301", 1), ("E_121", 1), ("E_211", -2)]),
            id("E_012", &[("E_211", 1), ("E_031", 1), ("E_121", -2)]),
            id("Emaj_20_11", &[("E_001", 1)]),
            id("Emaj_30_21", &[("E_101", 1), ("E_011", 1)]),
            id("Emaj_40_31", &[("E_201", 1), ("E_111", 1), ("E_021", 1)]),
            id("Emaj_40_22", &[("E_201", 1), ("E_111", 2), ("E_021", 1)]),
            id("Emaj_31_22", &[("E_111", 1)]),
            id("Emaj_50_41", &[("E_301", 1), ("E_211", 1), ("E_121", 1), ("E_031", 1)]),
            id("Emaj_50_32", &[("E_301", 1), ("E_211", 2), ("E_121", 2), ("E_031", 1)]),
            id("Emaj_41_32", &[("E_211", 1), ("E_121", 1)]),
            id("N_11", &[("E_001", 1)]),
            id("N_21", &e_low),
            id("N_31", &n31),
            id("N_22", &n22),
            id("N_41", &n41),
            id(
                "N_32",
                &[
                    ("E_301", 1),
                    ("E_031", 1),
                    ("E_211", 2),
                    ("E_121", 2),
                    ("E_201", 4),
                    ("E_021", 4),
                    ("E_111", 7),
                    ("E_101", 4),
                    ("E_011", 4),
                    ("E_001", 1),
                ],
            ),
            id("C_00_22", &[("M_1100", 1)]),
            id("C_20_02", &[("M_1001", 1)]),
        ]
    }

    fn sides(&self) -> (Poly, Poly) {
        let reg = Registry::standard();
        let lhs = to_intensity(reg.get(self.lhs).expect("identity names a known criterion"));
        let rhs = self.rhs.iter().fold(Poly::zero(), |acc, (n, c)| {
            &acc + &to_intensity(reg.get(n).expect("identity names a known criterion")).scale(*c)
        });
        (lhs, rhs)
    }

    /// Exact agreement of the two sides as polynomials in intensity moments.
    pub fn holds_symbolically(&self) -> bool {
        let (l, r) = self.sides();
        l == r
    }

    /// Numerical agreement with each side evaluated in its own basis.
    pub fn check_numeric(&self, tables: &Tables, rel_tol: f64) -> Result<()> {
        let reg = Registry::standard();
        let lhs = reg.require(self.lhs)?.evaluate(tables)?;
        let mut rhs = 0.0;
        let mut scale = lhs.abs();
        for (n, c) in &self.rhs {
            let v = reg.require(n)?.evaluate(tables)? * c.to_f64().unwrap_or(f64::NAN);
            rhs += v;
            scale += v.abs();
        }
        let (l, r) = self.sides();
        scale = scale.max(l.eval_abs(&tables.intensity)).max(r.eval_abs(&tables.intensity));
        if (lhs - rhs).abs() > rel_tol * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::Identity(format!("{} = {lhs} but its decomposition gives {rhs}", self.lhs)));
        }
        Ok(())
    }
}

/// Numerical check of a criterion against its generating rule.
pub fn check_origin_numeric(spec: &CriterionSpec, tables: &Tables, rel_tol: f64) -> Result<()> {
    let Some(origin) = &spec.origin else { return Ok(()) };
    let expanded = origin.expand();
    let factor = spec
        .expr
        .positive_multiple_of(&expanded)
        .or_else(|| (spec.expr == expanded).then(|| Rational64::from_integer(1)))
        .ok_or_else(|| Error::Identity(format!("{} is not a positive multiple of its generating rule", spec.id)))?;
    let value = spec.evaluate(tables)?;
    let reference = expanded.eval(&tables.intensity) * factor.to_f64().unwrap_or(f64::NAN);
    let scale = expanded.eval_abs(&tables.intensity) * factor.to_f64().unwrap_or(f64::NAN);
    if (value - reference).abs() > rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Identity(format!("{} = {value} but its generating rule gives {reference}", spec.id)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold_symbolically() {
        for i in Identity::all() {
            assert!(i.holds_symbolically(), "{} fails", i.lhs);
        }
    }
}
