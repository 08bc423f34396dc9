//! Registry and evaluation of the nonclassicality criteria.

mod catalog;
pub mod distribution;
pub mod identities;
pub mod origin;

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Poly;
use crate::moments::{convert_moments, Conversion, MomentBasis, MomentTable};

pub use distribution::{eval_f, f_lines, FRegion};
pub use origin::{Factor, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    E,
    Emaj,
    Epoly,
    B,
    L,
    D,
    T,
    M,
    C,
    N,
    F,
    AppendixA,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::E,
        Family::Emaj,
        Family::Epoly,
        Family::B,
        Family::L,
        Family::D,
        Family::T,
        Family::M,
        Family::C,
        Family::N,
        Family::F,
        Family::AppendixA,
    ];

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.to_string().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Global,
    Local,
}

/// A moment criterion; violated when its value is negative.
#[derive(Debug, Clone)]
pub struct CriterionSpec {
    pub id: String,
    pub family: Family,
    pub scope: Scope,
    /// Basis in which `expr` is written.
    pub basis: MomentBasis,
    pub expr: Poly,
    pub origin: Option<Origin>,
    pub redundant: bool,
}

impl CriterionSpec {
    /// Highest moment order `k + l` the criterion needs.
    pub fn order(&self) -> usize {
        self.expr.max_order()
    }

    /// Evaluates on intensity moments, converting to photon-number moments
    /// when the criterion is written in that basis.
    pub fn evaluate(&self, tables: &Tables) -> Result<f64> {
        let table = tables.select(self.basis);
        self.check_order(table)?;
        Ok(self.expr.eval(table))
    }

    /// Evaluates on a bare table in the criterion's own basis.
    pub fn evaluate_table(&self, table: &MomentTable) -> Result<f64> {
        if table.basis() != self.basis {
            let t = Tables::new(table)?;
            return self.evaluate(&t);
        }
        self.check_order(table)?;
        Ok(self.expr.eval(table))
    }

    fn check_order(&self, table: &MomentTable) -> Result<()> {
        if self.order() > table.order() {
            return Err(Error::InsufficientOrder { needed: self.order(), available: table.order() });
        }
        Ok(())
    }

    /// Scale for normalization, `None` when no scale can be defined.
    pub fn normalization_scale(&self, tables: &Tables) -> Result<Option<f64>> {
        match self.basis {
            MomentBasis::Intensity => match self.expr.homogeneous_degree() {
                Some(d) => {
                    let mean = tables.intensity.mean_intensity();
                    Ok((mean > 0.0).then(|| mean.powi(d as i32)))
                }
                None => Ok(None),
            },
            MomentBasis::PhotonNumber => {
                let reference = Tables::new(&tables.intensity.factorized())?;
                let r = self.expr.eval(&reference.photon).abs();
                let scale = self.expr.eval_abs(&reference.photon);
                if r > 1e-9 * scale {
                    Ok(Some(r))
                } else if scale > 0.0 {
                    Ok(Some(scale))
                } else {
                    Ok(None)
                }
            }
        }
    }

    pub fn result(&self, tables: &Tables) -> Result<CriterionResult> {
        let value = self.evaluate(tables)?;
        let normalized = match self.normalization_scale(tables)? {
            Some(scale) => value / scale,
            None if value == 0.0 => 0.0,
            None => {
                return Err(Error::Invalid(format!(
                    "{}: mean intensity is zero but the criterion value is {value}",
                    self.id
                )))
            }
        };
        Ok(CriterionResult::new(self, value, normalized))
    }
}

/// Intensity moments together with the derived photon-number moments.
#[derive(Debug, Clone)]
pub struct Tables {
    pub intensity: MomentTable,
    pub photon: MomentTable,
}

impl Tables {
    pub fn new(table: &MomentTable) -> Result<Self> {
        match table.basis() {
            MomentBasis::Intensity => Ok(Tables {
                intensity: table.clone(),
                photon: convert_moments(table, Conversion::IntensityToPhoton)?,
            }),
            MomentBasis::PhotonNumber => Ok(Tables {
                intensity: convert_moments(table, Conversion::PhotonToIntensity)?,
                photon: table.clone(),
            }),
        }
    }

    pub fn select(&self, basis: MomentBasis) -> &MomentTable {
        match basis {
            MomentBasis::Intensity => &self.intensity,
            MomentBasis::PhotonNumber => &self.photon,
        }
    }

    pub fn order(&self) -> usize {
        self.intensity.order()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub family: Family,
    pub scope: Scope,
    pub order: usize,
    pub value: f64,
    pub normalized: f64,
    pub stderr: Option<f64>,
    pub violated: bool,
    pub ncd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ncd_bracketed: Option<bool>,
    #[serde(default)]
    pub redundant: bool,
}

impl CriterionResult {
    pub fn new(spec: &CriterionSpec, value: f64, normalized: f64) -> Self {
        CriterionResult {
            id: spec.id.clone(),
            family: spec.family,
            scope: spec.scope,
            order: spec.order(),
            value,
            normalized,
            stderr: None,
            violated: value < 0.0,
            ncd: None,
            ncd_bracketed: None,
            redundant: spec.redundant,
        }
    }
}

pub struct Registry {
    specs: Vec<CriterionSpec>,
    index: HashMap<String, usize>,
}

impl Registry {
    fn build() -> Registry {
        let specs = catalog::moment_criteria();
        let mut index = HashMap::new();
        for (n, s) in specs.iter().enumerate() {
            let prev = index.insert(s.id.clone(), n);
            assert!(prev.is_none(), "duplicate criterion id {}", s.id);
        }
        Registry { specs, index }
    }

    /// The shared, immutable registry.
    pub fn standard() -> &'static Registry {
        static REGISTRY: OnceLock<Registry> = OnceLock::new();
        REGISTRY.get_or_init(Registry::build)
    }

    pub fn specs(&self) -> &[CriterionSpec] {
        &self.specs
    }

    pub fn get(&self, id: &str) -> Option<&CriterionSpec> {
        self.index.get(id).map(|&n| &self.specs[n])
    }

    pub fn require(&self, id: &str) -> Result<&CriterionSpec> {
        self.get(id).ok_or_else(|| Error::Invalid(format!("unknown criterion {id}")))
    }

    pub fn family(&self, family: Family) -> impl Iterator<Item = &CriterionSpec> {
        self.specs.iter().filter(move |s| s.family == family)
    }

    /// Evaluates every criterion of the listed families, failing if any of
    /// them needs moments beyond the table order.
    pub fn evaluate_families(&self, families: &[Family], tables: &Tables) -> Result<Vec<CriterionResult>> {
        self.specs.iter().filter(|s| families.contains(&s.family)).map(|s| s.result(tables)).collect()
    }

    /// Evaluates every criterion the table order allows.
    pub fn evaluate_all(&self, tables: &Tables, include_redundant: bool) -> Result<Vec<CriterionResult>> {
        self.specs
            .iter()
            .filter(|s| s.order() <= tables.order() && (include_redundant || !s.redundant))
            .map(|s| s.result(tables))
            .collect()
    }
}

fn family_results(families: &[Family], table: &MomentTable) -> Result<Vec<CriterionResult>> {
    Registry::standard().evaluate_families(families, &Tables::new(table)?)
}

pub fn eval_e(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::E], table)
}

/// Majorization sums, checked against their E-family decompositions.
pub fn eval_majorization_sums(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    let tables = Tables::new(table)?;
    let results = Registry::standard().evaluate_families(&[Family::Emaj], &tables)?;
    for id in identities::Identity::all().iter().filter(|i| i.lhs.starts_with("Emaj")) {
        id.check_numeric(&tables, 1e-12)?;
    }
    Ok(results)
}

pub fn eval_bl(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::B, Family::L], table)
}

pub fn eval_dt(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::D, Family::T], table)
}

pub fn eval_epoly(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::Epoly], table)
}

/// M and C families, checked for the two exact coincidences.
pub fn eval_mc(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    let results = family_results(&[Family::M, Family::C], table)?;
    let value = |id: &str| results.iter().find(|r| r.id == id).map(|r| r.value).unwrap_or(f64::NAN);
    for (c, m) in [("C_00_22", "M_1100"), ("C_20_02", "M_1001")] {
        if value(c) != value(m) {
            return Err(Error::Identity(format!("{c} = {} differs from {m} = {}", value(c), value(m))));
        }
    }
    Ok(results)
}

/// N family from a photon-number (or intensity) moment table.
pub fn eval_n(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::N], table)
}

pub fn eval_appendix_a(table: &MomentTable) -> Result<Vec<CriterionResult>> {
    family_results(&[Family::AppendixA], table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentBasis;

    fn by_id<'a>(r: &'a [CriterionResult], id: &str) -> &'a CriterionResult {
        r.iter().find(|x| x.id == id).unwrap()
    }

    #[test]
    fn registry_is_complete() {
        let reg = Registry::standard();
        let count = |f| reg.family(f).count();
        assert_eq!(count(Family::E), 13);
        assert_eq!(count(Family::Emaj), 8);
        assert_eq!(count(Family::L), 12);
        assert_eq!(count(Family::N), 6);
        assert_eq!(count(Family::M), 3);
        assert_eq!(count(Family::C), 4);
        assert!(reg.get("E_0111").is_some());
        assert!(reg.get("aD_210_111.s").is_some());
    }

    #[test]
    fn every_origin_matches() {
        for spec in Registry::standard().specs() {
            if let Some(o) = &spec.origin {
                assert!(o.matches(&spec.expr), "{} does not match its generating rule:\n  {}\n  {}", spec.id, spec.expr, o.expand());
            }
        }
    }

    #[test]
    fn poisson_boundary() {
        let t = MomentTable::from_fn(5, MomentBasis::Intensity, |_, _| 1.0);
        let r = eval_e(&t).unwrap();
        assert_eq!(by_id(&r, "E_001").value, 0.0);
        assert!(!by_id(&r, "E_001").violated);
    }

    #[test]
    fn insufficient_order() {
        let t = MomentTable::from_fn(3, MomentBasis::Intensity, |_, _| 1.0);
        assert!(matches!(eval_e(&t), Err(Error::InsufficientOrder { .. })));
    }
}
