//! Identity suite: Stirling inverses, criterion decompositions and
//! generating rules, checked on random moment tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::criteria::identities::{check_origin_numeric, Identity};
use crate::criteria::{Registry, Tables};
use crate::data::{DistributionKind, JointDistribution, Matrix};
use crate::error::{Error, Result};
use crate::moments::{factorial_moments, stirling_matrices, MomentTable, MAX_ORDER};

pub const REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestSummary {
    pub tables: usize,
    pub identities: usize,
    pub origins: usize,
    pub failures: Vec<String>,
}

impl SelfTestSummary {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Intensity moments of a random distribution on a small grid, so the
/// table is realizable and of order [`MAX_ORDER`].
pub fn random_table(rng: &mut impl Rng) -> MomentTable {
    let n = rng.random_range(2..=7);
    let probs = Matrix::from_fn(n, n, |_, _| {
        let u: f64 = rng.random();
        -(1.0 - u).ln()
    });
    let d = JointDistribution::normalized(probs, DistributionKind::PhotonNumber).expect("positive weights").0;
    factorial_moments(&d, MAX_ORDER).expect("grid is non-empty")
}

pub fn run(tables: usize, seed: u64) -> Result<SelfTestSummary> {
    let mut failures = Vec::new();
    for k in 1..=MAX_ORDER {
        if let Err(e) = stirling_matrices(k) {
            failures.push(format!("Stirling order {k}: {e}"));
        }
    }
    let identities = Identity::all();
    for i in &identities {
        if !i.holds_symbolically() {
            failures.push(format!("{} does not hold symbolically", i.lhs));
        }
    }
    let reg = Registry::standard();
    let origins: Vec<_> = reg.specs().iter().filter(|s| s.origin.is_some()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..tables {
        let table = random_table(&mut rng);
        let tabs = Tables::new(&table)?;
        for i in &identities {
            if let Err(e) = i.check_numeric(&tabs, REL_TOL) {
                failures.push(format!("table {t}: {e}"));
            }
        }
        for s in &origins {
            if let Err(e) = check_origin_numeric(s, &tabs, REL_TOL) {
                failures.push(format!("table {t}: {e}"));
            }
        }
        if failures.len() > 50 {
            return Err(Error::Identity(failures[..50].join("; ")));
        }
    }
    Ok(SelfTestSummary { tables, identities: identities.len(), origins: origins.len(), failures })
}
