//! From a histogram or distribution to a criterion report.

use serde::{Deserialize, Serialize};

use crate::criteria::{eval_f, CriterionResult, FRegion, Family, Registry, Tables};
use crate::data::{AnalysisReport, DetectorModel, JointDistribution, JointHistogram, Provenance};
use crate::error::{Error, Result};
use crate::moments::{factorial_moments, DEFAULT_ORDER};
use crate::ncd::{attach_ncd, NcdOptions};
use crate::reconstruct::{calibrate, em_reconstruct, CalibrationOptions, CalibrationParams, EmOptions};
use crate::uncertainty::{attach_stderr, bootstrap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Moment order `K`.
    pub order: usize,
    /// Families to evaluate. Empty means every moment criterion the order
    /// allows; `F` is evaluated only when listed.
    pub families: Vec<Family>,
    pub include_redundant: bool,
    /// Depths of violated criteria; skipped when absent.
    pub ncd: Option<NcdOptions>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { order: DEFAULT_ORDER, families: Vec::new(), include_redundant: false, ncd: Some(NcdOptions::default()) }
    }
}

/// How a photon-number (or photocount) distribution is obtained from a
/// histogram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Reconstruction {
    /// Relative frequencies, analysed at the photocount level.
    Direct,
    Em {
        detector_s: DetectorModel,
        detector_i: DetectorModel,
        options: EmOptions,
    },
    Calibrate {
        detector_s: DetectorModel,
        detector_i: DetectorModel,
        init: CalibrationParams,
        options: CalibrationOptions,
    },
}

impl Reconstruction {
    pub fn name(&self) -> &'static str {
        match self {
            Reconstruction::Direct => "direct",
            Reconstruction::Em { .. } => "em",
            Reconstruction::Calibrate { .. } => "calibrate",
        }
    }

    pub fn distribution(&self, h: &JointHistogram) -> Result<JointDistribution> {
        match self {
            Reconstruction::Direct => h.to_distribution(),
            Reconstruction::Em { detector_s, detector_i, options } => {
                let out = em_reconstruct(h, detector_s, detector_i, options)?;
                if !out.converged {
                    log::warn!("EM stopped after {} iterations without converging", out.iterations);
                }
                Ok(out.distribution)
            }
            Reconstruction::Calibrate { detector_s, detector_i, init, options } => {
                Ok(calibrate(h, init, detector_s, detector_i, options)?.distribution)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub reconstruction: Reconstruction,
    pub config: AnalysisConfig,
}

impl Pipeline {
    pub fn direct(config: AnalysisConfig) -> Pipeline {
        Pipeline { reconstruction: Reconstruction::Direct, config }
    }

    pub fn run(&self, h: &JointHistogram) -> Result<Vec<CriterionResult>> {
        analyze_distribution(&self.reconstruction.distribution(h)?, &self.config)
    }
}

/// Criterion values of one distribution, with depths when configured.
pub fn analyze_distribution(d: &JointDistribution, cfg: &AnalysisConfig) -> Result<Vec<CriterionResult>> {
    let table = factorial_moments(d, cfg.order)?;
    let tables = Tables::new(&table)?;
    let reg = Registry::standard();
    let mut results = if cfg.families.is_empty() {
        reg.evaluate_all(&tables, cfg.include_redundant)?
    } else {
        let moment: Vec<Family> = cfg.families.iter().copied().filter(|f| *f != Family::F).collect();
        let mut r = reg.evaluate_families(&moment, &tables)?;
        r.retain(|c| cfg.include_redundant || !c.redundant);
        r
    };
    if let Some(opts) = &cfg.ncd {
        attach_ncd(&mut results, &table, opts)?;
    }
    if cfg.families.contains(&Family::F) {
        results.extend(eval_f(d, FRegion::for_distribution(d))?);
    }
    Ok(results)
}

/// Bootstrap settings for [`analyze_histogram`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapConfig {
    pub replicas: usize,
    pub seed: u64,
}

pub fn analyze_histogram(
    h: &JointHistogram,
    pipeline: &Pipeline,
    boot: Option<BootstrapConfig>,
    input: Option<String>,
) -> Result<AnalysisReport> {
    let d = pipeline.reconstruction.distribution(h)?;
    let mut results = analyze_distribution(&d, &pipeline.config)?;
    let mut provenance = provenance(&d, &pipeline.config, input);
    provenance.normalization_deficit = h.deficit();
    provenance.notes.push(format!("reconstruction: {}", pipeline.reconstruction.name()));
    if let Some(b) = boot {
        let summary = bootstrap(h, pipeline, b.replicas, b.seed)?;
        attach_stderr(&mut results, &summary);
        provenance.bootstrap_replicas = b.replicas;
        provenance.seed = b.seed;
        if summary.failures > 0 {
            provenance.notes.push(format!("{} of {} bootstrap replicas failed", summary.failures, b.replicas));
        }
    }
    AnalysisReport::new(results, provenance)
}

/// Report for a distribution given directly; no bootstrap is possible.
pub fn analyze_file_distribution(d: &JointDistribution, cfg: &AnalysisConfig, input: Option<String>) -> Result<AnalysisReport> {
    let results = analyze_distribution(d, cfg)?;
    AnalysisReport::new(results, provenance(d, cfg, input))
}

fn provenance(d: &JointDistribution, cfg: &AnalysisConfig, input: Option<String>) -> Provenance {
    Provenance {
        input,
        distribution_kind: Some(d.kind()),
        order: cfg.order,
        ordering: cfg.ncd.map(|o| o.convention.name().to_string()).unwrap_or_default(),
        ..Provenance::default()
    }
}

/// Parses a comma-separated family list such as `E,D,T`.
pub fn parse_families(list: &str) -> Result<Vec<Family>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| Family::parse(s).ok_or_else(|| Error::Invalid(format!("unknown criterion family {s}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DistributionKind;

    #[test]
    fn vacuum_has_no_violations() {
        let d = JointDistribution::vacuum(4, 4, DistributionKind::PhotonNumber);
        let r = analyze_distribution(&d, &AnalysisConfig::default()).unwrap();
        assert!(!r.is_empty());
        assert!(r.iter().all(|c| !c.violated), "{:?}", r.iter().find(|c| c.violated));
    }

    #[test]
    fn family_lists() {
        assert_eq!(parse_families("E, d,T").unwrap(), vec![Family::E, Family::D, Family::T]);
        assert!(parse_families("E,Q").is_err());
    }

    #[test]
    fn order_too_small_for_family() {
        let d = JointDistribution::vacuum(4, 4, DistributionKind::PhotonNumber);
        let cfg = AnalysisConfig { order: 2, families: vec![Family::T], ..AnalysisConfig::default() };
        assert!(analyze_distribution(&d, &cfg).is_err());
    }
}
