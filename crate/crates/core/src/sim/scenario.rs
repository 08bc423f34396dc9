//! Scenario files: twin-beam and detector parameters plus sampling settings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{choose_n_max, detect_with, povm, sample_histogram, twinbeam_distribution, PovmMatrix};
use crate::data::{DetectorModel, JointDistribution, JointHistogram, TwinBeamModel};
use crate::error::{Error, Result};

/// Per-component tail allowed when the grid is chosen automatically.
pub const AUTO_TAIL: f64 = 1e-10;

/// Detector arm as written in a scenario; the dark level may be given per
/// pixel or for the whole arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub pixels: u32,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_mean_per_pixel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_total: Option<f64>,
}

impl DetectorSpec {
    pub fn model(&self) -> Result<DetectorModel> {
        let d = match (self.dark_mean_per_pixel, self.dark_total) {
            (Some(_), Some(_)) => {
                return Err(Error::Invalid("give either dark_mean_per_pixel or dark_total, not both".into()))
            }
            (Some(d), None) => d,
            (None, Some(t)) => t / self.pixels.max(1) as f64,
            (None, None) => 0.0,
        };
        DetectorModel::new(self.pixels, self.efficiency, d)
    }
}

impl From<DetectorModel> for DetectorSpec {
    fn from(d: DetectorModel) -> Self {
        DetectorSpec {
            pixels: d.pixels,
            efficiency: d.efficiency,
            dark_mean_per_pixel: Some(d.dark_mean_per_pixel),
            dark_total: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub twinbeam: TwinBeamModel,
    pub detector_s: DetectorSpec,
    pub detector_i: DetectorSpec,
    pub frames: u64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub distribution: JointDistribution,
    pub photocount: JointDistribution,
    pub histogram: JointHistogram,
}

impl Scenario {
    /// Parameters used throughout the examples and the acceptance suite.
    pub fn reference() -> Scenario {
        Scenario {
            twinbeam: TwinBeamModel { m_p: 270.0, b_p: 0.032, m_s: 0.01, b_s: 7.6, m_i: 0.026, b_i: 5.3 },
            detector_s: DetectorSpec { pixels: 6528, efficiency: 0.230, dark_mean_per_pixel: None, dark_total: Some(0.040) },
            detector_i: DetectorSpec { pixels: 6784, efficiency: 0.220, dark_mean_per_pixel: None, dark_total: Some(0.040) },
            frames: 1_200_000,
            seed: 20240601,
            n_max: None,
        }
    }

    pub fn parse_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Scenario::parse_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.twinbeam.validate()?;
        self.detector_s.model()?;
        self.detector_i.model()?;
        if self.frames == 0 {
            return Err(Error::Invalid("frames must be positive".into()));
        }
        Ok(())
    }

    pub fn detectors(&self) -> Result<(DetectorModel, DetectorModel)> {
        Ok((self.detector_s.model()?, self.detector_i.model()?))
    }

    pub fn grid(&self) -> Result<usize> {
        match self.n_max {
            Some(n) => Ok(n),
            None => choose_n_max(&self.twinbeam, AUTO_TAIL),
        }
    }

    pub fn povms(&self, n_max: usize) -> Result<(PovmMatrix, PovmMatrix)> {
        let (ds, di) = self.detectors()?;
        let ts = povm(&ds, (n_max + 20).min(ds.pixels as usize), n_max)?;
        let ti = povm(&di, (n_max + 20).min(di.pixels as usize), n_max)?;
        Ok((ts, ti))
    }

    /// Photon-number distribution and its exact photocount image.
    pub fn exact(&self) -> Result<(JointDistribution, JointDistribution)> {
        self.validate()?;
        let n_max = self.grid()?;
        let p = twinbeam_distribution(&self.twinbeam, n_max)?;
        let (ts, ti) = self.povms(n_max)?;
        let f = detect_with(&p, &ts, &ti)?;
        Ok((p, f))
    }

    pub fn run(&self) -> Result<SimulationOutput> {
        let (distribution, photocount) = self.exact()?;
        let histogram = sample_histogram(&photocount, self.frames, self.seed)?;
        Ok(SimulationOutput { distribution, photocount, histogram })
    }
}
