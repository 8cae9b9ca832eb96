//! Pipeline configuration, read from a single JSON document.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agdd::AgddConfig;
use crate::camera::View;
use crate::ddim::SdeditParams;
use crate::error::{Error, Result};
use crate::warpmask::{VoteAverage, DEFAULT_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// Noise-replaying oracle built from the dataset's objects-excluded depth.
    #[default]
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PriorConfig {
    pub kind: PriorKind,
    /// Scale applied to the oracle's normalized target.
    pub gamma: f64,
    /// Shift applied to the oracle's normalized target.
    pub beta: f64,
    /// Finest tile spacing of the oracle's correction family.
    pub tile: usize,
    /// Number of tile scales, coarsest used first.
    pub levels: usize,
    /// Amplitude of a left-to-right ramp added to the target.
    pub bias_ramp: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig { kind: PriorKind::Oracle, gamma: 2.0, beta: 0.5, tile: 8, levels: 4, bias_ramp: 0.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Directory of predicted renders `<view_id>.ppm` compared against `rgb_clean/`.
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: PathBuf,
    pub output: PathBuf,
    /// Defaults to the first view in `cameras.json`.
    pub reference_view: Option<String>,
    pub theta: f64,
    /// Removal-region depth tolerance; per view 1% of the median depth when unset.
    pub eps_d: Option<f64>,
    pub vote_average: VoteAverage,
    pub bbox_padding: usize,
    pub close_radius: usize,
    /// Directory of externally segmented masks `<view_id>.pgm` that replace the fallback refiner.
    pub external_masks: Option<PathBuf>,
    /// Reference image for point colors; defaults to `rgb_clean/<reference>.ppm`.
    pub reference_rgb: Option<PathBuf>,
    pub seed: u64,
    /// Worker threads; defaults to the number of logical cores.
    pub workers: Option<usize>,
    pub agdd: AgddConfig,
    pub prior: PriorConfig,
    pub sdedit: SdeditParams,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset: PathBuf::from("dataset"),
            output: PathBuf::from("out"),
            reference_view: None,
            theta: DEFAULT_THETA,
            eps_d: None,
            vote_average: VoteAverage::AllViews,
            bbox_padding: 0,
            close_radius: 2,
            external_masks: None,
            reference_rgb: None,
            seed: 0,
            workers: None,
            agdd: AgddConfig::default(),
            prior: PriorConfig::default(),
            sdedit: SdeditParams::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let cfg: PipelineConfig = serde_json::from_slice(bytes).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = crate::io::read_file(path)?;
        Self::from_json(&bytes).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::Config(format!("theta must lie in (0, 1], got {}", self.theta)));
        }
        if let Some(e) = self.eps_d {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::Config(format!("eps_d must be > 0, got {e}")));
            }
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.prior.tile == 0 || self.prior.levels == 0 {
            return Err(Error::Config("prior.tile and prior.levels must be >= 1".into()));
        }
        if !(self.prior.gamma.is_finite() && self.prior.beta.is_finite() && self.prior.bias_ramp.is_finite()) {
            return Err(Error::Config("prior distortion must be finite".into()));
        }
        self.agdd.validate()?;
        self.sdedit.t_inv()?;
        Ok(())
    }

    /// The reference view, which must exist in `views`.
    pub fn reference<'a>(&self, views: &'a [View]) -> Result<&'a View> {
        match &self.reference_view {
            Some(id) => views
                .iter()
                .find(|v| &v.id == id)
                .ok_or_else(|| Error::Config(format!("reference view {id:?} not in cameras.json"))),
            None => views.first().ok_or_else(|| Error::Config("cameras.json lists no views".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_json(cfg.to_json().as_bytes()).unwrap(), cfg);
        assert_eq!(cfg.theta, 0.6);
        assert_eq!(cfg.sdedit.t_inv().unwrap(), 150);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(PipelineConfig::from_json(br#"{"theta": 0}"#), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_json(br#"{"sdedit": {"strength": 2}}"#), Err(Error::Strength(_))));
        assert!(matches!(PipelineConfig::from_json(br#"{"bogus": 1}"#), Err(Error::Config(_))));
        assert!(PipelineConfig::from_json(br#"{"agdd": {"inner_iters": 0}}"#).is_err());
    }
}
