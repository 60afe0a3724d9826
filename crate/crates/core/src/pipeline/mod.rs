//! End-to-end orchestration: calibration, compatibility, mixture inference
//! and report emission.
//!
//! Each stage draws from its own stream of the run seed, so any stage can
//! be replayed from the persisted output of the previous one and gives the
//! same result as a full run.

mod data;
mod report;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::{
    calibrate_frechet, calibrate_gumbel_virtual, calibrate_virtual_size, calibrate_weibull,
    AnchorGrid, CalibrationResult, CompatibilityResult, ExpertQuantiles, GumbelGrid, ISConfig,
    PriorSpec, RhoGrid,
};
use crate::error::{Error, Result, Stage};
use crate::inference::summary::Provenance;
use crate::inference::{
    mixture_posterior_mcmc, McmcSettings, MixtureConfig, MixturePriors, PosteriorDraws,
    SelectionReport,
};

pub use data::{ingest_csv, parse_csv, Dataset, Record};
pub use report::{
    emit_report, predictive_curve, write_draws_csv, PredictivePoint, DRAWS_FILE, PREDICTIVE_FILE,
    REPORT_FILE,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Run configuration. Every field but `schema_version` has a default; the
/// defaults reproduce the rainfall case study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    #[serde(default = "ExpertQuantiles::rainfall_quartiles")]
    pub expert: ExpertQuantiles,
    /// Lower bound of the Fréchet location.
    #[serde(default)]
    pub mu_inf: f64,
    /// Lower bound of the Gumbel location; `null` leaves it free.
    #[serde(default = "default_gumbel_floor")]
    pub gumbel_mu_floor: Option<f64>,
    #[serde(default = "default_gumbel_m")]
    pub gumbel_m: usize,
    #[serde(default = "default_candidates")]
    pub candidate_ms: Vec<u32>,
    #[serde(default)]
    pub is: ISConfig,
    /// Anchor lattice; derived from the expert values when absent.
    #[serde(default)]
    pub anchor_grid: Option<AnchorGrid>,
    #[serde(default)]
    pub rho_grid: RhoGrid,
    /// Prior draws per candidate in the compatibility step.
    #[serde(default = "default_compat_draws")]
    pub compat_draws: usize,
    #[serde(default)]
    pub mcmc: McmcSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub prior_weights: MixtureConfig,
    /// Data file, relative to the configuration file.
    #[serde(default)]
    pub data: Option<String>,
}

fn default_gumbel_floor() -> Option<f64> {
    Some(0.0)
}

fn default_gumbel_m() -> usize {
    3
}

fn default_candidates() -> Vec<u32> {
    (1..=8).collect()
}

fn default_compat_draws() -> usize {
    100_000
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str(&format!("{{\"schema_version\": {SCHEMA_VERSION}}}"))
            .expect("defaults deserialize")
    }
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(s).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.gumbel_m != 3 {
            return Err(Error::config("the Gumbel virtual-sample search supports gumbel_m = 3 only"));
        }
        if self.candidate_ms.is_empty() || self.candidate_ms.contains(&0) {
            return Err(Error::config("candidate_ms must be nonempty positive integers"));
        }
        if !self.mu_inf.is_finite() || self.gumbel_mu_floor.is_some_and(|f| !f.is_finite()) {
            return Err(Error::config("mu_inf and gumbel_mu_floor must be finite"));
        }
        if self.compat_draws < 1000 {
            return Err(Error::config("compat_draws must be at least 1000"));
        }
        self.is.validate()?;
        self.mcmc.validate()?;
        self.prior_weights.validate()
    }

    pub fn anchor_grid(&self) -> AnchorGrid {
        self.anchor_grid.unwrap_or_else(|| AnchorGrid::around(&self.expert))
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }

    fn stage_rng(&self, stage: Stage) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stage as u64);
        r
    }
}

/// Stages 1 and 2: the Gumbel virtual sample and a Fréchet and a Weibull
/// calibration per candidate virtual size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationStage {
    pub gumbel: CalibrationResult,
    pub frechet: Vec<CalibrationResult>,
    pub weibull: Vec<CalibrationResult>,
}

/// Stage 3: compatible virtual sizes and the resulting block priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStage {
    pub frechet: CompatibilityResult,
    pub weibull: CompatibilityResult,
    pub priors: MixturePriors,
}

pub fn run_calibration(cfg: &RunConfig) -> Result<CalibrationStage> {
    let gumbel = calibrate_gumbel_virtual(&cfg.expert, &GumbelGrid::around(&cfg.expert), cfg.gumbel_mu_floor)
        .map_err(|e| e.in_stage(Stage::GumbelCalibration))?;
    let mut rng = cfg.stage_rng(Stage::VirtualSizeCalibration);
    let grid = cfg.anchor_grid();
    let mut frechet = Vec::with_capacity(cfg.candidate_ms.len());
    let mut weibull = Vec::with_capacity(cfg.candidate_ms.len());
    for &m in &cfg.candidate_ms {
        let m = m as f64;
        let f = calibrate_frechet(m, cfg.mu_inf, &cfg.expert, &grid, &cfg.is, &mut rng)
            .map_err(|e| e.in_stage(Stage::VirtualSizeCalibration))?;
        let w = calibrate_weibull(m, &cfg.expert, &grid, &cfg.rho_grid, &cfg.is, &mut rng)
            .map_err(|e| e.in_stage(Stage::VirtualSizeCalibration))?;
        frechet.push(f);
        weibull.push(w);
    }
    Ok(CalibrationStage {
        gumbel,
        frechet,
        weibull,
    })
}

pub fn run_selection(cfg: &RunConfig, cal: &CalibrationStage) -> Result<SelectionStage> {
    let inner = || -> Result<SelectionStage> {
        let PriorSpec::Gumbel(g) = &cal.gumbel.hyper else {
            return Err(Error::config("stage-1 output is not a Gumbel calibration"));
        };
        let mut rng = cfg.stage_rng(Stage::Compatibility);
        let frechet = calibrate_virtual_size(&cal.frechet, g, cfg.compat_draws, &mut rng)?;
        let weibull = calibrate_virtual_size(&cal.weibull, g, cfg.compat_draws, &mut rng)?;
        let (PriorSpec::Frechet(f), PriorSpec::Weibull(w)) =
            (&frechet.selected().hyper, &weibull.selected().hyper)
        else {
            unreachable!("compatibility keeps the model of its candidates")
        };
        let priors = MixturePriors {
            frechet: *f,
            weibull: *w,
            gumbel: g.clone(),
        };
        Ok(SelectionStage {
            frechet,
            weibull,
            priors,
        })
    };
    inner().map_err(|e| e.in_stage(Stage::Compatibility))
}

pub fn run_inference(cfg: &RunConfig, data: &Dataset, sel: &SelectionStage) -> Result<PosteriorDraws> {
    let mut rng = cfg.stage_rng(Stage::Inference);
    mixture_posterior_mcmc(&data.values(), &sel.priors, &cfg.prior_weights, &cfg.mcmc, &mut rng)
        .map_err(|e| e.in_stage(Stage::Inference))
}

pub fn build_report(cfg: &RunConfig, data: &Dataset, draws: &PosteriorDraws) -> Result<SelectionReport> {
    let provenance = Provenance {
        seed: cfg.seed,
        config_digest: cfg.digest(),
    };
    SelectionReport::from_draws(draws, &data.values(), provenance).map_err(|e| e.in_stage(Stage::Report))
}

/// Everything a full run produces.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub calibration: CalibrationStage,
    pub selection: SelectionStage,
    pub draws: PosteriorDraws,
    pub report: SelectionReport,
}

/// Run all stages. Failures carry the identity of the failing stage.
pub fn run_pipeline(cfg: &RunConfig, data: &Dataset) -> Result<PipelineRun> {
    cfg.validate()?;
    let calibration = run_calibration(cfg)?;
    let selection = run_selection(cfg, &calibration)?;
    let draws = run_inference(cfg, data, &selection)?;
    let report = build_report(cfg, data, &draws)?;
    Ok(PipelineRun {
        calibration,
        selection,
        draws,
        report,
    })
}

/// A stage output tagged with the digest of the configuration that
/// produced it, so a resumed run can tell whether it is still valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub config_digest: String,
    pub output: T,
}

impl<T> Stamped<T> {
    pub fn new(cfg: &RunConfig, output: T) -> Self {
        Self {
            config_digest: cfg.digest(),
            output,
        }
    }

    pub fn matches(&self, cfg: &RunConfig) -> bool {
        self.config_digest == cfg.digest()
    }
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let s = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&s)?)
}
