//! Run configuration: a sectioned TOML file, every field overridable from
//! command-line flags. A `manifest.json` written by a previous run is
//! accepted in place of the TOML and reproduces that run's configuration
//! exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use upin_core::{
    BarrierContract, EngineError, Model, Result, RoughBergomiParams, ScanSettings,
    TruncationReading,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub contract: ContractSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticSection>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Constant,
    RoughBergomi,
    TruncatedRoughBergomi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub sigma0: f64,
    #[serde(default)]
    pub nu: f64,
    #[serde(default = "default_hurst")]
    pub hurst: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_truncation_level")]
    pub truncation_level: f64,
    #[serde(default = "default_reading")]
    pub truncation_reading: TruncationReading,
}

fn default_hurst() -> f64 {
    0.5
}

fn default_truncation_level() -> f64 {
    5.0
}

fn default_reading() -> TruncationReading {
    TruncationReading::Variance
}

impl ModelSection {
    pub fn to_model(&self) -> Result<Model> {
        let model = match self.kind {
            ModelKind::Constant => Model::Constant { sigma0: self.sigma0, rho: self.rho },
            ModelKind::RoughBergomi => Model::RoughBergomi(RoughBergomiParams {
                sigma0: self.sigma0,
                nu: self.nu,
                hurst: self.hurst,
                rho: self.rho,
            }),
            ModelKind::TruncatedRoughBergomi => Model::TruncatedRoughBergomi {
                params: RoughBergomiParams {
                    sigma0: self.sigma0,
                    nu: self.nu,
                    hurst: self.hurst,
                    rho: self.rho,
                },
                level: self.truncation_level,
                reading: self.truncation_reading,
            },
        };
        model
            .validate()
            .map_err(|e| EngineError::InvalidArgument(format!("model: {}", e.message())))?;
        Ok(model)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractSection {
    pub spot: f64,
    pub strike: f64,
    pub barrier: f64,
    pub maturity: f64,
}

impl ContractSection {
    pub fn to_contract(&self) -> Result<BarrierContract> {
        BarrierContract::new(self.spot, self.strike, self.barrier, self.maturity)
            .map_err(|e| EngineError::InvalidArgument(format!("contract: {}", e.message())))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub paths: usize,
    pub steps: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 42, paths: 200_000, steps: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Strictly decreasing maturities.
    pub maturities: Vec<f64>,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection { maturities: vec![0.5, 0.25, 0.1, 0.05, 0.025, 0.01] }
    }
}

/// Tail-bound constants. Pinned values win; anything left `None` is
/// calibrated on a training batch before the main run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    /// Multiplicative slack the calibration leaves above the training data.
    pub headroom: f64,
    pub calibration_paths: usize,
    pub grr_p0: u32,
    pub grr_gamma0: f64,
    pub grr_c: Option<f64>,
    /// Paths per batch in the roughness-certificate check; the functional
    /// costs O(steps^2) per path, so this stays well below `run.paths`.
    pub grr_paths: usize,
    /// Margin for the certificate constant. Wider than `headroom`: the
    /// calibration tracks a batch minimum, whose batch-to-batch spread is a
    /// factor of about two, not a percent-level wobble.
    pub grr_headroom: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection {
            c1: None,
            c2: None,
            c3: None,
            headroom: 1.2,
            calibration_paths: 50_000,
            grr_p0: 7,
            grr_gamma0: 4.5,
            grr_c: None,
            grr_paths: 10_000,
            grr_headroom: 3.0,
        }
    }
}

/// Precomputed scan rows injected in place of Monte Carlo; exercises the
/// reporting and chart pipeline with known numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub maturities: Vec<f64>,
    pub hit_probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub european: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub up_in: Option<Vec<f64>>,
}

impl RunConfig {
    /// Cross-field checks on top of serde's structural ones; errors name the
    /// offending section and field.
    pub fn validate(&self) -> Result<()> {
        self.model.to_model()?;
        self.contract.to_contract()?;
        if self.run.paths == 0 {
            return Err(EngineError::InvalidArgument("run.paths: must be positive".into()));
        }
        if self.run.steps < 2 {
            return Err(EngineError::InvalidArgument(format!(
                "run.steps: need at least 2 steps (got {})",
                self.run.steps
            )));
        }
        self.scan_settings()
            .validate()
            .map_err(|e| EngineError::InvalidArgument(format!("scan: {}", e.message())))?;
        let b = &self.bounds;
        for (name, v) in [("c1", b.c1), ("c2", b.c2), ("c3", b.c3), ("grr_c", b.grr_c)] {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(EngineError::InvalidArgument(format!(
                        "bounds.{name}: must be finite and nonnegative (got {v})"
                    )));
                }
            }
        }
        for (name, h) in [("headroom", b.headroom), ("grr_headroom", b.grr_headroom)] {
            if !(h >= 1.0) {
                return Err(EngineError::InvalidArgument(format!(
                    "bounds.{name}: must be at least 1 (got {h})"
                )));
            }
        }
        if b.calibration_paths == 0 || b.grr_paths == 0 {
            return Err(EngineError::InvalidArgument(
                "bounds.calibration_paths, bounds.grr_paths: must be positive".into(),
            ));
        }
        if let Some(s) = &self.synthetic {
            if s.maturities.is_empty() {
                return Err(EngineError::InvalidArgument(
                    "synthetic.maturities: must not be empty".into(),
                ));
            }
            for w in s.maturities.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(EngineError::InvalidArgument(
                        "synthetic.maturities: must be strictly decreasing".into(),
                    ));
                }
            }
            for (name, len) in [
                ("hit_probs", Some(s.hit_probs.len())),
                ("european", s.european.as_ref().map(Vec::len)),
                ("up_in", s.up_in.as_ref().map(Vec::len)),
            ] {
                if let Some(len) = len {
                    if len != s.maturities.len() {
                        return Err(EngineError::InvalidArgument(format!(
                            "synthetic.{name}: length {len} does not match {} maturities",
                            s.maturities.len()
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            maturities: self.scan.maturities.clone(),
            n_paths: self.run.paths,
            n_steps: self.run.steps,
            seed: self.run.seed,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelSection {
                kind: ModelKind::TruncatedRoughBergomi,
                sigma0: 0.2,
                nu: 0.5,
                hurst: 0.2,
                rho: -0.3,
                truncation_level: 5.0,
                truncation_reading: TruncationReading::Variance,
            },
            contract: ContractSection { spot: 10.0, strike: 9.5, barrier: 11.0, maturity: 0.5 },
            run: RunSection::default(),
            scan: ScanSection::default(),
            bounds: BoundsSection::default(),
            synthetic: None,
        }
    }
}

/// Loads a config file. A leading `{` means the file is a run manifest; its
/// embedded configuration is extracted so a run can be reproduced from its
/// own manifest.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        EngineError::InvalidArgument(format!("cannot read config {}: {e}", path.display()))
    })?;
    if text.trim_start().starts_with('{') {
        let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            EngineError::InvalidArgument(format!("{}: not valid manifest JSON: {e}", path.display()))
        })?;
        let config = manifest.get("config").ok_or_else(|| {
            EngineError::InvalidArgument(format!(
                "{}: manifest has no `config` section",
                path.display()
            ))
        })?;
        serde_json::from_value(config.clone()).map_err(|e| {
            EngineError::InvalidArgument(format!("{}: bad embedded config: {e}", path.display()))
        })
    } else {
        toml::from_str(&text).map_err(|e| {
            EngineError::InvalidArgument(format!("{}: {e}", path.display()))
        })
    }
}
