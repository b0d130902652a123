//! Experiment configuration in TOML.
//!
//! Every section and key is optional; omitted values take the defaults below.
//! Unknown keys are rejected, and every error names the offending key.
//!
//! ```toml
//! [basis]
//! dim = 3
//! modes = 4
//! dealias = true              # collocate f(u) on the ⌈(ρ+1)/2⌉·M grid
//!
//! [omega]
//! kind = "logistic-decay"     # or "constant" (uses `value`)
//! min = 0.5
//! max = 2.0
//! steepness = 0.1
//! holder_exponent = 1.0
//! holder_constant = 0.04
//!
//! [mu]
//! kind = "logistic-rise"      # or "constant" (uses `value`)
//! min = 1.0
//! max = 2.0
//! # steepness omitted: largest value passing every assumption check
//! holder_exponent = 1.0
//! holder_constant = 0.01
//!
//! [nonlinearity]
//! beta = 1.0
//! lambda = 1.0
//! rho = 4.0
//!
//! [scheme]
//! alpha = 0.9
//! s = 0.9
//! h = 0.01
//! tau = 0.0
//! t_end = 50.0
//! seed = 1
//!
//! [assumptions]               # uniform sampling grid for the checks
//! start = -100.0
//! end = 50.0
//! points = 301
//! ```
//!
//! Further sections (`ensemble`, `absorbing`, `pullback`, `operator`,
//! `spectrum`, `output`) hold experiment parameters; see the field docs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::basis::SpectralBasis;
use crate::coeffs::{compute_constants, max_admissible_mu_steepness, uniform_grid, MuModel, OmegaModel};
use crate::diagnostics::{Calibration, EnsembleSpec};
use crate::dynamics::Problem;
use crate::error::{Error, Result};
use crate::nonlin::{admissibility, Admissibility, NonlinearitySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub dim: usize,
    pub modes: usize,
    pub dealias: bool,
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            modes: 4,
            dealias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OmegaConfig {
    pub kind: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    pub steepness: f64,
    pub holder_exponent: f64,
    pub holder_constant: f64,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            kind: "logistic-decay".into(),
            value: 1.0,
            min: 0.5,
            max: 2.0,
            steepness: 0.1,
            holder_exponent: 1.0,
            holder_constant: 0.04,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MuConfig {
    pub kind: String,
    pub value: f64,
    pub min: f64,
    pub max: f64,
    /// `None` selects the largest steepness passing the assumption checks.
    pub steepness: Option<f64>,
    pub holder_exponent: f64,
    pub holder_constant: f64,
}

impl Default for MuConfig {
    fn default() -> Self {
        Self {
            kind: "logistic-rise".into(),
            value: 1.0,
            min: 1.0,
            max: 2.0,
            steepness: None,
            holder_exponent: 1.0,
            holder_constant: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub alpha: f64,
    pub s: f64,
    pub h: f64,
    pub tau: f64,
    pub t_end: f64,
    pub seed: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            s: 0.9,
            h: 1e-2,
            tau: 0.0,
            t_end: 50.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            start: -100.0,
            end: 50.0,
            points: 301,
        }
    }
}

/// Random initial data for simulate, energy-report and decay-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub size: usize,
    pub energy_min: f64,
    pub energy_max: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            size: 20,
            energy_min: 1e-2,
            energy_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AbsorbingConfig {
    /// Initial energy bounds `R`.
    pub radii: Vec<f64>,
    pub size: usize,
    /// Energy of the no-pullback control, as a multiple of `C₂R_𝔸`.
    pub control_factor: f64,
}

impl Default for AbsorbingConfig {
    fn default() -> Self {
        Self {
            radii: vec![10.0, 100.0],
            size: 20,
            control_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PullbackConfig {
    /// Final time; `None` uses `scheme.t_end`.
    pub t_fixed: Option<f64>,
    /// Pullback offsets `t_fixed − τ`, increasing.
    pub offsets: Vec<f64>,
    pub size: usize,
    pub energy: f64,
    pub min_decrease: f64,
}

impl Default for PullbackConfig {
    fn default() -> Self {
        Self {
            t_fixed: None,
            offsets: vec![10.0, 20.0, 40.0, 80.0],
            size: 10,
            energy: 10.0,
            min_decrease: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub samples: usize,
    pub quad_tol: f64,
    pub limit_alphas: Vec<f64>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            quad_tol: 1e-8,
            limit_alphas: vec![0.9, 0.99, 0.999],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub alphas: Vec<f64>,
    pub times: Vec<f64>,
    /// Number of lowest distinct eigenvalues listed.
    pub modes: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.5, 0.9, 1.0],
            times: vec![0.0],
            modes: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write the binary state dump for `simulate`.
    pub dump_states: bool,
    /// Record every `stride`-th step in trajectory tables.
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("oscillon-out"),
            dump_states: false,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub basis: BasisConfig,
    pub omega: OmegaConfig,
    pub mu: MuConfig,
    pub nonlinearity: NonlinearityConfig,
    pub scheme: SchemeConfig,
    pub assumptions: SamplingConfig,
    pub ensemble: EnsembleConfig,
    pub absorbing: AbsorbingConfig,
    pub pullback: PullbackConfig,
    pub operator: OperatorConfig,
    pub spectrum: SpectrumConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NonlinearityConfig {
    pub beta: f64,
    pub lambda: f64,
    pub rho: f64,
}

impl Default for NonlinearityConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            lambda: 1.0,
            rho: 4.0,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        message: message.into(),
    }
}

/// Maps a validation error from a model constructor onto its config key.
fn at_section(section: &str, e: Error) -> Error {
    match e {
        Error::InvalidArgument { name, reason } => {
            let key = name.rsplit('.').next().unwrap_or(name);
            config_err(&format!("{section}.{key}"), reason)
        }
        other => other,
    }
}

fn positive(key: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(config_err(key, format!("must be finite and positive, got {x}")))
    }
}

/// Everything an experiment needs: the problem, its calibration at
/// `t_end`, and the exponent pair of the admissible `(ρ, s, α)`.
#[derive(Debug, Clone)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub calibration: Calibration,
    pub admissibility: Admissibility,
    pub sample_grid: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            config_err(&key, e.into_inner().message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err("<file>", format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        if self.scheme.seed > i64::MAX as u64 {
            return Err(config_err("scheme.seed", "TOML integers stop at 2^63 - 1"));
        }
        toml::to_string_pretty(self).map_err(|e| config_err("<document>", e.to_string()))
    }

    pub fn omega_model(&self) -> Result<OmegaModel> {
        let c = &self.omega;
        let model = match c.kind.as_str() {
            "constant" => OmegaModel::constant(c.value),
            "logistic-decay" => OmegaModel::logistic_decay(c.min, c.max, c.steepness),
            other => return Err(config_err("omega.kind", format!("unknown family `{other}`"))),
        }
        .with_holder(c.holder_exponent, c.holder_constant);
        model.validate().map_err(|e| at_section("omega", e))?;
        Ok(model)
    }

    /// `μ` with a placeholder steepness when it is to be chosen automatically.
    fn mu_model_raw(&self) -> Result<MuModel> {
        let c = &self.mu;
        let model = match c.kind.as_str() {
            "constant" => MuModel::constant(c.value),
            "logistic-rise" => MuModel::logistic_rise(c.min, c.max, c.steepness.unwrap_or(1.0)),
            other => return Err(config_err("mu.kind", format!("unknown family `{other}`"))),
        }
        .with_holder(c.holder_exponent, c.holder_constant);
        model.validate().map_err(|e| at_section("mu", e))?;
        Ok(model)
    }

    pub fn sample_grid(&self) -> Result<Vec<f64>> {
        let a = &self.assumptions;
        if !(a.start.is_finite() && a.end.is_finite() && a.end > a.start) {
            return Err(config_err("assumptions.end", "must exceed assumptions.start"));
        }
        if a.points < 2 {
            return Err(config_err("assumptions.points", "need at least two sample times"));
        }
        Ok(uniform_grid(a.start, a.end, a.points))
    }

    pub fn ensemble_spec(&self) -> Result<EnsembleSpec> {
        let e = &self.ensemble;
        let spec = EnsembleSpec {
            size: e.size,
            energy_min: e.energy_min,
            energy_max: e.energy_max,
            seed: self.scheme.seed,
        };
        spec.validate().map_err(|_| config_err("ensemble", "need size >= 1 and 0 <= energy_min <= energy_max"))?;
        Ok(spec)
    }

    /// Validates everything and builds the problem and its calibration.
    pub fn build(&self) -> Result<Setup> {
        let b = &self.basis;
        if b.dim < 3 {
            return Err(config_err("basis.dim", "the estimates need dim >= 3"));
        }
        let basis = SpectralBasis::new(b.dim, b.modes).map_err(|e| at_section("basis", e))?;
        let s = &self.scheme;
        positive("scheme.h", s.h)?;
        if s.seed > i64::MAX as u64 {
            return Err(config_err("scheme.seed", "must be at most 2^63 - 1"));
        }
        if !(s.alpha > 0.0 && s.alpha <= 1.0) {
            return Err(config_err("scheme.alpha", "must lie in (0, 1]"));
        }
        if !(s.tau.is_finite() && s.t_end.is_finite() && s.t_end >= s.tau) {
            return Err(config_err("scheme.t_end", "must be finite and not before scheme.tau"));
        }
        let n = &self.nonlinearity;
        let nonlin = NonlinearitySpec::new(n.beta, n.lambda, n.rho).map_err(|e| at_section("nonlinearity", e))?;
        let adm = admissibility(b.dim, n.rho, s.s, s.alpha).map_err(|e| config_err("scheme", e.to_string()))?;
        let omega = self.omega_model()?;
        let mut mu = self.mu_model_raw()?;
        let grid = self.sample_grid()?;
        if self.mu.kind == "logistic-rise" && self.mu.steepness.is_none() {
            let consts = compute_constants(&omega, &mu, s.alpha, &basis, 0.0, s.t_end)?;
            let best = max_admissible_mu_steepness(&omega, &mu, &consts, &grid, 1e-9, 10.0)
                .ok_or_else(|| config_err("mu.steepness", "no steepness in [1e-9, 10] passes the assumption checks"))?;
            mu = mu.with_steepness(best);
        }
        let mut problem = Problem::new(basis, s.alpha, s.s, omega, mu, nonlin)?;
        if b.dealias {
            problem = problem.dealiased()?;
        }
        let calibration = Calibration::new(&problem, s.t_end, &grid)?;
        let mut config = self.clone();
        if let crate::coeffs::MuKind::LogisticRise { steepness, .. } = problem.mu.kind {
            config.mu.steepness = Some(steepness);
        }
        Ok(Setup {
            config,
            problem,
            calibration,
            admissibility: adm,
            sample_grid: grid,
        })
    }
}
