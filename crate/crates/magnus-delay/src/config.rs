//! JSON run configuration.
//!
//! Physical quantities may be given as decimal strings (`"0.1"`) or JSON
//! numbers. Unknown keys are rejected, and every error carries the dotted
//! path of the offending field.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use magnus_delay_core::epidemic::{
    epidemic_guard, epidemic_preset, EpidemicModel, EpidemicParams, Grid2D, HistoryPreset,
    Kernel2D, ProfileParams,
};
use magnus_delay_core::magnus::{
    CompatibilizedHistory, ConstantHistory, GuardAction, HalfMode, HistorySampler,
    InvariantGuard, InvariantPredicate, TabulatedHistory,
};
use magnus_delay_core::scalar::{scalar_problem, ScalarDelayModel};
use magnus_delay_core::{
    DelayFamily, DelayWindow, ExpmConfig, ExpmMethod, ProblemSpec, RunOptions, StateVector,
};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError {
    /// Dotted field path, e.g. `model.epidemic.params.beta`; empty for the root.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { path: path.into(), line: None, column: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("config error")?;
        if !self.path.is_empty() {
            write!(f, " at `{}`", self.path)?;
        }
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// A real number written as a decimal string or a JSON number.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Decimal(pub f64);

impl Decimal {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Decimal;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a finite decimal number or decimal string")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Decimal, E> {
                if v.is_finite() {
                    Ok(Decimal(v))
                } else {
                    Err(E::custom("number must be finite"))
                }
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Decimal, E> {
                let t = v.trim();
                let ok = !t.is_empty()
                    && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'));
                match t.parse::<f64>() {
                    Ok(x) if ok && x.is_finite() => Ok(Decimal(x)),
                    _ => Err(E::custom(format!("`{v}` is not a decimal number"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

fn one() -> Decimal {
    Decimal(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub delay: DelayConfig,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "N_list", default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "N_ref", default, skip_serializing_if = "Option::is_none")]
    pub n_ref: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Decimal,
    #[serde(default)]
    pub half_mode: HalfModeConfig,
    #[serde(default)]
    pub expm: ExpmSection,
    #[serde(default)]
    pub guard: GuardSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub compatibility: CompatibilitySection,
    #[serde(default)]
    pub study: StudySection,
    /// Seed for randomized test data; the integrator itself is deterministic.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelConfig {
    Scalar(ScalarConfig),
    Epidemic(EpidemicConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarConfig {
    /// `a` in `u' = -a F(u_t) u`.
    #[serde(default = "one")]
    pub rate: Decimal,
    pub history: ScalarHistoryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalarHistoryConfig {
    /// `phi = value`.
    Constant {
        #[serde(default = "one")]
        value: Decimal,
    },
    /// `phi = value + c(s)` satisfying both boundary conditions.
    Compatibilized {
        #[serde(default = "one")]
        value: Decimal,
    },
    /// Equally spaced samples on `[-delta, 0]`; no derivatives available.
    Tabulated { values: Vec<Decimal> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicConfig {
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub history: EpidemicHistoryConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: Decimal,
    #[serde(rename = "Ly")]
    pub ly: Decimal,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { nx: 8, ny: 8, lx: Decimal(4.0), ly: Decimal(4.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub beta: Decimal,
    pub gamma: Decimal,
    pub nu: Decimal,
    pub mass: Decimal,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        let p = EpidemicParams::default();
        ParamsConfig {
            beta: Decimal(p.beta),
            gamma: Decimal(p.gamma),
            nu: Decimal(p.nu),
            mass: Decimal(p.mass),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelType {
    #[default]
    Bump,
    Constant,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    #[serde(rename = "type")]
    pub kind: KernelType,
    pub radius: Decimal,
    pub amplitude: Decimal,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { kind: KernelType::Bump, radius: Decimal(1.0), amplitude: Decimal(1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EpidemicPresetName {
    #[default]
    Default,
    Compatibilized,
    NoInfection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpidemicHistoryConfig {
    pub preset: EpidemicPresetName,
    pub infected_fraction: Decimal,
    pub recovered_fraction: Decimal,
    pub width: Decimal,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<[Decimal; 2]>,
}

impl Default for EpidemicHistoryConfig {
    fn default() -> Self {
        let p = ProfileParams::default();
        EpidemicHistoryConfig {
            preset: EpidemicPresetName::Default,
            infected_fraction: Decimal(p.infected_fraction),
            recovered_fraction: Decimal(p.recovered_fraction),
            width: Decimal(p.width),
            center: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DelayMode {
    Point,
    TrapezoidHalf,
    #[serde(alias = "expected-latent")]
    UniformLatent,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelayConfig {
    pub mode: DelayMode,
    pub delta: Decimal,
    /// Defaults to `delta` for point delay and `delta / 2` for the half-interval rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Decimal>,
    /// Weights for `custom` mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<Decimal>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HalfModeConfig {
    #[default]
    Exact,
    Averaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ExpmMethodConfig {
    #[default]
    Krylov,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExpmSection {
    pub method: ExpmMethodConfig,
    pub tol: Decimal,
    pub max_krylov_dim: usize,
}

impl Default for ExpmSection {
    fn default() -> Self {
        let c = ExpmConfig::default();
        ExpmSection { method: ExpmMethodConfig::Krylov, tol: Decimal(c.tol), max_krylov_dim: c.max_krylov_dim }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateConfig {
    /// Nonnegativity with mass for the epidemic model, nonnegativity otherwise.
    #[default]
    Auto,
    None,
    Nonnegative,
    NonnegativeMass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GuardActionConfig {
    #[default]
    Record,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuardSection {
    pub predicate: PredicateConfig,
    pub tolerance: Decimal,
    pub action: GuardActionConfig,
}

impl Default for GuardSection {
    fn default() -> Self {
        GuardSection {
            predicate: PredicateConfig::Auto,
            tolerance: Decimal(1e-9),
            action: GuardActionConfig::Record,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ColumnsConfig {
    /// Components up to 64 entries, block sums beyond.
    #[default]
    Auto,
    Components,
    Blocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    /// Output directory; `--out` overrides it.
    pub dir: String,
    pub stride: usize,
    pub columns: ColumnsConfig,
    /// Include wall times in the JSON reports (breaks byte-identical output).
    pub timing: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into(), stride: 1, columns: ColumnsConfig::Auto, timing: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompatibilitySection {
    /// Residual threshold for the boundary conditions.
    pub threshold: Decimal,
    /// Resolution of the discretized `F` used for residuals and corrections.
    pub resolution: usize,
}

impl Default for CompatibilitySection {
    fn default() -> Self {
        CompatibilitySection { threshold: Decimal(1e-8), resolution: 1024 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceConfig {
    /// Fine-grid Magnus solution at `N_ref`.
    #[default]
    Grid,
    /// Method-of-steps oracle (scalar model only).
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySection {
    pub reference: ReferenceConfig,
    /// Cross-check a grid reference against the oracle (scalar model only).
    pub cross_validate: bool,
    pub cross_tol: Decimal,
    /// Accepted interval for observed orders.
    pub window: [Decimal; 2],
    /// How many trailing orders must lie in the window.
    pub consecutive: usize,
    /// Also compare against a reference at `2 N_ref`.
    pub telescoping: bool,
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            reference: ReferenceConfig::Grid,
            cross_validate: true,
            cross_tol: Decimal(1e-8),
            window: [Decimal(1.8), Decimal(2.2)],
            consecutive: 3,
            telescoping: false,
        }
    }
}

/// The model behind a resolved problem.
#[derive(Debug, Clone)]
pub enum ModelHandle {
    Scalar { rate: f64 },
    Epidemic(Arc<EpidemicModel>),
}

/// A validated configuration turned into solver inputs.
#[derive(Clone)]
pub struct Plan {
    pub spec: ProblemSpec,
    pub options: RunOptions,
    pub model: ModelHandle,
}

fn check(cond: bool, path: &str, message: &str) -> std::result::Result<(), ConfigError> {
    if cond {
        Ok(())
    } else {
        Err(ConfigError::at(path, message))
    }
}

fn positive(x: Decimal, path: &str) -> std::result::Result<(), ConfigError> {
    check(x.0 > 0.0, path, "must be positive")
}

fn nonnegative(x: Decimal, path: &str) -> std::result::Result<(), ConfigError> {
    check(x.0 >= 0.0, path, "must be nonnegative")
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError {
                path: if path == "." { String::new() } else { path },
                line: Some(inner.line()),
                column: Some(inner.column()),
                message: strip_position(&inner.to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::at("", format!("cannot read {}: {e}", path.display()))
        })?;
        Ok(Self::from_json(&text)?)
    }

    pub fn validate(&self) -> std::result::Result<(), ConfigError> {
        let d = &self.delay;
        positive(d.delta, "delay.delta")?;
        if let Some(e) = d.epsilon {
            positive(e, "delay.epsilon")?;
            check(e.0 <= d.delta.0, "delay.epsilon", "must not exceed delay.delta")?;
        }
        match d.mode {
            DelayMode::Custom => check(
                d.weights.as_ref().is_some_and(|w| !w.is_empty()),
                "delay.weights",
                "custom mode needs a nonempty weight vector",
            )?,
            _ => check(d.weights.is_none(), "delay.weights", "weights are only accepted in custom mode")?,
        }
        check(d.mode != DelayMode::UniformLatent || d.epsilon.is_some(), "delay.epsilon", "uniform-latent mode needs epsilon")?;
        nonnegative(self.horizon, "T")?;
        if let Some(n) = self.n {
            check(n >= 1, "N", "must be at least 1")?;
        }
        if let Some(list) = &self.n_list {
            check(!list.is_empty(), "N_list", "must not be empty")?;
            check(list[0] >= 1 && list.windows(2).all(|w| w[0] < w[1]), "N_list", "must be positive and strictly increasing")?;
        }
        positive(self.expm.tol, "expm.tol")?;
        check(self.expm.max_krylov_dim >= 2, "expm.max_krylov_dim", "must be at least 2")?;
        nonnegative(self.guard.tolerance, "guard.tolerance")?;
        check(self.output.stride >= 1, "output.stride", "must be at least 1")?;
        positive(self.compatibility.threshold, "compatibility.threshold")?;
        check(self.compatibility.resolution >= 2, "compatibility.resolution", "must be at least 2")?;
        let [lo, hi] = self.study.window;
        check(lo.0 < hi.0, "study.window", "lower bound must be below the upper bound")?;
        check(self.study.consecutive >= 1, "study.consecutive", "must be at least 1")?;
        positive(self.study.cross_tol, "study.cross_tol")?;
        match &self.model {
            ModelConfig::Scalar(s) => {
                if let ScalarHistoryConfig::Tabulated { values } = &s.history {
                    check(values.len() >= 2, "model.scalar.history.tabulated.values", "needs at least two samples")?;
                }
            }
            ModelConfig::Epidemic(e) => {
                let g = &e.grid;
                check(g.nx >= 1, "model.epidemic.grid.nx", "must be at least 1")?;
                check(g.ny >= 1, "model.epidemic.grid.ny", "must be at least 1")?;
                positive(g.lx, "model.epidemic.grid.Lx")?;
                positive(g.ly, "model.epidemic.grid.Ly")?;
                let p = &e.params;
                nonnegative(p.beta, "model.epidemic.params.beta")?;
                nonnegative(p.gamma, "model.epidemic.params.gamma")?;
                nonnegative(p.nu, "model.epidemic.params.nu")?;
                positive(p.mass, "model.epidemic.params.mass")?;
                nonnegative(e.kernel.amplitude, "model.epidemic.kernel.amplitude")?;
                if e.kernel.kind == KernelType::Bump {
                    positive(e.kernel.radius, "model.epidemic.kernel.radius")?;
                }
                let h = &e.history;
                nonnegative(h.infected_fraction, "model.epidemic.history.infected_fraction")?;
                nonnegative(h.recovered_fraction, "model.epidemic.history.recovered_fraction")?;
                check(
                    h.infected_fraction.0 + h.recovered_fraction.0 <= 1.0,
                    "model.epidemic.history",
                    "infected_fraction + recovered_fraction must not exceed 1",
                )?;
                positive(h.width, "model.epidemic.history.width")?;
            }
        }
        Ok(())
    }

    pub fn window(&self) -> std::result::Result<DelayWindow, ConfigError> {
        let delta = self.delay.delta.0;
        let epsilon = match (self.delay.mode, self.delay.epsilon) {
            (_, Some(e)) => e.0,
            (DelayMode::TrapezoidHalf, None) => 0.5 * delta,
            _ => delta,
        };
        DelayWindow::new(delta, epsilon).map_err(|e| ConfigError::at("delay", e.to_string()))
    }

    pub fn family(&self) -> DelayFamily {
        match self.delay.mode {
            DelayMode::Point => DelayFamily::Point,
            DelayMode::TrapezoidHalf => DelayFamily::TrapezoidHalf,
            DelayMode::UniformLatent => DelayFamily::UniformLatent,
            DelayMode::Custom => DelayFamily::Custom(
                self.delay.weights.iter().flatten().map(|w| w.0).collect(),
            ),
        }
    }

    pub fn expm_config(&self) -> ExpmConfig {
        ExpmConfig {
            method: match self.expm.method {
                ExpmMethodConfig::Krylov => ExpmMethod::KrylovArnoldi,
                ExpmMethodConfig::Dense => ExpmMethod::DenseScalingSquaring,
            },
            tol: self.expm.tol.0,
            max_krylov_dim: self.expm.max_krylov_dim,
        }
    }

    /// Builds the problem and run options. Model-level rejections (for
    /// example a history outside the invariant set) surface as config errors
    /// on the `model` path.
    pub fn plan(&self) -> Result<Plan> {
        let window = self.window()?;
        let family = self.family();
        let horizon = self.horizon.0;
        let res = self.compatibility.resolution;
        let model_err = |path: &str| {
            let path = path.to_string();
            move |e: magnus_delay_core::Error| HarnessError::Config(ConfigError::at(path.clone(), e.to_string()))
        };
        let (spec, model, guard) = match &self.model {
            ModelConfig::Scalar(s) => {
                let rate = s.rate.0;
                let model = ScalarDelayModel::new(rate);
                let scalar = |x: f64| StateVector::from_vec(vec![x]);
                let history: Arc<dyn HistorySampler> = match &s.history {
                    ScalarHistoryConfig::Constant { value } | ScalarHistoryConfig::Compatibilized { value } => {
                        Arc::new(ConstantHistory(scalar(value.0)))
                    }
                    ScalarHistoryConfig::Tabulated { values } => Arc::new(
                        TabulatedHistory::new(window.delta(), values.iter().map(|v| scalar(v.0)).collect())
                            .map_err(model_err("model.scalar.history"))?,
                    ),
                };
                let mut spec = scalar_problem(model, window, family, history, horizon)
                    .map_err(model_err("model.scalar"))?;
                if let ScalarHistoryConfig::Compatibilized { .. } = s.history {
                    let fixed = CompatibilizedHistory::new(&spec, res).map_err(model_err("model.scalar.history"))?;
                    spec = ProblemSpec { history: Arc::new(fixed), ..spec };
                }
                let predicate = match self.guard.predicate {
                    PredicateConfig::None => InvariantPredicate::None,
                    PredicateConfig::Auto | PredicateConfig::Nonnegative => InvariantPredicate::Nonnegative,
                    PredicateConfig::NonnegativeMass => {
                        return Err(ConfigError::at("guard.predicate", "the scalar model has no conserved mass").into())
                    }
                };
                let guard = InvariantGuard { predicate, tolerance: self.guard.tolerance.0, action: GuardAction::Record };
                (spec, ModelHandle::Scalar { rate }, guard)
            }
            ModelConfig::Epidemic(e) => {
                let grid = Grid2D::new(e.grid.nx, e.grid.ny, e.grid.lx.0, e.grid.ly.0)
                    .map_err(model_err("model.epidemic.grid"))?;
                let kernel = match e.kernel.kind {
                    KernelType::Zero => Kernel2D::Zero,
                    KernelType::Constant => Kernel2D::Constant { amplitude: e.kernel.amplitude.0 },
                    KernelType::Bump => Kernel2D::Bump { amplitude: e.kernel.amplitude.0, radius: e.kernel.radius.0 },
                };
                let params = EpidemicParams {
                    beta: e.params.beta.0,
                    gamma: e.params.gamma.0,
                    nu: e.params.nu.0,
                    mass: e.params.mass.0,
                    kernel,
                };
                let model = Arc::new(EpidemicModel::new(grid, params).map_err(model_err("model.epidemic.params"))?);
                let h = &e.history;
                let profile = ProfileParams {
                    infected_fraction: h.infected_fraction.0,
                    recovered_fraction: h.recovered_fraction.0,
                    width: h.width.0,
                    center: h.center.map(|[x, y]| (x.0, y.0)),
                };
                let preset = match h.preset {
                    EpidemicPresetName::Default => HistoryPreset::Default(profile),
                    EpidemicPresetName::Compatibilized => HistoryPreset::Compatibilized(profile),
                    EpidemicPresetName::NoInfection => HistoryPreset::NoInfection(profile),
                };
                let spec = epidemic_preset(model.clone(), window, family, preset, horizon, res)
                    .map_err(model_err("model.epidemic.history"))?;
                let mut guard = epidemic_guard(&model, self.guard.tolerance.0);
                guard.predicate = match self.guard.predicate {
                    PredicateConfig::Auto | PredicateConfig::NonnegativeMass => guard.predicate,
                    PredicateConfig::Nonnegative => InvariantPredicate::Nonnegative,
                    PredicateConfig::None => InvariantPredicate::None,
                };
                (spec, ModelHandle::Epidemic(model), guard)
            }
        };
        let guard = guard.with_action(match self.guard.action {
            GuardActionConfig::Record => GuardAction::Record,
            GuardActionConfig::Abort => GuardAction::Abort,
        });
        let options = RunOptions {
            expm: self.expm_config(),
            guard,
            half_mode: match self.half_mode {
                HalfModeConfig::Exact => HalfMode::Exact,
                HalfModeConfig::Averaged => HalfMode::Averaged,
            },
            stride: self.output.stride,
            ..RunOptions::default()
        };
        options.expm.validate().map_err(model_err("expm"))?;
        Ok(Plan { spec, options, model })
    }
}

/// serde_json appends " at line X column Y"; the position is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}
