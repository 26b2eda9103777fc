//! Experiment configuration: TOML document, `--set` overrides and
//! validation into core specs.

use std::path::{Path, PathBuf};

use dipolesim_core::grid::Grid1D;
use dipolesim_core::lindblad::{Rates, SpinModelSpec, SymmetryMode};
use dipolesim_core::observables::{equilibration_time, CorrelatorKind};
use dipolesim_core::scaling::{CollapseBounds, CollapseWindow, GrowthOptions};
use dipolesim_core::spde::{
    geometric_schedule, EquationSpec, InitialCondition, IntegratorSpec, RunSpec, Scheme, Variant,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub equation: EquationConfig,
    pub integrator: IntegratorConfig,
    pub ensemble: EnsembleConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
    pub lindblad: LindbladConfig,
    pub tilt: TiltConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            equation: EquationConfig::default(),
            integrator: IntegratorConfig::default(),
            ensemble: EnsembleConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
            lindblad: LindbladConfig::default(),
            tilt: TiltConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub sizes: Vec<usize>,
    pub dx: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            sizes: vec![64],
            dx: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquationConfig {
    pub variant: Variant,
    pub d2: f64,
    pub d4: f64,
    pub g: f64,
    #[serde(rename = "C", alias = "noise_strength")]
    pub noise_strength: f64,
    /// Curvature scale of the bounded nonlinearity; 0 keeps `(∇²α)²`.
    pub saturation: f64,
}

impl Default for EquationConfig {
    fn default() -> Self {
        Self {
            variant: Variant::DipoleGrowth,
            d2: 0.0,
            d4: 1.0,
            g: 0.5,
            noise_strength: 1.0,
            saturation: 0.0,
        }
    }
}

impl EquationConfig {
    pub fn spec(&self) -> EquationSpec {
        let base = match self.variant {
            Variant::DipoleGrowth => {
                EquationSpec::dipole_growth(self.d2, self.d4, self.g, self.noise_strength)
            }
            Variant::DipoleDeterministic => {
                EquationSpec::dipole_deterministic(self.d2, self.d4, self.g)
            }
            Variant::EdwardsWilkinson => EquationSpec::edwards_wilkinson(self.d2, self.noise_strength),
            Variant::MullinsHerring => EquationSpec::mullins_herring(self.d4, self.noise_strength),
            Variant::KpzReference => EquationSpec::kpz_reference(self.d2, self.g, self.noise_strength),
            Variant::WeakCharge => EquationSpec::weak_charge(self.d2, self.noise_strength),
            Variant::StrongCharge => EquationSpec::strong_charge(self.d4, self.noise_strength),
        };
        base.with_saturation(self.saturation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_max: f64,
    pub record: RecordSchedule,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ImexSpectral,
            dt: 0.05,
            t_max: 1000.0,
            record: RecordSchedule::default(),
        }
    }
}

/// When snapshots are taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum RecordSchedule {
    /// `per_decade` log-spaced times from `t_min` to `t_max`.
    Geometric { t_min: f64, per_decade: usize },
    /// Every `interval` from `start` on. Without `start` the run is first
    /// equilibrated for `3·L^z·analysis.start_factor`.
    Uniform {
        #[serde(default)]
        start: Option<f64>,
        interval: f64,
        count: usize,
    },
}

impl Default for RecordSchedule {
    fn default() -> Self {
        RecordSchedule::Geometric {
            t_min: 0.5,
            per_decade: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub master_seed: u64,
    pub initial_condition: InitialCondition,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_realizations: 16,
            master_seed: 0,
            initial_condition: InitialCondition::Zero,
        }
    }
}

/// One pass/fail rule on a reported metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub metric: String,
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    pub plateau_slope: f64,
    pub growth_t_min: f64,
    pub onset_fraction: f64,
    /// Explicit β window; overrides the onset-based one.
    pub growth_window: Option<[f64; 2]>,
    /// Size used for β; defaults to the largest.
    pub growth_size: Option<usize>,
    pub collapse_pairs: Vec<[f64; 2]>,
    pub collapse_u_min: f64,
    pub collapse_u_max: Option<f64>,
    pub chi_bounds: [f64; 2],
    pub z_bounds: [f64; 2],
    pub collapse_samples: [usize; 2],
    pub correlators: Vec<CorrelatorKind>,
    pub modes: Vec<usize>,
    pub max_origins: usize,
    /// Separations in sites for `G(x)` and the phase correlator; defaults
    /// to `1..=L/2`.
    pub separations: Option<Vec<usize>>,
    pub start_factor: f64,
    /// Each mode's decay rate is fitted up to the first lag where the
    /// normalized correlator drops below this value.
    pub decay_floor: f64,
    pub return_window: Option<[f64; 2]>,
    /// Fit window for `G(x)` in units of `dx`; defaults to `[2, L/8]`.
    pub height_window: Option<[f64; 2]>,
    /// `calibrate` tolerances against linear theory and the mode-sum oracle.
    pub chi_tolerance: f64,
    pub beta_tolerance: f64,
    pub oracle_sigma: f64,
    pub expect: Vec<Expectation>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let growth = GrowthOptions::default();
        let bounds = CollapseBounds::default();
        Self {
            plateau_slope: growth.plateau_slope,
            growth_t_min: growth.t_min,
            onset_fraction: growth.onset_fraction,
            growth_window: None,
            growth_size: None,
            collapse_pairs: vec![[2.0, 2.0], [0.5, 2.0]],
            collapse_u_min: 0.0,
            collapse_u_max: None,
            chi_bounds: [bounds.chi.0, bounds.chi.1],
            z_bounds: [bounds.z.0, bounds.z.1],
            collapse_samples: [bounds.samples.0, bounds.samples.1],
            correlators: Vec::new(),
            modes: vec![1, 2, 3],
            max_origins: 32,
            separations: None,
            start_factor: 1.0,
            decay_floor: 0.25,
            return_window: None,
            height_window: None,
            chi_tolerance: 0.05,
            beta_tolerance: 0.03,
            oracle_sigma: 3.0,
            expect: Vec::new(),
        }
    }
}

impl AnalysisConfig {
    pub fn growth_options(&self) -> GrowthOptions {
        GrowthOptions {
            t_min: self.growth_t_min,
            onset_fraction: self.onset_fraction,
            plateau_slope: self.plateau_slope,
        }
    }

    pub fn collapse_window(&self) -> CollapseWindow {
        CollapseWindow {
            u_min: self.collapse_u_min,
            u_max: self.collapse_u_max.unwrap_or(f64::INFINITY),
        }
    }

    pub fn collapse_bounds(&self) -> CollapseBounds {
        CollapseBounds {
            chi: (self.chi_bounds[0], self.chi_bounds[1]),
            z: (self.z_bounds[0], self.z_bounds[1]),
            samples: (self.collapse_samples[0], self.collapse_samples[1]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("dipolesim-out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LindbladConfig {
    pub spin: f64,
    pub n_sites: usize,
    pub j: f64,
    pub t: f64,
    pub symmetry_mode: SymmetryMode,
    pub rates: Rates,
    pub dimension_cap: usize,
    pub betas: Vec<f64>,
    /// Evolution time for the drift and block checks, in units of the
    /// leading dissipative rate.
    pub duration_rates: f64,
    pub dt: f64,
    pub seed: u64,
    /// Adds jumps that break the charge and weak dipole symmetries.
    pub negative_control: bool,
    /// Size of the `J = t = 0` model used for the polarized steady state;
    /// 0 skips that check.
    pub polarized_sites: usize,
}

impl Default for LindbladConfig {
    fn default() -> Self {
        Self {
            spin: 0.5,
            n_sites: 3,
            j: 1.0,
            t: 0.7,
            symmetry_mode: SymmetryMode::WeakDipole,
            rates: Rates {
                big_gamma0: 1.0,
                gamma0: 0.8,
                big_gamma1: 0.3,
                gamma1: 0.2,
                gamma2: 0.15,
                tilde_gamma0: 0.0,
            },
            dimension_cap: dipolesim_core::lindblad::DEFAULT_DIMENSION_CAP,
            betas: vec![0.37, 1.1],
            duration_rates: 20.0,
            dt: 0.01,
            seed: 0x1b1a_d0,
            negative_control: false,
            polarized_sites: 2,
        }
    }
}

impl LindbladConfig {
    pub fn spec(&self) -> SpinModelSpec {
        SpinModelSpec {
            j: self.j,
            t: self.t,
            rates: self.rates,
            dimension_cap: self.dimension_cap,
            ..SpinModelSpec::new(self.spin, self.n_sites, self.symmetry_mode)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TiltCase {
    pub d2: f64,
    pub g: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TiltConfig {
    pub n_sites: usize,
    pub dx: f64,
    pub d4: f64,
    pub d2: Vec<f64>,
    pub g: Vec<f64>,
    pub c0: Vec<f64>,
    pub tolerance: f64,
    pub seed: u64,
    /// Cases that must fail the check.
    pub controls: Vec<TiltCase>,
}

impl Default for TiltConfig {
    fn default() -> Self {
        Self {
            n_sites: 256,
            dx: 1.0,
            d4: 1.0,
            d2: vec![0.0, 1.0],
            g: vec![0.25, 0.5],
            c0: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            tolerance: 1e-10,
            seed: 7,
            controls: vec![TiltCase {
                d2: 1.0,
                g: 0.0,
                c0: 0.5,
            }],
        }
    }
}

impl ExperimentConfig {
    /// Reads a TOML file (or starts from defaults) and applies `key=value`
    /// overrides, each value parsed as a TOML literal when possible.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut doc, item)?;
        }
        Self::from_table(doc)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let doc = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_table(doc)
    }

    fn from_table(doc: toml::Table) -> Result<Self, CliError> {
        let cfg: Self = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner().to_string();
            CliError::Config(format!("{path}: {}", inner.lines().next().unwrap_or_default()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.grid.sizes.is_empty() {
            return bad("grid.sizes: at least one size is required".into());
        }
        if self.ensemble.n_realizations == 0 {
            return bad("ensemble.n_realizations: must be positive".into());
        }
        for &l in &self.grid.sizes {
            self.run_spec(l)
                .map_err(|e| CliError::Config(format!("grid.sizes[{l}]: {e}")))?;
        }
        for (i, e) in self.analysis.expect.iter().enumerate() {
            let has_target = e.target.is_some() && e.tolerance.is_some();
            if !has_target && e.min.is_none() && e.max.is_none() {
                return bad(format!(
                    "analysis.expect[{i}]: needs target and tolerance, or min/max"
                ));
            }
        }
        Ok(())
    }

    /// Record times for size `l`.
    pub fn record_times(&self, l: usize) -> Result<Vec<f64>, CliError> {
        let integ = &self.integrator;
        match &self.integrator.record {
            RecordSchedule::Geometric { t_min, per_decade } => {
                if !(*t_min > 0.0 && *t_min < integ.t_max) || *per_decade == 0 {
                    return Err(CliError::Config(
                        "integrator.record: need 0 < t_min < t_max and per_decade > 0".into(),
                    ));
                }
                Ok(geometric_schedule(*t_min, integ.t_max, *per_decade, integ.dt))
            }
            RecordSchedule::Uniform {
                start,
                interval,
                count,
            } => {
                if !(*interval > 0.0) || *count < 2 {
                    return Err(CliError::Config(
                        "integrator.record: need interval > 0 and count >= 2".into(),
                    ));
                }
                let t0 = match start {
                    Some(t) => *t,
                    None => {
                        let grid = Grid1D::new(l, self.grid.dx)
                            .map_err(|e| CliError::Config(e.to_string()))?;
                        equilibration_time(
                            &self.equation.spec(),
                            &grid,
                            self.analysis.start_factor,
                        )
                    }
                };
                // Snap to the step grid so the spacing is exact.
                let steps = |t: f64| (t / integ.dt).round() * integ.dt;
                let k = (interval / integ.dt).round().max(1.0);
                let t0 = steps(t0);
                Ok((0..*count)
                    .map(|i| t0 + i as f64 * k * integ.dt)
                    .collect())
            }
        }
    }

    /// Core run description for size `l`.
    pub fn run_spec(&self, l: usize) -> Result<RunSpec, CliError> {
        let grid = Grid1D::new(l, self.grid.dx).map_err(|e| CliError::Config(e.to_string()))?;
        let times = self.record_times(l)?;
        let t_max = match self.integrator.record {
            RecordSchedule::Uniform { .. } => times.last().copied().unwrap_or(0.0),
            RecordSchedule::Geometric { .. } => self.integrator.t_max,
        };
        let spec = RunSpec {
            grid,
            equation: self.equation.spec(),
            integrator: IntegratorSpec::new(self.integrator.scheme, self.integrator.dt, t_max, times),
            master_seed: self.ensemble.master_seed,
            n_realizations: self.ensemble.n_realizations,
            initial_condition: self.ensemble.initial_condition,
        };
        spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(spec)
    }

    /// Single-line JSON of the resolved config, echoed into every output.
    /// The `output` section is left out so that where and how a run is
    /// written never changes the bytes of what it writes.
    pub fn echo(&self) -> String {
        let mut doc = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = doc.as_object_mut() {
            map.remove("output");
        }
        doc.to_string()
    }
}

/// Applies one `dotted.key=value` override to the document tree.
pub fn apply_override(doc: &mut toml::Table, item: &str) -> Result<(), CliError> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {item}: expected key=value")))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("--set {item}: malformed key")));
    }
    let value = parse_value(raw.trim());
    let mut table = doc;
    for (depth, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = match entry {
            toml::Value::Table(t) => t,
            _ => {
                return Err(CliError::Config(format!(
                    "--set {item}: {} is not a table",
                    parts[..=depth].join(".")
                )))
            }
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
