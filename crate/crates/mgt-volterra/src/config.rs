//! Scenario configuration: JSON schema and conversion into solver inputs.
//!
//! Every physical constraint is checked again when the config is turned
//! into core types, so a config that loads is a config that runs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mgt_core::analysis::{multiscale_signal, step_signal, telegraph_signal, FitWindow, TraceScenario};
use mgt_core::maccamy::{EquationSpec, MemoryEquationSpec, MgtSpec};
use mgt_core::modal::{BoundarySignal, ScenarioData, ThirdDatum};
use mgt_core::spectral::{
    build_basis, synthesize_field, BoundaryCondition, DomainSpec, SpectralBasis, SpectralField,
};
use mgt_core::volterra::{KernelSpec, TabulatedKernel, TimeGrid};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the config seed.
pub const SEED_ENV: &str = "MGT_VOLTERRA_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub equation: EquationConfig,
    #[serde(default)]
    pub domain: DomainConfig,
    #[serde(default)]
    pub bc: BcConfig,
    pub discretization: Discretization,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EquationConfig {
    Mgt { b: f64, c: f64, alpha: f64 },
    Memory { b: f64, gamma: f64, n: KernelConfig, f: KernelConfig },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Exponential {
        #[serde(default = "one")]
        amplitude: f64,
        rate: f64,
    },
    /// `e^{-rate·t}(1 + slope·t)`.
    ExpLinear { rate: f64, slope: f64 },
    Power { exponent: f64 },
    Tabulated {
        values: Vec<f64>,
        #[serde(default)]
        first: Option<Vec<f64>>,
        #[serde(default)]
        second: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub lengths: Vec<f64>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { lengths: vec![1.0] }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BcConfig {
    #[default]
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Discretization {
    pub mode_count: usize,
    pub dt: f64,
    /// Final time `T`.
    pub horizon: f64,
}

fn default_margin() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldConfig {
    /// Random-sign field of the given index; see `synthesize_field`.
    Synthesize {
        index: f64,
        #[serde(default = "default_margin")]
        margin: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Coefficients(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub u0: Option<FieldConfig>,
    #[serde(default)]
    pub u1: Option<FieldConfig>,
    /// MGT third datum. Mutually exclusive with `xi`.
    #[serde(default)]
    pub u2: Option<FieldConfig>,
    #[serde(default)]
    pub xi: Option<FieldConfig>,
    #[serde(default)]
    pub boundary: Option<BoundaryConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    #[serde(default)]
    pub left: SignalConfig,
    #[serde(default)]
    pub right: SignalConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalConfig {
    #[default]
    Zero,
    Step {
        until: f64,
        #[serde(default = "one")]
        level: f64,
    },
    Telegraph { switches: usize },
    Multiscale { coarsest: usize, finest: f64 },
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub oracle_compare: OracleOptions,
    #[serde(default)]
    pub verify_table: Option<TableOptions>,
    #[serde(default)]
    pub stability_sweep: SweepOptions,
    #[serde(default)]
    pub trace_check: TraceOptions,
    #[serde(default)]
    pub boundary_check: BoundaryOptions,
    #[serde(default)]
    pub fit: FitOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableOptions {
    /// 1 (memory equation) or 2 (MGT).
    pub table: u8,
    pub row: u8,
    pub base_index: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default = "default_index_tolerance")]
    pub tolerance: f64,
}

fn default_index_tolerance() -> f64 {
    0.15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitOptions {
    pub octaves: u32,
    pub blocks_per_octave: u32,
    /// Sampled times `T·j/samples`.
    pub samples: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        let w = FitWindow::default();
        Self {
            octaves: w.octaves,
            blocks_per_octave: w.blocks_per_octave,
            samples: 8,
        }
    }
}

impl FitOptions {
    pub fn window(&self) -> FitWindow {
        FitWindow {
            octaves: self.octaves,
            blocks_per_octave: self.blocks_per_octave,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KappaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl KappaGrid {
    /// Geometrically spaced points.
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max > self.min && self.count >= 2) {
            bail!("kappa grid needs 0 < min < max and count >= 2");
        }
        let ratio = (self.max / self.min).powf(1.0 / (self.count - 1) as f64);
        let mut points: Vec<f64> = (0..self.count).map(|i| self.min * ratio.powi(i as i32)).collect();
        points[self.count - 1] = self.max;
        Ok(points)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepOptions {
    pub kappa: KappaGrid,
    /// Values of α to sweep; empty means factors of the threshold `c²/b`.
    pub alpha_values: Vec<f64>,
    /// Also fit the `b = 0` growth exponent over `kappa`.
    pub illposedness: bool,
    pub exponent_tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            kappa: KappaGrid {
                min: 1.0,
                max: 1e3,
                count: 61,
            },
            alpha_values: Vec::new(),
            illposedness: false,
            exponent_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceOptions {
    pub count: usize,
    pub u0_index: f64,
    pub u1_index: f64,
    pub xi_index: f64,
    pub margin: f64,
    pub mode_counts: Vec<usize>,
    /// Allowed relative spread of the max ratio across mode counts.
    pub tolerance: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            count: 20,
            u0_index: 1.0,
            u1_index: 0.0,
            xi_index: 0.0,
            margin: 0.2,
            mode_counts: vec![64, 128, 256],
            tolerance: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryOptions {
    pub mode_counts: Vec<usize>,
    /// Allowed relative spread of the ratio across mode counts.
    pub tolerance: f64,
    /// Signals per ensemble; random signals get distinct seeds.
    pub ensemble: usize,
    pub index_tolerance: f64,
    /// Fail unless the indices also match `(0, -1)` from above.
    pub require_sharp: bool,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        Self {
            mode_counts: vec![128, 256, 512],
            tolerance: 0.1,
            ensemble: 1,
            index_tolerance: 0.2,
            require_sharp: false,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text)
    }

    /// Apply `MGT_VOLTERRA_SEED` when set.
    pub fn apply_seed_env(&mut self, value: Option<&str>) -> Result<()> {
        if let Some(v) = value {
            self.seed = v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))?;
        }
        Ok(())
    }

    /// Build every core object once so bad configs fail at load.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.equation_spec(&grid)?;
        let basis = self.basis()?;
        if self.data.u2.is_some() && self.data.xi.is_some() {
            bail!("data.u2 and data.xi are mutually exclusive");
        }
        if self.data.u2.is_some() && !matches!(self.equation, EquationConfig::Mgt { .. }) {
            bail!("data.u2 needs an mgt equation block; give xi for memory equations");
        }
        self.scenario_data(&basis, &grid)?;
        if let Some(t) = &self.options.verify_table {
            if !matches!(t.table, 1 | 2) {
                bail!("options.verify_table.table must be 1 or 2");
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::with_horizon(self.discretization.dt, self.discretization.horizon)?)
    }

    pub fn basis(&self) -> Result<SpectralBasis> {
        self.basis_with(self.discretization.mode_count)
    }

    pub fn basis_with(&self, mode_count: usize) -> Result<SpectralBasis> {
        let domain = DomainSpec::new(&self.domain.lengths)?;
        let bc = match self.bc {
            BcConfig::Dirichlet => BoundaryCondition::Dirichlet,
            BcConfig::Neumann => BoundaryCondition::Neumann,
        };
        Ok(build_basis(domain, bc, mode_count)?)
    }

    pub fn mgt_spec(&self) -> Option<Result<MgtSpec>> {
        match &self.equation {
            EquationConfig::Mgt { b, c, alpha } => Some(MgtSpec::new(*b, *c, *alpha).map_err(Into::into)),
            EquationConfig::Memory { .. } => None,
        }
    }

    pub fn equation_spec(&self, grid: &TimeGrid) -> Result<EquationSpec> {
        Ok(match &self.equation {
            EquationConfig::Mgt { b, c, alpha } => MgtSpec::new(*b, *c, *alpha)?.into(),
            EquationConfig::Memory { b, gamma, n, f } => {
                MemoryEquationSpec::new(*b, *gamma, n.kernel(grid)?, f.kernel(grid)?)?.into()
            }
        })
    }

    fn field(&self, cfg: &Option<FieldConfig>, basis: &SpectralBasis, slot: u64) -> Result<SpectralField> {
        match cfg {
            None => Ok(SpectralField::zeros(basis.len())),
            Some(FieldConfig::Synthesize { index, margin, scale }) => Ok(synthesize_field(
                *index,
                basis,
                *margin,
                self.seed.wrapping_add(slot),
            )?
            .scaled(*scale)),
            Some(FieldConfig::Coefficients(c)) => {
                if c.len() != basis.len() {
                    bail!("explicit coefficients have length {}, mode_count is {}", c.len(), basis.len());
                }
                if c.iter().any(|v| !v.is_finite()) {
                    bail!("explicit coefficients must be finite");
                }
                Ok(SpectralField::new(c.clone()))
            }
        }
    }

    /// Initial and boundary data on `basis`. Synthesized slots use seeds
    /// `seed`, `seed + 1`, `seed + 2` for `u0`, `u1` and the third datum.
    pub fn scenario_data(&self, basis: &SpectralBasis, grid: &TimeGrid) -> Result<ScenarioData> {
        let third = match (&self.data.u2, &self.data.xi) {
            (Some(_), _) => ThirdDatum::U2(self.field(&self.data.u2, basis, 2)?),
            (None, xi) => ThirdDatum::Xi(self.field(xi, basis, 2)?),
        };
        let boundary = match &self.data.boundary {
            Some(b) => Some(b.signal(grid, self.seed)?),
            None => None,
        };
        Ok(ScenarioData {
            u0: self.field(&self.data.u0, basis, 0)?,
            u1: self.field(&self.data.u1, basis, 1)?,
            third,
            boundary,
        })
    }

    pub fn trace_ensemble(&self) -> Vec<TraceScenario> {
        let t = &self.options.trace_check;
        (0..t.count as u64)
            .map(|i| TraceScenario {
                u0_index: t.u0_index,
                u1_index: t.u1_index,
                xi_index: t.xi_index,
                margin: t.margin,
                seed: self.seed.wrapping_add(i),
                scale: 1.0,
            })
            .collect()
    }
}

impl KernelConfig {
    pub fn kernel(&self, grid: &TimeGrid) -> Result<KernelSpec> {
        Ok(match self {
            KernelConfig::Exponential { amplitude, rate } => KernelSpec::exponential(*amplitude, *rate),
            KernelConfig::ExpLinear { rate, slope } => KernelSpec::exp_linear(*rate, *slope, grid),
            KernelConfig::Power { exponent } => KernelSpec::ClosedPower { exponent: *exponent },
            KernelConfig::Tabulated { values, first, second } => {
                for v in [Some(values), first.as_ref(), second.as_ref()].into_iter().flatten() {
                    if v.len() != grid.len() {
                        bail!(
                            "tabulated kernels need one sample per grid point ({}), got {}",
                            grid.len(),
                            v.len()
                        );
                    }
                }
                KernelSpec::Tabulated(TabulatedKernel {
                    values: values.clone(),
                    first: first.clone(),
                    second: second.clone(),
                })
            }
        })
    }
}

impl BoundaryConfig {
    /// Random signals draw from `seed + 1000` (left) and `seed + 2000`
    /// (right).
    pub fn signal(&self, grid: &TimeGrid, seed: u64) -> Result<BoundarySignal> {
        Ok(BoundarySignal {
            left: self.left.samples(grid, seed.wrapping_add(1000))?,
            right: self.right.samples(grid, seed.wrapping_add(2000))?,
        })
    }
}

impl SignalConfig {
    pub fn samples(&self, grid: &TimeGrid, seed: u64) -> Result<Vec<f64>> {
        Ok(match self {
            SignalConfig::Zero => vec![0.0; grid.len()],
            SignalConfig::Step { until, level } => {
                step_signal(grid, *until).into_iter().map(|v| v * level).collect()
            }
            SignalConfig::Telegraph { switches } => telegraph_signal(grid, *switches, seed),
            SignalConfig::Multiscale { coarsest, finest } => {
                if !(*finest > 0.0) {
                    bail!("multiscale finest spacing must be positive");
                }
                multiscale_signal(grid, *coarsest, *finest, seed)
            }
            SignalConfig::Samples(v) => {
                if v.len() != grid.len() {
                    bail!("boundary samples need {} values, got {}", grid.len(), v.len());
                }
                v.clone()
            }
        })
    }
}
