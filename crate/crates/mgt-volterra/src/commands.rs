//! The six subcommands. Each one writes its report files plus a manifest
//! and returns whether the verification passed.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use mgt_core::analysis::{
    boundary_ensemble_check, hidden_regularity_ratio, verify_table_row, BoundaryReport,
    HiddenRegularitySummary, RegularityReport, Table, VerifyOptions,
};
use mgt_core::maccamy::MgtSpec;
use mgt_core::modal::{solve_system, BoundarySignal};
use mgt_core::oracle::{compare_with_oracle, illposedness_diagnostic, stability_sweep, OracleComparison, StabilityReport};
use serde::Serialize;

use crate::config::{EquationConfig, ScenarioConfig, SignalConfig};
use crate::io::{trajectory_csv, OutputDir};

/// Growth exponent of max Re against κ for `b = 0`.
pub const ILLPOSED_EXPONENT: f64 = 2.0 / 3.0;

/// Multiples of the threshold `c²/b` swept when no α values are configured.
pub const THRESHOLD_FACTORS: [f64; 6] = [0.5, 0.9, 0.99, 1.01, 1.1, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    OracleCompare,
    VerifyTable,
    StabilitySweep,
    TraceCheck,
    BoundaryCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::OracleCompare => "oracle-compare",
            Command::VerifyTable => "verify-table",
            Command::StabilitySweep => "stability-sweep",
            Command::TraceCheck => "trace-check",
            Command::BoundaryCheck => "boundary-check",
        }
    }
}

/// Command-line overrides applied on top of the config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub table: Option<u8>,
    pub row: Option<u8>,
    pub base_index: Option<f64>,
}

pub fn run(command: Command, cfg: &ScenarioConfig, out: &Path, ov: &Overrides) -> Result<bool> {
    if let Some(t) = ov.tolerance {
        if !(t.is_finite() && t >= 0.0) {
            bail!("--tolerance must be a non-negative number, got {t}");
        }
    }
    let start = Instant::now();
    let mut dir = OutputDir::create(out)?;
    let pass = match command {
        Command::Solve => solve(cfg, &mut dir)?,
        Command::OracleCompare => oracle_compare(cfg, &mut dir, ov)?,
        Command::VerifyTable => verify_table(cfg, &mut dir, ov)?,
        Command::StabilitySweep => sweep(cfg, &mut dir, ov)?,
        Command::TraceCheck => trace_check(cfg, &mut dir, ov)?,
        Command::BoundaryCheck => boundary_check(cfg, &mut dir, ov)?,
    };
    dir.write_manifest(command.name(), cfg.seed, cfg, pass, start.elapsed().as_secs_f64())?;
    Ok(pass)
}

fn solve(cfg: &ScenarioConfig, dir: &mut OutputDir) -> Result<bool> {
    let grid = cfg.grid()?;
    let basis = cfg.basis()?;
    let traj = solve_system(&cfg.equation_spec(&grid)?, &cfg.scenario_data(&basis, &grid)?, &basis, &grid)?;
    dir.write("trajectory.csv", &trajectory_csv(&traj)?)?;
    Ok(true)
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub tolerance: f64,
    pub pass: bool,
    #[serde(flatten)]
    pub comparison: OracleComparison,
}

fn require_mgt(cfg: &ScenarioConfig, what: &str) -> Result<MgtSpec> {
    cfg.mgt_spec()
        .ok_or_else(|| anyhow!("{what} needs an mgt equation block; memory kernels have no closed-form oracle"))?
}

fn oracle_compare(cfg: &ScenarioConfig, dir: &mut OutputDir, ov: &Overrides) -> Result<bool> {
    let spec = require_mgt(cfg, "oracle-compare")?;
    let grid = cfg.grid()?;
    let basis = cfg.basis()?;
    let data = cfg.scenario_data(&basis, &grid)?;
    let traj = solve_system(&spec.into(), &data, &basis, &grid)?;
    let comparison = compare_with_oracle(&spec, &data, &traj, &basis)?;
    let tolerance = ov.tolerance.unwrap_or(cfg.options.oracle_compare.tolerance);
    let pass = comparison.max_rel_error.is_finite() && comparison.max_rel_error <= tolerance;
    dir.write_json("oracle_compare.json", &OracleReport { tolerance, pass, comparison })?;
    Ok(pass)
}

fn verify_options(cfg: &ScenarioConfig, tolerance: f64, margin: f64) -> VerifyOptions {
    VerifyOptions {
        tolerance,
        margin,
        seed: cfg.seed,
        samples: cfg.options.fit.samples,
        window: cfg.options.fit.window(),
    }
}

fn verify_table(cfg: &ScenarioConfig, dir: &mut OutputDir, ov: &Overrides) -> Result<bool> {
    let t = cfg.options.verify_table.clone();
    let table = ov
        .table
        .or(t.as_ref().map(|t| t.table))
        .context("no table given: set options.verify_table or pass --table")?;
    let row = ov
        .row
        .or(t.as_ref().map(|t| t.row))
        .context("no row given: set options.verify_table or pass --row")?;
    if row == 4 {
        bail!("row 4 (boundary data) is checked by the boundary-check command");
    }
    let table = match table {
        1 => Table::One,
        2 => Table::Two,
        other => bail!("table must be 1 or 2, got {other}"),
    };
    let base = ov.base_index.or(t.as_ref().map(|t| t.base_index)).unwrap_or(0.0);
    let tolerance = ov.tolerance.or(t.as_ref().map(|t| t.tolerance)).unwrap_or(0.15);
    let margin = t.as_ref().map_or(0.05, |t| t.margin);
    let grid = cfg.grid()?;
    let basis = cfg.basis()?;
    let report: RegularityReport = verify_table_row(
        table,
        row,
        base,
        &cfg.equation_spec(&grid)?,
        &basis,
        &grid,
        &verify_options(cfg, tolerance, margin),
    )?;
    dir.write_json("verify_table.json", &report)?;
    Ok(report.pass)
}

#[derive(Debug, Serialize)]
pub struct SweepEntry {
    pub alpha: f64,
    pub gamma: f64,
    pub threshold_stable: bool,
    pub numerically_stable: bool,
    pub worst_max_real: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepReport {
    pub b: f64,
    pub c: f64,
    /// `α·b = c²`.
    pub threshold_alpha: f64,
    pub entries: Vec<SweepEntry>,
    pub mismatches: usize,
    /// Adjacent α values between which the numerical verdict changes.
    pub flips: Vec<[f64; 2]>,
    pub flip_at_threshold: bool,
    pub illposedness: Option<IllposednessReport>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct IllposednessReport {
    pub expected_exponent: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(flatten)]
    pub diagnostic: StabilityReport,
}

fn sweep(cfg: &ScenarioConfig, dir: &mut OutputDir, ov: &Overrides) -> Result<bool> {
    let EquationConfig::Mgt { b, c, alpha } = cfg.equation else {
        bail!("stability-sweep needs an mgt equation block");
    };
    let opts = &cfg.options.stability_sweep;
    let kappas = opts.kappa.points()?;
    let threshold = c * c / b;
    let mut alphas = if opts.alpha_values.is_empty() {
        let mut v: Vec<f64> = THRESHOLD_FACTORS.iter().map(|f| f * threshold).collect();
        v.push(alpha);
        v
    } else {
        opts.alpha_values.clone()
    };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let entries = alphas
        .iter()
        .map(|a| {
            let r = stability_sweep(b, c, *a, &kappas)?;
            Ok(SweepEntry {
                alpha: *a,
                gamma: r.gamma.unwrap_or(f64::NAN),
                threshold_stable: r.threshold_stable,
                numerically_stable: r.numerically_stable,
                worst_max_real: r.max_real.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mismatches = entries.iter().filter(|e| e.gamma != 0.0 && e.threshold_stable != e.numerically_stable).count();
    let flips: Vec<[f64; 2]> = entries
        .windows(2)
        .filter(|w| w[0].numerically_stable != w[1].numerically_stable)
        .map(|w| [w[0].alpha, w[1].alpha])
        .collect();
    let flip_at_threshold = flips.len() == 1 && flips[0][0] <= threshold && threshold <= flips[0][1];
    let illposedness = if opts.illposedness {
        let tolerance = ov.tolerance.unwrap_or(opts.exponent_tolerance);
        let diagnostic = illposedness_diagnostic(c, alpha, &kappas)?;
        let pass = diagnostic
            .growth_exponent
            .is_some_and(|e| (e - ILLPOSED_EXPONENT).abs() <= tolerance);
        Some(IllposednessReport {
            expected_exponent: ILLPOSED_EXPONENT,
            tolerance,
            pass,
            diagnostic,
        })
    } else {
        None
    };
    let pass = mismatches == 0 && illposedness.as_ref().is_none_or(|r| r.pass);
    let report = SweepReport {
        b,
        c,
        threshold_alpha: threshold,
        entries,
        mismatches,
        flips,
        flip_at_threshold,
        illposedness,
        pass,
    };
    dir.write_json("stability_sweep.json", &report)?;
    Ok(pass)
}

#[derive(Debug, Serialize)]
pub struct TraceCheckReport {
    pub tolerance: f64,
    pub pass: bool,
    #[serde(flatten)]
    pub summary: HiddenRegularitySummary,
}

fn trace_check(cfg: &ScenarioConfig, dir: &mut OutputDir, ov: &Overrides) -> Result<bool> {
    let opts = &cfg.options.trace_check;
    let tolerance = ov.tolerance.unwrap_or(opts.tolerance);
    let finest = opts.mode_counts.iter().copied().max().context("trace_check.mode_counts is empty")?;
    let grid = cfg.grid()?;
    let summary = hidden_regularity_ratio(
        &cfg.trace_ensemble(),
        &cfg.equation_spec(&grid)?,
        &cfg.basis_with(finest)?,
        &grid,
        &opts.mode_counts,
        tolerance,
    )?;
    let pass = summary.empirical_m.is_finite() && summary.spread <= tolerance && !summary.unbounded;
    dir.write_json("trace_check.json", &TraceCheckReport { tolerance, pass, summary })?;
    Ok(pass)
}

#[derive(Debug, Serialize)]
pub struct BoundaryCheckReport {
    pub mode_counts: Vec<usize>,
    pub ratios: Vec<f64>,
    pub spread: f64,
    pub tolerance: f64,
    pub require_sharp: bool,
    /// Index estimates at the finest mode count.
    pub finest: BoundaryReport,
    pub pass: bool,
}

fn boundary_signals(cfg: &ScenarioConfig, grid: &mgt_core::volterra::TimeGrid) -> Result<Vec<BoundarySignal>> {
    let b = cfg
        .data
        .boundary
        .as_ref()
        .context("boundary-check needs data.boundary")?;
    let random = |s: &SignalConfig| matches!(s, SignalConfig::Telegraph { .. } | SignalConfig::Multiscale { .. });
    let members = if random(&b.left) || random(&b.right) {
        cfg.options.boundary_check.ensemble.max(1)
    } else {
        1
    };
    (0..members as u64)
        .map(|i| b.signal(grid, cfg.seed.wrapping_add(i * 7919)))
        .collect()
}

fn boundary_check(cfg: &ScenarioConfig, dir: &mut OutputDir, ov: &Overrides) -> Result<bool> {
    let opts = &cfg.options.boundary_check;
    if opts.mode_counts.is_empty() {
        bail!("boundary_check.mode_counts is empty");
    }
    let tolerance = ov.tolerance.unwrap_or(opts.tolerance);
    let grid = cfg.grid()?;
    let spec = cfg.equation_spec(&grid)?;
    let signals = boundary_signals(cfg, &grid)?;
    let vopts = verify_options(cfg, opts.index_tolerance, 0.0);
    let mut counts = opts.mode_counts.clone();
    counts.sort_unstable();
    let reports = counts
        .iter()
        .map(|k| Ok(boundary_ensemble_check(&signals, &spec, &cfg.basis_with(*k)?, &grid, &vopts)?))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { (hi - lo) / lo } else { f64::INFINITY };
    let finest = reports.into_iter().last().expect("non-empty");
    let indices_ok = if opts.require_sharp {
        finest.indices_pass
    } else {
        finest.membership.iter().all(|m| *m)
    };
    let pass = spread <= tolerance && indices_ok;
    dir.write_json(
        "boundary_check.json",
        &BoundaryCheckReport {
            mode_counts: counts,
            ratios,
            spread,
            tolerance,
            require_sharp: opts.require_sharp,
            finest,
            pass,
        },
    )?;
    Ok(pass)
}
