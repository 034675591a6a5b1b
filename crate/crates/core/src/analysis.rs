//! Sobolev-index estimation from spectral decay, regularity-table
//! verification, boundary traces and boundary-to-interior checks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::maccamy::{reduce, EquationSpec};
use crate::modal::{solve_with_kernels, BoundarySignal, ScenarioData, Slot, ThirdDatum, Trajectory};
use crate::oracle::least_squares_slope;
use crate::spectral::{
    synthesize_field, xs_norm, BoundaryCondition, SobolevIndex, SpectralBasis, SpectralField,
};
use crate::volterra::TimeGrid;

/// Tail of the spectrum used for decay fits: the top `octaves` of μ, each
/// split into `blocks_per_octave` geometric blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitWindow {
    pub octaves: u32,
    pub blocks_per_octave: u32,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            octaves: 2,
            blocks_per_octave: 4,
        }
    }
}

/// Minimum basis size accepted by [`estimate_sobolev_index`].
pub const MIN_MODES: usize = 64;
/// Tail energy below this fraction of the peak counts as zero.
pub const TAIL_FLOOR: f64 = 1e-14;

/// Supremum of `s` with `Σ μ^{2s} c_k² < ∞`, assuming `|c_k| ~ μ^{-p}`:
/// `s = p - d/2`, `p` from a least-squares fit of block-averaged
/// `ln c²` against `ln μ`.
pub fn estimate_sobolev_index(
    field: &SpectralField,
    basis: &SpectralBasis,
    window: FitWindow,
) -> Result<SobolevIndex> {
    crate::error::check_len(basis.len(), field.len())?;
    if basis.len() < MIN_MODES {
        return Err(Error::InvalidArgument(format!(
            "index estimation needs at least {MIN_MODES} modes, got {}",
            basis.len()
        )));
    }
    if window.octaves == 0 || window.blocks_per_octave == 0 {
        return Err(Error::InvalidArgument("empty fit window".into()));
    }
    let mus: Vec<f64> = basis.modes().iter().map(|m| m.mu()).collect();
    let top = mus.iter().copied().fold(0.0, f64::max);
    let bottom = mus.iter().copied().fold(f64::INFINITY, f64::min);
    let span = 2f64.powi(window.octaves as i32);
    let lo = top / span;
    if lo < bottom {
        return Err(Error::InvalidArgument(format!(
            "fit window of {} octaves exceeds the spectrum [{bottom}, {top}]",
            window.octaves
        )));
    }

    let peak = field.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if peak == 0.0 {
        return Ok(SobolevIndex::Infinite);
    }
    let tail_peak = field
        .coeffs
        .iter()
        .zip(&mus)
        .filter(|(_, mu)| **mu >= lo)
        .fold(0.0f64, |m, (c, _)| m.max(c.abs()));
    if tail_peak <= TAIL_FLOOR * peak {
        return Ok(SobolevIndex::Infinite);
    }

    let blocks = (window.octaves * window.blocks_per_octave) as usize;
    let ratio = span.powf(1.0 / blocks as f64);
    let mut energy = vec![0.0; blocks];
    let mut log_mu = vec![0.0; blocks];
    let mut count = vec![0usize; blocks];
    for (c, mu) in field.coeffs.iter().zip(&mus) {
        if *mu < lo {
            continue;
        }
        let b = (((mu / lo).ln() / ratio.ln()).floor() as usize).min(blocks - 1);
        energy[b] += c * c;
        log_mu[b] += mu.ln();
        count[b] += 1;
    }
    let mut pts = Vec::with_capacity(blocks);
    for b in 0..blocks {
        if count[b] == 0 {
            continue;
        }
        if energy[b] == 0.0 {
            return Ok(SobolevIndex::Infinite);
        }
        let n = count[b] as f64;
        pts.push((log_mu[b] / n, (energy[b] / n).ln()));
    }
    let slope = least_squares_slope(&pts).ok_or_else(|| {
        Error::InvalidArgument("fit window holds fewer than two populated blocks".into())
    })?;
    Ok(SobolevIndex::Finite(-0.5 * slope - 0.5 * basis.dimension() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Table {
    /// General memory equation.
    One,
    /// MGT equation.
    Two,
}

/// Predicted `(u, u_t, u_tt)` indices of rows 1-3.
pub fn predicted_indices(table: Table, row: u8, base: f64, forcing_h1: bool) -> Result<[f64; 3]> {
    Ok(match (table, row) {
        (Table::One, 1) => [base, base - 1.0, base - 2.0],
        (Table::Two, 1) => [base, base, base - 1.0],
        (_, 2) => [base + 1.0, base, base - 1.0],
        (Table::One, 3) if !forcing_h1 => [base + 1.0, base, base - 1.0],
        (_, 3) => [base + 2.0, base + 1.0, base],
        (_, 4) => {
            return Err(Error::InvalidArgument(
                "row 4 (boundary data) is verified by boundary_to_interior_check".into(),
            ))
        }
        _ => return Err(Error::InvalidArgument(format!("no row {row}"))),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VerifyOptions {
    pub tolerance: f64,
    pub margin: f64,
    pub seed: u64,
    /// Number of sampled times `T·j/samples`, `j = 1..=samples`.
    pub samples: usize,
    pub window: FitWindow,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.15,
            margin: 0.05,
            seed: 0,
            samples: 8,
            window: FitWindow::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegularityReport {
    pub table: Table,
    pub row: u8,
    pub base_index: f64,
    pub predicted: [f64; 3],
    /// Minimum over the sampled times.
    pub estimated: [SobolevIndex; 3],
    pub per_time: Vec<[SobolevIndex; 3]>,
    pub sample_times: Vec<f64>,
    pub tolerance: f64,
    /// `|estimated - predicted| ≤ tolerance` in every slot.
    pub pass: bool,
    /// `estimated ≥ predicted - tolerance` per slot.
    pub membership: [bool; 3],
    /// `estimated ≤ predicted + tolerance` per slot.
    pub sharp: [bool; 3],
    pub mode_count: usize,
    pub window: FitWindow,
}

/// Sample times, per-time indices of `(u, u_t, u_tt)`, and their minimum
/// over time.
pub type IndexSeries = (Vec<f64>, Vec<[SobolevIndex; 3]>, [SobolevIndex; 3]);

/// Estimated `(u, u_t, u_tt)` indices of a trajectory: per sampled time and
/// their minimum.
pub fn trajectory_indices(
    traj: &Trajectory,
    basis: &SpectralBasis,
    samples: usize,
    window: FitWindow,
) -> Result<IndexSeries> {
    ensemble_indices(core::slice::from_ref(traj), basis, samples, window)
}

/// As [`trajectory_indices`], estimating each slot from the root mean
/// square of the coefficients over an ensemble on a common grid. Random
/// data then yields the index of the expected spectrum instead of one
/// realization's.
pub fn ensemble_indices(
    trajs: &[Trajectory],
    basis: &SpectralBasis,
    samples: usize,
    window: FitWindow,
) -> Result<IndexSeries> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let first = trajs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    if trajs.iter().any(|t| t.grid != first.grid) {
        return Err(Error::Incompatible("ensemble members use different grids".into()));
    }
    let steps = first.grid.steps();
    let mut times = Vec::with_capacity(samples);
    let mut per_time = Vec::with_capacity(samples);
    let mut min = [SobolevIndex::Infinite; 3];
    for j in 1..=samples {
        let n = ((steps * j) as f64 / samples as f64).round() as usize;
        times.push(first.grid.time(n));
        let mut est = [SobolevIndex::Infinite; 3];
        for (slot, e) in [Slot::U, Slot::Ut, Slot::Utt].into_iter().zip(est.iter_mut()) {
            let mut energy = vec![0.0; basis.len()];
            for t in trajs {
                let f = t.field(slot, n);
                crate::error::check_len(basis.len(), f.len())?;
                for (a, c) in energy.iter_mut().zip(&f.coeffs) {
                    *a += c * c;
                }
            }
            let rms = SpectralField::new(
                energy.iter().map(|a| (a / trajs.len() as f64).sqrt()).collect(),
            );
            *e = estimate_sobolev_index(&rms, basis, window)?;
        }
        for i in 0..3 {
            min[i] = min[i].min(est[i]);
        }
        per_time.push(est);
    }
    Ok((times, per_time, min))
}

fn compare(estimated: &[SobolevIndex], predicted: &[f64], tol: f64) -> (Vec<bool>, Vec<bool>) {
    let membership = estimated
        .iter()
        .zip(predicted)
        .map(|(e, p)| e.value() >= p - tol)
        .collect();
    let sharp = estimated
        .iter()
        .zip(predicted)
        .map(|(e, p)| e.is_finite() && e.value() <= p + tol)
        .collect();
    (membership, sharp)
}

/// Solve the row's scenario (one data slot synthesized at `base_index`,
/// the others zero) and compare estimated with predicted indices.
pub fn verify_table_row(
    table: Table,
    row: u8,
    base_index: f64,
    spec: &EquationSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
    opts: &VerifyOptions,
) -> Result<RegularityReport> {
    match (table, spec) {
        (Table::Two, EquationSpec::Mgt(_)) | (Table::One, EquationSpec::Memory(_)) => {}
        _ => {
            return Err(Error::InvalidArgument(
                "table 1 needs a memory-equation spec and table 2 an MGT spec".into(),
            ))
        }
    }
    let predicted = predicted_indices(table, row, base_index, spec.forcing_is_h1())?;
    let field = synthesize_field(base_index, basis, opts.margin, opts.seed)?;
    let mut data = ScenarioData::zeros(basis.len());
    if table == Table::Two {
        data.third = ThirdDatum::U2(SpectralField::zeros(basis.len()));
    }
    match row {
        1 => data.u0 = field,
        2 => data.u1 = field,
        _ => {
            data.third = match table {
                Table::One => ThirdDatum::Xi(field),
                Table::Two => ThirdDatum::U2(field),
            }
        }
    }
    let dk = reduce(spec, grid)?;
    let traj = solve_with_kernels(&dk, &data, basis, grid)?;
    let (sample_times, per_time, estimated) =
        trajectory_indices(&traj, basis, opts.samples, opts.window)?;
    let (membership, sharp) = compare(&estimated, &predicted, opts.tolerance);
    Ok(RegularityReport {
        table,
        row,
        base_index,
        predicted,
        estimated,
        per_time,
        sample_times,
        tolerance: opts.tolerance,
        pass: membership.iter().zip(&sharp).all(|(a, b)| *a && *b),
        membership: [membership[0], membership[1], membership[2]],
        sharp: [sharp[0], sharp[1], sharp[2]],
        mode_count: basis.len(),
        window: opts.window,
    })
}

fn require_dirichlet_interval(basis: &SpectralBasis) -> Result<()> {
    if basis.bc() != BoundaryCondition::Dirichlet || basis.dimension() != 1 {
        return Err(Error::Unsupported(
            "boundary traces are implemented for Dirichlet intervals only".into(),
        ));
    }
    Ok(())
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceReport {
    /// `∫₀ᵀ Σ_Γ |∂_ν u|² dt`.
    pub trace_norm_sq: f64,
    pub u0_x1_sq: f64,
    pub u1_x0_sq: f64,
    pub xi_x0_sq: f64,
    /// Trace norm over the data norm, both squared.
    pub ratio: f64,
    pub mode_count: usize,
    /// `|trace(K) - trace(2K)| / trace(2K)`, filled by [`trace_refinement`].
    pub refinement_change: Option<f64>,
}

/// Squared `L²((0,T)×Γ)` norm of the normal trace against
/// `‖u₀‖²_{X₁} + ‖u₁‖²_{X₀} + ‖ξ‖²_{X₀}`.
pub fn boundary_trace(traj: &Trajectory, basis: &SpectralBasis) -> Result<TraceReport> {
    require_dirichlet_interval(basis)?;
    crate::error::check_len(basis.len(), traj.mode_count())?;
    let normals: Vec<(f64, f64)> = (0..basis.len())
        .map(|k| basis.normal_derivatives_1d(k))
        .collect::<Result<_>>()?;
    let grid = traj.grid;
    let density: Vec<f64> = (0..grid.len())
        .map(|n| {
            let (mut left, mut right) = (0.0, 0.0);
            for (m, (dl, dr)) in traj.modes.iter().zip(&normals) {
                left += m.u[n] * dl;
                right += m.u[n] * dr;
            }
            left * left + right * right
        })
        .collect();
    let trace_norm_sq = trapezoid(&density, grid.dt());
    let u0_x1_sq = xs_norm(&traj.field(Slot::U, 0), basis, 1.0)?.powi(2);
    let u1_x0_sq = xs_norm(&traj.field(Slot::Ut, 0), basis, 0.0)?.powi(2);
    let xi_x0_sq = xs_norm(&traj.xi, basis, 0.0)?.powi(2);
    let data = u0_x1_sq + u1_x0_sq + xi_x0_sq;
    Ok(TraceReport {
        trace_norm_sq,
        u0_x1_sq,
        u1_x0_sq,
        xi_x0_sq,
        ratio: if data > 0.0 { trace_norm_sq / data } else { 0.0 },
        mode_count: basis.len(),
        refinement_change: None,
    })
}

/// Trace report of `scenario` on `basis` with the truncation indicator
/// against the first half of its modes.
pub fn trace_refinement(
    scenario: &TraceScenario,
    spec: &EquationSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<TraceReport> {
    require_dirichlet_interval(basis)?;
    if basis.len() < 2 {
        return Err(Error::InvalidArgument("refinement needs at least 2 modes".into()));
    }
    let dk = reduce(spec, grid)?;
    let coarse_basis = basis.with_mode_count(basis.len() / 2)?;
    let coarse = boundary_trace(
        &solve_with_kernels(&dk, &scenario.data(&coarse_basis)?, &coarse_basis, grid)?,
        &coarse_basis,
    )?;
    let mut fine = boundary_trace(
        &solve_with_kernels(&dk, &scenario.data(basis)?, basis, grid)?,
        basis,
    )?;
    fine.refinement_change = Some(if fine.trace_norm_sq > 0.0 {
        (fine.trace_norm_sq - coarse.trace_norm_sq).abs() / fine.trace_norm_sq
    } else {
        0.0
    });
    Ok(fine)
}

/// Synthesis recipe for a trace scenario: indices of `u₀`, `u₁`, `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceScenario {
    pub u0_index: f64,
    pub u1_index: f64,
    pub xi_index: f64,
    pub margin: f64,
    pub seed: u64,
    pub scale: f64,
}

impl TraceScenario {
    /// `(u₀, u₁, ξ) ∈ X₁ × X₀ × X₀`; the last is `u₂ - Δu₀ ∈ L²`.
    pub fn check_compatible(&self) -> Result<()> {
        let slots = [
            ("u0 in X_1", self.u0_index + self.margin - 1.0),
            ("u1 in X_0", self.u1_index + self.margin),
            ("xi = u2 - b Δu0 in X_0 (L² compatibility)", self.xi_index + self.margin),
        ];
        for (name, excess) in slots {
            if excess <= 0.0 {
                return Err(Error::Incompatible(format!("scenario violates {name}")));
            }
        }
        Ok(())
    }

    pub fn data(&self, basis: &SpectralBasis) -> Result<ScenarioData> {
        self.check_compatible()?;
        let seed = self.seed.wrapping_mul(3);
        Ok(ScenarioData {
            u0: synthesize_field(self.u0_index, basis, self.margin, seed)?.scaled(self.scale),
            u1: synthesize_field(self.u1_index, basis, self.margin, seed + 1)?.scaled(self.scale),
            third: ThirdDatum::Xi(
                synthesize_field(self.xi_index, basis, self.margin, seed + 2)?.scaled(self.scale),
            ),
            boundary: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HiddenRegularitySummary {
    pub mode_counts: Vec<usize>,
    /// `ratios[i][j]`: scenario `i` at `mode_counts[j]`.
    pub ratios: Vec<Vec<f64>>,
    /// Max ratio over the ensemble per mode count.
    pub max_ratio: Vec<f64>,
    /// Empirical `M_T`: the max over everything.
    pub empirical_m: f64,
    /// `(max - min) / min` of `max_ratio` across mode counts.
    pub spread: f64,
    /// Ratios rise strictly with every refinement and the spread exceeds
    /// the stability tolerance.
    pub unbounded: bool,
}

/// Trace-to-data ratios of an ensemble across mode counts. Each scenario is
/// synthesized on the largest basis; coarser runs use prefixes of it.
pub fn hidden_regularity_ratio(
    ensemble: &[TraceScenario],
    spec: &EquationSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
    mode_counts: &[usize],
    stability_tolerance: f64,
) -> Result<HiddenRegularitySummary> {
    require_dirichlet_interval(basis)?;
    if mode_counts.is_empty() || mode_counts.iter().any(|k| *k == 0 || *k > basis.len()) {
        return Err(Error::InvalidArgument(format!(
            "mode counts must lie in 1..={}",
            basis.len()
        )));
    }
    for s in ensemble {
        s.check_compatible()?;
    }
    let dk = reduce(spec, grid)?;
    let bases: Vec<SpectralBasis> = mode_counts
        .iter()
        .map(|k| basis.with_mode_count(*k))
        .collect::<Result<_>>()?;
    let mut ratios = Vec::with_capacity(ensemble.len());
    for s in ensemble {
        let mut row = Vec::with_capacity(bases.len());
        for b in &bases {
            let traj = solve_with_kernels(&dk, &s.data(b)?, b, grid)?;
            row.push(boundary_trace(&traj, b)?.ratio);
        }
        ratios.push(row);
    }
    let max_ratio: Vec<f64> = (0..bases.len())
        .map(|j| ratios.iter().map(|r: &Vec<f64>| r[j]).fold(0.0, f64::max))
        .collect();
    let hi = max_ratio.iter().copied().fold(0.0, f64::max);
    let lo = max_ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if lo > 0.0 { (hi - lo) / lo } else { 0.0 };
    let rising = max_ratio.windows(2).all(|w| w[1] > w[0]);
    Ok(HiddenRegularitySummary {
        mode_counts: mode_counts.to_vec(),
        ratios,
        max_ratio,
        empirical_m: hi,
        spread,
        unbounded: rising && spread > stability_tolerance,
    })
}

/// `1` on `[0, until]`, `0` afterwards.
pub fn step_signal(grid: &TimeGrid, until: f64) -> Vec<f64> {
    grid.sample(|t| if t <= until { 1.0 } else { 0.0 })
}

/// Random `±1` signal with `switches` sign changes at uniformly random
/// times in `(0, T)`.
pub fn telegraph_signal(grid: &TimeGrid, switches: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let horizon = grid.horizon();
    let mut times: Vec<f64> = (0..switches)
        .map(|_| horizon * (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
        .collect();
    times.sort_by(f64::total_cmp);
    let start = if rng.next_u32() & 1 == 0 { 1.0 } else { -1.0 };
    let mut next = 0;
    grid.times()
        .into_iter()
        .map(|t| {
            while next < times.len() && times[next] <= t {
                next += 1;
            }
            if next % 2 == 0 {
                start
            } else {
                -start
            }
        })
        .collect()
}

/// Normalized sum of independent telegraph signals with `coarsest`,
/// `2·coarsest`, ... switches, up to a mean spacing of `finest`. Equal
/// weights give a spectral density `~ 1/ω` between the two scales:
/// borderline square integrable, so interior responses sit at the
/// Dirichlet boundary-to-interior exponent.
pub fn multiscale_signal(grid: &TimeGrid, coarsest: usize, finest: f64, seed: u64) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let mut switches = coarsest.max(1);
    let mut levels = 0usize;
    loop {
        let sig = telegraph_signal(grid, switches, seed.wrapping_add(levels as u64));
        for (o, s) in out.iter_mut().zip(sig) {
            *o += s;
        }
        levels += 1;
        if grid.horizon() / switches as f64 <= finest {
            break;
        }
        switches *= 2;
    }
    let norm = 1.0 / (levels as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundaryReport {
    /// Worst `sup_t ‖u(t)‖_{X₀}` over the ensemble.
    pub sup_u_x0: f64,
    /// `‖g‖_{L²((0,T)×Γ)}` of the member attaining `ratio`.
    pub g_norm: f64,
    /// Max over the ensemble of `sup_t ‖u(t)‖_{X₀} / ‖g‖`.
    pub ratio: f64,
    /// Indices of `(u, u_t)` from the ensemble spectrum.
    pub estimated: [SobolevIndex; 2],
    pub predicted: [f64; 2],
    pub tolerance: f64,
    pub indices_pass: bool,
    pub membership: [bool; 2],
    pub mode_count: usize,
    pub ensemble_size: usize,
}

/// Zero initial data, Dirichlet boundary signal `g`: bound
/// `sup_t ‖u(t)‖_{X₀} / ‖g‖` and estimate the indices of `(u, u_t)`
/// against `(α₀, α₀ - 1) = (0, -1)`.
pub fn boundary_to_interior_check(
    g: &BoundarySignal,
    spec: &EquationSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
    opts: &VerifyOptions,
) -> Result<BoundaryReport> {
    boundary_ensemble_check(core::slice::from_ref(g), spec, basis, grid, opts)
}

/// [`boundary_to_interior_check`] over several signals, with indices taken
/// from the ensemble spectrum (see [`ensemble_indices`]).
pub fn boundary_ensemble_check(
    signals: &[BoundarySignal],
    spec: &EquationSpec,
    basis: &SpectralBasis,
    grid: &TimeGrid,
    opts: &VerifyOptions,
) -> Result<BoundaryReport> {
    require_dirichlet_interval(basis)?;
    if signals.is_empty() {
        return Err(Error::InvalidArgument("empty boundary ensemble".into()));
    }
    let dk = reduce(spec, grid)?;
    let mut trajs = Vec::with_capacity(signals.len());
    let (mut sup_u_x0, mut g_norm, mut ratio) = (0.0f64, 0.0, 0.0);
    let mut any_signal = false;
    for g in signals {
        let mut data = ScenarioData::zeros(basis.len());
        data.boundary = Some(g.clone());
        let traj = solve_with_kernels(&dk, &data, basis, grid)?;
        let sup = (0..grid.len())
            .map(|n| xs_norm(&traj.field(Slot::U, n), basis, 0.0))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let density: Vec<f64> = g.left.iter().zip(&g.right).map(|(a, b)| a * a + b * b).collect();
        let norm = trapezoid(&density, grid.dt()).sqrt();
        sup_u_x0 = sup_u_x0.max(sup);
        if norm > 0.0 {
            any_signal = true;
            if sup / norm >= ratio {
                ratio = sup / norm;
                g_norm = norm;
            }
        }
        trajs.push(traj);
    }
    let predicted = [0.0, -1.0];
    let estimated = if any_signal {
        let (_, _, est) = ensemble_indices(&trajs, basis, opts.samples, opts.window)?;
        [est[0], est[1]]
    } else {
        [SobolevIndex::Infinite; 2]
    };
    let (membership, sharp) = compare(&estimated, &predicted, opts.tolerance);
    Ok(BoundaryReport {
        sup_u_x0,
        g_norm,
        ratio,
        estimated,
        predicted,
        tolerance: opts.tolerance,
        indices_pass: membership.iter().zip(&sharp).all(|(a, b)| *a && *b),
        membership: [membership[0], membership[1]],
        mode_count: basis.len(),
        ensemble_size: signals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maccamy::MgtSpec;
    use crate::modal::{solve_system, ModeSeries};
    use crate::spectral::{build_basis, DomainSpec};
    use core::f64::consts::PI;

    fn dirichlet(n: usize) -> SpectralBasis {
        build_basis(DomainSpec::interval(1.0).unwrap(), BoundaryCondition::Dirichlet, n).unwrap()
    }

    fn power_field(basis: &SpectralBasis, p: f64) -> SpectralField {
        SpectralField::new(basis.modes().iter().map(|m| m.mu().powf(-p)).collect())
    }

    #[test]
    fn estimator_recovers_power_laws() {
        let b = dirichlet(512);
        let w = FitWindow::default();
        let e = estimate_sobolev_index(&power_field(&b, 1.0), &b, w).unwrap();
        assert!((e.value() - 0.5).abs() < 0.05, "{e:?}");
        let e = estimate_sobolev_index(&power_field(&b, 2.55), &b, w).unwrap();
        assert!((e.value() - 2.05).abs() < 0.05, "{e:?}");
    }

    #[test]
    fn estimator_handles_degenerate_fields() {
        let b = dirichlet(128);
        let w = FitWindow::default();
        assert_eq!(
            estimate_sobolev_index(&SpectralField::single_mode(128, 0, 1.0), &b, w).unwrap(),
            SobolevIndex::Infinite
        );
        assert_eq!(
            estimate_sobolev_index(&SpectralField::zeros(128), &b, w).unwrap(),
            SobolevIndex::Infinite
        );
        assert!(estimate_sobolev_index(&SpectralField::zeros(32), &dirichlet(32), w).is_err());
        let wide = FitWindow {
            octaves: 8,
            blocks_per_octave: 4,
        };
        assert!(estimate_sobolev_index(&power_field(&b, 1.0), &b, wide).is_err());
    }

    #[test]
    fn estimator_is_scale_invariant_and_matches_synthesis() {
        let b = dirichlet(512);
        for s in [-1.0, 0.0, 0.5, 1.0, 2.0] {
            let f = synthesize_field(s, &b, 0.05, 11).unwrap();
            let e = estimate_sobolev_index(&f, &b, FitWindow::default()).unwrap().value();
            assert!((e - (s + 0.05)).abs() < 0.1, "s={s}: {e}");
            let e10 = estimate_sobolev_index(&f.scaled(10.0), &b, FitWindow::default())
                .unwrap()
                .value();
            assert!((e - e10).abs() < 1e-10);
        }
    }

    #[test]
    fn estimator_in_two_dimensions() {
        let b = build_basis(
            DomainSpec::rectangle(1.0, 1.0).unwrap(),
            BoundaryCondition::Dirichlet,
            2048,
        )
        .unwrap();
        let f = synthesize_field(0.5, &b, 0.05, 3).unwrap();
        let e = estimate_sobolev_index(&f, &b, FitWindow::default()).unwrap().value();
        assert!((e - 0.55).abs() < 0.1, "{e}");
    }

    #[test]
    fn predictions_per_row() {
        assert_eq!(predicted_indices(Table::Two, 1, 1.0, true).unwrap(), [1.0, 1.0, 0.0]);
        assert_eq!(predicted_indices(Table::One, 1, 1.0, true).unwrap(), [1.0, 0.0, -1.0]);
        assert_eq!(predicted_indices(Table::One, 3, 0.0, false).unwrap(), [1.0, 0.0, -1.0]);
        assert_eq!(predicted_indices(Table::One, 3, 0.0, true).unwrap(), [2.0, 1.0, 0.0]);
        assert_eq!(predicted_indices(Table::Two, 2, 0.0, true).unwrap(), [1.0, 0.0, -1.0]);
        assert!(predicted_indices(Table::Two, 4, 0.0, true).is_err());
        assert!(predicted_indices(Table::One, 5, 0.0, true).is_err());
    }

    #[test]
    fn table_spec_mismatch_is_rejected() {
        let b = dirichlet(64);
        let g = TimeGrid::new(1e-2, 10).unwrap();
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap().into();
        let r = verify_table_row(Table::One, 1, 0.0, &spec, &b, &g, &VerifyOptions::default());
        assert!(r.is_err());
    }

    #[test]
    fn single_mode_trace_closed_form() {
        // u = a(t)√2 sin(πx): |∂_ν u|² = 2π² a² at each end.
        let g = TimeGrid::new(1e-3, 1000).unwrap();
        let b = dirichlet(2);
        let a: Vec<f64> = g.sample(|t| (3.0 * t).cos());
        let zero = vec![0.0; g.len()];
        let series = |v: &Vec<f64>| ModeSeries {
            u: v.clone(),
            u_t: zero.clone(),
            u_tt: zero.clone(),
            v: v.clone(),
            v_t: zero.clone(),
            v_tt: zero.clone(),
        };
        let traj = Trajectory {
            grid: g,
            r0_at_zero: 0.0,
            xi: SpectralField::zeros(2),
            modes: vec![series(&a), series(&zero)],
        };
        let r = boundary_trace(&traj, &b).unwrap();
        // ∫₀¹ 4π² cos²(3t) dt
        let exact = 4.0 * PI * PI * (0.5 + (6.0f64).sin() / 12.0);
        assert!((r.trace_norm_sq - exact).abs() < 1e-5, "{} vs {exact}", r.trace_norm_sq);
    }

    #[test]
    fn zero_trajectory_has_zero_trace() {
        let g = TimeGrid::new(1e-2, 50).unwrap();
        let b = dirichlet(8);
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap().into();
        let traj = solve_system(&spec, &ScenarioData::zeros(8), &b, &g).unwrap();
        let r = boundary_trace(&traj, &b).unwrap();
        assert_eq!((r.trace_norm_sq, r.ratio), (0.0, 0.0));
    }

    #[test]
    fn incompatible_scenarios_are_rejected() {
        let s = TraceScenario {
            u0_index: 1.0,
            u1_index: 0.0,
            xi_index: -1.0,
            margin: 0.1,
            seed: 1,
            scale: 1.0,
        };
        match s.check_compatible() {
            Err(Error::Incompatible(msg)) => assert!(msg.contains("xi")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_boundary_signal_gives_zero_solution() {
        let g = TimeGrid::new(1e-3, 200).unwrap();
        let b = dirichlet(64);
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap().into();
        let sig = BoundarySignal {
            left: vec![0.0; g.len()],
            right: vec![0.0; g.len()],
        };
        let r = boundary_to_interior_check(&sig, &spec, &b, &g, &VerifyOptions::default()).unwrap();
        assert_eq!(r.sup_u_x0, 0.0);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn signal_generators() {
        let g = TimeGrid::new(1e-3, 1000).unwrap();
        let s = step_signal(&g, 0.5);
        assert_eq!((s[0], s[500], s[501]), (1.0, 1.0, 0.0));
        let t = telegraph_signal(&g, 64, 9);
        assert!(t.iter().all(|v| v.abs() == 1.0));
        assert_eq!(t, telegraph_signal(&g, 64, 9));
        let flips = t.windows(2).filter(|w| w[0] != w[1]).count();
        assert!((56..=64).contains(&flips), "{flips}");
        let m = multiscale_signal(&g, 4, 0.01, 2);
        let energy: f64 = m.iter().map(|v| v * v).sum::<f64>() / g.len() as f64;
        assert!(energy > 0.5 && energy < 2.0, "{energy}");
    }
}
