//! Per-mode solves of the reduced Volterra problems and assembly of full
//! trajectories.

use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::error::{check_len, Error, Result};
use crate::maccamy::{
    assemble_modal_problem, change_of_variables_factor, reduce, xi_from_mgt, DerivedKernels,
    EquationSpec, ModalBoundary, ModalData, ModalProblem,
};
use crate::quadrature::solve_oscillatory_second_kind;
use crate::spectral::{green_lift, SpectralBasis, SpectralField};
use crate::volterra::{convolve, KernelSpec, TimeGrid};

/// The third initial datum: `u₂` for MGT data, or `ξ` directly.
#[derive(Debug, Clone, PartialEq)]
pub enum ThirdDatum {
    U2(SpectralField),
    Xi(SpectralField),
}

/// Dirichlet boundary samples at `x = 0` and `x = L`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySignal {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub u0: SpectralField,
    pub u1: SpectralField,
    pub third: ThirdDatum,
    pub boundary: Option<BoundarySignal>,
}

impl ScenarioData {
    pub fn zeros(len: usize) -> Self {
        Self {
            u0: SpectralField::zeros(len),
            u1: SpectralField::zeros(len),
            third: ThirdDatum::Xi(SpectralField::zeros(len)),
            boundary: None,
        }
    }

    /// `ξ` in the basis: `u₂ - bΔu₀` for [`ThirdDatum::U2`].
    pub fn xi(&self, b: f64, basis: &SpectralBasis) -> Result<SpectralField> {
        match &self.third {
            ThirdDatum::U2(u2) => Ok(xi_from_mgt(&self.u0, u2, b, basis)?.field),
            ThirdDatum::Xi(xi) => {
                check_len(basis.len(), xi.len())?;
                Ok(xi.clone())
            }
        }
    }
}

/// Time series of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_tt: Vec<f64>,
    pub v: Vec<f64>,
    pub v_t: Vec<f64>,
    pub v_tt: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    U,
    Ut,
    Utt,
    V,
    Vt,
    Vtt,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub r0_at_zero: f64,
    pub xi: SpectralField,
    /// One series per basis mode, in basis order.
    pub modes: Vec<ModeSeries>,
}

impl Trajectory {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Spectral field of `slot` at time index `n`.
    pub fn field(&self, slot: Slot, n: usize) -> SpectralField {
        SpectralField::new(
            self.modes
                .iter()
                .map(|m| {
                    let s = match slot {
                        Slot::U => &m.u,
                        Slot::Ut => &m.u_t,
                        Slot::Utt => &m.u_tt,
                        Slot::V => &m.v,
                        Slot::Vt => &m.v_t,
                        Slot::Vtt => &m.v_tt,
                    };
                    s[n]
                })
                .collect(),
        )
    }
}

/// `(v, v', v'')` of one mode from three solves sharing the kernel `L`.
pub fn solve_mode(problem: &ModalProblem, grid: &TimeGrid) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let solve = |h: &[f64]| {
        solve_oscillatory_second_kind(problem.omega, problem.beta, &problem.l_rest, h, grid)
    };
    let v = solve(&problem.h)?;
    let vt = solve(&problem.h1)?;
    let mut vtt = solve(&problem.h2)?;
    if let Some(s) = &problem.singular {
        for (x, y) in vtt.iter_mut().zip(s.samples(grid)) {
            *x += y;
        }
    }
    Ok((v, vt, vtt))
}

/// `u = e^{rt/2} v` and its first two derivatives, `r = R₀(0)`.
pub fn back_transform(
    v: &[f64],
    vt: &[f64],
    vtt: &[f64],
    r0_at_zero: f64,
    grid: &TimeGrid,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_len(grid.len(), v.len())?;
    check_len(grid.len(), vt.len())?;
    check_len(grid.len(), vtt.len())?;
    let r = r0_at_zero;
    let mut u = Vec::with_capacity(v.len());
    let mut ut = Vec::with_capacity(v.len());
    let mut utt = Vec::with_capacity(v.len());
    for n in 0..grid.len() {
        let e = 1.0 / change_of_variables_factor(r, grid.time(n));
        u.push(e * v[n]);
        ut.push(e * (vt[n] + 0.5 * r * v[n]));
        utt.push(e * (vtt[n] + r * vt[n] + 0.25 * r * r * v[n]));
    }
    Ok((u, ut, utt))
}

fn solve_one(
    dk: &DerivedKernels,
    basis: &SpectralBasis,
    k: usize,
    data: ModalData,
    boundary: Option<ModalBoundary<'_>>,
    grid: &TimeGrid,
) -> Result<ModeSeries> {
    let problem = assemble_modal_problem(dk, &basis.modes()[k], data, boundary, grid)?;
    let (v, v_t, v_tt) = solve_mode(&problem, grid)?;
    let (u, u_t, u_tt) = back_transform(&v, &v_t, &v_tt, dk.r0_at_zero, grid)?;
    Ok(ModeSeries {
        u,
        u_t,
        u_tt,
        v,
        v_t,
        v_tt,
    })
}

/// Reduce, assemble and solve every mode, then back-transform.
pub fn solve_system(
    spec: &EquationSpec,
    data: &ScenarioData,
    basis: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    let dk = reduce(spec, grid)?;
    solve_with_kernels(&dk, data, basis, grid)
}

/// [`solve_system`] with precomputed kernels, for repeated solves.
pub fn solve_with_kernels(
    dk: &DerivedKernels,
    data: &ScenarioData,
    basis: &SpectralBasis,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_len(basis.len(), data.u0.len())?;
    check_len(basis.len(), data.u1.len())?;
    if !(data.u0.is_finite() && data.u1.is_finite()) {
        return Err(Error::InvalidArgument("initial data must be finite".into()));
    }
    let xi = data.xi(dk.b, basis)?;
    let lifts = match &data.boundary {
        Some(bd) => {
            check_len(grid.len(), bd.left.len())?;
            check_len(grid.len(), bd.right.len())?;
            Some((green_lift(basis, (1.0, 0.0))?, green_lift(basis, (0.0, 1.0))?))
        }
        None => None,
    };
    let run = |k: usize| {
        let modal = ModalData {
            u0: data.u0.coeffs[k],
            u1: data.u1.coeffs[k],
            xi: xi.coeffs[k],
        };
        let boundary = match (&lifts, &data.boundary) {
            (Some((g0, gl)), Some(bd)) => Some(ModalBoundary {
                coefficients: (g0.coeffs[k], gl.coeffs[k]),
                left: &bd.left,
                right: &bd.right,
            }),
            _ => None,
        };
        solve_one(dk, basis, k, modal, boundary, grid)
    };
    let modes = map_modes(basis.len(), run)?;
    Ok(Trajectory {
        grid: *grid,
        r0_at_zero: dk.r0_at_zero,
        xi,
        modes,
    })
}

#[cfg(feature = "parallel")]
fn map_modes<F>(count: usize, run: F) -> Result<Vec<ModeSeries>>
where
    F: Fn(usize) -> Result<ModeSeries> + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(run).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_modes<F>(count: usize, run: F) -> Result<Vec<ModeSeries>>
where
    F: Fn(usize) -> Result<ModeSeries>,
{
    (0..count).map(run).collect()
}

/// Largest modal residual of `u_tt + bκ²u - bγκ²(N∗u) - F ξ` over `t > 0`,
/// relative to `max |u_tt|`. `N∗u` uses the trapezoid rule, so the residual
/// of an exact solution is itself `O(dt²)`. Homogeneous boundary data only.
pub fn equation_residual(
    spec: &EquationSpec,
    traj: &Trajectory,
    basis: &SpectralBasis,
) -> Result<f64> {
    check_len(basis.len(), traj.mode_count())?;
    check_len(basis.len(), traj.xi.len())?;
    let memory = match spec {
        EquationSpec::Mgt(m) => m.memory_form(),
        EquationSpec::Memory(m) => m.clone(),
    };
    let grid = &traj.grid;
    let (b, gamma) = (memory.b(), memory.gamma());
    let n = memory.memory_kernel().samples(grid)?;
    let f = match memory.forcing_kernel() {
        KernelSpec::ClosedPower { exponent } => {
            let p = *exponent;
            grid.sample(|t| if t > 0.0 { t.powf(p) } else { 0.0 })
        }
        k => k.samples(grid)?,
    };
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for ((series, mode), xi) in traj.modes.iter().zip(basis.modes()).zip(&traj.xi.coeffs) {
        let kappa2 = mode.kappa2();
        let memory_term = if gamma != 0.0 {
            convolve(&n, &series.u, grid)?
        } else {
            alloc::vec![0.0; grid.len()]
        };
        for i in 1..grid.len() {
            let r = series.u_tt[i] + b * kappa2 * series.u[i]
                - b * gamma * kappa2 * memory_term[i]
                - f[i] * xi;
            worst = worst.max(r.abs());
            scale = scale.max(series.u_tt[i].abs());
        }
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maccamy::{MemoryEquationSpec, MgtSpec};
    use crate::oracle::mgt_mode_exact;
    use crate::spectral::{build_basis, BoundaryCondition, DomainSpec};
    use crate::volterra::KernelSpec;

    fn dirichlet(n: usize) -> SpectralBasis {
        build_basis(DomainSpec::interval(1.0).unwrap(), BoundaryCondition::Dirichlet, n).unwrap()
    }

    fn wave(b: f64) -> EquationSpec {
        MemoryEquationSpec::new(
            b,
            0.0,
            KernelSpec::exponential(1.0, 2.0),
            KernelSpec::exponential(1.0, 2.0),
        )
        .unwrap()
        .into()
    }

    fn rel_err(a: &[f64], e: &[f64]) -> f64 {
        let num = a.iter().zip(e).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        num / e.iter().fold(0.0f64, |m, y| m.max(y.abs()))
    }

    #[test]
    fn memoryless_mode_is_a_standing_wave() {
        let g = TimeGrid::new(1e-3, 2000).unwrap();
        let basis = dirichlet(3);
        let mut data = ScenarioData::zeros(3);
        data.u0.coeffs[0] = 1.0;
        let traj = solve_system(&wave(1.0), &data, &basis, &g).unwrap();
        let kappa = basis.modes()[0].kappa2().sqrt();
        let err = traj.modes[0]
            .v
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (n, v)| m.max((v - (kappa * g.time(n)).cos()).abs()));
        assert!(err < 1e-6, "{err}");
        assert!(traj.modes[1].u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn derivative_series_match_finite_differences() {
        let g = TimeGrid::new(1e-3, 2000).unwrap();
        let basis = dirichlet(4);
        let mut data = ScenarioData::zeros(4);
        data.u0.coeffs[1] = 0.7;
        data.u1.coeffs[1] = -1.1;
        data.third = ThirdDatum::Xi(SpectralField::new(alloc::vec![0.0, 3.0, 0.0, 0.0]));
        let spec: EquationSpec = MemoryEquationSpec::new(
            1.0,
            0.8,
            KernelSpec::exp_linear(2.0, 1.0, &g),
            KernelSpec::exponential(1.0, 2.0),
        )
        .unwrap()
        .into();
        let m = &solve_system(&spec, &data, &basis, &g).unwrap().modes[1];
        let dt = g.dt();
        for n in (5..g.len() - 1).step_by(13) {
            let fd = (m.v[n + 1] - m.v[n - 1]) / (2.0 * dt);
            assert!((fd - m.v_t[n]).abs() < 1e-4, "n={n}: {fd} vs {}", m.v_t[n]);
            let fd2 = (m.v_t[n + 1] - m.v_t[n - 1]) / (2.0 * dt);
            assert!((fd2 - m.v_tt[n]).abs() < 1e-3 * m.v_tt[n].abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn mgt_mode_matches_oracle() {
        let g = TimeGrid::new(1e-3, 2000).unwrap();
        let basis = dirichlet(1);
        let mut data = ScenarioData::zeros(1);
        data.u0.coeffs[0] = 1.0;
        data.third = ThirdDatum::U2(SpectralField::zeros(1));
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap();
        let traj = solve_system(&spec.into(), &data, &basis, &g).unwrap();
        let k2 = basis.modes()[0].kappa2();
        let exact = mgt_mode_exact(1.0, 1.0, 2.0, k2, (1.0, 0.0, 0.0), &g.times()).unwrap();
        let m = &traj.modes[0];
        assert!(rel_err(&m.u, &exact.u) < 1e-5, "{}", rel_err(&m.u, &exact.u));
        assert!((m.u_t[0] - 0.0).abs() < 1e-8);
        assert!(rel_err(&m.u_t, &exact.u_t) < 1e-5);
    }

    #[test]
    fn back_transform_identities() {
        let g = TimeGrid::new(0.01, 10).unwrap();
        let v: Vec<f64> = g.sample(|t| t.sin());
        let vt: Vec<f64> = g.sample(|t| t.cos());
        let vtt: Vec<f64> = g.sample(|t| -t.sin());
        let (u, ut, utt) = back_transform(&v, &vt, &vtt, 0.0, &g).unwrap();
        assert_eq!((u.as_slice(), ut.as_slice(), utt.as_slice()), (&v[..], &vt[..], &vtt[..]));
        let (u, _, _) = back_transform(&v, &vt, &vtt, -1.3, &g).unwrap();
        assert_eq!(u[0], v[0]);
    }

    #[test]
    fn zero_data_gives_zero_trajectory() {
        let g = TimeGrid::new(1e-2, 100).unwrap();
        let basis = dirichlet(8);
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap().into();
        let traj = solve_system(&spec, &ScenarioData::zeros(8), &basis, &g).unwrap();
        assert!(traj.modes.iter().all(|m| m.u.iter().chain(&m.u_t).chain(&m.u_tt).all(|v| *v == 0.0)));
    }

    #[test]
    fn boundary_data_needs_dirichlet_interval() {
        let g = TimeGrid::new(1e-2, 10).unwrap();
        let basis =
            build_basis(DomainSpec::interval(1.0).unwrap(), BoundaryCondition::Neumann, 4).unwrap();
        let mut data = ScenarioData::zeros(4);
        data.boundary = Some(BoundarySignal {
            left: alloc::vec![1.0; g.len()],
            right: alloc::vec![0.0; g.len()],
        });
        let spec = MgtSpec::new(1.0, 1.0, 2.0).unwrap().into();
        assert!(matches!(solve_system(&spec, &data, &basis, &g), Err(Error::Unsupported(_))));
    }
}
