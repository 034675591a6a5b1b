//! Exact single-mode MGT solutions from the characteristic cubic
//! `z³ + α z² + bκ² z + c²κ² = 0`, stability sweeps and `b = 0` diagnostics.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::error::{check_len, Error, Result};
use crate::maccamy::MgtSpec;
use crate::modal::{ScenarioData, Trajectory};
use crate::spectral::SpectralBasis;

/// Root gap below which amplitudes are not taken from the Vandermonde
/// system.
pub const CLUSTER_GAP: f64 = 1e-6;
/// Step of the fallback integrator.
pub const FALLBACK_DT: f64 = 1e-5;

/// `z³ + a2 z² + a1 z + a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalCubic {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
}

impl ModalCubic {
    /// Mode with `κ² = -λ_Δ`.
    pub fn new(b: f64, c: f64, alpha: f64, kappa2: f64) -> Result<Self> {
        if !(kappa2 >= 0.0) {
            return Err(Error::InvalidArgument(format!("kappa² must be >= 0, got {kappa2}")));
        }
        Ok(Self {
            a2: alpha,
            a1: b * kappa2,
            a0: c * c * kappa2,
        })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.a2) * z + self.a1) * z + self.a0
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        (z * 3.0 + 2.0 * self.a2) * z + self.a1
    }

    /// Companion-matrix eigenvalues polished by two Newton steps, sorted by
    /// real part then imaginary part.
    pub fn roots(&self) -> [Complex64; 3] {
        let m = Matrix3::new(
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            -self.a0, -self.a1, -self.a2,
        );
        let ev = m.complex_eigenvalues();
        let mut roots = [ev[0], ev[1], ev[2]];
        for z in roots.iter_mut() {
            for _ in 0..2 {
                let d = self.derivative(*z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = self.eval(*z) / d;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                *z -= step;
            }
            if z.im.abs() <= 1e-14 * z.norm().max(1.0) {
                z.im = 0.0;
            }
        }
        roots.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        roots
    }

    pub fn max_real_part(&self) -> f64 {
        self.roots().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Routh-Hurwitz for a monic cubic: all coefficients positive and
    /// `a2·a1 > a0`.
    pub fn routh_hurwitz_stable(&self) -> bool {
        self.a2 > 0.0 && self.a1 > 0.0 && self.a0 > 0.0 && self.a2 * self.a1 > self.a0
    }
}

/// `(u, u', u'')` sampled at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalExact {
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
    pub u_tt: Vec<f64>,
}

/// Exact solution of `u''' + αu'' + bκ²u' + c²κ²u = 0` with
/// `(u, u', u'')(0) = data`.
pub fn mgt_mode_exact(
    b: f64,
    c: f64,
    alpha: f64,
    kappa2: f64,
    data: (f64, f64, f64),
    times: &[f64],
) -> Result<ModalExact> {
    let cubic = ModalCubic::new(b, c, alpha, kappa2)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be finite and >= 0".into()));
    }
    let roots = cubic.roots();
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let gap = (0..3)
        .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
        .map(|(i, j)| (roots[i] - roots[j]).norm())
        .fold(f64::INFINITY, f64::min);
    if gap < CLUSTER_GAP * scale {
        return Ok(integrate(&cubic, data, times));
    }
    let one = Complex64::new(1.0, 0.0);
    let v = Matrix3::new(
        one, one, one, //
        roots[0], roots[1], roots[2], //
        roots[0] * roots[0], roots[1] * roots[1], roots[2] * roots[2],
    );
    let rhs = Vector3::new(
        Complex64::new(data.0, 0.0),
        Complex64::new(data.1, 0.0),
        Complex64::new(data.2, 0.0),
    );
    let amp = v
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular Vandermonde system".into()))?;
    let mut out = ModalExact {
        u: Vec::with_capacity(times.len()),
        u_t: Vec::with_capacity(times.len()),
        u_tt: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let (mut u, mut ut, mut utt) = (0.0, 0.0, 0.0);
        for (a, z) in amp.iter().zip(roots) {
            let e = *a * (z * t).exp();
            u += e.re;
            ut += (e * z).re;
            utt += (e * z * z).re;
        }
        out.u.push(u);
        out.u_t.push(ut);
        out.u_tt.push(utt);
    }
    Ok(out)
}

/// Classical RK4 on the first-order system, sampled by stepping to each
/// requested time with steps no longer than [`FALLBACK_DT`].
fn integrate(cubic: &ModalCubic, data: (f64, f64, f64), times: &[f64]) -> ModalExact {
    let f = |y: [f64; 3]| [y[1], y[2], -cubic.a2 * y[2] - cubic.a1 * y[1] - cubic.a0 * y[0]];
    let step = |y: [f64; 3], h: f64| {
        let add = |a: [f64; 3], k: [f64; 3], s: f64| [a[0] + s * k[0], a[1] + s * k[1], a[2] + s * k[2]];
        let k1 = f(y);
        let k2 = f(add(y, k1, h / 2.0));
        let k3 = f(add(y, k2, h / 2.0));
        let k4 = f(add(y, k3, h));
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            y[2] + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
        ]
    };
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&i, &j| times[i].total_cmp(&times[j]));
    let mut out = ModalExact {
        u: alloc::vec![0.0; times.len()],
        u_t: alloc::vec![0.0; times.len()],
        u_tt: alloc::vec![0.0; times.len()],
    };
    let (mut t, mut y) = (0.0, [data.0, data.1, data.2]);
    for i in order {
        let target = times[i];
        let span = target - t;
        if span > 0.0 {
            let n = (span / FALLBACK_DT).ceil() as usize;
            let h = span / n as f64;
            for _ in 0..n {
                y = step(y, h);
            }
            t = target;
        }
        out.u[i] = y[0];
        out.u_t[i] = y[1];
        out.u_tt[i] = y[2];
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleComparison {
    /// Max of `per_mode_errors`.
    pub max_rel_error: f64,
    /// Per mode: max over `u, u_t, u_tt` of `sup_t |num - exact|` divided by
    /// `sup_t |exact|` of that slot (absolute when the slot vanishes).
    pub per_mode_errors: Vec<f64>,
}

/// Compare an MGT trajectory against [`mgt_mode_exact`] mode by mode.
pub fn compare_with_oracle(
    spec: &MgtSpec,
    data: &ScenarioData,
    traj: &Trajectory,
    basis: &SpectralBasis,
) -> Result<OracleComparison> {
    if data.boundary.is_some() {
        return Err(Error::Unsupported(
            "the cubic oracle covers homogeneous boundary data only".into(),
        ));
    }
    check_len(basis.len(), traj.mode_count())?;
    let xi = data.xi(spec.b(), basis)?;
    let times = traj.grid.times();
    let mut per_mode_errors = Vec::with_capacity(basis.len());
    for (k, (mode, series)) in basis.modes().iter().zip(&traj.modes).enumerate() {
        let kappa2 = mode.kappa2();
        let (u0, u1) = (data.u0.coeffs[k], data.u1.coeffs[k]);
        let u2 = xi.coeffs[k] - spec.b() * kappa2 * u0;
        let exact = mgt_mode_exact(spec.b(), spec.c(), spec.alpha(), kappa2, (u0, u1, u2), &times)?;
        let mut err = 0.0f64;
        for (num, ex) in [(&series.u, &exact.u), (&series.u_t, &exact.u_t), (&series.u_tt, &exact.u_tt)] {
            let scale = ex.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let diff = num.iter().zip(ex).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            err = err.max(if scale > 0.0 { diff / scale } else { diff });
        }
        per_mode_errors.push(err);
    }
    Ok(OracleComparison {
        max_rel_error: per_mode_errors.iter().copied().fold(0.0, f64::max),
        per_mode_errors,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StabilityReport {
    pub kappas: Vec<f64>,
    pub max_real: Vec<f64>,
    /// `α - c²/b`; `None` for `b = 0`.
    pub gamma: Option<f64>,
    /// Algebraic verdict `γ > 0`.
    pub threshold_stable: bool,
    /// Numerical verdict: max Re < 0 at every κ > 0.
    pub numerically_stable: bool,
    /// Log-log slope of max Re against κ (`b = 0` diagnostics only).
    pub growth_exponent: Option<f64>,
}

pub fn stability_sweep(b: f64, c: f64, alpha: f64, kappa_grid: &[f64]) -> Result<StabilityReport> {
    if !(b > 0.0) {
        return Err(Error::IllPosed(format!("stability sweep needs b > 0, got {b}")));
    }
    let max_real = sweep(b, c, alpha, kappa_grid)?;
    let gamma = alpha - c * c / b;
    Ok(StabilityReport {
        kappas: kappa_grid.to_vec(),
        numerically_stable: kappa_grid
            .iter()
            .zip(&max_real)
            .filter(|(k, _)| **k > 0.0)
            .all(|(_, r)| *r < 0.0),
        max_real,
        gamma: Some(gamma),
        threshold_stable: gamma > 0.0,
        growth_exponent: None,
    })
}

/// The `b = 0` cubic `z³ + αz² + c²κ²`: max Re per κ and the log-log slope
/// over the positive entries.
pub fn illposedness_diagnostic(c: f64, alpha: f64, kappa_grid: &[f64]) -> Result<StabilityReport> {
    let positive: Vec<f64> = kappa_grid.iter().copied().filter(|k| *k > 0.0).collect();
    let (lo, hi) = positive
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), k| (l.min(*k), h.max(*k)));
    if positive.len() < 2 || hi / lo < 100.0 * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(
            "the kappa grid must span at least two decades".into(),
        ));
    }
    let max_real = sweep(0.0, c, alpha, kappa_grid)?;
    let pts: Vec<(f64, f64)> = kappa_grid
        .iter()
        .zip(&max_real)
        .filter(|(k, r)| **k > 0.0 && **r > 0.0)
        .map(|(k, r)| (k.ln(), r.ln()))
        .collect();
    Ok(StabilityReport {
        kappas: kappa_grid.to_vec(),
        numerically_stable: max_real.iter().all(|r| *r < 0.0),
        max_real,
        gamma: None,
        threshold_stable: false,
        growth_exponent: least_squares_slope(&pts),
    })
}

fn sweep(b: f64, c: f64, alpha: f64, kappa_grid: &[f64]) -> Result<Vec<f64>> {
    kappa_grid
        .iter()
        .map(|k| Ok(ModalCubic::new(b, c, alpha, k * k)?.max_real_part()))
        .collect()
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
