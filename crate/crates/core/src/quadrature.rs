//! Product integration for convolutions whose factors are singular at the
//! origin (`s^p`, `-1/2 < p ≤ 0`) or oscillate faster than the grid resolves
//! comfortably (`sin ω(t-s)`, `cos ω(t-s)`).
//!
//! The smooth factor is interpolated linearly on each cell and the weights
//! against the singular or oscillatory factor are integrated exactly.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use alloc::format;

use crate::error::{check_len, Error, Result};
use crate::volterra::TimeGrid;

const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `scale · t^exponent · e^{-decay·t}` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub scale: f64,
    pub exponent: f64,
    pub decay: f64,
}

impl PowerTerm {
    pub fn new(scale: f64, exponent: f64, decay: f64) -> Result<Self> {
        if !(exponent > -1.0 && exponent <= 0.0) {
            return Err(Error::InvalidArgument(format_exponent(exponent)));
        }
        Ok(Self {
            scale,
            exponent,
            decay,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        self.scale * t.powf(self.exponent) * (-self.decay * t).exp()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            scale: self.scale * factor,
            ..*self
        }
    }

    /// `∫_a^{a+h}` of the term.
    pub fn integral(&self, a: f64, h: f64) -> f64 {
        self.scale
            * (-self.decay * a).exp()
            * power_exp_integral(a, h, self.exponent, Complex64::new(self.decay, 0.0)).re
    }

    /// Pointwise samples; the infinite value at `t = 0` is replaced by the
    /// first cell average.
    pub fn samples(&self, grid: &TimeGrid) -> Vec<f64> {
        let mut out = grid.sample(|t| self.value(t));
        out[0] = self.integral(0.0, grid.dt()) / grid.dt();
        out
    }
}

fn format_exponent(p: f64) -> alloc::string::String {
    alloc::format!("power exponent must lie in (-1, 0], got {p}")
}

/// A sampled function, optionally plus a [`PowerTerm`] singular at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Forcing {
    pub regular: Vec<f64>,
    pub singular: Option<PowerTerm>,
}

impl Forcing {
    pub fn regular(values: Vec<f64>) -> Self {
        Self {
            regular: values,
            singular: None,
        }
    }

    pub fn len(&self) -> usize {
        self.regular.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regular.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            regular: self.regular.iter().map(|v| v * factor).collect(),
            singular: self.singular.map(|s| s.scaled(factor)),
        }
    }

    /// Regular part plus pointwise singular samples (cell average at 0).
    pub fn samples(&self, grid: &TimeGrid) -> Vec<f64> {
        match &self.singular {
            None => self.regular.clone(),
            Some(s) => self
                .regular
                .iter()
                .zip(s.samples(grid))
                .map(|(r, v)| r + v)
                .collect(),
        }
    }
}

/// `∫₀^h (a+τ)^p e^{-zτ} dτ` for `a ≥ 0`, `p > -1`.
///
/// The first cell uses the power series of the exponential against exact
/// moments; cells away from the origin use 8-point Gauss-Legendre panels
/// no wider than `2/|z|`.
pub fn power_exp_integral(a: f64, h: f64, p: f64, z: Complex64) -> Complex64 {
    let zn = z.norm();
    if a == 0.0 {
        let c = if zn * h > 2.0 { 2.0 / zn } else { h };
        let head = power_series_from_origin(c, p, z);
        if c >= h {
            return head;
        }
        // Geometric panels away from the singularity.
        let mut total = head;
        let mut lo = c;
        while lo < h {
            let hi = (2.0 * lo).min(h);
            total += gauss_panels(lo, hi, p, z, 0.0);
            lo = hi;
        }
        return total;
    }
    gauss_panels(a, a + h, p, z, a)
}

/// `∫₀^c τ^p e^{-zτ} dτ` by term-wise integration.
fn power_series_from_origin(c: f64, p: f64, z: Complex64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut coef = Complex64::new(c.powf(p + 1.0), 0.0);
    for m in 0..200 {
        let term = coef / (p + m as f64 + 1.0);
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
        coef *= -z * c / (m as f64 + 1.0);
    }
    sum
}

/// `∫_lo^hi s^p e^{-z(s - origin)} ds` on panels of width at most `2/|z|`.
fn gauss_panels(lo: f64, hi: f64, p: f64, z: Complex64, origin: f64) -> Complex64 {
    let width = hi - lo;
    let panels = ((z.norm() * width / 2.0).ceil() as usize).max(1);
    let w = width / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..panels {
        let mid = lo + (i as f64 + 0.5) * w;
        let half = 0.5 * w;
        for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            for s in [mid - half * x, mid + half * x] {
                total += (-z * (s - origin)).exp() * (wt * s.powf(p));
            }
        }
    }
    total * (0.5 * w)
}

/// Linear-interpolation weights of `s^p` on `[a, a+h]`:
/// `(∫ s^p (a+h-s)/h ds, ∫ s^p (s-a)/h ds)`.
fn power_hat_weights(a: f64, h: f64, p: f64) -> (f64, f64) {
    if a == 0.0 {
        let m0 = h.powf(p + 1.0) / (p + 1.0);
        let m1 = h.powf(p + 2.0) / (p + 2.0);
        return ((h * m0 - m1) / h, m1 / h);
    }
    let (mut w0, mut w1) = (0.0, 0.0);
    let mid = a + 0.5 * h;
    for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
        for s in [mid - 0.5 * h * x, mid + 0.5 * h * x] {
            let f = wt * s.powf(p) * 0.5;
            w0 += f * (a + h - s);
            w1 += f * (s - a);
        }
    }
    (w0, w1)
}

/// `∫₀^{t_n} a(t_n - s) · term(s) ds` for every grid time.
///
/// `a(t_n - s) e^{-decay·s}` is interpolated linearly per cell and weighted
/// exactly against `s^p`.
pub fn power_weighted_convolve(a: &[f64], term: &PowerTerm, grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(grid.len(), a.len())?;
    let dt = grid.dt();
    let n_total = grid.len();
    let weights: Vec<(f64, f64)> = (0..n_total - 1)
        .map(|j| power_hat_weights(grid.time(j), dt, term.exponent))
        .collect();
    let damp: Vec<f64> = grid.sample(|t| (-term.decay * t).exp());
    let mut out = vec![0.0; n_total];
    for n in 1..n_total {
        let mut acc = 0.0;
        for j in 0..n {
            let (w0, w1) = weights[j];
            acc += w0 * a[n - j] * damp[j] + w1 * a[n - j - 1] * damp[j + 1];
        }
        out[n] = term.scale * acc;
    }
    Ok(out)
}

/// Sine and cosine transforms on a grid:
/// `sine[n] = ∫₀^{t_n} sin ω(t_n-s) φ(s) ds`, `cosine[n]` likewise.
#[derive(Debug, Clone, PartialEq)]
pub struct Oscillatory {
    pub sine: Vec<f64>,
    pub cosine: Vec<f64>,
}

/// `(∫₀¹ e^{iθv} dv, ∫₀¹ v e^{iθv} dv)`.
fn hat_moments(theta: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    if theta.abs() < 0.5 {
        let (mut m0, mut m1) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let mut pw = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for m in 0..30 {
            m0 += pw / (fact * (m as f64 + 1.0));
            m1 += pw / (fact * (m as f64 + 2.0));
            pw *= i * theta;
            fact *= m as f64 + 1.0;
        }
        return (m0, m1);
    }
    let e = (i * theta).exp();
    let m0 = (e - 1.0) / (i * theta);
    let m1 = e / (i * theta) + (e - 1.0) / (theta * theta);
    (m0, m1)
}

/// Exact-weight product integration of `e^{iω(t-s)} φ(s)` with `φ`
/// piecewise linear plus an optional [`PowerTerm`].
///
/// The complex accumulator obeys
/// `Z_{n+1} = e^{iω dt} Z_n + w_a φ_n + w_b φ_{n+1} + (singular cell)`,
/// so the cost is `O(n)` per frequency and the accuracy does not degrade
/// with `ω dt`.
pub fn oscillatory_convolve(
    omega: f64,
    regular: &[f64],
    singular: Option<&PowerTerm>,
    grid: &TimeGrid,
) -> Result<Oscillatory> {
    check_len(grid.len(), regular.len())?;
    let dt = grid.dt();
    let theta = omega * dt;
    let (m0, m1) = hat_moments(theta);
    let (wa, wb) = (m1 * dt, (m0 - m1) * dt);
    let rot = Complex64::new(theta.cos(), theta.sin());
    let z = Complex64::new(singular.map_or(0.0, |s| s.decay), omega);
    let n_total = grid.len();
    let mut sine = vec![0.0; n_total];
    let mut cosine = vec![0.0; n_total];
    let mut acc = Complex64::new(0.0, 0.0);
    for n in 0..n_total - 1 {
        acc = rot * acc + wa * regular[n] + wb * regular[n + 1];
        if let Some(s) = singular {
            let tn = grid.time(n);
            let cell = power_exp_integral(tn, dt, s.exponent, z);
            acc += rot * cell * (s.scale * (-s.decay * tn).exp());
        }
        sine[n + 1] = acc.im;
        cosine[n + 1] = acc.re;
    }
    Ok(Oscillatory { sine, cosine })
}

/// Solve `x - β (S∗x) + m∗x = h`, `S(t) = sin(ωt)/ω`.
///
/// The `S` part is integrated exactly against piecewise-linear `x` through
/// the same recursion as [`oscillatory_convolve`]; only the remainder `m`
/// goes through the trapezoid rule. Undamped oscillation in the kernel then
/// costs no accuracy at `ω dt ~ 1`.
pub fn solve_oscillatory_second_kind(
    omega: f64,
    beta: f64,
    m: &[f64],
    h: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    check_len(grid.len(), m.len())?;
    check_len(grid.len(), h.len())?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
    }
    let dt = grid.dt();
    let theta = omega * dt;
    let (m0, m1) = hat_moments(theta);
    let (wa, wb) = (m1 * dt, (m0 - m1) * dt);
    let rot = Complex64::new(theta.cos(), theta.sin());
    let k = beta / omega;
    let diag = 1.0 - k * wb.im + 0.5 * dt * m[0];
    if diag == 0.0 {
        return Err(Error::InvalidArgument("implicit diagonal vanishes; refine the grid".into()));
    }
    let n_total = grid.len();
    let mut x = vec![0.0; n_total];
    x[0] = h[0];
    let mut acc = Complex64::new(0.0, 0.0);
    let memoryless = m.iter().all(|v| *v == 0.0);
    for n in 1..n_total {
        let partial = rot * acc + wa * x[n - 1];
        let known = if memoryless {
            0.0
        } else {
            let interior: f64 = m[1..n].iter().rev().zip(&x[1..n]).map(|(a, b)| a * b).sum();
            0.5 * m[n] * x[0] + interior
        };
        x[n] = (h[n] + k * partial.im - dt * known) / diag;
        acc = partial + wb * x[n];
    }
    Ok(x)
}
