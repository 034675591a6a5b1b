//! Scalar Volterra integral equations of the second kind.
//!
//! All quadratures are product-trapezoidal on a uniform [`TimeGrid`]:
//! second order at `O(n²)` cost. Resolvent derivatives come from the
//! differentiated integral equations, never from differencing samples.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::error::{check_len, Error, Result};

/// Uniform grid `t_n = n·dt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        Ok(Self { dt, steps })
    }

    /// Grid covering `[0, horizon]`; `horizon / dt` is rounded to the
    /// nearest integer.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let steps = (horizon / dt).round();
        if !(steps >= 1.0) {
            return Err(Error::InvalidArgument("horizon shorter than one step".into()));
        }
        Self::new(dt, steps as usize)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of samples, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        self.dt * n as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|n| f(self.time(n))).collect()
    }
}

/// Tabulated kernel samples with optional first and second derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    pub values: Vec<f64>,
    pub first: Option<Vec<f64>>,
    pub second: Option<Vec<f64>>,
}

impl TabulatedKernel {
    pub fn from_fn<F, F1, F2>(grid: &TimeGrid, f: F, df: F1, d2f: F2) -> Self
    where
        F: Fn(f64) -> f64,
        F1: Fn(f64) -> f64,
        F2: Fn(f64) -> f64,
    {
        Self {
            values: grid.sample(f),
            first: Some(grid.sample(df)),
            second: Some(grid.sample(d2f)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `amplitude · e^{-rate·t}`.
    ClosedExponential { amplitude: f64, rate: f64 },
    Tabulated(TabulatedKernel),
    /// `t^exponent` with exponent in `(-1/2, 0]`: square integrable but
    /// only admissible as a forcing.
    ClosedPower { exponent: f64 },
}

impl KernelSpec {
    pub fn exponential(amplitude: f64, rate: f64) -> Self {
        KernelSpec::ClosedExponential { amplitude, rate }
    }

    /// `e^{-rate·t}(1 + slope·t)` tabulated with exact derivatives.
    pub fn exp_linear(rate: f64, slope: f64, grid: &TimeGrid) -> Self {
        KernelSpec::Tabulated(TabulatedKernel::from_fn(
            grid,
            |t| (-rate * t).exp() * (1.0 + slope * t),
            |t| (-rate * t).exp() * (slope - rate * (1.0 + slope * t)),
            |t| (-rate * t).exp() * (rate * rate * (1.0 + slope * t) - 2.0 * rate * slope),
        ))
    }

    /// Memory kernels must be in `H²`: closed exponentials, or tables that
    /// carry both derivatives.
    pub fn check_memory_admissible(&self) -> Result<()> {
        match self {
            KernelSpec::ClosedExponential { amplitude, rate } => {
                if amplitude.is_finite() && rate.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InadmissibleKernel("non-finite parameters".into()))
                }
            }
            KernelSpec::Tabulated(t) => {
                if t.first.is_some() && t.second.is_some() {
                    Ok(())
                } else {
                    Err(Error::InadmissibleKernel(
                        "tabulated memory kernels need first and second derivative samples".into(),
                    ))
                }
            }
            KernelSpec::ClosedPower { .. } => Err(Error::InadmissibleKernel(
                "power kernels are not in H²(0,T) and cannot be memory kernels".into(),
            )),
        }
    }

    pub fn check_forcing_admissible(&self) -> Result<()> {
        match self {
            KernelSpec::ClosedPower { exponent } if !(*exponent > -0.5 && *exponent <= 0.0) => {
                Err(Error::InadmissibleKernel(format!(
                    "power forcing exponent must lie in (-1/2, 0], got {exponent}"
                )))
            }
            KernelSpec::ClosedExponential { amplitude, rate }
                if !(amplitude.is_finite() && rate.is_finite()) =>
            {
                Err(Error::InadmissibleKernel("non-finite parameters".into()))
            }
            _ => Ok(()),
        }
    }

    /// Whether the function is in `H¹(0,T)`.
    pub fn is_h1(&self) -> bool {
        match self {
            KernelSpec::ClosedExponential { .. } => true,
            KernelSpec::Tabulated(t) => t.first.is_some(),
            KernelSpec::ClosedPower { exponent } => *exponent == 0.0,
        }
    }

    /// Samples on `grid`. Singular power kernels have no value at `t = 0`
    /// and are rejected here; use [`PowerTerm`] for them.
    pub fn samples(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            KernelSpec::ClosedExponential { amplitude, rate } => {
                Ok(grid.sample(|t| amplitude * (-rate * t).exp()))
            }
            KernelSpec::Tabulated(t) => {
                check_len(grid.len(), t.values.len())?;
                Ok(t.values.clone())
            }
            KernelSpec::ClosedPower { exponent } if *exponent == 0.0 => Ok(vec![1.0; grid.len()]),
            KernelSpec::ClosedPower { .. } => Err(Error::Unsupported(
                "singular power kernels have no sample at t = 0".into(),
            )),
        }
    }

    /// First and second derivative samples.
    pub fn derivative_samples(&self, grid: &TimeGrid) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_memory_admissible()?;
        match self {
            KernelSpec::ClosedExponential { amplitude, rate } => Ok((
                grid.sample(|t| -rate * amplitude * (-rate * t).exp()),
                grid.sample(|t| rate * rate * amplitude * (-rate * t).exp()),
            )),
            KernelSpec::Tabulated(t) => {
                let (d1, d2) = (t.first.as_ref().unwrap(), t.second.as_ref().unwrap());
                check_len(grid.len(), d1.len())?;
                check_len(grid.len(), d2.len())?;
                Ok((d1.clone(), d2.clone()))
            }
            KernelSpec::ClosedPower { .. } => unreachable!("rejected above"),
        }
    }
}

/// The resolvent `R₀` of `R₀ - γ N∗R₀ = -γN`, with its first two
/// derivatives, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventKernel {
    pub grid: TimeGrid,
    pub r0: Vec<f64>,
    pub r0_prime: Vec<f64>,
    pub r0_second: Vec<f64>,
    pub r0_at_zero: f64,
}

/// Solve `x + l∗x = h` by the product-trapezoidal rule.
///
/// Step `n` inverts the implicit diagonal `1 + dt/2·l(0)`.
pub fn solve_second_kind(l: &[f64], h: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(grid.len(), l.len())?;
    check_len(grid.len(), h.len())?;
    let dt = grid.dt();
    let n_total = grid.len();
    let diag = 1.0 + 0.5 * dt * l[0];
    if diag == 0.0 {
        return Err(Error::InvalidArgument(
            "implicit diagonal 1 + dt·l(0)/2 vanishes; refine the grid".into(),
        ));
    }
    let mut x = vec![0.0; n_total];
    x[0] = h[0];
    for n in 1..n_total {
        // Σ_{j=1}^{n-1} l_{n-j} x_j
        let interior: f64 = l[1..n].iter().rev().zip(&x[1..n]).map(|(a, b)| a * b).sum();
        let known = 0.5 * l[n] * x[0] + interior;
        x[n] = (h[n] - dt * known) / diag;
    }
    Ok(x)
}

/// Trapezoidal discrete convolution `(a∗b)(t_n) = ∫₀^{t_n} a(t_n - s) b(s) ds`.
pub fn convolve(a: &[f64], b: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    check_len(grid.len(), a.len())?;
    check_len(grid.len(), b.len())?;
    let dt = grid.dt();
    Ok((0..grid.len())
        .map(|n| {
            if n == 0 {
                return 0.0;
            }
            let interior: f64 = a[1..n].iter().rev().zip(&b[1..n]).map(|(x, y)| x * y).sum();
            dt * (0.5 * a[n] * b[0] + interior + 0.5 * a[0] * b[n])
        })
        .collect())
}

/// Truncated Neumann series `Σ_{k=0}^{terms-1} (-l)^{∗k} ∗ h` for
/// `x + l∗x = h`; `terms = 1` returns `h`.
pub fn neumann_series_solve(l: &[f64], h: &[f64], grid: &TimeGrid, terms: usize) -> Result<Vec<f64>> {
    if terms == 0 {
        return Err(Error::InvalidArgument("terms must be >= 1".into()));
    }
    check_len(grid.len(), l.len())?;
    check_len(grid.len(), h.len())?;
    let mut sum = h.to_vec();
    let mut term = h.to_vec();
    for _ in 1..terms {
        term = convolve(l, &term, grid)?;
        for v in term.iter_mut() {
            *v = -*v;
        }
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    Ok(sum)
}

/// Resolvent kernel of `-γN` together with `R₀'` and `R₀''`.
///
/// Differentiating `R₀ - γ N∗R₀ = -γN` (with `N∗R₀ = ∫ N(s) R₀(t-s) ds`)
/// gives two more equations with the same kernel:
///
/// ```text
/// R₀'  - γ N∗R₀'  = -γN'  + γ N(t) R₀(0)
/// R₀'' - γ N∗R₀'' = -γN'' + γ N'(t) R₀(0) + γ N(t) R₀'(0)
/// ```
///
/// with `R₀(0) = -γN(0)` and `R₀'(0) = -γN'(0) - γ²N(0)²`.
pub fn resolvent(n: &KernelSpec, gamma: f64, grid: &TimeGrid) -> Result<ResolventKernel> {
    n.check_memory_admissible()?;
    if gamma == 0.0 {
        let z = vec![0.0; grid.len()];
        return Ok(ResolventKernel {
            grid: *grid,
            r0: z.clone(),
            r0_prime: z.clone(),
            r0_second: z,
            r0_at_zero: 0.0,
        });
    }
    let nv = n.samples(grid)?;
    let (n1, n2) = n.derivative_samples(grid)?;
    let l: Vec<f64> = nv.iter().map(|v| -gamma * v).collect();

    let r0_at_zero = -gamma * nv[0];
    let r0_prime_at_zero = -gamma * n1[0] - gamma * gamma * nv[0] * nv[0];

    let r0 = solve_second_kind(&l, &l, grid)?;
    let rhs1: Vec<f64> = n1
        .iter()
        .zip(&nv)
        .map(|(d, v)| -gamma * d + gamma * v * r0_at_zero)
        .collect();
    let r0_prime = solve_second_kind(&l, &rhs1, grid)?;
    let rhs2: Vec<f64> = n2
        .iter()
        .zip(&n1)
        .zip(&nv)
        .map(|((d2, d1), v)| -gamma * d2 + gamma * d1 * r0_at_zero + gamma * v * r0_prime_at_zero)
        .collect();
    let r0_second = solve_second_kind(&l, &rhs2, grid)?;
    Ok(ResolventKernel {
        grid: *grid,
        r0,
        r0_prime,
        r0_second,
        r0_at_zero,
    })
}

/// Solution formula `X = G - R₀∗G` for `X - γN∗X = G`.
pub fn apply_resolvent(res: &ResolventKernel, g: &[f64]) -> Result<Vec<f64>> {
    let c = convolve(&res.r0, g, &res.grid)?;
    Ok(g.iter().zip(&c).map(|(a, b)| a - b).collect())
}
