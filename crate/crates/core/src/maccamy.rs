//! MacCamy reduction of the memory equation
//! `u_tt - bΔu = -bγ N∗Δu + F ξ`
//! to a wave equation with an integrable memory for `v = e^{-R₀(0)t/2} u`,
//! and assembly of its per-mode Volterra problems.
//!
//! Per mode, with `ω = √b μ`, the transformed equation reads
//!
//! ```text
//! v'' + ω² v = β v + K∗v + f(t) + ω² e^{-R₀(0)t/2} Ĝ g(t)
//! f = h₂ ξ - h₁ u₁ - h₀ u₀
//! ```
//!
//! so that `v + L∗v = H` with `L = -β S - S∗K`, `S(t) = sin(ωt)/ω`. The
//! `h₀`, `h₁` tables keep the conventional definitions `e^{-R₀(0)t/2} R₀'`
//! and `e^{-R₀(0)t/2} R₀`; integrating `R₀∗u_tt` by parts produces them with
//! a minus sign, which is where the sign in `f` comes from.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;

use crate::error::{check_len, Error, Result};
use crate::quadrature::{oscillatory_convolve, power_weighted_convolve, Forcing, PowerTerm};
use crate::spectral::{Mode, SpectralBasis, SpectralField};
use crate::volterra::{convolve, resolvent, KernelSpec, TimeGrid};

/// `u_ttt + α u_tt - c²Δu - bΔu_t = 0` with `τ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgtSpec {
    b: f64,
    c: f64,
    alpha: f64,
}

impl MgtSpec {
    pub fn new(b: f64, c: f64, alpha: f64) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::IllPosed(format!(
                "b must be positive (b = 0 is ill-posed), got {b}"
            )));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidArgument(format!("c must be positive, got {c}")));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { b, c, alpha })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.alpha - self.c * self.c / self.b
    }

    /// The equivalent memory equation with `N = F = e^{-αt}`.
    pub fn memory_form(&self) -> MemoryEquationSpec {
        MemoryEquationSpec {
            b: self.b,
            gamma: self.gamma(),
            n: KernelSpec::exponential(1.0, self.alpha),
            f: KernelSpec::exponential(1.0, self.alpha),
        }
    }
}

/// `u_tt - bΔu = -bγ N∗Δu + F ξ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryEquationSpec {
    b: f64,
    gamma: f64,
    n: KernelSpec,
    f: KernelSpec,
}

impl MemoryEquationSpec {
    pub fn new(b: f64, gamma: f64, n: KernelSpec, f: KernelSpec) -> Result<Self> {
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::IllPosed(format!("b must be positive, got {b}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument("gamma must be finite".into()));
        }
        n.check_memory_admissible()?;
        f.check_forcing_admissible()?;
        Ok(Self { b, gamma, n, f })
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn memory_kernel(&self) -> &KernelSpec {
        &self.n
    }

    pub fn forcing_kernel(&self) -> &KernelSpec {
        &self.f
    }

    pub fn is_memoryless(&self) -> bool {
        self.gamma == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquationSpec {
    Mgt(MgtSpec),
    Memory(MemoryEquationSpec),
}

impl EquationSpec {
    pub fn b(&self) -> f64 {
        match self {
            EquationSpec::Mgt(m) => m.b(),
            EquationSpec::Memory(m) => m.b(),
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            EquationSpec::Mgt(m) => m.gamma(),
            EquationSpec::Memory(m) => m.gamma(),
        }
    }

    /// Whether the forcing kernel `F` is in `H¹(0,T)`.
    pub fn forcing_is_h1(&self) -> bool {
        match self {
            EquationSpec::Mgt(_) => true,
            EquationSpec::Memory(m) => m.forcing_kernel().is_h1(),
        }
    }
}

impl From<MgtSpec> for EquationSpec {
    fn from(s: MgtSpec) -> Self {
        EquationSpec::Mgt(s)
    }
}

impl From<MemoryEquationSpec> for EquationSpec {
    fn from(s: MemoryEquationSpec) -> Self {
        EquationSpec::Memory(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedKernels {
    pub grid: TimeGrid,
    pub b: f64,
    pub beta: f64,
    pub k: Vec<f64>,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Forcing,
    pub r0_at_zero: f64,
    pub memoryless: bool,
}

/// `β = b + R₀(0)²/4 + R₀'(0)`.
pub fn beta_from_resolvent(b: f64, r0_at_zero: f64, r0_prime_at_zero: f64) -> f64 {
    b + 0.25 * r0_at_zero * r0_at_zero + r0_prime_at_zero
}

/// `e^{-R₀(0)t/2}`.
pub fn change_of_variables_factor(r0_at_zero: f64, t: f64) -> f64 {
    (-0.5 * r0_at_zero * t).exp()
}

/// Derived kernels of the transformed equation. MGT specs use the closed
/// forms; memory specs go through the numerical resolvent.
pub fn reduce(spec: &EquationSpec, grid: &TimeGrid) -> Result<DerivedKernels> {
    match spec {
        EquationSpec::Mgt(m) => Ok(reduce_mgt(m, grid)),
        EquationSpec::Memory(m) => reduce_memory(m, grid),
    }
}

fn reduce_mgt(m: &MgtSpec, grid: &TimeGrid) -> DerivedKernels {
    let (g, a) = (m.gamma(), m.alpha());
    let e = grid.sample(|t| ((1.5 * g - a) * t).exp());
    let scaled = |c: f64| e.iter().map(|v| c * v).collect::<Vec<_>>();
    DerivedKernels {
        grid: *grid,
        b: m.b(),
        beta: m.b() - g * (0.75 * g - a),
        k: scaled(-g * (g - a) * (g - a)),
        h0: scaled(-g * (g - a)),
        h1: scaled(-g),
        h2: Forcing::regular(e),
        r0_at_zero: -g,
        memoryless: g == 0.0,
    }
}

fn reduce_memory(m: &MemoryEquationSpec, grid: &TimeGrid) -> Result<DerivedKernels> {
    let res = resolvent(m.memory_kernel(), m.gamma(), grid)?;
    let r = res.r0_at_zero;
    let damp = grid.sample(|t| change_of_variables_factor(r, t));
    let times = |v: &[f64]| v.iter().zip(&damp).map(|(a, d)| a * d).collect::<Vec<_>>();

    let h2 = match m.forcing_kernel() {
        KernelSpec::ClosedPower { exponent } if *exponent < 0.0 => {
            let bare = PowerTerm::new(1.0, *exponent, 0.0)?;
            let conv = power_weighted_convolve(&res.r0, &bare, grid)?;
            Forcing {
                regular: conv.iter().zip(&damp).map(|(c, d)| -c * d).collect(),
                singular: Some(PowerTerm::new(1.0, *exponent, 0.5 * r)?),
            }
        }
        f => {
            let fs = f.samples(grid)?;
            let conv = convolve(&res.r0, &fs, grid)?;
            let diff: Vec<f64> = fs.iter().zip(&conv).map(|(a, c)| a - c).collect();
            Forcing::regular(times(&diff))
        }
    };
    Ok(DerivedKernels {
        grid: *grid,
        b: m.b(),
        beta: beta_from_resolvent(m.b(), r, res.r0_prime[0]),
        k: times(&res.r0_second),
        h0: times(&res.r0_prime),
        h1: times(&res.r0),
        h2,
        r0_at_zero: r,
        memoryless: m.is_memoryless(),
    })
}

/// Spectral coefficients of `ξ = u₂ - bΔu₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterXi {
    pub field: SpectralField,
}

pub fn xi_from_mgt(
    u0: &SpectralField,
    u2: &SpectralField,
    b: f64,
    basis: &SpectralBasis,
) -> Result<ParameterXi> {
    check_len(basis.len(), u0.len())?;
    check_len(basis.len(), u2.len())?;
    Ok(ParameterXi {
        field: SpectralField::new(
            basis
                .modes()
                .iter()
                .zip(&u0.coeffs)
                .zip(&u2.coeffs)
                .map(|((m, a), c)| c - b * m.lambda_laplace * a)
                .collect(),
        ),
    })
}

/// Initial data of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModalData {
    pub u0: f64,
    pub u1: f64,
    pub xi: f64,
}

/// Boundary input of one mode: lift coefficients for unit data at each
/// endpoint and the sampled boundary signals.
#[derive(Debug, Clone, Copy)]
pub struct ModalBoundary<'a> {
    pub coefficients: (f64, f64),
    pub left: &'a [f64],
    pub right: &'a [f64],
}

/// The three Volterra problems `v⁽ʲ⁾ + L∗v⁽ʲ⁾ = Hⱼ` of one mode.
///
/// When the forcing carries a singular part, `v'' = singular + w` and
/// `h2` is the right-hand side for the regular remainder `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalProblem {
    pub mu: f64,
    pub omega: f64,
    pub r0_at_zero: f64,
    pub data: ModalData,
    pub boundary_coefficients: Option<(f64, f64)>,
    pub beta: f64,
    /// `L = -β sin(ωt)/ω + l_rest`.
    pub l: Vec<f64>,
    pub l_rest: Vec<f64>,
    pub h: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub singular: Option<PowerTerm>,
}

pub fn assemble_modal_problem(
    dk: &DerivedKernels,
    mode: &Mode,
    data: ModalData,
    boundary: Option<ModalBoundary<'_>>,
    grid: &TimeGrid,
) -> Result<ModalProblem> {
    if dk.grid != *grid {
        return Err(Error::Incompatible("derived kernels were built on another grid".into()));
    }
    let n_total = grid.len();
    let mu = mode.mu();
    let omega = dk.b.sqrt() * mu;
    let w2 = omega * omega;
    let r = dk.r0_at_zero;
    let beta = dk.beta;
    let ModalData { u0, u1, xi } = data;
    let v1 = u1 - 0.5 * r * u0;

    let sin_t = grid.sample(|t| (omega * t).sin() / omega);
    let cos_t = grid.sample(|t| (omega * t).cos());

    let k_osc = oscillatory_convolve(omega, &dk.k, None, grid)?;
    let l_rest: Vec<f64> = k_osc.sine.iter().map(|s| -s / omega).collect();
    let l: Vec<f64> = (0..n_total).map(|n| -beta * sin_t[n] + l_rest[n]).collect();
    let l_prime: Vec<f64> = (0..n_total)
        .map(|n| -beta * cos_t[n] - k_osc.cosine[n])
        .collect();

    let f_reg: Vec<f64> = (0..n_total)
        .map(|n| xi * dk.h2.regular[n] - u1 * dk.h1[n] - u0 * dk.h0[n])
        .collect();
    let f_sing = match dk.h2.singular {
        Some(s) if xi != 0.0 => Some(s.scaled(xi)),
        _ => None,
    };
    let f_osc = oscillatory_convolve(omega, &f_reg, f_sing.as_ref(), grid)?;

    let (gb, g_osc, coefficients) = match boundary {
        Some(bd) => {
            check_len(n_total, bd.left.len())?;
            check_len(n_total, bd.right.len())?;
            let (c0, cl) = bd.coefficients;
            let gb: Vec<f64> = (0..n_total)
                .map(|n| {
                    change_of_variables_factor(r, grid.time(n)) * (c0 * bd.left[n] + cl * bd.right[n])
                })
                .collect();
            let osc = oscillatory_convolve(omega, &gb, None, grid)?;
            (Some(gb), Some(osc), Some(bd.coefficients))
        }
        None => (None, None, None),
    };

    let mut h = Vec::with_capacity(n_total);
    let mut h1 = Vec::with_capacity(n_total);
    let mut h2 = Vec::with_capacity(n_total);
    for n in 0..n_total {
        let (s, c) = (sin_t[n], cos_t[n]);
        let (sf, cf) = (f_osc.sine[n], f_osc.cosine[n]);
        let mut hv = (c - 0.5 * r * s) * u0 + s * u1 + sf / omega;
        let mut hp = (-w2 * s - 0.5 * r * c) * u0 + c * u1 + cf;
        let mut hpp = (-w2 * c + 0.5 * r * w2 * s) * u0 - w2 * s * u1 + f_reg[n] - omega * sf;
        if let (Some(gb), Some(go)) = (&gb, &g_osc) {
            hv += omega * go.sine[n];
            hp += w2 * go.cosine[n];
            hpp += w2 * (gb[n] - omega * go.sine[n]);
        }
        h.push(hv);
        h1.push(hp - l[n] * u0);
        h2.push(hpp - l_prime[n] * u0 - l[n] * v1);
    }
    if let Some(s) = &f_sing {
        // L∗sing with the undamped sine part integrated exactly.
        let zero = alloc::vec![0.0; n_total];
        let s_sing = oscillatory_convolve(omega, &zero, Some(s), grid)?;
        let rest = power_weighted_convolve(&l_rest, s, grid)?;
        for n in 0..n_total {
            h2[n] -= -beta * s_sing.sine[n] / omega + rest[n];
        }
    }
    Ok(ModalProblem {
        mu,
        omega,
        r0_at_zero: r,
        data,
        boundary_coefficients: coefficients,
        beta,
        l,
        l_rest,
        h,
        h1,
        h2,
        singular: f_sing,
    })
}
