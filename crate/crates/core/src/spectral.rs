//! Eigenfunction bases of `A = Δ - I` on intervals and rectangles.
//!
//! Every field in the crate is stored as a coefficient vector against an
//! L²-orthonormal eigenbasis. The scale of spaces `X_s` is realized through
//! the weights `mu2^s`, where `mu2 = -λ_Δ + 1` is the eigenvalue of `-A`; the
//! same weighting is used for negative `s`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(any(feature = "std", test)))]
use num_traits::Float;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};

/// An interval `(0, L)` or a rectangle `(0, Lx) × (0, Ly)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    lengths: Vec<f64>,
}

impl DomainSpec {
    pub fn new(lengths: &[f64]) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > 2 {
            return Err(Error::InvalidDomain(format!(
                "dimension must be 1 or 2, got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidDomain(format!("non-positive length {l}")));
        }
        Ok(Self {
            lengths: lengths.to_vec(),
        })
    }

    pub fn interval(length: f64) -> Result<Self> {
        Self::new(&[length])
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Self::new(&[lx, ly])
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Integer label of an eigenmode; the second entry is unused in 1D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex(pub u32, pub u32);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: ModeIndex,
    /// Eigenvalue of the Laplacian (non-positive).
    pub lambda_laplace: f64,
    /// Eigenvalue of `-A = -(Δ - I)`, always `>= 1`.
    pub mu2: f64,
}

impl Mode {
    pub fn mu(&self) -> f64 {
        self.mu2.sqrt()
    }

    /// `κ² = -λ_Δ`, the frequency squared seen by the Laplacian.
    pub fn kappa2(&self) -> f64 {
        -self.lambda_laplace
    }
}

/// L²-orthonormal eigenbasis with modes sorted by ascending `mu2`
/// (ties broken lexicographically on the index).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    domain: DomainSpec,
    bc: BoundaryCondition,
    modes: Vec<Mode>,
}

fn axis_eigenvalue(k: u32, length: f64) -> f64 {
    let w = f64::from(k) * PI / length;
    -w * w
}

fn axis_eigenfunction(bc: BoundaryCondition, k: u32, length: f64, x: f64) -> f64 {
    let arg = f64::from(k) * PI * x / length;
    match bc {
        BoundaryCondition::Dirichlet => (2.0 / length).sqrt() * arg.sin(),
        BoundaryCondition::Neumann if k == 0 => (1.0 / length).sqrt(),
        BoundaryCondition::Neumann => (2.0 / length).sqrt() * arg.cos(),
    }
}

fn axis_derivative(bc: BoundaryCondition, k: u32, length: f64, x: f64) -> f64 {
    let w = f64::from(k) * PI / length;
    let arg = w * x;
    match bc {
        BoundaryCondition::Dirichlet => (2.0 / length).sqrt() * w * arg.cos(),
        BoundaryCondition::Neumann if k == 0 => 0.0,
        BoundaryCondition::Neumann => -(2.0 / length).sqrt() * w * arg.sin(),
    }
}

/// Build the first `mode_count` eigenmodes with closed-form eigenvalues.
pub fn build_basis(
    domain: DomainSpec,
    bc: BoundaryCondition,
    mode_count: usize,
) -> Result<SpectralBasis> {
    if mode_count == 0 {
        return Err(Error::InvalidArgument("mode_count must be >= 1".into()));
    }
    let first = match bc {
        BoundaryCondition::Dirichlet => 1u32,
        BoundaryCondition::Neumann => 0u32,
    };
    let count = u32::try_from(mode_count)
        .map_err(|_| Error::InvalidArgument("mode_count too large".into()))?;
    let mut modes: Vec<Mode> = match domain.lengths() {
        [l] => (first..first + count)
            .map(|k| {
                let lambda = axis_eigenvalue(k, *l);
                Mode {
                    index: ModeIndex(k, 0),
                    lambda_laplace: lambda,
                    mu2: 1.0 - lambda,
                }
            })
            .collect(),
        [lx, ly] => {
            // Per-axis candidates up to `count` cover any truncation of the
            // first `count` tensor modes.
            let mut all = Vec::with_capacity((count as usize).pow(2));
            for kx in first..first + count {
                let ex = axis_eigenvalue(kx, *lx);
                for ky in first..first + count {
                    let lambda = ex + axis_eigenvalue(ky, *ly);
                    all.push(Mode {
                        index: ModeIndex(kx, ky),
                        lambda_laplace: lambda,
                        mu2: 1.0 - lambda,
                    });
                }
            }
            all
        }
        _ => unreachable!("DomainSpec enforces dimension 1 or 2"),
    };
    modes.sort_by(|a, b| a.mu2.total_cmp(&b.mu2).then(a.index.cmp(&b.index)));
    modes.truncate(mode_count);
    Ok(SpectralBasis { domain, bc, modes })
}

impl SpectralBasis {
    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    /// Same domain and boundary condition, first `mode_count` modes.
    pub fn with_mode_count(&self, mode_count: usize) -> Result<Self> {
        build_basis(self.domain.clone(), self.bc, mode_count)
    }

    /// Value of the orthonormal eigenfunction of mode `m` at `point`.
    pub fn eigenfunction(&self, m: usize, point: &[f64]) -> f64 {
        let mode = &self.modes[m];
        let lengths = self.domain.lengths();
        let mut v = axis_eigenfunction(self.bc, mode.index.0, lengths[0], point[0]);
        if lengths.len() == 2 {
            v *= axis_eigenfunction(self.bc, mode.index.1, lengths[1], point[1]);
        }
        v
    }

    /// Outward normal derivative of a 1D Dirichlet eigenfunction at the
    /// left (`x = 0`) and right (`x = L`) endpoints.
    pub fn normal_derivatives_1d(&self, m: usize) -> Result<(f64, f64)> {
        let [l] = self.domain.lengths() else {
            return Err(Error::Unsupported(
                "normal traces are implemented on intervals only".into(),
            ));
        };
        if self.bc != BoundaryCondition::Dirichlet {
            return Err(Error::Unsupported(
                "Neumann trace regularity is not covered".into(),
            ));
        }
        let k = self.modes[m].index.0;
        let left = -axis_derivative(self.bc, k, *l, 0.0);
        let right = axis_derivative(self.bc, k, *l, *l);
        Ok((left, right))
    }

    fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dimension()
            && point
                .iter()
                .zip(self.domain.lengths())
                .all(|(x, l)| x.is_finite() && *x >= 0.0 && *x <= *l)
    }
}

/// Coefficients of a function in a [`SpectralBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            coeffs: alloc::vec![0.0; len],
        }
    }

    pub fn single_mode(len: usize, mode: usize, value: f64) -> Self {
        let mut f = Self::zeros(len);
        f.coeffs[mode] = value;
        f
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// `a * self + other`.
    pub fn axpy(&self, a: f64, other: &SpectralField) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(x, y)| a * x + y)
                .collect(),
        }
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            coeffs: self.coeffs[..len.min(self.coeffs.len())].to_vec(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

/// A Sobolev-type index; `Infinite` marks fields with no measurable decay
/// rate (finite spectral support).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SobolevIndex {
    Finite(f64),
    Infinite,
}

impl SobolevIndex {
    pub fn value(&self) -> f64 {
        match self {
            SobolevIndex::Finite(s) => *s,
            SobolevIndex::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SobolevIndex::Finite(_))
    }

    pub fn min(self, other: SobolevIndex) -> SobolevIndex {
        if other.value() < self.value() {
            other
        } else {
            self
        }
    }
}

/// `‖f‖_{X_s} = (Σ mu2_k^s c_k²)^{1/2}`.
pub fn xs_norm(field: &SpectralField, basis: &SpectralBasis, s: f64) -> Result<f64> {
    check_len(basis.len(), field.len())?;
    let sum: f64 = field
        .coeffs
        .iter()
        .zip(basis.modes())
        .map(|(c, m)| m.mu2.powf(s) * c * c)
        .sum();
    Ok(sum.sqrt())
}

/// Apply `A` diagonally: `c_k -> -mu2_k c_k`.
pub fn apply_a(field: &SpectralField, basis: &SpectralBasis) -> Result<SpectralField> {
    check_len(basis.len(), field.len())?;
    Ok(SpectralField::new(
        field
            .coeffs
            .iter()
            .zip(basis.modes())
            .map(|(c, m)| -m.mu2 * c)
            .collect(),
    ))
}

/// Apply the Laplacian diagonally: `c_k -> λ_k c_k`.
pub fn apply_laplacian(field: &SpectralField, basis: &SpectralBasis) -> Result<SpectralField> {
    check_len(basis.len(), field.len())?;
    Ok(SpectralField::new(
        field
            .coeffs
            .iter()
            .zip(basis.modes())
            .map(|(c, m)| m.lambda_laplace * c)
            .collect(),
    ))
}

fn mode_sign(seed: u64, index: ModeIndex) -> f64 {
    let key = (u64::from(index.0) << 32) | u64::from(index.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    if rng.next_u32() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Test field with `|c_k| = μ_k^{-(target + d/2 + margin)}` and seeded signs.
///
/// The field lies in `X_s` exactly for `s < target + margin`. Signs depend
/// only on `(seed, mode index)`, so bases of different sizes share their
/// common coefficients.
pub fn synthesize_field(
    target_index: f64,
    basis: &SpectralBasis,
    margin: f64,
    seed: u64,
) -> Result<SpectralField> {
    if !(margin > 0.0 && margin <= 0.2) {
        return Err(Error::InvalidArgument(format!(
            "margin must lie in (0, 0.2], got {margin}"
        )));
    }
    if !target_index.is_finite() {
        return Err(Error::InvalidArgument("target index must be finite".into()));
    }
    let decay = target_index + basis.dimension() as f64 / 2.0 + margin;
    Ok(SpectralField::new(
        basis
            .modes()
            .iter()
            .map(|m| mode_sign(seed, m.index) * m.mu().powf(-decay))
            .collect(),
    ))
}

/// Coefficients of the Dirichlet lift `ψ` with `Δψ = ψ`, `ψ(0) = g0`,
/// `ψ(L) = gL` on an interval:
/// `ψ(x) = g0 sinh(L-x)/sinh(L) + gL sinh(x)/sinh(L)`.
///
/// Integrating `ψ φ_k` by parts twice leaves only boundary terms, so
/// `ψ_k = √(2/L) (kπ/L) (g0 - (-1)^k gL) / mu2_k` exactly.
pub fn green_lift(basis: &SpectralBasis, boundary_values: (f64, f64)) -> Result<SpectralField> {
    let [l] = basis.domain().lengths() else {
        return Err(Error::Unsupported(
            "the Green lift is implemented on intervals only".into(),
        ));
    };
    if basis.bc() != BoundaryCondition::Dirichlet {
        return Err(Error::Unsupported(
            "Neumann boundary data are not covered".into(),
        ));
    }
    let (g0, gl) = boundary_values;
    let norm = (2.0 / l).sqrt();
    Ok(SpectralField::new(
        basis
            .modes()
            .iter()
            .map(|m| {
                let k = m.index.0;
                let w = f64::from(k) * PI / l;
                let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
                norm * w * (g0 - parity * gl) / m.mu2
            })
            .collect(),
    ))
}

/// Pointwise synthesis `Σ c_k φ_k(x)`.
pub fn evaluate_field<P: AsRef<[f64]>>(
    field: &SpectralField,
    basis: &SpectralBasis,
    points: &[P],
) -> Result<Vec<f64>> {
    check_len(basis.len(), field.len())?;
    points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            if !basis.contains(p) {
                return Err(Error::InvalidArgument(format!(
                    "point {p:?} lies outside the domain"
                )));
            }
            Ok(field
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(m, c)| c * basis.eigenfunction(m, p))
                .sum())
        })
        .collect()
}
