//! Spatial lattice, states, and dense operators.
//!
//! Every state and operator lives on a periodic grid of `n` points
//! `x_j = x_min + j·dx`. Amplitudes are samples of the wavefunction, so the
//! inner product is the Riemann sum `⟨φ|ψ⟩ = Σ_j conj(φ_j) ψ_j dx` and a
//! position eigenstate `|x_j⟩` is the lattice delta of height `1/√dx`.
//!
//! Operators are stored as their matrices in the orthonormal site basis,
//! which act on amplitude vectors directly. Density operators are stored as
//! kernels `ρ(x_j, x_k)`, so `Tr ρ · dx = 1` and `⟨A⟩ = Tr(Aρ) · dx`.
//!
//! # Fourier convention
//!
//! The unitary DFT used throughout is
//!
//! ```text
//! (Fψ)_l = n^{-1/2} Σ_j exp(-2πi·l·j/n) ψ_j
//! ```
//!
//! with component `l` carrying wavenumber `k_l = 2π·l/(n·dx)` for `l < n/2`
//! and `2π·(l − n)/(n·dx)` otherwise (standard FFT ordering; the Nyquist
//! component is assigned `−π/dx`). A plane wave `exp(i·k_l·x)` is therefore
//! concentrated on component `l`, and functions of momentum are
//! `F† diag(f(ħk)) F`. The `x_min` offset only contributes a diagonal phase
//! in `k` that cancels in every such operator.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Probability mass tolerated inside a guard band.
pub const GUARD_MASS_LIMIT: f64 = 1e-8;

/// Width of the guard band in units of the relevant standard deviation.
pub const GUARD_SIGMAS: f64 = 4.0;

pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Physical constants: reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PhysParams {
    pub hbar: f64,
    pub mass: f64,
}

impl PhysParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidParameter {
                name: "hbar",
                value: hbar,
                reason: "must be positive",
            });
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidParameter {
                name: "mass",
                value: mass,
                reason: "must be positive",
            });
        }
        Ok(Self { hbar, mass })
    }
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

/// Uniform periodic grid with a power-of-two point count.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Grid {
    n: usize,
    x_min: f64,
    dx: f64,
}

/// Builds the grid with `n` points covering `[x_min, x_max)`.
pub fn make_grid(n: usize, x_min: f64, x_max: f64) -> Result<Grid> {
    Grid::new(n, x_min, x_max)
}

impl Grid {
    pub fn new(n: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::GridSize(n));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::DegenerateInterval { x_min, x_max });
        }
        Ok(Self {
            n,
            x_min,
            dx: (x_max - x_min) / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Upper end of the periodic cell; `x(n)` would coincide with it.
    pub fn x_max(&self) -> f64 {
        self.x_min + self.length()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Wavenumber spacing `2π/(n·dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Wavenumber of DFT component `l` in FFT ordering.
    pub fn k(&self, l: usize) -> f64 {
        let signed = if l < self.n / 2 {
            l as isize
        } else {
            l as isize - self.n as isize
        };
        signed as f64 * self.dk()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|l| self.k(l)).collect()
    }

    /// Largest representable wavenumber magnitude, `π/dx`.
    pub fn k_nyquist(&self) -> f64 {
        PI / self.dx
    }

    /// Index of the site nearest to `x`, if `x` lies within half a spacing
    /// of some site.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let r = (x - self.x_min) / self.dx;
        let j = r.round();
        if j < 0.0 || j >= self.n as f64 || (r - j).abs() > 0.5 + 1e-9 {
            return None;
        }
        Some(j as usize)
    }

    /// Site reached by the reflection `x → −x` when the grid is symmetric.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    pub(crate) fn fourier(&self) -> Fourier {
        Fourier::new(self.n)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Grid(n={}, [{}, {}), dx={})",
            self.n,
            self.x_min,
            self.x_max(),
            self.dx
        )
    }
}

/// Unitary FFT pair in the crate's convention.
#[derive(Clone)]
pub(crate) struct Fourier {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Fourier {
    pub(crate) fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    pub(crate) fn forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    pub(crate) fn inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    /// `buf ← F† diag(symbol) F buf`.
    pub(crate) fn apply_symbol(&self, buf: &mut [C64], symbol: &[C64]) {
        self.forward(buf);
        for (z, s) in buf.iter_mut().zip(symbol) {
            *z *= s;
        }
        self.inverse(buf);
    }
}

/// Explicit unitary DFT matrix, `F_{lj} = n^{-1/2} exp(-2πi·l·j/n)`.
pub fn dft_matrix(n: usize) -> Array2<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    Array2::from_shape_fn((n, n), |(l, j)| {
        // reduce l·j mod n first so the angle stays exact
        let m = (l * j) % n;
        C64::from_polar(scale, -2.0 * PI * m as f64 / n as f64)
    })
}

/// Pure state sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: Grid,
    amps: Array1<C64>,
}

impl StateVector {
    pub fn new(grid: Grid, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != grid.n() {
            return Err(Error::Dimension {
                expected: grid.n(),
                found: amps.len(),
            });
        }
        Ok(Self { grid, amps })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        let amps = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self { grid, amps }
    }

    /// Normalized position eigenstate `|x_j⟩`.
    pub fn point(grid: Grid, j: usize) -> Self {
        let mut amps = Array1::zeros(grid.n());
        amps[j] = C64::new(1.0 / grid.dx().sqrt(), 0.0);
        Self { grid, amps }
    }

    /// Normalized momentum eigenstate on DFT component `l`.
    pub fn plane_wave(grid: Grid, l: usize) -> Self {
        let norm = 1.0 / grid.length().sqrt();
        let n = grid.n();
        let amps = (0..n)
            .map(|j| C64::from_polar(norm, 2.0 * PI * ((l * j) % n) as f64 / n as f64))
            .collect();
        Self { grid, amps }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut Array1<C64> {
        &mut self.amps
    }

    pub fn into_amps(self) -> Array1<C64> {
        self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Rescales to unit norm. Returns the norm² before rescaling.
    pub fn normalize(&mut self) -> f64 {
        let n2 = self.norm_sq();
        if n2 > 0.0 {
            let s = 1.0 / n2.sqrt();
            self.amps.mapv_inplace(|z| z * s);
        }
        n2
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn check_normalized(&self, what: &'static str, tol: f64) -> Result<()> {
        let norm_sq = self.norm_sq();
        if (norm_sq - 1.0).abs() > tol {
            return Err(Error::NotNormalized { what, norm_sq });
        }
        Ok(())
    }

    /// `⟨self|other⟩` with the dx-weighted inner product.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(inner_amps(&self.amps, &other.amps, self.grid.dx()))
    }

    /// dx-weighted L² distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    /// Trace distance between the two (normalized) pure states.
    ///
    /// Evaluated as the norm of the component of `other` orthogonal to
    /// `self`, which equals `√(1 − |⟨a|b⟩|²)` without the cancellation.
    pub fn trace_distance(&self, other: &StateVector) -> Result<f64> {
        let overlap = self.inner(other)?;
        let dx = self.grid.dx();
        let s: f64 = self
            .amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| (b - a * overlap).norm_sqr())
            .sum();
        Ok((s * dx).sqrt())
    }

    /// Probability mass on sites `j` with `x_j` in `[lo, hi)`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        let dx = self.grid.dx();
        (0..self.grid.n())
            .filter(|&j| {
                let x = self.grid.x(j);
                x >= lo && x < hi
            })
            .map(|j| self.amps[j].norm_sqr())
            .sum::<f64>()
            * dx
    }

    /// Mass within `width` of either end of the periodic cell.
    pub fn boundary_mass(&self, width: f64) -> f64 {
        let lo = self.grid.x_min() + width;
        let hi = self.grid.x_max() - width;
        if hi <= lo {
            return self.norm_sq();
        }
        self.norm_sq() - self.mass_in(lo, hi)
    }

    /// Mean position and position dispersion, by direct summation.
    pub fn position_moments(&self) -> (f64, f64) {
        let dx = self.grid.dx();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for (j, z) in self.amps.iter().enumerate() {
            let w = z.norm_sqr() * dx;
            let x = self.grid.x(j);
            m0 += w;
            m1 += w * x;
            m2 += w * x * x;
        }
        let mean = m1 / m0;
        (mean, (m2 / m0 - mean * mean).max(0.0).sqrt())
    }

    /// Guard-band check: less than [`GUARD_MASS_LIMIT`] of the mass may sit
    /// within `4·Δx` of the boundary, with `Δx` the state's own dispersion.
    pub fn check_guard_band(&self) -> Result<()> {
        let (_, sigma) = self.position_moments();
        let mass = self.boundary_mass(GUARD_SIGMAS * sigma);
        if mass >= GUARD_MASS_LIMIT {
            return Err(Error::GuardBand {
                mass,
                limit: GUARD_MASS_LIMIT,
            });
        }
        Ok(())
    }

    /// Momentum-space amplitudes `Fψ` (unit-norm when `ψ` is normalized in
    /// the dx-weighted sense, up to the factor `dx`).
    pub fn spectrum(&self) -> Vec<C64> {
        let mut buf = self.amps.to_vec();
        self.grid.fourier().forward(&mut buf);
        buf
    }

    /// `⟨p̂⟩`, evaluated in the momentum basis.
    pub fn momentum_expectation(&self, params: &PhysParams) -> f64 {
        let spec = self.spectrum();
        let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
        let weighted: f64 = spec
            .iter()
            .enumerate()
            .map(|(l, z)| z.norm_sqr() * params.hbar * self.grid.k(l))
            .sum();
        weighted / total
    }

    pub fn to_density(&self) -> DensityOperator {
        let a = &self.amps;
        let mat = Array2::from_shape_fn((a.len(), a.len()), |(j, k)| a[j] * a[k].conj());
        DensityOperator {
            grid: self.grid,
            mat,
        }
    }
}

pub(crate) fn inner_amps(a: &Array1<C64>, b: &Array1<C64>, dx: f64) -> C64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.conj() * y)
        .sum::<C64>()
        * dx
}

/// Normalized Gaussian wave packet
/// `ψ(x) ∝ exp(−(x − x0)²/(4σ0²) + i·p0·x/ħ)`.
///
/// Rejects packets narrower than two lattice spacings, packets with more
/// than [`GUARD_MASS_LIMIT`] of their mass within `4σ0` of either boundary,
/// and packets whose momentum distribution comes within `4σ_k` of the lattice
/// band edge (`σ_k = 1/(2σ0)`).
pub fn gaussian_packet(
    grid: Grid,
    x0: f64,
    p0: f64,
    sigma0: f64,
    params: &PhysParams,
) -> Result<StateVector> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(Error::InvalidParameter {
            name: "sigma0",
            value: sigma0,
            reason: "must be positive",
        });
    }
    if !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
            reason: "must be finite",
        });
    }
    if !p0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "p0",
            value: p0,
            reason: "must be finite",
        });
    }
    if sigma0 < 2.0 * grid.dx() {
        return Err(Error::PacketTooNarrow {
            sigma0,
            min: 2.0 * grid.dx(),
        });
    }
    let k0 = p0 / params.hbar;
    let state = StateVector::from_fn(grid, |x| {
        let u = (x - x0) / sigma0;
        C64::from_polar((-0.25 * u * u).exp(), k0 * x)
    })
    .normalized();

    let mass = state.boundary_mass(GUARD_SIGMAS * sigma0);
    if mass >= GUARD_MASS_LIMIT {
        return Err(Error::GuardBand {
            mass,
            limit: GUARD_MASS_LIMIT,
        });
    }

    let sigma_k = 0.5 / sigma0;
    let edge = grid.k_nyquist() - GUARD_SIGMAS * sigma_k;
    let spec = state.spectrum();
    let total: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
    let near_edge: f64 = spec
        .iter()
        .enumerate()
        .filter(|(l, _)| grid.k(*l).abs() >= edge)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let frac = near_edge / total;
    if frac >= GUARD_MASS_LIMIT {
        return Err(Error::MomentumBand {
            mass: frac,
            limit: GUARD_MASS_LIMIT,
        });
    }
    Ok(state)
}

/// Storage hint for an operator matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    /// Diagonal in the position basis.
    Diagonal,
    /// Diagonal in the momentum basis.
    SpectralDiagonal,
    General,
}

/// Dense `n × n` operator on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    grid: Grid,
    mat: Array2<C64>,
    structure: Structure,
}

impl LinearOperator {
    pub fn new(grid: Grid, mat: Array2<C64>) -> Result<Self> {
        Self::with_structure(grid, mat, Structure::General)
    }

    pub fn with_structure(grid: Grid, mat: Array2<C64>, structure: Structure) -> Result<Self> {
        let n = grid.n();
        if mat.dim() != (n, n) {
            return Err(Error::Dimension {
                expected: n,
                found: mat.nrows(),
            });
        }
        Ok(Self {
            grid,
            mat,
            structure,
        })
    }

    pub fn identity(grid: Grid) -> Self {
        Self {
            grid,
            mat: Array2::eye(grid.n()),
            structure: Structure::Diagonal,
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            mat: Array2::zeros((grid.n(), grid.n())),
            structure: Structure::Diagonal,
        }
    }

    pub fn diagonal(grid: Grid, entries: impl IntoIterator<Item = C64>) -> Result<Self> {
        let d: Array1<C64> = entries.into_iter().collect();
        if d.len() != grid.n() {
            return Err(Error::Dimension {
                expected: grid.n(),
                found: d.len(),
            });
        }
        Ok(Self {
            grid,
            mat: Array2::from_diag(&d),
            structure: Structure::Diagonal,
        })
    }

    /// `F† diag(symbol(k_l)) F`, built with the explicit DFT matrix.
    pub fn spectral(grid: Grid, symbol: impl Fn(f64) -> C64) -> Self {
        let f = dft_matrix(grid.n());
        let mut df = f.clone();
        for (l, mut row) in df.rows_mut().into_iter().enumerate() {
            let s = symbol(grid.k(l));
            row.mapv_inplace(|z| z * s);
        }
        let f_adj = f.t().mapv(|z| z.conj());
        Self {
            grid,
            mat: f_adj.dot(&df),
            structure: Structure::SpectralDiagonal,
        }
    }

    /// Rank-one projector `|ψ⟩⟨ψ|` for a normalized state.
    pub fn rank_one(state: &StateVector) -> Self {
        let a = state.amps();
        let dx = state.grid().dx();
        let mat = Array2::from_shape_fn((a.len(), a.len()), |(j, k)| a[j] * a[k].conj() * dx);
        Self {
            grid: *state.grid(),
            mat,
            structure: Structure::General,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn dim(&self) -> usize {
        self.grid.n()
    }

    fn check_grid(&self, other: &Grid) -> Result<()> {
        if &self.grid != other {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Operator product `self · rhs`.
    pub fn compose(&self, rhs: &LinearOperator) -> Result<LinearOperator> {
        self.check_grid(&rhs.grid)?;
        let structure = match (self.structure, rhs.structure) {
            (Structure::Diagonal, Structure::Diagonal) => Structure::Diagonal,
            (Structure::SpectralDiagonal, Structure::SpectralDiagonal) => {
                Structure::SpectralDiagonal
            }
            _ => Structure::General,
        };
        let mat = if self.structure == Structure::Diagonal {
            // row scaling
            let mut m = rhs.mat.clone();
            for (j, mut row) in m.rows_mut().into_iter().enumerate() {
                let d = self.mat[[j, j]];
                row.mapv_inplace(|z| z * d);
            }
            m
        } else if rhs.structure == Structure::Diagonal {
            let mut m = self.mat.clone();
            for (k, mut col) in m.columns_mut().into_iter().enumerate() {
                let d = rhs.mat[[k, k]];
                col.mapv_inplace(|z| z * d);
            }
            m
        } else {
            self.mat.dot(&rhs.mat)
        };
        Ok(Self {
            grid: self.grid,
            mat,
            structure,
        })
    }

    pub fn adjoint(&self) -> LinearOperator {
        Self {
            grid: self.grid,
            mat: self.mat.t().mapv(|z| z.conj()),
            structure: self.structure,
        }
    }

    pub fn add(&self, rhs: &LinearOperator) -> Result<LinearOperator> {
        self.check_grid(&rhs.grid)?;
        Ok(Self {
            grid: self.grid,
            mat: &self.mat + &rhs.mat,
            structure: if self.structure == rhs.structure {
                self.structure
            } else {
                Structure::General
            },
        })
    }

    pub fn sub(&self, rhs: &LinearOperator) -> Result<LinearOperator> {
        self.add(&rhs.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> LinearOperator {
        Self {
            grid: self.grid,
            mat: self.mat.mapv(|z| z * s),
            structure: self.structure,
        }
    }

    /// `(A + A†)/2`; removes round-off anti-Hermitian parts.
    pub fn hermitian_part(&self) -> LinearOperator {
        let adj = self.mat.t().mapv(|z| z.conj());
        Self {
            grid: self.grid,
            mat: (&self.mat + &adj).mapv(|z| z * 0.5),
            structure: self.structure,
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.diag().sum()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.mat)
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_grid(state.grid())?;
        Ok(StateVector {
            grid: self.grid,
            amps: self.apply_amps(state.amps()),
        })
    }

    pub(crate) fn apply_amps(&self, amps: &Array1<C64>) -> Array1<C64> {
        if self.structure == Structure::Diagonal {
            Array1::from_iter(amps.iter().enumerate().map(|(j, z)| self.mat[[j, j]] * z))
        } else {
            self.mat.dot(amps)
        }
    }

    /// `max |A − A†|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                dev = dev.max((self.mat[[j, k]] - self.mat[[k, j]].conj()).norm());
            }
        }
        dev
    }

    /// `max |A + A†|`.
    pub fn anti_hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                dev = dev.max((self.mat[[j, k]] + self.mat[[k, j]].conj()).norm());
            }
        }
        dev
    }

    /// `max |A†A − I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let adj = self.mat.t().mapv(|z| z.conj());
        let prod = adj.dot(&self.mat);
        max_abs(&(prod - Array2::<C64>::eye(self.dim())))
    }

    /// `max |A² − A|`.
    pub fn idempotence_deviation(&self) -> f64 {
        let sq = match self.structure {
            Structure::Diagonal => Array2::from_diag(&self.mat.diag().mapv(|z| z * z)),
            _ => self.mat.dot(&self.mat),
        };
        max_abs(&(sq - &self.mat))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.anti_hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.idempotence_deviation() <= tol
    }

    pub(crate) fn require_unitary(&self, what: &'static str, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation > tol {
            return Err(Error::NotUnitary { what, deviation });
        }
        Ok(())
    }

    pub(crate) fn require_projector(&self, what: &'static str, tol: f64) -> Result<()> {
        let deviation = self
            .hermiticity_deviation()
            .max(self.idempotence_deviation());
        if deviation > tol {
            return Err(Error::NotProjector { what, deviation });
        }
        Ok(())
    }
}

pub(crate) fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Position operator: diagonal with entries `x_j`.
pub fn position_operator(grid: Grid) -> LinearOperator {
    LinearOperator {
        grid,
        mat: Array2::from_diag(&Array1::from_iter(
            (0..grid.n()).map(|j| C64::new(grid.x(j), 0.0)),
        )),
        structure: Structure::Diagonal,
    }
}

/// Momentum operator `F† diag(ħk) F`.
pub fn momentum_operator(grid: Grid, params: &PhysParams) -> LinearOperator {
    let hbar = params.hbar;
    LinearOperator::spectral(grid, |k| C64::new(hbar * k, 0.0)).hermitian_part()
}

/// `⟨ψ|A|ψ⟩` with the dx-weighted inner product.
pub fn expectation(op: &LinearOperator, state: &StateVector) -> Result<C64> {
    let applied = op.apply(state)?;
    state.inner(&applied)
}

/// `√(⟨A²⟩ − ⟨A⟩²)` for a Hermitian observable, clamped at zero.
///
/// `⟨A²⟩` is evaluated as `‖Aψ‖²`, which is exact for Hermitian `A`.
pub fn dispersion(op: &LinearOperator, state: &StateVector) -> Result<f64> {
    let applied = op.apply(state)?;
    let mean = state.inner(&applied)?.re;
    let second = applied.norm_sq();
    Ok((second - mean * mean).max(0.0).sqrt())
}

/// Density operator stored as the kernel `ρ(x_j, x_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    grid: Grid,
    mat: Array2<C64>,
}

impl DensityOperator {
    /// Validates Hermiticity (1e−12), `Tr ρ · dx = 1` (1e−12) and positivity
    /// (eigenvalues of the operator `ρ·dx` at least −1e−10).
    pub fn new(grid: Grid, mat: Array2<C64>) -> Result<Self> {
        let n = grid.n();
        if mat.dim() != (n, n) {
            return Err(Error::Dimension {
                expected: n,
                found: mat.nrows(),
            });
        }
        let rho = Self { grid, mat };
        let herm = rho.as_operator().hermiticity_deviation();
        if herm > 1e-12 {
            return Err(Error::InvalidDensity(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = rho.mat.diag().sum() * grid.dx();
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace·dx = {tr}")));
        }
        let min_eig = rho.min_eigenvalue();
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn kernel(&self) -> &Array2<C64> {
        &self.mat
    }

    /// The operator `ρ·dx` in the orthonormal site basis.
    pub fn as_operator(&self) -> LinearOperator {
        let dx = self.grid.dx();
        LinearOperator {
            grid: self.grid,
            mat: self.mat.mapv(|z| z * dx),
            structure: Structure::General,
        }
    }

    /// Smallest eigenvalue of the operator `ρ·dx`.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.grid.n();
        let dx = self.grid.dx();
        let m = DMatrix::from_fn(n, n, |j, k| self.mat[[j, k]] * dx);
        // symmetrize so the Hermitian solver sees exact input
        let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        m.symmetric_eigenvalues().min()
    }

    /// `Tr(Aρ)·dx`.
    pub fn expectation(&self, op: &LinearOperator) -> Result<C64> {
        if op.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(trace_of_product(op.matrix(), &self.mat) * self.grid.dx())
    }
}

/// `Tr(AB)` without forming the product.
pub(crate) fn trace_of_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..n {
            acc += a[[j, k]] * b[[k, j]];
        }
    }
    acc
}
