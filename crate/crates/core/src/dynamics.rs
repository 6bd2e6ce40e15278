//! Free-particle time evolution in the Schrödinger and Heisenberg pictures.
//!
//! The production propagator is spectral: `U(t) = F† diag(e^{−iħk²t/2m}) F`,
//! which is exactly unitary on the periodic lattice. The closed-form Fresnel
//! kernel is kept as an independent oracle.

use std::f64::consts::PI;

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::lattice::{
    momentum_operator, position_operator, Fourier, Grid, LinearOperator, PhysParams, StateVector,
    C64,
};

/// Tolerance for the unitarity check in [`heisenberg_conjugate`].
pub const UNITARY_TOL: f64 = 1e-10;

/// Spectral free propagator bound to one grid. Cheap to reuse across times.
#[derive(Clone)]
pub struct FreeEvolution {
    grid: Grid,
    params: PhysParams,
    fourier: Fourier,
}

impl FreeEvolution {
    pub fn new(grid: Grid, params: PhysParams) -> Self {
        Self {
            grid,
            params,
            fourier: grid.fourier(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    /// Phase factors `e^{−iħk²t/(2m)}` in FFT order.
    pub fn phases(&self, t: f64) -> Vec<C64> {
        let c = self.params.hbar * t / (2.0 * self.params.mass);
        (0..self.grid.n())
            .map(|l| {
                let k = self.grid.k(l);
                C64::from_polar(1.0, -c * k * k)
            })
            .collect()
    }

    /// In-place `amps ← U(t) amps`. `U(0)` is the identity, exactly.
    pub fn apply(&self, amps: &mut [C64], t: f64) {
        if t == 0.0 {
            return;
        }
        let phases = self.phases(t);
        self.fourier.apply_symbol(amps, &phases);
    }

    /// `U(t)ψ` without boundary checks.
    pub fn propagate(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let mut buf = state.amps().to_vec();
        self.apply(&mut buf, t);
        StateVector::new(self.grid, Array1::from(buf))
    }

    /// `U(t)ψ`, requiring the guard band to hold before and after.
    pub fn evolve(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        state.check_guard_band()?;
        let out = self.propagate(state, t)?;
        out.check_guard_band()?;
        Ok(out)
    }

    /// `p̂ψ` through the momentum basis.
    pub fn momentum_apply(&self, amps: &[C64]) -> Vec<C64> {
        let symbol: Vec<C64> = (0..self.grid.n())
            .map(|l| C64::new(self.params.hbar * self.grid.k(l), 0.0))
            .collect();
        let mut buf = amps.to_vec();
        self.fourier.apply_symbol(&mut buf, &symbol);
        buf
    }

    /// `U(t)† f(x̂) U(t) ψ` for a position-diagonal weight `f`, checking that
    /// the intermediate state `U(t)ψ` respects the guard band.
    pub fn heisenberg_diagonal_apply(
        &self,
        state: &StateVector,
        t: f64,
        weight: impl Fn(usize, f64) -> f64,
    ) -> Result<StateVector> {
        let forward = self.propagate(state, t)?;
        forward.check_guard_band()?;
        let mut buf = forward.into_amps().to_vec();
        for (j, z) in buf.iter_mut().enumerate() {
            *z *= weight(j, self.grid.x(j));
        }
        self.apply(&mut buf, -t);
        StateVector::new(self.grid, Array1::from(buf))
    }

    /// `x̂_H(t)ψ = U(t)† x̂ U(t) ψ`.
    pub fn heisenberg_position_apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        self.heisenberg_diagonal_apply(state, t, |_, x| x)
    }

    /// Closed-form `(x̂ + p̂t/m)ψ`.
    pub fn equation_of_motion_apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let p = self.momentum_apply(&state.amps().to_vec());
        let s = t / self.params.mass;
        let amps = state
            .amps()
            .iter()
            .enumerate()
            .zip(p)
            .map(|((j, z), pz)| z * self.grid.x(j) + pz * s)
            .collect();
        StateVector::new(self.grid, amps)
    }
}

/// Dense `U(t) = F† diag(e^{−iħk²t/(2m)}) F`, built with the explicit DFT
/// matrix.
pub fn free_unitary(grid: Grid, params: &PhysParams, t: f64) -> LinearOperator {
    let c = params.hbar * t / (2.0 * params.mass);
    LinearOperator::spectral(grid, |k| C64::from_polar(1.0, -c * k * k))
}

/// `U(t)ψ` on the spectral fast path, with guard-band checks before and after.
pub fn evolve_state(state: &StateVector, t: f64, params: &PhysParams) -> Result<StateVector> {
    FreeEvolution::new(*state.grid(), *params).evolve(state, t)
}

/// Free-particle kernel `⟨x, t|x_src, 0⟩ = √(m/(2πiħt)) e^{i m (x−x_src)²/(2ħt)}`.
///
/// The square root of `i·sign(t)` is taken on the principal branch
/// `e^{±iπ/4}`.
pub fn analytic_kernel(x: f64, x_src: f64, t: f64, params: &PhysParams) -> Result<C64> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    let modulus = (params.mass / (2.0 * PI * params.hbar * t.abs())).sqrt();
    let prefactor = C64::from_polar(modulus, -t.signum() * PI / 4.0);
    let d = x - x_src;
    Ok(prefactor * C64::from_polar(1.0, params.mass * d * d / (2.0 * params.hbar * t)))
}

/// `ψ(x_i, t) = Σ_j K(x_i, x_j; t) ψ_j dx`, the kernel oracle for
/// [`evolve_state`]. O(n²); not unitary on the lattice.
///
/// The sum only converges to the continuum integral when the sampling
/// resolves the kernel's chirp, i.e. `|x_i − x_j| < πħ|t|/(m·dx)` wherever
/// `ψ_j` is non-negligible. Outside that range the sum aliases.
pub fn kernel_propagate(state: &StateVector, t: f64, params: &PhysParams) -> Result<StateVector> {
    let grid = *state.grid();
    let dx = grid.dx();
    let src: Vec<(f64, C64)> = (0..grid.n())
        .map(|j| (grid.x(j), state.amps()[j]))
        .filter(|(_, z)| z.norm_sqr() > 0.0)
        .collect();
    let amps = (0..grid.n())
        .map(|i| {
            let x = grid.x(i);
            src.iter()
                .map(|&(xs, z)| analytic_kernel(x, xs, t, params).map(|k| k * z))
                .sum::<Result<C64>>()
                .map(|s| s * dx)
        })
        .collect::<Result<Array1<C64>>>()?;
    StateVector::new(grid, amps)
}

/// `u† · op · u`, checking that `u` is unitary to [`UNITARY_TOL`].
pub fn heisenberg_conjugate(op: &LinearOperator, u: &LinearOperator) -> Result<LinearOperator> {
    u.require_unitary("conjugating operator", UNITARY_TOL)?;
    sandwich(op, u)
}

/// `a† · op · a` for an arbitrary `a`.
pub(crate) fn sandwich(op: &LinearOperator, a: &LinearOperator) -> Result<LinearOperator> {
    a.adjoint().compose(op)?.compose(a)
}

/// Closed-form Heisenberg position `x̂ + (t/m)·p̂`.
pub fn heisenberg_position(grid: Grid, params: &PhysParams, t: f64) -> LinearOperator {
    let x = position_operator(grid);
    if t == 0.0 {
        return x;
    }
    let p = momentum_operator(grid, params).scale(C64::new(t / params.mass, 0.0));
    x.add(&p).expect("same grid")
}

/// Time of flight `m·L/p_y` across a gap of length `L` for transverse
/// momentum `p_y`.
pub fn time_of_flight(distance: f64, p_y: f64, params: &PhysParams) -> Result<f64> {
    if !(p_y.is_finite() && p_y > 0.0) {
        return Err(Error::InvalidParameter {
            name: "p_y",
            value: p_y,
            reason: "must be positive",
        });
    }
    if !(distance.is_finite() && distance >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "L",
            value: distance,
            reason: "must be non-negative",
        });
    }
    Ok(params.mass * distance / p_y)
}

/// How a [`Propagator`] realizes `U(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorForm {
    SpectralUnitary,
    DenseUnitary,
    AnalyticKernel,
}

/// Free evolution over a fixed duration in one of three equivalent forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub grid: Grid,
    pub params: PhysParams,
    pub t: f64,
    pub form: PropagatorForm,
}

impl Propagator {
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        match self.form {
            PropagatorForm::SpectralUnitary => {
                FreeEvolution::new(self.grid, self.params).propagate(state, self.t)
            }
            PropagatorForm::DenseUnitary => {
                free_unitary(self.grid, &self.params, self.t).apply(state)
            }
            PropagatorForm::AnalyticKernel if self.t == 0.0 => Ok(state.clone()),
            PropagatorForm::AnalyticKernel => kernel_propagate(state, self.t, &self.params),
        }
    }
}
