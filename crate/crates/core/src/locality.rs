//! Commutator and dispersion audits for the free particle.
//!
//! Windowed position operators `x̂_w(x̄, t) = U(t)† χ_w(x̂ − x̄) x̂ U(t)` are
//! applied matrix-free: with `f = χ_w x̂ U(t_a) ψ` and `g = χ_w' x̂ U(t_b) ψ`,
//!
//! ```text
//! ⟨ψ|[x̂_w(t_a), x̂_w'(t_b)]|ψ⟩ = 2i·Im⟨f|U(t_a − t_b)|g⟩
//! ```
//!
//! so equal-time pairs reduce to an overlap of position-diagonal vectors.

use std::ops::Range;

use ndarray::Array1;
use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{free_unitary, heisenberg_conjugate, FreeEvolution};
use crate::error::{Error, Result};
use crate::lattice::{
    dispersion, inner_amps, position_operator, Grid, LinearOperator, PhysParams, StateVector, C64,
    I,
};
use crate::measurement::sites_in;

/// Power-iteration steps used for commutator norm estimates.
pub const NORM_ITERATIONS: usize = 60;

/// `AB − BA`.
pub fn commutator(a: &LinearOperator, b: &LinearOperator) -> Result<LinearOperator> {
    a.compose(b)?.sub(&b.compose(a)?)
}

/// Sharp position window `[center − width/2, center + width/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub center: f64,
    pub width: f64,
}

impl Window {
    /// The window holding every site of `grid`.
    pub fn whole(grid: &Grid) -> Self {
        Self {
            center: 0.5 * (grid.x_min() + grid.x_max()),
            width: grid.length(),
        }
    }

    pub fn sites(&self, grid: &Grid) -> Result<Range<usize>> {
        let lo = self.center - 0.5 * self.width;
        let hi = self.center + 0.5 * self.width;
        let tol = 1e-9 * grid.dx();
        if !(self.width > 0.0)
            || lo < grid.x_min() - 0.5 * grid.dx() - tol
            || hi > grid.x_max() + tol
        {
            return Err(Error::OffGrid {
                what: "position window",
                position: self.center,
            });
        }
        let r = sites_in(grid, lo, hi);
        if r.is_empty() {
            return Err(Error::OffGrid {
                what: "empty position window",
                position: self.center,
            });
        }
        Ok(r)
    }

    /// `χ_w(x_j)·x_j` for every site.
    fn weights(&self, grid: &Grid) -> Result<Vec<f64>> {
        let r = self.sites(grid)?;
        Ok((0..grid.n())
            .map(|j| if r.contains(&j) { grid.x(j) } else { 0.0 })
            .collect())
    }
}

/// Dense `U(t)† χ_w(x̂ − x̄) x̂ U(t)`; at `t = 0` the diagonal itself.
pub fn local_field_operator(
    grid: Grid,
    center: f64,
    width: f64,
    t: f64,
    params: &PhysParams,
) -> Result<LinearOperator> {
    let w = Window { center, width }.weights(&grid)?;
    let diag = LinearOperator::diagonal(grid, w.into_iter().map(|x| C64::new(x, 0.0)))?;
    if t == 0.0 {
        return Ok(diag);
    }
    Ok(heisenberg_conjugate(&diag, &free_unitary(grid, params, t))?.hermitian_part())
}

/// Windowed weight applied at time `t`: `χ_w x̂ U(t) ψ`, guard-checked.
fn weighted_at(
    evo: &FreeEvolution,
    state: &StateVector,
    t: f64,
    weights: &[f64],
) -> Result<Array1<C64>> {
    let moved = evo.evolve(state, t)?;
    Ok(moved
        .amps()
        .iter()
        .zip(weights)
        .map(|(z, w)| z * *w)
        .collect())
}

/// `⟨f|U(τ)|g⟩ − c.c.`, the commutator expectation from the weighted vectors.
fn pair_value(evo: &FreeEvolution, f: &Array1<C64>, g: &Array1<C64>, tau: f64) -> C64 {
    let mut buf = g.to_vec();
    evo.apply(&mut buf, tau);
    let z = inner_amps(f, &Array1::from(buf), evo.grid().dx());
    C64::new(0.0, 2.0 * z.im)
}

/// `⟨ψ|[x̂_H(t), x̂_H(t′)]|ψ⟩` with `x̂_H(t) = U(t)† x̂ U(t)`; the free
/// particle gives `iħ(t′ − t)/m`.
pub fn two_time_position_commutator(
    state: &StateVector,
    t: f64,
    t_prime: f64,
    params: &PhysParams,
) -> Result<C64> {
    let grid = *state.grid();
    let evo = FreeEvolution::new(grid, *params);
    let x = grid.positions();
    let f = weighted_at(&evo, state, t, &x)?;
    let g = weighted_at(&evo, state, t_prime, &x)?;
    Ok(pair_value(&evo, &f, &g, t - t_prime))
}

/// `Δx(0)·Δx(t)` next to the bound `ħ|t|/(2m)` it must respect and the
/// larger `ħ|t|/m` it is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionProduct {
    pub product: f64,
    pub robertson_bound: f64,
    pub hbar_t_over_m: f64,
}

impl DispersionProduct {
    pub fn meets_hbar_t_over_m(&self) -> bool {
        self.product >= self.hbar_t_over_m
    }
}

/// Dispersions of `x̂` and `x̂_H(t)` in the fixed state. Errors if the
/// product falls below the Robertson bound by more than `1e−9`.
pub fn dispersion_product(
    state: &StateVector,
    t: f64,
    params: &PhysParams,
) -> Result<DispersionProduct> {
    let grid = *state.grid();
    state.check_guard_band()?;
    let x = position_operator(grid);
    let dx0 = dispersion(&x, state)?;
    let moved = FreeEvolution::new(grid, *params).evolve(state, t)?;
    let dxt = dispersion(&x, &moved)?;
    let robertson = params.hbar * t.abs() / (2.0 * params.mass);
    let out = DispersionProduct {
        product: dx0 * dxt,
        robertson_bound: robertson,
        hbar_t_over_m: 2.0 * robertson,
    };
    if out.product < robertson - 1e-9 {
        return Err(Error::Uncertainty {
            product: out.product,
            bound: robertson,
        });
    }
    Ok(out)
}

/// `(t, Δx(t))` for the state evolved to each time.
pub fn spread_series(
    state: &StateVector,
    times: &[f64],
    params: &PhysParams,
) -> Result<Vec<(f64, f64)>> {
    let grid = *state.grid();
    let evo = FreeEvolution::new(grid, *params);
    times
        .par_iter()
        .map(|&t| {
            let (_, spread) = evo.evolve(state, t)?.position_moments();
            Ok((t, spread))
        })
        .collect()
}

/// Least-squares slope of `Δx` against `t`.
pub fn spread_slope(series: &[(f64, f64)]) -> Option<f64> {
    let n = series.len();
    if n < 2 {
        return None;
    }
    let mt = series.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let ms = series.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sts, mut stt) = (0.0, 0.0);
    for &(t, s) in series {
        sts += (t - mt) * (s - ms);
        stt += (t - mt) * (t - mt);
    }
    (stt > 0.0).then(|| sts / stt)
}

/// One cell of a windowed commutator scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorEntry {
    pub xbar: f64,
    pub xbar_prime: f64,
    pub t: f64,
    pub t_prime: f64,
    pub value: C64Parts,
    /// Power-iteration estimate of `‖[x̂_w(x̄,t), x̂_w(x̄′,t′)]‖`.
    pub norm: f64,
    /// `iħ(t′ − t)/m` for equal windows, zero otherwise.
    pub predicted: C64Parts,
    pub deviation: f64,
}

impl CommutatorEntry {
    pub fn equal_time(&self) -> bool {
        self.t == self.t_prime
    }

    pub fn value(&self) -> C64 {
        self.value.into()
    }

    pub fn predicted(&self) -> C64 {
        self.predicted.into()
    }
}

/// Serializable complex number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct C64Parts {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Parts {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<C64Parts> for C64 {
    fn from(z: C64Parts) -> Self {
        C64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutatorReport {
    pub width: f64,
    pub entries: Vec<CommutatorEntry>,
}

impl CommutatorReport {
    /// Largest `|value|` over equal-time entries (the assertable part).
    pub fn equal_time_max(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.equal_time())
            .map(|e| e.value().norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation from the prediction over unequal-time entries
    /// (reported, not asserted).
    pub fn unequal_time_max_deviation(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| !e.equal_time())
            .map(|e| e.deviation)
            .fold(0.0, f64::max)
    }
}

/// Every ordered pair of `(center, time)` windows: commutator expectation in
/// `state`, its operator-norm estimate, and the local prediction.
pub fn local_commutator_scan(
    centers: &[f64],
    times: &[f64],
    width: f64,
    state: &StateVector,
    params: &PhysParams,
) -> Result<CommutatorReport> {
    let grid = *state.grid();
    let evo = FreeEvolution::new(grid, *params);
    let cells: Vec<(f64, f64)> = centers
        .iter()
        .flat_map(|&c| times.iter().map(move |&t| (c, t)))
        .collect();
    let weights = centers
        .iter()
        .map(|&c| Window { center: c, width }.weights(&grid))
        .collect::<Result<Vec<_>>>()?;
    let weighted = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(_, t))| weighted_at(&evo, state, t, &weights[i / times.len()]))
        .collect::<Result<Vec<_>>>()?;

    let nt = times.len();
    let pairs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|a| (0..cells.len()).map(move |b| (a, b)))
        .collect();
    let entries = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (xa, ta) = cells[a];
            let (xb, tb) = cells[b];
            let value = pair_value(&evo, &weighted[a], &weighted[b], ta - tb);
            let predicted = if a / nt == b / nt {
                I * (params.hbar * (tb - ta) / params.mass)
            } else {
                C64::new(0.0, 0.0)
            };
            let norm = commutator_norm(&evo, &weights[a / nt], ta, &weights[b / nt], tb);
            CommutatorEntry {
                xbar: xa,
                xbar_prime: xb,
                t: ta,
                t_prime: tb,
                value: value.into(),
                norm,
                predicted: predicted.into(),
                deviation: (value - predicted).norm(),
            }
        })
        .collect();
    Ok(CommutatorReport { width, entries })
}

/// `U(t)† diag(w) U(t) v`.
fn conjugated_apply(evo: &FreeEvolution, w: &[f64], t: f64, v: &[C64]) -> Vec<C64> {
    let mut buf = v.to_vec();
    evo.apply(&mut buf, t);
    buf.iter_mut().zip(w).for_each(|(z, &x)| *z *= x);
    evo.apply(&mut buf, -t);
    buf
}

/// Power iteration on `−C²` for the anti-Hermitian `C = [A, B]`.
fn commutator_norm(evo: &FreeEvolution, wa: &[f64], ta: f64, wb: &[f64], tb: f64) -> f64 {
    if ta == tb {
        // both operators are diagonal in the same basis
        return 0.0;
    }
    let n = evo.grid().n();
    let apply_c = |v: &[C64]| -> Vec<C64> {
        let ab = conjugated_apply(evo, wa, ta, &conjugated_apply(evo, wb, tb, v));
        let ba = conjugated_apply(evo, wb, tb, &conjugated_apply(evo, wa, ta, v));
        ab.iter().zip(&ba).map(|(x, y)| x - y).collect()
    };
    let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // deterministic start with weight on every site
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::new(1.0 + 0.5 * ((j * 7919) % 97) as f64 / 97.0, 0.0))
        .collect();
    let mut estimate = 0.0;
    for _ in 0..NORM_ITERATIONS {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let cv = apply_c(&v);
        estimate = norm(&cv);
        if estimate == 0.0 {
            return 0.0;
        }
        v = apply_c(&cv);
    }
    estimate
}
