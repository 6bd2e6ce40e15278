//! Seeded random instances for the equivalence and purification suites.

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::lattice::{
    gaussian_packet, DensityOperator, Grid, LinearOperator, PhysParams, StateVector, C64,
};

/// The generator every suite uses, so a seed pins the whole run.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

fn gaussian_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<C64> {
    // column-major fill order is part of the seed contract
    DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
}

fn to_array(m: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// `G G†` for a complex Gaussian `G`, scaled so that `Tr·dx = 1`.
pub fn random_density<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Result<DensityOperator> {
    let g = gaussian_matrix(grid.n(), rng);
    let psd = &g * g.adjoint();
    let tr = psd.trace().re;
    let kernel = to_array(&psd).mapv(|z| z / (tr * grid.dx()));
    // exact Hermitian symmetrization against round-off
    let sym = (&kernel + &kernel.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    DensityOperator::new(grid, sym)
}

/// Haar-distributed unitary: QR of a complex Gaussian with the phases of
/// `R`'s diagonal moved into `Q`.
pub fn random_unitary<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> LinearOperator {
    let g = gaussian_matrix(grid.n(), rng);
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..grid.n() {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..grid.n() {
            q[(i, j)] *= phase;
        }
    }
    LinearOperator::new(grid, to_array(&q)).expect("square matrix on grid")
}

/// Diagonal projector keeping each site with probability 1/2.
pub fn random_diagonal_projector<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> LinearOperator {
    let entries: Vec<C64> = (0..grid.n())
        .map(|_| C64::new(if rng.random_bool(0.5) { 1.0 } else { 0.0 }, 0.0))
        .collect();
    LinearOperator::diagonal(grid, entries).expect("length matches grid")
}

/// Gaussian packet with random center, momentum and width that satisfies
/// the position and momentum guard bands. Centers stay in the middle third
/// of the grid; widths lie between 2 and 8 lattice spacings (capped by the
/// box size).
pub fn random_packet<R: Rng + ?Sized>(
    grid: Grid,
    params: &PhysParams,
    rng: &mut R,
) -> Result<StateVector> {
    let third = grid.length() / 6.0;
    let mid = 0.5 * (grid.x_min() + grid.x_max());
    random_packet_near(grid, params, mid - third, mid + third, rng)
}

/// As [`random_packet`] with the center drawn from `[lo, hi)`.
pub fn random_packet_near<R: Rng + ?Sized>(
    grid: Grid,
    params: &PhysParams,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<StateVector> {
    let dx = grid.dx();
    let sigma_max = (8.0 * dx).min(grid.length() / 40.0).max(2.0 * dx);
    let mut last = None;
    for _ in 0..64 {
        let x0 = rng.random_range(lo..hi);
        let sigma0 = rng.random_range(2.0 * dx..=sigma_max);
        // keep the momentum spread well inside the band
        let k_room = grid.k_nyquist() - 8.0 / (2.0 * sigma0);
        let p0 = params.hbar * rng.random_range(-0.3..=0.3) * k_room.max(0.0);
        match gaussian_packet(grid, x0, p0, sigma0, params) {
            Ok(psi) => return Ok(psi),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
