//! Slit and detector projectors, sequential measurement probabilities, and
//! the conditional fringe pattern.

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::Array1;
use serde::Serialize;

use crate::dynamics::{heisenberg_conjugate, sandwich, FreeEvolution, UNITARY_TOL};
use crate::error::{Error, Result};
use crate::lattice::{
    gaussian_packet, trace_of_product, DensityOperator, Grid, LinearOperator, PhysParams,
    StateVector, C64,
};

/// Below this slit-passage probability conditional quantities are refused.
pub const P1_CUTOFF: f64 = 1e-12;

/// Tolerance for projector checks on measurement inputs.
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Sites `j` with `x_j ∈ [lo, hi)`, robust to round-off at the edges.
pub(crate) fn sites_in(grid: &Grid, lo: f64, hi: f64) -> Range<usize> {
    let idx = |x: f64| {
        let r = ((x - grid.x_min()) / grid.dx() - 1e-9).ceil();
        r.clamp(0.0, grid.n() as f64) as usize
    };
    let (a, b) = (idx(lo), idx(hi));
    a..b.max(a)
}

/// Which slits of the screen are open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Openings {
    Both,
    Left,
    Right,
}

/// Two-slit screen with centers at `±d/2`.
///
/// `width = 0` is an infinitely narrow slit realized as a single lattice
/// site; otherwise each aperture is the set of sites within `width/2` of the
/// (snapped) center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitScreen {
    pub d: f64,
    pub width: f64,
    pub t1: f64,
    pub open: Openings,
}

impl SlitScreen {
    pub fn new(d: f64, width: f64, t1: f64) -> Result<Self> {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter {
                name: "d",
                value: d,
                reason: "must be positive",
            });
        }
        if !(width.is_finite() && width >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "slit_width",
                value: width,
                reason: "must be non-negative",
            });
        }
        if !(t1.is_finite() && t1 >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t1",
                value: t1,
                reason: "must be non-negative",
            });
        }
        Ok(Self {
            d,
            width,
            t1,
            open: Openings::Both,
        })
    }

    pub fn with_open(mut self, open: Openings) -> Self {
        self.open = open;
        self
    }

    /// Index sets of the open apertures, left first.
    pub fn apertures(&self, grid: &Grid) -> Result<Vec<Range<usize>>> {
        let left = aperture(grid, -self.d / 2.0, self.width)?;
        let right = aperture(grid, self.d / 2.0, self.width)?;
        if left.end > right.start {
            return Err(Error::Aperture(format!(
                "slits overlap: sites {left:?} and {right:?}"
            )));
        }
        Ok(match self.open {
            Openings::Both => vec![left, right],
            Openings::Left => vec![left],
            Openings::Right => vec![right],
        })
    }

    pub fn aperture_indices(&self, grid: &Grid) -> Result<Vec<usize>> {
        Ok(self.apertures(grid)?.into_iter().flatten().collect())
    }

    /// Distance between the snapped slit centers.
    pub fn realized_separation(&self, grid: &Grid) -> Result<f64> {
        let snap = |c: f64| {
            grid.nearest_index(c)
                .map(|j| grid.x(j))
                .ok_or(Error::OffGrid {
                    what: "slit center",
                    position: c,
                })
        };
        Ok(snap(self.d / 2.0)? - snap(-self.d / 2.0)?)
    }
}

fn aperture(grid: &Grid, center: f64, width: f64) -> Result<Range<usize>> {
    let off = Error::OffGrid {
        what: "slit center",
        position: center,
    };
    let jc = grid.nearest_index(center).ok_or(off.clone())?;
    let half = (0.5 * width / grid.dx() + 1e-9).floor() as usize;
    // keep one untouched site between the aperture and the cell boundary
    if jc < half + 1 || jc + half + 1 >= grid.n() {
        return Err(off);
    }
    Ok(jc - half..jc + half + 1)
}

/// Detection bin centered at `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorPixel {
    pub s: f64,
    pub width: f64,
}

impl DetectorPixel {
    /// Single-site pixel at `s`.
    pub fn site(grid: &Grid, s: f64) -> Self {
        Self {
            s,
            width: grid.dx(),
        }
    }

    pub fn sites(&self, grid: &Grid) -> Result<Range<usize>> {
        let lo = self.s - 0.5 * self.width;
        let hi = self.s + 0.5 * self.width;
        let slack = 0.5 * grid.dx() * (1.0 + 1e-9);
        if !(self.width > 0.0)
            || lo < grid.x_min() - slack
            || hi > grid.x_max() - 0.5 * grid.dx() + 1e-9 * grid.dx()
        {
            return Err(Error::OffGrid {
                what: "detector pixel",
                position: self.s,
            });
        }
        let r = sites_in(grid, lo, hi);
        if r.is_empty() {
            return Err(Error::Aperture(format!(
                "detector pixel at {} of width {} contains no sites",
                self.s, self.width
            )));
        }
        Ok(r)
    }
}

/// Pixels of `sites_per_pixel` consecutive sites tiling the whole grid.
pub fn pixel_tiling(grid: &Grid, sites_per_pixel: usize) -> Result<Vec<DetectorPixel>> {
    if sites_per_pixel == 0 || !grid.n().is_multiple_of(sites_per_pixel) {
        return Err(Error::InvalidParameter {
            name: "pixel_width",
            value: sites_per_pixel as f64 * grid.dx(),
            reason: "must be a multiple of dx that divides the grid",
        });
    }
    let w = sites_per_pixel as f64 * grid.dx();
    Ok((0..grid.n() / sites_per_pixel)
        .map(|i| {
            let first = i * sites_per_pixel;
            let s = grid.x(first) + 0.5 * (sites_per_pixel - 1) as f64 * grid.dx();
            DetectorPixel { s, width: w }
        })
        .collect())
}

fn indicator(grid: Grid, sites: impl IntoIterator<Item = usize>) -> LinearOperator {
    let mut d = vec![C64::new(0.0, 0.0); grid.n()];
    for j in sites {
        d[j] = C64::new(1.0, 0.0);
    }
    LinearOperator::diagonal(grid, d).expect("length matches grid")
}

/// Diagonal projector onto the open slit apertures.
pub fn slit_projector(grid: Grid, screen: &SlitScreen) -> Result<LinearOperator> {
    Ok(indicator(grid, screen.aperture_indices(&grid)?))
}

/// Diagonal projector onto the sites of one detector pixel.
pub fn pixel_projector(grid: Grid, pixel: &DetectorPixel) -> Result<LinearOperator> {
    Ok(indicator(grid, pixel.sites(&grid)?))
}

/// The three algebraically equivalent ways of writing `p(1,2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SequentialForm {
    /// `Tr{P₂ U₂P₁U₁ ρ (U₂P₁U₁)†}`: the state evolves.
    Schrodinger,
    /// `Tr{(U₂P₁U₁)† P₂ U₂P₁U₁ ρ}`: `P₂` is evolved backwards.
    Heisenberg,
    /// `Tr{(U₁†P₁U₁)(U₂U₁)†P₂(U₂U₁)(U₁†P₁U₁) ρ}`: both projectors evolve.
    DoubleHeisenberg,
}

impl SequentialForm {
    pub const ALL: [SequentialForm; 3] = [
        SequentialForm::Schrodinger,
        SequentialForm::Heisenberg,
        SequentialForm::DoubleHeisenberg,
    ];
}

/// Raw complex value of `p(1,2)` in the requested form. The imaginary part
/// is pure round-off.
pub fn sequential_probability(
    form: SequentialForm,
    rho: &DensityOperator,
    u1: &LinearOperator,
    p1: &LinearOperator,
    u2: &LinearOperator,
    p2: &LinearOperator,
) -> Result<C64> {
    let grid = rho.grid();
    for op in [u1, p1, u2, p2] {
        if op.grid() != grid {
            return Err(Error::GridMismatch);
        }
    }
    u1.require_unitary("U1", UNITARY_TOL)?;
    u2.require_unitary("U2", UNITARY_TOL)?;
    p1.require_projector("P1", PROJECTOR_TOL)?;
    p2.require_projector("P2", PROJECTOR_TOL)?;
    let dx = grid.dx();

    let value = match form {
        SequentialForm::Schrodinger => {
            let a = u2.compose(p1)?.compose(u1)?;
            // ρ_f = A ρ A† on the kernel
            let adj = a.adjoint();
            let rho_f = a.matrix().dot(rho.kernel()).dot(adj.matrix());
            trace_of_product(p2.matrix(), &rho_f)
        }
        SequentialForm::Heisenberg => {
            let back = heisenberg_conjugate(p2, u2)?;
            let back = sandwich(&back, p1)?;
            let back = heisenberg_conjugate(&back, u1)?;
            trace_of_product(back.matrix(), rho.kernel())
        }
        SequentialForm::DoubleHeisenberg => {
            let q1 = heisenberg_conjugate(p1, u1)?;
            let u21 = u2.compose(u1)?;
            let q2 = heisenberg_conjugate(p2, &u21)?;
            let chain = q1.compose(&q2)?.compose(&q1)?;
            trace_of_product(chain.matrix(), rho.kernel())
        }
    };
    Ok(value * dx)
}

pub fn p_seq_schrodinger(
    rho: &DensityOperator,
    u1: &LinearOperator,
    p1: &LinearOperator,
    u2: &LinearOperator,
    p2: &LinearOperator,
) -> Result<f64> {
    sequential_probability(SequentialForm::Schrodinger, rho, u1, p1, u2, p2).map(|z| z.re)
}

pub fn p_seq_heisenberg(
    rho: &DensityOperator,
    u1: &LinearOperator,
    p1: &LinearOperator,
    u2: &LinearOperator,
    p2: &LinearOperator,
) -> Result<f64> {
    sequential_probability(SequentialForm::Heisenberg, rho, u1, p1, u2, p2).map(|z| z.re)
}

pub fn p_seq_double_heisenberg(
    rho: &DensityOperator,
    u1: &LinearOperator,
    p1: &LinearOperator,
    u2: &LinearOperator,
    p2: &LinearOperator,
) -> Result<f64> {
    sequential_probability(SequentialForm::DoubleHeisenberg, rho, u1, p1, u2, p2).map(|z| z.re)
}

/// `|⟨ψ₀|ψ₁⟩|² |⟨ψ₁|ψ₂⟩|²` for normalized states.
pub fn p_rank_one(psi0: &StateVector, psi1: &StateVector, psi2: &StateVector) -> Result<f64> {
    psi0.check_normalized("psi0", 1e-10)?;
    psi1.check_normalized("psi1", 1e-10)?;
    psi2.check_normalized("psi2", 1e-10)?;
    Ok(psi0.inner(psi1)?.norm_sqr() * psi1.inner(psi2)?.norm_sqr())
}

/// Normalized two-slit state `(|−d/2⟩ + |+d/2⟩)/√2` at the snapped slit
/// sites (or a single site when one slit is closed).
pub fn slit_state(grid: Grid, screen: &SlitScreen) -> Result<StateVector> {
    let mut amps = Array1::zeros(grid.n());
    for r in screen.apertures(&grid)? {
        let mid = (r.start + r.end - 1) / 2;
        amps[mid] = C64::new(1.0, 0.0);
    }
    Ok(StateVector::new(grid, amps)?.normalized())
}

/// Relative fringe intensity `cos²(m·s·d/(2ħT))`, equal to 1 at `s = 0`.
pub fn analytic_fringe(s: f64, d: f64, t: f64, params: &PhysParams) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::ZeroTime);
    }
    Ok((params.mass * s * d / (2.0 * params.hbar * t))
        .cos()
        .powi(2))
}

/// Spacing of the maxima of [`analytic_fringe`], `2πħT/(m·d)`.
pub fn analytic_spacing(d: f64, t: f64, params: &PhysParams) -> f64 {
    2.0 * PI * params.hbar * t / (params.mass * d)
}

/// Initial Gaussian packet parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSpec {
    pub x0: f64,
    pub p0: f64,
    pub sigma0: f64,
}

/// Optional ancilla screen: `k` cells with pulse area `theta` off the slits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegisterSpec {
    pub k: usize,
    pub theta: f64,
}

/// One double-slit run: packet at `t = 0`, slits at `t1`, detection at `t2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub grid: Grid,
    pub params: PhysParams,
    pub packet: PacketSpec,
    pub screen: SlitScreen,
    pub t2: f64,
    pub pixel_sites: usize,
    pub register: Option<RegisterSpec>,
}

impl Scenario {
    /// The shipped reference run: point slits 10 apart, `T = t2 − t1 = 50`,
    /// so the analytic fringe spacing is `10π`.
    pub fn reference() -> Self {
        Self {
            grid: Grid::new(4096, -512.0, 512.0).expect("valid grid"),
            params: PhysParams::default(),
            packet: PacketSpec {
                x0: 0.0,
                p0: 0.0,
                sigma0: 2.0,
            },
            screen: SlitScreen::new(10.0, 0.0, 10.0).expect("valid screen"),
            t2: 60.0,
            pixel_sites: 1,
            register: None,
        }
    }

    pub fn flight_time(&self) -> f64 {
        self.t2 - self.screen.t1
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        let p = &self.packet;
        gaussian_packet(self.grid, p.x0, p.p0, p.sigma0, &self.params)
    }

    pub fn pixels(&self) -> Result<Vec<DetectorPixel>> {
        pixel_tiling(&self.grid, self.pixel_sites)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t2.is_finite() && self.t2 > self.screen.t1) {
            return Err(Error::InvalidParameter {
                name: "t2",
                value: self.t2,
                reason: "must exceed t1",
            });
        }
        self.initial_state()?;
        self.screen.apertures(&self.grid)?;
        self.pixels()?;
        if let Some(reg) = self.register {
            if !(0.0..=PI).contains(&reg.theta) {
                return Err(Error::InvalidParameter {
                    name: "register_theta",
                    value: reg.theta,
                    reason: "must lie in [0, π]",
                });
            }
            crate::purification::ScreenRegister::for_screen(
                self.grid,
                &self.screen,
                reg.k,
                reg.theta,
            )?;
        }
        Ok(())
    }

    /// `U₁ψ₀`, with guard bands enforced.
    pub fn state_at_slits(&self) -> Result<StateVector> {
        let psi0 = self.initial_state()?;
        FreeEvolution::new(self.grid, self.params).evolve(&psi0, self.screen.t1)
    }
}

/// Conditional detection statistics `p(2|1)` over a pixel tiling, with the
/// analytic overlay and summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FringeReport {
    pub positions: Vec<f64>,
    pub p_cond: Vec<f64>,
    pub p_analytic: Vec<f64>,
    /// Slit-passage probability `p(1)`.
    pub p1: f64,
    /// Separation of the slit sites actually used.
    pub separation: f64,
    pub flight_time: f64,
    /// Half-width of the analysis window (five analytic spacings).
    pub window: f64,
    /// Interpolated fringe maxima inside the window.
    pub maxima: Vec<f64>,
    /// Least-squares spacing of `maxima`; `None` with fewer than two.
    pub spacing: Option<f64>,
    pub analytic_spacing: f64,
    pub visibility: f64,
    pub correlation: f64,
}

/// `p(2|1)` over the scenario's pixel tiling via the projective pipeline
/// `P₂ U₂ P₁ U₁ ψ₀`.
pub fn conditional_fringe(scenario: &Scenario) -> Result<FringeReport> {
    scenario.validate()?;
    let at_slits = scenario.state_at_slits()?;
    let mut passed = at_slits.clone();
    let keep = scenario.screen.aperture_indices(&scenario.grid)?;
    let mut mask = vec![false; scenario.grid.n()];
    keep.iter().for_each(|&j| mask[j] = true);
    passed
        .amps_mut()
        .iter_mut()
        .zip(&mask)
        .filter(|(_, &m)| !m)
        .for_each(|(z, _)| *z = C64::new(0.0, 0.0));
    let p1 = passed.norm_sq();
    detect(scenario, &passed, p1)
}

/// The detection pattern with no slit screen at all: `P₂ U₂ U₁ ψ₀`.
pub fn detect_free(scenario: &Scenario) -> Result<FringeReport> {
    scenario.validate()?;
    let at_slits = scenario.state_at_slits()?;
    detect(scenario, &at_slits, 1.0)
}

/// Propagates an (unnormalized) post-slit state to the detector and builds
/// the report with `p(2|1) = p(1,2; pixel)/p1`.
pub(crate) fn detect(scenario: &Scenario, passed: &StateVector, p1: f64) -> Result<FringeReport> {
    if !(p1 >= P1_CUTOFF) {
        return Err(Error::VanishingProbability {
            what: "slit-passage",
            p: p1,
            cutoff: P1_CUTOFF,
        });
    }
    let grid = scenario.grid;
    let at_screen =
        FreeEvolution::new(grid, scenario.params).propagate(passed, scenario.flight_time())?;
    let dx = grid.dx();
    let pixels = scenario.pixels()?;
    let mut positions = Vec::with_capacity(pixels.len());
    let mut p_cond = Vec::with_capacity(pixels.len());
    for px in &pixels {
        let p12: f64 = px
            .sites(&grid)?
            .map(|j| at_screen.amps()[j].norm_sqr())
            .sum::<f64>()
            * dx;
        positions.push(px.s);
        p_cond.push(p12 / p1);
    }
    let separation = scenario.screen.realized_separation(&grid)?;
    FringeReport::analyze(
        positions,
        p_cond,
        p1,
        separation,
        scenario.flight_time(),
        &scenario.params,
    )
}

impl FringeReport {
    /// Attaches the analytic overlay and fringe statistics to a computed
    /// pattern. Statistics use the window `|s| ≤ 5·Λ`, `Λ = 2πħT/(m·d)`.
    pub fn analyze(
        positions: Vec<f64>,
        p_cond: Vec<f64>,
        p1: f64,
        separation: f64,
        flight_time: f64,
        params: &PhysParams,
    ) -> Result<Self> {
        let p_analytic = positions
            .iter()
            .map(|&s| analytic_fringe(s, separation, flight_time, params))
            .collect::<Result<Vec<_>>>()?;
        let spacing_law = analytic_spacing(separation, flight_time, params);
        let window = 5.0 * spacing_law;
        let idx: Vec<usize> = (0..positions.len())
            .filter(|&i| positions[i].abs() <= window)
            .collect();
        let xs: Vec<f64> = idx.iter().map(|&i| positions[i]).collect();
        let ps: Vec<f64> = idx.iter().map(|&i| p_cond[i]).collect();
        let an: Vec<f64> = idx.iter().map(|&i| p_analytic[i]).collect();

        let maxima = fringe_maxima(&xs, &ps);
        let spacing = fitted_spacing(&maxima);
        let visibility = fringe_contrast(&xs, &ps, spacing_law);
        let correlation = pearson(&ps, &an);
        Ok(Self {
            positions,
            p_cond,
            p_analytic,
            p1,
            separation,
            flight_time,
            window,
            maxima,
            spacing,
            analytic_spacing: spacing_law,
            visibility,
            correlation,
        })
    }

    pub fn total_probability(&self) -> f64 {
        self.p_cond.iter().sum()
    }
}

/// Fringe maxima by hysteresis: a fringe starts when the pattern rises above
/// 60% of its maximum and ends when it drops below 40%. Its peak is the
/// vertex of a least-squares parabola through every sample of the fringe
/// above the 60% level, which averages out lattice-scale ripple.
pub fn fringe_maxima(xs: &[f64], ps: &[f64]) -> Vec<f64> {
    let top = ps.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return Vec::new();
    }
    let (hi, lo) = (0.6 * top, 0.4 * top);
    let mut fringes = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &p) in ps.iter().enumerate() {
        match start {
            None if p > hi => start = Some(i),
            Some(s) if p < lo => {
                fringes.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    fringes
        .into_iter()
        .filter_map(|r| {
            let idx: Vec<usize> = r.filter(|&i| ps[i] > hi).collect();
            let best = *idx.iter().max_by(|&&a, &&b| ps[a].total_cmp(&ps[b]))?;
            Some(parabola_vertex(xs, ps, &idx).unwrap_or(xs[best]))
        })
        .collect()
}

/// Vertex of the least-squares parabola through `(xs[i], ps[i])`; `None`
/// unless it opens downward and the vertex lies within the samples.
fn parabola_vertex(xs: &[f64], ps: &[f64], idx: &[usize]) -> Option<f64> {
    if idx.len() < 3 {
        return None;
    }
    let n = idx.len() as f64;
    let x0 = idx.iter().map(|&i| xs[i]).sum::<f64>() / n;
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut atb = nalgebra::Vector3::<f64>::zeros();
    for &i in idx {
        let u = xs[i] - x0;
        let row = nalgebra::Vector3::new(1.0, u, u * u);
        ata += row * row.transpose();
        atb += row * ps[i];
    }
    let c = ata.lu().solve(&atb)?;
    let lo = idx.iter().map(|&i| xs[i]).fold(f64::INFINITY, f64::min);
    let hi = idx.iter().map(|&i| xs[i]).fold(f64::NEG_INFINITY, f64::max);
    let v = x0 - c[1] / (2.0 * c[2]);
    (c[2] < 0.0 && v >= lo && v <= hi).then_some(v)
}

/// Least-squares slope of peak position against peak index.
pub fn fitted_spacing(maxima: &[f64]) -> Option<f64> {
    let n = maxima.len();
    if n < 2 {
        return None;
    }
    let mean_i = (n - 1) as f64 / 2.0;
    let mean_x = maxima.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, x) in maxima.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxy += di * (x - mean_x);
        sxx += di * di;
    }
    Some(sxy / sxx)
}

/// Fringe contrast at the analytic period: `2|Σ p e^{−2πis/Λ}| / Σ p`.
///
/// For a pattern `Ī(1 + V cos(2πs/Λ))` sampled over whole periods this is
/// `V = (I_max − I_min)/(I_max + I_min)`; a smooth envelope without fringes
/// gives a value near zero.
pub fn fringe_contrast(xs: &[f64], ps: &[f64], period: f64) -> f64 {
    let q = 2.0 * PI / period;
    let total: f64 = ps.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let harmonic: C64 = xs
        .iter()
        .zip(ps)
        .map(|(&s, &p)| C64::from_polar(p, -q * s))
        .sum();
    2.0 * harmonic.norm() / total
}

/// Pearson correlation; zero when either input has no variance.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    if n == 0 {
        return 0.0;
    }
    let ma = a[..n].iter().sum::<f64>() / n as f64;
    let mb = b[..n].iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (da, db) = (a[i] - ma, b[i] - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::free_unitary;
    use crate::lattice::{gaussian_packet, make_grid, max_abs};
    use approx::assert_abs_diff_eq;

    fn unit_grid() -> Grid {
        make_grid(16, -8.0, 8.0).unwrap()
    }

    #[test]
    fn point_slits_give_rank_two_projector() {
        let g = unit_grid();
        let screen = SlitScreen::new(2.0, 0.0, 0.0).unwrap();
        let p = slit_projector(g, &screen).unwrap();
        assert_eq!(p.trace().re, 2.0);
        let sq = p.compose(&p).unwrap();
        assert_eq!(sq.matrix(), p.matrix());
        assert!(p.is_projector(1e-15));
    }

    #[test]
    fn wide_slits_count_sites() {
        let g = unit_grid();
        let screen = SlitScreen::new(8.0, 3.0, 0.0).unwrap();
        let p = slit_projector(g, &screen).unwrap();
        assert_eq!(p.trace().re, 6.0);
    }

    #[test]
    fn projector_annihilates_distant_packet() {
        let g = make_grid(256, -32.0, 32.0).unwrap();
        let screen = SlitScreen::new(4.0, 0.0, 0.0).unwrap();
        let psi = gaussian_packet(g, 20.0, 0.0, 1.0, &PhysParams::default()).unwrap();
        let out = slit_projector(g, &screen).unwrap().apply(&psi).unwrap();
        assert!(out.norm_sq() < 1e-40);
    }

    #[test]
    fn slit_errors() {
        let g = unit_grid();
        let off = SlitScreen::new(40.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            slit_projector(g, &off),
            Err(Error::OffGrid { .. })
        ));
        let overlapping = SlitScreen::new(2.0, 4.0, 0.0).unwrap();
        assert!(matches!(
            slit_projector(g, &overlapping),
            Err(Error::Aperture(_))
        ));
        assert!(SlitScreen::new(-1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pixels() {
        let g = unit_grid();
        let p = pixel_projector(g, &DetectorPixel::site(&g, 0.0)).unwrap();
        assert_eq!(p.trace().re, 1.0);

        let a = pixel_projector(
            g,
            &DetectorPixel {
                s: -2.0,
                width: 2.0,
            },
        )
        .unwrap();
        let b = pixel_projector(g, &DetectorPixel { s: 1.5, width: 3.0 }).unwrap();
        assert!(max_abs(a.compose(&b).unwrap().matrix()) == 0.0);

        for spp in [1, 2, 4] {
            let tiles = pixel_tiling(&g, spp).unwrap();
            let mut sum = LinearOperator::zeros(g);
            for t in &tiles {
                sum = sum.add(&pixel_projector(g, t).unwrap()).unwrap();
            }
            assert_eq!(sum.matrix(), LinearOperator::identity(g).matrix());
        }
        assert!(pixel_tiling(&g, 3).is_err());
        assert!(DetectorPixel {
            s: 30.0,
            width: 1.0
        }
        .sites(&g)
        .is_err());
    }

    #[test]
    fn trivial_sequential_cases() {
        let g = make_grid(64, -16.0, 16.0).unwrap();
        let params = PhysParams::default();
        let rho = gaussian_packet(g, 0.5, 0.3, 1.0, &params)
            .unwrap()
            .to_density();
        let u1 = free_unitary(g, &params, 0.7);
        let u2 = free_unitary(g, &params, 1.3);
        let id = LinearOperator::identity(g);
        let zero = LinearOperator::zeros(g);
        for form in SequentialForm::ALL {
            let p = sequential_probability(form, &rho, &u1, &id, &u2, &id).unwrap();
            assert_abs_diff_eq!(p.re, 1.0, epsilon = 1e-12);
            assert!(p.im.abs() < 1e-12);
            let p = sequential_probability(form, &rho, &u1, &zero, &u2, &id).unwrap();
            assert_eq!(p.re, 0.0);
        }
    }

    #[test]
    fn sequential_rejects_bad_operators() {
        let g = make_grid(64, -16.0, 16.0).unwrap();
        let rho = gaussian_packet(g, 0.0, 0.0, 1.0, &PhysParams::default())
            .unwrap()
            .to_density();
        let id = LinearOperator::identity(g);
        let twice = id.scale(C64::new(2.0, 0.0));
        assert!(matches!(
            p_seq_schrodinger(&rho, &twice, &id, &id, &id),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            p_seq_heisenberg(&rho, &id, &twice, &id, &id),
            Err(Error::NotProjector { .. })
        ));
    }

    #[test]
    fn rank_one_trivial_cases() {
        let g = make_grid(128, -16.0, 16.0).unwrap();
        let psi = gaussian_packet(g, 0.0, 0.0, 1.0, &PhysParams::default()).unwrap();
        assert_abs_diff_eq!(p_rank_one(&psi, &psi, &psi).unwrap(), 1.0, epsilon = 1e-12);
        let a = StateVector::point(g, 3);
        let b = StateVector::point(g, 40);
        assert_eq!(p_rank_one(&a, &b, &b).unwrap(), 0.0);
        let mut unnormalized = psi.clone();
        unnormalized.amps_mut().mapv_inplace(|z| z * 2.0);
        assert!(matches!(
            p_rank_one(&unnormalized, &psi, &psi),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn analytic_fringe_values() {
        let p = PhysParams::default();
        assert_eq!(analytic_fringe(0.0, 2.0, 10.0, &p).unwrap(), 1.0);
        let null = PI * 10.0 / 2.0;
        assert!(analytic_fringe(null, 2.0, 10.0, &p).unwrap() < 1e-30);
        assert_abs_diff_eq!(analytic_spacing(2.0, 10.0, &p), 10.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(
            analytic_fringe(10.0 * PI, 2.0, 10.0, &p).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(analytic_fringe(1.0, 2.0, 0.0, &p), Err(Error::ZeroTime));
    }

    #[test]
    fn contrast_and_correlation_helpers() {
        let xs: Vec<f64> = (0..400).map(|i| -20.0 + 0.1 * i as f64).collect();
        let period = 4.0;
        let cos2: Vec<f64> = xs.iter().map(|x| (PI * x / period).cos().powi(2)).collect();
        assert_abs_diff_eq!(fringe_contrast(&xs, &cos2, period), 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pearson(&cos2, &cos2), 1.0, epsilon = 1e-12);
        let flat = vec![1.0; xs.len()];
        assert!(fringe_contrast(&xs, &flat, period) < 1e-9);
        assert_eq!(pearson(&flat, &cos2), 0.0);

        let maxima = fringe_maxima(&xs, &cos2);
        let spacing = fitted_spacing(&maxima).unwrap();
        assert_abs_diff_eq!(spacing, period, epsilon = 1e-3);
    }

    #[test]
    fn maxima_ignore_alternating_ripple() {
        let xs: Vec<f64> = (-400..=400).map(|i| 0.25 * i as f64).collect();
        let period = 31.0;
        let rippled: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                (PI * x / period).cos().powi(2) * (1.0 + 0.025 * sign)
            })
            .collect();
        let maxima = fringe_maxima(&xs, &rippled);
        let central =
            maxima.iter().cloned().fold(
                f64::INFINITY,
                |m, v| {
                    if v.abs() < m.abs() {
                        v
                    } else {
                        m
                    }
                },
            );
        assert!(central.abs() < 1e-9, "{central}");
        assert_abs_diff_eq!(fitted_spacing(&maxima).unwrap(), period, epsilon = 1e-2);
    }

    fn small_scenario() -> Scenario {
        Scenario {
            grid: make_grid(1024, -128.0, 128.0).unwrap(),
            params: PhysParams::default(),
            packet: PacketSpec {
                x0: 0.0,
                p0: 0.0,
                sigma0: 1.5,
            },
            screen: SlitScreen::new(4.0, 0.0, 4.0).unwrap(),
            t2: 14.0,
            pixel_sites: 1,
            register: None,
        }
    }

    #[test]
    fn conditional_fringe_is_normalized_and_parity_symmetric() {
        let sc = small_scenario();
        let rep = conditional_fringe(&sc).unwrap();
        assert_abs_diff_eq!(rep.total_probability(), 1.0, epsilon = 1e-9);
        assert!(rep.p_cond.iter().all(|&p| p >= 0.0));
        for j in 0..sc.grid.n() {
            let m = sc.grid.mirror_index(j);
            assert!((rep.p_cond[j] - rep.p_cond[m]).abs() <= 1e-9);
        }
    }

    #[test]
    fn vanishing_passage_probability_is_an_error() {
        let mut sc = small_scenario();
        sc.packet.x0 = -80.0;
        sc.screen.t1 = 0.0;
        assert!(matches!(
            conditional_fringe(&sc),
            Err(Error::VanishingProbability { .. })
        ));
    }

    #[test]
    fn detection_time_must_follow_slits() {
        let mut sc = small_scenario();
        sc.t2 = sc.screen.t1;
        assert!(matches!(
            conditional_fringe(&sc),
            Err(Error::InvalidParameter { name: "t2", .. })
        ));
    }
}
