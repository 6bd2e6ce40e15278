//! Ancilla-screen realization of the slit measurement.
//!
//! The screen is a register of `K` two-level pointers, one per cell of the
//! grid. A particle at site `j` rotates the pointer of its cell by
//! `e^{−iθX}`, `|0⟩ → cos θ|0⟩ − i sin θ|1⟩`; cells holding a slit have
//! `θ = 0`. Post-selecting the register on `|0…0⟩` then acts on the
//! particle as the slit projector when every other cell has `θ = π/2`.
//!
//! Cells are contiguous arcs of the periodic grid, so a cell may wrap from
//! the last site to the first.

use std::f64::consts::FRAC_PI_2;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::lattice::{DensityOperator, Grid, StateVector, C64};
use crate::measurement::{detect, FringeReport, Scenario, SlitScreen, P1_CUTOFF};

pub const MAX_CELLS: usize = 10;

/// Normalization tolerance for joint states.
pub const JOINT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenRegister {
    grid: Grid,
    cuts: Vec<usize>,
    theta: Vec<f64>,
    cell_of: Vec<u8>,
}

impl ScreenRegister {
    /// Register whose cell `c` starts at `cuts[c]` and runs up to the next
    /// cut (wrapping past the end of the grid for the last cell).
    ///
    /// Slit sites must sit in cells with `θ = 0`; every other cell needs
    /// `θ ∈ [0, π]`.
    pub fn new(
        grid: Grid,
        cuts: Vec<usize>,
        theta: Vec<f64>,
        slit_sites: &[usize],
    ) -> Result<Self> {
        let k = cuts.len();
        if !(1..=MAX_CELLS).contains(&k) {
            return Err(Error::Register(format!("K = {k} not in 1..={MAX_CELLS}")));
        }
        if theta.len() != k {
            return Err(Error::Dimension {
                expected: k,
                found: theta.len(),
            });
        }
        if cuts.windows(2).any(|w| w[0] >= w[1]) || cuts[k - 1] >= grid.n() {
            return Err(Error::Register(
                "cell boundaries must be strictly increasing grid indices".into(),
            ));
        }
        let n = grid.n();
        let mut cell_of = vec![(k - 1) as u8; n];
        for c in 0..k - 1 {
            cell_of[cuts[c]..cuts[c + 1]].fill(c as u8);
        }
        for (c, &th) in theta.iter().enumerate() {
            if !(0.0..=std::f64::consts::PI).contains(&th) {
                return Err(Error::Register(format!(
                    "cell {c}: pulse area {th} outside [0, π]"
                )));
            }
        }
        for &j in slit_sites {
            let c = *cell_of
                .get(j)
                .ok_or_else(|| Error::Register(format!("slit site {j} outside the grid")))?
                as usize;
            if theta[c] != 0.0 {
                return Err(Error::Register(format!(
                    "cell {c} holds slit site {j} but has θ = {}",
                    theta[c]
                )));
            }
        }
        Ok(Self {
            grid,
            cuts,
            theta,
            cell_of,
        })
    }

    /// `K`-cell register for a slit screen: each open aperture is its own
    /// `θ = 0` cell and the remaining arcs are split as evenly as possible
    /// into the other cells, all with pulse area `theta`.
    pub fn for_screen(grid: Grid, screen: &SlitScreen, k: usize, theta: f64) -> Result<Self> {
        let apertures = screen.apertures(&grid)?;
        let n = grid.n();
        // arcs between consecutive apertures around the ring
        let mut arcs = Vec::new();
        for (i, a) in apertures.iter().enumerate() {
            let next = &apertures[(i + 1) % apertures.len()];
            let start = a.end;
            let end = if next.start > a.end {
                next.start
            } else {
                next.start + n
            };
            if end > start {
                arcs.push((start, end));
            }
        }
        let min_k = apertures.len() + arcs.len();
        if k < min_k || k > MAX_CELLS {
            return Err(Error::Register(format!(
                "K = {k} cannot isolate {} slit(s); need {min_k}..={MAX_CELLS} cells",
                apertures.len()
            )));
        }
        let spare = k - min_k;
        let mut pieces: Vec<(usize, f64)> = apertures.iter().map(|a| (a.start, 0.0)).collect();
        for (i, &(start, end)) in arcs.iter().enumerate() {
            let parts = 1 + spare / arcs.len() + usize::from(i < spare % arcs.len());
            let len = end - start;
            if parts > len {
                break;
            }
            for p in 0..parts {
                pieces.push(((start + p * len / parts) % n, theta));
            }
        }
        if pieces.len() != k {
            return Err(Error::Register(format!(
                "cannot split the off-slit arcs into {k} cells"
            )));
        }
        pieces.sort_by_key(|&(c, _)| c);
        let (cuts, thetas) = pieces.into_iter().unzip();
        Self::new(grid, cuts, thetas, &screen.aperture_indices(&grid)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.cuts.len()
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn cell(&self, j: usize) -> usize {
        self.cell_of[j] as usize
    }

    /// Number of register basis states, `2^K`.
    pub fn dim(&self) -> usize {
        1 << self.k()
    }
}

/// Particle ⊗ register amplitudes, laid out as `index = b·n + j` for
/// register basis state `b` (bit `c` is the pointer of cell `c`) and site `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    grid: Grid,
    k: usize,
    amps: Array1<C64>,
}

impl JointState {
    pub fn new(grid: Grid, k: usize, amps: Array1<C64>) -> Result<Self> {
        let expected = grid.n() << k;
        if amps.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: amps.len(),
            });
        }
        let s = Self { grid, k, amps };
        let norm_sq = s.norm_sq();
        if (norm_sq - 1.0).abs() > JOINT_NORM_TOL {
            return Err(Error::NotNormalized {
                what: "joint state",
                norm_sq,
            });
        }
        Ok(s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Particle amplitudes attached to register state `b`.
    pub fn block(&self, b: usize) -> ndarray::ArrayView1<'_, C64> {
        let n = self.grid.n();
        self.amps.slice(ndarray::s![b * n..(b + 1) * n])
    }

    /// Probability of finding the register in `b`.
    pub fn register_probability(&self, b: usize) -> f64 {
        self.block(b).iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    /// Reduced particle state, traced over the register.
    pub fn particle_marginal(&self) -> Result<DensityOperator> {
        let n = self.grid.n();
        let mut rho = Array2::<C64>::zeros((n, n));
        for b in 0..1usize << self.k {
            let v = self.block(b);
            for i in 0..n {
                if v[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    rho[[i, j]] += v[i] * v[j].conj();
                }
            }
        }
        DensityOperator::new(self.grid, rho)
    }

    /// Reduced register state, `2^K × 2^K`, traced over the particle.
    pub fn register_marginal(&self) -> Array2<C64> {
        let d = 1usize << self.k;
        let dx = self.grid.dx();
        Array2::from_shape_fn((d, d), |(a, b)| {
            self.block(a)
                .iter()
                .zip(self.block(b).iter())
                .map(|(x, y)| x * y.conj())
                .sum::<C64>()
                * dx
        })
    }
}

/// `ψ ⊗ |0…0⟩`.
pub fn embed(psi: &StateVector, reg: &ScreenRegister) -> Result<JointState> {
    if psi.grid() != reg.grid() {
        return Err(Error::GridMismatch);
    }
    psi.check_normalized("particle state", JOINT_NORM_TOL)?;
    let n = reg.grid().n();
    let mut amps = Array1::zeros(n << reg.k());
    amps.slice_mut(ndarray::s![..n]).assign(psi.amps());
    JointState::new(*reg.grid(), reg.k(), amps)
}

/// `e^{−iH_int τ/ħ}` with `H_int = Σ_j Θ(j) |x_j⟩⟨x_j| ⊗ X_{cell(j)}`.
///
/// Block diagonal in the particle position: site `j` only rotates the
/// pointer of its own cell.
#[derive(Debug, Clone)]
pub struct InteractionUnitary {
    reg: ScreenRegister,
}

pub fn interaction_unitary(reg: &ScreenRegister) -> InteractionUnitary {
    InteractionUnitary { reg: reg.clone() }
}

impl InteractionUnitary {
    pub fn register(&self) -> &ScreenRegister {
        &self.reg
    }

    pub fn apply(&self, joint: &JointState) -> Result<JointState> {
        if joint.grid() != self.reg.grid() || joint.k() != self.reg.k() {
            return Err(Error::GridMismatch);
        }
        let n = self.reg.grid().n();
        let mut out = joint.amps().clone();
        for j in 0..n {
            let c = self.reg.cell(j);
            let th = self.reg.theta()[c];
            if th == 0.0 {
                continue;
            }
            let (cs, sn) = (th.cos(), th.sin());
            let bit = 1usize << c;
            for b in (0..self.reg.dim()).filter(|b| b & bit == 0) {
                let (i0, i1) = (b * n + j, (b | bit) * n + j);
                let (a0, a1) = (out[i0], out[i1]);
                out[i0] = a0 * cs - C64::new(0.0, sn) * a1;
                out[i1] = a1 * cs - C64::new(0.0, sn) * a0;
            }
        }
        Ok(JointState {
            grid: joint.grid,
            k: joint.k,
            amps: out,
        })
    }

    /// Dense `(n·2^K)²` matrix, for checking small cases.
    pub fn to_dense(&self) -> Array2<C64> {
        let n = self.reg.grid().n();
        let d = self.reg.dim();
        let mut m = Array2::zeros((n * d, n * d));
        for j in 0..n {
            let th = self.reg.theta()[self.reg.cell(j)];
            let bit = 1usize << self.reg.cell(j);
            let (cs, sn) = (C64::new(th.cos(), 0.0), C64::new(0.0, -th.sin()));
            for b in 0..d {
                m[[b * n + j, b * n + j]] = cs;
                m[[(b ^ bit) * n + j, b * n + j]] = sn;
            }
        }
        m
    }
}

/// Keeps the `|0…0⟩` register block: returns the renormalized particle state
/// and the probability of that outcome.
pub fn postselect_screen_zero(joint: &JointState) -> Result<(StateVector, f64)> {
    let p = joint.register_probability(0);
    if !(p >= P1_CUTOFF) {
        return Err(Error::VanishingProbability {
            what: "screen post-selection",
            p,
            cutoff: P1_CUTOFF,
        });
    }
    let state = StateVector::new(*joint.grid(), joint.block(0).to_owned())?;
    Ok((state.normalized(), p))
}

/// The conditional fringe with the slits realized by the ancilla screen:
/// embed `U₁ψ₀`, interact, post-select the register on `|0…0⟩`, then
/// propagate and detect as the projective pipeline does.
pub fn purified_double_slit(scenario: &Scenario, reg: &ScreenRegister) -> Result<FringeReport> {
    scenario.validate()?;
    let at_slits = scenario.state_at_slits()?;
    let joint = interaction_unitary(reg).apply(&embed(&at_slits, reg)?)?;
    let p = joint.register_probability(0);
    let passed = StateVector::new(scenario.grid, joint.block(0).to_owned())?;
    detect(scenario, &passed, p)
}

/// Register for `scenario`, defaulting to four cells at `θ = π/2` (two
/// when a slit is closed).
pub fn scenario_register(scenario: &Scenario) -> Result<ScreenRegister> {
    let (k, theta) = match scenario.register {
        Some(spec) => (spec.k, spec.theta),
        None => {
            let k = if scenario.screen.open == crate::measurement::Openings::Both {
                4
            } else {
                2
            };
            (k, FRAC_PI_2)
        }
    };
    ScreenRegister::for_screen(scenario.grid, &scenario.screen, k, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{gaussian_packet, make_grid, max_abs, PhysParams};
    use crate::measurement::{conditional_fringe, slit_projector, Openings};
    use approx::assert_abs_diff_eq;

    fn grid() -> Grid {
        make_grid(32, -8.0, 8.0).unwrap()
    }

    fn screen() -> SlitScreen {
        SlitScreen::new(4.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn ring_cells_isolate_slits() {
        let g = grid();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        assert_eq!(reg.k(), 4);
        let slits = screen().aperture_indices(&g).unwrap();
        for j in 0..g.n() {
            let th = reg.theta()[reg.cell(j)];
            assert_eq!(th == 0.0, slits.contains(&j), "site {j}");
        }
        for k in 5..=10 {
            let reg = ScreenRegister::for_screen(g, &screen(), k, 1.0).unwrap();
            assert_eq!(reg.k(), k);
        }
        assert!(ScreenRegister::for_screen(g, &screen(), 3, 1.0).is_err());
        let one = screen().with_open(Openings::Left);
        assert_eq!(ScreenRegister::for_screen(g, &one, 2, 1.0).unwrap().k(), 2);
    }

    #[test]
    fn register_validation() {
        let g = grid();
        let slits = screen().aperture_indices(&g).unwrap();
        assert!(ScreenRegister::new(g, vec![0, 16], vec![1.0, 1.0], &slits).is_err());
        assert!(ScreenRegister::new(g, vec![], vec![], &[]).is_err());
        assert!(ScreenRegister::new(g, vec![4, 2], vec![0.0, 0.0], &[]).is_err());
        assert!(ScreenRegister::new(g, vec![0], vec![4.0], &[]).is_err());
        let cuts: Vec<usize> = (0..11).collect();
        assert!(ScreenRegister::new(g, cuts, vec![0.0; 11], &[]).is_err());
        assert!(ScreenRegister::new(g, vec![0, 16], vec![0.0, 0.0], &slits).is_ok());
    }

    #[test]
    fn zero_pulse_is_identity() {
        let g = grid();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, 0.0).unwrap();
        let u = interaction_unitary(&reg).to_dense();
        let eye = Array2::<C64>::eye(u.nrows());
        assert_eq!(max_abs(&(&u - &eye)), 0.0);
    }

    #[test]
    fn dense_interaction_is_unitary_and_local() {
        let g = make_grid(16, -4.0, 4.0).unwrap();
        let sc = SlitScreen::new(2.0, 0.0, 0.0).unwrap();
        let reg = ScreenRegister::for_screen(g, &sc, 6, 0.9).unwrap();
        let u = interaction_unitary(&reg).to_dense();
        let d = u.nrows();
        let uu = u.t().mapv(|z| z.conj()).dot(&u);
        assert!(max_abs(&(&uu - &Array2::<C64>::eye(d))) <= 1e-12);
        // any diagonal f(x) ⊗ 1
        let f = Array2::from_shape_fn((d, d), |(a, b)| {
            if a == b {
                C64::new(((a % 16) as f64).sin(), (a % 16) as f64)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        assert!(max_abs(&(u.dot(&f) - f.dot(&u))) <= 1e-12);
    }

    #[test]
    fn structured_apply_matches_dense() {
        let g = make_grid(16, -4.0, 4.0).unwrap();
        let sc = SlitScreen::new(2.0, 0.0, 0.0).unwrap();
        let reg = ScreenRegister::for_screen(g, &sc, 5, 1.1).unwrap();
        let psi = StateVector::from_fn(g, |x| C64::new((-x * x / 4.0).exp(), 0.3 * x)).normalized();
        let joint = embed(&psi, &reg).unwrap();
        let fast = interaction_unitary(&reg).apply(&joint).unwrap();
        let slow = interaction_unitary(&reg).to_dense().dot(joint.amps());
        assert!(fast
            .amps()
            .iter()
            .zip(&slow)
            .all(|(a, b)| (a - b).norm() < 1e-14));
    }

    #[test]
    fn single_site_pointer_flip() {
        let g = grid();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        let j = 28;
        let c = reg.cell(j);
        assert_eq!(reg.theta()[c], FRAC_PI_2);
        let out = interaction_unitary(&reg)
            .apply(&embed(&StateVector::point(g, j), &reg).unwrap())
            .unwrap();
        let amp = out.block(1 << c)[j] * g.dx().sqrt();
        assert_abs_diff_eq!(amp.norm(), 1.0, epsilon = 1e-15);
        assert!(out.register_probability(0) < 1e-30);
    }

    #[test]
    fn slit_site_leaves_screen_unchanged() {
        let g = grid();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        let j = g.nearest_index(2.0).unwrap();
        let joint = embed(&StateVector::point(g, j), &reg).unwrap();
        let out = interaction_unitary(&reg).apply(&joint).unwrap();
        assert_eq!(out, joint);
        assert_eq!(out.block(0)[j] * g.dx().sqrt(), C64::new(1.0, 0.0));
    }

    #[test]
    fn embedding_marginals() {
        let g = make_grid(64, -16.0, 16.0).unwrap();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        let psi = gaussian_packet(g, 0.0, 0.0, 1.0, &PhysParams::default()).unwrap();
        let joint = embed(&psi, &reg).unwrap();
        assert_abs_diff_eq!(joint.norm_sq(), 1.0, epsilon = 1e-14);
        let r = joint.register_marginal();
        assert_abs_diff_eq!(r[[0, 0]].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            r.iter().map(|z| z.norm()).sum::<f64>(),
            1.0,
            epsilon = 1e-14
        );
        let rho = joint.particle_marginal().unwrap();
        assert!(max_abs(&(rho.kernel() - psi.to_density().kernel())) < 1e-14);
        let (back, p) = postselect_screen_zero(&joint).unwrap();
        assert_eq!(p, joint.norm_sq());
        assert!(back.distance(&psi).unwrap() < 1e-14);
    }

    #[test]
    fn postselection_matches_projector() {
        let g = make_grid(64, -16.0, 16.0).unwrap();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        let psi = gaussian_packet(g, 0.4, 0.5, 1.0, &PhysParams::default()).unwrap();
        let out = interaction_unitary(&reg)
            .apply(&embed(&psi, &reg).unwrap())
            .unwrap();
        let (state, p) = postselect_screen_zero(&out).unwrap();
        let projected = slit_projector(g, &screen()).unwrap().apply(&psi).unwrap();
        assert_abs_diff_eq!(p, projected.norm_sq(), epsilon = 1e-10);
        assert!(state.trace_distance(&projected.normalized()).unwrap() < 1e-10);
        let rest: f64 = (1..reg.dim()).map(|b| out.register_probability(b)).sum();
        assert_abs_diff_eq!(p + rest, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn postselection_fails_off_slits() {
        let g = grid();
        let reg = ScreenRegister::for_screen(g, &screen(), 4, FRAC_PI_2).unwrap();
        let psi = StateVector::point(g, 30);
        let out = interaction_unitary(&reg)
            .apply(&embed(&psi, &reg).unwrap())
            .unwrap();
        assert!(matches!(
            postselect_screen_zero(&out),
            Err(Error::VanishingProbability { .. })
        ));
    }

    #[test]
    fn purified_fringe_equals_projective() {
        let sc = Scenario {
            grid: make_grid(512, -64.0, 64.0).unwrap(),
            screen: SlitScreen::new(4.0, 0.0, 3.0).unwrap(),
            t2: 12.0,
            packet: crate::measurement::PacketSpec {
                x0: 0.3,
                p0: 0.1,
                sigma0: 1.5,
            },
            ..Scenario::reference()
        };
        let reg = scenario_register(&sc).unwrap();
        let a = purified_double_slit(&sc, &reg).unwrap();
        let b = conditional_fringe(&sc).unwrap();
        assert_abs_diff_eq!(a.p1, b.p1, epsilon = 1e-12);
        for (x, y) in a.p_cond.iter().zip(&b.p_cond) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}
