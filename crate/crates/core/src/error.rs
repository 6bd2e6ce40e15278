use thiserror::Error;

/// Everything that can go wrong while building or evaluating a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid size {0} is not a power of two >= 8")]
    GridSize(usize),

    #[error("degenerate interval [{x_min}, {x_max}]")]
    DegenerateInterval { x_min: f64, x_max: f64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("packet width {sigma0} is narrower than 2 dx = {min}")]
    PacketTooNarrow { sigma0: f64, min: f64 },

    #[error("probability mass {mass:e} inside the guard band exceeds {limit:e}")]
    GuardBand { mass: f64, limit: f64 },

    #[error("momentum mass {mass:e} near the lattice band edge exceeds {limit:e}")]
    MomentumBand { mass: f64, limit: f64 },

    #[error("operands live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{what} is not unitary (max deviation {deviation:e})")]
    NotUnitary { what: &'static str, deviation: f64 },

    #[error("{what} is not a projector (max deviation {deviation:e})")]
    NotProjector { what: &'static str, deviation: f64 },

    #[error("{what} is not normalized (norm^2 = {norm_sq})")]
    NotNormalized { what: &'static str, norm_sq: f64 },

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("evolution time must be nonzero")]
    ZeroTime,

    #[error("{what} at x = {position} is outside the grid interior")]
    OffGrid { what: &'static str, position: f64 },

    #[error("invalid aperture: {0}")]
    Aperture(String),

    #[error("invalid screen register: {0}")]
    Register(String),

    #[error("{what} probability {p:e} is below the cutoff {cutoff:e}")]
    VanishingProbability {
        what: &'static str,
        p: f64,
        cutoff: f64,
    },

    #[error("uncertainty product {product} violates the Robertson bound {bound}")]
    Uncertainty { product: f64, bound: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
