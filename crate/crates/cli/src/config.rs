//! Flat `key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Numbers are decimal with an optional exponent, lists are comma-separated.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use fringebench_core::dynamics::time_of_flight;
use fringebench_core::locality::Window;
use fringebench_core::{
    Error, FreeEvolution, Grid, Openings, PacketSpec, PhysParams, RegisterSpec, Scenario,
    SlitScreen,
};

use crate::error::{CliError, CliResult};

pub const SCENARIO_KEYS: &[&str] = &[
    "n",
    "x_min",
    "x_max",
    "hbar",
    "mass",
    "x0",
    "p0",
    "sigma0",
    "d",
    "slit_width",
    "slits",
    "t1",
    "t2",
    "L",
    "p_y",
    "pixel_width",
    "register_k",
    "register_theta",
];

pub const COMMUTATOR_KEYS: &[&str] = &[
    "n", "x_min", "x_max", "hbar", "mass", "x0", "p0", "sigma0", "centers", "times", "width",
];

#[derive(Debug, Clone)]
pub struct Config {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl Config {
    pub fn read(path: &Path, allowed: &[&str]) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path, allowed)
    }

    pub fn parse(text: &str, path: &Path, allowed: &[&str]) -> CliResult<Self> {
        let err = |line: usize, message: String| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !allowed.contains(&key) {
                return Err(err(line, format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(line, format!("empty value for `{key}`")));
            }
            if entries
                .insert(key.to_string(), (line, value.to_string()))
                .is_some()
            {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn parse_err(&self, key: &str, what: &str) -> CliError {
        let (line, value) = &self.entries[key];
        CliError::Parse {
            path: self.path.clone(),
            line: *line,
            message: format!("`{key}`: cannot read `{value}` as {what}"),
        }
    }

    pub fn f64(&self, key: &str) -> CliResult<Option<f64>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((_, v)) => parse_number(v)
                .map(Some)
                .ok_or_else(|| self.parse_err(key, "a number")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str) -> CliResult<Option<usize>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| self.parse_err(key, "a non-negative integer")),
        }
    }

    pub fn list(&self, key: &str) -> CliResult<Option<Vec<f64>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((_, v)) => v
                .split(',')
                .map(|s| parse_number(s.trim()))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| self.parse_err(key, "a comma-separated list of numbers")),
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn require<T>(&self, key: &str, v: Option<T>) -> CliResult<T> {
        v.ok_or_else(|| CliError::validation(key, "required key is missing"))
    }
}

/// Decimal number with optional sign, fraction and exponent; no `inf`/`nan`.
fn parse_number(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    if !ok {
        return None;
    }
    s.parse().ok()
}

/// Field a core validation error refers to.
fn field_of(e: &Error) -> &'static str {
    match e {
        Error::GridSize(_) => "n",
        Error::DegenerateInterval { .. } => "x_max",
        Error::InvalidParameter { name, .. } => name,
        Error::PacketTooNarrow { .. } | Error::MomentumBand { .. } => "sigma0",
        Error::GuardBand { .. } => "x0",
        Error::OffGrid { .. } => "d",
        Error::Aperture(_) => "slit_width",
        Error::Register(_) => "register_k",
        _ => "scenario",
    }
}

fn invalid(e: Error) -> CliError {
    CliError::validation(field_of(&e), e)
}

fn grid_and_params(cfg: &Config, reference: &Scenario) -> CliResult<(Grid, PhysParams)> {
    let r = reference.grid;
    let n = cfg.usize("n")?.unwrap_or(r.n());
    let grid = Grid::new(
        n,
        cfg.f64_or("x_min", r.x_min())?,
        cfg.f64_or("x_max", r.x_max())?,
    )
    .map_err(invalid)?;
    let params =
        PhysParams::new(cfg.f64_or("hbar", 1.0)?, cfg.f64_or("mass", 1.0)?).map_err(invalid)?;
    Ok((grid, params))
}

fn packet(cfg: &Config, default: PacketSpec) -> CliResult<PacketSpec> {
    let p = PacketSpec {
        x0: cfg.f64_or("x0", default.x0)?,
        p0: cfg.f64_or("p0", default.p0)?,
        sigma0: cfg.f64_or("sigma0", default.sigma0)?,
    };
    if !(p.sigma0.is_finite() && p.sigma0 > 0.0) {
        return Err(CliError::validation("sigma0", "must be positive"));
    }
    Ok(p)
}

pub fn load_scenario(path: &Path) -> CliResult<Scenario> {
    scenario_from(&Config::read(path, SCENARIO_KEYS)?)
}

/// Builds and validates a scenario. Grid, constants and packet default to
/// the reference run; `d`, `t1` and either `t2` or `L` with `p_y` are
/// required.
pub fn scenario_from(cfg: &Config) -> CliResult<Scenario> {
    let reference = Scenario::reference();
    let (grid, params) = grid_and_params(cfg, &reference)?;
    let packet = packet(cfg, reference.packet)?;

    let d = cfg.require("d", cfg.f64("d")?)?;
    let t1 = cfg.require("t1", cfg.f64("t1")?)?;
    let open = match cfg.str("slits").unwrap_or("both") {
        "both" => Openings::Both,
        "left" => Openings::Left,
        "right" => Openings::Right,
        other => {
            return Err(CliError::validation(
                "slits",
                format!("expected both, left or right, found `{other}`"),
            ))
        }
    };
    let screen = SlitScreen::new(d, cfg.f64_or("slit_width", 0.0)?, t1)
        .map_err(invalid)?
        .with_open(open);

    let t2 = match (cfg.f64("t2")?, cfg.f64("L")?, cfg.f64("p_y")?) {
        (Some(t2), None, None) => t2,
        (None, Some(l), Some(p_y)) => t1 + time_of_flight(l, p_y, &params).map_err(invalid)?,
        (None, Some(_), None) => return Err(CliError::validation("p_y", "required with L")),
        (None, None, Some(_)) => return Err(CliError::validation("L", "required with p_y")),
        (None, None, None) => return Err(CliError::validation("t2", "give t2, or L and p_y")),
        _ => {
            return Err(CliError::validation(
                "t2",
                "give either t2 or L and p_y, not both",
            ))
        }
    };
    if !(t2.is_finite() && t2 > t1) {
        return Err(CliError::validation(
            "t2",
            format!("{t2} must exceed t1 = {t1}"),
        ));
    }

    let pixel_width = cfg.f64_or("pixel_width", grid.dx())?;
    let ratio = pixel_width / grid.dx();
    let pixel_sites = ratio.round();
    if !(pixel_sites >= 1.0 && (ratio - pixel_sites).abs() <= 1e-9 * ratio) {
        return Err(CliError::validation(
            "pixel_width",
            format!("{pixel_width} is not a multiple of dx = {}", grid.dx()),
        ));
    }

    let register = if cfg.has("register_k") || cfg.has("register_theta") {
        Some(RegisterSpec {
            k: cfg.usize("register_k")?.unwrap_or(4),
            theta: cfg.f64_or("register_theta", FRAC_PI_2)?,
        })
    } else {
        None
    };

    let scenario = Scenario {
        grid,
        params,
        packet,
        screen,
        t2,
        pixel_sites: pixel_sites as usize,
        register,
    };
    scenario.validate().map_err(invalid)?;
    scenario.state_at_slits().map_err(|e| match e {
        Error::GuardBand { .. } => CliError::validation("t1", e),
        other => invalid(other),
    })?;
    Ok(scenario)
}

/// Windowed commutator scan setup.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorSpec {
    pub grid: Grid,
    pub params: PhysParams,
    pub packet: PacketSpec,
    pub centers: Vec<f64>,
    pub times: Vec<f64>,
    pub width: f64,
}

pub fn load_commutator_spec(path: &Path) -> CliResult<CommutatorSpec> {
    commutator_spec_from(&Config::read(path, COMMUTATOR_KEYS)?)
}

/// Grid defaults to 1024 points on `[−64, 64)` and the packet to a centered
/// `σ₀ = 2` Gaussian; `centers`, `times` and `width` are required.
pub fn commutator_spec_from(cfg: &Config) -> CliResult<CommutatorSpec> {
    let reference = Scenario {
        grid: Grid::new(1024, -64.0, 64.0).expect("valid grid"),
        ..Scenario::reference()
    };
    let (grid, params) = grid_and_params(cfg, &reference)?;
    let packet = packet(cfg, reference.packet)?;
    let centers = cfg.require("centers", cfg.list("centers")?)?;
    let times = cfg.require("times", cfg.list("times")?)?;
    let width = cfg.require("width", cfg.f64("width")?)?;
    if !(width.is_finite() && width > 0.0) {
        return Err(CliError::validation("width", "must be positive"));
    }
    for &c in &centers {
        Window { center: c, width }
            .sites(&grid)
            .map_err(|e| CliError::validation("centers", e))?;
    }
    let psi = fringebench_core::gaussian_packet(grid, packet.x0, packet.p0, packet.sigma0, &params)
        .map_err(invalid)?;
    let evo = FreeEvolution::new(grid, params);
    for &t in &times {
        if !t.is_finite() {
            return Err(CliError::validation("times", "must be finite"));
        }
        evo.evolve(&psi, t)
            .map_err(|e| CliError::validation("times", format!("t = {t}: {e}")))?;
    }
    Ok(CommutatorSpec {
        grid,
        params,
        packet,
        centers,
        times,
        width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> CliResult<Scenario> {
        scenario_from(&Config::parse(text, Path::new("test.cfg"), SCENARIO_KEYS)?)
    }

    fn field(r: CliResult<Scenario>) -> String {
        match r {
            Err(CliError::Validation { field, .. }) => field,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let sc = scenario("d = 10\nt1 = 10\nt2 = 60 # detection\n").unwrap();
        assert_eq!(sc.params, PhysParams::default());
        assert_eq!((sc.screen.d, sc.screen.t1, sc.t2), (10.0, 10.0, 60.0));
        assert_eq!(sc, Scenario::reference());
    }

    #[test]
    fn time_of_flight_sets_t2() {
        let sc = scenario("d = 10\nt1 = 10\nL = 100\np_y = 2\n").unwrap();
        assert_eq!(sc.t2, 60.0);
        assert_eq!(field(scenario("d = 10\nt1 = 10\nL = 100\n")), "p_y");
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\nL = 1\np_y = 1\n")),
            "t2"
        );
    }

    #[test]
    fn validation_errors_name_the_field() {
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\nsigma0 = -1\n")),
            "sigma0"
        );
        assert_eq!(field(scenario("d = 10\nt1 = 10\nt2 = 10\n")), "t2");
        assert_eq!(field(scenario("t1 = 10\nt2 = 60\n")), "d");
        assert_eq!(field(scenario("d = 10\nt1 = 10\nt2 = 60\nn = 1000\n")), "n");
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\nmass = 0\n")),
            "mass"
        );
        assert_eq!(field(scenario("d = 2000\nt1 = 10\nt2 = 60\n")), "d");
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\npixel_width = 0.3\n")),
            "pixel_width"
        );
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\nslits = middle\n")),
            "slits"
        );
        assert_eq!(
            field(scenario("d = 10\nt1 = 10\nt2 = 60\nregister_k = 3\n")),
            "register_k"
        );
        assert_eq!(field(scenario("d = 10\nt1 = 900\nt2 = 960\n")), "t1");
    }

    #[test]
    fn malformed_input_is_a_parse_error() {
        for text in [
            "d = 10\nt1 = 10\nt2 = 60\nbogus = 1\n",
            "d 10\n",
            "d = ten\nt1 = 10\nt2 = 60\n",
            "d = inf\nt1 = 10\nt2 = 60\n",
            "d = 10\nd = 11\n",
            "d =\n",
        ] {
            assert!(
                matches!(scenario(text), Err(CliError::Parse { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn commutator_spec() {
        let parse = |t: &str| {
            commutator_spec_from(&Config::parse(t, Path::new("c.cfg"), COMMUTATOR_KEYS).unwrap())
        };
        let spec = parse("centers = -4, 0, 4\ntimes = 0, 1\nwidth = 2\n").unwrap();
        assert_eq!(spec.centers, vec![-4.0, 0.0, 4.0]);
        assert_eq!(spec.grid.n(), 1024);
        assert!(matches!(
            parse("centers = 90\ntimes = 0\nwidth = 2\n"),
            Err(CliError::Validation { field, .. }) if field == "centers"
        ));
        assert!(matches!(
            parse("centers = 0\ntimes = 0, 400\nwidth = 2\n"),
            Err(CliError::Validation { field, .. }) if field == "times"
        ));
    }
}
