//! CSV and JSON writers. Floats in CSV use 17 significant digits so every
//! value round-trips.

use std::fs;
use std::path::Path;

use fringebench_core::{CommutatorReport, FringeReport};
use serde::Serialize;

use crate::error::CliResult;
use crate::suites::SpreadRow;

pub const FRINGE_HEADER: [&str; 3] = ["s", "p_cond", "p_analytic"];
pub const COMMUTATOR_HEADER: [&str; 8] = [
    "xbar",
    "xbar_prime",
    "t",
    "t_prime",
    "re",
    "im",
    "abs_predicted",
    "abs_deviation",
];
pub const SPREAD_HEADER: [&str; 3] = ["t", "dx_measured", "dx_analytic"];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows<const N: usize>(
    path: &Path,
    header: [&str; N],
    rows: impl IntoIterator<Item = [f64; N]>,
) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.map(fmt_f64))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_fringe_csv(path: &Path, rep: &FringeReport) -> CliResult<()> {
    let rows =
        (0..rep.positions.len()).map(|i| [rep.positions[i], rep.p_cond[i], rep.p_analytic[i]]);
    write_rows(path, FRINGE_HEADER, rows)
}

#[derive(Debug, Serialize)]
pub struct FringeSummary<'a> {
    pub p1: f64,
    pub spacing: Option<f64>,
    pub analytic_spacing: f64,
    pub spacing_relative_error: Option<f64>,
    pub visibility: f64,
    pub correlation: f64,
    pub separation: f64,
    pub flight_time: f64,
    pub window: f64,
    pub maxima: &'a [f64],
    pub total_probability: f64,
    pub purified: bool,
}

impl<'a> FringeSummary<'a> {
    pub fn new(rep: &'a FringeReport, purified: bool) -> Self {
        Self {
            p1: rep.p1,
            spacing: rep.spacing,
            analytic_spacing: rep.analytic_spacing,
            spacing_relative_error: rep
                .spacing
                .map(|s| (s - rep.analytic_spacing).abs() / rep.analytic_spacing),
            visibility: rep.visibility,
            correlation: rep.correlation,
            separation: rep.separation,
            flight_time: rep.flight_time,
            window: rep.window,
            maxima: &rep.maxima,
            total_probability: rep.total_probability(),
            purified,
        }
    }
}

pub fn write_commutator_csv(path: &Path, rep: &CommutatorReport) -> CliResult<()> {
    let rows = rep.entries.iter().map(|e| {
        [
            e.xbar,
            e.xbar_prime,
            e.t,
            e.t_prime,
            e.value.re,
            e.value.im,
            e.predicted().norm(),
            e.deviation,
        ]
    });
    write_rows(path, COMMUTATOR_HEADER, rows)
}

pub fn write_spread_csv(path: &Path, rows: &[SpreadRow]) -> CliResult<()> {
    write_rows(path, SPREAD_HEADER, rows.iter().map(|&(t, m, a)| [t, m, a]))
}
