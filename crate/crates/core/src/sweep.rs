//! Averages tabulated against the coupling ratio `x = g / sqrt(kappa * gamma)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::resonant_reflection;
use crate::metrics::{average_both, QuadratureConfig};
use crate::{Error, Result};

pub const DEFAULT_X_MIN: f64 = 0.5;
pub const DEFAULT_X_MAX: f64 = 10.0;
pub const DEFAULT_POINTS: usize = 60;

/// Significant digits of every number written to CSV or JSON.
pub const SIGNIFICANT_DIGITS: usize = 12;

pub const CSV_HEADER: [&str; 7] = ["x", "log10_x", "r", "f_cnot", "p_cnot", "f_toffoli", "p_toffoli"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub points: usize,
    pub log_spacing: bool,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            x_min: DEFAULT_X_MIN,
            x_max: DEFAULT_X_MAX,
            points: DEFAULT_POINTS,
            log_spacing: true,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite()) || self.x_min <= 0.0 || self.x_min >= self.x_max {
            return Err(Error::Parameter(format!(
                "sweep needs 0 < x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.points < 2 {
            return Err(Error::Parameter(format!(
                "sweep needs at least 2 points, got {}",
                self.points
            )));
        }
        Ok(())
    }

    /// Grid values in ascending order, both endpoints exact.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let last = self.points - 1;
        Ok((0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.x_min;
                }
                if i == last {
                    return self.x_max;
                }
                let t = i as f64 / last as f64;
                if self.log_spacing {
                    (self.x_min.ln() + t * (self.x_max.ln() - self.x_min.ln())).exp()
                } else {
                    self.x_min + t * (self.x_max - self.x_min)
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub x: f64,
    pub log10_x: f64,
    pub r: f64,
    pub f_cnot: f64,
    pub p_cnot: f64,
    pub f_toffoli: f64,
    pub p_toffoli: f64,
}

impl SweepRow {
    pub fn at(x: f64, config: &QuadratureConfig) -> Result<Self> {
        let r = resonant_reflection(x)?;
        let avg = average_both(Complex64::new(r, 0.0), config)?;
        Ok(SweepRow {
            x,
            log10_x: x.log10(),
            r,
            f_cnot: avg.cnot.fidelity,
            p_cnot: avg.cnot.efficiency,
            f_toffoli: avg.toffoli.fidelity,
            p_toffoli: avg.toffoli.efficiency,
        })
    }

    pub fn values(&self) -> [f64; 7] {
        [
            self.x,
            self.log10_x,
            self.r,
            self.f_cnot,
            self.p_cnot,
            self.f_toffoli,
            self.p_toffoli,
        ]
    }

    fn rounded(&self) -> Self {
        let v = self.values().map(round_significant);
        SweepRow {
            x: v[0],
            log10_x: v[1],
            r: v[2],
            f_cnot: v[3],
            p_cnot: v[4],
            f_toffoli: v[5],
            p_toffoli: v[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub cnot_nodes: usize,
    pub toffoli_nodes: usize,
    pub grid: SweepGrid,
    /// Seconds since the Unix epoch when the table was produced.
    pub timestamp: u64,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// Computes every grid row; rows are evaluated in parallel and kept in
/// grid order.
pub fn sweep(grid: &SweepGrid, config: &QuadratureConfig) -> Result<SweepTable> {
    let xs = grid.values()?;
    let rows = xs
        .par_iter()
        .map(|&x| SweepRow::at(x, config))
        .collect::<Result<Vec<_>>>()?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepTable {
        metadata: SweepMetadata {
            cnot_nodes: config.cnot_nodes,
            toffoli_nodes: config.toffoli_nodes,
            grid: *grid,
            timestamp,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        rows,
    })
}

/// Formats `value` with [`SIGNIFICANT_DIGITS`] significant digits in
/// positional notation (scientific below 1e-6 or from 1e15 up).
pub fn format_significant(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    if !(-6..15).contains(&magnitude) {
        return format!("{:.*e}", SIGNIFICANT_DIGITS - 1, value);
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - magnitude).max(0) as usize;
    let text = format!("{value:.decimals$}");
    // Rounding can carry into a new leading digit (9.99.. -> 10.0..).
    let digits = text.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = text
        .trim_start_matches('-')
        .chars()
        .take_while(|c| *c == '0' || *c == '.')
        .filter(|c| *c == '0')
        .count();
    if digits - leading_zeros > SIGNIFICANT_DIGITS && decimals > 0 {
        format!("{value:.prec$}", prec = decimals - 1)
    } else {
        text
    }
}

/// The value a reader recovers from [`format_significant`].
pub fn round_significant(value: f64) -> f64 {
    format_significant(value).parse().unwrap_or(value)
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = CSV_HEADER.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.values().iter().map(|v| format_significant(*v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON with each number rounded exactly as in the CSV.
    pub fn to_json(&self) -> String {
        let rounded = SweepTable {
            metadata: self.metadata.clone(),
            rows: self.rows.iter().map(SweepRow::rounded).collect(),
        };
        serde_json::to_string_pretty(&rounded).expect("sweep table serializes")
    }
}
