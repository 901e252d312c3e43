//! Experiment driver: annealing-time sweeps, slope fits, figure scripts and
//! the configuration format that ties them together.

mod config;
mod figure;
mod fit;
mod sweep;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use config::{parse_config, parse_config_str, FigureKind, FitSpec, SweepSpec};
pub use figure::{figure_script, make_figure_scripts};
pub use fit::{fit_slope, fit_spec, upper_envelope, FitResult, FitWindow};
pub use sweep::{run_sweep, SweepOptions, SweepRow, SweepTable, COLUMNS};

/// Geometric annealing-time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauGrid {
    pub min: f64,
    pub max: f64,
    pub points_per_decade: usize,
}

impl TauGrid {
    pub fn new(min: f64, max: f64, points_per_decade: usize) -> Result<Self> {
        if !(min > 0.0) || !max.is_finite() {
            return Err(Error::usage(format!("tau range must be positive and finite, got [{min}, {max}]")));
        }
        if !(min < max) {
            return Err(Error::usage(format!("tau range is empty: min {min} >= max {max}")));
        }
        if points_per_decade < 3 {
            return Err(Error::usage(format!(
                "points_per_decade must be at least 3, got {points_per_decade}"
            )));
        }
        Ok(Self {
            min,
            max,
            points_per_decade,
        })
    }

    /// `min * 10^(k / points_per_decade)` up to `max`, with `max` itself
    /// appended when it is not on the lattice.
    pub fn points(&self) -> Vec<f64> {
        let ppd = self.points_per_decade as f64;
        let n = ((self.max / self.min).log10() * ppd + 1e-9).floor() as usize;
        let mut out: Vec<f64> = (0..=n).map(|k| self.min * 10f64.powf(k as f64 / ppd)).collect();
        let last = *out.last().expect("grid has at least one point");
        if (self.max - last).abs() > 1e-9 * self.max {
            out.push(self.max);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    PExcited,
    EResidual,
}

impl Observable {
    /// Smallest value trusted in double precision.
    pub fn default_floor(self) -> f64 {
        match self {
            Observable::PExcited => 1e-15,
            Observable::EResidual => 1e-13,
        }
    }

    pub fn column(self) -> &'static str {
        match self {
            Observable::PExcited => "p_excited",
            Observable::EResidual => "e_residual",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.column())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "p_excited" => Ok(Observable::PExcited),
            "e_residual" => Ok(Observable::EResidual),
            other => Err(Error::usage(format!("unknown observable '{other}' (p_excited | e_residual)"))),
        }
    }
}

/// Annealing time `sqrt(N - 1) / delta` that keeps the first-order
/// adiabatic parameter of the optimal Grover schedule at `delta`.
pub fn grover_tau_for_delta(n_items: usize, delta: f64) -> Result<f64> {
    if n_items < 2 {
        return Err(Error::usage(format!("N must be at least 2, got {n_items}")));
    }
    if !(delta > 0.0) {
        return Err(Error::usage(format!("delta must be positive, got {delta}")));
    }
    Ok(((n_items - 1) as f64).sqrt() / delta)
}

/// Build identification written into every CSV header.
pub fn build_id() -> String {
    let describe = option_env!("ANNEALBENCH_GIT_DESCRIBE").unwrap_or("unknown");
    format!("annealbench {} ({describe})", env!("CARGO_PKG_VERSION"))
}
