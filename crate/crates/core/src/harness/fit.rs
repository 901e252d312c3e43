use crate::error::{Error, Result};

use super::config::FitSpec;
use super::sweep::SweepTable;

/// Inclusive annealing-time window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitWindow {
    pub lo: f64,
    pub hi: f64,
}

impl FitWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0) || !(lo < hi) || !hi.is_finite() {
            return Err(Error::usage(format!("fit window [{lo}, {hi}] is not a positive interval")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, tau: f64) -> bool {
        let slack = 1e-9;
        tau >= self.lo * (1.0 - slack) && tau <= self.hi * (1.0 + slack)
    }

    pub fn decades(&self) -> f64 {
        (self.hi / self.lo).log10()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub window: FitWindow,
    pub n_points: usize,
    /// Root mean square of the log10 residuals.
    pub residual_rms: f64,
    /// Points inside the window dropped for lying at or below the floor.
    pub floor_excluded: usize,
}

impl FitResult {
    /// Fitted value at `tau`.
    pub fn predict(&self, tau: f64) -> f64 {
        10f64.powf(self.intercept + self.slope * tau.log10())
    }
}

/// Ordinary least squares of `log10 y` on `log10 tau` over `window`,
/// ignoring points with `y <= floor`.
pub fn fit_slope(points: &[(f64, f64)], window: FitWindow, floor: f64) -> Result<FitResult> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut floor_excluded = 0;
    for &(tau, y) in points {
        if !window.contains(tau) || y.is_nan() {
            continue;
        }
        if y <= floor {
            floor_excluded += 1;
            continue;
        }
        xs.push(tau.log10());
        ys.push(y.log10());
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::usage(format!(
            "fit window [{}, {}] has {n} usable points ({floor_excluded} at or below the floor {floor:e}); need at least 4",
            window.lo, window.hi
        )));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::usage(format!(
            "fit window [{}, {}] contains a single annealing time",
            window.lo, window.hi
        )));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(FitResult {
        slope,
        intercept,
        window,
        n_points: n,
        residual_rms: (ss / nf).sqrt(),
        floor_excluded,
    })
}

/// Largest value in each bin of width `1 / bins_per_decade` in `log10 tau`,
/// at the annealing time where it occurs. Bins are aligned to powers of ten.
pub fn upper_envelope(points: &[(f64, f64)], bins_per_decade: f64) -> Vec<(f64, f64)> {
    let mut out: Vec<(i64, f64, f64)> = Vec::new();
    let mut sorted: Vec<(f64, f64)> = points.iter().copied().filter(|(_, y)| !y.is_nan()).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (tau, y) in sorted {
        let bin = (tau.log10() * bins_per_decade + 1e-9).floor() as i64;
        match out.last_mut() {
            Some(last) if last.0 == bin => {
                if y > last.2 {
                    last.1 = tau;
                    last.2 = y;
                }
            }
            _ => out.push((bin, tau, y)),
        }
    }
    out.into_iter().map(|(_, tau, y)| (tau, y)).collect()
}

/// Runs the fit declared in a configuration against a table.
pub fn fit_spec(table: &SweepTable, spec: &FitSpec) -> Result<FitResult> {
    let series = table.series(&spec.schedule, spec.observable);
    if series.is_empty() {
        return Err(Error::usage(format!(
            "table has no successful rows for schedule '{}'",
            spec.schedule
        )));
    }
    let points = match spec.envelope_bins_per_decade {
        Some(bins) => {
            // Only bins lying wholly inside the window: a bin cut by a window
            // edge holds too few samples to reach the envelope.
            let lo = (spec.window.lo.log10() * bins - 1e-3).ceil() / bins;
            let hi = (spec.window.hi.log10() * bins + 1e-3).floor() / bins;
            let inside: Vec<(f64, f64)> = series
                .into_iter()
                .filter(|(t, _)| t.log10() >= lo - 1e-12 && t.log10() < hi - 1e-12)
                .collect();
            upper_envelope(&inside, bins)
        }
        None => series,
    };
    fit_slope(&points, spec.window, spec.floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geometric(lo: f64, decades: f64, ppd: usize, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        let n = (decades * ppd as f64).round() as usize;
        (0..=n)
            .map(|k| {
                let t = lo * 10f64.powf(k as f64 / ppd as f64);
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn exact_power_law() {
        let pts = geometric(10.0, 2.0, 8, |t| 3.7 * t.powi(-4));
        let fit = fit_slope(&pts, FitWindow::new(10.0, 1000.0).unwrap(), 0.0).unwrap();
        assert!((fit.slope + 4.0).abs() < 1e-9, "{}", fit.slope);
        assert!((fit.intercept - 3.7f64.log10()).abs() < 1e-9);
        assert_eq!(fit.n_points, 17);
        assert!(fit.residual_rms < 1e-12);
        assert!((fit.predict(100.0) - 3.7e-8).abs() < 1e-17);
    }

    #[test]
    fn oscillating_power_law() {
        let pts = geometric(10.0, 2.0, 3, |t| 0.5 * t.powi(-2) * (1.0 + 0.3 * t.sin()));
        let fit = fit_slope(&pts, FitWindow::new(10.0, 1000.0).unwrap(), 0.0).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.1, "{}", fit.slope);
    }

    #[test]
    fn floor_excludes_and_counts() {
        let pts = geometric(1.0, 3.0, 4, |t| t.powi(-6));
        let fit = fit_slope(&pts, FitWindow::new(1.0, 1000.0).unwrap(), 1e-13).unwrap();
        assert_eq!(fit.floor_excluded, 4);
        assert_eq!(fit.n_points, 9);
        assert!((fit.slope + 6.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_points_names_the_window() {
        let pts = geometric(1.0, 1.0, 3, |t| 1.0 / t);
        let err = fit_slope(&pts, FitWindow::new(1.0, 5.0).unwrap(), 0.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1, 5]"), "{msg}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn envelope_fit_ignores_partial_edge_bins() {
        use crate::harness::{Observable, SweepRow, SweepTable, COLUMNS};
        let rows = geometric(100.0, 2.0, 64, |t| 1.0 / (t * t))
            .into_iter()
            .map(|(tau, y)| SweepRow {
                schedule: "f1".into(),
                tau,
                // A dip just inside each window edge.
                p_excited: if tau < 110.0 || tau > 9000.0 { 1e-3 * y } else { y },
                e_residual: y,
                norm_drift: 0.0,
                steps: 1,
                error: None,
            })
            .collect();
        let table = SweepTable {
            metadata: Vec::new(),
            columns: COLUMNS.iter().map(|c| c.to_string()).collect(),
            rows,
        };
        let spec = FitSpec {
            schedule: "f1".into(),
            observable: Observable::PExcited,
            window: FitWindow::new(105.0, 9500.0).unwrap(),
            floor: 0.0,
            envelope_bins_per_decade: Some(8.0),
            expect_slope: None,
            tolerance: None,
        };
        let fit = fit_spec(&table, &spec).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-9, "{}", fit.slope);
        assert_eq!(fit.n_points, 14);
    }

    #[test]
    fn envelope_keeps_bin_maxima() {
        let pts = vec![(10.0, 1.0), (11.0, 3.0), (12.0, 2.0), (100.0, 0.5), (120.0, 0.7)];
        let env = upper_envelope(&pts, 1.0);
        assert_eq!(env, vec![(11.0, 3.0), (120.0, 0.7)]);
    }

    #[test]
    fn window_validation() {
        assert!(FitWindow::new(10.0, 1.0).is_err());
        assert!(FitWindow::new(-1.0, 1.0).is_err());
        let w = FitWindow::new(10.0, 1000.0).unwrap();
        assert!((w.decades() - 2.0).abs() < 1e-12);
        assert!(w.contains(10.0) && w.contains(1000.0) && !w.contains(1001.0));
    }
}
