use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::schedules::Schedule;
use crate::spectral::{crossing_point, lz_bound_coefficient};

use super::config::FigureKind;
use super::sweep::SweepTable;
use super::Observable;

/// Reads the table at `table_path` and writes a gnuplot script for
/// `figure` to `out` (default: next to the table, `<stem>.<figure>.gp`).
/// Returns the script path.
pub fn make_figure_scripts(table_path: &Path, figure: FigureKind, out: Option<&Path>) -> Result<PathBuf> {
    let table = SweepTable::read(table_path)?;
    let script = figure_script(&table, table_path, figure)?;
    let path = match out {
        Some(p) => p.to_path_buf(),
        None => {
            let stem = table_path.file_stem().and_then(|s| s.to_str()).unwrap_or("table");
            table_path.with_file_name(format!("{stem}.{figure}.gp"))
        }
    };
    fs::write(&path, script).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// A self-contained gnuplot script plotting `table` (read from
/// `table_path` when the script runs) with the guide curves of `figure`.
pub fn figure_script(table: &SweepTable, table_path: &Path, figure: FigureKind) -> Result<String> {
    let observable = figure.observable();
    for col in ["schedule", "tau", observable.column(), "status"] {
        if !table.has_column(col) {
            return Err(Error::usage(format!("table is missing the '{col}' column needed for {figure}")));
        }
    }
    let y_col = table.columns.iter().position(|c| c == observable.column()).unwrap() + 1;
    let tau_col = table.columns.iter().position(|c| c == "tau").unwrap() + 1;
    let sched_col = table.columns.iter().position(|c| c == "schedule").unwrap() + 1;
    let status_col = table.columns.iter().position(|c| c == "status").unwrap() + 1;

    let ok_rows: Vec<_> = table.rows.iter().filter(|r| r.is_ok()).collect();
    let (x_lo, x_hi) = if ok_rows.is_empty() {
        (1.0, 1e4)
    } else {
        let lo = ok_rows.iter().map(|r| r.tau).fold(f64::INFINITY, f64::min);
        let hi = ok_rows.iter().map(|r| r.tau).fold(0.0, f64::max);
        (lo, hi.max(lo * 10.0))
    };
    let positive: Vec<f64> = ok_rows
        .iter()
        .map(|r| r.value(observable))
        .filter(|v| *v > 0.0)
        .collect();
    let (y_lo, y_hi) = if positive.is_empty() {
        (1e-16, 1.0)
    } else {
        let lo = positive.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = positive.iter().copied().fold(0.0, f64::max);
        ((lo / 10.0).max(1e-32), hi * 10.0)
    };

    let (title, ylabel) = match figure {
        FigureKind::Fig1 => ("excitation probability against annealing time", "P_ex"),
        FigureKind::Fig3 => ("residual energy against annealing time, spin glass", "E_res"),
        FigureKind::Fig5 => ("residual energy against annealing time, database search", "E_res"),
    };
    let mut s = String::new();
    let _ = writeln!(s, "# {figure}: {title}");
    let _ = writeln!(s, "# generated by {}", super::build_id());
    let _ = writeln!(s, "table = {}", quote(&table_path.display().to_string()));
    let _ = writeln!(s, "set terminal pngcairo size 900,650 noenhanced");
    let _ = writeln!(
        s,
        "set output {}",
        quote(&format!(
            "{}.png",
            table_path.file_stem().and_then(|x| x.to_str()).unwrap_or("table")
        ))
    );
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set format y \"%.0e\"");
    let _ = writeln!(s, "set xlabel \"tau\"");
    let _ = writeln!(s, "set ylabel {}", quote(ylabel));
    let _ = writeln!(s, "set key outside right");
    let _ = writeln!(s, "set samples 1000");
    let _ = writeln!(s, "set xrange [{x_lo:e}:{x_hi:e}]");
    let _ = writeln!(s, "set yrange [{y_lo:e}:{y_hi:e}]");

    let mut series = Vec::new();
    for (k, name) in table.schedules().iter().enumerate() {
        if !ok_rows.iter().any(|r| &r.schedule == name) {
            continue;
        }
        series.push(format!(
            "table using {tau_col}:((strcol({sched_col}) eq {q} && strcol({status_col}) eq \"ok\") ? column({y_col}) : 1/0) \
             with points pt 7 ps 0.5 lc {lc} title {q}",
            q = quote(name),
            lc = k + 1
        ));
    }

    let mut guides = Vec::new();
    match figure {
        FigureKind::Fig1 => {
            let model = table
                .meta("model")
                .ok_or_else(|| Error::usage("fig1 needs the table's '# model = ...' line"))?;
            let (h, alpha) = match model.parse::<ModelSpec>()? {
                ModelSpec::Lz { h, alpha } => (h, alpha),
                other => return Err(Error::usage(format!("fig1 needs a Landau-Zener table, got {other}"))),
            };
            for m in 1..=4u8 {
                let sched = Schedule::polynomial(m)?;
                let rate = std::f64::consts::PI * alpha * alpha / (sched.deriv(crossing_point(&sched)?, 1)? * h);
                let coef = lz_bound_coefficient(h, alpha, &sched, m as usize)?;
                let _ = writeln!(s, "exp{m}(x) = exp(-{rate:.17e} * x)");
                let _ = writeln!(s, "pow{m}(x) = {coef:.17e} / x**{}", 2 * m);
                guides.push(format!("exp{m}(x) with lines dt 2 lc {m} title \"exp f{m}\""));
                guides.push(format!("pow{m}(x) with lines lc {m} title \"tau^-{} f{m}\"", 2 * m));
            }
        }
        FigureKind::Fig3 | FigureKind::Fig5 => {
            for m in 1..=4usize {
                let c = guide_anchor(table, m, observable);
                let _ = writeln!(s, "guide{m}(x) = {c:.17e} / x**{}", 2 * m);
                guides.push(format!("guide{m}(x) with lines lc {m} title \"tau^-{}\"", 2 * m));
            }
        }
    }

    let all: Vec<String> = series.into_iter().chain(guides).collect();
    let _ = writeln!(s, "plot \\\n    {}", all.join(", \\\n    "));
    Ok(s)
}

/// Constant putting the `tau^-2m` guide through the largest-tau point of
/// the swept schedule whose flatness order is `m`, or 1 without such data.
fn guide_anchor(table: &SweepTable, m: usize, observable: Observable) -> f64 {
    let floor = observable.default_floor();
    for name in table.schedules() {
        let Ok(sched) = name.parse::<Schedule>() else { continue };
        if sched.flatness_order() != m {
            continue;
        }
        if let Some((tau, y)) = table
            .series(&name, observable)
            .into_iter()
            .filter(|(_, y)| *y > floor)
            .max_by(|a, b| a.0.total_cmp(&b.0))
        {
            return y * tau.powi(2 * m as i32);
        }
    }
    1.0
}
