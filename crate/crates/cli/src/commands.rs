use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use annealbench_core::harness::{
    build_id, fit_spec, make_figure_scripts, parse_config, run_sweep, FigureKind, FitSpec, FitWindow, Observable,
    SweepOptions, SweepSpec, SweepTable, TauGrid,
};
use annealbench_core::models::{AnnealingModel, ModelSpec};
use annealbench_core::propagator::{evolve_observed, Method, StepPolicy, TrajectoryPoint};
use annealbench_core::schedules::Schedule;
use annealbench_core::spectral::{adiabatic_scan, bound_report, sample_spectrum, unit_grid};
use annealbench_core::{Error, Result};
use clap::Args;

use crate::Common;

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    /// Points of the uniform s grid
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Number of eigenvalues per row
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Derivative orders m of the A1_m columns, comma separated
    #[arg(long, default_value = "1")]
    orders: String,
}

#[derive(Args, Debug)]
pub struct BoundArgs {
    /// Bound orders, comma separated (default: the schedule's flatness order)
    #[arg(long)]
    m: Option<String>,
    /// Excited level
    #[arg(long, default_value_t = 1)]
    level: usize,
    /// Also scan max A_j(s) on a grid of this many points
    #[arg(long)]
    scan_grid: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long)]
    method: Option<Method>,
    /// Fixed number of steps
    #[arg(long, conflicts_with = "density")]
    steps: Option<usize>,
    /// Steps per unit of physical time
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    renormalize: bool,
    #[arg(long)]
    norm_ceiling: Option<f64>,
    /// Write (s, norm, p_excited_instantaneous) along the run
    #[arg(long)]
    dump_trajectory: Option<PathBuf>,
    /// Trajectory stride in steps (default: about 100 records)
    #[arg(long)]
    every: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Print each finished row on stderr
    #[arg(long)]
    progress: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Sweep table (default: the config's output)
    #[arg(long)]
    table: Option<PathBuf>,
    #[arg(long)]
    observable: Option<Observable>,
    /// Ad hoc window `LO:HI`; without it the config's fits run
    #[arg(long)]
    window: Option<String>,
    #[arg(long)]
    floor: Option<f64>,
    /// Fit the largest value per 1/BINS decade
    #[arg(long)]
    envelope: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    expect: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    tolerance: f64,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    /// Sweep table (default: the config's output)
    #[arg(long)]
    table: Option<PathBuf>,
    /// fig1 | fig3 | fig5 (default: the config's [figure])
    #[arg(long)]
    figure: Option<FigureKind>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

fn load_config(common: &Common) -> Result<Option<SweepSpec>> {
    common.config.as_deref().map(parse_config).transpose()
}

fn resolve_model(common: &Common, config: Option<&SweepSpec>) -> Result<ModelSpec> {
    match (&common.model, config) {
        (Some(m), _) => m.parse(),
        (None, Some(c)) => Ok(c.model.clone()),
        (None, None) => Err(usage("no model: give --model or --config")),
    }
}

fn parse_schedules(list: &str) -> Result<Vec<Schedule>> {
    let out: Vec<Schedule> = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(usage("empty schedule list"));
    }
    Ok(out)
}

fn resolve_schedules(common: &Common, config: Option<&SweepSpec>) -> Result<Vec<Schedule>> {
    match (&common.schedule, config) {
        (Some(s), _) => parse_schedules(s),
        (None, Some(c)) => Ok(c.schedules.clone()),
        (None, None) => Err(usage("no schedule: give --schedule or --config")),
    }
}

fn single_schedule(common: &Common, config: Option<&SweepSpec>) -> Result<Schedule> {
    let mut all = resolve_schedules(common, config)?;
    if all.len() != 1 {
        let names: Vec<String> = all.iter().map(|s| s.to_string()).collect();
        return Err(usage(format!(
            "this command takes one schedule, got {}; choose with --schedule",
            names.join(", ")
        )));
    }
    Ok(all.remove(0))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn header(kind: &str, model: &AnnealingModel, sched: &Schedule, extra: &[(&str, String)]) -> String {
    let mut s = format!("# annealbench {kind}\n# model = {}\n# schedule = {sched}\n", model.label());
    for (k, v) in extra {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "# build = {}", build_id());
    s
}

fn parse_list(text: &str, what: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| usage(format!("bad {what} '{t}'"))))
        .collect()
}

pub fn spectrum(common: &Common, args: &SpectrumArgs) -> Result<()> {
    let config = load_config(common)?;
    let model = resolve_model(common, config.as_ref())?.build()?;
    let sched = single_schedule(common, config.as_ref())?;
    if args.points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let orders = parse_list(&args.orders, "order")?;
    let k = args.levels.clamp(2, model.dim());
    let mut out = header("spectrum", &model, &sched, &[("grid", format!("{} points", args.points))]);
    let mut cols = vec!["s".to_string()];
    cols.extend((0..k).map(|j| format!("eps{j}")));
    cols.push("gap1".into());
    cols.extend(orders.iter().map(|m| format!("A1_m{m}")));
    let _ = writeln!(out, "{}", cols.join(","));
    for s in unit_grid(args.points) {
        let sample = sample_spectrum(&model, &sched, s, &orders)?;
        let mut row = vec![format!("{s:.17e}")];
        row.extend(sample.eigenvalues[..k].iter().map(|e| format!("{e:.17e}")));
        row.push(format!("{:.17e}", sample.ground_gap()));
        for &m in &orders {
            let a = sample.level_a(m, 1).unwrap_or(f64::NAN);
            row.push(format!("{a:.17e}"));
        }
        let _ = writeln!(out, "{}", row.join(","));
    }
    emit(common.out.as_deref(), &out)
}

pub fn bound(common: &Common, args: &BoundArgs) -> Result<()> {
    let config = load_config(common)?;
    let model = resolve_model(common, config.as_ref())?.build()?;
    let sched = single_schedule(common, config.as_ref())?;
    let orders = match &args.m {
        Some(list) => parse_list(list, "order")?,
        None => vec![sched.flatness_order()],
    };
    let mut extra = Vec::new();
    if let Some(grid) = args.scan_grid {
        let scan = adiabatic_scan(&model, &sched, grid)?;
        extra.push(("max_A1", format!("{:.17e} at s = {} (level {})", scan.tau_c, scan.s_at_max, scan.level)));
    }
    let mut out = header("bound", &model, &sched, &extra);
    let _ = writeln!(out, "m,level,A_start,A_end,coefficient");
    for m in orders {
        let b = bound_report(&model, &sched, m, args.level)?;
        let _ = writeln!(
            out,
            "{},{},{:.17e},{:.17e},{:.17e}",
            b.m, b.level, b.a_start, b.a_end, b.coefficient
        );
    }
    emit(common.out.as_deref(), &out)
}

fn parse_tau(text: &str) -> Result<f64> {
    let tau: f64 = text.trim().parse().map_err(|_| usage(format!("--tau '{text}' is not a number")))?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(usage(format!("--tau must be positive, got {tau}")));
    }
    Ok(tau)
}

pub fn evolve(common: &Common, args: &EvolveArgs) -> Result<()> {
    let config = load_config(common)?;
    let model = resolve_model(common, config.as_ref())?.build()?;
    let sched = single_schedule(common, config.as_ref())?;
    let tau = parse_tau(common.tau.as_deref().ok_or_else(|| usage("evolve needs --tau"))?)?;
    let mut cfg = config.as_ref().map(|c| c.integrator).unwrap_or_default();
    if let Some(m) = args.method {
        cfg.method = m;
    }
    if let Some(n) = args.steps {
        cfg.steps = StepPolicy::Fixed(n);
    }
    if let Some(d) = args.density {
        cfg.steps = StepPolicy::Density(d);
    }
    if args.renormalize {
        cfg.renormalize = true;
    }
    if let Some(c) = args.norm_ceiling {
        cfg.norm_ceiling = c;
    }
    cfg.validate()?;

    let steps = cfg.steps_for(tau);
    let mut trajectory: Vec<TrajectoryPoint> = Vec::new();
    let every = match (&args.dump_trajectory, args.every) {
        (None, _) => 0,
        (Some(_), Some(0)) => return Err(usage("--every must be at least 1")),
        (Some(_), Some(k)) => k,
        (Some(_), None) => (steps / 100).max(1),
    };
    let r = evolve_observed(&model, &sched, tau, &cfg, every, |p| trajectory.push(p))?;
    if let Some(path) = &args.dump_trajectory {
        let mut t = header("trajectory", &model, &sched, &[("tau", format!("{tau}")), ("every", every.to_string())]);
        t.push_str("s,norm,p_excited_inst\n");
        for p in &trajectory {
            let _ = writeln!(t, "{:.17e},{:.17e},{:.17e}", p.s, p.norm, p.p_excited);
        }
        emit(Some(path), &t)?;
    }
    let mut out = header("evolve", &model, &sched, &[]);
    out.push_str("schedule,tau,p_excited,e_residual,norm_drift,steps\n");
    let _ = writeln!(
        out,
        "{},{:.17e},{:.17e},{:.17e},{:.17e},{}",
        sched, r.tau, r.p_excited, r.e_residual, r.norm_drift, r.steps_used
    );
    emit(common.out.as_deref(), &out)
}

fn parse_range(text: &str, default_ppd: usize) -> Result<TauGrid> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |t: &str| -> Result<f64> { t.trim().parse().map_err(|_| usage(format!("bad number '{t}' in --tau"))) };
    match parts.as_slice() {
        [lo, hi] => TauGrid::new(num(lo)?, num(hi)?, default_ppd),
        [lo, hi, ppd] => {
            let ppd = ppd.trim().parse().map_err(|_| usage(format!("bad points per decade '{ppd}'")))?;
            TauGrid::new(num(lo)?, num(hi)?, ppd)
        }
        _ => Err(usage(format!("sweep --tau must be MIN:MAX or MIN:MAX:PPD, got '{text}'"))),
    }
}

fn sweep_spec(common: &Common) -> Result<SweepSpec> {
    let config = load_config(common)?;
    let model = resolve_model(common, config.as_ref())?;
    let schedules = resolve_schedules(common, config.as_ref())?;
    let grid = match (&common.tau, &config) {
        (Some(t), c) => parse_range(t, c.as_ref().map_or(8, |c| c.tau_grid.points_per_decade))?,
        (None, Some(c)) => c.tau_grid,
        (None, None) => return Err(usage("no tau grid: give --tau MIN:MAX[:PPD] or --config")),
    };
    let mut spec = match config {
        Some(c) => c,
        None => SweepSpec::new(model.clone(), schedules.clone(), grid),
    };
    spec.model = model;
    spec.schedules = schedules;
    spec.tau_grid = grid;
    if let Some(out) = &common.out {
        spec.output = Some(out.clone());
    }
    Ok(spec)
}

pub fn sweep(common: &Common, args: &SweepArgs) -> Result<()> {
    let spec = sweep_spec(common)?;
    let out = spec
        .output
        .clone()
        .ok_or_else(|| usage("sweep needs an output: --out or 'out =' in the config"))?;
    let opts = SweepOptions {
        jobs: common.jobs.unwrap_or(1),
        max_new_rows: None,
        verbose: args.progress,
    };
    if opts.jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let table = run_sweep(&spec, &opts)?;
    let failed = table.rows.iter().filter(|r| !r.is_ok()).count();
    println!("wrote {} rows to {}", table.rows.len(), out.display());
    if failed > 0 {
        return Err(Error::Numeric(format!(
            "{failed} rows failed and are flagged in {}; rerun with more steps to retry them",
            out.display()
        )));
    }
    Ok(())
}

fn table_path(explicit: Option<&Path>, config: Option<&SweepSpec>) -> Result<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output.clone()))
        .ok_or_else(|| usage("no table: give --table or a --config with 'out ='"))
}

pub fn fit(common: &Common, args: &FitArgs) -> Result<()> {
    let config = load_config(common)?;
    let path = table_path(args.table.as_deref(), config.as_ref())?;
    let table = SweepTable::read(&path)?;

    let fits: Vec<FitSpec> = match &args.window {
        Some(w) => {
            let (lo, hi) = w
                .split_once(':')
                .ok_or_else(|| usage(format!("--window must be LO:HI, got '{w}'")))?;
            let num = |t: &str| -> Result<f64> { t.trim().parse().map_err(|_| usage(format!("bad number '{t}' in --window"))) };
            let window = FitWindow::new(num(lo)?, num(hi)?)?;
            let observable = args.observable.unwrap_or(Observable::PExcited);
            let names = match &common.schedule {
                Some(s) => parse_schedules(s)?.iter().map(|s| s.to_string()).collect(),
                None => table.schedules(),
            };
            names
                .into_iter()
                .map(|schedule| FitSpec {
                    schedule,
                    observable,
                    window,
                    floor: args.floor.unwrap_or_else(|| observable.default_floor()),
                    envelope_bins_per_decade: args.envelope,
                    expect_slope: args.expect,
                    tolerance: args.expect.map(|_| args.tolerance),
                })
                .collect()
        }
        None => {
            let config = config
                .as_ref()
                .ok_or_else(|| usage("give --window LO:HI or a --config with [fit ...] sections"))?;
            let wanted = common.schedule.as_deref().map(parse_schedules).transpose()?;
            config
                .fits
                .iter()
                .filter(|f| {
                    wanted
                        .as_ref()
                        .is_none_or(|w| w.iter().any(|s| s.to_string() == f.schedule))
                })
                .cloned()
                .collect()
        }
    };
    if fits.is_empty() {
        return Err(usage("no fits selected"));
    }

    let mut out = format!("# annealbench fit\n# table = {}\n# build = {}\n", path.display(), build_id());
    out.push_str(
        "schedule,observable,tau_lo,tau_hi,slope,intercept,n_points,residual_rms,floor_excluded,expect_slope,tolerance,verdict\n",
    );
    let mut first_error = None;
    for f in &fits {
        let expect = f.expect_slope.map_or(String::new(), |e| e.to_string());
        let tol = f.tolerance.map_or(String::new(), |t| t.to_string());
        match fit_spec(&table, f) {
            Ok(r) => {
                let verdict = match f.verdict(&r) {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "-",
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.6},{:.6},{},{:.3e},{},{expect},{tol},{verdict}",
                    f.schedule,
                    f.observable,
                    f.window.lo,
                    f.window.hi,
                    r.slope,
                    r.intercept,
                    r.n_points,
                    r.residual_rms,
                    r.floor_excluded
                );
            }
            Err(e) => {
                eprintln!("annealbench: fit for {}: {e}", f.schedule);
                let _ = writeln!(
                    out,
                    "{},{},{},{},,,,,,{expect},{tol},error",
                    f.schedule, f.observable, f.window.lo, f.window.hi
                );
                first_error.get_or_insert(e);
            }
        }
    }
    emit(common.out.as_deref(), &out)?;
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn figure(common: &Common, args: &FigureArgs) -> Result<()> {
    let config = load_config(common)?;
    let path = table_path(args.table.as_deref(), config.as_ref())?;
    let kind = args
        .figure
        .or_else(|| config.as_ref().and_then(|c| c.figure))
        .ok_or_else(|| usage("give --figure fig1|fig3|fig5 or a --config with [figure]"))?;
    let script = make_figure_scripts(&path, kind, common.out.as_deref())?;
    println!("wrote {}", script.display());
    Ok(())
}
