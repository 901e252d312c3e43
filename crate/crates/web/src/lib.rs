//! WebAssembly bindings for the demo page in `www/`.
//!
//! Each exported function returns a flat `Float64Array`; the layout is
//! given in its doc comment. The `*_rows` functions hold the logic and are
//! callable natively.

use annealbench_core::models::ModelSpec;
use annealbench_core::propagator::{evolve, IntegratorConfig};
use annealbench_core::schedules::Schedule;
use annealbench_core::spectral::{bound_report, sample_spectrum, unit_grid};
use wasm_bindgen::prelude::*;

const MAX_POINTS: usize = 2001;
const MAX_DEMO_DIM: usize = 64;
const MAX_DEMO_TAU: f64 = 5000.0;

fn parse_schedule(name: &str) -> Result<Schedule, String> {
    name.trim().parse().map_err(|e: annealbench_core::Error| e.to_string())
}

fn check_points(points: usize) -> Result<(), String> {
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}, got {points}"));
    }
    Ok(())
}

/// `points` rows of `s, f_1(s), f_2(s), ...` for the comma separated
/// schedule names.
pub fn schedule_rows(names: &str, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    let scheds: Vec<Schedule> = names.split(',').map(parse_schedule).collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(points * (scheds.len() + 1));
    for s in unit_grid(points) {
        out.push(s);
        for f in &scheds {
            out.push(f.eval(s).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Rows of `tau, p_excited, bound` for the two-level model on a geometric
/// grid. `bound` is the endpoint estimate `(A(0) + A(1))^2 / tau^(2m)` with
/// `m` the flatness order of the schedule.
pub fn lz_rows(h: f64, alpha: f64, schedule: &str, tau_min: f64, tau_max: f64, points: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    if !(tau_min > 0.0 && tau_min < tau_max && tau_max <= MAX_DEMO_TAU) {
        return Err(format!("need 0 < tau_min < tau_max <= {MAX_DEMO_TAU}"));
    }
    let model = ModelSpec::Lz { h, alpha }.build().map_err(|e| e.to_string())?;
    let sched = parse_schedule(schedule)?;
    let m = sched.flatness_order().max(1);
    let bound = bound_report(&model, &sched, m, 1).map_err(|e| e.to_string())?;
    let cfg = IntegratorConfig::default();
    let ratio = (tau_max / tau_min).ln();
    let mut out = Vec::with_capacity(3 * points);
    for k in 0..points {
        let tau = tau_min * (ratio * k as f64 / (points - 1) as f64).exp();
        let r = evolve(&model, &sched, tau, &cfg).map_err(|e| e.to_string())?;
        out.extend([tau, r.p_excited, bound.predicted(tau)]);
    }
    Ok(out)
}

/// Rows of `s, eps_0 .. eps_{levels-1}, A_1^(1)` along the schedule.
/// `A_1^(1)` is the first-order adiabatic coefficient of the lowest excited
/// level.
pub fn spectrum_rows(model: &str, schedule: &str, points: usize, levels: usize) -> Result<Vec<f64>, String> {
    check_points(points)?;
    let spec: ModelSpec = model.parse().map_err(|e: annealbench_core::Error| e.to_string())?;
    if matches!(spec, ModelSpec::IsingFile(_)) {
        return Err("instance files are not available in the browser; use ising:grid=RxC,...".into());
    }
    let model = spec.build().map_err(|e| e.to_string())?;
    if model.dim() > MAX_DEMO_DIM {
        return Err(format!("the demo is limited to {MAX_DEMO_DIM} states, model has {}", model.dim()));
    }
    let sched = parse_schedule(schedule)?;
    let levels = levels.clamp(2, model.dim());
    let mut out = Vec::with_capacity(points * (levels + 2));
    for s in unit_grid(points) {
        let sample = sample_spectrum(&model, &sched, s, &[1]).map_err(|e| e.to_string())?;
        out.push(s);
        out.extend_from_slice(&sample.eigenvalues[..levels]);
        out.push(sample.level_a(1, 1).unwrap_or(f64::NAN));
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn schedule_curves(names: &str, points: usize) -> Result<Vec<f64>, JsError> {
    schedule_rows(names, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn lz_excitation(h: f64, alpha: f64, schedule: &str, tau_min: f64, tau_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    lz_rows(h, alpha, schedule, tau_min, tau_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn spectrum(model: &str, schedule: &str, points: usize, levels: usize) -> Result<Vec<f64>, JsError> {
    spectrum_rows(model, schedule, points, levels).map_err(|e| JsError::new(&e))
}
