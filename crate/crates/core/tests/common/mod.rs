// Invariant checks shared by the property suites and the acceptance target.
// Each returns Err with a description of the first violation.
#![allow(dead_code)]

use annealbench_core::harness::{
    fit_slope, run_sweep, FitWindow, SweepOptions, SweepSpec, TauGrid,
};
use annealbench_core::linalg::{eigh, eigvalsh, matvec, ComplexVector, HermitianMatrix, C64};
use annealbench_core::models::{
    build_grover, build_grover_reduced, build_ising, build_lz, interpolate, AnnealingModel,
    IsingInstance, ModelSpec, SplitMix64,
};
use annealbench_core::propagator::{
    evolve, evolve_with, excitation_overlaps, IntegratorConfig,
};
use annealbench_core::schedules::Schedule;
use annealbench_core::spectral::{grover_gap, perturbative_amplitude, sample_spectrum};

pub type Check = Result<(), String>;

pub fn fixture_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ising_3x3_seed0.txt")
}

pub fn fixture_ising() -> AnnealingModel {
    build_ising(&IsingInstance::from_file(&fixture_path()).unwrap()).unwrap()
}

pub fn lz() -> AnnealingModel {
    build_lz(2.0, 0.2).unwrap()
}

pub fn sched(name: &str) -> Schedule {
    name.parse().unwrap()
}

/// Every built-in schedule kind, compositions included.
pub fn all_schedules() -> Vec<Schedule> {
    [
        "f1", "f2", "f3", "f4", "cossq", "opt:2", "opt:16", "opt:64", "opt1:64", "opt2:64",
        "opt3:64", "opt4:64", "opt2:256",
    ]
    .iter()
    .map(|s| sched(s))
    .collect()
}

/// Uniform on `[-1, 1)`.
pub fn sym(rng: &mut SplitMix64) -> f64 {
    2.0 * rng.next_f64() - 1.0
}

pub fn random_hermitian(dim: usize, rng: &mut SplitMix64) -> HermitianMatrix {
    let mut e = vec![C64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        e[i * dim + i] = C64::new(sym(rng), 0.0);
        for j in i + 1..dim {
            let z = C64::new(sym(rng), sym(rng));
            e[i * dim + j] = z;
            e[j * dim + i] = z.conj();
        }
    }
    HermitianMatrix::new(dim, e).unwrap()
}

pub fn random_vector(dim: usize, rng: &mut SplitMix64) -> ComplexVector {
    ComplexVector::new((0..dim).map(|_| C64::new(sym(rng), sym(rng))).collect()).unwrap()
}

fn frob(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn eigh_round_trip(h: &HermitianMatrix) -> Check {
    let eig = eigh(h).map_err(|e| e.to_string())?;
    let n = h.dim();
    if eig.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("dim {n}: eigenvalues not ascending"));
    }
    // Rebuilt here rather than through reconstruct() so the check is independent.
    let mut r = vec![C64::new(0.0, 0.0); n * n];
    for (lam, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        let v = v.as_slice();
        for i in 0..n {
            let a = v[i] * lam;
            for j in 0..n {
                r[i * n + j] += a * v[j].conj();
            }
        }
    }
    let diff: Vec<C64> = r.iter().zip(h.as_slice()).map(|(a, b)| a - b).collect();
    let err = frob(&diff);
    let scale = h.frobenius_norm();
    if err > 1e-9 * scale {
        return Err(format!("dim {n}: round-trip error {err:.3e} > 1e-9 * {scale:.3e}"));
    }
    Ok(())
}

/// `U H U^dagger` where the rows of `U` are the eigenvectors of `g`.
pub fn conjugate(h: &HermitianMatrix, g: &HermitianMatrix) -> HermitianMatrix {
    let n = h.dim();
    let u: Vec<C64> = eigh(g)
        .unwrap()
        .eigenvectors
        .iter()
        .flat_map(|v| v.as_slice().to_vec())
        .collect();
    let mut uh = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let a = u[i * n + k];
            for j in 0..n {
                uh[i * n + j] += a * h.get(k, j);
            }
        }
    }
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += uh[i * n + k] * u[j * n + k].conj();
            }
            out[i * n + j] = acc;
        }
    }
    for i in 0..n {
        out[i * n + i].im = 0.0;
        for j in i + 1..n {
            let avg = 0.5 * (out[i * n + j] + out[j * n + i].conj());
            out[i * n + j] = avg;
            out[j * n + i] = avg.conj();
        }
    }
    HermitianMatrix::new(n, out).unwrap()
}

pub fn unitary_invariance(h: &HermitianMatrix, g: &HermitianMatrix) -> Check {
    let a = eigvalsh(h).map_err(|e| e.to_string())?;
    let b = eigvalsh(&conjugate(h, g)).map_err(|e| e.to_string())?;
    let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return Err(format!("dim {}: spectra differ by {worst:.3e}", h.dim()));
    }
    Ok(())
}

pub fn matvec_linearity(m: &HermitianMatrix, a: &ComplexVector, b: &ComplexVector, alpha: C64, beta: C64) -> Check {
    let lhs = matvec(m, &a.combine(alpha, b, beta).unwrap()).unwrap();
    let ma = matvec(m, a).unwrap();
    let mb = matvec(m, b).unwrap();
    let rhs = ma.combine(alpha, &mb, beta).unwrap();
    let diff: Vec<C64> = lhs.as_slice().iter().zip(rhs.as_slice()).map(|(x, y)| x - y).collect();
    let scale = alpha.norm() * ma.norm() + beta.norm() * mb.norm();
    if frob(&diff) > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(format!("linearity violated by {:.3e} (scale {scale:.3e})", frob(&diff)));
    }
    Ok(())
}

/// Central differences of the analytic derivative one order below.
pub fn derivative_matches_fd(sched: &Schedule, s: f64) -> Check {
    let h = 1e-4;
    for order in 1..=3 {
        let analytic = sched.deriv(s, order).unwrap();
        let central = |h: f64| {
            (sched.deriv(s + h, order - 1).unwrap() - sched.deriv(s - h, order - 1).unwrap()) / (2.0 * h)
        };
        // Richardson step removes the h^2 term
        let fd = (4.0 * central(h / 2.0) - central(h)) / 3.0;
        if (fd - analytic).abs() > 1e-6 * analytic.abs().max(1.0) {
            return Err(format!("{sched} order {order} at s={s}: analytic {analytic:.12e} vs fd {fd:.12e}"));
        }
    }
    Ok(())
}

pub fn polynomial_symmetry(m: u8, points: usize) -> Check {
    let f = Schedule::polynomial(m).unwrap();
    for k in 0..points {
        let s = k as f64 / (points - 1) as f64;
        let sum = f.eval(s).unwrap() + f.eval(1.0 - s).unwrap();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("f{m}({s}) + f{m}(1-s) = {sum:.15}"));
        }
    }
    Ok(())
}

pub fn endpoint_table() -> Check {
    for (m, want) in [(1u8, 1.0), (2, 6.0), (3, 60.0), (4, 840.0)] {
        let f = Schedule::polynomial(m).unwrap();
        for s in [0.0, 1.0] {
            let got = f.deriv(s, m as usize).unwrap().abs();
            if (got - want).abs() > 1e-9 * want {
                return Err(format!("|f{m}^({m})({s})| = {got}, expected {want}"));
            }
            for lower in 1..m as usize {
                let d = f.deriv(s, lower).unwrap();
                if d.abs() > 1e-9 * want {
                    return Err(format!("f{m}^({lower})({s}) = {d}, expected 0"));
                }
            }
        }
    }
    Ok(())
}

pub fn interpolate_is_hermitian(model: &AnnealingModel, sched: &Schedule, s: f64) -> Check {
    let h = interpolate(model, sched, s).map_err(|e| e.to_string())?;
    let n = h.dim();
    for i in 0..n {
        for j in 0..n {
            let d = h.get(i, j) - h.get(j, i).conj();
            if d.norm() > 1e-12 * (1.0 + h.get(i, j).norm()) {
                return Err(format!("{}: H({s}) not Hermitian at ({i},{j})", model.label()));
            }
        }
    }
    Ok(())
}

pub fn ising_potential_diagonal(model: &AnnealingModel) -> Check {
    let off = model.h_pot().max_off_diagonal();
    if off != 0.0 {
        return Err(format!("H_pot has off-diagonal magnitude {off:e}"));
    }
    Ok(())
}

/// Eigenvalues of the search Hamiltonian at `f`: `N-2` of them equal 1.
pub fn grover_two_non_unit(n: usize, f: f64) -> Check {
    let model = build_grover(n).unwrap();
    let ev = eigvalsh(&annealbench_core::models::interpolate_at(&model, f).unwrap()).unwrap();
    let non_unit = ev.iter().filter(|e| (*e - 1.0).abs() > 1e-9).count();
    if non_unit != 2 {
        return Err(format!("N={n} f={f}: {non_unit} non-unit eigenvalues"));
    }
    Ok(())
}

/// Largest component of the state outside span{|0>, sum_{i>0}|i>} seen
/// during an evolution of the full search model.
pub fn grover_leakage(n: usize, schedule: &Schedule, tau: f64, every: usize) -> f64 {
    let model = build_grover(n).unwrap();
    let mut worst = 0.0f64;
    evolve_with(&model, schedule, tau, &cfg_for(tau), every, |_, psi| {
        let mean = psi[1..].iter().sum::<C64>() / (n - 1) as f64;
        let out: f64 = psi[1..].iter().map(|z| (z - mean).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(out);
        Ok(())
    })
    .unwrap();
    worst
}

pub fn grover_reduced_matches_full(n: usize, schedule: &Schedule, tau: f64) -> Check {
    let cfg = cfg_for(tau);
    let full = evolve(&build_grover(n).unwrap(), schedule, tau, &cfg).unwrap();
    let red = evolve(&build_grover_reduced(n).unwrap(), schedule, tau, &cfg).unwrap();
    let d = (full.p_excited - red.p_excited).abs();
    if d > 1e-9 {
        return Err(format!(
            "N={n} {schedule} tau={tau}: full {:.12e} reduced {:.12e}",
            full.p_excited, red.p_excited
        ));
    }
    Ok(())
}

/// `A_j^(m)` against `|f^(m)| |<j|(H_pot - H_kin)|0>| / gap^(m+1)` built
/// from a fresh diagonalization.
pub fn a_factorization(model: &AnnealingModel, schedule: &Schedule, s: f64) -> Check {
    let orders = [1usize, 2, 3];
    let sample = sample_spectrum(model, schedule, s, &orders).map_err(|e| e.to_string())?;
    let eig = eigh(&interpolate(model, schedule, s).unwrap()).unwrap();
    let diff = model.difference();
    let d0 = matvec(&diff, &eig.eigenvectors[0]).unwrap();
    for (oi, &m) in orders.iter().enumerate() {
        let fm = schedule.deriv(s, m).unwrap().abs();
        for j in 1..eig.dim() {
            let gap = eig.eigenvalues[j] - eig.eigenvalues[0];
            let elem = annealbench_core::linalg::inner(&eig.eigenvectors[j], &d0).unwrap().norm();
            let want = fm * elem / gap.powi(m as i32 + 1);
            let got = sample.a_coeffs[oi][j - 1];
            let scale = 1.0f64.max(want.abs());
            if (got - want).abs() > 1e-10 * scale {
                // Degenerate levels have basis-dependent per-state values;
                // compare the level aggregate instead.
                let tol = 1e-9 * eig.eigenvalues.iter().fold(1.0f64, |a, x| a.max(x.abs()));
                let degenerate = (j > 1 && (eig.eigenvalues[j] - eig.eigenvalues[j - 1]).abs() <= tol)
                    || (j + 1 < eig.dim() && (eig.eigenvalues[j + 1] - eig.eigenvalues[j]).abs() <= tol);
                if !degenerate {
                    return Err(format!(
                        "{} {schedule} s={s} j={j} m={m}: {got:.15e} vs {want:.15e}",
                        model.label()
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn grover_gap_matches(n: usize, grid: usize) -> Check {
    let model = build_grover(n).unwrap();
    for k in 0..grid {
        let f = k as f64 / (grid - 1) as f64;
        let ev = eigvalsh(&annealbench_core::models::interpolate_at(&model, f).unwrap()).unwrap();
        let d = (ev[1] - ev[0] - grover_gap(n, f)).abs();
        if d > 1e-10 {
            return Err(format!("N={n} f={f}: gap off by {d:.3e}"));
        }
    }
    Ok(())
}

/// Relative change of `|amplitude|^2` when the quadrature grid is doubled.
pub fn perturbative_doubling_change(model: &AnnealingModel, schedule: &Schedule, tau: f64, points: usize) -> f64 {
    let a = perturbative_amplitude(model, schedule, tau, 1, points).unwrap().norm_sqr();
    let b = perturbative_amplitude(model, schedule, tau, 1, 2 * points - 1).unwrap().norm_sqr();
    (a - b).abs() / b
}

pub fn norm_conserved(model: &AnnealingModel, schedule: &Schedule, tau: f64) -> Check {
    let r = evolve(model, schedule, tau, &cfg_for(tau)).map_err(|e| e.to_string())?;
    if r.norm_drift > 1e-10 {
        return Err(format!("{} {schedule} tau={tau}: drift {:.3e}", model.label(), r.norm_drift));
    }
    Ok(())
}

pub fn gauge_invariance(model: &AnnealingModel, schedule: &Schedule, tau: f64, c: f64) -> Check {
    let cfg = cfg_for(tau);
    let a = evolve(model, schedule, tau, &cfg).unwrap();
    let b = evolve(&model.shifted(c).unwrap(), schedule, tau, &cfg).unwrap();
    let dp = (a.p_excited - b.p_excited).abs();
    let de = (a.e_residual - b.e_residual).abs();
    if dp >= 1e-9 || de >= 1e-9 {
        return Err(format!(
            "{} {schedule} tau={tau} shift {c}: dp {dp:.3e} de {de:.3e}",
            model.label()
        ));
    }
    Ok(())
}

/// LZ under `f` and under `1 - f(1 - s)`.
pub fn time_reversal(schedule: &Schedule, tau: f64) -> Check {
    let model = lz();
    let cfg = cfg_for(tau);
    let a = evolve(&model, schedule, tau, &cfg).unwrap();
    let b = evolve(&model, &schedule.clone().reflected(), tau, &cfg).unwrap();
    let d = (a.p_excited - b.p_excited).abs();
    if d > 1e-9 {
        return Err(format!(
            "{schedule} tau={tau}: {:.12e} vs reflected {:.12e}",
            a.p_excited, b.p_excited
        ));
    }
    Ok(())
}

/// `e_residual` against `sum_j (eps_j - eps_0) |<j|psi>|^2`, and the level
/// populations summing to one.
pub fn spectral_sum(model: &AnnealingModel, schedule: &Schedule, tau: f64) -> Check {
    let r = evolve(model, schedule, tau, &cfg_for(tau)).unwrap();
    let pops = excitation_overlaps(model, &r.final_state).unwrap();
    let e0 = model.exact_ground_energy_final();
    let total: f64 = pops.iter().map(|p| p.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("{} tau={tau}: populations sum to {total:.15}", model.label()));
    }
    let sum: f64 = pops.iter().map(|p| (p.energy - e0) * p.probability).sum();
    let scale = r.e_residual.abs().max(1e-300);
    // Below ~1e-13 both sides are rounding noise of O(1) energies.
    if (sum - r.e_residual).abs() > 1e-9 * scale && (sum - r.e_residual).abs() > 1e-14 {
        return Err(format!(
            "{} {schedule} tau={tau}: spectral sum {sum:.15e} vs e_residual {:.15e}",
            model.label(),
            r.e_residual
        ));
    }
    Ok(())
}

pub fn fit_exact_power_law(c: f64, slope: f64, lo: f64, decades: f64, ppd: usize) -> Result<f64, String> {
    let n = (decades * ppd as f64).round() as usize;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|k| {
            let t = lo * 10f64.powf(k as f64 / ppd as f64);
            (t, c * t.powf(slope))
        })
        .collect();
    let hi = pts.last().unwrap().0;
    let fit = fit_slope(&pts, FitWindow::new(lo, hi).unwrap(), 0.0).map_err(|e| e.to_string())?;
    Ok(fit.slope)
}

pub fn fit_scale_equivariance(points: &[(f64, f64)], c: f64) -> Check {
    let lo = points.first().unwrap().0;
    let hi = points.last().unwrap().0;
    let w = FitWindow::new(lo, hi).unwrap();
    let a = fit_slope(points, w, 0.0).map_err(|e| e.to_string())?;
    let scaled: Vec<(f64, f64)> = points.iter().map(|&(t, y)| (t, c * y)).collect();
    let b = fit_slope(&scaled, w, 0.0).map_err(|e| e.to_string())?;
    if (a.slope - b.slope).abs() > 1e-12 {
        return Err(format!("slope {} vs {} after scaling by {c}", a.slope, b.slope));
    }
    if (b.intercept - a.intercept - c.log10()).abs() > 1e-9 {
        return Err(format!("intercept moved by {} not log10({c})", b.intercept - a.intercept));
    }
    Ok(())
}

fn strip_created(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# created"))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn small_sweep(out: &std::path::Path) -> SweepSpec {
    let mut spec = SweepSpec::new(
        ModelSpec::Lz { h: 2.0, alpha: 0.2 },
        vec![sched("f1"), sched("f2"), sched("cossq")],
        TauGrid::new(1.0, 50.0, 4).unwrap(),
    );
    spec.output = Some(out.to_path_buf());
    spec
}

/// Two fresh runs, one with two workers, must write identical tables.
pub fn sweep_determinism(dir: &std::path::Path) -> Check {
    let a = dir.join("a.csv");
    let b = dir.join("b.csv");
    run_sweep(&small_sweep(&a), &SweepOptions::default()).map_err(|e| e.to_string())?;
    let opts = SweepOptions { jobs: 2, ..Default::default() };
    run_sweep(&small_sweep(&b), &opts).map_err(|e| e.to_string())?;
    let ta = strip_created(&std::fs::read_to_string(&a).unwrap());
    let tb = strip_created(&std::fs::read_to_string(&b).unwrap());
    if ta != tb {
        return Err("sweep tables differ between runs".into());
    }
    Ok(())
}

/// Interrupts after `k` rows (and once more mid-line) then resumes.
pub fn sweep_resumability(dir: &std::path::Path, k: usize) -> Check {
    let full = dir.join("full.csv");
    let part = dir.join("part.csv");
    run_sweep(&small_sweep(&full), &SweepOptions::default()).map_err(|e| e.to_string())?;
    let opts = SweepOptions { max_new_rows: Some(k), ..Default::default() };
    run_sweep(&small_sweep(&part), &opts).map_err(|e| e.to_string())?;
    // Simulate a crash in the middle of writing the next row.
    let mut text = std::fs::read_to_string(&part).unwrap();
    text.push_str("f2,1.2345");
    std::fs::write(&part, text).unwrap();
    run_sweep(&small_sweep(&part), &SweepOptions::default()).map_err(|e| e.to_string())?;
    let a = strip_created(&std::fs::read_to_string(&full).unwrap());
    let b = strip_created(&std::fs::read_to_string(&part).unwrap());
    if a != b {
        return Err(format!("resumed table after {k} rows differs from uninterrupted run"));
    }
    Ok(())
}

/// 160 steps per unit time and at least 1000 steps. The default density
/// drifts by up to a few 1e-9 in the crossover regime.
pub fn cfg_for(tau: f64) -> IntegratorConfig {
    let cfg = IntegratorConfig::with_density(160.0);
    let n = cfg.steps_for(tau).max(1000);
    cfg.with_steps(n)
}

pub fn rng(seed: u64) -> SplitMix64 {
    SplitMix64::new(seed)
}

pub fn random_interior(rng: &mut SplitMix64) -> f64 {
    0.001 + 0.998 * rng.next_f64()
}
