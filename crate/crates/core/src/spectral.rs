//! Instantaneous spectra along a schedule: gaps, adiabatic coefficients
//! `A_j^(m)(s) = |<j| d^m H/ds^m |0>| / gap_j^(m+1)`, endpoint bounds and the
//! first-order excitation amplitude.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{eigh, inner_slices, ComplexVector, HermitianMatrix, C64};
use crate::models::{interpolate_at, AnnealingModel};
use crate::schedules::Schedule;

/// Ground-state gaps at or below this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// `d^m H/ds^m = f^(m)(s) (H_pot - H_kin)`; order 0 gives `H(s)` itself.
pub fn hamiltonian_s_derivative(
    model: &AnnealingModel,
    sched: &Schedule,
    s: f64,
    order: usize,
) -> Result<HermitianMatrix> {
    if order == 0 {
        return interpolate_at(model, sched.eval(s)?);
    }
    let df = sched.deriv(s, order)?;
    Ok(model.difference().scaled(df))
}

/// A group of (numerically) equal eigenvalues.
#[derive(Clone, Debug)]
pub struct Level {
    pub energy: f64,
    pub first: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug)]
pub struct SpectrumSample {
    pub s: f64,
    /// Schedule value `f(s)`.
    pub f: f64,
    pub eigenvalues: Vec<f64>,
    pub levels: Vec<Level>,
    /// `gaps[j-1] = eps_j - eps_0` for eigenstate `j >= 1`.
    pub gaps: Vec<f64>,
    pub orders: Vec<usize>,
    /// `matrix_elements[o][j-1] = <j| d^m H/ds^m |0>` with `m = orders[o]`,
    /// in whatever basis the solver returned inside degenerate levels.
    pub matrix_elements: Vec<Vec<C64>>,
    /// Per-eigenstate `A_j^(m)`, diagnostics only for degenerate levels.
    pub a_coeffs: Vec<Vec<f64>>,
    /// `level_a_coeffs[o][l-1]` for excited level `l`:
    /// `sqrt(sum_{j in l} |<j|dH|0>|^2) / gap_l^(m+1)`, independent of the
    /// basis chosen inside the level.
    pub level_a_coeffs: Vec<Vec<f64>>,
}

impl SpectrumSample {
    pub fn ground_gap(&self) -> f64 {
        self.gaps[0]
    }

    pub fn level_gap(&self, level: usize) -> f64 {
        self.levels[level].energy - self.levels[0].energy
    }

    /// Level-aggregated `A^(m)` for excited level `level >= 1`.
    pub fn level_a(&self, order: usize, level: usize) -> Option<f64> {
        let o = self.orders.iter().position(|&m| m == order)?;
        self.level_a_coeffs[o].get(level.checked_sub(1)?).copied()
    }
}

pub fn sample_spectrum(
    model: &AnnealingModel,
    sched: &Schedule,
    s: f64,
    orders: &[usize],
) -> Result<SpectrumSample> {
    let derivs: Vec<f64> = orders
        .iter()
        .map(|&m| sched.deriv(s, m))
        .collect::<Result<_>>()?;
    let f = sched.eval(s)?;
    let eig = eigh(&interpolate_at(model, f)?)?;
    let dim = eig.dim();
    if dim < 2 {
        return Err(Error::usage("spectrum sampling needs at least two levels"));
    }
    let gaps: Vec<f64> = eig.eigenvalues[1..].iter().map(|e| e - eig.eigenvalues[0]).collect();
    if gaps[0] <= DEGENERACY_TOL {
        return Err(Error::Domain(format!(
            "ground state is degenerate at s = {s} (gap {:.3e})",
            gaps[0]
        )));
    }
    let levels: Vec<Level> = eig
        .levels()
        .into_iter()
        .map(|r| Level {
            energy: eig.eigenvalues[r.start],
            first: r.start,
            multiplicity: r.len(),
        })
        .collect();
    if levels[0].multiplicity > 1 {
        return Err(Error::Domain(format!("ground state is degenerate at s = {s}")));
    }

    let mut d_ground = vec![C64::new(0.0, 0.0); dim];
    model
        .difference()
        .apply_into(eig.eigenvectors[0].as_slice(), &mut d_ground);
    let base: Vec<C64> = eig.eigenvectors[1..]
        .iter()
        .map(|v| inner_slices(v.as_slice(), &d_ground))
        .collect();

    let mut matrix_elements = Vec::with_capacity(orders.len());
    let mut a_coeffs = Vec::with_capacity(orders.len());
    let mut level_a_coeffs = Vec::with_capacity(orders.len());
    for (&m, &df) in orders.iter().zip(&derivs) {
        let elems: Vec<C64> = base.iter().map(|z| z * df).collect();
        let a: Vec<f64> = elems
            .iter()
            .zip(&gaps)
            .map(|(z, g)| z.norm() / g.powi(m as i32 + 1))
            .collect();
        let la: Vec<f64> = levels[1..]
            .iter()
            .map(|lv| {
                let gap = lv.energy - levels[0].energy;
                let weight: f64 = (lv.first..lv.first + lv.multiplicity)
                    .map(|j| elems[j - 1].norm_sqr())
                    .sum();
                weight.sqrt() / gap.powi(m as i32 + 1)
            })
            .collect();
        matrix_elements.push(elems);
        a_coeffs.push(a);
        level_a_coeffs.push(la);
    }

    Ok(SpectrumSample {
        s,
        f,
        eigenvalues: eig.eigenvalues,
        levels,
        gaps,
        orders: orders.to_vec(),
        matrix_elements,
        a_coeffs,
        level_a_coeffs,
    })
}

/// Uniform grid of `points` values on `[0, 1]`.
pub fn unit_grid(points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points).map(|k| k as f64 / last).collect()
}

/// Largest `A_j(s)` (first order, level-aggregated) along the grid, with
/// the `s` where it occurs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdiabaticScan {
    pub tau_c: f64,
    pub s_at_max: f64,
    pub level: usize,
}

pub fn adiabatic_scan(model: &AnnealingModel, sched: &Schedule, grid: usize) -> Result<AdiabaticScan> {
    if grid < 2 {
        return Err(Error::usage("adiabatic condition needs a grid of at least 2 points"));
    }
    let mut best = AdiabaticScan {
        tau_c: 0.0,
        s_at_max: 0.0,
        level: 1,
    };
    for s in unit_grid(grid) {
        let sample = sample_spectrum(model, sched, s, &[1])?;
        for (l, &a) in sample.level_a_coeffs[0].iter().enumerate() {
            if a > best.tau_c {
                best = AdiabaticScan {
                    tau_c: a,
                    s_at_max: s,
                    level: l + 1,
                };
            }
        }
    }
    Ok(best)
}

/// The characteristic time `max_{s,j} A_j(s)` on a uniform grid.
pub fn adiabatic_condition(model: &AnnealingModel, sched: &Schedule, grid: usize) -> Result<f64> {
    adiabatic_scan(model, sched, grid).map(|scan| scan.tau_c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub m: usize,
    pub level: usize,
    pub a_start: f64,
    pub a_end: f64,
    /// `(A^(m)(0) + A^(m)(1))^2`
    pub coefficient: f64,
}

impl BoundReport {
    /// Leading-order bound `coefficient / tau^(2m)`.
    pub fn predicted(&self, tau: f64) -> f64 {
        self.coefficient / tau.powi(2 * self.m as i32)
    }
}

/// Endpoint coefficient of the `tau^(-2m)` excitation bound for excited
/// `level`. The schedule must be flat to order `m`.
pub fn bound_report(model: &AnnealingModel, sched: &Schedule, m: usize, level: usize) -> Result<BoundReport> {
    if m == 0 || m > sched.max_analytic_order() {
        return Err(Error::usage(format!(
            "bound order {m} must be in 1..={}",
            sched.max_analytic_order()
        )));
    }
    if !sched.check_flatness(m)? {
        return Err(Error::usage(format!(
            "schedule {sched} has a non-vanishing derivative of order < {m} at an endpoint; \
             the tau^-{} bound does not apply",
            2 * m
        )));
    }
    if level == 0 {
        return Err(Error::usage("bound level must be an excited level (>= 1)"));
    }
    let pick = |s: f64| -> Result<f64> {
        let sample = sample_spectrum(model, sched, s, &[m])?;
        sample
            .level_a(m, level)
            .ok_or_else(|| Error::usage(format!("level {level} does not exist at s = {s}")))
    };
    let a_start = pick(0.0)?;
    let a_end = pick(1.0)?;
    Ok(BoundReport {
        m,
        level,
        a_start,
        a_end,
        coefficient: (a_start + a_end).powi(2),
    })
}

/// First-order excitation amplitude into eigenstate `level`,
/// `int_0^1 ds exp(i tau phi(s)) / gap(s) <j(s)|dH/ds|0(s)>` with
/// `phi(s) = int_0^s gap`.
///
/// Eigenvectors are phase-aligned between neighbouring grid points. Each
/// panel is integrated exactly for a linearly varying amplitude and phase,
/// so the grid does not have to resolve individual oscillations.
pub fn perturbative_amplitude(
    model: &AnnealingModel,
    sched: &Schedule,
    tau: f64,
    level: usize,
    quad_points: usize,
) -> Result<C64> {
    if quad_points < 100 {
        return Err(Error::usage("perturbative_amplitude needs at least 100 quadrature points"));
    }
    if level == 0 {
        return Err(Error::usage("amplitude level must be an excited state (>= 1)"));
    }
    let diff = model.difference();
    let grid = unit_grid(quad_points);
    let mut amps = Vec::with_capacity(quad_points);
    let mut gaps = Vec::with_capacity(quad_points);
    let mut prev: Option<(ComplexVector, ComplexVector)> = None;
    let mut scratch = vec![C64::new(0.0, 0.0); model.dim()];
    for &s in &grid {
        let eig = eigh(&interpolate_at(model, sched.eval(s)?)?)?;
        if level >= eig.dim() {
            return Err(Error::usage(format!("level {level} does not exist")));
        }
        let e = &eig.eigenvalues;
        let tol = 1e-9 * e.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if e[1] - e[0] <= DEGENERACY_TOL.max(tol) {
            return Err(Error::Domain(format!("ground state is degenerate at s = {s}")));
        }
        let isolated = (e[level] - e[level - 1] > tol) && (level + 1 == e.len() || e[level + 1] - e[level] > tol);
        if !isolated {
            return Err(Error::Domain(format!("level {level} is degenerate at s = {s}")));
        }
        let mut ground = eig.eigenvectors[0].clone();
        let mut excited = eig.eigenvectors[level].clone();
        if let Some((g_prev, x_prev)) = &prev {
            align(&mut ground, g_prev);
            align(&mut excited, x_prev);
        }
        diff.apply_into(ground.as_slice(), &mut scratch);
        let elem = inner_slices(excited.as_slice(), &scratch) * sched.deriv(s, 1)?;
        let gap = e[level] - e[0];
        amps.push(elem / gap);
        gaps.push(gap);
        prev = Some((ground, excited));
    }

    let mut total = C64::new(0.0, 0.0);
    let mut phase = 0.0;
    for k in 0..quad_points - 1 {
        let h = grid[k + 1] - grid[k];
        let dphi = 0.5 * (gaps[k] + gaps[k + 1]) * h;
        let x = tau * dphi;
        let (e0, e1) = filon_moments(x);
        let start = C64::from_polar(1.0, tau * phase);
        total += start * (amps[k] * e0 + (amps[k + 1] - amps[k]) * e1) * h;
        phase += dphi;
    }
    Ok(total)
}

fn align(v: &mut ComplexVector, reference: &ComplexVector) {
    let overlap = inner_slices(reference.as_slice(), v.as_slice());
    if overlap.norm() > 0.0 {
        let rot = overlap.conj() / overlap.norm();
        for z in v.as_mut_slice() {
            *z *= rot;
        }
    }
}

/// `(int_0^1 e^{ixu} du, int_0^1 u e^{ixu} du)`.
fn filon_moments(x: f64) -> (C64, C64) {
    let i = C64::new(0.0, 1.0);
    if x.abs() < 1e-2 {
        let mut e0 = C64::new(0.0, 0.0);
        let mut e1 = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0); // (ix)^n / n!
        for n in 0..8 {
            let nf = n as f64;
            e0 += term / (nf + 1.0);
            e1 += term / (nf + 2.0);
            term *= i * x / (nf + 1.0);
        }
        return (e0, e1);
    }
    let ex = C64::from_polar(1.0, x);
    let e0 = (ex - 1.0) / (i * x);
    let e1 = ex / (i * x) + (ex - 1.0) / (x * x);
    (e0, e1)
}

/// Landau-Zener estimate `exp(-pi alpha^2 tau / (f'(s*) h))` with
/// `f(s*) = 1/2` located by bisection.
pub fn lz_nonadiabatic_probability(h: f64, alpha: f64, sched: &Schedule, tau: f64) -> Result<f64> {
    let s_star = crossing_point(sched)?;
    let slope = sched.deriv(s_star, 1)?;
    if !(slope > 0.0) {
        return Err(Error::Domain(format!("schedule {sched} has zero slope at its crossing s* = {s_star}")));
    }
    Ok((-PI * alpha * alpha * tau / (slope * h)).exp())
}

/// Solution of `f(s) = 1/2` to `1e-12`.
pub fn crossing_point(sched: &Schedule) -> Result<f64> {
    let g = |s: f64| sched.eval(s).map(|f| f - 0.5);
    let (mut lo, mut hi) = (0.0, 1.0);
    let (glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return Err(Error::Domain(format!("schedule {sched} never crosses f = 1/2")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form endpoint coefficient for the two-level model,
/// `4 h^2 a^2 / (h^2 + 4 a^2)^(m+2) * (|f^(m)(0)| + |f^(m)(1)|)^2`.
pub fn lz_bound_coefficient(h: f64, alpha: f64, sched: &Schedule, m: usize) -> Result<f64> {
    let ends = sched.deriv(0.0, m)?.abs() + sched.deriv(1.0, m)?.abs();
    let denom = (h * h + 4.0 * alpha * alpha).powi(m as i32 + 2);
    Ok(4.0 * h * h * alpha * alpha / denom * ends * ends)
}

/// First gap of the search Hamiltonian, `sqrt(1 - 4 (N-1)/N f (1-f))`.
pub fn grover_gap(n_items: usize, f: f64) -> f64 {
    let n = n_items as f64;
    (1.0 - 4.0 * (n - 1.0) / n * f * (1.0 - f)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_grover, build_lz};

    fn f(m: u8) -> Schedule {
        Schedule::polynomial(m).unwrap()
    }

    #[test]
    fn s_derivative_orders() {
        let model = build_lz(2.0, 0.2).unwrap();
        let diff = model.difference();
        let d1 = hamiltonian_s_derivative(&model, &f(1), 0.3, 1).unwrap();
        assert_eq!(d1, diff);
        let d2 = hamiltonian_s_derivative(&model, &f(1), 0.3, 2).unwrap();
        assert_eq!(d2.frobenius_norm(), 0.0);
        let d2 = hamiltonian_s_derivative(&model, &f(2), 0.0, 2).unwrap();
        assert!(d2.combine(1.0, &diff, -6.0).unwrap().frobenius_norm() < 1e-14);
    }

    #[test]
    fn lz_bound_coefficient_first_order() {
        // 4 * 4 * 0.04 / 4.16^3 * (1 + 1)^2
        let expect = 0.64 / 4.16f64.powi(3) * 4.0;
        assert!((expect - 0.03556).abs() < 1e-5);
        let closed = lz_bound_coefficient(2.0, 0.2, &f(1), 1).unwrap();
        assert!((closed - expect).abs() < 1e-15);
        let model = build_lz(2.0, 0.2).unwrap();
        let report = bound_report(&model, &f(1), 1, 1).unwrap();
        assert!((report.coefficient - expect).abs() < 1e-12);
        assert!((report.predicted(100.0) - expect * 1e-4).abs() < 1e-16);
    }

    #[test]
    fn lz_bound_matches_closed_form_for_all_orders() {
        let model = build_lz(2.0, 0.2).unwrap();
        for m in 1..=4u8 {
            let report = bound_report(&model, &f(m), m as usize, 1).unwrap();
            let closed = lz_bound_coefficient(2.0, 0.2, &f(m), m as usize).unwrap();
            assert!((report.coefficient / closed - 1.0).abs() < 1e-10, "m={m}");
        }
    }

    #[test]
    fn bound_requires_flatness() {
        let model = build_lz(2.0, 0.2).unwrap();
        assert!(matches!(bound_report(&model, &f(1), 2, 1), Err(Error::Usage(_))));
        assert!(matches!(bound_report(&model, &Schedule::cosine_sq(), 3, 1), Err(Error::Usage(_))));
        assert!(bound_report(&model, &Schedule::cosine_sq(), 2, 1).is_ok());
    }

    #[test]
    fn grover_midpoint_coefficient() {
        let model = build_grover(64).unwrap();
        let sample = sample_spectrum(&model, &f(1), 0.5, &[1]).unwrap();
        let expect = 63f64.sqrt() / 64.0 * 512.0;
        assert!((sample.level_a(1, 1).unwrap() - expect).abs() < 1e-9);
        assert!((sample.ground_gap() - 0.125).abs() < 1e-12);
        // the (N-2)-fold level at energy 1 is not coupled to the ground state
        assert_eq!(sample.levels.len(), 3);
        assert_eq!(sample.levels[2].multiplicity, 62);
        assert!(sample.level_a(1, 2).unwrap() < 1e-12);
    }

    #[test]
    fn zero_schedule_derivative_zeroes_coefficients() {
        let model = build_lz(2.0, 0.2).unwrap();
        let sample = sample_spectrum(&model, &f(3), 0.0, &[1, 2, 3]).unwrap();
        assert_eq!(sample.a_coeffs[0], vec![0.0]);
        assert_eq!(sample.a_coeffs[1], vec![0.0]);
        assert!(sample.a_coeffs[2][0] > 0.0);
    }

    #[test]
    fn degenerate_ground_state_is_reported() {
        use crate::models::{build_ising, Coupling, IsingInstance};
        let inst = IsingInstance::new(2, vec![Coupling { i: 0, j: 1, value: 1.0 }], 0.0, 1.0).unwrap();
        let model = build_ising(&inst).unwrap();
        let err = sample_spectrum(&model, &f(1), 1.0, &[1]).unwrap_err();
        assert!(matches!(err, Error::Domain(ref m) if m.contains("s = 1")), "{err}");
    }

    #[test]
    fn lz_probability_formula() {
        let p = lz_nonadiabatic_probability(2.0, 0.2, &f(1), 10.0).unwrap();
        assert!((p - (-PI * 0.04 * 10.0 / 2.0).exp()).abs() < 1e-15);
        assert!((p - 0.5335).abs() < 1e-4);
        let p2 = lz_nonadiabatic_probability(2.0, 0.2, &f(2), 10.0).unwrap();
        assert!((p2.ln() - p.ln() / 1.5).abs() < 1e-9);
        assert_eq!(lz_nonadiabatic_probability(2.0, 0.2, &f(3), 0.0).unwrap(), 1.0);
        assert!((crossing_point(&f(4)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn filon_moments_series_and_closed_form_agree() {
        for &x in &[0.009, -0.009, 0.011, -0.011] {
            let i = C64::new(0.0, 1.0);
            let ex = C64::from_polar(1.0, x);
            let closed0 = (ex - 1.0) / (i * x);
            let closed1 = ex / (i * x) + (ex - 1.0) / (x * x);
            let (e0, e1) = filon_moments(x);
            assert!((e0 - closed0).norm() < 1e-12);
            assert!((e1 - closed1).norm() < 1e-10);
        }
        let (e0, e1) = filon_moments(0.0);
        assert_eq!(e0, C64::new(1.0, 0.0));
        assert_eq!(e1, C64::new(0.5, 0.0));
    }

    #[test]
    fn amplitude_decays_with_tau() {
        let model = build_lz(2.0, 0.2).unwrap();
        let a100 = perturbative_amplitude(&model, &f(1), 100.0, 1, 2000).unwrap().norm();
        let a1000 = perturbative_amplitude(&model, &f(1), 1000.0, 1, 2000).unwrap().norm();
        assert!(a1000 < a100);
        assert!(perturbative_amplitude(&model, &f(1), 100.0, 1, 50).is_err());
    }
}
