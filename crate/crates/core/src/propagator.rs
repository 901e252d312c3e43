//! Integrates `i dpsi/ds = tau H(s) psi` from the ground state of `H_kin`
//! and measures excitation probability and residual energy at `s = 1`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{eigh, inner_slices, ComplexVector, HermitianMatrix, C64};
use crate::models::{interpolate_at, AnnealingModel};
use crate::schedules::Schedule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Rk4,
    /// `exp(-i tau ds H(s_mid))` per step, from an eigen-decomposition of the
    /// midpoint Hamiltonian. Exactly unitary, second order.
    UnitaryMidpoint,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Rk4 => "rk4",
            Method::UnitaryMidpoint => "unitary_midpoint",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rk4" => Ok(Method::Rk4),
            "unitary_midpoint" => Ok(Method::UnitaryMidpoint),
            other => Err(Error::usage(format!("unknown integrator '{other}' (rk4 | unitary_midpoint)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    /// Fixed number of steps in `s`.
    Fixed(usize),
    /// Steps per unit of physical time, i.e. `ceil(density * tau)` steps.
    Density(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub steps: StepPolicy,
    /// Normalize after every step instead of reporting drift.
    pub renormalize: bool,
    /// Largest tolerated `| ||psi(1)|| - 1 |` when not renormalizing.
    pub norm_ceiling: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            steps: StepPolicy::Density(40.0),
            renormalize: false,
            norm_ceiling: 1e-8,
        }
    }
}

impl IntegratorConfig {
    pub fn with_density(density: f64) -> Self {
        Self {
            steps: StepPolicy::Density(density),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.steps {
            StepPolicy::Fixed(n) if n < 10 => Err(Error::usage(format!("need at least 10 steps, got {n}"))),
            StepPolicy::Density(d) if !(d > 0.0) => Err(Error::usage(format!("step density must be > 0, got {d}"))),
            _ => Ok(()),
        }
    }

    pub fn steps_for(&self, tau: f64) -> usize {
        match self.steps {
            StepPolicy::Fixed(n) => n,
            StepPolicy::Density(d) => ((d * tau).ceil() as usize).max(10),
        }
    }

    /// Same config with a fixed step count.
    pub fn with_steps(&self, n: usize) -> Self {
        Self {
            steps: StepPolicy::Fixed(n),
            ..*self
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub final_state: ComplexVector,
    pub tau: f64,
    pub norm_drift: f64,
    /// Population outside the ground level of `H_pot`.
    pub p_excited: f64,
    /// `<psi|H_pot|psi> - eps_0(1)`.
    pub e_residual: f64,
    pub steps_used: usize,
    pub model: String,
    pub schedule: String,
}

/// One record of a dumped trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub s: f64,
    pub norm: f64,
    /// Population outside the instantaneous ground state of `H(s)`.
    pub p_excited: f64,
}

/// Matrix-vector kernel specialised to the structure of an operator.
enum Kernel {
    Diagonal(Vec<f64>),
    Sparse { row_start: Vec<usize>, cols: Vec<usize>, vals: Entries },
    Dense { dim: usize, vals: Entries },
}

enum Entries {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

impl Entries {
    fn collect<'a>(values: impl Iterator<Item = &'a C64>, real: bool) -> Self {
        if real {
            Entries::Real(values.map(|z| z.re).collect())
        } else {
            Entries::Complex(values.copied().collect())
        }
    }
}

fn dot_real(vals: &[f64], v: impl Iterator<Item = C64>) -> C64 {
    vals.iter().zip(v).fold(C64::new(0.0, 0.0), |acc, (a, x)| acc + x * *a)
}

fn dot_complex(vals: &[C64], v: impl Iterator<Item = C64>) -> C64 {
    vals.iter().zip(v).fold(C64::new(0.0, 0.0), |acc, (a, x)| acc + a * x)
}

impl Kernel {
    fn new(m: &HermitianMatrix) -> Self {
        let n = m.dim();
        if m.is_diagonal() {
            return Kernel::Diagonal(m.diagonal_values());
        }
        let zero = C64::new(0.0, 0.0);
        let real = m.as_slice().iter().all(|z| z.im == 0.0);
        let nnz = m.as_slice().iter().filter(|z| **z != zero).count();
        if nnz * 4 > n * n {
            return Kernel::Dense {
                dim: n,
                vals: Entries::collect(m.as_slice().iter(), real),
            };
        }
        let mut row_start = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut nonzero = Vec::with_capacity(nnz);
        for i in 0..n {
            row_start.push(cols.len());
            for (j, z) in m.row(i).iter().enumerate() {
                if *z != zero {
                    cols.push(j);
                    nonzero.push(z);
                }
            }
        }
        row_start.push(cols.len());
        Kernel::Sparse {
            row_start,
            cols,
            vals: Entries::collect(nonzero.into_iter(), real),
        }
    }

    /// `out += coef * A v`
    fn accumulate(&self, coef: f64, v: &[C64], out: &mut [C64]) {
        if coef == 0.0 {
            return;
        }
        match self {
            Kernel::Diagonal(d) => {
                for ((o, x), a) in out.iter_mut().zip(v).zip(d) {
                    *o += x * (a * coef);
                }
            }
            Kernel::Sparse { row_start, cols, vals } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let range = row_start[i]..row_start[i + 1];
                    let gathered = cols[range.clone()].iter().map(|&j| v[j]);
                    let acc = match vals {
                        Entries::Real(a) => dot_real(&a[range], gathered),
                        Entries::Complex(a) => dot_complex(&a[range], gathered),
                    };
                    *o += acc * coef;
                }
            }
            Kernel::Dense { dim, vals } => {
                for (i, o) in out.iter_mut().enumerate() {
                    let range = i * dim..(i + 1) * dim;
                    let acc = match vals {
                        Entries::Real(a) => dot_real(&a[range], v.iter().copied()),
                        Entries::Complex(a) => dot_complex(&a[range], v.iter().copied()),
                    };
                    *o += acc * coef;
                }
            }
        }
    }
}

/// `(1 - f) K + f P` applied without forming the sum.
struct InterpolatedOperator {
    kin: Kernel,
    pot: Kernel,
}

impl InterpolatedOperator {
    fn new(model: &AnnealingModel) -> Self {
        Self {
            kin: Kernel::new(model.h_kin()),
            pot: Kernel::new(model.h_pot()),
        }
    }

    fn apply(&self, f: f64, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        self.kin.accumulate(1.0 - f, v, out);
        self.pot.accumulate(f, v, out);
    }
}

pub fn evolve(model: &AnnealingModel, sched: &Schedule, tau: f64, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
    evolve_observed(model, sched, tau, cfg, 0, |_| {})
}

/// [`evolve`] that also reports a [`TrajectoryPoint`] every `every` steps
/// (and at both ends). `every = 0` disables the observer.
pub fn evolve_observed(
    model: &AnnealingModel,
    sched: &Schedule,
    tau: f64,
    cfg: &IntegratorConfig,
    every: usize,
    mut observer: impl FnMut(TrajectoryPoint),
) -> Result<EvolutionResult> {
    evolve_with(model, sched, tau, cfg, every, |s, psi| {
        let eig = eigh(&interpolate_at(model, sched.eval(s)?)?)?;
        let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let ground = eig.eigenvectors[0].as_slice();
        observer(TrajectoryPoint {
            s,
            norm: norm_sqr.sqrt(),
            p_excited: excited_fraction(psi, &[ground], norm_sqr),
        });
        Ok(())
    })
}

/// [`evolve`] that hands the raw state to `inspect` at `s = 0`, every
/// `every` steps and at `s = 1`. `every = 0` disables inspection.
pub fn evolve_with(
    model: &AnnealingModel,
    sched: &Schedule,
    tau: f64,
    cfg: &IntegratorConfig,
    every: usize,
    mut inspect: impl FnMut(f64, &[C64]) -> Result<()>,
) -> Result<EvolutionResult> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::usage(format!("annealing time must be positive, got {tau}")));
    }
    cfg.validate()?;
    let steps = cfg.steps_for(tau);
    let h = 1.0 / steps as f64;
    let mut psi = model.initial_state().as_slice().to_vec();

    let mut record = |k: usize, psi: &[C64]| -> Result<()> {
        if every == 0 || (k % every != 0 && k != steps) {
            return Ok(());
        }
        inspect(k as f64 * h, psi)
    };
    record(0, &psi)?;

    match cfg.method {
        Method::Rk4 => {
            let op = InterpolatedOperator::new(model);
            let n = psi.len();
            let zero = C64::new(0.0, 0.0);
            let mut k1 = vec![zero; n];
            let mut k2 = vec![zero; n];
            let mut k3 = vec![zero; n];
            let mut k4 = vec![zero; n];
            let mut tmp = vec![zero; n];
            let mi = C64::new(0.0, -tau);
            let mut f_start = sched.eval(0.0)?;
            for k in 0..steps {
                let s = k as f64 * h;
                let f_mid = sched.eval(s + 0.5 * h)?;
                let f_end = sched.eval(((k + 1) as f64 * h).min(1.0))?;

                // Integrate in the frame rotating with the current mean
                // energy: subtracting a constant from H within a step only
                // changes the global phase.
                op.apply(f_start, &psi, &mut k1);
                let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                let shift = inner_slices(&psi, &k1).re / norm_sqr;

                let deriv = |out: &mut [C64], state: &[C64]| {
                    for (o, x) in out.iter_mut().zip(state) {
                        *o = (*o - x * shift) * mi;
                    }
                };
                deriv(&mut k1, &psi);

                for ((t, x), d) in tmp.iter_mut().zip(&psi).zip(&k1) {
                    *t = x + d * (0.5 * h);
                }
                op.apply(f_mid, &tmp, &mut k2);
                deriv(&mut k2, &tmp);

                for ((t, x), d) in tmp.iter_mut().zip(&psi).zip(&k2) {
                    *t = x + d * (0.5 * h);
                }
                op.apply(f_mid, &tmp, &mut k3);
                deriv(&mut k3, &tmp);

                for ((t, x), d) in tmp.iter_mut().zip(&psi).zip(&k3) {
                    *t = x + d * h;
                }
                op.apply(f_end, &tmp, &mut k4);
                deriv(&mut k4, &tmp);

                for i in 0..n {
                    psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
                }
                if cfg.renormalize {
                    normalize(&mut psi);
                }
                f_start = f_end;
                record(k + 1, &psi)?;
            }
        }
        Method::UnitaryMidpoint => {
            let n = psi.len();
            let mut coeffs = vec![C64::new(0.0, 0.0); n];
            for k in 0..steps {
                let s_mid = (k as f64 + 0.5) * h;
                let eig = eigh(&interpolate_at(model, sched.eval(s_mid)?)?)?;
                let e0 = eig.eigenvalues[0];
                for (c, (v, e)) in coeffs.iter_mut().zip(eig.eigenvectors.iter().zip(&eig.eigenvalues)) {
                    *c = inner_slices(v.as_slice(), &psi) * C64::from_polar(1.0, -tau * h * (e - e0));
                }
                psi.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                for (c, v) in coeffs.iter().zip(&eig.eigenvectors) {
                    for (z, a) in psi.iter_mut().zip(v.as_slice()) {
                        *z += a * c;
                    }
                }
                if cfg.renormalize {
                    normalize(&mut psi);
                }
                record(k + 1, &psi)?;
            }
        }
    }

    let final_state = ComplexVector::new(psi)?;
    let norm = final_state.norm();
    let norm_drift = (norm - 1.0).abs();
    if !cfg.renormalize && norm_drift > cfg.norm_ceiling {
        return Err(Error::Numeric(format!(
            "norm drift {norm_drift:.3e} exceeds ceiling {:.1e} at tau = {tau} with {steps} steps; use more steps",
            cfg.norm_ceiling
        )));
    }
    let (p_excited, e_residual) = final_observables(model, &final_state)?;
    Ok(EvolutionResult {
        final_state,
        tau,
        norm_drift,
        p_excited,
        e_residual,
        steps_used: steps,
        model: model.label().to_string(),
        schedule: sched.to_string(),
    })
}

fn normalize(psi: &mut [C64]) {
    let n = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= n);
}

/// `|| psi - sum_g <g|psi> g ||^2 / ||psi||^2`. Projecting out the ground
/// level keeps full relative precision for small excitations, unlike
/// `1 - |<0|psi>|^2`.
fn excited_fraction(psi: &[C64], ground: &[&[C64]], norm_sqr: f64) -> f64 {
    let mut rest = psi.to_vec();
    for g in ground {
        let c = inner_slices(g, psi);
        for (r, a) in rest.iter_mut().zip(g.iter()) {
            *r -= a * c;
        }
    }
    rest.iter().map(|z| z.norm_sqr()).sum::<f64>() / norm_sqr
}

/// Excitation probability out of the ground level of `H_pot` and residual
/// energy `<psi|(H_pot - eps_0)|psi> / <psi|psi>`.
pub fn final_observables(model: &AnnealingModel, state: &ComplexVector) -> Result<(f64, f64)> {
    if state.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: state.dim(),
        });
    }
    let spectrum = model.final_spectrum();
    let ground_level = spectrum.levels()[0].clone();
    let ground: Vec<&[C64]> = spectrum.eigenvectors[ground_level]
        .iter()
        .map(|v| v.as_slice())
        .collect();
    let psi = state.as_slice();
    let norm_sqr = state.norm_sqr();
    let p_excited = excited_fraction(psi, &ground, norm_sqr);

    let e0 = model.exact_ground_energy_final();
    let pot = model.h_pot();
    let e_residual = if pot.is_diagonal() {
        pot.diagonal_values()
            .iter()
            .zip(psi)
            .map(|(d, z)| (d - e0) * z.norm_sqr())
            .sum::<f64>()
            / norm_sqr
    } else {
        let mut w = vec![C64::new(0.0, 0.0); psi.len()];
        pot.apply_into(psi, &mut w);
        for (x, z) in w.iter_mut().zip(psi) {
            *x -= z * e0;
        }
        inner_slices(psi, &w).re / norm_sqr
    };
    Ok((p_excited, e_residual))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelPopulation {
    pub level: usize,
    pub energy: f64,
    pub probability: f64,
}

/// Populations of the eigenlevels of `H_pot` (degenerate levels summed),
/// normalized to the state's norm. Levels with exactly zero weight are
/// omitted.
pub fn excitation_overlaps(model: &AnnealingModel, state: &ComplexVector) -> Result<Vec<LevelPopulation>> {
    if state.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: state.dim(),
        });
    }
    let spectrum = model.final_spectrum();
    let norm_sqr = state.norm_sqr();
    let mut out = Vec::new();
    for (level, range) in spectrum.levels().into_iter().enumerate() {
        let energy = spectrum.eigenvalues[range.start];
        let probability: f64 = spectrum.eigenvectors[range]
            .iter()
            .map(|v| inner_slices(v.as_slice(), state.as_slice()).norm_sqr())
            .sum::<f64>()
            / norm_sqr;
        if probability != 0.0 {
            out.push(LevelPopulation {
                level,
                energy,
                probability,
            });
        }
    }
    Ok(out)
}

/// Step-halving study: runs at `n`, `2n` and `4n` steps.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub coarse: EvolutionResult,
    pub fine: EvolutionResult,
    pub finest: EvolutionResult,
    /// `|p(n) - p(2n)| / |p(2n) - p(4n)|`; about 16 for a fourth-order method.
    pub ratio: f64,
    /// `|e(n) - e(2n)| / e(2n)`.
    pub e_residual_change: f64,
    /// `|p(n) - p(2n)| / p(2n)`.
    pub p_excited_change: f64,
}

pub fn convergence_check(
    model: &AnnealingModel,
    sched: &Schedule,
    tau: f64,
    cfg: &IntegratorConfig,
) -> Result<ConvergenceReport> {
    let n = cfg.steps_for(tau);
    let coarse = evolve(model, sched, tau, &cfg.with_steps(n))?;
    let fine = evolve(model, sched, tau, &cfg.with_steps(2 * n))?;
    let finest = evolve(model, sched, tau, &cfg.with_steps(4 * n))?;
    let ratio = (coarse.p_excited - fine.p_excited).abs() / (fine.p_excited - finest.p_excited).abs();
    let e_residual_change = (coarse.e_residual - fine.e_residual).abs() / fine.e_residual.abs();
    let p_excited_change = (coarse.p_excited - fine.p_excited).abs() / fine.p_excited.abs();
    Ok(ConvergenceReport {
        coarse,
        fine,
        finest,
        ratio,
        e_residual_change,
        p_excited_change,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_grover, build_lz};

    fn f(m: u8) -> Schedule {
        Schedule::polynomial(m).unwrap()
    }

    #[test]
    fn stationary_hamiltonian_stays_in_ground_state() {
        let lz = build_lz(2.0, 0.2).unwrap();
        let model = AnnealingModel::new("const", lz.h_kin().clone(), lz.h_kin().clone(), lz.initial_state().clone()).unwrap();
        for tau in [0.5, 10.0, 300.0] {
            let r = evolve(&model, &f(2), tau, &IntegratorConfig::default()).unwrap();
            assert!(r.p_excited <= 1e-12, "tau={tau} p={}", r.p_excited);
        }
    }

    #[test]
    fn fast_lz_sweep_matches_landau_zener() {
        let model = build_lz(2.0, 0.2).unwrap();
        let r = evolve(&model, &f(1), 10.0, &IntegratorConfig::default()).unwrap();
        let lz = 0.5335;
        assert!(((r.p_excited - lz) / lz).abs() < 0.1, "{}", r.p_excited);
    }

    #[test]
    fn unitary_midpoint_preserves_norm() {
        let model = build_lz(2.0, 0.2).unwrap();
        for steps in [10, 37, 400] {
            let cfg = IntegratorConfig {
                method: Method::UnitaryMidpoint,
                steps: StepPolicy::Fixed(steps),
                ..IntegratorConfig::default()
            };
            let r = evolve(&model, &f(2), 50.0, &cfg).unwrap();
            assert!(r.norm_drift <= 1e-13, "steps={steps} drift={}", r.norm_drift);
        }
    }

    #[test]
    fn rk4_and_unitary_midpoint_agree() {
        let model = build_lz(2.0, 0.2).unwrap();
        let rk = evolve(&model, &f(1), 20.0, &IntegratorConfig::with_density(200.0)).unwrap();
        let um = IntegratorConfig {
            method: Method::UnitaryMidpoint,
            steps: StepPolicy::Fixed(20_000),
            ..IntegratorConfig::default()
        };
        let um = evolve(&model, &f(1), 20.0, &um).unwrap();
        assert!((rk.p_excited - um.p_excited).abs() < 1e-6);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let model = build_lz(2.0, 0.2).unwrap();
        let cfg = IntegratorConfig::default().with_steps(2000);
        let rep = convergence_check(&model, &f(1), 100.0, &cfg).unwrap();
        assert!((8.0..=32.0).contains(&rep.ratio), "ratio {}", rep.ratio);
    }

    #[test]
    fn excessive_drift_is_an_error() {
        let model = build_lz(2.0, 0.2).unwrap();
        let cfg = IntegratorConfig {
            steps: StepPolicy::Fixed(10),
            ..IntegratorConfig::default()
        };
        let err = evolve(&model, &f(1), 200.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
        assert_eq!(err.exit_code(), 2);
        let cfg = IntegratorConfig { renormalize: true, ..cfg };
        let r = evolve(&model, &f(1), 200.0, &cfg).unwrap();
        assert!(r.norm_drift < 1e-12);
    }

    #[test]
    fn invalid_inputs() {
        let model = build_lz(2.0, 0.2).unwrap();
        assert!(evolve(&model, &f(1), 0.0, &IntegratorConfig::default()).is_err());
        assert!(evolve(&model, &f(1), 1.0, &IntegratorConfig::with_density(0.0)).is_err());
        let cfg = IntegratorConfig::default().with_steps(5);
        assert!(evolve(&model, &f(1), 1.0, &cfg).is_err());
        assert!("euler".parse::<Method>().is_err());
    }

    #[test]
    fn overlaps_of_eigenstates() {
        let model = build_grover(16).unwrap();
        let ground = model.final_spectrum().eigenvectors[0].clone();
        let pops = excitation_overlaps(&model, &ground).unwrap();
        assert_eq!(pops, vec![LevelPopulation { level: 0, energy: 0.0, probability: 1.0 }]);
        let pops = excitation_overlaps(&model, model.initial_state()).unwrap();
        assert!((pops[0].probability - 1.0 / 16.0).abs() < 1e-15);
        assert!((pops[1].probability - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn trajectory_is_recorded() {
        let model = build_lz(2.0, 0.2).unwrap();
        let mut points = Vec::new();
        let cfg = IntegratorConfig::default().with_steps(1000);
        evolve_observed(&model, &f(2), 30.0, &cfg, 250, |p| points.push(p)).unwrap();
        let s: Vec<f64> = points.iter().map(|p| p.s).collect();
        assert_eq!(s, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(points[0].p_excited < 1e-20);
    }
}
