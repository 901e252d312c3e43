//! Annealing schedules `f: [0,1] -> [0,1]` with `f(0) = 0`, `f(1) = 1`.
//!
//! Derivatives are exact: every schedule is evaluated as a truncated Taylor
//! jet, so composition is jet composition (the chain rule to all orders)
//! rather than a finite difference.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Highest derivative order available for any schedule.
pub const MAX_ORDER: usize = 6;
const JET_LEN: usize = MAX_ORDER + 1;

const FLATNESS_TOL: f64 = 1e-10;

/// Truncated Taylor series, `c[k] = f^(k)(x0) / k!`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Jet {
    c: [f64; JET_LEN],
}

impl Jet {
    fn constant(x: f64) -> Self {
        let mut c = [0.0; JET_LEN];
        c[0] = x;
        Jet { c }
    }

    fn variable(x: f64) -> Self {
        let mut j = Jet::constant(x);
        j.c[1] = 1.0;
        j
    }

    fn value(&self) -> f64 {
        self.c[0]
    }

    fn derivative(&self, k: usize) -> f64 {
        self.c[k] * factorial(k)
    }

    fn add(&self, other: &Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(&other.c).for_each(|(a, b)| *a += b);
        Jet { c }
    }

    fn scale(&self, a: f64) -> Jet {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= a);
        Jet { c }
    }

    fn offset(&self, a: f64) -> Jet {
        let mut j = *self;
        j.c[0] += a;
        j
    }

    fn mul(&self, other: &Jet) -> Jet {
        let mut c = [0.0; JET_LEN];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.c[j] * other.c[k - j]).sum();
        }
        Jet { c }
    }

    fn div(&self, other: &Jet) -> Jet {
        let mut q = [0.0; JET_LEN];
        for k in 0..JET_LEN {
            let acc: f64 = (0..k).map(|j| q[j] * other.c[k - j]).sum();
            q[k] = (self.c[k] - acc) / other.c[0];
        }
        Jet { c: q }
    }

    fn sqrt(&self) -> Jet {
        let mut r = [0.0; JET_LEN];
        r[0] = self.c[0].sqrt();
        for k in 1..JET_LEN {
            let acc: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.c[k] - acc) / (2.0 * r[0]);
        }
        Jet { c: r }
    }

    fn cos(&self) -> Jet {
        let mut s = [0.0; JET_LEN];
        let mut c = [0.0; JET_LEN];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..JET_LEN {
            let kf = k as f64;
            s[k] = (1..=k).map(|j| j as f64 * self.c[j] * c[k - j]).sum::<f64>() / kf;
            c[k] = -(1..=k).map(|j| j as f64 * self.c[j] * s[k - j]).sum::<f64>() / kf;
        }
        Jet { c }
    }

    /// Taylor series of `outer(inner(x))`, where `outer` is expanded around
    /// `inner.value()`.
    fn compose(outer: &Jet, inner: &Jet) -> Jet {
        let mut delta = *inner;
        delta.c[0] = 0.0;
        let mut power = Jet::constant(1.0);
        let mut out = Jet::constant(0.0);
        for k in 0..JET_LEN {
            out = out.add(&power.scale(outer.c[k]));
            power = power.mul(&delta);
        }
        out
    }

    /// Polynomial with monomial coefficients `coeffs[k] * x^k`, by Horner.
    fn polynomial(coeffs: &[f64], x: &Jet) -> Jet {
        coeffs
            .iter()
            .rev()
            .fold(Jet::constant(0.0), |acc, &a| acc.mul(x).offset(a))
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Monomial coefficients of the boundary-flat polynomials `f_1 .. f_4`.
const POLY_COEFFS: [&[f64]; 4] = [
    &[0.0, 1.0],
    &[0.0, 0.0, 3.0, -2.0],
    &[0.0, 0.0, 0.0, 10.0, -15.0, 6.0],
    &[0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0],
];

#[derive(Clone, Debug, PartialEq)]
pub enum ScheduleKind {
    /// `f_m`, the degree `2m-1` polynomial whose first `m-1` derivatives
    /// vanish at both endpoints. `m` in `1..=4`.
    Polynomial(u8),
    /// `(1 - cos(pi s^2)) / 2`
    CosineSq,
    /// Local-adiabatic schedule for unstructured search over `N` items.
    GroverOptimal(usize),
    /// `outer(inner(s))`
    Composed(Box<Schedule>, Box<Schedule>),
    /// `1 - f(1 - s)`
    Reflected(Box<Schedule>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    max_order: usize,
}

impl Schedule {
    pub fn polynomial(m: u8) -> Result<Self> {
        if !(1..=4).contains(&m) {
            return Err(Error::usage(format!("polynomial schedule order must be 1..=4, got {m}")));
        }
        Ok(Self {
            kind: ScheduleKind::Polynomial(m),
            max_order: MAX_ORDER,
        })
    }

    pub fn cosine_sq() -> Self {
        Self {
            kind: ScheduleKind::CosineSq,
            max_order: MAX_ORDER,
        }
    }

    /// `f(s) = 1/2 + (2s-1) / (2 sqrt(N - (N-1)(2s-1)^2))`
    pub fn grover_optimal(n_items: usize) -> Result<Self> {
        if n_items < 2 {
            return Err(Error::usage(format!("grover_optimal needs N >= 2, got {n_items}")));
        }
        Ok(Self {
            kind: ScheduleKind::GroverOptimal(n_items),
            max_order: MAX_ORDER,
        })
    }

    pub fn compose(outer: Schedule, inner: Schedule) -> Self {
        let max_order = outer.max_order.min(inner.max_order);
        Self {
            kind: ScheduleKind::Composed(Box::new(outer), Box::new(inner)),
            max_order,
        }
    }

    pub fn reflected(self) -> Self {
        let max_order = self.max_order;
        Self {
            kind: ScheduleKind::Reflected(Box::new(self)),
            max_order,
        }
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn max_analytic_order(&self) -> usize {
        self.max_order
    }

    pub(crate) fn jet(&self, s: f64) -> Jet {
        match &self.kind {
            ScheduleKind::Polynomial(m) => Jet::polynomial(POLY_COEFFS[*m as usize - 1], &Jet::variable(s)),
            ScheduleKind::CosineSq => {
                let x = Jet::variable(s);
                let arg = x.mul(&x).scale(PI);
                arg.cos().scale(-0.5).offset(0.5)
            }
            ScheduleKind::GroverOptimal(n) => {
                let n = *n as f64;
                let u = Jet::variable(s).scale(2.0).offset(-1.0);
                let radicand = u.mul(&u).scale(-(n - 1.0)).offset(n);
                u.div(&radicand.sqrt().scale(2.0)).offset(0.5)
            }
            ScheduleKind::Composed(outer, inner) => {
                let inner_jet = inner.jet(s);
                let outer_jet = outer.jet(inner_jet.value());
                Jet::compose(&outer_jet, &inner_jet)
            }
            ScheduleKind::Reflected(inner) => {
                let j = inner.jet(1.0 - s);
                let mut c = [0.0; JET_LEN];
                c[0] = 1.0 - j.c[0];
                for k in 1..JET_LEN {
                    // d^k/ds^k [-g(1-s)] = (-1)^(k+1) g^(k)(1-s)
                    c[k] = if k % 2 == 1 { j.c[k] } else { -j.c[k] };
                }
                Jet { c }
            }
        }
    }

    /// `f(s)`; `s` must lie in `[0, 1]`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_unit(s)?;
        Ok(self.jet(s).value())
    }

    /// Analytic derivative `f^(order)(s)`; order 0 returns `f(s)`.
    pub fn deriv(&self, s: f64, order: usize) -> Result<f64> {
        check_unit(s)?;
        if order > self.max_order {
            return Err(Error::usage(format!(
                "derivative order {order} exceeds the analytic order {} of {self}",
                self.max_order
            )));
        }
        Ok(self.jet(s).derivative(order))
    }

    /// All derivatives `f^(0..=order)(s)` from a single jet evaluation.
    pub fn derivatives(&self, s: f64, order: usize) -> Result<Vec<f64>> {
        check_unit(s)?;
        if order > self.max_order {
            return Err(Error::usage(format!(
                "derivative order {order} exceeds the analytic order {}",
                self.max_order
            )));
        }
        let jet = self.jet(s);
        Ok((0..=order).map(|k| jet.derivative(k)).collect())
    }

    /// True when derivatives `1..m` vanish at both endpoints (within `1e-10`).
    pub fn check_flatness(&self, m: usize) -> Result<bool> {
        if m > self.max_order {
            return Err(Error::usage(format!(
                "flatness order {m} exceeds the analytic order {}",
                self.max_order
            )));
        }
        let (lo, hi) = (self.jet(0.0), self.jet(1.0));
        Ok((1..m).all(|k| lo.derivative(k).abs() <= FLATNESS_TOL && hi.derivative(k).abs() <= FLATNESS_TOL))
    }

    /// Largest `m` for which [`check_flatness`](Self::check_flatness) holds.
    pub fn flatness_order(&self) -> usize {
        (1..=self.max_order)
            .take_while(|&m| self.check_flatness(m).unwrap_or(false))
            .last()
            .unwrap_or(1)
    }

    /// Checks endpoints, range and monotonicity on a uniform grid.
    pub fn verify_invariants(&self, grid: usize) -> Result<()> {
        let f0 = self.jet(0.0).value();
        let f1 = self.jet(1.0).value();
        if f0.abs() > 1e-14 || (f1 - 1.0).abs() > 1e-14 {
            return Err(Error::Domain(format!("{self}: f(0) = {f0}, f(1) = {f1}")));
        }
        let mut prev = f0;
        for k in 1..=grid {
            let s = k as f64 / grid as f64;
            let f = self.jet(s).value();
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Domain(format!("{self}: f({s}) = {f} outside [0, 1]")));
            }
            if f < prev - 1e-15 {
                return Err(Error::Domain(format!("{self}: decreasing at s = {s}")));
            }
            prev = f;
        }
        Ok(())
    }
}

fn check_unit(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::usage(format!("schedule argument s = {s} outside [0, 1]")));
    }
    Ok(())
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ScheduleKind::Polynomial(m) => write!(f, "f{m}"),
            ScheduleKind::CosineSq => write!(f, "cossq"),
            ScheduleKind::GroverOptimal(n) => write!(f, "opt:{n}"),
            ScheduleKind::Composed(outer, inner) => match (&outer.kind, &inner.kind) {
                (ScheduleKind::GroverOptimal(n), ScheduleKind::Polynomial(m)) => write!(f, "opt{m}:{n}"),
                _ => write!(f, "({outer})∘({inner})"),
            },
            ScheduleKind::Reflected(inner) => write!(f, "rev({inner})"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// Accepts `f1|f2|f3|f4|cossq|opt:<N>|opt<m>:<N>`.
    fn from_str(name: &str) -> Result<Self> {
        let name = name.trim();
        let bad = || Error::usage(format!("unknown schedule '{name}' (expected f1..f4, cossq, opt:<N> or opt<m>:<N>)"));
        if name == "cossq" {
            return Ok(Schedule::cosine_sq());
        }
        if let Some(m) = name.strip_prefix('f') {
            let m: u8 = m.parse().map_err(|_| bad())?;
            return Schedule::polynomial(m);
        }
        if let Some(rest) = name.strip_prefix("opt") {
            let (m, n) = rest.split_once(':').ok_or_else(bad)?;
            let n: usize = n.parse().map_err(|_| bad())?;
            let opt = Schedule::grover_optimal(n)?;
            if m.is_empty() {
                return Ok(opt);
            }
            let m: u8 = m.parse().map_err(|_| bad())?;
            return Ok(Schedule::compose(opt, Schedule::polynomial(m)?));
        }
        Err(bad())
    }
}
