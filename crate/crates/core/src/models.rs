//! Annealing problems in interpolation form `(1 - f) H_kin + f H_pot`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{eigh, ComplexVector, EigenDecomposition, HermitianMatrix, C64};
use crate::schedules::Schedule;

const GROUND_STATE_TOL: f64 = 1e-9;
/// Dense operators above `2^14` would not fit in memory.
pub const MAX_ISING_SITES: usize = 14;
pub const MAX_GROVER_ITEMS: usize = 1024;

#[derive(Clone, Debug)]
pub struct AnnealingModel {
    label: String,
    h_kin: HermitianMatrix,
    h_pot: HermitianMatrix,
    initial_state: ComplexVector,
    final_spectrum: EigenDecomposition,
}

impl AnnealingModel {
    /// Validates that `initial_state` is the non-degenerate ground state of
    /// `h_kin` and diagonalizes `h_pot` once for the final-time observables.
    pub fn new(
        label: impl Into<String>,
        h_kin: HermitianMatrix,
        h_pot: HermitianMatrix,
        initial_state: ComplexVector,
    ) -> Result<Self> {
        let dim = h_kin.dim();
        if h_pot.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: h_pot.dim() });
        }
        if initial_state.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: initial_state.dim() });
        }
        if !initial_state.is_normalized(1e-12) {
            return Err(Error::usage("initial state must be normalized"));
        }
        let kin = eigh(&h_kin)?;
        if dim > 1 && kin.eigenvalues[1] - kin.eigenvalues[0] <= 1e-12 {
            return Err(Error::Domain("ground state of h_kin is degenerate".into()));
        }
        let e0 = kin.eigenvalues[0];
        let residual = crate::linalg::matvec(&h_kin, &initial_state)?
            .combine(C64::new(1.0, 0.0), &initial_state, C64::new(-e0, 0.0))?
            .norm();
        if residual > GROUND_STATE_TOL {
            return Err(Error::Domain(format!(
                "initial state is not the ground state of h_kin (residual {residual:.3e})"
            )));
        }
        let final_spectrum = eigh(&h_pot)?;
        Ok(Self {
            label: label.into(),
            h_kin,
            h_pot,
            initial_state,
            final_spectrum,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.h_kin.dim()
    }

    pub fn h_kin(&self) -> &HermitianMatrix {
        &self.h_kin
    }

    pub fn h_pot(&self) -> &HermitianMatrix {
        &self.h_pot
    }

    pub fn initial_state(&self) -> &ComplexVector {
        &self.initial_state
    }

    /// Eigen-decomposition of `h_pot`, the Hamiltonian at `s = 1`.
    pub fn final_spectrum(&self) -> &EigenDecomposition {
        &self.final_spectrum
    }

    /// Lowest eigenvalue of `h_pot`.
    pub fn exact_ground_energy_final(&self) -> f64 {
        self.final_spectrum.eigenvalues[0]
    }

    /// `H_pot - H_kin`, the `s`-independent factor of every `s`-derivative.
    pub fn difference(&self) -> HermitianMatrix {
        self.h_pot.combine(1.0, &self.h_kin, -1.0).expect("dims checked at construction")
    }

    /// Both terms shifted by `c * I`.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(
            format!("{}+{c}", self.label),
            self.h_kin.shifted(c),
            self.h_pot.shifted(c),
            self.initial_state.clone(),
        )
    }
}

/// `(1 - f(s)) h_kin + f(s) h_pot`
pub fn interpolate(model: &AnnealingModel, sched: &Schedule, s: f64) -> Result<HermitianMatrix> {
    let f = sched.eval(s)?;
    interpolate_at(model, f)
}

/// Interpolated Hamiltonian at a given schedule value `f`.
pub fn interpolate_at(model: &AnnealingModel, f: f64) -> Result<HermitianMatrix> {
    if f == 0.0 {
        return Ok(model.h_kin.clone());
    }
    if f == 1.0 {
        return Ok(model.h_pot.clone());
    }
    model.h_kin.combine(1.0 - f, &model.h_pot, f)
}

/// Two-level avoided crossing `-(1/2 - f) h sigma_z - alpha sigma_x`.
pub fn build_lz(h: f64, alpha: f64) -> Result<AnnealingModel> {
    if !(h > 0.0) {
        return Err(Error::usage(format!("LZ model needs h > 0, got {h}")));
    }
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::usage(format!("LZ model needs alpha != 0, got {alpha}")));
    }
    let (sz, sx) = (HermitianMatrix::pauli_z(), HermitianMatrix::pauli_x());
    let h_kin = sz.combine(-0.5 * h, &sx, -alpha)?;
    let h_pot = sz.combine(0.5 * h, &sx, -alpha)?;
    let initial = eigh(&h_kin)?.eigenvectors[0].clone();
    AnnealingModel::new(format!("lz:h={h},alpha={alpha}"), h_kin, h_pot, initial)
}

/// SplitMix64 (Steele, Lea & Flood 2014).
///
/// ```text
/// state += 0x9E3779B97F4A7C15
/// z = state
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// return z ^ (z >> 31)
/// ```
///
/// All arithmetic wraps modulo 2^64.
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform on `[0, 1)` from the top 53 bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// `n_edges` couplings uniform on `[-1, 1)`: `J = 2u - 1` with `u` from
/// [`SplitMix64::next_f64`].
pub fn generate_couplings(n_edges: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    (0..n_edges).map(|_| 2.0 * rng.next_f64() - 1.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsingInstance {
    pub n_sites: usize,
    pub edges: Vec<Coupling>,
    /// Longitudinal field `h`.
    pub field: f64,
    /// Transverse field `Gamma`.
    pub transverse: f64,
    pub seed: Option<u64>,
}

impl IsingInstance {
    pub fn new(n_sites: usize, edges: Vec<Coupling>, field: f64, transverse: f64) -> Result<Self> {
        let inst = Self {
            n_sites,
            edges,
            field,
            transverse,
            seed: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Open-boundary `rows x cols` square lattice with seeded couplings.
    /// Sites are numbered row-major; horizontal bonds come first (row by
    /// row), then vertical bonds, and couplings are drawn in that order.
    pub fn square_lattice(rows: usize, cols: usize, seed: u64, field: f64, transverse: f64) -> Result<Self> {
        let mut bonds = Vec::new();
        for r in 0..rows {
            for c in 0..cols.saturating_sub(1) {
                bonds.push((r * cols + c, r * cols + c + 1));
            }
        }
        for r in 0..rows.saturating_sub(1) {
            for c in 0..cols {
                bonds.push((r * cols + c, (r + 1) * cols + c));
            }
        }
        let couplings = generate_couplings(bonds.len(), seed);
        let edges = bonds
            .into_iter()
            .zip(couplings)
            .map(|((i, j), value)| Coupling { i, j, value })
            .collect();
        let mut inst = Self::new(rows * cols, edges, field, transverse)?;
        inst.seed = Some(seed);
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        if self.n_sites == 0 || self.n_sites > MAX_ISING_SITES {
            return Err(Error::usage(format!(
                "Ising instance needs 1..={MAX_ISING_SITES} sites, got {}",
                self.n_sites
            )));
        }
        if !(self.transverse > 0.0) {
            return Err(Error::usage(format!("transverse field must be > 0, got {}", self.transverse)));
        }
        let mut seen = std::collections::BTreeSet::new();
        for e in &self.edges {
            if e.i >= self.n_sites || e.j >= self.n_sites {
                return Err(Error::usage(format!("edge ({}, {}) out of range", e.i, e.j)));
            }
            if e.i == e.j {
                return Err(Error::usage(format!("self-loop on site {}", e.i)));
            }
            if !seen.insert((e.i.min(e.j), e.i.max(e.j))) {
                return Err(Error::usage(format!("duplicate edge ({}, {})", e.i, e.j)));
            }
        }
        Ok(())
    }

    /// Plain-text form: `n_sites`, then `i j J` lines, then `h <v>` and
    /// `gamma <v>`. Lines starting with `#` are comments.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("# splitmix64 seed {seed}\n"));
        }
        out.push_str(&format!("{}\n", self.n_sites));
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.i, e.j, e.value));
        }
        out.push_str(&format!("h {}\n", self.field));
        out.push_str(&format!("gamma {}\n", self.transverse));
        out
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Config {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut n_sites = None;
        let mut edges = Vec::new();
        let mut field = None;
        let mut transverse = None;
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| err(lineno, format!("not a number: '{s}'")))
            };
            let idx_of = |s: &str| -> Result<usize> {
                s.parse::<usize>().map_err(|_| err(lineno, format!("not a site index: '{s}'")))
            };
            match parts.as_slice() {
                [n] if n_sites.is_none() => n_sites = Some(idx_of(n)?),
                ["h", v] => field = Some(num(v)?),
                ["gamma", v] => transverse = Some(num(v)?),
                [i, j, v] if n_sites.is_some() => edges.push(Coupling {
                    i: idx_of(i)?,
                    j: idx_of(j)?,
                    value: num(v)?,
                }),
                _ => return Err(err(lineno, format!("unexpected line '{line}'"))),
            }
        }
        let missing = |what: &str| err(0, format!("missing {what}"));
        let inst = Self::new(
            n_sites.ok_or_else(|| missing("site count"))?,
            edges,
            field.ok_or_else(|| missing("'h' line"))?,
            transverse.ok_or_else(|| missing("'gamma' line"))?,
        )
        .map_err(|e| match e {
            Error::Usage(m) => err(0, m),
            other => other,
        })?;
        Ok(inst)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Classical energy `-sum J s_i s_j - h sum s_i` of a spin configuration,
    /// `spins[i] = +1` for `|z+>`.
    pub fn classical_energy(&self, spins: &[i8]) -> f64 {
        let bond: f64 = self
            .edges
            .iter()
            .map(|e| e.value * f64::from(spins[e.i]) * f64::from(spins[e.j]))
            .sum();
        let mag: f64 = spins.iter().map(|&s| f64::from(s)).sum();
        -bond - self.field * mag
    }
}

/// Spin of `site` in basis state `index`: site 0 is the leftmost Kronecker
/// factor, and bit value 0 is `|z+>` (spin +1).
pub fn spin_of(index: usize, site: usize, n_sites: usize) -> i8 {
    if index >> (n_sites - 1 - site) & 1 == 0 {
        1
    } else {
        -1
    }
}

/// `I ⊗ .. ⊗ op ⊗ .. ⊗ I` with `op` (2x2) acting on `site`.
pub fn site_operator(op: &HermitianMatrix, site: usize, n_sites: usize) -> HermitianMatrix {
    assert_eq!(op.dim(), 2, "site operators act on a qubit");
    let dim = 1usize << n_sites;
    let shift = n_sites - 1 - site;
    let mask = 1usize << shift;
    let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        let rb = (r >> shift) & 1;
        for cb in 0..2 {
            let c = (r & !mask) | (cb << shift);
            entries[r * dim + c] = op.get(rb, cb);
        }
    }
    HermitianMatrix::new(dim, entries).expect("embedding of a Hermitian operator")
}

/// Transverse-field Ising model: `H_pot = -sum J s^z s^z - h sum s^z`,
/// `H_kin = -Gamma sum s^x`, started in the uniform superposition.
pub fn build_ising(inst: &IsingInstance) -> Result<AnnealingModel> {
    inst.validate()?;
    let n = inst.n_sites;
    let dim = 1usize << n;
    let pot: Vec<f64> = (0..dim)
        .map(|b| {
            let spins: Vec<i8> = (0..n).map(|i| spin_of(b, i, n)).collect();
            inst.classical_energy(&spins)
        })
        .collect();
    let h_pot = HermitianMatrix::diagonal(&pot);
    let mut h_kin = HermitianMatrix::zeros(dim);
    let sx = HermitianMatrix::pauli_x();
    for site in 0..n {
        h_kin = h_kin.combine(1.0, &site_operator(&sx, site, n), -inst.transverse)?;
    }
    let label = match inst.seed {
        Some(seed) => format!("ising:n={n},seed={seed},h={},gamma={}", inst.field, inst.transverse),
        None => format!("ising:n={n},h={},gamma={}", inst.field, inst.transverse),
    };
    AnnealingModel::new(label, h_kin, h_pot, ComplexVector::uniform(dim))
}

/// Unstructured search over `n_items` with the marked item at index 0:
/// `H_pot = 1 - |m><m|`, `H_kin = 1 - |u><u|` with `|u>` uniform.
pub fn build_grover(n_items: usize) -> Result<AnnealingModel> {
    check_items(n_items)?;
    let mut pot = vec![1.0; n_items];
    pot[0] = 0.0;
    let h_pot = HermitianMatrix::diagonal(&pot);
    let inv = 1.0 / n_items as f64;
    let h_kin = HermitianMatrix::from_fn(n_items, |i, j| {
        C64::new(if i == j { 1.0 - inv } else { -inv }, 0.0)
    })?;
    AnnealingModel::new(format!("grover:N={n_items}"), h_kin, h_pot, ComplexVector::uniform(n_items))
}

/// The search problem restricted to span{|m>, sum_{i != m} |i> / sqrt(N-1)},
/// where the dynamics started from the uniform state stays.
pub fn build_grover_reduced(n_items: usize) -> Result<AnnealingModel> {
    check_items(n_items)?;
    let n = n_items as f64;
    let a = (1.0 / n).sqrt();
    let b = ((n - 1.0) / n).sqrt();
    let h_pot = HermitianMatrix::diagonal(&[0.0, 1.0]);
    let h_kin = HermitianMatrix::from_fn(2, |i, j| {
        let psi = [a, b];
        let delta = if i == j { 1.0 } else { 0.0 };
        C64::new(delta - psi[i] * psi[j], 0.0)
    })?;
    let initial = ComplexVector::from_real(&[a, b])?;
    AnnealingModel::new(format!("grover:N={n_items},reduced=true"), h_kin, h_pot, initial)
}

/// Maps a full search-space state onto the reduced two-level basis, and
/// reports the norm of the component outside it.
pub fn grover_symmetric_projection(state: &ComplexVector) -> (ComplexVector, f64) {
    let n = state.dim();
    let v = state.as_slice();
    let rest: C64 = v[1..].iter().sum::<C64>() / ((n - 1) as f64).sqrt();
    let inside = ComplexVector::new(vec![v[0], rest]).expect("two components");
    let mean = rest / ((n - 1) as f64).sqrt();
    let outside: f64 = v[1..].iter().map(|z| (z - mean).norm_sqr()).sum::<f64>().sqrt();
    (inside, outside)
}

fn check_items(n_items: usize) -> Result<()> {
    if !(2..=MAX_GROVER_ITEMS).contains(&n_items) {
        return Err(Error::usage(format!("search model needs 2 <= N <= {MAX_GROVER_ITEMS}, got {n_items}")));
    }
    Ok(())
}

/// Model selection string used by configs and the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Lz { h: f64, alpha: f64 },
    IsingFile(PathBuf),
    IsingGrid { rows: usize, cols: usize, seed: u64, field: f64, transverse: f64 },
    Grover { n_items: usize, reduced: bool },
}

impl ModelSpec {
    pub fn build(&self) -> Result<AnnealingModel> {
        match self {
            ModelSpec::Lz { h, alpha } => build_lz(*h, *alpha),
            ModelSpec::IsingFile(path) => build_ising(&IsingInstance::from_file(path)?),
            ModelSpec::IsingGrid { rows, cols, seed, field, transverse } => {
                build_ising(&IsingInstance::square_lattice(*rows, *cols, *seed, *field, *transverse)?)
            }
            ModelSpec::Grover { n_items, reduced: false } => build_grover(*n_items),
            ModelSpec::Grover { n_items, reduced: true } => build_grover_reduced(*n_items),
        }
    }

    /// Resolves a relative instance path against `base`.
    pub fn relative_to(self, base: &Path) -> Self {
        match self {
            ModelSpec::IsingFile(p) if p.is_relative() => ModelSpec::IsingFile(base.join(p)),
            other => other,
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Lz { h, alpha } => write!(f, "lz:h={h},alpha={alpha}"),
            ModelSpec::IsingFile(p) => write!(f, "ising:file={}", p.display()),
            ModelSpec::IsingGrid { rows, cols, seed, field, transverse } => {
                write!(f, "ising:grid={rows}x{cols},seed={seed},h={field},gamma={transverse}")
            }
            ModelSpec::Grover { n_items, reduced: false } => write!(f, "grover:N={n_items}"),
            ModelSpec::Grover { n_items, reduced: true } => write!(f, "grover:N={n_items},reduced=true"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (kind, params) = text
            .split_once(':')
            .ok_or_else(|| Error::usage(format!("model '{text}' must look like <kind>:<key>=<value>,...")))?;
        let mut pairs = Vec::new();
        for item in params.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::usage(format!("model parameter '{item}' is not key=value")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let mut take = |key: &str| -> Option<String> {
            let pos = pairs.iter().position(|(k, _)| *k == key)?;
            Some(pairs.remove(pos).1.to_string())
        };
        let real = |key: &str, v: Option<String>| -> Result<f64> {
            let v = v.ok_or_else(|| Error::usage(format!("model '{text}' is missing '{key}'")))?;
            v.parse().map_err(|_| Error::usage(format!("'{key}={v}' is not a number")))
        };
        let spec = match kind {
            "lz" => ModelSpec::Lz {
                h: real("h", take("h"))?,
                alpha: real("alpha", take("alpha"))?,
            },
            "grover" => {
                let n = take("N").ok_or_else(|| Error::usage("grover model is missing 'N'"))?;
                let n_items = n.parse().map_err(|_| Error::usage(format!("'N={n}' is not an integer")))?;
                let reduced = match take("reduced").as_deref() {
                    None | Some("false") => false,
                    Some("true") => true,
                    Some(v) => return Err(Error::usage(format!("'reduced={v}' must be true or false"))),
                };
                ModelSpec::Grover { n_items, reduced }
            }
            "ising" => {
                if let Some(file) = take("file") {
                    ModelSpec::IsingFile(PathBuf::from(file))
                } else {
                    let grid = take("grid").ok_or_else(|| Error::usage("ising model needs 'file' or 'grid'"))?;
                    let (r, c) = grid
                        .split_once('x')
                        .ok_or_else(|| Error::usage(format!("grid '{grid}' must look like RxC")))?;
                    let dims = |s: &str| s.parse::<usize>().map_err(|_| Error::usage(format!("bad grid '{grid}'")));
                    let seed = take("seed").ok_or_else(|| Error::usage("ising grid needs 'seed'"))?;
                    ModelSpec::IsingGrid {
                        rows: dims(r)?,
                        cols: dims(c)?,
                        seed: seed.parse().map_err(|_| Error::usage(format!("bad seed '{seed}'")))?,
                        field: real("h", take("h"))?,
                        transverse: real("gamma", take("gamma"))?,
                    }
                }
            }
            other => return Err(Error::usage(format!("unknown model kind '{other}'"))),
        };
        if let Some((k, _)) = pairs.first() {
            return Err(Error::usage(format!("unknown parameter '{k}' for model '{kind}'")));
        }
        Ok(spec)
    }
}
