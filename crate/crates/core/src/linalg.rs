//! Dense complex vectors, Hermitian matrices and a Hermitian eigensolver.
//!
//! Matrices are stored dense and row-major. The eigensolver reduces the
//! matrix to real symmetric tridiagonal form with complex Householder
//! reflections and a diagonal phase transform, then runs the implicit QL
//! algorithm with Wilkinson-style shifts.

use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const HERMITIAN_TOL: f64 = 1e-12;
const QL_MAX_SWEEPS: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    components: Vec<C64>,
}

impl ComplexVector {
    pub fn new(components: Vec<C64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::usage("vector dimension must be at least 1"));
        }
        Ok(Self { components })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be at least 1");
        Self {
            components: vec![C64::new(0.0, 0.0); dim],
        }
    }

    /// Computational basis vector `|k>`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.components[k] = C64::new(1.0, 0.0);
        v
    }

    /// Equal-weight superposition of all basis states, normalized.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            components: vec![C64::new(a, 0.0); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.components
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.components
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.components
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scaled(C64::new(1.0 / n, 0.0))
    }

    pub fn scaled(&self, a: C64) -> Self {
        Self {
            components: self.components.iter().map(|&z| z * a).collect(),
        }
    }

    /// `a*self + b*other`
    pub fn combine(&self, a: C64, other: &ComplexVector, b: C64) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self {
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        })
    }

    /// True when `| ||v|| - 1 | <= tol`.
    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl Index<usize> for ComplexVector {
    type Output = C64;

    fn index(&self, i: usize) -> &C64 {
        &self.components[i]
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &ComplexVector, b: &ComplexVector) -> Result<C64> {
    check_dims(a.dim(), b.dim())?;
    Ok(inner_slices(a.as_slice(), b.as_slice()))
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries. Entries must satisfy
    /// `a[i][j] = conj(a[j][i])` to within `1e-12` (relative to the largest
    /// entry when that exceeds one); the stored matrix is then made exactly
    /// Hermitian by averaging the two triangles.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::usage("matrix dimension must be at least 1"));
        }
        check_dims(dim * dim, entries.len())?;
        let scale = entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let tol = HERMITIAN_TOL * scale;
        let mut entries = entries;
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                let dev = (a - b).norm();
                if dev > tol {
                    return Err(Error::usage(format!(
                        "matrix is not Hermitian: |a[{i}][{j}] - conj(a[{j}][{i}])| = {dev:.3e}"
                    )));
                }
                let avg = (a + b) * 0.5;
                if i == j {
                    entries[i * dim + i] = C64::new(avg.re, 0.0);
                } else {
                    entries[i * dim + j] = avg;
                    entries[j * dim + i] = avg.conj();
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> C64) -> Result<Self> {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self::new(dim, entries)
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            entries: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &x) in values.iter().enumerate() {
            m.entries[i * m.dim + i] = C64::new(x, 0.0);
        }
        m
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self {
            dim: 2,
            entries: vec![o, l, l, o],
        }
    }

    pub fn pauli_y() -> Self {
        let (o, i) = (C64::new(0.0, 0.0), C64::new(0.0, 1.0));
        Self {
            dim: 2,
            entries: vec![o, -i, i, o],
        }
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(&[1.0, -1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[C64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    /// `a*self + b*other` with real coefficients, which keeps the result Hermitian.
    pub fn combine(&self, a: f64, other: &HermitianMatrix, b: f64) -> Result<Self> {
        check_dims(self.dim, other.dim)?;
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&x, &y)| x * a + y * b)
                .collect(),
        })
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|&z| z * a).collect(),
        }
    }

    /// `self + c*I`
    pub fn shifted(&self, c: f64) -> Self {
        let mut m = self.clone();
        for i in 0..self.dim {
            m.entries[i * self.dim + i] += c;
        }
        m
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..n {
            for j in 0..n {
                let a = self.get(i, j);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        entries[(i * m + k) * dim + j * m + l] = a * other.get(k, l);
                    }
                }
            }
        }
        Self { dim, entries }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest off-diagonal magnitude.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    worst = worst.max(self.get(i, j).norm());
                }
            }
        }
        worst
    }

    pub fn is_diagonal(&self) -> bool {
        self.max_off_diagonal() == 0.0
    }

    /// Real diagonal entries.
    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub(crate) fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        for (row, o) in self.entries.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(v).map(|(a, x)| a * x).sum();
        }
    }

    /// `<v|self|v>`, real for Hermitian matrices.
    pub fn expectation(&self, v: &ComplexVector) -> Result<f64> {
        let mv = matvec(self, v)?;
        Ok(inner_slices(v.as_slice(), mv.as_slice()).re)
    }
}

pub fn matvec(m: &HermitianMatrix, v: &ComplexVector) -> Result<ComplexVector> {
    check_dims(m.dim(), v.dim())?;
    let mut out = vec![C64::new(0.0, 0.0); m.dim()];
    m.apply_into(v.as_slice(), &mut out);
    Ok(ComplexVector { components: out })
}

/// Eigenvalues in ascending order with orthonormal eigenvectors.
///
/// In every eigenvector the largest-magnitude component (the first one on
/// exact ties) is real and non-negative.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<ComplexVector>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Groups eigenvalues closer than `1e-9 * max(1, |eps|_max)` into levels,
    /// returned as index ranges in ascending order.
    pub fn levels(&self) -> Vec<std::ops::Range<usize>> {
        let scale = self.eigenvalues.iter().fold(1.0f64, |a, e| a.max(e.abs()));
        let tol = 1e-9 * scale;
        let mut out = Vec::new();
        let mut start = 0;
        for k in 1..=self.dim() {
            if k == self.dim() || self.eigenvalues[k] - self.eigenvalues[k - 1] > tol {
                out.push(start..k);
                start = k;
            }
        }
        out
    }

    /// Rebuilds `sum_j eps_j |v_j><v_j|`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for (e, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let v = v.as_slice();
            for i in 0..n {
                let a = v[i] * *e;
                for j in 0..n {
                    entries[i * n + j] += a * v[j].conj();
                }
            }
        }
        HermitianMatrix { dim: n, entries }
    }
}

pub fn eigh(m: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    if m.is_diagonal() {
        let diag = m.diagonal_values();
        let vecs = (0..n).map(|k| ComplexVector::basis(n, k)).collect();
        return Ok(sorted(diag, vecs));
    }

    let mut a = m.entries.clone();
    let mut q = HermitianMatrix::identity(n).entries;
    let mut offdiag = vec![C64::new(0.0, 0.0); n];
    tridiagonalize(n, &mut a, Some(&mut q), &mut offdiag);

    let mut diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut sub: Vec<f64> = offdiag.iter().map(|z| z.norm()).collect();

    // Phase transform D making the subdiagonal real: V0 = Q D, stored
    // transposed so that each eigenvector is a contiguous row.
    let mut phase = C64::new(1.0, 0.0);
    let mut vt = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for r in 0..n {
            vt[j * n + r] = q[r * n + j] * phase;
        }
        if j + 1 < n && sub[j] > 0.0 {
            phase *= offdiag[j] / sub[j];
        }
    }

    tql_implicit(&mut diag, &mut sub, Some(&mut vt), n)?;

    let vecs = vt
        .chunks_exact(n)
        .map(|row| ComplexVector {
            components: row.to_vec(),
        })
        .collect();
    Ok(sorted(diag, vecs))
}

/// Eigenvalues only, ascending. Much cheaper than [`eigh`] for large `dim`.
pub fn eigvalsh(m: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut values = if m.is_diagonal() {
        m.diagonal_values()
    } else {
        let mut a = m.entries.clone();
        let mut offdiag = vec![C64::new(0.0, 0.0); n];
        tridiagonalize(n, &mut a, None, &mut offdiag);
        let mut diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
        let mut sub: Vec<f64> = offdiag.iter().map(|z| z.norm()).collect();
        tql_implicit(&mut diag, &mut sub, None, n)?;
        diag
    };
    values.sort_by(|a, b| a.total_cmp(b));
    Ok(values)
}

/// Householder reduction to tridiagonal form, `Q^H A Q = T`. On return the
/// diagonal of `a` holds the diagonal of `T`, `offdiag[k] = T[k+1][k]`, and
/// `q` (row-major) holds the accumulated transform.
fn tridiagonalize(n: usize, a: &mut [C64], q: Option<&mut [C64]>, offdiag: &mut [C64]) {
    let zero = C64::new(0.0, 0.0);
    let mut reflectors: Vec<(usize, Vec<C64>, f64)> = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![zero; n];

    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let x: Vec<C64> = (0..len).map(|i| a[(k + 1 + i) * n + k]).collect();
        let tail_sqr: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail_sqr == 0.0 {
            offdiag[k] = x[0];
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail_sqr).sqrt();
        let unit = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let alpha = -unit * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let beta = 2.0 / v.iter().map(|z| z.norm_sqr()).sum::<f64>();

        // Trailing block B = a[k+1.., k+1..] <- H B H.
        let off = k + 1;
        for i in 0..len {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            p[i] = row.iter().zip(&v).map(|(b, y)| b * y).sum::<C64>() * beta;
        }
        let kappa = 0.5 * beta * inner_slices(&v, &p[..len]).re;
        let w: Vec<C64> = (0..len).map(|i| p[i] - v[i] * kappa).collect();
        for i in 0..len {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for j in 0..len {
                row[j] -= vi * w[j].conj() + wi * v[j].conj();
            }
        }

        offdiag[k] = alpha;
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = zero;
            a[k * n + i] = zero;
        }
        reflectors.push((off, v, beta));
    }

    let Some(q) = q else { return };
    // Backward accumulation Q = H_0 H_1 ... applied to the identity.
    let mut s = vec![zero; n];
    for (off, v, beta) in reflectors.iter().rev() {
        let off = *off;
        let len = n - off;
        s[..len].iter_mut().for_each(|z| *z = zero);
        for (l, vl) in v.iter().enumerate() {
            let row = &q[(off + l) * n + off..(off + l) * n + n];
            let cv = vl.conj();
            for (sc, qc) in s[..len].iter_mut().zip(row) {
                *sc += cv * qc;
            }
        }
        for (i, vi) in v.iter().enumerate() {
            let f = vi * *beta;
            let row = &mut q[(off + i) * n + off..(off + i) * n + n];
            for (qc, sc) in row.iter_mut().zip(&s[..len]) {
                *qc -= f * sc;
            }
        }
    }
}

/// Implicit QL on the real symmetric tridiagonal matrix (`d`, `e`), where
/// `e[i]` couples `i` and `i+1`. Rotations are applied to the rows of `vt`.
fn tql_implicit(d: &mut [f64], e: &mut [f64], mut vt: Option<&mut [C64]>, n: usize) -> Result<()> {
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::NoConvergence {
                    iterations: iter,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                if let Some(vt) = vt.as_deref_mut() {
                    let (lo, hi) = vt.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_next = &mut hi[..n];
                    for (zi, zn) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let f = *zn;
                        *zn = *zi * s + f * c;
                        *zi = *zi * c - f * s;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

fn sorted(values: Vec<f64>, vectors: Vec<ComplexVector>) -> EigenDecomposition {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| fix_phase(vectors[i].clone()))
        .collect();
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

fn fix_phase(mut v: ComplexVector) -> ComplexVector {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (k, z) in v.components.iter().enumerate() {
        let mag = z.norm_sqr();
        if mag > best_mag {
            best = k;
            best_mag = mag;
        }
    }
    let pivot = v.components[best];
    if pivot.norm() > 0.0 {
        let rot = pivot.conj() / pivot.norm();
        for z in v.components.iter_mut() {
            *z *= rot;
        }
        v.components[best] = C64::new(v.components[best].norm(), 0.0);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_matvec_is_noop() {
        let v = ComplexVector::new(vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0), c(4.0, -1.0)]).unwrap();
        assert_eq!(matvec(&HermitianMatrix::identity(4), &v).unwrap(), v);
    }

    #[test]
    fn pauli_x_flips_basis_state() {
        let v = ComplexVector::basis(2, 0);
        let out = matvec(&HermitianMatrix::pauli_x(), &v).unwrap();
        assert_eq!(out, ComplexVector::basis(2, 1));
    }

    #[test]
    fn lz_hamiltonian_product() {
        // -sigma_z - 0.2 sigma_x
        let h = HermitianMatrix::pauli_z().combine(-1.0, &HermitianMatrix::pauli_x(), -0.2).unwrap();
        let out = matvec(&h, &ComplexVector::basis(2, 0)).unwrap();
        assert!((out[0] - c(-1.0, 0.0)).norm() < 1e-15);
        assert!((out[1] - c(-0.2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let err = matvec(&HermitianMatrix::identity(3), &ComplexVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn inner_products() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_real(&[s, s]).unwrap();
        let up = ComplexVector::basis(2, 0);
        let down = ComplexVector::basis(2, 1);
        assert_eq!(inner(&up, &down).unwrap(), c(0.0, 0.0));
        assert!((inner(&plus, &up).unwrap() - c(s, 0.0)).norm() < 1e-15);
        let v = ComplexVector::new(vec![c(1.0, 1.0), c(0.0, -2.0)]).unwrap();
        let vv = inner(&v, &v).unwrap();
        assert!((vv.re - 6.0).abs() < 1e-14 && vv.im == 0.0);
        // conjugate-linear in the first slot
        let iv = v.scaled(c(0.0, 1.0));
        assert!((inner(&iv, &up).unwrap() - c(0.0, -1.0) * inner(&v, &up).unwrap()).norm() < 1e-15);
        assert!(inner(&up, &ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert!(matches!(err, Err(Error::Usage(_))));
        assert!(HermitianMatrix::new(2, vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn eigh_pauli_z() {
        let eig = eigh(&HermitianMatrix::pauli_z()).unwrap();
        assert_eq!(eig.eigenvalues, vec![-1.0, 1.0]);
        assert_eq!(eig.eigenvectors[0], ComplexVector::basis(2, 1));
        assert_eq!(eig.eigenvectors[1], ComplexVector::basis(2, 0));
    }

    #[test]
    fn eigh_pauli_y_phase_convention() {
        let eig = eigh(&HermitianMatrix::pauli_y()).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
        for v in &eig.eigenvectors {
            // first component wins the tie and is made real
            assert!(v[0].im == 0.0 && v[0].re > 0.0);
        }
    }

    #[test]
    fn eigh_lz_minimum_gap() {
        // f = 1/2 leaves only -alpha sigma_x
        let h = HermitianMatrix::pauli_x().scaled(-0.2);
        let eig = eigh(&h).unwrap();
        assert!((eig.eigenvalues[0] + 0.2).abs() < 1e-15);
        assert!((eig.eigenvalues[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn eigh_one_by_one_and_tridiagonal_input() {
        let eig = eigh(&HermitianMatrix::diagonal(&[3.5])).unwrap();
        assert_eq!(eig.eigenvalues, vec![3.5]);
        // already tridiagonal with complex couplings
        let h = HermitianMatrix::new(
            3,
            vec![
                c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0),
                c(0.0, -1.0), c(2.0, 0.0), c(1.0, 1.0),
                c(0.0, 0.0), c(1.0, -1.0), c(3.0, 0.0),
            ],
        )
        .unwrap();
        let eig = eigh(&h).unwrap();
        let back = eig.reconstruct();
        let err = back.combine(1.0, &h, -1.0).unwrap().frobenius_norm();
        assert!(err < 1e-13, "{err}");
    }

    #[test]
    fn kron_of_paulis() {
        let zz = HermitianMatrix::pauli_z().kron(&HermitianMatrix::pauli_z());
        assert_eq!(zz.diagonal_values(), vec![1.0, -1.0, -1.0, 1.0]);
        let xi = HermitianMatrix::pauli_x().kron(&HermitianMatrix::identity(2));
        assert_eq!(xi.get(0, 2), c(1.0, 0.0));
        assert_eq!(xi.get(0, 1), c(0.0, 0.0));
    }
}
