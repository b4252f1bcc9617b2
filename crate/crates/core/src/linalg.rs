//! Dense complex linear algebra on row-major matrices.
//!
//! Composite spaces always use the "left factor slow" index convention:
//! for `H_a ⊗ H_b` the basis vector `e_i ⊗ e_k` has index `i * dim_b + k`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Default cap on the total dimension of any assembled space.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{}", self.rows, self.cols)?;
        if self.rows * self.cols <= 64 {
            for i in 0..self.rows {
                let row: Vec<String> = (0..self.cols)
                    .map(|j| {
                        let z = self[(i, j)];
                        format!("{:+.4}{:+.4}i", z.re, z.im)
                    })
                    .collect();
                writeln!(f, "  [{}]", row.join(", "))?;
            }
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!("{rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| rows[i][j])
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn real_diag(values: &[f64]) -> Self {
        let v: Vec<C64> = values.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&v)
    }

    pub fn column(values: Vec<C64>) -> Self {
        let n = values.len();
        Self::new(n, 1, values).expect("column vector must be nonempty")
    }

    /// Standard basis column vector `e_i` of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n, 1);
        v[(i, 0)] = ONE;
        v
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().filter(|z| **z != ZERO).count()
    }

    pub fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut m = self.clone();
        m.add_assign_scaled(other, ONE);
        Ok(m)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let mut m = self.clone();
        m.add_assign_scaled(other, -ONE);
        Ok(m)
    }

    /// `self += s * other`. Panics on shape mismatch.
    pub fn add_assign_scaled(&mut self, other: &Self, s: C64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            if *b != ZERO {
                *a += s * b;
            }
        }
    }

    pub fn add_identity(&mut self, s: f64) {
        assert!(self.is_square());
        for i in 0..self.rows {
            self.data[i * self.cols + i] += s;
        }
    }

    /// Matrix product. Zero entries of `self` are skipped, which makes
    /// products with structured (mostly zero) operators cheap.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let n = other.cols;
        let mut out = Self::zeros(self.rows, n);
        for i in 0..self.rows {
            let orow = &mut out.data[i * n..(i + 1) * n];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Panicking variant of [`matmul`](Self::matmul) for internal use on known shapes.
    pub fn mul(&self, other: &Self) -> Self {
        self.matmul(other).expect("matmul shape mismatch")
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖a − a†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                d = d.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        d
    }

    /// `(a + a†)/2`.
    pub fn hermitize(&self) -> Self {
        let n = self.rows;
        let mut m = self.clone();
        for i in 0..n {
            for j in i..n {
                let v = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                m.data[i * n + j] = v;
                m.data[j * n + i] = v.conj();
            }
        }
        m
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Kronecker product; the left factor is the slower-varying index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows, b.cols);
    let cols = a.cols * q;
    let mut out = ComplexMatrix::zeros(a.rows * p, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let x = a[(i, j)];
            if x == ZERO {
                continue;
            }
            for k in 0..p {
                let base = (i * p + k) * cols + j * q;
                for l in 0..q {
                    out.data[base + l] = x * b.data[k * q + l];
                }
            }
        }
    }
    out
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

/// `⟨u, v⟩`, conjugate-linear in `u`.
pub fn inner(u: &ComplexMatrix, v: &ComplexMatrix) -> Result<C64> {
    if u.cols != 1 || v.cols != 1 || u.rows != v.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner product of {}x{} and {}x{}",
            u.rows, u.cols, v.rows, v.cols
        )));
    }
    Ok(u.data.iter().zip(&v.data).map(|(a, b)| a.conj() * b).sum())
}

pub fn vec_norm(u: &ComplexMatrix) -> f64 {
    u.frobenius_norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdVerdict {
    Positive,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PsdCertificate {
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub verdict: PsdVerdict,
    pub hermiticity_defect: f64,
}

impl PsdCertificate {
    pub fn is_positive(&self) -> bool {
        self.verdict == PsdVerdict::Positive
    }
}

/// `1e-9 · max(1, ‖a‖_max)`.
pub fn default_psd_tolerance(a: &ComplexMatrix) -> f64 {
    1e-9 * a.max_abs().max(1.0)
}

pub fn certify_psd(a: &ComplexMatrix, tol: f64) -> Result<PsdCertificate> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    let defect = a.hermiticity_defect();
    let min_eigenvalue = if defect <= tol {
        HermitianEigen::new(&a.hermitize())
            .eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    } else {
        f64::NAN
    };
    let positive = defect <= tol && min_eigenvalue >= -tol;
    Ok(PsdCertificate {
        min_eigenvalue,
        tolerance: tol,
        verdict: if positive { PsdVerdict::Positive } else { PsdVerdict::Indefinite },
        hermiticity_defect: defect,
    })
}

/// Eigendecomposition of a Hermitian matrix, computed block by block over the
/// connected components of its sparsity pattern. The split is exact: entries
/// that are exactly zero never couple two blocks.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    dim: usize,
    blocks: Vec<EigenBlock>,
}

#[derive(Debug, Clone)]
struct EigenBlock {
    indices: Vec<usize>,
    values: Vec<f64>,
    /// Column-major eigenvectors restricted to `indices`.
    vectors: DMatrix<C64>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Connected components of the nonzero pattern of a square matrix.
pub fn sparsity_components(a: &ComplexMatrix) -> Vec<Vec<usize>> {
    let n = a.rows;
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if a.data[i * n + j] != ZERO || a.data[j * n + i] != ZERO {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

impl HermitianEigen {
    /// Decomposes the Hermitian part of `a`; callers are expected to check
    /// hermiticity beforehand.
    pub fn new(a: &ComplexMatrix) -> Self {
        assert!(a.is_square(), "eigendecomposition needs a square matrix");
        let n = a.rows;
        let blocks = sparsity_components(a)
            .into_iter()
            .map(|indices| {
                let k = indices.len();
                let sub = DMatrix::from_fn(k, k, |r, c| {
                    let x = a[(indices[r], indices[c])];
                    let y = a[(indices[c], indices[r])].conj();
                    (x + y) * 0.5
                });
                if k == 1 {
                    return EigenBlock {
                        indices,
                        values: vec![sub[(0, 0)].re],
                        vectors: DMatrix::from_element(1, 1, ONE),
                    };
                }
                let eig = SymmetricEigen::new(sub);
                EigenBlock {
                    indices,
                    values: eig.eigenvalues.iter().copied().collect(),
                    vectors: eig.eigenvectors,
                }
            })
            .collect();
        Self { dim: n, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `f(a)` via the spectral theorem.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n, n);
        for b in &self.blocks {
            let k = b.indices.len();
            let fv: Vec<C64> = b.values.iter().map(|&l| f(l)).collect();
            for r in 0..k {
                for c in 0..k {
                    let mut s = ZERO;
                    for (m, fm) in fv.iter().enumerate() {
                        s += b.vectors[(r, m)] * fm * b.vectors[(c, m)].conj();
                    }
                    out[(b.indices[r], b.indices[c])] = s;
                }
            }
        }
        out
    }

    /// `f(a) v` for a column vector `v` without forming `f(a)`.
    pub fn apply_fn_to_vec(&self, f: impl Fn(f64) -> C64, v: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(v.rows, self.dim);
        assert_eq!(v.cols, 1);
        let mut out = ComplexMatrix::zeros(self.dim, 1);
        for b in &self.blocks {
            let k = b.indices.len();
            for m in 0..k {
                let mut coef = ZERO;
                for r in 0..k {
                    coef += b.vectors[(r, m)].conj() * v.data[b.indices[r]];
                }
                if coef == ZERO {
                    continue;
                }
                coef *= f(b.values[m]);
                for r in 0..k {
                    out.data[b.indices[r]] += b.vectors[(r, m)] * coef;
                }
            }
        }
        out
    }
}

/// Full ascending spectrum of the Hermitian part of `a`.
pub fn hermitian_spectrum(a: &ComplexMatrix) -> Vec<f64> {
    HermitianEigen::new(a).eigenvalues()
}

/// Dense eigendecomposition without block splitting; used as an oracle.
pub fn dense_spectrum(a: &ComplexMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(a.hermitize().to_nalgebra());
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `exp(scale · h)` for Hermitian `h`.
pub fn herm_exp(h: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(Error::NotSquare(h.rows, h.cols));
    }
    let tol = default_psd_tolerance(h);
    let defect = h.hermiticity_defect();
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(HermitianEigen::new(h).apply_fn(|l| C64::new((scale * l).exp(), 0.0)))
}

/// An ordered tensor factorization `H_1 ⊗ … ⊗ H_k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertFactorization {
    factor_dims: Vec<usize>,
    total_dim: usize,
    strides: Vec<usize>,
}

impl HilbertFactorization {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(factor_dims, usize::MAX)
    }

    pub fn with_cap(factor_dims: Vec<usize>, cap: usize) -> Result<Self> {
        if factor_dims.contains(&0) {
            return Err(Error::InvalidShape("zero-dimensional tensor factor".into()));
        }
        let mut total: usize = 1;
        for &d in &factor_dims {
            total = total.saturating_mul(d);
        }
        if total > cap {
            return Err(Error::DimensionCap { dim: total, cap });
        }
        let mut strides = vec![1; factor_dims.len()];
        for k in (0..factor_dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * factor_dims[k + 1];
        }
        Ok(Self { factor_dims, total_dim: total, strides })
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    pub fn stride(&self, k: usize) -> usize {
        self.strides[k]
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.strides).map(|(d, s)| d * s).sum()
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factor_dims.len()];
        for k in 0..self.factor_dims.len() {
            out[k] = index / self.strides[k];
            index %= self.strides[k];
        }
        out
    }

    /// Lifts `op`, acting on the factors at `positions` (in that order, left
    /// slow), to the whole space with identity elsewhere.
    pub fn embed_local(&self, op: &ComplexMatrix, positions: &[usize]) -> Result<ComplexMatrix> {
        let local: Vec<usize> = positions.iter().map(|&p| self.factor_dims[p]).collect();
        let local_dim: usize = local.iter().product();
        if !op.is_square() || op.rows != local_dim {
            return Err(Error::DimensionMismatch(format!(
                "local operator {}x{} on factors of total dimension {local_dim}",
                op.rows, op.cols
            )));
        }
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::DimensionMismatch("repeated factor position".into()));
        }
        let n = self.total_dim;
        let mut out = ComplexMatrix::zeros(n, n);
        let local_fact = HilbertFactorization::new(local)?;
        for col in 0..n {
            let digits = self.digits(col);
            let lc = local_fact.index(&positions.iter().map(|&p| digits[p]).collect::<Vec<_>>());
            let base = col - positions.iter().map(|&p| digits[p] * self.strides[p]).sum::<usize>();
            for lr in 0..local_dim {
                let x = op[(lr, lc)];
                if x == ZERO {
                    continue;
                }
                let ld = local_fact.digits(lr);
                let row = base + positions.iter().zip(&ld).map(|(&p, &d)| d * self.strides[p]).sum::<usize>();
                out[(row, col)] = x;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_identity_and_sparsity() {
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)), ComplexMatrix::identity(6));
        let e = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let k = kron(&e, &ComplexMatrix::identity(2));
        assert_eq!(k.nnz(), 2);
        assert!(k.data().iter().filter(|z| **z != ZERO).all(|z| *z == ONE));
    }

    #[test]
    fn dagger_hand_case() {
        let a = ComplexMatrix::from_rows(&[vec![ZERO, C64::i()], vec![ZERO, ZERO]]);
        let b = ComplexMatrix::from_rows(&[vec![ZERO, ZERO], vec![-C64::i(), ZERO]]);
        assert_eq!(a.dagger(), b);
    }

    #[test]
    fn inner_conjugates_first_slot() {
        let e1 = ComplexMatrix::basis(2, 0);
        assert_eq!(inner(&e1, &e1).unwrap(), ONE);
        assert_eq!(inner(&e1.scale(C64::i()), &e1).unwrap(), -C64::i());
        assert!(inner(&e1, &ComplexMatrix::basis(3, 0)).is_err());
    }

    #[test]
    fn psd_hand_cases() {
        let c = certify_psd(&ComplexMatrix::identity(4), 1e-9).unwrap();
        assert!(c.is_positive());
        assert!((c.min_eigenvalue - 1.0).abs() < 1e-14);
        let c = certify_psd(&ComplexMatrix::real_diag(&[1.0, -0.5]), 1e-9).unwrap();
        assert_eq!(c.verdict, PsdVerdict::Indefinite);
        assert!((c.min_eigenvalue + 0.5).abs() < 1e-14);
        let nh = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let c = certify_psd(&nh, 1e-9).unwrap();
        assert_eq!(c.verdict, PsdVerdict::Indefinite);
        assert!(c.min_eigenvalue.is_nan());
        assert!(certify_psd(&ComplexMatrix::zeros(2, 3), 1e-9).is_err());
    }

    #[test]
    fn exp_diagonal() {
        let z = herm_exp(&ComplexMatrix::zeros(3, 3), -2.0).unwrap();
        assert!(z.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-15);
        let e = herm_exp(&ComplexMatrix::real_diag(&[1.0, 2.0]), -1.0).unwrap();
        let want = ComplexMatrix::real_diag(&[(-1.0f64).exp(), (-2.0f64).exp()]);
        assert!(e.max_abs_diff(&want) < 1e-15);
        let nh = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_exp(&nh, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn factorization_digits_roundtrip() {
        let f = HilbertFactorization::new(vec![2, 3, 4]).unwrap();
        assert_eq!(f.total_dim(), 24);
        for i in 0..24 {
            assert_eq!(f.index(&f.digits(i)), i);
        }
        assert!(matches!(
            HilbertFactorization::with_cap(vec![64, 64, 2], 4096),
            Err(Error::DimensionCap { dim: 8192, .. })
        ));
    }

    #[test]
    fn embed_local_matches_kron() {
        let f = HilbertFactorization::new(vec![2, 3, 2]).unwrap();
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let want = kron(&kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3)), &x);
        assert_eq!(f.embed_local(&x, &[2]).unwrap(), want);
        let xz = kron(&x, &ComplexMatrix::real_diag(&[1.0, -1.0]));
        let got = f.embed_local(&xz, &[2, 0]).unwrap();
        let want = kron(
            &kron(&ComplexMatrix::real_diag(&[1.0, -1.0]), &ComplexMatrix::identity(3)),
            &x,
        );
        assert_eq!(got, want);
    }

    #[test]
    fn block_eigen_matches_dense() {
        let a = ComplexMatrix::from_fn(6, 6, |i, j| {
            if (i % 2) == (j % 2) {
                C64::new((i + j) as f64, if i < j { 1.0 } else if i > j { -1.0 } else { 0.0 })
            } else {
                ZERO
            }
        });
        let eig = HermitianEigen::new(&a);
        assert_eq!(eig.block_sizes(), vec![3, 3]);
        let (x, y) = (eig.eigenvalues(), dense_spectrum(&a));
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
