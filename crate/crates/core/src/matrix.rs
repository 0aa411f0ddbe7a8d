//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is a row-major dense matrix of `Complex64` with explicit
//! dimensions. Tensor products follow the usual Kronecker ordering, so an
//! operator on `H_a ⊗ H_b` is indexed by `(i_a * d_b + i_b)`.
//!
//! Eigen- and singular-value work is delegated to `nalgebra`; everything
//! else is written out here so the index conventions stay in one place.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// The crate's PRNG. Outputs for a given seed are stable across releases of
/// this crate (ChaCha20, seeded through `seed_from_u64`).
pub type DetRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> DetRng {
    ChaCha20Rng::seed_from_u64(seed)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadEntryCount {
                len: data.len(),
                expected: rows * cols,
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(diag[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Real matrix from nested rows; handy for literals in tests and fixtures.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        ComplexMatrix {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        Self::from_fn(n, n, |i, j| v[i] * v[j].conj())
    }

    /// `|e_i><e_j|` in dimension `n`.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
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

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(C64::new(s, 0.0))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Hilbert-Schmidt inner product `Tr[self^dag other]`.
    pub fn hs_inner(&self, other: &ComplexMatrix) -> C64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `‖self - other‖_F`; panics on shape mismatch.
    pub fn distance(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self * x * self^dag`.
    pub fn conjugate(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(x).matmul(&self.dagger())
    }

    /// `‖m - m^dag‖_F`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(m + m^dag) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    /// `‖m^dag m - I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger()
            .matmul(self)
            .distance(&ComplexMatrix::identity(self.cols))
    }

    /// Multiplies by a global phase so that the first entry (row-major) with
    /// modulus above `1e-12` relative to the largest is real and positive.
    pub fn phase_fixed(&self) -> ComplexMatrix {
        match first_significant(&self.data) {
            Some(z) => self.scale_c(z.conj() / z.norm()),
            None => self.clone(),
        }
    }

    /// Row-major vectorization as a column vector: `vec(X)[r*cols + c] = X[r,c]`.
    pub fn vectorize(&self) -> ComplexMatrix {
        ComplexMatrix::column(&self.data)
    }

    /// Inverse of [`vectorize`](Self::vectorize).
    pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> ComplexMatrix {
        assert_eq!(v.len(), rows * cols);
        ComplexMatrix {
            rows,
            cols,
            data: v.to_vec(),
        }
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NonSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

pub(crate) fn first_significant(v: &[C64]) -> Option<C64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    v.iter().copied().find(|z| z.norm() > 1e-12 * max.max(1.0))
}

/// Phase-fixes a vector so its first significant component is real positive.
pub fn phase_fix_vector(v: &[C64]) -> Vec<C64> {
    match first_significant(v) {
        Some(z) => {
            let p = z.conj() / z.norm();
            v.iter().map(|x| x * p).collect()
        }
        None => v.to_vec(),
    }
}

pub fn vector_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V f(Λ) V^dag`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * fv[k])
                .sum()
        })
    }
}

/// Eigendecomposition of `m`, which must be Hermitian within
/// `hermiticity_tol`. The Hermitian part is factored.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEig> {
    hermitian_eig_tol(m, Tolerances::DEFAULT.hermiticity_tol)
}

pub fn hermitian_eig_tol(m: &ComplexMatrix, hermiticity_tol: f64) -> Result<HermitianEig> {
    let n = m.require_square()?;
    let defect = m.hermiticity_defect();
    if defect > hermiticity_tol {
        return Err(Error::NotHermitian(defect));
    }
    if n == 0 {
        return Ok(HermitianEig {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let h = m.hermitian_part().to_nalgebra();
    let eig = SymmetricEigen::try_new(h, f64::EPSILON, 100_000).ok_or(Error::ConvergenceFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEig { values, vectors })
}

/// Singular values, descending.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Positive semidefiniteness within `tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> Result<bool> {
    let eig = hermitian_eig_tol(m, tol.max(Tolerances::DEFAULT.hermiticity_tol))?;
    Ok(eig.min() >= -tol)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.min())
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eig(m)?.max())
}

/// Square root of a PSD matrix together with the total magnitude of
/// negative eigenvalues that were clipped to zero.
#[derive(Debug, Clone)]
pub struct PsdSqrt {
    pub sqrt: ComplexMatrix,
    pub clipped: f64,
}

pub fn matrix_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(matrix_sqrt_psd_with_defect(m)?.sqrt)
}

pub fn matrix_sqrt_psd_with_defect(m: &ComplexMatrix) -> Result<PsdSqrt> {
    let eig = hermitian_eig(m)?;
    let psd_tol = Tolerances::DEFAULT.psd_tol;
    if eig.min() < -psd_tol {
        return Err(Error::NotPSD(eig.min()));
    }
    let clipped = eig.values.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    Ok(PsdSqrt {
        sqrt: eig.map_spectrum(|l| l.max(0.0).sqrt()),
        clipped,
    })
}

/// `m^{-1/2}` on the support of `m`: eigenvalues `>= cutoff` map to
/// `λ^{-1/2}`, the rest to zero.
pub fn support_pinv_sqrt(m: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    if eig.min() < -Tolerances::DEFAULT.psd_tol {
        return Err(Error::NotPSD(eig.min()));
    }
    Ok(eig.map_spectrum(|l| if l >= cutoff { 1.0 / l.sqrt() } else { 0.0 }))
}

/// Orthogonal projector onto the eigenvectors with eigenvalue `>= cutoff`.
pub fn support_projector(m: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(m)?;
    Ok(eig.map_spectrum(|l| if l >= cutoff { 1.0 } else { 0.0 }))
}

/// Which factor of a bipartite space to keep in [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    A,
    B,
}

/// Partial trace of an operator on `H_a ⊗ H_b`.
pub fn partial_trace(m: &ComplexMatrix, dim_a: usize, dim_b: usize, keep: Keep) -> Result<ComplexMatrix> {
    let n = m.require_square()?;
    if n != dim_a * dim_b {
        return Err(Error::dims(format!(
            "partial trace: matrix is {n}x{n}, dims {dim_a}*{dim_b}"
        )));
    }
    Ok(match keep {
        Keep::A => ComplexMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        }),
        Keep::B => ComplexMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| m[(k * dim_b + i, k * dim_b + j)]).sum()
        }),
    })
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (rb, cb) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * rb, a.cols * cb, |r, c| {
        a[(r / rb, c / cb)] * b[(r % rb, c % cb)]
    })
}

/// The permutation `H_a ⊗ H_b -> H_b ⊗ H_a`, `u ⊗ v ↦ v ⊗ u`.
pub fn swap_operator(dim_a: usize, dim_b: usize) -> ComplexMatrix {
    let n = dim_a * dim_b;
    let mut s = ComplexMatrix::zeros(n, n);
    for i in 0..dim_a {
        for j in 0..dim_b {
            s[(j * dim_a + i, i * dim_b + j)] = ONE;
        }
    }
    s
}

/// `|I>> = Σ_m e_m ⊗ e_m`, unnormalized, as a `d² x 1` column.
pub fn vec_identity(d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d * d, 1);
    for m in 0..d {
        v[(m * d + m, 0)] = ONE;
    }
    v
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `rows x cols` matrix of i.i.d. standard complex Gaussians.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| gaussian_c64(rng)).collect();
    let n = vector_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Orthonormalizes the columns of a full-rank square matrix by modified
/// Gram-Schmidt (two passes). Equivalent to the `Q` of a QR decomposition
/// whose `R` has a positive real diagonal.
pub(crate) fn orthonormalize_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows;
    let mut cols: Vec<Vec<C64>> = (0..m.cols).map(|j| m.col(j)).collect();
    for j in 0..cols.len() {
        for _pass in 0..2 {
            for k in 0..j {
                let p = inner(&cols[k], &cols[j]);
                let (done, rest) = cols.split_at_mut(j);
                for (x, q) in rest[0].iter_mut().zip(&done[k]) {
                    *x -= p * q;
                }
            }
        }
        let nrm = vector_norm(&cols[j]);
        for x in cols[j].iter_mut() {
            *x /= nrm;
        }
    }
    ComplexMatrix::from_fn(n, m.cols, |i, j| cols[j][i])
}

/// Haar-distributed unitary drawn from `rng`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    orthonormalize_columns(&ginibre(d, d, rng))
}

/// Haar-distributed `d x d` unitary; the same seed gives the same matrix.
pub fn haar_random_unitary(d: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(d, &mut seeded_rng(seed))
}

/// `exp(i t H)` for Hermitian `H`, through its eigendecomposition.
pub fn exp_i_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let n = eig.values.len();
    let phases: Vec<C64> = eig.values.iter().map(|&l| C64::from_polar(1.0, t * l)).collect();
    let v = &eig.vectors;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * phases[k] * v[(j, k)].conj()).sum()
    }))
}

/// Random Hermitian matrix (GUE-like), used by tests and samplers.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(d, d, rng).hermitian_part()
}

/// Extends orthonormal columns `m` (`n x k`, `k <= n`) to an `n x n` unitary
/// by Gram-Schmidt against the standard basis. The first `k` columns are
/// kept unchanged.
pub fn complete_to_unitary(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows;
    let mut cols: Vec<Vec<C64>> = (0..m.cols).map(|j| m.col(j)).collect();
    let mut e = 0;
    while cols.len() < n && e < n {
        let mut v = vec![ZERO; n];
        v[e] = ONE;
        e += 1;
        for _pass in 0..2 {
            for q in &cols {
                let p = inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= p * y;
                }
            }
        }
        let nrm = vector_norm(&v);
        if nrm > 1e-6 {
            cols.push(v.into_iter().map(|z| z / nrm).collect());
        }
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}
