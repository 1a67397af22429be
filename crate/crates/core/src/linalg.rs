//! Dense symmetric kernels backed by `faer`.

use alloc::vec;
use alloc::vec::Vec;

use faer::{Mat, MatRef, Side};

use crate::error::{CfaError, Result};

/// Relative tolerance used for every PSD membership test.
pub const PSD_REL_TOL: f64 = 1e-8;
/// Absolute tolerance on `lambda_min(sigma - diag(phi))` for feasibility.
pub const FEAS_TOL: f64 = 1e-6;
/// Numerical rank cutoff (relative to the top eigenvalue) for internal checks.
pub const RANK_REL_TOL: f64 = 1e-8;
/// Rank cutoff used when reporting the rank of an MTFA solution.
pub const MTFA_RANK_TOL: f64 = 1e-5;
/// `psd_power` rejects inputs whose smallest eigenvalue is below `-NOT_PSD_REL * lambda_max`.
pub const NOT_PSD_REL: f64 = 1e-6;

/// Dense symmetric matrix. Every constructor and mutator keeps the storage exactly symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    m: Mat<f64>,
}

impl SymMatrix {
    pub fn zeros(p: usize) -> Self {
        Self { m: Mat::zeros(p, p) }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_diag(&vec![1.0; p])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let p = d.len();
        Self {
            m: Mat::from_fn(p, p, |i, j| if i == j { d[i] } else { 0.0 }),
        }
    }

    /// Builds from the lower triangle of `f`; `f(i, j)` is only called for `i >= j`.
    pub fn from_fn(p: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(p, p);
        for j in 0..p {
            for i in j..p {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        Self { m }
    }

    /// Averages a square array with its transpose.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.len();
        if p == 0 {
            return Err(CfaError::input("matrix is empty"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(CfaError::input(alloc::format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    p
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(CfaError::input(alloc::format!("row {i} has a non-finite entry")));
            }
        }
        Ok(Self::from_fn(p, |i, j| 0.5 * (rows[i][j] + rows[j][i])))
    }

    /// Symmetrizes an arbitrary square `faer` matrix.
    pub fn from_mat(a: MatRef<'_, f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "matrix must be square");
        Self::from_fn(a.nrows(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
    }

    /// Largest `|a_ij - a_ji|` of a square array.
    pub fn max_asymmetry(rows: &[Vec<f64>]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..rows.len() {
            for j in 0..i {
                let a = rows[i].get(j).copied().unwrap_or(0.0);
                let b = rows[j].get(i).copied().unwrap_or(0.0);
                worst = worst.max(libm::fabs(a - b));
            }
        }
        worst
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[(i, j)] = v;
        self.m[(j, i)] = v;
    }

    pub fn as_mat(&self) -> MatRef<'_, f64> {
        self.m.as_ref()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let p = self.dim();
        (0..p).map(|i| (0..p).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        let p = self.dim();
        (0..p).all(|j| (j..p).all(|i| self.get(i, j).is_finite()))
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let p = self.dim();
        let mut s = 0.0;
        for j in 0..p {
            s += self.get(j, j) * other.get(j, j);
            for i in j + 1..p {
                s += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        s
    }

    pub fn frobenius(&self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn max_abs(&self) -> f64 {
        let p = self.dim();
        let mut worst: f64 = 0.0;
        for j in 0..p {
            for i in j..p {
                worst = worst.max(libm::fabs(self.get(i, j)));
            }
        }
        worst
    }

    fn zip(&self, other: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> SymMatrix {
        assert_eq!(self.dim(), other.dim());
        SymMatrix::from_fn(self.dim(), |i, j| f(self.get(i, j), other.get(i, j)))
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix::from_fn(self.dim(), |i, j| s * self.get(i, j))
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &SymMatrix, b: f64) -> SymMatrix {
        self.zip(other, |x, y| a * x + b * y)
    }

    /// `self - diag(d)`.
    pub fn sub_diag(&self, d: &[f64]) -> SymMatrix {
        assert_eq!(self.dim(), d.len());
        let mut out = self.clone();
        for (i, v) in d.iter().enumerate() {
            out.m[(i, i)] -= v;
        }
        out
    }

    /// `self + diag(d)`.
    pub fn add_diag(&self, d: &[f64]) -> SymMatrix {
        assert_eq!(self.dim(), d.len());
        let mut out = self.clone();
        for (i, v) in d.iter().enumerate() {
            out.m[(i, i)] += v;
        }
        out
    }

    /// `self + s * I`.
    pub fn shift(&self, s: f64) -> SymMatrix {
        let mut out = self.clone();
        for i in 0..self.dim() {
            out.m[(i, i)] += s;
        }
        out
    }

    /// Diagonal of the (generally unsymmetric) product `self * other`.
    pub fn diag_of_product(&self, other: &SymMatrix) -> Vec<f64> {
        let p = self.dim();
        (0..p)
            .map(|i| (0..p).map(|k| self.get(i, k) * other.get(k, i)).sum())
            .collect()
    }

    /// Symmetrized product `(AB + BA) / 2`; equals `AB` when the factors commute.
    pub fn sym_product(&self, other: &SymMatrix) -> SymMatrix {
        let ab = &self.m * &other.m;
        SymMatrix::from_mat(ab.as_ref())
    }
}

/// Eigendecomposition with eigenvalues sorted in decreasing order.
#[derive(Clone, Debug)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: Mat<f64>,
}

impl EigenPairs {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn lambda_min(&self) -> f64 {
        *self.values.last().unwrap_or(&0.0)
    }

    pub fn lambda_max(&self) -> f64 {
        *self.values.first().unwrap_or(&0.0)
    }

    /// `U diag(f(lambda)) U'`, skipping columns where `f` vanishes.
    pub fn spectral_map(&self, f: impl Fn(usize, f64) -> f64) -> SymMatrix {
        let p = self.dim();
        let keep: Vec<(usize, f64)> = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| (k, f(k, v)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        if keep.is_empty() {
            return SymMatrix::zeros(p);
        }
        let u = Mat::from_fn(p, keep.len(), |i, c| self.vectors[(i, keep[c].0)]);
        let us = Mat::from_fn(p, keep.len(), |i, c| self.vectors[(i, keep[c].0)] * keep[c].1);
        let prod = &us * u.transpose();
        SymMatrix::from_mat(prod.as_ref())
    }

    /// Sum of the eigenvalues with index `>= r` (the trailing `p - r`), each mapped by `f`.
    pub fn trailing_sum(&self, r: usize, f: impl Fn(f64) -> f64) -> f64 {
        self.values.iter().skip(r).map(|&v| f(v)).sum()
    }
}

pub(crate) fn eigh(a: &SymMatrix) -> EigenPairs {
    let e = a
        .m
        .self_adjoint_eigen(Side::Lower)
        .expect("eigendecomposition of a finite symmetric matrix");
    let p = a.dim();
    let s = e.S().column_vector();
    let u = e.U();
    EigenPairs {
        values: (0..p).map(|k| s[p - 1 - k]).collect(),
        vectors: Mat::from_fn(p, p, |i, k| u[(i, p - 1 - k)]),
    }
}

/// Eigenvalues only, decreasing.
pub(crate) fn eigvalsh(a: &SymMatrix) -> Vec<f64> {
    let mut v = a
        .m
        .self_adjoint_eigenvalues(Side::Lower)
        .expect("eigenvalues of a finite symmetric matrix");
    v.reverse();
    v
}

pub fn lambda_min(a: &SymMatrix) -> f64 {
    *eigvalsh(a).last().unwrap_or(&0.0)
}

fn ensure_finite(a: &SymMatrix) -> Result<()> {
    if a.is_finite() {
        Ok(())
    } else {
        Err(CfaError::input("matrix has non-finite entries"))
    }
}

/// Full spectral decomposition, eigenvalues decreasing.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenPairs> {
    ensure_finite(a)?;
    Ok(eigh(a))
}

/// Eigenvalues in decreasing order.
pub fn sym_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    Ok(eigvalsh(a))
}

/// Schatten q-norm `(sum |lambda_i|^q)^(1/q)`.
pub fn schatten_q(a: &SymMatrix, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(CfaError::input("schatten norm needs q >= 1"));
    }
    let s: f64 = sym_eigenvalues(a)?
        .iter()
        .map(|&v| libm::pow(libm::fabs(v), q))
        .sum();
    Ok(libm::pow(s, 1.0 / q))
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    ensure_finite(a)?;
    Ok(project_psd(a))
}

pub(crate) fn project_psd(a: &SymMatrix) -> SymMatrix {
    let e = eigh(a);
    if e.lambda_min() >= 0.0 {
        return a.clone();
    }
    e.spectral_map(|_, v| v.max(0.0))
}

/// Projection onto `{W : 0 <= W <= I, Tr(W) = t}` for `0 <= t <= p`.
pub(crate) fn project_spectrahedron(a: &SymMatrix, t: f64) -> SymMatrix {
    let e = eigh(a);
    let tau = capped_simplex_shift(&e.values, t);
    e.spectral_map(|_, v| (v - tau).clamp(0.0, 1.0))
}

/// `tau` with `sum_k clamp(v_k - tau, 0, 1) = t`; the sum is piecewise linear in `tau`.
pub(crate) fn capped_simplex_shift(v: &[f64], t: f64) -> f64 {
    let s = |tau: f64| v.iter().map(|&x| (x - tau).clamp(0.0, 1.0)).sum::<f64>();
    let mut knots: Vec<f64> = v.iter().flat_map(|&x| [x, x - 1.0]).collect();
    knots.sort_by(|a, b| a.total_cmp(b));
    // s is nonincreasing; find adjacent knots bracketing t and interpolate.
    let (mut lo, mut hi) = (0usize, knots.len() - 1);
    if s(knots[lo]) <= t {
        return knots[lo];
    }
    if s(knots[hi]) >= t {
        return knots[hi];
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if s(knots[mid]) >= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (knots[lo], knots[hi]);
    let (sa, sb) = (s(a), s(b));
    if sa == sb {
        return a;
    }
    a + (sa - t) * (b - a) / (sa - sb)
}

/// `A^q` through the spectrum; small negative eigenvalues are clamped to zero.
pub fn psd_power(a: &SymMatrix, q: f64) -> Result<SymMatrix> {
    ensure_finite(a)?;
    if !(q >= 1.0) {
        return Err(CfaError::input("matrix power needs q >= 1"));
    }
    let e = eigh(a);
    check_psd_spectrum(&e.values)?;
    if q == 1.0 {
        return Ok(e.spectral_map(|_, v| v.max(0.0)));
    }
    Ok(e.spectral_map(|_, v| power(v.max(0.0), q)))
}

pub(crate) fn check_psd_spectrum(values: &[f64]) -> Result<()> {
    let lmax = values.first().copied().unwrap_or(0.0);
    let lmin = values.last().copied().unwrap_or(0.0);
    if lmin < -NOT_PSD_REL * lmax.max(0.0) - f64::MIN_POSITIVE {
        return Err(CfaError::NotPsd {
            lambda_min: lmin,
            lambda_max: lmax,
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn power(v: f64, q: f64) -> f64 {
    if q == 1.0 {
        v
    } else if q == 2.0 {
        v * v
    } else {
        libm::pow(v, q)
    }
}

/// Keeps the top `r` eigenpairs (clamped at zero).
pub fn best_rank_r(a: &SymMatrix, r: usize) -> SymMatrix {
    if r == 0 {
        return SymMatrix::zeros(a.dim());
    }
    let e = eigh(a);
    e.spectral_map(|k, v| if k < r { v.max(0.0) } else { 0.0 })
}

/// `D A D` with `D = diag(1 / sqrt(a_ii))`.
pub fn to_correlation(a: &SymMatrix) -> Result<SymMatrix> {
    ensure_finite(a)?;
    let d = correlation_scaling(a)?;
    Ok(SymMatrix::from_fn(a.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            d[i] * a.get(i, j) * d[j]
        }
    }))
}

/// The scaling vector `1 / sqrt(a_ii)` used by [`to_correlation`].
pub fn correlation_scaling(a: &SymMatrix) -> Result<Vec<f64>> {
    a.diag()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v > 0.0 {
                Ok(1.0 / libm::sqrt(v))
            } else {
                Err(CfaError::input(alloc::format!(
                    "diagonal entry {i} is not positive"
                )))
            }
        })
        .collect()
}

/// Number of eigenvalues above `rel * lambda_1`.
pub fn numerical_rank(a: &SymMatrix, rel: f64) -> usize {
    let v = eigvalsh(a);
    let top = v.first().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return 0;
    }
    v.iter().filter(|&&x| x > rel * top).count()
}
