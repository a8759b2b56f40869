//! Exact and floating linear algebra behind a common backend interface.
//!
//! Every rank decision downstream (defects, strata, local models) goes
//! through [`Backend`], so the two implementations must agree on their
//! contracts: pivot columns are chosen greedily left to right, which makes
//! row/column selections deterministic and reproducible across runs. The
//! exact backend clears denominators per row and runs fraction-free
//! elimination over big integers; the float backend runs threshold-pivoted
//! Gaussian elimination where an entry only counts as a pivot if it exceeds
//! `rank_tol * max(rows, cols) * max_abs_entry` of the original matrix.

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};
use std::fmt;
use thiserror::Error;

/// Exact rational scalar used for all coordinates, grids and exact ranks.
pub type Rat = num::BigRational;

/// Elementary functions; only the float backend evaluates them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Elementary {
    Sin,
    Cos,
    Exp,
    Log,
}

impl fmt::Display for Elementary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Exp => "exp",
            Elementary::Log => "log",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementaryError {
    #[error("{func} is not available on the exact backend")]
    Unsupported { func: Elementary },
    #[error("{func} is undefined at {arg}")]
    OutOfDomain { func: Elementary, arg: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("row count mismatch: {left} rows vs {right} rows")]
    RowMismatch { left: usize, right: usize },
    #[error("shape mismatch in product: {left_cols} columns vs {right_rows} rows")]
    ProductShape { left_cols: usize, right_rows: usize },
    #[error("{name} must be strictly positive, got {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}

/// Field operations shared by exact rationals and `f64`.
///
/// `checked_div` returns `None` exactly when the divisor is the scalar zero;
/// tolerance-based zero tests live on [`Backend`], not here.
pub trait Scalar: Clone + PartialEq + PartialOrd + fmt::Debug + fmt::Display {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_rational(r: &Rat) -> Self;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn neg(&self) -> Self;
    fn checked_div(&self, rhs: &Self) -> Option<Self>;
    fn int_pow(&self, exp: u32) -> Self;
    fn elementary(&self, func: Elementary) -> Result<Self, ElementaryError>;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
}

impl Scalar for Rat {
    fn zero() -> Self {
        <Rat as Zero>::zero()
    }

    fn one() -> Self {
        <Rat as One>::one()
    }

    fn from_rational(r: &Rat) -> Self {
        r.clone()
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if Zero::is_zero(rhs) {
            None
        } else {
            Some(self / rhs)
        }
    }

    fn int_pow(&self, exp: u32) -> Self {
        num::pow::pow(self.clone(), exp as usize)
    }

    fn elementary(&self, func: Elementary) -> Result<Self, ElementaryError> {
        Err(ElementaryError::Unsupported { func })
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_rational(r: &Rat) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }

    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }

    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }

    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }

    fn neg(&self) -> Self {
        -self
    }

    fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if *rhs == 0.0 {
            None
        } else {
            Some(self / rhs)
        }
    }

    fn int_pow(&self, exp: u32) -> Self {
        if exp <= i32::MAX as u32 {
            self.powi(exp as i32)
        } else {
            self.powf(exp as f64)
        }
    }

    fn elementary(&self, func: Elementary) -> Result<Self, ElementaryError> {
        match func {
            Elementary::Sin => Ok(self.sin()),
            Elementary::Cos => Ok(self.cos()),
            Elementary::Exp => Ok(self.exp()),
            Elementary::Log => {
                if *self > 0.0 {
                    Ok(self.ln())
                } else {
                    Err(ElementaryError::OutOfDomain {
                        func,
                        arg: self.to_string(),
                    })
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

/// Dense row-major matrix. Zero rows or columns are legal; such a matrix has
/// rank zero and, for a zero-row matrix, a full kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    entries: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<S>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Matrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![S::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::with_capacity(nrows * ncols);
        for row in rows {
            assert_eq!(row.len(), ncols, "all rows must have equal length");
            entries.extend(row);
        }
        Matrix::new(nrows, ncols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(j, i, self.at(i, j).clone());
            }
        }
        out
    }

    /// Concatenate columns: `[self | rhs]`.
    pub fn hstack(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.rows != rhs.rows {
            return Err(LinalgError::RowMismatch {
                left: self.rows,
                right: rhs.rows,
            });
        }
        let mut entries = Vec::with_capacity(self.rows * (self.cols + rhs.cols));
        for i in 0..self.rows {
            entries.extend_from_slice(self.row(i));
            entries.extend_from_slice(rhs.row(i));
        }
        Ok(Matrix::new(self.rows, self.cols + rhs.cols, entries))
    }

    /// New matrix made of the given rows of `self`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut entries = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            entries.extend_from_slice(self.row(i));
        }
        Matrix::new(indices.len(), self.cols, entries)
    }

    /// New matrix keeping columns `lo..hi` of `self`.
    pub fn column_range(&self, lo: usize, hi: usize) -> Self {
        assert!(lo <= hi && hi <= self.cols);
        let mut entries = Vec::with_capacity(self.rows * (hi - lo));
        for i in 0..self.rows {
            entries.extend_from_slice(&self.row(i)[lo..hi]);
        }
        Matrix::new(self.rows, hi - lo, entries)
    }

    pub fn mul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ProductShape {
                left_cols: self.cols,
                right_rows: rhs.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = S::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(rhs.at(k, j)));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }
}

/// Lift an exact rational matrix into the scalar type of a backend.
pub fn lift_matrix<S: Scalar>(m: &Matrix<Rat>) -> Matrix<S> {
    let entries = (0..m.rows())
        .flat_map(|i| m.row(i).iter().map(S::from_rational))
        .collect();
    Matrix::new(m.rows(), m.cols(), entries)
}

/// Per-row denominator clearing; the result spans the same row space.
fn cleared_rows(m: &Matrix<Rat>) -> Vec<Vec<BigInt>> {
    (0..m.rows())
        .map(|i| {
            let scale = m
                .row(i)
                .iter()
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            m.row(i)
                .iter()
                .map(|v| v.numer() * (&scale / v.denom()))
                .collect()
        })
        .collect()
}

/// Fraction-free elimination over integers. Returns the pivot columns, which
/// form the lexicographically first maximal independent column set.
fn bareiss_pivot_columns(mut a: Vec<Vec<BigInt>>, cols: usize) -> Vec<usize> {
    let rows = a.len();
    let mut pivots = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0usize;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        for i in r + 1..rows {
            for j in c + 1..cols {
                // One-step fraction-free update; the division is exact.
                let t = &a[r][c] * &a[i][j] - &a[i][c] * &a[r][j];
                a[i][j] = t / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = a[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Reduced row echelon form with a pluggable negligibility test. Float
/// callers pick the largest pivot in each column; the exact caller takes the
/// first nonzero so selections stay greedy and deterministic.
fn rref<S: Scalar>(
    m: &Matrix<S>,
    negligible: &dyn Fn(&S) -> bool,
    pick_largest: bool,
) -> (Vec<Vec<S>>, Vec<usize>) {
    let rows = m.rows();
    let cols = m.cols();
    let mut a: Vec<Vec<S>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let candidate = if pick_largest {
            (r..rows)
                .filter(|&i| !negligible(&a[i][c]))
                .max_by(|&i, &j| {
                    a[i][c]
                        .abs()
                        .partial_cmp(&a[j][c].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        } else {
            (r..rows).find(|&i| !negligible(&a[i][c]))
        };
        let Some(p) = candidate else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][c].clone();
        for entry in a[r][c..].iter_mut() {
            *entry = entry.checked_div(&inv).expect("pivot is nonzero");
        }
        let (above, rest) = a.split_at_mut(r);
        let (pivot_row, below) = rest.split_first_mut().expect("pivot row exists");
        for row in above.iter_mut().chain(below.iter_mut()) {
            if Scalar::is_zero(&row[c]) {
                continue;
            }
            let factor = row[c].clone();
            for (dst, src) in row[c..].iter_mut().zip(pivot_row[c..].iter()) {
                *dst = dst.sub(&factor.mul(src));
            }
            row[c] = S::zero();
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Kernel basis from a reduced echelon form: one column per free variable.
fn kernel_from_rref<S: Scalar>(rref: &[Vec<S>], pivots: &[usize], cols: usize) -> Matrix<S> {
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Matrix::zeros(cols, free.len());
    for (k, &f) in free.iter().enumerate() {
        basis.set(f, k, S::one());
        for (i, &p) in pivots.iter().enumerate() {
            basis.set(p, k, rref[i][f].neg());
        }
    }
    basis
}

/// Rank decisions and membership tests for one scalar type.
pub trait Backend: Clone + fmt::Debug {
    type S: Scalar;

    /// Lexicographically first maximal independent column set.
    fn pivot_columns(&self, m: &Matrix<Self::S>) -> Vec<usize>;

    /// Basis of the null space, one column per kernel vector. The column
    /// count is always `cols - rank`.
    fn kernel_basis(&self, m: &Matrix<Self::S>) -> Matrix<Self::S>;

    /// Zero test used for submanifold membership.
    fn vanishes(&self, v: &Self::S) -> bool;

    /// Strict positivity test used for open constraints.
    fn is_positive(&self, v: &Self::S) -> bool;

    fn supports_elementary(&self) -> bool;

    fn label(&self) -> &'static str;

    fn rank(&self, m: &Matrix<Self::S>) -> usize {
        self.pivot_columns(m).len()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ExactBackend;

impl Backend for ExactBackend {
    type S = Rat;

    fn pivot_columns(&self, m: &Matrix<Rat>) -> Vec<usize> {
        bareiss_pivot_columns(cleared_rows(m), m.cols())
    }

    fn kernel_basis(&self, m: &Matrix<Rat>) -> Matrix<Rat> {
        let (reduced, pivots) = rref(m, &|v: &Rat| Zero::is_zero(v), false);
        kernel_from_rref(&reduced, &pivots, m.cols())
    }

    fn vanishes(&self, v: &Rat) -> bool {
        Zero::is_zero(v)
    }

    fn is_positive(&self, v: &Rat) -> bool {
        v > &<Rat as Zero>::zero()
    }

    fn supports_elementary(&self) -> bool {
        false
    }

    fn label(&self) -> &'static str {
        "exact"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatBackend {
    pub rank_tol: f64,
    pub membership_tol: f64,
}

impl Default for FloatBackend {
    fn default() -> Self {
        FloatBackend {
            rank_tol: 1e-10,
            membership_tol: 1e-9,
        }
    }
}

impl FloatBackend {
    pub fn new(rank_tol: f64, membership_tol: f64) -> Result<Self, LinalgError> {
        if rank_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(LinalgError::InvalidTolerance {
                name: "rank_tol",
                value: rank_tol,
            });
        }
        if membership_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(LinalgError::InvalidTolerance {
                name: "membership_tol",
                value: membership_tol,
            });
        }
        Ok(FloatBackend {
            rank_tol,
            membership_tol,
        })
    }

    fn pivot_threshold(&self, m: &Matrix<f64>) -> f64 {
        let scale = (0..m.rows())
            .flat_map(|i| m.row(i).iter())
            .fold(0.0f64, |acc, v| acc.max(f64::abs(*v)));
        self.rank_tol * m.rows().max(m.cols()) as f64 * scale
    }
}

impl Backend for FloatBackend {
    type S = f64;

    fn pivot_columns(&self, m: &Matrix<f64>) -> Vec<usize> {
        let tol = self.pivot_threshold(m);
        let (_, pivots) = rref(m, &move |v: &f64| f64::abs(*v) <= tol, true);
        pivots
    }

    fn kernel_basis(&self, m: &Matrix<f64>) -> Matrix<f64> {
        let tol = self.pivot_threshold(m);
        let (reduced, pivots) = rref(m, &move |v: &f64| f64::abs(*v) <= tol, true);
        kernel_from_rref(&reduced, &pivots, m.cols())
    }

    fn vanishes(&self, v: &f64) -> bool {
        f64::abs(*v) <= self.membership_tol
    }

    fn is_positive(&self, v: &f64) -> bool {
        *v > self.membership_tol
    }

    fn supports_elementary(&self) -> bool {
        true
    }

    fn label(&self) -> &'static str {
        "float"
    }
}

/// Runtime backend choice, as written in scenario files.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBackend {
    ExactRational,
    Float { rank_tol: f64, membership_tol: f64 },
}

impl ScalarBackend {
    pub fn validate(&self) -> Result<(), LinalgError> {
        match *self {
            ScalarBackend::ExactRational => Ok(()),
            ScalarBackend::Float {
                rank_tol,
                membership_tol,
            } => FloatBackend::new(rank_tol, membership_tol).map(|_| ()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ScalarBackend::ExactRational => "exact",
            ScalarBackend::Float { .. } => "float",
        }
    }
}

pub fn rank<B: Backend>(backend: &B, m: &Matrix<B::S>) -> usize {
    backend.rank(m)
}

pub fn kernel_basis<B: Backend>(backend: &B, m: &Matrix<B::S>) -> Matrix<B::S> {
    backend.kernel_basis(m)
}

/// Dimension of `span(b1) + span(b2)` where both matrices hold spanning
/// vectors as columns over the same ambient space.
pub fn dim_span_union<B: Backend>(
    backend: &B,
    b1: &Matrix<B::S>,
    b2: &Matrix<B::S>,
) -> Result<usize, LinalgError> {
    Ok(backend.rank(&b1.hstack(b2)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn int_matrix(rows: Vec<Vec<i64>>) -> Matrix<Rat> {
        Matrix::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| rat(v, 1)).collect())
                .collect(),
        )
    }

    #[test]
    fn exact_rank_basics() {
        let b = ExactBackend;
        assert_eq!(b.rank(&Matrix::<Rat>::identity(3)), 3);
        assert_eq!(b.rank(&Matrix::<Rat>::zeros(2, 5)), 0);
        assert_eq!(b.rank(&int_matrix(vec![vec![1, 2], vec![2, 4]])), 1);
        assert_eq!(b.rank(&int_matrix(vec![vec![1, 2], vec![2, 5]])), 2);
    }

    #[test]
    fn exact_rank_with_fractions() {
        let b = ExactBackend;
        // determinant 1/10 - 1/12 is nonzero
        let m = Matrix::from_rows(vec![
            vec![rat(1, 2), rat(1, 3)],
            vec![rat(1, 4), rat(1, 5)],
        ]);
        assert_eq!(b.rank(&m), 2);
        // second row is 3/2 times the first
        let m = Matrix::from_rows(vec![
            vec![rat(1, 2), rat(1, 3)],
            vec![rat(3, 4), rat(1, 2)],
        ]);
        assert_eq!(b.rank(&m), 1);
    }

    #[test]
    fn zero_dimension_edges() {
        let b = ExactBackend;
        let empty_rows = Matrix::<Rat>::zeros(0, 3);
        assert_eq!(b.rank(&empty_rows), 0);
        let k = b.kernel_basis(&empty_rows);
        assert_eq!((k.rows(), k.cols()), (3, 3));
        let empty_cols = Matrix::<Rat>::zeros(3, 0);
        assert_eq!(b.rank(&empty_cols), 0);
        assert_eq!(b.kernel_basis(&empty_cols).cols(), 0);
    }

    #[test]
    fn pivot_columns_are_greedy() {
        let b = ExactBackend;
        let m = int_matrix(vec![vec![0, 1, 1], vec![0, 2, 2]]);
        assert_eq!(b.pivot_columns(&m), vec![1]);
        let m = int_matrix(vec![vec![1, 2, 0], vec![2, 4, 1]]);
        assert_eq!(b.pivot_columns(&m), vec![0, 2]);
    }

    #[test]
    fn exact_kernel_annihilates() {
        let b = ExactBackend;
        let m = int_matrix(vec![vec![1, 2, 3], vec![4, 5, 6]]);
        let k = b.kernel_basis(&m);
        assert_eq!(k.cols(), 1);
        let prod = m.mul(&k).unwrap();
        for i in 0..prod.rows() {
            for j in 0..prod.cols() {
                assert!(Scalar::is_zero(prod.at(i, j)));
            }
        }
    }

    #[test]
    fn rank_nullity_holds() {
        let b = ExactBackend;
        let m = int_matrix(vec![vec![1, 2, 3, 4], vec![2, 4, 6, 8], vec![0, 1, 0, 1]]);
        let r = b.rank(&m);
        let k = b.kernel_basis(&m);
        assert_eq!(r + k.cols(), m.cols());
    }

    #[test]
    fn float_rank_thresholding() {
        let b = FloatBackend::default();
        let m = Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-13]]);
        assert_eq!(b.rank(&m), 1);
        let m = Matrix::from_rows(vec![vec![1.0, 1.0], vec![1.0, 2.0]]);
        assert_eq!(b.rank(&m), 2);
        assert_eq!(b.rank(&Matrix::<f64>::zeros(3, 3)), 0);
    }

    #[test]
    fn float_kernel_small_residual() {
        let b = FloatBackend::default();
        let m = Matrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let k = b.kernel_basis(&m);
        assert_eq!(k.cols(), 1);
        let prod = m.mul(&k).unwrap();
        for i in 0..prod.rows() {
            assert!(f64::abs(*prod.at(i, 0)) < 1e-12);
        }
    }

    #[test]
    fn span_union_dimensions() {
        let b = ExactBackend;
        let e1 = int_matrix(vec![vec![1], vec![0]]);
        let e2 = int_matrix(vec![vec![0], vec![1]]);
        assert_eq!(dim_span_union(&b, &e1, &e2).unwrap(), 2);
        assert_eq!(dim_span_union(&b, &e1, &e1).unwrap(), 1);
        let mismatch = int_matrix(vec![vec![1]]);
        assert!(dim_span_union(&b, &e1, &mismatch).is_err());
    }

    #[test]
    fn tolerances_validated() {
        assert!(FloatBackend::new(0.0, 1e-9).is_err());
        assert!(FloatBackend::new(1e-10, -1.0).is_err());
        assert!(ScalarBackend::Float {
            rank_tol: 1e-10,
            membership_tol: 1e-9
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn rank_equals_transpose_rank() {
        let b = ExactBackend;
        let m = int_matrix(vec![vec![1, 0, 2], vec![0, 0, 0], vec![3, 0, 6]]);
        assert_eq!(b.rank(&m), b.rank(&m.transpose()));
    }
}
