//! Sequence-space linear algebra at finite truncation.
//!
//! A Hilbert space `H` is represented by `R^m` in a fixed orthonormal basis and
//! the scalar sequence space `l^2(R)` by `R^d`. An element `f = (f_1, ..., f_d)`
//! of the truncated `l^2(H)` is stored as an `m x d` matrix whose `k`-th column
//! is `f_k`. With that layout:
//!
//! * `h . x` (the *bullet* map) is the outer product `h x^T`,
//! * `[f, x]` (the *bracket* map) is the matrix-vector product `F x`,
//! * the inner product of `l^2(H)` is the Frobenius inner product,
//! * a bounded operator `T` on `l^2(R)` acts on `l^2(H)` as `F -> F T^T`.
//!
//! The covariance operator [`CovOp`] adds the weighted inner product
//! `(f, g)_A = (f, A g)`, and from it the A-orthogonal machinery: Gram-Schmidt,
//! projections onto coordinate blocks, and the positive-semidefinite helpers.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative symmetry tolerance used when accepting a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Default relative drop tolerance for [`gram_schmidt_a`].
pub const GRAM_SCHMIDT_TOL: f64 = 1e-12;

/// Truncation dimensions: `m` for the Hilbert space, `d` for the sequence index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncationDims {
    pub m: usize,
    pub d: usize,
}

impl TruncationDims {
    pub fn new(m: usize, d: usize) -> Result<Self> {
        if m == 0 || d == 0 {
            return Err(Error::InvalidDims("TruncationDims::new"));
        }
        Ok(Self { m, d })
    }

    /// Number of real coordinates, `m * d`.
    pub fn len(&self) -> usize {
        self.m * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for TruncationDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.d)
    }
}

/// An element of the truncated Hilbert space `H = R^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct HVec(DVector<f64>);

impl HVec {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(entries))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidDims("HVec"));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput("HVec"));
        }
        Ok(Self(v))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn dot(&self, other: &HVec) -> f64 {
        self.0.dot(&other.0)
    }
}

/// An element of the truncated sequence space `l^2(H)`, stored as an `m x d`
/// matrix whose column `k` is the `k`-th sequence entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqVec {
    mat: DMatrix<f64>,
}

impl SeqVec {
    pub fn zeros(dims: TruncationDims) -> Self {
        Self {
            mat: DMatrix::zeros(dims.m, dims.d),
        }
    }

    pub fn from_matrix(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() == 0 || mat.ncols() == 0 {
            return Err(Error::InvalidDims("SeqVec"));
        }
        if mat.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput("SeqVec"));
        }
        Ok(Self { mat })
    }

    /// Builds from `m` rows of length `d` (row-major nesting).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(Self::from_matrix(matrix_from_rows(rows, "SeqVec")?)?)
    }

    /// The matrix unit with a one at Hilbert coordinate `r`, sequence index `k`.
    pub fn unit(dims: TruncationDims, r: usize, k: usize) -> Self {
        let mut out = Self::zeros(dims);
        out.mat[(r, k)] = 1.0;
        out
    }

    pub(crate) fn from_matrix_unchecked(mat: DMatrix<f64>) -> Self {
        Self { mat }
    }

    pub fn dims(&self) -> TruncationDims {
        TruncationDims {
            m: self.mat.nrows(),
            d: self.mat.ncols(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mat
    }

    /// The sequence entry `f_k` (0-based).
    pub fn column(&self, k: usize) -> HVec {
        HVec(self.mat.column(k).into_owned())
    }

    /// Norm in `l^2(H)`.
    pub fn norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn is_zero(&self) -> bool {
        self.mat.iter().all(|&x| x == 0.0)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.mat
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Entries flattened row-major.
    pub fn flat_row_major(&self) -> Vec<f64> {
        self.mat.transpose().iter().copied().collect()
    }

    fn check_same(&self, other: &SeqVec, op: &'static str) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(op, self.dims(), other.dims()));
        }
        Ok(())
    }
}

// The arithmetic operators panic on mismatched dimensions, matching nalgebra.
impl Add for &SeqVec {
    type Output = SeqVec;
    fn add(self, rhs: &SeqVec) -> SeqVec {
        SeqVec::from_matrix_unchecked(&self.mat + &rhs.mat)
    }
}

impl Sub for &SeqVec {
    type Output = SeqVec;
    fn sub(self, rhs: &SeqVec) -> SeqVec {
        SeqVec::from_matrix_unchecked(&self.mat - &rhs.mat)
    }
}

impl Neg for &SeqVec {
    type Output = SeqVec;
    fn neg(self) -> SeqVec {
        SeqVec::from_matrix_unchecked(-&self.mat)
    }
}

impl Mul<f64> for &SeqVec {
    type Output = SeqVec;
    fn mul(self, rhs: f64) -> SeqVec {
        SeqVec::from_matrix_unchecked(&self.mat * rhs)
    }
}

/// Symmetric positive-definite covariance matrix `A` with its Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CovOp {
    matrix: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl CovOp {
    /// Validates symmetry (relative to the largest entry) and factors
    /// `A = L L^T`. No regularization is attempted.
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        check_square(&matrix, "CovOp::new")?;
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput("CovOp::new"));
        }
        check_symmetric(&matrix, SYMMETRY_TOL)?;
        let chol = Cholesky::new(matrix.clone())
            .ok_or(Error::NotPositiveDefinite)?
            .l();
        if chol.diagonal().iter().any(|&p| !(p > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { matrix, chol })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows, "CovOp")?)
    }

    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDims("CovOp::identity"));
        }
        Ok(Self {
            matrix: DMatrix::identity(d, d),
            chol: DMatrix::identity(d, d),
        })
    }

    /// Diagonal covariance; the factor is formed directly so that large `d`
    /// stays cheap.
    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidDims("CovOp::diagonal"));
        }
        if diag.iter().any(|&v| !v.is_finite()) {
            return Err(Error::NonFiniteInput("CovOp::diagonal"));
        }
        if diag.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        let v = DVector::from_column_slice(diag);
        Ok(Self {
            matrix: DMatrix::from_diagonal(&v),
            chol: DMatrix::from_diagonal(&v.map(f64::sqrt)),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Lower-triangular `L` with `A = L L^T`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `A x` for `x` in `R^d`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.dim() {
            return Err(Error::dims("CovOp::apply", self.dim(), x.len()));
        }
        Ok(&self.matrix * x)
    }

    /// `(x, y)_A = x^T A y` on `R^d`.
    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&self.apply(y)?))
    }

    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }
}

/// `h . x`: the sequence whose `k`-th entry is `x_k h`.
pub fn bullet(h: &HVec, x: &DVector<f64>) -> Result<SeqVec> {
    if x.is_empty() {
        return Err(Error::dims("bullet", "d >= 1", 0));
    }
    SeqVec::from_matrix(h.as_vector() * x.transpose())
}

/// `[f, x] = sum_k x_k f_k`.
pub fn bracket(f: &SeqVec, x: &DVector<f64>) -> Result<HVec> {
    if f.dims().d != x.len() {
        return Err(Error::dims("bracket", f.dims().d, x.len()));
    }
    Ok(HVec(f.matrix() * x))
}

/// Inner product of `l^2(H)`: `sum_k (f_k, g_k)_H`.
pub fn inner_l2(f: &SeqVec, g: &SeqVec) -> Result<f64> {
    f.check_same(g, "inner_l2")?;
    Ok(f.matrix().dot(g.matrix()))
}

/// `(f, g)_A = (f, A g)`, i.e. `trace(F^T G A)`.
pub fn inner_a(f: &SeqVec, g: &SeqVec, a: &CovOp) -> Result<f64> {
    f.check_same(g, "inner_a")?;
    let ag = apply_extended(a, g)?;
    Ok(f.matrix().dot(ag.matrix()))
}

/// `||f||_A`.
pub fn norm_a(f: &SeqVec, a: &CovOp) -> Result<f64> {
    Ok(inner_a(f, f, a)?.max(0.0).sqrt())
}

/// Extension of `A` from `l^2(R)` to `l^2(H)`: `F -> F A`.
pub fn apply_extended(a: &CovOp, f: &SeqVec) -> Result<SeqVec> {
    if f.dims().d != a.dim() {
        return Err(Error::dims("apply_extended", a.dim(), f.dims().d));
    }
    Ok(SeqVec::from_matrix_unchecked(f.matrix() * a.matrix()))
}

/// Extension of an arbitrary `d x d` operator `T`: `F -> F T^T`, so that
/// `T(h . x) = h . (T x)`.
pub fn apply_operator(t: &DMatrix<f64>, f: &SeqVec) -> Result<SeqVec> {
    if t.nrows() != f.dims().d || t.ncols() != f.dims().d {
        return Err(Error::dims(
            "apply_operator",
            format!("{0}x{0}", f.dims().d),
            format!("{}x{}", t.nrows(), t.ncols()),
        ));
    }
    Ok(SeqVec::from_matrix_unchecked(f.matrix() * t.transpose()))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
///
/// A candidate whose residual norm falls to `tol` times its own norm or below
/// is dropped. Returns `None` for the empty result.
pub(crate) fn orthonormalize<T>(
    items: &[T],
    inner: impl Fn(&T, &T) -> f64,
    axpy: impl Fn(&T, f64, &T) -> T,
    scale: impl Fn(&T, f64) -> T,
    tol: f64,
) -> Vec<T> {
    let mut basis: Vec<T> = Vec::with_capacity(items.len());
    for item in items {
        let input_norm = inner(item, item).max(0.0).sqrt();
        let mut v = scale(item, 1.0);
        for _pass in 0..2 {
            for b in &basis {
                let c = inner(&v, b);
                v = axpy(&v, -c, b);
            }
        }
        let norm = inner(&v, &v).max(0.0).sqrt();
        if norm <= tol * input_norm || norm == 0.0 {
            continue;
        }
        basis.push(scale(&v, 1.0 / norm));
    }
    basis
}

/// A-orthonormalizes `xs`, preserving order and the spanned subspace.
/// Near-dependent vectors are dropped.
pub fn gram_schmidt_a(xs: &[DVector<f64>], a: &CovOp, tol: f64) -> Result<Vec<DVector<f64>>> {
    if xs.is_empty() {
        return Err(Error::EmptyInput("gram_schmidt_a"));
    }
    for x in xs {
        if x.len() != a.dim() {
            return Err(Error::dims("gram_schmidt_a", a.dim(), x.len()));
        }
    }
    let am = a.matrix();
    let basis = orthonormalize(
        xs,
        |u, v| u.dot(&(am * v)),
        |u, c, v| u + v * c,
        |u, s| u * s,
        tol,
    );
    if basis.is_empty() {
        return Err(Error::DegenerateSpan("gram_schmidt_a"));
    }
    Ok(basis)
}

/// Matrix of the A-orthogonal projection onto the span of an A-orthonormal
/// list: `P = sum_k x_k x_k^T A`.
pub fn projection_matrix(basis: &[DVector<f64>], a: &CovOp) -> Result<DMatrix<f64>> {
    let d = a.dim();
    let mut p = DMatrix::zeros(d, d);
    for x in basis {
        let ax = a.apply(x)?;
        p += x * ax.transpose();
    }
    Ok(p)
}

/// A-orthogonal projection onto `span{e_1, ..., e_N}` in block form.
///
/// `p = [[Id, A_CC^{-1} A_CF], [0, 0]]` and `pt = p^T = [[Id, 0], [A_FC A_CC^{-1}, 0]]`,
/// where `C` holds the first `cut` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionBlocks {
    pub cut: usize,
    pub p: DMatrix<f64>,
    pub pt: DMatrix<f64>,
}

impl ProjectionBlocks {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.p * x
    }

    /// `P` extended to `l^2(H)`.
    pub fn apply_seq(&self, f: &SeqVec) -> Result<SeqVec> {
        apply_operator(&self.p, f)
    }

    /// `P^T` extended to `l^2(H)`.
    pub fn apply_transpose_seq(&self, f: &SeqVec) -> Result<SeqVec> {
        apply_operator(&self.pt, f)
    }
}

pub fn block_projection(a: &CovOp, cut: usize) -> Result<ProjectionBlocks> {
    let d = a.dim();
    if cut == 0 || cut >= d {
        return Err(Error::InvalidArgument(format!(
            "block_projection: cut {cut} outside 1..{d}"
        )));
    }
    let am = a.matrix();
    let acc = am.view((0, 0), (cut, cut)).into_owned();
    let acf = am.view((0, cut), (cut, d - cut)).into_owned();
    let chol = Cholesky::new(acc).ok_or(Error::SingularBlock("block_projection"))?;
    let upper_right = chol.solve(&acf);

    let mut p = DMatrix::zeros(d, d);
    p.view_mut((0, 0), (cut, cut)).fill_with_identity();
    p.view_mut((0, cut), (cut, d - cut)).copy_from(&upper_right);
    let pt = p.transpose();
    Ok(ProjectionBlocks { cut, p, pt })
}

/// Positive-semidefiniteness test: smallest eigenvalue `>= -tol * ||M||_2`.
pub fn psd_check(m: &DMatrix<f64>, tol: f64) -> Result<bool> {
    check_square(m, "psd_check")?;
    check_symmetric(m, tol)?;
    if m.is_empty() {
        return Ok(true);
    }
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let spectral = eig.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(min >= -tol * spectral)
}

/// Entrywise (Schur) product.
pub fn hadamard(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m1.shape() != m2.shape() {
        return Err(Error::dims(
            "hadamard",
            format!("{:?}", m1.shape()),
            format!("{:?}", m2.shape()),
        ));
    }
    Ok(m1.component_mul(m2))
}

/// Entrywise exponential summed as the series `sum_k M^{(k)} / k!` of
/// Hadamard powers, so that each partial sum is a positive combination of
/// Schur products.
pub fn hadamard_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sum = DMatrix::from_element(m.nrows(), m.ncols(), 1.0);
    let mut term = sum.clone();
    for k in 1..=500 {
        term = term.component_mul(m) / k as f64;
        sum += &term;
        let tmax = term.amax();
        if tmax <= f64::EPSILON * 1e-2 * sum.amax() {
            break;
        }
    }
    sum
}

/// Largest singular value of a linear map on `R^n` by power iteration on
/// `T^T T`, where `adjoint` applies `T^T`.
pub fn power_iteration_norm(
    apply: impl Fn(&DVector<f64>) -> DVector<f64>,
    adjoint: impl Fn(&DVector<f64>) -> DVector<f64>,
    start: DVector<f64>,
    max_iter: usize,
) -> f64 {
    let mut v = &start / start.norm();
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = adjoint(&apply(&v));
        let lambda = v.dot(&w);
        let n = w.norm();
        if n == 0.0 {
            return 0.0;
        }
        v = w / n;
        let converged = (lambda - estimate).abs() <= 1e-15 * lambda.abs();
        estimate = lambda;
        if converged {
            break;
        }
    }
    estimate.max(0.0).sqrt()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::EmptyInput(what));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::EmptyInput(what));
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dims(what, ncols, bad.len()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn check_square(m: &DMatrix<f64>, op: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            op,
            "square matrix",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> Result<()> {
    let scale = m.amax();
    let allowed = rel_tol * scale;
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > allowed {
        return Err(Error::NotSymmetric {
            asymmetry: worst,
            allowed,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn example_cov() -> CovOp {
        CovOp::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    #[test]
    fn bullet_is_outer_product() {
        let h = HVec::new(vec![1.0, 2.0]).unwrap();
        let f = bullet(&h, &dvector![3.0, 0.0, 4.0]).unwrap();
        assert_eq!(f.to_rows(), vec![vec![3.0, 0.0, 4.0], vec![6.0, 0.0, 8.0]]);

        let zero = bullet(&HVec::new(vec![0.0, 0.0]).unwrap(), &dvector![3.0, 0.0, 4.0]).unwrap();
        assert!(zero.is_zero());
    }

    #[test]
    fn bracket_of_bullet_scales_h() {
        let h = HVec::new(vec![1.0, 2.0]).unwrap();
        let x = dvector![3.0, 0.0, 4.0];
        let f = bullet(&h, &x).unwrap();
        let b = bracket(&f, &x).unwrap();
        assert_eq!(b.as_vector(), &dvector![25.0, 50.0]);
        let e1 = dvector![0.0, 1.0, 0.0];
        assert_eq!(bracket(&f, &e1).unwrap(), f.column(1));
    }

    #[test]
    fn bracket_rejects_wrong_length() {
        let f = SeqVec::zeros(TruncationDims::new(2, 3).unwrap());
        assert!(matches!(
            bracket(&f, &dvector![1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn inner_a_example_and_identity() {
        let a = CovOp::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let dims = TruncationDims::new(1, 2).unwrap();
        let e1 = SeqVec::unit(dims, 0, 0);
        let e2 = SeqVec::unit(dims, 0, 1);
        assert_eq!(inner_a(&e1, &e2, &a).unwrap(), 0.5);

        let id = CovOp::identity(2).unwrap();
        let f = SeqVec::from_rows(&[vec![1.0, -2.0]]).unwrap();
        let g = SeqVec::from_rows(&[vec![0.5, 3.0]]).unwrap();
        assert_eq!(inner_a(&f, &g, &id).unwrap(), inner_l2(&f, &g).unwrap());
    }

    #[test]
    fn inner_l2_definite() {
        let dims = TruncationDims::new(2, 2).unwrap();
        assert_eq!(inner_l2(&SeqVec::zeros(dims), &SeqVec::zeros(dims)).unwrap(), 0.0);
        let u = SeqVec::unit(dims, 1, 0);
        assert!(inner_l2(&u, &u).unwrap() > 0.0);
    }

    #[test]
    fn apply_extended_diagonal_scales_columns() {
        let a = CovOp::diagonal(&[1.0, 0.25, 1.0 / 9.0]).unwrap();
        let f = SeqVec::from_rows(&[vec![1.0, 1.0, 1.0], vec![2.0, 2.0, 2.0]]).unwrap();
        let g = apply_extended(&a, &f).unwrap();
        for k in 0..3 {
            let s = 1.0 / ((k + 1) * (k + 1)) as f64;
            assert!((g.matrix()[(0, k)] - s).abs() < 1e-15);
            assert!((g.matrix()[(1, k)] - 2.0 * s).abs() < 1e-15);
        }
        let id = CovOp::identity(3).unwrap();
        assert_eq!(apply_extended(&id, &f).unwrap(), f);
    }

    #[test]
    fn covop_rejects_bad_input() {
        assert!(matches!(
            CovOp::from_rows(&[vec![1.0, 0.5], vec![0.4, 1.0]]),
            Err(Error::NotSymmetric { .. })
        ));
        assert!(matches!(
            CovOp::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::NotPositiveDefinite)
        ));
        assert!(matches!(
            CovOp::from_rows(&[vec![0.0, 0.0], vec![0.0, 0.0]]),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn gram_schmidt_example() {
        let a = CovOp::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let out = gram_schmidt_a(&[dvector![1.0, 0.0], dvector![0.0, 1.0]], &a, GRAM_SCHMIDT_TOL)
            .unwrap();
        assert_eq!(out.len(), 2);
        assert!((&out[0] - dvector![1.0, 0.0]).amax() < 1e-15);
        let s = (4.0_f64 / 3.0).sqrt();
        let expected = dvector![-0.5 * s, s];
        assert!((&out[1] - expected).amax() < 1e-12);
    }

    #[test]
    fn gram_schmidt_drops_dependent() {
        let a = example_cov();
        let x = dvector![1.0, 2.0, -1.0];
        let out = gram_schmidt_a(&[x.clone(), &x * 2.0], &a, GRAM_SCHMIDT_TOL).unwrap();
        assert_eq!(out.len(), 1);
        let expected = &x / a.norm(&x).unwrap();
        assert!((&out[0] - expected).amax() < 1e-14);

        let id = CovOp::identity(3).unwrap();
        let e = vec![dvector![0.0, 1.0, 0.0], dvector![1.0, 0.0, 0.0]];
        assert_eq!(gram_schmidt_a(&e, &id, GRAM_SCHMIDT_TOL).unwrap(), e);
    }

    #[test]
    fn gram_schmidt_all_zero_fails() {
        let a = example_cov();
        let z = DVector::zeros(3);
        assert!(matches!(
            gram_schmidt_a(&[z.clone(), z], &a, GRAM_SCHMIDT_TOL),
            Err(Error::DegenerateSpan(_))
        ));
        assert!(matches!(
            gram_schmidt_a(&[], &a, GRAM_SCHMIDT_TOL),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn block_projection_example() {
        let a = example_cov();
        let blocks = block_projection(&a, 1).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((&blocks.p - &expected).amax() < 1e-15);
        assert!((&blocks.p * &blocks.p - &blocks.p).amax() < 1e-10);
        assert!((a.matrix() * &blocks.p - &blocks.pt * a.matrix()).amax() < 1e-10);
    }

    #[test]
    fn block_projection_identity_and_range() {
        let id = CovOp::identity(4).unwrap();
        let blocks = block_projection(&id, 2).unwrap();
        let expected = DMatrix::from_diagonal(&dvector![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(blocks.p, expected);

        let a = example_cov();
        let blocks = block_projection(&a, 2).unwrap();
        for k in 0..2 {
            let mut e = DVector::zeros(3);
            e[k] = 1.0;
            assert!((blocks.apply(&e) - &e).amax() < 1e-15);
        }
        assert!(block_projection(&a, 0).is_err());
        assert!(block_projection(&a, 3).is_err());
    }

    #[test]
    fn psd_examples() {
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        assert!(psd_check(&ok, 1e-9).unwrap());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(!psd_check(&bad, 1e-9).unwrap());
        assert!(psd_check(&DMatrix::zeros(3, 3), 1e-9).unwrap());
        let nonsym = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(psd_check(&nonsym, 1e-9), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn hadamard_with_ones_and_exp() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]);
        let ones = DMatrix::from_element(2, 2, 1.0);
        assert_eq!(hadamard(&m, &ones).unwrap(), m);
        assert!(hadamard(&m, &DMatrix::zeros(3, 3)).is_err());

        let e = hadamard_exp(&m);
        let direct = m.map(f64::exp);
        assert!(((&e - &direct).amax() / direct.amax()) < 1e-14);
        assert!(psd_check(&e, 1e-9).unwrap());
    }
}
