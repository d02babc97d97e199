//! Seeded random instances for the verification suites and tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::seqspace::{CovOp, HVec, SeqVec, TruncationDims};

/// Independent generator for `(seed, stream)`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn random_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

pub fn random_hvec(rng: &mut impl Rng, m: usize) -> HVec {
    HVec::from_vector(random_vector(rng, m)).expect("finite normals")
}

pub fn random_seqvec(rng: &mut impl Rng, dims: TruncationDims) -> SeqVec {
    SeqVec::from_matrix(DMatrix::from_fn(dims.m, dims.d, |_, _| normal(rng))).expect("finite normals")
}

/// Random `d x d` matrix with standard normal entries.
pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Well-conditioned random covariance `B B^T / d + 0.25 I`, symmetrized.
pub fn random_spd(rng: &mut impl Rng, d: usize) -> CovOp {
    let b = random_matrix(rng, d, d);
    let mut m = &b * b.transpose() / d as f64 + DMatrix::identity(d, d) * 0.25;
    m = (&m + m.transpose()) * 0.5;
    CovOp::new(m).expect("random SPD matrix")
}

/// Gram matrix `V V^T` of `n` random vectors in `R^rank`.
pub fn random_gram(rng: &mut impl Rng, n: usize, rank: usize) -> DMatrix<f64> {
    let v = random_matrix(rng, n, rank);
    let g = &v * v.transpose();
    (&g + g.transpose()) * 0.5
}

/// Random orthogonal matrix (Q factor of a Gaussian matrix).
pub fn random_orthogonal(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    random_matrix(rng, d, d).qr().q()
}
