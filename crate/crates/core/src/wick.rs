//! Symmetric kernels and Wick polynomials.
//!
//! A symmetric kernel of degree `n` is kept in polarized form, as a weighted
//! list of tensor powers `sum_i a_i phi_i^{(x)n}`. Evaluating the Wick
//! polynomial of a power reduces to a scalar Hermite call,
//!
//! ```text
//! :<phi^{(x)n}, w^{(x)n}>: = ||phi||_A^n H_n(<phi, w> / ||phi||_A),
//! ```
//!
//! so no dense tensor is ever formed on the main path. The [`dense`] submodule
//! holds a small brute-force representation used to check the polarized path
//! against the recursive definition of `:w^{(x)n}:`.

use crate::error::{Error, Result};
use crate::hermite::{falling_ratio, hermite_prob};
use crate::seqspace::{inner_a, inner_l2, norm_a, CovOp, SeqVec, TruncationDims};

pub mod dense;

pub use dense::{symmetrize_dense, wick_closed_form_dense, wick_eval_dense, DenseTensor};

/// Largest degree accepted by [`polarize`] (it produces `2^n` terms).
pub const MAX_POLARIZE_DEGREE: usize = 16;

/// `coeff * base^{(x)degree}`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOnePower {
    pub coeff: f64,
    pub base: SeqVec,
    pub degree: usize,
}

/// Degree-`n` symmetric tensor as a sum of rank-one powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SymKernel {
    degree: usize,
    dims: TruncationDims,
    terms: Vec<RankOnePower>,
}

impl SymKernel {
    pub fn zero(degree: usize, dims: TruncationDims) -> Self {
        Self {
            degree,
            dims,
            terms: Vec::new(),
        }
    }

    /// Degree-0 kernel holding the constant `c`.
    pub fn constant(c: f64, dims: TruncationDims) -> Self {
        Self {
            degree: 0,
            dims,
            terms: vec![RankOnePower {
                coeff: c,
                base: SeqVec::zeros(dims),
                degree: 0,
            }],
        }
    }

    /// `coeff * base^{(x)degree}`.
    pub fn power(coeff: f64, base: SeqVec, degree: usize) -> Self {
        let dims = base.dims();
        Self {
            degree,
            dims,
            terms: vec![RankOnePower {
                coeff,
                base,
                degree,
            }],
        }
    }

    pub fn from_terms(degree: usize, dims: TruncationDims, terms: Vec<RankOnePower>) -> Result<Self> {
        let mut k = Self::zero(degree, dims);
        for t in terms {
            k.push(t)?;
        }
        Ok(k)
    }

    pub fn push(&mut self, term: RankOnePower) -> Result<()> {
        if term.degree != self.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: term.degree,
            });
        }
        if term.base.dims() != self.dims {
            return Err(Error::dims("SymKernel::push", self.dims, term.base.dims()));
        }
        self.terms.push(term);
        Ok(())
    }

    /// Concatenates the terms of `other` into `self`.
    pub fn extend(&mut self, other: &SymKernel) -> Result<()> {
        for t in &other.terms {
            self.push(t.clone())?;
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> SymKernel {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    /// Applies `map` to every base vector, keeping coefficients.
    pub fn map_bases(&self, mut map: impl FnMut(&SeqVec) -> Result<SeqVec>) -> Result<SymKernel> {
        let mut out = SymKernel::zero(self.degree, self.dims);
        for t in &self.terms {
            out.push(RankOnePower {
                coeff: t.coeff,
                base: map(&t.base)?,
                degree: t.degree,
            })?;
        }
        Ok(out)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dims(&self) -> TruncationDims {
        self.dims
    }

    pub fn terms(&self) -> &[RankOnePower] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Polarized form of the symmetric product `x_1 (x)^ ... (x)^ x_n`:
///
/// ```text
/// 1/(2^n n!) sum_{s in {+1,-1}^n} s_1...s_n (s_1 x_1 + ... + s_n x_n)^{(x)n}
/// ```
pub fn polarize(xs: &[SeqVec]) -> Result<SymKernel> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyInput("polarize"));
    }
    if n > MAX_POLARIZE_DEGREE {
        return Err(Error::SizeLimit {
            op: "polarize",
            detail: format!("degree {n} > {MAX_POLARIZE_DEGREE}"),
        });
    }
    let dims = xs[0].dims();
    if let Some(bad) = xs.iter().find(|x| x.dims() != dims) {
        return Err(Error::dims("polarize", dims, bad.dims()));
    }
    let norm = 1.0 / (2f64.powi(n as i32) * factorial(n));
    let mut kernel = SymKernel::zero(n, dims);
    for mask in 0u32..(1 << n) {
        let mut base = SeqVec::zeros(dims);
        let mut sign = 1.0;
        for (i, x) in xs.iter().enumerate() {
            if mask & (1 << i) != 0 {
                base = &base - x;
                sign = -sign;
            } else {
                base = &base + x;
            }
        }
        kernel.push(RankOnePower {
            coeff: sign * norm,
            base,
            degree: n,
        })?;
    }
    Ok(kernel)
}

/// `:<phi^{(x)n}, W^{(x)n}>:` for a single power with coefficient one.
pub fn wick_power(phi: &SeqVec, n: usize, a: &CovOp, w: &SeqVec) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let norm = norm_a(phi, a)?;
    let t = inner_l2(phi, w)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok(norm.powi(n as i32) * hermite_prob(n, t / norm))
}

/// Wick polynomial `:<k, W^{(x)n}>:` of a polarized kernel.
pub fn wick_eval(k: &SymKernel, a: &CovOp, w: &SeqVec) -> Result<f64> {
    if w.dims() != k.dims {
        return Err(Error::dims("wick_eval", k.dims, w.dims()));
    }
    if a.dim() != k.dims.d {
        return Err(Error::dims("wick_eval", k.dims.d, a.dim()));
    }
    let mut total = 0.0;
    for term in &k.terms {
        total += term.coeff * wick_power(&term.base, term.degree, a, w)?;
    }
    Ok(total)
}

/// Plain monomial `<k, W^{(x)n}> = sum_i a_i <phi_i, W>^n`.
pub fn monomial_eval(k: &SymKernel, w: &SeqVec) -> Result<f64> {
    if w.dims() != k.dims {
        return Err(Error::dims("monomial_eval", k.dims, w.dims()));
    }
    let mut total = 0.0;
    for term in &k.terms {
        total += term.coeff * inner_l2(&term.base, w)?.powi(term.degree as i32);
    }
    Ok(total)
}

/// Coefficients of `:w^{(x)n}: = sum_k c_k tau^k (x) w^{(x)(n-2k)}`, for
/// `k = 0..=n/2`: `c_k = (-1)^k n! / (2^k k! (n-2k)!)`.
pub fn wick_to_monomial_coefficients(n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * falling_ratio(n, k)
        })
        .collect()
}

/// Coefficients of `w^{(x)n} = sum_k c_k tau^k (x) :w^{(x)(n-2k)}:`, for
/// `k = 0..=n/2`: `c_k = n! / (2^k k! (n-2k)!)`.
pub fn monomial_to_wick_coefficients(n: usize) -> Vec<f64> {
    (0..=n / 2).map(|k| falling_ratio(n, k)).collect()
}

/// Reconstructs `<phi, W>^n` from Wick polynomials of lower order:
/// `sum_k c_k ||phi||_A^{2k} :<phi^{(x)(n-2k)}, W^{(x)(n-2k)}>:`.
pub fn monomial_from_wick(phi: &SeqVec, n: usize, a: &CovOp, w: &SeqVec) -> Result<f64> {
    let tau = inner_a(phi, phi, a)?;
    let mut total = 0.0;
    for (k, c) in monomial_to_wick_coefficients(n).into_iter().enumerate() {
        total += c * tau.powi(k as i32) * wick_power(phi, n - 2 * k, a, w)?;
    }
    Ok(total)
}

/// Inner product of `l^2_A(H)^{(x)n}`: `sum_ij a_i b_j (phi_i, psi_j)_A^n`.
pub fn kernel_inner_a(k1: &SymKernel, k2: &SymKernel, a: &CovOp) -> Result<f64> {
    if k1.degree != k2.degree {
        return Err(Error::DegreeMismatch {
            left: k1.degree,
            right: k2.degree,
        });
    }
    if k1.dims != k2.dims {
        return Err(Error::dims("kernel_inner_a", k1.dims, k2.dims));
    }
    let n = k1.degree as i32;
    let mut total = 0.0;
    for t1 in &k1.terms {
        for t2 in &k2.terms {
            let ip = if n == 0 {
                1.0
            } else {
                inner_a(&t1.base, &t2.base, a)?.powi(n)
            };
            total += t1.coeff * t2.coeff * ip;
        }
    }
    Ok(total)
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
