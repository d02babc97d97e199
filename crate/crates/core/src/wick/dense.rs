//! Brute-force dense tensors over the coordinates of a truncated `l^2(H)`.
//!
//! Only for small instances (degree at most 4, `m * d` at most 6). The
//! coordinate of a `SeqVec` entry `(r, k)` is `r * d + k`; a multi-index
//! `(i_1, ..., i_n)` is flattened with `i_1` most significant.

use crate::error::{Error, Result};
use crate::seqspace::{CovOp, SeqVec, TruncationDims};

use super::{wick_to_monomial_coefficients, RankOnePower, SymKernel};

pub const MAX_DENSE_DEGREE: usize = 4;
pub const MAX_DENSE_COORDS: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    degree: usize,
    dims: TruncationDims,
    data: Vec<f64>,
}

fn check_limits(op: &'static str, degree: usize, dims: TruncationDims) -> Result<()> {
    if degree > MAX_DENSE_DEGREE || dims.len() > MAX_DENSE_COORDS {
        return Err(Error::SizeLimit {
            op,
            detail: format!(
                "degree {degree} (max {MAX_DENSE_DEGREE}), m*d = {} (max {MAX_DENSE_COORDS})",
                dims.len()
            ),
        });
    }
    Ok(())
}

fn coords(v: &SeqVec) -> Vec<f64> {
    v.flat_row_major()
}

impl DenseTensor {
    pub fn zeros(degree: usize, dims: TruncationDims) -> Result<Self> {
        check_limits("DenseTensor::zeros", degree, dims)?;
        Ok(Self {
            degree,
            dims,
            data: vec![0.0; dims.len().pow(degree as u32)],
        })
    }

    /// `x_1 (x) ... (x) x_n` (unsymmetrized).
    pub fn from_factors(xs: &[SeqVec]) -> Result<Self> {
        let Some(first) = xs.first() else {
            return Err(Error::EmptyInput("DenseTensor::from_factors"));
        };
        let dims = first.dims();
        if let Some(bad) = xs.iter().find(|x| x.dims() != dims) {
            return Err(Error::dims("DenseTensor::from_factors", dims, bad.dims()));
        }
        check_limits("DenseTensor::from_factors", xs.len(), dims)?;
        let mut out = Self::scalar(1.0, dims);
        for x in xs {
            out = out.tensor(&Self::vector(x))?;
        }
        Ok(out)
    }

    /// Dense expansion of a polarized kernel.
    pub fn from_kernel(k: &SymKernel) -> Result<Self> {
        let mut out = Self::zeros(k.degree(), k.dims())?;
        for RankOnePower { coeff, base, degree } in k.terms() {
            let mut p = Self::scalar(*coeff, k.dims());
            let v = Self::vector(base);
            for _ in 0..*degree {
                p = p.tensor(&v)?;
            }
            out.add_assign(&p);
        }
        Ok(out)
    }

    fn scalar(c: f64, dims: TruncationDims) -> Self {
        Self {
            degree: 0,
            dims,
            data: vec![c],
        }
    }

    fn vector(x: &SeqVec) -> Self {
        Self {
            degree: 1,
            dims: x.dims(),
            data: coords(x),
        }
    }

    /// Metric tensor of `(.,.)_A` on coordinates: `delta_rs A_kl`.
    pub fn tau(a: &CovOp, dims: TruncationDims) -> Result<Self> {
        if a.dim() != dims.d {
            return Err(Error::dims("DenseTensor::tau", dims.d, a.dim()));
        }
        let mut t = Self::zeros(2, dims)?;
        let n = dims.len();
        for r in 0..dims.m {
            for k in 0..dims.d {
                for l in 0..dims.d {
                    t.data[(r * dims.d + k) * n + r * dims.d + l] = a.matrix()[(k, l)];
                }
            }
        }
        Ok(t)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dims(&self) -> TruncationDims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn from_data(degree: usize, dims: TruncationDims, data: Vec<f64>) -> Result<Self> {
        check_limits("DenseTensor::from_data", degree, dims)?;
        let expected = dims.len().pow(degree as u32);
        if data.len() != expected {
            return Err(Error::dims("DenseTensor::from_data", expected, data.len()));
        }
        Ok(Self { degree, dims, data })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat(idx)]
    }

    fn flat(&self, idx: &[usize]) -> usize {
        let n = self.dims.len();
        idx.iter().fold(0, |acc, &i| acc * n + i)
    }

    fn unflat(&self, mut lin: usize, out: &mut [usize]) {
        let n = self.dims.len();
        for slot in out.iter_mut().rev() {
            *slot = lin % n;
            lin /= n;
        }
    }

    pub fn tensor(&self, other: &DenseTensor) -> Result<DenseTensor> {
        if self.dims != other.dims {
            return Err(Error::dims("DenseTensor::tensor", self.dims, other.dims));
        }
        check_limits("DenseTensor::tensor", self.degree + other.degree, self.dims)?;
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &a in &self.data {
            data.extend(other.data.iter().map(|&b| a * b));
        }
        Ok(DenseTensor {
            degree: self.degree + other.degree,
            dims: self.dims,
            data,
        })
    }

    /// `out[i_1..i_n] = self[i_{perm[0]}, ..., i_{perm[n-1]}]`.
    pub fn permuted(&self, perm: &[usize]) -> DenseTensor {
        let n = self.degree;
        let mut out = self.clone();
        let mut idx = vec![0; n];
        let mut src = vec![0; n];
        for lin in 0..self.data.len() {
            self.unflat(lin, &mut idx);
            for (s, &p) in src.iter_mut().zip(perm) {
                *s = idx[p];
            }
            out.data[lin] = self.data[self.flat(&src)];
        }
        out
    }

    /// Full contraction `sum_i self_i other_i`.
    pub fn pair(&self, other: &DenseTensor) -> Result<f64> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                left: self.degree,
                right: other.degree,
            });
        }
        if self.dims != other.dims {
            return Err(Error::dims("DenseTensor::pair", self.dims, other.dims));
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn add_assign(&mut self, other: &DenseTensor) {
        assert_eq!(self.data.len(), other.data.len(), "tensor shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn max_abs_diff(&self, other: &DenseTensor) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }

    /// Contracts every mode with the metric `G`: `(G (x) ... (x) G) self`.
    fn apply_metric(&self, g: &DenseTensor) -> DenseTensor {
        let n = self.dims.len();
        let mut cur = self.clone();
        for mode in 0..self.degree {
            let mut next = cur.clone();
            let mut idx = vec![0; self.degree];
            for lin in 0..cur.data.len() {
                cur.unflat(lin, &mut idx);
                let i = idx[mode];
                let mut acc = 0.0;
                for j in 0..n {
                    idx[mode] = j;
                    acc += g.data[i * n + j] * cur.data[cur.flat(&idx)];
                }
                next.data[lin] = acc;
            }
            cur = next;
        }
        cur
    }
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Average over all `n!` index permutations.
pub fn symmetrize_dense(t: &DenseTensor) -> Result<DenseTensor> {
    check_limits("symmetrize_dense", t.degree, t.dims)?;
    let perms = permutations(t.degree);
    let mut out = DenseTensor::zeros(t.degree, t.dims)?;
    for p in &perms {
        out.add_assign(&t.permuted(p));
    }
    out.scale(1.0 / perms.len() as f64);
    Ok(out)
}

/// The functional `:W^{(x)n}:` built by the two-term recursion
/// `:W^n: = W (x)^ :W^{n-1}: - (n-1) tau_A (x)^ :W^{n-2}:`.
pub fn wick_functional_dense(n: usize, a: &CovOp, w: &SeqVec) -> Result<DenseTensor> {
    let dims = w.dims();
    check_limits("wick_functional_dense", n, dims)?;
    let tau = DenseTensor::tau(a, dims)?;
    let wv = DenseTensor::vector(w);
    let mut prev = DenseTensor::scalar(1.0, dims);
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = wv.clone();
    for k in 2..=n {
        let mut next = symmetrize_dense(&wv.tensor(&cur)?)?;
        let mut corr = symmetrize_dense(&tau.tensor(&prev)?)?;
        corr.scale(-((k - 1) as f64));
        next.add_assign(&corr);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Closed form `sum_k (-1)^k n! / (2^k k! (n-2k)!) tau^k (x)^ W^{(x)(n-2k)}`.
pub fn wick_closed_form_dense(n: usize, a: &CovOp, w: &SeqVec) -> Result<DenseTensor> {
    let dims = w.dims();
    check_limits("wick_closed_form_dense", n, dims)?;
    let tau = DenseTensor::tau(a, dims)?;
    let wv = DenseTensor::vector(w);
    let mut out = DenseTensor::zeros(n, dims)?;
    for (k, c) in wick_to_monomial_coefficients(n).into_iter().enumerate() {
        let mut t = DenseTensor::scalar(c, dims);
        for _ in 0..k {
            t = t.tensor(&tau)?;
        }
        for _ in 0..(n - 2 * k) {
            t = t.tensor(&wv)?;
        }
        out.add_assign(&symmetrize_dense(&t)?);
    }
    Ok(out)
}

/// `:<t, W^{(x)n}>:` through the recursive dense functional. `t` is
/// symmetrized first.
pub fn wick_eval_dense(n: usize, a: &CovOp, w: &SeqVec, t: &DenseTensor) -> Result<f64> {
    if t.degree != n {
        return Err(Error::DegreeMismatch {
            left: n,
            right: t.degree,
        });
    }
    if t.dims != w.dims() {
        return Err(Error::dims("wick_eval_dense", t.dims, w.dims()));
    }
    let functional = wick_functional_dense(n, a, w)?;
    functional.pair(&symmetrize_dense(t)?)
}

/// `(t1, t2)_A` computed densely: every mode of `t2` weighted by the metric.
pub fn dense_inner_a(t1: &DenseTensor, t2: &DenseTensor, a: &CovOp) -> Result<f64> {
    let g = DenseTensor::tau(a, t1.dims)?;
    t1.pair(&t2.apply_metric(&g))
}
