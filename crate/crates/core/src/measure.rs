//! Sampling of the truncated Gaussian measure `mu_A` and Monte Carlo checks.
//!
//! A sample is `W = Z L^T` with `Z` an `m x d` matrix of independent standard
//! normals and `A = L L^T`, so that `Cov(<phi, W>, <psi, W>) = (phi, psi)_A`.
//!
//! Sampling is split into fixed-size chunks; chunk `i` draws from a ChaCha8
//! stream seeded with `seed + i`. Chunks may run in parallel and the batch is
//! the same regardless of thread count.

use std::io::Write;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::seqspace::{inner_a, inner_l2, CovOp, SeqVec, TruncationDims};
use crate::wick::wick_to_monomial_coefficients;

/// Samples per deterministic chunk.
pub const CHUNK_SIZE: usize = 4096;

/// Number of standard errors a Monte Carlo estimate may deviate from its target.
pub const MC_SIGMAS: f64 = 4.0;

/// Absolute slack added to Monte Carlo comparisons to absorb rounding in
/// estimates whose sample variance is exactly zero.
pub const MC_ABS_FLOOR: f64 = 1e-12;

/// Longest factor list accepted by [`isserlis_moment`].
pub const MAX_ISSERLIS_FACTORS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    samples: Vec<SeqVec>,
    seed: u64,
}

impl SampleBatch {
    pub fn samples(&self) -> &[SeqVec] {
        &self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dims(&self) -> Option<TruncationDims> {
        self.samples.first().map(SeqVec::dims)
    }

    /// One row per sample, entries flattened row-major, with a `w_r_k` header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(dims) = self.dims() else {
            return Ok(());
        };
        let header: Vec<String> = (0..dims.m)
            .flat_map(|r| (0..dims.d).map(move |k| format!("w_{r}_{k}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let row: Vec<String> = s.flat_row_major().iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Draws `count` samples of `mu_A` at truncation `dims`.
pub fn sample_mu_a(a: &CovOp, dims: TruncationDims, count: usize, seed: u64) -> Result<SampleBatch> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if a.dim() != dims.d {
        return Err(Error::dims("sample_mu_a", dims.d, a.dim()));
    }
    let lt = a.cholesky_factor().transpose();
    let chunks = count.div_ceil(CHUNK_SIZE);
    let samples: Vec<SeqVec> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(chunk as u64));
            let n = CHUNK_SIZE.min(count - chunk * CHUNK_SIZE);
            (0..n)
                .map(|_| {
                    let z = DMatrix::from_fn(dims.m, dims.d, |_, _| StandardNormal.sample(&mut rng));
                    SeqVec::from_matrix_unchecked(z * &lt)
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    Ok(SampleBatch { samples, seed })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub count: usize,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::EmptyInput("McEstimate"));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            value: mean,
            std_error,
            count: n,
        })
    }

    /// `|value - target| <= sigmas * std_error` (plus [`MC_ABS_FLOOR`]).
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= sigmas * self.std_error + MC_ABS_FLOOR
    }

    /// Deviation from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        let dev = (self.value - target).abs();
        if self.std_error > 0.0 {
            dev / self.std_error
        } else if dev <= MC_ABS_FLOOR {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Monte Carlo estimate of a complex expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMcEstimate {
    pub re: McEstimate,
    pub im: McEstimate,
}

/// Dual pairing `<phi, W>`, the Frobenius inner product.
pub fn pairing(phi: &SeqVec, w: &SeqVec) -> Result<f64> {
    inner_l2(phi, w)
}

/// Sample mean of `g(W)` over a batch.
pub fn mc_mean(batch: &SampleBatch, g: impl Fn(&SeqVec) -> Result<f64>) -> Result<McEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("mc_mean"));
    }
    let values = batch.samples.iter().map(g).collect::<Result<Vec<_>>>()?;
    McEstimate::from_values(&values)
}

/// Estimate of `E[exp(i <phi, W>)]`, whose exact value is `exp(-||phi||_A^2 / 2)`.
pub fn char_function_mc(phi: &SeqVec, batch: &SampleBatch) -> Result<ComplexMcEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("char_function_mc"));
    }
    let pairs = batch
        .samples
        .iter()
        .map(|w| pairing(phi, w))
        .collect::<Result<Vec<_>>>()?;
    let re: Vec<f64> = pairs.iter().map(|p| p.cos()).collect();
    let im: Vec<f64> = pairs.iter().map(|p| p.sin()).collect();
    Ok(ComplexMcEstimate {
        re: McEstimate::from_values(&re)?,
        im: McEstimate::from_values(&im)?,
    })
}

/// Monte Carlo estimate of `E[prod_i <phi_i, W>]`.
pub fn mc_product_moment(phis: &[SeqVec], batch: &SampleBatch) -> Result<McEstimate> {
    mc_mean(batch, |w| {
        phis.iter().try_fold(1.0, |acc, phi| Ok(acc * pairing(phi, w)?))
    })
}

/// Exact `E[prod_i <phi_i, W>]` as a sum over perfect matchings of products
/// of covariances `(phi_i, phi_j)_A`.
pub fn isserlis_moment(phis: &[SeqVec], a: &CovOp) -> Result<f64> {
    if phis.len() > MAX_ISSERLIS_FACTORS {
        return Err(Error::SizeLimit {
            op: "isserlis_moment",
            detail: format!("{} factors > {MAX_ISSERLIS_FACTORS}", phis.len()),
        });
    }
    let n = phis.len();
    let mut cov = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let c = inner_a(&phis[i], &phis[j], a)?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let idx: Vec<usize> = (0..n).collect();
    Ok(matching_sum(&cov, &idx))
}

/// Sum over perfect matchings of `idx` of the product of `cov` entries.
pub(crate) fn matching_sum(cov: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    if idx.len() % 2 == 1 {
        return 0.0;
    }
    let first = idx[0];
    let rest = &idx[1..];
    let mut total = 0.0;
    for (pos, &partner) in rest.iter().enumerate() {
        let c = cov[(first, partner)];
        if c == 0.0 {
            continue;
        }
        let remaining: Vec<usize> = rest
            .iter()
            .enumerate()
            .filter(|&(p, _)| p != pos)
            .map(|(_, &v)| v)
            .collect();
        total += c * matching_sum(cov, &remaining);
    }
    total
}

/// Exact `E[:<phi^{(x)n}, W^{(x)n}>: :<psi^{(x)m}, W^{(x)m}>:]`, obtained by
/// expanding both Wick polynomials into monomials and taking every moment
/// with the pair-partition formula. Requires `n + m <= 10`.
pub fn wick_product_expectation(
    phi: &SeqVec,
    n: usize,
    psi: &SeqVec,
    m: usize,
    a: &CovOp,
) -> Result<f64> {
    if n + m > MAX_ISSERLIS_FACTORS {
        return Err(Error::SizeLimit {
            op: "wick_product_expectation",
            detail: format!("n + m = {} > {MAX_ISSERLIS_FACTORS}", n + m),
        });
    }
    let pp = inner_a(phi, phi, a)?;
    let qq = inner_a(psi, psi, a)?;
    let pq = inner_a(phi, psi, a)?;
    let mut total = 0.0;
    for (k, ck) in wick_to_monomial_coefficients(n).into_iter().enumerate() {
        for (l, cl) in wick_to_monomial_coefficients(m).into_iter().enumerate() {
            let (p, q) = (n - 2 * k, m - 2 * l);
            let mut cov = DMatrix::zeros(p + q, p + q);
            for i in 0..p + q {
                for j in 0..p + q {
                    cov[(i, j)] = match (i < p, j < p) {
                        (true, true) => pp,
                        (false, false) => qq,
                        _ => pq,
                    };
                }
            }
            let idx: Vec<usize> = (0..p + q).collect();
            total += ck * cl * pp.powi(k as i32) * qq.powi(l as i32) * matching_sum(&cov, &idx);
        }
    }
    Ok(total)
}

/// One flagged moment of a push-forward check.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub label: String,
    pub estimate: McEstimate,
    pub target: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PushforwardReport {
    pub checks: Vec<MomentCheck>,
}

impl PushforwardReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MomentCheck> {
        self.checks.iter().filter(|c| !c.ok)
    }
}

/// Checks that `(<phi_1, W>, ..., <phi_q, W>)` looks standard normal for an
/// A-orthonormal family: means 0, second moments 1, cross moments 0, and
/// factorized fourth moments `E[x_i^2 x_j^2] = 1`.
pub fn pushforward_check(
    phis: &[SeqVec],
    a: &CovOp,
    batch: &SampleBatch,
) -> Result<PushforwardReport> {
    if phis.is_empty() {
        return Err(Error::EmptyInput("pushforward_check"));
    }
    if batch.is_empty() {
        return Err(Error::EmptyInput("pushforward_check"));
    }
    check_orthonormal(phis, a, 1e-8, "pushforward_check")?;

    let coords: Vec<Vec<f64>> = batch
        .samples
        .iter()
        .map(|w| phis.iter().map(|p| pairing(p, w)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&[f64]) -> f64| -> Result<McEstimate> {
        let v: Vec<f64> = coords.iter().map(|c| f(c)).collect();
        McEstimate::from_values(&v)
    };

    let mut report = PushforwardReport::default();
    let mut push = |label: String, estimate: McEstimate, target: f64| {
        let ok = estimate.within(target, MC_SIGMAS);
        report.checks.push(MomentCheck {
            label,
            estimate,
            target,
            ok,
        });
    };
    let q = phis.len();
    for i in 0..q {
        push(format!("mean[{i}]"), column(&|c| c[i])?, 0.0);
        push(format!("second_moment[{i}]"), column(&|c| c[i] * c[i])?, 1.0);
    }
    for i in 0..q {
        for j in (i + 1)..q {
            push(format!("cov[{i},{j}]"), column(&|c| c[i] * c[j])?, 0.0);
            push(
                format!("fourth_moment[{i},{j}]"),
                column(&|c| c[i] * c[i] * c[j] * c[j])?,
                1.0,
            );
        }
    }
    Ok(report)
}

/// Fails unless `(phi_i, phi_j)_A = delta_ij` within `tol`.
pub fn check_orthonormal(phis: &[SeqVec], a: &CovOp, tol: f64, op: &'static str) -> Result<()> {
    for i in 0..phis.len() {
        for j in i..phis.len() {
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (inner_a(&phis[i], &phis[j], a)? - target).abs();
            if dev > tol {
                return Err(Error::NotOrthonormal {
                    op,
                    i,
                    j,
                    deviation: dev,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seqspace::norm_a;

    fn cov() -> CovOp {
        CovOp::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap()
    }

    #[test]
    fn reproducible_and_count() {
        let a = cov();
        let dims = TruncationDims::new(2, 2).unwrap();
        let b1 = sample_mu_a(&a, dims, 5000, 7).unwrap();
        let b2 = sample_mu_a(&a, dims, 5000, 7).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(b1.count(), 5000);
        let b3 = sample_mu_a(&a, dims, 5000, 8).unwrap();
        assert_ne!(b1, b3);
        assert!(sample_mu_a(&a, dims, 0, 7).is_err());
    }

    #[test]
    fn prefix_stable_across_counts() {
        // chunking makes the first chunk independent of the total count
        let a = cov();
        let dims = TruncationDims::new(1, 2).unwrap();
        let small = sample_mu_a(&a, dims, 100, 3).unwrap();
        let large = sample_mu_a(&a, dims, 9000, 3).unwrap();
        assert_eq!(small.samples(), &large.samples()[..100]);
    }

    #[test]
    fn char_function_at_zero() {
        let a = cov();
        let dims = TruncationDims::new(1, 2).unwrap();
        let batch = sample_mu_a(&a, dims, 100, 1).unwrap();
        let est = char_function_mc(&SeqVec::zeros(dims), &batch).unwrap();
        assert_eq!(est.re.value, 1.0);
        assert_eq!(est.re.std_error, 0.0);
        assert_eq!(est.im.value, 0.0);
        assert_eq!(est.im.std_error, 0.0);
    }

    #[test]
    fn pairing_linear() {
        let dims = TruncationDims::new(1, 2).unwrap();
        let w = SeqVec::from_rows(&[vec![0.7, -0.2]]).unwrap();
        let phi = SeqVec::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let psi = SeqVec::from_rows(&[vec![-3.0, 0.5]]).unwrap();
        assert_eq!(pairing(&SeqVec::zeros(dims), &w).unwrap(), 0.0);
        let lhs = pairing(&(&(&phi * 2.0) + &(&psi * -0.5)), &w).unwrap();
        let rhs = 2.0 * pairing(&phi, &w).unwrap() - 0.5 * pairing(&psi, &w).unwrap();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn isserlis_small_cases() {
        let a = cov();
        let phi = SeqVec::from_rows(&[vec![1.0, 0.3]]).unwrap();
        let psi = SeqVec::from_rows(&[vec![-0.4, 2.0]]).unwrap();
        let two = isserlis_moment(&[phi.clone(), psi.clone()], &a).unwrap();
        assert!((two - inner_a(&phi, &psi, &a).unwrap()).abs() < 1e-15);
        assert_eq!(isserlis_moment(&[phi.clone(), psi.clone(), phi.clone()], &a).unwrap(), 0.0);
        let four = isserlis_moment(&vec![phi.clone(); 4], &a).unwrap();
        assert!((four - 3.0 * norm_a(&phi, &a).unwrap().powi(4)).abs() < 1e-13);
        assert!(isserlis_moment(&vec![phi; 11], &a).is_err());
    }

    #[test]
    fn estimate_statistics() {
        let est = McEstimate::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(est.value, 2.5);
        let expected_se = (5.0_f64 / 3.0 / 4.0).sqrt();
        assert!((est.std_error - expected_se).abs() < 1e-15);
        assert!(McEstimate::from_values(&[]).is_err());
    }

    #[test]
    fn pushforward_rejects_non_orthonormal() {
        let a = cov();
        let dims = TruncationDims::new(1, 2).unwrap();
        let batch = sample_mu_a(&a, dims, 10, 1).unwrap();
        let e1 = SeqVec::unit(dims, 0, 0);
        let e2 = SeqVec::unit(dims, 0, 1);
        assert!(matches!(
            pushforward_check(&[e1, e2], &a, &batch),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn csv_export_shape() {
        let a = cov();
        let dims = TruncationDims::new(1, 2).unwrap();
        let batch = sample_mu_a(&a, dims, 3, 1).unwrap();
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "w_0_0,w_0_1");
        let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first, batch.samples()[0].flat_row_major());
    }
}
