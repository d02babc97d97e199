use rand::Rng;

use super::gen::{normal, random_seqvec, random_spd, rng};
use super::{CheckOutcome, VerifyOptions};
use crate::error::Result;
use crate::seqspace::{inner_l2, CovOp, SeqVec, TruncationDims};
use crate::wick::dense::{
    dense_inner_a, symmetrize_dense, wick_closed_form_dense, wick_eval_dense, DenseTensor,
};
use crate::wick::{kernel_inner_a, monomial_from_wick, polarize, wick_eval, RankOnePower, SymKernel};

const TRIALS: usize = 50;

/// Shapes with `m * d <= 6`.
const SHAPES: [(usize, usize); 7] = [(1, 2), (1, 3), (2, 2), (1, 4), (1, 5), (2, 3), (3, 2)];

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 5] = [
        ("recursion_vs_closed_form", recursion_vs_closed_form),
        ("inverse_relation", inverse_relation),
        ("repolarization_invariance", repolarization),
        ("polarization_symmetrizes", polarization_symmetrizes),
        ("kernel_inner_product", kernel_inner),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

struct Instance {
    n: usize,
    a: CovOp,
    w: SeqVec,
    kernel: SymKernel,
}

fn instance(r: &mut impl Rng, n: usize) -> Result<Instance> {
    let (m, d) = SHAPES[r.random_range(0..SHAPES.len())];
    let dims = TruncationDims::new(m, d)?;
    let a = random_spd(r, d);
    let w = random_seqvec(r, dims);
    let terms = (0..r.random_range(1..=3))
        .map(|_| RankOnePower {
            coeff: normal(r),
            base: random_seqvec(r, dims),
            degree: n,
        })
        .collect();
    let kernel = SymKernel::from_terms(n, dims, terms)?;
    Ok(Instance { n, a, w, kernel })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Worst disagreement between the recursive functional, the closed-form sum,
/// and the Hermite evaluation of polarized kernels.
pub fn recursion_closed_form_error(seed: u64, trials: usize) -> Result<f64> {
    let mut r = rng(seed, 300);
    let mut worst = 0.0_f64;
    for i in 0..trials {
        let inst = instance(&mut r, i % 5)?;
        let dense = DenseTensor::from_kernel(&inst.kernel)?;
        let recursive = wick_eval_dense(inst.n, &inst.a, &inst.w, &dense)?;
        let closed = wick_closed_form_dense(inst.n, &inst.a, &inst.w)?.pair(&symmetrize_dense(&dense)?)?;
        let hermite = wick_eval(&inst.kernel, &inst.a, &inst.w)?;
        worst = worst.max(rel(recursive, closed)).max(rel(recursive, hermite));
    }
    Ok(worst)
}

fn recursion_vs_closed_form(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "recursion_vs_closed_form",
        recursion_closed_form_error(opts.seed, TRIALS)?,
        opts.tol.wick,
    ))
}

/// `<phi, W>^n` rebuilt from lower-order Wick powers, `n <= 4`.
pub fn inverse_relation_error(seed: u64, trials: usize) -> Result<f64> {
    let mut r = rng(seed, 301);
    let mut worst = 0.0_f64;
    for i in 0..trials {
        let inst = instance(&mut r, 1)?;
        let phi = &inst.kernel.terms()[0].base;
        let n = i % 5;
        let direct = inner_l2(phi, &inst.w)?.powi(n as i32);
        let rebuilt = monomial_from_wick(phi, n, &inst.a, &inst.w)?;
        worst = worst.max(rel(direct, rebuilt));
    }
    Ok(worst)
}

fn inverse_relation(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "inverse_relation",
        inverse_relation_error(opts.seed, TRIALS)?,
        opts.tol.wick,
    ))
}

/// Two polarizations of the same symmetric product (factors permuted and
/// rescaled by reciprocal constants) are densely equal and evaluate equally.
fn repolarization(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 302);
    let mut dense_err = 0.0_f64;
    let mut eval_err = 0.0_f64;
    for i in 0..TRIALS {
        let n = 1 + i % 4;
        let inst = instance(&mut r, n)?;
        let xs: Vec<SeqVec> = (0..n).map(|_| random_seqvec(&mut r, inst.w.dims())).collect();
        let k1 = polarize(&xs)?;
        let mut ys: Vec<SeqVec> = xs.iter().rev().cloned().collect();
        if n >= 2 {
            let c = 0.5 + r.random::<f64>() * 2.0;
            ys[0] = &ys[0] * c;
            ys[1] = &ys[1] * (1.0 / c);
        }
        // a third representation: the same kernel with a cancelling pair appended
        let mut k2 = polarize(&ys)?;
        let extra = random_seqvec(&mut r, inst.w.dims());
        k2.push(RankOnePower { coeff: 1.0, base: extra.clone(), degree: n })?;
        k2.push(RankOnePower { coeff: -1.0, base: extra, degree: n })?;
        let d1 = DenseTensor::from_kernel(&k1)?;
        let d2 = DenseTensor::from_kernel(&k2)?;
        dense_err = dense_err.max(d1.max_abs_diff(&d2) / d1.max_abs().max(1.0));
        let v1 = wick_eval(&k1, &inst.a, &inst.w)?;
        let v2 = wick_eval(&k2, &inst.a, &inst.w)?;
        eval_err = eval_err.max(rel(v1, v2));
    }
    let tol = opts.tol.repolarization;
    Ok(CheckOutcome::new(
        "repolarization_invariance",
        dense_err <= tol && eval_err <= tol,
        format!("dense difference {dense_err:.3e}, evaluation difference {eval_err:.3e} (tol {tol:.1e})"),
    ))
}

/// `polarize(x_1..x_n)` expands to the symmetrization of `x_1 (x) ... (x) x_n`.
fn polarization_symmetrizes(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 303);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let n = 1 + i % 4;
        let (m, d) = SHAPES[i % SHAPES.len()];
        let dims = TruncationDims::new(m, d)?;
        let xs: Vec<SeqVec> = (0..n).map(|_| random_seqvec(&mut r, dims)).collect();
        let via_polar = DenseTensor::from_kernel(&polarize(&xs)?)?;
        let direct = symmetrize_dense(&DenseTensor::from_factors(&xs)?)?;
        worst = worst.max(via_polar.max_abs_diff(&direct) / direct.max_abs().max(1.0));
    }
    Ok(CheckOutcome::bound("polarization_symmetrizes", worst, opts.tol.wick))
}

fn kernel_inner(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 304);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let n = i % 4;
        let inst = instance(&mut r, n)?;
        let dims = inst.kernel.dims();
        let other = SymKernel::from_terms(
            n,
            dims,
            vec![RankOnePower { coeff: normal(&mut r), base: random_seqvec(&mut r, dims), degree: n }],
        )?;
        let poly = kernel_inner_a(&inst.kernel, &other, &inst.a)?;
        let dense = dense_inner_a(
            &DenseTensor::from_kernel(&inst.kernel)?,
            &DenseTensor::from_kernel(&other)?,
            &inst.a,
        )?;
        worst = worst.max(rel(poly, dense));
    }
    Ok(CheckOutcome::bound("kernel_inner_product", worst, opts.tol.wick))
}
