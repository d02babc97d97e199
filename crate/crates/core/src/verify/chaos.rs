use nalgebra::{dvector, DVector};
use rand::Rng;

use super::gen::{normal, random_matrix, random_seqvec, random_spd, random_vector, rng};
use super::{CheckOutcome, VerifyOptions};
use crate::chaos::{
    chaos_inner, chaos_norm, cond_exp_chaos, cond_exp_monomial, eval_expansion, mc_cond_check,
    single_term, ChaosExpansion, ConditioningSet, TestPolynomial,
};
use crate::error::Result;
use crate::measure::{mc_mean, sample_mu_a};
use crate::seqspace::{bullet, gram_schmidt_a, CovOp, HVec, SeqVec, TruncationDims, GRAM_SCHMIDT_TOL};
use crate::wick::SymKernel;

const INSTANCES: usize = 100;

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 10] = [
        ("worked_example", worked_example),
        ("idempotence", idempotence),
        ("contraction", contraction),
        ("additivity", additivity),
        ("span_invariance", span_invariance),
        ("degree_one_consistency", consistency),
        ("nested_sets_monotone", nested_monotone),
        ("mc_conditional_expectation", mc_cond),
        ("mc_norm_identity", mc_norm),
        ("mean_is_constant_kernel", mc_mean_constant),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

fn random_dims(r: &mut impl Rng) -> Result<TruncationDims> {
    TruncationDims::new(r.random_range(1..=3), r.random_range(2..=5))
}

/// Constant plus one or two rank-one powers in each degree `1..=max_degree`.
pub fn random_expansion(r: &mut impl Rng, dims: TruncationDims, max_degree: usize) -> Result<ChaosExpansion> {
    let mut e = ChaosExpansion::new(dims);
    e.add_kernel(SymKernel::constant(normal(r), dims))?;
    for n in 1..=max_degree {
        for _ in 0..r.random_range(1..=2) {
            e.add_term(normal(r) / n as f64, random_seqvec(r, dims), n)?;
        }
    }
    Ok(e)
}

fn random_set(r: &mut impl Rng, dims: TruncationDims, a: &CovOp) -> Result<ConditioningSet> {
    let q = r.random_range(1..=dims.len().min(3));
    let raw: Vec<SeqVec> = (0..q).map(|_| random_seqvec(r, dims)).collect();
    ConditioningSet::from_spanning(&raw, a)
}

fn max_base_diff(e1: &ChaosExpansion, e2: &ChaosExpansion) -> f64 {
    let mut worst = 0.0_f64;
    for (k1, k2) in e1.kernels().zip(e2.kernels()) {
        for (t1, t2) in k1.terms().iter().zip(k2.terms()) {
            worst = worst.max((t1.base.matrix() - t2.base.matrix()).amax());
            worst = worst.max((t1.coeff - t2.coeff).abs());
        }
    }
    worst
}

fn max_diff(f: &SeqVec, g: &SeqVec) -> f64 {
    (f.matrix() - g.matrix()).amax()
}

/// The worked example: `A = [[1, 1/2, 0], [1/2, 1, 0], [0, 0, 1]]`,
/// conditioning on `e_1`, then on `e_1, e_2`. Returns the worst error.
pub fn worked_example_error() -> Result<f64> {
    let a = CovOp::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 1.0]])?;
    let f = SeqVec::from_rows(&[vec![0.7, -1.3, 2.1], vec![1.9, 0.4, -0.6]])?;
    let (e1, e2) = (dvector![1.0, 0.0, 0.0], dvector![0.0, 1.0, 0.0]);
    let f1 = f.column(0).into_vector();
    let f2 = f.column(1).into_vector();

    let one = cond_exp_monomial(&f, &[e1.clone()], &a)?;
    let expected_one = bullet(&HVec::from_vector(&f1 + &f2 * 0.5)?, &e1)?;
    let two = cond_exp_monomial(&f, &[e1.clone(), e2.clone()], &a)?;
    let expected_two = &bullet(&HVec::from_vector(f1)?, &e1)? + &bullet(&HVec::from_vector(f2)?, &e2)?;

    let basis = gram_schmidt_a(&[e1.clone(), e2.clone()], &a, GRAM_SCHMIDT_TOL)?;
    let e2_hat = (&e2 - &e1 * 0.5) * (4.0_f64 / 3.0).sqrt();

    Ok(max_diff(&one, &expected_one)
        .max(max_diff(&two, &expected_two))
        .max((&basis[0] - &e1).amax())
        .max((&basis[1] - e2_hat).amax()))
}

fn worked_example(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound("worked_example", worked_example_error()?, 1e-12))
}

fn idempotence(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 500);
    let mut worst = 0.0_f64;
    for _ in 0..INSTANCES {
        let dims = random_dims(&mut r)?;
        let a = random_spd(&mut r, dims.d);
        let e = random_expansion(&mut r, dims, 3)?;
        let c = random_set(&mut r, dims, &a)?;
        let once = cond_exp_chaos(&e, &c, &a)?;
        let twice = cond_exp_chaos(&once, &c, &a)?;
        worst = worst.max(max_base_diff(&once, &twice));
    }
    Ok(CheckOutcome::bound("idempotence", worst, opts.tol.chaos))
}

fn contraction(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 501);
    let mut worst = 0.0_f64;
    for _ in 0..INSTANCES {
        let dims = random_dims(&mut r)?;
        let a = random_spd(&mut r, dims.d);
        let e = random_expansion(&mut r, dims, 3)?;
        let c = random_set(&mut r, dims, &a)?;
        let before = chaos_norm(&e, &a)?;
        let after = chaos_norm(&cond_exp_chaos(&e, &c, &a)?, &a)?;
        // positive excess means the projection grew the norm
        worst = worst.max((after - before) / before.max(1.0));
    }
    Ok(CheckOutcome::new(
        "contraction",
        worst <= opts.tol.chaos,
        format!("max relative norm excess {worst:.3e} (tol {:.1e})", opts.tol.chaos),
    ))
}

fn additivity(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 502);
    let mut worst = 0.0_f64;
    for _ in 0..INSTANCES {
        let dims = random_dims(&mut r)?;
        let a = random_spd(&mut r, dims.d);
        let f = random_seqvec(&mut r, dims);
        let raw: Vec<DVector<f64>> = (0..r.random_range(1..=dims.d)).map(|_| random_vector(&mut r, dims.d)).collect();
        let xs = gram_schmidt_a(&raw, &a, GRAM_SCHMIDT_TOL)?;
        let joint = cond_exp_monomial(&f, &xs, &a)?;
        let mut sum = SeqVec::zeros(dims);
        for x in &xs {
            sum = &sum + &cond_exp_monomial(&f, std::slice::from_ref(x), &a)?;
        }
        worst = worst.max(max_diff(&joint, &sum) / f.norm().max(1.0));
    }
    Ok(CheckOutcome::bound("additivity", worst, opts.tol.chaos))
}

fn span_invariance(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 503);
    let mut worst = 0.0_f64;
    for _ in 0..INSTANCES {
        let dims = random_dims(&mut r)?;
        let a = random_spd(&mut r, dims.d);
        let f = random_seqvec(&mut r, dims);
        let q = r.random_range(1..=dims.d);
        let xs: Vec<DVector<f64>> = (0..q).map(|_| random_vector(&mut r, dims.d)).collect();
        // another spanning set: invertible (well-conditioned) mixtures plus a redundant vector
        let mix = random_matrix(&mut r, q, q) * 0.3 + nalgebra::DMatrix::identity(q, q);
        let mut ys: Vec<DVector<f64>> = (0..q)
            .map(|j| (0..q).fold(DVector::zeros(dims.d), |acc, i| acc + &xs[i] * mix[(i, j)]))
            .collect();
        ys.push(&ys[0] * 2.0 - &xs[0]);
        let p1 = cond_exp_monomial(&f, &xs, &a)?;
        let p2 = cond_exp_monomial(&f, &ys, &a)?;
        worst = worst.max(max_diff(&p1, &p2) / f.norm().max(1.0));
    }
    Ok(CheckOutcome::bound("span_invariance", worst, opts.tol.chaos))
}

fn consistency(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 504);
    let mut worst = 0.0_f64;
    for _ in 0..INSTANCES {
        let dims = random_dims(&mut r)?;
        let a = random_spd(&mut r, dims.d);
        let f = random_seqvec(&mut r, dims);
        let xs: Vec<DVector<f64>> = (0..r.random_range(1..=dims.d)).map(|_| random_vector(&mut r, dims.d)).collect();
        let c = ConditioningSet::from_sequence_directions(&xs, dims, &a)?;
        let via_chaos = cond_exp_chaos(&single_term(1.0, f.clone(), 1), &c, &a)?;
        let base = &via_chaos.kernel(1).expect("degree one kept").terms()[0].base;
        let direct = cond_exp_monomial(&f, &xs, &a)?;
        worst = worst.max(max_diff(base, &direct) / f.norm().max(1.0));
    }
    Ok(CheckOutcome::bound("degree_one_consistency", worst, opts.tol.chaos))
}

/// Conditioning on growing nested families: the projected norms never
/// decrease and reach the full norm once the family spans everything.
fn nested_monotone(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 505);
    let mut ok = true;
    let mut final_gap = 0.0_f64;
    for _ in 0..20 {
        let dims = TruncationDims::new(r.random_range(1..=2), r.random_range(2..=4))?;
        let a = random_spd(&mut r, dims.d);
        let e = random_expansion(&mut r, dims, 3)?;
        let raw: Vec<SeqVec> = (0..dims.len()).map(|_| random_seqvec(&mut r, dims)).collect();
        let mut prev = 0.0;
        for q in 1..=raw.len() {
            let c = ConditioningSet::from_spanning(&raw[..q], &a)?;
            let norm = chaos_norm(&cond_exp_chaos(&e, &c, &a)?, &a)?;
            ok &= norm >= prev - opts.tol.chaos * norm.max(1.0);
            prev = norm;
        }
        let full = chaos_norm(&e, &a)?;
        final_gap = final_gap.max((prev - full).abs() / full.max(1.0));
    }
    let passed = ok && final_gap <= 1e-8;
    Ok(CheckOutcome::new(
        "nested_sets_monotone",
        passed,
        format!("monotone: {ok}, gap to full norm at full span {final_gap:.3e}"),
    ))
}

fn mc_cond(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 506);
    let dims = TruncationDims::new(2, 3)?;
    let a = random_spd(&mut r, dims.d);
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(10))?;
    let mut failures = Vec::new();
    let mut max_z = 0.0_f64;
    for i in 0..20 {
        let e = random_expansion(&mut r, dims, 2)?;
        let c = random_set(&mut r, dims, &a)?;
        let q = c.len();
        let mut terms = vec![(normal(&mut r), vec![])];
        for k in 0..q {
            let mut lin = vec![0; q];
            lin[k] = 1;
            terms.push((normal(&mut r), lin));
            let mut sq = vec![0; q];
            sq[k] = 2;
            terms.push((normal(&mut r), sq));
        }
        let g = if i == 0 { TestPolynomial::one() } else { TestPolynomial::new(terms)? };
        let est = mc_cond_check(&e, &c, &a, &g, &batch)?;
        let z = est.z_score(0.0);
        max_z = max_z.max(z);
        if !est.within(0.0, opts.tol.mc_sigmas) {
            failures.push(format!("#{i} z={z:.2}"));
        }
    }
    let detail = if failures.is_empty() {
        format!("20 expansions, max |z| {max_z:.2}")
    } else {
        format!("outside band: {}", failures.join(", "))
    };
    Ok(CheckOutcome::new("mc_conditional_expectation", failures.is_empty(), detail))
}

fn mc_norm(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 507);
    let dims = TruncationDims::new(1, 3)?;
    let a = random_spd(&mut r, dims.d);
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(11))?;
    let mut failures = Vec::new();
    for i in 0..5 {
        let e = random_expansion(&mut r, dims, 3)?;
        let target = chaos_inner(&e, &e, &a)?;
        let est = mc_mean(&batch, |w| Ok(eval_expansion(&e, &a, w)?.powi(2)))?;
        if !est.within(target, opts.tol.mc_sigmas) {
            failures.push(format!("#{i} z={:.2}", est.z_score(target)));
        }
    }
    Ok(CheckOutcome::new(
        "mc_norm_identity",
        failures.is_empty(),
        if failures.is_empty() { "5 expansions within band".into() } else { failures.join(", ") },
    ))
}

fn mc_mean_constant(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 508);
    let dims = TruncationDims::new(2, 2)?;
    let a = random_spd(&mut r, dims.d);
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(12))?;
    let mut failures = Vec::new();
    for i in 0..5 {
        let e = random_expansion(&mut r, dims, 3)?;
        let c0 = e.kernel(0).map(|k| k.terms()[0].coeff).unwrap_or(0.0);
        let est = mc_mean(&batch, |w| eval_expansion(&e, &a, w))?;
        if !est.within(c0, opts.tol.mc_sigmas) {
            failures.push(format!("#{i} z={:.2}", est.z_score(c0)));
        }
    }
    Ok(CheckOutcome::new(
        "mean_is_constant_kernel",
        failures.is_empty(),
        if failures.is_empty() { "5 expansions within band".into() } else { failures.join(", ") },
    ))
}
