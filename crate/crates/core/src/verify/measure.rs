use rand::Rng;

use super::gen::{random_seqvec, random_spd, rng};
use super::{CheckOutcome, VerifyOptions};
use crate::chaos::ConditioningSet;
use crate::error::Result;
use crate::measure::{
    char_function_mc, isserlis_moment, mc_mean, mc_product_moment, pairing, pushforward_check,
    sample_mu_a, wick_product_expectation,
};
use crate::seqspace::{inner_a, norm_a, CovOp, SeqVec, TruncationDims};
use crate::wick::factorial;

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 6] = [
        ("variance", variance),
        ("characteristic_function", char_function),
        ("product_moments_vs_isserlis", product_moments),
        ("pushforward_standard_normal", pushforward),
        ("exact_wick_orthogonality", wick_orthogonality),
        ("reproducibility", reproducibility),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

fn setup(opts: &VerifyOptions, stream: u64) -> Result<(rand_chacha::ChaCha8Rng, CovOp, TruncationDims)> {
    let mut r = rng(opts.seed, stream);
    let dims = TruncationDims::new(2, 3)?;
    let a = random_spd(&mut r, dims.d);
    Ok((r, a, dims))
}

/// Summary line for a list of `(label, z-score, ok)` Monte Carlo comparisons.
fn mc_outcome(name: &str, results: &[(String, f64, bool)], sigmas: f64) -> CheckOutcome {
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2)
        .map(|(l, z, _)| format!("{l} z={z:.2}"))
        .collect();
    let max_z = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let detail = if failed.is_empty() {
        format!("{} estimates, max |z| {max_z:.2} (band {sigmas} std errors)", results.len())
    } else {
        format!("outside {sigmas} std errors: {}", failed.join(", "))
    };
    CheckOutcome::new(name, failed.is_empty(), detail)
}

fn variance(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (mut r, a, dims) = setup(opts, 400)?;
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed)?;
    let mut results = Vec::new();
    for i in 0..5 {
        let phi = random_seqvec(&mut r, dims);
        let target = inner_a(&phi, &phi, &a)?;
        let est = mc_mean(&batch, |w| Ok(pairing(&phi, w)?.powi(2)))?;
        results.push((format!("var[{i}]"), est.z_score(target), est.within(target, opts.tol.mc_sigmas)));
    }
    Ok(mc_outcome("variance", &results, opts.tol.mc_sigmas))
}

fn char_function(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (mut r, a, dims) = setup(opts, 401)?;
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(1))?;
    let mut results = Vec::new();
    for i in 0..5 {
        let phi = &random_seqvec(&mut r, dims) * (0.3 + 0.3 * i as f64);
        let target = (-0.5 * norm_a(&phi, &a)?.powi(2)).exp();
        let est = char_function_mc(&phi, &batch)?;
        let s = opts.tol.mc_sigmas;
        results.push((format!("re[{i}]"), est.re.z_score(target), est.re.within(target, s)));
        results.push((format!("im[{i}]"), est.im.z_score(0.0), est.im.within(0.0, s)));
    }
    Ok(mc_outcome("characteristic_function", &results, opts.tol.mc_sigmas))
}

fn product_moments(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (mut r, a, dims) = setup(opts, 402)?;
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(2))?;
    let mut results = Vec::new();
    for n in 1..=4 {
        for t in 0..3 {
            let phis: Vec<SeqVec> = (0..n).map(|_| random_seqvec(&mut r, dims)).collect();
            let target = isserlis_moment(&phis, &a)?;
            let est = mc_product_moment(&phis, &batch)?;
            results.push((
                format!("n={n}#{t}"),
                est.z_score(target),
                est.within(target, opts.tol.mc_sigmas),
            ));
        }
    }
    Ok(mc_outcome("product_moments_vs_isserlis", &results, opts.tol.mc_sigmas))
}

fn pushforward(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (mut r, a, dims) = setup(opts, 403)?;
    let batch = sample_mu_a(&a, dims, opts.samples, opts.seed.wrapping_add(3))?;
    let mut failures = Vec::new();
    let mut total = 0;
    for q in 1..=3 {
        let raw: Vec<SeqVec> = (0..q).map(|_| random_seqvec(&mut r, dims)).collect();
        let set = ConditioningSet::from_spanning(&raw, &a)?;
        let report = pushforward_check(set.basis(), &a, &batch)?;
        total += report.checks.len();
        failures.extend(report.failures().map(|c| {
            format!("q={q} {} z={:.2}", c.label, c.estimate.z_score(c.target))
        }));
    }
    let detail = if failures.is_empty() {
        format!("{total} moments within band")
    } else {
        failures.join(", ")
    };
    Ok(CheckOutcome::new("pushforward_standard_normal", failures.is_empty(), detail))
}

/// Worst absolute deviation of `E[:phi^n: :psi^m:]` from
/// `delta_nm n! (phi,psi)_A^n` over `n, m <= 4`, for A-unit `phi`, `psi`.
pub fn wick_orthogonality_error(seed: u64, instances: usize) -> Result<f64> {
    let mut r = rng(seed, 404);
    let mut worst = 0.0_f64;
    for _ in 0..instances {
        let (m, d) = (r.random_range(1..=2), r.random_range(1..=4));
        let dims = TruncationDims::new(m, d)?;
        let a = random_spd(&mut r, d);
        let phi = random_seqvec(&mut r, dims);
        let phi = &phi * (1.0 / norm_a(&phi, &a)?);
        let psi = random_seqvec(&mut r, dims);
        let psi = &psi * (1.0 / norm_a(&psi, &a)?);
        let pq = inner_a(&phi, &psi, &a)?;
        for n in 0..=4 {
            for mm in 0..=4 {
                let exact = wick_product_expectation(&phi, n, &psi, mm, &a)?;
                let target = if n == mm { factorial(n) * pq.powi(n as i32) } else { 0.0 };
                worst = worst.max((exact - target).abs());
            }
        }
    }
    Ok(worst)
}

fn wick_orthogonality(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "exact_wick_orthogonality",
        wick_orthogonality_error(opts.seed, 20)?,
        opts.tol.wick_orthogonality,
    ))
}

fn reproducibility(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (mut r, a, dims) = setup(opts, 405)?;
    let count = 10_000.min(opts.samples.max(1));
    let b1 = sample_mu_a(&a, dims, count, opts.seed)?;
    let b2 = sample_mu_a(&a, dims, count, opts.seed)?;
    let phi = random_seqvec(&mut r, dims);
    let e1 = mc_mean(&b1, |w| pairing(&phi, w))?;
    let e2 = mc_mean(&b2, |w| pairing(&phi, w))?;
    let identical = b1 == b2 && e1.value.to_bits() == e2.value.to_bits();
    // a longer batch extends the shorter one chunk by chunk
    let longer = sample_mu_a(&a, dims, count + 1, opts.seed)?;
    let prefix = longer.samples()[..count] == *b1.samples();
    Ok(CheckOutcome::new(
        "reproducibility",
        identical && prefix,
        format!("identical batches: {identical}, prefix stable: {prefix}"),
    ))
}
