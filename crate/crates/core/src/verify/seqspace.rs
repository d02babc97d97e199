use nalgebra::{DMatrix, DVector};

use super::gen::{random_gram, random_hvec, random_orthogonal, random_seqvec, random_spd, random_vector, rng};
use super::{rel_err, CheckOutcome, VerifyOptions};
use crate::error::Result;
use crate::seqspace::{
    apply_extended, apply_operator, block_projection, bracket, bullet, hadamard, hadamard_exp,
    inner_a, inner_l2, power_iteration_norm, psd_check, CovOp, HVec, SeqVec, TruncationDims,
};

const TRIALS: usize = 50;

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 11] = [
        ("bracket_of_bullet", bracket_of_bullet),
        ("bullet_norm_and_cauchy_schwarz", norms),
        ("inner_product_identities", inner_identities),
        ("weighted_identities", weighted_identities),
        ("parseval", parseval),
        ("extension_basis_independence", basis_independence),
        ("operator_norm_transfer", operator_norm),
        ("divergence_diagnostic", divergence),
        ("block_projection", projection),
        ("schur_product_psd", schur),
        ("psd_quadratic_form_criterion", quadratic_form_criterion),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

fn dims_for(i: usize) -> TruncationDims {
    TruncationDims::new(1 + i % 4, 2 + i % 7).expect("positive dims")
}

fn bracket_of_bullet(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 100);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let h = random_hvec(&mut r, dims.m);
        let x = random_vector(&mut r, dims.d);
        let y = random_vector(&mut r, dims.d);
        let lhs = bracket(&bullet(&h, &x)?, &y)?;
        let rhs = h.as_vector() * x.dot(&y);
        worst = worst.max((lhs.as_vector() - &rhs).amax() / rhs.amax().max(1.0));
    }
    Ok(CheckOutcome::bound("bracket_of_bullet", worst, opts.tol.identity))
}

fn norms(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 101);
    let mut worst = 0.0_f64;
    let mut cs_ok = true;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let h = random_hvec(&mut r, dims.m);
        let x = random_vector(&mut r, dims.d);
        let n = bullet(&h, &x)?.norm();
        worst = worst.max(rel_err(n, h.norm() * x.norm(), 1.0));
        let f = random_seqvec(&mut r, dims);
        cs_ok &= bracket(&f, &x)?.norm() <= f.norm() * x.norm() * (1.0 + 1e-14);
    }
    let tol = opts.tol.identity;
    Ok(CheckOutcome::new(
        "bullet_norm_and_cauchy_schwarz",
        worst <= tol && cs_ok,
        format!("norm identity error {worst:.3e} (tol {tol:.1e}), bracket bound holds: {cs_ok}"),
    ))
}

fn inner_identities(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 102);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let (h, g) = (random_hvec(&mut r, dims.m), random_hvec(&mut r, dims.m));
        let (x, y) = (random_vector(&mut r, dims.d), random_vector(&mut r, dims.d));
        let f = random_seqvec(&mut r, dims);
        let hx = bullet(&h, &x)?;
        let gy = bullet(&g, &y)?;
        worst = worst.max(rel_err(inner_l2(&hx, &gy)?, h.dot(&g) * x.dot(&y), 1.0));
        worst = worst.max(rel_err(inner_l2(&f, &hx)?, bracket(&f, &x)?.dot(&h), 1.0));
    }
    Ok(CheckOutcome::bound("inner_product_identities", worst, opts.tol.identity))
}

fn weighted_identities(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 103);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let a = random_spd(&mut r, dims.d);
        let (h, g) = (random_hvec(&mut r, dims.m), random_hvec(&mut r, dims.m));
        let (x, y) = (random_vector(&mut r, dims.d), random_vector(&mut r, dims.d));
        let f = random_seqvec(&mut r, dims);
        let hx = bullet(&h, &x)?;
        let gy = bullet(&g, &y)?;
        let ay = a.apply(&y)?;
        let ax = a.apply(&x)?;
        worst = worst.max(rel_err(inner_a(&hx, &gy, &a)?, h.dot(&g) * x.dot(&ay), 1.0));
        worst = worst.max(rel_err(inner_a(&f, &hx, &a)?, bracket(&f, &ax)?.dot(&h), 1.0));
        worst = worst.max(rel_err(inner_a(&f, &gy, &a)?, inner_a(&gy, &f, &a)?, 1.0));
        let lhs = apply_extended(&a, &hx)?;
        let rhs = bullet(&h, &ax)?;
        worst = worst.max((lhs.matrix() - rhs.matrix()).amax() / rhs.matrix().amax().max(1.0));
    }
    Ok(CheckOutcome::bound("weighted_identities", worst, opts.tol.identity))
}

fn parseval(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 104);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let f = random_seqvec(&mut r, dims);
        let q = random_orthogonal(&mut r, dims.d);
        let total: f64 = (0..dims.d)
            .map(|k| {
                let b = q.column(k).into_owned();
                bracket(&f, &b).map(|v| v.norm().powi(2))
            })
            .sum::<Result<f64>>()?;
        worst = worst.max((total - f.norm().powi(2)).abs());
    }
    Ok(CheckOutcome::bound("parseval", worst, opts.tol.parseval))
}

fn basis_independence(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 105);
    let mut worst = 0.0_f64;
    for i in 0..TRIALS {
        let dims = dims_for(i);
        let a = random_spd(&mut r, dims.d);
        let f = random_seqvec(&mut r, dims);
        let q = random_orthogonal(&mut r, dims.d);
        // coordinates in the basis given by the columns of q
        let f_q = SeqVec::from_matrix(f.matrix() * &q)?;
        let a_q = CovOp::new(symmetrize(&(q.transpose() * a.matrix() * &q)))?;
        let back = apply_extended(&a_q, &f_q)?.matrix() * q.transpose();
        let direct = apply_extended(&a, &f)?;
        worst = worst.max((back - direct.matrix()).amax() / direct.matrix().amax().max(1.0));
    }
    Ok(CheckOutcome::bound("extension_basis_independence", worst, opts.tol.parseval))
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn operator_norm(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 106);
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let dims = dims_for(i);
        let a = random_spd(&mut r, dims.d);
        let am = a.matrix().clone();
        let scalar = power_iteration_norm(
            |v| &am * v,
            |v| am.transpose() * v,
            random_vector(&mut r, dims.d),
            50_000,
        );
        let lifted = |v: &DVector<f64>| -> DVector<f64> {
            let f = SeqVec::from_matrix(DMatrix::from_column_slice(dims.m, dims.d, v.as_slice()))
                .expect("finite iterate");
            let g = apply_extended(&a, &f).expect("dims match");
            DVector::from_column_slice(g.matrix().as_slice())
        };
        let extended = power_iteration_norm(lifted, lifted, random_vector(&mut r, dims.len()), 50_000);
        worst = worst.max(rel_err(extended, scalar, 1.0));
    }
    Ok(CheckOutcome::bound("operator_norm_transfer", worst, opts.tol.operator_norm))
}

/// Partial sums `f_n = sum_{k<=n} h . e_k` under `A = diag(k^-2)` with unit
/// `h`: `||f_n - f_m||_A^2 = sum_{m<k<=n} k^-2` while `||[f_n, x]||` for
/// `x_k = 1/k` is the harmonic number `H_n`.
pub fn divergence_diagnostic(d: usize, n: usize, m: usize) -> Result<(f64, f64, f64, f64)> {
    let diag: Vec<f64> = (1..=d).map(|k| 1.0 / (k * k) as f64).collect();
    let a = CovOp::diagonal(&diag)?;
    let h = HVec::new(vec![1.0])?;
    let partial = |n: usize| -> Result<SeqVec> {
        let e = DVector::from_fn(d, |k, _| if k < n { 1.0 } else { 0.0 });
        bullet(&h, &e)
    };
    let x = DVector::from_fn(d, |k, _| 1.0 / (k + 1) as f64);
    let fnn = partial(n)?;
    let diff = &fnn - &partial(m)?;
    let dist_sq = inner_a(&diff, &diff, &a)?;
    let expected_dist: f64 = (m + 1..=n).map(|k| 1.0 / (k * k) as f64).sum();
    let bracket_norm = bracket(&fnn, &x)?.norm();
    let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
    Ok((dist_sq, expected_dist, bracket_norm, harmonic))
}

fn divergence(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let d = 64;
    let mut worst = 0.0_f64;
    for (n, m) in [(8, 2), (32, 16), (64, 1), (64, 63)] {
        let (dist, exp_dist, br, harm) = divergence_diagnostic(d, n, m)?;
        worst = worst.max((dist - exp_dist).abs()).max((br - harm).abs());
    }
    Ok(CheckOutcome::bound("divergence_diagnostic", worst, opts.tol.divergence))
}

fn projection(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 107);
    let mut worst = 0.0_f64;
    let mut contraction = true;
    for i in 0..20 {
        let d = 2 + i % 11;
        let a = random_spd(&mut r, d);
        let am = a.matrix();
        for cut in 1..d {
            let b = block_projection(&a, cut)?;
            let scale = am.amax().max(1.0);
            worst = worst.max((&b.p * &b.p - &b.p).amax() / scale);
            worst = worst.max((am * &b.p - &b.pt * am).amax() / scale);
            let x = random_vector(&mut r, d);
            let px = b.apply(&x);
            contraction &= a.norm(&px)? <= a.norm(&x)? * (1.0 + 1e-12);
            let mut y = random_vector(&mut r, d);
            for k in cut..d {
                y[k] = 0.0;
            }
            worst = worst.max(a.inner(&(&x - &px), &y)?.abs() / (a.norm(&x)? * a.norm(&y)?).max(1.0));
            let dims = TruncationDims::new(2, d)?;
            let phi = random_seqvec(&mut r, dims);
            let omega = random_seqvec(&mut r, dims);
            let lhs = inner_l2(&b.apply_seq(&phi)?, &omega)?;
            let rhs = inner_l2(&phi, &b.apply_transpose_seq(&omega)?)?;
            worst = worst.max(rel_err(lhs, rhs, 1.0));
            let via_op = apply_operator(&b.p, &phi)?;
            worst = worst.max((via_op.matrix() - b.apply_seq(&phi)?.matrix()).amax());
        }
    }
    let tol = opts.tol.projection;
    Ok(CheckOutcome::new(
        "block_projection",
        worst <= tol && contraction,
        format!("max error {worst:.3e} (tol {tol:.1e}), contraction holds: {contraction}"),
    ))
}

fn schur(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 108);
    let mut failures = 0;
    for i in 0..50 {
        let n = 2 + i % 7;
        let g1 = random_gram(&mut r, n, 1 + i % 4);
        let g2 = random_gram(&mut r, n, 1 + (i / 3) % 5);
        if !psd_check(&hadamard(&g1, &g2)?, opts.tol.psd)? {
            failures += 1;
        }
        let scaled = &g1 / g1.amax().max(1.0);
        if !psd_check(&hadamard_exp(&scaled), opts.tol.psd)? {
            failures += 1;
        }
    }
    Ok(CheckOutcome::new(
        "schur_product_psd",
        failures == 0,
        format!("{failures} of 100 products/exponentials failed psd_check"),
    ))
}

/// psd_check agrees with the real-coefficient criterion `c^T M c >= 0`:
/// PSD matrices give non-negative forms on random `c`, and an indefinite
/// matrix exhibits a negative form at its lowest eigenvector.
fn quadratic_form_criterion(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 109);
    let mut agree = true;
    for i in 0..30 {
        let n = 2 + i % 5;
        let g = random_gram(&mut r, n, 1 + i % n);
        let shift = if i % 2 == 0 { 0.0 } else { -(1.0 + g.amax()) };
        let m = &g + DMatrix::identity(n, n) * shift;
        let psd = psd_check(&m, opts.tol.psd)?;
        let eig = m.clone().symmetric_eigen();
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
        let v = eig.eigenvectors.column(imin).into_owned();
        let min_form = v.dot(&(&m * &v));
        let random_ok = (0..20).all(|_| {
            let c = random_vector(&mut r, n);
            c.dot(&(&m * &c)) >= -opts.tol.psd * m.amax() * c.norm_squared() * n as f64
        });
        let negative = min_form < -opts.tol.psd * m.amax();
        agree &= if psd { random_ok && !negative } else { negative };
    }
    Ok(CheckOutcome::new(
        "psd_quadratic_form_criterion",
        agree,
        format!("psd_check consistent with quadratic forms: {agree}"),
    ))
}
