use super::gen::{rng, uniform};
use super::{rel_err, CheckOutcome, VerifyOptions};
use crate::error::Result;
use crate::hermite::{
    gh_expectation, hermite_phys, hermite_prob, hermite_prob_all, prob_sum_coefficients,
    QuadratureRule, DEFAULT_ORDER,
};
use crate::wick::factorial;

const DRAWS: usize = 100;

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 6] = [
        ("orthogonality_matrix", orthogonality),
        ("cross_convention_relations", cross_relations),
        ("binomial_expansion", binomial),
        ("recurrence_vs_closed_sum", closed_sum),
        ("quadrature_rule", rule_properties),
        ("mean_zero", mean_zero),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

/// `((H_n, H_m))_{n,m<=10}` under the default rule vs `diag(n!)`.
pub fn orthogonality_error(max_n: usize) -> f64 {
    let rule = QuadratureRule::gauss_hermite(DEFAULT_ORDER);
    let mut worst = 0.0_f64;
    for n in 0..=max_n {
        for m in n..=max_n {
            let v = rule.integrate(|x| {
                let h = hermite_prob_all(m, x);
                h[n] * h[m]
            });
            let target = if n == m { factorial(n) } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

fn orthogonality(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "orthogonality_matrix",
        orthogonality_error(10),
        opts.tol.hermite_orthogonality,
    ))
}

/// Worst relative error of both convention relations over random `(n, x)`.
pub fn cross_relation_error(seed: u64, draws: usize) -> f64 {
    let mut r = rng(seed, 200);
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let n = r_index(&mut r, 13);
        let x = uniform(&mut r, -4.0, 4.0);
        let s2 = std::f64::consts::SQRT_2;
        let a = hermite_prob(n, x);
        let b = 2f64.powf(-(n as f64) / 2.0) * hermite_phys(n, x / s2);
        worst = worst.max(rel_err(b, a, 1.0));
        let c = hermite_phys(n, x);
        let d = 2f64.powf(n as f64 / 2.0) * hermite_prob(n, s2 * x);
        worst = worst.max(rel_err(d, c, 1.0));
    }
    worst
}

fn r_index(r: &mut impl rand::Rng, bound: usize) -> usize {
    r.random_range(0..bound)
}

fn cross_relations(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "cross_convention_relations",
        cross_relation_error(opts.seed, DRAWS),
        opts.tol.hermite,
    ))
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// Worst error of `H_n(αx + βy) = Σ C(n,k) α^k β^(n-k) H_k(x) H_{n-k}(y)`,
/// relative to the largest summand magnitude (the sum cancels heavily).
pub fn binomial_error(seed: u64, draws: usize) -> f64 {
    let mut r = rng(seed, 201);
    let mut worst = 0.0_f64;
    for _ in 0..draws {
        let n = r_index(&mut r, 11);
        let x = uniform(&mut r, -3.0, 3.0);
        let y = uniform(&mut r, -3.0, 3.0);
        let theta = uniform(&mut r, 0.0, std::f64::consts::TAU);
        let (alpha, beta) = (theta.cos(), theta.sin());
        let hx = hermite_prob_all(n, x);
        let hy = hermite_prob_all(n, y);
        let mut sum = 0.0;
        let mut scale = 0.0_f64;
        for k in 0..=n {
            // powi(0) == 1 covers the 0^0 = 1 convention
            let t = binomial_coefficient(n, k)
                * alpha.powi(k as i32)
                * beta.powi((n - k) as i32)
                * hx[k]
                * hy[n - k];
            sum += t;
            scale = scale.max(t.abs());
        }
        let lhs = hermite_prob(n, alpha * x + beta * y);
        worst = worst.max((lhs - sum).abs() / lhs.abs().max(scale).max(1.0));
    }
    worst
}

fn binomial(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound(
        "binomial_expansion",
        binomial_error(opts.seed, DRAWS),
        opts.tol.hermite,
    ))
}

/// Direct evaluation of the closed factorial sum.
fn closed_sum_value(n: usize, x: f64) -> (f64, f64) {
    let mut total = 0.0;
    let mut scale = 0.0_f64;
    for (k, c) in prob_sum_coefficients(n).into_iter().enumerate() {
        let t = c * x.powi((n - 2 * k) as i32);
        total += t;
        scale = scale.max(t.abs());
    }
    (total, scale)
}

fn closed_sum(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 202);
    let mut worst = 0.0_f64;
    for _ in 0..DRAWS {
        let n = r_index(&mut r, 16);
        let x = uniform(&mut r, -5.0, 5.0);
        let (sum, scale) = closed_sum_value(n, x);
        let rec = hermite_prob(n, x);
        worst = worst.max((rec - sum).abs() / rec.abs().max(scale).max(1.0));
    }
    Ok(CheckOutcome::bound("recurrence_vs_closed_sum", worst, opts.tol.hermite))
}

fn rule_properties(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut ok = true;
    let mut detail = Vec::new();
    for order in [1, 2, 5, 20, DEFAULT_ORDER, 80] {
        let rule = QuadratureRule::gauss_hermite(order);
        let positive = rule.weights().iter().all(|&w| w > 0.0);
        let sum_err = (rule.weights().iter().sum::<f64>() - 1.0).abs();
        let second = if order >= 2 { (rule.integrate(|x| x * x) - 1.0).abs() } else { 0.0 };
        let good = positive && sum_err <= 1e-12 && second <= 1e-10;
        if !good {
            detail.push(format!("order {order}: sum err {sum_err:.2e}, x^2 err {second:.2e}"));
        }
        ok &= good;
    }
    let detail = if ok {
        "weights positive, sum to 1, integrate x^2 to 1".to_string()
    } else {
        detail.join("; ")
    };
    Ok(CheckOutcome::new("quadrature_rule", ok, detail))
}

fn mean_zero(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut worst = 0.0_f64;
    for n in 1..=12 {
        worst = worst.max(gh_expectation(|x| hermite_prob(n, x), DEFAULT_ORDER).abs());
    }
    Ok(CheckOutcome::bound("mean_zero", worst, opts.tol.hermite_orthogonality))
}
