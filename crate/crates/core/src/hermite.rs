//! Hermite polynomials and Gauss-Hermite quadrature for the standard Gaussian.
//!
//! Two normalizations are provided:
//!
//! * probabilists' `H_n`, orthogonal for the standard Gaussian measure with
//!   `(H_n, H_m) = n! delta_nm`, recurrence `H_{n+1} = x H_n - n H_{n-1}`;
//! * physicists' `Ĥ_n`, recurrence `Ĥ_{n+1} = 2x Ĥ_n - 2n Ĥ_{n-1}`.
//!
//! They are linked by `H_n(x) = 2^{-n/2} Ĥ_n(x / sqrt 2)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

/// Default Gauss-Hermite order.
pub const DEFAULT_ORDER: usize = 40;

/// Probabilists' Hermite polynomial `H_n(x)`.
pub fn hermite_prob(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for k in 1..n {
                let next = x * cur - k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Physicists' Hermite polynomial `Ĥ_n(x)`.
pub fn hermite_phys(n: usize, x: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * x,
        _ => {
            let (mut prev, mut cur) = (1.0, 2.0 * x);
            for k in 1..n {
                let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// All of `H_0(x), ..., H_n(x)` in one pass.
pub fn hermite_prob_all(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n {
        let next = x * out[k] - k as f64 * out[k - 1];
        out.push(next);
    }
    out
}

/// Coefficients `c_k = (-1)^k n! / (2^k k! (n-2k)!)` of
/// `H_n(x) = sum_k c_k x^{n-2k}`, for `k = 0..=n/2`.
pub fn prob_sum_coefficients(n: usize) -> Vec<f64> {
    (0..=n / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * falling_ratio(n, k)
        })
        .collect()
}

/// `n! / (2^k k! (n-2k)!)`, the number of ways to pick `k` disjoint pairs
/// out of `n` labelled points.
pub(crate) fn falling_ratio(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    // n! / (n-2k)! = n (n-1) ... (n-2k+1)
    for i in 0..2 * k {
        v *= (n - i) as f64;
    }
    for i in 1..=k {
        v /= 2.0 * i as f64;
    }
    v
}

/// Gauss-Hermite rule for the standard Gaussian probability measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule of the given order (`order >= 1`), cached per order.
    pub fn gauss_hermite(order: usize) -> Arc<QuadratureRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
        let order = order.max(1);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&order) {
            return Arc::clone(rule);
        }
        let rule = Arc::new(Self::compute(order));
        cache
            .lock()
            .expect("quadrature cache poisoned")
            .entry(order)
            .or_insert(rule)
            .clone()
    }

    // Nodes from the Jacobi matrix of the monic recurrence, polished by
    // Newton steps and symmetrized; weights from the Christoffel function
    // w_i = 1 / sum_k h_k(x_i)^2 of the orthonormal h_k = H_k / sqrt(k!),
    // a sum of positive terms that keeps full relative accuracy.
    fn compute(q: usize) -> QuadratureRule {
        let jacobi = DMatrix::from_fn(q, q, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(|a, b| a.total_cmp(b));

        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let h = hermite_prob_all(q, *x);
                // H_q' = q H_{q-1}
                let dx = h[q] / (q as f64 * h[q - 1]);
                *x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
        }
        for i in 0..q / 2 {
            let v = 0.5 * (nodes[q - 1 - i] - nodes[i]);
            nodes[i] = -v;
            nodes[q - 1 - i] = v;
        }
        if q % 2 == 1 {
            nodes[q / 2] = 0.0;
        }

        let mut weights: Vec<f64> = nodes
            .iter()
            .map(|&x| {
                let (mut prev, mut cur) = (0.0, 1.0);
                let mut sum = 1.0;
                for k in 0..q - 1 {
                    // h_{k+1} = (x h_k - sqrt(k) h_{k-1}) / sqrt(k+1)
                    let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
                    prev = cur;
                    cur = next;
                    sum += cur * cur;
                }
                1.0 / sum
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        QuadratureRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .sum()
    }
}

/// Expectation of `g` under the standard Gaussian, exact for polynomials of
/// degree at most `2 * order - 1`.
pub fn gh_expectation(g: impl Fn(f64) -> f64, order: usize) -> f64 {
    QuadratureRule::gauss_hermite(order).integrate(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Direct factorial-sum evaluation, kept independent of the recurrence.
    fn prob_sum(n: usize, x: f64) -> f64 {
        let mut s = 0.0;
        for k in 0..=n / 2 {
            let mut c = 1.0;
            for i in 1..=n {
                c *= i as f64;
            }
            let mut den = 2f64.powi(k as i32);
            for i in 1..=k {
                den *= i as f64;
            }
            for i in 1..=(n - 2 * k) {
                den *= i as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * c / den * x.powi((n - 2 * k) as i32);
        }
        s
    }

    #[test]
    fn low_degrees() {
        for &x in &[-1.5, 0.0, 0.3, 7.0] {
            assert_eq!(hermite_prob(0, x), 1.0);
            assert_eq!(hermite_prob(1, x), x);
            assert_eq!(hermite_phys(0, x), 1.0);
        }
        assert_eq!(hermite_prob(2, 2.0), 3.0);
        assert_eq!(hermite_prob(3, 1.0), -2.0);
        assert_eq!(hermite_phys(2, 1.0), 2.0);
    }

    #[test]
    fn recurrence_matches_sum() {
        for n in 0..=15 {
            for i in 0..=20 {
                let x = -5.0 + 0.5 * i as f64;
                let r = hermite_prob(n, x);
                let s = prob_sum(n, x);
                let scale = s.abs().max(1.0);
                assert!((r - s).abs() <= 1e-9 * scale, "n={n} x={x}: {r} vs {s}");
            }
        }
    }

    #[test]
    fn sum_coefficients_match_oracle() {
        let c = prob_sum_coefficients(4);
        assert_eq!(c, vec![1.0, -6.0, 3.0]);
        let x: f64 = 0.7;
        let v: f64 = c.iter().enumerate().map(|(k, ck)| ck * x.powi(4 - 2 * k as i32)).sum();
        assert!((v - prob_sum(4, x)).abs() < 1e-14);
    }

    #[test]
    fn rule_basic_properties() {
        let rule = QuadratureRule::gauss_hermite(DEFAULT_ORDER);
        assert_eq!(rule.order(), 40);
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        let total: f64 = rule.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((rule.integrate(|x| x * x) - 1.0).abs() < 1e-10);
        assert!(Arc::ptr_eq(&rule, &QuadratureRule::gauss_hermite(40)));
    }

    #[test]
    fn orthogonality() {
        let mut fact = 1.0;
        for n in 0..=12 {
            if n > 0 {
                fact *= n as f64;
            }
            for m in 0..=12 {
                let v = gh_expectation(|x| hermite_prob(n, x) * hermite_prob(m, x), DEFAULT_ORDER);
                let expected = if n == m { fact } else { 0.0 };
                assert!((v - expected).abs() <= 1e-8 * fact.max(1.0), "n={n} m={m}: {v}");
            }
            if n >= 1 {
                assert!(gh_expectation(|x| hermite_prob(n, x), DEFAULT_ORDER).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn small_orders_are_exact_within_degree() {
        // order 3 integrates x^4 exactly: E[x^4] = 3
        assert!((gh_expectation(|x| x.powi(4), 3) - 3.0).abs() < 1e-13);
        assert!((gh_expectation(|_| 1.0, 1) - 1.0).abs() < 1e-15);
    }
}
