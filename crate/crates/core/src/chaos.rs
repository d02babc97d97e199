//! Chaos expansions and conditional expectations.
//!
//! An expansion `F = sum_n :<f^(n), W^{(x)n}>:` is a finite map from degree to
//! polarized kernel. Conditioning on the sigma-algebra generated by
//! `<psi_1, .>, ..., <psi_q, .>` for an A-orthonormal family acts kernel-wise:
//! every power `phi^{(x)n}` becomes `(P phi)^{(x)n}` with
//! `P phi = sum_k (phi, psi_k)_A psi_k`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::measure::{check_orthonormal, pairing, McEstimate, SampleBatch};
use crate::seqspace::{
    bracket, bullet, gram_schmidt_a, inner_a, orthonormalize, CovOp, HVec, SeqVec,
    TruncationDims, GRAM_SCHMIDT_TOL,
};
use crate::wick::{factorial, kernel_inner_a, wick_eval, RankOnePower, SymKernel};

/// Orthonormality tolerance for conditioning sets.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Highest total degree allowed for a test polynomial in [`mc_cond_check`].
pub const MAX_TEST_DEGREE: u32 = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosExpansion {
    dims: TruncationDims,
    kernels: BTreeMap<usize, SymKernel>,
}

impl ChaosExpansion {
    pub fn new(dims: TruncationDims) -> Self {
        Self {
            dims,
            kernels: BTreeMap::new(),
        }
    }

    /// Adds `kernel` to the chaos of its degree, merging term lists.
    pub fn add_kernel(&mut self, kernel: SymKernel) -> Result<()> {
        if kernel.dims() != self.dims {
            return Err(Error::dims("ChaosExpansion::add_kernel", self.dims, kernel.dims()));
        }
        match self.kernels.get_mut(&kernel.degree()) {
            Some(existing) => existing.extend(&kernel)?,
            None => {
                self.kernels.insert(kernel.degree(), kernel);
            }
        }
        Ok(())
    }

    pub fn with_kernel(mut self, kernel: SymKernel) -> Result<Self> {
        self.add_kernel(kernel)?;
        Ok(self)
    }

    pub fn add_term(&mut self, coeff: f64, base: SeqVec, degree: usize) -> Result<()> {
        self.add_kernel(SymKernel::power(coeff, base, degree))
    }

    pub fn dims(&self) -> TruncationDims {
        self.dims
    }

    pub fn kernel(&self, degree: usize) -> Option<&SymKernel> {
        self.kernels.get(&degree)
    }

    pub fn kernels(&self) -> impl Iterator<Item = &SymKernel> {
        self.kernels.values()
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.kernels.keys().next_back().copied()
    }

    pub fn map_kernels(&self, mut f: impl FnMut(&SymKernel) -> Result<SymKernel>) -> Result<Self> {
        let mut out = ChaosExpansion::new(self.dims);
        for k in self.kernels.values() {
            out.add_kernel(f(k)?)?;
        }
        Ok(out)
    }
}

/// `F(W) = sum_n :<f^(n), W^{(x)n}>:`.
pub fn eval_expansion(e: &ChaosExpansion, a: &CovOp, w: &SeqVec) -> Result<f64> {
    if w.dims() != e.dims {
        return Err(Error::dims("eval_expansion", e.dims, w.dims()));
    }
    e.kernels.values().try_fold(0.0, |acc, k| Ok(acc + wick_eval(k, a, w)?))
}

/// `E[F G] = sum_n n! (f^(n), g^(n))_A`.
pub fn chaos_inner(e1: &ChaosExpansion, e2: &ChaosExpansion, a: &CovOp) -> Result<f64> {
    if e1.dims != e2.dims {
        return Err(Error::dims("chaos_inner", e1.dims, e2.dims));
    }
    let mut total = 0.0;
    for (n, k1) in &e1.kernels {
        if let Some(k2) = e2.kernels.get(n) {
            total += factorial(*n) * kernel_inner_a(k1, k2, a)?;
        }
    }
    Ok(total)
}

pub fn chaos_norm(e: &ChaosExpansion, a: &CovOp) -> Result<f64> {
    Ok(chaos_inner(e, e, a)?.max(0.0).sqrt())
}

/// An A-orthonormal family `psi_1, ..., psi_q` generating the conditioning
/// sigma-algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditioningSet {
    basis: Vec<SeqVec>,
}

impl ConditioningSet {
    /// Accepts an already A-orthonormal family (checked within 1e-8).
    pub fn new(basis: Vec<SeqVec>, a: &CovOp) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::EmptyInput("ConditioningSet::new"));
        }
        check_orthonormal(&basis, a, ORTHONORMAL_TOL, "ConditioningSet::new")?;
        Ok(Self { basis })
    }

    /// A-orthonormalizes an arbitrary spanning family first.
    pub fn from_spanning(vectors: &[SeqVec], a: &CovOp) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyInput("ConditioningSet::from_spanning"));
        }
        let dims = vectors[0].dims();
        if let Some(bad) = vectors.iter().find(|v| v.dims() != dims) {
            return Err(Error::dims("ConditioningSet::from_spanning", dims, bad.dims()));
        }
        if dims.d != a.dim() {
            return Err(Error::dims("ConditioningSet::from_spanning", a.dim(), dims.d));
        }
        let basis = orthonormalize(
            vectors,
            |u, v| inner_a(u, v, a).expect("dimensions checked"),
            |u, c, v| u + &(v * c),
            |u, s| u * s,
            GRAM_SCHMIDT_TOL,
        );
        if basis.is_empty() {
            return Err(Error::DegenerateSpan("ConditioningSet::from_spanning"));
        }
        Ok(Self { basis })
    }

    /// The family `{h_i . x^_k}` for the standard basis `h_i` of `H` and an
    /// A-orthonormalization `x^_k` of `xs`; it generates the same
    /// sigma-algebra as conditioning on the sequence directions `xs`.
    pub fn from_sequence_directions(
        xs: &[DVector<f64>],
        dims: TruncationDims,
        a: &CovOp,
    ) -> Result<Self> {
        let xhat = gram_schmidt_a(xs, a, GRAM_SCHMIDT_TOL)?;
        let mut basis = Vec::with_capacity(xhat.len() * dims.m);
        for x in &xhat {
            for i in 0..dims.m {
                let mut h = DVector::zeros(dims.m);
                h[i] = 1.0;
                basis.push(bullet(&HVec::from_vector(h)?, x)?);
            }
        }
        Ok(Self { basis })
    }

    pub fn basis(&self) -> &[SeqVec] {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `P phi = sum_k (phi, psi_k)_A psi_k`.
    pub fn project(&self, phi: &SeqVec, a: &CovOp) -> Result<SeqVec> {
        let mut out = SeqVec::zeros(phi.dims());
        for psi in &self.basis {
            let c = inner_a(phi, psi, a)?;
            out = &out + &(psi * c);
        }
        Ok(out)
    }

    /// Coordinates `(<psi_1, W>, ..., <psi_q, W>)`.
    pub fn coordinates(&self, w: &SeqVec) -> Result<Vec<f64>> {
        self.basis.iter().map(|psi| pairing(psi, w)).collect()
    }
}

/// Kernel-wise projection `E[F | G]`.
pub fn cond_exp_chaos(e: &ChaosExpansion, c: &ConditioningSet, a: &CovOp) -> Result<ChaosExpansion> {
    if let Some(psi) = c.basis.first() {
        if psi.dims() != e.dims {
            return Err(Error::dims("cond_exp_chaos", e.dims, psi.dims()));
        }
    }
    e.map_kernels(|k| {
        if k.degree() == 0 {
            return Ok(k.clone());
        }
        k.map_bases(|phi| c.project(phi, a))
    })
}

/// Kernel of `E[<f, .> | <h . x_1, .>, ..., <h . x_n, .> for all h]`:
/// `P f = sum_k [f, A x^_k] . x^_k` after A-orthonormalizing the `x_k`.
pub fn cond_exp_monomial(f: &SeqVec, xs: &[DVector<f64>], a: &CovOp) -> Result<SeqVec> {
    if f.dims().d != a.dim() {
        return Err(Error::dims("cond_exp_monomial", a.dim(), f.dims().d));
    }
    let xhat = gram_schmidt_a(xs, a, GRAM_SCHMIDT_TOL)?;
    let mut out = SeqVec::zeros(f.dims());
    for x in &xhat {
        let coeff = bracket(f, &a.apply(x)?)?;
        out = &out + &bullet(&coeff, x)?;
    }
    Ok(out)
}

/// Polynomial `g(y_1, ..., y_q) = sum_i c_i prod_k y_k^{e_ik}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPolynomial {
    terms: Vec<(f64, Vec<u32>)>,
}

impl TestPolynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let p = Self { terms };
        if p.degree() > MAX_TEST_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "test polynomial degree {} exceeds {MAX_TEST_DEGREE}",
                p.degree()
            )));
        }
        Ok(p)
    }

    pub fn one() -> Self {
        Self {
            terms: vec![(1.0, Vec::new())],
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for (c, exps) in &self.terms {
            if exps.len() > y.len() {
                return Err(Error::dims("TestPolynomial::eval", y.len(), exps.len()));
            }
            let mut v = *c;
            for (yk, &e) in y.iter().zip(exps) {
                v *= yk.powi(e as i32);
            }
            total += v;
        }
        Ok(total)
    }
}

/// Monte Carlo estimate of `E[(F - E[F|G]) g(<psi_1, W>, ...)]`, which is
/// zero for every `G`-measurable test function.
pub fn mc_cond_check(
    e: &ChaosExpansion,
    c: &ConditioningSet,
    a: &CovOp,
    g: &TestPolynomial,
    batch: &SampleBatch,
) -> Result<McEstimate> {
    if batch.is_empty() {
        return Err(Error::EmptyInput("mc_cond_check"));
    }
    let projected = cond_exp_chaos(e, c, a)?;
    let values = batch
        .samples()
        .iter()
        .map(|w| {
            let resid = eval_expansion(e, a, w)? - eval_expansion(&projected, a, w)?;
            Ok(resid * g.eval(&c.coordinates(w)?)?)
        })
        .collect::<Result<Vec<_>>>()?;
    McEstimate::from_values(&values)
}

/// Builds a single-term expansion `coeff * :<base^{(x)degree}, .>:`.
pub fn single_term(coeff: f64, base: SeqVec, degree: usize) -> ChaosExpansion {
    let dims = base.dims();
    let mut e = ChaosExpansion::new(dims);
    e.kernels.insert(
        degree,
        SymKernel::from_terms(
            degree,
            dims,
            vec![RankOnePower {
                coeff,
                base,
                degree,
            }],
        )
        .expect("single term is consistent"),
    );
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn example_cov() -> CovOp {
        CovOp::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.5, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap()
    }

    fn f() -> SeqVec {
        SeqVec::from_rows(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 4.0]]).unwrap()
    }

    #[test]
    fn worked_example_single_direction() {
        let a = example_cov();
        let pf = cond_exp_monomial(&f(), &[dvector![1.0, 0.0, 0.0]], &a).unwrap();
        let f1 = f().column(0).into_vector();
        let f2 = f().column(1).into_vector();
        let expected = bullet(
            &HVec::from_vector(&f1 + &f2 * 0.5).unwrap(),
            &dvector![1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((pf.matrix() - expected.matrix()).amax() < 1e-12);
    }

    #[test]
    fn worked_example_two_directions() {
        let a = example_cov();
        let pf = cond_exp_monomial(&f(), &[dvector![1.0, 0.0, 0.0], dvector![0.0, 1.0, 0.0]], &a)
            .unwrap();
        let mut expected = f().into_matrix();
        expected.column_mut(2).fill(0.0);
        assert!((pf.matrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn full_span_leaves_f() {
        let a = example_cov();
        let xs = vec![dvector![1.0, 1.0, 0.0], dvector![0.0, 1.0, 0.0], dvector![0.3, 0.0, 1.0]];
        let pf = cond_exp_monomial(&f(), &xs, &a).unwrap();
        assert!((pf.matrix() - f().matrix()).amax() < 1e-12);
    }

    #[test]
    fn degenerate_conditioning() {
        let a = example_cov();
        assert!(matches!(
            cond_exp_monomial(&f(), &[DVector::zeros(3)], &a),
            Err(Error::DegenerateSpan(_))
        ));
    }

    #[test]
    fn cond_exp_chaos_cases() {
        let a = example_cov();
        let dims = TruncationDims::new(2, 3).unwrap();
        let psi = SeqVec::unit(dims, 0, 2);
        let c = ConditioningSet::new(vec![psi.clone()], &a).unwrap();

        let inside = single_term(2.0, &psi * 3.0, 3);
        let out = cond_exp_chaos(&inside, &c, &a).unwrap();
        let base = &out.kernel(3).unwrap().terms()[0].base;
        assert!((base.matrix() - (&psi * 3.0).matrix()).amax() < 1e-15);

        let orth = single_term(1.0, SeqVec::unit(dims, 1, 0), 2);
        let out = cond_exp_chaos(&orth, &c, &a).unwrap();
        assert!(out.kernel(2).unwrap().terms()[0].base.is_zero());

        let mut e = ChaosExpansion::new(dims);
        e.add_kernel(SymKernel::constant(4.5, dims)).unwrap();
        let out = cond_exp_chaos(&e, &c, &a).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn conditioning_set_validation() {
        let a = example_cov();
        let dims = TruncationDims::new(1, 3).unwrap();
        let e1 = SeqVec::unit(dims, 0, 0);
        let e2 = SeqVec::unit(dims, 0, 1);
        assert!(matches!(
            ConditioningSet::new(vec![e1.clone(), e2.clone()], &a),
            Err(Error::NotOrthonormal { .. })
        ));
        let c = ConditioningSet::from_spanning(&[e1, e2], &a).unwrap();
        assert_eq!(c.len(), 2);
        check_orthonormal(c.basis(), &a, 1e-12, "test").unwrap();
    }

    #[test]
    fn chaos_inner_examples() {
        let a = example_cov();
        let dims = TruncationDims::new(1, 3).unwrap();
        let phi = SeqVec::from_rows(&[vec![1.0, -1.0, 2.0]]).unwrap();
        let e2 = single_term(1.0, phi.clone(), 2);
        let e3 = single_term(1.0, phi.clone(), 3);
        assert_eq!(chaos_inner(&e2, &e3, &a).unwrap(), 0.0);
        let n = inner_a(&phi, &phi, &a).unwrap();
        assert!((chaos_inner(&e3, &e3, &a).unwrap() - 6.0 * n.powi(3)).abs() < 1e-10);

        let mut c = ChaosExpansion::new(dims);
        c.add_kernel(SymKernel::constant(2.5, dims)).unwrap();
        let w = SeqVec::from_rows(&[vec![0.1, 0.2, 0.3]]).unwrap();
        assert_eq!(eval_expansion(&c, &a, &w).unwrap(), 2.5);
    }

    #[test]
    fn test_polynomial_degree_limit() {
        assert!(TestPolynomial::new(vec![(1.0, vec![4, 3])]).is_err());
        let g = TestPolynomial::new(vec![(2.0, vec![1, 2]), (-1.0, vec![])]).unwrap();
        assert_eq!(g.degree(), 3);
        assert_eq!(g.eval(&[3.0, 2.0]).unwrap(), 23.0);
        assert_eq!(TestPolynomial::one().eval(&[]).unwrap(), 1.0);
    }
}
