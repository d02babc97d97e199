//! Structured-text (JSON) documents: matrices as nested row-major arrays,
//! chaos expansions, and the CLI configuration files.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chaos::ChaosExpansion;
use crate::closure::{ClosureSpec, Grid, MaterialParams, MomentGrid, Source, DEFAULT_CFL};
use crate::error::{Error, Result};
use crate::seqspace::{matrix_from_rows, CovOp, SeqVec, TruncationDims};
use crate::wick::{RankOnePower, SymKernel};

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn field_matrix(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    matrix_from_rows(rows, "matrix").map_err(|e| Error::config(field, e.to_string()))
}

fn field_cov(rows: &[Vec<f64>], field: &str) -> Result<CovOp> {
    CovOp::new(field_matrix(rows, field)?).map_err(|e| Error::config(field, e.to_string()))
}

pub fn read_document<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        let field = offending_field(&msg).unwrap_or("<document>").to_string();
        Error::config(field, msg)
    })
}

// serde names the field in "missing field `x`" / "unknown field `x`".
fn offending_field(msg: &str) -> Option<&str> {
    let rest = msg
        .strip_prefix("missing field `")
        .or_else(|| msg.strip_prefix("unknown field `"))?;
    rest.split('`').next()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub coeff: f64,
    pub base: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDoc {
    pub degree: usize,
    pub terms: Vec<TermDoc>,
}

/// Serialized chaos expansion: a list of kernels.
pub type ChaosDoc = Vec<KernelDoc>;

pub fn chaos_to_doc(e: &ChaosExpansion) -> ChaosDoc {
    e.kernels()
        .map(|k| KernelDoc {
            degree: k.degree(),
            terms: k
                .terms()
                .iter()
                .map(|t| TermDoc {
                    coeff: t.coeff,
                    base: t.base.to_rows(),
                })
                .collect(),
        })
        .collect()
}

pub fn chaos_from_doc(doc: &ChaosDoc, dims: TruncationDims) -> Result<ChaosExpansion> {
    let mut e = ChaosExpansion::new(dims);
    for (i, k) in doc.iter().enumerate() {
        let mut kernel = SymKernel::zero(k.degree, dims);
        for (j, t) in k.terms.iter().enumerate() {
            let field = format!("[{i}].terms[{j}].base");
            let base = SeqVec::from_rows(&t.base).map_err(|e| Error::config(&field, e.to_string()))?;
            kernel
                .push(RankOnePower {
                    coeff: t.coeff,
                    base,
                    degree: k.degree,
                })
                .map_err(|e| Error::config(&field, e.to_string()))?;
        }
        e.add_kernel(kernel)?;
    }
    Ok(e)
}

/// `condexp` input: covariance, the kernel `f`, and conditioning directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondExpConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub f: Vec<Vec<f64>>,
    pub xs: Vec<Vec<f64>>,
}

pub struct CondExpInput {
    pub a: CovOp,
    pub f: SeqVec,
    pub xs: Vec<DVector<f64>>,
}

impl CondExpConfig {
    pub fn resolve(&self) -> Result<CondExpInput> {
        let a = field_cov(&self.a, "A")?;
        let f = SeqVec::from_rows(&self.f).map_err(|e| Error::config("f", e.to_string()))?;
        if f.dims().d != a.dim() {
            return Err(Error::config(
                "f",
                format!("has {} columns but A is {}x{}", f.dims().d, a.dim(), a.dim()),
            ));
        }
        if self.xs.is_empty() {
            return Err(Error::config("xs", "at least one conditioning vector is required"));
        }
        let mut xs = Vec::with_capacity(self.xs.len());
        for (i, x) in self.xs.iter().enumerate() {
            if x.len() != a.dim() {
                return Err(Error::config(
                    format!("xs[{i}]"),
                    format!("length {} differs from dimension {}", x.len(), a.dim()),
                ));
            }
            xs.push(DVector::from_column_slice(x));
        }
        Ok(CondExpInput { a, f, xs })
    }
}

/// `sample` input: covariance and Hilbert truncation `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(default = "one")]
    pub m: usize,
}

fn one() -> usize {
    1
}

impl SampleConfig {
    pub fn resolve(&self) -> Result<(CovOp, TruncationDims)> {
        let a = field_cov(&self.a, "A")?;
        let dims =
            TruncationDims::new(self.m, a.dim()).map_err(|e| Error::config("m", e.to_string()))?;
        Ok((a, dims))
    }
}

/// A scalar applied to every cell, or one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellField {
    Scalar(f64),
    Cells(Vec<f64>),
}

impl CellField {
    fn expand(&self, cells: usize, field: &str) -> Result<Vec<f64>> {
        match self {
            CellField::Scalar(v) => Ok(vec![*v; cells]),
            CellField::Cells(v) if v.len() == cells => Ok(v.clone()),
            CellField::Cells(v) => Err(Error::config(
                field,
                format!("has {} entries, expected {cells}", v.len()),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosureDoc {
    Pn,
    OptimalPrediction {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
    },
}

/// `closure` input document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosureConfig {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "J")]
    pub cells: usize,
    #[serde(rename = "N")]
    pub order: usize,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "one")]
    pub output_stride: usize,
    pub closure: ClosureDoc,
    #[serde(default = "zero_field")]
    pub sigma: CellField,
    #[serde(default = "zero_field")]
    pub kappa: CellField,
    #[serde(default = "zero_field")]
    pub q: CellField,
    /// Initial moments `I_0, I_1, ...`; missing moments start at zero.
    #[serde(default)]
    pub initial: Vec<CellField>,
}

fn default_cfl() -> f64 {
    DEFAULT_CFL
}

fn zero_field() -> CellField {
    CellField::Scalar(0.0)
}

pub struct ClosureRun {
    pub params: MaterialParams,
    pub spec: ClosureSpec,
    pub initial: MomentGrid,
    pub t_end: f64,
    pub dt: f64,
    pub cfl: f64,
    pub stride: usize,
}

impl ClosureConfig {
    pub fn resolve(&self) -> Result<ClosureRun> {
        let grid =
            Grid::new(self.a, self.b, self.cells).map_err(|e| Error::config("J", e.to_string()))?;
        let j = grid.cells;
        let sigma = self.sigma.expand(j, "sigma")?;
        let kappa = self.kappa.expand(j, "kappa")?;
        let q = self.q.expand(j, "q")?;
        for (name, v) in [("sigma", &sigma), ("kappa", &kappa)] {
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::config(name, "values must be finite and non-negative"));
            }
        }
        let params = MaterialParams::new(grid, sigma, kappa, Source::Cells(q))
            .map_err(|e| Error::config("q", e.to_string()))?;
        let spec = match &self.closure {
            ClosureDoc::Pn => ClosureSpec::Pn,
            ClosureDoc::OptimalPrediction { a } => ClosureSpec::OptimalPrediction {
                covariance: field_matrix(a, "closure.A")?,
            },
        };
        crate::closure::closure_row(&spec, self.order)
            .map_err(|e| Error::config("closure.A", e.to_string()))?;
        if self.initial.len() > self.order + 1 {
            return Err(Error::config(
                "initial",
                format!("{} moments given for order {}", self.initial.len(), self.order),
            ));
        }
        let mut initial = MomentGrid::zeros(j, self.order);
        for (k, field) in self.initial.iter().enumerate() {
            let v = field.expand(j, &format!("initial[{k}]"))?;
            for (cell, val) in v.into_iter().enumerate() {
                initial.values[(cell, k)] = val;
            }
        }
        for (field, v) in [("T", self.t_end), ("dt", self.dt), ("cfl", self.cfl)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if self.output_stride == 0 {
            return Err(Error::config("output_stride", "must be positive"));
        }
        Ok(ClosureRun {
            params,
            spec,
            initial,
            t_end: self.t_end,
            dt: self.dt,
            cfl: self.cfl,
            stride: self.output_stride,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::single_term;

    #[test]
    fn chaos_doc_round_trip() {
        let dims = TruncationDims::new(2, 2).unwrap();
        let mut e = single_term(1.5, SeqVec::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(), 2);
        e.add_kernel(SymKernel::constant(0.25, dims)).unwrap();
        let doc = chaos_to_doc(&e);
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.contains(r#""base":[[1.0,2.0],[3.0,4.0]]"#));
        let back: ChaosDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(chaos_from_doc(&back, dims).unwrap(), e);
    }

    #[test]
    fn closure_config_names_bad_field() {
        let text = r#"{"a":0,"b":1,"J":4,"N":1,"T":0.1,"dt":0.01,
            "closure":{"kind":"pn"},"sigma":[1,2,3]}"#;
        let cfg: ClosureConfig = serde_json::from_str(text).unwrap();
        match cfg.resolve() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "sigma"),
            Err(other) => panic!("unexpected {other}"),
            Ok(_) => panic!("accepted bad sigma"),
        }
    }

    #[test]
    fn condexp_config_checks_lengths() {
        let cfg = CondExpConfig {
            a: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            f: vec![vec![1.0, 2.0]],
            xs: vec![vec![1.0, 0.0, 0.0]],
        };
        match cfg.resolve() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "xs[0]"),
            _ => panic!("expected config error"),
        }
    }
}
