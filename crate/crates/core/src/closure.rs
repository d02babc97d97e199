//! 1-D radiative-transfer moment hierarchy with P_N and optimal-prediction
//! closures.
//!
//! Legendre moments `I_k(x, t)` of the intensity satisfy the tridiagonal system
//!
//! ```text
//! d_t I_k + b_{k,k-1} d_x I_{k-1} + b_{k,k+1} d_x I_{k+1} = -c_k I_k + q_k
//! b_{k,l} = (k+1)/(2k+1) delta_{k+1,l} + k/(2k+1) delta_{k-1,l}
//! c_0 = kappa, c_k = kappa + sigma (k > 0), q_0 = 2 kappa q, q_k = 0 (k > 0)
//! ```
//!
//! Moments are numbered from 0. Keeping `I_0..I_N` leaves `I_{N+1}` in the last
//! equation; the closure replaces it by `r . (I_0, ..., I_N)`. P_N uses `r = 0`;
//! optimal prediction uses the row `A_FC A_CC^{-1}` of a user-supplied
//! correlation matrix, i.e. the conditional mean of `I_{N+1}` given `I_C`. In
//! the 1-based block notation of [`crate::seqspace::block_projection`] this is
//! row `N + 1` of `P^T` for cut `N + 1`.
//!
//! Time stepping is first-order Lax-Friedrichs with periodic boundaries.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_CFL: f64 = 0.9;

/// Coefficients `b`, `c`, `q` of the truncated moment system of order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystemCoeffs {
    order: usize,
    b: DMatrix<f64>,
}

pub fn build_moment_system(order: usize) -> MomentSystemCoeffs {
    let mut b = DMatrix::zeros(order + 1, order + 2);
    for k in 0..=order {
        let denom = (2 * k + 1) as f64;
        b[(k, k + 1)] = (k + 1) as f64 / denom;
        if k > 0 {
            b[(k, k - 1)] = k as f64 / denom;
        }
    }
    MomentSystemCoeffs { order, b }
}

impl MomentSystemCoeffs {
    pub fn order(&self) -> usize {
        self.order
    }

    /// `(N+1) x (N+2)` advection coefficients; column `N+1` couples to the
    /// unresolved moment.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// `b_{k,l}` with 0-based moment indices.
    pub fn b_at(&self, k: usize, l: usize) -> f64 {
        self.b[(k, l)]
    }

    /// `c_k` for one cell.
    pub fn absorption(&self, kappa: f64, sigma: f64) -> DVector<f64> {
        DVector::from_fn(self.order + 1, |k, _| if k == 0 { kappa } else { kappa + sigma })
    }

    /// `q_k` for one cell.
    pub fn source(&self, kappa: f64, q: f64) -> DVector<f64> {
        DVector::from_fn(self.order + 1, |k, _| if k == 0 { 2.0 * kappa * q } else { 0.0 })
    }
}

/// Uniform grid of `cells` cells on `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
}

impl Grid {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidArgument(format!("grid interval ({a}, {b}) is empty")));
        }
        if cells < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 cells".into()));
        }
        Ok(Self { a, b, cells })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }
}

/// Source term `q(x, t)`.
#[derive(Clone)]
pub enum Source {
    Cells(Vec<f64>),
    Function(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Source::Cells(v) => f.debug_tuple("Cells").field(v).finish(),
            Source::Function(_) => f.write_str("Function(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MaterialParams {
    grid: Grid,
    sigma: Vec<f64>,
    kappa: Vec<f64>,
    source: Source,
}

impl MaterialParams {
    pub fn new(grid: Grid, sigma: Vec<f64>, kappa: Vec<f64>, source: Source) -> Result<Self> {
        let j = grid.cells;
        for (name, v) in [("sigma", &sigma), ("kappa", &kappa)] {
            if v.len() != j {
                return Err(Error::dims("MaterialParams", j, v.len()));
            }
            if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0")));
            }
        }
        if let Source::Cells(q) = &source {
            if q.len() != j {
                return Err(Error::dims("MaterialParams", j, q.len()));
            }
        }
        Ok(Self {
            grid,
            sigma,
            kappa,
            source,
        })
    }

    /// Spatially constant coefficients.
    pub fn uniform(grid: Grid, sigma: f64, kappa: f64, q: f64) -> Result<Self> {
        let j = grid.cells;
        Self::new(grid, vec![sigma; j], vec![kappa; j], Source::Cells(vec![q; j]))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    fn q_at(&self, j: usize, t: f64) -> f64 {
        match &self.source {
            Source::Cells(q) => q[j],
            Source::Function(f) => f(self.grid.center(j), t),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClosureSpec {
    Pn,
    /// Correlation matrix of the moments `I_0, I_1, ...`, at least `(N+2) x (N+2)`.
    OptimalPrediction { covariance: DMatrix<f64> },
}

/// Row `r` with `E[I_{N+1} | I_0..I_N] = r . I_C`.
pub fn closure_row(spec: &ClosureSpec, order: usize) -> Result<DVector<f64>> {
    match spec {
        ClosureSpec::Pn => Ok(DVector::zeros(order + 1)),
        ClosureSpec::OptimalPrediction { covariance } => {
            let size = order + 2;
            if covariance.nrows() < size || covariance.ncols() < size {
                return Err(Error::dims(
                    "closure_row",
                    format!("at least {size}x{size}"),
                    format!("{}x{}", covariance.nrows(), covariance.ncols()),
                ));
            }
            let acc = covariance.view((0, 0), (order + 1, order + 1)).into_owned();
            let acf = covariance.view((0, order + 1), (order + 1, 1)).into_owned();
            let afc = covariance.view((order + 1, 0), (1, order + 1)).transpose();
            let scale = covariance.amax();
            if (&acf - &afc).amax() > 1e-12 * scale {
                return Err(Error::NotSymmetric {
                    asymmetry: (&acf - &afc).amax(),
                    allowed: 1e-12 * scale,
                });
            }
            let chol = Cholesky::new(acc).ok_or(Error::SingularBlock("closure_row"))?;
            // r^T = A_FC A_CC^{-1}  <=>  A_CC r = A_CF
            Ok(chol.solve(&afc).column(0).into_owned())
        }
    }
}

/// Advection matrix of the closed system, `(N+1) x (N+1)`:
/// `B_closed = B[:, 0..=N] + B[:, N+1] r^T`.
pub fn closed_advection_matrix(coeffs: &MomentSystemCoeffs, row: &DVector<f64>) -> DMatrix<f64> {
    let n = coeffs.order;
    let mut m = coeffs.b.columns(0, n + 1).into_owned();
    let coupling = coeffs.b[(n, n + 1)];
    for l in 0..=n {
        m[(n, l)] += coupling * row[l];
    }
    m
}

/// Largest eigenvalue modulus of a real square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// The closed system for one run: coefficients, closure row, folded advection
/// matrix and its spectral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedSystem {
    coeffs: MomentSystemCoeffs,
    row: DVector<f64>,
    advection: DMatrix<f64>,
    spectral_radius: f64,
}

impl ClosedSystem {
    pub fn new(order: usize, spec: &ClosureSpec) -> Result<Self> {
        let coeffs = build_moment_system(order);
        let row = closure_row(spec, order)?;
        let advection = closed_advection_matrix(&coeffs, &row);
        let spectral_radius = spectral_radius(&advection);
        Ok(Self {
            coeffs,
            row,
            advection,
            spectral_radius,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.order
    }

    pub fn coeffs(&self) -> &MomentSystemCoeffs {
        &self.coeffs
    }

    pub fn row(&self) -> &DVector<f64> {
        &self.row
    }

    pub fn advection(&self) -> &DMatrix<f64> {
        &self.advection
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// `cfl * dx / rho(B_closed)`.
    pub fn max_stable_dt(&self, dx: f64, cfl: f64) -> f64 {
        if self.spectral_radius == 0.0 {
            f64::INFINITY
        } else {
            cfl * dx / self.spectral_radius
        }
    }
}

/// Moments on the grid at time `t`; row `j` holds `I_0..I_N` in cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentGrid {
    pub t: f64,
    pub values: DMatrix<f64>,
}

impl MomentGrid {
    pub fn zeros(cells: usize, order: usize) -> Self {
        Self {
            t: 0.0,
            values: DMatrix::zeros(cells, order + 1),
        }
    }

    /// Fills moment `k` from `f(x)` at the cell centers.
    pub fn with_moment(mut self, grid: &Grid, k: usize, f: impl Fn(f64) -> f64) -> Self {
        for j in 0..grid.cells {
            self.values[(j, k)] = f(grid.center(j));
        }
        self
    }

    pub fn cells(&self) -> usize {
        self.values.nrows()
    }

    pub fn order(&self) -> usize {
        self.values.ncols() - 1
    }

    /// `sum_j I_k(x_j)`.
    pub fn moment_sum(&self, k: usize) -> f64 {
        self.values.column(k).sum()
    }

    fn first_non_finite(&self) -> Option<(usize, usize)> {
        for j in 0..self.values.nrows() {
            for k in 0..self.values.ncols() {
                if !self.values[(j, k)].is_finite() {
                    return Some((j, k));
                }
            }
        }
        None
    }
}

/// One explicit Lax-Friedrichs step with periodic boundaries.
pub fn step(
    state: &MomentGrid,
    system: &ClosedSystem,
    params: &MaterialParams,
    dt: f64,
    cfl: f64,
) -> Result<MomentGrid> {
    let grid = params.grid;
    let cells = grid.cells;
    if state.cells() != cells || state.order() != system.order() {
        return Err(Error::dims(
            "step",
            format!("{}x{}", cells, system.order() + 1),
            format!("{}x{}", state.cells(), state.order() + 1),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step {dt} must be positive")));
    }
    let dx = grid.dx();
    let limit = system.max_stable_dt(dx, cfl);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }

    let u = &state.values;
    let flux = u * system.advection.transpose();
    let lambda = dt / (2.0 * dx);
    let coeffs = &system.coeffs;
    let mut next = DMatrix::zeros(cells, u.ncols());
    for j in 0..cells {
        let jm = (j + cells - 1) % cells;
        let jp = (j + 1) % cells;
        let c = coeffs.absorption(params.kappa[j], params.sigma[j]);
        let q = coeffs.source(params.kappa[j], params.q_at(j, state.t));
        for k in 0..u.ncols() {
            next[(j, k)] = 0.5 * (u[(jm, k)] + u[(jp, k)]) - lambda * (flux[(jp, k)] - flux[(jm, k)])
                + dt * (q[k] - c[k] * u[(j, k)]);
        }
    }
    let out = MomentGrid {
        t: state.t + dt,
        values: next,
    };
    if let Some((cell, moment)) = out.first_non_finite() {
        return Err(Error::NonFinite {
            t: out.t,
            cell,
            moment,
        });
    }
    Ok(out)
}

/// Integrates to `t_end`, returning the initial state, every `stride`-th
/// state, and the final state. The last step is shortened to land on `t_end`.
pub fn solve_closure(
    initial: &MomentGrid,
    params: &MaterialParams,
    spec: &ClosureSpec,
    t_end: f64,
    dt: f64,
    stride: usize,
    cfl: f64,
) -> Result<Vec<MomentGrid>> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("final time {t_end} must be positive")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("output stride must be positive".into()));
    }
    let system = ClosedSystem::new(initial.order(), spec)?;
    let steps = ((t_end - initial.t) / dt - 1e-9).ceil().max(1.0) as usize;
    let mut snapshots = vec![initial.clone()];
    let mut state = initial.clone();
    for s in 1..=steps {
        let h = if s == steps { t_end - state.t } else { dt };
        if h <= 0.0 {
            break;
        }
        state = step(&state, &system, params, h, cfl)?;
        if s % stride == 0 && s != steps {
            snapshots.push(state.clone());
        }
    }
    snapshots.push(state);
    Ok(snapshots)
}

/// CSV with columns `t, x, I_0..I_N`, one row per snapshot and cell.
pub fn write_csv<W: Write>(snapshots: &[MomentGrid], grid: &Grid, mut out: W) -> Result<()> {
    let Some(first) = snapshots.first() else {
        return Ok(());
    };
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend((0..=first.order()).map(|k| format!("I_{k}")));
    writeln!(out, "{}", header.join(","))?;
    for snap in snapshots {
        for j in 0..snap.cells() {
            let mut row = vec![snap.t.to_string(), grid.center(j).to_string()];
            row.extend(snap.values.row(j).iter().map(|v| v.to_string()));
            writeln!(out, "{}", row.join(","))?;
        }
    }
    Ok(())
}

/// Discrete `L^2` distance between the first `moments` moments of two states
/// on the same grid.
pub fn l2_distance(a: &MomentGrid, b: &MomentGrid, moments: usize, dx: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..a.cells() {
        for k in 0..moments {
            s += (a.values[(j, k)] - b.values[(j, k)]).powi(2);
        }
    }
    (s * dx).sqrt()
}
