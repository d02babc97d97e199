use nalgebra::DMatrix;
use rand::Rng;

use super::gen::{random_seqvec, random_spd, rng, uniform};
use super::{CheckOutcome, VerifyOptions};
use crate::closure::{
    build_moment_system, closure_row, l2_distance, solve_closure, step, ClosedSystem, ClosureSpec,
    Grid, MaterialParams, MomentGrid, DEFAULT_CFL,
};
use crate::error::{Error, Result};
use crate::seqspace::{block_projection, inner_l2, TruncationDims};

pub(super) fn run(opts: &VerifyOptions) -> Vec<CheckOutcome> {
    let checks: [(&str, fn(&VerifyOptions) -> Result<CheckOutcome>); 10] = [
        ("coefficients", coefficients),
        ("pn_equals_identity_prediction", pn_vs_identity),
        ("block_diagonal_equals_pn", block_diagonal),
        ("conservation", conservation),
        ("row_scale_invariance", scale_invariance),
        ("row_matches_block_projection", row_vs_projection),
        ("weak_form_identity", weak_form),
        ("source_enters_moment_zero", source_only_zero),
        ("cfl_enforced", cfl_enforced),
        ("refinement_study", refinement),
    ];
    checks
        .iter()
        .map(|(name, f)| CheckOutcome::from_result(name, f(opts)))
        .collect()
}

fn coefficients(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    let c = build_moment_system(12);
    let mut ok = c.b_at(0, 1) == 1.0 && c.b_at(1, 0) == 1.0 / 3.0 && c.b_at(1, 2) == 2.0 / 3.0;
    for k in 0..=12 {
        for l in 0..=13 {
            let expected = if l == k + 1 {
                (k + 1) as f64 / (2 * k + 1) as f64
            } else if l + 1 == k {
                k as f64 / (2 * k + 1) as f64
            } else {
                0.0
            };
            ok &= c.b_at(k, l) == expected;
        }
    }
    Ok(CheckOutcome::new("coefficients", ok, format!("b values exact: {ok}")))
}

/// Periodic bump problem used by several checks.
fn bump_problem(cells: usize, order: usize, sigma: f64, kappa: f64) -> Result<(MaterialParams, MomentGrid)> {
    let grid = Grid::new(-1.0, 1.0, cells)?;
    let params = MaterialParams::uniform(grid, sigma, kappa, 0.0)?;
    let init = MomentGrid::zeros(cells, order)
        .with_moment(&grid, 0, |x| (-x * x / (2.0 * 0.15 * 0.15)).exp())
        .with_moment(&grid, 1, |x| 0.3 * x * (-x * x / (2.0 * 0.2 * 0.2)).exp());
    Ok((params, init))
}

fn run_steps(init: &MomentGrid, params: &MaterialParams, spec: &ClosureSpec, steps: usize) -> Result<Vec<MomentGrid>> {
    let system = ClosedSystem::new(init.order(), spec)?;
    let dt = system.max_stable_dt(params.grid().dx(), DEFAULT_CFL);
    let mut out = vec![init.clone()];
    for _ in 0..steps {
        let next = step(out.last().expect("non-empty"), &system, params, dt, DEFAULT_CFL)?;
        out.push(next);
    }
    Ok(out)
}

fn max_trajectory_diff(a: &[MomentGrid], b: &[MomentGrid]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (&x.values - &y.values).amax())
        .fold(0.0, f64::max)
}

/// Largest difference between P_N and identity-covariance optimal
/// prediction over a 200-step run with `J = 100`, `N = 3`.
pub fn pn_identity_difference() -> Result<f64> {
    let (params, init) = bump_problem(100, 3, 1.0, 0.1)?;
    let pn = run_steps(&init, &params, &ClosureSpec::Pn, 200)?;
    let op = run_steps(
        &init,
        &params,
        &ClosureSpec::OptimalPrediction { covariance: DMatrix::identity(5, 5) },
        200,
    )?;
    Ok(max_trajectory_diff(&pn, &op))
}

fn pn_vs_identity(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound("pn_equals_identity_prediction", pn_identity_difference()?, opts.tol.closure))
}

fn block_diagonal(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 600);
    let mut identical = true;
    for order in [1, 2, 4] {
        let c = random_spd(&mut r, order + 1);
        let mut cov = DMatrix::zeros(order + 3, order + 3);
        cov.view_mut((0, 0), (order + 1, order + 1)).copy_from(c.matrix());
        cov[(order + 1, order + 1)] = 2.0;
        cov[(order + 2, order + 2)] = 1.0;
        let (params, init) = bump_problem(40, order, 0.5, 0.2)?;
        let pn = run_steps(&init, &params, &ClosureSpec::Pn, 50)?;
        let op = run_steps(&init, &params, &ClosureSpec::OptimalPrediction { covariance: cov }, 50)?;
        identical &= pn.iter().zip(&op).all(|(x, y)| x.values == y.values);
    }
    Ok(CheckOutcome::new(
        "block_diagonal_equals_pn",
        identical,
        format!("bitwise identical trajectories: {identical}"),
    ))
}

/// Worst change of a per-moment cell sum over 200 lossless steps, for P_N
/// and a random optimal-prediction closure.
pub fn conservation_error(seed: u64) -> Result<f64> {
    let mut r = rng(seed, 601);
    let order = 3;
    let cov = random_spd(&mut r, order + 2).matrix().clone();
    let mut worst = 0.0_f64;
    for spec in [ClosureSpec::Pn, ClosureSpec::OptimalPrediction { covariance: cov }] {
        let (params, init) = bump_problem(100, order, 0.0, 0.0)?;
        let traj = run_steps(&init, &params, &spec, 200)?;
        let last = traj.last().expect("non-empty");
        for k in 0..=order {
            worst = worst.max((last.moment_sum(k) - init.moment_sum(k)).abs());
        }
    }
    Ok(worst)
}

fn conservation(opts: &VerifyOptions) -> Result<CheckOutcome> {
    Ok(CheckOutcome::bound("conservation", conservation_error(opts.seed)?, opts.tol.closure))
}

fn scale_invariance(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 602);
    let mut worst = 0.0_f64;
    for i in 0..20 {
        let order = i % 5;
        let cov = random_spd(&mut r, order + 2).matrix().clone();
        let s = uniform(&mut r, 0.01, 100.0);
        let r1 = closure_row(&ClosureSpec::OptimalPrediction { covariance: cov.clone() }, order)?;
        let r2 = closure_row(&ClosureSpec::OptimalPrediction { covariance: cov * s }, order)?;
        worst = worst.max((&r1 - &r2).amax() / r1.amax().max(1.0));
    }
    Ok(CheckOutcome::bound("row_scale_invariance", worst, opts.tol.closure))
}

/// The closure row is the unresolved row of `P^T` for the cut after the
/// resolved moments.
fn row_vs_projection(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 603);
    let mut worst = 0.0_f64;
    for order in 0..8 {
        let a = random_spd(&mut r, order + 2);
        let row = closure_row(&ClosureSpec::OptimalPrediction { covariance: a.matrix().clone() }, order)?;
        let blocks = block_projection(&a, order + 1)?;
        for l in 0..=order {
            worst = worst.max((row[l] - blocks.pt[(order + 1, l)]).abs());
        }
    }
    Ok(CheckOutcome::bound("row_matches_block_projection", worst, opts.tol.projection))
}

fn weak_form(opts: &VerifyOptions) -> Result<CheckOutcome> {
    let mut r = rng(opts.seed, 604);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let d = r.random_range(2..=9);
        let a = random_spd(&mut r, d);
        let cut = r.random_range(1..d);
        let blocks = block_projection(&a, cut)?;
        let dims = TruncationDims::new(r.random_range(1..=3), d)?;
        let phi = random_seqvec(&mut r, dims);
        let omega = random_seqvec(&mut r, dims);
        let lhs = inner_l2(&blocks.apply_seq(&phi)?, &omega)?;
        let rhs = inner_l2(&phi, &blocks.apply_transpose_seq(&omega)?)?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    Ok(CheckOutcome::bound("weak_form_identity", worst, opts.tol.closure))
}

fn source_only_zero(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    let grid = Grid::new(0.0, 1.0, 50)?;
    let params = MaterialParams::uniform(grid, 0.0, 0.5, 3.0)?;
    let snaps = solve_closure(&MomentGrid::zeros(50, 4), &params, &ClosureSpec::Pn, 0.3, 0.01, 10, DEFAULT_CFL)?;
    let mut grows = true;
    for w in snaps.windows(2) {
        grows &= w[1].moment_sum(0) > w[0].moment_sum(0);
    }
    let last = snaps.last().expect("non-empty");
    let higher_zero = (1..=4).all(|k| last.values.column(k).iter().all(|&v| v == 0.0));
    Ok(CheckOutcome::new(
        "source_enters_moment_zero",
        grows && higher_zero,
        format!("I_0 increasing: {grows}, higher moments zero: {higher_zero}"),
    ))
}

fn cfl_enforced(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    let (params, init) = bump_problem(20, 3, 0.0, 0.0)?;
    let system = ClosedSystem::new(3, &ClosureSpec::Pn)?;
    let limit = system.max_stable_dt(params.grid().dx(), DEFAULT_CFL);
    let rejected = matches!(
        step(&init, &system, &params, limit * 1.01, DEFAULT_CFL),
        Err(Error::Cfl { .. })
    );
    let accepted = step(&init, &system, &params, limit, DEFAULT_CFL).is_ok();
    Ok(CheckOutcome::new(
        "cfl_enforced",
        rejected && accepted,
        format!("dt above limit rejected: {rejected}, dt at limit accepted: {accepted}"),
    ))
}

/// Runs the P_N hierarchy for each order on the same smooth bump and returns
/// the `L^2` differences of `I_0, I_1` between consecutive orders.
pub fn refinement_differences(orders: &[usize]) -> Result<Vec<f64>> {
    let cells = 200;
    let t_end = 0.4;
    let max_order = *orders.iter().max().unwrap_or(&0);
    let rho = ClosedSystem::new(max_order, &ClosureSpec::Pn)?.spectral_radius();
    let grid = Grid::new(-1.0, 1.0, cells)?;
    // one common time step, stable for every order
    let dt = DEFAULT_CFL * grid.dx() / rho.max(1.0);
    let finals = orders
        .iter()
        .map(|&n| {
            let (params, init) = bump_problem(cells, n, 1.0, 0.0)?;
            let snaps = solve_closure(&init, &params, &ClosureSpec::Pn, t_end, dt, usize::MAX, DEFAULT_CFL)?;
            Ok(snaps.last().expect("non-empty").clone())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finals
        .windows(2)
        .map(|w| l2_distance(&w[0], &w[1], 2, grid.dx()))
        .collect())
}

fn refinement(_opts: &VerifyOptions) -> Result<CheckOutcome> {
    let diffs = refinement_differences(&[3, 5, 7])?;
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    Ok(CheckOutcome::new(
        "refinement_study",
        decreasing,
        format!("L2 differences N=3->5: {:.3e}, N=5->7: {:.3e}", diffs[0], diffs[1]),
    ))
}
