//! Semidefinite feasibility problems `<A_j, G> = b_j, G >= 0` and a
//! primal-dual interior-point solver that returns relative-interior points.

mod ipm;

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg;

/// Upper-triangle entries `(row, col, value)` with `row <= col` of a symmetric matrix.
pub type SymEntries = Vec<(u32, u32, f64)>;

/// A linear system over symmetric `side x side` matrices together with `G >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    side: usize,
    constraints: Vec<SymEntries>,
    rhs: Vec<f64>,
}

impl SdpProblem {
    pub fn new(side: usize) -> Self {
        Self { side, constraints: Vec::new(), rhs: Vec::new() }
    }

    /// Add `<A, G> = b`; entries below the diagonal are mirrored, repeated
    /// positions are summed.
    pub fn push(&mut self, entries: impl IntoIterator<Item = (usize, usize, f64)>, b: f64) -> Result<()> {
        let mut list: SymEntries = Vec::new();
        for (i, j, v) in entries {
            if i >= self.side || j >= self.side {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) outside a {0}x{0} matrix", self.side)));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument("non-finite constraint coefficient".into()));
            }
            let (r, c) = if i <= j { (i, j) } else { (j, i) };
            list.push((r as u32, c as u32, v));
        }
        if !b.is_finite() {
            return Err(Error::InvalidArgument("non-finite right-hand side".into()));
        }
        list.sort_by_key(|&(r, c, _)| (c, r));
        list.dedup_by(|later, kept| {
            if later.0 == kept.0 && later.1 == kept.1 {
                kept.2 += later.2;
                true
            } else {
                false
            }
        });
        list.retain(|e| e.2 != 0.0);
        self.constraints.push(list);
        self.rhs.push(b);
        Ok(())
    }

    /// Add `<A, G> = b` for a dense symmetric `A`.
    pub fn push_dense(&mut self, a: &DMatrix<f64>, b: f64) -> Result<()> {
        if a.nrows() != self.side || a.ncols() != self.side {
            return Err(Error::DimensionMismatch { expected: self.side, found: a.nrows() });
        }
        if (a - a.transpose()).amax() > 1e-12 * a.amax().max(1.0) {
            return Err(Error::InvalidArgument("constraint matrix is not symmetric".into()));
        }
        let entries = (0..self.side).flat_map(|j| (0..=j).map(move |i| (i, j))).map(|(i, j)| (i, j, a[(i, j)]));
        self.push(entries.collect::<Vec<_>>(), b)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraint(&self, j: usize) -> (&[(u32, u32, f64)], f64) {
        (&self.constraints[j], self.rhs[j])
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// `<A_j, G>` for every constraint.
    pub fn apply(&self, g: &DMatrix<f64>) -> Vec<f64> {
        self.constraints
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&(i, j, v)| {
                        let (i, j) = (i as usize, j as usize);
                        if i == j {
                            v * g[(i, i)]
                        } else {
                            v * (g[(i, j)] + g[(j, i)])
                        }
                    })
                    .sum()
            })
            .collect()
    }

    /// `sum_j y_j A_j`.
    pub fn adjoint(&self, y: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.side, self.side);
        for (c, &yj) in self.constraints.iter().zip(y) {
            for &(i, j, v) in c {
                out[(i as usize, j as usize)] += yj * v;
                if i != j {
                    out[(j as usize, i as usize)] += yj * v;
                }
            }
        }
        out
    }

    /// Largest `|<A_j, G> - b_j|`.
    pub fn max_residual(&self, g: &DMatrix<f64>) -> f64 {
        self.apply(g).iter().zip(&self.rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Every coefficient and right-hand side multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            side: self.side,
            constraints: self.constraints.iter().map(|l| l.iter().map(|&(i, j, v)| (i, j, c * v)).collect()).collect(),
            rhs: self.rhs.iter().map(|b| c * b).collect(),
        }
    }

    fn permuted(&self, order: &[usize]) -> Self {
        Self {
            side: self.side,
            constraints: order.iter().map(|&j| self.constraints[j].clone()).collect(),
            rhs: order.iter().map(|&j| self.rhs[j]).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidArgument("semidefinite problem has no constraints".into()));
        }
        if self.side == 0 {
            return Err(Error::InvalidArgument("matrix side must be positive".into()));
        }
        Ok(())
    }
}

/// Dual side of a solve: multipliers `y` with `sum_j y_j A_j >= 0` and
/// `sum_j y_j tr(A_j) = 1`, minimising `b^T y`.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub y: DVector<f64>,
    /// `sum_j y_j A_j`, assembled exactly from `y`.
    pub slack: DMatrix<f64>,
    pub slack_eigenvalues: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub numerical_rank: usize,
    pub max_constraint_residual: f64,
    /// Optimal `t` of `max t : G - t I` feasible; positive iff a definite solution exists.
    pub margin: f64,
    pub dual: DualSolution,
    pub iterations: usize,
    /// Relative duality gap; NaN when the point comes from an unbounded
    /// (positive definite) feasible set with no dual solution.
    pub gap: f64,
}

impl SdpSolution {
    /// Orthonormal basis of the image (top `numerical_rank` eigenvectors).
    pub fn image(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.numerical_rank).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

/// Starting point scaling and constraint order for one solve.
#[derive(Debug, Clone, Copy)]
struct Start {
    primal: f64,
    dual: f64,
}

/// Solve for a maximum-rank feasible point.
pub fn solve_relint(prob: &SdpProblem, cfg: &SolverConfig) -> Result<SdpSolution> {
    solve_with(prob, cfg, Start { primal: 1.0, dual: 1.0 })
}

fn solve_with(prob: &SdpProblem, cfg: &SolverConfig, start: Start) -> Result<SdpSolution> {
    prob.validate()?;
    // unit-size coefficients; the feasible set is unchanged
    let amax = prob.constraints.iter().flatten().fold(0.0f64, |m, e| m.max(e.2.abs()));
    let work = if amax > 0.0 && amax != 1.0 { Cow::Owned(prob.scaled(1.0 / amax)) } else { Cow::Borrowed(prob) };
    let bnorm = work.rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let b_inf = prob.rhs.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    let feas_tol = cfg.tol_feas * b_inf.max(1.0);
    // half the final tolerance, in the units of the normalized work problem
    let accept = 0.5 * feas_tol / (amax.max(f64::MIN_POSITIVE) * scale);
    let mut out = ipm::solve(&work, scale, (start.primal, start.dual), accept, cfg)?;
    let margin = out.t * scale;
    if margin < -feas_tol {
        return Err(Error::Infeasible { margin });
    }
    let n = prob.side;
    // G = X + t I is the point of the original system; clip t at zero so the
    // returned matrix stays in the cone.
    let mut g_norm = out.x.clone();
    for i in 0..n {
        g_norm[(i, i)] += out.t.max(0.0);
    }
    let (mut eig_norm, mut vecs) = linalg::sym_eigen_desc(&g_norm);
    let numerical_rank = linalg::count_above(&eig_norm, cfg.tol_rank);
    if numerical_rank > 0 && numerical_rank < n {
        if let Some(g) = ipm::polish_primal(&work, scale, &eig_norm, &vecs, numerical_rank) {
            let (e, v) = linalg::sym_eigen_desc(&g);
            if linalg::count_above(&e, cfg.tol_rank) == numerical_rank
                && prob.max_residual(&(&g * scale)) <= prob.max_residual(&(&g_norm * scale))
            {
                (g_norm, eig_norm, vecs) = (g, e, v);
            }
        }
        let basis = vecs.columns(0, numerical_rank).into_owned();
        if let Some(y) = ipm::polish_dual(&work, &out.y, &basis) {
            // keep the projection only while the slack stays in the cone
            let (e, _) = linalg::sym_eigen_desc(&work.adjoint(y.as_slice()));
            if e.last().copied().unwrap_or(0.0) >= -cfg.tol_psd * e[0].max(0.0) {
                out.y = y;
            }
        }
    }
    if amax > 0.0 {
        out.y /= amax;
    }
    let matrix = g_norm * scale;
    let eigenvalues: Vec<f64> = eig_norm.iter().map(|e| e * scale).collect();
    let max_constraint_residual = prob.max_residual(&matrix);
    if max_constraint_residual > feas_tol {
        return Err(Error::NumericalFailure(format!(
            "constraint residual {max_constraint_residual:.3e} after {} iterations (gap {:.3e})",
            out.iterations, out.gap
        )));
    }
    if eigenvalues.last().copied().unwrap_or(0.0) < -cfg.tol_psd * scale.max(1.0) {
        return Err(Error::NumericalFailure("returned matrix is not positive semidefinite".into()));
    }
    let slack = prob.adjoint(out.y.as_slice());
    let (slack_eigenvalues, _) = linalg::sym_eigen_desc(&slack);
    let objective = out.y.iter().zip(&prob.rhs).map(|(y, b)| y * b).sum();
    Ok(SdpSolution {
        matrix,
        eigenvalues,
        eigenvectors: vecs,
        numerical_rank,
        max_constraint_residual,
        margin,
        dual: DualSolution { y: out.y, slack, slack_eigenvalues, objective },
        iterations: out.iterations,
        gap: out.gap,
    })
}

/// Re-solve with `retries` perturbed starting points and shuffled constraint
/// orders; true iff every solve has the rank of `sol` and an image within
/// `tol_angle` of it.
pub fn rank_stability_check(
    prob: &SdpProblem,
    sol: &SdpSolution,
    retries: usize,
    cfg: &SolverConfig,
    tol_angle: f64,
    seed: u64,
) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reference = sol.image();
    for _ in 0..retries {
        let mut order: Vec<usize> = (0..prob.len()).collect();
        order.shuffle(&mut rng);
        let start = Start { primal: 2f64.powf(rng.random_range(-1.5..1.5)), dual: 2f64.powf(rng.random_range(-1.5..1.5)) };
        let other = solve_with(&prob.permuted(&order), cfg, start)?;
        if other.numerical_rank != sol.numerical_rank {
            return Ok(false);
        }
        if linalg::principal_angle(&reference, &other.image()) >= tol_angle {
            return Ok(false);
        }
    }
    Ok(true)
}
