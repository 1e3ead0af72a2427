//! Infeasible-start primal-dual path following on
//!
//!   max t   s.t.  A(X) + t a = b,  X >= 0          (a_j = tr A_j)
//!   min b'y s.t.  A*(y) = Z >= 0,  a'y = 1
//!
//! with HKM search directions and a Mehrotra corrector. `X + t I` solves the
//! original system whenever `t >= 0`; both problems are strictly feasible as
//! soon as the original one has a solution, so the iterates approach the
//! analytic centre of the optimal faces.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::SdpProblem;
use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;

const STEP_FRACTION: f64 = 0.98;
const REFINE_STEPS: usize = 10;
const POLISH_STEPS: usize = 6;
const BACKTRACK_STEPS: usize = 8;
// relative residuals of the normalized problem
const TARGET_INFEAS: f64 = 1e-10;
const ACCEPT_DUAL_INFEAS: f64 = 1e-8;
const ACCEPT_GAP: f64 = 1e-9;
// loosest gap returned when the run ends on a numerical breakdown
const FALLBACK_GAP: f64 = 1e-7;
// smallest eigenvalue over trace that certifies a positive definite point
const INTERIOR_RATIO: f64 = 1e-5;

pub(super) struct IpmOutput {
    pub x: DMatrix<f64>,
    pub t: f64,
    pub y: DVector<f64>,
    pub iterations: usize,
    pub gap: f64,
}

/// Constraint data with both halves of every off-diagonal entry listed.
struct Ops {
    side: usize,
    full: Vec<Vec<(u32, u32, f64)>>,
    trace: DVector<f64>,
}

impl Ops {
    fn new(prob: &SdpProblem) -> Self {
        let full: Vec<Vec<(u32, u32, f64)>> = prob
            .constraints
            .iter()
            .map(|c| {
                let mut out = Vec::with_capacity(2 * c.len());
                for &(i, j, v) in c {
                    out.push((i, j, v));
                    if i != j {
                        out.push((j, i, v));
                    }
                }
                out
            })
            .collect();
        let trace =
            DVector::from_iterator(full.len(), full.iter().map(|c| c.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum()));
        Self { side: prob.side, full, trace }
    }

    fn apply(&self, k: &DMatrix<f64>) -> DVector<f64> {
        let ks = k.as_slice();
        let n = self.side;
        DVector::from_iterator(
            self.full.len(),
            self.full.iter().map(|c| c.iter().map(|&(i, j, v)| v * ks[i as usize + j as usize * n]).sum()),
        )
    }

    fn adjoint(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let n = self.side;
        let mut out = DMatrix::zeros(n, n);
        let os = out.as_mut_slice();
        for (c, &yj) in self.full.iter().zip(y.iter()) {
            if yj == 0.0 {
                continue;
            }
            for &(i, j, v) in c {
                os[i as usize + j as usize * n] += yj * v;
            }
        }
        out
    }

    /// `S_ij = <A_i, X A_j Z^{-1}>`, column-major and symmetrised.
    fn schur(&self, x: &DMatrix<f64>, zi: &DMatrix<f64>) -> Vec<f64> {
        let m = self.full.len();
        let n = self.side;
        let xs = x.as_slice();
        let zs = zi.as_slice();
        let mut s = vec![0.0; m * m];
        s.par_chunks_mut(m).enumerate().for_each_init(
            || (Vec::new(), Vec::new(), vec![0.0; n * n]),
            |(p, q, w), (j, col)| {
                let c = &self.full[j];
                let k = c.len();
                if k == 0 {
                    return;
                }
                // W = X A_j Zi = P Q with P[:, e] = v_e X[:, r_e], Q[e, :] = Zi[c_e, :]
                p.clear();
                q.clear();
                p.resize(n * k, 0.0);
                q.resize(k * n, 0.0);
                for (e, &(r, cc, v)) in c.iter().enumerate() {
                    let src = &xs[r as usize * n..(r as usize + 1) * n];
                    for (dst, &xv) in p[e * n..(e + 1) * n].iter_mut().zip(src) {
                        *dst = v * xv;
                    }
                    // Zi symmetric: row cc equals column cc
                    let zrow = &zs[cc as usize * n..(cc as usize + 1) * n];
                    for (b, &zv) in zrow.iter().enumerate() {
                        q[e + b * k] = zv;
                    }
                }
                unsafe {
                    matrixmultiply::dgemm(
                        n,
                        k,
                        n,
                        1.0,
                        p.as_ptr(),
                        1,
                        n as isize,
                        q.as_ptr(),
                        1,
                        k as isize,
                        0.0,
                        w.as_mut_ptr(),
                        1,
                        n as isize,
                    );
                }
                for (i, ci) in self.full.iter().enumerate() {
                    col[i] = ci.iter().map(|&(a, b, v)| v * w[a as usize + b as usize * n]).sum();
                }
            },
        );
        for c in 0..m {
            for r in 0..c {
                let avg = 0.5 * (s[r + c * m] + s[c + r * m]);
                s[r + c * m] = avg;
                s[c + r * m] = avg;
            }
        }
        s
    }
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Largest `alpha` with `M + alpha D >= 0`, given the Cholesky factor of `M`.
fn max_step(l: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
    let Some(t1) = l.solve_lower_triangular(d) else {
        return 0.0;
    };
    let Some(t2) = l.solve_lower_triangular(&t1.transpose()) else {
        return 0.0;
    };
    let lam = sym(t2).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    if lam >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lam
    }
}

fn factor_regularized(m: usize, s: Vec<f64>) -> Option<CholeskyFactor> {
    let dmax = (0..m).map(|i| s[i + i * m].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if let Some(f) = CholeskyFactor::factor(m, s.clone()) {
        return Some(f);
    }
    let mut delta = 1e-14;
    while delta < 1e-4 {
        let mut r = s.clone();
        for i in 0..m {
            r[i + i * m] += delta * dmax;
        }
        if let Some(f) = CholeskyFactor::factor(m, r) {
            return Some(f);
        }
        delta *= 100.0;
    }
    None
}

struct Residuals {
    rp: DVector<f64>,
    rd: DMatrix<f64>,
    rt: f64,
}

struct Direction {
    dx: DMatrix<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
    dt: f64,
}

/// Cholesky solve of `S w = r` refined against the operator form of `S`.
fn schur_solve(ops: &Ops, s: &CholeskyFactor, x: &DMatrix<f64>, zi: &DMatrix<f64>, r: &DVector<f64>) -> DVector<f64> {
    let mut w = r.as_slice().to_vec();
    s.solve_in_place(&mut w);
    let mut w = DVector::from_vec(w);
    let rnorm = r.norm();
    let mut best = (f64::INFINITY, w.clone());
    for _ in 0..=REFINE_STEPS {
        let resid = r - ops.apply(&sym(x * ops.adjoint(&w) * zi));
        let rn = resid.norm();
        if rn >= best.0 {
            break;
        }
        best = (rn, w.clone());
        if rn <= 1e-15 * rnorm {
            break;
        }
        let mut corr = resid.as_slice().to_vec();
        s.solve_in_place(&mut corr);
        w += DVector::from_vec(corr);
    }
    best.1
}

struct Iterate {
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DVector<f64>,
    t: f64,
}

/// `accept_primal` bounds the largest constraint residual of accepted iterates
/// in the normalized units.
pub(super) fn solve(
    prob: &SdpProblem,
    scale: f64,
    start: (f64, f64),
    accept_primal: f64,
    cfg: &SolverConfig,
) -> Result<IpmOutput> {
    let (primal0, dual0) = start;
    let ops = Ops::new(prob);
    let n = ops.side;
    let m = ops.full.len();
    if ops.trace.amax() == 0.0 {
        return Err(Error::InvalidArgument("constraints do not involve the diagonal; trace is unbounded".into()));
    }
    let b = DVector::from_iterator(m, prob.rhs.iter().map(|v| v / scale));
    let bnorm = b.norm();
    let base = (n as f64).sqrt().max(1.0);
    let mut cur = Iterate {
        x: DMatrix::identity(n, n) * (base * primal0),
        z: DMatrix::identity(n, n) * (base * dual0),
        y: DVector::zeros(m),
        t: 0.0,
    };
    // best acceptable iterate by duality gap
    let mut best: Option<(Iterate, f64, usize)> = None;
    // primal-feasible iterate with the largest t / tr(X + t I); when the
    // feasible set has positive definite recession directions the dual is
    // infeasible and only this point is available
    let mut interior: Option<(Iterate, f64, usize)> = None;
    let mut last_status = String::new();
    // best acceptable gap after each iteration
    let mut gaps: Vec<f64> = Vec::new();
    let trace_on = std::env::var_os("POF_IPM_TRACE").is_some();

    for iter in 0..cfg.max_iter {
        let Iterate { x, z, y, t } = &cur;
        let t = *t;
        let (Some(zch), Some(xch)) = (z.clone().cholesky(), x.clone().cholesky()) else {
            last_status = format!("iter {iter}: iterate left the cone");
            break;
        };
        let zi = sym(zch.inverse());
        let res = Residuals { rp: &b - ops.apply(x) - &ops.trace * t, rd: ops.adjoint(y) - z, rt: 1.0 - ops.trace.dot(y) };
        let xz = inner(x, z);
        let mu = xz / n as f64;
        let dobj = b.dot(y);
        let pinf = res.rp.norm() / (1.0 + bnorm);
        // residual of the returned point X + max(t, 0) I; a clearly negative t
        // means infeasibility and is judged on (X, t) itself
        let pmax = if t < -accept_primal { res.rp.amax() } else { (&res.rp + &ops.trace * t.min(0.0)).amax() };
        let dinf = res.rd.norm().max(res.rt.abs());
        let gap = xz / (1.0 + t.abs() + dobj.abs());
        last_status = format!("iter {iter}: gap {gap:.2e}, primal {pinf:.2e}, dual {dinf:.2e}, t {t:.3e}");
        if trace_on {
            let l = xch.l();
            let w = sym(l.transpose() * z * &l).symmetric_eigenvalues();
            eprintln!("{last_status} centrality [{:.2e}, {:.2e}]", w.min() / mu, w.max() / mu);
        }
        if pmax < accept_primal && dinf < ACCEPT_DUAL_INFEAS && best.as_ref().is_none_or(|b| gap < b.1) {
            best = Some((Iterate { x: x.clone(), z: z.clone(), y: y.clone(), t }, gap, iter));
            if dinf < TARGET_INFEAS && gap < cfg.tol_gap {
                break;
            }
        }
        gaps.push(best.as_ref().map_or(f64::INFINITY, |b| b.1));
        if let [.., before, _, _, now] = gaps[..] {
            if now < ACCEPT_GAP && now > 0.5 * before {
                last_status = format!("iter {iter}: gap stalled at {now:.2e}");
                break;
            }
        }
        let ratio = t / (x.trace() + n as f64 * t);
        if pmax < accept_primal && ratio > INTERIOR_RATIO && interior.as_ref().is_none_or(|b| ratio > b.1) {
            interior = Some((Iterate { x: x.clone(), z: z.clone(), y: y.clone(), t }, ratio, iter));
        }
        if t > 1e12 {
            last_status = format!("iter {iter}: primal objective unbounded");
            break;
        }

        let Some(sch) = factor_regularized(m, ops.schur(x, &zi)) else {
            last_status = format!("iter {iter}: Schur complement is singular");
            break;
        };
        let w2 = schur_solve(&ops, &sch, x, &zi, &ops.trace);
        let xrdzi = sym(x * &res.rd * &zi);
        let direction = |k: DMatrix<f64>| {
            let g = &res.rp - ops.apply(&(&k - &xrdzi));
            let w1 = schur_solve(&ops, &sch, x, &zi, &g);
            let dt = (res.rt + ops.trace.dot(&w1)) / ops.trace.dot(&w2);
            let dy = &w2 * dt - w1;
            let dz = ops.adjoint(&dy) + &res.rd;
            let dx = k - sym(x * &dz * &zi);
            Direction { dx, dy, dz, dt }
        };

        // predictor
        let pred = direction(-x);
        let xl = xch.l();
        let zl = zch.l();
        let ap = max_step(&xl, &pred.dx).min(1.0);
        let ad = max_step(&zl, &pred.dz).min(1.0);
        let mu_aff = inner(&(x + &pred.dx * ap), &(z + &pred.dz * ad)) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let k = &zi * (sigma * mu) - x - sym(&pred.dx * &pred.dz * &zi);
        let dir = direction(k);
        let mut ap = (STEP_FRACTION * max_step(&xl, &dir.dx)).min(1.0);
        let mut ad = (STEP_FRACTION * max_step(&zl, &dir.dz)).min(1.0);
        let mut next = None;
        // eigenvalues near rounding level can make the computed step leave
        // the cone; shorten it before giving up
        for _ in 0..BACKTRACK_STEPS {
            if ap < 1e-12 && ad < 1e-12 {
                break;
            }
            let (nx, nz) = (sym(x + &dir.dx * ap), sym(z + &dir.dz * ad));
            if nx.clone().cholesky().is_some() && nz.clone().cholesky().is_some() {
                next = Some(Iterate { x: nx, z: nz, y: y + &dir.dy * ad, t: t + ap * dir.dt });
                break;
            }
            ap *= 0.5;
            ad *= 0.5;
        }
        let Some(next) = next else {
            last_status = format!("iter {iter}: step length collapsed");
            break;
        };
        cur = next;
    }

    match best {
        Some((it, gap, iterations)) if gap < FALLBACK_GAP => Ok(IpmOutput { x: it.x, t: it.t, y: it.y, iterations, gap }),
        _ => match interior {
            Some((it, _, iterations)) => Ok(IpmOutput { x: it.x, t: it.t, y: it.y, iterations, gap: f64::NAN }),
            None => Err(Error::NumericalFailure(format!("interior-point method stalled ({last_status})"))),
        },
    }
}

/// Gauss-Newton on `A(V V^T) = b` from the top `rank` eigenpairs of a
/// normalized solution. Any rank-`rank` solution has the same image as the
/// relative interior, so this sharpens the image without leaving the face.
/// Returns the polished `V V^T` when it lowers the residual.
pub(super) fn polish_primal(prob: &SdpProblem, scale: f64, eig: &[f64], vecs: &DMatrix<f64>, rank: usize) -> Option<DMatrix<f64>> {
    let ops = Ops::new(prob);
    let m = ops.full.len();
    let n = ops.side;
    let b = DVector::from_iterator(m, prob.rhs.iter().map(|v| v / scale));
    let mut v = DMatrix::from_fn(n, rank, |i, j| vecs[(i, j)] * eig[j].max(0.0).sqrt());
    let four = DMatrix::identity(n, n) * 4.0;
    let g0 = &v * v.transpose();
    let start = (&b - ops.apply(&g0)).norm();
    let mut best = (start, g0.clone());
    // the normal matrix at the starting point serves every step
    let sch = factor_regularized(m, ops.schur(&g0, &four))?;
    for _ in 0..POLISH_STEPS {
        let g = &v * v.transpose();
        let res = &b - ops.apply(&g);
        let rn = res.norm();
        if rn >= 0.5 * best.0 && rn > start {
            break;
        }
        if rn < best.0 {
            best = (rn, g.clone());
        }
        if rn <= 1e-15 * (1.0 + b.norm()) {
            break;
        }
        let w = schur_solve(&ops, &sch, &g0, &four, &res);
        v += ops.adjoint(&w) * &v * 2.0;
    }
    let moved = (&best.1 - &g0).norm();
    (best.0 < start && moved <= 1e-3 * g0.norm()).then_some(best.1)
}

/// Remove from `y` its component along `{y : A*(y) V != 0}` so that `A*(y)`
/// vanishes on the columns of the orthonormal `V` exactly, then restore
/// `a'y = 1`.
pub(super) fn polish_dual(prob: &SdpProblem, y: &DVector<f64>, v: &DMatrix<f64>) -> Option<DVector<f64>> {
    let ops = Ops::new(prob);
    let m = ops.full.len();
    let n = ops.side;
    let p = v * v.transpose();
    let eye = DMatrix::identity(n, n);
    let gram = |u: &DVector<f64>| ops.apply(&sym(&p * ops.adjoint(u)));
    let sch = factor_regularized(m, ops.schur(&p, &eye))?;
    let target = gram(y);
    let mut proj = DVector::zeros(m);
    for _ in 0..POLISH_STEPS {
        let mut r = (&target - gram(&proj)).as_slice().to_vec();
        sch.solve_in_place(&mut r);
        proj += DVector::from_vec(r);
    }
    let out = y - proj;
    let tr = ops.trace.dot(&out);
    (tr > 0.0).then(|| out / tr)
}
