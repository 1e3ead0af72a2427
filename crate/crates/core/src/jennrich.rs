//! Joint decomposition `g2 = sum_i lambda_i l_i^2`, `g3 = sum_i lambda_i l_i^3`
//! into linearly independent linear forms via a generalized eigenproblem.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{Form, Subspace};

/// One `(q, lambda)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Addend {
    pub q: Form,
    pub lambda: f64,
}

const TIE: f64 = 1e-9;

/// Weight descending, then coefficients lexicographically descending; values
/// within `1e-9` (relative) compare equal.
pub fn canonical_order(a: &Addend, b: &Addend) -> Ordering {
    let scale = a.lambda.abs().max(b.lambda.abs()).max(1.0);
    if (a.lambda - b.lambda).abs() > TIE * scale {
        return b.lambda.total_cmp(&a.lambda);
    }
    for (x, y) in a.q.coeffs().iter().zip(b.q.coeffs()) {
        let s = x.abs().max(y.abs()).max(1.0);
        if (x - y).abs() > TIE * s {
            return y.total_cmp(x);
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone)]
pub struct LinearDecomposition {
    pub n: usize,
    pub addends: Vec<Addend>,
    pub residual2: f64,
    pub residual3: f64,
}

/// `sum_i lambda_i q_i^d`.
pub fn power_sum(n: usize, addends: &[Addend], d: u32) -> Form {
    let degree = addends.first().map_or(d, |a| a.q.degree() * d);
    let mut out = Form::zero(n, degree);
    for a in addends {
        out = out.axpy(a.lambda, &a.q.power(d)).expect("addends share a space");
    }
    out
}

/// `sum_i lambda_i l_i^d`.
pub fn reconstruct(dec: &LinearDecomposition, d: u32) -> Form {
    power_sum(dec.n, &dec.addends, d)
}

/// Span of the first partials of a quadratic.
pub fn derivative_space(g2: &Form, tol_lin_rank: f64) -> Result<Subspace> {
    if g2.degree() != 2 {
        return Err(Error::DegreeMismatch { expected: 2, found: g2.degree() });
    }
    let n = g2.nvars();
    let partials = (0..n).map(|i| g2.partial(i)).collect::<Result<Vec<_>>>()?;
    if partials.iter().all(Form::is_zero) {
        return Subspace::from_columns(n, 1, &DMatrix::zeros(n, 0));
    }
    Subspace::span(n, 1, &partials, tol_lin_rank)
}

fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-12 {
            return v.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Real generalized eigenvalues of the pencil `(mv, m)`, ascending.
fn pencil_eigenvalues(mv: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let minv = m.clone().try_inverse().ok_or_else(|| Error::NumericalFailure("quadratic part is singular on its support".into()))?;
    let prod = minv * mv;
    let eig = prod.complex_eigenvalues();
    let spread = eig.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(eig.len());
    for z in eig.iter() {
        if z.im.abs() > 1e-8 * spread {
            return Err(Error::NotDiagonalizable(format!("complex eigenvalue {:.3e} {:+.3e}i", z.re, z.im)));
        }
        out.push(z.re);
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn null_vector(a: &DMatrix<f64>) -> DVector<f64> {
    let d = linalg::svd(a);
    d.v.column(d.s.len() - 1).into_owned()
}

/// Recover `{(l_i, lambda_i)}` from `(g2, g3)`.
pub fn simultaneous_diagonalize<R: Rng + ?Sized>(g2: &Form, g3: &Form, rng: &mut R, cfg: &Config) -> Result<LinearDecomposition> {
    if g3.degree() != 3 {
        return Err(Error::DegreeMismatch { expected: 3, found: g3.degree() });
    }
    if g3.nvars() != g2.nvars() {
        return Err(Error::DimensionMismatch { expected: g2.nvars(), found: g3.nvars() });
    }
    let n = g2.nvars();
    let u = derivative_space(g2, cfg.tol_lin_rank)?;
    let mdim = u.dim();
    let bu = u.matrix();
    let m = bu.transpose() * g2.to_sym_matrix()? * &bu;

    let mut attempt = 0;
    let mut last_gap = 0.0;
    let (v, mu) = loop {
        if attempt > cfg.max_retries {
            return Err(Error::EigenvalueCollision { retries: cfg.max_retries, gap: last_gap });
        }
        attempt += 1;
        let v = random_unit(n, rng);
        if mdim == 0 {
            break (v, Vec::new());
        }
        let qv = g3.directional_derivative(&v)?.scale(1.0 / 3.0).to_sym_matrix()?;
        let mv = bu.transpose() * qv * &bu;
        let mu = pencil_eigenvalues(&mv, &m)?;
        let spread = mu.last().unwrap() - mu.first().unwrap();
        let gap = mu.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let scale = spread.max(mu.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        if mdim == 1 || (scale > 0.0 && gap > cfg.collision_tol * scale) {
            break (v, mu);
        }
        last_gap = gap;
    };

    let uv = bu.transpose() * DVector::from_column_slice(&v);
    let qv = g3.directional_derivative(&v)?.scale(1.0 / 3.0).to_sym_matrix()?;
    let mv = bu.transpose() * qv * &bu;
    let mut lin = Vec::with_capacity(mdim);
    for &mu_j in &mu {
        let x = null_vector(&(&mv - &m * mu_j));
        let b = &m * x;
        let denom = b.dot(&uv);
        if denom.abs() < 1e-14 * b.norm() || mu_j == 0.0 {
            return Err(Error::NumericalFailure("random direction is orthogonal to a recovered form".into()));
        }
        let a = b * (mu_j / denom);
        lin.push(Form::linear((&bu * a).as_slice()));
    }
    if lin.len() != mdim {
        return Err(Error::RankMismatch { expected: mdim, found: lin.len() });
    }
    if mdim > 0 {
        let coeffs = DMatrix::from_fn(n, mdim, |i, j| lin[j].coeffs()[i]);
        let s = linalg::singular_values_desc(&coeffs);
        if s[mdim - 1] <= 1e-8 * s[0] {
            return Err(Error::RankMismatch { expected: mdim, found: linalg::numerical_rank(&coeffs, 1e-8) });
        }
    }

    // weights from g2 = sum nu_j l_j^2
    let squares: Vec<Form> = lin.iter().map(|l| l.power(2)).collect();
    let a = DMatrix::from_fn(g2.coeffs().len(), mdim, |i, j| squares[j].coeffs()[i]);
    let nu = linalg::lstsq(&a, &g2.coeff_vector(), 1e-12);
    let mut addends: Vec<Addend> = lin.into_iter().zip(nu.iter()).map(|(q, &lambda)| Addend { q, lambda }).collect();
    addends.sort_by(canonical_order);
    let residual2 = relative_residual(&addends, g2, 2);
    let residual3 = relative_residual(&addends, g3, 3);
    for (what, r) in [("quadratic", residual2), ("cubic", residual3)] {
        if !(r <= cfg.tol_residual) {
            return Err(Error::ResidualTooLarge { what: what.into(), residual: r, tol: cfg.tol_residual });
        }
    }
    Ok(LinearDecomposition { n, addends, residual2, residual3 })
}

/// `||sum_i lambda_i q_i^d - f|| / ||f||` (absolute when `f = 0`).
pub fn relative_residual(addends: &[Addend], f: &Form, d: u32) -> f64 {
    let approx = if addends.is_empty() { Form::zero(f.nvars(), f.degree()) } else { power_sum(f.nvars(), addends, d) };
    let err = approx.distance(f).unwrap_or(f64::INFINITY);
    let nrm = f.norm();
    if nrm > 0.0 {
        err / nrm
    } else {
        err
    }
}
