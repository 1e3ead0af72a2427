//! End-to-end decomposition of `(f2, f3)`: support of `f2`, coordinates on the
//! support, Jennrich in those coordinates and push-forward.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::gram::{self, CertificateJson, SupportCertificate};
use crate::jennrich::{self, canonical_order, Addend};
use crate::linalg;
use crate::poly::{product_columns, Form, Subspace};

/// `f_d = sum_i lambda_i q_i^d` for `d = 2, 3` with positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub n: usize,
    pub k: u32,
    pub addends: Vec<Addend>,
}

impl Decomposition {
    pub fn m(&self) -> usize {
        self.addends.len()
    }

    /// `sum_i lambda_i q_i^d`.
    pub fn power_sum(&self, d: u32) -> Form {
        if self.addends.is_empty() {
            return Form::zero(self.n, self.k * d);
        }
        jennrich::power_sum(self.n, &self.addends, d)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub decomposition: Decomposition,
    pub certificate: SupportCertificate,
    pub residual2: f64,
    pub residual3: f64,
    pub unique_proved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub k: u32,
    pub m: usize,
    pub addends: Vec<AddendJson>,
    pub certificate: CertificateJson,
    pub residuals: BTreeMap<String, f64>,
    pub unique_proved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddendJson {
    pub q: Form,
    pub lambda: f64,
}

impl PipelineResult {
    pub fn to_json(&self) -> DecompositionJson {
        let mut residuals = BTreeMap::new();
        residuals.insert("f2".to_string(), self.residual2);
        residuals.insert("f3".to_string(), self.residual3);
        DecompositionJson {
            k: self.decomposition.k,
            m: self.decomposition.m(),
            addends: self.decomposition.addends.iter().map(|a| AddendJson { q: a.q.clone(), lambda: a.lambda }).collect(),
            certificate: self.certificate.to_json(),
            residuals,
            unique_proved: self.unique_proved,
        }
    }
}

/// Coefficients `c` with `f = sum_alpha c_alpha u^alpha`, returned as the form
/// `sum_alpha c_alpha Y^alpha` in `dim U` variables.
pub fn lift_to_y(f: &Form, u: &Subspace, d: u32, cfg: &Config) -> Result<Form> {
    if f.nvars() != u.nvars() {
        return Err(Error::DimensionMismatch { expected: u.nvars(), found: f.nvars() });
    }
    if f.degree() != u.degree() * d {
        return Err(Error::DegreeMismatch { expected: u.degree() * d, found: f.degree() });
    }
    let big_n = u.dim();
    let fnorm = f.norm();
    if big_n == 0 {
        if fnorm == 0.0 {
            return Ok(Form::zero(0, d));
        }
        return Err(Error::NotInSubalgebra { degree: d, residual: 1.0 });
    }
    let (rows, cols) = product_columns(u.basis(), d)?;
    let ncols = cols.len();
    let mut a = DMatrix::zeros(rows, ncols);
    for (j, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            a[(i as usize, j)] = v;
        }
    }
    let gram = a.tr_mul(&a);
    let (eig, vecs) = linalg::sym_eigen_desc(&gram);
    let cutoff = cfg.tol_lin_rank * cfg.tol_lin_rank * eig[0];
    let rank = eig.iter().filter(|&&e| e > cutoff).count();
    if rank < ncols {
        return Err(Error::RankDeficient { degree: d, rank, expected: ncols });
    }
    let b = f.coeff_vector();
    let solve = |rhs: &DVector<f64>| {
        let proj = vecs.tr_mul(&a.tr_mul(rhs));
        let scaled = DVector::from_iterator(ncols, proj.iter().zip(&eig).map(|(p, e)| p / e));
        &vecs * scaled
    };
    let mut c = solve(&b);
    c += solve(&(&b - &a * &c));
    let resid = (&a * &c - &b).norm() / if fnorm > 0.0 { fnorm } else { 1.0 };
    if resid > cfg.tol_residual {
        return Err(Error::NotInSubalgebra { degree: d, residual: resid });
    }
    Form::from_coeffs(big_n, d, c.as_slice().to_vec())
}

/// `sum_j l_j u_j`.
pub fn push_forward(l: &Form, u: &Subspace) -> Result<Form> {
    if l.degree() != 1 || l.nvars() != u.dim() {
        return Err(Error::InvalidArgument(format!(
            "expected a linear form in {} variables, found degree {} in {}",
            u.dim(),
            l.degree(),
            l.nvars()
        )));
    }
    Ok(u.combine(l.coeffs()))
}

fn relative(err: f64, f: &Form) -> f64 {
    let nrm = f.norm();
    if nrm > 0.0 {
        err / nrm
    } else {
        err
    }
}

/// Decompose `(f2, f3)` and certify uniqueness.
pub fn decompose(f2: &Form, f3: &Form, cfg: &Config) -> Result<PipelineResult> {
    if f2.nvars() != f3.nvars() {
        return Err(Error::DimensionMismatch { expected: f2.nvars(), found: f3.nvars() });
    }
    if f2.degree() % 2 == 1 {
        return Err(Error::OddDegree(f2.degree()));
    }
    let k = f2.degree() / 2;
    if f3.degree() != 3 * k {
        return Err(Error::DegreeMismatch { expected: 3 * k, found: f3.degree() });
    }
    let n = f2.nvars();
    let certificate = gram::certify(f2, cfg)?;
    if !certificate.relation_ok {
        return Err(Error::HypothesisFailure(Box::new(certificate)));
    }
    let u = &certificate.support;
    let g2 = lift_to_y(f2, u, 2, cfg)?;
    let g3 = lift_to_y(f3, u, 3, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lin = jennrich::simultaneous_diagonalize(&g2, &g3, &mut rng, cfg)?;
    let mut addends = Vec::with_capacity(lin.addends.len());
    for a in &lin.addends {
        if !(a.lambda > 0.0) {
            return Err(Error::NonPositiveWeight(a.lambda));
        }
        addends.push(Addend { q: push_forward(&a.q, u)?, lambda: a.lambda });
    }
    addends.sort_by(canonical_order);
    let decomposition = Decomposition { n, k, addends };
    let residual2 = relative(decomposition.power_sum(2).distance(f2)?, f2);
    let residual3 = relative(decomposition.power_sum(3).distance(f3)?, f3);
    for (what, r) in [("f2", residual2), ("f3", residual3)] {
        if !(r <= cfg.tol_residual) {
            return Err(Error::ResidualTooLarge { what: what.into(), residual: r, tol: cfg.tol_residual });
        }
    }
    let m = decomposition.m();
    if m > 0 {
        let q = DMatrix::from_fn(decomposition.addends[0].q.coeffs().len(), m, |i, j| decomposition.addends[j].q.coeffs()[i]);
        let s = linalg::singular_values_desc(&q);
        if s[m - 1] <= 1e-8 * s[0] {
            return Err(Error::RankMismatch { expected: m, found: linalg::numerical_rank(&q, 1e-8) });
        }
    }
    let unique_proved = certificate.unique && certificate.relation_ok;
    Ok(PipelineResult { decomposition, certificate, residual2, residual3, unique_proved })
}
