//! Centered Gaussian mixtures and unions of subspaces from moments of degree
//! at most six.
//!
//! Moment forms follow the homogeneous parts of the moment generating series
//! `E[exp(Y^T X)]`: for a mixture with covariance forms `q_i = X^T S_i X` and
//! weights `lambda_i`, `M_2d = c_d sum_i lambda_i q_i^d` with `c_d = 1/(2^d d!)`.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::{Config, TraceConvention};
use crate::error::{Error, Result};
use crate::gram::{self, CertificateJson};
use crate::instances::{sample_quadratic, EnsembleKind, EnsembleSpec};
use crate::jennrich::Addend;
use crate::linalg;
use crate::pipeline::{self, PipelineResult};
use crate::poly::{monomial_basis, Form};

/// `c_d = 1 / (2^d d!)` for `0 <= d <= 3`.
pub fn moment_constants(d: u32) -> Result<f64> {
    match d {
        0 => Ok(1.0),
        1 => Ok(0.5),
        2 => Ok(0.125),
        3 => Ok(1.0 / 48.0),
        _ => Err(Error::InvalidArgument(format!("moment degree index {d} outside 0..=3"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MomentConvention {
    /// Coefficients of the generating series.
    #[default]
    Mgf,
    /// Raw moments `E[Y^gamma]` indexed by exponent.
    Raw,
}

/// Moment forms in the generating-series convention.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub n: usize,
    pub m0: f64,
    pub m2: Form,
    pub m4: Form,
    pub m6: Form,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSetJson {
    pub n: usize,
    #[serde(rename = "M0")]
    pub m0: f64,
    #[serde(rename = "M2")]
    pub m2: Form,
    #[serde(rename = "M4")]
    pub m4: Form,
    #[serde(rename = "M6")]
    pub m6: Form,
    #[serde(default)]
    pub convention: MomentConvention,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Rescale each coefficient by `gamma!` or its inverse.
fn rescale_by_factorials(f: &Form, invert: bool) -> Form {
    let mut out = f.clone();
    for (c, alpha) in out.coeffs_mut().iter_mut().zip(monomial_basis(f.nvars(), f.degree())) {
        let g: f64 = alpha.0.iter().map(|&a| factorial(a)).product();
        *c = if invert { *c / g } else { *c * g };
    }
    out
}

impl MomentSet {
    pub fn new(n: usize, m0: f64, m2: Form, m4: Form, m6: Form) -> Result<Self> {
        for (f, d) in [(&m2, 2), (&m4, 4), (&m6, 6)] {
            if f.nvars() != n {
                return Err(Error::DimensionMismatch { expected: n, found: f.nvars() });
            }
            if f.degree() != d {
                return Err(Error::DegreeMismatch { expected: d, found: f.degree() });
            }
        }
        if !m0.is_finite() {
            return Err(Error::InvalidArgument("M0 must be finite".into()));
        }
        Ok(Self { n, m0, m2, m4, m6 })
    }

    /// `S_d = M_2d / c_d = sum_i lambda_i q_i^d`.
    pub fn power_sum(&self, d: u32) -> Result<Form> {
        let c = moment_constants(d)?;
        Ok(match d {
            0 => Form::constant(self.n, self.m0 / c),
            1 => self.m2.scale(1.0 / c),
            2 => self.m4.scale(1.0 / c),
            _ => self.m6.scale(1.0 / c),
        })
    }

    pub fn to_json(&self, convention: MomentConvention) -> MomentSetJson {
        let conv = |f: &Form| match convention {
            MomentConvention::Mgf => f.clone(),
            MomentConvention::Raw => rescale_by_factorials(f, false),
        };
        MomentSetJson { n: self.n, m0: self.m0, m2: conv(&self.m2), m4: conv(&self.m4), m6: conv(&self.m6), convention }
    }

    pub fn from_json(j: &MomentSetJson) -> Result<Self> {
        let conv = |f: &Form| match j.convention {
            MomentConvention::Mgf => f.clone(),
            MomentConvention::Raw => rescale_by_factorials(f, true),
        };
        Self::new(j.n, j.m0, conv(&j.m2), conv(&j.m4), conv(&j.m6))
    }
}

/// Mixture components as covariance forms `q_i = X^T S_i X` with weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub n: usize,
    pub components: Vec<Addend>,
    /// Orthonormal basis (columns) of each component's subspace.
    pub subspace_basis: Option<Vec<DMatrix<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureModelJson {
    pub n: usize,
    pub k: u32,
    pub m: usize,
    pub addends: Vec<Addend>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subspace_basis: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residuals: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique_proved: Option<bool>,
}

impl MixtureModel {
    /// Checks dimensions, positive weights and PSD covariances.
    pub fn new(n: usize, components: Vec<Addend>) -> Result<Self> {
        for a in &components {
            if a.q.nvars() != n {
                return Err(Error::DimensionMismatch { expected: n, found: a.q.nvars() });
            }
            if a.q.degree() != 2 {
                return Err(Error::DegreeMismatch { expected: 2, found: a.q.degree() });
            }
            if !(a.lambda > 0.0) {
                return Err(Error::NonPositiveWeight(a.lambda));
            }
            let (eig, _) = linalg::sym_eigen_desc(&a.q.to_sym_matrix()?);
            let top = eig.first().copied().unwrap_or(0.0).abs().max(1.0);
            if eig.last().is_some_and(|&l| l < -1e-9 * top) {
                return Err(Error::InvalidArgument("covariance form is not positive semidefinite".into()));
            }
        }
        Ok(Self { n, components, subspace_basis: None })
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|a| a.lambda).sum()
    }

    pub fn to_json(&self) -> MixtureModelJson {
        MixtureModelJson {
            n: self.n,
            k: 2,
            m: self.m(),
            addends: self.components.clone(),
            subspace_basis: self.subspace_basis.as_ref().map(|bs| {
                bs.iter().map(|b| b.column_iter().map(|c| c.iter().copied().collect()).collect()).collect()
            }),
            shift: None,
            certificate: None,
            residuals: None,
            unique_proved: None,
        }
    }

    pub fn from_json(j: &MixtureModelJson) -> Result<Self> {
        Self::new(j.n, j.addends.clone())
    }
}

/// `M_2d = c_d sum_i lambda_i q_i^d`.
pub fn moments_from_model(model: &MixtureModel) -> MomentSet {
    let n = model.n;
    let mut s = [Form::zero(n, 2), Form::zero(n, 4), Form::zero(n, 6)];
    for a in &model.components {
        for (d, acc) in (1..=3).zip(s.iter_mut()) {
            *acc = acc.axpy(a.lambda, &a.q.power(d)).expect("same space");
        }
    }
    let [s1, s2, s3] = s;
    MomentSet {
        n,
        m0: model.weight_sum(),
        m2: s1.scale(moment_constants(1).expect("in range")),
        m4: s2.scale(moment_constants(2).expect("in range")),
        m6: s3.scale(moment_constants(3).expect("in range")),
    }
}

fn shift_unchecked(m: &MomentSet, p: &Form, t: f64) -> Result<(Form, Form)> {
    let s0 = m.m0;
    let s1 = m.power_sum(1)?;
    let s2 = m.power_sum(2)?;
    let s3 = m.power_sum(3)?;
    let p2 = p.power(2);
    let p3 = p.power(3);
    let f2 = s2.sub(&p.multiply(&s1)?.scale(2.0 * t))?.add(&p2.scale(t * t * s0))?;
    let f3 = s3
        .sub(&p.multiply(&s2)?.scale(3.0 * t))?
        .add(&p2.multiply(&s1)?.scale(3.0 * t * t))?
        .sub(&p3.scale(t * t * t * s0))?;
    Ok((f2, f3))
}

/// `(sum lambda_i (q_i - t p)^2, sum lambda_i (q_i - t p)^3)` from the moments alone.
pub fn shifted_power_sums(m: &MomentSet, p: &Form, t: f64) -> Result<(Form, Form)> {
    if p.nvars() != m.n {
        return Err(Error::DimensionMismatch { expected: m.n, found: p.nvars() });
    }
    if p.degree() != 2 {
        return Err(Error::DegreeMismatch { expected: 2, found: p.degree() });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("shift must be a nonnegative number, got {t}")));
    }
    if p.to_sym_matrix()?.cholesky().is_none() {
        return Err(Error::InvalidArgument("shift form must be positive definite".into()));
    }
    shift_unchecked(m, p, t)
}

/// How `gmm_recover` picks the shift `t` for `p = sum X_i^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftRule {
    /// `tr(S_1) / (n M_0)`: the weighted mean of the shifted forms is trace-free.
    #[default]
    TraceMean,
    /// `factor * lambda_max(S_1)`.
    Spectral(f64),
    Fixed(f64),
}

impl FromStr for ShiftRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad shift rule {s:?}"));
        match s {
            "trace-mean" | "trace_mean" => Ok(ShiftRule::TraceMean),
            "spectral" => Ok(ShiftRule::Spectral(4.0)),
            _ => match s.strip_prefix("spectral:") {
                Some(f) => f.parse().map(ShiftRule::Spectral).map_err(|_| bad()),
                None => s.parse().map(ShiftRule::Fixed).map_err(|_| bad()),
            },
        }
    }
}

impl ShiftRule {
    pub fn shift(&self, m: &MomentSet) -> Result<f64> {
        let s1 = m.power_sum(1)?.to_sym_matrix()?;
        let t = match *self {
            ShiftRule::TraceMean => s1.trace() / (m.n as f64 * m.m0),
            ShiftRule::Spectral(c) => c * linalg::sym_eigen_desc(&s1).0[0],
            ShiftRule::Fixed(t) => t,
        };
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!("shift rule gives t = {t}; it must be positive")));
        }
        Ok(t)
    }
}

/// A recovered model with the pipeline output it came from.
#[derive(Debug, Clone)]
pub struct MixtureRecovery {
    pub model: MixtureModel,
    pub shift: f64,
    pub pipeline: PipelineResult,
    /// Largest relative error of the recovered model's moments.
    pub moment_error: f64,
}

impl MixtureRecovery {
    pub fn to_json(&self) -> MixtureModelJson {
        let p = self.pipeline.to_json();
        MixtureModelJson {
            shift: Some(self.shift),
            certificate: Some(p.certificate),
            residuals: Some(p.residuals),
            unique_proved: Some(p.unique_proved),
            ..self.model.to_json()
        }
    }
}

fn moment_error(a: &MomentSet, b: &MomentSet) -> f64 {
    let rel = |x: &Form, y: &Form| x.distance(y).expect("same space") / y.norm().max(f64::MIN_POSITIVE);
    let e0 = (a.m0 - b.m0).abs() / b.m0.abs().max(f64::MIN_POSITIVE);
    e0.max(rel(&a.m2, &b.m2)).max(rel(&a.m4, &b.m4)).max(rel(&a.m6, &b.m6))
}

fn recover_with_shift(m: &MomentSet, p: &Form, t: f64, cfg: &Config) -> Result<MixtureRecovery> {
    if !(m.m0 > 0.0) {
        return Err(Error::InvalidArgument(format!("M0 must be positive, got {}", m.m0)));
    }
    let (f2, f3) = shift_unchecked(m, p, t)?;
    let pipeline = pipeline::decompose(&f2, &f3, cfg)?;
    let mut components = Vec::with_capacity(pipeline.decomposition.m());
    for a in &pipeline.decomposition.addends {
        components.push(Addend { q: a.q.axpy(t, p)?, lambda: a.lambda });
    }
    let raw = MixtureModel { n: m.n, components, subspace_basis: None };
    let err = moment_error(&moments_from_model(&raw), m);
    if !(err <= 10.0 * cfg.tol_residual) {
        return Err(Error::MomentMismatch(err));
    }
    let total = raw.weight_sum();
    let components =
        raw.components.into_iter().map(|a| Addend { q: a.q, lambda: a.lambda / total }).collect();
    Ok(MixtureRecovery {
        model: MixtureModel { n: m.n, components, subspace_basis: None },
        shift: t,
        pipeline,
        moment_error: err,
    })
}

/// Recover covariances and weights with the shift `p = sum X_i^2` and `t` from `rule`.
pub fn gmm_recover(m: &MomentSet, rule: ShiftRule, cfg: &Config) -> Result<MixtureRecovery> {
    let p = Form::from_sym_matrix(&DMatrix::identity(m.n, m.n));
    let t = rule.shift(m)?;
    recover_with_shift(m, &p, t, cfg)
}

/// Recover rank-`r` components with the shift `2 X_n^2` and attach the
/// subspace spanned by each covariance's top `r` eigenvectors.
pub fn subspace_recover(m: &MomentSet, r: usize, cfg: &Config) -> Result<MixtureRecovery> {
    if r == 0 || r > m.n {
        return Err(Error::InvalidArgument(format!("subspace rank {r} outside 1..={}", m.n)));
    }
    let p = Form::variable(m.n, m.n - 1).power(2);
    let mut rec = recover_with_shift(m, &p, 2.0, cfg)?;
    let mut bases = Vec::with_capacity(rec.model.m());
    for a in &rec.model.components {
        let (eig, vecs) = linalg::sym_eigen_desc(&a.q.to_sym_matrix()?);
        let top = eig.iter().map(|e| e.abs()).fold(0.0, f64::max);
        let rank = eig.iter().filter(|e| e.abs() > cfg.tol_lin_rank * top).count();
        if rank != r {
            return Err(Error::RankMismatch { expected: r, found: rank });
        }
        bases.push(vecs.columns(0, r).into_owned());
    }
    rec.model.subspace_basis = Some(bases);
    Ok(rec)
}

/// A mixture whose trace-free part is certified: `q_i = u_i + t0 sum X_j^2` with
/// `u_i` trace-free, `sum w_i u_i^2` uniquely representable and every `q_i`
/// positive definite.
pub fn sample_good_mixture<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R, cfg: &Config) -> Result<MixtureModel> {
    let spec = EnsembleSpec { kind: EnsembleKind::GaussianTraceFree, n, trace_convention: TraceConvention::Normalized };
    for _ in 0..50 {
        let u: Vec<Form> = (0..m).map(|_| sample_quadratic(&spec, rng)).collect::<Result<_>>()?;
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        let mut f2 = Form::zero(n, 4);
        for (ui, wi) in u.iter().zip(&w) {
            f2 = f2.axpy(*wi, &ui.power(2))?;
        }
        let Ok(cert) = gram::certify(&f2, cfg) else { continue };
        if !(cert.unique && cert.relation_ok && cert.dim_u == m) {
            continue;
        }
        let mut lo: f64 = 0.0;
        for ui in &u {
            let (eig, _) = linalg::sym_eigen_desc(&ui.to_sym_matrix()?);
            lo = lo.max(-eig[n - 1]);
        }
        let t0 = 1.0 + 1.5 * lo;
        let components = u
            .iter()
            .zip(&w)
            .map(|(ui, wi)| Addend { q: ui.add(&Form::from_sym_matrix(&DMatrix::identity(n, n)).scale(t0)).expect("same space"), lambda: wi / total })
            .collect();
        return MixtureModel::new(n, components);
    }
    Err(Error::NumericalFailure("no certified mixture found in 50 draws".into()))
}

/// Monte-Carlo moment estimate from `samples` draws of the mixture. Only a
/// testing aid: recovery guarantees hold for exact moments.
pub fn sample_moments<R: Rng + ?Sized>(model: &MixtureModel, samples: usize, rng: &mut R) -> Result<MomentSet> {
    let n = model.n;
    let mut roots = Vec::with_capacity(model.m());
    for a in &model.components {
        let (eig, vecs) = linalg::sym_eigen_desc(&a.q.to_sym_matrix()?);
        let scale = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, eig.iter().map(|e| e.max(0.0).sqrt())));
        roots.push(vecs * scale);
    }
    let total = model.weight_sum();
    let bases: Vec<_> = [2u32, 4, 6].iter().map(|&d| monomial_basis(n, d)).collect();
    let mut acc: Vec<Vec<f64>> = bases.iter().map(|b| vec![0.0; b.len()]).collect();
    for _ in 0..samples {
        let mut u = rng.random::<f64>() * total;
        let mut i = 0;
        while i + 1 < model.m() && u >= model.components[i].lambda {
            u -= model.components[i].lambda;
            i += 1;
        }
        let z = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &roots[i] * z;
        for (basis, a) in bases.iter().zip(acc.iter_mut()) {
            for (alpha, v) in basis.iter().zip(a.iter_mut()) {
                *v += alpha.0.iter().zip(y.iter()).map(|(&e, yi)| yi.powi(e as i32)).product::<f64>();
            }
        }
    }
    let forms: Vec<Form> = [2u32, 4, 6]
        .iter()
        .zip(acc)
        .map(|(&d, a)| {
            let raw = Form::from_coeffs(n, d, a.into_iter().map(|v| v * total / samples as f64).collect())?;
            Ok(rescale_by_factorials(&raw, true))
        })
        .collect::<Result<_>>()?;
    let [m2, m4, m6]: [Form; 3] = forms.try_into().expect("three degrees");
    MomentSet::new(n, total, m2, m4, m6)
}
