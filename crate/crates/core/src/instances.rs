//! Random quadratic ensembles, the explicit conjecture families, the radical
//! special instance and the Monte-Carlo uniqueness study.

use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Config, TraceConvention};
use crate::error::{Error, Result};
use crate::gram;
use crate::poly::{binomial, Form};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// `X^T (A - tr(A) I) X`, `A` iid standard normal.
    GaussianTraceFree,
    /// `X^T (A^T A - tr(A^T A) I) X`.
    GaussGramianTraceFree,
    /// `X^T sym(A) X`.
    GenericGaussian,
    /// `X^T B B^T X` with `B` an `n x r` normal factor.
    RankRPsd(usize),
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_trace_free" => Ok(Self::GaussianTraceFree),
            "gauss_gramian_trace_free" => Ok(Self::GaussGramianTraceFree),
            "generic_gaussian" => Ok(Self::GenericGaussian),
            _ => match s.strip_prefix("rank_r_psd:").or_else(|| s.strip_prefix("rank_psd:")) {
                Some(r) => r
                    .parse()
                    .map(Self::RankRPsd)
                    .map_err(|_| Error::InvalidArgument(format!("bad rank in ensemble kind {s:?}"))),
                None => Err(Error::InvalidArgument(format!("unknown ensemble kind {s:?}"))),
            },
        }
    }
}

impl std::fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::GaussianTraceFree => write!(f, "gaussian_trace_free"),
            Self::GaussGramianTraceFree => write!(f, "gauss_gramian_trace_free"),
            Self::GenericGaussian => write!(f, "generic_gaussian"),
            Self::RankRPsd(r) => write!(f, "rank_r_psd:{r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub trace_convention: TraceConvention,
}

fn normal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// `A - tr(A) I` or `A - (tr(A)/n) I`.
pub fn subtract_trace(a: DMatrix<f64>, conv: TraceConvention) -> DMatrix<f64> {
    let n = a.nrows();
    let tr = a.trace();
    let shift = match conv {
        TraceConvention::Literal => tr,
        TraceConvention::Normalized => tr / n as f64,
    };
    a - DMatrix::identity(n, n) * shift
}

/// Draw one quadratic form.
pub fn sample_quadratic<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<Form> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    match spec.kind {
        EnsembleKind::GaussianTraceFree | EnsembleKind::GaussGramianTraceFree if n == 1 => {
            Err(Error::InvalidArgument("trace-free ensembles need n >= 2".into()))
        }
        EnsembleKind::RankRPsd(r) if r == 0 || r > n => {
            Err(Error::InvalidArgument(format!("rank {r} outside 1..={n}")))
        }
        _ => {
            for _ in 0..100 {
                let q = match spec.kind {
                    EnsembleKind::GaussianTraceFree => {
                        let a = normal_matrix(n, n, rng);
                        let s = (&a + a.transpose()) * 0.5;
                        subtract_trace(s, spec.trace_convention)
                    }
                    EnsembleKind::GaussGramianTraceFree => {
                        let a = normal_matrix(n, n, rng);
                        subtract_trace(a.tr_mul(&a), spec.trace_convention)
                    }
                    EnsembleKind::GenericGaussian => {
                        let a = normal_matrix(n, n, rng);
                        (&a + a.transpose()) * 0.5
                    }
                    EnsembleKind::RankRPsd(r) => {
                        let b = normal_matrix(n, r, rng);
                        &b * b.transpose()
                    }
                };
                let f = Form::from_sym_matrix(&q);
                if !f.is_zero() {
                    return Ok(f);
                }
            }
            Err(Error::NumericalFailure("ensemble keeps producing the zero form".into()))
        }
    }
}

/// Index triples `1 <= i <= j <= k <= n` with `n | i + j + k` (zero-based).
fn conj_triples(n: usize) -> Result<Vec<[usize; 3]>> {
    if n < 2 {
        return Err(Error::InvalidArgument("conjecture families need n >= 2".into()));
    }
    let mut out = Vec::new();
    for i in 1..=n {
        for j in i..=n {
            for k in j..=n {
                if (i + j + k) % n == 0 {
                    out.push([i - 1, j - 1, k - 1]);
                }
            }
        }
    }
    let expected = ((n + 2) * (n + 1)).div_ceil(6);
    if out.len() != expected {
        return Err(Error::CountMismatch { expected, found: out.len() });
    }
    Ok(out)
}

/// `(X_i + X_j + X_k)^2` over the conjecture index set.
pub fn conj42_family(n: usize) -> Result<Vec<Form>> {
    Ok(conj_triples(n)?
        .into_iter()
        .map(|t| {
            let mut c = vec![0.0; n];
            t.iter().for_each(|&i| c[i] += 1.0);
            Form::linear(&c).power(2)
        })
        .collect())
}

/// `(X_i + X_j + X_k)(Y_i + Y_j + Y_k)` in variables `X_1..X_n, Y_1..Y_n`.
pub fn conj49_family(n: usize) -> Result<Vec<Form>> {
    Ok(conj_triples(n)?
        .into_iter()
        .map(|t| {
            let mut cx = vec![0.0; 2 * n];
            let mut cy = vec![0.0; 2 * n];
            t.iter().for_each(|&i| {
                cx[i] += 1.0;
                cy[n + i] += 1.0;
            });
            Form::linear(&cx).multiply(&Form::linear(&cy)).expect("same variables")
        })
        .collect())
}

/// `X_i^2 - X_n^2` for `i = 1..m`.
pub fn special_instance(n: usize, m: usize) -> Result<Vec<Form>> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(format!("special instance needs 1 <= m <= n - 1, got n={n}, m={m}")));
    }
    let last = Form::variable(n, n - 1).power(2);
    Ok((0..m).map(|i| Form::variable(n, i).power(2).sub(&last).expect("same space")).collect())
}

/// `sum_i q_i^d`.
pub fn power_sum(forms: &[Form], d: u32) -> Result<Form> {
    let first = forms.first().ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let mut out = Form::zero(first.nvars(), first.degree() * d);
    for q in forms {
        out = out.add(&q.power(d))?;
    }
    Ok(out)
}

/// How many quadratics to draw for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MRule {
    /// `n + offset`.
    Offset(i64),
    /// `ceil((n+2)(n+1)/6)`.
    Conj42,
    Fixed(usize),
}

impl MRule {
    pub fn m_for(&self, n: usize) -> Result<usize> {
        let m = match *self {
            MRule::Offset(o) => n as i64 + o,
            MRule::Conj42 => ((n + 2) * (n + 1)).div_ceil(6) as i64,
            MRule::Fixed(m) => m as i64,
        };
        if m < 1 {
            return Err(Error::InvalidArgument(format!("rule gives m = {m} for n = {n}")));
        }
        Ok(m as usize)
    }
}

impl FromStr for MRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "conj42" {
            return Ok(MRule::Conj42);
        }
        if s == "n" {
            return Ok(MRule::Offset(0));
        }
        if let Some(rest) = s.strip_prefix("n+") {
            return rest.parse().map(MRule::Offset).map_err(|_| Error::InvalidArgument(format!("bad m rule {s:?}")));
        }
        if let Some(rest) = s.strip_prefix("n-") {
            return rest
                .parse::<i64>()
                .map(|o| MRule::Offset(-o))
                .map_err(|_| Error::InvalidArgument(format!("bad m rule {s:?}")));
        }
        s.parse().map(MRule::Fixed).map_err(|_| Error::InvalidArgument(format!("bad m rule {s:?}")))
    }
}

/// What the study samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudySource {
    Ensemble(EnsembleKind),
    Special,
}

impl FromStr for StudySource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "special" || s == "special_instance" {
            return Ok(StudySource::Special);
        }
        s.parse().map(StudySource::Ensemble)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub unique: usize,
    pub dual_nondeg: usize,
    pub failures: usize,
    pub mean_seconds: f64,
}

impl StudyRow {
    /// Unique fraction among trials that did not fail.
    pub fn unique_frequency(&self) -> f64 {
        let ok = self.trials - self.failures;
        if ok == 0 {
            0.0
        } else {
            self.unique as f64 / ok as f64
        }
    }
}

/// Per-trial seed.
pub fn trial_seed(seed: u64, n: usize, m: usize, trial: usize) -> u64 {
    let mut h = seed;
    for v in [n as u64, m as u64, trial as u64] {
        h = splitmix(h ^ splitmix(v));
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy)]
struct TrialOutcome {
    unique: bool,
    dual_nondeg: bool,
    failed: bool,
    seconds: f64,
}

fn run_trial(source: StudySource, n: usize, m: usize, seed: u64, cfg: &Config) -> TrialOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forms = match source {
        StudySource::Special => special_instance(n, m),
        StudySource::Ensemble(kind) => {
            let spec = EnsembleSpec { kind, n, trace_convention: cfg.trace_convention };
            (0..m).map(|_| sample_quadratic(&spec, &mut rng)).collect()
        }
    };
    let cert = forms.and_then(|q| power_sum(&q, 2)).and_then(|f2| gram::check_uniqueness(&f2, cfg));
    let seconds = start.elapsed().as_secs_f64();
    match cert {
        Ok(c) => TrialOutcome { unique: c.unique, dual_nondeg: c.dual_nondegenerate, failed: false, seconds },
        Err(_) => TrialOutcome { unique: false, dual_nondeg: false, failed: true, seconds },
    }
}

/// Certify `trials` sums of `m` squares for every `n`; solver failures are
/// counted in `failures` and excluded from the unique counts.
pub fn run_study(
    source: StudySource,
    n_list: &[usize],
    m_rule: MRule,
    trials: usize,
    seed: u64,
    cfg: &Config,
) -> Result<Vec<StudyRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let m = m_rule.m_for(n)?;
        let outcomes: Vec<TrialOutcome> = pool.install(|| {
            (0..trials).into_par_iter().map(|t| run_trial(source, n, m, trial_seed(seed, n, m, t), cfg)).collect()
        });
        rows.push(StudyRow {
            n,
            m,
            trials,
            unique: outcomes.iter().filter(|o| o.unique).count(),
            dual_nondeg: outcomes.iter().filter(|o| o.dual_nondeg).count(),
            failures: outcomes.iter().filter(|o| o.failed).count(),
            mean_seconds: outcomes.iter().map(|o| o.seconds).sum::<f64>() / trials as f64,
        });
    }
    Ok(rows)
}

/// CSV with header `n,m,trials,unique,dual_nondeg,failures,mean_seconds`.
pub fn write_study_csv<W: Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum Conjecture {
    /// Cubic products of the squared family are independent.
    #[value(name = "4.2")]
    #[serde(rename = "4.2")]
    Squares,
    /// The sum of squares of the bilinear family is unique with a nondegenerate dual.
    #[value(name = "4.9")]
    #[serde(rename = "4.9")]
    Bilinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureReport {
    pub family: Conjecture,
    pub n: usize,
    pub m: usize,
    pub relation_dim_3: usize,
    pub relation_expected: usize,
    pub relation_ok: bool,
    pub unique: Option<bool>,
    pub dual_nondegenerate: Option<bool>,
    pub face_dim: Option<usize>,
    pub dim_u: Option<usize>,
}

/// Check the family claims for one `n`.
pub fn verify_conjecture(which: Conjecture, n: usize, cfg: &Config) -> Result<ConjectureReport> {
    let forms = match which {
        Conjecture::Squares => conj42_family(n)?,
        Conjecture::Bilinear => conj49_family(n)?,
    };
    let m = forms.len();
    let relation_dim_3 = gram::relation_dim_3_of(&forms, cfg.tol_lin_rank);
    let relation_expected = binomial(m + 2, 3);
    let mut report = ConjectureReport {
        family: which,
        n,
        m,
        relation_dim_3,
        relation_expected,
        relation_ok: relation_dim_3 == relation_expected,
        unique: None,
        dual_nondegenerate: None,
        face_dim: None,
        dim_u: None,
    };
    if which == Conjecture::Bilinear {
        let cert = gram::certify(&power_sum(&forms, 2)?, cfg)?;
        report.unique = Some(cert.unique && cert.dim_u == m);
        report.dual_nondegenerate = Some(cert.dual_nondegenerate);
        report.face_dim = Some(cert.face_dim);
        report.dim_u = Some(cert.dim_u);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_counts() {
        assert_eq!(conj42_family(7).unwrap().len(), 12);
        assert_eq!(conj42_family(3).unwrap().len(), 4);
        assert_eq!(conj42_family(2).unwrap().len(), 2);
        assert_eq!(conj49_family(2).unwrap().len(), 2);
        assert_eq!(conj49_family(3).unwrap().len(), 4);
        for n in 2..=30 {
            assert_eq!(conj_triples(n).unwrap().len(), ((n + 2) * (n + 1)).div_ceil(6));
        }
    }

    #[test]
    fn bilinear_family_is_trace_free() {
        for q in conj49_family(7).unwrap() {
            assert_eq!(q.nvars(), 14);
            assert_eq!(q.to_sym_matrix().unwrap().trace(), 0.0);
        }
    }

    #[test]
    fn substitution_recovers_squares() {
        let n = 5;
        let mut sub = DMatrix::zeros(2 * n, n);
        for i in 0..n {
            sub[(i, i)] = 1.0;
            sub[(n + i, i)] = 1.0;
        }
        for (b, s) in conj49_family(n).unwrap().iter().zip(conj42_family(n).unwrap()) {
            assert!(b.linear_substitution(&sub).unwrap().distance(&s).unwrap() < 1e-12);
        }
    }

    #[test]
    fn special_instances() {
        let q = special_instance(3, 2).unwrap();
        assert_eq!(q[0], Form::from_terms(3, 2, &[(&[2, 0, 0], 1.0), (&[0, 0, 2], -1.0)]).unwrap());
        assert_eq!(special_instance(2, 1).unwrap().len(), 1);
        assert!(special_instance(3, 3).is_err());
    }

    #[test]
    fn sampling_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        for conv in [TraceConvention::Literal, TraceConvention::Normalized] {
            let spec = EnsembleSpec { kind: EnsembleKind::GaussianTraceFree, n, trace_convention: conv };
            let q = sample_quadratic(&spec, &mut rng).unwrap();
            let tr = q.to_sym_matrix().unwrap().trace();
            if conv == TraceConvention::Normalized {
                assert!(tr.abs() < 1e-12);
            } else {
                assert!(tr.abs() > 1e-9);
            }
        }
        let spec = EnsembleSpec { kind: EnsembleKind::GaussianTraceFree, n: 1, trace_convention: TraceConvention::Literal };
        assert!(sample_quadratic(&spec, &mut rng).is_err());
        let spec = EnsembleSpec { kind: EnsembleKind::RankRPsd(2), n: 3, trace_convention: TraceConvention::Literal };
        let q = sample_quadratic(&spec, &mut rng).unwrap().to_sym_matrix().unwrap();
        assert_eq!(crate::linalg::numerical_rank(&q, 1e-10), 2);
    }

    #[test]
    fn rules_parse() {
        assert_eq!("n-1".parse::<MRule>().unwrap().m_for(6).unwrap(), 5);
        assert_eq!("n".parse::<MRule>().unwrap().m_for(6).unwrap(), 6);
        assert_eq!("conj42".parse::<MRule>().unwrap().m_for(7).unwrap(), 12);
        assert_eq!("13".parse::<MRule>().unwrap().m_for(4).unwrap(), 13);
        assert!("n-x".parse::<MRule>().is_err());
    }

    #[test]
    fn small_conjecture_checks() {
        let cfg = Config::default();
        let r = verify_conjecture(Conjecture::Squares, 2, &cfg).unwrap();
        assert!(r.relation_ok && r.relation_dim_3 == 4);
        let r = verify_conjecture(Conjecture::Bilinear, 3, &cfg).unwrap();
        assert_eq!(r.unique, Some(true));
        assert_eq!(r.dual_nondegenerate, Some(true));
    }

    #[test]
    fn special_study_is_all_unique() {
        let rows = run_study(StudySource::Special, &[3, 4], MRule::Offset(-1), 2, 1, &Config::default()).unwrap();
        for r in &rows {
            assert_eq!(r.unique, r.trials);
        }
        let mut buf = Vec::new();
        write_study_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,m,trials,unique,dual_nondeg,failures,mean_seconds\n"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        assert_eq!(trial_seed(7, 4, 3, 0), trial_seed(7, 4, 3, 0));
        assert_ne!(trial_seed(7, 4, 3, 0), trial_seed(7, 4, 3, 1));
        assert_ne!(trial_seed(7, 4, 3, 0), trial_seed(7, 3, 4, 0));
    }
}
