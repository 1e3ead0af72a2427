//! Gram spectrahedra of even-degree forms: support, uniqueness, dual
//! certificates and the cubic relation count.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg;
use crate::poly::{binomial, monomial_count, product_rank, Form, ProductTable, Subspace};
use crate::sdp::{self, SdpProblem, SdpSolution};

fn half_degree(f: &Form) -> Result<u32> {
    if f.degree() % 2 == 1 {
        return Err(Error::OddDegree(f.degree()));
    }
    Ok(f.degree() / 2)
}

/// One constraint per degree-`2k` monomial: `sum_{alpha+beta=gamma} G[alpha,beta] = f_gamma`.
pub fn gram_constraints(f: &Form) -> Result<SdpProblem> {
    let k = half_degree(f)?;
    let n = f.nvars();
    let side = monomial_count(n, k);
    let table = ProductTable::new(n, k, k);
    let mut groups: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); table.target_len];
    for j in 0..side {
        for i in 0..=j {
            groups[table.get(i, j)].push((i, j, 1.0));
        }
    }
    let mut prob = SdpProblem::new(side);
    for (g, entries) in groups.into_iter().enumerate() {
        prob.push(entries, f.coeffs()[g])?;
    }
    Ok(prob)
}

/// Linear functional on degree-`2k` forms with its moment matrix.
#[derive(Debug, Clone)]
pub struct MomentFunctional {
    pub n: usize,
    pub k: u32,
    /// `E(X^gamma)` in graded-lex order of the degree-`2k` monomials.
    pub values: Vec<f64>,
    pub moment_matrix: DMatrix<f64>,
    /// Set when no nonzero functional vanishes on `f` (`f` is interior); the
    /// values are then all zero.
    pub trivial: bool,
}

impl MomentFunctional {
    fn from_values(n: usize, k: u32, values: Vec<f64>, trivial: bool) -> Self {
        let side = monomial_count(n, k);
        let table = ProductTable::new(n, k, k);
        let moment_matrix = DMatrix::from_fn(side, side, |i, j| values[table.get(i, j)]);
        Self { n, k, values, moment_matrix, trivial }
    }

    /// `E(g)` for a form of degree `2k`.
    pub fn apply(&self, g: &Form) -> Result<f64> {
        if g.nvars() != self.n || g.degree() != 2 * self.k {
            return Err(Error::InvalidArgument("functional applied to a form of the wrong shape".into()));
        }
        Ok(g.coeffs().iter().zip(&self.values).map(|(a, b)| a * b).sum())
    }

    /// Kernel of the moment matrix as a space of `k`-forms.
    pub fn kernel(&self, tol_rank: f64) -> Result<Subspace> {
        let side = self.moment_matrix.nrows();
        if self.trivial {
            return Ok(Subspace::full(self.n, self.k));
        }
        let (eig, vecs) = linalg::sym_eigen_desc(&self.moment_matrix);
        let rank = linalg::count_above(&eig, tol_rank);
        Subspace::from_columns(self.n, self.k, &vecs.columns(rank, side - rank).into_owned())
    }
}

/// Both uniqueness hypotheses plus the dual check for one `f2`.
#[derive(Debug, Clone)]
pub struct SupportCertificate {
    pub support: Subspace,
    pub dim_u: usize,
    pub face_dim: usize,
    pub unique: bool,
    pub dual_nondegenerate: bool,
    pub relation_dim_3: usize,
    pub relation_ok: bool,
    pub residuals: BTreeMap<String, f64>,
}

impl SupportCertificate {
    /// `C(dim U + 2, 3)`.
    pub fn relation_expected(&self) -> usize {
        binomial(self.dim_u + 2, 3)
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            dim_u: self.dim_u,
            face_dim: self.face_dim,
            unique: self.unique,
            dual_nondegenerate: self.dual_nondegenerate,
            relation_dim_3: self.relation_dim_3,
            relation_ok: self.relation_ok,
            residuals: self.residuals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    #[serde(rename = "dim_U")]
    pub dim_u: usize,
    pub face_dim: usize,
    pub unique: bool,
    pub dual_nondegenerate: bool,
    pub relation_dim_3: usize,
    pub relation_ok: bool,
    pub residuals: BTreeMap<String, f64>,
}

impl Serialize for SupportCertificate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

/// Solve the Gram problem of `f` for a relative-interior point.
pub fn solve_gram(f: &Form, cfg: &Config) -> Result<SdpSolution> {
    let prob = gram_constraints(f)?;
    let sol = sdp::solve_relint(&prob, &cfg.solver)?;
    if cfg.solver.retries > 0
        && !sdp::rank_stability_check(&prob, &sol, cfg.solver.retries, &cfg.solver, cfg.tol_angle, cfg.seed)?
    {
        return Err(Error::NumericalFailure("Gram point rank is not stable under re-solves".into()));
    }
    Ok(sol)
}

fn support_from(f: &Form, sol: &SdpSolution) -> Result<Subspace> {
    let k = f.degree() / 2;
    Subspace::from_columns(f.nvars(), k, &sol.image())
}

/// Image of a relative-interior Gram point, as orthonormal `k`-forms.
pub fn sos_support(f: &Form, cfg: &Config) -> Result<(Subspace, SdpSolution)> {
    half_degree(f)?;
    let sol = solve_gram(f, cfg)?;
    Ok((support_from(f, &sol)?, sol))
}

/// Nullity of `H -> sum_ab H_ab u_a u_b` on symmetric `H` over `U`.
pub fn face_dimension(u: &Subspace, tol_lin_rank: f64) -> usize {
    let nn = u.dim();
    if nn == 0 {
        return 0;
    }
    if is_full(u) {
        return binomial(nn + 1, 2) - monomial_count(u.nvars(), 2 * u.degree());
    }
    let rank = product_rank(&echelon_basis(u), 2, tol_lin_rank).expect("subspace basis is homogeneous");
    binomial(nn + 1, 2) - rank
}

fn is_full(u: &Subspace) -> bool {
    u.dim() == monomial_count(u.nvars(), u.degree())
}

fn dual_from(f: &Form, sol: &SdpSolution) -> MomentFunctional {
    let n = f.nvars();
    let k = f.degree() / 2;
    if sol.numerical_rank == sol.matrix.nrows() {
        return MomentFunctional::from_values(n, k, vec![0.0; f.coeffs().len()], true);
    }
    MomentFunctional::from_values(n, k, sol.dual.y.iter().copied().collect(), false)
}

/// Relative-interior functional with `E(f) = 0`, `M_E >= 0`, `tr M_E = 1`.
pub fn dual_certificate(f: &Form, cfg: &Config) -> Result<MomentFunctional> {
    half_degree(f)?;
    let sol = solve_gram(f, cfg)?;
    Ok(dual_from(f, &sol))
}

/// Whether `ker M_E` equals `U`. With no nonzero certificate the answer is
/// whether `U` is everything.
pub fn dual_nondegeneracy(f: &Form, u: &Subspace, cfg: &Config) -> Result<bool> {
    let e = dual_certificate(f, cfg)?;
    nondegenerate_from(&e, u, cfg).map(|(ok, _)| ok)
}

fn nondegenerate_from(e: &MomentFunctional, u: &Subspace, cfg: &Config) -> Result<(bool, f64)> {
    if e.trivial {
        return Ok((is_full(u), 0.0));
    }
    let ker = e.kernel(cfg.solver.tol_rank)?;
    let angle = ker.principal_angle(u);
    Ok((ker.dim() == u.dim() && angle < cfg.tol_angle, angle))
}

/// Rank of the cubic products of a basis of `U`.
pub fn relation_dim_3(u: &Subspace, tol_lin_rank: f64) -> usize {
    if is_full(u) && u.dim() > 0 {
        return monomial_count(u.nvars(), 3 * u.degree());
    }
    relation_dim_3_of(&echelon_basis(u), tol_lin_rank)
}

/// Reduced row echelon basis of `U` (complete pivoting); keeps products sparse.
fn echelon_basis(u: &Subspace) -> Vec<Form> {
    let Some(first) = u.basis().first() else { return Vec::new() };
    let (r, c) = (u.dim(), first.coeffs().len());
    let mut b = DMatrix::from_fn(r, c, |i, j| u.basis()[i].coeffs()[j]);
    let mut used = vec![false; c];
    for row in 0..r {
        let mut best = (0.0, row, 0);
        for i in row..r {
            for j in (0..c).filter(|&j| !used[j]) {
                if b[(i, j)].abs() > best.0 {
                    best = (b[(i, j)].abs(), i, j);
                }
            }
        }
        let (_, pi, pj) = best;
        if best.0 == 0.0 {
            break;
        }
        b.swap_rows(row, pi);
        used[pj] = true;
        let p = b[(row, pj)];
        for j in 0..c {
            b[(row, j)] /= p;
        }
        for i in (0..r).filter(|&i| i != row) {
            let f = b[(i, pj)];
            if f != 0.0 {
                for j in 0..c {
                    b[(i, j)] -= f * b[(row, j)];
                }
            }
        }
    }
    b.iter_mut().filter(|v| v.abs() < 1e-9).for_each(|v| *v = 0.0);
    (0..r)
        .map(|i| Form::from_coeffs(first.nvars(), first.degree(), b.row(i).iter().copied().collect()).expect("same shape"))
        .collect()
}

/// Same count for any spanning set; equals `dim R[U]_3`.
pub fn relation_dim_3_of(forms: &[Form], tol_lin_rank: f64) -> usize {
    if forms.is_empty() {
        return 0;
    }
    product_rank(forms, 3, tol_lin_rank).expect("forms share a space")
}

/// Support, face dimension, dual check and relation count from one solve.
pub fn certify(f2: &Form, cfg: &Config) -> Result<SupportCertificate> {
    let check = check_uniqueness(f2, cfg)?;
    let relation_dim_3 = relation_dim_3(&check.support, cfg.tol_lin_rank);
    Ok(SupportCertificate {
        relation_ok: relation_dim_3 == binomial(check.dim_u + 2, 3),
        relation_dim_3,
        support: check.support,
        dim_u: check.dim_u,
        face_dim: check.face_dim,
        unique: check.unique,
        dual_nondegenerate: check.dual_nondegenerate,
        residuals: check.residuals,
    })
}

/// The certificate without the cubic relation count.
#[derive(Debug, Clone)]
pub struct UniquenessCheck {
    pub support: Subspace,
    pub dim_u: usize,
    pub face_dim: usize,
    pub unique: bool,
    pub dual_nondegenerate: bool,
    pub residuals: BTreeMap<String, f64>,
}

/// Support, face dimension and dual check from one solve.
pub fn check_uniqueness(f2: &Form, cfg: &Config) -> Result<UniquenessCheck> {
    half_degree(f2)?;
    let sol = solve_gram(f2, cfg)?;
    let support = support_from(f2, &sol)?;
    let dim_u = support.dim();
    let face_dim = face_dimension(&support, cfg.tol_lin_rank);
    let e = dual_from(f2, &sol);
    let (dual_nondegenerate, angle) = nondegenerate_from(&e, &support, cfg)?;
    let mut residuals = BTreeMap::new();
    residuals.insert("gram_constraint".to_string(), sol.max_constraint_residual);
    residuals.insert("gram_min_eigenvalue".to_string(), sol.min_eigenvalue());
    if sol.gap.is_finite() {
        residuals.insert("duality_gap".to_string(), sol.gap);
    }
    residuals.insert("dual_kernel_angle".to_string(), angle);
    residuals.insert("moment_min_eigenvalue".to_string(), sol.dual.slack_eigenvalues.last().copied().unwrap_or(0.0));
    residuals.insert("solver_iterations".to_string(), sol.iterations as f64);
    Ok(UniquenessCheck { support, dim_u, face_dim, unique: face_dim == 0, dual_nondegenerate, residuals })
}
