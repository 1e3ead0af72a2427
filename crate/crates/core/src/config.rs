use serde::{Deserialize, Serialize};

/// Interior-point solver settings and acceptance tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Constraint residual allowed on returned points (relative to `max(1, |b|_inf)`).
    pub tol_feas: f64,
    /// Most negative eigenvalue tolerated on returned matrices.
    pub tol_psd: f64,
    /// Eigenvalues above `tol_rank * max(lambda_max, 1)` count toward the rank.
    pub tol_rank: f64,
    /// Relative duality gap at which iterations stop.
    pub tol_gap: f64,
    /// Extra perturbed solves used by the rank-stability check.
    pub retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iter: 120, tol_feas: 1e-7, tol_psd: 1e-8, tol_rank: 1e-7, tol_gap: 1e-12, retries: 0 }
    }
}

/// How trace-free random quadratics subtract the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TraceConvention {
    /// `A - tr(A) I`.
    #[default]
    Literal,
    /// `A - (tr(A) / n) I`.
    Normalized,
}

/// Settings shared by the certificate, decomposition and application layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub solver: SolverConfig,
    /// Relative reconstruction residual accepted for decompositions.
    pub tol_residual: f64,
    /// Relative singular-value cutoff for ranks of product and derivative spans.
    pub tol_lin_rank: f64,
    /// Principal-angle tolerance for subspace equality.
    pub tol_angle: f64,
    /// Relative eigenvalue gap below which generalized eigenvalues collide.
    pub collision_tol: f64,
    /// Random directions tried before giving up on a collision.
    pub max_retries: usize,
    pub seed: u64,
    pub threads: usize,
    pub trace_convention: TraceConvention,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            tol_residual: 1e-6,
            tol_lin_rank: 1e-6,
            tol_angle: 1e-5,
            collision_tol: 1e-8,
            max_retries: 5,
            seed: 0,
            threads: 1,
            trace_convention: TraceConvention::Literal,
        }
    }
}
