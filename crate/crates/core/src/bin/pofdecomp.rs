use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use pofdecomp::gmm::{self, MixtureModel, MomentConvention, MomentSet, MomentSetJson, ShiftRule};
use pofdecomp::instances::{self, Conjecture, EnsembleKind, EnsembleSpec, MRule, StudySource};
use pofdecomp::jennrich::Addend;
use pofdecomp::{gram, pipeline, Config, Error, Form, TraceConvention};

#[derive(Parser)]
#[command(name = "pofdecomp", version, about = "Powers-of-forms decomposition with uniqueness certificates")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_rank: f64,
    #[arg(long, global = true, default_value_t = 1e-7)]
    tol_feas: f64,
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_residual: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Interior-point iteration cap.
    #[arg(long, global = true, env = "POF_SOLVER_MAX_ITER", default_value_t = 120)]
    max_iter: usize,
    /// Perturbed re-solves for the rank-stability check.
    #[arg(long, global = true, default_value_t = 0)]
    retries: usize,
    /// Worker threads for study trials.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = TraceConvention::Literal)]
    trace_convention: TraceConvention,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decompose (f2, f3) and certify uniqueness.
    Decompose {
        f2: PathBuf,
        f3: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Support, face dimension, dual check and relation count for f2.
    Certify {
        f2: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo estimate of unique representability; writes CSV.
    Study {
        /// Ensemble kind, or `special`.
        #[arg(long)]
        kind: String,
        /// `a:b` (inclusive) or a comma list.
        #[arg(long)]
        n_range: String,
        /// `n-1`, `n`, `n+1`, `conj42` or a fixed count.
        #[arg(long, default_value = "n-1")]
        m_rule: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a conjectured family at one n.
    Verify {
        #[arg(long, value_enum)]
        family: Conjecture,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write an instance: f2.json, f3.json and truth.json, or moments.json
    /// and truth.json for `mixture` and `subspaces`.
    Gen {
        /// Ensemble kind, `special`, `conj42`, `conj49`, `mixture` or `subspaces`.
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: Option<usize>,
        /// Component rank for `subspaces`.
        #[arg(long, default_value_t = 1)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = ConventionArg::Mgf)]
        convention: ConventionArg,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Recover a centered Gaussian mixture from moments.json.
    Gmm {
        moments: PathBuf,
        /// `trace-mean`, `spectral[:factor]` or a fixed shift.
        #[arg(long, default_value = "trace-mean")]
        shift: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a union of rank-r subspaces from moments.json.
    Subspaces {
        moments: PathBuf,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ConventionArg {
    Mgf,
    Raw,
}

/// Exit status: proved, honest failure of the hypotheses, or error.
enum Outcome {
    Proved,
    NotProved,
}

fn config(o: &Opts) -> Result<Config, Error> {
    for (name, v) in [("tol-rank", o.tol_rank), ("tol-feas", o.tol_feas), ("tol-residual", o.tol_residual)] {
        if v.is_nan() || v <= 0.0 {
            return Err(Error::InvalidArgument(format!("--{name} must be positive")));
        }
    }
    if o.threads == 0 {
        return Err(Error::InvalidArgument("--threads must be at least 1".into()));
    }
    let mut cfg = Config::default();
    cfg.solver.tol_rank = o.tol_rank;
    cfg.solver.tol_feas = o.tol_feas;
    cfg.solver.max_iter = o.max_iter;
    cfg.solver.retries = o.retries;
    cfg.tol_residual = o.tol_residual;
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.trace_convention = o.trace_convention;
    Ok(cfg)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn parse_n_list(s: &str) -> Result<Vec<usize>, Error> {
    let bad = || Error::InvalidArgument(format!("bad --n-range {s:?}"));
    if let Some((a, b)) = s.split_once(':') {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn outcome(proved: bool) -> Outcome {
    if proved {
        Outcome::Proved
    } else {
        Outcome::NotProved
    }
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let cfg = config(&cli.opts)?;
    match cli.cmd {
        Cmd::Decompose { f2, f3, out } => {
            let f2: Form = read_json(&f2)?;
            let f3: Form = read_json(&f3)?;
            match pipeline::decompose(&f2, &f3, &cfg) {
                Ok(res) => {
                    write_json(&res.to_json(), out.as_deref())?;
                    Ok(outcome(res.unique_proved))
                }
                Err(Error::HypothesisFailure(cert)) => {
                    eprintln!("hypothesis failure: relation dimension {} of {}, face dim {}", cert.relation_dim_3, cert.relation_expected(), cert.face_dim);
                    write_json(&cert.to_json(), out.as_deref())?;
                    Ok(Outcome::NotProved)
                }
                Err(e) => Err(e),
            }
        }
        Cmd::Certify { f2, out } => {
            let f2: Form = read_json(&f2)?;
            let cert = gram::certify(&f2, &cfg)?;
            write_json(&cert.to_json(), out.as_deref())?;
            Ok(outcome(cert.unique && cert.relation_ok))
        }
        Cmd::Study { kind, n_range, m_rule, trials, out } => {
            let source: StudySource = kind.parse()?;
            let rule: MRule = m_rule.parse()?;
            let rows = instances::run_study(source, &parse_n_list(&n_range)?, rule, trials, cfg.seed, &cfg)?;
            match out {
                Some(p) => instances::write_study_csv(&rows, fs::File::create(p)?)?,
                None => instances::write_study_csv(&rows, std::io::stdout().lock())?,
            }
            Ok(Outcome::Proved)
        }
        Cmd::Verify { family, n, out } => {
            let report = instances::verify_conjecture(family, n, &cfg)?;
            write_json(&report, out.as_deref())?;
            let holds = report.relation_ok && report.unique.unwrap_or(true) && report.dual_nondegenerate.unwrap_or(true);
            Ok(outcome(holds))
        }
        Cmd::Gen { kind, n, m, rank, convention, out_dir } => {
            generate(&kind, n, m, rank, convention, &out_dir, &cfg)?;
            Ok(Outcome::Proved)
        }
        Cmd::Gmm { moments, shift, out } => {
            let j: MomentSetJson = read_json(&moments)?;
            let rule: ShiftRule = shift.parse()?;
            match gmm::gmm_recover(&MomentSet::from_json(&j)?, rule, &cfg) {
                Ok(rec) => {
                    write_json(&rec.to_json(), out.as_deref())?;
                    Ok(outcome(rec.pipeline.unique_proved))
                }
                Err(Error::HypothesisFailure(cert)) => {
                    eprintln!("hypothesis failure after shifting: face dim {}", cert.face_dim);
                    write_json(&cert.to_json(), out.as_deref())?;
                    Ok(Outcome::NotProved)
                }
                Err(e) => Err(e),
            }
        }
        Cmd::Subspaces { moments, rank, out } => {
            let j: MomentSetJson = read_json(&moments)?;
            let rec = gmm::subspace_recover(&MomentSet::from_json(&j)?, rank, &cfg)?;
            write_json(&rec.to_json(), out.as_deref())?;
            Ok(outcome(rec.pipeline.unique_proved))
        }
    }
}

fn write_pair(forms: &[Form], dir: &Path) -> Result<(), Error> {
    let f2 = instances::power_sum(forms, 2)?;
    let f3 = instances::power_sum(forms, 3)?;
    write_json(&f2, Some(&dir.join("f2.json")))?;
    write_json(&f3, Some(&dir.join("f3.json")))?;
    let truth: Vec<Addend> = forms.iter().map(|q| Addend { q: q.clone(), lambda: 1.0 }).collect();
    write_json(&truth, Some(&dir.join("truth.json")))
}

fn write_moments(model: &MixtureModel, conv: ConventionArg, dir: &Path) -> Result<(), Error> {
    let conv = match conv {
        ConventionArg::Mgf => MomentConvention::Mgf,
        ConventionArg::Raw => MomentConvention::Raw,
    };
    write_json(&gmm::moments_from_model(model).to_json(conv), Some(&dir.join("moments.json")))?;
    write_json(&model.to_json(), Some(&dir.join("truth.json")))
}

fn generate(kind: &str, n: usize, m: Option<usize>, rank: usize, conv: ConventionArg, dir: &Path, cfg: &Config) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let need_m = || m.ok_or_else(|| Error::InvalidArgument(format!("--m is required for kind {kind}")));
    match kind {
        "conj42" => write_pair(&instances::conj42_family(n)?, dir),
        "conj49" => write_pair(&instances::conj49_family(n)?, dir),
        "special" => write_pair(&instances::special_instance(n, m.unwrap_or(n.saturating_sub(1)))?, dir),
        "mixture" => write_moments(&gmm::sample_good_mixture(n, need_m()?, &mut rng, cfg)?, conv, dir),
        "subspaces" => {
            let spec = EnsembleSpec { kind: EnsembleKind::RankRPsd(rank), n, trace_convention: cfg.trace_convention };
            let m = need_m()?;
            let comps = (0..m)
                .map(|_| instances::sample_quadratic(&spec, &mut rng).map(|q| Addend { q, lambda: 1.0 / m as f64 }))
                .collect::<Result<Vec<_>, _>>()?;
            write_moments(&MixtureModel::new(n, comps)?, conv, dir)
        }
        other => {
            let kind: EnsembleKind = other.parse()?;
            let spec = EnsembleSpec { kind, n, trace_convention: cfg.trace_convention };
            let forms = (0..need_m()?).map(|_| instances::sample_quadratic(&spec, &mut rng)).collect::<Result<Vec<_>, _>>()?;
            write_pair(&forms, dir)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // only study trials run in parallel
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    match run(cli) {
        Ok(Outcome::Proved) => ExitCode::SUCCESS,
        Ok(Outcome::NotProved) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
