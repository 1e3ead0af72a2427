//! Monte-Carlo estimate of how often a sum of `m` squared random trace-free
//! quadratics is uniquely representable. Writes CSV to stdout.
//!
//! ```bash
//! cargo run --release --example study -- 10
//! ```

use pofdecomp::instances::{run_study, write_study_csv, EnsembleKind, MRule, StudySource};
use pofdecomp::{Config, TraceConvention};

fn main() -> pofdecomp::Result<()> {
    let trials: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let cfg = Config {
        trace_convention: TraceConvention::Normalized,
        threads: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        ..Config::default()
    };

    let source = StudySource::Ensemble(EnsembleKind::GaussianTraceFree);
    let mut rows = run_study(source, &[3, 4, 5, 6], MRule::Offset(-1), trials, 2024, &cfg)?;
    rows.extend(run_study(source, &[4, 6, 8], MRule::Offset(0), trials, 2024, &cfg)?);
    write_study_csv(&rows, std::io::stdout())?;
    for r in &rows {
        eprintln!("n={} m={} unique frequency {:.2}", r.n, r.m, r.unique_frequency());
    }
    Ok(())
}
