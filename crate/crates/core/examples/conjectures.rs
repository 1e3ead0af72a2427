//! The two explicit families with `ceil((n+2)(n+1)/6)` members: cubic
//! relations of the squared family, and unique representability of the
//! bilinear family.

use std::time::Instant;

use pofdecomp::instances::{verify_conjecture, Conjecture};
use pofdecomp::Config;

fn main() -> pofdecomp::Result<()> {
    let cfg = Config::default();
    let max_n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    for n in 2..=max_n {
        let t = Instant::now();
        let r = verify_conjecture(Conjecture::Squares, n, &cfg)?;
        println!("squares  n={n:2} m={:3} relations {}/{} ({:.2}s)", r.m, r.relation_dim_3, r.relation_expected, t.elapsed().as_secs_f64());
    }
    for n in 2..=max_n {
        let t = Instant::now();
        let r = verify_conjecture(Conjecture::Bilinear, n, &cfg)?;
        println!(
            "bilinear n={n:2} m={:3} unique {:?} dual nondegenerate {:?} ({:.2}s)",
            r.m,
            r.unique.unwrap_or(false),
            r.dual_nondegenerate.unwrap_or(false),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
