//! Decompose `(f2, f3)` built from `q_i = X_i^2 - X_n^2` and print the
//! recovered addends with the uniqueness certificate.
//!
//! ```bash
//! cargo run --release --example decompose -- 5
//! ```

use pofdecomp::instances::{power_sum, special_instance};
use pofdecomp::pipeline::decompose;
use pofdecomp::Config;

fn main() -> pofdecomp::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let q = special_instance(n, n - 1)?;
    let f2 = power_sum(&q, 2)?;
    let f3 = power_sum(&q, 3)?;

    let res = decompose(&f2, &f3, &Config::default())?;
    println!("n = {n}, recovered m = {}", res.decomposition.m());
    for a in &res.decomposition.addends {
        let terms: Vec<String> = a
            .q
            .terms()
            .into_iter()
            .filter(|(_, c)| c.abs() > 1e-9)
            .map(|(e, c)| format!("{c:+.6} x^{e:?}"))
            .collect();
        println!("  lambda = {:.8}  q = {}", a.lambda, terms.join(" "));
    }
    let c = &res.certificate;
    println!("dim U = {}, face dim = {}, relation dim = {}/{}", c.dim_u, c.face_dim, c.relation_dim_3, c.relation_expected());
    println!("residuals f2 {:.2e}, f3 {:.2e}", res.residual2, res.residual3);
    println!("unique_proved = {}", res.unique_proved);
    Ok(())
}
