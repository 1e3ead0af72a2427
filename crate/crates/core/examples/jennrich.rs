//! Joint decomposition of a quadratic and a cubic sharing linear addends:
//! `g_d = sum_i lambda_i l_i^d` with independent `l_i`.

use pofdecomp::jennrich::{power_sum, simultaneous_diagonalize, Addend};
use pofdecomp::{Config, Form};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pofdecomp::Result<()> {
    let truth = vec![
        Addend { q: Form::linear(&[1.0, 2.0, 0.0]), lambda: 0.5 },
        Addend { q: Form::linear(&[0.0, 1.0, -1.0]), lambda: 2.0 },
        Addend { q: Form::linear(&[1.0, 0.0, 3.0]), lambda: -1.5 },
    ];
    let g2 = power_sum(3, &truth, 2);
    let g3 = power_sum(3, &truth, 3);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let dec = simultaneous_diagonalize(&g2, &g3, &mut rng, &Config::default())?;
    for a in &dec.addends {
        println!("lambda {:+.6}  l = {:?}", a.lambda, a.q.coeffs());
    }
    println!("residuals {:.1e} {:.1e}", dec.residual2, dec.residual3);
    Ok(())
}
