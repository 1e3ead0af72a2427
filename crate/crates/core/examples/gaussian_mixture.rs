//! Centered Gaussian mixture from exact moments of degree 2, 4 and 6.

use pofdecomp::gmm::{gmm_recover, moments_from_model, sample_good_mixture, ShiftRule};
use pofdecomp::Config;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pofdecomp::Result<()> {
    let cfg = Config::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let truth = sample_good_mixture(4, 2, &mut rng, &cfg)?;
    let moments = moments_from_model(&truth);

    let rec = gmm_recover(&moments, ShiftRule::TraceMean, &cfg)?;
    println!("shift t = {:.6}, unique proved {}", rec.shift, rec.pipeline.unique_proved);
    for a in &truth.components {
        let b = rec
            .model
            .components
            .iter()
            .min_by(|u, v| a.q.distance(&u.q).unwrap().total_cmp(&v.q.distance(&a.q).unwrap()))
            .expect("nonempty");
        println!("weight {:.6} -> {:.6}", a.lambda, b.lambda);
        println!("  true covariance\n{:.6}", a.q.to_sym_matrix()?);
        println!("  recovered, error {:.2e}", a.q.distance(&b.q)?);
    }
    println!("moment error {:.2e}", rec.moment_error);
    Ok(())
}
