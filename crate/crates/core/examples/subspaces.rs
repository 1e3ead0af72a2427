//! Two random lines through the origin in R^3 from the moments of a mixture
//! of degenerate Gaussians supported on them.

use nalgebra::DMatrix;
use pofdecomp::gmm::{moments_from_model, subspace_recover, MixtureModel};
use pofdecomp::jennrich::Addend;
use pofdecomp::{linalg, Config, Form};

fn main() -> pofdecomp::Result<()> {
    let lines = [[1.0, 0.0, 1.0], [0.0, 1.0, -1.0]];
    let comps = lines.iter().map(|l| Addend { q: Form::linear(l).power(2), lambda: 0.5 }).collect();
    let model = MixtureModel::new(3, comps)?;

    let rec = subspace_recover(&moments_from_model(&model), 1, &Config::default())?;
    let bases = rec.model.subspace_basis.as_ref().expect("subspace recovery sets bases");
    for (l, b) in lines.iter().zip(bases) {
        let v = DMatrix::from_column_slice(3, 1, l).normalize();
        let angle = bases.iter().map(|c| linalg::principal_angle(c, &v)).fold(f64::INFINITY, f64::min);
        println!("line {l:?}: basis {:?}, angle to truth {angle:.1e}", b.as_slice());
    }
    Ok(())
}
