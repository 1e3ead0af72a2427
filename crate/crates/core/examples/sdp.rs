//! Relative-interior points of small spectrahedra. The Gram spectrahedron of
//! `x^4 + y^4` is a segment; its interior points have rank 3.

use pofdecomp::gram::gram_constraints;
use pofdecomp::sdp::{rank_stability_check, solve_relint, SdpProblem};
use pofdecomp::{Form, SolverConfig};

fn main() -> pofdecomp::Result<()> {
    let cfg = SolverConfig::default();

    // X_00 + X_11 = 1, X_01 = 0.5: a disc of 2x2 matrices
    let mut p = SdpProblem::new(2);
    p.push([(0, 0, 1.0), (1, 1, 1.0)], 1.0)?;
    p.push([(0, 1, 1.0)], 0.5)?;
    let s = solve_relint(&p, &cfg)?;
    println!("disc: rank {} eigenvalues {:?}", s.numerical_rank, s.eigenvalues);

    let f = Form::variable(2, 0).power(4).add(&Form::variable(2, 1).power(4))?;
    let gram = gram_constraints(&f)?;
    let s = solve_relint(&gram, &cfg)?;
    println!("x^4 + y^4: {} constraints, rank {}, iterations {}", gram.len(), s.numerical_rank, s.iterations);
    println!("{:.6}", s.matrix);
    println!("stable under reordering: {}", rank_stability_check(&gram, &s, 3, &cfg, 1e-5, 7)?);
    Ok(())
}
