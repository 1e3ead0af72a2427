use nalgebra::DMatrix;
use pofdecomp::gram::gram_constraints;
use pofdecomp::linalg;
use pofdecomp::sdp::{solve_relint, SdpProblem};
use pofdecomp::SolverConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

mod common;

fn gaussian(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random dense constraints through a PSD point of rank `r`.
fn through_point(side: usize, r: usize, ncons: usize, rng: &mut ChaCha8Rng) -> (SdpProblem, DMatrix<f64>) {
    let v = gaussian(side, r, rng);
    let g0 = &v * v.transpose();
    let mut p = SdpProblem::new(side);
    for _ in 0..ncons {
        let a = gaussian(side, side, rng);
        let a = (&a + a.transpose()) * 0.5;
        let b = a.component_mul(&g0).sum();
        p.push_dense(&a, b).unwrap();
    }
    (p, g0)
}

/// Gram constraints of a sum of `m` random squares of `k`-forms.
fn sos_problem(n: usize, k: u32, m: usize, rng: &mut ChaCha8Rng) -> (SdpProblem, DMatrix<f64>) {
    let side = pofdecomp::poly::monomial_count(n, k);
    let p: Vec<_> = (0..m).map(|_| common::gaussian_form(n, k, rng)).collect();
    let mut f = pofdecomp::Form::zero(n, 2 * k);
    let mut g0 = DMatrix::zeros(side, side);
    for q in &p {
        f = f.add(&q.power(2)).unwrap();
        let c = q.coeff_vector();
        g0 += &c * c.transpose();
    }
    (gram_constraints(&f).unwrap(), g0)
}

fn rank(g: &DMatrix<f64>, tol: f64) -> usize {
    let (e, _) = linalg::sym_eigen_desc(g);
    let top = e[0].max(1.0);
    e.iter().filter(|&&x| x > tol * top).count()
}

fn check(prob: &SdpProblem, g0: &DMatrix<f64>) -> Result<(), TestCaseError> {
    let cfg = SolverConfig::default();
    let sol = solve_relint(prob, &cfg).unwrap();
    let bmax = prob.rhs().iter().fold(1.0f64, |m, b| m.max(b.abs()));
    prop_assert!(sol.max_constraint_residual <= cfg.tol_feas * bmax);
    prop_assert!(prob.max_residual(&sol.matrix) <= cfg.tol_feas * bmax);
    prop_assert!(sol.min_eigenvalue() >= -cfg.tol_psd * sol.eigenvalues[0].max(1.0));
    prop_assert!(sol.numerical_rank >= rank(g0, 1e-9), "rank {} < {}", sol.numerical_rank, rank(g0, 1e-9));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_dominates_known_points(side in 2usize..=6, r in 1usize..=6, extra in 0usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = r.min(side);
        let ncons = (side * (side + 1) / 2).min(1 + extra + side);
        let (prob, g0) = through_point(side, r, ncons, &mut rng);
        check(&prob, &g0)?;
    }

    #[test]
    fn rank_dominates_gram_points(n in 2usize..=4, k in 1u32..=2, m in 1usize..=4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (prob, g0) = sos_problem(n, k, m, &mut rng);
        check(&prob, &g0)?;
    }

    #[test]
    fn image_is_scale_invariant(
        n in 3usize..=5,
        m in 1usize..=4,
        dense in any::<bool>(),
        c in prop_oneof![0.01f64..0.1, 10.0f64..100.0],
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prob = if dense {
            through_point(n, n.min(m), n + m, &mut rng).0
        } else {
            {
            let p = common::special_combinations(n, m.min(n - 1), &mut rng);
            let mut f = pofdecomp::Form::zero(n, 4);
            for q in &p {
                f = f.add(&q.power(2)).unwrap();
            }
            gram_constraints(&f).unwrap()
        }
        };
        let cfg = SolverConfig::default();
        let a = solve_relint(&prob, &cfg).unwrap();
        let b = solve_relint(&prob.scaled(c), &cfg).unwrap();
        prop_assert_eq!(a.numerical_rank, b.numerical_rank);
        let angle = linalg::principal_angle(&a.image(), &b.image());
        prop_assert!(angle < 1e-5, "angle {angle}");
    }
}

#[test]
fn one_by_one() {
    let mut p = SdpProblem::new(1);
    p.push([(0, 0, 1.0)], 2.0).unwrap();
    let sol = solve_relint(&p, &SolverConfig::default()).unwrap();
    assert!((sol.matrix[(0, 0)] - 2.0).abs() < 1e-8);
    assert_eq!(sol.numerical_rank, 1);
}
