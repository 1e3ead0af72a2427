#![allow(dead_code)]

use nalgebra::DMatrix;
use pofdecomp::jennrich::Addend;
use pofdecomp::poly::monomial_count;
use pofdecomp::Form;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_form<R: Rng>(n: usize, d: u32, rng: &mut R) -> Form {
    let c = (0..monomial_count(n, d)).map(|_| rng.sample(StandardNormal)).collect();
    Form::from_coeffs(n, d, c).unwrap()
}

pub fn unit_form<R: Rng>(n: usize, d: u32, rng: &mut R) -> Form {
    let f = gaussian_form(n, d, rng);
    let s = 1.0 / f.norm();
    f.scale(s)
}

/// `sum_i lambda_i q_i^d`.
pub fn weighted_sum(addends: &[Addend], d: u32) -> Form {
    let n = addends[0].q.nvars();
    let mut out = Form::zero(n, addends[0].q.degree() * d);
    for a in addends {
        out = out.axpy(a.lambda, &a.q.power(d)).unwrap();
    }
    out
}

pub fn unit_weights(q: &[Form]) -> Vec<Addend> {
    q.iter().map(|q| Addend { q: q.clone(), lambda: 1.0 }).collect()
}

pub fn orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

/// Largest coefficient or weight error after matching each true addend to its
/// nearest recovered one; infinite when the counts differ.
pub fn addend_error(found: &[Addend], truth: &[Addend]) -> f64 {
    if found.len() != truth.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; found.len()];
    let mut worst = 0.0f64;
    for t in truth {
        let (j, err) = found
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, a)| (j, a.q.distance(&t.q).unwrap().max((a.lambda - t.lambda).abs())))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(err);
    }
    worst
}

/// `m <= n - 1` forms `w_i sum_j o_ij (X_j^2 - X_n^2)` with orthonormal rows
/// `o_i` and weights in `[0.5, 2]`.
pub fn special_combinations<R: Rng>(n: usize, m: usize, rng: &mut R) -> Vec<Form> {
    let q = pofdecomp::instances::special_instance(n, n - 1).unwrap();
    let o = orthogonal(n - 1, rng);
    (0..m)
        .map(|i| {
            let w = rng.random_range(0.5..2.0);
            let mut p = Form::zero(n, 2);
            for (j, qj) in q.iter().enumerate() {
                p = p.axpy(w * o[(i, j)], qj).unwrap();
            }
            p
        })
        .collect()
}
