//! Dense form arithmetic: products, powers, derivatives, substitution and the
//! JSON layout used by the command line.

use nalgebra::DMatrix;
use pofdecomp::poly::monomial_count;
use pofdecomp::Form;

fn main() -> pofdecomp::Result<()> {
    let x = Form::variable(3, 0);
    let y = Form::variable(3, 1);
    let z = Form::variable(3, 2);
    let q = x.multiply(&y)?.sub(&z.power(2))?;
    let q3 = q.power(3);
    println!("q^3 has {} of {} monomials nonzero", q3.terms().len(), monomial_count(3, 6));

    // Euler: sum_i x_i d_i f = deg f * f
    let p = [0.3, -1.2, 0.7];
    let lhs: f64 = (0..3).map(|i| p[i] * q3.partial(i).unwrap().evaluate(&p).unwrap()).sum();
    println!("Euler {lhs:.6} = {:.6}", 6.0 * q3.evaluate(&p)?);

    let rot = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    println!("q(y, x, z) == q: {}", q.linear_substitution(&rot)?.distance(&q)? < 1e-15);
    println!("{}", serde_json::to_string(&q).expect("plain data"));
    Ok(())
}
