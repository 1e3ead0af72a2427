//! Support certificates for a few quartics: a unique sum of squares, a
//! nonunique one and a strictly positive one.

use pofdecomp::gram::certify;
use pofdecomp::{Config, Form};

fn x(n: usize, i: usize) -> Form {
    Form::variable(n, i)
}

fn main() -> pofdecomp::Result<()> {
    let cfg = Config::default();
    let radical = {
        let a = x(3, 0).power(2).sub(&x(3, 2).power(2))?;
        let b = x(3, 1).power(2).sub(&x(3, 2).power(2))?;
        a.power(2).add(&b.power(2))?
    };
    let binary = x(2, 0).power(4).add(&x(2, 1).power(4))?;
    let positive = x(2, 0).power(2).add(&x(2, 1).power(2))?.power(2);

    for (name, f) in [("(x1^2-x3^2)^2 + (x2^2-x3^2)^2", radical), ("x1^4 + x2^4", binary), ("(x1^2 + x2^2)^2", positive)] {
        let c = certify(&f, &cfg)?;
        println!("{name}");
        println!(
            "  dim U {}  face dim {}  unique {}  dual nondegenerate {}  relations {}/{}",
            c.dim_u,
            c.face_dim,
            c.unique,
            c.dual_nondegenerate,
            c.relation_dim_3,
            c.relation_expected()
        );
        println!("  {}", serde_json::to_string(&c.to_json()).expect("plain data"));
    }
    Ok(())
}
