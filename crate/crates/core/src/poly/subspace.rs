use std::collections::HashMap;

use nalgebra::DMatrix;

use super::form::Form;
use super::monomial::{monomial_basis, monomial_count, ProductTable};
use crate::error::{Error, Result};
use crate::linalg::{self, SparseCol};

/// A space of `degree`-forms in `n` variables with an orthonormal basis of
/// coefficient vectors.
#[derive(Debug, Clone)]
pub struct Subspace {
    n: usize,
    degree: u32,
    basis: Vec<Form>,
}

impl Subspace {
    /// Wrap an already orthonormal set; checked to `1e-10`.
    pub fn from_orthonormal(n: usize, degree: u32, basis: Vec<Form>) -> Result<Self> {
        for (i, a) in basis.iter().enumerate() {
            if a.nvars() != n || a.degree() != degree {
                return Err(Error::InvalidArgument("basis form lives in a different space".into()));
            }
            for b in &basis[i..] {
                let ip: f64 = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x * y).sum();
                let target = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                if (ip - target).abs() > 1e-10 {
                    return Err(Error::InvalidArgument(format!("basis is not orthonormal (inner product {ip})")));
                }
            }
        }
        Ok(Self { n, degree, basis })
    }

    /// Orthonormal basis for the columns of a coefficient matrix.
    pub fn from_columns(n: usize, degree: u32, cols: &DMatrix<f64>) -> Result<Self> {
        if cols.nrows() != monomial_count(n, degree) {
            return Err(Error::InvalidArgument("coefficient matrix has the wrong row count".into()));
        }
        let basis = (0..cols.ncols())
            .map(|j| Form::from_coeffs(n, degree, cols.column(j).iter().copied().collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, degree, basis })
    }

    /// Span of arbitrary forms; directions below `rel_tol` are dropped.
    pub fn span(n: usize, degree: u32, forms: &[Form], rel_tol: f64) -> Result<Self> {
        let rows = monomial_count(n, degree);
        let mut m = DMatrix::zeros(rows, forms.len());
        for (j, f) in forms.iter().enumerate() {
            if f.nvars() != n || f.degree() != degree {
                return Err(Error::InvalidArgument("form lives in a different space".into()));
            }
            m.set_column(j, &f.coeff_vector());
        }
        let q = linalg::orthonormal_range(&m, rel_tol);
        Self::from_columns(n, degree, &q)
    }

    /// The whole space of `degree`-forms.
    pub fn full(n: usize, degree: u32) -> Self {
        let len = monomial_count(n, degree);
        let basis = (0..len)
            .map(|i| {
                let mut c = vec![0.0; len];
                c[i] = 1.0;
                Form::from_coeffs(n, degree, c).expect("sized")
            })
            .collect();
        Self { n, degree, basis }
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Form] {
        &self.basis
    }

    /// Basis coefficient vectors as columns.
    pub fn matrix(&self) -> DMatrix<f64> {
        let rows = monomial_count(self.n, self.degree);
        let mut m = DMatrix::zeros(rows, self.dim());
        for (j, f) in self.basis.iter().enumerate() {
            m.set_column(j, &f.coeff_vector());
        }
        m
    }

    /// Euclidean distance from a coefficient vector to the subspace.
    pub fn distance(&self, f: &Form) -> f64 {
        let v = f.coeff_vector();
        let q = self.matrix();
        (&v - &q * (q.transpose() * &v)).norm()
    }

    /// Largest principal angle to another subspace of the same ambient space.
    pub fn principal_angle(&self, other: &Subspace) -> f64 {
        linalg::principal_angle(&self.matrix(), &other.matrix())
    }

    /// `sum_j c_j u_j`.
    pub fn combine(&self, c: &[f64]) -> Form {
        let mut out = Form::zero(self.n, self.degree);
        for (cj, u) in c.iter().zip(&self.basis) {
            out = out.axpy(*cj, u).expect("same space");
        }
        out
    }
}

/// Coefficient vectors of all products `u^alpha`, `|alpha| = d`, in graded-lex
/// order over the basis index, returned as sparse columns together with the
/// ambient row count.
pub fn product_columns(forms: &[Form], d: u32) -> Result<(usize, Vec<SparseCol>)> {
    if forms.is_empty() {
        return Ok((0, Vec::new()));
    }
    let n = forms[0].nvars();
    let k = forms[0].degree();
    if forms.iter().any(|f| f.nvars() != n || f.degree() != k) {
        return Err(Error::InvalidArgument("product forms must share n and degree".into()));
    }
    let rows = monomial_count(n, k * d);
    let tables: Vec<ProductTable> = (1..d).map(|j| ProductTable::new(n, k * j, k)).collect();
    let mut cache: HashMap<Vec<usize>, Form> = HashMap::new();
    let mut cols = Vec::new();
    for alpha in monomial_basis(forms.len(), d) {
        let idx: Vec<usize> =
            alpha.0.iter().enumerate().flat_map(|(i, &a)| std::iter::repeat_n(i, a as usize)).collect();
        let prod = product_of(forms, &idx, &tables, &mut cache);
        cols.push(
            prod.coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, &c)| (i as u32, c))
                .collect(),
        );
    }
    Ok((rows, cols))
}

fn product_of(forms: &[Form], idx: &[usize], tables: &[ProductTable], cache: &mut HashMap<Vec<usize>, Form>) -> Form {
    if idx.len() == 1 {
        return forms[idx[0]].clone();
    }
    if let Some(f) = cache.get(idx) {
        return f.clone();
    }
    let head = product_of(forms, &idx[..idx.len() - 1], tables, cache);
    let out = head.multiply_with(&forms[idx[idx.len() - 1]], &tables[idx.len() - 2]);
    if idx.len() < 3 {
        cache.insert(idx.to_vec(), out.clone());
    }
    out
}

/// Dense matrix whose columns are the coefficient vectors of `u^alpha`, `|alpha| = d`.
pub fn degree_d_products(u: &Subspace, d: u32) -> DMatrix<f64> {
    if d == 0 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let (rows, cols) = product_columns(u.basis(), d).expect("subspace basis is homogeneous");
    let rows = if u.dim() == 0 { monomial_count(u.nvars(), u.degree() * d) } else { rows };
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for &(i, v) in col {
            m[(i as usize, j)] = v;
        }
    }
    m
}

/// Dimension of the span of all degree-`d` products of `forms`.
pub fn product_rank(forms: &[Form], d: u32, rel_tol: f64) -> Result<usize> {
    let (rows, cols) = product_columns(forms, d)?;
    Ok(linalg::sparse_column_rank(rows, &cols, rel_tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::monomial::binomial;

    fn x(n: usize, i: usize) -> Form {
        Form::variable(n, i)
    }

    #[test]
    fn cubic_products_of_two_squares() {
        let u = Subspace::span(2, 2, &[x(2, 0).power(2), x(2, 1).power(2)], 1e-12).unwrap();
        let m = degree_d_products(&u, 3);
        assert_eq!(m.ncols(), 4);
        assert_eq!(linalg::numerical_rank(&m, 1e-9), 4);
    }

    #[test]
    fn cubic_products_of_all_binary_quadratics() {
        let u = Subspace::full(2, 2);
        let m = degree_d_products(&u, 3);
        assert_eq!(m.ncols(), binomial(5, 3));
        // monomial count oracle: dim R[X1,X2]_6 = 7
        assert_eq!(m.nrows(), 7);
        assert_eq!(linalg::numerical_rank(&m, 1e-9), 7);
    }

    #[test]
    fn quadratic_products_of_one_linear_form() {
        let u = Subspace::span(1, 1, &[x(1, 0)], 1e-12).unwrap();
        let m = degree_d_products(&u, 2);
        assert_eq!(m.ncols(), 1);
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn product_columns_follow_graded_lex_alpha() {
        let f = [x(2, 0), x(2, 1)];
        let (_, cols) = product_columns(&f, 2).unwrap();
        // alpha = (2,0), (1,1), (0,2) -> X1^2, X1X2, X2^2
        assert_eq!(cols, vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(2, 1.0)]]);
    }

    #[test]
    fn span_drops_dependent_forms() {
        let a = x(3, 0).power(2);
        let b = x(3, 1).power(2);
        let c = a.add(&b).unwrap();
        let u = Subspace::span(3, 2, &[a.clone(), b, c], 1e-10).unwrap();
        assert_eq!(u.dim(), 2);
        assert!(u.distance(&a) < 1e-12);
        assert!(u.distance(&x(3, 2).power(2)) > 0.99);
    }
}
