use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::monomial::{monomial_count, monomial_index, MonomialBasis, ProductTable};
use crate::error::{Error, Result};

/// A homogeneous polynomial stored densely over the graded-lex monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    n: usize,
    degree: u32,
    coeffs: Vec<f64>,
}

impl Form {
    pub fn zero(n: usize, degree: u32) -> Self {
        Self { n, degree, coeffs: vec![0.0; monomial_count(n, degree)] }
    }

    pub fn from_coeffs(n: usize, degree: u32, coeffs: Vec<f64>) -> Result<Self> {
        let expected = monomial_count(n, degree);
        if coeffs.len() != expected {
            return Err(Error::InvalidForm(format!(
                "expected {expected} coefficients for n={n}, degree={degree}, got {}",
                coeffs.len()
            )));
        }
        Ok(Self { n, degree, coeffs })
    }

    /// The constant form `c` in `n` variables.
    pub fn constant(n: usize, c: f64) -> Self {
        Self { n, degree: 0, coeffs: vec![c] }
    }

    /// The variable `X_{i+1}` (zero-based index `i`).
    pub fn variable(n: usize, i: usize) -> Self {
        let mut f = Self::zero(n, 1);
        f.coeffs[i] = 1.0;
        f
    }

    /// Linear form `sum_i c_i X_i`.
    pub fn linear(c: &[f64]) -> Self {
        Self { n: c.len(), degree: 1, coeffs: c.to_vec() }
    }

    /// Sum of terms `(exponent, coefficient)`; repeated exponents accumulate.
    pub fn from_terms(n: usize, degree: u32, terms: &[(&[u32], f64)]) -> Result<Self> {
        let mut f = Self::zero(n, degree);
        for (e, c) in terms {
            check_exponent(n, degree, e)?;
            f.coeffs[monomial_index(e)] += c;
        }
        Ok(f)
    }

    /// `x^T Q x` for a symmetric matrix `Q`.
    pub fn from_sym_matrix(q: &DMatrix<f64>) -> Self {
        let n = q.nrows();
        let mut f = Self::zero(n, 2);
        let mut e = vec![0u32; n];
        for i in 0..n {
            for j in i..n {
                e.iter_mut().for_each(|x| *x = 0);
                e[i] += 1;
                e[j] += 1;
                let c = if i == j { q[(i, i)] } else { q[(i, j)] + q[(j, i)] };
                f.coeffs[monomial_index(&e)] += c;
            }
        }
        f
    }

    /// Symmetric matrix `Q` with `self = x^T Q x`; requires a quadratic.
    pub fn to_sym_matrix(&self) -> Result<DMatrix<f64>> {
        if self.degree != 2 {
            return Err(Error::DegreeMismatch { expected: 2, found: self.degree });
        }
        let n = self.n;
        let mut q = DMatrix::zeros(n, n);
        let mut e = vec![0u32; n];
        for i in 0..n {
            for j in i..n {
                e.iter_mut().for_each(|x| *x = 0);
                e[i] += 1;
                e[j] += 1;
                let c = self.coeffs[monomial_index(&e)];
                if i == j {
                    q[(i, i)] = c;
                } else {
                    q[(i, j)] = 0.5 * c;
                    q[(j, i)] = 0.5 * c;
                }
            }
        }
        Ok(q)
    }

    pub fn nvars(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn coeff_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coeffs)
    }

    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.coeffs[monomial_index(alpha)]
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Nonzero terms in basis order.
    pub fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        let basis = MonomialBasis::new(self.n, self.degree);
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, &c)| (basis.exponent(i).to_vec(), c))
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { n: self.n, degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Form) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Form) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Form) -> Result<Self> {
        self.check_same_space(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| x + a * y).collect();
        Ok(Self { n: self.n, degree: self.degree, coeffs })
    }

    /// Coefficient-vector distance `||self - other||`.
    pub fn distance(&self, other: &Form) -> Result<f64> {
        self.check_same_space(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
    }

    fn check_same_space(&self, other: &Form) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn multiply(&self, other: &Form) -> Result<Form> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        let table = ProductTable::new(self.n, self.degree, other.degree);
        Ok(self.multiply_with(other, &table))
    }

    /// Product using a precomputed index table for the two degrees.
    pub fn multiply_with(&self, other: &Form, table: &ProductTable) -> Form {
        debug_assert_eq!(table.len_a, self.coeffs.len());
        debug_assert_eq!(table.len_b, other.coeffs.len());
        let mut out = vec![0.0; table.target_len];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b != 0.0 {
                    out[table.get(i, j)] += a * b;
                }
            }
        }
        Form { n: self.n, degree: self.degree + other.degree, coeffs: out }
    }

    pub fn power(&self, d: u32) -> Form {
        let mut acc = Form::constant(self.n, 1.0);
        let mut base = self.clone();
        let mut e = d;
        // square-and-multiply; both operands always share `n`
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.multiply(&base).expect("same variable count");
            }
            e >>= 1;
            if e > 0 {
                base = base.multiply(&base).expect("same variable count");
            }
        }
        acc
    }

    /// `d/dX_i`.
    pub fn partial(&self, i: usize) -> Result<Form> {
        let mut v = vec![0.0; self.n];
        v[i] = 1.0;
        self.directional_derivative(&v)
    }

    /// `sum_i v_i d/dX_i`; the degree drops by one.
    pub fn directional_derivative(&self, v: &[f64]) -> Result<Form> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
        }
        if self.degree == 0 {
            return Err(Error::DegreeMismatch { expected: 1, found: 0 });
        }
        let basis = MonomialBasis::new(self.n, self.degree);
        let mut out = Form::zero(self.n, self.degree - 1);
        let mut e = vec![0u32; self.n];
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let alpha = basis.exponent(idx);
            for i in 0..self.n {
                if alpha[i] == 0 || v[i] == 0.0 {
                    continue;
                }
                e.copy_from_slice(alpha);
                e[i] -= 1;
                out.coeffs[monomial_index(&e)] += c * alpha[i] as f64 * v[i];
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: x.len() });
        }
        let basis = MonomialBasis::new(self.n, self.degree);
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c * basis.exponent(i).iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product::<f64>())
            .sum())
    }

    /// Substitute `X_j -> sum_i m[(j, i)] Y_i`, i.e. `g(y) = f(M y)`.
    pub fn linear_substitution(&self, m: &DMatrix<f64>) -> Result<Form> {
        if m.nrows() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.nrows() });
        }
        let new_n = m.ncols();
        let images: Vec<Form> = (0..self.n)
            .map(|j| Form::linear(&m.row(j).iter().copied().collect::<Vec<_>>()))
            .collect();
        let basis = MonomialBasis::new(self.n, self.degree);
        let mut out = Form::zero(new_n, self.degree);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut term = Form::constant(new_n, c);
            for (j, &a) in basis.exponent(idx).iter().enumerate() {
                if a > 0 {
                    term = term.multiply(&images[j].power(a))?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Lexicographic comparison of coefficient vectors.
    pub fn lex_cmp(&self, other: &Form) -> std::cmp::Ordering {
        for (a, b) in self.coeffs.iter().zip(&other.coeffs) {
            match a.partial_cmp(b) {
                Some(std::cmp::Ordering::Equal) | None => continue,
                Some(o) => return o,
            }
        }
        self.coeffs.len().cmp(&other.coeffs.len())
    }

    pub fn to_json(&self) -> FormJson {
        FormJson {
            n: self.n,
            degree: self.degree,
            terms: self.terms().into_iter().map(|(exp, coef)| TermJson { exp, coef }).collect(),
        }
    }

    pub fn from_json(j: &FormJson) -> Result<Form> {
        let mut f = Form::zero(j.n, j.degree);
        let mut seen = HashSet::new();
        for t in &j.terms {
            check_exponent(j.n, j.degree, &t.exp)?;
            if !seen.insert(t.exp.clone()) {
                return Err(Error::InvalidForm(format!("duplicate exponent {:?}", t.exp)));
            }
            if !t.coef.is_finite() {
                return Err(Error::InvalidForm(format!("non-finite coefficient at {:?}", t.exp)));
            }
            f.coeffs[monomial_index(&t.exp)] = t.coef;
        }
        Ok(f)
    }
}

fn check_exponent(n: usize, degree: u32, e: &[u32]) -> Result<()> {
    if e.len() != n {
        return Err(Error::InvalidForm(format!("exponent {e:?} has length {} but n = {n}", e.len())));
    }
    if e.iter().sum::<u32>() != degree {
        return Err(Error::InvalidForm(format!("exponent {e:?} does not have degree {degree}")));
    }
    Ok(())
}

impl Serialize for Form {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Form {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FormJson::deserialize(d)?;
        Form::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Wire format of a form: omitted monomials are zero.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormJson {
    pub n: usize,
    pub degree: u32,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermJson {
    pub exp: Vec<u32>,
    pub coef: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x(n: usize, i: usize) -> Form {
        Form::variable(n, i)
    }

    #[test]
    fn product_of_two_variables() {
        let p = x(2, 0).multiply(&x(2, 1)).unwrap();
        assert_eq!(p.coeff(&[1, 1]), 1.0);
        assert_eq!(p.coeffs().iter().filter(|c| **c != 0.0).count(), 1);
    }

    #[test]
    fn difference_of_squares() {
        let a = x(2, 0).power(2).sub(&x(2, 1).power(2)).unwrap();
        let b = x(2, 0).power(2).add(&x(2, 1).power(2)).unwrap();
        let p = a.multiply(&b).unwrap();
        let expected = x(2, 0).power(4).sub(&x(2, 1).power(4)).unwrap();
        assert_eq!(p, expected);
    }

    #[test]
    fn trinomial_square_matches_direct_expansion() {
        let s = x(3, 0).add(&x(3, 1)).unwrap().add(&x(3, 2)).unwrap();
        let sq = s.power(2);
        // direct expansion: squares with coefficient 1, cross terms 2
        let nz: Vec<_> = sq.terms();
        assert_eq!(nz.len(), 6);
        for (e, c) in nz {
            let expected = if e.contains(&2) { 1.0 } else { 2.0 };
            assert_eq!(c, expected, "exponent {e:?}");
        }
    }

    #[test]
    fn powers() {
        assert_eq!(x(1, 0).power(2).power(3), x(1, 0).power(6));
        let q = x(3, 0).power(2).sub(&x(3, 2).power(2)).unwrap();
        let sq = q.power(2);
        assert_eq!(sq.coeff(&[4, 0, 0]), 1.0);
        assert_eq!(sq.coeff(&[2, 0, 2]), -2.0);
        assert_eq!(sq.coeff(&[0, 0, 4]), 1.0);
        assert_eq!(sq.terms().len(), 3);
        let s = x(2, 0).add(&x(2, 1)).unwrap().power(2).power(3);
        assert_eq!(s.coeff(&[3, 3]), 20.0);
        assert_eq!(x(4, 2).power(0), Form::constant(4, 1.0));
    }

    #[test]
    fn directional_derivatives() {
        let d = x(1, 0).power(2).directional_derivative(&[1.0]).unwrap();
        assert_eq!(d, x(1, 0).scale(2.0));
        let d = x(2, 0).multiply(&x(2, 1)).unwrap().directional_derivative(&[1.0, 0.0]).unwrap();
        assert_eq!(d, x(2, 1));
        let f = x(2, 0).power(3).add(&x(2, 1).power(3)).unwrap();
        let d = f.directional_derivative(&[1.0, 1.0]).unwrap();
        assert_eq!(d, x(2, 0).power(2).scale(3.0).add(&x(2, 1).power(2).scale(3.0)).unwrap());
        assert!(Form::constant(2, 1.0).directional_derivative(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn evaluation() {
        let q = x(3, 0).power(2).sub(&x(3, 2).power(2)).unwrap();
        assert_eq!(q.evaluate(&[1.0, 0.0, 1.0]).unwrap(), 0.0);
        let r = x(2, 0).power(2).add(&x(2, 1).power(2)).unwrap();
        assert_eq!(r.evaluate(&[3.0, 4.0]).unwrap(), 25.0);
        let s = x(3, 0).add(&x(3, 1)).unwrap().add(&x(3, 2)).unwrap().power(2);
        assert_eq!(s.evaluate(&[1.0, 1.0, 1.0]).unwrap(), 9.0);
    }

    #[test]
    fn mismatched_variables_rejected() {
        assert!(matches!(x(2, 0).multiply(&x(3, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sym_matrix_round_trip() {
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, -2.0, 0.5, 3.0, 0.25, -2.0, 0.25, -1.0]);
        let f = Form::from_sym_matrix(&q);
        assert_eq!(f.coeff(&[1, 1, 0]), 1.0);
        assert_eq!(f.coeff(&[1, 0, 1]), -4.0);
        assert_relative_eq!(f.to_sym_matrix().unwrap(), q);
    }

    #[test]
    fn json_round_trip_and_duplicates() {
        let f = x(3, 0).power(2).sub(&x(3, 2).power(2)).unwrap().power(2);
        let s = serde_json::to_string(&f).unwrap();
        let g: Form = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        let dup = r#"{"n":2,"degree":2,"terms":[{"exp":[2,0],"coef":1.0},{"exp":[2,0],"coef":2.0}]}"#;
        assert!(serde_json::from_str::<Form>(dup).is_err());
        let bad_deg = r#"{"n":2,"degree":2,"terms":[{"exp":[3,0],"coef":1.0}]}"#;
        assert!(serde_json::from_str::<Form>(bad_deg).is_err());
    }

    #[test]
    fn linear_substitution_matches_evaluation() {
        let f = x(2, 0).power(3).add(&x(2, 0).multiply(&x(2, 1)).unwrap().multiply(&x(2, 1)).unwrap()).unwrap();
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0]);
        let g = f.linear_substitution(&m).unwrap();
        let y = [0.3, -0.7, 1.1];
        let xv = &m * DVector::from_column_slice(&y);
        assert_relative_eq!(g.evaluate(&y).unwrap(), f.evaluate(xv.as_slice()).unwrap(), epsilon = 1e-12);
    }
}
