//! Monomial bases in graded-lexicographic order (`X1 > X2 > ... > Xn`).
//!
//! Within a fixed degree the order is lexicographic descending on the
//! exponent vector, so for `n = 2, d = 2` the basis is `X1^2, X1 X2, X2^2`.
//! The position of an exponent vector is computed combinatorially, which
//! keeps coefficient indexing stable across every module that touches it.

use serde::{Deserialize, Serialize};

/// Exponent vector `alpha` of a monomial `X^alpha`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ExponentVec(pub Vec<u32>);

impl ExponentVec {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Number of monomials of degree `d` in `n` variables.
pub fn monomial_count(n: usize, d: u32) -> usize {
    if n == 0 {
        return usize::from(d == 0);
    }
    binomial(n + d as usize - 1, d as usize)
}

/// All exponent vectors of degree `d` in `n` variables, graded-lex order.
pub fn monomial_basis(n: usize, d: u32) -> Vec<ExponentVec> {
    let mut out = Vec::with_capacity(monomial_count(n, d));
    let mut cur = vec![0u32; n];
    fill(&mut cur, 0, d, &mut out);
    out
}

fn fill(cur: &mut [u32], pos: usize, rem: u32, out: &mut Vec<ExponentVec>) {
    let n = cur.len();
    if n == 0 {
        if rem == 0 {
            out.push(ExponentVec(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = rem;
        out.push(ExponentVec(cur.to_vec()));
        cur[pos] = 0;
        return;
    }
    for e in (0..=rem).rev() {
        cur[pos] = e;
        fill(cur, pos + 1, rem - e, out);
    }
    cur[pos] = 0;
}

/// Position of `alpha` inside `monomial_basis(alpha.len(), |alpha|)`.
pub fn monomial_index(alpha: &[u32]) -> usize {
    let n = alpha.len();
    let mut rem: u32 = alpha.iter().sum();
    let mut idx = 0usize;
    for (i, &a) in alpha.iter().enumerate().take(n.saturating_sub(1)) {
        let tail = n - i - 1;
        // every monomial whose i-th exponent exceeds `a` comes first
        for e in (a + 1)..=rem {
            idx += monomial_count(tail, rem - e);
        }
        rem -= a;
    }
    idx
}

/// A materialized monomial basis with its flat exponent table.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub n: usize,
    pub degree: u32,
    exps: Vec<u32>,
}

impl MonomialBasis {
    pub fn new(n: usize, degree: u32) -> Self {
        let list = monomial_basis(n, degree);
        let mut exps = Vec::with_capacity(list.len() * n);
        for e in &list {
            exps.extend_from_slice(&e.0);
        }
        Self { n, degree, exps }
    }

    pub fn len(&self) -> usize {
        if self.n == 0 {
            return 1;
        }
        self.exps.len() / self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exps[i * self.n..(i + 1) * self.n]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.exponent(i))
    }
}

/// Index table for products of two bases: `table[i * len_b + j]` is the
/// position of `x^a_i * x^b_j` in the basis of degree `deg_a + deg_b`.
#[derive(Debug, Clone)]
pub struct ProductTable {
    pub len_a: usize,
    pub len_b: usize,
    pub target_len: usize,
    table: Vec<u32>,
}

impl ProductTable {
    pub fn new(n: usize, deg_a: u32, deg_b: u32) -> Self {
        let a = MonomialBasis::new(n, deg_a);
        let b = MonomialBasis::new(n, deg_b);
        let mut table = Vec::with_capacity(a.len() * b.len());
        let mut sum = vec![0u32; n];
        for ea in a.iter() {
            for eb in b.iter() {
                for k in 0..n {
                    sum[k] = ea[k] + eb[k];
                }
                table.push(monomial_index(&sum) as u32);
            }
        }
        Self {
            len_a: a.len(),
            len_b: b.len(),
            target_len: monomial_count(n, deg_a + deg_b),
            table,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.table[i * self.len_b + j] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_basis() {
        assert_eq!(monomial_basis(1, 3), vec![ExponentVec(vec![3])]);
    }

    #[test]
    fn two_variable_quadratics_in_graded_lex_order() {
        let b = monomial_basis(2, 2);
        assert_eq!(
            b,
            vec![ExponentVec(vec![2, 0]), ExponentVec(vec![1, 1]), ExponentVec(vec![0, 2])]
        );
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(monomial_basis(3, 2).len(), 6);
        assert_eq!(monomial_basis(3, 4).len(), 15);
        assert_eq!(monomial_basis(12, 6).len(), binomial(17, 6));
        assert_eq!(monomial_basis(4, 0).len(), 1);
    }

    #[test]
    fn index_is_inverse_of_enumeration() {
        for n in 1..6 {
            for d in 0..6 {
                for (i, e) in monomial_basis(n, d).iter().enumerate() {
                    assert_eq!(monomial_index(&e.0), i, "n={n} d={d} e={e:?}");
                }
            }
        }
    }

    #[test]
    fn product_table_matches_exponent_sums() {
        let t = ProductTable::new(3, 2, 1);
        let a = MonomialBasis::new(3, 2);
        let b = MonomialBasis::new(3, 1);
        for i in 0..a.len() {
            for j in 0..b.len() {
                let s: Vec<u32> = a.exponent(i).iter().zip(b.exponent(j)).map(|(x, y)| x + y).collect();
                assert_eq!(t.get(i, j), monomial_index(&s));
            }
        }
        assert_eq!(t.target_len, 10);
    }
}
