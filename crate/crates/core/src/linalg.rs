//! Dense linear-algebra helpers shared by the solver and the certificate code.

use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
pub fn sym_eigen_desc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Count of eigenvalues above `tol * max(lambda_max, 1)`.
pub fn count_above(eigs_desc: &[f64], tol: f64) -> usize {
    let top = eigs_desc.first().copied().unwrap_or(0.0).max(1.0);
    eigs_desc.iter().filter(|&&e| e > tol * top).count()
}

/// Thin singular value decomposition `a = u diag(s) v^T`, singular values
/// descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

/// SVD by Householder QR followed by one-sided Jacobi rotations on `R`.
/// nalgebra's bidiagonal SVD returns wrong factors on some rank-deficient
/// inputs, so it is not used here.
pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    if m < n {
        let t = svd(&a.transpose());
        return Svd { u: t.v, s: t.s, v: t.u };
    }
    if n == 0 {
        return Svd { u: DMatrix::zeros(m, 0), s: Vec::new(), v: DMatrix::zeros(0, 0) };
    }
    let (q, r) = if m > n {
        let qr = a.clone().qr();
        (Some(qr.q()), qr.r())
    } else {
        (None, a.clone())
    };
    let (w, s, v) = jacobi(r);
    let u = match q {
        Some(q) => q * w,
        None => w,
    };
    Svd { u, s, v }
}

fn jacobi(mut w: DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, n) = w.shape();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (w.column(p), w.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(w.as_mut_slice(), rows, p, q, c, s);
                rotate(v.as_mut_slice(), n, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let mut u = DMatrix::zeros(rows, n);
    let mut vs = DMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > 0.0 {
            u.set_column(k, &(w.column(j) / norms[j]));
        }
        vs.set_column(k, &v.column(j));
    }
    (u, order.iter().map(|&j| norms[j]).collect(), vs)
}

/// Columns `p, q` of a column-major matrix with `rows` rows.
fn rotate(a: &mut [f64], rows: usize, p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = a.split_at_mut(q * rows);
    let cp = &mut left[p * rows..(p + 1) * rows];
    let cq = &mut right[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Singular values of `a`, descending.
pub fn singular_values_desc(a: &DMatrix<f64>) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    svd(a).s
}

/// Numerical rank: singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let s = singular_values_desc(a);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&x| x > rel_tol * top).count(),
        _ => 0,
    }
}

/// Orthonormal basis (as columns) for the column space of `a`.
pub fn orthonormal_range(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DMatrix::zeros(m, 0);
    }
    let d = svd(a);
    let top = d.s[0];
    let keep = d.s.iter().filter(|&&x| top > 0.0 && x > rel_tol * top).count();
    d.u.columns(0, keep).into_owned()
}

/// Largest principal angle between the column spans of two orthonormal
/// bases; `pi/2` when the dimensions differ.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return std::f64::consts::FRAC_PI_2;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    // sin of the largest angle is the spectral norm of (I - P_a) b
    let resid = b - a * (a.transpose() * b);
    let s = singular_values_desc(&resid);
    s.first().copied().unwrap_or(0.0).clamp(0.0, 1.0).asin()
}

/// Least-squares solution of `a x = b` with relative singular cutoff.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let d = svd(a);
    let top = d.s.first().copied().unwrap_or(0.0);
    let mut x = DVector::zeros(a.ncols());
    for (k, &sk) in d.s.iter().enumerate() {
        if top > 0.0 && sk > rel_tol * top {
            x += d.v.column(k) * (d.u.column(k).dot(b) / sk);
        }
    }
    x
}

/// Lower Cholesky factor stored column-major, computed with a blocked
/// right-looking algorithm whose trailing updates go through `dgemm`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

const BLOCK: usize = 96;

impl CholeskyFactor {
    /// Factor a symmetric positive definite matrix given column-major.
    /// Only the lower triangle is read. Returns `None` on a non-positive pivot.
    pub fn factor(n: usize, mut a: Vec<f64>) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut k = 0;
        let mut panel = Vec::new();
        let mut inv = vec![0.0; BLOCK * BLOCK];
        while k < n {
            let kb = BLOCK.min(n - k);
            // diagonal block, unblocked
            for j in k..k + kb {
                let mut d = a[j + j * n];
                for p in k..j {
                    d -= a[j + p * n] * a[j + p * n];
                }
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                let d = d.sqrt();
                a[j + j * n] = d;
                for i in j + 1..k + kb {
                    let mut s = a[i + j * n];
                    for p in k..j {
                        s -= a[i + p * n] * a[j + p * n];
                    }
                    a[i + j * n] = s / d;
                }
            }
            let rest = n - k - kb;
            if rest > 0 {
                // inverse of the diagonal block (lower triangular, kb x kb)
                inv.iter_mut().for_each(|x| *x = 0.0);
                for c in 0..kb {
                    inv[c + c * kb] = 1.0 / a[(k + c) + (k + c) * n];
                    for r in c + 1..kb {
                        let mut s = 0.0;
                        for p in c..r {
                            s += a[(k + r) + (k + p) * n] * inv[p + c * kb];
                        }
                        inv[r + c * kb] = -s / a[(k + r) + (k + r) * n];
                    }
                }
                // panel <- A21 * L11^{-T}
                panel.clear();
                panel.resize(rest * kb, 0.0);
                unsafe {
                    matrixmultiply::dgemm(
                        rest,
                        kb,
                        kb,
                        1.0,
                        a.as_ptr().add(k + kb + k * n),
                        1,
                        n as isize,
                        inv.as_ptr(),
                        kb as isize,
                        1,
                        0.0,
                        panel.as_mut_ptr(),
                        1,
                        rest as isize,
                    );
                }
                for c in 0..kb {
                    let dst = (k + kb) + (k + c) * n;
                    a[dst..dst + rest].copy_from_slice(&panel[c * rest..(c + 1) * rest]);
                }
                // trailing update of the lower triangle, column panel by panel
                let mut j = 0;
                while j < rest {
                    let jb = BLOCK.min(rest - j);
                    let rows = rest - j;
                    unsafe {
                        matrixmultiply::dgemm(
                            rows,
                            kb,
                            jb,
                            -1.0,
                            panel.as_ptr().add(j),
                            1,
                            rest as isize,
                            panel.as_ptr().add(j),
                            rest as isize,
                            1,
                            1.0,
                            a.as_mut_ptr().add((k + kb + j) + (k + kb + j) * n),
                            1,
                            n as isize,
                        );
                    }
                    j += jb;
                }
            }
            k += kb;
        }
        Some(Self { n, l: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `L L^T x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        for j in 0..n {
            let xj = b[j] / l[j + j * n];
            b[j] = xj;
            let col = &l[j * n..(j + 1) * n];
            for i in j + 1..n {
                b[i] -= col[i] * xj;
            }
        }
        for j in (0..n).rev() {
            let col = &l[j * n..(j + 1) * n];
            let mut s = b[j];
            for i in j + 1..n {
                s -= col[i] * b[i];
            }
            b[j] = s / l[j + j * n];
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.l[i + i * self.n]
    }
}

/// Symmetric matrix `w` (column-major, dense) times vector.
fn symv(n: usize, w: &[f64], x: &[f64], y: &mut [f64]) {
    y.iter_mut().for_each(|v| *v = 0.0);
    for j in 0..n {
        let col = &w[j * n..(j + 1) * n];
        let xj = x[j];
        for i in 0..n {
            y[i] += col[i] * xj;
        }
    }
}

/// Rank of a positive semidefinite Gram matrix `w` (column-major, unit
/// diagonal expected), via Cholesky and inverse iteration when the matrix is
/// numerically definite, falling back to a full eigendecomposition.
/// Eigenvalues above `rel_tol * lambda_max` count.
pub fn psd_rank(n: usize, w: Vec<f64>, rel_tol: f64) -> usize {
    if n == 0 {
        return 0;
    }
    if n <= 64 {
        let m = DMatrix::from_column_slice(n, n, &w);
        let (e, _) = sym_eigen_desc(&m);
        let top = e[0];
        if top <= 0.0 {
            return 0;
        }
        return e.iter().filter(|&&x| x > rel_tol * top).count();
    }
    let lmax = lambda_max(n, &w);
    if lmax == 0.0 {
        return 0;
    }
    if let Some(ch) = CholeskyFactor::factor(n, w.clone()) {
        // inverse iteration for lambda_min
        let mut v: Vec<f64> = (0..n).map(|i| ((i * 7919 % 101) as f64 + 1.0).sin()).collect();
        let mut lmin = f64::INFINITY;
        for _ in 0..40 {
            let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.iter_mut().for_each(|a| *a /= nrm);
            let mut z = v.clone();
            ch.solve_in_place(&mut z);
            let rq = z.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
            lmin = 1.0 / rq;
            v = z;
        }
        if lmin > 10.0 * rel_tol * lmax {
            return n;
        }
    }
    pivoted_cholesky_rank(n, &w, rel_tol * lmax)
}

fn lambda_max(n: usize, w: &[f64]) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut lmax = 0.0;
    for _ in 0..60 {
        symv(n, w, &v, &mut y);
        let nrm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        lmax = nrm;
        v.iter_mut().zip(&y).for_each(|(a, b)| *a = b / nrm);
    }
    lmax
}

/// Steps of diagonally pivoted Cholesky before every remaining pivot is `<= tol`.
fn pivoted_cholesky_rank(n: usize, w: &[f64], tol: f64) -> usize {
    if !(tol > 0.0) {
        return 0;
    }
    let mut d: Vec<f64> = (0..n).map(|i| w[i + i * n]).collect();
    let mut done = vec![false; n];
    let mut cols: Vec<Vec<f64>> = Vec::new();
    loop {
        let Some(p) = (0..n).filter(|&i| !done[i]).max_by(|&a, &b| d[a].total_cmp(&d[b])) else {
            return cols.len();
        };
        if !(d[p] > tol) {
            return cols.len();
        }
        let piv = d[p].sqrt();
        let mut l: Vec<f64> = w[p * n..(p + 1) * n].to_vec();
        for c in &cols {
            let cp = c[p];
            l.iter_mut().zip(c).for_each(|(a, b)| *a -= cp * b);
        }
        l.iter_mut().for_each(|a| *a /= piv);
        for i in 0..n {
            d[i] -= l[i] * l[i];
        }
        done[p] = true;
        cols.push(l);
    }
}

/// Sparse column vector.
pub type SparseCol = Vec<(u32, f64)>;

/// Column rank of a sparse matrix, columns normalized to unit norm first;
/// singular values above `rel_tol * sigma_max` count.
pub fn sparse_column_rank(nrows: usize, cols: &[SparseCol], rel_tol: f64) -> usize {
    let ncols = cols.len();
    if ncols == 0 || nrows == 0 {
        return 0;
    }
    let scaled: Vec<SparseCol> = cols
        .iter()
        .map(|col| {
            let nrm = col.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
            if nrm == 0.0 {
                Vec::new()
            } else {
                col.iter().map(|&(i, v)| (i, v / nrm)).collect()
            }
        })
        .collect();
    if ncols.min(nrows) <= 400 {
        let mut dense = DMatrix::zeros(nrows, ncols);
        for (j, col) in scaled.iter().enumerate() {
            for &(i, v) in col {
                dense[(i as usize, j)] += v;
            }
        }
        return numerical_rank(&dense, rel_tol);
    }
    let side = nrows.min(ncols);
    let nnz: usize = scaled.iter().map(Vec::len).sum();
    let mut w = vec![0.0; side * side];
    if nnz * 4 > nrows * ncols && nrows * ncols <= 40_000_000 {
        // dense enough for gemm
        let mut dense = vec![0.0; nrows * ncols];
        for (j, col) in scaled.iter().enumerate() {
            for &(i, v) in col {
                dense[i as usize + j * nrows] += v;
            }
        }
        let (rsa, csa, k) = if nrows <= ncols { (1, nrows as isize, ncols) } else { (nrows as isize, 1, nrows) };
        // w = A A^T or A^T A
        unsafe {
            matrixmultiply::dgemm(
                side,
                k,
                side,
                1.0,
                dense.as_ptr(),
                rsa,
                csa,
                dense.as_ptr(),
                csa,
                rsa,
                0.0,
                w.as_mut_ptr(),
                1,
                side as isize,
            );
        }
    } else if nrows <= ncols {
        for col in &scaled {
            for &(a, va) in col {
                for &(b, vb) in col {
                    w[a as usize + b as usize * side] += va * vb;
                }
            }
        }
    } else {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nrows];
        for (j, col) in scaled.iter().enumerate() {
            for &(i, v) in col {
                rows[i as usize].push((j as u32, v));
            }
        }
        for row in &rows {
            for &(a, va) in row {
                for &(b, vb) in row {
                    if b <= a {
                        w[a as usize + b as usize * side] += va * vb;
                    }
                }
            }
        }
        for c in 0..side {
            for r in 0..c {
                w[r + c * side] = w[c + r * side];
            }
        }
    }
    // eigenvalues of the Gram matrix are squared singular values
    psd_rank(side, w, rel_tol * rel_tol)
}
