//! Numerical kernels: Gauss–Legendre quadrature, symmetric eigensolvers,
//! and log-factorial tables.
//!
//! Everything here is deterministic: identical inputs produce bit-identical
//! outputs, independent of threading in the callers.

use crate::{invalid, Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut m = Matrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Copy of column `c`.
    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * x[j]).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

/// Nodes and weights of a quadrature rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [-1, 1].
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integrate `f` over [a, b] by affine transformation of the rule.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self.integrate(|x| f(mid + half * x))
    }
}

/// Legendre polynomial value and derivative at `t`, degree `n`.
fn legendre_value_deriv(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (p0, 0.0);
    }
    let mut p1 = t;
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    // derivative from (1-t^2) P_n' = n (P_{n-1} - t P_n)
    let dp = n as f64 * (p0 - t * p1) / (1.0 - t * t);
    (p1, dp)
}

/// Gauss–Legendre rule with `n_nodes` abscissae, exact for polynomials of
/// degree <= 2 n_nodes - 1. Roots found by Newton iteration on the
/// three-term recursion, then mirrored so the rule is exactly symmetric.
pub fn gauss_legendre(n_nodes: usize) -> Result<QuadratureRule> {
    if n_nodes == 0 {
        return Err(invalid("gauss_legendre requires at least one node"));
    }
    let n = n_nodes;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    for i in 0..half {
        // initial guess for the i-th root in descending order
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_value_deriv(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_value_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dp) = legendre_value_deriv(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (dp * dp);
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Real symmetric tridiagonal matrix stored as its two bands.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diagonal: Vec<f64>, off_diagonal: Vec<f64>) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(invalid("tridiagonal matrix must have at least one row"));
        }
        if off_diagonal.len() + 1 != diagonal.len() {
            return Err(invalid(format!(
                "off-diagonal length {} does not match diagonal length {}",
                off_diagonal.len(),
                diagonal.len()
            )));
        }
        if diagonal.iter().chain(&off_diagonal).any(|v| !v.is_finite()) {
            return Err(invalid("tridiagonal matrix entries must be finite"));
        }
        Ok(TridiagonalMatrix {
            diagonal,
            off_diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diagonal[i];
        }
        for i in 0..n - 1 {
            m[(i, i + 1)] = self.off_diagonal[i];
            m[(i + 1, i)] = self.off_diagonal[i];
        }
        m
    }
}

/// Full spectrum of a real symmetric matrix: ascending eigenvalues and the
/// matching column-orthonormal eigenvectors (column `i` pairs with `values[i]`).
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    /// max |A v - value v| over all eigenpairs, A given densely.
    pub fn max_residual(&self, a: &Matrix) -> f64 {
        let mut worst = 0.0f64;
        for (i, &val) in self.values.iter().enumerate() {
            let v = self.vectors.column(i);
            let av = a.mul_vec(&v);
            for (x, y) in av.iter().zip(&v) {
                worst = worst.max((x - val * y).abs());
            }
        }
        worst
    }

    /// max |V^T V - Id|.
    pub fn max_orthonormality_defect(&self) -> f64 {
        let vtv = self.vectors.transpose().mul(&self.vectors);
        let mut worst = 0.0f64;
        for i in 0..vtv.rows() {
            for j in 0..vtv.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((vtv[(i, j)] - target).abs());
            }
        }
        worst
    }
}

const QL_MAX_ITER: usize = 64;

/// Implicit-shift QL sweep on (d, e) with rotations accumulated into z.
/// `e` carries the subdiagonal in e[0..n-1]; e[n-1] is scratch.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut Matrix, context: &str) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    context: context.to_string(),
                    row: l,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let signed_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * f;
                    z[(k, i)] = c * z[(k, i)] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Sort eigenvalues ascending and permute eigenvector columns to match.
fn sort_eigen(d: Vec<f64>, z: Matrix) -> EigenDecomposition {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (newc, &oldc) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, newc)] = z[(r, oldc)];
        }
    }
    EigenDecomposition { values, vectors }
}

/// Eigendecomposition of a symmetric tridiagonal matrix by implicit-shift QL.
pub fn eigh_tridiagonal(m: &TridiagonalMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let mut d = m.diagonal.clone();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&m.off_diagonal);
    let mut z = Matrix::identity(n);
    ql_implicit(&mut d, &mut e, &mut z, "tridiagonal block")?;
    Ok(sort_eigen(d, z))
}

/// Householder reduction of a symmetric matrix to tridiagonal form, with the
/// orthogonal transformation accumulated in place (tred2 lineage).
fn householder_tridiagonalize(a: &mut Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[(i, k)].abs();
            }
            if scale == 0.0 {
                e[i] = a[(i, l)];
            } else {
                for k in 0..=l {
                    a[(i, k)] /= scale;
                    h += a[(i, k)] * a[(i, k)];
                }
                let f = a[(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[(i, l)] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[(j, i)] = a[(i, j)] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[(j, k)] * a[(i, k)];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[(k, j)] * a[(i, k)];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[(i, j)];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[(j, k)] -= f * e[k] + g * a[(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[(i, l)];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[(i, k)] * a[(k, j)];
                }
                for k in 0..i {
                    a[(k, j)] -= g * a[(k, i)];
                }
            }
        }
        d[i] = a[(i, i)];
        a[(i, i)] = 1.0;
        for j in 0..i {
            a[(j, i)] = 0.0;
            a[(i, j)] = 0.0;
        }
    }
    (d, e)
}

/// Eigendecomposition of a dense real symmetric matrix: Householder
/// tridiagonalization followed by implicit-shift QL.
pub fn eigh_dense(a: &Matrix) -> Result<EigenDecomposition> {
    if a.rows() != a.cols() {
        return Err(invalid(format!(
            "eigh_dense requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() == 0 {
        return Err(invalid("eigh_dense requires a nonempty matrix"));
    }
    let scale = a.max_abs();
    if a.max_asymmetry() > 1e-12 * scale.max(1e-300) {
        return Err(invalid(format!(
            "eigh_dense requires a symmetric matrix (asymmetry {:e} at scale {:e})",
            a.max_asymmetry(),
            scale
        )));
    }
    let mut work = a.clone();
    // symmetrize exactly so roundoff in the input cannot leak through
    for i in 0..work.rows() {
        for j in 0..i {
            let s = 0.5 * (work[(i, j)] + work[(j, i)]);
            work[(i, j)] = s;
            work[(j, i)] = s;
        }
    }
    let (mut d, mut e) = householder_tridiagonalize(&mut work);
    // shift the subdiagonal down: ql_implicit expects e[i] between rows i, i+1
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    let mut z = work;
    ql_implicit(&mut d, &mut e, &mut z, "dense matrix")?;
    Ok(sort_eigen(d, z))
}

/// Table of ln(k!) for k = 0..=k_max.
#[derive(Debug, Clone)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    /// Build the table by compensated summation of ln(k).
    pub fn new(k_max: usize) -> Self {
        let mut values = Vec::with_capacity(k_max + 1);
        values.push(0.0);
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 1..=k_max {
            let term = (k as f64).ln();
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            values.push(sum);
        }
        LogFactorialTable { values }
    }

    /// Table size covering every factorial in the 3j symbols at bandlimit `l`.
    pub fn for_bandlimit(l: u32) -> Self {
        Self::new(4 * l as usize + 2)
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    /// ln(k!), or an error when the table is too small.
    pub fn ln_factorial(&self, k: usize) -> Result<f64> {
        self.values
            .get(k)
            .copied()
            .ok_or_else(|| invalid(format!("log-factorial table holds k <= {}, got {}", self.k_max(), k)))
    }
}
