//! Dense numerics: symmetric eigendecomposition by cyclic Jacobi rotations,
//! least squares by Householder QR with column pivoting, and Pearson
//! correlation.
//!
//! Matrix sizes in this crate are desk scale (tens of columns, thousands of
//! rows), so everything is plain row-major storage without blocking.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::terms::DesignMatrix;

/// Row-major dense matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices; all rows must share one length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { rows: rows.len(), cols, data })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "vector of length {} against {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect())
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copies the listed columns, in the listed order.
    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self::from_fn(self.rows, columns.len(), |i, j| self[(i, columns[j])])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Square matrix with exactly symmetric, finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix<T>(Matrix<T>);

impl<T: Scalar> SymmetricMatrix<T> {
    pub fn new(m: Matrix<T>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.0
    }

    pub fn trace(&self) -> T {
        (0..self.order()).map(|i| self.0[(i, i)]).sum()
    }
}

/// Eigenvalues in descending order with the matching orthonormal eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenResult<T> {
    pub values: Vec<T>,
    pub vectors: Matrix<T>,
    pub sweeps: usize,
}

impl<T: Scalar> EigenResult<T> {
    pub fn vector(&self, j: usize) -> Vec<T> {
        self.vectors.column(j)
    }
}

fn off_diagonal_norm<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition.
///
/// Sweeps over every off-diagonal pair until the off-diagonal Frobenius norm
/// falls to `tol · ‖A‖_F`. Each eigenvector is sign-normalized so that its
/// largest-magnitude component is positive.
pub fn eigen_symmetric<T: Scalar>(
    a: &SymmetricMatrix<T>,
    tol: T,
    max_sweeps: usize,
) -> Result<EigenResult<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidArgument("eigen tolerance must be positive".into()));
    }
    let n = a.order();
    let mut m = a.matrix().clone();
    let mut v = Matrix::identity(n);
    let scale = m.frobenius_norm();
    let threshold = tol * scale;
    let two = T::lit(2.0);

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off <= threshold {
            break;
        }
        if sweeps == max_sweeps {
            return Err(Error::NonConvergence { sweeps, off_norm: off.as_f64() });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(T::one()));
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / t.hypot(T::one());
                let s = t * c;

                m[(p, p)] = m[(p, p)] - t * apq;
                m[(q, q)] = m[(q, q)] + t * apq;
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[(k, p)];
                    let akq = m[(k, q)];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    m[(k, p)] = new_kp;
                    m[(p, k)] = new_kp;
                    m[(k, q)] = new_kq;
                    m[(q, k)] = new_kq;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].partial_cmp(&m[(i, i)]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = v.select_columns(&order);
    for j in 0..n {
        let mut pivot = T::zero();
        for i in 0..n {
            if vectors[(i, j)].abs() > pivot.abs() {
                pivot = vectors[(i, j)];
            }
        }
        if pivot < T::zero() {
            for i in 0..n {
                vectors[(i, j)] = -vectors[(i, j)];
            }
        }
    }
    Ok(EigenResult { values, vectors, sweeps })
}

/// Output of [`lstsq`].
#[derive(Clone, Debug)]
pub struct LeastSquares<T> {
    pub coefficients: Vec<T>,
    pub residual_ss: T,
    /// `|R₀₀| / |R_kk|` of the column-equilibrated, pivoted factorization.
    pub condition_estimate: T,
}

/// Minimizes `‖y − Xα‖²` by Householder QR with column pivoting.
///
/// Columns are scaled to unit norm before factoring so that the rank decision
/// does not depend on the units of each column. The problem is rejected as
/// rank-deficient when a pivot falls below [`Scalar::rank_tolerance`] times
/// the leading pivot; the error lists the columns (`col<j>`, zero-based) that
/// the pivoting pushed past the numerical rank.
pub fn lstsq<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<LeastSquares<T>> {
    let (n, k) = (x.nrows(), x.ncols());
    if k == 0 {
        return Err(Error::EmptyModel);
    }
    if n < k {
        return Err(Error::Dimension(format!("{n} rows cannot determine {k} coefficients")));
    }
    if y.len() != n {
        return Err(Error::Dimension(format!("response has {} entries, matrix has {n} rows", y.len())));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("least-squares input has non-finite values".into()));
    }

    let scales: Vec<T> = (0..k)
        .map(|j| (0..n).map(|i| x[(i, j)] * x[(i, j)]).sum::<T>().sqrt())
        .collect();
    let zero_cols: Vec<String> = scales
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == T::zero())
        .map(|(j, _)| format!("col{j}"))
        .collect();
    if !zero_cols.is_empty() {
        return Err(Error::RankDeficient { columns: zero_cols });
    }

    let mut a = Matrix::from_fn(n, k, |i, j| x[(i, j)] / scales[j]);
    let mut b = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut diag = vec![T::zero(); k];

    for j in 0..k {
        // Pivot: remaining column with the largest trailing norm; first wins ties.
        let mut best = j;
        let mut best_norm = T::neg_infinity();
        for c in j..k {
            let norm: T = (j..n).map(|i| a[(i, c)] * a[(i, c)]).sum();
            if norm > best_norm {
                best_norm = norm;
                best = c;
            }
        }
        if best != j {
            for i in 0..n {
                let tmp = a[(i, j)];
                a[(i, j)] = a[(i, best)];
                a[(i, best)] = tmp;
            }
            perm.swap(j, best);
        }

        let norm = best_norm.sqrt();
        if norm == T::zero() {
            diag[j] = T::zero();
            continue;
        }
        let alpha = if a[(j, j)] > T::zero() { -norm } else { norm };
        // v = x − αe₁, stored in place; H = I − 2vvᵀ/(vᵀv)
        a[(j, j)] = a[(j, j)] - alpha;
        let vtv: T = (j..n).map(|i| a[(i, j)] * a[(i, j)]).sum();
        if vtv > T::zero() {
            let two = T::lit(2.0);
            for c in (j + 1)..k {
                let dot: T = (j..n).map(|i| a[(i, j)] * a[(i, c)]).sum();
                let f = two * dot / vtv;
                for i in j..n {
                    a[(i, c)] = a[(i, c)] - f * a[(i, j)];
                }
            }
            let dot: T = (j..n).map(|i| a[(i, j)] * b[i]).sum();
            let f = two * dot / vtv;
            for i in j..n {
                b[i] = b[i] - f * a[(i, j)];
            }
        }
        diag[j] = alpha;
    }

    let lead = diag[0].abs();
    let tol = T::rank_tolerance();
    let rank = diag.iter().take_while(|d| d.abs() > tol * lead).count();
    if rank < k {
        let mut columns: Vec<usize> = perm[rank..].to_vec();
        columns.sort_unstable();
        return Err(Error::RankDeficient {
            columns: columns.iter().map(|j| format!("col{j}")).collect(),
        });
    }

    // Back substitution on R z = (Qᵀy)[..k]; R's strict upper triangle lives in `a`.
    let mut z = vec![T::zero(); k];
    for j in (0..k).rev() {
        let mut s = b[j];
        for c in (j + 1)..k {
            s = s - a[(j, c)] * z[c];
        }
        z[j] = s / diag[j];
    }
    let mut coefficients = vec![T::zero(); k];
    for (j, &orig) in perm.iter().enumerate() {
        coefficients[orig] = z[j] / scales[orig];
    }

    let fitted = x.mul_vec(&coefficients)?;
    let residual_ss = y.iter().zip(&fitted).map(|(&yi, &fi)| (yi - fi) * (yi - fi)).sum();
    Ok(LeastSquares {
        coefficients,
        residual_ss,
        condition_estimate: lead / diag[k - 1].abs(),
    })
}

/// Pearson correlation of two equal-length series; `None` when either side
/// has zero variance or fewer than two points.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Option<T> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = T::from_usize(x.len())?;
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return None;
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Some(r.max(-T::one()).min(T::one()))
}

/// Pearson correlation matrix of the design-matrix columns, with an exact
/// unit diagonal.
pub fn correlation_matrix<T: Scalar>(m: &DesignMatrix<T>) -> Result<SymmetricMatrix<T>> {
    let values = m.values();
    let (n, k) = (values.nrows(), values.ncols());
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} rows; correlation needs at least 2")));
    }
    let nt = T::from_usize(n).expect("row count representable");
    let mut centered = Matrix::zeros(n, k);
    let mut norms = vec![T::zero(); k];
    for j in 0..k {
        let mean = (0..n).map(|i| values[(i, j)]).sum::<T>() / nt;
        let mut ss = T::zero();
        for i in 0..n {
            let d = values[(i, j)] - mean;
            centered[(i, j)] = d;
            ss = ss + d * d;
        }
        if ss == T::zero() {
            return Err(Error::ZeroVariance(m.terms()[j].name()));
        }
        norms[j] = ss.sqrt();
    }
    let mut r = Matrix::identity(k);
    for a in 0..k {
        for b in (a + 1)..k {
            let dot: T = (0..n).map(|i| centered[(i, a)] * centered[(i, b)]).sum();
            let v = (dot / (norms[a] * norms[b])).max(-T::one()).min(T::one());
            r[(a, b)] = v;
            r[(b, a)] = v;
        }
    }
    SymmetricMatrix::new(r)
}
