//! Principal-component factor extraction over a design matrix.
//!
//! Loadings are eigenvectors of the column correlation matrix scaled by the
//! square root of their eigenvalues, optionally varimax-rotated (Kaiser
//! normalization). Factors are reported in descending order of SS loading.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{correlation_matrix, eigen_symmetric, Matrix};
use crate::scalar::Scalar;
use crate::terms::DesignMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rotation {
    None,
    #[default]
    Varimax,
}

impl FromStr for Rotation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(Rotation::None),
            "varimax" => Ok(Rotation::Varimax),
            other => Err(Error::InvalidArgument(format!("unknown rotation `{other}`"))),
        }
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rotation::None => "none",
            Rotation::Varimax => "varimax",
        })
    }
}

pub const DEFAULT_RETENTION_THRESHOLD: f64 = 1.0;
pub const DEFAULT_DISPLAY_THRESHOLD: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct FactorModel<T> {
    pub term_names: Vec<String>,
    /// Terms × factors.
    pub loadings: Matrix<T>,
    pub ss_loadings: Vec<T>,
    pub proportion_variance: Vec<T>,
    pub cumulative_variance: Vec<T>,
    pub retained: usize,
    pub rotation: Rotation,
}

impl<T: Scalar> FactorModel<T> {
    pub fn n_factors(&self) -> usize {
        self.loadings.ncols()
    }

    /// Assembles the bookkeeping columns from a loadings matrix.
    pub fn from_loadings(term_names: Vec<String>, loadings: Matrix<T>, rotation: Rotation) -> Self {
        let k = T::from_usize(loadings.nrows()).expect("term count representable");
        let ss_loadings: Vec<T> = (0..loadings.ncols())
            .map(|j| (0..loadings.nrows()).map(|i| loadings[(i, j)] * loadings[(i, j)]).sum())
            .collect();
        let proportion_variance: Vec<T> = ss_loadings.iter().map(|&s| s / k).collect();
        let cumulative_variance = proportion_variance
            .iter()
            .scan(T::zero(), |acc, &p| {
                *acc = *acc + p;
                Some(*acc)
            })
            .collect();
        let mut model = Self {
            term_names,
            loadings,
            ss_loadings,
            proportion_variance,
            cumulative_variance,
            retained: 0,
            rotation,
        };
        model.retained = retain_factors(&model.ss_loadings, T::lit(DEFAULT_RETENTION_THRESHOLD));
        model
    }
}

/// Extracts `n_factors` principal-component factors from the correlation
/// matrix of `m`'s columns.
pub fn extract_factors<T: Scalar>(
    m: &DesignMatrix<T>,
    n_factors: usize,
    rotation: Rotation,
) -> Result<FactorModel<T>> {
    let k = m.terms().len();
    if n_factors == 0 || n_factors > k {
        return Err(Error::InvalidArgument(format!(
            "number of factors must be in 1..={k}, got {n_factors}"
        )));
    }
    let corr = correlation_matrix(m)?;
    let eig = eigen_symmetric(&corr, T::eigen_tolerance(), 100)?;
    let mut loadings = Matrix::from_fn(k, n_factors, |i, j| {
        eig.vectors[(i, j)] * eig.values[j].max(T::zero()).sqrt()
    });
    if rotation == Rotation::Varimax && n_factors > 1 {
        loadings = varimax(&loadings, T::lit(1e-12), 1000);
    }
    let loadings = order_and_orient(loadings);
    Ok(FactorModel::from_loadings(m.term_names(), loadings, rotation))
}

/// Sorts factor columns by descending SS loading and flips each column so its
/// loadings sum to a nonnegative value.
fn order_and_orient<T: Scalar>(l: Matrix<T>) -> Matrix<T> {
    let (p, f) = (l.nrows(), l.ncols());
    let ss: Vec<T> = (0..f).map(|j| (0..p).map(|i| l[(i, j)] * l[(i, j)]).sum()).collect();
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&a, &b| ss[b].partial_cmp(&ss[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut out = l.select_columns(&order);
    for j in 0..f {
        let sum: T = (0..p).map(|i| out[(i, j)]).sum();
        if sum < T::zero() {
            for i in 0..p {
                out[(i, j)] = -out[(i, j)];
            }
        }
    }
    out
}

/// Kaiser's varimax criterion: sum over factors of the variance of squared
/// (row-normalized) loadings.
pub fn varimax_criterion<T: Scalar>(l: &Matrix<T>) -> T {
    let (p, f) = (l.nrows(), l.ncols());
    let pt = T::from_usize(p).expect("row count representable");
    let h: Vec<T> = (0..p).map(|i| l.row(i).iter().map(|&v| v * v).sum::<T>().sqrt()).collect();
    let mut total = T::zero();
    for j in 0..f {
        let sq: Vec<T> = (0..p)
            .map(|i| if h[i] > T::zero() { (l[(i, j)] / h[i]).powi(2) } else { T::zero() })
            .collect();
        let mean = sq.iter().copied().sum::<T>() / pt;
        total = total + sq.iter().map(|&s| (s - mean) * (s - mean)).sum::<T>() / pt;
    }
    total
}

/// Orthogonal varimax rotation by successive pairwise planar rotations, with
/// rows normalized to unit communality during the iteration.
pub fn varimax<T: Scalar>(loadings: &Matrix<T>, tol: T, max_cycles: usize) -> Matrix<T> {
    let (p, f) = (loadings.nrows(), loadings.ncols());
    let h: Vec<T> = (0..p)
        .map(|i| loadings.row(i).iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    let mut x = Matrix::from_fn(p, f, |i, j| {
        if h[i] > T::zero() {
            loadings[(i, j)] / h[i]
        } else {
            loadings[(i, j)]
        }
    });
    let pt = T::from_usize(p).expect("row count representable");
    let two = T::lit(2.0);
    let quarter = T::lit(0.25);

    for _ in 0..max_cycles {
        let mut max_angle = T::zero();
        for a in 0..f {
            for b in (a + 1)..f {
                let (mut su, mut sv, mut suv2, mut suv) = (T::zero(), T::zero(), T::zero(), T::zero());
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    let u = xa * xa - xb * xb;
                    let v = two * xa * xb;
                    su = su + u;
                    sv = sv + v;
                    suv2 = suv2 + (u * u - v * v);
                    suv = suv + u * v;
                }
                let num = two * suv - two * su * sv / pt;
                let den = suv2 - (su * su - sv * sv) / pt;
                let phi = quarter * num.atan2(den);
                if phi.abs() > max_angle {
                    max_angle = phi.abs();
                }
                if phi == T::zero() {
                    continue;
                }
                let (s, c) = phi.sin_cos();
                for i in 0..p {
                    let (xa, xb) = (x[(i, a)], x[(i, b)]);
                    x[(i, a)] = c * xa + s * xb;
                    x[(i, b)] = -s * xa + c * xb;
                }
            }
        }
        if max_angle < tol {
            break;
        }
    }
    for i in 0..p {
        if h[i] > T::zero() {
            for j in 0..f {
                x[(i, j)] = x[(i, j)] * h[i];
            }
        }
    }
    x
}

/// Number of factors whose SS loading reaches `threshold`.
pub fn retain_factors<T: Scalar>(ss_loadings: &[T], threshold: T) -> usize {
    ss_loadings.iter().filter(|&&s| s >= threshold).count()
}

/// One row of the factor-membership table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipRow<T> {
    pub term: String,
    /// Zero-based factor with the largest absolute loading (lower index on ties).
    pub factor: usize,
    pub loading: T,
    /// Per-factor cells; `None` where the loading is below the display threshold.
    pub cells: Vec<Option<T>>,
}

/// Assigns each term to its dominant factor and blanks small loadings.
/// Rows are grouped by assigned factor, keeping term order within a group.
pub fn membership_table<T: Scalar>(model: &FactorModel<T>, display_threshold: T) -> Vec<MembershipRow<T>> {
    let l = &model.loadings;
    let mut rows: Vec<MembershipRow<T>> = (0..l.nrows())
        .map(|i| {
            let row = l.row(i);
            let mut factor = 0;
            for j in 1..row.len() {
                if row[j].abs() > row[factor].abs() {
                    factor = j;
                }
            }
            let cells = row
                .iter()
                .enumerate()
                .map(|(j, &v)| (j == factor || v.abs() >= display_threshold).then_some(v))
                .collect();
            MembershipRow { term: model.term_names[i].clone(), factor, loading: row[factor], cells }
        })
        .collect();
    rows.sort_by_key(|r| r.factor);
    rows
}

/// `(Σx)² / (n·Σx²)`: the uncentered R² of fitting `1 = αx`. Equals 1 for a
/// constant vector and 3/4 in the limit for uniform draws on `[0, b]`.
///
/// Evaluated as `x̄² / (x̄² + s²)` with a two-pass population variance `s²`,
/// which is algebraically the same ratio but exact for constant input.
pub fn constancy_index<T: Scalar>(x: &[T]) -> Result<T> {
    if x.is_empty() {
        return Err(Error::InsufficientData("constancy index of an empty series".into()));
    }
    let n = T::from_usize(x.len()).expect("length representable");
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let m2 = mean * mean;
    if m2 + var == T::zero() {
        return Err(Error::ZeroVector);
    }
    Ok(m2 / (m2 + var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{evaluate, TermDescriptor};

    #[test]
    fn perfectly_correlated_pair() {
        let terms = vec![TermDescriptor::linear("x"), TermDescriptor::linear("y")];
        let recs: Vec<[(&str, f64); 2]> =
            (0..10).map(|i| [("x", i as f64), ("y", 3.0 * i as f64 - 2.0)]).collect();
        let m = evaluate(&terms, &recs).unwrap();
        let model = extract_factors(&m, 1, Rotation::None).unwrap();
        assert!((model.loadings[(0, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((model.loadings[(1, 0)].abs() - 1.0).abs() < 1e-12);
        assert!((model.ss_loadings[0] - 2.0).abs() < 1e-12);
        assert!((model.proportion_variance[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn retention_rule() {
        assert_eq!(retain_factors(&[9.05, 8.77, 6.35, 1.84, 0.37], 1.0), 4);
        assert_eq!(retain_factors(&[0.9, 0.5], 1.0), 0);
        assert_eq!(retain_factors(&[0.9, 0.5, 0.0], 0.0), 3);
    }

    fn model_from(rows: &[&[f64]]) -> FactorModel<f64> {
        let l = Matrix::from_rows(rows).unwrap();
        let names = (0..rows.len()).map(|i| format!("v{i}")).collect();
        FactorModel::from_loadings(names, l, Rotation::None)
    }

    #[test]
    fn membership_examples() {
        let m = model_from(&[&[0.97, 0.1, 0.05, 0.02], &[0.0, -0.3, 0.0, 0.91], &[0.5, -0.5, 0.0, 0.0]]);
        let t = membership_table(&m, 0.3);
        assert_eq!(t[0].term, "v0");
        assert_eq!(t[0].cells, vec![Some(0.97), None, None, None]);
        // tie goes to the lower index
        assert_eq!((t[1].term.as_str(), t[1].factor), ("v2", 0));
        assert_eq!(t[2].factor, 3);
        assert_eq!(t[2].cells, vec![None, Some(-0.3), None, Some(0.91)]);
    }

    #[test]
    fn constancy_examples() {
        assert_eq!(constancy_index(&[4.2, 4.2, 4.2]).unwrap(), 1.0);
        assert_eq!(constancy_index(&[0.1f32; 1000]).unwrap(), 1.0);
        assert_eq!(constancy_index(&[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(constancy_index(&[1.0, 3.0]).unwrap(), 0.8);
        assert!(matches!(constancy_index(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn varimax_recovers_simple_structure() {
        // Simple structure rotated by 25°; varimax should undo the rotation.
        let base = [[0.9, 0.0], [0.8, 0.0], [0.85, 0.0], [0.0, 0.9], [0.0, 0.75], [0.0, 0.8]];
        let (s, c) = 25f64.to_radians().sin_cos();
        let rotated: Vec<[f64; 2]> = base.iter().map(|r| [c * r[0] - s * r[1], s * r[0] + c * r[1]]).collect();
        let l = Matrix::from_rows(&rotated).unwrap();
        let v = order_and_orient(varimax(&l, 1e-14, 1000));
        for (i, r) in base.iter().enumerate() {
            let got = [v[(i, 0)].abs(), v[(i, 1)].abs()];
            assert!((got[0] - r[0]).abs() < 1e-9 && (got[1] - r[1]).abs() < 1e-9, "row {i}: {got:?}");
        }
        assert!(varimax_criterion(&v) > varimax_criterion(&l));
    }

    #[test]
    fn rotation_parses() {
        assert_eq!("Varimax".parse::<Rotation>().unwrap(), Rotation::Varimax);
        assert!("promax".parse::<Rotation>().is_err());
    }
}
