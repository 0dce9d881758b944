//! Non-response (implicit) regression: fit the all-ones response over a term
//! set with no intercept, then invert a fitted model that is quadratic in one
//! variable to bound that variable given the others.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::scalar::Scalar;
use crate::terms::{DesignMatrix, TermDescriptor, Variables};

#[derive(Clone, Debug, PartialEq)]
pub struct ImplicitModel<T> {
    pub terms: Vec<TermDescriptor>,
    pub coefficients: Vec<T>,
    /// `1 − ‖1 − Xα‖²/n`.
    pub r_squared: T,
    pub n_records: usize,
}

impl<T: Scalar> ImplicitModel<T> {
    pub fn new(terms: Vec<TermDescriptor>, coefficients: Vec<T>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::EmptyModel);
        }
        if terms.len() != coefficients.len() {
            return Err(Error::Dimension(format!(
                "{} terms but {} coefficients",
                terms.len(),
                coefficients.len()
            )));
        }
        Ok(Self { terms, coefficients, r_squared: T::nan(), n_records: 0 })
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(TermDescriptor::name).collect()
    }

    /// Variables in order of first appearance.
    pub fn variables(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for t in &self.terms {
            for v in t.variables() {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Serialized form: terms by name, parsed back against `variables`.
#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelDoc<T> {
    variables: Vec<String>,
    terms: Vec<String>,
    coefficients: Vec<T>,
    r_squared: Option<T>,
    n_records: usize,
}

impl<T: Scalar> Serialize for ImplicitModel<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelDoc {
            variables: self.variables().into_iter().map(str::to_string).collect(),
            terms: self.term_names(),
            coefficients: self.coefficients.clone(),
            r_squared: (!self.r_squared.is_nan()).then_some(self.r_squared),
            n_records: self.n_records,
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ImplicitModel<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = ModelDoc::<T>::deserialize(d)?;
        let vars: Vec<&str> = doc.variables.iter().map(String::as_str).collect();
        let terms = doc
            .terms
            .iter()
            .map(|n| TermDescriptor::parse(n, &vars))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        let mut model = Self::new(terms, doc.coefficients).map_err(serde::de::Error::custom)?;
        model.r_squared = doc.r_squared.unwrap_or_else(T::nan);
        model.n_records = doc.n_records;
        Ok(model)
    }
}

/// Least-squares fit of the unity response.
pub fn fit_unity<T: Scalar>(m: &DesignMatrix<T>) -> Result<ImplicitModel<T>> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::InsufficientData("cannot fit an empty design matrix".into()));
    }
    let ones = vec![T::one(); n];
    let ls = lstsq(m.values(), &ones).map_err(|e| match e {
        Error::RankDeficient { columns } => Error::RankDeficient {
            columns: columns
                .iter()
                .map(|c| {
                    c.strip_prefix("col")
                        .and_then(|j| j.parse::<usize>().ok())
                        .and_then(|j| m.terms().get(j))
                        .map_or_else(|| c.clone(), TermDescriptor::name)
                })
                .collect(),
        },
        other => other,
    })?;
    let nt = T::from_usize(n).expect("row count representable");
    Ok(ImplicitModel {
        terms: m.terms().to_vec(),
        coefficients: ls.coefficients,
        r_squared: T::one() - ls.residual_ss / nt,
        n_records: n,
    })
}

/// `û = Σ α_j · term_j(record)`.
pub fn evaluate_model<T: Scalar, V: Variables<T> + ?Sized>(model: &ImplicitModel<T>, record: &V) -> Result<T> {
    let mut u = T::zero();
    for (term, &alpha) in model.terms.iter().zip(&model.coefficients) {
        let v = term.evaluate(record).ok_or_else(|| Error::MissingValue {
            record: record.record_key().unwrap_or_default(),
            variable: term
                .variables()
                .find(|v| record.value(v).is_none())
                .unwrap_or_default()
                .to_string(),
        })?;
        u = u + alpha * v;
    }
    Ok(u)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootStatus {
    TwoRoots,
    DoubleRoot,
    Complex,
    /// `A ≈ 0`: the single root `−C/B` fills both bounds.
    Linear,
    /// `A ≈ 0` and `B = 0`: no root exists.
    Degenerate,
}

impl RootStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RootStatus::TwoRoots => "two-roots",
            RootStatus::DoubleRoot => "double-root",
            RootStatus::Complex => "complex",
            RootStatus::Linear => "linear",
            RootStatus::Degenerate => "degenerate",
        }
    }
}

/// Coefficients of `A r² + B r + C = 0` in the target variable and its roots.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadraticBounds<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub lower: Option<T>,
    pub upper: Option<T>,
    pub status: RootStatus,
}

impl<T: Scalar> QuadraticBounds<T> {
    /// Solves `a r² + b r + c = 0`.
    ///
    /// `|a| < 1e-12·max(|b|, 1)` falls back to the linear root. Otherwise the
    /// larger-magnitude root comes from `−(b + sign(b)√D)/2a` and the other
    /// from `c / (a·r₁)`, which avoids cancellation when `b² ≫ 4ac`.
    pub fn solve(a: T, b: T, c: T) -> Self {
        let mk = |lower, upper, status| Self { a, b, c, lower, upper, status };
        let eps_a = T::lit(1e-12) * b.abs().max(T::one());
        if a.abs() < eps_a {
            if b == T::zero() {
                return mk(None, None, RootStatus::Degenerate);
            }
            let r = -c / b;
            return mk(Some(r), Some(r), RootStatus::Linear);
        }
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let disc = b * b - four * a * c;
        let scale = (b * b).max((four * a * c).abs());
        if disc.abs() <= four * T::epsilon() * scale {
            let r = -b / (two * a);
            return mk(Some(r), Some(r), RootStatus::DoubleRoot);
        }
        if disc < T::zero() {
            return mk(None, None, RootStatus::Complex);
        }
        let sign = if b < T::zero() { -T::one() } else { T::one() };
        let q = -(b + sign * disc.sqrt()) / two;
        let r1 = q / a;
        let r2 = if q == T::zero() { T::zero() } else { c / q };
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        mk(Some(lo), Some(hi), RootStatus::TwoRoots)
    }

    /// Roots straight from `(−B ∓ √(B²−4AC)) / 2A`, without the stabilized
    /// rearrangement. Kept for comparison with [`QuadraticBounds::solve`].
    pub fn textbook_roots(&self) -> Option<(T, T)> {
        let two = T::lit(2.0);
        let disc = self.b * self.b - T::lit(4.0) * self.a * self.c;
        if disc < T::zero() || self.a == T::zero() {
            return None;
        }
        let s = disc.sqrt();
        let l = (-self.b - s) / (two * self.a);
        let u = (-self.b + s) / (two * self.a);
        Some(if l <= u { (l, u) } else { (u, l) })
    }
}

/// Collects `A`, `B`, `C` for `model(record) = 1` viewed as a quadratic in
/// `target`, with every other variable taken from `record`.
pub fn quadratic_in<T: Scalar, V: Variables<T> + ?Sized>(
    model: &ImplicitModel<T>,
    target: &str,
    record: &V,
) -> Result<QuadraticBounds<T>> {
    if !model.terms.iter().any(|t| t.power_of(target) > 0) {
        return Err(Error::TargetAbsent(target.to_string()));
    }
    let (mut a, mut b, mut c) = (T::zero(), T::zero(), -T::one());
    for (term, &alpha) in model.terms.iter().zip(&model.coefficients) {
        let cofactor = term.evaluate_without(&[target], record).map_err(|variable| Error::MissingValue {
            record: record.record_key().unwrap_or_default(),
            variable,
        })?;
        let contribution = alpha * cofactor;
        match term.power_of(target) {
            0 => c = c + contribution,
            1 => b = b + contribution,
            2 => a = a + contribution,
            p => {
                return Err(Error::InvalidArgument(format!(
                    "term `{}` has degree {p} in `{target}`",
                    term.name()
                )))
            }
        }
    }
    Ok(QuadraticBounds::solve(a, b, c))
}

/// [`quadratic_in`] over many records, in parallel; output order follows input.
pub fn quadratic_in_all<T: Scalar, V: Variables<T> + Sync>(
    model: &ImplicitModel<T>,
    target: &str,
    records: &[V],
) -> Vec<Result<QuadraticBounds<T>>> {
    records.par_iter().map(|r| quadratic_in(model, target, r)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RootLabel {
    Lower,
    Upper,
}

/// Picks the lower root when it is strictly nearer the observed value and the
/// upper root otherwise, so exact ties go to the upper root.
pub fn select_root<T: Scalar>(bounds: &QuadraticBounds<T>, observed: T) -> Result<(T, RootLabel)> {
    match (bounds.status, bounds.lower, bounds.upper) {
        (RootStatus::Complex | RootStatus::Degenerate, _, _) | (_, None, _) | (_, _, None) => {
            Err(Error::ComplexRoots)
        }
        (_, Some(lo), Some(hi)) => {
            if (lo - observed).abs() < (hi - observed).abs() {
                Ok((lo, RootLabel::Lower))
            } else {
                Ok((hi, RootLabel::Upper))
            }
        }
    }
}

/// Mean observed target per bin of a conditioning variable, used to choose a
/// root when the target itself is unknown.
#[derive(Clone, Debug, Serialize)]
pub struct BinnedReference<T> {
    pub bin_width: T,
    /// (bin lower edge, mean target) in ascending order of edge.
    pub bins: Vec<(T, T)>,
}

impl<T: Scalar> BinnedReference<T> {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>, bin_width: T) -> Result<Self> {
        if !(bin_width > T::zero()) {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        let mut acc: BTreeMap<i64, (T, usize)> = BTreeMap::new();
        for (cond, target) in pairs {
            let key = (cond / bin_width).floor().to_i64().ok_or_else(|| {
                Error::InvalidArgument("conditioning value not representable".into())
            })?;
            let e = acc.entry(key).or_insert((T::zero(), 0));
            e.0 = e.0 + target;
            e.1 += 1;
        }
        let bins = acc
            .into_iter()
            .map(|(k, (sum, n))| {
                (
                    T::from_i64(k).expect("bin index representable") * bin_width,
                    sum / T::from_usize(n).expect("count representable"),
                )
            })
            .collect();
        Ok(Self { bin_width, bins })
    }

    /// Mean target of the populated bin whose centre is nearest `cond`.
    pub fn lookup(&self, cond: T) -> Option<T> {
        let half = self.bin_width / T::lit(2.0);
        self.bins
            .iter()
            .min_by(|x, y| {
                let dx = (x.0 + half - cond).abs();
                let dy = (y.0 + half - cond).abs();
                dx.partial_cmp(&dy).unwrap_or(std::cmp::Ordering::Equal)
            })
            .map(|b| b.1)
    }
}

/// Root choice without an observed target: keep roots inside `[band_lo, band_hi]`;
/// with two candidates, take the one nearer `reference`; with no reference,
/// report nothing rather than guess.
pub fn select_root_in_band<T: Scalar>(
    bounds: &QuadraticBounds<T>,
    band_lo: T,
    band_hi: T,
    reference: Option<T>,
) -> Option<(T, RootLabel)> {
    let inside = |r: Option<T>| r.filter(|&v| v >= band_lo && v <= band_hi);
    if matches!(bounds.status, RootStatus::Complex | RootStatus::Degenerate) {
        return None;
    }
    match (inside(bounds.lower), inside(bounds.upper)) {
        (Some(l), Some(u)) if l == u => Some((u, RootLabel::Upper)),
        (Some(l), Some(u)) => {
            let r = reference?;
            if (l - r).abs() < (u - r).abs() {
                Some((l, RootLabel::Lower))
            } else {
                Some((u, RootLabel::Upper))
            }
        }
        (Some(l), None) => Some((l, RootLabel::Lower)),
        (None, Some(u)) => Some((u, RootLabel::Upper)),
        (None, None) => None,
    }
}
