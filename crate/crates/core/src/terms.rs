//! Quadratic term sets over named variables and their evaluation into design
//! matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Named-variable lookup for one observation.
pub trait Variables<T> {
    fn value(&self, name: &str) -> Option<T>;

    /// Identifier used for design-matrix row keys and error messages.
    fn record_key(&self) -> Option<String> {
        None
    }
}

impl<T: Copy> Variables<T> for BTreeMap<String, T> {
    fn value(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Variables<T> for HashMap<String, T> {
    fn value(&self, name: &str) -> Option<T> {
        self.get(name).copied()
    }
}

impl<T: Copy> Variables<T> for [(&str, T)] {
    fn value(&self, name: &str) -> Option<T> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<T: Copy, const N: usize> Variables<T> for [(&str, T); N] {
    fn value(&self, name: &str) -> Option<T> {
        self.as_slice().value(name)
    }
}

impl<T, V: Variables<T> + ?Sized> Variables<T> for &V {
    fn value(&self, name: &str) -> Option<T> {
        (**self).value(name)
    }

    fn record_key(&self) -> Option<String> {
        (**self).record_key()
    }
}

/// One variable raised to a positive power inside a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub variable: String,
    pub power: u32,
}

/// Monomial of total degree 1 or 2 over named variables.
///
/// Factors are kept in the declared variable order so rendering is stable:
/// `W`, `W^2`, `WP`. Equality compares the exponent map, so `wW` and `Ww`
/// denote the same term.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermDescriptor {
    factors: Vec<Factor>,
}

impl PartialEq for TermDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.exponents() == other.exponents()
    }
}

impl Eq for TermDescriptor {}

impl TermDescriptor {
    pub fn linear(var: &str) -> Self {
        Self { factors: vec![Factor { variable: var.to_string(), power: 1 }] }
    }

    pub fn square(var: &str) -> Self {
        Self { factors: vec![Factor { variable: var.to_string(), power: 2 }] }
    }

    pub fn interaction(first: &str, second: &str) -> Self {
        if first == second {
            return Self::square(first);
        }
        Self {
            factors: vec![
                Factor { variable: first.to_string(), power: 1 },
                Factor { variable: second.to_string(), power: 1 },
            ],
        }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn exponents(&self) -> BTreeMap<&str, u32> {
        let mut m = BTreeMap::new();
        for f in &self.factors {
            *m.entry(f.variable.as_str()).or_insert(0) += f.power;
        }
        m
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|f| f.power).sum()
    }

    /// Power of `var` in this monomial (0 when absent).
    pub fn power_of(&self, var: &str) -> u32 {
        self.factors.iter().filter(|f| f.variable == var).map(|f| f.power).sum()
    }

    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.factors.iter().map(|f| f.variable.as_str())
    }

    pub fn name(&self) -> String {
        let compact = self.factors.iter().all(|f| f.variable.chars().count() == 1);
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| match f.power {
                1 => f.variable.clone(),
                p => format!("{}^{p}", f.variable),
            })
            .collect();
        if compact {
            parts.concat()
        } else {
            parts.join("*")
        }
    }

    /// Evaluates the monomial by repeated multiplication of the stored values,
    /// so an interaction column equals the elementwise product of its factors.
    pub fn evaluate<T: Scalar, V: Variables<T> + ?Sized>(&self, vars: &V) -> Option<T> {
        let mut acc: Option<T> = None;
        for f in &self.factors {
            let v = vars.value(&f.variable)?;
            for _ in 0..f.power {
                acc = Some(match acc {
                    None => v,
                    Some(a) => a * v,
                });
            }
        }
        acc
    }

    /// Evaluates only the factors other than `skip`.
    pub(crate) fn evaluate_without<T: Scalar, V: Variables<T> + ?Sized>(
        &self,
        skip: &[&str],
        vars: &V,
    ) -> std::result::Result<T, String> {
        let mut acc = T::one();
        for f in &self.factors {
            if skip.contains(&f.variable.as_str()) {
                continue;
            }
            let v = vars.value(&f.variable).ok_or_else(|| f.variable.clone())?;
            for _ in 0..f.power {
                acc = acc * v;
            }
        }
        Ok(acc)
    }

    /// Parses a rendered term name against a declared variable list.
    ///
    /// Accepts `x`, `x^2`, `x*y`, and for single-character variables the
    /// concatenated form `xy` in either order. The result's factors follow
    /// the declared order.
    pub fn parse(name: &str, variables: &[&str]) -> Result<Self> {
        let unknown = || Error::UnknownTerm(name.to_string());
        let name = name.trim();
        let pieces: Vec<&str> = if name.contains('*') {
            name.split('*').map(str::trim).collect()
        } else if variables.contains(&name) || name.ends_with("^2") {
            vec![name]
        } else if variables.iter().all(|v| v.chars().count() == 1) {
            let mut out = Vec::new();
            let mut rest = name;
            while let Some(c) = rest.chars().next() {
                let mut end = c.len_utf8();
                if rest[end..].starts_with("^2") {
                    end += 2;
                }
                out.push(&rest[..end]);
                rest = &rest[end..];
            }
            out
        } else {
            return Err(unknown());
        };

        let mut exps: BTreeMap<usize, u32> = BTreeMap::new();
        for piece in pieces {
            let (var, power) = match piece.strip_suffix("^2") {
                Some(base) => (base, 2),
                None => (piece, 1),
            };
            let pos = variables.iter().position(|v| *v == var).ok_or_else(unknown)?;
            *exps.entry(pos).or_insert(0) += power;
        }
        let degree: u32 = exps.values().sum();
        if !(1..=2).contains(&degree) {
            return Err(unknown());
        }
        Ok(Self {
            factors: exps
                .into_iter()
                .map(|(pos, power)| Factor { variable: variables[pos].to_string(), power })
                .collect(),
        })
    }
}

impl fmt::Display for TermDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Linear terms, then squares, then pairwise interactions in lexicographic
/// pair order: `m(m+3)/2` terms for `m` variables.
pub fn expand_terms(variables: &[&str]) -> Result<Vec<TermDescriptor>> {
    if variables.is_empty() {
        return Err(Error::InvalidArgument("at least one variable is required".into()));
    }
    for (i, v) in variables.iter().enumerate() {
        if v.is_empty() {
            return Err(Error::InvalidArgument("variable names must be nonempty".into()));
        }
        if variables[..i].contains(v) {
            return Err(Error::DuplicateVariable(v.to_string()));
        }
    }
    let m = variables.len();
    let mut terms = Vec::with_capacity(m * (m + 3) / 2);
    terms.extend(variables.iter().map(|v| TermDescriptor::linear(v)));
    terms.extend(variables.iter().map(|v| TermDescriptor::square(v)));
    for i in 0..m {
        for j in (i + 1)..m {
            terms.push(TermDescriptor::interaction(variables[i], variables[j]));
        }
    }
    Ok(terms)
}

/// Parses a list of term names against the declared variables.
pub fn parse_terms(names: &[&str], variables: &[&str]) -> Result<Vec<TermDescriptor>> {
    if names.is_empty() {
        return Err(Error::EmptyModel);
    }
    names.iter().map(|n| TermDescriptor::parse(n, variables)).collect()
}

/// Evaluated terms: `values[(i, j)]` is `terms[j]` at record `i`.
#[derive(Clone, Debug)]
pub struct DesignMatrix<T> {
    terms: Vec<TermDescriptor>,
    values: Matrix<T>,
    row_keys: Vec<String>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn terms(&self) -> &[TermDescriptor] {
        &self.terms
    }

    pub fn values(&self) -> &Matrix<T> {
        &self.values
    }

    pub fn row_keys(&self) -> &[String] {
        &self.row_keys
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn term_names(&self) -> Vec<String> {
        self.terms.iter().map(TermDescriptor::name).collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<T>> {
        let j = self.terms.iter().position(|t| t.name() == name)?;
        Some(self.values.column(j))
    }

    /// Variables in order of first appearance across the terms.
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

    /// Projects onto the named columns, in the requested order.
    ///
    /// Names match either verbatim or as the same monomial (`wW` finds `Ww`).
    pub fn subset(&self, names: &[&str]) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyModel);
        }
        let vars = self.variables();
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            let j = match self.terms.iter().position(|t| t.name() == *name) {
                Some(j) => j,
                None => {
                    let wanted = TermDescriptor::parse(name, &vars)?;
                    self.terms
                        .iter()
                        .position(|t| *t == wanted)
                        .ok_or_else(|| Error::UnknownTerm(name.to_string()))?
                }
            };
            cols.push(j);
        }
        Ok(Self {
            terms: cols.iter().map(|&j| self.terms[j].clone()).collect(),
            values: self.values.select_columns(&cols),
            row_keys: self.row_keys.clone(),
        })
    }
}

/// Evaluates every term at every record. Rows without a record key are keyed
/// by their index.
pub fn evaluate<T: Scalar, V: Variables<T>>(
    terms: &[TermDescriptor],
    records: &[V],
) -> Result<DesignMatrix<T>> {
    if terms.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut data = Vec::with_capacity(records.len() * terms.len());
    let mut row_keys = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let key = rec.record_key().unwrap_or_else(|| format!("#{i}"));
        for term in terms {
            let v = term.evaluate(rec).ok_or_else(|| Error::MissingValue {
                record: key.clone(),
                variable: term
                    .variables()
                    .find(|v| rec.value(v).is_none())
                    .unwrap_or_default()
                    .to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "term `{}` is not finite at record `{key}`",
                    term.name()
                )));
            }
            data.push(v);
        }
        row_keys.push(key);
    }
    Ok(DesignMatrix {
        terms: terms.to_vec(),
        values: Matrix::from_vec(records.len(), terms.len(), data)?,
        row_keys,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(terms: &[TermDescriptor]) -> Vec<String> {
        terms.iter().map(TermDescriptor::name).collect()
    }

    #[test]
    fn expansion_small_cases() {
        assert_eq!(names(&expand_terms(&["x"]).unwrap()), ["x", "x^2"]);
        assert_eq!(names(&expand_terms(&["x", "y"]).unwrap()), ["x", "y", "x^2", "y^2", "xy"]);
    }

    #[test]
    fn expansion_six_variables() {
        let t = expand_terms(&["W", "P", "w", "p", "a", "t"]).unwrap();
        assert_eq!(t.len(), 27);
        assert_eq!(t[12].name(), "WP");
        assert_eq!(t[26].name(), "at");
    }

    #[test]
    fn duplicate_variables_rejected() {
        assert!(matches!(expand_terms(&["x", "y", "x"]), Err(Error::DuplicateVariable(v)) if v == "x"));
    }

    #[test]
    fn multi_character_names_use_star() {
        let t = expand_terms(&["x1", "x2"]).unwrap();
        assert_eq!(names(&t), ["x1", "x2", "x1^2", "x2^2", "x1*x2"]);
    }

    #[test]
    fn parse_accepts_either_order() {
        let vars = ["W", "P", "w", "p", "a", "t"];
        let ww = TermDescriptor::parse("wW", &vars).unwrap();
        assert_eq!(ww.name(), "Ww");
        assert_eq!(TermDescriptor::parse("W^2", &vars).unwrap(), TermDescriptor::square("W"));
        assert_eq!(TermDescriptor::parse("WW", &vars).unwrap(), TermDescriptor::square("W"));
        assert_eq!(TermDescriptor::parse("p*W", &vars).unwrap().name(), "Wp");
        assert!(TermDescriptor::parse("Wpa", &vars).is_err());
        assert!(TermDescriptor::parse("z", &vars).is_err());
    }

    #[test]
    fn evaluation_examples() {
        let xy = TermDescriptor::interaction("x", "y");
        assert_eq!(xy.evaluate::<f64, _>(&[("x", 3.0), ("y", 4.0)]), Some(12.0));
        let x2 = TermDescriptor::square("x");
        assert_eq!(x2.evaluate::<f64, _>(&[("x", -2.0)]), Some(4.0));
        let wt = TermDescriptor::interaction("W", "t");
        assert_eq!(wt.evaluate::<f64, _>(&[("W", 65.0), ("t", 28.5)]), Some(1852.5));
    }

    #[test]
    fn missing_variable_named() {
        let terms = expand_terms(&["x", "y"]).unwrap();
        let rec: BTreeMap<String, f64> = [("x".to_string(), 1.0)].into();
        match evaluate(&terms, &[rec]) {
            Err(Error::MissingValue { record, variable }) => {
                assert_eq!(record, "#0");
                assert_eq!(variable, "y");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn subset_behaviour() {
        let terms = expand_terms(&["W", "P"]).unwrap();
        let recs = [[("W", 2.0), ("P", 3.0)], [("W", 5.0), ("P", 7.0)]];
        let m: DesignMatrix<f64> = evaluate(&terms, &recs).unwrap();
        let all: Vec<String> = m.term_names();
        let all_refs: Vec<&str> = all.iter().map(String::as_str).collect();
        let same = m.subset(&all_refs).unwrap();
        assert_eq!(same.values(), m.values());

        let two = m.subset(&["W", "P^2"]).unwrap();
        assert_eq!(two.values().row(0), &[2.0, 9.0]);
        assert_eq!(two.values().row(1), &[5.0, 49.0]);
        assert_eq!(m.subset(&["PW"]).unwrap().values().column(0), vec![6.0, 35.0]);
        assert!(matches!(m.subset(&[]), Err(Error::EmptyModel)));
        assert!(matches!(m.subset(&["Q"]), Err(Error::UnknownTerm(_))));
    }
}
