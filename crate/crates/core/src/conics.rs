//! Two-variable slices of fitted models at the level `û = 1`, their conic
//! classification, and grid evaluation for external contouring.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::implicit::{evaluate_model, ImplicitModel};
use crate::scalar::Scalar;
use crate::terms::Variables;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConicKind {
    Ellipse,
    Parabola,
    Hyperbola,
    Degenerate,
}

impl fmt::Display for ConicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConicKind::Ellipse => "ellipse",
            ConicKind::Parabola => "parabola",
            ConicKind::Hyperbola => "hyperbola",
            ConicKind::Degenerate => "degenerate",
        })
    }
}

pub const PARABOLA_TOLERANCE: f64 = 1e-9;

/// `A x² + B xy + C y² + D x + E y + F = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Conic<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub e: T,
    pub f: T,
}

impl<T: Scalar> Conic<T> {
    pub fn new(a: T, b: T, c: T, d: T, e: T, f: T) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::new(self.a * k, self.b * k, self.c * k, self.d * k, self.e * k, self.f * k)
    }

    /// Substitutes `x = cosθ·x' − sinθ·y'`, `y = sinθ·x' + cosθ·y'`.
    pub fn rotated(&self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        let two = T::lit(2.0);
        Self::new(
            self.a * c * c + self.b * s * c + self.c * s * s,
            two * (self.c - self.a) * s * c + self.b * (c * c - s * s),
            self.a * s * s - self.b * s * c + self.c * c * c,
            self.d * c + self.e * s,
            -self.d * s + self.e * c,
            self.f,
        )
    }

    pub fn discriminant(&self) -> T {
        self.b * self.b - T::lit(4.0) * self.a * self.c
    }

    /// Determinant of the symmetric 3×3 conic matrix.
    pub fn determinant(&self) -> T {
        let h = T::lit(0.5);
        let (a, b, c, d, e, f) = (self.a, self.b * h, self.c, self.d * h, self.e * h, self.f);
        a * (c * f - e * e) - b * (b * f - e * d) + d * (b * e - c * d)
    }

    pub fn eval(&self, x: T, y: T) -> T {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }
}

/// Classifies by the sign of `B² − 4AC`, after checking the full conic
/// determinant for degeneracy.
///
/// Both tests are relative to rotation-invariant Frobenius norms: the
/// discriminant against `A² + B²/2 + C²` (the quadratic part) and the
/// determinant against the cube of the 3×3 conic matrix norm. A vanishing
/// quadratic part (a line) is degenerate.
pub fn classify<T: Scalar>(conic: &Conic<T>, tol: T) -> Result<ConicKind> {
    let coeffs = [conic.a, conic.b, conic.c, conic.d, conic.e, conic.f];
    if coeffs.iter().all(|v| *v == T::zero()) {
        return Err(Error::EmptyForm);
    }
    let h = T::lit(0.5);
    let quad_norm2 = conic.a * conic.a + h * conic.b * conic.b + conic.c * conic.c;
    if quad_norm2 == T::zero() {
        return Ok(ConicKind::Degenerate);
    }
    let full_norm2 = quad_norm2
        + h * (conic.d * conic.d + conic.e * conic.e)
        + conic.f * conic.f;
    let full_norm = full_norm2.sqrt();
    if conic.determinant().abs() <= tol * full_norm * full_norm2 {
        return Ok(ConicKind::Degenerate);
    }
    let disc = conic.discriminant();
    Ok(if disc.abs() <= tol * quad_norm2 {
        ConicKind::Parabola
    } else if disc < T::zero() {
        ConicKind::Ellipse
    } else {
        ConicKind::Hyperbola
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConicSlice<T> {
    pub var_x: String,
    pub var_y: String,
    pub fixed: BTreeMap<String, T>,
    pub conic: Conic<T>,
    pub kind: ConicKind,
}

/// Restricts `model(·) = 1` to the plane of `var_x`, `var_y`, holding every
/// other model variable at its value in `fixed`.
pub fn slice_model<T: Scalar>(
    model: &ImplicitModel<T>,
    var_x: &str,
    var_y: &str,
    fixed: &BTreeMap<String, T>,
) -> Result<ConicSlice<T>> {
    if var_x == var_y {
        return Err(Error::InvalidArgument("slice axes must be distinct".into()));
    }
    let mut k = [T::zero(); 6];
    k[5] = -T::one();
    for (term, &alpha) in model.terms.iter().zip(&model.coefficients) {
        let cofactor = term.evaluate_without(&[var_x, var_y], fixed).map_err(|v| {
            Error::InvalidArgument(format!("variable `{v}` is neither a slice axis nor fixed"))
        })?;
        let slot = match (term.power_of(var_x), term.power_of(var_y)) {
            (2, 0) => 0,
            (1, 1) => 1,
            (0, 2) => 2,
            (1, 0) => 3,
            (0, 1) => 4,
            (0, 0) => 5,
            (px, py) => {
                return Err(Error::InvalidArgument(format!(
                    "term `{}` has degree {px} in {var_x} and {py} in {var_y}",
                    term.name()
                )))
            }
        };
        k[slot] = k[slot] + alpha * cofactor;
    }
    let conic = Conic::new(k[0], k[1], k[2], k[3], k[4], k[5]);
    let used: Vec<&str> = model.variables();
    let fixed_used = fixed
        .iter()
        .filter(|(name, _)| used.contains(&name.as_str()) && *name != var_x && *name != var_y)
        .map(|(n, v)| (n.clone(), *v))
        .collect();
    Ok(ConicSlice {
        var_x: var_x.to_string(),
        var_y: var_y.to_string(),
        fixed: fixed_used,
        kind: classify(&conic, T::lit(PARABOLA_TOLERANCE))?,
        conic,
    })
}

/// Evenly spaced axis: `steps` points from `lo` to `hi` inclusive.
#[derive(Clone, Debug, Serialize)]
pub struct Axis<T> {
    pub name: String,
    pub values: Vec<T>,
}

impl<T: Scalar> Axis<T> {
    pub fn linspace(name: &str, lo: T, hi: T, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("axis `{name}` needs at least 2 steps")));
        }
        let last = T::from_usize(steps - 1).expect("step count representable");
        let values = (0..steps)
            .map(|i| {
                if i == steps - 1 {
                    hi
                } else {
                    lo + (hi - lo) * T::from_usize(i).expect("index representable") / last
                }
            })
            .collect();
        Ok(Self { name: name.to_string(), values })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Grid<T> {
    pub x: Axis<T>,
    pub y: Axis<T>,
    /// Row-major over y then x: `values[iy * nx + ix]`.
    pub values: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    pub fn at(&self, ix: usize, iy: usize) -> T {
        self.values[iy * self.x.values.len() + ix]
    }
}

struct Overlay<'a, T> {
    fixed: &'a BTreeMap<String, T>,
    x: (&'a str, T),
    y: (&'a str, T),
}

impl<T: Scalar> Variables<T> for Overlay<'_, T> {
    fn value(&self, name: &str) -> Option<T> {
        if name == self.x.0 {
            Some(self.x.1)
        } else if name == self.y.0 {
            Some(self.y.1)
        } else {
            self.fixed.get(name).copied()
        }
    }
}

/// Evaluates `û` over the Cartesian product of two axes.
pub fn grid_evaluate<T: Scalar>(
    model: &ImplicitModel<T>,
    x: Axis<T>,
    y: Axis<T>,
    fixed: &BTreeMap<String, T>,
) -> Result<Grid<T>> {
    let mut values = Vec::with_capacity(x.values.len() * y.values.len());
    for &yv in &y.values {
        for &xv in &x.values {
            let point = Overlay { fixed, x: (&x.name, xv), y: (&y.name, yv) };
            values.push(evaluate_model(model, &point)?);
        }
    }
    Ok(Grid { x, y, values })
}
