//! Points, boxes, the model registry and Jacobian evaluation.
//!
//! Every vector field the toolkit knows about lives in the registry below.
//! A [`Model`] is a registry entry bound to concrete parameter values; it is
//! immutable and all evaluation is pure, so a model can be shared freely
//! across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Relative step used by [`Model::jacobian_fd_default`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// A state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Coordinates in reverse order; the (x, y) -> (y, x) swap in 2D.
    pub fn swapped(&self) -> Point {
        Point(self.0.iter().rev().copied().collect())
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Max-norm distance.
    pub fn distance(&self, other: &Point) -> f64 {
        max_abs_diff(&self.0, &other.0)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Axis-aligned box `[lower[0], upper[0]] x ... x [lower[n-1], upper[n-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Point,
    upper: Point,
}

impl Bounds {
    pub fn new(lower: impl Into<Point>, upper: impl Into<Point>) -> Result<Self> {
        let lower = lower.into();
        let upper = upper.into();
        if lower.dim() != upper.dim() {
            return Err(Error::DimensionMismatch {
                expected: lower.dim(),
                found: upper.dim(),
            });
        }
        if lower.dim() == 0 {
            return Err(Error::InvalidArgument(
                "box must have at least one axis".into(),
            ));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::NonFinite);
        }
        for (axis, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "box axis {axis}: lower bound {lo} is not below upper bound {hi}"
                )));
            }
        }
        Ok(Bounds { lower, upper })
    }

    /// The square `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Bounds::new([lo, lo], [hi, hi])
    }

    pub fn rect(xlo: f64, xhi: f64, ylo: f64, yhi: f64) -> Result<Self> {
        Bounds::new([xlo, ylo], [xhi, yhi])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Bounds::new([lo], [hi])
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn lower(&self) -> &Point {
        &self.lower
    }

    pub fn upper(&self) -> &Point {
        &self.upper
    }

    pub fn center(&self) -> Point {
        self.lower
            .iter()
            .zip(self.upper.iter())
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect::<Vec<_>>()
            .into()
    }

    /// Closed-box membership.
    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(c, (lo, hi))| *lo <= *c && *c <= *hi)
    }

    /// Membership at least `margin` away from every face.
    pub fn contains_interior(&self, p: &[f64], margin: f64) -> bool {
        p.len() == self.dim()
            && p.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(c, (lo, hi))| lo + margin < *c && *c < hi - margin)
    }

    /// The box scaled by `factor` about its center.
    pub fn inflated(&self, factor: f64) -> Bounds {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(self.upper.iter())
            .map(|(lo, hi)| {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * factor;
                (mid - half, mid + half)
            })
            .unzip::<_, _, Vec<_>, Vec<_>>();
        Bounds {
            lower: lower.into(),
            upper: upper.into(),
        }
    }

    /// Tensor grid with `per_axis` evenly spaced nodes per axis, faces included.
    /// Nodes are ordered with the first axis varying slowest.
    pub fn grid(&self, per_axis: usize) -> Vec<Point> {
        let per_axis = per_axis.max(2);
        let dim = self.dim();
        let axes: Vec<Vec<f64>> = (0..dim)
            .map(|i| linspace(self.lower[i], self.upper[i], per_axis))
            .collect();
        let total = per_axis.pow(dim as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            out.push(Point((0..dim).map(|i| axes[i][idx[i]]).collect()));
            for i in (0..dim).rev() {
                idx[i] += 1;
                if idx[i] < per_axis {
                    break;
                }
                idx[i] = 0;
            }
        }
        out
    }
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            (0..count)
                .map(|i| {
                    if i == count - 1 {
                        hi
                    } else {
                        lo + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data must have n*n entries");
        Matrix { n, data }
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        Matrix {
            n: N,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n);
        max_abs_diff(&self.data, &other.data)
    }

    /// Determinant. Closed form for n <= 2, partial-pivot elimination above.
    pub fn det(&self) -> f64 {
        match self.n {
            0 => 1.0,
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {
                let mut a = self.data.clone();
                let n = self.n;
                let mut det = 1.0;
                for k in 0..n {
                    let p = (k..n)
                        .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                        .unwrap();
                    if a[p * n + k] == 0.0 {
                        return 0.0;
                    }
                    if p != k {
                        for j in 0..n {
                            a.swap(k * n + j, p * n + j);
                        }
                        det = -det;
                    }
                    det *= a[k * n + k];
                    for i in k + 1..n {
                        let f = a[i * n + k] / a[k * n + k];
                        for j in k..n {
                            a[i * n + j] -= f * a[k * n + j];
                        }
                    }
                }
                det
            }
        }
    }

    /// Solves `self * x = rhs`. Returns `None` when the determinant is exactly
    /// zero; callers apply their own near-singularity threshold first.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        match self.n {
            1 => (self.data[0] != 0.0).then(|| vec![rhs[0] / self.data[0]]),
            2 => {
                let det = self.det();
                if det == 0.0 {
                    return None;
                }
                let [a, b, c, d] = [self.data[0], self.data[1], self.data[2], self.data[3]];
                Some(vec![
                    (d * rhs[0] - b * rhs[1]) / det,
                    (a * rhs[1] - c * rhs[0]) / det,
                ])
            }
            n => {
                let mut a = self.data.clone();
                let mut x = rhs.to_vec();
                for k in 0..n {
                    let p = (k..n)
                        .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                        .unwrap();
                    if a[p * n + k] == 0.0 {
                        return None;
                    }
                    if p != k {
                        for j in 0..n {
                            a.swap(k * n + j, p * n + j);
                        }
                        x.swap(k, p);
                    }
                    for i in k + 1..n {
                        let f = a[i * n + k] / a[k * n + k];
                        for j in k..n {
                            a[i * n + j] -= f * a[k * n + j];
                        }
                        x[i] -= f * x[k];
                    }
                }
                for k in (0..n).rev() {
                    let s: f64 = (k + 1..n).map(|j| a[k * n + j] * x[j]).sum();
                    x[k] = (x[k] - s) / a[k * n + k];
                }
                Some(x)
            }
        }
    }
}

/// Named parameter values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Params(BTreeMap::new())
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Params {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Params(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Registry identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    /// `x' = mu x - x^3`
    Pitchfork1d,
    /// `x' = y^2 - a y - x`, `y' = x^2 - a x - y`
    Normal2d,
    /// `x' = y^2 - a y - x`, `y' = x^2 - b x - y`
    Normal2dAsym,
    /// `x' = alpha1 / (1 + y^m) - x`, `y' = alpha2 / (1 + x^n) - y`
    ToggleGeneral,
    /// `x' = 2 / (1 + y^m) - x`, `y' = 2 / (1 + x^m) - y`
    ToggleSym,
    /// Quadratic surrogate of the symmetric toggle about (1, 1).
    ToggleTaylor,
}

impl ModelId {
    pub const ALL: [ModelId; 6] = [
        ModelId::Pitchfork1d,
        ModelId::Normal2d,
        ModelId::Normal2dAsym,
        ModelId::ToggleGeneral,
        ModelId::ToggleSym,
        ModelId::ToggleTaylor,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Pitchfork1d => "pitchfork1d",
            ModelId::Normal2d => "normal2d",
            ModelId::Normal2dAsym => "normal2d-asym",
            ModelId::ToggleGeneral => "toggle-general",
            ModelId::ToggleSym => "toggle-sym",
            ModelId::ToggleTaylor => "toggle-taylor",
        }
    }

    pub fn dimension(self) -> usize {
        match self {
            ModelId::Pitchfork1d => 1,
            _ => 2,
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            ModelId::Pitchfork1d => &["mu"],
            ModelId::Normal2d => &["a"],
            ModelId::Normal2dAsym => &["a", "b"],
            ModelId::ToggleGeneral => &["alpha1", "alpha2", "m", "n"],
            ModelId::ToggleSym | ModelId::ToggleTaylor => &["m"],
        }
    }

    /// The parameter a bifurcation sweep varies by default.
    pub fn primary_parameter(self) -> &'static str {
        match self {
            ModelId::Pitchfork1d => "mu",
            ModelId::Normal2d | ModelId::Normal2dAsym => "a",
            ModelId::ToggleGeneral | ModelId::ToggleSym | ModelId::ToggleTaylor => "m",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Field {
    Pitchfork1d {
        mu: f64,
    },
    Normal2d {
        a: f64,
    },
    Normal2dAsym {
        a: f64,
        b: f64,
    },
    Toggle {
        alpha1: f64,
        alpha2: f64,
        m: f64,
        n: f64,
        general: bool,
    },
    ToggleTaylor {
        m: f64,
    },
}

/// A registry field bound to concrete parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    id: ModelId,
    params: Params,
    field: Field,
}

/// Builds a model instance, validating that every required parameter is
/// present, finite and in range. Unrecognized parameter names are rejected.
pub fn make_model(id: ModelId, params: &Params) -> Result<Model> {
    let known = id.parameter_names();
    if let Some((name, _)) = params.iter().find(|(k, _)| !known.contains(k)) {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("not a parameter of {id}"),
        });
    }
    let mut values = Vec::with_capacity(known.len());
    for &name in known {
        let v = params.get(name).ok_or(Error::MissingParameter {
            model: id.as_str(),
            name,
        })?;
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                name: name.into(),
                reason: format!("{name} must be finite"),
            });
        }
        values.push(v);
    }
    let nonneg = |name: &str, v: f64| {
        if v < 0.0 {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: format!("{name} must be >= 0"),
            })
        } else {
            Ok(())
        }
    };
    let positive = |name: &str, v: f64| {
        if v <= 0.0 {
            Err(Error::InvalidParameter {
                name: name.into(),
                reason: format!("{name} must be > 0"),
            })
        } else {
            Ok(())
        }
    };
    let field = match id {
        ModelId::Pitchfork1d => Field::Pitchfork1d { mu: values[0] },
        ModelId::Normal2d => Field::Normal2d { a: values[0] },
        ModelId::Normal2dAsym => Field::Normal2dAsym {
            a: values[0],
            b: values[1],
        },
        ModelId::ToggleGeneral => {
            positive("alpha1", values[0])?;
            positive("alpha2", values[1])?;
            nonneg("m", values[2])?;
            nonneg("n", values[3])?;
            Field::Toggle {
                alpha1: values[0],
                alpha2: values[1],
                m: values[2],
                n: values[3],
                general: true,
            }
        }
        ModelId::ToggleSym => {
            nonneg("m", values[0])?;
            Field::Toggle {
                alpha1: 2.0,
                alpha2: 2.0,
                m: values[0],
                n: values[0],
                general: false,
            }
        }
        ModelId::ToggleTaylor => {
            nonneg("m", values[0])?;
            Field::ToggleTaylor { m: values[0] }
        }
    };
    Ok(Model {
        id,
        params: known.iter().zip(&values).map(|(k, v)| (*k, *v)).collect(),
        field,
    })
}

impl Model {
    /// Panics if `mu` is not finite.
    pub fn pitchfork1d(mu: f64) -> Model {
        make_model(ModelId::Pitchfork1d, &Params::new().with("mu", mu)).expect("finite mu")
    }

    /// Panics if `a` is not finite.
    pub fn normal2d(a: f64) -> Model {
        make_model(ModelId::Normal2d, &Params::new().with("a", a)).expect("finite a")
    }

    /// Panics if `a` or `b` is not finite.
    pub fn normal2d_asym(a: f64, b: f64) -> Model {
        make_model(
            ModelId::Normal2dAsym,
            &Params::new().with("a", a).with("b", b),
        )
        .expect("finite a, b")
    }

    /// Panics unless `m` is finite and non-negative.
    pub fn toggle_sym(m: f64) -> Model {
        make_model(ModelId::ToggleSym, &Params::new().with("m", m)).expect("valid m")
    }

    /// Panics unless `m` is finite and non-negative.
    pub fn toggle_taylor(m: f64) -> Model {
        make_model(ModelId::ToggleTaylor, &Params::new().with("m", m)).expect("valid m")
    }

    pub fn toggle_general(alpha1: f64, alpha2: f64, m: f64, n: f64) -> Result<Model> {
        make_model(
            ModelId::ToggleGeneral,
            &Params::new()
                .with("alpha1", alpha1)
                .with("alpha2", alpha2)
                .with("m", m)
                .with("n", n),
        )
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name)
    }

    pub fn dimension(&self) -> usize {
        self.id.dimension()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: x.len(),
            });
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    /// The velocity `F(x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Point> {
        self.check_input(x)?;
        let v = match self.field {
            Field::Pitchfork1d { mu } => vec![mu * x[0] - x[0] * x[0] * x[0]],
            Field::Normal2d { a } => normal_form(x[0], x[1], a, a),
            Field::Normal2dAsym { a, b } => normal_form(x[0], x[1], a, b),
            Field::Toggle {
                alpha1,
                alpha2,
                m,
                n,
                ..
            } => vec![
                alpha1 / (1.0 + self.hill_power(x[1], m)?) - x[0],
                alpha2 / (1.0 + self.hill_power(x[0], n)?) - x[1],
            ],
            Field::ToggleTaylor { m } => vec![
                taylor_component(x[1], m) - x[0],
                taylor_component(x[0], m) - x[1],
            ],
        };
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::OutsideDomain {
                model: self.id.as_str(),
                reason: "velocity overflowed".into(),
            });
        }
        Ok(Point(v))
    }

    /// Analytic Jacobian `DF(x)`.
    pub fn jacobian(&self, x: &[f64]) -> Result<Matrix> {
        self.check_input(x)?;
        let j = match self.field {
            Field::Pitchfork1d { mu } => Matrix::new(1, vec![mu - 3.0 * x[0] * x[0]]),
            Field::Normal2d { a } => {
                Matrix::from_rows([[-1.0, 2.0 * x[1] - a], [2.0 * x[0] - a, -1.0]])
            }
            Field::Normal2dAsym { a, b } => {
                Matrix::from_rows([[-1.0, 2.0 * x[1] - a], [2.0 * x[0] - b, -1.0]])
            }
            Field::Toggle {
                alpha1,
                alpha2,
                m,
                n,
                ..
            } => Matrix::from_rows([
                [-1.0, self.repression_slope(alpha1, x[1], m)?],
                [self.repression_slope(alpha2, x[0], n)?, -1.0],
            ]),
            Field::ToggleTaylor { m } => {
                Matrix::from_rows([[-1.0, m * x[1] - 1.5 * m], [m * x[0] - 1.5 * m, -1.0]])
            }
        };
        if !j.is_finite() {
            return Err(Error::OutsideDomain {
                model: self.id.as_str(),
                reason: "Jacobian is unbounded at this point".into(),
            });
        }
        Ok(j)
    }

    /// Central-difference Jacobian with a fixed step on every axis.
    pub fn jacobian_fd(&self, x: &[f64], step: f64) -> Result<Matrix> {
        if !(step > 0.0) {
            return Err(Error::InvalidArgument(
                "finite-difference step must be > 0".into(),
            ));
        }
        let steps = vec![step; x.len()];
        self.central_difference(x, &steps)
    }

    /// Central differences with step `1e-6 * max(1, |x_i|)` per axis.
    pub fn jacobian_fd_default(&self, x: &[f64]) -> Result<Matrix> {
        let steps: Vec<f64> = x
            .iter()
            .map(|c| DEFAULT_FD_STEP * c.abs().max(1.0))
            .collect();
        self.central_difference(x, &steps)
    }

    fn central_difference(&self, x: &[f64], steps: &[f64]) -> Result<Matrix> {
        self.check_input(x)?;
        let n = x.len();
        let mut jac = Matrix::zeros(n);
        let mut probe = x.to_vec();
        for (col, &h) in steps.iter().enumerate() {
            probe[col] = x[col] + h;
            let fp = self.evaluate(&probe)?;
            probe[col] = x[col] - h;
            let fm = self.evaluate(&probe)?;
            probe[col] = x[col];
            for row in 0..n {
                jac.set(row, col, (fp[row] - fm[row]) / (2.0 * h));
            }
        }
        Ok(jac)
    }

    /// `v^e` restricted to the toggle domain `v > -1`; negative bases need an
    /// integer exponent.
    fn hill_power(&self, v: f64, e: f64) -> Result<f64> {
        if v <= -1.0 {
            return Err(self.domain_error(format!(
                "coordinate {v} is at or below -1, the pole of the repression term"
            )));
        }
        if e == 0.0 {
            return Ok(1.0);
        }
        if e.fract() == 0.0 && e.abs() < i32::MAX as f64 {
            return Ok(v.powi(e as i32));
        }
        if v < 0.0 {
            return Err(self.domain_error(format!(
                "negative coordinate {v} with non-integer exponent {e}"
            )));
        }
        Ok(v.powf(e))
    }

    /// d/dv of `alpha / (1 + v^e)`.
    fn repression_slope(&self, alpha: f64, v: f64, e: f64) -> Result<f64> {
        let p = self.hill_power(v, e)?;
        if e == 0.0 {
            return Ok(0.0);
        }
        // unbounded at v = 0 when 0 < e < 1; the caller rejects the non-finite entry
        let dp = e * self.hill_power(v, e - 1.0)?;
        let denom = 1.0 + p;
        Ok(-alpha * dp / (denom * denom))
    }

    fn domain_error(&self, reason: String) -> Error {
        Error::OutsideDomain {
            model: self.id.as_str(),
            reason,
        }
    }
}

fn normal_form(x: f64, y: f64, a: f64, b: f64) -> Vec<f64> {
    vec![y * y - a * y - x, x * x - b * x - y]
}

fn taylor_component(v: f64, m: f64) -> f64 {
    0.5 * m * v * v - 1.5 * m * v + m + 1.0
}

/// A registry model with one parameter left free.
///
/// Other parameters are either fixed (`base`) or tied to the free one by a
/// constant offset, which is how the asymmetric normal form is swept with
/// `b = a + delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    id: ModelId,
    base: Params,
    param: String,
    ties: Vec<(String, f64)>,
}

impl Family {
    pub fn new(id: ModelId, base: Params, param: impl Into<String>) -> Self {
        Family {
            id,
            base,
            param: param.into(),
            ties: Vec::new(),
        }
    }

    /// Single-parameter family of a model whose only parameter is swept.
    pub fn of(id: ModelId) -> Self {
        Family::new(id, Params::new(), id.primary_parameter())
    }

    /// Sets `name = value_of_free_parameter + offset` on every instance.
    pub fn tie(mut self, name: impl Into<String>, offset: f64) -> Self {
        self.ties.push((name.into(), offset));
        self
    }

    pub fn id(&self) -> ModelId {
        self.id
    }

    pub fn param_name(&self) -> &str {
        &self.param
    }

    pub fn base(&self) -> &Params {
        &self.base
    }

    pub fn at(&self, value: f64) -> Result<Model> {
        let mut params = self.base.clone();
        params.set(self.param.clone(), value);
        for (name, offset) in &self.ties {
            params.set(name.clone(), value + offset);
        }
        make_model(self.id, &params)
    }
}
