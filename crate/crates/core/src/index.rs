//! Poincaré–Hopf accounting on boxes in the plane.
//!
//! Three independent pieces: a sampled check that the field points strictly
//! into the box on its boundary, the sum of `sign(det J)` over the enclosed
//! equilibria, and the Brouwer degree of the field on the box computed as a
//! winding number along the boundary. When the boundary check passes the
//! index sum must be `(-1)^2 = +1`, and the degree must equal the index sum
//! whenever both are defined.

use std::f64::consts::PI;
use std::fmt;

use crate::equilibria::{find_equilibria_with, EquilibriumPoint, SearchOptions};
use crate::error::{Error, Result};
use crate::field::{Bounds, Model, Point};
use crate::stability::sign;

/// `|det J|` at or below this makes the index sum undefined.
pub const DEGENERATE_DET: f64 = 1e-12;
/// The winding number is undefined if the field is this small on the boundary.
pub const MIN_BOUNDARY_SPEED: f64 = 1e-9;
pub const MAX_SEGMENTS: usize = 1 << 16;
pub const DEFAULT_EDGE_SAMPLES: usize = 64;
/// Largest allowed distance of `total rotation / 2 pi` from an integer.
const WINDING_RESIDUAL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct InwardCheck {
    pub pass: bool,
    /// Boundary samples where some inward-normal component is <= 0.
    pub violations: Vec<Point>,
}

/// Sum of `sign(det J)` over the equilibria in a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSum {
    Defined(i32),
    /// Some enclosed equilibrium has `|det J| <= DEGENERATE_DET`.
    Degenerate,
}

impl IndexSum {
    pub fn value(self) -> Option<i32> {
        match self {
            IndexSum::Defined(v) => Some(v),
            IndexSum::Degenerate => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UndefinedDegree {
    /// `|F|` fell below [`MIN_BOUNDARY_SPEED`] at a boundary sample.
    ZeroOnBoundary(Point),
    RefinementCap,
    /// The accumulated rotation was not close to a multiple of `2 pi`.
    Residual(f64),
    /// The field could not be evaluated on the boundary.
    Domain(Point),
}

impl fmt::Display for UndefinedDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UndefinedDegree::ZeroOnBoundary(p) => {
                write!(f, "field vanishes on the boundary near {:?}", p.coords())
            }
            UndefinedDegree::RefinementCap => {
                write!(f, "boundary refinement exceeded {MAX_SEGMENTS} segments")
            }
            UndefinedDegree::Residual(r) => write!(f, "winding residual {r} too large"),
            UndefinedDegree::Domain(p) => {
                write!(f, "field undefined on the boundary at {:?}", p.coords())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Degree {
    Defined(i32),
    Undefined(UndefinedDegree),
}

impl Degree {
    pub fn value(&self) -> Option<i32> {
        match self {
            Degree::Defined(v) => Some(*v),
            Degree::Undefined(_) => None,
        }
    }
}

fn require_planar(model: &Model, bounds: &Bounds) -> Result<()> {
    for found in [model.dimension(), bounds.dim()] {
        if found != 2 {
            return Err(Error::DimensionMismatch { expected: 2, found });
        }
    }
    Ok(())
}

/// Samples every edge at `samples_per_edge` evenly spaced points (corners
/// included) and requires a strictly positive inward-normal component on
/// each face through the sample. Corners must satisfy both faces.
pub fn boundary_inward_check(
    model: &Model,
    bounds: &Bounds,
    samples_per_edge: usize,
) -> Result<InwardCheck> {
    require_planar(model, bounds)?;
    if samples_per_edge < 16 {
        return Err(Error::InvalidArgument(
            "need at least 16 samples per edge".into(),
        ));
    }
    let (xlo, ylo) = (bounds.lower()[0], bounds.lower()[1]);
    let (xhi, yhi) = (bounds.upper()[0], bounds.upper()[1]);
    let ts = crate::field::linspace(0.0, 1.0, samples_per_edge);

    let mut samples: Vec<[f64; 2]> = Vec::with_capacity(4 * samples_per_edge);
    for &t in &ts[..ts.len() - 1] {
        samples.push([xlo + t * (xhi - xlo), ylo]);
    }
    for &t in &ts[..ts.len() - 1] {
        samples.push([xhi, ylo + t * (yhi - ylo)]);
    }
    for &t in &ts[..ts.len() - 1] {
        samples.push([xhi - t * (xhi - xlo), yhi]);
    }
    for &t in &ts[..ts.len() - 1] {
        samples.push([xlo, yhi - t * (yhi - ylo)]);
    }

    let mut violations = Vec::new();
    for p in samples {
        let inward = match model.evaluate(&p) {
            Ok(v) => {
                (p[0] != xlo || v[0] > 0.0)
                    && (p[0] != xhi || v[0] < 0.0)
                    && (p[1] != ylo || v[1] > 0.0)
                    && (p[1] != yhi || v[1] < 0.0)
            }
            Err(_) => false,
        };
        if !inward {
            violations.push(Point::from(p));
        }
    }
    Ok(InwardCheck {
        pass: violations.is_empty(),
        violations,
    })
}

/// Index sum over the equilibria found in `bounds` with default search settings.
pub fn ph_index_sum(model: &Model, bounds: &Bounds) -> Result<IndexSum> {
    Ok(ph_index_sum_with(model, bounds, &SearchOptions::default())?.0)
}

/// Index sum together with the equilibria it was computed from.
pub fn ph_index_sum_with(
    model: &Model,
    bounds: &Bounds,
    search: &SearchOptions,
) -> Result<(IndexSum, Vec<EquilibriumPoint>)> {
    require_planar(model, bounds)?;
    let equilibria = find_equilibria_with(model, bounds, search)?;
    let mut total = 0;
    for e in &equilibria {
        let det = match model.jacobian(&e.location) {
            Ok(j) => j.det(),
            Err(_) => return Ok((IndexSum::Degenerate, equilibria)),
        };
        if det.abs() <= DEGENERATE_DET {
            return Ok((IndexSum::Degenerate, equilibria));
        }
        total += sign(det) as i32;
    }
    Ok((IndexSum::Defined(total), equilibria))
}

/// Point on the counter-clockwise boundary at arc parameter `s` in `[0, 4]`,
/// one unit per edge starting at the lower-left corner.
fn boundary_point(bounds: &Bounds, s: f64) -> [f64; 2] {
    let (xlo, ylo) = (bounds.lower()[0], bounds.lower()[1]);
    let (xhi, yhi) = (bounds.upper()[0], bounds.upper()[1]);
    let edge = (s.floor() as usize).min(3);
    let t = s - edge as f64;
    match edge {
        0 => [xlo + t * (xhi - xlo), ylo],
        1 => [xhi, ylo + t * (yhi - ylo)],
        2 => [xhi - t * (xhi - xlo), yhi],
        _ => [xlo, yhi - t * (yhi - ylo)],
    }
}

/// Brouwer degree of the field on `bounds`: the signed number of turns the
/// field direction makes along the counter-clockwise boundary.
///
/// Any boundary segment over which the direction turns by more than a
/// quarter turn is bisected, so the per-segment angle is never aliased by a
/// multiple of `2 pi`.
pub fn winding_degree(
    model: &Model,
    bounds: &Bounds,
    initial_samples_per_edge: usize,
) -> Result<Degree> {
    require_planar(model, bounds)?;
    let per_edge = initial_samples_per_edge.max(1);
    let sample = |s: f64| -> std::result::Result<[f64; 2], UndefinedDegree> {
        let p = boundary_point(bounds, s);
        let v = model
            .evaluate(&p)
            .map_err(|_| UndefinedDegree::Domain(p.into()))?;
        if v[0].hypot(v[1]) < MIN_BOUNDARY_SPEED {
            return Err(UndefinedDegree::ZeroOnBoundary(p.into()));
        }
        Ok([v[0], v[1]])
    };
    let turn =
        |u: [f64; 2], v: [f64; 2]| (u[0] * v[1] - u[1] * v[0]).atan2(u[0] * v[0] + u[1] * v[1]);

    let result = (|| {
        let n = 4 * per_edge;
        let params: Vec<f64> = (0..=n).map(|k| 4.0 * k as f64 / n as f64).collect();
        let values = params
            .iter()
            .map(|&s| sample(s))
            .collect::<std::result::Result<Vec<_>, _>>()?;

        let mut total = 0.0;
        let mut segments = 0usize;
        let mut stack = Vec::new();
        for k in 0..n {
            stack.push((params[k], values[k], params[k + 1], values[k + 1]));
            while let Some((s0, v0, s1, v1)) = stack.pop() {
                let d = turn(v0, v1);
                if d.abs() <= 0.5 * PI {
                    total += d;
                    segments += 1;
                    continue;
                }
                if segments + stack.len() + 2 > MAX_SEGMENTS {
                    return Err(UndefinedDegree::RefinementCap);
                }
                let sm = 0.5 * (s0 + s1);
                let vm = sample(sm)?;
                stack.push((sm, vm, s1, v1));
                stack.push((s0, v0, sm, vm));
            }
        }
        let turns = total / (2.0 * PI);
        let rounded = turns.round();
        let residual = (turns - rounded).abs();
        if residual >= WINDING_RESIDUAL {
            return Err(UndefinedDegree::Residual(residual));
        }
        Ok(rounded as i32)
    })();

    Ok(match result {
        Ok(d) => Degree::Defined(d),
        Err(reason) => Degree::Undefined(reason),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexOptions {
    pub edge_samples: usize,
    pub winding_samples: usize,
    pub search: SearchOptions,
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions {
            edge_samples: DEFAULT_EDGE_SAMPLES,
            winding_samples: DEFAULT_EDGE_SAMPLES,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexReport {
    pub bounds: Bounds,
    pub inward: InwardCheck,
    pub equilibria: Vec<EquilibriumPoint>,
    pub ph_sum: IndexSum,
    pub winding: Degree,
    /// Both defined and equal.
    pub agree: bool,
    /// `Some(ph_sum == +1)` when the inward check passed, `None` otherwise.
    pub theorem_holds: Option<bool>,
}

impl IndexReport {
    /// Whether the report is fully conclusive: index sum and degree are both
    /// defined, they agree, and the inward case yields `+1`.
    pub fn is_consistent(&self) -> bool {
        self.agree && self.theorem_holds != Some(false)
    }
}

pub fn verify_ph(model: &Model, bounds: &Bounds) -> Result<IndexReport> {
    verify_ph_with(model, bounds, &IndexOptions::default())
}

pub fn verify_ph_with(model: &Model, bounds: &Bounds, opts: &IndexOptions) -> Result<IndexReport> {
    let inward = boundary_inward_check(model, bounds, opts.edge_samples)?;
    let (ph_sum, equilibria) = ph_index_sum_with(model, bounds, &opts.search)?;
    let winding = winding_degree(model, bounds, opts.winding_samples)?;
    let agree = matches!((ph_sum.value(), winding.value()), (Some(p), Some(w)) if p == w);
    let theorem_holds = inward.pass.then_some(ph_sum == IndexSum::Defined(1));
    Ok(IndexReport {
        bounds: bounds.clone(),
        inward,
        equilibria,
        ph_sum,
        winding,
        agree,
        theorem_holds,
    })
}
