//! Equilibrium location: closed form for the quadratic normal form, grid-seeded
//! Newton iteration for every registry model.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Bounds, Model, Point};

/// Max-norm radius under which two converged roots are the same equilibrium.
pub const DEDUP_RADIUS: f64 = 1e-6;
/// Newton aborts when `|det J|` falls below this at an iterate.
pub const SINGULAR_DET: f64 = 1e-14;
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_GRID: usize = 25;
/// Roots closer than this to a face of the search box are not "inside" it.
pub const BOUNDARY_MARGIN: f64 = 1e-9;
const POLISH_GROWTH: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    ClosedForm,
    Newton,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub location: Point,
    /// Max-abs of the field at `location`.
    pub residual: f64,
    pub source: Source,
    pub iterations: usize,
}

/// Real intersections of the two isoclines of the symmetric normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    /// In order: the origin, the two flanking points (when real), `(a+1, a+1)`.
    /// Coincident roots appear once.
    pub points: Vec<EquilibriumPoint>,
    /// Set when two or more of the four intersections coincide (e.g. `a = 1`).
    pub degenerate: bool,
}

/// All real equilibria of `x' = y^2 - a y - x`, `y' = x^2 - a x - y`.
///
/// The flanking pair is `((a-1)/2 +- s, (a-1)/2 -+ s)` with
/// `s = sqrt((a-1)(a+3)) / 2`; it is real only when `(a-1)(a+3) >= 0`.
pub fn closed_form_equilibria(a: f64) -> ClosedForm {
    let model = Model::normal2d(a);
    let disc = (a - 1.0) * (a + 3.0);
    let mut raw: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    if disc >= 0.0 {
        let mid = 0.5 * (a - 1.0);
        let half = 0.5 * disc.sqrt();
        raw.push([mid + half, mid - half]);
        raw.push([mid - half, mid + half]);
    }
    raw.push([a + 1.0, a + 1.0]);

    let mut points: Vec<EquilibriumPoint> = Vec::with_capacity(4);
    let mut degenerate = false;
    for p in raw {
        if points
            .iter()
            .any(|q| q.location.distance(&Point::from(p)) == 0.0)
        {
            degenerate = true;
            continue;
        }
        let residual = model
            .evaluate(&p)
            .map(|v| v.max_norm())
            .unwrap_or(f64::INFINITY);
        points.push(EquilibriumPoint {
            location: p.into(),
            residual,
            source: Source::ClosedForm,
            iterations: 0,
        });
    }
    ClosedForm { points, degenerate }
}

/// Newton's method on `F(x) = 0` from `seed`.
///
/// The step is skipped once the residual is within `tol`, so an exact zero
/// with a singular Jacobian still succeeds. After reaching `tol` the iteration
/// keeps polishing while the residual does not grow.
pub fn newton_refine(
    model: &Model,
    seed: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<EquilibriumPoint> {
    newton_in_region(model, seed, tol, max_iter, None)
}

/// [`newton_refine`] that gives up as soon as an iterate leaves `region`.
pub fn newton_in_region(
    model: &Model,
    seed: &[f64],
    tol: f64,
    max_iter: usize,
    region: Option<&Bounds>,
) -> Result<EquilibriumPoint> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(
            "Newton tolerance must be > 0".into(),
        ));
    }
    let outside = |x: &[f64]| region.is_some_and(|r| !r.contains(x));
    if outside(seed) {
        return Err(Error::LeftSearchRegion);
    }
    let mut x = seed.to_vec();
    let mut f = model.evaluate(&x)?;
    let mut residual = f.max_norm();
    let mut iterations = 0;

    while residual > tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        let jac = model.jacobian(&x)?;
        let det = jac.det();
        if det.abs() < SINGULAR_DET {
            return Err(Error::SingularJacobian { det });
        }
        let dx = jac.solve(&f).ok_or(Error::SingularJacobian { det })?;
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi -= di;
        }
        iterations += 1;
        if x.iter().any(|c| !c.is_finite()) || outside(&x) {
            return Err(Error::LeftSearchRegion);
        }
        f = model.evaluate(&x)?;
        residual = f.max_norm();
    }

    // iterates near a degenerate root converge linearly and the residual can
    // bump up for a step, so ride through bounded growth and keep the last
    // iterate that was within tol
    let mut accepted = (x.clone(), residual, iterations);
    while iterations < max_iter && residual > 0.0 {
        let Ok(jac) = model.jacobian(&x) else { break };
        if jac.det().abs() < SINGULAR_DET {
            break;
        }
        let Some(dx) = jac.solve(&f) else { break };
        let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi - di).collect();
        if candidate.iter().any(|c| !c.is_finite()) || outside(&candidate) {
            break;
        }
        let Ok(fc) = model.evaluate(&candidate) else {
            break;
        };
        let rc = fc.max_norm();
        if rc > POLISH_GROWTH * tol.max(residual) {
            break;
        }
        let step = dx.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let scale = 1.0 + candidate.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        x = candidate;
        f = fc;
        residual = rc;
        iterations += 1;
        if residual <= tol {
            accepted = (x.clone(), residual, iterations);
        }
        if step <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    let (x, residual, iterations) = accepted;

    Ok(EquilibriumPoint {
        location: x.into(),
        residual,
        source: Source::Newton,
        iterations,
    })
}

/// Knobs for [`find_equilibria_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Seeds per axis, faces included.
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub dedup_radius: f64,
    /// Seeds whose iterates leave the search box scaled by this factor are dropped.
    pub escape_factor: f64,
    /// Keep only equilibria with all coordinates >= 0.
    pub nonnegative: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: DEFAULT_GRID,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            dedup_radius: DEDUP_RADIUS,
            escape_factor: 1.5,
            nonnegative: false,
        }
    }
}

impl SearchOptions {
    pub fn new(grid: usize, tol: f64) -> Self {
        SearchOptions {
            grid,
            tol,
            ..Default::default()
        }
    }
}

/// Every equilibrium Newton reaches from a `grid`-per-axis lattice of seeds
/// over `bounds`, deduplicated and sorted lexicographically.
pub fn find_equilibria(
    model: &Model,
    bounds: &Bounds,
    grid: usize,
    tol: f64,
) -> Result<Vec<EquilibriumPoint>> {
    find_equilibria_with(model, bounds, &SearchOptions::new(grid, tol))
}

pub fn find_equilibria_with(
    model: &Model,
    bounds: &Bounds,
    opts: &SearchOptions,
) -> Result<Vec<EquilibriumPoint>> {
    if bounds.dim() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            found: bounds.dim(),
        });
    }
    if opts.grid < 2 {
        return Err(Error::InvalidArgument(
            "grid must have at least 2 nodes per axis".into(),
        ));
    }
    let escape = bounds.inflated(opts.escape_factor);
    let seeds = bounds.grid(opts.grid);
    let converged: Vec<EquilibriumPoint> = seeds
        .par_iter()
        .filter_map(|seed| {
            newton_in_region(model, seed, opts.tol, opts.max_iter, Some(&escape)).ok()
        })
        .collect();

    let candidates = converged.into_iter().filter(|e| {
        bounds.contains_interior(&e.location, BOUNDARY_MARGIN)
            && (!opts.nonnegative || e.location.iter().all(|c| *c >= 0.0))
    });
    let kept = dedup_sorted(candidates, opts.dedup_radius);
    Ok(merge_flat_clusters(model, kept, opts.tol))
}

/// Roots closer than this may be merged by [`merge_flat_clusters`].
pub const CLUSTER_RADIUS: f64 = 1e-3;

/// Near a degenerate equilibrium the residual reaches the rounding floor
/// while the iterates are still ~1e-5 apart, so distance alone cannot merge
/// them. Two roots within [`CLUSTER_RADIUS`] are the same equilibrium when
/// the field stays within `tol` along the segment joining them; each cluster
/// keeps its lowest-residual member, ties going to the one nearest the
/// cluster mean.
fn merge_flat_clusters(
    model: &Model,
    points: Vec<EquilibriumPoint>,
    tol: f64,
) -> Vec<EquilibriumPoint> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let flat_between = |p: &Point, q: &Point| {
        [0.25, 0.5, 0.75].iter().all(|t| {
            let mid: Vec<f64> = p
                .iter()
                .zip(q.iter())
                .map(|(a, b)| a + t * (b - a))
                .collect();
            model.evaluate(&mid).is_ok_and(|f| f.max_norm() <= tol)
        })
    };
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&points[i].location, &points[j].location);
            if a.distance(b) <= CLUSTER_RADIUS && flat_between(a, b) {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[rj] = ri;
            }
        }
    }
    let mut clusters: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = root(&mut parent, i);
        clusters.entry(r).or_default().push(i);
    }
    let mut merged: Vec<EquilibriumPoint> = clusters
        .into_values()
        .map(|members| {
            let dim = points[members[0]].location.dim();
            let mean: Point = (0..dim)
                .map(|k| {
                    members.iter().map(|&i| points[i].location[k]).sum::<f64>()
                        / members.len() as f64
                })
                .collect::<Vec<_>>()
                .into();
            let best = members
                .iter()
                .copied()
                .min_by(|&i, &j| {
                    points[i].residual.total_cmp(&points[j].residual).then(
                        points[i]
                            .location
                            .distance(&mean)
                            .total_cmp(&points[j].location.distance(&mean)),
                    )
                })
                .expect("clusters are non-empty");
            points[best].clone()
        })
        .collect();
    merged.sort_by(|a, b| lexicographic(&a.location, &b.location));
    merged
}

/// Merges points within `radius` (max-norm), keeping the smaller residual,
/// then sorts lexicographically by coordinates.
pub fn dedup_sorted(
    points: impl IntoIterator<Item = EquilibriumPoint>,
    radius: f64,
) -> Vec<EquilibriumPoint> {
    let mut kept: Vec<EquilibriumPoint> = Vec::new();
    for p in points {
        match kept
            .iter_mut()
            .find(|k| k.location.distance(&p.location) <= radius)
        {
            Some(k) => {
                if p.residual < k.residual {
                    *k = p;
                }
            }
            None => kept.push(p),
        }
    }
    kept.sort_by(|a, b| lexicographic(&a.location, &b.location));
    kept
}

fn lexicographic(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}
