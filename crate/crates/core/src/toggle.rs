//! The symmetric toggle switch near its critical point `(1, 1)` and the
//! quadratic surrogate that maps onto the planar normal form.

use crate::equilibria::{find_equilibria_with, SearchOptions};
use crate::error::{Error, Result};
use crate::field::{Bounds, Model, Point};

/// Derivatives of the symmetric toggle `(f, g)` at `(1, 1)`, where
/// `f = 2 / (1 + y^m) - x` and `g = 2 / (1 + x^m) - y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorCoefficients {
    pub m: f64,
    pub f_x: f64,
    pub f_y: f64,
    pub g_x: f64,
    pub g_y: f64,
    pub f_xx: f64,
    pub f_xy: f64,
    pub f_yy: f64,
    pub g_xx: f64,
    pub g_xy: f64,
    pub g_yy: f64,
}

pub fn taylor_coefficients(m: f64) -> TaylorCoefficients {
    TaylorCoefficients {
        m,
        f_x: -1.0,
        f_y: -0.5 * m,
        g_x: -0.5 * m,
        g_y: -1.0,
        f_xx: 0.0,
        f_xy: 0.0,
        f_yy: 0.5 * m,
        g_xx: 0.5 * m,
        g_xy: 0.0,
        g_yy: 0.0,
    }
}

/// The quadratic surrogate `x' = m/2 y^2 - 3m/2 y + m + 1 - x` (and its mirror).
pub fn taylor_field(m: f64) -> Model {
    Model::toggle_taylor(m)
}

/// Largest componentwise gap between the surrogate at `(u + 1, v + 1)` and
/// the normal form with parameter `a` at `(u, v)`, over a `density`-per-axis
/// grid of `bounds` (in `(u, v)` coordinates).
pub fn correspondence_residual(m: f64, a: f64, bounds: &Bounds, density: usize) -> Result<f64> {
    if bounds.dim() != 2 {
        return Err(Error::UnsupportedDimension(bounds.dim()));
    }
    let surrogate = taylor_field(m);
    let normal = Model::normal2d(a);
    let mut worst: f64 = 0.0;
    for p in bounds.grid(density) {
        let t = surrogate.evaluate(&[p[0] + 1.0, p[1] + 1.0])?;
        let n = normal.evaluate(&p)?;
        worst = worst.max(t.distance(&n));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniqueEquilibrium {
    pub count: usize,
    pub equilibria: Vec<Point>,
    /// Exactly one equilibrium and it lies within `1e-6` of `(1, 1)`.
    pub holds: bool,
}

/// Enumerates the symmetric toggle's equilibria in `bounds` for a given `m`.
pub fn unique_equilibrium_check(m: f64, bounds: &Bounds) -> Result<UniqueEquilibrium> {
    let model = Model::toggle_sym(m);
    let opts = SearchOptions {
        nonnegative: true,
        ..SearchOptions::default()
    };
    let equilibria: Vec<Point> = find_equilibria_with(&model, bounds, &opts)?
        .into_iter()
        .map(|e| e.location)
        .collect();
    let holds = equilibria.len() == 1 && equilibria[0].distance(&Point::from([1.0, 1.0])) <= 1e-6;
    Ok(UniqueEquilibrium {
        count: equilibria.len(),
        equilibria,
        holds,
    })
}
