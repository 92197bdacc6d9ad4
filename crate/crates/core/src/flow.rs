//! Fixed-step RK4 trajectories, convergence tests and the basin uniformity probe.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Family, Model, Point};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_T_MAX: f64 = 200.0;
/// Integration stops once any coordinate exceeds this in magnitude.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Point>,
    /// The run was cut short because the state blew up.
    pub divergent: bool,
}

impl Trajectory {
    pub fn final_state(&self) -> &Point {
        self.states
            .last()
            .expect("trajectory has the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn rk4_step(model: &Model, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let shifted =
        |k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(xi, ki)| xi + s * ki).collect() };
    let k1 = model.evaluate(x)?;
    let k2 = model.evaluate(&shifted(&k1, 0.5 * h))?;
    let k3 = model.evaluate(&shifted(&k2, 0.5 * h))?;
    let k4 = model.evaluate(&shifted(&k3, h))?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Classical RK4 from `t = 0` to `t_end` with step `dt`; the last step is
/// shortened to land on `t_end`.
pub fn integrate(model: &Model, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    if !(t_end > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidArgument("t_end and dt must be > 0".into()));
    }
    if x0.len() != model.dimension() {
        return Err(Error::DimensionMismatch {
            expected: model.dimension(),
            found: x0.len(),
        });
    }
    // tolerate t_end/dt landing a hair above an integer
    let steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(Point::from(x0.to_vec()));
    let mut x = x0.to_vec();
    let mut t = 0.0;
    for k in 1..=steps {
        let t_next = if k == steps { t_end } else { k as f64 * dt };
        x = rk4_step(model, &x, t_next - t)?;
        t = t_next;
        if x.iter()
            .any(|c| !c.is_finite() || c.abs() > DIVERGENCE_LIMIT)
        {
            return Ok(Trajectory {
                times,
                states,
                divergent: true,
            });
        }
        times.push(t);
        states.push(Point::from(x.clone()));
    }
    Ok(Trajectory {
        times,
        states,
        divergent: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    /// Earliest time after which the trajectory stays within `tol`.
    pub first_hit: Option<f64>,
    pub divergent: bool,
}

/// Whether the trajectory from `x0` settles within `tol` (Euclidean) of
/// `target`: every sample in the trailing 10% of `[0, t_max]` must be close.
pub fn converges_to(
    model: &Model,
    x0: &[f64],
    target: &[f64],
    tol: f64,
    t_max: f64,
) -> Result<Convergence> {
    converges_to_with_dt(model, x0, target, tol, t_max, DEFAULT_DT)
}

pub fn converges_to_with_dt(
    model: &Model,
    x0: &[f64],
    target: &[f64],
    tol: f64,
    t_max: f64,
    dt: f64,
) -> Result<Convergence> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    let traj = integrate(model, x0, t_max, dt)?;
    if traj.divergent {
        return Ok(Convergence {
            converged: false,
            first_hit: None,
            divergent: true,
        });
    }
    let near = |p: &Point| {
        p.iter()
            .zip(target)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            <= tol
    };
    // index of the first sample of the final run of samples within tol
    let settled_from = traj
        .states
        .iter()
        .rposition(|p| !near(p))
        .map_or(0, |i| i + 1);
    let converged = settled_from < traj.len() && traj.times[settled_from] <= 0.9 * t_max;
    Ok(Convergence {
        converged,
        first_hit: converged.then(|| traj.times[settled_from]),
        divergent: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeSettings {
    pub radius: f64,
    /// Points per parameter value on the circle around the branch point;
    /// ignored in 1D, where both interval endpoints are used.
    pub samples: usize,
    pub tol: f64,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            radius: 0.25,
            samples: 16,
            tol: 1e-3,
            t_max: DEFAULT_T_MAX,
            dt: DEFAULT_DT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeVerdict {
    Uniform,
    NonUniform,
}

impl ProbeVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeVerdict::Uniform => "uniform",
            ProbeVerdict::NonUniform => "non-uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinProbeReport {
    pub param_grid: Vec<f64>,
    pub radius: f64,
    pub sample_count: usize,
    /// `(parameter, initial point)` pairs that did not return to the branch.
    pub failures: Vec<(f64, Point)>,
    pub verdict: ProbeVerdict,
}

/// Deterministic probe points at distance `radius` from `center`.
pub fn probe_points(center: &Point, radius: f64, samples: usize) -> Vec<Point> {
    match center.dim() {
        1 => vec![
            Point::from(vec![center[0] - radius]),
            Point::from(vec![center[0] + radius]),
        ],
        _ => (0..samples)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / samples as f64;
                Point::from(vec![
                    center[0] + radius * theta.cos(),
                    center[1] + radius * theta.sin(),
                ])
            })
            .collect(),
    }
}

/// Tests whether a fixed neighbourhood of radius `settings.radius` around the
/// branch equilibrium stays inside its basin for every parameter in `grid`.
///
/// The grid is meant to lie below the bifurcation under test; this is not
/// enforced, and a grid straddling it is expected to come back non-uniform.
pub fn uniformity_probe<B>(
    family: &Family,
    grid: &[f64],
    branch: B,
    settings: &ProbeSettings,
) -> Result<BasinProbeReport>
where
    B: Fn(f64) -> Point + Sync,
{
    if !(settings.radius > 0.0) {
        return Err(Error::InvalidArgument("probe radius must be > 0".into()));
    }
    let mut jobs = Vec::new();
    for &p in grid {
        let model = family.at(p)?;
        let center = branch(p);
        for start in probe_points(&center, settings.radius, settings.samples) {
            jobs.push((p, model.clone(), center.clone(), start));
        }
    }
    let sample_count = jobs.len();
    let failures: Vec<(f64, Point)> = jobs
        .into_par_iter()
        .filter_map(|(p, model, center, start)| {
            let ok = converges_to_with_dt(
                &model,
                &start,
                &center,
                settings.tol,
                settings.t_max,
                settings.dt,
            )
            .map(|c| c.converged)
            .unwrap_or(false);
            (!ok).then_some((p, start))
        })
        .collect();
    let verdict = if failures.is_empty() {
        ProbeVerdict::Uniform
    } else {
        ProbeVerdict::NonUniform
    };
    Ok(BasinProbeReport {
        param_grid: grid.to_vec(),
        radius: settings.radius,
        sample_count,
        failures,
        verdict,
    })
}
