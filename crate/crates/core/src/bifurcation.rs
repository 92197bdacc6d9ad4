//! Parameter sweeps, branch assembly, bifurcation detection and the pitchfork
//! verdict.
//!
//! A pitchfork here means what the normal forms exhibit: one sink before the
//! critical parameter; after it, two new sinks on either side of an
//! equilibrium with a single unstable direction, and that equilibrium
//! continues the old sink. The verdict checks each of these facts from sweeps
//! rather than from symmetry or third derivatives.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::equilibria::{
    dedup_sorted, find_equilibria_with, newton_in_region, EquilibriumPoint, SearchOptions,
};
use crate::error::{Error, Result};
use crate::field::{Bounds, Family, Point};
use crate::stability::{
    classify_spectrum, eigen, Classification, StabilityKind, DEFAULT_HYPERBOLICITY_TOL,
};

/// `lo, lo + step, ...` up to and including `hi` (within rounding).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(lo < hi) || !(step > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "range needs lo < hi and step > 0, got {lo}:{hi}:{step}"
            )));
        }
        Ok(ParamRange { lo, hi, step })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.lo + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifiedEquilibrium {
    pub location: Point,
    pub classification: Classification,
    pub eigenvalues: Vec<Complex64>,
}

impl ClassifiedEquilibrium {
    pub fn kind(&self) -> StabilityKind {
        self.classification.kind
    }

    /// Hyperbolic with exactly one unstable direction: a saddle in the plane,
    /// a repeller on the line.
    pub fn is_index_one(&self) -> bool {
        self.classification.unstable_count == 1
            && !matches!(
                self.kind(),
                StabilityKind::Degenerate | StabilityKind::NonhyperbolicComplex
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub param: f64,
    /// Sorted lexicographically, as returned by the equilibrium search.
    pub equilibria: Vec<ClassifiedEquilibrium>,
}

impl SweepRecord {
    pub fn count(&self, kind: StabilityKind) -> usize {
        self.equilibria.iter().filter(|e| e.kind() == kind).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub search: SearchOptions,
    pub hyperbolicity_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            search: SearchOptions::default(),
            hyperbolicity_tol: DEFAULT_HYPERBOLICITY_TOL,
        }
    }
}

pub fn classify_equilibrium(
    model: &crate::field::Model,
    location: Point,
    tol: f64,
) -> Result<ClassifiedEquilibrium> {
    let j = model.jacobian(&location)?;
    let spectrum = eigen(&j)?;
    Ok(ClassifiedEquilibrium {
        classification: classify_spectrum(&spectrum, j.det(), tol),
        eigenvalues: spectrum.eigenvalues,
        location,
    })
}

/// One record per parameter value of `range`.
pub fn sweep(family: &Family, range: &ParamRange, bounds: &Bounds) -> Result<Vec<SweepRecord>> {
    sweep_values(family, &range.values(), bounds, &SweepOptions::default())
}

pub fn sweep_values(
    family: &Family,
    values: &[f64],
    bounds: &Bounds,
    opts: &SweepOptions,
) -> Result<Vec<SweepRecord>> {
    values
        .par_iter()
        .map(|&p| {
            let model = family.at(p)?;
            let found = find_equilibria_with(&model, bounds, &opts.search)?;
            let equilibria = found
                .into_iter()
                .map(|e| classify_equilibrium(&model, e.location, opts.hyperbolicity_tol))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRecord {
                param: p,
                equilibria,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub param: f64,
    pub location: Point,
    pub classification: Classification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
}

impl Branch {
    pub fn first(&self) -> &BranchPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &BranchPoint {
        self.points.last().expect("branches are never empty")
    }

    pub fn kinds(&self) -> impl Iterator<Item = StabilityKind> + '_ {
        self.points.iter().map(|p| p.classification.kind)
    }
}

/// A record point with several candidate branches, or a branch with several
/// candidate points, within the matching tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct Ambiguity {
    pub param: f64,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    pub branches: Vec<Branch>,
    pub ambiguities: Vec<Ambiguity>,
}

/// Matching tolerance used when none is given: five parameter steps.
pub fn default_matching_tol(step: f64) -> f64 {
    5.0 * step
}

/// Links equilibria of consecutive records into branches.
///
/// A live branch accepts a point within `matching_tol * (1 + speed)`, where
/// `speed` is the branch's last displacement per unit parameter; a branch
/// born from nothing takes its speed from the distance to the nearest
/// equilibrium of the previous record, since that is where it emerged.
/// Candidate pairs are matched greedily by distance; leftovers are births.
pub fn assemble_branches(records: &[SweepRecord], matching_tol: f64) -> BranchSet {
    struct Track {
        branch: Branch,
        speed: f64,
        live: bool,
    }
    let mut tracks: Vec<Track> = Vec::new();
    let mut ambiguities = Vec::new();
    let mut prev: Option<&SweepRecord> = None;

    for rec in records {
        let to_point = |e: &ClassifiedEquilibrium| BranchPoint {
            param: rec.param,
            location: e.location.clone(),
            classification: e.classification,
        };
        let Some(prev_rec) = prev else {
            for e in &rec.equilibria {
                tracks.push(Track {
                    branch: Branch {
                        points: vec![to_point(e)],
                    },
                    speed: 0.0,
                    live: true,
                });
            }
            prev = Some(rec);
            continue;
        };
        let dp = (rec.param - prev_rec.param).abs().max(f64::MIN_POSITIVE);

        let mut candidates = Vec::new();
        for (b, t) in tracks.iter().enumerate().filter(|(_, t)| t.live) {
            let tol = matching_tol * (1.0 + t.speed);
            for (j, e) in rec.equilibria.iter().enumerate() {
                let d = t.branch.last().location.distance(&e.location);
                if d <= tol {
                    candidates.push((d, b, j));
                }
            }
        }
        let mut per_point = vec![0usize; rec.equilibria.len()];
        let mut per_branch = vec![0usize; tracks.len()];
        for &(_, b, j) in &candidates {
            per_point[j] += 1;
            per_branch[b] += 1;
        }
        for (j, &c) in per_point.iter().enumerate() {
            if c > 1 {
                ambiguities.push(Ambiguity {
                    param: rec.param,
                    location: rec.equilibria[j].location.clone(),
                });
            }
        }
        for (b, &c) in per_branch.iter().enumerate() {
            if c > 1 {
                ambiguities.push(Ambiguity {
                    param: rec.param,
                    location: tracks[b].branch.last().location.clone(),
                });
            }
        }

        candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut point_taken = vec![false; rec.equilibria.len()];
        let mut branch_taken = vec![false; tracks.len()];
        for (d, b, j) in candidates {
            if point_taken[j] || branch_taken[b] {
                continue;
            }
            point_taken[j] = true;
            branch_taken[b] = true;
            tracks[b].branch.points.push(to_point(&rec.equilibria[j]));
            tracks[b].speed = d / dp;
        }
        for (b, t) in tracks.iter_mut().enumerate() {
            if t.live && !branch_taken[b] {
                t.live = false;
            }
        }
        for (j, e) in rec
            .equilibria
            .iter()
            .enumerate()
            .filter(|(j, _)| !point_taken[*j])
        {
            let _ = j;
            let emergence = prev_rec
                .equilibria
                .iter()
                .map(|q| q.location.distance(&e.location))
                .fold(f64::INFINITY, f64::min);
            tracks.push(Track {
                branch: Branch {
                    points: vec![to_point(e)],
                },
                speed: if emergence.is_finite() {
                    emergence / dp
                } else {
                    0.0
                },
                live: true,
            });
        }
        prev = Some(rec);
    }

    BranchSet {
        branches: tracks.into_iter().map(|t| t.branch).collect(),
        ambiguities,
    }
}

/// How to locate the followed equilibrium at each parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum BranchRule {
    /// The same point for every parameter (e.g. the origin of the normal form).
    Fixed(Point),
    /// Newton from this seed at each parameter value.
    Tracked(Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Determinant,
    MaxRealEigenvalue,
}

/// Bisection on `det J` along the branch until the bracket is at most `tol` wide.
pub fn detect_bifurcation(
    family: &Family,
    bracket: (f64, f64),
    rule: &BranchRule,
    tol: f64,
) -> Result<f64> {
    detect_bifurcation_with(family, bracket, rule, TestFunction::Determinant, tol)
}

pub fn detect_bifurcation_with(
    family: &Family,
    bracket: (f64, f64),
    rule: &BranchRule,
    test: TestFunction,
    tol: f64,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be > 0".into()));
    }
    let eval = |p: f64| -> Result<f64> {
        let model = family.at(p)?;
        let location = match rule {
            BranchRule::Fixed(pt) => pt.clone(),
            BranchRule::Tracked(seed) => newton_in_region(&model, seed, 1e-12, 100, None)?.location,
        };
        let j = model.jacobian(&location)?;
        Ok(match test {
            TestFunction::Determinant => j.det(),
            TestFunction::MaxRealEigenvalue => eigen(&j)?.max_real(),
        })
    };
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 {
        bracket
    } else {
        (bracket.1, bracket.0)
    };
    let mut f_lo = eval(lo)?;
    let f_hi = eval(hi)?;
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = eval(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitchforkKind {
    Pitchfork,
    NotPitchfork,
    Inconclusive,
}

impl PitchforkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PitchforkKind::Pitchfork => "pitchfork",
            PitchforkKind::NotPitchfork => "not-pitchfork",
            PitchforkKind::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchforkEvidence {
    /// Equilibria in the box at `p* - window`.
    pub pre_count: usize,
    pub pre_sinks: usize,
    /// Equilibria in the box at `p* + window`.
    pub post_count: usize,
    pub post_sinks: usize,
    /// Hyperbolic equilibria with one unstable direction at `p* + window`.
    pub post_saddles: usize,
    /// The old sink's branch reaches `p* + window` as the index-one equilibrium.
    pub saddle_continues_sink: bool,
    /// Both post sinks sit on branches born after `p*`.
    pub sinks_are_new: bool,
    /// Largest equilibrium count at the amplitude offsets `p* - delta`.
    pub near_pre_max_count: usize,
    /// Log-log slope of flank distance against `p - p*`.
    pub amplitude_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitchforkVerdict {
    pub bifurcation_param: f64,
    pub kind: PitchforkKind,
    pub evidence: PitchforkEvidence,
}

const WINDOW_STEPS: i32 = 10;
const AMPLITUDE_SAMPLES: usize = 7;
const AMPLITUDE_SMALLEST: f64 = 1e-4;
const EXPONENT_TOL: f64 = 0.1;

fn amplitude_offsets(window: f64) -> Vec<f64> {
    let largest = (0.5 * window).min(0.1);
    (0..AMPLITUDE_SAMPLES)
        .map(|k| largest * 10f64.powf(-0.5 * k as f64))
        .filter(|d| *d >= AMPLITUDE_SMALLEST * (1.0 - 1e-9))
        .collect()
}

/// Decides whether the bifurcation at `p_star` is a pitchfork by sweeping
/// `[p_star - window, p_star + window]` (the critical value itself is
/// skipped) and fitting the flank amplitude on offsets from `1e-4` up to
/// `min(window / 2, 0.1)`, half a decade apart. The same offsets below
/// `p_star` must show the lone sink, and the fitted exponent must be within
/// 0.1 of one half.
pub fn classify_pitchfork(
    family: &Family,
    p_star: f64,
    window: f64,
    bounds: &Bounds,
) -> Result<PitchforkVerdict> {
    classify_pitchfork_with(family, p_star, window, bounds, &SweepOptions::default())
}

pub fn classify_pitchfork_with(
    family: &Family,
    p_star: f64,
    window: f64,
    bounds: &Bounds,
    opts: &SweepOptions,
) -> Result<PitchforkVerdict> {
    if !(window > 0.0) {
        return Err(Error::InvalidArgument("window must be > 0".into()));
    }
    let step = window / WINDOW_STEPS as f64;
    let values: Vec<f64> = (-WINDOW_STEPS..=WINDOW_STEPS)
        .filter(|&k| k != 0)
        .map(|k| p_star + k as f64 * step)
        .collect();
    let records = sweep_values(family, &values, bounds, opts)?;
    let pre = records.first().expect("window has records");
    let post = records.last().expect("window has records");

    let mut evidence = PitchforkEvidence {
        pre_count: pre.equilibria.len(),
        pre_sinks: pre.count(StabilityKind::Sink),
        post_count: post.equilibria.len(),
        post_sinks: post.count(StabilityKind::Sink),
        post_saddles: post.equilibria.iter().filter(|e| e.is_index_one()).count(),
        saddle_continues_sink: false,
        sinks_are_new: false,
        near_pre_max_count: 0,
        amplitude_exponent: None,
    };

    let near_pre: Vec<f64> = amplitude_offsets(window)
        .iter()
        .map(|d| p_star - d)
        .collect();
    let near_pre = sweep_values(family, &near_pre, bounds, opts)?;
    evidence.near_pre_max_count = near_pre
        .iter()
        .map(|r| r.equilibria.len())
        .max()
        .unwrap_or(0);
    let near_pre_single_sink = near_pre
        .iter()
        .all(|r| r.equilibria.len() == 1 && r.count(StabilityKind::Sink) == 1);

    let unstable = records.iter().chain(&near_pre).any(|r| {
        r.equilibria.iter().any(|e| {
            matches!(
                e.kind(),
                StabilityKind::Degenerate | StabilityKind::NonhyperbolicComplex
            )
        })
    });
    if unstable {
        return Ok(PitchforkVerdict {
            bifurcation_param: p_star,
            kind: PitchforkKind::Inconclusive,
            evidence,
        });
    }

    let branches = assemble_branches(&records, default_matching_tol(step)).branches;
    let central = branches.iter().find(|b| {
        b.first().param == pre.param && b.first().classification.kind == StabilityKind::Sink
    });
    if let Some(central) = central {
        let end = central.last();
        evidence.saddle_continues_sink = end.param == post.param
            && post
                .equilibria
                .iter()
                .any(|e| e.is_index_one() && e.location == end.location);
    }
    let new_sink_branches = branches
        .iter()
        .filter(|b| {
            b.first().param > p_star
                && b.last().param == post.param
                && b.last().classification.kind == StabilityKind::Sink
        })
        .count();
    evidence.sinks_are_new = new_sink_branches == 2;

    let structural = evidence.pre_count == 1
        && evidence.pre_sinks == 1
        && evidence.post_count == 3
        && evidence.post_sinks == 2
        && evidence.post_saddles == 1
        && evidence.saddle_continues_sink
        && evidence.sinks_are_new
        && near_pre_single_sink;
    if !structural {
        return Ok(PitchforkVerdict {
            bifurcation_param: p_star,
            kind: PitchforkKind::NotPitchfork,
            evidence,
        });
    }

    let saddle = post
        .equilibria
        .iter()
        .find(|e| e.is_index_one())
        .expect("structural check found one")
        .location
        .clone();
    let flanks: Vec<Point> = post
        .equilibria
        .iter()
        .filter(|e| e.kind() == StabilityKind::Sink)
        .map(|e| e.location.clone())
        .collect();
    evidence.amplitude_exponent =
        amplitude_exponent(family, p_star, window, bounds, opts, saddle, flanks)?;
    let kind = match evidence.amplitude_exponent {
        Some(e) if (e - 0.5).abs() <= EXPONENT_TOL => PitchforkKind::Pitchfork,
        Some(_) => PitchforkKind::NotPitchfork,
        None => PitchforkKind::Inconclusive,
    };
    Ok(PitchforkVerdict {
        bifurcation_param: p_star,
        kind,
        evidence,
    })
}

/// Follows the two flank sinks toward `p_star` and fits the log-log slope of
/// their mean distance from the central equilibrium.
fn amplitude_exponent(
    family: &Family,
    p_star: f64,
    window: f64,
    bounds: &Bounds,
    opts: &SweepOptions,
    mut saddle: Point,
    mut flanks: Vec<Point>,
) -> Result<Option<f64>> {
    let offsets = amplitude_offsets(window);
    let escape = bounds.inflated(opts.search.escape_factor);
    let mut pairs = Vec::with_capacity(offsets.len());
    for d in offsets {
        let model = family.at(p_star + d)?;
        // grid seeds plus Newton from the previous flanks and centre
        let mut found: Vec<EquilibriumPoint> = find_equilibria_with(&model, bounds, &opts.search)?;
        for seed in flanks.iter().chain(std::iter::once(&saddle)) {
            if let Ok(e) = newton_in_region(
                &model,
                seed,
                opts.search.tol,
                opts.search.max_iter,
                Some(&escape),
            ) {
                if bounds.contains(&e.location) {
                    found.push(e);
                }
            }
        }
        let found = dedup_sorted(found, opts.search.dedup_radius);
        let classified = found
            .into_iter()
            .map(|e| classify_equilibrium(&model, e.location, opts.hyperbolicity_tol))
            .collect::<Result<Vec<_>>>()?;
        let Some(centre) = classified
            .iter()
            .filter(|e| e.is_index_one())
            .min_by(|a, b| {
                a.location
                    .distance(&saddle)
                    .total_cmp(&b.location.distance(&saddle))
            })
        else {
            return Ok(None);
        };
        let mut sinks: Vec<&ClassifiedEquilibrium> = classified
            .iter()
            .filter(|e| e.kind() == StabilityKind::Sink)
            .collect();
        if sinks.len() < 2 {
            return Ok(None);
        }
        sinks.sort_by(|a, b| {
            a.location
                .distance(&centre.location)
                .total_cmp(&b.location.distance(&centre.location))
        });
        let near = &sinks[..2];
        let amp = 0.5
            * (near[0].location.distance(&centre.location)
                + near[1].location.distance(&centre.location));
        if !(amp > 0.0) {
            return Ok(None);
        }
        saddle = centre.location.clone();
        flanks = near.iter().map(|e| e.location.clone()).collect();
        pairs.push((d.ln(), amp.ln()));
    }
    if pairs.len() < 5 {
        return Ok(None);
    }
    Ok(Some(least_squares_slope(&pairs)))
}

pub(crate) fn least_squares_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Sampled isoclines of the symmetric normal form.
#[derive(Debug, Clone, PartialEq)]
pub struct Isoclines {
    pub a: f64,
    /// `x' = 0`: points `(y^2 - a y, y)`.
    pub x_nullcline: Vec<[f64; 2]>,
    /// `y' = 0`: points `(x, x^2 - a x)`.
    pub y_nullcline: Vec<[f64; 2]>,
}

pub fn isocline_sample(
    a: f64,
    y_range: (f64, f64),
    x_range: (f64, f64),
    count: usize,
) -> Result<Isoclines> {
    if count < 2 {
        return Err(Error::InvalidArgument(
            "isoclines need at least 2 samples".into(),
        ));
    }
    let x_nullcline = crate::field::linspace(y_range.0, y_range.1, count)
        .into_iter()
        .map(|y| [y * y - a * y, y])
        .collect();
    let y_nullcline = crate::field::linspace(x_range.0, x_range.1, count)
        .into_iter()
        .map(|x| [x, x * x - a * x])
        .collect();
    Ok(Isoclines {
        a,
        x_nullcline,
        y_nullcline,
    })
}

/// Whether the isocline normals `(1, a)` and `(a, 1)` at the origin are
/// parallel, i.e. the curves touch there.
pub fn tangency_check(a: f64) -> bool {
    (a * a - 1.0).abs() <= 1e-12
}
