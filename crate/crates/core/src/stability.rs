//! Eigenvalues of small Jacobians and equilibrium classification.

use std::fmt;

use num_complex::Complex64;

use crate::equilibria::closed_form_equilibria;
use crate::error::{Error, Result};
use crate::field::{Matrix, Model};

/// Real parts within this of zero count as zero.
pub const DEFAULT_HYPERBOLICITY_TOL: f64 = 1e-9;

/// Explains which closed form the flanking spectrum follows. Reports that
/// print the complex-transition threshold carry this line.
pub const FLANKING_FORMULA_NOTE: &str = "note: flanking eigenvalues follow the Jacobian, \
-1 +- sqrt(1 - (a-1)(a+3)), whose real-to-complex transition is sqrt(5)-1 = 1.2361; \
the variant -1 +- sqrt(3 - (a-1)(a+3)) would move it to sqrt(7)-1 = 1.6458 and is treated \
as a suspected typo";

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    /// Unit eigenvectors matching `eigenvalues`; only for 2x2 input with
    /// real, distinct eigenvalues.
    pub eigenvectors: Option<Vec<[f64; 2]>>,
}

impl Spectrum {
    pub fn max_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.im == 0.0)
    }
}

/// Spectrum of a 1x1 or 2x2 matrix.
pub fn eigen(j: &Matrix) -> Result<Spectrum> {
    match j.dim() {
        1 => Ok(Spectrum {
            eigenvalues: vec![Complex64::new(j.get(0, 0), 0.0)],
            eigenvectors: None,
        }),
        2 => Ok(eigen2x2(j)),
        n => Err(Error::UnsupportedDimension(n)),
    }
}

/// Roots of `l^2 - tr l + det` for a 2x2 matrix.
///
/// # Panics
/// If `j` is not 2x2.
pub fn eigen2x2(j: &Matrix) -> Spectrum {
    assert_eq!(j.dim(), 2, "eigen2x2 needs a 2x2 matrix");
    let (a, b, c, d) = (j.get(0, 0), j.get(0, 1), j.get(1, 0), j.get(1, 1));
    let half_tr = 0.5 * (a + d);
    // (tr/2)^2 - det, rearranged to avoid cancelling the diagonal
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc < 0.0 {
        let im = (-disc).sqrt();
        return Spectrum {
            eigenvalues: vec![Complex64::new(half_tr, im), Complex64::new(half_tr, -im)],
            eigenvectors: None,
        };
    }
    let s = disc.sqrt();
    let big = if half_tr >= 0.0 {
        half_tr + s
    } else {
        half_tr - s
    };
    let small = if big == 0.0 { 0.0 } else { j.det() / big };
    // + 0.0 turns -0.0 into 0.0
    let (hi, lo) = if big >= small {
        (big + 0.0, small + 0.0)
    } else {
        (small + 0.0, big + 0.0)
    };
    let eigenvectors = (hi != lo).then(|| vec![real_eigenvector(j, hi), real_eigenvector(j, lo)]);
    Spectrum {
        eigenvalues: vec![Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)],
        eigenvectors,
    }
}

fn real_eigenvector(j: &Matrix, lambda: f64) -> [f64; 2] {
    let (a, b, c, d) = (j.get(0, 0), j.get(0, 1), j.get(1, 0), j.get(1, 1));
    // each row of J - lambda I gives a null vector; take the better-conditioned one
    let from_row1 = [b, lambda - a];
    let from_row2 = [lambda - d, c];
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let v = if norm(from_row1) >= norm(from_row2) {
        from_row1
    } else {
        from_row2
    };
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityKind {
    Sink,
    Saddle,
    Source,
    /// A real eigenvalue within the hyperbolicity tolerance of zero.
    Degenerate,
    /// A complex pair on the imaginary axis.
    NonhyperbolicComplex,
}

impl StabilityKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityKind::Sink => "sink",
            StabilityKind::Saddle => "saddle",
            StabilityKind::Source => "source",
            StabilityKind::Degenerate => "degenerate",
            StabilityKind::NonhyperbolicComplex => "nonhyperbolic-complex",
        }
    }
}

impl fmt::Display for StabilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub kind: StabilityKind,
    /// Eigenvalues with real part above the tolerance.
    pub unstable_count: usize,
    /// Sign of `det J`, computed from the determinant itself.
    pub sign_det: i8,
}

pub fn classify(j: &Matrix, hyperbolicity_tol: f64) -> Result<Classification> {
    let spectrum = eigen(j)?;
    Ok(classify_spectrum(&spectrum, j.det(), hyperbolicity_tol))
}

pub fn classify_spectrum(spectrum: &Spectrum, det: f64, tol: f64) -> Classification {
    let n = spectrum.eigenvalues.len();
    let unstable_count = spectrum.eigenvalues.iter().filter(|l| l.re > tol).count();
    let central = spectrum.eigenvalues.iter().find(|l| l.re.abs() <= tol);
    let kind = match central {
        Some(l) if l.im.abs() > tol => StabilityKind::NonhyperbolicComplex,
        Some(_) => StabilityKind::Degenerate,
        None if unstable_count == 0 => StabilityKind::Sink,
        None if unstable_count == n => StabilityKind::Source,
        None => StabilityKind::Saddle,
    };
    Classification {
        kind,
        unstable_count,
        sign_det: sign(det),
    }
}

pub(crate) fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Spectrum at the flanking equilibrium `(x2, y2)` of the symmetric normal
/// form, from its analytic Jacobian. Analytically `-1 +- sqrt(1 - (a-1)(a+3))`.
pub fn flanking_spectrum(a: f64) -> Result<Spectrum> {
    if !(a > 1.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "flanking equilibria need a > 1, got {a}"
        )));
    }
    let flank = &closed_form_equilibria(a).points[1].location;
    Ok(eigen2x2(&Model::normal2d(a).jacobian(flank)?))
}

/// `(tr/2)^2 - det` of the Jacobian at the flanking point; its sign tells
/// real from complex eigenvalues.
pub fn flanking_discriminant(a: f64) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "flanking equilibria need a > 1, got {a}"
        )));
    }
    let flank = &closed_form_equilibria(a).points[1].location;
    let j = Model::normal2d(a).jacobian(flank)?;
    let (p, q, r, s) = (j.get(0, 0), j.get(0, 1), j.get(1, 0), j.get(1, 1));
    Ok(0.25 * (p - s) * (p - s) + q * r)
}

/// The `a` at which the flanking eigenvalues turn complex, by bisection of
/// [`flanking_discriminant`] on `[1 + 1e-9, 3]` to a bracket of `1e-9`.
pub fn complex_transition_threshold() -> f64 {
    let disc = |a: f64| flanking_discriminant(a).expect("a > 1 inside the bracket");
    let (mut lo, mut hi) = (1.0 + 1e-9, 3.0);
    debug_assert!(disc(lo) > 0.0 && disc(hi) < 0.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if disc(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Where the `+3` variant of the flanking formula would put the transition.
pub fn variant_formula_threshold() -> f64 {
    7f64.sqrt() - 1.0
}
