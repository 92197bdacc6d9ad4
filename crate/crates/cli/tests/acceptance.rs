//! Acceptance gate: runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each. Exits non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;

use pitchfork_core::bifurcation::{
    classify_pitchfork, detect_bifurcation, BranchRule, PitchforkKind,
};
use pitchfork_core::equilibria::{closed_form_equilibria, find_equilibria};
use pitchfork_core::flow::{integrate, uniformity_probe, ProbeSettings, ProbeVerdict};
use pitchfork_core::index::{
    boundary_inward_check, ph_index_sum, winding_degree, Degree, IndexSum,
};
use pitchfork_core::stability::{complex_transition_threshold, eigen, FLANKING_FORMULA_NOTE};
use pitchfork_core::toggle::{correspondence_residual, unique_equilibrium_check};
use pitchfork_core::{make_model, Bounds, Family, Model, ModelId, Params, Point};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn sq(lo: f64, hi: f64) -> Bounds {
    Bounds::square(lo, hi).unwrap()
}

fn closed_form_equilibria_match() -> Outcome {
    for a in [1.5, 2.0, 3.0] {
        let found = find_equilibria(&Model::normal2d(a), &sq(-2.0, a + 2.0), 25, 1e-10)
            .map_err(|e| e.to_string())?;
        let expected = closed_form_equilibria(a).points;
        ensure!(
            found.len() == 4 && expected.len() == 4,
            "a = {a}: found {} points",
            found.len()
        );
        for e in &expected {
            let d = found
                .iter()
                .map(|f| f.location.distance(&e.location))
                .fold(f64::INFINITY, f64::min);
            ensure!(d <= 1e-8, "a = {a}: {:?} off by {d:e}", e.location.coords());
        }
    }
    let found = find_equilibria(&Model::normal2d(3.0), &sq(-2.0, 5.0), 25, 1e-10)
        .map_err(|e| e.to_string())?;
    let r3 = 3f64.sqrt();
    for target in [[1.0 + r3, 1.0 - r3], [1.0 - r3, 1.0 + r3]] {
        let d = found
            .iter()
            .map(|f| f.location.distance(&Point::from(target)))
            .fold(f64::INFINITY, f64::min);
        ensure!(d <= 1e-9, "a = 3 flank {target:?} off by {d:e}");
    }
    Ok("a in {1.5, 2, 3}: 4 points within 1e-8; a = 3 flanks within 1e-9".into())
}

fn central_spectrum() -> Outcome {
    let mut worst: f64 = 0.0;
    for a in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let j = Model::normal2d(a)
            .jacobian(&[0.0, 0.0])
            .map_err(|e| e.to_string())?;
        let s = eigen(&j).map_err(|e| e.to_string())?;
        let mut got: Vec<f64> = s.eigenvalues.iter().map(|l| l.re).collect();
        got.sort_by(f64::total_cmp);
        ensure!(s.is_real(), "a = {a}: complex spectrum");
        let mut want = [a - 1.0, -a - 1.0];
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
        for (lambda, v) in [(a - 1.0, [-1.0, 1.0]), (-a - 1.0, [1.0, 1.0])] {
            let jv = j.mul_vec(&v);
            let r = (jv[0] - lambda * v[0])
                .abs()
                .max((jv[1] - lambda * v[1]).abs());
            ensure!(
                r <= 1e-12,
                "a = {a}: {v:?} is not an eigenvector for {lambda}"
            );
        }
        if let Some(vecs) = &s.eigenvectors {
            for (l, v) in s.eigenvalues.iter().zip(vecs) {
                let expect = if (l.re - (a - 1.0)).abs() <= 1e-12 {
                    [-1.0, 1.0]
                } else {
                    [1.0, 1.0]
                };
                let cross = v[0] * expect[1] - v[1] * expect[0];
                ensure!(
                    cross.abs() <= 1e-12,
                    "a = {a}: eigenvector {v:?} not along {expect:?}"
                );
            }
        }
    }
    ensure!(worst <= 1e-12, "eigenvalue error {worst:e}");
    Ok(format!(
        "max eigenvalue error {worst:.1e}; eigenvectors along (-1,1), (1,1)"
    ))
}

fn threshold() -> Outcome {
    let t = complex_transition_threshold();
    ensure!((t - 1.2361).abs() <= 1e-4, "threshold {t} vs 1.2361");
    ensure!(
        (t - (5f64.sqrt() - 1.0)).abs() <= 1e-6,
        "threshold {t} vs sqrt(5)-1"
    );
    Ok(format!(
        "threshold = {t:.10}\n       {FLANKING_FORMULA_NOTE}"
    ))
}

fn detection() -> Outcome {
    let err = |e: pitchfork_core::Error| e.to_string();
    let a = detect_bifurcation(
        &Family::of(ModelId::Normal2d),
        (0.5, 1.5),
        &BranchRule::Fixed(Point::origin(2)),
        1e-10,
    )
    .map_err(err)?;
    let m = detect_bifurcation(
        &Family::of(ModelId::ToggleSym),
        (1.5, 2.5),
        &BranchRule::Fixed([1.0, 1.0].into()),
        1e-10,
    )
    .map_err(err)?;
    let mu = detect_bifurcation(
        &Family::of(ModelId::Pitchfork1d),
        (-0.5, 0.5),
        &BranchRule::Fixed(Point::origin(1)),
        1e-10,
    )
    .map_err(err)?;
    ensure!((a - 1.0).abs() <= 1e-6, "a* = {a}");
    ensure!((m - 2.0).abs() <= 1e-6, "m* = {m}");
    ensure!(mu.abs() <= 1e-8, "mu* = {mu}");
    Ok(format!("a* = {a:.10}, m* = {m:.10}, mu* = {mu:.2e}"))
}

fn verdicts() -> Vec<(
    &'static str,
    Result<pitchfork_core::bifurcation::PitchforkVerdict, String>,
)> {
    vec![
        (
            "normal2d",
            classify_pitchfork(&Family::of(ModelId::Normal2d), 1.0, 0.2, &sq(-1.5, 1.5))
                .map_err(|e| e.to_string()),
        ),
        (
            "toggle-sym",
            classify_pitchfork(&Family::of(ModelId::ToggleSym), 2.0, 0.4, &sq(0.0, 4.0))
                .map_err(|e| e.to_string()),
        ),
        (
            "pitchfork1d",
            classify_pitchfork(
                &Family::of(ModelId::Pitchfork1d),
                0.0,
                0.2,
                &Bounds::interval(-2.0, 2.0).unwrap(),
            )
            .map_err(|e| e.to_string()),
        ),
    ]
}

fn defining_characteristic() -> Outcome {
    let mut summary = Vec::new();
    for (name, v) in verdicts() {
        let v = v?;
        let ev = &v.evidence;
        ensure!(
            v.kind == PitchforkKind::Pitchfork,
            "{name}: {} ({ev:?})",
            v.kind.as_str()
        );
        ensure!(
            ev.pre_count == 1
                && ev.pre_sinks == 1
                && ev.post_sinks == 2
                && ev.post_saddles == 1
                && ev.saddle_continues_sink,
            "{name}: evidence {ev:?}"
        );
        summary.push(format!("{name} pitchfork"));
    }
    Ok(summary.join(", "))
}

fn square_root_law() -> Outcome {
    let mut summary = Vec::new();
    for (name, v) in verdicts() {
        if name == "toggle-sym" {
            continue;
        }
        let slope = v?
            .evidence
            .amplitude_exponent
            .ok_or(format!("{name}: no amplitude fit"))?;
        ensure!((slope - 0.5).abs() <= 0.05, "{name}: exponent {slope}");
        summary.push(format!("{name} {slope:.4}"));
    }
    Ok(format!("exponents: {}", summary.join(", ")))
}

/// Boxes on which the field points strictly inward, on both sides of a = 1.
const ADMISSIBLE: [(f64, f64, f64); 6] = [
    (0.25, -0.1, 0.5),
    (0.5, -0.4, 0.4),
    (0.9, -0.25, 1.0),
    (1.1, -0.35, 1.5),
    (1.5, -0.6, 2.0),
    (1.9, -0.95, 2.8),
];

fn poincare_hopf() -> Outcome {
    let err = |e: pitchfork_core::Error| e.to_string();
    for (a, lo, hi) in ADMISSIBLE {
        let m = Model::normal2d(a);
        let b = sq(lo, hi);
        let inward = boundary_inward_check(&m, &b, 64).map_err(err)?;
        ensure!(
            inward.pass,
            "a = {a}, box [{lo},{hi}]^2 is not inward ({} violations)",
            inward.violations.len()
        );
        let ph = ph_index_sum(&m, &b).map_err(err)?;
        ensure!(ph == IndexSum::Defined(1), "a = {a}: index sum {ph:?}");
        let w = winding_degree(&m, &b, 64).map_err(err)?;
        ensure!(w == Degree::Defined(1), "a = {a}: winding {w:?}");
    }
    let m = Model::normal2d(3.0);
    let saddle_box = sq(-0.05, 0.05);
    let ph = ph_index_sum(&m, &saddle_box).map_err(err)?;
    let w = winding_degree(&m, &saddle_box, 64).map_err(err)?;
    ensure!(
        ph == IndexSum::Defined(-1) && w == Degree::Defined(-1),
        "saddle box: {ph:?} / {w:?}"
    );
    Ok(format!(
        "{} inward boxes give +1 by both methods; a = 3 saddle box gives -1",
        ADMISSIBLE.len()
    ))
}

fn toggle_correspondence() -> Outcome {
    let b = sq(-1.0, 1.0);
    let r = correspondence_residual(2.0, 1.0, &b, 21).map_err(|e| e.to_string())?;
    let control = correspondence_residual(2.0, 1.5, &b, 21).map_err(|e| e.to_string())?;
    ensure!(r <= 1e-12, "residual {r:e}");
    ensure!(control >= 0.4, "negative control {control}");
    Ok(format!("residual {r:.1e}; a = 1.5 control {control}"))
}

fn toggle_uniqueness() -> Outcome {
    let b = sq(0.0, 4.0);
    for m in [0.5, 1.0, 2.0] {
        let u = unique_equilibrium_check(m, &b).map_err(|e| e.to_string())?;
        ensure!(u.holds, "m = {m}: {:?}", u.equilibria);
    }
    let u = unique_equilibrium_check(3.0, &b).map_err(|e| e.to_string())?;
    ensure!(!u.holds && u.count == 3, "m = 3: {} equilibria", u.count);
    let off: Vec<&Point> = u
        .equilibria
        .iter()
        .filter(|p| p.distance(&Point::from([1.0, 1.0])) > 1e-6)
        .collect();
    ensure!(off.len() == 2, "m = 3: expected an asymmetric pair");
    let d = off[0].distance(&off[1].swapped());
    ensure!(d <= 1e-8, "m = 3: pair not swap-symmetric ({d:e})");
    Ok(format!(
        "unique for m in {{0.5, 1, 2}}; m = 3 has 3, pair {:?} swap error {d:.1e}",
        off[1].coords()
    ))
}

fn uniformity() -> Outcome {
    let fam = Family::of(ModelId::Normal2d);
    let settings = ProbeSettings::default();
    let origin = |_: f64| Point::origin(2);
    let r = uniformity_probe(&fam, &[0.2, 0.5, 0.8, 0.95], origin, &settings)
        .map_err(|e| e.to_string())?;
    ensure!(
        r.verdict == ProbeVerdict::Uniform,
        "pre-bifurcation grid: {} failures",
        r.failures.len()
    );
    let r2 = uniformity_probe(&fam, &[0.2, 0.5, 0.8, 0.95, 1.05], origin, &settings)
        .map_err(|e| e.to_string())?;
    ensure!(
        r2.verdict == ProbeVerdict::NonUniform,
        "grid with 1.05 came back uniform"
    );
    Ok(format!(
        "uniform over {} samples; with a = 1.05 {} samples fail",
        r.sample_count,
        r2.failures.len()
    ))
}

fn numerics_hygiene() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20261016);
    let mut worst: f64 = 0.0;
    for id in ModelId::ALL {
        for _ in 0..5 {
            let mut params = Params::new();
            for name in id.parameter_names() {
                let v = match *name {
                    "mu" | "a" | "b" => rng.gen_range(-2.0..3.0),
                    "alpha1" | "alpha2" => rng.gen_range(0.5..4.0),
                    _ => rng.gen_range(0.5..4.0),
                };
                params.set(*name, v);
            }
            let model = make_model(id, &params).map_err(|e| e.to_string())?;
            let x: Vec<f64> = (0..id.dimension())
                .map(|_| rng.gen_range(0.05..3.0))
                .collect();
            let exact = model.jacobian(&x).map_err(|e| e.to_string())?;
            let fd = model.jacobian_fd_default(&x).map_err(|e| e.to_string())?;
            let diff = exact.max_abs_diff(&fd);
            ensure!(diff <= 1e-6, "{id} at {x:?}: {diff:e}");
            worst = worst.max(diff);
        }
    }

    // x' = x - x^3, x(0) = 0.1 has x(t) = 1 / sqrt(1 + 99 e^{-2t})
    let m = Model::pitchfork1d(1.0);
    let exact = 1.0 / (1.0 + 99.0 * (-4.0f64).exp()).sqrt();
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|dt| (integrate(&m, &[0.1], 2.0, *dt).unwrap().final_state()[0] - exact).abs())
        .collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    for r in ratios {
        ensure!((16.0 / 3.0..=48.0).contains(&r), "1D halving ratio {r}");
    }
    // planar: Richardson differences
    let n = Model::normal2d(0.5);
    let at = |dt: f64| {
        integrate(&n, &[0.4, -0.3], 2.0, dt)
            .unwrap()
            .final_state()
            .clone()
    };
    let (s1, s2, s3) = (at(0.1), at(0.05), at(0.025));
    let r2d = s1.distance(&s2) / s2.distance(&s3);
    ensure!((16.0 / 3.0..=48.0).contains(&r2d), "2D halving ratio {r2d}");
    Ok(format!(
        "Jacobian fd error <= {worst:.1e}; RK4 halving ratios {:.2}, {:.2}, {:.2}",
        ratios[0], ratios[1], r2d
    ))
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_pitchfork");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let svg_path = dir.path().join("pitchfork.svg");
    let svg = svg_path.to_str().unwrap();
    let commands: [Vec<&str>; 3] = [
        vec![
            "equilibria",
            "--model",
            "normal2d",
            "--param",
            "a=3",
            "--box=-2,5,-2,5",
            "--format",
            "csv",
        ],
        vec![
            "sweep",
            "--model",
            "normal2d",
            "--param-name",
            "a",
            "--range",
            "0.5:1.5:0.01",
            "--box=-1.5,1.5,-1.5,1.5",
            "--format",
            "svg",
            "--out",
            svg,
        ],
        vec![
            "toggle-compare",
            "--m",
            "2",
            "--grid=-1,1,-1,1",
            "--density",
            "21",
        ],
    ];
    let run = |args: &[&str]| -> Result<(Vec<u8>, Vec<u8>), String> {
        let out = Command::new(bin)
            .args(args)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?} exited with {}", out.status));
        }
        let file = if args.contains(&"--out") {
            std::fs::read(&svg_path).map_err(|e| e.to_string())?
        } else {
            Vec::new()
        };
        Ok((out.stdout, file))
    };
    let mut polylines = 0;
    for args in &commands {
        let first = run(args)?;
        let second = run(args)?;
        ensure!(first == second, "{} output differs between runs", args[0]);
        if args[0] == "sweep" {
            polylines = String::from_utf8_lossy(&first.1)
                .matches("<polyline")
                .count();
        }
    }
    ensure!(polylines == 3, "sweep SVG has {polylines} branch polylines");
    let (csv, _) = run(&commands[0])?;
    let rows = String::from_utf8_lossy(&csv).lines().count() - 1;
    ensure!(rows == 4, "equilibria CSV has {rows} rows");
    Ok("3 commands byte-identical across runs; sweep SVG has 3 polylines".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("closed-form equilibria", closed_form_equilibria_match),
        ("central spectrum", central_spectrum),
        ("complex-transition threshold", threshold),
        ("bifurcation detection", detection),
        ("defining characteristic", defining_characteristic),
        ("square-root law", square_root_law),
        ("Poincare-Hopf index", poincare_hopf),
        ("toggle correspondence", toggle_correspondence),
        ("toggle uniqueness and bistability", toggle_uniqueness),
        ("uniformity probe", uniformity),
        ("numerics hygiene", numerics_hygiene),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
