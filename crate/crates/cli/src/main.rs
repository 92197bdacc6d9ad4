mod args;
mod emit;
mod svg;

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use pitchfork_core::bifurcation::{
    assemble_branches, classify_equilibrium, default_matching_tol, isocline_sample, sweep_values,
    ParamRange, SweepOptions,
};
use pitchfork_core::equilibria::{
    closed_form_equilibria, find_equilibria_with, SearchOptions, DEDUP_RADIUS, DEFAULT_GRID,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use pitchfork_core::flow::{integrate, uniformity_probe, ProbeSettings, DEFAULT_DT, DEFAULT_T_MAX};
use pitchfork_core::index::{verify_ph_with, Degree, IndexOptions, IndexSum, DEFAULT_EDGE_SAMPLES};
use pitchfork_core::stability::{
    complex_transition_threshold, eigen, variant_formula_threshold, DEFAULT_HYPERBOLICITY_TOL,
    FLANKING_FORMULA_NOTE,
};
use pitchfork_core::toggle::correspondence_residual;
use pitchfork_core::{make_model, Bounds, Family, Model, ModelId, Params, Point};
use serde_json::{json, Value};

use args::{
    parse_box, parse_model, parse_param, parse_point, parse_range, parse_span, parse_tie, usage,
    Coords, UsageError,
};
use emit::{
    bounds_json, csv_bytes, equilibrium_json, equilibrium_row, json_bytes, num, params_json,
    EQUILIBRIUM_HEADER,
};

/// Bifurcation analysis of pitchfork normal forms and the toggle switch.
#[derive(Parser, Debug)]
#[command(name = "pitchfork", version, args_override_self = true)]
struct Cli {
    /// File of key=value lines that pre-populate flags; the command line wins.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate and classify equilibria in a box.
    Equilibria(EquilibriaCmd),
    /// Spectrum and class at one point, or the complex-transition threshold.
    Stability(StabilityCmd),
    /// Boundary inward check, index sum and winding degree for a box.
    Index(IndexCmd),
    /// Equilibria over a parameter range, assembled into branches.
    Sweep(SweepCmd),
    /// Integrate a trajectory with fixed-step RK4.
    Simulate(SimulateCmd),
    /// Sample the isoclines of the planar normal form.
    Isoclines(IsoclinesCmd),
    /// Compare the toggle's quadratic surrogate with the normal form.
    ToggleCompare(ToggleCompareCmd),
    /// Probe whether a fixed neighbourhood stays in the basin across a parameter grid.
    Uniformity(UniformityCmd),
}

const SUBCOMMANDS: [&str; 8] = [
    "equilibria",
    "stability",
    "index",
    "sweep",
    "simulate",
    "isoclines",
    "toggle-compare",
    "uniformity",
];

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// pitchfork1d, normal2d, normal2d-asym, toggle-general, toggle-sym or toggle-taylor
    #[arg(long, value_parser = parse_model)]
    model: ModelId,
    /// Parameter value NAME=VALUE; repeatable
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param, allow_hyphen_values = true)]
    params: Vec<(String, f64)>,
}

impl ModelArgs {
    fn params(&self) -> Params {
        self.params.iter().cloned().collect()
    }

    fn build(&self) -> Result<Model> {
        make_model(self.model, &self.params()).map_err(|e| UsageError(e.to_string()).into())
    }
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Newton seeds per axis
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Newton residual tolerance (max-norm)
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Roots closer than this (max-norm) are merged
    #[arg(long, default_value_t = DEDUP_RADIUS)]
    dedup_radius: f64,
    /// Seeds whose iterates leave the box scaled by this factor are dropped
    #[arg(long, default_value_t = 1.5)]
    escape_factor: f64,
    /// Keep only equilibria with nonnegative coordinates
    #[arg(long)]
    nonnegative: bool,
    /// Real parts within this of zero count as zero
    #[arg(long, default_value_t = DEFAULT_HYPERBOLICITY_TOL)]
    hyperbolicity_tol: f64,
}

impl SearchArgs {
    fn search(&self) -> Result<SearchOptions> {
        if self.grid < 2
            || !(self.tol > 0.0)
            || !(self.dedup_radius >= 0.0)
            || !(self.escape_factor >= 1.0)
        {
            return usage(
                "need --grid >= 2, --tol > 0, --dedup-radius >= 0 and --escape-factor >= 1",
            );
        }
        Ok(SearchOptions {
            grid: self.grid,
            tol: self.tol,
            max_iter: self.max_iter,
            dedup_radius: self.dedup_radius,
            escape_factor: self.escape_factor,
            nonnegative: self.nonnegative,
        })
    }

    fn sweep(&self) -> Result<SweepOptions> {
        Ok(SweepOptions {
            search: self.search()?,
            hyperbolicity_tol: self.hyperbolicity_tol,
        })
    }
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl OutputArgs {
    fn require(&self, allowed: &[Format]) -> Result<()> {
        if allowed.contains(&self.format) {
            Ok(())
        } else {
            usage(format!("--format {:?} is not available here", self.format).to_lowercase())
        }
    }

    fn write(&self, bytes: &[u8]) -> Result<()> {
        match &self.out {
            Some(path) => {
                fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }
}

#[derive(Args, Debug)]
struct EquilibriaCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Search box xlo,xhi,ylo,yhi (lo,hi in 1D)
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    bounds: Bounds,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct StabilityCmd {
    #[arg(long, value_parser = parse_model, default_value = "normal2d")]
    model: ModelId,
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param, allow_hyphen_values = true)]
    params: Vec<(String, f64)>,
    /// Point to analyse, x,y (or x in 1D)
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, required_unless_present = "threshold")]
    point: Option<Coords>,
    /// Report the parameter where the flanking eigenvalues turn complex
    #[arg(long, conflicts_with = "point")]
    threshold: bool,
    #[arg(long, default_value_t = DEFAULT_HYPERBOLICITY_TOL)]
    hyperbolicity_tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct IndexCmd {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    bounds: Bounds,
    /// Boundary samples per edge for the inward check
    #[arg(long, default_value_t = DEFAULT_EDGE_SAMPLES)]
    edge_samples: usize,
    /// Initial boundary samples per edge for the winding number
    #[arg(long, default_value_t = DEFAULT_EDGE_SAMPLES)]
    winding_samples: usize,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Swept parameter (defaults to the model's primary one)
    #[arg(long)]
    param_name: Option<String>,
    /// lo:hi:step
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    range: ParamRange,
    /// Keep NAME at the swept value plus OFFSET; repeatable
    #[arg(long = "tie", value_name = "NAME:OFFSET", value_parser = parse_tie, allow_hyphen_values = true)]
    ties: Vec<(String, f64)>,
    #[arg(long = "box", value_parser = parse_box, allow_hyphen_values = true)]
    bounds: Bounds,
    /// Branch matching tolerance (default: 5 x step)
    #[arg(long)]
    matching_tol: Option<f64>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateCmd {
    #[command(flatten)]
    model: ModelArgs,
    /// Initial state x,y (or x in 1D)
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    x0: Coords,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    /// Emit every N-th sample (the final one is always emitted)
    #[arg(long, default_value_t = 1)]
    every: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct IsoclinesCmd {
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
    /// x range lo:hi
    #[arg(long, value_parser = parse_span, allow_hyphen_values = true, default_value = "-1.5:1.5")]
    x_range: (f64, f64),
    /// y range lo:hi
    #[arg(long, value_parser = parse_span, allow_hyphen_values = true, default_value = "-1.5:1.5")]
    y_range: (f64, f64),
    /// Samples per curve
    #[arg(long, default_value_t = 201)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_HYPERBOLICITY_TOL)]
    hyperbolicity_tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ToggleCompareCmd {
    /// Hill coefficient of the surrogate
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    /// Normal-form parameter
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    /// Grid box in normal-form coordinates ulo,uhi,vlo,vhi
    #[arg(long, value_parser = parse_box, allow_hyphen_values = true, default_value = "-1,1,-1,1")]
    grid: Bounds,
    /// Grid points per axis
    #[arg(long, default_value_t = 21)]
    density: usize,
    /// Largest residual still counted as a match
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct UniformityCmd {
    #[arg(long, value_parser = parse_model, default_value = "normal2d")]
    model: ModelId,
    /// Fixed parameter values NAME=VALUE; repeatable
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param, allow_hyphen_values = true)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    param_name: Option<String>,
    /// Comma-separated parameter values to probe
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    values: Coords,
    /// Branch equilibrium, the same for every value (default: origin)
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    center: Option<Coords>,
    #[arg(long, default_value_t = 0.25)]
    radius: f64,
    /// Probe points per value (2D)
    #[arg(long, default_value_t = 16)]
    samples: usize,
    /// Distance counted as having returned
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn check_dims(model: &Model, bounds: &Bounds) -> Result<()> {
    if model.dimension() != bounds.dim() {
        return usage(format!(
            "{} is {}-dimensional but the box has {} axes",
            model.id(),
            model.dimension(),
            bounds.dim()
        ));
    }
    Ok(())
}

fn primary_value(model: &Model) -> f64 {
    model
        .param(model.id().primary_parameter())
        .unwrap_or(f64::NAN)
}

fn run_equilibria(cmd: &EquilibriaCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    let model = cmd.model.build()?;
    check_dims(&model, &cmd.bounds)?;
    let opts = cmd.search.sweep()?;
    let p = primary_value(&model);
    let found = find_equilibria_with(&model, &cmd.bounds, &opts.search)?;
    let classified = found
        .iter()
        .map(|e| classify_equilibrium(&model, e.location.clone(), opts.hyperbolicity_tol))
        .collect::<pitchfork_core::Result<Vec<_>>>()?;
    let bytes = match cmd.output.format {
        Format::Json => {
            let eqs: Vec<Value> = classified
                .iter()
                .zip(&found)
                .map(|(c, e)| {
                    let mut v = equilibrium_json(p, c);
                    v["residual"] = json!(e.residual);
                    v
                })
                .collect();
            json_bytes(
                "equilibria",
                json!({
                    "model": model.id().as_str(),
                    "params": params_json(model.params()),
                    "box": bounds_json(&cmd.bounds),
                    "equilibria": eqs,
                }),
            )?
        }
        _ => csv_bytes(
            &EQUILIBRIUM_HEADER,
            classified.iter().map(|c| equilibrium_row(p, c)),
        )?,
    };
    cmd.output.write(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run_stability(cmd: &StabilityCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    let Some(Coords(point)) = &cmd.point else {
        let t = complex_transition_threshold();
        let v = variant_formula_threshold();
        let bytes = match cmd.output.format {
            Format::Json => json_bytes(
                "stability",
                json!({
                    "complex_transition_threshold": t,
                    "variant_formula_threshold": v,
                    "note": FLANKING_FORMULA_NOTE,
                }),
            )?,
            _ => csv_bytes(
                &["quantity", "value"],
                [
                    vec!["complex_transition_threshold".into(), num(t)],
                    vec!["variant_formula_threshold".into(), num(v)],
                    vec!["note".into(), FLANKING_FORMULA_NOTE.into()],
                ],
            )?,
        };
        cmd.output.write(&bytes)?;
        return Ok(ExitCode::SUCCESS);
    };
    let model = make_model(cmd.model, &cmd.params.iter().cloned().collect())
        .map_err(|e| UsageError(e.to_string()))?;
    if point.len() != model.dimension() {
        return usage(format!("--point needs {} coordinates", model.dimension()));
    }
    let p = primary_value(&model);
    let c = classify_equilibrium(&model, Point::from(point.clone()), cmd.hyperbolicity_tol)?;
    let bytes = match cmd.output.format {
        Format::Json => {
            let j = model.jacobian(point)?;
            let n = j.dim();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|r| (0..n).map(|k| j.get(r, k)).collect())
                .collect();
            let spectrum = eigen(&j)?;
            let residual = model.evaluate(point)?.max_norm();
            json_bytes(
                "stability",
                json!({
                    "model": model.id().as_str(),
                    "params": params_json(model.params()),
                    "point": point,
                    "residual": residual,
                    "jacobian": rows,
                    "eigenvectors": spectrum.eigenvectors,
                    "equilibrium": equilibrium_json(p, &c),
                }),
            )?
        }
        _ => csv_bytes(&EQUILIBRIUM_HEADER, [equilibrium_row(p, &c)])?,
    };
    cmd.output.write(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run_index(cmd: &IndexCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    let model = cmd.model.build()?;
    check_dims(&model, &cmd.bounds)?;
    if model.dimension() != 2 {
        return usage("index analysis needs a planar model");
    }
    let opts = IndexOptions {
        edge_samples: cmd.edge_samples,
        winding_samples: cmd.winding_samples,
        search: cmd.search.search()?,
    };
    let report = verify_ph_with(&model, &cmd.bounds, &opts)?;
    let inward = if report.inward.pass { "pass" } else { "fail" };
    let ph = match report.ph_sum {
        IndexSum::Defined(v) => json!(v),
        IndexSum::Degenerate => json!("degenerate"),
    };
    let (winding, winding_note) = match &report.winding {
        Degree::Defined(v) => (json!(v), Value::Null),
        Degree::Undefined(why) => (json!("undefined"), json!(why.to_string())),
    };
    let bytes = match cmd.output.format {
        Format::Json => {
            let mut eqs = Vec::new();
            for e in &report.equilibria {
                let c =
                    classify_equilibrium(&model, e.location.clone(), cmd.search.hyperbolicity_tol)?;
                eqs.push(json!({
                    "x": e.location[0],
                    "y": e.location[1],
                    "class": c.kind().as_str(),
                    "sign_det": c.classification.sign_det,
                }));
            }
            let violations: Vec<Value> = report
                .inward
                .violations
                .iter()
                .map(|p| json!(p.coords()))
                .collect();
            json_bytes(
                "index",
                json!({
                    "model": model.id().as_str(),
                    "params": params_json(model.params()),
                    "box": bounds_json(&cmd.bounds),
                    "inward": inward,
                    "violations": violations,
                    "equilibria": eqs,
                    "ph_sum": ph,
                    "winding": winding,
                    "winding_note": winding_note,
                    "agree": report.agree,
                    "theorem_holds": report.theorem_holds,
                }),
            )?
        }
        _ => {
            let cell = |v: &Value| match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            csv_bytes(
                &[
                    "inward",
                    "violations",
                    "equilibria",
                    "ph_sum",
                    "winding",
                    "agree",
                    "theorem_holds",
                ],
                [vec![
                    inward.to_string(),
                    report.inward.violations.len().to_string(),
                    report.equilibria.len().to_string(),
                    cell(&ph),
                    cell(&winding),
                    report.agree.to_string(),
                    report
                        .theorem_holds
                        .map_or_else(String::new, |b| b.to_string()),
                ]],
            )?
        }
    };
    cmd.output.write(&bytes)?;
    if !report.is_consistent() {
        eprintln!("pitchfork: index report is not conclusive");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_sweep(cmd: &SweepCmd) -> Result<ExitCode> {
    let id = cmd.model.model;
    let name = cmd
        .param_name
        .clone()
        .unwrap_or_else(|| id.primary_parameter().to_string());
    let mut family = Family::new(id, cmd.model.params(), name.clone());
    for (tie, offset) in &cmd.ties {
        family = family.tie(tie.clone(), *offset);
    }
    let first = family
        .at(cmd.range.lo)
        .map_err(|e| UsageError(e.to_string()))?;
    check_dims(&first, &cmd.bounds)?;
    let opts = cmd.search.sweep()?;
    let records = sweep_values(&family, &cmd.range.values(), &cmd.bounds, &opts)?;
    let tol = cmd
        .matching_tol
        .unwrap_or_else(|| default_matching_tol(cmd.range.step));
    let set = assemble_branches(&records, tol);

    let key = |param: f64, p: &Point| {
        (
            param.to_bits(),
            p.iter().map(|c| c.to_bits()).collect::<Vec<_>>(),
        )
    };
    let mut branch_of = HashMap::new();
    for (i, b) in set.branches.iter().enumerate() {
        for bp in &b.points {
            branch_of.insert(key(bp.param, &bp.location), i);
        }
    }

    let bytes = match cmd.output.format {
        Format::Csv => {
            let mut header = EQUILIBRIUM_HEADER.to_vec();
            header.push("branch");
            let rows = records.iter().flat_map(|r| {
                r.equilibria.iter().map(|e| {
                    let mut row = equilibrium_row(r.param, e);
                    row.push(branch_of[&key(r.param, &e.location)].to_string());
                    row
                })
            });
            csv_bytes(&header, rows.collect::<Vec<_>>())?
        }
        Format::Json => {
            let recs: Vec<Value> = records
                .iter()
                .map(|r| {
                    json!({
                        "param": r.param,
                        "equilibria": r.equilibria.iter().map(|e| {
                            let mut v = equilibrium_json(r.param, e);
                            v["branch"] = json!(branch_of[&key(r.param, &e.location)]);
                            v
                        }).collect::<Vec<_>>(),
                    })
                })
                .collect();
            let branches: Vec<Value> = set
                .branches
                .iter()
                .map(|b| {
                    json!(b
                        .points
                        .iter()
                        .map(|p| json!({
                            "param": p.param,
                            "location": p.location.coords(),
                            "class": p.classification.kind.as_str(),
                        }))
                        .collect::<Vec<_>>())
                })
                .collect();
            let ambiguities: Vec<Value> = set
                .ambiguities
                .iter()
                .map(|a| json!({"param": a.param, "location": a.location.coords()}))
                .collect();
            json_bytes(
                "sweep",
                json!({
                    "model": id.as_str(),
                    "params": params_json(&cmd.model.params()),
                    "param_name": name,
                    "ties": cmd.ties.iter().map(|(n, o)| json!({"name": n, "offset": o})).collect::<Vec<_>>(),
                    "range": {"lo": cmd.range.lo, "hi": cmd.range.hi, "step": cmd.range.step},
                    "box": bounds_json(&cmd.bounds),
                    "matching_tol": tol,
                    "records": recs,
                    "branches": branches,
                    "ambiguities": ambiguities,
                }),
            )?
        }
        Format::Svg => {
            let ys: Vec<f64> = records
                .iter()
                .flat_map(|r| r.equilibria.iter().map(|e| e.location[0]))
                .collect();
            let (ylo, yhi) = if ys.is_empty() {
                (cmd.bounds.lower()[0], cmd.bounds.upper()[0])
            } else {
                (
                    ys.iter().copied().fold(f64::INFINITY, f64::min),
                    ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                )
            };
            let mut plot = svg::Plot::new((cmd.range.lo, cmd.range.hi), (ylo, yhi), false);
            for b in &set.branches {
                let pts: Vec<[f64; 2]> =
                    b.points.iter().map(|p| [p.param, p.location[0]]).collect();
                plot.polyline(&pts, "#444444");
            }
            for r in &records {
                for e in &r.equilibria {
                    plot.marker([r.param, e.location[0]], e.kind());
                }
            }
            plot.finish(&format!("{id}: equilibria against {name}"), &name, "x")
                .into_bytes()
        }
    };
    cmd.output.write(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run_simulate(cmd: &SimulateCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    let model = cmd.model.build()?;
    if cmd.x0.0.len() != model.dimension() {
        return usage(format!("--x0 needs {} coordinates", model.dimension()));
    }
    if !(cmd.t_max > 0.0) || !(cmd.dt > 0.0) || cmd.every == 0 {
        return usage("need --t-max > 0, --dt > 0 and --every >= 1");
    }
    let traj = integrate(&model, &cmd.x0.0, cmd.t_max, cmd.dt)?;
    let last = traj.len() - 1;
    let keep: Vec<usize> = (0..traj.len())
        .filter(|i| i % cmd.every == 0 || *i == last)
        .collect();
    let bytes = match cmd.output.format {
        Format::Json => json_bytes(
            "simulate",
            json!({
                "model": model.id().as_str(),
                "params": params_json(model.params()),
                "dt": cmd.dt,
                "divergent": traj.divergent,
                "times": keep.iter().map(|&i| traj.times[i]).collect::<Vec<_>>(),
                "states": keep.iter().map(|&i| traj.states[i].coords().to_vec()).collect::<Vec<_>>(),
            }),
        )?,
        _ => {
            let header: &[&str] = if model.dimension() == 1 {
                &["t", "x"]
            } else {
                &["t", "x", "y"]
            };
            csv_bytes(
                header,
                keep.iter().map(|&i| {
                    std::iter::once(num(traj.times[i]))
                        .chain(traj.states[i].iter().map(|c| num(*c)))
                        .collect()
                }),
            )?
        }
    };
    cmd.output.write(&bytes)?;
    if traj.divergent {
        eprintln!("pitchfork: trajectory diverged at t = {}", traj.times[last]);
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_isoclines(cmd: &IsoclinesCmd) -> Result<ExitCode> {
    if cmd.count < 2 {
        return usage("--count must be at least 2");
    }
    let iso = isocline_sample(cmd.a, cmd.y_range, cmd.x_range, cmd.count)?;
    let model = Model::normal2d(cmd.a);
    let view = Bounds::rect(cmd.x_range.0, cmd.x_range.1, cmd.y_range.0, cmd.y_range.1)?;
    let mut markers = Vec::new();
    for e in closed_form_equilibria(cmd.a).points {
        if view.contains(&e.location) {
            markers.push(classify_equilibrium(
                &model,
                e.location,
                cmd.hyperbolicity_tol,
            )?);
        }
    }
    let bytes = match cmd.output.format {
        Format::Svg => {
            let mut plot = svg::Plot::new(cmd.x_range, cmd.y_range, true);
            plot.polyline(&iso.x_nullcline, "#2ca02c");
            plot.polyline(&iso.y_nullcline, "#8c564b");
            for m in &markers {
                plot.marker([m.location[0], m.location[1]], m.kind());
            }
            plot.finish(
                &format!("isoclines of the normal form, a = {}", cmd.a),
                "x",
                "y",
            )
            .into_bytes()
        }
        Format::Json => json_bytes(
            "isoclines",
            json!({
                "a": cmd.a,
                "x_nullcline": iso.x_nullcline,
                "y_nullcline": iso.y_nullcline,
                "equilibria": markers.iter().map(|m| equilibrium_json(cmd.a, m)).collect::<Vec<_>>(),
            }),
        )?,
        Format::Csv => {
            let rows = iso
                .x_nullcline
                .iter()
                .map(|p| ("x-nullcline", p))
                .chain(iso.y_nullcline.iter().map(|p| ("y-nullcline", p)))
                .map(|(c, p)| vec![c.to_string(), num(p[0]), num(p[1])]);
            csv_bytes(&["curve", "x", "y"], rows.collect::<Vec<_>>())?
        }
    };
    cmd.output.write(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run_toggle_compare(cmd: &ToggleCompareCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    if cmd.grid.dim() != 2 || cmd.density < 2 || !(cmd.m >= 0.0) {
        return usage("need a planar --grid, --density >= 2 and --m >= 0");
    }
    let r = correspondence_residual(cmd.m, cmd.a, &cmd.grid, cmd.density)?;
    let matches = r <= cmd.tol;
    let bytes = match cmd.output.format {
        Format::Json => json_bytes(
            "toggle-compare",
            json!({
                "m": cmd.m,
                "a": cmd.a,
                "grid": bounds_json(&cmd.grid),
                "density": cmd.density,
                "max_residual": r,
                "tol": cmd.tol,
                "matches": matches,
            }),
        )?,
        _ => csv_bytes(
            &["m", "a", "density", "max_residual", "matches"],
            [vec![
                num(cmd.m),
                num(cmd.a),
                cmd.density.to_string(),
                num(r),
                matches.to_string(),
            ]],
        )?,
    };
    cmd.output.write(&bytes)?;
    Ok(if matches {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run_uniformity(cmd: &UniformityCmd) -> Result<ExitCode> {
    cmd.output.require(&[Format::Csv, Format::Json])?;
    if cmd.values.0.is_empty() {
        return usage("--values needs at least one parameter value");
    }
    let name = cmd
        .param_name
        .clone()
        .unwrap_or_else(|| cmd.model.primary_parameter().to_string());
    let family = Family::new(
        cmd.model,
        cmd.params.iter().cloned().collect(),
        name.clone(),
    );
    let dim = cmd.model.dimension();
    let center = Point::from(cmd.center.clone().map_or_else(|| vec![0.0; dim], |c| c.0));
    if center.dim() != dim {
        return usage(format!("--center needs {dim} coordinates"));
    }
    let settings = ProbeSettings {
        radius: cmd.radius,
        samples: cmd.samples,
        tol: cmd.tol,
        t_max: cmd.t_max,
        dt: cmd.dt,
    };
    let report = uniformity_probe(&family, &cmd.values.0, |_| center.clone(), &settings)
        .map_err(|e| UsageError(e.to_string()))?;
    let bytes = match cmd.output.format {
        Format::Json => json_bytes(
            "uniformity",
            json!({
                "model": cmd.model.as_str(),
                "param_name": name,
                "values": report.param_grid,
                "center": center.coords(),
                "radius": report.radius,
                "sample_count": report.sample_count,
                "failures": report.failures.iter().map(|(p, x)| json!({"param": p, "start": x.coords()})).collect::<Vec<_>>(),
                "verdict": report.verdict.as_str(),
            }),
        )?,
        _ => csv_bytes(
            &["verdict", "radius", "sample_count", "failure_count"],
            [vec![
                report.verdict.as_str().to_string(),
                num(report.radius),
                report.sample_count.to_string(),
                report.failures.len().to_string(),
            ]],
        )?,
    };
    cmd.output.write(&bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Equilibria(c) => run_equilibria(c),
        Command::Stability(c) => run_stability(c),
        Command::Index(c) => run_index(c),
        Command::Sweep(c) => run_sweep(c),
        Command::Simulate(c) => run_simulate(c),
        Command::Isoclines(c) => run_isoclines(c),
        Command::ToggleCompare(c) => run_toggle_compare(c),
        Command::Uniformity(c) => run_uniformity(c),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match args::expand_config(argv, &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let parsed = Cli::command()
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let rendered = e.render().to_string();
            eprintln!(
                "{}",
                rendered
                    .lines()
                    .next()
                    .unwrap_or("error: invalid arguments")
            );
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
