use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use pitchfork_core::bifurcation::ParamRange;
use pitchfork_core::{Bounds, ModelId};

/// Usage problems that surface after clap has accepted the command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(UsageError(msg.into()).into())
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn numbers(s: &str, sep: char) -> Result<Vec<f64>, String> {
    s.split(sep).map(number).collect()
}

pub fn parse_model(s: &str) -> Result<ModelId, String> {
    s.parse().map_err(|e: pitchfork_core::Error| e.to_string())
}

pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    Ok((k.trim().to_string(), number(v)?))
}

pub fn parse_tie(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once(':')
        .ok_or_else(|| format!("expected NAME:OFFSET, got `{s}`"))?;
    Ok((k.trim().to_string(), number(v)?))
}

/// `lo,hi` for an interval or `xlo,xhi,ylo,yhi` for a rectangle.
pub fn parse_box(s: &str) -> Result<Bounds, String> {
    let v = numbers(s, ',')?;
    let b = match v.as_slice() {
        [lo, hi] => Bounds::interval(*lo, *hi),
        [xlo, xhi, ylo, yhi] => Bounds::rect(*xlo, *xhi, *ylo, *yhi),
        _ => return Err(format!("expected lo,hi or xlo,xhi,ylo,yhi, got `{s}`")),
    };
    b.map_err(|e| e.to_string())
}

pub fn parse_range(s: &str) -> Result<ParamRange, String> {
    match numbers(s, ':')?.as_slice() {
        [lo, hi, step] => ParamRange::new(*lo, *hi, *step).map_err(|e| e.to_string()),
        _ => Err(format!("expected lo:hi:step, got `{s}`")),
    }
}

pub fn parse_span(s: &str) -> Result<(f64, f64), String> {
    match numbers(s, ':')?.as_slice() {
        [lo, hi] if lo < hi => Ok((*lo, *hi)),
        _ => Err(format!("expected lo:hi with lo < hi, got `{s}`")),
    }
}

/// A comma-separated list of coordinates or values.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

pub fn parse_point(s: &str) -> Result<Coords, String> {
    numbers(s, ',').map(Coords)
}

/// Splices `key=value` lines from the file named by `--config` into argv
/// right after the subcommand, so that flags given on the command line,
/// coming later, take precedence.
pub fn expand_config(argv: Vec<String>, subcommands: &[&str]) -> anyhow::Result<Vec<String>> {
    let mut path = None;
    for (i, a) in argv.iter().enumerate().skip(1) {
        if a == "--" {
            break;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            match argv.get(i + 1) {
                Some(p) => path = Some(p.clone()),
                None => return usage("--config needs a path"),
            }
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let extra = match read_config(Path::new(&path)) {
        Ok(extra) => extra,
        Err(e) => return usage(format!("config {path}: {e:#}")),
    };
    let Some(at) = argv.iter().position(|a| subcommands.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let mut out = argv[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

fn read_config(path: &Path) -> anyhow::Result<Vec<String>> {
    let text = fs::read_to_string(path).context("cannot read file")?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value", n + 1);
        };
        let key = key.trim();
        if key == "config" {
            bail!("line {}: nested config files are not supported", n + 1);
        }
        let value = value.trim();
        if value == "true" {
            flags.push(format!("--{key}"));
        } else {
            flags.push(format!("--{key}={value}"));
        }
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsers() {
        assert_eq!(parse_param("a=3").unwrap(), ("a".into(), 3.0));
        assert!(parse_param("a").is_err());
        assert!(parse_param("a=x").is_err());
        assert_eq!(parse_tie("b:0.1").unwrap(), ("b".into(), 0.1));
        let b = parse_box("-2,5,-2,5").unwrap();
        assert_eq!(b.lower().coords(), [-2.0, -2.0]);
        assert_eq!(parse_box("-2,2").unwrap().dim(), 1);
        assert!(parse_box("1,2,3").is_err());
        assert!(parse_box("2,1,0,1").is_err());
        assert_eq!(parse_range("0.5:1.5:0.1").unwrap().values().len(), 11);
        assert!(parse_range("1:0:0.1").is_err());
        assert_eq!(parse_span("-1:1").unwrap(), (-1.0, 1.0));
        assert!(parse_point("1,nan").is_err());
        assert_eq!(parse_point("-1,2").unwrap(), Coords(vec![-1.0, 2.0]));
    }

    #[test]
    fn config_lands_after_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(
            &path,
            "# defaults\nmodel = normal2d\nparam=a=2\n\nnonnegative=true\n",
        )
        .unwrap();
        let argv: Vec<String> = [
            "pitchfork",
            "equilibria",
            "--config",
            path.to_str().unwrap(),
            "--param",
            "a=3",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let out = expand_config(argv, &["equilibria"]).unwrap();
        assert_eq!(
            out[..5],
            [
                "pitchfork",
                "equilibria",
                "--model=normal2d",
                "--param=a=2",
                "--nonnegative"
            ]
        );
        assert_eq!(out.last().unwrap(), "a=3");

        let missing = vec![
            "pitchfork".to_string(),
            "sweep".into(),
            "--config=/nonexistent/x".into(),
        ];
        assert!(expand_config(missing, &["sweep"]).is_err());
    }
}
