use anyhow::Result;
use pitchfork_core::bifurcation::ClassifiedEquilibrium;
use pitchfork_core::{Bounds, Params, Point};
use serde_json::{json, Map, Value};

pub const EQUILIBRIUM_HEADER: [&str; 9] = [
    "param", "x", "y", "class", "eig1_re", "eig1_im", "eig2_re", "eig2_im", "sign_det",
];

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn coord(p: &Point, i: usize) -> String {
    p.coords().get(i).map_or_else(String::new, |v| num(*v))
}

pub fn equilibrium_row(param: f64, e: &ClassifiedEquilibrium) -> Vec<String> {
    let eig = |i: usize, im: bool| {
        e.eigenvalues
            .get(i)
            .map_or_else(String::new, |l| num(if im { l.im } else { l.re }))
    };
    vec![
        num(param),
        coord(&e.location, 0),
        coord(&e.location, 1),
        e.kind().as_str().to_string(),
        eig(0, false),
        eig(0, true),
        eig(1, false),
        eig(1, true),
        e.classification.sign_det.to_string(),
    ]
}

pub fn equilibrium_json(param: f64, e: &ClassifiedEquilibrium) -> Value {
    let mut obj = Map::new();
    obj.insert("param".into(), json!(param));
    obj.insert("x".into(), json!(e.location[0]));
    if e.location.dim() > 1 {
        obj.insert("y".into(), json!(e.location[1]));
    }
    obj.insert("class".into(), json!(e.kind().as_str()));
    obj.insert(
        "eigenvalues".into(),
        e.eigenvalues.iter().map(|l| json!([l.re, l.im])).collect(),
    );
    obj.insert("sign_det".into(), json!(e.classification.sign_det));
    obj.insert(
        "unstable_count".into(),
        json!(e.classification.unstable_count),
    );
    Value::Object(obj)
}

pub fn params_json(params: &Params) -> Value {
    Value::Object(
        params
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect(),
    )
}

pub fn bounds_json(b: &Bounds) -> Value {
    json!({ "lower": b.lower().coords(), "upper": b.upper().coords() })
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner()?)
}

/// Pretty JSON with `schema_version` and `command` added, newline-terminated.
pub fn json_bytes(command: &str, body: Value) -> Result<Vec<u8>> {
    let mut obj = match body {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other);
            m
        }
    };
    obj.insert("schema_version".into(), json!(1));
    obj.insert("command".into(), json!(command));
    let mut out = serde_json::to_vec_pretty(&Value::Object(obj))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1.0 + 3f64.sqrt(), 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn empty_table_is_header_only() {
        let bytes = csv_bytes(&EQUILIBRIUM_HEADER, Vec::<Vec<String>>::new()).unwrap();
        assert_eq!(
            bytes,
            b"param,x,y,class,eig1_re,eig1_im,eig2_re,eig2_im,sign_det\n"
        );
    }

    #[test]
    fn json_envelope() {
        let bytes = json_bytes("index", json!({"ph_sum": 1})).unwrap();
        let v: Value = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["command"], "index");
        assert_eq!(v["ph_sum"], 1);
    }
}
