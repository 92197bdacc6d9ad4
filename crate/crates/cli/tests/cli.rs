use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn pitchfork(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pitchfork"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn equilibria_csv_example() {
    let o = pitchfork(&[
        "equilibria",
        "--model",
        "normal2d",
        "--param",
        "a=3",
        "--box=-2,5,-2,5",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "param,x,y,class,eig1_re,eig1_im,eig2_re,eig2_im,sign_det"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let classes: Vec<&str> = rows.iter().map(|r| r[3]).collect();
    assert_eq!(classes, ["sink", "saddle", "sink", "saddle"]);
    let r3 = 3f64.sqrt();
    let x: f64 = rows[2][1].parse().unwrap();
    assert!((x - (1.0 + r3)).abs() < 1e-9);
}

#[test]
fn csv_and_json_carry_the_same_numbers() {
    let base = [
        "equilibria",
        "--model",
        "toggle-sym",
        "--param",
        "m=3",
        "--box=0,4,0,4",
    ];
    let csv_out = pitchfork(&[&base[..], &["--format", "csv"]].concat());
    let json_out = pitchfork(&[&base[..], &["--format", "json"]].concat());
    let doc = json(&json_out);
    assert_eq!(doc["schema_version"], 1);
    let eqs = doc["equilibria"].as_array().unwrap();
    let text = stdout(&csv_out);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [1, 2, 4, 5, 6, 7]
                .iter()
                .map(|&i| f[i].parse().unwrap())
                .collect()
        })
        .collect();
    assert_eq!(rows.len(), eqs.len());
    for (row, e) in rows.iter().zip(eqs) {
        let ev = e["eigenvalues"].as_array().unwrap();
        let from_json = [
            e["x"].as_f64().unwrap(),
            e["y"].as_f64().unwrap(),
            ev[0][0].as_f64().unwrap(),
            ev[0][1].as_f64().unwrap(),
            ev[1][0].as_f64().unwrap(),
            ev[1][1].as_f64().unwrap(),
        ];
        for (a, b) in row.iter().zip(from_json) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec![
            "equilibria",
            "--model",
            "normal2d",
            "--box=-1,1,-1,1",
            "--frobnicate",
        ],
        vec!["equilibria", "--model", "normal2d", "--param", "a=1"],
        vec![
            "equilibria",
            "--model",
            "bogus",
            "--param",
            "a=1",
            "--box=-1,1,-1,1",
        ],
        vec![
            "equilibria",
            "--model",
            "normal2d",
            "--param",
            "q=1",
            "--box=-1,1,-1,1",
        ],
        vec![
            "equilibria",
            "--model",
            "normal2d",
            "--param",
            "a=1",
            "--box=-1,1",
        ],
        vec![
            "sweep",
            "--model",
            "normal2d",
            "--range",
            "1:0:0.1",
            "--box=-1,1,-1,1",
        ],
        vec![
            "simulate", "--model", "normal2d", "--param", "a=1", "--x0", "1",
        ],
        vec![
            "equilibria",
            "--model",
            "normal2d",
            "--param",
            "a=1",
            "--box=-1,1,-1,1",
            "--format",
            "svg",
        ],
        vec!["nonsense"],
    ] {
        let o = pitchfork(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}

#[test]
fn every_subcommand_has_help() {
    for (sub, flag) in [
        ("equilibria", "--box"),
        ("stability", "--threshold"),
        ("index", "--winding-samples"),
        ("sweep", "--matching-tol"),
        ("simulate", "--t-max"),
        ("isoclines", "--x-range"),
        ("toggle-compare", "--density"),
        ("uniformity", "--radius"),
    ] {
        let o = pitchfork(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        assert!(text.contains(flag), "{sub} help lacks {flag}");
        assert!(text.contains("--config") && text.contains("--out"), "{sub}");
    }
}

#[test]
fn index_reports() {
    let o = pitchfork(&[
        "index",
        "--model",
        "normal2d",
        "--param",
        "a=0.5",
        "--box=-0.4,0.4,-0.4,0.4",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["inward"], "pass");
    assert_eq!(doc["ph_sum"], 1);
    assert_eq!(doc["winding"], 1);
    assert_eq!(doc["agree"], true);
    assert_eq!(doc["theorem_holds"], true);

    // tangent corners fail the strict inward test; the counts still agree
    let o = pitchfork(&[
        "index",
        "--model",
        "normal2d",
        "--param",
        "a=0.5",
        "--box=-0.5,0.5,-0.5,0.5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["inward"], "fail");
    assert_eq!(doc["violations"].as_array().unwrap().len(), 2);
    assert_eq!(doc["agree"], true);

    // degenerate origin: report emitted, exit 1
    let o = pitchfork(&[
        "index",
        "--model",
        "normal2d",
        "--param",
        "a=1",
        "--box=-0.5,0.5,-0.5,0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.starts_with("inward,violations,equilibria,ph_sum,winding,agree,theorem_holds\n"));
    assert!(text.contains("degenerate"));
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("p.svg");
    let o = pitchfork(&[
        "sweep",
        "--model",
        "normal2d",
        "--range",
        "0.5:1.5:0.05",
        "--box=-1.5,1.5,-1.5,1.5",
        "--format",
        "svg",
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let doc = fs::read_to_string(&svg).unwrap();
    assert!(doc.contains(r#"viewBox="0 0 800 600""#));
    assert_eq!(doc.matches("<polyline").count(), 3);
    assert!(doc.contains(r#"class="saddle""#) && doc.contains(r#"class="sink""#));
    assert!(!doc.contains("<path"));

    let o = pitchfork(&[
        "sweep",
        "--model",
        "normal2d",
        "--range",
        "0.5:1.5:0.25",
        "--box=-1.5,1.5,-1.5,1.5",
        "--format",
        "json",
    ]);
    let doc = json(&o);
    let counts: Vec<usize> = doc["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["equilibria"].as_array().unwrap().len())
        .collect();
    assert_eq!(counts, [1, 1, 1, 3, 3]);
    assert_eq!(doc["branches"].as_array().unwrap().len(), 3);

    // no equilibria in the box: header only
    let o = pitchfork(&[
        "sweep",
        "--model",
        "normal2d",
        "--range",
        "0.5:0.7:0.1",
        "--box=10,11,10,11",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "param,x,y,class,eig1_re,eig1_im,eig2_re,eig2_im,sign_det,branch\n"
    );

    // tied second parameter
    let o = pitchfork(&[
        "sweep",
        "--model",
        "normal2d-asym",
        "--range",
        "0.5:0.6:0.1",
        "--tie",
        "b:0.1",
        "--box=-1.5,1.5,-1.5,1.5",
        "--format",
        "json",
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&o)["ties"][0]["offset"], 0.1);
}

#[test]
fn stability_threshold_carries_the_note() {
    let o = pitchfork(&["stability", "--threshold"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("complex_transition_threshold,1.236067977"));
    assert!(text.contains("suspected typo"));

    let o = pitchfork(&[
        "stability",
        "--model",
        "normal2d",
        "--param",
        "a=3",
        "--point",
        "0,0",
        "--format",
        "json",
    ]);
    let doc = json(&o);
    assert_eq!(doc["equilibrium"]["class"], "saddle");
    assert_eq!(
        doc["jacobian"],
        serde_json::json!([[-1.0, -3.0], [-3.0, -1.0]])
    );
}

#[test]
fn toggle_compare_and_control() {
    let o = pitchfork(&[
        "toggle-compare",
        "--m",
        "2",
        "--grid=-1,1,-1,1",
        "--density",
        "21",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let r: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(3)
        .unwrap()
        .parse()
        .unwrap();
    assert!(r <= 1e-12);

    let o = pitchfork(&[
        "toggle-compare",
        "--m",
        "2",
        "--a",
        "1.5",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!((json(&o)["max_residual"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn simulate_and_isoclines() {
    let o = pitchfork(&[
        "simulate",
        "--model",
        "pitchfork1d",
        "--param",
        "mu=0.25",
        "--x0",
        "0.1",
        "--t-max",
        "50",
        "--every",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("t,x\n"));
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[0], 50.0);
    assert!((last[1] - 0.5).abs() < 1e-6);

    let o = pitchfork(&[
        "simulate", "--model", "normal2d", "--param", "a=0", "--x0", "5,5", "--t-max", "50",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = pitchfork(&["isoclines", "--a", "1", "--format", "svg"]);
    let doc = stdout(&o);
    assert_eq!(doc.matches("<polyline").count(), 2);
    assert!(doc.contains(r#"class="degenerate""#));

    let o = pitchfork(&[
        "isoclines",
        "--a",
        "0",
        "--x-range",
        "0:1",
        "--y-range",
        "0:1",
        "--count",
        "2",
        "--format",
        "json",
    ]);
    assert_eq!(json(&o)["x_nullcline"][1], serde_json::json!([1.0, 1.0]));
}

#[test]
fn uniformity_verdicts() {
    let o = pitchfork(&[
        "uniformity",
        "--values",
        "0.2,0.5,0.8,0.95",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let doc = json(&o);
    assert_eq!(doc["verdict"], "uniform");
    assert_eq!(doc["sample_count"], 64);

    let o = pitchfork(&["uniformity", "--values", "0.5,1.05"]);
    assert!(stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("non-uniform,"));
}

#[test]
fn config_file_with_argv_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "model=normal2d\nparam=a=0.5\nbox=-2,5,-2,5\nformat=json\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = pitchfork(&["equilibria", "--config", cfg]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(json(&o)["params"]["a"], 0.5);

    let o = pitchfork(&[
        "equilibria",
        "--config",
        cfg,
        "--param",
        "a=3",
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);

    let o = pitchfork(&["equilibria", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_is_a_failure() {
    let o = pitchfork(&[
        "equilibria",
        "--model",
        "normal2d",
        "--param",
        "a=3",
        "--box=-2,5,-2,5",
        "--out",
        "/nonexistent/dir/out.csv",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
