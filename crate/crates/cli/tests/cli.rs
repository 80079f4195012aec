use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kkit_cli::files::{parse_body, BodySpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn kkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kkit"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .env_remove("KKIT_THREADS")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: {}\n{}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

const CLASSIFY: &[(&str, &str, i32, &str)] = &[
    ("ellipsoid.json", "region_xy.json", 0, "ellipsoid"),
    ("box.json", "region_xy_wide.json", 0, "cylinder"),
    ("truncated_cylinder.json", "region_xy.json", 0, "cylinder"),
    ("p4_ball.json", "region_tilted.json", 2, "non_kakutani"),
];

#[test]
fn classify_exit_codes_and_verdicts() {
    for (body, region, code, verdict) in CLASSIFY {
        let out = kkit(&[
            "classify",
            &format!("fixtures/{body}"),
            "--region",
            &format!("fixtures/{region}"),
        ]);
        assert_eq!(out.status.code(), Some(*code), "{body}");
        let rep = report(&out);
        assert_eq!(rep["verdict"], *verdict, "{body}");
        assert!(rep["timings"].is_null());
        for key in ["witness", "diagnostics", "config_echo"] {
            assert!(rep.get(key).is_some(), "{body}: {key}");
        }
    }
}

#[test]
fn classify_witnesses_carry_the_recovered_data() {
    let rep = report(&kkit(&[
        "classify",
        "fixtures/ellipsoid.json",
        "--region",
        "fixtures/region_xy.json",
    ]));
    let q = [[2.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 1.5]];
    for (i, row) in q.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            assert!((rep["witness"]["form"][i][j].as_f64().unwrap() - x).abs() <= 1e-6);
        }
    }
    let rep = report(&kkit(&[
        "classify",
        "fixtures/box.json",
        "--region",
        "fixtures/region_xy_wide.json",
    ]));
    let g: Vec<f64> = rep["witness"]["generatrix"][0]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!(
        g[0].abs() <= 1e-9 && g[1].abs() <= 1e-9 && (g[2] - 1.0).abs() <= 1e-9,
        "{g:?}"
    );
    let rep = report(&kkit(&[
        "classify",
        "fixtures/p4_ball.json",
        "--region",
        "fixtures/region_tilted.json",
    ]));
    assert!(rep["witness"]["violation"].as_f64().unwrap() >= 1e-3);
    assert_eq!(rep["witness"]["plane"].as_array().unwrap().len(), 2);
}

#[test]
fn banach_exit_codes() {
    let cases = [
        ("ellipsoid.json", "region_xy.json", 0, "ellipsoid"),
        ("box.json", "region_xy_wide.json", 0, "cylinder"),
        ("ball_cut_by_slab.json", "region_mixed.json", 1, "hypothesis_failed"),
    ];
    for (body, region, code, verdict) in cases {
        let out = kkit(&[
            "banach",
            &format!("fixtures/{body}"),
            "--region",
            &format!("fixtures/{region}"),
        ]);
        assert_eq!(out.status.code(), Some(code), "{body}");
        let rep = report(&out);
        assert_eq!(rep["verdict"], verdict);
        if code == 1 {
            assert_eq!(rep["witness"]["planes"].as_array().unwrap().len(), 2);
            assert!(rep["witness"]["residual"].as_f64().unwrap() > rep["witness"]["tol"].as_f64().unwrap());
        } else {
            assert!(rep["diagnostics"]["hypothesis"]["worst_residual"].as_f64().unwrap() <= 1e-6);
        }
    }
}

#[test]
fn contract_reports_direction_and_violation() {
    let out = kkit(&[
        "contract",
        "fixtures/box.json",
        "--plane",
        "fixtures/plane_xy.json",
        "--direction",
        "fixtures/direction_z.json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = kkit(&[
        "contract",
        "fixtures/box.json",
        "--plane",
        "fixtures/plane_xy.json",
        "--direction",
        "fixtures/direction_oblique.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!((report(&out)["witness"]["violation"].as_f64().unwrap() - 0.5).abs() <= 1e-9);
    let out = kkit(&[
        "contract",
        "fixtures/p4_ball.json",
        "--plane",
        "fixtures/plane_tilted.json",
        "--direction",
        "fixtures/direction_z.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = report(&out)["witness"]["violation"].as_f64().unwrap();
    assert!((v - 2.02e-3).abs() <= 1e-5, "{v}");
    let out = kkit(&[
        "contract",
        "fixtures/ellipsoid.json",
        "--plane",
        "fixtures/plane_xy.json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["witness"]["multiplicity"], 1);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut runs: Vec<Vec<String>> = CLASSIFY
        .iter()
        .map(|(b, r, _, _)| {
            vec![
                "classify".into(),
                format!("fixtures/{b}"),
                "--region".into(),
                format!("fixtures/{r}"),
            ]
        })
        .collect();
    runs.push(vec![
        "banach".into(),
        "fixtures/box.json".into(),
        "--region".into(),
        "fixtures/region_xy_wide.json".into(),
    ]);
    runs.push(vec![
        "contract".into(),
        "fixtures/p4_ball.json".into(),
        "--plane".into(),
        "fixtures/plane_tilted.json".into(),
    ]);
    for (i, args) in runs.iter().enumerate() {
        let mut texts = Vec::new();
        for (run, threads) in [(0, "1"), (1, "1"), (2, "4")] {
            let path = dir.path().join(format!("r{i}_{run}.json"));
            let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
            let p = path.to_str().unwrap().to_string();
            a.extend(["--seed", "7", "--report", &p]);
            let out = Command::new(env!("CARGO_BIN_EXE_kkit"))
                .args(&a)
                .current_dir(env!("CARGO_MANIFEST_DIR"))
                .env("KKIT_THREADS", threads)
                .output()
                .unwrap();
            assert!(out.stdout.is_empty());
            let text = std::fs::read_to_string(&path).unwrap();
            texts.push((threads, text));
        }
        assert_eq!(texts[0].1, texts[1].1, "{args:?}");
        // apart from the echoed thread count, worker count does not change the report
        let strip = |s: &str| s.replace("\"threads\": 4", "\"threads\": 1");
        assert_eq!(strip(&texts[2].1), texts[0].1, "{args:?}");
    }
}

#[test]
fn body_files_round_trip() {
    let mut g = ChaCha8Rng::seed_from_u64(3);
    for name in [
        "ellipsoid.json",
        "box.json",
        "p4_ball.json",
        "truncated_cylinder.json",
        "ball_cut_by_slab.json",
        "ball.json",
    ] {
        let text = std::fs::read_to_string(fixture(name)).unwrap();
        let body = parse_body(&text).unwrap();
        let again = serde_json::to_string(&BodySpec::from_body(&body)).unwrap();
        let back = parse_body(&again).unwrap();
        for _ in 0..1000 {
            let v = kkit_core::linalg::Vector::from_fn(body.dim(), |_, _| g.sample::<f64, _>(StandardNormal));
            let (a, b) = (body.gauge(&v), back.gauge(&v));
            assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{name}: {a} vs {b}");
        }
    }
}

fn polylines(svg: &str) -> Vec<(String, usize)> {
    svg.lines()
        .filter(|l| l.contains("<polyline"))
        .map(|l| {
            let class = l
                .split("class=\"")
                .nth(1)
                .unwrap()
                .split('"')
                .next()
                .unwrap()
                .to_string();
            let points = l.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
            (class, points.split_whitespace().count())
        })
        .collect()
}

fn section(body: &str, plane: &str) -> (Value, String) {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("s.svg");
    let out = kkit(&[
        "section",
        &format!("fixtures/{body}"),
        "--plane",
        &format!("fixtures/{plane}"),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    (report(&out), std::fs::read_to_string(svg).unwrap())
}

#[test]
fn section_plots() {
    let (rep, svg) = section("ball.json", "plane_xy.json");
    assert!(svg.starts_with("<svg") && svg.contains("width=\"800\" height=\"800\""));
    assert_eq!(rep["verdict"], "quadric");
    let lines = polylines(&svg);
    assert_eq!(lines, vec![("section".to_string(), 513), ("quadric".to_string(), 513)]);
    // the disk is drawn as a circle about the viewport centre
    let pts = svg.lines().find(|l| l.contains("class=\"section\"")).unwrap();
    let radii: Vec<f64> = pts
        .split("points=\"")
        .nth(1)
        .unwrap()
        .split('"')
        .next()
        .unwrap()
        .split_whitespace()
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse::<f64>().unwrap() - 400.0).hypot(y.parse::<f64>().unwrap() - 400.0)
        })
        .collect();
    assert!(radii.iter().all(|r| (r - 360.0).abs() <= 2e-3));

    let (rep, svg) = section("ellipsoid.json", "plane_tilted.json");
    assert_eq!(rep["verdict"], "quadric");
    assert!(rep["witness"]["residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(polylines(&svg).len(), 2);

    let (rep, svg) = section("box.json", "plane_xy.json");
    assert_eq!(rep["verdict"], "not_quadric");
    assert_eq!(polylines(&svg), vec![("section".to_string(), 513)]);
    assert!(svg.contains("40.000,40.000") || svg.contains("760.000,40.000"));
}

#[test]
fn parse_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"type\": \"ellipsoid\",\n  \"form\": [[1, 0], [0, 1]\n}\n").unwrap();
    let out = kkit(&["classify", bad.to_str().unwrap(), "--region", "fixtures/region_xy.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(&format!("{}:4:", bad.display())), "{stderr}");
    assert_eq!(report(&out)["verdict"], "error");

    std::fs::write(&bad, "{\n  \"type\": \"sphere\"\n}\n").unwrap();
    let out = kkit(&["classify", bad.to_str().unwrap(), "--region", "fixtures/region_xy.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));

    let out = kkit(&[
        "classify",
        "fixtures/missing.json",
        "--region",
        "fixtures/region_xy.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}
