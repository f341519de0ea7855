use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn windcone(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_windcone")).arg("--out").arg(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = windcone(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

/// Pixels of a P5 image, bottom row first, plus its width.
fn read_pgm(path: PathBuf) -> (Vec<u8>, usize, usize) {
    let bytes = fs::read(path).unwrap();
    let header: Vec<&[u8]> = bytes.splitn(4, |b| *b == b'\n').collect();
    assert_eq!(header[0], b"P5");
    let dims: Vec<usize> = std::str::from_utf8(header[1]).unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
    let (nx, ny) = (dims[0], dims[1]);
    let data = header[3];
    assert_eq!(data.len(), nx * ny);
    let mut rows: Vec<u8> = Vec::with_capacity(nx * ny);
    for j in (0..ny).rev() {
        rows.extend_from_slice(&data[j * nx..(j + 1) * nx]);
    }
    (rows, nx, ny)
}

#[test]
fn strong_ball_contour_is_the_shifted_circle() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--config", "strong", "ball", "0", "0", "0.5"]);
    let svg = fs::read_to_string(dir.path().join("ball.svg")).unwrap();
    assert!(svg.contains("viewBox=\"-3 -3 6 6\""));
    assert_eq!(svg.matches("<path").count(), 1);
    let h = 6.0 / 256.0;
    let mut vertices = 0;
    for tok in svg.split(['M', 'L', ' ', '"']).filter(|t| t.contains(',') && !t.contains('=')) {
        let (x, y) = tok.split_once(',').unwrap();
        let (x, y): (f64, f64) = (x.parse().unwrap(), -y.parse::<f64>().unwrap());
        let r = ((x - 1.0).powi(2) + y * y).sqrt();
        assert!((r - 0.5).abs() <= 2.0 * h, "vertex ({x}, {y}) at radius {r}");
        vertices += 1;
    }
    assert!(vertices > 50);
    let summary = json(dir.path().join("ball.json"));
    assert_eq!(summary["direction"], "forward");
    assert!(summary["open_cells"].as_u64() < summary["closed_cells"].as_u64());
}

#[test]
fn zero_wind_distance_three_four_five() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "format = 1\n[domain]\nx = [-1.0, 5.0]\ny = [-1.0, 5.0]\nresolution = 256\n[base]\nkind = \"euclidean\"\n[wind]\nkind = \"constant\"\nwx = 0.0\nwy = 0.0\n[numerics]\nhorizon = 6.0\n",
    );
    ok(dir.path(), &["--config", &cfg, "dist", "0", "0", "3", "4"]);
    let d = json(dir.path().join("dist.json"));
    assert_eq!(d["status"], "finite");
    let s = d["separation"].as_f64().unwrap();
    assert!((s - 5.0).abs() <= 0.02 * 5.0, "{s}");
}

#[test]
fn rotation_critical_band_follows_unit_circle() {
    let dir = TempDir::new().unwrap();
    let h = 4.0 / 128.0;
    let cfg = write_config(
        dir.path(),
        &format!(
            "format = 1\n[domain]\nx = [-2.0, 2.0]\ny = [-2.0, 2.0]\nresolution = 128\n[base]\nkind = \"euclidean\"\n[wind]\nkind = \"rigid_rotation\"\nomega = 1.0\n[numerics]\ncritical_tolerance = {h}\n"
        ),
    );
    ok(dir.path(), &["--config", &cfg, "regions"]);
    let counts = &json(dir.path().join("regions.json"))["counts"];
    assert!(counts["critical"].as_u64().unwrap() > 0);
    let (pix, nx, ny) = read_pgm(dir.path().join("regions.pgm"));
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h);
            let d = (x * x + y * y).sqrt() - 1.0;
            let want = if d < -h {
                255
            } else if d <= h {
                160
            } else {
                80
            };
            // Cells right at the tolerance can fall either way.
            if (d.abs() - h).abs() > 1e-9 {
                assert_eq!(pix[j * nx + i], want, "cell ({x}, {y})");
            }
        }
    }
}

#[test]
fn norm_values_for_strong_wind() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--config", "strong", "norm", "0,0,1,0", "0,0,-1,0"]);
    let rows = json(dir.path().join("norm.json"));
    assert!((rows[0]["F"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert!((rows[0]["F_l"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(rows[1]["F"], Value::Null);
    assert_eq!(rows[1]["admissibility"], "inadmissible");
}

#[test]
fn geodesic_csv_and_svg() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["geodesic", "-1", "0", "1", "1", "--length", "1.5"]);
    let csv = fs::read_to_string(dir.path().join("geodesic.csv")).unwrap();
    let mut lines = csv.split("\r\n").filter(|l| !l.is_empty());
    assert_eq!(lines.next(), Some("t,x,y,vx,vy"));
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    let s = 1.5 / 2f64.sqrt();
    assert!((last[0] - 1.5).abs() < 1e-9);
    assert!((last[1] - (-1.0 + s)).abs() < 1e-6 && (last[2] - s).abs() < 1e-6);
    assert!(fs::read_to_string(dir.path().join("geodesic.svg")).unwrap().contains("<polyline"));

    ok(dir.path(), &["geodesic", "0", "0", "--to", "1,1"]);
    let summary = json(dir.path().join("geodesic.json"));
    assert!((summary["length_f"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-4);
}

#[test]
fn causal_verdicts_in_strong_wind() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--config", "strong", "causal", "0", "0", "0", "0.5", "1", "0"]);
    let q = json(dir.path().join("causal.json"));
    assert_eq!(q["relation"], "yes");
    ok(dir.path(), &["--config", "strong", "causal", "0", "0", "0", "0.5", "-1", "0", "--relation", "chronological"]);
    assert_eq!(json(dir.path().join("causal.json"))["relation"], "no");
}

#[test]
fn identical_inputs_give_identical_artifacts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        ok(d.path(), &["--config", "punctured", "--resolution", "64", "--seed", "7", "ladder"]);
        ok(d.path(), &["--config", "rotation", "--resolution", "64", "regions"]);
        ok(d.path(), &["--config", "mild", "--resolution", "64", "--horizon", "0.5", "ball", "0", "0", "0.5"]);
    }
    for f in ["ladder.json", "regions.pgm", "regions.json", "ball_closed.pgm", "ball_open.pgm", "ball.svg", "ball.json"]
    {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let report = json(a.path().join("ladder.json"));
    assert_eq!(report["seed"], 7);
}

#[test]
fn crosscheck_mild_agrees() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--config", "mild", "--resolution", "128", "--horizon", "1", "crosscheck", "--samples", "2000"]);
    let r = json(dir.path().join("crosscheck.json"));
    assert_eq!(r["passed"], true);
    assert_eq!(r["sampler"]["outside"], 0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |args: &[&str]| windcone(dir.path(), args).status.code().unwrap();

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["--config", "no_such_scenario", "regions"]), 1);
    assert_eq!(code(&["dist", "0", "0", "9", "9"]), 1);
    assert_eq!(code(&["--resolution", "8", "regions"]), 1);

    let bad = write_config(
        dir.path(),
        "format = 1\n[domain]\nx = [-1.0, 1.0]\ny = [-1.0, 1.0]\nresolution = 32\nresoluton = 3\n",
    );
    let out = windcone(dir.path(), &["--config", &bad, "regions"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("6:"), "{}", String::from_utf8_lossy(&out.stderr));

    let div = write_config(
        dir.path(),
        "format = 1\n[domain]\nx = [-1.0, 1.0]\ny = [-1.0, 1.0]\nresolution = 32\n[base]\nkind = \"euclidean\"\n[wind]\nwx = \"1/0\"\nwy = \"0\"\n",
    );
    assert_eq!(code(&["--config", &div, "regions"]), 1);

    // A lightlike initial velocity is a numerical failure, not a usage error.
    assert_eq!(code(&["--config", "strong", "geodesic", "0", "0", "1.7320508075688772", "1"]), 2);
}
