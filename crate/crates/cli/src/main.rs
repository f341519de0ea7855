use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use windcone::causal::{CstkScenario, Event};
use windcone::config::{parse_config, ScenarioConfig};
use windcone::crosscheck::{crosscheck, CrosscheckOptions};
use windcone::geodesic::{connect, geodesic_ivp, GeodesicPath, MetricTag};
use windcone::ladder::run_ladder;
use windcone::norm::Vec2;
use windcone::output;
use windcone::reach::{propagate, separation, Direction, PropagateOptions, Separation};
use windcone::scenarios;
use windcone::Error;

#[derive(Parser)]
#[command(
    name = "windcone",
    version,
    about = "Reachability, geodesics and causal-ladder probes for planar wind structures"
)]
struct Cli {
    /// Scenario file, or the name of a built-in scenario
    #[arg(long, global = true, default_value = "zero", value_name = "PATH|NAME")]
    config: String,
    /// Directory for artifacts (created if missing)
    #[arg(long, global = true, default_value = ".", value_name = "DIR")]
    out: PathBuf,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Grid resolution, `N` or `NxM`
    #[arg(long, global = true, value_name = "NxM", value_parser = parse_resolution)]
    resolution: Option<(usize, usize)>,
    #[arg(long, global = true, value_name = "R")]
    horizon: Option<f64>,
    /// Propagation time step
    #[arg(long, global = true, value_name = "V")]
    dt: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Region map (PGM) and region counts (JSON)
    Regions,
    /// F and F_l for each `PX,PY,VX,VY` case
    #[command(allow_negative_numbers = true)]
    Norm {
        #[arg(required = true, value_name = "PX,PY,VX,VY")]
        cases: Vec<String>,
    },
    /// c-ball and open ball at parameter R around (X, Y)
    #[command(allow_negative_numbers = true)]
    Ball {
        x: f64,
        y: f64,
        r: f64,
        /// Points that reach the center instead of points reached from it
        #[arg(long)]
        backward: bool,
    },
    /// Separation from (X1, Y1) to (X2, Y2)
    #[command(allow_negative_numbers = true)]
    Dist { x1: f64, y1: f64, x2: f64, y2: f64 },
    /// Geodesic from (X, Y) with initial velocity (VX, VY), or to a target with --to
    #[command(allow_negative_numbers = true)]
    Geodesic {
        x: f64,
        y: f64,
        vx: Option<f64>,
        vy: Option<f64>,
        /// Connect to this point instead of shooting
        #[arg(long, value_name = "X,Y", value_parser = parse_point, allow_negative_numbers = true)]
        to: Option<(f64, f64)>,
        /// Parameter length of the shot (defaults to the horizon)
        #[arg(long, value_name = "L")]
        length: Option<f64>,
        #[arg(long, value_enum, default_value_t = Metric::F)]
        metric: Metric,
    },
    /// Causal or chronological relation between (T0, X0, Y0) and (T1, X1, Y1)
    #[command(allow_negative_numbers = true)]
    Causal {
        t0: f64,
        x0: f64,
        y0: f64,
        t1: f64,
        x1: f64,
        y1: f64,
        #[arg(long, value_enum, default_value_t = Relation::Causal)]
        relation: Relation,
    },
    /// Causal ladder classification report
    Ladder,
    /// Front propagation against the stationary solver and random wind curves
    #[command(allow_negative_numbers = true)]
    Crosscheck {
        #[arg(default_value_t = 0.0)]
        x: f64,
        #[arg(default_value_t = 0.0)]
        y: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Parameter length of the sampled curves (defaults to the horizon)
        #[arg(long, value_name = "R")]
        radius: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    F,
    Fl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Relation {
    Causal,
    Chronological,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Invariant(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Invariant(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) | Failure::Invariant(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Invariant(_) => Failure::Invariant(msg),
            Error::Expr(windcone::expr::ExprError::Runtime { .. }) => Failure::Numerical(msg),
            e if e.is_numerical() => Failure::Numerical(msg),
            _ => Failure::Usage(msg),
        }
    }
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad resolution `{s}`: {e}"));
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|n| (n, n)),
    }
}

fn numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number in `{s}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got `{s}`"));
    }
    Ok(v)
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    numbers(s, 2).map(|v| (v[0], v[1]))
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Failure> {
    let path = Path::new(&cli.config);
    let mut cfg = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        parse_config(&text).map_err(|e| Failure::Usage(format!("{}:\n{e}", path.display())))?
    } else if let Some(c) = scenarios::builtin(&cli.config) {
        c
    } else {
        return Err(Failure::Usage(format!(
            "`{}` is neither a file nor a built-in scenario ({})",
            cli.config,
            scenarios::NAMES.join(", ")
        )));
    };
    if let Some((nx, ny)) = cli.resolution {
        cfg.domain = cfg.domain.with_resolution(nx, ny)?;
    }
    if let Some(r) = cli.horizon {
        cfg.numerics.horizon = r;
    }
    if cli.dt.is_some() {
        cfg.numerics.dt = cli.dt;
    }
    if let Some(s) = cli.seed {
        cfg.numerics.seed = s;
    }
    if !(cfg.numerics.horizon > 0.0 && cfg.numerics.horizon.is_finite()) {
        return Err(Failure::Usage(format!("horizon must be positive, got {}", cfg.numerics.horizon)));
    }
    Ok(cfg)
}

struct Out {
    dir: PathBuf,
}

impl Out {
    fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        println!("{}", path.display());
        Ok(())
    }

    fn json(&self, name: &str, value: &impl serde::Serialize) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Invariant(e.to_string()))?;
        self.write(name, text + "\n")
    }
}

/// Infinite values become `null` in JSON.
fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn pt(p: Vec2) -> Value {
    json!([p.x, p.y])
}

fn geodesic_artifacts(out: &Out, cfg: &ScenarioConfig, path: &GeodesicPath, extra: Value) -> Result<(), Failure> {
    let rows: Vec<Vec<String>> = path
        .samples
        .iter()
        .map(|s| [s.t, s.x.x, s.x.y, s.v.x, s.v.y].iter().map(|v| format!("{v:.12e}")).collect())
        .collect();
    out.write("geodesic.csv", output::csv(&["t", "x", "y", "vx", "vy"], &rows))?;
    let pts: Vec<Vec2> = path.samples.iter().map(|s| s.x).collect();
    out.write("geodesic.svg", output::svg_polyline(&cfg.domain.grid(), &pts))?;
    let mut summary = json!({
        "start": pt(path.start()),
        "end": pt(path.end()),
        "duration": path.duration(),
        "length_f": finite(path.length_f),
        "length_fl": finite(path.length_fl),
        "truncated": path.truncated,
        "samples": path.samples.len(),
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut summary, extra) {
        m.extend(e);
    }
    out.json("geodesic.json", &summary)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    fs::create_dir_all(&cli.out).map_err(|e| Failure::Usage(format!("{}: {e}", cli.out.display())))?;
    let out = Out { dir: cli.out.clone() };
    let horizon = cfg.numerics.horizon;
    let dt = cfg.numerics.dt;
    let seed = cfg.numerics.seed;

    match &cli.command {
        Command::Regions => {
            let ws = cfg.build()?;
            out.write("regions.pgm", output::region_pgm(&ws.grid(), &ws.region_map()))?;
            out.json(
                "regions.json",
                &json!({
                    "name": cfg.name,
                    "resolution": [cfg.domain.nx, cfg.domain.ny],
                    "critical_tolerance": cfg.numerics.critical_tolerance,
                    "counts": ws.region_counts(),
                }),
            )?;
        }
        Command::Norm { cases } => {
            let ws = cfg.build()?;
            let mut rows = Vec::new();
            for c in cases {
                let v = numbers(c, 4).map_err(Failure::Usage)?;
                let (p, vel) = (Vec2::new(v[0], v[1]), Vec2::new(v[2], v[3]));
                rows.push(json!({
                    "p": pt(p),
                    "v": pt(vel),
                    "region": ws.classify_point(p)?,
                    "F": finite(ws.eval_f(p, vel)?),
                    "F_l": finite(ws.eval_fl(p, vel)?),
                    "admissibility": ws.admissible(p, vel)?,
                }));
            }
            out.json("norm.json", &rows)?;
        }
        Command::Ball { x, y, r, backward } => {
            let ws = cfg.build()?;
            let x0 = Vec2::new(*x, *y);
            let direction = if *backward { Direction::Backward } else { Direction::Forward };
            let fam =
                propagate(&ws, x0, *r, &PropagateOptions { dt, direction: Some(direction), ..Default::default() })?;
            let step = fam.step_for(*r)?;
            let c = fam.c_ball(step);
            let open = fam.open_ball(step);
            let g = ws.grid();
            out.write("ball_closed.pgm", output::mask_pgm(c))?;
            out.write("ball_open.pgm", output::mask_pgm(&open))?;
            out.write("ball.svg", output::svg_contour(c, &g))?;
            out.json(
                "ball.json",
                &json!({
                    "center": pt(x0),
                    "r": r,
                    "direction": direction,
                    "step": step,
                    "time": fam.time(step),
                    "closed_cells": c.count(),
                    "open_cells": open.count(),
                    "closed_area": c.count() as f64 * g.hx * g.hy,
                }),
            )?;
        }
        Command::Dist { x1, y1, x2, y2 } => {
            let ws = cfg.build()?;
            let (x, y) = (Vec2::new(*x1, *y1), Vec2::new(*x2, *y2));
            let s = separation(&ws, x, y, horizon, dt)?;
            let (status, value, bound) = match s {
                Separation::Finite(v) => ("finite", json!(v), Value::Null),
                Separation::AtLeast(b) => ("at_least", Value::Null, json!(b)),
                Separation::Infinite => ("infinite", Value::Null, Value::Null),
            };
            out.json(
                "dist.json",
                &json!({ "x": pt(x), "y": pt(y), "horizon": horizon, "status": status, "separation": value, "lower_bound": bound }),
            )?;
        }
        Command::Geodesic { x, y, vx, vy, to, length, metric } => {
            let ws = cfg.build()?;
            let tag = match metric {
                Metric::F => MetricTag::F,
                Metric::Fl => MetricTag::Fl,
            };
            let p = Vec2::new(*x, *y);
            match (to, vx, vy) {
                (Some((tx, ty)), None, None) => {
                    let paths = connect(&ws, p, Vec2::new(*tx, *ty), tag)?;
                    let Some(best) = paths.first() else {
                        return Err(Failure::Numerical(format!("no connecting geodesic found to ({tx}, {ty})")));
                    };
                    let others: Vec<Value> = paths.iter().map(|g| finite(g.length_f)).collect();
                    geodesic_artifacts(&out, &cfg, best, json!({ "target": [tx, ty], "connectors": others }))?;
                }
                (None, Some(vx), Some(vy)) => {
                    let path = geodesic_ivp(&ws, p, Vec2::new(*vx, *vy), length.unwrap_or(horizon), None, tag)?;
                    geodesic_artifacts(&out, &cfg, &path, json!({}))?;
                }
                _ => return Err(Failure::Usage("give either VX VY or --to X,Y".into())),
            }
        }
        Command::Causal { t0, x0, y0, t1, x1, y1, relation } => {
            let cstk = CstkScenario::new(cfg.build()?, horizon).with_dt(dt);
            let (p, q) = (Event::new(*t0, Vec2::new(*x0, *y0)), Event::new(*t1, Vec2::new(*x1, *y1)));
            let res = match relation {
                Relation::Causal => cstk.causal_query(p, q)?,
                Relation::Chronological => cstk.chronological_query(p, q)?,
            };
            out.json("causal.json", &res)?;
        }
        Command::Ladder => {
            let report = run_ladder(&cfg, seed)?;
            out.write("ladder.json", report.to_json())?;
            let v = &report.verdicts;
            for (name, level) in [
                ("causally_continuous", &v.causally_continuous),
                ("causally_simple", &v.causally_simple),
                ("globally_hyperbolic", &v.globally_hyperbolic),
                ("cauchy_slices", &v.cauchy_slices),
            ] {
                eprintln!("{name}: {:?} ({} witnesses)", level.status, level.witnesses.len());
            }
        }
        Command::Crosscheck { x, y, samples, radius } => {
            let ws = cfg.build()?;
            let opts = CrosscheckOptions { samples: *samples, sample_radius: *radius, seed, dt };
            let report = crosscheck(&ws, Vec2::new(*x, *y), horizon, &opts)?;
            out.json("crosscheck.json", &report)?;
            if !report.passed {
                return Err(Failure::Invariant("methods disagree; see crosscheck.json".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
