use std::sync::LazyLock;

use proptest::prelude::*;
use windcone::config::parse_config;
use windcone::norm::Vec2;
use windcone::scenarios;
use windcone::wind::{Admissibility, RegionClass, WindStructure};

const EXTRA: [&str; 2] = [
    r#"
format = 1
[domain]
x = [-3.0, 3.0]
y = [-3.0, 3.0]
resolution = 64
[base]
kind = "ellipse"
a = 1.5
b = 0.7
angle = 0.4
[wind]
wx = "1.5*sin(y)"
wy = "0.8*cos(x) - 0.3"
"#,
    r#"
format = 1
[domain]
x = [-2.0, 2.0]
y = [-2.0, 2.0]
resolution = 64
[base]
kind = "randers"
h = [[1.0, 0.2], [0.2, 0.8]]
omega = [0.3, -0.1]
[wind]
kind = "radial"
k = 0.9
"#,
];

static STRUCTURES: LazyLock<Vec<WindStructure>> = LazyLock::new(|| {
    let mut out: Vec<WindStructure> = scenarios::all()
        .into_iter()
        .map(|mut c| {
            c.domain = c.domain.with_resolution(64, 64).unwrap();
            c.build().unwrap()
        })
        .collect();
    out.extend(EXTRA.iter().map(|t| parse_config(t).unwrap().build().unwrap()));
    out
});

/// A structure and a point inside its domain, from unit-interval coordinates.
fn pick(k: usize, sx: f64, sy: f64) -> Option<(&'static WindStructure, Vec2)> {
    let ws = &STRUCTURES[k % STRUCTURES.len()];
    let g = ws.grid();
    let p = Vec2::new(g.x0 + sx * (g.x1() - g.x0), g.y0 + sy * (g.y1() - g.y0));
    ws.domain.contains(p).then_some((ws, p))
}

fn polar(r: f64, t: f64) -> Vec2 {
    Vec2::new(r * t.cos(), r * t.sin())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn lower_metric_below_upper(k in 0usize..9, sx in 0.0..1.0f64, sy in 0.0..1.0f64, r in 0.01..5.0f64, t in 0.0..std::f64::consts::TAU) {
        let Some((ws, p)) = pick(k, sx, sy) else { return Ok(()) };
        let v = polar(r, t);
        let (f, fl) = (ws.eval_f(p, v).unwrap(), ws.eval_fl(p, v).unwrap());
        if f.is_finite() && fl.is_finite() {
            prop_assert!(f <= fl * (1.0 + 1e-12));
            let touching = (fl - f) <= 1e-8 * fl;
            let lightlike = ws.admissible(p, v).unwrap() == Admissibility::LightlikeBoundary;
            prop_assert!(!touching || lightlike, "F = F_l = {f} away from the lightlike boundary at {p:?}, {v:?}");
        }
    }

    #[test]
    fn wind_curve_membership(k in 0usize..9, sx in 0.0..1.0f64, sy in 0.0..1.0f64, r in 0.01..4.0f64, t in 0.0..std::f64::consts::TAU) {
        let Some((ws, p)) = pick(k, sx, sy) else { return Ok(()) };
        let v = polar(r, t);
        let body = ws.body_at(p).unwrap();
        let level = body.level(v);
        // Too close to the indicatrix to decide in floating point.
        prop_assume!((level - 1.0).abs() > 1e-7);
        let inside = level < 1.0;
        let (f, fl) = (ws.eval_f(p, v).unwrap(), ws.eval_fl(p, v).unwrap());
        let by_metrics = f <= 1.0 + 1e-9 && fl >= 1.0 - 1e-9;
        prop_assert_eq!(inside, by_metrics, "level {} F {} F_l {}", level, f, fl);
        // The body level itself agrees with the base norm of v - W.
        let f0 = ws.base_at(p).unwrap().eval(v - ws.wind_at(p).unwrap());
        prop_assert_eq!(f0 <= 1.0, inside);
    }

    #[test]
    fn support_function_is_sublinear(k in 0usize..9, sx in 0.0..1.0f64, sy in 0.0..1.0f64, q1 in (-3.0..3.0f64, -3.0..3.0f64), q2 in (-3.0..3.0f64, -3.0..3.0f64), lambda in 0.0..5.0f64) {
        let Some((ws, p)) = pick(k, sx, sy) else { return Ok(()) };
        let (q1, q2) = (Vec2::new(q1.0, q1.1), Vec2::new(q2.0, q2.1));
        let s = |q: Vec2| ws.support(p, q).unwrap();
        prop_assert!(s(q1 + q2) <= s(q1) + s(q2) + 1e-9);
        prop_assert!((s(q1 * lambda) - lambda * s(q1)).abs() <= 1e-9 * (1.0 + lambda * s(q1).abs()));
    }
}

#[test]
fn mild_and_strong_cells_are_separated_by_critical_ones() {
    // Rigid rotation: d0 = r - 1 has unit gradient, so a tolerance of one cell diagonal
    // leaves no room to jump between mild and strong neighbours.
    let mut cfg = scenarios::builtin("rotation").unwrap();
    cfg.domain = cfg.domain.with_resolution(128, 128).unwrap();
    let h = cfg.domain.grid().h();
    cfg.numerics.critical_tolerance = h * std::f64::consts::SQRT_2;
    let ws = cfg.build().unwrap();
    let g = ws.grid();
    let map = ws.region_map();
    let mut critical = 0;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let c = map[g.index(i, j)];
            critical += (c == Some(RegionClass::Critical)) as usize;
            for (di, dj) in [(1, 0), (0, 1), (1, 1)] {
                if i + di < g.nx && j + dj < g.ny {
                    let n = map[g.index(i + di, j + dj)];
                    let jump = matches!(
                        (c, n),
                        (Some(RegionClass::Mild), Some(RegionClass::Strong))
                            | (Some(RegionClass::Strong), Some(RegionClass::Mild))
                    );
                    assert!(!jump, "mild next to strong at ({i}, {j})");
                }
            }
        }
    }
    assert!(critical > 0);
}

#[test]
fn body_quadratic_matches_closed_form_roots() {
    // F solves F0(v/F - W) = 1; check it against the body level directly.
    for ws in STRUCTURES.iter() {
        let g = ws.grid();
        for k in (0..g.len()).step_by(97) {
            let p = g.center_of(k);
            if !ws.domain.contains(p) {
                continue;
            }
            let body = ws.body_at(p).unwrap();
            for i in 0..16 {
                let v = polar(1.0, i as f64 * 0.39);
                let f = ws.eval_f(p, v).unwrap();
                if f.is_finite() {
                    assert!((body.level(v / f) - 1.0).abs() < 1e-9, "{p:?} {v:?}");
                }
            }
        }
    }
}
