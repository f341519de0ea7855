use windcone::grid::Mask;
use windcone::norm::Vec2;
use windcone::reach::{propagate, separations, PropagateOptions, ReachabilityFamily};
use windcone::scenarios;
use windcone::wind::WindStructure;

fn at_resolution(name: &str, n: usize) -> WindStructure {
    let mut cfg = scenarios::builtin(name).unwrap();
    cfg.domain = cfg.domain.with_resolution(n, n).unwrap();
    cfg.build().unwrap()
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Counter-clockwise convex hull.
fn hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let mut out: Vec<Vec2> = Vec::new();
    for pass in 0..2 {
        let start = out.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while out.len() >= start + 2 && cross(out[out.len() - 2], out[out.len() - 1], p) <= 0.0 {
                out.pop();
            }
            out.push(p);
        }
        out.pop();
    }
    out
}

fn inside_hull(h: &[Vec2], p: Vec2) -> bool {
    (0..h.len()).all(|i| cross(h[i], h[(i + 1) % h.len()], p) >= 0.0)
}

fn cells(fam: &ReachabilityFamily, m: &Mask) -> Vec<Vec2> {
    m.iter().map(|(i, j)| fam.grid.center(i, j)).collect()
}

/// Travel time across one cell in the slowest direction, plus one time step.
fn front_tolerance(ws: &WindStructure, p: Vec2, dt: f64) -> f64 {
    let worst = (0..16)
        .map(|k| {
            let t = k as f64 * std::f64::consts::TAU / 16.0;
            ws.eval_f(p, Vec2::new(t.cos(), t.sin())).unwrap()
        })
        .filter(|f| f.is_finite())
        .fold(0.0, f64::max);
    ws.grid().h() * worst + dt
}

#[test]
fn constant_wind_sets_are_convex() {
    for (name, x0) in [
        ("zero", Vec2::new(0.2, -0.1)),
        ("mild", Vec2::new(-0.5, 0.2)),
        ("critical", Vec2::new(-1.0, 0.0)),
        ("strong", Vec2::new(-2.0, 0.3)),
    ] {
        let ws = at_resolution(name, 96);
        let fam = propagate(&ws, x0, 1.0, &PropagateOptions::default()).unwrap();
        for frac in [0.1, 0.5, 1.0] {
            let k = fam.step_for(frac).unwrap();
            let m = fam.c_ball(k);
            let h = hull(cells(&fam, m));
            assert!(h.len() >= 3, "{name}: degenerate set at step {k}");
            let near = m.dilated(2);
            let g = fam.grid;
            for idx in 0..g.len() {
                let p = g.center_of(idx);
                assert!(!inside_hull(&h, p) || near.get_index(idx), "{name}: concave defect at {p:?}, step {k}");
            }
        }
    }
}

#[test]
fn separation_is_upper_semicontinuous_under_refinement() {
    for (name, x, y) in [
        ("mild", Vec2::new(-0.4, -0.3), Vec2::new(0.5, 0.4)),
        ("mild", Vec2::new(0.6, 0.1), Vec2::new(-0.2, -0.5)),
        ("mild_rotation", Vec2::new(-0.3, 0.1), Vec2::new(0.2, -0.25)),
        ("critical", Vec2::new(-0.8, 0.2), Vec2::new(0.4, -0.3)),
    ] {
        let fine = at_resolution(name, 256);
        let limit = separations(&fine, x, &[y], 3.0, None).unwrap()[0].value();
        assert!(limit.is_finite(), "{name}: {x:?} -> {y:?} unreachable");
        for n in [64, 96, 128, 192] {
            let ws = at_resolution(name, n);
            let h = ws.grid().h();
            // Points drifting towards the limit as the grid refines.
            let (xn, yn) = (x + Vec2::new(0.5 * h, -0.3 * h), y + Vec2::new(-0.4 * h, 0.6 * h));
            let dt = windcone::reach::default_dt(&ws);
            let d = separations(&ws, xn, &[yn], 3.0, None).unwrap()[0].value();
            let tol = front_tolerance(&ws, yn, dt);
            assert!(d <= limit + tol, "{name} at {n}: {d} > {limit} + {tol}");
        }
    }
}

#[test]
fn separation_is_continuous_off_the_diagonal() {
    for (name, n) in [("mild", 128), ("critical", 128), ("mild_rotation", 128)] {
        let ws = at_resolution(name, n);
        let g = ws.grid();
        let h = g.h();
        let dt = windcone::reach::default_dt(&ws);
        let span = 0.5 * (g.x1() - g.x0);
        let sources = [Vec2::new(-0.3, 0.1), Vec2::new(-0.1, -0.2)].map(|p| p * (span / 1.5));
        for x in sources {
            let mut targets = Vec::new();
            for k in 0..8 {
                // Rays within 60 degrees of the wind so critical targets stay reachable.
                let t = (k as f64 / 7.0 - 0.5) * (2.0 * std::f64::consts::PI / 3.0);
                let r = (12.0 + 3.0 * k as f64) * h;
                let y = x + Vec2::new(t.cos(), t.sin()) * r;
                targets.push(y);
                for d in [Vec2::new(h, 0.0), Vec2::new(0.0, h), Vec2::new(-h, 0.0), Vec2::new(0.0, -h)] {
                    targets.push(y + d);
                }
            }
            let seps = separations(&ws, x, &targets, 3.0, None).unwrap();
            for (c, chunk) in seps.chunks(5).enumerate() {
                let y = targets[5 * c];
                let base = chunk[0].value();
                assert!(base.is_finite(), "{name}: {x:?} -> {y:?} unreachable");
                let tol = front_tolerance(&ws, y, dt);
                for (m, s) in chunk[1..].iter().enumerate() {
                    assert!(
                        (s.value() - base).abs() <= 2.0 * tol,
                        "{name}: {x:?} -> {y:?}, neighbour {m}: {} vs {base} (tol {tol})",
                        s.value()
                    );
                }
            }
        }
    }
}

#[test]
fn closed_balls_are_sublevel_sets() {
    for (name, x0, r) in [
        ("zero", Vec2::new(0.1, 0.2), 0.8),
        ("mild", Vec2::new(-0.5, 0.0), 1.0),
        ("critical", Vec2::new(-0.7, 0.1), 0.9),
        ("mild_rotation", Vec2::new(0.1, -0.05), 0.3),
    ] {
        let ws = at_resolution(name, 128);
        let fam = propagate(&ws, x0, r, &PropagateOptions::default()).unwrap();
        let k = fam.step_for(r).unwrap();
        let g = fam.grid;
        let mut closure = fam.open_ball(k);
        let (i0, j0) = g.cell_of(x0).unwrap();
        closure.set(i0, j0, true);
        let mut sublevel = Mask::new(g.nx, g.ny);
        for idx in 0..g.len() {
            sublevel.set_index(idx, fam.earliest_arrival[idx] <= fam.time(k));
        }
        assert!(sublevel.is_subset_of(&closure.dilated(1)), "{name}: sublevel set sticks out of the closed ball");
        assert!(closure.is_subset_of(&sublevel.dilated(1)), "{name}: closed ball sticks out of the sublevel set");
    }
}
