//! Agreement between the front propagator, the stationary arrival solver and random wind curves.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::hjb_arrival;
use crate::norm::Vec2;
use crate::reach::{propagate, PropagateOptions};
use crate::sampler::sample_wind_curves;
use crate::wind::WindStructure;

/// Arrival times may differ by this many cells' travel time.
pub const ARRIVAL_TOLERANCE_CELLS: f64 = 3.0;

#[derive(Clone, Debug)]
pub struct CrosscheckOptions {
    pub samples: usize,
    /// Parameter length of the sampled curves; defaults to the horizon.
    pub sample_radius: Option<f64>,
    pub seed: u64,
    pub dt: Option<f64>,
}

impl Default for CrosscheckOptions {
    fn default() -> Self {
        CrosscheckOptions { samples: 10_000, sample_radius: None, seed: 0, dt: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArrivalComparison {
    pub compared_cells: usize,
    pub max_abs_diff: f64,
    /// Largest difference measured in local one-cell travel times.
    pub max_diff_cells: f64,
    pub worst_cell: [f64; 2],
    pub tolerance_cells: f64,
    pub agree: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SamplerComparison {
    pub radius: f64,
    pub requested: usize,
    pub kept: usize,
    /// Endpoints outside the c-ball mask dilated by one cell.
    pub outside: usize,
    pub first_outside: Option<[f64; 2]>,
    pub hull_area: f64,
    pub ball_area: f64,
    pub hull_coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub x0: [f64; 2],
    pub horizon: f64,
    pub front_vs_hjb: Option<ArrivalComparison>,
    /// Why the stationary solver was not run, if it was not.
    pub hjb_skipped: Option<String>,
    pub sampler: SamplerComparison,
    pub passed: bool,
}

/// Area of the convex hull (monotone chain).
pub fn hull_area(points: &[Vec2]) -> f64 {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: Vec2, a: Vec2, b: Vec2| (a - o).perp(&(b - o));
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], *p) <= 0.0 {
                hull.pop();
            }
            hull.push(*p);
        }
        hull.pop();
    }
    let n = hull.len();
    0.5 * (0..n).map(|i| hull[i].perp(&hull[(i + 1) % n])).sum::<f64>().abs()
}

fn compare_arrivals(ws: &WindStructure, x0: Vec2, front: &[f64], horizon: f64) -> Result<ArrivalComparison> {
    let g = ws.grid();
    let stationary = hjb_arrival(ws, x0)?;
    let mut out = ArrivalComparison {
        compared_cells: 0,
        max_abs_diff: 0.0,
        max_diff_cells: 0.0,
        worst_cell: [x0.x, x0.y],
        tolerance_cells: ARRIVAL_TOLERANCE_CELLS,
        agree: true,
    };
    for k in 0..g.len() {
        let (tf, th) = (front[k], stationary.values[k]);
        if !tf.is_finite() || tf > horizon || !th.is_finite() {
            continue;
        }
        let p = g.center_of(k);
        let d = p - x0;
        let dir = if d.norm() > 1e-12 { d / d.norm() } else { Vec2::new(1.0, 0.0) };
        let cell_time = g.h() * ws.eval_f(p, dir)?;
        let diff = (tf - th).abs();
        out.compared_cells += 1;
        if diff > out.max_abs_diff {
            out.max_abs_diff = diff;
        }
        let cells = diff / cell_time;
        if cells > out.max_diff_cells {
            out.max_diff_cells = cells;
            out.worst_cell = [p.x, p.y];
        }
    }
    out.agree = out.max_diff_cells <= ARRIVAL_TOLERANCE_CELLS;
    Ok(out)
}

/// Runs all three methods from `x0` and compares them.
pub fn crosscheck(ws: &WindStructure, x0: Vec2, horizon: f64, opts: &CrosscheckOptions) -> Result<CrosscheckReport> {
    let r = opts.sample_radius.unwrap_or(horizon);
    if r > horizon {
        return Err(Error::InsufficientHorizon { needed: r, available: horizon });
    }
    let fam = propagate(ws, x0, horizon, &PropagateOptions { dt: opts.dt, ..Default::default() })?;
    let (front_vs_hjb, hjb_skipped) = match compare_arrivals(ws, x0, &fam.earliest_arrival, horizon) {
        Ok(c) => (Some(c), None),
        Err(Error::Inapplicable(why)) => (None, Some(why)),
        Err(e) => return Err(e),
    };

    let g = ws.grid();
    let ball = fam.c_ball(fam.step_for(r)?);
    let halo = ball.dilated(1);
    let samples = sample_wind_curves(ws, x0, r, opts.samples, opts.seed)?;
    let outside: Vec<Vec2> =
        samples.endpoints.iter().filter(|p| g.cell_of(**p).is_none_or(|(i, j)| !halo.get(i, j))).copied().collect();
    let hull = hull_area(&samples.endpoints);
    let ball_area = ball.count() as f64 * g.hx * g.hy;
    let sampler = SamplerComparison {
        radius: r,
        requested: samples.requested,
        kept: samples.endpoints.len(),
        outside: outside.len(),
        first_outside: outside.first().map(|p| [p.x, p.y]),
        hull_area: hull,
        ball_area,
        hull_coverage: if ball_area > 0.0 { hull / ball_area } else { 0.0 },
    };
    let passed = front_vs_hjb.as_ref().is_none_or(|c| c.agree) && sampler.outside == 0;
    Ok(CrosscheckReport { x0: [x0.x, x0.y], horizon, front_vs_hjb, hjb_skipped, sampler, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (0.0, 1.0), (1.0, 0.5), (0.5, 0.2), (2.0, 0.5)]
            .map(|(x, y)| Vec2::new(x, y));
        assert!((hull_area(&pts) - 2.0).abs() < 1e-12);
        assert_eq!(hull_area(&pts[..2]), 0.0);
    }

    #[test]
    fn hull_of_polygon_vertices() {
        let n = 360;
        let pts: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        let exact = 0.5 * n as f64 * (std::f64::consts::TAU / n as f64).sin();
        assert!((hull_area(&pts) - exact).abs() < 1e-12);
    }
}
