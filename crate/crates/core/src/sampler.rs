//! Monte-Carlo wind curves: piecewise-constant controls drawn uniformly from the body.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::norm::Vec2;
use crate::reach::Direction;
use crate::wind::WindStructure;

pub const MIN_SAMPLES: usize = 100;
const MAX_SEGMENTS: usize = 4;

/// One sampled curve: its vertices at substep resolution, parameter `0..=r`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledCurve {
    pub points: Vec<Vec2>,
    pub dt: f64,
}

impl SampledCurve {
    pub fn end(&self) -> Vec2 {
        *self.points.last().expect("non-empty")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleReport {
    pub endpoints: Vec<Vec2>,
    /// Curves that left the box or entered an exclusion.
    pub discarded: usize,
    pub requested: usize,
}

/// Uniform point of the unit disk.
fn unit_disk(rng: &mut impl Rng) -> Vec2 {
    let r = rng.random::<f64>().sqrt();
    let t = rng.random::<f64>() * std::f64::consts::TAU;
    Vec2::new(r * t.cos(), r * t.sin())
}

/// Integrates one random curve; `None` if it leaves the domain.
fn one_curve(
    ws: &WindStructure,
    x0: Vec2,
    r: f64,
    substeps: usize,
    rng: &mut impl Rng,
    keep: bool,
) -> Result<Option<SampledCurve>> {
    let segments = rng.random_range(1..=MAX_SEGMENTS);
    let mut cuts: Vec<f64> = (1..segments).map(|_| rng.random::<f64>() * r).collect();
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.push(f64::INFINITY);
    let controls: Vec<Vec2> = (0..segments).map(|_| unit_disk(rng)).collect();
    let dt = r / substeps as f64;
    let mut x = x0;
    let mut points = if keep { vec![x0] } else { Vec::new() };
    let mut seg = 0;
    let velocity = |p: Vec2, u: Vec2| -> Result<Vec2> {
        let body = ws.body_at(p)?;
        Ok(body.center + body.boundary_map() * u)
    };
    for s in 0..substeps {
        let t_mid = (s as f64 + 0.5) * dt;
        while t_mid > cuts[seg] {
            seg += 1;
        }
        let u = controls[seg];
        let k1 = velocity(x, u)?;
        let mid = x + k1 * (0.5 * dt);
        if !ws.domain.contains(mid) {
            return Ok(None);
        }
        x += velocity(mid, u)? * dt;
        if !ws.domain.contains(x) {
            return Ok(None);
        }
        if keep {
            points.push(x);
        }
    }
    if !keep {
        points.push(x);
    }
    Ok(Some(SampledCurve { points, dt }))
}

fn substeps_for(ws: &WindStructure, r: f64) -> usize {
    let h = ws.grid().hx.min(ws.grid().hy);
    let by_cell = (r * ws.max_speed() / (0.25 * h)).ceil() as usize;
    by_cell.clamp(8, 4000)
}

fn oriented(ws: &WindStructure, direction: Direction) -> WindStructure {
    match direction {
        Direction::Forward => ws.clone(),
        Direction::Backward => ws.reversed(),
    }
}

/// Endpoints of `count` random wind curves of parameter length `r` from `x0`.
pub fn sample_wind_curves(ws: &WindStructure, x0: Vec2, r: f64, count: usize, seed: u64) -> Result<SampleReport> {
    if count < MIN_SAMPLES {
        return Err(Error::Config(format!("need at least {MIN_SAMPLES} samples, got {count}")));
    }
    ws.domain.check(x0)?;
    let substeps = substeps_for(ws, r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut endpoints = Vec::with_capacity(count);
    let mut discarded = 0;
    for _ in 0..count {
        match one_curve(ws, x0, r, substeps, &mut rng, false)? {
            Some(c) => endpoints.push(c.end()),
            None => discarded += 1,
        }
    }
    Ok(SampleReport { endpoints, discarded, requested: count })
}

/// Full random curves (with intermediate points), forward or reversed.
pub fn sample_curves(
    ws: &WindStructure,
    x0: Vec2,
    r: f64,
    count: usize,
    seed: u64,
    direction: Direction,
) -> Result<(Vec<SampledCurve>, usize)> {
    ws.domain.check(x0)?;
    let ws = oriented(ws, direction);
    let substeps = substeps_for(&ws, r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut discarded = 0;
    for _ in 0..count {
        match one_curve(&ws, x0, r, substeps, &mut rng, true)? {
            Some(c) => out.push(c),
            None => discarded += 1,
        }
    }
    Ok((out, discarded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::MinkowskiNorm;
    use crate::wind::{BaseDomain, BaseNormField, WindField};

    fn constant(w: Vec2) -> WindStructure {
        let d = BaseDomain::new((-3.0, 3.0), (-3.0, 3.0), 64, 64, vec![]).unwrap();
        WindStructure::with_defaults(d, BaseNormField::Constant(MinkowskiNorm::euclidean()), WindField::Constant(w))
            .unwrap()
    }

    #[test]
    fn strong_endpoints_in_translated_disk() {
        let ws = constant(Vec2::new(2.0, 0.0));
        let rep = sample_wind_curves(&ws, Vec2::zeros(), 0.5, 1000, 7).unwrap();
        assert_eq!(rep.discarded, 0);
        for p in rep.endpoints {
            assert!((p - Vec2::new(1.0, 0.0)).norm() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn critical_endpoints_move_right() {
        let ws = constant(Vec2::new(1.0, 0.0));
        let rep = sample_wind_curves(&ws, Vec2::zeros(), 1.0, 500, 3).unwrap();
        assert!(rep.endpoints.iter().all(|p| p.x >= -1e-12));
    }

    #[test]
    fn deterministic_for_seed() {
        let ws = constant(Vec2::new(0.3, 0.1));
        let a = sample_wind_curves(&ws, Vec2::zeros(), 1.0, 200, 11).unwrap();
        let b = sample_wind_curves(&ws, Vec2::zeros(), 1.0, 200, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exits_are_tallied() {
        let ws = constant(Vec2::new(2.0, 0.0));
        let rep = sample_wind_curves(&ws, Vec2::new(2.5, 0.0), 1.0, 100, 1).unwrap();
        assert_eq!(rep.discarded, 100);
        assert!(rep.endpoints.is_empty());
    }

    #[test]
    fn too_few_samples() {
        let ws = constant(Vec2::zeros());
        assert!(sample_wind_curves(&ws, Vec2::zeros(), 1.0, 10, 0).is_err());
    }
}
