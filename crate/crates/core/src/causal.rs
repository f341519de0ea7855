//! The spacetime `R x S` with `∂t` a cone Killing field: cone membership, the Lorentz-Finsler
//! metric where `∂t` is timelike, and causal queries answered through wind balls.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesic::{el_residual, polyline_lengths, MetricTag};
use crate::grid::Mask;
use crate::norm::Vec2;
use crate::reach::{propagate, Direction, PropagateOptions, ReachabilityFamily};
use crate::sampler::sample_curves;
use crate::wind::{lower_sheet_value, WindStructure};

const LIGHTLIKE_TOLERANCE: f64 = 1e-9;
const DEGENERATE_MARGIN: f64 = 1e-6;

/// How `∂t` sits relative to the cones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KillingCharacter {
    /// Timelike everywhere: every point is mild.
    Timelike,
    /// Timelike or lightlike: no strong points.
    Causal,
    Arbitrary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub x: [f64; 2],
}

impl Event {
    pub fn new(t: f64, x: Vec2) -> Event {
        Event { t, x: [x.x, x.y] }
    }

    pub fn point(&self) -> Vec2 {
        Vec2::new(self.x[0], self.x[1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeClass {
    FutureTimelike,
    FutureLightlike,
    PastTimelike,
    PastLightlike,
    Spacelike,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Yes,
    No,
    /// Within the one-cell band around the ball boundary.
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueryResult {
    pub p: Event,
    pub q: Event,
    pub relation: Verdict,
    /// Signed level-set value at `q` in cells; negative inside the ball.
    pub margin_cells: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SliceKind {
    /// Chronological future: the open ball.
    I,
    /// Causal future: the c-ball.
    J,
}

type CacheKey = (u64, u64, Direction);

pub struct CstkScenario {
    pub base: WindStructure,
    pub killing_character: KillingCharacter,
    /// Largest time difference a query may span.
    pub horizon: f64,
    pub dt: Option<f64>,
    cache: RwLock<HashMap<CacheKey, Arc<ReachabilityFamily>>>,
}

impl CstkScenario {
    pub fn new(base: WindStructure, horizon: f64) -> CstkScenario {
        let counts = base.region_counts();
        let killing_character = if counts.strong > 0 {
            KillingCharacter::Arbitrary
        } else if counts.critical > 0 {
            KillingCharacter::Causal
        } else {
            KillingCharacter::Timelike
        };
        CstkScenario { base, killing_character, horizon, dt: None, cache: RwLock::new(HashMap::new()) }
    }

    pub fn with_dt(mut self, dt: Option<f64>) -> CstkScenario {
        self.dt = dt;
        self
    }

    fn cell(&self) -> f64 {
        self.base.grid().h()
    }

    /// Memoized family from `x0` over the full horizon, keeping `phi` at every step.
    pub fn family(&self, x0: Vec2, direction: Direction) -> Result<Arc<ReachabilityFamily>> {
        let key = (x0.x.to_bits(), x0.y.to_bits(), direction);
        if let Some(f) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(f.clone());
        }
        let opts =
            PropagateOptions { dt: self.dt, direction: Some(direction), store_all_phi: true, ..Default::default() };
        let fam = Arc::new(propagate(&self.base, x0, self.horizon, &opts)?);
        let mut w = self.cache.write().expect("cache lock");
        Ok(w.entry(key).or_insert(fam).clone())
    }

    pub fn cone_membership(&self, event: Event, a: f64, w: Vec2) -> Result<ConeClass> {
        if a == 0.0 && w.norm() == 0.0 {
            return Err(Error::ZeroVector);
        }
        if a == 0.0 {
            return Ok(ConeClass::Spacelike);
        }
        let body = self.base.body_at(event.point())?;
        let u = w / a;
        let level = body.level(u).sqrt();
        let future = a > 0.0;
        Ok(if (level - 1.0).abs() <= LIGHTLIKE_TOLERANCE {
            if future {
                ConeClass::FutureLightlike
            } else {
                ConeClass::PastLightlike
            }
        } else if level < 1.0 {
            if future {
                ConeClass::FutureTimelike
            } else {
                ConeClass::PastTimelike
            }
        } else {
            ConeClass::Spacelike
        })
    }

    /// `G(a, w) = a^2 - F(w)^2`, only where `∂t` is timelike everywhere.
    pub fn eval_g(&self, event: Event, a: f64, w: Vec2) -> Result<f64> {
        if self.killing_character != KillingCharacter::Timelike {
            return Err(Error::Inapplicable("the metric G needs every point to be mild".into()));
        }
        if w.norm() <= DEGENERATE_MARGIN * a.abs().max(1.0) {
            return Err(Error::DegenerateDirection);
        }
        let f = lower_sheet_value(&self.base.body_at(event.point())?, w);
        Ok(a * a - f * f)
    }

    /// Level-set value at `x1` at time `r`, interpolated between stored steps.
    fn phi(&self, fam: &ReachabilityFamily, r: f64, x1: Vec2) -> Result<f64> {
        fam.step_for(r)?;
        let k = ((r / fam.dt).floor() as usize).min(fam.steps);
        let frac = (r / fam.dt - k as f64).clamp(0.0, 1.0);
        let a = fam.phi_at(k, x1).ok_or_else(|| Error::Invariant("missing level-set step".into()))?;
        if k == fam.steps || frac == 0.0 {
            return Ok(a);
        }
        let b = fam.phi_at(k + 1, x1).ok_or_else(|| Error::Invariant("missing level-set step".into()))?;
        Ok(a + (b - a) * frac)
    }

    fn query(&self, p: Event, q: Event, chronological: bool) -> Result<QueryResult> {
        self.base.domain.check(p.point())?;
        self.base.domain.check(q.point())?;
        let r = q.t - p.t;
        let done = |relation, margin_cells| Ok(QueryResult { p, q, relation, margin_cells });
        if r < 0.0 || (r == 0.0 && p.point() != q.point()) {
            return done(Verdict::No, f64::INFINITY);
        }
        if r == 0.0 {
            return done(if chronological { Verdict::No } else { Verdict::Yes }, 0.0);
        }
        if r > self.horizon {
            return Err(Error::InsufficientHorizon { needed: r, available: self.horizon });
        }
        let fam = self.family(p.point(), Direction::Forward)?;
        let h = self.cell();
        let phi = self.phi(&fam, r, q.point())?;
        let tol = 0.5 * h;
        let relation = if chronological {
            if phi < -h {
                Verdict::Yes
            } else if phi < -tol {
                Verdict::Boundary
            } else {
                Verdict::No
            }
        } else if phi <= tol {
            Verdict::Yes
        } else if phi <= h {
            Verdict::Boundary
        } else {
            Verdict::No
        };
        done(relation, phi / h)
    }

    /// Whether `q ∈ I⁺(p)`: `x1` in the open wind ball of radius `t1 - t0`.
    pub fn chronological_query(&self, p: Event, q: Event) -> Result<QueryResult> {
        self.query(p, q, true)
    }

    /// Whether `q ∈ J⁺(p)`: `x1` in the c-ball of radius `t1 - t0`.
    pub fn causal_query(&self, p: Event, q: Event) -> Result<QueryResult> {
        self.query(p, q, false)
    }

    /// The slice `t = t0 ± s` of the future (or past) of `p`.
    pub fn slice(&self, p: Event, s: f64, kind: SliceKind, direction: Direction) -> Result<Mask> {
        if !(s > 0.0) {
            return Err(Error::Config(format!("slice time must be positive, got {s}")));
        }
        if s > self.horizon {
            return Err(Error::InsufficientHorizon { needed: s, available: self.horizon });
        }
        let fam = self.family(p.point(), direction)?;
        let k = fam.step_for(s)?;
        Ok(match kind {
            SliceKind::I => fam.open_ball(k),
            SliceKind::J => fam.c_ball(k).clone(),
        })
    }

    pub fn future_slice(&self, p: Event, s: f64, kind: SliceKind) -> Result<Mask> {
        self.slice(p, s, kind, Direction::Forward)
    }

    /// Traces a boundary curve from `q` back to `p` and checks it against a unit
    /// extremizing geodesic.
    pub fn horismos_check(&self, p: Event, q: Event) -> Result<HorismosReport> {
        let causal = self.causal_query(p, q)?;
        let chrono = self.chronological_query(p, q)?;
        if causal.relation == Verdict::No || chrono.relation == Verdict::Yes {
            return Err(Error::Config("the events are not horismotically related".into()));
        }
        let r = q.t - p.t;
        let fam = self.family(p.point(), Direction::Forward)?;
        let k_end = fam.step_for(r)?;
        let curve = backtrace(&self.base, &fam, k_end, q.point())?;
        let x0 = p.point();
        let h = self.cell();
        let start_gap = (curve[0] - x0).norm() / h;
        // Raw backtrace points wobble by a fraction of a cell; lengths come from the fit.
        let fit = fit_quadratic(&curve, fam.dt);
        let fitted: Vec<Vec2> = (0..curve.len()).map(|i| fit.eval(i as f64 * fam.dt)).collect();
        let (length_f, length_fl) = polyline_lengths(&self.base, &fitted)?;
        let rel = |l: f64| (l - r).abs() / r;
        let tag = if rel(length_f) <= rel(length_fl) { MetricTag::F } else { MetricTag::Fl };
        let matched = rel(length_f).min(rel(length_fl));
        let fit_rms =
            (curve.iter().zip(&fitted).map(|(a, b)| (a - b).norm_squared()).sum::<f64>() / curve.len() as f64).sqrt();
        let chord = (curve[curve.len() - 1] - curve[0]).norm().max(h);
        let el = el_residual(&self.base, tag, &fitted, fam.dt)? * chord;
        Ok(HorismosReport {
            samples: curve.iter().map(|v| [v.x, v.y]).collect(),
            parameter: r,
            length_f,
            length_fl,
            metric: match tag {
                MetricTag::F => "F",
                MetricTag::Fl => "F_l",
            },
            length_error: matched,
            el_residual: el,
            fit_rms_cells: fit_rms / h,
            start_gap_cells: start_gap,
            passed: matched <= 0.03 && el <= 1e-3,
        })
    }

    /// Random wind-curve lifts `t(s) = ±s`: checks the time coordinate is strictly monotone and
    /// no lift revisits an earlier `(time slice, cell)` pair.
    pub fn time_function_check(
        &self,
        count: usize,
        r: f64,
        seed: u64,
        direction: Direction,
    ) -> Result<TimeFunctionReport> {
        if count < 100 {
            return Err(Error::Config(format!("need at least 100 curves, got {count}")));
        }
        let x0 = self.base.grid().center_of(self.base.grid().len() / 2 + self.base.grid().nx / 2);
        let x0 = if self.base.domain.contains(x0) { x0 } else { first_free_point(&self.base) };
        let (curves, discarded) = sample_curves(&self.base, x0, r, count, seed, direction)?;
        let sign = match direction {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        };
        let g = self.base.grid();
        let slice_width = g.h() / self.base.max_speed();
        let mut violations = 0;
        for c in &curves {
            let mut seen = HashSet::new();
            let mut last_t = f64::NEG_INFINITY * sign;
            let mut last_slice = i64::MIN;
            let mut bad = false;
            for (i, x) in c.points.iter().enumerate() {
                let t = sign * i as f64 * c.dt;
                if i > 0 && (t - last_t) * sign <= 0.0 {
                    bad = true;
                }
                let slice = ((t * sign) / slice_width).floor() as i64;
                if slice < last_slice {
                    bad = true;
                }
                if let Some(cell) = g.cell_of(*x) {
                    if slice != last_slice && seen.contains(&(slice, cell)) {
                        bad = true;
                    }
                    seen.insert((slice, cell));
                }
                last_t = t;
                last_slice = slice;
            }
            if bad {
                violations += 1;
            }
        }
        Ok(TimeFunctionReport { curves: curves.len(), discarded, violations, passed: violations == 0 })
    }

    /// Samples causal curves from `p`; those leaving the box `|t| <= height`, `|x - x0| <= width`
    /// through its top face must never come back into the half-size inner box.
    pub fn strong_causality_check(&self, p: Event, count: usize, seed: u64) -> Result<StrongCausalityReport> {
        let g = self.base.grid();
        let width = 4.0 * g.h();
        let height = width / self.base.max_speed();
        let (curves, discarded) = sample_curves(&self.base, p.point(), 3.0 * height, count, seed, Direction::Forward)?;
        let x0 = p.point();
        let inside = |x: Vec2, t: f64, scale: f64| t.abs() <= height * scale && (x - x0).abs().max() <= width * scale;
        let mut top_exits = 0;
        let mut reentries = 0;
        for c in &curves {
            let mut exited_top = false;
            for (i, x) in c.points.iter().enumerate() {
                let t = i as f64 * c.dt;
                if !exited_top {
                    if !inside(*x, t, 1.0) {
                        if t > height && (*x - x0).abs().max() <= width {
                            exited_top = true;
                            top_exits += 1;
                        } else {
                            break;
                        }
                    }
                } else if inside(*x, t, 0.5) {
                    reentries += 1;
                    break;
                }
            }
        }
        Ok(StrongCausalityReport { curves: curves.len(), discarded, top_exits, reentries, passed: reentries == 0 })
    }
}

fn first_free_point(ws: &WindStructure) -> Vec2 {
    let g = ws.grid();
    (0..g.len()).map(|k| g.center_of(k)).find(|p| ws.domain.contains(*p)).unwrap_or(Vec2::zeros())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HorismosReport {
    pub samples: Vec<[f64; 2]>,
    pub parameter: f64,
    pub length_f: f64,
    pub length_fl: f64,
    /// Which length matched the parameter.
    pub metric: &'static str,
    pub length_error: f64,
    /// Curvature of the fitted curve against the geodesic equation, times its chord.
    pub el_residual: f64,
    pub fit_rms_cells: f64,
    pub start_gap_cells: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeFunctionReport {
    pub curves: usize,
    pub discarded: usize,
    pub violations: usize,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StrongCausalityReport {
    pub curves: usize,
    pub discarded: usize,
    pub top_exits: usize,
    pub reentries: usize,
    pub passed: bool,
}

/// Gradient of `phi_k` by central differences at one cell.
fn phi_gradient(fam: &ReachabilityFamily, k: usize, x: Vec2) -> Option<Vec2> {
    let g = fam.grid;
    let ex = Vec2::new(g.hx, 0.0);
    let ey = Vec2::new(0.0, g.hy);
    Some(Vec2::new(
        (fam.phi_at(k, x + ex)? - fam.phi_at(k, x - ex)?) / (2.0 * g.hx),
        (fam.phi_at(k, x + ey)? - fam.phi_at(k, x - ey)?) / (2.0 * g.hy),
    ))
}

/// Walks back through the dilation steps: from a boundary point of step `k`, the ancestor
/// on step `k - 1` is reached by reversing the support velocity for the front normal, then
/// snapped back onto the zero level.
fn backtrace(ws: &WindStructure, fam: &ReachabilityFamily, k_end: usize, q: Vec2) -> Result<Vec<Vec2>> {
    let mut pts = vec![q];
    let mut x = q;
    let dt = fam.dt;
    for k in (1..=k_end).rev() {
        let grad =
            phi_gradient(fam, k, x).ok_or_else(|| Error::Invariant("backtrace needs every level-set step".into()))?;
        let body = ws.body_at(x)?;
        let v = if grad.norm() > 1e-12 { body.support_point(grad) } else { body.center };
        let stepped = x - v * dt;
        let mut y = stepped;
        if k > 1 {
            for _ in 0..2 {
                let (Some(phi), Some(gr)) = (fam.phi_at(k - 1, y), phi_gradient(fam, k - 1, y)) else { break };
                if gr.norm_squared() < 1e-12 || phi.abs() >= fam.clamp {
                    break;
                }
                y -= gr * (phi / gr.norm_squared());
            }
            // Near the seed the front is only a few cells wide and the snap is unreliable.
            if (y - stepped).norm() > 0.25 * fam.grid.h() {
                y = stepped;
            }
        }
        if !ws.domain.contains(y) {
            break;
        }
        x = y;
        pts.push(x);
    }
    pts.reverse();
    Ok(pts)
}

struct Quadratic {
    c: [Vec2; 3],
}

impl Quadratic {
    fn eval(&self, t: f64) -> Vec2 {
        self.c[0] + self.c[1] * t + self.c[2] * (t * t)
    }
}

/// Least-squares quadratic in the parameter.
fn fit_quadratic(pts: &[Vec2], dt: f64) -> Quadratic {
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    let mut rx = nalgebra::Vector3::<f64>::zeros();
    let mut ry = nalgebra::Vector3::<f64>::zeros();
    for (i, p) in pts.iter().enumerate() {
        let t = i as f64 * dt;
        let b = nalgebra::Vector3::new(1.0, t, t * t);
        m += b * b.transpose();
        rx += b * p.x;
        ry += b * p.y;
    }
    let inv = m.try_inverse().unwrap_or_else(nalgebra::Matrix3::zeros);
    let (cx, cy) = (inv * rx, inv * ry);
    Quadratic { c: [Vec2::new(cx[0], cy[0]), Vec2::new(cx[1], cy[1]), Vec2::new(cx[2], cy[2])] }
}
