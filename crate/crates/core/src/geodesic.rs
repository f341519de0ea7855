//! Geodesics of `F` and `F_l` from the Euler-Lagrange equations of `L = F^2`, with
//! derivatives of `L` taken by finite differences.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::norm::{perp, quad, Ellipse, Mat2, Vec2};
use crate::reach::ReachabilityFamily;
use crate::wind::{lower_sheet_value, upper_sheet_value, WindStructure};

pub const FAN_SIZE: usize = 64;
pub const LIGHTLIKE_MARGIN: f64 = 1e-6;
const DEDUP_ANGLE: f64 = 2.0 * std::f64::consts::PI / 180.0;
const STEP_TOLERANCE: f64 = 1e-10;
const NEWTON_ITERATIONS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricTag {
    F,
    Fl,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Left through the bounding box.
    LeftBox,
    /// Ran into an excluded region.
    HitExclusion,
    /// Velocity came within the margin of the lightlike boundary.
    NearLightlike,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicSample {
    pub t: f64,
    pub x: Vec2,
    pub v: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicPath {
    pub samples: Vec<GeodesicSample>,
    pub metric: MetricTag,
    pub length_f: f64,
    pub length_fl: f64,
    pub truncated: Option<Truncation>,
}

impl GeodesicPath {
    pub fn start(&self) -> Vec2 {
        self.samples[0].x
    }

    pub fn end(&self) -> Vec2 {
        self.samples.last().expect("non-empty").x
    }

    /// Parameter span `b - a`.
    pub fn duration(&self) -> f64 {
        self.samples.last().expect("non-empty").t - self.samples[0].t
    }

    /// Straight wind curve from `x` to `y` over parameter length `duration`.
    pub fn straight(ws: &WindStructure, x: Vec2, y: Vec2, duration: f64, samples: usize) -> Result<GeodesicPath> {
        let v = (y - x) / duration;
        let n = samples.max(2);
        let pts: Vec<GeodesicSample> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                GeodesicSample { t: s * duration, x: x + (y - x) * s, v }
            })
            .collect();
        let (length_f, length_fl) = polyline_lengths(ws, &pts.iter().map(|s| s.x).collect::<Vec<_>>())?;
        Ok(GeodesicPath { samples: pts, metric: MetricTag::F, length_f, length_fl, truncated: None })
    }

    /// Largest relative drift of `L` along the samples.
    pub fn energy_drift(&self, ws: &WindStructure) -> Result<f64> {
        let l0 = lagrangian(ws, self.metric, self.samples[0].x, self.samples[0].v)?;
        let mut worst: f64 = 0.0;
        for s in &self.samples {
            let l = lagrangian(ws, self.metric, s.x, s.v)?;
            worst = worst.max((l - l0).abs() / l0.abs().max(f64::MIN_POSITIVE));
        }
        Ok(worst)
    }
}

#[inline]
fn sheet(body: &Ellipse, tag: MetricTag, v: Vec2) -> f64 {
    match tag {
        MetricTag::F => lower_sheet_value(body, v),
        MetricTag::Fl => upper_sheet_value(body, v),
    }
}

/// `L = F^2` or `F_l^2` at `(x, v)`.
pub fn lagrangian(ws: &WindStructure, tag: MetricTag, x: Vec2, v: Vec2) -> Result<f64> {
    let f = sheet(&ws.body_at(x)?, tag, v);
    Ok(f * f)
}

/// Distance of `v` from the lightlike boundary of the body's cone, as a unitless ratio.
pub fn lightlike_margin(body: &Ellipse, v: Vec2) -> f64 {
    let a = quad(&body.shape, v);
    let b = v.dot(&(body.shape * body.center));
    let cc = quad(&body.shape, body.center) - 1.0;
    if cc < 0.0 {
        return 1.0;
    }
    if b <= 0.0 || a <= 0.0 {
        return 0.0;
    }
    let disc = (b * b - a * cc).max(0.0);
    (b / (a * (cc + 1.0)).sqrt()).min(disc.sqrt() / b)
}

/// F and F_l lengths of a polyline, evaluating each segment at its midpoint.
pub fn polyline_lengths(ws: &WindStructure, pts: &[Vec2]) -> Result<(f64, f64)> {
    let mut lf = 0.0;
    let mut lfl = 0.0;
    for w in pts.windows(2) {
        let d = w[1] - w[0];
        if d.norm() == 0.0 {
            continue;
        }
        let body = ws.body_at((w[0] + w[1]) * 0.5)?;
        lf += lower_sheet_value(&body, d);
        lfl += upper_sheet_value(&body, d);
    }
    Ok((lf, lfl))
}

struct Dynamics<'a> {
    ws: &'a WindStructure,
    tag: MetricTag,
    constant: bool,
    hx: f64,
}

impl Dynamics<'_> {
    fn l(&self, x: Vec2, v: Vec2) -> f64 {
        lagrangian(self.ws, self.tag, x, v).unwrap_or(f64::NAN)
    }

    /// Velocity step: small against `|v|` and against the distance to the lightlike edge.
    fn v_step(&self, x: Vec2, v: Vec2) -> f64 {
        let margin = self.ws.body_at(x).map(|b| lightlike_margin(&b, v)).unwrap_or(1.0);
        v.norm() * 1e-3f64.min(0.05 * margin)
    }

    /// `dL/du` and `d2L/du2` across `v`, with `u` the unit normal to `v`.
    fn across(&self, x: Vec2, v: Vec2, h: f64) -> (f64, f64) {
        let u = perp(v) / v.norm();
        let l0 = self.l(x, v);
        let diffs = |h: f64| {
            let (p, m) = (self.l(x, v + u * h), self.l(x, v - u * h));
            ((p - m) / (2.0 * h), (p - 2.0 * l0 + m) / (h * h))
        };
        let (d1, s1) = diffs(h);
        let (d2, s2) = diffs(0.5 * h);
        ((4.0 * d2 - d1) / 3.0, (4.0 * s2 - s1) / 3.0)
    }

    /// `L_v` and `L_vv` in the frame `(v/|v|, u)`. Homogeneity gives the `v` components
    /// exactly; only the normal ones need differences.
    fn frame_derivatives(&self, x: Vec2, v: Vec2) -> (Vec2, Mat2) {
        let n = v.norm();
        let l = self.l(x, v);
        let (lu, luu) = self.across(x, v, self.v_step(x, v));
        let grad = Vec2::new(2.0 * l / n, lu);
        let hess = Mat2::new(2.0 * l / (n * n), lu / n, lu / n, luu);
        (grad, hess)
    }

    /// `L_v` in the frame of `v`, at a shifted base point.
    fn normal_gradient(&self, x: Vec2, v: Vec2, h: f64) -> f64 {
        self.across(x, v, h).0
    }

    /// `(x', v')` from the Euler-Lagrange equations.
    fn accel(&self, x: Vec2, v: Vec2) -> Vec2 {
        if self.constant {
            return Vec2::zeros();
        }
        let n = v.norm();
        let e = v / n;
        let u = perp(e);
        let margin = self.ws.body_at(x).map(|b| lightlike_margin(&b, v)).unwrap_or(1.0);
        let h = self.hx * margin.min(1.0).max(1e-3);
        let central = |f: &dyn Fn(f64) -> f64, h: f64| {
            let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
            (4.0 * d(0.5 * h) - d(h)) / 3.0
        };
        let lx_e = central(&|s| self.l(x + e * s, v), h);
        let lx_u = central(&|s| self.l(x + u * s, v), h);
        let (_, hess) = self.frame_derivatives(x, v);
        // Derivative of L_v along the flow direction: the e component follows from
        // homogeneity, the normal one needs a nested difference.
        let vs = self.v_step(x, v);
        let mixed_e = 2.0 * lx_e;
        let mixed_u = n * central(&|s| self.normal_gradient(x + e * s, v, vs), h);
        let rhs = Vec2::new(lx_e - mixed_e, lx_u - mixed_u);
        match hess.try_inverse() {
            Some(inv) => {
                let a = inv * rhs;
                e * a.x + u * a.y
            }
            None => Vec2::repeat(f64::NAN),
        }
    }
}

#[derive(Clone, Copy)]
struct State {
    x: Vec2,
    v: Vec2,
    lf: f64,
    lfl: f64,
}

impl Dynamics<'_> {
    fn deriv(&self, s: &State) -> State {
        let body = self.ws.body_at(s.x).ok();
        let (f, fl) = match body {
            Some(b) => (lower_sheet_value(&b, s.v), upper_sheet_value(&b, s.v)),
            None => (f64::NAN, f64::NAN),
        };
        State { x: s.v, v: self.accel(s.x, s.v), lf: f, lfl: fl }
    }

    fn rk4(&self, s: &State, h: f64) -> State {
        let add = |a: &State, k: &State, c: f64| State {
            x: a.x + k.x * c,
            v: a.v + k.v * c,
            lf: a.lf + k.lf * c,
            lfl: a.lfl + k.lfl * c,
        };
        let k1 = self.deriv(s);
        let k2 = self.deriv(&add(s, &k1, 0.5 * h));
        let k3 = self.deriv(&add(s, &k2, 0.5 * h));
        let k4 = self.deriv(&add(s, &k3, h));
        State {
            x: s.x + (k1.x + k2.x * 2.0 + k3.x * 2.0 + k4.x) * (h / 6.0),
            v: s.v + (k1.v + k2.v * 2.0 + k3.v * 2.0 + k4.v) * (h / 6.0),
            lf: s.lf + (k1.lf + 2.0 * k2.lf + 2.0 * k3.lf + k4.lf) * (h / 6.0),
            lfl: s.lfl + (k1.lfl + 2.0 * k2.lfl + 2.0 * k3.lfl + k4.lfl) * (h / 6.0),
        }
    }
}

/// Integrates the geodesic from `p` with initial direction `v`, rescaled to unit speed for
/// the chosen metric, up to parameter `length`.
pub fn geodesic_ivp(
    ws: &WindStructure,
    p: Vec2,
    v: Vec2,
    length: f64,
    dt: Option<f64>,
    tag: MetricTag,
) -> Result<GeodesicPath> {
    ws.domain.check(p)?;
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::Config(format!("geodesic length must be positive, got {length}")));
    }
    if v.norm() == 0.0 {
        return Err(Error::ZeroVector);
    }
    let body = ws.body_at(p)?;
    if lightlike_margin(&body, v) < LIGHTLIKE_MARGIN {
        let f = sheet(&body, tag, v);
        return Err(if f.is_finite() {
            Error::DegenerateDirection
        } else {
            Error::Inapplicable(format!("direction ({}, {}) is outside the admissible cone", v.x, v.y))
        });
    }
    let f = sheet(&body, tag, v);
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::Inapplicable(format!("direction ({}, {}) has no {:?} value at this point", v.x, v.y, tag)));
    }
    let v = v / f;
    let dt = dt.unwrap_or(length / 1000.0);
    if !(dt > 0.0) {
        return Err(Error::Config("geodesic step must be positive".into()));
    }
    let dyn_ = Dynamics { ws, tag, constant: ws.is_constant(), hx: 1e-5 * ws.grid().diameter() };
    let h_max = 4.0 * dt;
    let h_min = dt * 1e-6;
    let mut h = dt;
    let mut t = 0.0;
    let mut s = State { x: p, v, lf: 0.0, lfl: 0.0 };
    let mut samples = vec![GeodesicSample { t, x: p, v }];
    let mut truncated = None;
    while t < length - 1e-14 * length {
        let step = h.min(length - t);
        let full = dyn_.rk4(&s, step);
        let half = dyn_.rk4(&s, 0.5 * step);
        let two = dyn_.rk4(&half, 0.5 * step);
        let err = ((two.x - full.x).norm() + (two.v - full.v).norm()) / 15.0;
        let scale = 1.0 + two.x.norm() + two.v.norm();
        if !err.is_finite() || !two.x.x.is_finite() {
            h = 0.25 * step;
            if h < h_min {
                return Err(Error::Stiffness { t, step: h });
            }
            continue;
        }
        if err > STEP_TOLERANCE * scale {
            h = step * (0.9 * (STEP_TOLERANCE * scale / err).powf(0.2)).max(0.2);
            if h < h_min {
                return Err(Error::Stiffness { t, step: h });
            }
            continue;
        }
        let next =
            State { x: two.x + (two.x - full.x) / 15.0, v: two.v + (two.v - full.v) / 15.0, lf: two.lf, lfl: two.lfl };
        if !ws.domain.contains(next.x) {
            truncated = Some(if ws.domain.in_box(next.x) { Truncation::HitExclusion } else { Truncation::LeftBox });
            break;
        }
        let margin = ws.body_at(next.x).map(|b| lightlike_margin(&b, next.v)).unwrap_or(0.0);
        if margin < LIGHTLIKE_MARGIN {
            truncated = Some(Truncation::NearLightlike);
            break;
        }
        t += step;
        s = next;
        samples.push(GeodesicSample { t, x: s.x, v: s.v });
        let grow = if err > 0.0 { (0.9 * (STEP_TOLERANCE * scale / err).powf(0.2)).min(2.0) } else { 2.0 };
        h = (step * grow).min(h_max);
    }
    Ok(GeodesicPath { samples, metric: tag, length_f: s.lf, length_fl: s.lfl, truncated })
}

/// Euler-Lagrange residual along a path given only by its points, relative to `|v|^2`;
/// finite differences of the polyline supply velocity and acceleration.
pub fn el_residual(ws: &WindStructure, tag: MetricTag, pts: &[Vec2], dt: f64) -> Result<f64> {
    if pts.len() < 5 {
        return Ok(0.0);
    }
    let dyn_ = Dynamics { ws, tag, constant: ws.is_constant(), hx: 1e-5 * ws.grid().diameter() };
    let mut worst: f64 = 0.0;
    for i in 1..pts.len() - 1 {
        let v = (pts[i + 1] - pts[i - 1]) / (2.0 * dt);
        let a = (pts[i + 1] - pts[i] * 2.0 + pts[i - 1]) / (dt * dt);
        if v.norm() == 0.0 {
            continue;
        }
        let expected = dyn_.accel(pts[i], v);
        // Tangential acceleration is a reparametrization; compare the normal part.
        let n = Vec2::new(-v.y, v.x) / v.norm();
        let r = (a - expected).dot(&n).abs() / v.norm_squared();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Lower bound on Euclidean speed used to size shots; critical points have zero minimum
/// speed, so it is floored at a tenth of the largest speed.
pub fn speed_floor(ws: &WindStructure) -> f64 {
    ws.min_speed().max(0.1 * ws.max_speed())
}

/// Parameter length after which a unit-speed geodesic has certainly crossed the box.
pub fn escape_length(ws: &WindStructure) -> f64 {
    ws.grid().diameter() / speed_floor(ws)
}

/// Connecting geodesics from `x` to `y`, by a fan of shots refined with Newton.
pub fn connect(ws: &WindStructure, x: Vec2, y: Vec2, tag: MetricTag) -> Result<Vec<GeodesicPath>> {
    ws.domain.check(x)?;
    ws.domain.check(y)?;
    if (x - y).norm() == 0.0 {
        return Err(Error::Config("connect needs distinct points".into()));
    }
    let diam = ws.grid().diameter();
    let tol = 1e-5 * diam;
    let max_len = escape_length(ws).min(3.0 * (x - y).norm() / speed_floor(ws));
    let body = ws.body_at(x)?;
    let shoot = |theta: f64, len: f64| -> Option<GeodesicPath> {
        let d = Vec2::new(theta.cos(), theta.sin());
        if lightlike_margin(&body, d) < LIGHTLIKE_MARGIN || !sheet(&body, tag, d).is_finite() {
            return None;
        }
        geodesic_ivp(ws, x, d, len, Some(len / 400.0), tag).ok()
    };
    // Closest approach of each fan member.
    let mut fan: Vec<Option<(f64, f64, f64)>> = Vec::with_capacity(FAN_SIZE);
    for i in 0..FAN_SIZE {
        let theta = TAU * i as f64 / FAN_SIZE as f64;
        fan.push(shoot(theta, max_len).map(|p| {
            let (k, d) = p
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| (k, (s.x - y).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            (theta, p.samples[k].t, d)
        }));
    }
    let dist = |i: usize| fan[i].map(|f| f.2).unwrap_or(f64::INFINITY);
    let mut seeds: Vec<(f64, f64, f64)> = (0..FAN_SIZE)
        .filter(|&i| {
            let d = dist(i);
            d.is_finite() && d <= dist((i + FAN_SIZE - 1) % FAN_SIZE) && d <= dist((i + 1) % FAN_SIZE)
        })
        .filter_map(|i| fan[i])
        .collect();
    seeds.sort_by(|a, b| a.2.total_cmp(&b.2));
    seeds.truncate(8);

    let mut found: Vec<GeodesicPath> = Vec::new();
    for (theta0, t0, _) in seeds {
        let (mut theta, mut len) = (theta0, t0.max(1e-6));
        for _ in 0..NEWTON_ITERATIONS {
            let Some(p) = shoot(theta, len) else { break };
            if p.truncated.is_some() {
                // Shorten towards the last valid point and retry.
                len = p.duration().max(1e-6) * 0.95;
                continue;
            }
            let e = p.end() - y;
            if e.norm() <= tol {
                found.push(p);
                break;
            }
            let dth = 1e-6;
            let Some(q) = shoot(theta + dth, len) else { break };
            if q.truncated.is_some() {
                break;
            }
            let j_theta = (q.end() - p.end()) / dth;
            let j_len = p.samples.last().expect("non-empty").v;
            let jac = Mat2::new(j_theta.x, j_len.x, j_theta.y, j_len.y);
            let Some(inv) = jac.try_inverse() else { break };
            let mut delta = inv * (-e);
            let cap = 0.2 / delta.x.abs().max(1e-300);
            if cap < 1.0 {
                delta *= cap;
            }
            theta += delta.x;
            len = (len + delta.y).max(1e-6 * max_len);
            if len > max_len {
                break;
            }
        }
    }
    found.sort_by(|a, b| a.length_f.total_cmp(&b.length_f));
    let mut distinct: Vec<GeodesicPath> = Vec::new();
    for p in found {
        let dir = |g: &GeodesicPath| {
            let v = g.samples.last().expect("non-empty").v;
            v.y.atan2(v.x)
        };
        let a = dir(&p);
        let dup = distinct.iter().any(|q| {
            let d = (dir(q) - a).rem_euclid(TAU);
            d.min(TAU - d) < DEDUP_ANGLE
        });
        if !dup {
            distinct.push(p);
        }
    }
    Ok(distinct)
}

/// Whether the path's endpoint lies on the c-ball boundary `Ĥ⁺ \ B⁺` at parameter `b - a`,
/// to within one cell.
pub fn is_unit_extremizing(ws: &WindStructure, path: &GeodesicPath, reach: &ReachabilityFamily) -> Result<bool> {
    let r = path.duration();
    let available = reach.time(reach.steps);
    if r > available + 0.5 * reach.dt {
        return Err(Error::InsufficientHorizon { needed: r, available });
    }
    if (reach.x0 - path.start()).norm() > 0.5 * ws.grid().h() {
        return Err(Error::Config("reachability family is not centred at the path start".into()));
    }
    let k = reach.step_for(r)?;
    let end = path.end();
    if let Some(phi) = reach.phi_at(k, end) {
        return Ok(phi.abs() <= ws.grid().h());
    }
    let Some((i, j)) = reach.grid.cell_of(end) else { return Ok(false) };
    let m = reach.c_ball(k);
    let mut occupied = false;
    let mut free = false;
    for dj in -1..=1isize {
        for di in -1..=1isize {
            if m.get_signed(i as isize + di, j as isize + dj) {
                occupied = true;
            } else {
                free = true;
            }
        }
    }
    Ok(occupied && free)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::MinkowskiNorm;
    use crate::reach::{propagate, PropagateOptions};
    use crate::wind::{BaseDomain, BaseNormField, WindField};

    fn ws(w: WindField, half: f64, n: usize) -> WindStructure {
        let d = BaseDomain::new((-half, half), (-half, half), n, n, vec![]).unwrap();
        WindStructure::with_defaults(d, BaseNormField::Constant(MinkowskiNorm::euclidean()), w).unwrap()
    }

    #[test]
    fn zero_wind_straight_line() {
        let s = ws(WindField::Constant(Vec2::zeros()), 6.0, 32);
        let p = geodesic_ivp(&s, Vec2::zeros(), Vec2::new(1.0, 0.0), 5.0, None, MetricTag::F).unwrap();
        assert!((p.end() - Vec2::new(5.0, 0.0)).norm() < 1e-9);
        assert!((p.length_f - 5.0).abs() < 1e-9);
        assert!(p.truncated.is_none());
    }

    #[test]
    fn straight_lines_satisfy_el_in_constant_wind() {
        let s = ws(WindField::Constant(Vec2::new(2.0, 0.0)), 3.0, 32);
        let pts: Vec<Vec2> = (0..50).map(|i| Vec2::new(0.01 * i as f64, 0.004 * i as f64)).collect();
        assert!(el_residual(&s, MetricTag::F, &pts, 0.01).unwrap() <= 1e-6);
    }

    #[test]
    fn rotation_energy_conserved() {
        let s = ws(WindField::RigidRotation { omega: 1.0 }, 2.0, 32);
        let p0 = Vec2::new(0.5, 0.0);
        let v = Vec2::new(0.0, 1.0);
        let path = geodesic_ivp(&s, p0, v, 1.0, None, MetricTag::F).unwrap();
        assert!(path.energy_drift(&s).unwrap() < 1e-6, "{}", path.energy_drift(&s).unwrap());
    }

    #[test]
    fn lightlike_initial_direction_rejected() {
        let s = ws(WindField::Constant(Vec2::new(2.0, 0.0)), 3.0, 32);
        let v = Vec2::new(3f64.sqrt(), 1.0);
        assert_eq!(
            geodesic_ivp(&s, Vec2::zeros(), v, 1.0, None, MetricTag::F).unwrap_err(),
            Error::DegenerateDirection
        );
    }

    #[test]
    fn connect_zero_wind() {
        let s = ws(WindField::Constant(Vec2::zeros()), 3.0, 32);
        let c = connect(&s, Vec2::zeros(), Vec2::new(1.0, 1.0), MetricTag::F).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].length_f - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn connect_critical_unreachable() {
        let s = ws(WindField::Constant(Vec2::new(1.0, 0.0)), 3.0, 32);
        let c = connect(&s, Vec2::zeros(), Vec2::new(0.0, 1.0), MetricTag::F).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn unit_extremizing_examples() {
        let s = ws(WindField::Constant(Vec2::new(2.0, 0.0)), 3.0, 128);
        let opts = PropagateOptions { snapshot_times: vec![1.0 / 3.0, 0.6], ..Default::default() };
        let fam = propagate(&s, Vec2::zeros(), 1.0, &opts).unwrap();
        let target = Vec2::new(1.0, 0.0);
        for (r, expect) in [(1.0 / 3.0, true), (0.6, false), (1.0, true)] {
            let p = GeodesicPath::straight(&s, Vec2::zeros(), target, r, 20).unwrap();
            assert_eq!(is_unit_extremizing(&s, &p, &fam).unwrap(), expect, "r = {r}");
        }
        let long = GeodesicPath::straight(&s, Vec2::zeros(), target, 1.5, 20).unwrap();
        assert!(matches!(is_unit_extremizing(&s, &long, &fam), Err(Error::InsufficientHorizon { .. })));
    }
}
