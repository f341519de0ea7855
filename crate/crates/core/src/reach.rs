//! Exact-time reachable sets of the inclusion `x' ∈ B̄_x`, by a semi-Lagrangian level-set
//! update on a narrow band.
//!
//! `phi_k` is a clamped, signed, distance-like function with `{phi_k <= 0}` the c-ball
//! `Ĥ(x0, k dt)`. One step is `phi_{k+1}(x) = min_v phi_k(x - dt v)` over the velocity body
//! at `x`, evaluated at the support point for the local normal and a window of polygon
//! vertices around it.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask};
use crate::norm::{sym_eigenvalues, Vec2};
use crate::wind::{BaseDomain, CellBody, WindStructure};

pub const BODY_VERTICES: usize = 64;
/// Half-width of the clamp on `phi`, in cells.
const CLAMP_CELLS: f64 = 5.0;
const BAND_MARGIN: usize = 3;
const VERTEX_WINDOW: isize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Clone, Debug, Default)]
pub struct PropagateOptions {
    /// Requested step; defaults to half a cell at the largest speed.
    pub dt: Option<f64>,
    pub direction: Option<Direction>,
    /// Keep `phi` at every step (needed for backtracing).
    pub store_all_phi: bool,
    /// Keep `phi` at the steps closest to these times.
    pub snapshot_times: Vec<f64>,
    /// Points whose `phi` value and open-ball test are traced at every step.
    pub probes: Vec<Vec2>,
    /// Stop once every probe has passed the open-ball test.
    pub stop_when_probes_open: bool,
}

/// Per-step record for one probe point.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeTrace {
    pub point: Vec2,
    pub phi: Vec<f64>,
    pub open: Vec<bool>,
}

/// Result of a separation query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Separation {
    Finite(f64),
    /// Not reached by the horizon while the front was still moving.
    AtLeast(f64),
    /// Not reached and the front had stopped changing.
    Infinite,
}

impl Separation {
    pub fn value(&self) -> f64 {
        match self {
            Separation::Finite(v) => *v,
            Separation::AtLeast(_) | Separation::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Separation::Finite(_))
    }
}

/// Exact-time reachable sets from one center.
#[derive(Clone, Debug)]
pub struct ReachabilityFamily {
    pub x0: Vec2,
    pub direction: Direction,
    pub grid: Grid,
    pub dt: f64,
    pub horizon: f64,
    /// Steps actually taken (may stop early on probes).
    pub steps: usize,
    /// `{phi_k <= 0}` for `k = 0..=steps`.
    pub masks: Vec<Mask>,
    pub earliest_arrival: Vec<f64>,
    pub probes: Vec<ProbeTrace>,
    pub advancing_at_cutoff: bool,
    pub clamp: f64,
    final_phi: Vec<f64>,
    snapshots: BTreeMap<usize, Vec<f32>>,
    domain: BaseDomain,
}

impl ReachabilityFamily {
    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Step whose time is closest to `r`.
    pub fn step_for(&self, r: f64) -> Result<usize> {
        let k = (r / self.dt).round() as usize;
        if r > self.time(self.steps) + 0.5 * self.dt {
            return Err(Error::InsufficientHorizon { needed: r, available: self.time(self.steps) });
        }
        Ok(k.min(self.steps))
    }

    /// The c-ball mask at a step.
    pub fn c_ball(&self, step: usize) -> &Mask {
        &self.masks[step]
    }

    /// The open-ball mask: interior of the c-ball mask.
    pub fn open_ball(&self, step: usize) -> Mask {
        if step == 0 {
            return Mask::new(self.grid.nx, self.grid.ny);
        }
        self.masks[step].eroded()
    }

    /// C-ball cells with no open-ball cell nearby, where closed and open sets collapse.
    pub fn flagged_cells(&self, step: usize) -> Mask {
        self.masks[step].difference(&self.open_ball(step).dilated(1))
    }

    pub fn has_phi(&self, step: usize) -> bool {
        step == self.steps || self.snapshots.contains_key(&step)
    }

    pub fn phi_slice(&self, step: usize) -> Option<Vec<f64>> {
        if step == self.steps {
            return Some(self.final_phi.clone());
        }
        self.snapshots.get(&step).map(|s| s.iter().map(|v| *v as f64).collect())
    }

    /// Interpolated `phi` at a point, if that step was kept.
    pub fn phi_at(&self, step: usize, p: Vec2) -> Option<f64> {
        let blocked = |q: Vec2| self.domain.is_excluded(q);
        if step == self.steps {
            return Some(sample_with(&self.grid, |k| self.final_phi[k], blocked, self.clamp, p));
        }
        let snap = self.snapshots.get(&step)?;
        Some(sample_with(&self.grid, |k| snap[k] as f64, blocked, self.clamp, p))
    }

    /// Open-ball point test: `phi < 0` at `p` and on a ring of radius half a cell.
    pub fn point_open(&self, step: usize, p: Vec2) -> Option<bool> {
        let centre = self.phi_at(step, p)?;
        if centre >= 0.0 {
            return Some(false);
        }
        let r = 0.5 * self.grid.h();
        for i in 0..8 {
            let t = TAU * i as f64 / 8.0;
            if self.phi_at(step, p + Vec2::new(t.cos(), t.sin()) * r)? >= 0.0 {
                return Some(false);
            }
        }
        Some(true)
    }

    /// Whether the cell of `p` is within `cells` of the c-ball mask.
    pub fn cell_within(&self, step: usize, p: Vec2, cells: usize) -> bool {
        let Some((i, j)) = self.grid.cell_of(p) else { return false };
        let m = &self.masks[step];
        let r = cells as isize;
        (-r..=r).any(|dj| (-r..=r).any(|di| m.get_signed(i as isize + di, j as isize + dj)))
    }

    /// Earliest arrival at the node nearest to `p`.
    pub fn arrival_near(&self, p: Vec2) -> f64 {
        match self.grid.cell_of(p) {
            Some((i, j)) => self.earliest_arrival[self.grid.index(i, j)],
            None => f64::INFINITY,
        }
    }

    /// Separation to a traced probe.
    pub fn probe_separation(&self, probe: usize) -> Separation {
        let tr = &self.probes[probe];
        let Some(k_open) = tr.open.iter().position(|o| *o) else {
            return if self.advancing_at_cutoff {
                Separation::AtLeast(self.time(self.steps))
            } else {
                Separation::Infinite
            };
        };
        let mut j0 = k_open;
        while j0 > 0 && tr.phi[j0 - 1] <= 0.0 {
            j0 -= 1;
        }
        if j0 == 0 {
            return Separation::Finite(0.0);
        }
        let (a, b) = (tr.phi[j0 - 1], tr.phi[j0]);
        let frac = if a - b > 0.0 { a / (a - b) } else { 1.0 };
        Separation::Finite(self.time(j0 - 1) + frac * self.dt)
    }
}

/// Catmull-Rom weights.
#[inline]
fn cr_weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0), 0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)]
}

/// Limited bicubic interpolation; outside the box or inside an exclusion reads as `clamp`.
#[inline]
fn sample_with(
    grid: &Grid,
    get: impl Fn(usize) -> f64,
    excluded_at: impl Fn(Vec2) -> bool,
    clamp: f64,
    p: Vec2,
) -> f64 {
    if !grid.in_box(p) || excluded_at(p) {
        return clamp;
    }
    let (u, v) = grid.to_node(p);
    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    let i = u.floor() as isize;
    let j = v.floor() as isize;
    let fx = u - i as f64;
    let fy = v - j as f64;
    let ci = |a: isize| a.clamp(0, nx - 1) as usize;
    let cj = |b: isize| b.clamp(0, ny - 1) as usize;
    let wx = cr_weights(fx);
    let wy = cr_weights(fy);
    let mut acc = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (dj, wyj) in wy.iter().enumerate() {
        let row = cj(j - 1 + dj as isize) * grid.nx;
        let mut r = 0.0;
        for (di, wxi) in wx.iter().enumerate() {
            let val = get(row + ci(i - 1 + di as isize));
            r += wxi * val;
            if (di == 1 || di == 2) && (dj == 1 || dj == 2) {
                lo = lo.min(val);
                hi = hi.max(val);
            }
        }
        acc += wyj * r;
    }
    acc.clamp(lo, hi)
}

/// Largest stable step for a structure.
pub fn max_dt(ws: &WindStructure) -> f64 {
    let g = ws.grid();
    g.hx.min(g.hy) / ws.max_speed()
}

pub fn default_dt(ws: &WindStructure) -> f64 {
    0.5 * max_dt(ws)
}

/// Nodes with `|phi| < clamp`, dilated by the band margin, skipping excluded nodes.
fn band(phi: &[f64], excluded: &[bool], nx: usize, ny: usize, clamp: f64) -> Vec<usize> {
    let near: Vec<bool> = phi.iter().map(|v| v.abs() < clamp).collect();
    let m = BAND_MARGIN;
    let mut horiz = vec![false; nx * ny];
    for j in 0..ny {
        let row = &near[j * nx..(j + 1) * nx];
        let mut last: Option<usize> = None;
        // Forward pass marks cells within m to the right of a near cell, backward the left.
        for i in 0..nx {
            if row[i] {
                last = Some(i);
            }
            if matches!(last, Some(l) if i - l <= m) {
                horiz[j * nx + i] = true;
            }
        }
        let mut next: Option<usize> = None;
        for i in (0..nx).rev() {
            if row[i] {
                next = Some(i);
            }
            if matches!(next, Some(n) if n - i <= m) {
                horiz[j * nx + i] = true;
            }
        }
    }
    let mut out = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let lo = j.saturating_sub(m);
            let hi = (j + m).min(ny - 1);
            if (lo..=hi).any(|jj| horiz[jj * nx + i]) && !excluded[j * nx + i] {
                out.push(j * nx + i);
            }
        }
    }
    out
}

struct Stepper<'a> {
    ws: &'a WindStructure,
    grid: Grid,
    dt: f64,
    clamp: f64,
    has_exclusions: bool,
    unit: Vec<Vec2>,
}

impl Stepper<'_> {
    #[inline]
    fn foot_blocked(&self, p: Vec2) -> bool {
        !self.grid.in_box(p) || (self.has_exclusions && self.ws.domain.is_excluded(p))
    }

    #[inline]
    fn interp(&self, phi: &[f64], p: Vec2) -> f64 {
        sample_with(&self.grid, |k| phi[k], |q| self.foot_blocked(q), self.clamp, p)
    }

    fn gradient(&self, phi: &[f64], i: usize, j: usize) -> Vec2 {
        let g = &self.grid;
        let at = |a: usize, b: usize| phi[g.index(a, b)];
        let (il, ir) = (i.saturating_sub(1), (i + 1).min(g.nx - 1));
        let (jl, jr) = (j.saturating_sub(1), (j + 1).min(g.ny - 1));
        let gx = (at(ir, j) - at(il, j)) / ((ir - il).max(1) as f64 * g.hx);
        let gy = (at(i, jr) - at(i, jl)) / ((jr - jl).max(1) as f64 * g.hy);
        Vec2::new(gx, gy)
    }

    fn flat_around(&self, phi: &[f64], i: usize, j: usize, value: f64) -> bool {
        let g = &self.grid;
        let (i0, i1) = (i.saturating_sub(2), (i + 2).min(g.nx - 1));
        let (j0, j1) = (j.saturating_sub(2), (j + 2).min(g.ny - 1));
        (j0..=j1).all(|b| phi[g.index(i0, b)..=g.index(i1, b)].iter().all(|v| *v == value))
    }

    fn update(&self, phi: &[f64], k: usize) -> f64 {
        let (i, j) = self.grid.coords(k);
        let x = self.grid.center(i, j);
        let body: &CellBody = self.ws.cell_body(k);
        let mut best = if body.origin_inside { phi[k] } else { f64::INFINITY };
        // The body holds a disk of radius `inradius` about its centre, so inside the
        // translated set the depth grows by at least that much; this deepens the interior.
        let carried = self.interp(phi, x - body.ellipse.center * self.dt);
        if carried < 0.0 {
            best = best.min(carried - body.inradius * self.dt);
        }
        let grad = self.gradient(phi, i, j);
        let gn = grad.norm();
        let vertex = |m: usize| body.ellipse.center + body.map * self.unit[m % BODY_VERTICES];
        if gn > 0.3 {
            // Support point of the body for the outward normal.
            let u = body.map.transpose() * (grad / gn);
            let u = u / u.norm();
            let v_star = body.ellipse.center + body.map * u;
            best = best.min(self.interp(phi, x - v_star * self.dt));
            let centre_idx = (u.y.atan2(u.x) / TAU * BODY_VERTICES as f64).round() as isize;
            for d in -VERTEX_WINDOW..=VERTEX_WINDOW {
                let m = (centre_idx + d).rem_euclid(BODY_VERTICES as isize) as usize;
                best = best.min(self.interp(phi, x - vertex(m) * self.dt));
            }
        } else {
            // Feet stay within one cell, so a flat clamped neighbourhood cannot change.
            let own = phi[k];
            if own.abs() >= self.clamp && self.flat_around(phi, i, j, own) {
                return own;
            }
            // Far from the front only the magnitude matters; a coarser scan will do.
            let stride = if own.abs() >= 0.5 * self.clamp { 4 } else { 1 };
            for m in (0..BODY_VERTICES).step_by(stride) {
                best = best.min(self.interp(phi, x - vertex(m) * self.dt));
            }
        }
        // Snap rounding drift so saturated regions drop out of the band.
        if best.abs() >= self.clamp * (1.0 - 1e-9) {
            best.signum() * self.clamp
        } else {
            best
        }
    }
}

fn eval_probe(grid: &Grid, phi: &[f64], blocked: &impl Fn(Vec2) -> bool, clamp: f64, p: Vec2) -> (f64, bool) {
    let at = |q: Vec2| sample_with(grid, |k| phi[k], blocked, clamp, q);
    let centre = at(p);
    let mut open = centre < 0.0;
    if open {
        let r = 0.5 * grid.h();
        for i in 0..8 {
            let t = TAU * i as f64 / 8.0;
            if at(p + Vec2::new(t.cos(), t.sin()) * r) >= 0.0 {
                open = false;
                break;
            }
        }
    }
    (centre, open)
}

/// Computes `Ĥ(x0, k dt)` for `k dt` up to `horizon`.
pub fn propagate(ws: &WindStructure, x0: Vec2, horizon: f64, opts: &PropagateOptions) -> Result<ReachabilityFamily> {
    let direction = opts.direction.unwrap_or(Direction::Forward);
    let reversed;
    let ws = match direction {
        Direction::Forward => ws,
        Direction::Backward => {
            reversed = ws.reversed();
            &reversed
        }
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Config(format!("horizon must be positive and finite, got {horizon}")));
    }
    ws.domain.check(x0)?;
    let limit = max_dt(ws);
    let requested = opts.dt.unwrap_or(0.5 * limit);
    if !(requested > 0.0) || requested > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt: requested, limit });
    }
    let steps = (horizon / requested - 1e-9).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;

    let grid = ws.grid();
    let n = grid.len();
    let clamp = CLAMP_CELLS * grid.h();
    let excluded: Vec<bool> = (0..n).map(|k| ws.domain.is_excluded(grid.center_of(k))).collect();
    let stepper = Stepper {
        ws,
        grid,
        dt,
        clamp,
        has_exclusions: !ws.domain.exclusions.is_empty(),
        unit: (0..BODY_VERTICES)
            .map(|m| {
                let t = TAU * m as f64 / BODY_VERTICES as f64;
                Vec2::new(t.cos(), t.sin())
            })
            .collect(),
    };

    // Frozen-coefficient start: Ĥ(x0, t) ≈ x0 + t B̄_{x0} until it spans a couple of cells.
    let body0 = ws.body_at(x0)?;
    let (lmin, lmax) = sym_eigenvalues(&body0.shape);
    let (a_max, a_min) = (1.0 / lmin.sqrt(), 1.0 / lmax.sqrt());
    let gauge_scale = (a_min * a_max).sqrt();
    let k0 = ((2.0 * grid.h() / (dt * a_min)).ceil() as usize).clamp(1, steps);
    let analytic = |t: f64| -> Vec<f64> {
        (0..n)
            .map(|k| {
                if excluded[k] {
                    return clamp;
                }
                let y = grid.center_of(k) - x0;
                let d = y - body0.center * t;
                let g = (d.dot(&(body0.shape * d))).max(0.0).sqrt();
                ((g - t) * gauge_scale).clamp(-clamp, clamp)
            })
            .collect()
    };

    let snapshot_steps: Vec<usize> =
        opts.snapshot_times.iter().map(|t| ((t / dt).round() as usize).min(steps)).collect();
    let mut snapshots = BTreeMap::new();
    let keep = |k: usize| opts.store_all_phi || snapshot_steps.contains(&k);

    let blocked = |q: Vec2| stepper.foot_blocked(q);
    let mut probes: Vec<ProbeTrace> =
        opts.probes.iter().map(|p| ProbeTrace { point: *p, phi: Vec::new(), open: Vec::new() }).collect();

    let x0_cell = grid.cell_of(x0).map(|(i, j)| grid.index(i, j)).expect("x0 in domain");
    let mut arrival = vec![f64::INFINITY; n];
    arrival[x0_cell] = 0.0;

    // Step 0: the point itself.
    let mut phi: Vec<f64> =
        (0..n).map(|k| if excluded[k] { clamp } else { (grid.center_of(k) - x0).norm().min(clamp) }).collect();
    let mut m0 = Mask::new(grid.nx, grid.ny);
    m0.set_index(x0_cell, true);
    let mut masks = vec![m0];
    if keep(0) {
        snapshots.insert(0, phi.iter().map(|v| *v as f32).collect());
    }
    for (tr, p) in probes.iter_mut().zip(&opts.probes) {
        let d = (p - x0).norm();
        tr.phi.push(d.min(clamp));
        tr.open.push(false);
    }

    let mut taken = 0;
    for k in 1..=steps {
        let next: Vec<f64> = if k <= k0 {
            analytic(k as f64 * dt)
        } else {
            let active = band(&phi, &excluded, grid.nx, grid.ny, clamp);
            let updates: Vec<(usize, f64)> = active.par_iter().map(|&idx| (idx, stepper.update(&phi, idx))).collect();
            let mut next = phi.clone();
            for (idx, v) in updates {
                next[idx] = v;
            }
            next
        };
        let t_prev = (k - 1) as f64 * dt;
        let mut mask = Mask::new(grid.nx, grid.ny);
        for idx in 0..n {
            if next[idx] <= 0.0 && !excluded[idx] {
                mask.set_index(idx, true);
                if arrival[idx].is_infinite() {
                    let a = phi[idx];
                    let b = next[idx];
                    let frac = if a > 0.0 && a - b > 0.0 { a / (a - b) } else { 1.0 };
                    arrival[idx] = t_prev + frac * dt;
                }
            }
        }
        if mask.is_empty() {
            // Set smaller than a cell: keep the cell holding its centre.
            if let Some((i, j)) = grid.cell_of(x0 + body0.center * (k as f64 * dt)) {
                let idx = grid.index(i, j);
                if !excluded[idx] {
                    mask.set_index(idx, true);
                    if arrival[idx].is_infinite() {
                        arrival[idx] = k as f64 * dt;
                    }
                }
            }
        }
        phi = next;
        masks.push(mask);
        if keep(k) {
            snapshots.insert(k, phi.iter().map(|v| *v as f32).collect());
        }
        for tr in probes.iter_mut() {
            let (v, open) = eval_probe(&grid, &phi, &blocked, clamp, tr.point);
            tr.phi.push(v);
            tr.open.push(open);
        }
        taken = k;
        if opts.stop_when_probes_open && !probes.is_empty() && probes.iter().all(|t| t.open.iter().any(|o| *o)) {
            break;
        }
    }

    let lag = (taken / 10).max(1).min(taken);
    let advancing_at_cutoff = masks[taken] != masks[taken - lag];
    Ok(ReachabilityFamily {
        x0,
        direction,
        grid,
        dt,
        horizon,
        steps: taken,
        masks,
        earliest_arrival: arrival,
        probes,
        advancing_at_cutoff,
        clamp,
        final_phi: phi,
        snapshots,
        domain: ws.domain.clone(),
    })
}

/// Separation `d_F(x, y)` from the first time `y` is in the open ball.
pub fn separation(ws: &WindStructure, x: Vec2, y: Vec2, horizon: f64, dt: Option<f64>) -> Result<Separation> {
    ws.domain.check(y)?;
    let opts = PropagateOptions { dt, probes: vec![y], stop_when_probes_open: true, ..Default::default() };
    let fam = propagate(ws, x, horizon, &opts)?;
    Ok(fam.probe_separation(0))
}

/// Separations from `x` to several points with one propagation.
pub fn separations(ws: &WindStructure, x: Vec2, ys: &[Vec2], horizon: f64, dt: Option<f64>) -> Result<Vec<Separation>> {
    for y in ys {
        ws.domain.check(*y)?;
    }
    let opts = PropagateOptions { dt, probes: ys.to_vec(), stop_when_probes_open: true, ..Default::default() };
    let fam = propagate(ws, x, horizon, &opts)?;
    Ok((0..ys.len()).map(|i| fam.probe_separation(i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::MinkowskiNorm;
    use crate::wind::{BaseNormField, WindField};

    fn constant(w: Vec2, n: usize) -> WindStructure {
        let d = BaseDomain::new((-3.0, 3.0), (-3.0, 3.0), n, n, vec![]).unwrap();
        WindStructure::with_defaults(d, BaseNormField::Constant(MinkowskiNorm::euclidean()), WindField::Constant(w))
            .unwrap()
    }

    #[test]
    fn catmull_rom_reproduces_cubics() {
        let w = cr_weights(0.3);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let vals = [-1.0f64, 0.0, 1.0, 2.0];
        let got: f64 = w.iter().zip(vals).map(|(a, b)| a * b).sum();
        assert!((got - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_wind_disk() {
        let ws = constant(Vec2::zeros(), 96);
        let fam = propagate(&ws, Vec2::zeros(), 1.0, &PropagateOptions::default()).unwrap();
        let g = fam.grid;
        let m = fam.c_ball(fam.steps);
        for k in 0..g.len() {
            let r = g.center_of(k).norm();
            if r < 1.0 - 2.0 * g.h() {
                assert!(m.get_index(k), "missing interior node at r = {r}");
            }
            if r > 1.0 + 2.0 * g.h() {
                assert!(!m.get_index(k), "spurious node at r = {r}");
            }
        }
    }

    #[test]
    fn strong_wind_leaves_center() {
        let ws = constant(Vec2::new(2.0, 0.0), 64);
        let fam = propagate(&ws, Vec2::zeros(), 0.5, &PropagateOptions::default()).unwrap();
        let (i, j) = fam.grid.cell_of(Vec2::zeros()).unwrap();
        for k in 1..=fam.steps {
            if fam.time(k) >= 2.0 * fam.grid.h() {
                assert!(!fam.c_ball(k).get(i, j), "center occupied at step {k}");
            }
        }
    }

    #[test]
    fn cfl_violation() {
        let ws = constant(Vec2::zeros(), 32);
        let opts = PropagateOptions { dt: Some(1.0), ..Default::default() };
        assert!(matches!(propagate(&ws, Vec2::zeros(), 1.0, &opts), Err(Error::Cfl { .. })));
    }

    #[test]
    fn euclidean_separation() {
        let d = BaseDomain::new((-1.0, 4.5), (-1.0, 4.5), 128, 128, vec![]).unwrap();
        let ws = WindStructure::with_defaults(
            d,
            BaseNormField::Constant(MinkowskiNorm::euclidean()),
            WindField::Constant(Vec2::zeros()),
        )
        .unwrap();
        let s = separation(&ws, Vec2::zeros(), Vec2::new(3.0, 4.0), 6.0, None).unwrap();
        let h = ws.grid().h();
        assert!((s.value() - 5.0).abs() <= 2.0 * h, "{s:?}");
    }

    #[test]
    fn kropina_center_never_reentered() {
        let ws = constant(Vec2::new(1.0, 0.0), 64);
        let s = separation(&ws, Vec2::new(-2.0, 0.0), Vec2::new(-2.0, 0.0), 1.0, None).unwrap();
        assert_eq!(s, Separation::AtLeast(1.0));
    }

    #[test]
    fn band_covers_margin() {
        let nx = 20;
        let mut phi = vec![1.0; nx * nx];
        phi[10 * nx + 10] = 0.0;
        let b = band(&phi, &vec![false; nx * nx], nx, nx, 0.5);
        assert_eq!(b.len(), 49);
    }
}
