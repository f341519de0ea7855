//! Stationary arrival times by fast sweeping with a semi-Lagrangian local solver.
//!
//! Only valid where waiting is allowed (origin inside every body), which makes the
//! earliest-arrival function the viscosity solution of `S(x, ∇T) = 1`.

use crate::error::{Error, Result};
use crate::norm::Vec2;
use crate::wind::{lower_sheet_value, RegionClass, WindStructure};

pub const SWEEP_TOLERANCE: f64 = 1e-8;
const MAX_SWEEPS: usize = 400;
const GOLDEN_ITERATIONS: usize = 48;

/// Arrival-time grid plus solver statistics.
#[derive(Clone, Debug)]
pub struct ArrivalField {
    pub values: Vec<f64>,
    pub sweeps: usize,
    pub last_update: f64,
}

/// Neighbour offsets in counter-clockwise order; consecutive pairs span the 8 triangles.
const RING: [(isize, isize); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn golden(f: impl Fn(f64) -> f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    f(0.0).min(f(1.0)).min(fc).min(fd)
}

/// Arrival times from `x0` over the whole grid.
pub fn hjb_arrival(ws: &WindStructure, x0: Vec2) -> Result<ArrivalField> {
    ws.domain.check(x0)?;
    let g = ws.grid();
    let n = g.len();
    let excluded: Vec<bool> = (0..n).map(|k| ws.domain.is_excluded(g.center_of(k))).collect();
    for (k, r) in ws.region_map().iter().enumerate() {
        if let Some(c) = r {
            if *c != RegionClass::Mild {
                let p = g.center_of(k);
                return Err(Error::Inapplicable(format!(
                    "stationary arrival needs mild wind everywhere; ({:.4}, {:.4}) is {c:?}",
                    p.x, p.y
                )));
            }
        }
    }
    let mut t = vec![f64::INFINITY; n];
    let body0 = ws.body_at(x0)?;
    let mut fixed = vec![false; n];
    for k in 0..n {
        let p = g.center_of(k);
        let d = p - x0;
        if !excluded[k] && d.x.abs() <= 1.5 * g.hx && d.y.abs() <= 1.5 * g.hy {
            t[k] = if d.norm() == 0.0 { 0.0 } else { lower_sheet_value(&body0, d) };
            fixed[k] = true;
        }
    }
    let (nx, ny) = (g.nx as isize, g.ny as isize);
    let orders: [(bool, bool); 4] = [(false, false), (true, false), (true, true), (false, true)];
    let mut sweeps = 0;
    let mut last = f64::INFINITY;
    while sweeps < MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        let (rev_i, rev_j) = orders[sweeps % 4];
        for jj in 0..ny {
            let j = if rev_j { ny - 1 - jj } else { jj };
            for ii in 0..nx {
                let i = if rev_i { nx - 1 - ii } else { ii };
                let k = (j * nx + i) as usize;
                if excluded[k] || fixed[k] {
                    continue;
                }
                let x = g.center(i as usize, j as usize);
                let body = &ws.cell_body(k).ellipse;
                let node = |m: usize| -> Option<(Vec2, f64)> {
                    let (di, dj) = RING[m % 8];
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= nx || b >= ny {
                        return None;
                    }
                    let idx = (b * nx + a) as usize;
                    if excluded[idx] || !t[idx].is_finite() {
                        return None;
                    }
                    Some((g.center(a as usize, b as usize), t[idx]))
                };
                let mut best = t[k];
                for m in 0..8 {
                    match (node(m), node(m + 1)) {
                        (Some((pa, ta)), Some((pb, tb))) => {
                            let val = golden(|s| {
                                let y = pa * (1.0 - s) + pb * s;
                                (1.0 - s) * ta + s * tb + lower_sheet_value(body, x - y)
                            });
                            best = best.min(val);
                        }
                        (Some((pa, ta)), None) => best = best.min(ta + lower_sheet_value(body, x - pa)),
                        _ => {}
                    }
                }
                if best < t[k] {
                    let change = if t[k].is_finite() { t[k] - best } else { f64::INFINITY };
                    max_change = max_change.max(change);
                    t[k] = best;
                }
            }
        }
        sweeps += 1;
        last = max_change;
        if sweeps >= 4 && max_change < SWEEP_TOLERANCE {
            break;
        }
    }
    if last >= SWEEP_TOLERANCE {
        return Err(Error::NumericalFailure { what: "fast sweeping", residual: last });
    }
    Ok(ArrivalField { values: t, sweeps, last_update: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::MinkowskiNorm;
    use crate::wind::{BaseDomain, BaseNormField, WindField};

    fn constant(w: Vec2) -> WindStructure {
        let d = BaseDomain::new((-2.5, 2.5), (-2.5, 2.5), 64, 64, vec![]).unwrap();
        WindStructure::with_defaults(d, BaseNormField::Constant(MinkowskiNorm::euclidean()), WindField::Constant(w))
            .unwrap()
    }

    #[test]
    fn zero_wind_is_distance() {
        let ws = constant(Vec2::zeros());
        let a = hjb_arrival(&ws, Vec2::zeros()).unwrap();
        let g = ws.grid();
        for k in 0..g.len() {
            let d = g.center_of(k).norm();
            assert!((a.values[k] - d).abs() < 0.03 * d.max(g.h()), "{} vs {d}", a.values[k]);
        }
    }

    #[test]
    fn mild_head_and_tail_wind() {
        let ws = constant(Vec2::new(0.5, 0.0));
        let a = hjb_arrival(&ws, Vec2::zeros()).unwrap();
        let g = ws.grid();
        let at = |p: Vec2| {
            let (i, j) = g.cell_of(p).unwrap();
            (a.values[g.index(i, j)], g.center(i, j))
        };
        let (t1, c1) = at(Vec2::new(1.0, 0.0));
        assert!((t1 - ws.eval_f(Vec2::zeros(), c1).unwrap()).abs() < 0.02);
        let (t2, c2) = at(Vec2::new(-1.0, 0.0));
        assert!((t2 - ws.eval_f(Vec2::zeros(), c2).unwrap()).abs() < 0.05);
    }

    #[test]
    fn strong_cells_rejected() {
        let ws = constant(Vec2::new(2.0, 0.0));
        assert!(matches!(hjb_arrival(&ws, Vec2::zeros()), Err(Error::Inapplicable(_))));
    }
}
