//! Random norm families shared by the property tests and the acceptance suite.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;
use windcone::norm::{ellipse_metric, ConicDomain, MinkowskiNorm, NormSpec, Sheet, Vec2};

/// Raw parameters for one random spec; every field is drawn from `[0, 1)`.
#[derive(Clone, Copy, Debug)]
pub struct SpecParams {
    pub kind: u8,
    pub a: f64,
    pub b: f64,
    pub angle: f64,
    pub wind: f64,
    pub wind_angle: f64,
    pub omega: f64,
    pub omega_angle: f64,
}

impl SpecParams {
    pub fn random(rng: &mut impl Rng) -> SpecParams {
        SpecParams {
            kind: rng.random_range(0..6),
            a: rng.random(),
            b: rng.random(),
            angle: rng.random(),
            wind: rng.random(),
            wind_angle: rng.random(),
            omega: rng.random(),
            omega_angle: rng.random(),
        }
    }
}

fn polar(r: f64, t: f64) -> Vec2 {
    Vec2::new(r * t.cos(), r * t.sin())
}

pub fn base_norm(p: &SpecParams) -> MinkowskiNorm {
    MinkowskiNorm::ellipse(0.4 + 2.0 * p.a, 0.4 + 2.0 * p.b, PI * p.angle).unwrap()
}

/// Kinds: 0 Riemannian, 1 Randers, 2 Kropina, 3 mild lower sheet, 4 strong lower, 5 strong upper.
pub fn spec(p: &SpecParams) -> NormSpec {
    let base = base_norm(p);
    let h = ellipse_metric(0.4 + 2.0 * p.a, 0.4 + 2.0 * p.b, PI * p.angle).unwrap();
    let dir = 2.0 * PI * p.wind_angle;
    // Scale a unit F0 wind so F0(-W) is exactly the requested level.
    let wind_at = |level: f64| {
        let w = polar(1.0, dir);
        w * (level / base.eval(-w))
    };
    match p.kind {
        0 => NormSpec::Riemannian { h },
        1 => {
            // Dual h-norm of omega kept below 0.9.
            let raw = polar(1.0, 2.0 * PI * p.omega_angle);
            let dual = raw.dot(&(h.try_inverse().unwrap() * raw)).sqrt();
            NormSpec::Randers { h, omega: raw * (0.9 * p.omega / dual) }
        }
        2 => NormSpec::Kropina { base, beta: polar(0.2 + p.omega, 2.0 * PI * p.omega_angle) },
        3 => NormSpec::ZermeloSheet { base, wind: wind_at(0.9 * p.wind), sheet: Sheet::Lower },
        4 => NormSpec::ZermeloSheet { base, wind: wind_at(1.2 + 2.0 * p.wind), sheet: Sheet::Lower },
        _ => NormSpec::ZermeloSheet { base, wind: wind_at(1.2 + 2.0 * p.wind), sheet: Sheet::Upper },
    }
}

/// Unit direction inside the domain; `s` in `[-1, 1]` sweeps across it, stopping short of the edges.
pub fn direction_in(domain: &ConicDomain, s: f64) -> Vec2 {
    let s = s.clamp(-1.0, 1.0) * 0.95;
    match domain {
        ConicDomain::Full => polar(1.0, PI * s),
        ConicDomain::HalfPlane { beta } => polar(1.0, beta.y.atan2(beta.x) + 0.5 * PI * s),
        ConicDomain::Cone { axis, half_angle } => polar(1.0, axis.y.atan2(axis.x) + half_angle * s),
    }
}

/// The two lightlike edge directions of a cone domain.
pub fn cone_edges(domain: &ConicDomain) -> Option<[Vec2; 2]> {
    match domain {
        ConicDomain::Cone { axis, half_angle } => {
            let t = axis.y.atan2(axis.x);
            Some([polar(1.0, t - half_angle), polar(1.0, t + half_angle)])
        }
        _ => None,
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
