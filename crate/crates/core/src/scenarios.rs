//! Built-in scenarios.

use crate::config::{Numerics, ScenarioConfig};
use crate::norm::{MinkowskiNorm, Vec2};
use crate::wind::{BaseDomain, BaseNormField, Exclusion, WindField};

pub const DEFAULT_RESOLUTION: usize = 256;

/// Half-width of the mild rotation box: its corners sit at radius 0.9.
pub const MILD_ROTATION_HALF_WIDTH: f64 = 0.636;

pub const NAMES: [&str; 7] = ["zero", "mild", "critical", "strong", "rotation", "mild_rotation", "punctured"];

fn make(
    name: &str,
    half: f64,
    exclusions: Vec<Exclusion>,
    wind: WindField,
    horizon: f64,
    analytic: bool,
) -> ScenarioConfig {
    ScenarioConfig {
        name: Some(name.to_string()),
        analytic_extension: analytic,
        domain: BaseDomain {
            x: (-half, half),
            y: (-half, half),
            nx: DEFAULT_RESOLUTION,
            ny: DEFAULT_RESOLUTION,
            exclusions,
        },
        base: BaseNormField::Constant(MinkowskiNorm::euclidean()),
        wind,
        numerics: Numerics { horizon, ..Numerics::default() },
    }
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let c = |x: f64| WindField::Constant(Vec2::new(x, 0.0));
    Some(match name {
        "zero" => make(name, 3.0, vec![], c(0.0), 1.5, true),
        "mild" => make(name, 3.0, vec![], c(0.5), 1.5, true),
        "critical" => make(name, 3.0, vec![], c(1.0), 1.5, true),
        "strong" => make(name, 3.0, vec![], c(2.0), 1.2, true),
        "rotation" => make(name, 2.0, vec![], WindField::RigidRotation { omega: 1.0 }, 1.0, false),
        "mild_rotation" => {
            make(name, MILD_ROTATION_HALF_WIDTH, vec![], WindField::RigidRotation { omega: 1.0 }, 0.5, false)
        }
        "punctured" => {
            make(name, 3.0, vec![Exclusion::Disk { center: Vec2::zeros(), radius: 0.1 }], c(0.0), 2.5, false)
        }
        _ => return None,
    })
}

pub fn all() -> Vec<ScenarioConfig> {
    NAMES.iter().map(|n| builtin(n).expect("listed")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, serialize_config};

    #[test]
    fn builtins_round_trip() {
        for cfg in all() {
            let text = serialize_config(&cfg);
            assert_eq!(parse_config(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn builtins_build() {
        for cfg in all() {
            let mut cfg = cfg;
            cfg.domain.nx = 32;
            cfg.domain.ny = 32;
            cfg.build().unwrap();
        }
        assert!(builtin("nope").is_none());
    }
}
