//! Replays the checked-in fuzz seeds through the same checks the fuzz targets make.

use std::fs;
use std::path::Path;

use windcone::config::{parse_config, serialize_config};
use windcone::expr::FieldExpr;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn config_seeds() {
    let mut accepted = Vec::new();
    for (name, text) in seeds("parse_config") {
        match parse_config(&text) {
            Ok(cfg) => {
                assert_eq!(parse_config(&serialize_config(&cfg)).unwrap(), cfg, "{name}");
                accepted.push(name);
            }
            Err(e) => assert!(!e.0.is_empty() && e.0.iter().all(|d| d.line >= 1), "{name}"),
        }
    }
    assert_eq!(accepted, ["punctured.toml", "rotation_expr.toml", "zero.toml"]);
}

#[test]
fn expr_seeds() {
    let mut rejected = Vec::new();
    for (name, src) in seeds("parse_expr") {
        match FieldExpr::parse(&src) {
            Ok(e) => {
                for (x, y) in [(0.0, 0.0), (1.5, -2.0)] {
                    let _ = e.eval(x, y);
                }
            }
            Err(_) => rejected.push(name),
        }
    }
    assert_eq!(rejected, ["const_div"]);
}
