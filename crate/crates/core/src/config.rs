//! Scenario files: a versioned TOML document describing the domain, base norm, wind and
//! numerical settings.
//!
//! ```toml
//! format = 1
//! name = "strong"
//!
//! [domain]
//! x = [-3.0, 3.0]
//! y = [-3.0, 3.0]
//! resolution = [256, 256]
//! exclusions = [{ kind = "disk", center = [0.0, 0.0], radius = 0.1 }]
//!
//! [base]
//! kind = "euclidean"
//!
//! [wind]
//! kind = "constant"
//! wx = 2.0
//! wy = 0.0
//!
//! [numerics]
//! horizon = 1.5
//! seed = 7
//! ```

use std::fmt;
use std::ops::Range;

use toml::de::{DeTable, DeValue};
use toml::Spanned;

use crate::error::{Error, Result};
use crate::expr::{ExprError, FieldExpr};
use crate::norm::{Mat2, MinkowskiNorm, Vec2};
use crate::wind::{BaseDomain, BaseNormField, Exclusion, ScalarField, WindField, WindStructure};

pub const FORMAT_VERSION: i64 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Numerics {
    pub horizon: f64,
    pub dt: Option<f64>,
    pub seed: u64,
    pub critical_tolerance: f64,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { horizon: 1.0, dt: None, seed: 0, critical_tolerance: crate::wind::DEFAULT_CRITICAL_TOLERANCE }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: Option<String>,
    /// Geodesics escaping the box count as complete: the global behaviour is known analytically.
    pub analytic_extension: bool,
    pub domain: BaseDomain,
    pub base: BaseNormField,
    pub wind: WindField,
    pub numerics: Numerics,
}

impl ScenarioConfig {
    pub fn build(&self) -> Result<WindStructure> {
        WindStructure::new(self.domain.clone(), self.base.clone(), self.wind.clone(), self.numerics.critical_tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<Diagnostic>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigErrors> for Error {
    fn from(e: ConfigErrors) -> Error {
        Error::Config(e.to_string())
    }
}

type Value<'i> = Spanned<DeValue<'i>>;

struct Reader<'s> {
    src: &'s str,
    diags: Vec<Diagnostic>,
}

impl<'s> Reader<'s> {
    fn position(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.src.len());
        let before = &self.src[..offset];
        let line = before.matches('\n').count() + 1;
        let start = before.rfind('\n').map(|i| i + 1).unwrap_or(0);
        (line, before[start..].chars().count() + 1)
    }

    fn error(&mut self, span: Range<usize>, message: impl Into<String>) {
        let (line, column) = self.position(span.start);
        self.diags.push(Diagnostic { line, column, message: message.into() });
    }

    /// Rejects keys outside `allowed`.
    fn keys(&mut self, table: &DeTable<'_>, allowed: &[&str], context: &str) {
        for key in table.keys() {
            if !allowed.contains(&key.get_ref().as_ref()) {
                let msg = format!("unknown key `{}` in {context}", key.get_ref());
                self.error(key.span(), msg);
            }
        }
    }

    fn number(&mut self, v: &Value<'_>, what: &str) -> Option<f64> {
        let parsed = match v.get_ref() {
            DeValue::Float(f) => parse_float(f.as_str()),
            DeValue::Integer(i) => i64::from_str_radix(&i.as_str().replace('_', ""), i.radix()).ok().map(|n| n as f64),
            _ => None,
        };
        match parsed {
            Some(x) if x.is_finite() => Some(x),
            Some(_) => {
                self.error(v.span(), format!("{what} must be finite"));
                None
            }
            None => {
                self.error(v.span(), format!("{what} must be a number, found {}", v.get_ref().type_str()));
                None
            }
        }
    }

    fn integer(&mut self, v: &Value<'_>, what: &str) -> Option<i64> {
        match v.get_ref() {
            DeValue::Integer(i) => {
                let n = i64::from_str_radix(&i.as_str().replace('_', ""), i.radix()).ok();
                if n.is_none() {
                    self.error(v.span(), format!("{what} is out of range"));
                }
                n
            }
            other => {
                self.error(v.span(), format!("{what} must be an integer, found {}", other.type_str()));
                None
            }
        }
    }

    fn string<'v>(&mut self, v: &'v Value<'_>, what: &str) -> Option<&'v str> {
        match v.get_ref().as_str() {
            Some(s) => Some(s),
            None => {
                self.error(v.span(), format!("{what} must be a string, found {}", v.get_ref().type_str()));
                None
            }
        }
    }

    fn table<'v, 'i>(&mut self, v: &'v Value<'i>, what: &str) -> Option<&'v DeTable<'i>> {
        match v.get_ref().as_table() {
            Some(t) => Some(t),
            None => {
                self.error(v.span(), format!("{what} must be a table, found {}", v.get_ref().type_str()));
                None
            }
        }
    }

    fn pair(&mut self, v: &Value<'_>, what: &str) -> Option<(f64, f64)> {
        let Some(arr) = v.get_ref().as_array() else {
            self.error(v.span(), format!("{what} must be a two-element array"));
            return None;
        };
        if arr.len() != 2 {
            self.error(v.span(), format!("{what} must have exactly two elements, found {}", arr.len()));
            return None;
        }
        let a = self.number(&arr[0], what)?;
        let b = self.number(&arr[1], what)?;
        Some((a, b))
    }

    fn vec2(&mut self, v: &Value<'_>, what: &str) -> Option<Vec2> {
        self.pair(v, what).map(|(a, b)| Vec2::new(a, b))
    }

    fn matrix(&mut self, v: &Value<'_>, what: &str) -> Option<Mat2> {
        let Some(rows) = v.get_ref().as_array().filter(|r| r.len() == 2) else {
            self.error(v.span(), format!("{what} must be a 2x2 array of rows"));
            return None;
        };
        let r0 = self.pair(&rows[0], what)?;
        let r1 = self.pair(&rows[1], what)?;
        Some(Mat2::new(r0.0, r0.1, r1.0, r1.1))
    }

    fn required<'v, 'i>(
        &mut self,
        table: &'v DeTable<'i>,
        key: &str,
        span: Range<usize>,
        context: &str,
    ) -> Option<&'v Value<'i>> {
        let v = table.get(key);
        if v.is_none() {
            self.error(span, format!("missing key `{key}` in {context}"));
        }
        v
    }

    fn expr(&mut self, v: &Value<'_>, what: &str) -> Option<FieldExpr> {
        let src = self.string(v, what)?;
        match FieldExpr::parse(src) {
            Ok(e) => Some(e),
            Err(err) => {
                // Columns inside the string, offset past the opening quote.
                let col = match &err {
                    ExprError::Syntax { column, .. } | ExprError::ConstantDivision { column } => *column,
                    _ => 1,
                };
                let start = v.span().start + col;
                self.error(start..start, format!("{what}: {err}"));
                None
            }
        }
    }

    fn scalar(&mut self, v: &Value<'_>, what: &str) -> Option<ScalarField> {
        if v.get_ref().is_str() {
            self.expr(v, what).map(ScalarField::Expr)
        } else {
            self.number(v, what).map(ScalarField::Const)
        }
    }
}

fn parse_float(s: &str) -> Option<f64> {
    let s = s.replace('_', "");
    match s.as_str() {
        "inf" | "+inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" | "+nan" | "-nan" => Some(f64::NAN),
        _ => s.parse().ok(),
    }
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, ConfigErrors> {
    let mut rd = Reader { src: text, diags: Vec::new() };
    let doc = match DeTable::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let span = e.span().unwrap_or(0..0);
            rd.error(span, e.message().trim().to_string());
            return Err(ConfigErrors(rd.diags));
        }
    };
    let root = doc.get_ref();
    let whole = 0..0;
    rd.keys(root, &["format", "name", "analytic_extension", "domain", "base", "wind", "numerics"], "the document");

    match rd.required(root, "format", whole.clone(), "the document") {
        Some(v) => {
            if let Some(n) = rd.integer(v, "format") {
                if n != FORMAT_VERSION {
                    rd.error(v.span(), format!("unsupported format {n}; expected {FORMAT_VERSION}"));
                }
            }
        }
        None => {}
    }
    let name = root.get("name").and_then(|v| rd.string(v, "name").map(str::to_string));
    let analytic_extension = match root.get("analytic_extension") {
        Some(v) => match v.get_ref().as_bool() {
            Some(b) => b,
            None => {
                rd.error(v.span(), "analytic_extension must be a boolean");
                false
            }
        },
        None => false,
    };

    let domain = rd.required(root, "domain", whole.clone(), "the document").and_then(|v| parse_domain(&mut rd, v));
    let base = match root.get("base") {
        Some(v) => parse_base(&mut rd, v),
        None => Some(BaseNormField::Constant(MinkowskiNorm::euclidean())),
    };
    let wind = rd.required(root, "wind", whole, "the document").and_then(|v| parse_wind(&mut rd, v));
    let numerics = match root.get("numerics") {
        Some(v) => parse_numerics(&mut rd, v),
        None => Some(Numerics::default()),
    };

    if !rd.diags.is_empty() {
        return Err(ConfigErrors(rd.diags));
    }
    let cfg = ScenarioConfig {
        name,
        analytic_extension,
        domain: domain.expect("checked"),
        base: base.expect("checked"),
        wind: wind.expect("checked"),
        numerics: numerics.expect("checked"),
    };
    Ok(cfg)
}

fn parse_domain(rd: &mut Reader<'_>, v: &Value<'_>) -> Option<BaseDomain> {
    let t = rd.table(v, "domain")?;
    rd.keys(t, &["x", "y", "resolution", "exclusions"], "[domain]");
    let x = rd.required(t, "x", v.span(), "[domain]").and_then(|x| rd.pair(x, "domain.x"));
    let y = rd.required(t, "y", v.span(), "[domain]").and_then(|y| rd.pair(y, "domain.y"));
    let res = rd.required(t, "resolution", v.span(), "[domain]").and_then(|r| {
        if r.get_ref().is_integer() {
            let n = rd.integer(r, "domain.resolution")?;
            Some((n, n, r.span()))
        } else {
            let arr = r.get_ref().as_array().filter(|a| a.len() == 2);
            match arr {
                Some(a) => {
                    Some((rd.integer(&a[0], "domain.resolution")?, rd.integer(&a[1], "domain.resolution")?, r.span()))
                }
                None => {
                    rd.error(r.span(), "domain.resolution must be an integer or [nx, ny]");
                    None
                }
            }
        }
    });
    let mut exclusions = Vec::new();
    if let Some(ex) = t.get("exclusions") {
        match ex.get_ref().as_array() {
            Some(items) => {
                for item in items.iter() {
                    if let Some(e) = parse_exclusion(rd, item) {
                        exclusions.push(e);
                    }
                }
            }
            None => rd.error(ex.span(), "domain.exclusions must be an array of tables"),
        }
    }
    let (x, y, (nx, ny, rspan)) = (x?, y?, res?);
    let range = crate::wind::MIN_RESOLUTION as i64..=crate::wind::MAX_RESOLUTION as i64;
    if !range.contains(&nx) || !range.contains(&ny) {
        rd.error(rspan, format!("resolution must be within {range:?}, got {nx}x{ny}"));
        return None;
    }
    let d = BaseDomain { x, y, nx: nx as usize, ny: ny as usize, exclusions };
    if let Err(e) = d.validate() {
        rd.error(v.span(), e.to_string());
        return None;
    }
    Some(d)
}

fn parse_exclusion(rd: &mut Reader<'_>, v: &Value<'_>) -> Option<Exclusion> {
    let t = rd.table(v, "exclusion")?;
    let kind = rd.required(t, "kind", v.span(), "exclusion").and_then(|k| rd.string(k, "exclusion kind"))?;
    match kind {
        "disk" => {
            rd.keys(t, &["kind", "center", "radius"], "disk exclusion");
            let c = rd.required(t, "center", v.span(), "disk exclusion").and_then(|c| rd.vec2(c, "center"));
            let r = rd.required(t, "radius", v.span(), "disk exclusion").and_then(|r| rd.number(r, "radius"));
            Some(Exclusion::Disk { center: c?, radius: r? })
        }
        "rect" => {
            rd.keys(t, &["kind", "min", "max"], "rect exclusion");
            let lo = rd.required(t, "min", v.span(), "rect exclusion").and_then(|c| rd.vec2(c, "min"));
            let hi = rd.required(t, "max", v.span(), "rect exclusion").and_then(|c| rd.vec2(c, "max"));
            Some(Exclusion::Rect { min: lo?, max: hi? })
        }
        other => {
            let span = t.get("kind").map(|k| k.span()).unwrap_or(v.span());
            rd.error(span, format!("unknown exclusion kind `{other}` (expected disk or rect)"));
            None
        }
    }
}

fn parse_base(rd: &mut Reader<'_>, v: &Value<'_>) -> Option<BaseNormField> {
    let t = rd.table(v, "base")?;
    let kind_v = rd.required(t, "kind", v.span(), "[base]")?;
    let kind = rd.string(kind_v, "base kind")?;
    let norm = match kind {
        "euclidean" => {
            rd.keys(t, &["kind"], "euclidean base");
            return Some(BaseNormField::Constant(MinkowskiNorm::euclidean()));
        }
        "ellipse" => {
            rd.keys(t, &["kind", "a", "b", "angle"], "ellipse base");
            let a = rd.required(t, "a", v.span(), "ellipse base").and_then(|a| rd.scalar(a, "base.a"));
            let b = rd.required(t, "b", v.span(), "ellipse base").and_then(|b| rd.scalar(b, "base.b"));
            let angle = match t.get("angle") {
                Some(x) => rd.scalar(x, "base.angle"),
                None => Some(ScalarField::Const(0.0)),
            };
            let field = BaseNormField::Elliptic { a: a?, b: b?, angle: angle? };
            if field.is_constant() {
                if let Err(e) = field.at(Vec2::zeros()) {
                    rd.error(v.span(), e.to_string());
                    return None;
                }
            }
            return Some(field);
        }
        "riemannian" => {
            rd.keys(t, &["kind", "h"], "riemannian base");
            let h = rd.required(t, "h", v.span(), "riemannian base").and_then(|h| rd.matrix(h, "base.h"))?;
            MinkowskiNorm::Riemannian { h }
        }
        "randers" => {
            rd.keys(t, &["kind", "h", "omega"], "randers base");
            let h = rd.required(t, "h", v.span(), "randers base").and_then(|h| rd.matrix(h, "base.h"));
            let w = rd.required(t, "omega", v.span(), "randers base").and_then(|w| rd.vec2(w, "base.omega"));
            MinkowskiNorm::Randers { h: h?, omega: w? }
        }
        other => {
            rd.error(
                kind_v.span(),
                format!("unknown base kind `{other}` (expected euclidean, ellipse, riemannian or randers)"),
            );
            return None;
        }
    };
    if let Err(e) = norm.validate() {
        rd.error(v.span(), e.to_string());
        return None;
    }
    Some(BaseNormField::Constant(norm))
}

fn parse_wind(rd: &mut Reader<'_>, v: &Value<'_>) -> Option<WindField> {
    let t = rd.table(v, "wind")?;
    let kind_v = t.get("kind");
    let kind = match kind_v {
        Some(k) => rd.string(k, "wind kind")?,
        None if t.get("wx").is_some_and(|w| w.get_ref().is_str()) => "expr",
        None => {
            rd.error(v.span(), "missing key `kind` in [wind]");
            return None;
        }
    };
    match kind {
        "constant" => {
            rd.keys(t, &["kind", "wx", "wy"], "constant wind");
            let wx = rd.required(t, "wx", v.span(), "constant wind").and_then(|w| rd.number(w, "wind.wx"));
            let wy = rd.required(t, "wy", v.span(), "constant wind").and_then(|w| rd.number(w, "wind.wy"));
            Some(WindField::Constant(Vec2::new(wx?, wy?)))
        }
        "rigid_rotation" => {
            rd.keys(t, &["kind", "omega"], "rigid_rotation wind");
            let w =
                rd.required(t, "omega", v.span(), "rigid_rotation wind").and_then(|w| rd.number(w, "wind.omega"))?;
            Some(WindField::RigidRotation { omega: w })
        }
        "radial" => {
            rd.keys(t, &["kind", "k"], "radial wind");
            let k = rd.required(t, "k", v.span(), "radial wind").and_then(|k| rd.number(k, "wind.k"))?;
            Some(WindField::Radial { k })
        }
        "expr" => {
            rd.keys(t, &["kind", "wx", "wy"], "expression wind");
            let wx = rd.required(t, "wx", v.span(), "expression wind").and_then(|w| rd.expr(w, "wind.wx"));
            let wy = rd.required(t, "wy", v.span(), "expression wind").and_then(|w| rd.expr(w, "wind.wy"));
            Some(WindField::Expr { wx: wx?, wy: wy? })
        }
        other => {
            let span = kind_v.map(|k| k.span()).unwrap_or(v.span());
            rd.error(span, format!("unknown wind kind `{other}` (expected constant, rigid_rotation, radial or expr)"));
            None
        }
    }
}

fn parse_numerics(rd: &mut Reader<'_>, v: &Value<'_>) -> Option<Numerics> {
    let t = rd.table(v, "numerics")?;
    rd.keys(t, &["horizon", "dt", "seed", "critical_tolerance"], "[numerics]");
    let mut n = Numerics::default();
    let mut ok = true;
    let mut positive = |rd: &mut Reader<'_>, key: &str| -> Option<f64> {
        let x = t.get(key)?;
        let val = rd.number(x, key);
        match val {
            Some(val) if val > 0.0 => Some(val),
            Some(_) => {
                rd.error(x.span(), format!("{key} must be positive"));
                ok = false;
                None
            }
            None => {
                ok = false;
                None
            }
        }
    };
    if let Some(h) = positive(rd, "horizon") {
        n.horizon = h;
    }
    n.dt = positive(rd, "dt");
    if let Some(c) = positive(rd, "critical_tolerance") {
        n.critical_tolerance = c;
    }
    if let Some(s) = t.get("seed") {
        match rd.integer(s, "seed") {
            Some(s) if s >= 0 => n.seed = s as u64,
            Some(_) => {
                rd.error(s.span(), "seed must be non-negative");
                ok = false;
            }
            None => ok = false,
        }
    }
    ok.then_some(n)
}

fn scalar_value(s: &ScalarField) -> toml::Value {
    match s {
        ScalarField::Const(c) => toml::Value::Float(*c),
        ScalarField::Expr(e) => toml::Value::String(e.source().to_string()),
    }
}

fn pair_value(a: f64, b: f64) -> toml::Value {
    toml::Value::Array(vec![toml::Value::Float(a), toml::Value::Float(b)])
}

fn matrix_value(m: &Mat2) -> toml::Value {
    toml::Value::Array(vec![pair_value(m[(0, 0)], m[(0, 1)]), pair_value(m[(1, 0)], m[(1, 1)])])
}

/// Writes a config back out in the file format.
pub fn serialize_config(cfg: &ScenarioConfig) -> String {
    use toml::{Table, Value};
    let mut root = Table::new();
    root.insert("format".into(), Value::Integer(FORMAT_VERSION));
    if let Some(n) = &cfg.name {
        root.insert("name".into(), Value::String(n.clone()));
    }
    if cfg.analytic_extension {
        root.insert("analytic_extension".into(), Value::Boolean(true));
    }

    let d = &cfg.domain;
    let mut dom = Table::new();
    dom.insert("x".into(), pair_value(d.x.0, d.x.1));
    dom.insert("y".into(), pair_value(d.y.0, d.y.1));
    dom.insert("resolution".into(), Value::Array(vec![Value::Integer(d.nx as i64), Value::Integer(d.ny as i64)]));
    if !d.exclusions.is_empty() {
        let items = d
            .exclusions
            .iter()
            .map(|e| {
                let mut t = Table::new();
                match e {
                    Exclusion::Disk { center, radius } => {
                        t.insert("kind".into(), Value::String("disk".into()));
                        t.insert("center".into(), pair_value(center.x, center.y));
                        t.insert("radius".into(), Value::Float(*radius));
                    }
                    Exclusion::Rect { min, max } => {
                        t.insert("kind".into(), Value::String("rect".into()));
                        t.insert("min".into(), pair_value(min.x, min.y));
                        t.insert("max".into(), pair_value(max.x, max.y));
                    }
                }
                Value::Table(t)
            })
            .collect();
        dom.insert("exclusions".into(), Value::Array(items));
    }
    root.insert("domain".into(), Value::Table(dom));

    let mut base = Table::new();
    match &cfg.base {
        BaseNormField::Constant(MinkowskiNorm::Riemannian { h }) if *h == Mat2::identity() => {
            base.insert("kind".into(), Value::String("euclidean".into()));
        }
        BaseNormField::Constant(MinkowskiNorm::Riemannian { h }) => {
            base.insert("kind".into(), Value::String("riemannian".into()));
            base.insert("h".into(), matrix_value(h));
        }
        BaseNormField::Constant(MinkowskiNorm::Randers { h, omega }) => {
            base.insert("kind".into(), Value::String("randers".into()));
            base.insert("h".into(), matrix_value(h));
            base.insert("omega".into(), pair_value(omega.x, omega.y));
        }
        BaseNormField::Elliptic { a, b, angle } => {
            base.insert("kind".into(), Value::String("ellipse".into()));
            base.insert("a".into(), scalar_value(a));
            base.insert("b".into(), scalar_value(b));
            base.insert("angle".into(), scalar_value(angle));
        }
    }
    root.insert("base".into(), Value::Table(base));

    let mut wind = Table::new();
    match &cfg.wind {
        WindField::Constant(w) => {
            wind.insert("kind".into(), Value::String("constant".into()));
            wind.insert("wx".into(), Value::Float(w.x));
            wind.insert("wy".into(), Value::Float(w.y));
        }
        WindField::RigidRotation { omega } => {
            wind.insert("kind".into(), Value::String("rigid_rotation".into()));
            wind.insert("omega".into(), Value::Float(*omega));
        }
        WindField::Radial { k } => {
            wind.insert("kind".into(), Value::String("radial".into()));
            wind.insert("k".into(), Value::Float(*k));
        }
        WindField::Expr { wx, wy } => {
            wind.insert("kind".into(), Value::String("expr".into()));
            wind.insert("wx".into(), Value::String(wx.source().into()));
            wind.insert("wy".into(), Value::String(wy.source().into()));
        }
    }
    root.insert("wind".into(), Value::Table(wind));

    let n = &cfg.numerics;
    let mut num = Table::new();
    num.insert("horizon".into(), Value::Float(n.horizon));
    if let Some(dt) = n.dt {
        num.insert("dt".into(), Value::Float(dt));
    }
    num.insert("seed".into(), Value::Integer(n.seed as i64));
    num.insert("critical_tolerance".into(), Value::Float(n.critical_tolerance));
    root.insert("numerics".into(), Value::Table(num));

    toml::to_string(&root).expect("plain tables serialize")
}
