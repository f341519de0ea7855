//! Wind Finslerian structures over a planar box: base norm field, wind field, region
//! classes and the induced metrics `F` (lower sheet) and `F_l` (upper sheet).

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::FieldExpr;
use crate::grid::Grid;
use crate::norm::{quad, sym_eigenvalues, Ellipse, Mat2, MinkowskiNorm, Vec2};

pub const DEFAULT_CRITICAL_TOLERANCE: f64 = 1e-6;
pub const MIN_RESOLUTION: usize = 16;
pub const MAX_RESOLUTION: usize = 4096;
/// Relative tolerance on coinciding roots for the lightlike boundary.
pub const LIGHTLIKE_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum Exclusion {
    Disk { center: Vec2, radius: f64 },
    Rect { min: Vec2, max: Vec2 },
}

impl Exclusion {
    pub fn contains(&self, p: Vec2) -> bool {
        match self {
            Exclusion::Disk { center, radius } => (p - center).norm() <= *radius,
            Exclusion::Rect { min, max } => p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y,
        }
    }

    /// Signed distance (negative inside).
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        match self {
            Exclusion::Disk { center, radius } => (p - center).norm() - radius,
            Exclusion::Rect { min, max } => {
                let c = (min + max) * 0.5;
                let half = (max - min) * 0.5;
                let d = (p - c).abs() - half;
                let outside = Vec2::new(d.x.max(0.0), d.y.max(0.0)).norm();
                outside + d.x.max(d.y).min(0.0)
            }
        }
    }

    pub fn center(&self) -> Vec2 {
        match self {
            Exclusion::Disk { center, .. } => *center,
            Exclusion::Rect { min, max } => (min + max) * 0.5,
        }
    }

    fn bounds(&self) -> (Vec2, Vec2) {
        match self {
            Exclusion::Disk { center, radius } => (center - Vec2::repeat(*radius), center + Vec2::repeat(*radius)),
            Exclusion::Rect { min, max } => (*min, *max),
        }
    }
}

/// The base manifold: a box with optional closed holes, and its computational grid.
#[derive(Clone, Debug, PartialEq)]
pub struct BaseDomain {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    pub exclusions: Vec<Exclusion>,
}

impl BaseDomain {
    pub fn new(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize, exclusions: Vec<Exclusion>) -> Result<Self> {
        let d = BaseDomain { x, y, nx, ny, exclusions };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x.0, self.x.1, self.y.0, self.y.1].iter().all(|v| v.is_finite());
        if !finite || self.x.0 >= self.x.1 || self.y.0 >= self.y.1 {
            return Err(Error::Config(format!("degenerate domain box {:?} x {:?}", self.x, self.y)));
        }
        for n in [self.nx, self.ny] {
            if !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&n) {
                return Err(Error::Config(format!("resolution {n} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]")));
            }
        }
        for e in &self.exclusions {
            if let Exclusion::Disk { radius, .. } = e {
                if !(*radius > 0.0) {
                    return Err(Error::Config("exclusion disk radius must be positive".into()));
                }
            }
            if let Exclusion::Rect { min, max } = e {
                if !(min.x < max.x && min.y < max.y) {
                    return Err(Error::Config("exclusion rectangle has min >= max".into()));
                }
            }
            let (lo, hi) = e.bounds();
            if !(lo.x > self.x.0 && lo.y > self.y.0 && hi.x < self.x.1 && hi.y < self.y.1) {
                return Err(Error::Config("exclusion must lie strictly inside the domain box".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.x, self.y, self.nx, self.ny)
    }

    pub fn in_box(&self, p: Vec2) -> bool {
        p.x >= self.x.0 && p.x <= self.x.1 && p.y >= self.y.0 && p.y <= self.y.1
    }

    pub fn is_excluded(&self, p: Vec2) -> bool {
        self.exclusions.iter().any(|e| e.contains(p))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        self.in_box(p) && !self.is_excluded(p)
    }

    pub fn check(&self, p: Vec2) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { x: p.x, y: p.y })
        }
    }

    pub fn with_resolution(&self, nx: usize, ny: usize) -> Result<Self> {
        BaseDomain::new(self.x, self.y, nx, ny, self.exclusions.clone())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalarField {
    Const(f64),
    Expr(FieldExpr),
}

impl ScalarField {
    pub fn eval(&self, p: Vec2) -> Result<f64> {
        match self {
            ScalarField::Const(v) => Ok(*v),
            ScalarField::Expr(e) => Ok(e.eval(p.x, p.y)?),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            ScalarField::Const(_) => true,
            ScalarField::Expr(e) => e.is_constant(),
        }
    }
}

/// The base norm `F0` as a function of position.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseNormField {
    Constant(MinkowskiNorm),
    /// Riemannian norm with elliptic unit ball, semi-axes and orientation varying in space.
    Elliptic {
        a: ScalarField,
        b: ScalarField,
        angle: ScalarField,
    },
}

impl BaseNormField {
    pub fn at(&self, p: Vec2) -> Result<MinkowskiNorm> {
        match self {
            BaseNormField::Constant(n) => Ok(*n),
            BaseNormField::Elliptic { a, b, angle } => MinkowskiNorm::ellipse(a.eval(p)?, b.eval(p)?, angle.eval(p)?),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            BaseNormField::Constant(_) => true,
            BaseNormField::Elliptic { a, b, angle } => a.is_constant() && b.is_constant() && angle.is_constant(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WindField {
    Constant(Vec2),
    /// `omega * (-y, x)`.
    RigidRotation {
        omega: f64,
    },
    /// `k * (x, y)`.
    Radial {
        k: f64,
    },
    Expr {
        wx: FieldExpr,
        wy: FieldExpr,
    },
}

impl WindField {
    pub fn at(&self, p: Vec2) -> Result<Vec2> {
        match self {
            WindField::Constant(w) => Ok(*w),
            WindField::RigidRotation { omega } => Ok(Vec2::new(-p.y, p.x) * *omega),
            WindField::Radial { k } => Ok(p * *k),
            WindField::Expr { wx, wy } => Ok(Vec2::new(wx.eval(p.x, p.y)?, wy.eval(p.x, p.y)?)),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            WindField::Constant(_) => true,
            WindField::RigidRotation { omega } => *omega == 0.0,
            WindField::Radial { k } => *k == 0.0,
            WindField::Expr { wx, wy } => wx.is_constant() && wy.is_constant(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionClass {
    Mild,
    Critical,
    Strong,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    Interior,
    LightlikeBoundary,
    Inadmissible,
}

/// Velocity body `B̄_p` at one node: the closed ellipse plus its boundary parametrization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellBody {
    pub ellipse: Ellipse,
    /// `center + map * (cos t, sin t)` traces the boundary.
    pub map: Mat2,
    pub origin_inside: bool,
    /// Smallest semi-axis.
    pub inradius: f64,
}

impl CellBody {
    pub fn new(ellipse: Ellipse) -> CellBody {
        CellBody {
            map: ellipse.boundary_map(),
            origin_inside: ellipse.level(Vec2::zeros()) < 1.0,
            inradius: 1.0 / sym_eigenvalues(&ellipse.shape).1.sqrt(),
            ellipse,
        }
    }
}

#[derive(Debug)]
enum BodyCache {
    Constant(CellBody),
    PerCell(Vec<CellBody>),
}

/// A wind Finslerian structure `Σ_p = W(p) + {F0_p = 1}` on a base domain.
#[derive(Debug)]
pub struct WindStructure {
    pub domain: BaseDomain,
    pub base: BaseNormField,
    pub wind: WindField,
    pub critical_tolerance: f64,
    /// `-1` for the structure with all velocities reversed.
    orientation: f64,
    bodies: OnceLock<BodyCache>,
}

impl Clone for WindStructure {
    fn clone(&self) -> Self {
        WindStructure {
            domain: self.domain.clone(),
            base: self.base.clone(),
            wind: self.wind.clone(),
            critical_tolerance: self.critical_tolerance,
            orientation: self.orientation,
            bodies: OnceLock::new(),
        }
    }
}

impl PartialEq for WindStructure {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain
            && self.base == other.base
            && self.wind == other.wind
            && self.critical_tolerance == other.critical_tolerance
            && self.orientation == other.orientation
    }
}

impl WindStructure {
    /// Builds the structure and evaluates both fields at every node, so field errors surface here.
    pub fn new(domain: BaseDomain, base: BaseNormField, wind: WindField, critical_tolerance: f64) -> Result<Self> {
        domain.validate()?;
        if !(critical_tolerance >= 0.0 && critical_tolerance < 0.5) {
            return Err(Error::Config(format!("critical tolerance {critical_tolerance} out of range")));
        }
        if let BaseNormField::Constant(n) = &base {
            n.validate()?;
        }
        let ws = WindStructure { domain, base, wind, critical_tolerance, orientation: 1.0, bodies: OnceLock::new() };
        ws.build_bodies()?;
        Ok(ws)
    }

    pub fn with_defaults(domain: BaseDomain, base: BaseNormField, wind: WindField) -> Result<Self> {
        Self::new(domain, base, wind, DEFAULT_CRITICAL_TOLERANCE)
    }

    fn build_bodies(&self) -> Result<()> {
        if self.bodies.get().is_some() {
            return Ok(());
        }
        let cache = if self.base.is_constant() && self.wind.is_constant() {
            BodyCache::Constant(CellBody::new(self.body_at(Vec2::zeros())?))
        } else {
            let g = self.grid();
            let mut v = Vec::with_capacity(g.len());
            for k in 0..g.len() {
                v.push(CellBody::new(self.body_at(g.center_of(k))?));
            }
            BodyCache::PerCell(v)
        };
        let _ = self.bodies.set(cache);
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        self.domain.grid()
    }

    pub fn is_reversed(&self) -> bool {
        self.orientation < 0.0
    }

    /// The structure `-Σ`, whose forward balls are the backward balls of `self`.
    pub fn reversed(&self) -> WindStructure {
        WindStructure {
            domain: self.domain.clone(),
            base: self.base.clone(),
            wind: self.wind.clone(),
            critical_tolerance: self.critical_tolerance,
            orientation: -self.orientation,
            bodies: OnceLock::new(),
        }
    }

    pub fn with_domain(&self, domain: BaseDomain) -> Result<WindStructure> {
        let mut ws = WindStructure::new(domain, self.base.clone(), self.wind.clone(), self.critical_tolerance)?;
        if self.is_reversed() {
            ws = ws.reversed();
        }
        Ok(ws)
    }

    pub fn wind_at(&self, p: Vec2) -> Result<Vec2> {
        Ok(self.wind.at(p)? * self.orientation)
    }

    pub fn base_at(&self, p: Vec2) -> Result<MinkowskiNorm> {
        let n = self.base.at(p)?;
        Ok(if self.is_reversed() { n.reversed() } else { n })
    }

    /// `B̄_p` as an ellipse.
    pub fn body_at(&self, p: Vec2) -> Result<Ellipse> {
        Ok(self.base_at(p)?.unit_ball().translated(self.wind_at(p)?))
    }

    /// Cached body at grid node `k`.
    pub fn cell_body(&self, k: usize) -> &CellBody {
        if self.bodies.get().is_none() {
            self.build_bodies().expect("fields were validated at construction");
        }
        match self.bodies.get().expect("built") {
            BodyCache::Constant(b) => b,
            BodyCache::PerCell(v) => &v[k],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.base.is_constant() && self.wind.is_constant()
    }

    /// `F0_p(-W(p)) - 1`.
    pub fn d0(&self, p: Vec2) -> Result<f64> {
        Ok(self.base_at(p)?.eval(-self.wind_at(p)?) - 1.0)
    }

    fn class_of(&self, d0: f64) -> RegionClass {
        if d0 < -self.critical_tolerance {
            RegionClass::Mild
        } else if d0 <= self.critical_tolerance {
            RegionClass::Critical
        } else {
            RegionClass::Strong
        }
    }

    pub fn classify_point(&self, p: Vec2) -> Result<RegionClass> {
        self.domain.check(p)?;
        Ok(self.class_of(self.d0(p)?))
    }

    /// Ray quantities `(a, b, cc)` of `mu^2 a - 2 mu b + cc = 0` for `mu v` on `Σ_p`.
    fn ray(&self, body: &Ellipse, v: Vec2) -> (f64, f64, f64) {
        let a = quad(&body.shape, v);
        let b = v.dot(&(body.shape * body.center));
        let cc = quad(&body.shape, body.center) - 1.0;
        (a, b, cc)
    }

    /// `F` from the closed-form roots (the lower sheet).
    pub fn eval_f(&self, p: Vec2, v: Vec2) -> Result<f64> {
        let body = self.body_at(p)?;
        let class = self.class_of(self.d0(p)?);
        if v.x == 0.0 && v.y == 0.0 {
            return Ok(match class {
                RegionClass::Mild => 0.0,
                RegionClass::Critical => 1.0,
                RegionClass::Strong => f64::INFINITY,
            });
        }
        Ok(lower_sheet(self.ray(&body, v)))
    }

    /// `F_l`, which is `+inf` outside the strong region.
    pub fn eval_fl(&self, p: Vec2, v: Vec2) -> Result<f64> {
        let body = self.body_at(p)?;
        if self.class_of(self.d0(p)?) != RegionClass::Strong || (v.x == 0.0 && v.y == 0.0) {
            return Ok(f64::INFINITY);
        }
        let (a, b, cc) = self.ray(&body, v);
        let disc = b * b - a * cc;
        if b <= 0.0 || disc < 0.0 {
            return Ok(f64::INFINITY);
        }
        Ok((b + disc.sqrt()) / cc)
    }

    pub fn admissible(&self, p: Vec2, v: Vec2) -> Result<Admissibility> {
        let body = self.body_at(p)?;
        let class = self.class_of(self.d0(p)?);
        let (a, b, cc) = self.ray(&body, v);
        if a == 0.0 {
            return Ok(Admissibility::Inadmissible);
        }
        Ok(match class {
            RegionClass::Mild => Admissibility::Interior,
            RegionClass::Critical => {
                let scale = (a * (cc + 1.0)).sqrt();
                if b.abs() <= LIGHTLIKE_TOLERANCE * scale {
                    Admissibility::LightlikeBoundary
                } else if b > 0.0 {
                    Admissibility::Interior
                } else {
                    Admissibility::Inadmissible
                }
            }
            RegionClass::Strong => {
                let disc = b * b - a * cc;
                if b <= 0.0 {
                    Admissibility::Inadmissible
                } else if disc.abs() <= LIGHTLIKE_TOLERANCE * b * b {
                    Admissibility::LightlikeBoundary
                } else if disc > 0.0 {
                    Admissibility::Interior
                } else {
                    Admissibility::Inadmissible
                }
            }
        })
    }

    /// Support function of `B̄_p`: `q(W(p)) + F0*_p(q)`.
    pub fn support(&self, p: Vec2, q: Vec2) -> Result<f64> {
        Ok(self.body_at(p)?.support(q))
    }

    /// Largest speed `|v|` over bodies at all grid nodes.
    pub fn max_speed(&self) -> f64 {
        let g = self.grid();
        let n = if self.is_constant() { 1 } else { g.len() };
        (0..n)
            .map(|k| {
                let b = self.cell_body(k);
                b.ellipse.center.norm() + sym_eigenvalues(&(b.map.transpose() * b.map)).1.sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Smallest speed `|v|` over the indicatrices at all non-excluded grid nodes.
    pub fn min_speed(&self) -> f64 {
        let g = self.grid();
        let n = if self.is_constant() { 1 } else { g.len() };
        let mut best = f64::INFINITY;
        for k in 0..n {
            if !self.is_constant() && self.domain.is_excluded(g.center_of(k)) {
                continue;
            }
            let b = self.cell_body(k);
            for i in 0..256 {
                let t = std::f64::consts::TAU * i as f64 / 256.0;
                let p = b.ellipse.center + b.map * Vec2::new(t.cos(), t.sin());
                best = best.min(p.norm());
            }
        }
        best
    }

    /// Region class per grid node; `None` on excluded nodes.
    pub fn region_map(&self) -> Vec<Option<RegionClass>> {
        let g = self.grid();
        (0..g.len())
            .map(|k| {
                let p = g.center_of(k);
                if self.domain.is_excluded(p) {
                    None
                } else {
                    let b = self.cell_body(k);
                    // d0 from the cached body: F0(-W) - 1 = ray root of the origin.
                    let f0 = self.base_at(p).map(|n| n.eval(-b.ellipse.center)).unwrap_or(f64::NAN);
                    Some(self.class_of(f0 - 1.0))
                }
            })
            .collect()
    }

    pub fn region_counts(&self) -> RegionCounts {
        let mut c = RegionCounts::default();
        for r in self.region_map() {
            match r {
                None => c.excluded += 1,
                Some(RegionClass::Mild) => c.mild += 1,
                Some(RegionClass::Critical) => c.critical += 1,
                Some(RegionClass::Strong) => c.strong += 1,
            }
        }
        c
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RegionCounts {
    pub mild: usize,
    pub critical: usize,
    pub strong: usize,
    pub excluded: usize,
}

/// `F(v)` for the indicatrix bounding `body` (the lower sheet), by the closed form.
pub fn lower_sheet_value(body: &Ellipse, v: Vec2) -> f64 {
    let a = quad(&body.shape, v);
    let b = v.dot(&(body.shape * body.center));
    let cc = quad(&body.shape, body.center) - 1.0;
    lower_sheet((a, b, cc))
}

/// `F_l(v)` for the indicatrix bounding `body` (the upper sheet); `+inf` unless the origin
/// lies outside the body and `v` points into its cone.
pub fn upper_sheet_value(body: &Ellipse, v: Vec2) -> f64 {
    let a = quad(&body.shape, v);
    let b = v.dot(&(body.shape * body.center));
    let cc = quad(&body.shape, body.center) - 1.0;
    let disc = b * b - a * cc;
    if cc <= 0.0 || b <= 0.0 || disc < 0.0 {
        return f64::INFINITY;
    }
    (b + disc.sqrt()) / cc
}

/// Smallest positive root `lambda = 1/mu` from the ray quantities; `+inf` if none.
fn lower_sheet((a, b, cc): (f64, f64, f64)) -> f64 {
    let disc = b * b - a * cc;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let sq = disc.sqrt();
    if cc < 0.0 && b < 0.0 {
        return (sq - b) / (-cc);
    }
    let s = b + sq;
    if s > 0.0 {
        a / s
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant(w: Vec2) -> WindStructure {
        let d = BaseDomain::new((-3.0, 3.0), (-3.0, 3.0), 32, 32, vec![]).unwrap();
        WindStructure::with_defaults(d, BaseNormField::Constant(MinkowskiNorm::euclidean()), WindField::Constant(w))
            .unwrap()
    }

    #[test]
    fn classification() {
        assert_eq!(constant(Vec2::new(0.5, 0.0)).classify_point(Vec2::new(1.0, 1.0)).unwrap(), RegionClass::Mild);
        assert_eq!(constant(Vec2::new(2.0, 0.0)).classify_point(Vec2::zeros()).unwrap(), RegionClass::Strong);
        let d = BaseDomain::new((-3.0, 3.0), (-3.0, 3.0), 32, 32, vec![]).unwrap();
        let rot = WindStructure::with_defaults(
            d,
            BaseNormField::Constant(MinkowskiNorm::euclidean()),
            WindField::RigidRotation { omega: 1.0 },
        )
        .unwrap();
        assert_eq!(rot.classify_point(Vec2::new(0.5, 0.0)).unwrap(), RegionClass::Mild);
        assert_eq!(rot.classify_point(Vec2::new(0.0, 1.0)).unwrap(), RegionClass::Critical);
        assert_eq!(rot.classify_point(Vec2::new(2.0, 0.0)).unwrap(), RegionClass::Strong);
    }

    #[test]
    fn excluded_point_is_out_of_domain() {
        let d = BaseDomain::new(
            (-3.0, 3.0),
            (-3.0, 3.0),
            32,
            32,
            vec![Exclusion::Disk { center: Vec2::zeros(), radius: 0.1 }],
        )
        .unwrap();
        let ws = WindStructure::with_defaults(
            d,
            BaseNormField::Constant(MinkowskiNorm::euclidean()),
            WindField::Constant(Vec2::zeros()),
        )
        .unwrap();
        assert!(matches!(ws.classify_point(Vec2::zeros()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn metric_values() {
        let p = Vec2::zeros();
        let x = Vec2::new(1.0, 0.0);
        assert_relative_eq!(constant(Vec2::new(0.5, 0.0)).eval_f(p, x).unwrap(), 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(constant(Vec2::new(1.0, 0.0)).eval_f(p, x).unwrap(), 0.5, max_relative = 1e-14);
        let s = constant(Vec2::new(2.0, 0.0));
        assert_relative_eq!(s.eval_f(p, x).unwrap(), 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(s.eval_fl(p, x).unwrap(), 1.0, max_relative = 1e-14);
        assert!(constant(Vec2::new(0.5, 0.0)).eval_fl(p, x).unwrap().is_infinite());
    }

    #[test]
    fn zero_vector_conventions() {
        let z = Vec2::zeros();
        assert_eq!(constant(Vec2::new(0.5, 0.0)).eval_f(z, z).unwrap(), 0.0);
        assert_eq!(constant(Vec2::new(1.0, 0.0)).eval_f(z, z).unwrap(), 1.0);
        assert!(constant(Vec2::new(0.5, 0.0)).eval_fl(z, z).unwrap().is_infinite());
    }

    #[test]
    fn admissibility() {
        let p = Vec2::zeros();
        let s = constant(Vec2::new(2.0, 0.0));
        assert_eq!(s.admissible(p, Vec2::new(3f64.sqrt(), 1.0)).unwrap(), Admissibility::LightlikeBoundary);
        assert_eq!(s.admissible(p, Vec2::new(0.0, 1.0)).unwrap(), Admissibility::Inadmissible);
        assert_eq!(s.admissible(p, Vec2::new(1.0, 0.0)).unwrap(), Admissibility::Interior);
        assert_eq!(s.admissible(p, Vec2::new(-1.0, 0.0)).unwrap(), Admissibility::Inadmissible);
        let m = constant(Vec2::new(0.5, 0.0));
        assert_eq!(m.admissible(p, Vec2::new(-1.0, 0.3)).unwrap(), Admissibility::Interior);
    }

    #[test]
    fn support_values() {
        let p = Vec2::zeros();
        assert_relative_eq!(constant(Vec2::zeros()).support(p, Vec2::x()).unwrap(), 1.0);
        let s = constant(Vec2::new(2.0, 0.0));
        assert_relative_eq!(s.support(p, Vec2::x()).unwrap(), 3.0);
        assert_relative_eq!(s.support(p, -Vec2::x()).unwrap(), -1.0);
        assert_relative_eq!(constant(Vec2::new(0.5, 0.0)).support(p, Vec2::y()).unwrap(), 1.0);
    }

    #[test]
    fn reversal_flips_bodies() {
        let s = constant(Vec2::new(2.0, 0.0));
        let r = s.reversed();
        let p = Vec2::zeros();
        assert_relative_eq!(r.eval_f(p, Vec2::new(-1.0, 0.0)).unwrap(), 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(r.cell_body(0).ellipse.center.x, -2.0);
    }

    #[test]
    fn speeds() {
        let s = constant(Vec2::new(2.0, 0.0));
        assert_relative_eq!(s.max_speed(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(s.min_speed(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn regions_of_rotation() {
        let d = BaseDomain::new((-2.0, 2.0), (-2.0, 2.0), 64, 64, vec![]).unwrap();
        let rot = WindStructure::with_defaults(
            d,
            BaseNormField::Constant(MinkowskiNorm::euclidean()),
            WindField::RigidRotation { omega: 1.0 },
        )
        .unwrap();
        let g = rot.grid();
        let map = rot.region_map();
        for (k, r) in map.iter().enumerate() {
            let radius = g.center_of(k).norm();
            let expect = if radius < 1.0 - 1e-6 {
                RegionClass::Mild
            } else if radius > 1.0 + 1e-6 {
                RegionClass::Strong
            } else {
                RegionClass::Critical
            };
            assert_eq!(r.unwrap(), expect);
        }
    }

    #[test]
    fn domain_validation() {
        assert!(BaseDomain::new((0.0, 1.0), (0.0, 1.0), 8, 32, vec![]).is_err());
        assert!(BaseDomain::new(
            (0.0, 1.0),
            (0.0, 1.0),
            32,
            32,
            vec![Exclusion::Disk { center: Vec2::new(0.95, 0.5), radius: 0.1 }]
        )
        .is_err());
    }
}
