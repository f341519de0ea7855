//! Pointwise pseudo-Minkowski norms on the plane.
//!
//! Every norm handled here is positively 1-homogeneous and defined on an open conic
//! domain. Minkowski base norms (Riemannian and Randers) have elliptic unit balls, which
//! is what makes the Zermelo sheets and the dual norms available in closed form. The
//! [`eval_norm`] entry point deliberately does *not* use those closed forms for Zermelo
//! sheets: it brackets and bisects the scaling equation, so the two routes can be checked
//! against each other.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

const MAX_ROOT_ITERATIONS: usize = 200;
/// Discriminants below this fraction of `b^2` count as one double (lightlike) root, matching
/// the residual tolerance of the iterative solver.
const ROOT_COINCIDENCE: f64 = 1e-12;
/// Roots are bisected down to a few ulps so that finite differences of `F` stay smooth.
const ROOT_RELATIVE_TOLERANCE: f64 = 4.0 * f64::EPSILON;

/// Rotate by +90 degrees.
#[inline]
pub fn perp(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// A Minkowski norm with a strongly convex indicatrix enclosing the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MinkowskiNorm {
    /// `sqrt(v^T h v)`.
    Riemannian { h: Mat2 },
    /// `sqrt(v^T h v) + omega(v)` with the `h`-dual norm of `omega` below one.
    Randers { h: Mat2, omega: Vec2 },
}

impl MinkowskiNorm {
    pub fn euclidean() -> Self {
        MinkowskiNorm::Riemannian { h: Mat2::identity() }
    }

    /// Riemannian norm whose unit ball is the ellipse with semi-axes `a`, `b`, the first
    /// one rotated by `angle` from the x-axis.
    pub fn ellipse(a: f64, b: f64, angle: f64) -> Result<Self> {
        let n = MinkowskiNorm::Riemannian { h: ellipse_metric(a, b, angle)? };
        Ok(n)
    }

    pub fn randers(h: Mat2, omega: Vec2) -> Result<Self> {
        let n = MinkowskiNorm::Randers { h, omega };
        n.validate()?;
        Ok(n)
    }

    pub fn metric(&self) -> &Mat2 {
        match self {
            MinkowskiNorm::Riemannian { h } | MinkowskiNorm::Randers { h, .. } => h,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.metric();
        if !h.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidNorm("metric has non-finite entries".into()));
        }
        if (h[(0, 1)] - h[(1, 0)]).abs() > 1e-12 * h.abs().max() {
            return Err(Error::InvalidNorm("metric is not symmetric".into()));
        }
        let (lo, _) = sym_eigenvalues(h);
        if lo <= 0.0 {
            return Err(Error::InvalidNorm(format!("metric is not positive definite (smallest eigenvalue {lo:e})")));
        }
        if let MinkowskiNorm::Randers { h, omega } = self {
            let inv = h.try_inverse().expect("positive definite");
            let dual = omega.dot(&(inv * omega)).sqrt();
            if !dual.is_finite() || dual >= 1.0 {
                return Err(Error::InvalidNorm(format!("Randers one-form has dual norm {dual} >= 1")));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, v: Vec2) -> f64 {
        match self {
            MinkowskiNorm::Riemannian { h } => quad(h, v).max(0.0).sqrt(),
            MinkowskiNorm::Randers { h, omega } => quad(h, v).max(0.0).sqrt() + omega.dot(&v),
        }
    }

    /// The closed unit ball `{F <= 1}`, which is an ellipse for both variants.
    pub fn unit_ball(&self) -> Ellipse {
        match *self {
            MinkowskiNorm::Riemannian { h } => Ellipse { center: Vec2::zeros(), shape: h },
            MinkowskiNorm::Randers { h, omega } => {
                // sqrt(v'hv) <= 1 - omega(v)  <=>  (v - c)' A (v - c) <= k  with A = h - omega omega'.
                let a = h - omega * omega.transpose();
                let a_inv = a.try_inverse().expect("Randers metric is positive definite");
                let k = 1.0 + omega.dot(&(a_inv * omega));
                Ellipse { center: -(a_inv * omega), shape: a / k }
            }
        }
    }

    /// Dual norm `sup { q(v) : F(v) <= 1 }`.
    pub fn dual(&self, q: Vec2) -> f64 {
        self.unit_ball().support(q)
    }

    /// The norm `v -> F(-v)`.
    pub fn reversed(&self) -> Self {
        match *self {
            MinkowskiNorm::Riemannian { h } => MinkowskiNorm::Riemannian { h },
            MinkowskiNorm::Randers { h, omega } => MinkowskiNorm::Randers { h, omega: -omega },
        }
    }
}

/// Metric whose unit ball is an ellipse with semi-axes `a`, `b` rotated by `angle`.
pub fn ellipse_metric(a: f64, b: f64, angle: f64) -> Result<Mat2> {
    if !(a.is_finite() && b.is_finite() && angle.is_finite()) || a <= 0.0 || b <= 0.0 {
        return Err(Error::InvalidNorm(format!("ellipse semi-axes must be positive and finite (a = {a}, b = {b})")));
    }
    let (s, c) = angle.sin_cos();
    let r = Mat2::new(c, -s, s, c);
    let d = Mat2::new(1.0 / (a * a), 0.0, 0.0, 1.0 / (b * b));
    let h = r * d * r.transpose();
    Ok(symmetrize(&h))
}

#[inline]
pub fn quad(m: &Mat2, v: Vec2) -> f64 {
    v.dot(&(m * v))
}

pub fn symmetrize(m: &Mat2) -> Mat2 {
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    Mat2::new(m[(0, 0)], off, off, m[(1, 1)])
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn sym_eigenvalues(m: &Mat2) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// A closed ellipse `{x : (x - center)' shape (x - center) <= 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub center: Vec2,
    pub shape: Mat2,
}

/// Positive scaling roots of a ray against an ellipse boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RayHit {
    /// The origin is strictly inside: exactly one positive root.
    Single(f64),
    /// The origin is outside: the ray enters at `near` and leaves at `far` (`near <= far`).
    Pair { near: f64, far: f64 },
    /// The ray misses the ellipse.
    Miss,
}

impl Ellipse {
    pub fn translated(&self, w: Vec2) -> Ellipse {
        Ellipse { center: self.center + w, shape: self.shape }
    }

    /// `(x - c)' Q (x - c)`: below one inside, one on the boundary.
    #[inline]
    pub fn level(&self, x: Vec2) -> f64 {
        quad(&self.shape, x - self.center)
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.level(x) <= 1.0
    }

    /// Support function `max { q(v) : v in ellipse }`.
    #[inline]
    pub fn support(&self, q: Vec2) -> f64 {
        let inv = self.shape_inverse();
        q.dot(&self.center) + quad(&inv, q).max(0.0).sqrt()
    }

    /// Boundary point where `q` attains the support value.
    pub fn support_point(&self, q: Vec2) -> Vec2 {
        let inv = self.shape_inverse();
        let s = quad(&inv, q).max(f64::MIN_POSITIVE).sqrt();
        self.center + inv * q / s
    }

    pub fn shape_inverse(&self) -> Mat2 {
        let m = &self.shape;
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        Mat2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det
    }

    /// Matrix `M` with `center + M u` on the boundary for every unit `u`.
    pub fn boundary_map(&self) -> Mat2 {
        // Q = L L' gives (L^{-T} u)' Q (L^{-T} u) = |u|^2.
        let chol = self.shape.cholesky().expect("ellipse shape is positive definite");
        let l = chol.l();
        l.transpose().try_inverse().expect("invertible")
    }

    pub fn boundary_point(&self, theta: f64) -> Vec2 {
        let (s, c) = theta.sin_cos();
        self.center + self.boundary_map() * Vec2::new(c, s)
    }

    /// `n` boundary vertices at equally spaced parameter angles.
    pub fn polygon(&self, n: usize) -> Vec<Vec2> {
        let m = self.boundary_map();
        (0..n)
            .map(|k| {
                let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
                self.center + m * Vec2::new(c, s)
            })
            .collect()
    }

    /// Roots `mu > 0` of `(mu v - c)' Q (mu v - c) = 1`, i.e. where the ray through `v`
    /// crosses the boundary.
    pub fn ray_roots(&self, v: Vec2) -> RayHit {
        let a = quad(&self.shape, v);
        let b = v.dot(&(self.shape * self.center));
        let cc = quad(&self.shape, self.center) - 1.0;
        if a <= 0.0 {
            return RayHit::Miss;
        }
        let disc = b * b - a * cc;
        if cc < 0.0 {
            let mu = (b + disc.sqrt()) / a;
            return RayHit::Single(mu);
        }
        if b <= 0.0 || disc < 0.0 {
            return RayHit::Miss;
        }
        let sq = disc.sqrt();
        let far = (b + sq) / a;
        let near = if cc == 0.0 { 0.0 } else { cc / (a * far) };
        RayHit::Pair { near, far }
    }
}

/// Which scaling root of a Zermelo indicatrix a [`NormSpec::ZermeloSheet`] selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sheet {
    /// Smallest positive root: the conic Finsler sheet `F`.
    Lower,
    /// Largest positive root: the Lorentz-Finsler sheet `F_l`.
    Upper,
}

/// A pointwise positively 1-homogeneous norm together with its conic domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormSpec {
    Riemannian {
        h: Mat2,
    },
    Randers {
        h: Mat2,
        omega: Vec2,
    },
    /// `F0(v)^2 / beta(v)` on the half-plane `beta > 0`.
    Kropina {
        base: MinkowskiNorm,
        beta: Vec2,
    },
    /// The norm whose indicatrix is the unit sphere of `base` translated by `wind`.
    ZermeloSheet {
        base: MinkowskiNorm,
        wind: Vec2,
        sheet: Sheet,
    },
}

impl From<MinkowskiNorm> for NormSpec {
    fn from(m: MinkowskiNorm) -> Self {
        match m {
            MinkowskiNorm::Riemannian { h } => NormSpec::Riemannian { h },
            MinkowskiNorm::Randers { h, omega } => NormSpec::Randers { h, omega },
        }
    }
}

impl NormSpec {
    pub fn euclidean() -> Self {
        NormSpec::Riemannian { h: Mat2::identity() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::Riemannian { h } => MinkowskiNorm::Riemannian { h: *h }.validate(),
            NormSpec::Randers { h, omega } => MinkowskiNorm::Randers { h: *h, omega: *omega }.validate(),
            NormSpec::Kropina { base, beta } => {
                base.validate()?;
                if !(beta.x.is_finite() && beta.y.is_finite()) || beta.norm() == 0.0 {
                    return Err(Error::InvalidNorm("Kropina one-form must be non-zero".into()));
                }
                Ok(())
            }
            NormSpec::ZermeloSheet { base, wind, .. } => {
                base.validate()?;
                if !(wind.x.is_finite() && wind.y.is_finite()) {
                    return Err(Error::InvalidNorm("wind must be finite".into()));
                }
                Ok(())
            }
        }
    }

    /// The Zermelo indicatrix as an ellipse, when the spec is a sheet.
    fn zermelo_body(&self) -> Option<Ellipse> {
        match self {
            NormSpec::ZermeloSheet { base, wind, .. } => Some(base.unit_ball().translated(*wind)),
            _ => None,
        }
    }

    pub fn domain(&self) -> ConicDomain {
        match self {
            NormSpec::Riemannian { .. } | NormSpec::Randers { .. } => ConicDomain::Full,
            NormSpec::Kropina { beta, .. } => ConicDomain::HalfPlane { beta: *beta },
            NormSpec::ZermeloSheet { base, wind, .. } => {
                let body = self.zermelo_body().expect("sheet");
                let d0 = base.eval(-wind) - 1.0;
                if d0 < -1e-12 {
                    ConicDomain::Full
                } else if d0 <= 1e-12 {
                    ConicDomain::HalfPlane { beta: body.shape * body.center }
                } else {
                    tangent_cone(&body)
                }
            }
        }
    }
}

/// Open conic subset of the plane on which a norm is defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConicDomain {
    Full,
    HalfPlane { beta: Vec2 },
    Cone { axis: Vec2, half_angle: f64 },
}

impl ConicDomain {
    /// Euclidean distance from `v` to the edge of the domain; zero outside it.
    pub fn boundary_distance(&self, v: Vec2) -> f64 {
        match self {
            ConicDomain::Full => f64::INFINITY,
            ConicDomain::HalfPlane { beta } => (beta.dot(&v) / beta.norm()).max(0.0),
            ConicDomain::Cone { axis, half_angle } => {
                let n = v.norm();
                if n == 0.0 {
                    return 0.0;
                }
                let a = (axis.dot(&v) / (axis.norm() * n)).clamp(-1.0, 1.0).acos();
                n * (half_angle - a).clamp(0.0, std::f64::consts::FRAC_PI_2).sin()
            }
        }
    }

    pub fn contains(&self, v: Vec2) -> bool {
        if v.norm() == 0.0 {
            return false;
        }
        match self {
            ConicDomain::Full => true,
            ConicDomain::HalfPlane { beta } => beta.dot(&v) > 0.0,
            ConicDomain::Cone { axis, half_angle } => {
                let c = axis.dot(&v) / (axis.norm() * v.norm());
                c.clamp(-1.0, 1.0).acos() < *half_angle
            }
        }
    }
}

/// Cone of rays from the origin that meet the interior of an ellipse not containing it.
fn tangent_cone(body: &Ellipse) -> ConicDomain {
    let qc = body.shape * body.center;
    let kappa = quad(&body.shape, body.center) - 1.0;
    // Null directions of Q c c' Q - kappa Q are the tangent rays.
    let m = qc * qc.transpose() - body.shape * kappa;
    let (m11, m12, m22) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mut dirs: Vec<Vec2> = Vec::with_capacity(4);
    if m22.abs() > 1e-14 * m.abs().max() {
        let disc = (m12 * m12 - m11 * m22).max(0.0).sqrt();
        for t in [(-m12 + disc) / m22, (-m12 - disc) / m22] {
            dirs.push(Vec2::new(1.0, t).normalize());
        }
    } else {
        // One null direction is the y-axis; the other solves m11 + 2 m12 t = 0.
        dirs.push(Vec2::new(0.0, 1.0));
        if m12.abs() > 0.0 {
            dirs.push(Vec2::new(1.0, -m11 / (2.0 * m12)).normalize());
        } else {
            dirs.push(Vec2::new(1.0, 0.0));
        }
    }
    let oriented: Vec<Vec2> = dirs.into_iter().map(|d| if d.dot(&qc) < 0.0 { -d } else { d }).collect();
    let axis = (oriented[0] + oriented[1]).normalize();
    let half_angle = 0.5 * oriented[0].dot(&oriented[1]).clamp(-1.0, 1.0).acos();
    ConicDomain::Cone { axis, half_angle }
}

/// Scaling roots of `F0(v - lambda W) = lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
enum ZermeloRoots {
    None,
    One(f64),
    Two(f64, f64),
}

fn bisect(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, what: &'static str) -> Result<f64> {
    // phi(lo) and phi(hi) have opposite signs.
    let lo_sign = phi(lo) > 0.0;
    for _ in 0..MAX_ROOT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_RELATIVE_TOLERANCE * hi.abs().max(f64::MIN_POSITIVE) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (phi(mid) > 0.0) == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::NumericalFailure { what, residual: phi(mid) })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..MAX_ROOT_ITERATIONS {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Roots of `a l^2 - 2 b l + c = 0` with `c > 0`, in the stable form; `d0` picks the regime.
fn quadratic_roots(a: f64, b: f64, c: f64, d0: f64) -> ZermeloRoots {
    if d0 < -1e-12 {
        return ZermeloRoots::One(c / (b + (b * b - a * c).sqrt()));
    }
    if d0 <= 1e-12 {
        return if b > 0.0 { ZermeloRoots::One(c / (2.0 * b)) } else { ZermeloRoots::None };
    }
    let disc = b * b - a * c;
    if b <= 0.0 || disc < -ROOT_COINCIDENCE * b * b {
        return ZermeloRoots::None;
    }
    if disc <= ROOT_COINCIDENCE * b * b {
        let r = b / a;
        return ZermeloRoots::Two(r, r);
    }
    let sq = disc.sqrt();
    ZermeloRoots::Two(c / (b + sq), (b + sq) / a)
}

fn zermelo_roots(base: &MinkowskiNorm, wind: Vec2, v: Vec2) -> Result<ZermeloRoots> {
    if let MinkowskiNorm::Riemannian { h } = base {
        let d0 = base.eval(-wind) - 1.0;
        return Ok(quadratic_roots(quad(h, wind) - 1.0, wind.dot(&(h * v)), quad(h, v), d0));
    }
    let phi = |lambda: f64| base.eval(v - wind * lambda) - lambda;
    let f_v = base.eval(v);
    let f_mw = base.eval(-wind);
    let d0 = f_mw - 1.0;
    if d0 < -1e-12 {
        // Mild: phi(0) > 0 and phi(lambda) <= F0(v) - lambda (1 - F0(-W)).
        let hi = 2.0 * f_v / (1.0 - f_mw) + f_v;
        return Ok(ZermeloRoots::One(bisect(phi, 0.0, hi, "mild Zermelo root")?));
    }
    if d0 <= 1e-12 {
        // Critical: phi decreases to a finite limit; grow the bracket until it turns negative.
        let mut hi = f_v.max(f64::MIN_POSITIVE);
        for _ in 0..2100 {
            if phi(hi) < 0.0 {
                return Ok(ZermeloRoots::One(bisect(phi, 0.0, hi, "critical Zermelo root")?));
            }
            hi *= 2.0;
            if !hi.is_finite() {
                break;
            }
        }
        return Ok(ZermeloRoots::None);
    }
    // Strong: phi is convex and phi(lambda) >= lambda (F0(-W) - 1) - F0(-v).
    let cap = base.eval(-v) / d0;
    let hi = 2.0 * cap + f_v;
    let lambda_min = golden_min(phi, 0.0, hi);
    let phi_min = phi(lambda_min);
    let tol = 1e-12 * f_v.max(lambda_min);
    if phi_min > tol {
        return Ok(ZermeloRoots::None);
    }
    if phi_min >= -tol {
        return Ok(ZermeloRoots::Two(lambda_min, lambda_min));
    }
    let near = bisect(phi, 0.0, lambda_min, "strong Zermelo near root")?;
    let far = bisect(phi, lambda_min, hi, "strong Zermelo far root")?;
    Ok(ZermeloRoots::Two(near, far))
}

/// Evaluate a norm; `+inf` outside its domain.
pub fn eval_norm(spec: &NormSpec, v: Vec2) -> Result<f64> {
    if v.x == 0.0 && v.y == 0.0 {
        return Err(Error::ZeroVector);
    }
    match spec {
        NormSpec::Riemannian { h } => Ok(quad(h, v).sqrt()),
        NormSpec::Randers { h, omega } => Ok(quad(h, v).sqrt() + omega.dot(&v)),
        NormSpec::Kropina { base, beta } => {
            let b = beta.dot(&v);
            if b <= 0.0 {
                Ok(f64::INFINITY)
            } else {
                let f0 = base.eval(v);
                Ok(f0 * f0 / b)
            }
        }
        NormSpec::ZermeloSheet { base, wind, sheet } => {
            let roots = zermelo_roots(base, *wind, v)?;
            Ok(match (roots, sheet) {
                (ZermeloRoots::None, _) => f64::INFINITY,
                (ZermeloRoots::One(r), Sheet::Lower) => r,
                (ZermeloRoots::One(_), Sheet::Upper) => f64::INFINITY,
                (ZermeloRoots::Two(near, _), Sheet::Lower) => near,
                (ZermeloRoots::Two(_, far), Sheet::Upper) => far,
            })
        }
    }
}

/// Fundamental tensor `g_v = 1/2 Hess(F^2)` at `v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalTensor {
    pub v: Vec2,
    pub matrix: Mat2,
}

impl FundamentalTensor {
    pub fn apply(&self, u: Vec2, w: Vec2) -> f64 {
        u.dot(&(self.matrix * w))
    }
}

/// Richardson-extrapolated central first and second derivatives of `l` along `d` at `v`.
fn directional_derivatives(l: &impl Fn(Vec2) -> f64, v: Vec2, d: Vec2, h: f64) -> (f64, f64) {
    let l0 = l(v);
    let diff = |h: f64| {
        let (p, m) = (l(v + d * h), l(v - d * h));
        ((p - m) / (2.0 * h), (p - 2.0 * l0 + m) / (h * h))
    };
    let (d1, s1) = diff(h);
    let (d2, s2) = diff(0.5 * h);
    ((4.0 * d2 - d1) / 3.0, (4.0 * s2 - s1) / 3.0)
}

/// Default finite-difference step for [`fundamental_tensor`]: `1e-3 |v|`, shrunk near the
/// domain edge where `F` varies on the scale of the distance to it. Smaller steps in the
/// open let rounding noise in `F^2` dominate the extrapolated second differences.
pub fn default_tensor_step(spec: &NormSpec, v: Vec2) -> f64 {
    (1e-3 * v.norm()).min(0.005 * spec.domain().boundary_distance(v))
}

/// Fundamental tensor from central differences of `L = F^2` with one Richardson step.
///
/// Works in the frame `(e, u)` with `e = v/|v|`. Euler's relation `g_v v = grad L / 2`
/// gives the `e` row from first differences; only `g_v(u, u)` needs a second difference.
/// Plain second differences in every direction amplify rounding by `(|v|/step)^2`.
pub fn fundamental_tensor(spec: &NormSpec, v: Vec2, step: f64) -> Result<FundamentalTensor> {
    if !(step > 0.0) {
        return Err(Error::InvalidNorm(format!("difference step must be positive, got {step}")));
    }
    let f_v = eval_norm(spec, v)?;
    if !f_v.is_finite() {
        return Err(Error::BoundaryProximity);
    }
    let reach = 2.0 * step;
    for dx in [-1.0, 0.0, 1.0] {
        for dy in [-1.0, 0.0, 1.0] {
            if dx == 0.0 && dy == 0.0 {
                continue;
            }
            let p = v + Vec2::new(dx, dy) * reach;
            if !(p.norm() > 0.0) || !eval_norm(spec, p)?.is_finite() {
                return Err(Error::BoundaryProximity);
            }
        }
    }
    let l = |u: Vec2| {
        let f = eval_norm(spec, u).unwrap_or(f64::NAN);
        f * f
    };
    let e = v / v.norm();
    let u = perp(e);
    let (le, _) = directional_derivatives(&l, v, e, step);
    let (lu, luu) = directional_derivatives(&l, v, u, step);
    let (g_ee, g_eu, g_uu) = (0.5 * le / v.norm(), 0.5 * lu / v.norm(), 0.5 * luu);
    let frame = Mat2::from_columns(&[e, u]);
    let g = frame * Mat2::new(g_ee, g_eu, g_eu, g_uu) * frame.transpose();
    if !g.iter().all(|x| x.is_finite()) {
        return Err(Error::NumericalFailure { what: "fundamental tensor", residual: f64::NAN });
    }
    Ok(FundamentalTensor { v, matrix: symmetrize(&g) })
}

/// Signature of a symmetric bilinear form on the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Signature {
    PositiveDefinite,
    Lorentzian,
    NegativeDefinite,
    Degenerate,
}

pub const SIGNATURE_TOLERANCE: f64 = 1e-9;

pub fn classify_signature(g: &FundamentalTensor) -> Signature {
    classify_matrix(&g.matrix)
}

pub fn classify_matrix(m: &Mat2) -> Signature {
    let (lo, hi) = sym_eigenvalues(m);
    let scale = lo.abs().max(hi.abs());
    let tol = SIGNATURE_TOLERANCE * scale;
    if scale == 0.0 || lo.abs() <= tol || hi.abs() <= tol {
        return Signature::Degenerate;
    }
    match (lo > 0.0, hi > 0.0) {
        (true, true) => Signature::PositiveDefinite,
        (false, true) => Signature::Lorentzian,
        _ => Signature::NegativeDefinite,
    }
}

/// Points of the indicatrix `{F = 1}` at `count` equally spaced directions, ordered along
/// the component starting after the largest run of inadmissible directions.
pub fn indicatrix_sample(spec: &NormSpec, count: usize) -> Result<Vec<Vec2>> {
    if count < 4 {
        return Err(Error::InvalidNorm(format!("need at least 4 sample directions, got {count}")));
    }
    let mut values = Vec::with_capacity(count);
    for k in 0..count {
        let theta = 2.0 * PI * k as f64 / count as f64;
        let d = Vec2::new(theta.cos(), theta.sin());
        let f = eval_norm(spec, d)?;
        values.push(if f.is_finite() && f > 0.0 { Some(d / f) } else { None });
    }
    let admissible = values.iter().filter(|v| v.is_some()).count();
    if admissible < 3 {
        return Err(Error::EmptyIndicatrix { admissible });
    }
    // Start right after the first inadmissible direction so an open arc stays contiguous.
    let start = values.iter().position(|v| v.is_none()).map(|p| (p + 1) % count).unwrap_or(0);
    Ok((0..count).filter_map(|k| values[(start + k) % count]).collect())
}

/// Outcome of a strong-convexity scan along the indicatrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StrongConvexityReport {
    pub strongly_convex: bool,
    /// Restriction of `g_v` to the tangent line of the indicatrix, per unit tangent, with
    /// the smallest magnitude found (sign kept).
    pub min_tangent_value: f64,
    /// `+1` when the tangent restriction is positive along the scan, `-1` when negative.
    pub orientation: f64,
    /// Smallest eigenvalue of the full tensor over the scan.
    pub min_full_eigenvalue: f64,
    pub samples: usize,
}

/// Check definiteness of the indicatrix curvature via the fundamental tensor.
///
/// For a conic Minkowski norm the tangent restriction is positive together with the full
/// tensor. For a Lorentz sheet `g_v(v, v) > 0` and index one force a negative tangent
/// restriction; that still counts as strongly convex (definite second fundamental form).
pub fn strong_convexity_check(spec: &NormSpec, count: usize) -> Result<StrongConvexityReport> {
    if count < 16 {
        return Err(Error::InvalidNorm(format!("need at least 16 samples, got {count}")));
    }
    let samples = indicatrix_sample(spec, count)?;
    let mut min_tangent = f64::INFINITY;
    let mut signed_min = 0.0;
    let mut min_eig = f64::INFINITY;
    let mut positive = 0usize;
    let mut negative = 0usize;
    let mut used = 0usize;
    for v in &samples {
        let g = match fundamental_tensor(spec, *v, default_tensor_step(spec, *v)) {
            Ok(g) => g,
            Err(Error::BoundaryProximity) => continue,
            Err(e) => return Err(e),
        };
        used += 1;
        let tangent = perp(g.matrix * v).normalize();
        let value = g.apply(tangent, tangent);
        let scale = g.matrix.abs().max();
        if value > SIGNATURE_TOLERANCE * scale {
            positive += 1;
        } else if value < -SIGNATURE_TOLERANCE * scale {
            negative += 1;
        }
        if value.abs() < min_tangent {
            min_tangent = value.abs();
            signed_min = value;
        }
        min_eig = min_eig.min(sym_eigenvalues(&g.matrix).0);
    }
    if used == 0 {
        return Err(Error::BoundaryProximity);
    }
    let strongly_convex = positive == used || negative == used;
    Ok(StrongConvexityReport {
        strongly_convex,
        min_tangent_value: signed_min,
        orientation: if negative > positive { -1.0 } else { 1.0 },
        min_full_eigenvalue: min_eig,
        samples: used,
    })
}
