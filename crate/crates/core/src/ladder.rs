//! Places a scenario on the causal ladder above stable causality by probing the ball and
//! geodesic characterizations of each level.
//!
//! Every `holds` means no counterexample was found at the grid resolution; a finite probe
//! set can refute a level but never certify it.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::causal::KillingCharacter;
use crate::config::{serialize_config, ScenarioConfig};
use crate::error::Result;
use crate::geodesic::{connect, escape_length, geodesic_ivp, MetricTag, Truncation};
use crate::grid::{Grid, Mask};
use crate::norm::Vec2;
use crate::reach::{propagate, separations, Direction, PropagateOptions, ReachabilityFamily, Separation};
use crate::wind::WindStructure;

pub const POOL_SIZE: usize = 8;
pub const REFLEXIVITY_PROBES: usize = 50;
pub const CONVEXITY_PROBES: usize = 50;
pub const GH_PROBES: usize = 30;
pub const COMPLETENESS_PROBES: usize = 100;
pub const RADIUS_LADDER: usize = 10;
/// Relative tolerance between connecting-geodesic length and separation.
pub const CONVEXITY_TOLERANCE: f64 = 0.03;
const MARGIN_CELLS: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Holds,
    Inconclusive,
    Fails,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    In,
    Out,
    /// The 3x3 neighbourhood is mixed.
    Band,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReflexivityProbe {
    pub x0: [f64; 2],
    pub x1: [f64; 2],
    pub r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairProbe {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallProbe {
    pub x: [f64; 2],
    pub r: f64,
    pub direction: Direction,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntersectionProbe {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub r1: f64,
    pub r2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IvpProbe {
    pub start: [f64; 2],
    pub velocity: [f64; 2],
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Reflexivity {
        probe: ReflexivityProbe,
        forward: Membership,
        backward: Membership,
    },
    Convexity {
        probe: PairProbe,
        separation: f64,
        best_length: Option<f64>,
    },
    /// A c-ball reaching an excluded region: its limit points there are missing.
    Closedness {
        probe: BallProbe,
        cell: [f64; 2],
    },
    Intersection {
        probe: IntersectionProbe,
        cell: [f64; 2],
    },
    Incompleteness {
        probe: IvpProbe,
        parameter: f64,
        end: [f64; 2],
    },
    /// Failure implied by a lower level of the ladder.
    Inherited {
        level: &'static str,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelVerdict {
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub probes: usize,
    /// Probes in the tolerance band or with infinite separation.
    pub skipped: usize,
    /// Probes cut short by the bounding box.
    pub truncated: usize,
    pub notes: Vec<String>,
}

impl LevelVerdict {
    fn new(probes: usize) -> LevelVerdict {
        LevelVerdict { status: Status::Holds, witnesses: vec![], probes, skipped: 0, truncated: 0, notes: vec![] }
    }

    fn fail(&mut self, w: Witness) {
        self.status = Status::Fails;
        self.witnesses.push(w);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdicts {
    pub causally_continuous: LevelVerdict,
    pub causally_simple: LevelVerdict,
    pub globally_hyperbolic: LevelVerdict,
    pub cauchy_slices: LevelVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeParameters {
    pub resolution: [usize; 2],
    pub horizon: f64,
    pub pool: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LadderReport {
    pub scenario_hash: String,
    pub seed: u64,
    pub baseline: &'static str,
    pub killing_character: KillingCharacter,
    pub verdicts: Verdicts,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
    pub parameters: ProbeParameters,
}

impl LadderReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn arr(v: Vec2) -> [f64; 2] {
    [v.x, v.y]
}

fn vec(a: [f64; 2]) -> Vec2 {
    Vec2::new(a[0], a[1])
}

/// Hex SHA-256 of the canonical serialization.
pub fn scenario_hash(cfg: &ScenarioConfig) -> String {
    hex::encode(Sha256::digest(serialize_config(cfg).as_bytes()))
}

type FamilyKey = (u64, u64, Direction);

/// Scenario plus memoized reachability families shared by all checks.
pub struct LadderContext {
    pub config: ScenarioConfig,
    pub ws: WindStructure,
    pub character: KillingCharacter,
    pub horizon: f64,
    grid: Grid,
    excluded: Mask,
    families: RwLock<HashMap<FamilyKey, Arc<ReachabilityFamily>>>,
}

impl LadderContext {
    pub fn new(config: ScenarioConfig) -> Result<LadderContext> {
        let ws = config.build()?;
        let counts = ws.region_counts();
        let character = if counts.strong > 0 {
            KillingCharacter::Arbitrary
        } else if counts.critical > 0 {
            KillingCharacter::Causal
        } else {
            KillingCharacter::Timelike
        };
        let grid = ws.grid();
        let mut excluded = Mask::new(grid.nx, grid.ny);
        let reach = 0.5 * (grid.hx * grid.hx + grid.hy * grid.hy).sqrt();
        for k in 0..grid.len() {
            let c = grid.center_of(k);
            if ws.domain.exclusions.iter().any(|e| e.signed_distance(c) < reach) {
                excluded.set_index(k, true);
            }
        }
        let horizon = config.numerics.horizon;
        Ok(LadderContext { config, ws, character, horizon, grid, excluded, families: RwLock::new(HashMap::new()) })
    }

    pub fn causal_k(&self) -> bool {
        self.character != KillingCharacter::Arbitrary
    }

    pub fn family(&self, x: Vec2, direction: Direction) -> Result<Arc<ReachabilityFamily>> {
        let key = (x.x.to_bits(), x.y.to_bits(), direction);
        if let Some(f) = self.families.read().expect("family lock").get(&key) {
            return Ok(f.clone());
        }
        let opts = PropagateOptions { dt: self.config.numerics.dt, direction: Some(direction), ..Default::default() };
        let fam = Arc::new(propagate(&self.ws, x, self.horizon, &opts)?);
        Ok(self.families.write().expect("family lock").entry(key).or_insert(fam).clone())
    }

    /// Computes the families for these sources concurrently.
    pub fn warm(&self, sources: &[(Vec2, Direction)]) -> Result<()> {
        sources.par_iter().map(|(x, d)| self.family(*x, *d).map(|_| ())).collect()
    }

    fn membership(&self, mask: &Mask, p: Vec2) -> Membership {
        let Some((i, j)) = self.grid.cell_of(p) else { return Membership::Out };
        let mut n = 0;
        for dj in -1..=1isize {
            for di in -1..=1isize {
                if mask.get_signed(i as isize + di, j as isize + dj) {
                    n += 1;
                }
            }
        }
        match n {
            9 => Membership::In,
            0 => Membership::Out,
            _ => Membership::Band,
        }
    }

    /// First cell of `mask`, grown by the margin, that lies in an excluded region.
    fn touches_exclusion(&self, mask: &Mask) -> Option<Vec2> {
        let grown = mask.dilated(MARGIN_CELLS);
        grown.intersection(&self.excluded).iter().next().map(|(i, j)| self.grid.center(i, j))
    }

    fn touches_box(&self, mask: &Mask) -> bool {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        mask.iter()
            .any(|(i, j)| i < MARGIN_CELLS || j < MARGIN_CELLS || i + MARGIN_CELLS >= nx || j + MARGIN_CELLS >= ny)
    }
}

/// Deterministic probe sets drawn from a pool of source points.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSet {
    pub pool: Vec<Vec2>,
    pub reflexivity: Vec<ReflexivityProbe>,
    pub convexity: Vec<PairProbe>,
    pub balls: Vec<BallProbe>,
    pub intersections: Vec<IntersectionProbe>,
    pub ivps: Vec<IvpProbe>,
}

impl ProbeSet {
    pub fn generate(ctx: &LadderContext, seed: u64) -> Result<ProbeSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = &ctx.ws.domain;
        let half = 0.5 * (d.x.1 - d.x.0).min(d.y.1 - d.y.0);
        let centre = Vec2::new(0.5 * (d.x.0 + d.x.1), 0.5 * (d.y.0 + d.y.1));
        let h = ctx.grid.h();
        // Pairs straddling each exclusion come first.
        let mut pool = Vec::new();
        let mut straddles = Vec::new();
        for e in d.exclusions.iter().take(POOL_SIZE / 2) {
            let extent = match e {
                crate::wind::Exclusion::Disk { radius, .. } => *radius,
                crate::wind::Exclusion::Rect { min, max } => 0.5 * (max - min).norm(),
            };
            let off = (10.0 * extent).clamp(4.0 * h, 0.4 * half);
            let a = e.center() - Vec2::new(off, 0.0);
            let b = e.center() + Vec2::new(off, 0.0);
            if d.contains(a) && d.contains(b) {
                straddles.push((pool.len(), pool.len() + 1));
                pool.push(a);
                pool.push(b);
            }
        }
        let width = (0.3 * half).min(0.3 * ctx.horizon * crate::geodesic::speed_floor(&ctx.ws)).max(4.0 * h);
        while pool.len() < POOL_SIZE {
            let p = centre + Vec2::new(rng.random_range(-width..=width), rng.random_range(-width..=width));
            if d.contains(p) && !ctx.excluded.get_index(cell_index(&ctx.grid, p)) {
                pool.push(p);
            }
        }
        let n = pool.len();
        let pick = |rng: &mut ChaCha8Rng| rng.random_range(0..n);
        let hz = ctx.horizon;

        let reflexivity = (0..REFLEXIVITY_PROBES)
            .map(|_| {
                let (i, j) = (pick(&mut rng), pick(&mut rng));
                ReflexivityProbe { x0: arr(pool[i]), x1: arr(pool[j]), r: rng.random_range(0.2..=1.0) * hz }
            })
            .collect();

        let mut convexity: Vec<PairProbe> = straddles
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .map(|(a, b)| PairProbe { x: arr(pool[a]), y: arr(pool[b]) })
            .collect();
        let mut pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
        for k in (1..pairs.len()).rev() {
            pairs.swap(k, rng.random_range(0..=k));
        }
        for (i, j) in pairs {
            if convexity.len() >= CONVEXITY_PROBES {
                break;
            }
            let p = PairProbe { x: arr(pool[i]), y: arr(pool[j]) };
            if !convexity.contains(&p) {
                convexity.push(p);
            }
        }

        let mut balls = Vec::new();
        for p in &pool {
            for k in 1..=RADIUS_LADDER {
                for direction in [Direction::Forward, Direction::Backward] {
                    balls.push(BallProbe { x: arr(*p), r: hz * k as f64 / RADIUS_LADDER as f64, direction });
                }
            }
        }

        let mut intersections: Vec<IntersectionProbe> = straddles
            .iter()
            .map(|&(a, b)| {
                let r = (0.6 * (pool[b] - pool[a]).norm() / crate::geodesic::speed_floor(&ctx.ws)).min(hz);
                IntersectionProbe { x: arr(pool[a]), y: arr(pool[b]), r1: r, r2: r }
            })
            .collect();
        // Prefer radii whose balls actually meet; empty intersections test nothing.
        let sources: Vec<(Vec2, Direction)> =
            pool.iter().flat_map(|p| [(*p, Direction::Forward), (*p, Direction::Backward)]).collect();
        ctx.warm(&sources)?;
        let ladder: Vec<f64> = (1..=12).map(|k| k as f64 / 12.0 * hz).collect();
        let mut attempts = 0;
        while intersections.len() < GH_PROBES {
            let (i, j) = (pick(&mut rng), pick(&mut rng));
            attempts += 1;
            let f = ctx.family(pool[i], Direction::Forward)?;
            let b = ctx.family(pool[j], Direction::Backward)?;
            let mut meeting = Vec::new();
            for &r1 in &ladder {
                for &r2 in &ladder {
                    if !f.c_ball(f.step_for(r1)?).intersection(b.c_ball(b.step_for(r2)?)).is_empty() {
                        meeting.push((r1, r2));
                    }
                }
            }
            let (r1, r2) = match meeting.len() {
                0 if attempts < 40 * GH_PROBES => continue,
                0 => (ladder[rng.random_range(0..12)], ladder[rng.random_range(0..12)]),
                n => meeting[rng.random_range(0..n)],
            };
            intersections.push(IntersectionProbe { x: arr(pool[i]), y: arr(pool[j]), r1, r2 });
        }

        let length = 2.0 * escape_length(&ctx.ws);
        let mut ivps: Vec<IvpProbe> = straddles
            .iter()
            .flat_map(|&(a, b)| [(a, b), (b, a)])
            .map(|(a, b)| IvpProbe { start: arr(pool[a]), velocity: arr(pool[b] - pool[a]), length })
            .filter(|p| {
                ctx.ws
                    .admissible(vec(p.start), vec(p.velocity))
                    .is_ok_and(|a| a == crate::wind::Admissibility::Interior)
            })
            .collect();
        while ivps.len() < COMPLETENESS_PROBES {
            let start = pool[pick(&mut rng)];
            let Ok(body) = ctx.ws.body_at(start) else { continue };
            let r = 0.9 * rng.random::<f64>().sqrt();
            let t = rng.random::<f64>() * std::f64::consts::TAU;
            let v = body.center + body.boundary_map() * Vec2::new(r * t.cos(), r * t.sin());
            if v.norm() > 1e-6 {
                ivps.push(IvpProbe { start: arr(start), velocity: arr(v), length });
            }
        }
        Ok(ProbeSet { pool, reflexivity, convexity, balls, intersections, ivps })
    }
}

fn cell_index(grid: &Grid, p: Vec2) -> usize {
    let (i, j) = grid.cell_of(p).unwrap_or((0, 0));
    grid.index(i, j)
}

/// Forward and backward closed balls agree on membership.
pub fn check_reflexivity(ctx: &LadderContext, probes: &[ReflexivityProbe]) -> Result<LevelVerdict> {
    let mut v = LevelVerdict::new(probes.len());
    let results: Vec<(Membership, Membership)> = probes
        .par_iter()
        .map(|p| {
            let f = ctx.family(vec(p.x0), Direction::Forward)?;
            let b = ctx.family(vec(p.x1), Direction::Backward)?;
            let fwd = ctx.membership(f.c_ball(f.step_for(p.r)?), vec(p.x1));
            let bwd = ctx.membership(b.c_ball(b.step_for(p.r)?), vec(p.x0));
            Ok((fwd, bwd))
        })
        .collect::<Result<_>>()?;
    for (p, (fwd, bwd)) in probes.iter().zip(results) {
        match (fwd, bwd) {
            (Membership::Band, _) | (_, Membership::Band) => v.skipped += 1,
            (a, b) if a != b => v.fail(Witness::Reflexivity { probe: *p, forward: a, backward: b }),
            _ => {}
        }
    }
    if v.status == Status::Holds && v.skipped == v.probes && v.probes > 0 {
        v.status = Status::Inconclusive;
        v.notes.push("every probe fell in the boundary band".into());
    }
    Ok(v)
}

/// Convexity: connecting geodesics realize the separation (causal `∂t`), and c-balls stay
/// away from excluded regions.
pub fn check_wconvex(ctx: &LadderContext, pairs: &[PairProbe], balls: &[BallProbe]) -> Result<LevelVerdict> {
    let mut v = LevelVerdict::new(pairs.len() + balls.len());
    if ctx.causal_k() && !pairs.is_empty() {
        let mut by_source: Vec<(Vec2, Vec<usize>)> = Vec::new();
        for (k, p) in pairs.iter().enumerate() {
            match by_source.iter_mut().find(|(x, _)| *x == vec(p.x)) {
                Some((_, ks)) => ks.push(k),
                None => by_source.push((vec(p.x), vec![k])),
            }
        }
        let mut seps = vec![Separation::Infinite; pairs.len()];
        let computed: Vec<Vec<Separation>> = by_source
            .par_iter()
            .map(|(x, ks)| {
                let ys: Vec<Vec2> = ks.iter().map(|k| vec(pairs[*k].y)).collect();
                separations(&ctx.ws, *x, &ys, ctx.horizon, ctx.config.numerics.dt)
            })
            .collect::<Result<_>>()?;
        for ((_, ks), s) in by_source.iter().zip(computed) {
            for (k, sep) in ks.iter().zip(s) {
                seps[*k] = sep;
            }
        }
        let outcomes: Vec<Option<(f64, Option<f64>)>> = pairs
            .par_iter()
            .zip(&seps)
            .map(|(p, sep)| {
                let Separation::Finite(d) = *sep else { return Ok(None) };
                let paths = connect(&ctx.ws, vec(p.x), vec(p.y), MetricTag::F)?;
                let best = paths.iter().map(|g| g.length_f).min_by(|a, b| (a - d).abs().total_cmp(&(b - d).abs()));
                Ok(Some((d, best)))
            })
            .collect::<Result<_>>()?;
        for (p, o) in pairs.iter().zip(outcomes) {
            match o {
                None => v.skipped += 1,
                Some((d, best)) => {
                    // Fronts resolve separations to about one cell's travel time.
                    let (x, y) = (vec(p.x), vec(p.y));
                    let f = ctx.ws.eval_f(x, (y - x) / (y - x).norm())?;
                    let cell_time = if f.is_finite() { f * ctx.grid.h() } else { 0.0 };
                    let tol = (CONVEXITY_TOLERANCE * d).max(cell_time);
                    let ok = best.is_some_and(|l| (l - d).abs() <= tol);
                    if !ok {
                        v.fail(Witness::Convexity { probe: *p, separation: d, best_length: best });
                    }
                }
            }
        }
        v.notes.push(format!("connecting geodesics checked against separation on {} pairs", pairs.len()));
    } else {
        v.skipped += pairs.len();
    }
    let closed = check_balls(ctx, balls)?;
    v.truncated += closed.truncated;
    for w in closed.witnesses {
        v.fail(w);
    }
    v.notes.push(format!("c-ball closedness checked on {} balls", balls.len()));
    finish(ctx, &mut v);
    Ok(v)
}

fn check_balls(ctx: &LadderContext, balls: &[BallProbe]) -> Result<LevelVerdict> {
    let mut v = LevelVerdict::new(balls.len());
    let results: Vec<(bool, Option<Vec2>)> = balls
        .par_iter()
        .map(|b| {
            let f = ctx.family(vec(b.x), b.direction)?;
            let m = f.c_ball(f.step_for(b.r)?);
            Ok((ctx.touches_box(m), ctx.touches_exclusion(m)))
        })
        .collect::<Result<_>>()?;
    for (b, (boxed, excl)) in balls.iter().zip(results) {
        if let Some(c) = excl {
            v.fail(Witness::Closedness { probe: *b, cell: arr(c) });
        } else if boxed {
            v.truncated += 1;
        }
    }
    Ok(v)
}

/// Closed forward and backward balls intersect in compact sets.
pub fn check_global_hyperbolicity(ctx: &LadderContext, probes: &[IntersectionProbe]) -> Result<LevelVerdict> {
    let mut v = LevelVerdict::new(probes.len());
    let results: Vec<(bool, bool, Option<Vec2>)> = probes
        .par_iter()
        .map(|p| {
            let f = ctx.family(vec(p.x), Direction::Forward)?;
            let b = ctx.family(vec(p.y), Direction::Backward)?;
            let m = f.c_ball(f.step_for(p.r1)?).intersection(b.c_ball(b.step_for(p.r2)?));
            Ok((m.is_empty(), ctx.touches_box(&m), ctx.touches_exclusion(&m)))
        })
        .collect::<Result<_>>()?;
    for (p, (empty, boxed, excl)) in probes.iter().zip(results) {
        if empty {
            v.skipped += 1;
        } else if let Some(c) = excl {
            v.fail(Witness::Intersection { probe: *p, cell: arr(c) });
        } else if boxed {
            v.truncated += 1;
        }
    }
    finish(ctx, &mut v);
    Ok(v)
}

/// Ball compactness in both directions plus geodesic completeness.
pub fn check_cauchy(ctx: &LadderContext, balls: &[BallProbe], ivps: &[IvpProbe]) -> Result<LevelVerdict> {
    let mut v = check_balls(ctx, balls)?;
    v.probes += ivps.len();
    let results: Vec<std::result::Result<(Option<Truncation>, f64, Vec2), String>> = ivps
        .par_iter()
        .map(|p| {
            geodesic_ivp(&ctx.ws, vec(p.start), vec(p.velocity), p.length, None, MetricTag::F)
                .map(|g| (g.truncated, g.duration(), g.end()))
                .map_err(|e| e.to_string())
        })
        .collect();
    let mut escaped = 0;
    let mut lightlike = 0;
    for (p, r) in ivps.iter().zip(results) {
        match r {
            Ok((Some(Truncation::HitExclusion), t, end)) => {
                v.fail(Witness::Incompleteness { probe: *p, parameter: t, end: arr(end) })
            }
            Ok((Some(Truncation::LeftBox), ..)) => escaped += 1,
            Ok((Some(Truncation::NearLightlike), ..)) => lightlike += 1,
            Ok((None, ..)) => {}
            Err(e) => {
                v.skipped += 1;
                if v.notes.len() < 4 {
                    v.notes.push(format!("geodesic probe failed: {e}"));
                }
            }
        }
    }
    v.truncated += escaped;
    if escaped > 0 {
        v.notes.push(format!("{escaped} geodesics left the bounding box"));
    }
    if lightlike > 0 {
        v.skipped += lightlike;
        v.notes.push(format!("{lightlike} geodesics approached the lightlike boundary"));
    }
    finish(ctx, &mut v);
    Ok(v)
}

/// Truncated probes leave a verdict inconclusive unless the scenario extends analytically.
fn finish(ctx: &LadderContext, v: &mut LevelVerdict) {
    if v.status != Status::Holds {
        return;
    }
    if v.truncated > 0 {
        if ctx.config.analytic_extension {
            v.notes.push(format!("{} probes reached the box; counted under the analytic extension flag", v.truncated));
        } else {
            v.status = Status::Inconclusive;
            v.notes.push(format!("{} probes reached the box (domain truncation)", v.truncated));
        }
    }
}

const LEVELS: [&str; 4] = ["causally_continuous", "causally_simple", "globally_hyperbolic", "cauchy_slices"];

/// Applies `cauchy ⇒ GH ⇒ simple ⇒ continuous` to the four verdicts (lowest first).
pub fn reconcile(mut levels: [LevelVerdict; 4]) -> [LevelVerdict; 4] {
    // A failure propagates upward; a level claiming to hold above it is inconsistent.
    for low in 0..4 {
        if levels[low].status != Status::Fails {
            continue;
        }
        for high in low + 1..4 {
            match levels[high].status {
                Status::Fails => {}
                Status::Inconclusive => {
                    levels[high].status = Status::Fails;
                    levels[high].witnesses.push(Witness::Inherited { level: LEVELS[low] });
                }
                Status::Holds => {
                    levels[high].status = Status::Inconclusive;
                    levels[high].witnesses.push(Witness::Inherited { level: LEVELS[low] });
                    let ws = levels[low].witnesses.clone();
                    levels[high].witnesses.extend(ws);
                    levels[high].notes.push(format!("held, but {} fails", LEVELS[low]));
                }
            }
        }
    }
    // A holding level implies every level below it.
    for high in (1..4).rev() {
        if levels[high].status != Status::Holds {
            continue;
        }
        for low in 0..high {
            if levels[low].status == Status::Inconclusive {
                levels[low].status = Status::Holds;
                levels[low].notes.push(format!("implied by {}", LEVELS[high]));
            }
        }
    }
    for l in levels.iter_mut() {
        if l.status == Status::Holds {
            l.notes.push("no counterexample found at this resolution".into());
        }
    }
    levels
}

pub fn assemble_report(ctx: &LadderContext, seed: u64, probes: &ProbeSet, verdicts: [LevelVerdict; 4]) -> LadderReport {
    let [causally_continuous, causally_simple, globally_hyperbolic, cauchy_slices] = reconcile(verdicts);
    let mut flags = Vec::new();
    if ctx.config.analytic_extension {
        flags.push("analytic_extension".to_string());
    }
    let mut notes = vec!["stably causal for every splitting of this kind".to_string()];
    if ctx.character != KillingCharacter::Timelike {
        let diagonal = probes.pool.iter().all(|x| {
            ctx.family(*x, Direction::Forward).is_ok_and(|f| {
                let (i, j) = f.grid.cell_of(*x).expect("pool point in box");
                (1..=f.steps).all(|k| !f.open_ball(k).get(i, j))
            })
        });
        if ctx.character == KillingCharacter::Causal && diagonal {
            notes.push("d_F(x, x) = +inf: no open ball contains its centre".into());
        }
    }
    LadderReport {
        scenario_hash: scenario_hash(&ctx.config),
        seed,
        baseline: "stably_causal",
        killing_character: ctx.character,
        verdicts: Verdicts { causally_continuous, causally_simple, globally_hyperbolic, cauchy_slices },
        flags,
        notes,
        parameters: ProbeParameters {
            resolution: [ctx.grid.nx, ctx.grid.ny],
            horizon: ctx.horizon,
            pool: probes.pool.iter().map(|p| arr(*p)).collect(),
        },
    }
}

/// Runs all four checks with probes drawn from `seed`.
pub fn run_ladder(config: &ScenarioConfig, seed: u64) -> Result<LadderReport> {
    let ctx = LadderContext::new(config.clone())?;
    let probes = ProbeSet::generate(&ctx, seed)?;
    let reflexivity = check_reflexivity(&ctx, &probes.reflexivity)?;
    let closed_balls: Vec<BallProbe> =
        probes.balls.iter().filter(|b| b.direction == Direction::Forward).copied().collect();
    let convex = check_wconvex(&ctx, &probes.convexity, &closed_balls)?;
    let gh = check_global_hyperbolicity(&ctx, &probes.intersections)?;
    let cauchy = check_cauchy(&ctx, &probes.balls, &probes.ivps)?;
    Ok(assemble_report(&ctx, seed, &probes, [reflexivity, convex, gh, cauchy]))
}

/// Re-runs the probe behind a witness on its own; true when the failure reproduces.
pub fn reverify(ctx: &LadderContext, witness: &Witness) -> Result<bool> {
    let v = match witness {
        Witness::Reflexivity { probe, .. } => check_reflexivity(ctx, &[*probe])?,
        Witness::Convexity { probe, .. } => check_wconvex(ctx, &[*probe], &[])?,
        Witness::Closedness { probe, .. } => check_balls(ctx, &[*probe])?,
        Witness::Intersection { probe, .. } => check_global_hyperbolicity(ctx, &[*probe])?,
        Witness::Incompleteness { probe, .. } => check_cauchy(ctx, &[], &[*probe])?,
        Witness::Inherited { .. } => return Ok(false),
    };
    Ok(v.status == Status::Fails)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn held(notes: &str) -> LevelVerdict {
        let mut v = LevelVerdict::new(1);
        v.notes.push(notes.into());
        v
    }

    fn with(status: Status) -> LevelVerdict {
        let mut v = held("");
        v.status = status;
        v
    }

    #[test]
    fn failure_propagates_up() {
        let out = reconcile([
            with(Status::Holds),
            with(Status::Fails),
            with(Status::Inconclusive),
            with(Status::Inconclusive),
        ]);
        let s: Vec<Status> = out.iter().map(|v| v.status).collect();
        assert_eq!(s, [Status::Holds, Status::Fails, Status::Fails, Status::Fails]);
        assert!(matches!(out[2].witnesses[0], Witness::Inherited { level: "causally_simple" }));
    }

    #[test]
    fn inconsistent_holds_downgraded() {
        let out = reconcile([with(Status::Fails), with(Status::Holds), with(Status::Holds), with(Status::Holds)]);
        assert_eq!(out[0].status, Status::Fails);
        assert!(out[1..].iter().all(|v| v.status == Status::Inconclusive));
    }

    #[test]
    fn holds_implies_lower() {
        let out = reconcile([
            with(Status::Inconclusive),
            with(Status::Inconclusive),
            with(Status::Holds),
            with(Status::Inconclusive),
        ]);
        let s: Vec<Status> = out.iter().map(|v| v.status).collect();
        assert_eq!(s, [Status::Holds, Status::Holds, Status::Holds, Status::Inconclusive]);
    }
}
