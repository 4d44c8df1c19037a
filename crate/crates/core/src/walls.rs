//! Degeneracy walls in the `(a, b)` plane, delta-Chern invariants across them
//! and the iso-Chern domain chart.
//!
//! The six walls are `a = +-1/3` (degeneracy on the C4 orbit), `b = +-1`
//! (C3 orbit) and the two branches of `3ab - b^2 + 2 = 0` (C2 orbit).

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chern::{refine_until_stable, ChernOptions, ChernRecord, ORIENTATION};
use crate::error::{Error, Result};
use crate::model::{linearize, ControlPoint, SpherePoint, TripletModel};
use crate::symmetry::{orbit_points, OrbitType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WallId {
    #[serde(rename = "a=+1/3")]
    APlusThird,
    #[serde(rename = "a=-1/3")]
    AMinusThird,
    #[serde(rename = "b=+1")]
    BPlusOne,
    #[serde(rename = "b=-1")]
    BMinusOne,
    #[serde(rename = "c2+")]
    C2Upper,
    #[serde(rename = "c2-")]
    C2Lower,
}

impl WallId {
    pub const ALL: [WallId; 6] = [
        WallId::APlusThird,
        WallId::AMinusThird,
        WallId::BPlusOne,
        WallId::BMinusOne,
        WallId::C2Upper,
        WallId::C2Lower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WallId::APlusThird => "a=+1/3",
            WallId::AMinusThird => "a=-1/3",
            WallId::BPlusOne => "b=+1",
            WallId::BMinusOne => "b=-1",
            WallId::C2Upper => "c2+",
            WallId::C2Lower => "c2-",
        }
    }

    pub fn wall(self) -> Wall {
        Wall::new(self)
    }
}

impl fmt::Display for WallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WallId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase();
        let id = match t.as_str() {
            "a=+1/3" | "a=1/3" => WallId::APlusThird,
            "a=-1/3" => WallId::AMinusThird,
            "b=+1" | "b=1" => WallId::BPlusOne,
            "b=-1" => WallId::BMinusOne,
            "c2+" | "c2:b>0" => WallId::C2Upper,
            "c2-" | "c2:b<0" => WallId::C2Lower,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown wall '{s}' (expected a=+1/3, a=-1/3, b=+1, b=-1, c2+ or c2-)"
                )))
            }
        };
        Ok(id)
    }
}

/// Coordinate of the control plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    A,
    B,
}

/// An analytic degeneracy wall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub id: WallId,
    pub orbit: OrbitType,
    pub orbit_size: usize,
    pub condition: String,
}

/// `a` on the C2 wall as a function of `b != 0`.
pub fn c2_wall_a(b: f64) -> f64 {
    (b * b - 2.0) / (3.0 * b)
}

fn dist2(c: ControlPoint, a: f64, b: f64) -> f64 {
    (c.a - a).powi(2) + (c.b - b).powi(2)
}

impl Wall {
    pub fn new(id: WallId) -> Self {
        let (orbit, condition) = match id {
            WallId::APlusThird => (OrbitType::C4, "a = 1/3"),
            WallId::AMinusThird => (OrbitType::C4, "a = -1/3"),
            WallId::BPlusOne => (OrbitType::C3, "b = 1"),
            WallId::BMinusOne => (OrbitType::C3, "b = -1"),
            WallId::C2Upper => (OrbitType::C2, "a = (b^2 - 2)/(3b), b > 0"),
            WallId::C2Lower => (OrbitType::C2, "a = (b^2 - 2)/(3b), b < 0"),
        };
        Wall {
            id,
            orbit,
            orbit_size: orbit.size(),
            condition: condition.to_string(),
        }
    }

    /// Signed level function: zero on the wall, sign gives the side.
    ///
    /// For a C2 branch this is `3ab - b^2 + 2` on the branch's half-plane and
    /// `+2` on the other, where the branch never reaches.
    pub fn level(&self, c: ControlPoint) -> f64 {
        match self.id {
            WallId::APlusThird => c.a - 1.0 / 3.0,
            WallId::AMinusThird => c.a + 1.0 / 3.0,
            WallId::BPlusOne => c.b - 1.0,
            WallId::BMinusOne => c.b + 1.0,
            WallId::C2Upper if c.b > 0.0 => 3.0 * c.a * c.b - c.b * c.b + 2.0,
            WallId::C2Lower if c.b < 0.0 => 3.0 * c.a * c.b - c.b * c.b + 2.0,
            WallId::C2Upper | WallId::C2Lower => 2.0,
        }
    }

    pub fn side(&self, c: ControlPoint) -> i8 {
        let v = self.level(c);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    }

    fn gradient(&self, c: ControlPoint) -> [f64; 2] {
        match self.id {
            WallId::APlusThird | WallId::AMinusThird => [1.0, 0.0],
            WallId::BPlusOne | WallId::BMinusOne => [0.0, 1.0],
            WallId::C2Upper | WallId::C2Lower => [3.0 * c.b, 3.0 * c.a - 2.0 * c.b],
        }
    }

    /// Unit normal pointing towards increasing [`Wall::level`].
    pub fn normal(&self, c: ControlPoint) -> [f64; 2] {
        let g = self.gradient(c);
        let n = g[0].hypot(g[1]);
        [g[0] / n, g[1] / n]
    }

    /// First-order distance `|level| / |grad level|`, exact for the lines.
    pub fn residual(&self, c: ControlPoint) -> f64 {
        match self.id {
            WallId::C2Upper if c.b <= 0.0 => f64::INFINITY,
            WallId::C2Lower if c.b >= 0.0 => f64::INFINITY,
            _ => {
                let g = self.gradient(c);
                self.level(c).abs() / g[0].hypot(g[1])
            }
        }
    }

    pub fn contains(&self, c: ControlPoint, tol: f64) -> bool {
        self.residual(c) <= tol
    }

    /// Euclidean distance from `c` to the wall.
    pub fn distance(&self, c: ControlPoint) -> f64 {
        match self.id {
            WallId::APlusThird | WallId::AMinusThird | WallId::BPlusOne | WallId::BMinusOne => self.level(c).abs(),
            WallId::C2Upper => c2_branch_distance(c, 1.0),
            WallId::C2Lower => c2_branch_distance(c, -1.0),
        }
    }

    /// Point on the wall at parameter `s`: `b` for the C4 and C2 walls, `a`
    /// for the C3 walls. `None` if `s` is off the C2 branch.
    pub fn point_at(&self, s: f64) -> Option<ControlPoint> {
        match self.id {
            WallId::APlusThird => Some(ControlPoint::new(1.0 / 3.0, s)),
            WallId::AMinusThird => Some(ControlPoint::new(-1.0 / 3.0, s)),
            WallId::BPlusOne => Some(ControlPoint::new(s, 1.0)),
            WallId::BMinusOne => Some(ControlPoint::new(s, -1.0)),
            WallId::C2Upper if s > 0.0 => Some(ControlPoint::new(c2_wall_a(s), s)),
            WallId::C2Lower if s < 0.0 => Some(ControlPoint::new(c2_wall_a(s), s)),
            _ => None,
        }
    }

    /// Point of the wall with coordinate `axis` fixed at `value`, if the
    /// wall crosses that line.
    pub fn locate(&self, axis: Axis, value: f64) -> Option<ControlPoint> {
        match (self.orbit, axis) {
            (OrbitType::C4, Axis::B) | (OrbitType::C2, Axis::B) | (OrbitType::C3, Axis::A) => self.point_at(value),
            (OrbitType::C4, Axis::A) | (OrbitType::C3, Axis::B) => None,
            (OrbitType::C2, Axis::A) => {
                // b^2 - 3ab - 2 = 0 has one root of each sign.
                let r = (9.0 * value * value + 8.0).sqrt();
                let b = match self.id {
                    WallId::C2Upper => (3.0 * value + r) / 2.0,
                    _ => (3.0 * value - r) / 2.0,
                };
                Some(ControlPoint::new(value, b))
            }
        }
    }

    /// Nearest point of the wall to `c`.
    pub fn project(&self, c: ControlPoint) -> ControlPoint {
        match self.id {
            WallId::APlusThird | WallId::AMinusThird => ControlPoint::new(c.a - self.level(c), c.b),
            WallId::BPlusOne | WallId::BMinusOne => ControlPoint::new(c.a, c.b - self.level(c)),
            WallId::C2Upper => {
                let s = c2_branch_nearest(c, 1.0);
                ControlPoint::new(c2_wall_a(s), s)
            }
            WallId::C2Lower => {
                let s = c2_branch_nearest(c, -1.0);
                ControlPoint::new(c2_wall_a(s), s)
            }
        }
    }

    /// Band pair (ascending indices) that degenerates at the orbit points.
    pub fn band_pair(&self, c: ControlPoint) -> (usize, usize) {
        let mut e = degenerate_energies(self.orbit, c);
        e.sort_by(f64::total_cmp);
        if e[1] - e[0] <= e[2] - e[1] {
            (0, 1)
        } else {
            (1, 2)
        }
    }
}

/// Parameter `b'` on the C2 branch with sign `branch` nearest to `c`.
fn c2_branch_nearest(c: ControlPoint, branch: f64) -> f64 {
    let f = |s: f64| dist2(c, c2_wall_a(s), s);
    // Candidates: vertical and horizontal projections plus a log-spaced sweep.
    let mut cand: Vec<f64> = (0..=48).map(|k| branch * 10f64.powf(-3.0 + k as f64 / 8.0)).collect();
    if c.b * branch > 0.0 {
        cand.push(c.b);
    }
    let disc = (9.0 * c.a * c.a + 8.0).sqrt();
    cand.push((3.0 * c.a + branch * disc) / 2.0);
    cand.sort_by(|x, y| (x.abs()).total_cmp(&y.abs()));
    let best = (0..cand.len())
        .min_by(|&i, &j| f(cand[i]).total_cmp(&f(cand[j])))
        .expect("candidates are nonempty");
    let mut lo = cand[best.saturating_sub(1)];
    let mut hi = cand[(best + 1).min(cand.len() - 1)];
    if lo.abs() > hi.abs() {
        std::mem::swap(&mut lo, &mut hi);
    }
    // Golden-section search on the bracket.
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-15 * (1.0 + hi.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [cand[best], mid]
        .into_iter()
        .min_by(|&x, &y| f(x).total_cmp(&f(y)))
        .expect("two candidates")
}

fn c2_branch_distance(c: ControlPoint, branch: f64) -> f64 {
    let s = c2_branch_nearest(c, branch);
    dist2(c, c2_wall_a(s), s).sqrt()
}

pub fn wall_catalog() -> Vec<Wall> {
    WallId::ALL.iter().map(|&id| Wall::new(id)).collect()
}

/// Closed-form spectrum at the points of a stratum, in the order
/// `(a - 1, -2a, a + 1)` for C4, `(-1 - b/3, 1 - b/3, 2b/3)` for C3 and
/// `((a - b - r)/4, (b - a)/2, (a - b + r)/4)`, `r = sqrt((3a + b)^2 + 16)`, for C2.
pub fn degenerate_energies(orbit: OrbitType, c: ControlPoint) -> [f64; 3] {
    let (a, b) = (c.a, c.b);
    match orbit {
        OrbitType::C4 => [a - 1.0, -2.0 * a, a + 1.0],
        OrbitType::C3 => [-1.0 - b / 3.0, 1.0 - b / 3.0, 2.0 * b / 3.0],
        OrbitType::C2 => {
            let r = ((3.0 * a + b).powi(2) + 16.0).sqrt();
            [(a - b - r) / 4.0, (b - a) / 2.0, (a - b + r) / 4.0]
        }
    }
}

/// Tolerance on the wall residual for a crossing point.
pub const ON_WALL_TOL: f64 = 1e-8;
/// Minimum `|direction . normal|` for a transverse crossing.
pub const MIN_TRANSVERSALITY: f64 = 0.1;
/// Minimum distance from every other wall for a crossing point.
pub const INTERSECTION_MARGIN: f64 = 0.1;
/// Offset from the wall for the two-sided Chern comparison.
pub const TWO_SIDED_OFFSET: f64 = 0.05;

/// Chern number change across a wall, for a path in `direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallCrossing {
    pub wall: WallId,
    pub orbit: OrbitType,
    pub point: ControlPoint,
    pub direction: [f64; 2],
    pub band_pair: (usize, usize),
    pub delta: Vec<i64>,
    pub local_sign: i32,
    pub orbit_size: usize,
    pub jacobian_det: f64,
}

impl WallCrossing {
    pub fn sum(&self) -> i64 {
        self.delta.iter().sum()
    }
}

fn unit(direction: [f64; 2]) -> Result<[f64; 2]> {
    let n = direction[0].hypot(direction[1]);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidInput("crossing direction must be nonzero".into()));
    }
    Ok([direction[0] / n, direction[1] / n])
}

fn check_crossing(wall: &Wall, c: ControlPoint, dir: [f64; 2]) -> Result<()> {
    if !wall.contains(c, ON_WALL_TOL) {
        return Err(Error::NotOnWall {
            wall: wall.id.to_string(),
            a: c.a,
            b: c.b,
        });
    }
    let n = wall.normal(c);
    let transverse = dir[0] * n[0] + dir[1] * n[1];
    if transverse.abs() <= MIN_TRANSVERSALITY {
        return Err(Error::DirectionTangent(transverse));
    }
    for other in WallId::ALL.iter().filter(|&&w| w != wall.id) {
        let d = other.wall().distance(c);
        if d < INTERSECTION_MARGIN {
            return Err(Error::NearIntersection {
                other: other.to_string(),
                distance: d,
            });
        }
    }
    Ok(())
}

/// Local sign at one orbit point `p`: the Jacobian orientation of the
/// linearized two-level model, times the global Chern orientation.
pub fn local_sign_at(wall: &Wall, c: ControlPoint, direction: [f64; 2], p: &SpherePoint) -> Result<(i32, f64)> {
    let dir = unit(direction)?;
    let lt = linearize(p, c, wall.band_pair(c), dir)?;
    Ok((ORIENTATION as i32 * lt.orientation(), lt.jacobian_det()))
}

/// Delta-Chern for crossing `wall` at `c` along `direction`: the local
/// contribution at one orbit point times the orbit size.
pub fn delta_chern(wall: &Wall, c: ControlPoint, direction: [f64; 2]) -> Result<WallCrossing> {
    let dir = unit(direction)?;
    check_crossing(wall, c, dir)?;
    let pair = wall.band_pair(c);
    let base = orbit_points(wall.orbit)[0];
    let (s, det) = local_sign_at(wall, c, dir, &base)?;
    let k = wall.orbit_size as i64;
    let mut delta = vec![0i64; 3];
    delta[pair.0] = -(s as i64) * k;
    delta[pair.1] = (s as i64) * k;
    Ok(WallCrossing {
        wall: wall.id,
        orbit: wall.orbit,
        point: c,
        direction: dir,
        band_pair: pair,
        delta,
        local_sign: s,
        orbit_size: wall.orbit_size,
        jacobian_det: det,
    })
}

/// Direct Chern numbers on both sides of a crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedCheck {
    pub before: ChernRecord,
    pub after: ChernRecord,
    pub observed_delta: Vec<i64>,
    pub agrees: bool,
}

pub fn two_sided_check(
    crossing: &WallCrossing,
    offset: f64,
    mesh: usize,
    opts: &ChernOptions,
) -> Result<TwoSidedCheck> {
    let before_c = crossing.point.offset(crossing.direction, -offset);
    let after_c = crossing.point.offset(crossing.direction, offset);
    let before = refine_until_stable(&TripletModel::new(before_c), mesh, opts)?;
    let after = refine_until_stable(&TripletModel::new(after_c), mesh, opts)?;
    let observed_delta: Vec<i64> = after.chern.iter().zip(&before.chern).map(|(x, y)| x - y).collect();
    let agrees = observed_delta == crossing.delta;
    Ok(TwoSidedCheck {
        before,
        after,
        observed_delta,
        agrees,
    })
}

/// Rectangle of the control plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartBox {
    pub a_min: f64,
    pub a_max: f64,
    pub b_min: f64,
    pub b_max: f64,
}

impl Default for ChartBox {
    fn default() -> Self {
        ChartBox {
            a_min: -1.2,
            a_max: 1.2,
            b_min: -2.5,
            b_max: 2.5,
        }
    }
}

impl ChartBox {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.a_min, self.a_max, self.b_min, self.b_max]
            .iter()
            .all(|v| v.is_finite())
            && self.a_min < self.a_max
            && self.b_min < self.b_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("ill-ordered box {self:?}")))
        }
    }

    pub fn contains(&self, c: ControlPoint) -> bool {
        (self.a_min..=self.a_max).contains(&c.a) && (self.b_min..=self.b_max).contains(&c.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartOptions {
    pub step: f64,
    pub mesh: usize,
    /// Minimum wall distance of a domain representative.
    pub margin: f64,
    pub chern: ChernOptions,
}

impl Default for ChartOptions {
    fn default() -> Self {
        ChartOptions {
            step: 0.01,
            mesh: crate::chern::DEFAULT_MESH,
            margin: TWO_SIDED_OFFSET,
            chern: ChernOptions::default(),
        }
    }
}

/// Chern triple of the domain containing `(0, 0)`.
pub const ANCHOR_TRIPLE: [i64; 3] = [-2, 0, 2];

/// Side of each wall, in [`WallId::ALL`] order.
pub fn signature(c: ControlPoint) -> Vec<i8> {
    WallId::ALL.iter().map(|w| w.wall().side(c)).collect()
}

pub fn signature_label(sig: &[i8]) -> String {
    sig.iter()
        .map(|&s| match s {
            1 => '+',
            -1 => '-',
            _ => '0',
        })
        .collect()
}

/// Smallest distance from `c` to any wall.
pub fn wall_distance(c: ControlPoint) -> f64 {
    WallId::ALL
        .iter()
        .map(|w| w.wall().distance(c))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub id: usize,
    pub signature: String,
    pub representative: ControlPoint,
    pub wall_distance: f64,
    /// Triple obtained by propagating delta-Cherns from the anchor domain.
    pub chern: Option<Vec<i64>>,
    /// Triple computed directly at the representative.
    pub direct_chern: Vec<i64>,
    pub min_gap: f64,
    pub mesh_size: usize,
}

impl Domain {
    pub fn agrees(&self) -> bool {
        self.chern.as_deref() == Some(self.direct_chern.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adjacency {
    pub from: usize,
    pub to: usize,
    pub wall: WallId,
    /// Crossing from `from` into `to`.
    pub crossing: Option<WallCrossing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainChart {
    pub bbox: ChartBox,
    pub step: f64,
    pub anchor: usize,
    pub domains: Vec<Domain>,
    pub adjacencies: Vec<Adjacency>,
}

impl DomainChart {
    /// Every domain's propagated triple matches its direct computation.
    pub fn is_consistent(&self) -> bool {
        self.domains.iter().all(Domain::agrees) && self.adjacencies.iter().all(|adj| adj.crossing.is_some())
    }

    pub fn domain_containing(&self, c: ControlPoint) -> Option<&Domain> {
        let sig = signature_label(&signature(c));
        self.domains.iter().find(|d| d.signature == sig)
    }
}

/// Enumerates the iso-Chern domains in `bbox` by wall-side signature,
/// propagates Chern triples from the anchor domain across delta-Chern
/// crossings and compares with direct computation at each representative.
pub fn build_domain_chart(bbox: ChartBox, opts: &ChartOptions) -> Result<DomainChart> {
    bbox.validate()?;
    if !(opts.step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {}", opts.step)));
    }
    // Cell centres: keeps nodes off the walls a = +-1/3, b = +-1 for the
    // usual decimal steps, where a node with zero level would hide a crossing.
    let na = (((bbox.a_max - bbox.a_min) / opts.step).round() as usize).max(1);
    let nb = (((bbox.b_max - bbox.b_min) / opts.step).round() as usize).max(1);
    let (da, db) = (
        (bbox.a_max - bbox.a_min) / na as f64,
        (bbox.b_max - bbox.b_min) / nb as f64,
    );
    let node =
        |i: usize, j: usize| ControlPoint::new(bbox.a_min + (i as f64 + 0.5) * da, bbox.b_min + (j as f64 + 0.5) * db);

    let nodes: Vec<(usize, usize)> = (0..na).flat_map(|i| (0..nb).map(move |j| (i, j))).collect();
    let sigs: Vec<Vec<i8>> = nodes.par_iter().map(|&(i, j)| signature(node(i, j))).collect();
    let dists: Vec<f64> = nodes.par_iter().map(|&(i, j)| wall_distance(node(i, j))).collect();

    // Domains keyed by signature; nodes lying exactly on a wall are skipped.
    let mut best: BTreeMap<Vec<i8>, usize> = BTreeMap::new();
    for (k, sig) in sigs.iter().enumerate() {
        if sig.contains(&0) {
            continue;
        }
        let e = best.entry(sig.clone()).or_insert(k);
        if dists[k] > dists[*e] {
            *e = k;
        }
    }
    let keys: Vec<Vec<i8>> = best.keys().cloned().collect();
    for key in &keys {
        let k = best[key];
        if dists[k] < opts.margin {
            return Err(Error::ChartIncomplete {
                signature: signature_label(key),
                margin: opts.margin,
            });
        }
    }
    let index_of = |sig: &Vec<i8>| keys.iter().position(|k| k == sig);

    let direct: Vec<ChernRecord> = keys
        .par_iter()
        .map(|key| {
            let (i, j) = nodes[best[key]];
            refine_until_stable(&TripletModel::new(node(i, j)), opts.mesh, &opts.chern)
        })
        .collect::<Result<Vec<_>>>()?;

    // Grid edges whose ends differ in exactly one wall.
    let mut boundary: BTreeMap<(usize, usize, usize), Vec<(ControlPoint, ControlPoint)>> = BTreeMap::new();
    let flat = |i: usize, j: usize| i * nb + j;
    for i in 0..na {
        for j in 0..nb {
            let k = flat(i, j);
            for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                if ii >= na || jj >= nb {
                    continue;
                }
                let l = flat(ii, jj);
                let (s, t) = (&sigs[k], &sigs[l]);
                if s.contains(&0) || t.contains(&0) {
                    continue;
                }
                let diff: Vec<usize> = (0..s.len()).filter(|&w| s[w] != t[w]).collect();
                if diff.len() != 1 {
                    continue;
                }
                let (Some(x), Some(y)) = (index_of(s), index_of(t)) else {
                    continue;
                };
                let (lo, hi, p, q) = if x < y {
                    (x, y, node(i, j), node(ii, jj))
                } else {
                    (y, x, node(ii, jj), node(i, j))
                };
                boundary.entry((lo, hi, diff[0])).or_default().push((p, q));
            }
        }
    }

    let adjacencies: Vec<Adjacency> = boundary
        .into_par_iter()
        .map(|((from, to, w), edges)| {
            let wall = WallId::ALL[w].wall();
            let crossing = choose_crossing(&wall, &bbox, &edges, &keys[from]);
            Adjacency {
                from,
                to,
                wall: wall.id,
                crossing,
            }
        })
        .collect();

    let anchor_sig = signature(ControlPoint::new(0.0, 0.0));
    let (anchor, anchor_triple) = match index_of(&anchor_sig) {
        Some(i) if bbox.contains(ControlPoint::new(0.0, 0.0)) => (i, ANCHOR_TRIPLE.to_vec()),
        _ => (0, direct[0].chern.clone()),
    };
    let propagated = propagate(keys.len(), anchor, anchor_triple, &adjacencies)?;

    let domains = keys
        .iter()
        .enumerate()
        .map(|(id, key)| {
            let k = best[key];
            let (i, j) = nodes[k];
            Domain {
                id,
                signature: signature_label(key),
                representative: node(i, j),
                wall_distance: dists[k],
                chern: propagated[id].clone(),
                direct_chern: direct[id].chern.clone(),
                min_gap: direct[id].min_gap,
                mesh_size: direct[id].mesh_size,
            }
        })
        .collect();

    Ok(DomainChart {
        bbox,
        step: opts.step,
        anchor,
        domains,
        adjacencies,
    })
}

/// Picks the boundary crossing farthest from the other walls and computes
/// its delta-Chern, falling back to the next candidate on failure.
fn choose_crossing(
    wall: &Wall,
    bbox: &ChartBox,
    edges: &[(ControlPoint, ControlPoint)],
    from_sig: &[i8],
) -> Option<WallCrossing> {
    let mut candidates: Vec<(f64, ControlPoint)> = edges
        .iter()
        .map(|(p, q)| {
            let mid = ControlPoint::new(0.5 * (p.a + q.a), 0.5 * (p.b + q.b));
            let c = wall.project(mid);
            let clearance = WallId::ALL
                .iter()
                .filter(|&&w| w != wall.id)
                .map(|w| w.wall().distance(c))
                .fold(f64::INFINITY, f64::min);
            (clearance, c)
        })
        .filter(|(clearance, c)| *clearance >= INTERSECTION_MARGIN && bbox.contains(*c))
        .collect();
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
    let w = WallId::ALL.iter().position(|&id| id == wall.id)?;
    let from_side = f64::from(from_sig[w]);
    candidates.iter().take(8).find_map(|&(_, c)| {
        let n = wall.normal(c);
        delta_chern(wall, c, [-from_side * n[0], -from_side * n[1]]).ok()
    })
}

fn propagate(n: usize, anchor: usize, triple: Vec<i64>, adjacencies: &[Adjacency]) -> Result<Vec<Option<Vec<i64>>>> {
    let mut out: Vec<Option<Vec<i64>>> = vec![None; n];
    out[anchor] = Some(triple);
    let mut queue = VecDeque::from([anchor]);
    let apply = |t: &[i64], d: &[i64], sign: i64| -> Vec<i64> { t.iter().zip(d).map(|(x, y)| x + sign * y).collect() };
    while let Some(cur) = queue.pop_front() {
        let here = out[cur].clone().expect("queued domains are assigned");
        for adj in adjacencies {
            let Some(crossing) = &adj.crossing else { continue };
            let (next, sign) = if adj.from == cur {
                (adj.to, 1)
            } else if adj.to == cur {
                (adj.from, -1)
            } else {
                continue;
            };
            let t = apply(&here, &crossing.delta, sign);
            match &out[next] {
                None => {
                    out[next] = Some(t);
                    queue.push_back(next);
                }
                Some(prev) if *prev != t => {
                    return Err(Error::PropagationConflict {
                        domain: next,
                        first: prev.clone(),
                        second: t,
                    })
                }
                Some(_) => {}
            }
        }
    }
    Ok(out)
}

/// Points `(a, b)` along each wall inside `bbox`, spaced by `step` in the
/// wall parameter.
pub fn wall_polylines(bbox: &ChartBox, step: f64) -> Vec<(WallId, Vec<ControlPoint>)> {
    WallId::ALL
        .iter()
        .map(|&id| {
            let wall = id.wall();
            let (lo, hi) = match wall.orbit {
                OrbitType::C3 => (bbox.a_min, bbox.a_max),
                _ => (bbox.b_min, bbox.b_max),
            };
            let n = ((hi - lo) / step).floor() as usize;
            let pts = (0..=n)
                .filter_map(|k| wall.point_at(lo + k as f64 * step))
                .filter(|c| bbox.contains(*c))
                .collect();
            (id, pts)
        })
        .collect()
}
