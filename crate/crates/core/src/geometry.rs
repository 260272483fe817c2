//! Points, convex bodies and the ball packing behind the non-adaptive hard family.

use std::f64::consts::PI;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::budget::ChainBudget;
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Lanczos coefficients for g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        return ln_gamma(x + 1.0) - x.ln();
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Volume of the Euclidean unit ball `π^{d/2} / Γ(d/2 + 1)`.
pub fn vol_unit_ball(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(vol_unit_ball_unchecked(d))
}

fn vol_unit_ball_unchecked(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    (h * PI.ln() - ln_gamma(h + 1.0)).exp()
}

/// `vol(B^{d-1}) / vol(B^d)`, with `vol(B^0) = 1`.
pub fn ball_volume_ratio(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    let lower = if d == 1 {
        1.0
    } else {
        vol_unit_ball_unchecked(d - 1)
    };
    Ok(lower / vol_unit_ball_unchecked(d))
}

/// `Γ(z + 1/2) / Γ(z)`.
pub fn gamma_half_ratio(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("gamma_half_ratio needs z > 0, got {z}")));
    }
    Ok((ln_gamma(z + 0.5) - ln_gamma(z)).exp())
}

/// A finite point of `R^d`, `d >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if let Some(v) = coords.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coordinate {v}")));
        }
        Ok(Self(coords))
    }

    pub fn origin(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        Self(vec![0.0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

impl Deref for Point {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.0
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Anything that answers membership queries for a convex body.
pub trait Domain: Sync {
    fn dim(&self) -> usize;
    fn diameter(&self) -> f64;
    fn contains(&self, x: &[f64]) -> bool;
}

/// Counted membership query.
pub fn membership<B: Domain + ?Sized>(
    body: &B,
    x: &[f64],
    budget: &mut ChainBudget,
) -> Result<bool> {
    if x.len() != body.dim() {
        return Err(Error::InvalidArgument(format!(
            "point of dimension {} queried against body of dimension {}",
            x.len(),
            body.dim()
        )));
    }
    budget.membership_calls += 1;
    Ok(body.contains(x))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodyKind {
    /// Closed Euclidean unit ball centered at the origin.
    UnitBall,
    /// `[0, 1]^d`.
    AxisCube,
    /// `[0, 1]`.
    UnitInterval,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexBody {
    dim: usize,
    kind: BodyKind,
}

impl ConvexBody {
    pub fn unit_ball(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self {
            dim: d,
            kind: BodyKind::UnitBall,
        })
    }

    pub fn axis_cube(d: usize) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidDimension(d));
        }
        Ok(Self {
            dim: d,
            kind: BodyKind::AxisCube,
        })
    }

    pub fn unit_interval() -> Self {
        Self {
            dim: 1,
            kind: BodyKind::UnitInterval,
        }
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn volume(&self) -> f64 {
        match self.kind {
            BodyKind::UnitBall => vol_unit_ball_unchecked(self.dim),
            BodyKind::AxisCube | BodyKind::UnitInterval => 1.0,
        }
    }

    pub fn center(&self) -> Point {
        match self.kind {
            BodyKind::UnitBall => Point::origin(self.dim),
            BodyKind::AxisCube | BodyKind::UnitInterval => Point(vec![0.5; self.dim]),
        }
    }

    /// Default chain start: the origin when it lies in the body, else the center.
    pub fn chain_start(&self) -> Point {
        match self.kind {
            BodyKind::UnitBall => Point::origin(self.dim),
            _ => self.center(),
        }
    }

    pub fn uniform_sample(&self, rng: &mut RngStream) -> Point {
        let mut coords = vec![0.0; self.dim];
        self.uniform_sample_into(rng, &mut coords);
        Point(coords)
    }

    pub(crate) fn uniform_sample_into(&self, rng: &mut RngStream, out: &mut [f64]) {
        match self.kind {
            BodyKind::UnitBall => rng.fill_unit_ball(out),
            BodyKind::AxisCube | BodyKind::UnitInterval => {
                for v in out.iter_mut() {
                    *v = rng.uniform();
                }
            }
        }
    }

    /// Draws used by one call of [`ConvexBody::uniform_sample`].
    pub fn draws_per_sample(&self) -> u64 {
        match self.kind {
            BodyKind::UnitBall => self.dim as u64 + 1,
            _ => self.dim as u64,
        }
    }
}

impl Domain for ConvexBody {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diameter(&self) -> f64 {
        match self.kind {
            BodyKind::UnitBall => 2.0,
            BodyKind::AxisCube | BodyKind::UnitInterval => (self.dim as f64).sqrt(),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match self.kind {
            // boundary is inside: closed bodies
            BodyKind::UnitBall => x.iter().map(|v| v * v).sum::<f64>() <= 1.0,
            BodyKind::AxisCube | BodyKind::UnitInterval => {
                x.iter().all(|v| (0.0..=1.0).contains(v))
            }
        }
    }
}

/// A convex body known only through a membership predicate.
pub struct OracleBody<F> {
    dim: usize,
    diameter: f64,
    inside: F,
}

impl<F: Fn(&[f64]) -> bool + Sync> OracleBody<F> {
    pub fn new(dim: usize, diameter: f64, inside: F) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidDimension(dim));
        }
        if !(diameter > 0.0) {
            return Err(Error::InvalidArgument(format!("diameter must be positive, got {diameter}")));
        }
        Ok(Self {
            dim,
            diameter,
            inside,
        })
    }
}

impl<F: Fn(&[f64]) -> bool + Sync> Domain for OracleBody<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn diameter(&self) -> f64 {
        self.diameter
    }

    fn contains(&self, x: &[f64]) -> bool {
        (self.inside)(x)
    }
}

/// Disjoint closed balls `B(y_i, r)` inside the unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    centers: Vec<Point>,
    radius: f64,
}

const PACKING_SLACK: f64 = 1e-12;
const MAX_GRID_POINTS: usize = 20_000_000;

impl Packing {
    /// Validates both packing invariants against the unit ball.
    pub fn new(centers: Vec<Point>, radius: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidPacking("no centers".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidPacking(format!("radius must be positive, got {radius}")));
        }
        let d = centers[0].dim();
        for (i, c) in centers.iter().enumerate() {
            if c.dim() != d {
                return Err(Error::InvalidPacking("centers of mixed dimension".into()));
            }
            if c.norm() > 1.0 - radius + PACKING_SLACK {
                return Err(Error::InvalidPacking(format!(
                    "ball {i} leaves the unit ball: |y| = {} > 1 - r = {}",
                    c.norm(),
                    1.0 - radius
                )));
            }
            for (j, other) in centers.iter().enumerate().take(i) {
                let dist = distance(c, other);
                if dist < 2.0 * radius - PACKING_SLACK {
                    return Err(Error::InvalidPacking(format!(
                        "balls {j} and {i} overlap: distance {dist} < 2r = {}",
                        2.0 * radius
                    )));
                }
            }
        }
        Ok(Self { centers, radius })
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }
}

/// `m` disjoint balls of radius `m^{-1/d} / 2` inside `B^d`.
///
/// Candidates are the points of the cubic lattice of pitch `2r` lying in the
/// ball of radius `1 - r`. They are taken farthest from the origin first,
/// ties broken lexicographically, so the layout is deterministic.
pub fn packing_on_ball(m: usize, d: usize) -> Result<Packing> {
    if d < 1 {
        return Err(Error::InvalidDimension(d));
    }
    if m < 1 {
        return Err(Error::InvalidArgument("packing needs m >= 1".into()));
    }
    let r = 0.5 * (m as f64).powf(-1.0 / d as f64);
    let pitch = 2.0 * r;
    let reach = 1.0 - r;
    let k_max = (reach / pitch + PACKING_SLACK).floor() as i64;
    let side = (2 * k_max + 1) as usize;
    let grid_size = (side as f64).powi(d as i32);
    if grid_size > MAX_GRID_POINTS as f64 {
        return Err(Error::InvalidArgument(format!(
            "lattice with {grid_size} candidates is too large to enumerate"
        )));
    }
    let limit = (reach / pitch) * (reach / pitch) + PACKING_SLACK;

    let mut candidates: Vec<(i64, Vec<i64>)> = Vec::new();
    let mut k = vec![-k_max; d];
    loop {
        let n2: i64 = k.iter().map(|v| v * v).sum();
        if (n2 as f64) <= limit {
            candidates.push((n2, k.clone()));
        }
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == d {
                break;
            }
            if k[axis] < k_max {
                k[axis] += 1;
                break;
            }
            k[axis] = -k_max;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    if candidates.len() < m {
        return Err(Error::PackingFailure {
            requested: m,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    let centers = candidates
        .into_iter()
        .take(m)
        .map(|(_, k)| Point(k.iter().map(|&v| v as f64 * pitch).collect()))
        .collect();
    Packing::new(centers, r)
}
