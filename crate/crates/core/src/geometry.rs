//! Planar primitives: points, translations, the L_p matching cost, nearest-site
//! queries, enclosing disks and grid generation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::stationary::Matching;

/// Absolute tolerance for geometric equality tests on coordinates and costs.
pub const GEOM_TOL: f64 = 1e-9;

/// A point of one of the input sets.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (*self - *other).norm()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// A vector of the translation plane.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct TranslationVector {
    pub dx: f64,
    pub dy: f64,
}

impl TranslationVector {
    pub const ZERO: TranslationVector = TranslationVector { dx: 0.0, dy: 0.0 };

    pub const fn new(dx: f64, dy: f64) -> Self {
        Self { dx, dy }
    }

    pub fn is_finite(&self) -> bool {
        self.dx.is_finite() && self.dy.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }

    pub fn dot(&self, other: &TranslationVector) -> f64 {
        self.dx * other.dx + self.dy * other.dy
    }

    pub fn dist(&self, other: &TranslationVector) -> f64 {
        (*self - *other).norm()
    }

    /// Total lexicographic order on `(dx, dy)`.
    pub fn lex_cmp(&self, other: &TranslationVector) -> Ordering {
        self.dx
            .total_cmp(&other.dx)
            .then_with(|| self.dy.total_cmp(&other.dy))
    }
}

impl fmt::Display for TranslationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.dx, self.dy)
    }
}

impl From<[f64; 2]> for TranslationVector {
    fn from([dx, dy]: [f64; 2]) -> Self {
        Self { dx, dy }
    }
}

impl From<TranslationVector> for [f64; 2] {
    fn from(t: TranslationVector) -> Self {
        [t.dx, t.dy]
    }
}

impl Add<TranslationVector> for Point2 {
    type Output = Point2;
    fn add(self, t: TranslationVector) -> Point2 {
        Point2::new(self.x + t.dx, self.y + t.dy)
    }
}

impl Sub for Point2 {
    type Output = TranslationVector;
    fn sub(self, other: Point2) -> TranslationVector {
        TranslationVector::new(self.x - other.x, self.y - other.y)
    }
}

impl Add for TranslationVector {
    type Output = TranslationVector;
    fn add(self, o: TranslationVector) -> TranslationVector {
        TranslationVector::new(self.dx + o.dx, self.dy + o.dy)
    }
}

impl AddAssign for TranslationVector {
    fn add_assign(&mut self, o: TranslationVector) {
        self.dx += o.dx;
        self.dy += o.dy;
    }
}

impl Sub for TranslationVector {
    type Output = TranslationVector;
    fn sub(self, o: TranslationVector) -> TranslationVector {
        TranslationVector::new(self.dx - o.dx, self.dy - o.dy)
    }
}

impl Neg for TranslationVector {
    type Output = TranslationVector;
    fn neg(self) -> TranslationVector {
        TranslationVector::new(-self.dx, -self.dy)
    }
}

impl Mul<f64> for TranslationVector {
    type Output = TranslationVector;
    fn mul(self, s: f64) -> TranslationVector {
        TranslationVector::new(self.dx * s, self.dy * s)
    }
}

/// The exponent `p` of the L_p aggregation, a real `p >= 1` or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostExponent {
    Finite(f64),
    Infinity,
}

impl CostExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(CostExponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(CostExponent::Finite(p))
        } else {
            Err(Error::InvalidParameter(format!(
                "cost exponent must be >= 1 or inf, got {p}"
            )))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CostExponent::Infinity)
    }

    /// `p` as a float (`f64::INFINITY` for the bottleneck case).
    pub fn value(&self) -> f64 {
        match *self {
            CostExponent::Finite(p) => p,
            CostExponent::Infinity => f64::INFINITY,
        }
    }

    /// `2^(1/p)`, equal to 1 for `p = inf`.
    pub fn two_root(&self) -> f64 {
        match *self {
            CostExponent::Finite(p) => 2f64.powf(1.0 / p),
            CostExponent::Infinity => 1.0,
        }
    }
}

impl fmt::Display for CostExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostExponent::Finite(p) => write!(f, "{p}"),
            CostExponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for CostExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(CostExponent::Infinity);
        }
        let p: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad cost exponent {s:?}")))?;
        CostExponent::new(p)
    }
}

impl Serialize for CostExponent {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CostExponent::Finite(p) => serializer.serialize_f64(*p),
            CostExponent::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for CostExponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Num(p) => CostExponent::new(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// A closed disk in the translation plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: TranslationVector,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: TranslationVector, radius: f64) -> Result<Self> {
        if !center.is_finite() || !radius.is_finite() || radius < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "disk needs a finite center and radius >= 0, got {center} / {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    /// Membership with the absolute tolerance, scaled up for large radii.
    pub fn contains(&self, q: &TranslationVector) -> bool {
        self.center.dist(q) <= self.radius + GEOM_TOL * (1.0 + self.radius)
    }
}

/// An axis-aligned square grid: vertex `(i, j)` sits at `origin + (i * side, j * side)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub origin: TranslationVector,
    pub side: f64,
    pub level: u32,
}

impl GridSpec {
    pub fn new(origin: TranslationVector, side: f64, level: u32) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid side must be positive, got {side}"
            )));
        }
        Ok(Self {
            origin,
            side,
            level,
        })
    }

    pub fn vertex(&self, i: i64, j: i64) -> TranslationVector {
        TranslationVector::new(
            self.origin.dx + i as f64 * self.side,
            self.origin.dy + j as f64 * self.side,
        )
    }

    /// Index of the half-open cell `[i, i+1) x [j, j+1)` containing `t`.
    pub fn cell_of(&self, t: &TranslationVector) -> (i64, i64) {
        (
            ((t.dx - self.origin.dx) / self.side).floor() as i64,
            ((t.dy - self.origin.dy) / self.side).floor() as i64,
        )
    }
}

/// Stable L_p mean of nonnegative lengths: `L_max * [(1/k) sum (l/L_max)^p]^(1/p)`,
/// or the maximum for `p = inf`. Returns 0 for an empty slice.
pub fn lp_mean(lengths: &[f64], p: CostExponent) -> f64 {
    let lmax = lengths.iter().copied().fold(0.0_f64, f64::max);
    if lmax == 0.0 || lengths.is_empty() {
        return 0.0;
    }
    match p {
        CostExponent::Infinity => lmax,
        CostExponent::Finite(p) => {
            let k = lengths.len() as f64;
            let sum: f64 = lengths.iter().map(|l| (l / lmax).powf(p)).sum();
            lmax * (sum / k).powf(1.0 / p)
        }
    }
}

/// Cost of `matching` when `a` is translated by `t`: the normalized L_p mean of
/// the matched Euclidean edge lengths.
pub fn cost_evaluate(
    a: &[Point2],
    b: &[Point2],
    matching: &Matching,
    t: TranslationVector,
    p: CostExponent,
) -> Result<f64> {
    if matching.is_empty() {
        return Err(Error::EmptyMatching);
    }
    let mut lengths = Vec::with_capacity(matching.len());
    for &(ai, bi) in matching.pairs() {
        let pa = a.get(ai).ok_or(Error::IndexOutOfRange {
            what: "A",
            index: ai,
            len: a.len(),
        })?;
        let pb = b.get(bi).ok_or(Error::IndexOutOfRange {
            what: "B",
            index: bi,
            len: b.len(),
        })?;
        lengths.push((*pa + t).dist(pb));
    }
    Ok(lp_mean(&lengths, p))
}

/// Index of and distance to the site nearest to `t`.
///
/// Distances within [`GEOM_TOL`] of the minimum count as ties; ties go to the
/// lexicographically smallest site, then to the smallest index.
pub fn nearest_site(t: TranslationVector, sites: &[TranslationVector]) -> Result<(usize, f64)> {
    if sites.is_empty() {
        return Err(Error::EmptyInput("site list"));
    }
    let dmin = sites
        .iter()
        .map(|s| s.dist(&t))
        .fold(f64::INFINITY, f64::min);
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in sites.iter().enumerate() {
        let d = s.dist(&t);
        if d > dmin + GEOM_TOL {
            continue;
        }
        match best {
            Some((j, _)) if sites[j].lex_cmp(s) != Ordering::Greater => {}
            _ => best = Some((i, d)),
        }
    }
    Ok(best.expect("nonempty"))
}

fn diameter_disk(p: TranslationVector, q: TranslationVector) -> Disk {
    let center = (p + q) * 0.5;
    Disk {
        center,
        radius: center.dist(&p).max(center.dist(&q)),
    }
}

fn circumdisk(p: TranslationVector, q: TranslationVector, r: TranslationVector) -> Disk {
    let b = q - p;
    let c = r - p;
    let d = 2.0 * (b.dx * c.dy - b.dy * c.dx);
    if d.abs() <= f64::EPSILON * (b.norm_sq() + c.norm_sq()) {
        // collinear: the widest pair spans the other point
        return [diameter_disk(p, q), diameter_disk(p, r), diameter_disk(q, r)]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .unwrap();
    }
    let ux = (c.dy * b.norm_sq() - b.dy * c.norm_sq()) / d;
    let uy = (b.dx * c.norm_sq() - c.dx * b.norm_sq()) / d;
    let center = p + TranslationVector::new(ux, uy);
    let radius = center.dist(&p).max(center.dist(&q)).max(center.dist(&r));
    Disk { center, radius }
}

/// Smallest disk containing every point of `points` (incremental Welzl scheme).
pub fn min_enclosing_disk(points: &[TranslationVector]) -> Result<Disk> {
    let first = *points
        .first()
        .ok_or(Error::EmptyInput("enclosing-disk point set"))?;
    let mut disk = Disk {
        center: first,
        radius: 0.0,
    };
    for i in 1..points.len() {
        if disk.contains(&points[i]) {
            continue;
        }
        disk = Disk {
            center: points[i],
            radius: 0.0,
        };
        for j in 0..i {
            if disk.contains(&points[j]) {
                continue;
            }
            disk = diameter_disk(points[i], points[j]);
            for l in 0..j {
                if !disk.contains(&points[l]) {
                    disk = circumdisk(points[i], points[j], points[l]);
                }
            }
        }
    }
    Ok(disk)
}

/// Disk centered at a point of `points` that holds at least `h` of them, with
/// the smallest such radius. Its radius is at most twice that of the smallest
/// disk (of any center) holding `h` points.
pub fn approx_smallest_hdisk(points: &[TranslationVector], h: usize) -> Result<Disk> {
    let weights = vec![1usize; points.len()];
    approx_smallest_weighted_hdisk(points, &weights, h)
}

/// Weighted form of [`approx_smallest_hdisk`]: a disk must hold total weight `>= h`.
pub fn approx_smallest_weighted_hdisk(
    points: &[TranslationVector],
    weights: &[usize],
    h: usize,
) -> Result<Disk> {
    if points.len() != weights.len() {
        return Err(Error::InvalidParameter(
            "points and weights differ in length".into(),
        ));
    }
    let total: usize = weights.iter().sum();
    if h == 0 || h > total {
        return Err(Error::InvalidParameter(format!(
            "h = {h} outside [1, {total}]"
        )));
    }
    let mut radii = Vec::with_capacity(points.len());
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(points.len());
    for q in points {
        scratch.clear();
        scratch.extend(points.iter().zip(weights).map(|(o, &w)| (q.dist(o), w)));
        scratch.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut acc = 0;
        let mut radius = 0.0;
        for &(d, w) in &scratch {
            acc += w;
            if acc >= h {
                radius = d;
                break;
            }
        }
        radii.push(radius);
    }
    let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best: Option<usize> = None;
    for (i, &r) in radii.iter().enumerate() {
        if r > rmin + GEOM_TOL {
            continue;
        }
        match best {
            Some(j) if points[j].lex_cmp(&points[i]) != Ordering::Greater => {}
            _ => best = Some(i),
        }
    }
    let i = best.expect("nonempty");
    Ok(Disk {
        center: points[i],
        radius: radii[i],
    })
}

/// Vertices of the grid of side `side` anchored at the disk center whose
/// half-open cells `[i, i+1) x [j, j+1)` meet the closed disk. Every point of
/// the disk lies within `side / sqrt(2)` of a returned vertex. Vertices are
/// returned in `(i, j)` order.
pub fn grid_vertices_covering_disk(disk: &Disk, side: f64) -> Result<Vec<TranslationVector>> {
    if !(side > 0.0 && side.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "grid side must be positive, got {side}"
        )));
    }
    if !(disk.radius >= 0.0 && disk.radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "disk radius must be finite and >= 0, got {}",
            disk.radius
        )));
    }
    let grid = GridSpec::new(disk.center, side, 0)?;
    let reach = (disk.radius / side).ceil() as i64;
    // cell indices span [-reach-1, reach]; vertex indices [-reach-1, reach+1]
    let width = (2 * reach + 3) as usize;
    let mut used = vec![false; width * width];
    let r2 = disk.radius * disk.radius;
    let gap = |i: i64| -> (f64, bool) {
        if i > 0 {
            (i as f64 * side, true)
        } else if i < 0 {
            // the upper edge of the cell is open
            ((-(i + 1)) as f64 * side, false)
        } else {
            (0.0, true)
        }
    };
    for i in -reach - 1..=reach {
        let (gx, ax) = gap(i);
        for j in -reach - 1..=reach {
            let (gy, ay) = gap(j);
            let g2 = gx * gx + gy * gy;
            let meets = g2 < r2 || (g2 == r2 && ax && ay);
            if !meets {
                continue;
            }
            for (vi, vj) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                let idx = (vi + reach + 1) as usize * width + (vj + reach + 1) as usize;
                used[idx] = true;
            }
        }
    }
    let mut out = Vec::new();
    for vi in 0..width {
        for vj in 0..width {
            if used[vi * width + vj] {
                out.push(grid.vertex(vi as i64 - reach - 1, vj as i64 - reach - 1));
            }
        }
    }
    Ok(out)
}
