//! Instance generators and a certified bracket on the optimum over all
//! translations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use geomatch::search::build_point_to_point_set;
use geomatch::{CostExponent, Instance, Point2, TranslationVector};
use rand::Rng;

pub fn random_points(rng: &mut impl Rng, count: usize, side: f64) -> Vec<Point2> {
    (0..count)
        .map(|_| Point2::new(rng.gen_range(0.0..side), rng.gen_range(0.0..side)))
        .collect()
}

pub fn random_instance(rng: &mut impl Rng, m: usize, n: usize, k: usize, p: CostExponent) -> Instance {
    let a = random_points(rng, m, 10.0);
    let b = random_points(rng, n, 10.0);
    Instance::new(a, b, k, p).unwrap()
}

pub fn exponents() -> [CostExponent; 4] {
    [
        CostExponent::Finite(1.0),
        CostExponent::Finite(2.0),
        CostExponent::Finite(3.0),
        CostExponent::Infinity,
    ]
}

/// Bracket `[lower, upper]` on `min_t optcost(t)`.
#[derive(Clone, Copy, Debug)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
    pub evaluations: usize,
}

struct Cell {
    lb: f64,
    center: TranslationVector,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    // reversed so the heap pops the smallest bound
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb)
    }
}

struct Bounder<'a> {
    solver: geomatch::StationarySolver<'a>,
    t_set: Vec<TranslationVector>,
    upper: f64,
    argmin: TranslationVector,
    evaluations: usize,
}

impl Bounder<'_> {
    fn value(&mut self, t: TranslationVector) -> f64 {
        let f = self.solver.solve(t).cost;
        self.evaluations += 1;
        if f < self.upper {
            self.upper = f;
            self.argmin = t;
        }
        f
    }

    fn cell(&mut self, center: TranslationVector, half: f64) -> Cell {
        let f = self.value(center);
        let to_t = self
            .t_set
            .iter()
            .map(|t| t.dist(&center))
            .fold(f64::INFINITY, f64::min);
        let lb = (f.max(to_t) - half * std::f64::consts::SQRT_2).max(0.0);
        Cell { lb, center, half }
    }
}

/// Best-first branch and bound over squares of the translation plane.
///
/// `optcost` is 1-Lipschitz and at least the distance to the nearest
/// point-to-point translation, so a square with center value `f` and half
/// diagonal `r` holds nothing below `max(f, dist(center, T)) - r`. The search
/// stops once every open square is within `rel` of the best value found.
pub fn optimum_interval(inst: &Instance, rel: f64) -> Interval {
    let t_set = build_point_to_point_set(&inst.a, &inst.b).unwrap().translations;
    let mut b = Bounder {
        solver: inst.solver(),
        t_set: t_set.clone(),
        upper: f64::INFINITY,
        argmin: TranslationVector::ZERO,
        evaluations: 0,
    };
    for t in &t_set {
        b.value(*t);
    }
    if b.upper == 0.0 {
        return Interval {
            lower: 0.0,
            upper: 0.0,
            evaluations: b.evaluations,
        };
    }
    // the optimum lies within `upper` of T
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for t in &t_set {
        lo_x = lo_x.min(t.dx - b.upper);
        lo_y = lo_y.min(t.dy - b.upper);
        hi_x = hi_x.max(t.dx + b.upper);
        hi_y = hi_y.max(t.dy + b.upper);
    }
    let half = (hi_x - lo_x).max(hi_y - lo_y) / 2.0;
    let root = TranslationVector::new((lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0);

    let mut heap = BinaryHeap::new();
    heap.push(b.cell(root, half));
    let lower = loop {
        let cell = heap.pop().unwrap();
        if cell.lb >= (1.0 - rel) * b.upper {
            break cell.lb;
        }
        assert!(b.evaluations < 20_000_000, "oracle did not converge");
        let h = cell.half / 2.0;
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)] {
            heap.push(b.cell(cell.center + TranslationVector::new(sx * h, sy * h), h));
        }
    };
    Interval {
        lower: lower.min(b.upper),
        upper: b.upper,
        evaluations: b.evaluations,
    }
}

/// Writes straight to the process stderr so the line shows even when the
/// test harness captures output.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "criterion {criterion:>2}: {verdict} ({detail})");
}
