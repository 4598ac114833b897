use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TranslationVector;

/// Axis-aligned clipping rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClipBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl ClipBox {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x < max_x && min_y < max_y) || ![min_x, min_y, max_x, max_y].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "degenerate clip box [{min_x}, {max_x}] x [{min_y}, {max_y}]"
            )));
        }
        Ok(Self {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    pub fn area(&self) -> f64 {
        (self.max_x - self.min_x) * (self.max_y - self.min_y)
    }

    fn corners(&self) -> Vec<[f64; 2]> {
        vec![
            [self.min_x, self.min_y],
            [self.max_x, self.min_y],
            [self.max_x, self.max_y],
            [self.min_x, self.max_y],
        ]
    }
}

/// Keeps the part of a convex polygon where `n . x <= c`.
fn clip(poly: &[[f64; 2]], n: [f64; 2], c: f64) -> Vec<[f64; 2]> {
    let side = |q: &[f64; 2]| n[0] * q[0] + n[1] * q[1] - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (idx, cur) in poly.iter().enumerate() {
        let next = &poly[(idx + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(next));
        if sc <= 0.0 {
            out.push(*cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let f = sc / (sc - sn);
            out.push([cur[0] + f * (next[0] - cur[0]), cur[1] + f * (next[1] - cur[1])]);
        }
    }
    out
}

/// Voronoi cell of `sites[index]` clipped to `clip_box`, counter-clockwise.
/// Empty when the cell misses the box.
pub fn voronoi_cell_polygon(
    sites: &[TranslationVector],
    index: usize,
    clip_box: &ClipBox,
) -> Result<Vec<[f64; 2]>> {
    let s = *sites.get(index).ok_or(Error::IndexOutOfRange {
        what: "site",
        index,
        len: sites.len(),
    })?;
    let mut poly = clip_box.corners();
    for (j, o) in sites.iter().enumerate() {
        if j == index || poly.is_empty() {
            continue;
        }
        // |x - s|^2 <= |x - o|^2  <=>  2 x . (o - s) <= |o|^2 - |s|^2
        let n = [2.0 * (o.dx - s.dx), 2.0 * (o.dy - s.dy)];
        let c = o.norm_sq() - s.norm_sq();
        poly = clip(&poly, n, c);
    }
    Ok(poly)
}

/// Shoelace area, positive for counter-clockwise polygons.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let mut twice = 0.0;
    for (idx, p) in poly.iter().enumerate() {
        let q = &poly[(idx + 1) % poly.len()];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    twice / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tv(dx: f64, dy: f64) -> TranslationVector {
        TranslationVector::new(dx, dy)
    }

    #[test]
    fn single_site_is_the_box() {
        let b = ClipBox::new(-1.0, -2.0, 3.0, 4.0).unwrap();
        let poly = voronoi_cell_polygon(&[tv(0.0, 0.0)], 0, &b).unwrap();
        assert_eq!(poly, b.corners());
    }

    #[test]
    fn two_sites_split_at_bisector() {
        let b = ClipBox::new(-1.0, -1.0, 3.0, 1.0).unwrap();
        let poly = voronoi_cell_polygon(&[tv(0.0, 0.0), tv(2.0, 0.0)], 0, &b).unwrap();
        assert_eq!(poly, vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]);
        assert!((polygon_area(&poly) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cells_tile_the_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sites: Vec<TranslationVector> = (0..25)
                .map(|_| tv(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
                .collect();
            let b = ClipBox::new(-1.0, -1.0, 11.0, 11.0).unwrap();
            let total: f64 = (0..sites.len())
                .map(|i| polygon_area(&voronoi_cell_polygon(&sites, i, &b).unwrap()))
                .sum();
            assert!((total - b.area()).abs() <= 1e-6 * b.area());
        }
    }

    #[test]
    fn bad_inputs() {
        assert!(ClipBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        let b = ClipBox::new(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(voronoi_cell_polygon(&[tv(0.0, 0.0)], 1, &b).is_err());
    }
}
