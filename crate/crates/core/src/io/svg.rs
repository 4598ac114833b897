use std::fmt::Write as _;

use crate::diagram::{voronoi_cell_polygon, ClipBox, MatchingDiagram, Square};

const VIEW: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvgOptions {
    /// Draw the grid lines inside the nested squares.
    pub grid: bool,
    /// Draw the Voronoi cells of the sites.
    pub cells: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            grid: true,
            cells: true,
        }
    }
}

struct Frame {
    min_x: f64,
    max_y: f64,
    scale: f64,
    off_x: f64,
    off_y: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        self.off_x + (x - self.min_x) * self.scale
    }

    fn y(&self, y: f64) -> f64 {
        self.off_y + (self.max_y - y) * self.scale
    }
}

fn bounds(d: &MatchingDiagram) -> ClipBox {
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    let mut grow = |x0: f64, y0: f64, x1: f64, y1: f64| {
        lo_x = lo_x.min(x0);
        lo_y = lo_y.min(y0);
        hi_x = hi_x.max(x1);
        hi_y = hi_y.max(y1);
    };
    for (s, t) in d.sites().translations.iter().enumerate() {
        grow(t.dx, t.dy, t.dx, t.dy);
        if d.is_site_refined(s) {
            let sq = d.square(s, d.level_count());
            grow(sq.x, sq.y, sq.x + sq.side, sq.y + sq.side);
        }
    }
    let extent = (hi_x - lo_x).max(hi_y - lo_y);
    let pad = if extent > 0.0 { 0.1 * extent } else { 1.0 };
    ClipBox {
        min_x: lo_x - pad,
        min_y: lo_y - pad,
        max_x: hi_x + pad,
        max_y: hi_y + pad,
    }
}

fn grid_path(out: &mut String, f: &Frame, outer: &Square, inner: Option<&Square>, step: f64) {
    let n = (outer.side / step).round() as i64;
    let mut d = String::new();
    for idx in 1..n {
        let c = idx as f64 * step;
        // vertical line at x = outer.x + c, split around the inner square
        let x = outer.x + c;
        let y0 = outer.y;
        let y1 = outer.y + outer.side;
        match inner {
            Some(h) if x > h.x && x < h.x + h.side => {
                let _ = write!(d, "M{:.3} {:.3}V{:.3}", f.x(x), f.y(y0), f.y(h.y));
                let _ = write!(d, "M{:.3} {:.3}V{:.3}", f.x(x), f.y(h.y + h.side), f.y(y1));
            }
            _ => {
                let _ = write!(d, "M{:.3} {:.3}V{:.3}", f.x(x), f.y(y0), f.y(y1));
            }
        }
        let y = outer.y + c;
        let x0 = outer.x;
        let x1 = outer.x + outer.side;
        match inner {
            Some(h) if y > h.y && y < h.y + h.side => {
                let _ = write!(d, "M{:.3} {:.3}H{:.3}", f.x(x0), f.y(y), f.x(h.x));
                let _ = write!(d, "M{:.3} {:.3}H{:.3}", f.x(h.x + h.side), f.y(y), f.x(x1));
            }
            _ => {
                let _ = write!(d, "M{:.3} {:.3}H{:.3}", f.x(x0), f.y(y), f.x(x1));
            }
        }
    }
    if !d.is_empty() {
        let _ = writeln!(out, r#"<path class="grid" d="{d}"/>"#);
    }
}

/// SVG 1.1 picture of the diagram in a 1000 x 1000 view box: Voronoi cells,
/// nested squares (class `bsquare`), their grids and the sites.
pub fn export_svg(d: &MatchingDiagram, options: &SvgOptions) -> String {
    let b = bounds(d);
    let (w, h) = (b.max_x - b.min_x, b.max_y - b.min_y);
    let scale = VIEW / w.max(h);
    let f = Frame {
        min_x: b.min_x,
        max_y: b.max_y,
        scale,
        off_x: (VIEW - w * scale) / 2.0,
        off_y: (VIEW - h * scale) / 2.0,
    };
    let sites = &d.sites().translations;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{VIEW}" height="{VIEW}" viewBox="0 0 {VIEW} {VIEW}">"#
    );
    let _ = writeln!(
        out,
        "<title>{:?} diagram, eps {}, {} sites</title>",
        d.kind(),
        d.eps(),
        sites.len()
    );
    out.push_str("<style>.cell{fill:#f4f6fb;stroke:#4a5a80;stroke-width:1}.bsquare{fill:none;stroke:#c0392b;stroke-width:1}.grid{fill:none;stroke:#95a5a6;stroke-width:0.3}.site{fill:#1b2631}</style>\n");

    if options.cells {
        out.push_str("<g class=\"cells\">\n");
        for idx in 0..sites.len() {
            let poly = voronoi_cell_polygon(sites, idx, &b).expect("site index in range");
            if poly.is_empty() {
                continue;
            }
            let pts: Vec<String> = poly
                .iter()
                .map(|q| format!("{:.3},{:.3}", f.x(q[0]), f.y(q[1])))
                .collect();
            let _ = writeln!(
                out,
                r#"<polygon class="cell" data-site="{idx}" points="{}"/>"#,
                pts.join(" ")
            );
        }
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"squares\">\n");
    for s in (0..sites.len()).filter(|&s| d.is_site_refined(s)) {
        for level in 0..=d.level_count() {
            let sq = d.square(s, level);
            if options.grid {
                let inner = (level > 0).then(|| d.square(s, level - 1));
                let step = d.cell_square(s, level, 0, 0).side;
                grid_path(&mut out, &f, &sq, inner.as_ref(), step);
            }
            let _ = writeln!(
                out,
                r#"<rect class="bsquare" data-site="{s}" data-level="{level}" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}"/>"#,
                f.x(sq.x),
                f.y(sq.y + sq.side),
                sq.side * scale,
                sq.side * scale
            );
        }
    }
    out.push_str("</g>\n");

    out.push_str("<g class=\"sites\">\n");
    for (idx, t) in sites.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<circle class="site" data-site="{idx}" cx="{:.3}" cy="{:.3}" r="3"/>"#,
            f.x(t.dx),
            f.y(t.dy)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
