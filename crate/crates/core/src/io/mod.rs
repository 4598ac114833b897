//! Instance files, instance generators and SVG export.
//!
//! Text format: a header line `m n k p` (`p` a decimal or `inf`), then `m`
//! lines `x y` for A and `n` lines `x y` for B. Lines starting with `#` are
//! comments; `# name: <name>` names the instance. Input whose first
//! non-blank character is `{` is read as JSON instead.

mod svg;

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use svg::{export_svg, SvgOptions};

use crate::error::{Error, ParseErrorKind, Result};
use crate::geometry::{CostExponent, Point2};
use crate::instance::Instance;

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceFile {
    pub name: Option<String>,
    pub instance: Instance,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct JsonInstance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    a: Vec<Point2>,
    b: Vec<Point2>,
    k: usize,
    p: CostExponent,
}

fn err(line: usize, kind: ParseErrorKind) -> Error {
    Error::Parse { line, kind }
}

fn parse_count(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| err(line, ParseErrorKind::NonNumeric(tok.to_string())))
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| err(line, ParseErrorKind::NonNumeric(tok.to_string())))?;
    if !v.is_finite() {
        return Err(err(line, ParseErrorKind::NonFinite));
    }
    Ok(v)
}

fn parse_json(text: &str) -> Result<InstanceFile> {
    let doc: JsonInstance = serde_json::from_str(text)
        .map_err(|e| err(e.line(), ParseErrorKind::Json(e.to_string())))?;
    let max = doc.a.len().min(doc.b.len());
    if doc.k == 0 || doc.k > max {
        return Err(err(1, ParseErrorKind::KOutOfRange { k: doc.k, max }));
    }
    let instance = Instance::new(doc.a, doc.b, doc.k, doc.p)
        .map_err(|e| err(1, ParseErrorKind::Json(e.to_string())))?;
    Ok(InstanceFile {
        name: doc.name,
        instance,
    })
}

/// Reads an instance; every failure names its 1-based line.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    if text.trim_start().starts_with('{') {
        return parse_json(text);
    }
    let mut name = None;
    let mut header: Option<(usize, usize, usize, CostExponent)> = None;
    let mut points: Vec<Point2> = Vec::new();
    let mut last_line = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("name:") {
                name = Some(n.trim().to_string());
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match header {
            None => {
                if tokens.len() != 4 {
                    return Err(err(line, ParseErrorKind::MalformedHeader));
                }
                let m = parse_count(tokens[0], line)?;
                let n = parse_count(tokens[1], line)?;
                let k = parse_count(tokens[2], line)?;
                let p: CostExponent = tokens[3]
                    .parse()
                    .map_err(|_| err(line, ParseErrorKind::BadExponent(tokens[3].to_string())))?;
                let max = m.min(n);
                if k == 0 || k > max {
                    return Err(err(line, ParseErrorKind::KOutOfRange { k, max }));
                }
                header = Some((m, n, k, p));
            }
            Some((m, n, _, _)) => {
                if points.len() == m + n {
                    return Err(err(
                        line,
                        ParseErrorKind::CountMismatch {
                            expected: m + n,
                            found: points.len() + 1,
                        },
                    ));
                }
                if tokens.len() != 2 {
                    return Err(err(line, ParseErrorKind::BadPointLine(tokens.len())));
                }
                points.push(Point2::new(
                    parse_coord(tokens[0], line)?,
                    parse_coord(tokens[1], line)?,
                ));
            }
        }
    }
    let Some((m, n, k, p)) = header else {
        return Err(err(last_line.max(1), ParseErrorKind::MalformedHeader));
    };
    if points.len() != m + n {
        return Err(err(
            last_line + 1,
            ParseErrorKind::CountMismatch {
                expected: m + n,
                found: points.len(),
            },
        ));
    }
    let b = points.split_off(m);
    let instance = Instance::new(points, b, k, p)?;
    Ok(InstanceFile { name, instance })
}

/// Canonical text form: 17 significant digits per coordinate.
pub fn write_instance(file: &InstanceFile) -> String {
    let inst = &file.instance;
    let mut out = String::new();
    if let Some(name) = &file.name {
        let _ = writeln!(out, "# name: {}", name.lines().next().unwrap_or("").trim());
    }
    let _ = writeln!(out, "{} {} {} {}", inst.m(), inst.n(), inst.k, inst.p);
    for q in inst.a.iter().chain(&inst.b) {
        let _ = writeln!(out, "{:.16e} {:.16e}", q.x, q.y);
    }
    out
}

/// Single-line JSON form of an instance.
pub fn write_instance_json(file: &InstanceFile) -> String {
    let doc = JsonInstance {
        name: file.name.clone(),
        a: file.instance.a.clone(),
        b: file.instance.b.clone(),
        k: file.instance.k,
        p: file.instance.p,
    };
    let value = serde_json::to_value(&doc).expect("instance serializes");
    serde_json::to_string(&value).expect("instance serializes")
}

/// Uniform points in `[0, box_side]^2` from a ChaCha8 stream seeded with
/// `seed`; A first, x before y.
pub fn gen_random_instance(
    m: usize,
    n: usize,
    k: usize,
    p: CostExponent,
    box_side: f64,
    seed: u64,
) -> Result<InstanceFile> {
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(Error::InvalidParameter(format!("box side {box_side} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |count: usize| -> Vec<Point2> {
        (0..count)
            .map(|_| {
                let x = rng.gen_range(0.0..=box_side);
                let y = rng.gen_range(0.0..=box_side);
                Point2::new(x, y)
            })
            .collect()
    };
    let a = draw(m);
    let b = draw(n);
    Ok(InstanceFile {
        name: Some(format!("random-{m}x{n}-k{k}-seed{seed}")),
        instance: Instance::new(a, b, k, p)?,
    })
}

fn unit_grid(side: usize) -> Vec<Point2> {
    (0..side)
        .flat_map(|x| (0..side).map(move |y| Point2::new(x as f64, y as f64)))
        .collect()
}

/// A is the `m_side x m_side` unit grid, B the `n_side x n_side` one.
pub fn gen_grid_instance(
    m_side: usize,
    n_side: usize,
    k: usize,
    p: CostExponent,
) -> Result<InstanceFile> {
    if m_side == 0 || m_side > n_side {
        return Err(Error::InvalidParameter(format!(
            "grid sides must satisfy 1 <= {m_side} <= {n_side}"
        )));
    }
    Ok(InstanceFile {
        name: Some(format!("grid-{m_side}-{n_side}")),
        instance: Instance::new(unit_grid(m_side), unit_grid(n_side), k, p)?,
    })
}
