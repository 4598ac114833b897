use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MatchingDiagram;
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::TranslationVector;
use crate::instance::Instance;

/// Below this optimum a sample only checks that the face matching is also zero.
const ZERO_OPT: f64 = 1e-12;
const ZERO_COST: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerifyReport {
    /// Largest `cost(M_face, t) / optcost(t)` seen.
    pub max_ratio: f64,
    pub samples: usize,
    pub worst_query: TranslationVector,
    /// Samples with a zero optimum, left out of the ratio.
    pub zero_optimum: usize,
    /// Samples where the face matching beat the exact optimum.
    pub sandwich_violations: usize,
}

/// Deterministic sample mixture: uniform over the padded site bounding box,
/// points near sites at the scale of their squares, and points just off
/// square boundaries (or bisectors for unrefined diagrams).
fn sample_queries(d: &MatchingDiagram, count: usize, seed: u64) -> Vec<TranslationVector> {
    let sites = &d.sites().translations;
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for s in sites {
        lo_x = lo_x.min(s.dx);
        lo_y = lo_y.min(s.dy);
        hi_x = hi_x.max(s.dx);
        hi_y = hi_y.max(s.dy);
    }
    let extent = (hi_x - lo_x).max(hi_y - lo_y);
    let refined: Vec<usize> = (0..sites.len()).filter(|&s| d.is_site_refined(s)).collect();
    let outer = refined
        .iter()
        .map(|&s| d.square_side(s, 1))
        .fold(0.0, f64::max);
    let mut margin = 0.25 * extent + outer;
    if margin <= 0.0 {
        margin = 1.0;
    }
    let fallback = if extent > 0.0 { 0.05 * extent } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let t = match idx % 3 {
            0 => TranslationVector::new(
                rng.gen_range(lo_x - margin..=hi_x + margin),
                rng.gen_range(lo_y - margin..=hi_y + margin),
            ),
            1 => {
                let s = rng.gen_range(0..sites.len());
                let r = if d.is_site_refined(s) {
                    let level = rng.gen_range(0..=d.level_count() + 1);
                    d.square_side(s, level) / 2.0
                } else {
                    fallback
                };
                sites[s] + TranslationVector::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
            }
            _ if !refined.is_empty() => {
                let s = refined[rng.gen_range(0..refined.len())];
                let level = rng.gen_range(0..=d.level_count());
                let sq = d.square(s, level);
                let along = rng.gen_range(0.0..=sq.side);
                let jitter = sq.side * 1e-3 * rng.gen_range(-1.0..=1.0);
                match rng.gen_range(0..4) {
                    0 => TranslationVector::new(sq.x + along, sq.y + jitter),
                    1 => TranslationVector::new(sq.x + sq.side + jitter, sq.y + along),
                    2 => TranslationVector::new(sq.x + along, sq.y + sq.side + jitter),
                    _ => TranslationVector::new(sq.x + jitter, sq.y + along),
                }
            }
            _ if sites.len() > 1 => {
                let s = rng.gen_range(0..sites.len());
                let mut o = rng.gen_range(0..sites.len() - 1);
                if o >= s {
                    o += 1;
                }
                let half = (sites[o] - sites[s]) * 0.5;
                let normal = TranslationVector::new(-half.dy, half.dx);
                let center = sites[s] + half;
                center + normal * rng.gen_range(-2.0..=2.0) + half * (1e-3 * rng.gen_range(-1.0..=1.0))
            }
            _ => sites[0] + TranslationVector::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)),
        };
        out.push(t);
    }
    out
}

/// Samples `sample_count` translations and reports the worst ratio of the
/// diagram's answer to the exact optimum.
pub fn verify_diagram(
    diagram: &MatchingDiagram,
    inst: &Instance,
    sample_count: usize,
    seed: u64,
) -> Result<VerifyReport> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    diagram.check_instance(inst)?;
    let queries = sample_queries(diagram, sample_count, seed);
    let rows = exec::map_init(&queries, || inst.solver(), |solver, t| {
        let answer = diagram.query_unchecked(inst, *t).map(|a| a.cost);
        (answer, solver.solve(*t).cost)
    });
    let mut report = VerifyReport {
        max_ratio: 0.0,
        samples: sample_count,
        worst_query: queries[0],
        zero_optimum: 0,
        sandwich_violations: 0,
    };
    for (t, (answer, opt)) in queries.iter().zip(rows) {
        let cost = answer?;
        if cost < opt - ZERO_COST * (1.0 + opt) {
            report.sandwich_violations += 1;
        }
        let ratio = if opt < ZERO_OPT {
            report.zero_optimum += 1;
            if cost < ZERO_COST {
                continue;
            }
            f64::INFINITY
        } else {
            cost / opt
        };
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_query = *t;
        }
    }
    Ok(report)
}
