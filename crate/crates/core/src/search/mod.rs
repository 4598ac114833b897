//! Searches over the translation plane for an approximately optimal
//! translation and k-matching.

mod bounds;
mod candidates;

use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use bounds::{close_pair_count_bound, success_probability_bound};
pub use candidates::{
    build_cluster_centers, build_point_to_point_set, cluster_point_to_point_set, CandidateKind,
    CandidateSet, ClusterStep, Clustering,
};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{grid_vertices_covering_disk, CostExponent, Disk, TranslationVector};
use crate::instance::Instance;
use crate::stationary::{MatchResult, Matching};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Every point-to-point translation.
    Exhaustive,
    /// Epsilon-grids around every point-to-point translation.
    Grid,
    /// Point-to-point translations of randomly drawn points of `A`.
    Random,
    /// Cluster centers of the point-to-point set, then epsilon-grids around them.
    Cluster,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SearchResult {
    pub translation: TranslationVector,
    pub matching: Matching,
    pub cost: f64,
    pub algorithm: Algorithm,
    pub candidates_evaluated: usize,
    /// Claimed bound on `cost / optcost(t*)`.
    pub guarantee_factor: f64,
}

/// Best `(translation, result)` so far under the deterministic order: lower
/// cost first, then the lexicographically smaller translation.
#[derive(Clone, Debug)]
pub(crate) struct Best {
    pub translation: TranslationVector,
    pub result: MatchResult,
}

impl Best {
    fn cmp_key(&self, other: &Best) -> Ordering {
        self.result
            .cost
            .total_cmp(&other.result.cost)
            .then_with(|| self.translation.lex_cmp(&other.translation))
    }

    pub(crate) fn merge(current: Option<Best>, cand: Option<Best>) -> Option<Best> {
        match (current, cand) {
            (Some(x), Some(y)) => Some(if y.cmp_key(&x) == Ordering::Less { y } else { x }),
            (x, None) => x,
            (None, y) => y,
        }
    }
}

/// Solves at every candidate and keeps the best under the deterministic order.
pub(crate) fn evaluate_candidates(
    inst: &Instance,
    candidates: &[TranslationVector],
    eps: f64,
) -> Option<Best> {
    let results = exec::map_init(candidates, || inst.solver(), |solver, t| {
        let mut r = solver.solve(*t);
        r.epsilon_used = eps;
        r
    });
    candidates
        .iter()
        .zip(results)
        .fold(None, |best, (t, result)| {
            Best::merge(
                best,
                Some(Best {
                    translation: *t,
                    result,
                }),
            )
        })
}

fn finish(best: Best, algorithm: Algorithm, evaluated: usize, guarantee: f64) -> SearchResult {
    SearchResult {
        translation: best.translation,
        matching: best.result.matching,
        cost: best.result.cost,
        algorithm,
        candidates_evaluated: evaluated,
        guarantee_factor: guarantee,
    }
}

fn check_unit_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    Ok(())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} = {x} must be finite and >= 0")));
    }
    Ok(())
}

/// Best solve over the point-to-point translations; within `2(1 + delta)` of
/// the optimum (`sqrt(2)(1 + delta)` for `p = 2`).
pub fn const_factor_search(inst: &Instance, delta: f64) -> Result<SearchResult> {
    check_nonneg("delta", delta)?;
    let t_set = build_point_to_point_set(&inst.a, &inst.b)?;
    let best = evaluate_candidates(inst, &t_set.translations, delta).expect("T is nonempty");
    let base = match inst.p {
        CostExponent::Finite(2.0) => SQRT_2,
        _ => 2.0,
    };
    Ok(finish(best, Algorithm::Exhaustive, t_set.len(), base * (1.0 + delta)))
}

/// `(1 + eps)`-approximation: a 3-approximation `v` fixes `r0 = 2v`, then a
/// grid of side `eps sqrt(2) r0 / 18` tiles the disk of radius `r0` around
/// every point-to-point translation.
pub fn eps_optimum_search(inst: &Instance, eps: f64) -> Result<SearchResult> {
    check_unit_eps(eps)?;
    let base = const_factor_search(inst, 0.5)?;
    let mut evaluated = base.candidates_evaluated;
    if base.cost == 0.0 {
        return Ok(SearchResult {
            algorithm: Algorithm::Grid,
            guarantee_factor: 1.0 + eps,
            ..base
        });
    }
    let t_set = build_point_to_point_set(&inst.a, &inst.b)?;
    let r0 = 2.0 * base.cost;
    let side = eps * SQRT_2 * r0 / 18.0;
    let mut best = Some(Best {
        translation: base.translation,
        result: MatchResult {
            matching: base.matching,
            cost: base.cost,
            exact: true,
            epsilon_used: 0.5,
        },
    });
    for &t0 in &t_set.translations {
        let vertices = grid_vertices_covering_disk(&Disk::new(t0, r0)?, side)?;
        evaluated += vertices.len();
        best = Best::merge(best, evaluate_candidates(inst, &vertices, eps / 2.0));
    }
    Ok(finish(best.unwrap(), Algorithm::Grid, evaluated, 1.0 + eps))
}

/// `s` rounds of: draw `a0` from `A` with a ChaCha8 generator seeded by `seed`
/// (`gen_range(0..m)`), then solve at every `b - a0`. Within `(2 + eps)` of the
/// optimum with probability at least [`success_probability_bound`].
pub fn random_sample_search(
    inst: &Instance,
    eps: f64,
    s: usize,
    seed: u64,
) -> Result<SearchResult> {
    check_unit_eps(eps)?;
    if s == 0 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = None;
    let mut evaluated = 0;
    for _ in 0..s {
        let a0 = inst.a[rng.gen_range(0..inst.m())];
        let candidates: Vec<TranslationVector> = inst.b.iter().map(|pb| *pb - a0).collect();
        evaluated += candidates.len();
        best = Best::merge(best, evaluate_candidates(inst, &candidates, eps / 4.0));
    }
    Ok(finish(best.unwrap(), Algorithm::Random, evaluated, 2.0 + eps))
}

/// One grid refinement pass of [`disk_eating_search`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefinementPass {
    /// Target accuracy of the pass.
    pub eps: f64,
    /// Radius of the disk tiled around each cluster center.
    pub radius: f64,
    pub side: f64,
    pub vertices: usize,
    /// Best cost after the pass.
    pub best_cost: f64,
}

#[derive(Clone, Debug)]
pub struct DiskEatingReport {
    pub result: SearchResult,
    pub centers: CandidateSet,
    /// Best cost over the cluster centers alone.
    pub center_cost: f64,
    pub passes: Vec<RefinementPass>,
}

/// Deterministic `(1 + eps)`-approximation over the cluster centers `X`.
///
/// Let `c = 3 * 2^(1/p)`. The optimum `t*` lies within `c * opt` of its nearest
/// center, so the best center value `v` satisfies `opt <= v <= (1 + c) opt`.
/// Each pass tiles disks of radius `c * upper` around every center with a grid
/// fine enough that some vertex lies within `e * lower` of `t*`, where
/// `[lower, upper]` brackets `opt`. When `eps < 1` and the bracket is wider
/// than 2, a pass with `e = 1` first narrows it. The stationary solves are
/// exact; `delta` is only recorded as the accuracy asked of the center solves.
pub fn disk_eating_search_detailed(
    inst: &Instance,
    eps: f64,
    delta: f64,
) -> Result<DiskEatingReport> {
    check_unit_eps(eps)?;
    check_nonneg("delta", delta)?;
    let t_set = build_point_to_point_set(&inst.a, &inst.b)?;
    let centers = build_cluster_centers(&t_set, inst.k)?;
    let mut best = evaluate_candidates(inst, &centers.translations, delta);
    let mut evaluated = centers.len();
    let center_cost = best.as_ref().unwrap().result.cost;
    let mut passes = Vec::new();
    if center_cost > 0.0 {
        let c = 3.0 * inst.p.two_root();
        let mut upper = center_cost;
        let mut lower = center_cost / (1.0 + c);
        let mut schedule = Vec::new();
        if eps < 1.0 && upper > 2.0 * lower {
            schedule.push(1.0);
        }
        schedule.push(eps);
        for e in schedule {
            let radius = c * upper;
            let side = SQRT_2 * e * lower;
            let mut vertices = 0;
            for &xi in &centers.translations {
                let verts = grid_vertices_covering_disk(&Disk::new(xi, radius)?, side)?;
                vertices += verts.len();
                best = Best::merge(best, evaluate_candidates(inst, &verts, e / 2.0));
            }
            evaluated += vertices;
            let found = best.as_ref().unwrap().result.cost;
            upper = upper.min(found);
            lower = lower.max(found / (1.0 + e));
            passes.push(RefinementPass {
                eps: e,
                radius,
                side,
                vertices,
                best_cost: found,
            });
            if found == 0.0 {
                break;
            }
        }
    }
    Ok(DiskEatingReport {
        result: finish(best.unwrap(), Algorithm::Cluster, evaluated, 1.0 + eps),
        centers,
        center_cost,
        passes,
    })
}

/// Deterministic `(1 + eps)`-approximation from the disk-eating cluster centers.
pub fn disk_eating_search(inst: &Instance, eps: f64, delta: f64) -> Result<SearchResult> {
    Ok(disk_eating_search_detailed(inst, eps, delta)?.result)
}
