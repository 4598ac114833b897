//! Minimum-cost k-matchings between a translated copy of `A` and a fixed `B`.
//!
//! Finite exponents go through successive shortest paths on the bipartite
//! flow network (source -> A -> B -> sink, unit capacities) with Dijkstra on
//! reduced costs. The bottleneck case binary-searches the sorted pair
//! lengths with an augmenting-path feasibility test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{lp_mean, CostExponent, Point2, TranslationVector};

/// Upper limit on the number of matchings [`brute_force_oracle`] will enumerate.
pub const ORACLE_LIMIT: u128 = 10_000_000;

/// A set of index pairs `(a, b)` with all `a` distinct and all `b` distinct,
/// kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, usize)>", into = "Vec<(usize, usize)>")]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(mut pairs: Vec<(usize, usize)>) -> Result<Self> {
        pairs.sort_unstable();
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateIndex {
                    what: "A",
                    index: w[0].0,
                });
            }
        }
        let mut bs: Vec<usize> = pairs.iter().map(|&(_, b)| b).collect();
        bs.sort_unstable();
        for w in bs.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateIndex {
                    what: "B",
                    index: w[0],
                });
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Checks that this is a k-matching between sets of sizes `m` and `n`.
    pub fn validate(&self, m: usize, n: usize, k: usize) -> Result<()> {
        if self.pairs.len() != k {
            return Err(Error::InvalidParameter(format!(
                "matching has {} pairs, expected {k}",
                self.pairs.len()
            )));
        }
        for &(a, b) in &self.pairs {
            if a >= m {
                return Err(Error::IndexOutOfRange {
                    what: "A",
                    index: a,
                    len: m,
                });
            }
            if b >= n {
                return Err(Error::IndexOutOfRange {
                    what: "B",
                    index: b,
                    len: n,
                });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<(usize, usize)>> for Matching {
    type Error = Error;
    fn try_from(pairs: Vec<(usize, usize)>) -> Result<Self> {
        Matching::new(pairs)
    }
}

impl From<Matching> for Vec<(usize, usize)> {
    fn from(m: Matching) -> Self {
        m.pairs
    }
}

/// A k-matching together with its cost at the translation it was solved for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchResult {
    pub matching: Matching,
    pub cost: f64,
    /// Whether `cost` is the exact optimum rather than a `(1 + eps)` bound.
    pub exact: bool,
    pub epsilon_used: f64,
}

pub(crate) fn check_problem(a: &[Point2], b: &[Point2], k: usize) -> Result<()> {
    if a.is_empty() {
        return Err(Error::EmptyInput("point set A"));
    }
    if b.is_empty() {
        return Err(Error::EmptyInput("point set B"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let max = a.len().min(b.len());
    if k > max {
        return Err(Error::InfeasibleSize { k, max });
    }
    Ok(())
}

/// Reusable solver for one `(A, B, k, p)`; keeps its scratch buffers between
/// translations.
#[derive(Clone, Debug)]
pub struct StationarySolver<'a> {
    a: &'a [Point2],
    b: &'a [Point2],
    k: usize,
    p: CostExponent,
    lengths: Vec<f64>,
    weights: Vec<f64>,
    flow: FlowScratch,
}

impl<'a> StationarySolver<'a> {
    pub fn new(a: &'a [Point2], b: &'a [Point2], k: usize, p: CostExponent) -> Result<Self> {
        check_problem(a, b, k)?;
        let (m, n) = (a.len(), b.len());
        Ok(Self {
            a,
            b,
            k,
            p,
            lengths: vec![0.0; m * n],
            weights: vec![0.0; m * n],
            flow: FlowScratch::new(m, n),
        })
    }

    fn fill_lengths(&mut self, t: TranslationVector) {
        let n = self.b.len();
        for (i, pa) in self.a.iter().enumerate() {
            let moved = *pa + t;
            for (j, pb) in self.b.iter().enumerate() {
                self.lengths[i * n + j] = (moved - *pb).norm();
            }
        }
    }

    /// Exact optimum at translation `t`.
    pub fn solve(&mut self, t: TranslationVector) -> MatchResult {
        self.fill_lengths(t);
        let (m, n, k) = (self.a.len(), self.b.len(), self.k);
        let pairs = match self.p {
            CostExponent::Infinity => bottleneck_pairs(&self.lengths, m, n, k),
            CostExponent::Finite(p) => {
                let lmax = self.lengths.iter().copied().fold(0.0_f64, f64::max);
                if lmax == 0.0 {
                    self.weights.iter_mut().for_each(|w| *w = 0.0);
                } else if p == 1.0 {
                    for (w, l) in self.weights.iter_mut().zip(&self.lengths) {
                        *w = l / lmax;
                    }
                } else if p == 2.0 {
                    for (w, l) in self.weights.iter_mut().zip(&self.lengths) {
                        let r = l / lmax;
                        *w = r * r;
                    }
                } else {
                    for (w, l) in self.weights.iter_mut().zip(&self.lengths) {
                        *w = (l / lmax).powf(p);
                    }
                }
                self.flow.min_cost_pairs(&self.weights, m, n, k)
            }
        };
        let lengths: Vec<f64> = pairs.iter().map(|&(i, j)| self.lengths[i * n + j]).collect();
        let cost = lp_mean(&lengths, self.p);
        MatchResult {
            matching: Matching::new(pairs).expect("solver produces a matching"),
            cost,
            exact: true,
            epsilon_used: 0.0,
        }
    }

    /// `(1 + eps)`-approximate solve; backed by the exact solver.
    pub fn solve_within(&mut self, t: TranslationVector, eps: f64) -> Result<MatchResult> {
        check_eps(eps)?;
        let mut r = self.solve(t);
        r.epsilon_used = eps;
        Ok(r)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "approximation eps must be finite and >= 0, got {eps}"
        )));
    }
    Ok(())
}

fn check_translation(t: TranslationVector) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::NonFinite("translation"));
    }
    Ok(())
}

/// Minimum-cost k-matching between `A + t` and `B`.
pub fn solve_exact(
    a: &[Point2],
    b: &[Point2],
    k: usize,
    p: CostExponent,
    t: TranslationVector,
) -> Result<MatchResult> {
    check_translation(t)?;
    Ok(StationarySolver::new(a, b, k, p)?.solve(t))
}

/// A k-matching whose cost is within `(1 + eps)` of the optimum at `t`.
pub fn solve_within(
    a: &[Point2],
    b: &[Point2],
    k: usize,
    p: CostExponent,
    t: TranslationVector,
    eps: f64,
) -> Result<MatchResult> {
    check_translation(t)?;
    StationarySolver::new(a, b, k, p)?.solve_within(t, eps)
}

/// Optimal cost at translation `t`.
pub fn optcost(
    a: &[Point2],
    b: &[Point2],
    k: usize,
    p: CostExponent,
    t: TranslationVector,
) -> Result<f64> {
    Ok(solve_exact(a, b, k, p, t)?.cost)
}

#[derive(Clone, Debug)]
struct FlowScratch {
    potential: Vec<f64>,
    dist: Vec<f64>,
    prev: Vec<usize>,
    done: Vec<bool>,
    mate_a: Vec<Option<usize>>,
    mate_b: Vec<Option<usize>>,
}

const NONE: usize = usize::MAX;

impl FlowScratch {
    fn new(m: usize, n: usize) -> Self {
        let v = m + n;
        Self {
            potential: vec![0.0; v],
            dist: vec![0.0; v],
            prev: vec![NONE; v],
            done: vec![false; v],
            mate_a: vec![None; m],
            mate_b: vec![None; n],
        }
    }

    /// Successive shortest paths. Node `i < m` is `A_i`, node `m + j` is `B_j`;
    /// the source and sink are implicit (all their arcs cost 0).
    fn min_cost_pairs(&mut self, w: &[f64], m: usize, n: usize, k: usize) -> Vec<(usize, usize)> {
        let v = m + n;
        self.potential.iter_mut().for_each(|x| *x = 0.0);
        self.mate_a.iter_mut().for_each(|x| *x = None);
        self.mate_b.iter_mut().for_each(|x| *x = None);
        let mut sink_potential = 0.0;
        for _ in 0..k {
            self.dist.iter_mut().for_each(|x| *x = f64::INFINITY);
            self.prev.iter_mut().for_each(|x| *x = NONE);
            self.done.iter_mut().for_each(|x| *x = false);
            for i in 0..m {
                if self.mate_a[i].is_none() {
                    // source arc, source potential 0
                    self.dist[i] = (-self.potential[i]).max(0.0);
                }
            }
            let mut sink_dist = f64::INFINITY;
            let mut sink_prev = NONE;
            loop {
                let mut u = NONE;
                let mut best = f64::INFINITY;
                for x in 0..v {
                    if !self.done[x] && self.dist[x] < best {
                        best = self.dist[x];
                        u = x;
                    }
                }
                if u == NONE || best >= sink_dist {
                    break;
                }
                self.done[u] = true;
                if u < m {
                    let pu = self.potential[u];
                    for j in 0..n {
                        if self.mate_a[u] == Some(j) {
                            continue;
                        }
                        let node = m + j;
                        if self.done[node] {
                            continue;
                        }
                        let rc = (w[u * n + j] + pu - self.potential[node]).max(0.0);
                        let cand = best + rc;
                        if cand < self.dist[node] {
                            self.dist[node] = cand;
                            self.prev[node] = u;
                        }
                    }
                } else {
                    let j = u - m;
                    match self.mate_b[j] {
                        Some(i) => {
                            if !self.done[i] {
                                let rc = (-w[i * n + j] + self.potential[u] - self.potential[i])
                                    .max(0.0);
                                let cand = best + rc;
                                if cand < self.dist[i] {
                                    self.dist[i] = cand;
                                    self.prev[i] = u;
                                }
                            }
                        }
                        None => {
                            let rc = (self.potential[u] - sink_potential).max(0.0);
                            let cand = best + rc;
                            if cand < sink_dist {
                                sink_dist = cand;
                                sink_prev = u;
                            }
                        }
                    }
                }
            }
            debug_assert!(sink_prev != NONE, "k <= min(m, n) guarantees a path");
            for x in 0..v {
                self.potential[x] += self.dist[x].min(sink_dist);
            }
            sink_potential += sink_dist;
            // augment: walk back from the free B node
            let mut node = sink_prev;
            while node != NONE {
                let j = node - m;
                let i = self.prev[node];
                self.mate_b[j] = Some(i);
                let old = self.mate_a[i].replace(j);
                // the predecessor of A_i is its old mate B (or the source)
                node = if self.prev[i] == NONE { NONE } else { self.prev[i] };
                debug_assert!(node == NONE || old == Some(node - m));
            }
        }
        let mut pairs: Vec<(usize, usize)> = self
            .mate_a
            .iter()
            .enumerate()
            .filter_map(|(i, mj)| mj.map(|j| (i, j)))
            .collect();
        pairs.sort_unstable();
        pairs
    }
}

/// Maximum matching restricted to pairs of length `<= threshold`, grown by
/// augmenting paths in index order.
fn threshold_matching(lengths: &[f64], m: usize, n: usize, threshold: f64) -> Vec<Option<usize>> {
    fn augment(
        i: usize,
        lengths: &[f64],
        n: usize,
        threshold: f64,
        seen: &mut [bool],
        mate_b: &mut [Option<usize>],
    ) -> bool {
        for j in 0..n {
            if lengths[i * n + j] > threshold || seen[j] {
                continue;
            }
            seen[j] = true;
            let free = match mate_b[j] {
                None => true,
                Some(i2) => augment(i2, lengths, n, threshold, seen, mate_b),
            };
            if free {
                mate_b[j] = Some(i);
                return true;
            }
        }
        false
    }
    let mut mate_b = vec![None; n];
    let mut seen = vec![false; n];
    for i in 0..m {
        seen.iter_mut().for_each(|s| *s = false);
        augment(i, lengths, n, threshold, &mut seen, &mut mate_b);
    }
    mate_b
}

fn bottleneck_pairs(lengths: &[f64], m: usize, n: usize, k: usize) -> Vec<(usize, usize)> {
    let mut sorted = lengths.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let size = |thr: f64| {
        threshold_matching(lengths, m, n, thr)
            .iter()
            .filter(|x| x.is_some())
            .count()
    };
    let (mut lo, mut hi) = (0usize, sorted.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if size(sorted[mid]) >= k {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let mate_b = threshold_matching(lengths, m, n, sorted[lo]);
    let mut pairs: Vec<(usize, usize)> = mate_b
        .iter()
        .enumerate()
        .filter_map(|(j, mi)| mi.map(|i| (i, j)))
        .collect();
    pairs.sort_unstable();
    pairs.truncate(k);
    pairs
}

fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of k-matchings between sets of sizes `m` and `n`: `C(m,k) C(n,k) k!`.
pub fn matching_count(m: usize, n: usize, k: usize) -> u128 {
    let mut perms: u128 = 1;
    for i in 0..k {
        perms = perms.saturating_mul((n.saturating_sub(i)) as u128);
    }
    binomial(m, k).saturating_mul(perms)
}

/// Calls `visit` on every k-matching in lexicographic order of the sorted pair
/// list.
pub fn enumerate_matchings(m: usize, n: usize, k: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    #[allow(clippy::type_complexity)]
    fn rec(
        start_a: usize,
        m: usize,
        n: usize,
        k: usize,
        used_b: &mut [bool],
        cur: &mut Vec<(usize, usize)>,
        visit: &mut dyn FnMut(&[(usize, usize)]),
    ) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        let remaining = k - cur.len();
        for i in start_a..=m - remaining {
            for j in 0..n {
                if used_b[j] {
                    continue;
                }
                used_b[j] = true;
                cur.push((i, j));
                rec(i + 1, m, n, k, used_b, cur, visit);
                cur.pop();
                used_b[j] = false;
            }
        }
    }
    if k > m.min(n) {
        return;
    }
    let mut used_b = vec![false; n];
    let mut cur = Vec::with_capacity(k);
    rec(0, m, n, k, &mut used_b, &mut cur, &mut visit);
}

/// Exhaustive minimum over all k-matchings; ties keep the lexicographically
/// first pair list.
pub fn brute_force_oracle(
    a: &[Point2],
    b: &[Point2],
    k: usize,
    p: CostExponent,
    t: TranslationVector,
) -> Result<MatchResult> {
    check_problem(a, b, k)?;
    check_translation(t)?;
    let (m, n) = (a.len(), b.len());
    let count = matching_count(m, n, k);
    if count > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            count,
            limit: ORACLE_LIMIT,
        });
    }
    let lengths: Vec<f64> = a
        .iter()
        .flat_map(|pa| b.iter().map(move |pb| ((*pa + t) - *pb).norm()))
        .collect();
    let mut best: Option<(f64, Vec<(usize, usize)>)> = None;
    let mut buf = Vec::with_capacity(k);
    enumerate_matchings(m, n, k, |pairs| {
        buf.clear();
        buf.extend(pairs.iter().map(|&(i, j)| lengths[i * n + j]));
        let c = lp_mean(&buf, p);
        if best.as_ref().is_none_or(|(bc, _)| c < *bc) {
            best = Some((c, pairs.to_vec()));
        }
    });
    let (cost, pairs) = best.expect("k <= min(m, n)");
    Ok(MatchResult {
        matching: Matching::new(pairs)?,
        cost,
        exact: true,
        epsilon_used: 0.0,
    })
}
