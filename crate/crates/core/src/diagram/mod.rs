//! Approximate matching diagrams: subdivisions of the translation plane where
//! every face carries one matching that is near-optimal throughout the face.
//!
//! Faces are implicit. A query locates the nearest site and then, for the
//! nested-grid kinds, finds its square and cell by power-of-two arithmetic on
//! coordinates normalized by the site's finest cell side. Face matchings are
//! solved on first use and memoized.

mod envelope;
mod json;
mod polygon;
mod verify;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

pub use envelope::{exact_site_matchings, l2_envelope_query, l2_envelope_value};
pub use polygon::{polygon_area, voronoi_cell_polygon, ClipBox};
pub use verify::{verify_diagram, VerifyReport};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{cost_evaluate, nearest_site, CostExponent, TranslationVector};
use crate::instance::Instance;
use crate::search::{build_cluster_centers, build_point_to_point_set, CandidateSet};
use crate::stationary::Matching;

/// Finest supported `eps = 2^-alpha`.
pub const MAX_ALPHA: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DiagramKind {
    /// Voronoi diagram of the point-to-point translations.
    Voronoi3,
    /// Nested grids inside the Voronoi cells of the point-to-point translations.
    EpsT,
    /// Nested grids inside the Voronoi cells of the cluster centers.
    EpsCluster,
    /// Voronoi diagram of the cluster centers.
    ClusterVoronoi,
}

impl DiagramKind {
    pub fn is_refined(self) -> bool {
        matches!(self, DiagramKind::EpsT | DiagramKind::EpsCluster)
    }

    fn uses_clusters(self) -> bool {
        matches!(self, DiagramKind::EpsCluster | DiagramKind::ClusterVoronoi)
    }
}

/// Where a face sits inside its site's Voronoi cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FaceRegion {
    /// The whole Voronoi cell: unrefined kinds and zero-cost sites.
    WholeCell,
    /// Cell `(i, j)` of the grid over the innermost square.
    Central { i: i64, j: i64 },
    /// Cell `(i, j)` of the grid over the ring between squares `level - 1` and `level`.
    Annulus { level: u32, i: i64, j: i64 },
    /// Everything beyond the outermost square.
    Outer,
}

/// Memo key of a face. `level` is -1 for a whole cell, `0..=u` for grid
/// cells and `u + 1` for the outer region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaceKey {
    pub site: usize,
    pub level: i32,
    pub i: i64,
    pub j: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagramFace {
    pub site_index: usize,
    pub region: FaceRegion,
    pub center_translation: TranslationVector,
    pub matching: Option<Matching>,
}

/// Axis-aligned half-open square `[x, x + side) x [y, y + side)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub x: f64,
    pub y: f64,
    pub side: f64,
}

impl Square {
    pub fn contains(&self, t: &TranslationVector) -> bool {
        t.dx >= self.x && t.dx < self.x + self.side && t.dy >= self.y && t.dy < self.y + self.side
    }

    pub fn center(&self) -> TranslationVector {
        TranslationVector::new(self.x + self.side / 2.0, self.y + self.side / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryAnswer {
    pub face: DiagramFace,
    pub matching: Matching,
    pub cost: f64,
}

type Slot = Arc<OnceLock<Matching>>;

#[derive(Debug, Default)]
struct FaceTable {
    slots: Mutex<HashMap<FaceKey, Slot>>,
}

impl FaceTable {
    fn slot(&self, key: FaceKey) -> Slot {
        self.slots
            .lock()
            .expect("face table poisoned")
            .entry(key)
            .or_default()
            .clone()
    }

    fn get_or_solve(&self, key: FaceKey, solve: impl FnOnce() -> Matching) -> Matching {
        self.slot(key).get_or_init(solve).clone()
    }

    fn insert(&self, key: FaceKey, matching: Matching) {
        let _ = self.slot(key).set(matching);
    }

    fn get(&self, key: &FaceKey) -> Option<Matching> {
        let slots = self.slots.lock().expect("face table poisoned");
        slots.get(key).and_then(|s| s.get().cloned())
    }

    fn snapshot(&self) -> Vec<(FaceKey, Matching)> {
        let slots = self.slots.lock().expect("face table poisoned");
        let mut out: Vec<(FaceKey, Matching)> = slots
            .iter()
            .filter_map(|(key, s)| s.get().map(|m| (*key, m.clone())))
            .collect();
        out.sort_by_key(|(key, _)| *key);
        out
    }
}

/// A built diagram. Immutable apart from the face memo, which may be filled
/// concurrently; every face is solved at most once.
#[derive(Debug)]
pub struct MatchingDiagram {
    instance_hash: String,
    kind: DiagramKind,
    eps: f64,
    alpha: u32,
    delta: f64,
    p: CostExponent,
    k: usize,
    sites: CandidateSet,
    base: Vec<f64>,
    levels: u32,
    scale: f64,
    guarantee: f64,
    faces: FaceTable,
}

impl Clone for MatchingDiagram {
    fn clone(&self) -> Self {
        let faces = FaceTable::default();
        for (key, m) in self.faces.snapshot() {
            faces.insert(key, m);
        }
        Self {
            instance_hash: self.instance_hash.clone(),
            kind: self.kind,
            eps: self.eps,
            alpha: self.alpha,
            delta: self.delta,
            p: self.p,
            k: self.k,
            sites: self.sites.clone(),
            base: self.base.clone(),
            levels: self.levels,
            scale: self.scale,
            guarantee: self.guarantee,
            faces,
        }
    }
}

/// Rounds `eps` in `(0, 1]` down to `2^-alpha`.
pub fn normalize_eps(eps: f64) -> Result<(f64, u32)> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    let mut alpha = 0;
    while pow2(-(alpha as i32)) > eps {
        alpha += 1;
        if alpha > MAX_ALPHA {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} finer than 2^-{MAX_ALPHA}"
            )));
        }
    }
    Ok((pow2(-(alpha as i32)), alpha))
}

fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!("delta = {delta} must be finite and >= 0")));
    }
    Ok(())
}

/// Multiplier on square and cell sides for cluster-center sites.
fn cluster_scale(p: CostExponent) -> f64 {
    (1.0 + 6.0 * p.two_root()) / 3.0
}

fn site_set(inst: &Instance, clusters: bool) -> Result<CandidateSet> {
    let t_set = build_point_to_point_set(&inst.a, &inst.b)?;
    if clusters {
        build_cluster_centers(&t_set, inst.k)
    } else {
        Ok(t_set)
    }
}

/// Voronoi diagram of the point-to-point translations; every face's matching
/// is within `3(1 + delta)` of the optimum throughout the face.
pub fn build_voronoi3_diagram(inst: &Instance, delta: f64) -> Result<MatchingDiagram> {
    build_diagram(inst, DiagramKind::Voronoi3, 1.0, delta)
}

/// Voronoi diagram of the cluster centers; within `1 + 6 * 2^(1/p)`.
pub fn build_cluster_voronoi_diagram(inst: &Instance, delta: f64) -> Result<MatchingDiagram> {
    build_diagram(inst, DiagramKind::ClusterVoronoi, 1.0, delta)
}

/// Nested-grid refinement over point-to-point translations or cluster centers.
pub fn build_eps_diagram(inst: &Instance, eps: f64, kind: DiagramKind) -> Result<MatchingDiagram> {
    if !kind.is_refined() {
        return Err(Error::InvalidParameter(format!("{kind:?} is not a refined kind")));
    }
    build_diagram(inst, kind, eps, 0.0)
}

/// Builds any kind; `eps` is ignored by the Voronoi kinds and `delta` by the
/// refined ones.
pub fn build_diagram(
    inst: &Instance,
    kind: DiagramKind,
    eps: f64,
    delta: f64,
) -> Result<MatchingDiagram> {
    check_delta(delta)?;
    let sites = site_set(inst, kind.uses_clusters())?;
    let mut diagram = MatchingDiagram {
        instance_hash: inst.hash(),
        kind,
        eps: 0.0,
        alpha: 0,
        delta,
        p: inst.p,
        k: inst.k,
        sites,
        base: Vec::new(),
        levels: 0,
        scale: 1.0,
        guarantee: 0.0,
        faces: FaceTable::default(),
    };
    match kind {
        DiagramKind::Voronoi3 => diagram.guarantee = 3.0 * (1.0 + delta),
        DiagramKind::ClusterVoronoi => diagram.guarantee = 1.0 + 6.0 * inst.p.two_root(),
        DiagramKind::EpsT | DiagramKind::EpsCluster => {
            let (eps, alpha) = normalize_eps(eps)?;
            diagram.eps = eps;
            diagram.alpha = alpha;
            diagram.levels = alpha + 2;
            diagram.guarantee = 1.0 + eps;
            if kind == DiagramKind::EpsCluster {
                diagram.scale = cluster_scale(inst.p);
            }
            let solved = exec::map_init(&diagram.sites.translations, || inst.solver(), |s, t| {
                s.solve(*t)
            });
            for (site, r) in solved.into_iter().enumerate() {
                diagram.base.push(r.cost);
                let key = if r.cost == 0.0 {
                    diagram.whole_key(site)
                } else {
                    diagram.outer_key(site)
                };
                diagram.faces.insert(key, r.matching);
            }
        }
    }
    Ok(diagram)
}

impl MatchingDiagram {
    pub fn kind(&self) -> DiagramKind {
        self.kind
    }

    pub fn sites(&self) -> &CandidateSet {
        &self.sites
    }

    /// Normalized `eps` (0 for the Voronoi kinds).
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn p(&self) -> CostExponent {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn instance_hash(&self) -> &str {
        &self.instance_hash
    }

    /// Site optima sizing the nested squares; empty for the Voronoi kinds.
    pub fn per_site_base_value(&self) -> &[f64] {
        &self.base
    }

    /// Number `u` of the outermost square; 0 for the Voronoi kinds.
    pub fn level_count(&self) -> u32 {
        self.levels
    }

    pub fn guarantee_factor(&self) -> f64 {
        self.guarantee
    }

    /// Faces whose matching has been solved so far.
    pub fn memoized_faces(&self) -> Vec<(FaceKey, Matching)> {
        self.faces.snapshot()
    }

    pub fn memoized_matching(&self, key: &FaceKey) -> Option<Matching> {
        self.faces.get(key)
    }

    fn whole_key(&self, site: usize) -> FaceKey {
        FaceKey {
            site,
            level: -1,
            i: 0,
            j: 0,
        }
    }

    fn outer_key(&self, site: usize) -> FaceKey {
        FaceKey {
            site,
            level: self.levels as i32 + 1,
            i: 0,
            j: 0,
        }
    }

    /// Whether the site's cell is split into nested grids.
    pub fn is_site_refined(&self, site: usize) -> bool {
        self.kind.is_refined() && self.base[site] > 0.0
    }

    /// Side of the level-0 grid cells of `site`.
    fn unit(&self, site: usize) -> f64 {
        self.eps * self.scale * self.base[site] / 8.0
    }

    /// Side of square `B_level` around a refined site.
    pub fn square_side(&self, site: usize, level: u32) -> f64 {
        pow2(level as i32) * self.scale * self.base[site]
    }

    /// Square `B_level` centered at the site.
    pub fn square(&self, site: usize, level: u32) -> Square {
        let side = self.square_side(site, level);
        let c = self.sites.translations[site];
        Square {
            x: c.dx - side / 2.0,
            y: c.dy - side / 2.0,
            side,
        }
    }

    /// Half side of `B_level` in level-0 cell units.
    fn half_units(&self, level: u32) -> f64 {
        pow2((level + 2 + self.alpha) as i32)
    }

    fn region_of(&self, key: &FaceKey) -> FaceRegion {
        match key.level {
            -1 => FaceRegion::WholeCell,
            0 => FaceRegion::Central { i: key.i, j: key.j },
            l if l as u32 <= self.levels => FaceRegion::Annulus {
                level: l as u32,
                i: key.i,
                j: key.j,
            },
            _ => FaceRegion::Outer,
        }
    }

    fn key_of(&self, site: usize, region: FaceRegion) -> FaceKey {
        match region {
            FaceRegion::WholeCell => self.whole_key(site),
            FaceRegion::Central { i, j } => FaceKey { site, level: 0, i, j },
            FaceRegion::Annulus { level, i, j } => FaceKey {
                site,
                level: level as i32,
                i,
                j,
            },
            FaceRegion::Outer => self.outer_key(site),
        }
    }

    /// Grid cell of a face in translation-plane coordinates.
    pub fn cell_square(&self, site: usize, level: u32, i: i64, j: i64) -> Square {
        let unit = self.unit(site);
        let c = self.sites.translations[site];
        let step = pow2(level as i32);
        Square {
            x: c.dx + unit * (step * i as f64),
            y: c.dy + unit * (step * j as f64),
            side: unit * step,
        }
    }

    fn center_of(&self, site: usize, region: FaceRegion) -> TranslationVector {
        match region {
            FaceRegion::WholeCell | FaceRegion::Outer => self.sites.translations[site],
            FaceRegion::Central { i, j } => self.cell_square(site, 0, i, j).center(),
            FaceRegion::Annulus { level, i, j } => self.cell_square(site, level, i, j).center(),
        }
    }

    /// Region of `site`'s cell containing `t`, assuming `site` is nearest to `t`.
    pub fn region_in_site(&self, site: usize, t: TranslationVector) -> FaceRegion {
        if !self.is_site_refined(site) {
            return FaceRegion::WholeCell;
        }
        let unit = self.unit(site);
        let c = self.sites.translations[site];
        let x = (t.dx - c.dx) / unit;
        let y = (t.dy - c.dy) / unit;
        for level in 0..=self.levels {
            let h = self.half_units(level);
            if -h <= x && x < h && -h <= y && y < h {
                let step = pow2(level as i32);
                let i = (x / step).floor() as i64;
                let j = (y / step).floor() as i64;
                return if level == 0 {
                    FaceRegion::Central { i, j }
                } else {
                    FaceRegion::Annulus { level, i, j }
                };
            }
        }
        FaceRegion::Outer
    }

    /// Site and region containing `t`.
    pub fn locate(&self, t: TranslationVector) -> Result<(usize, FaceRegion)> {
        if !t.is_finite() {
            return Err(Error::NonFinite("query translation"));
        }
        let (site, _) = nearest_site(t, &self.sites.translations)?;
        Ok((site, self.region_in_site(site, t)))
    }

    /// Every grid cell of a refined site with its square, level by level;
    /// empty for unrefined sites.
    pub fn site_cells(&self, site: usize) -> Vec<(FaceRegion, Square)> {
        let mut out = Vec::new();
        if !self.is_site_refined(site) {
            return out;
        }
        let half = 1i64 << (2 + self.alpha);
        for level in 0..=self.levels {
            // the inner square spans indices [-half / 2, half / 2) at this level
            let inner = if level == 0 { 0 } else { half / 2 };
            for i in -half..half {
                for j in -half..half {
                    if level > 0 && (-inner..inner).contains(&i) && (-inner..inner).contains(&j) {
                        continue;
                    }
                    let region = if level == 0 {
                        FaceRegion::Central { i, j }
                    } else {
                        FaceRegion::Annulus { level, i, j }
                    };
                    out.push((region, self.cell_square(site, level, i, j)));
                }
            }
        }
        out
    }

    /// Face count of one site: every grid cell plus up to four outer faces,
    /// or 1 for an unrefined site.
    pub fn site_face_count(&self, site: usize) -> u64 {
        if !self.is_site_refined(site) {
            return 1;
        }
        let side = 1u64 << (3 + self.alpha);
        let ring = side * side - (side / 2) * (side / 2);
        side * side + self.levels as u64 * ring + 4
    }

    /// Upper bound on the number of faces; clipping to Voronoi cells is not
    /// subtracted.
    pub fn face_count(&self) -> u64 {
        (0..self.sites.len()).map(|s| self.site_face_count(s)).sum()
    }

    fn face_matching(&self, inst: &Instance, key: FaceKey, center: TranslationVector) -> Matching {
        self.faces
            .get_or_solve(key, || inst.solver().solve(center).matching)
    }

    fn check_instance(&self, inst: &Instance) -> Result<()> {
        let found = inst.hash();
        if found != self.instance_hash {
            return Err(Error::InstanceMismatch {
                expected: self.instance_hash.clone(),
                found,
            });
        }
        Ok(())
    }

    /// Face at `t`, its (memoized) matching and that matching's cost at `t`.
    pub fn query(&self, inst: &Instance, t: TranslationVector) -> Result<QueryAnswer> {
        self.check_instance(inst)?;
        self.query_unchecked(inst, t)
    }

    pub(crate) fn query_unchecked(&self, inst: &Instance, t: TranslationVector) -> Result<QueryAnswer> {
        let (site, region) = self.locate(t)?;
        let key = self.key_of(site, region);
        let center = self.center_of(site, region);
        let matching = self.face_matching(inst, key, center);
        let cost = cost_evaluate(&inst.a, &inst.b, &matching, t, inst.p)?;
        Ok(QueryAnswer {
            face: DiagramFace {
                site_index: site,
                region,
                center_translation: center,
                matching: Some(matching.clone()),
            },
            matching,
            cost,
        })
    }

    /// Face of a memo key, with its matching if solved.
    pub fn face(&self, key: &FaceKey) -> DiagramFace {
        let region = self.region_of(key);
        DiagramFace {
            site_index: key.site,
            region,
            center_translation: self.center_of(key.site, region),
            matching: self.faces.get(key),
        }
    }

    pub fn face_key(&self, face: &DiagramFace) -> FaceKey {
        self.key_of(face.site_index, face.region)
    }
}

/// Query `diagram` at `t`; fails if it was built for a different instance.
pub fn query_diagram(
    diagram: &MatchingDiagram,
    inst: &Instance,
    t: TranslationVector,
) -> Result<QueryAnswer> {
    diagram.query(inst, t)
}

pub fn diagram_face_count(diagram: &MatchingDiagram) -> u64 {
    diagram.face_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::stationary::optcost;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_instance(seed: u64, m: usize, n: usize, k: usize, p: CostExponent) -> Instance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = |c| -> Vec<Point2> {
            (0..c)
                .map(|_| Point2::new(rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
                .collect()
        };
        let a = pts(m);
        let b = pts(n);
        Instance::new(a, b, k, p).unwrap()
    }

    fn tv(dx: f64, dy: f64) -> TranslationVector {
        TranslationVector::new(dx, dy)
    }

    #[test]
    fn eps_normalization() {
        assert_eq!(normalize_eps(1.0).unwrap(), (1.0, 0));
        assert_eq!(normalize_eps(0.5).unwrap(), (0.5, 1));
        assert_eq!(normalize_eps(0.3).unwrap(), (0.25, 2));
        assert_eq!(normalize_eps(0.25).unwrap(), (0.25, 2));
        assert!(normalize_eps(0.0).is_err());
        assert!(normalize_eps(1.5).is_err());
    }

    #[test]
    fn levels_follow_eps() {
        let inst = random_instance(1, 3, 4, 2, CostExponent::Finite(1.0));
        let d = build_eps_diagram(&inst, 0.25, DiagramKind::EpsT).unwrap();
        assert_eq!(d.level_count(), 4);
        assert_eq!(d.guarantee_factor(), 1.25);
        let d = build_eps_diagram(&inst, 0.3, DiagramKind::EpsT).unwrap();
        assert_eq!(d.eps(), 0.25);
    }

    #[test]
    fn voronoi3_sites_and_self_queries() {
        let inst = random_instance(2, 4, 5, 3, CostExponent::Finite(2.0));
        let d = build_voronoi3_diagram(&inst, 0.0).unwrap();
        assert_eq!(d.sites().len(), 20);
        assert_eq!(d.face_count(), 20);
        assert!((d.guarantee_factor() - 3.0).abs() < 1e-15);
        for (s, t) in d.sites().translations.clone().into_iter().enumerate() {
            let ans = d.query(&inst, t).unwrap();
            assert_eq!(ans.face.site_index, s);
            assert_eq!(ans.face.region, FaceRegion::WholeCell);
            let opt = optcost(&inst.a, &inst.b, 3, inst.p, t).unwrap();
            assert!((ans.cost - opt).abs() <= 1e-12 * (1.0 + opt));
        }
    }

    #[test]
    fn site_query_hits_its_central_cell() {
        let inst = random_instance(3, 3, 4, 2, CostExponent::Finite(1.0));
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        for s in 0..d.sites().len() {
            let t = d.sites().translations[s];
            let (site, region) = d.locate(t).unwrap();
            assert_eq!(site, s);
            assert_eq!(region, FaceRegion::Central { i: 0, j: 0 });
            assert!(d.cell_square(s, 0, 0, 0).contains(&t));
        }
    }

    #[test]
    fn far_query_lands_in_outer_face() {
        let inst = random_instance(4, 3, 3, 2, CostExponent::Finite(1.0));
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        let s = 0;
        let v0 = d.per_site_base_value()[s];
        let site = d.sites().translations[s];
        // far away the nearest site may be another one
        let t = site + tv(1e6 * v0.max(1.0), 0.0);
        let (near, region) = d.locate(t).unwrap();
        assert!(t.dist(&d.sites().translations[near]) > d.square_side(near, d.level_count()));
        assert_eq!(region, FaceRegion::Outer);
        let ans = d.query(&inst, t).unwrap();
        assert_eq!(ans.face.center_translation, d.sites().translations[near]);
        let site_opt = inst.solver().solve(d.sites().translations[near]).matching;
        assert_eq!(ans.matching, site_opt);
    }

    #[test]
    fn zero_cost_site_is_one_face() {
        let a = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let b = vec![Point2::new(5.0, 5.0), Point2::new(6.0, 5.0), Point2::new(0.0, 9.0)];
        let inst = Instance::new(a, b, 2, CostExponent::Finite(2.0)).unwrap();
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        let s = d
            .sites()
            .translations
            .iter()
            .position(|t| *t == tv(5.0, 5.0))
            .unwrap();
        assert_eq!(d.per_site_base_value()[s], 0.0);
        assert_eq!(d.site_face_count(s), 1);
        let ans = d.query(&inst, tv(5.01, 4.99)).unwrap();
        assert_eq!(ans.face.region, FaceRegion::WholeCell);
        assert!(ans.cost <= tv(0.01, -0.01).norm() + 1e-12);
    }

    #[test]
    fn closed_form_count_matches_enumeration() {
        let a = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
        let b = vec![Point2::new(0.0, 0.5), Point2::new(3.0, 2.0)];
        let inst = Instance::new(a, b, 2, CostExponent::Finite(1.0)).unwrap();
        for eps in [1.0, 0.5, 0.25] {
            let d = build_eps_diagram(&inst, eps, DiagramKind::EpsT).unwrap();
            for s in 0..d.sites().len() {
                assert!(d.is_site_refined(s));
                assert_eq!(d.site_cells(s).len() as u64 + 4, d.site_face_count(s));
            }
        }
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        assert_eq!(d.site_face_count(0), 836);
    }

    #[test]
    fn location_agrees_with_linear_scan() {
        let inst = random_instance(5, 3, 4, 2, CostExponent::Finite(2.0));
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        let cells: Vec<Vec<(FaceRegion, Square)>> =
            (0..d.sites().len()).map(|s| d.site_cells(s)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let t = tv(rng.gen_range(-15.0..15.0), rng.gen_range(-15.0..15.0));
            let (site, region) = d.locate(t).unwrap();
            let hits: Vec<FaceRegion> = cells[site]
                .iter()
                .filter(|(_, sq)| sq.contains(&t))
                .map(|(r, _)| *r)
                .collect();
            if hits.is_empty() {
                assert_eq!(region, FaceRegion::Outer);
                assert!(!d.square(site, d.level_count()).contains(&t));
            } else {
                assert_eq!(hits, vec![region]);
            }
        }
    }

    #[test]
    fn memoized_faces_are_stable() {
        let inst = random_instance(6, 3, 4, 2, CostExponent::Infinity);
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        let before = d.memoized_faces().len();
        let t = d.sites().translations[1] + tv(0.013, -0.02);
        let first = d.query(&inst, t).unwrap();
        let second = d.query(&inst, t).unwrap();
        assert_eq!(first, second);
        assert_eq!(d.memoized_faces().len(), before + 1);
        let key = d.face_key(&first.face);
        assert_eq!(d.face(&key).matching, Some(first.matching));
    }

    #[test]
    fn mismatched_instance_is_rejected() {
        let inst = random_instance(7, 3, 4, 2, CostExponent::Finite(1.0));
        let other = random_instance(8, 3, 4, 2, CostExponent::Finite(1.0));
        let d = build_voronoi3_diagram(&inst, 0.0).unwrap();
        assert!(matches!(
            d.query(&other, tv(0.0, 0.0)),
            Err(Error::InstanceMismatch { .. })
        ));
    }

    #[test]
    fn concurrent_queries_fill_each_face_once() {
        let inst = random_instance(10, 4, 4, 2, CostExponent::Finite(1.0));
        let d = build_eps_diagram(&inst, 0.5, DiagramKind::EpsT).unwrap();
        let queries: Vec<TranslationVector> = {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            (0..64)
                .map(|_| tv(rng.gen_range(-12.0..12.0), rng.gen_range(-12.0..12.0)))
                .collect()
        };
        let answers: Vec<QueryAnswer> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..4)
                .map(|_| scope.spawn(|| queries.iter().map(|t| d.query(&inst, *t).unwrap()).collect::<Vec<_>>()))
                .collect();
            let all: Vec<Vec<QueryAnswer>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
            for w in all.windows(2) {
                assert_eq!(w[0], w[1]);
            }
            all.into_iter().next().unwrap()
        });
        assert_eq!(answers.len(), 64);
    }
}
