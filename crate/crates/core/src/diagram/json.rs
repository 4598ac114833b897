use serde::{Deserialize, Serialize};

use super::{cluster_scale, normalize_eps, DiagramKind, FaceKey, FaceTable, MatchingDiagram};
use crate::error::{Error, Result};
use crate::geometry::{CostExponent, TranslationVector};
use crate::search::{CandidateKind, CandidateSet};
use crate::stationary::Matching;

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct DiagramDoc {
    instance_hash: String,
    kind: DiagramKind,
    eps: f64,
    delta: f64,
    p: CostExponent,
    k: usize,
    sites: Vec<TranslationVector>,
    per_site_base_value: Vec<f64>,
    level_count: u32,
    guarantee_factor: f64,
    memoized_faces: Vec<FaceDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FaceDoc {
    site: usize,
    level: i32,
    i: i64,
    j: i64,
    matching: Matching,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedDiagram(msg.into())
}

impl MatchingDiagram {
    /// Single-line JSON with sorted keys, including every memoized face.
    pub fn to_json(&self) -> String {
        let doc = DiagramDoc {
            instance_hash: self.instance_hash.clone(),
            kind: self.kind,
            eps: self.eps,
            delta: self.delta,
            p: self.p,
            k: self.k,
            sites: self.sites.translations.clone(),
            per_site_base_value: self.base.clone(),
            level_count: self.levels,
            guarantee_factor: self.guarantee,
            memoized_faces: self
                .faces
                .snapshot()
                .into_iter()
                .map(|(key, matching)| FaceDoc {
                    site: key.site,
                    level: key.level,
                    i: key.i,
                    j: key.j,
                    matching,
                })
                .collect(),
        };
        // going through Value sorts the keys
        let value = serde_json::to_value(&doc).expect("diagram serializes");
        serde_json::to_string(&value).expect("diagram serializes")
    }

    /// Loads a document written by [`MatchingDiagram::to_json`]; memoized
    /// faces come back without solving anything.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DiagramDoc = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
        if doc.sites.is_empty() {
            return Err(malformed("no sites"));
        }
        if doc.sites.iter().any(|t| !t.is_finite()) {
            return Err(malformed("non-finite site"));
        }
        if doc.k == 0 {
            return Err(malformed("k = 0"));
        }
        let n_sites = doc.sites.len();
        let mut diagram = MatchingDiagram {
            instance_hash: doc.instance_hash,
            kind: doc.kind,
            eps: 0.0,
            alpha: 0,
            delta: doc.delta,
            p: doc.p,
            k: doc.k,
            sites: CandidateSet {
                translations: doc.sites,
                kind: if doc.kind.uses_clusters() {
                    CandidateKind::ClusterCenters
                } else {
                    CandidateKind::PointToPoint
                },
                per_candidate_radius: None,
                multiplicity: vec![1; n_sites],
            },
            base: doc.per_site_base_value,
            levels: 0,
            scale: 1.0,
            guarantee: 0.0,
            faces: FaceTable::default(),
        };
        let expected_guarantee = match doc.kind {
            DiagramKind::Voronoi3 => 3.0 * (1.0 + doc.delta),
            DiagramKind::ClusterVoronoi => 1.0 + 6.0 * doc.p.two_root(),
            DiagramKind::EpsT | DiagramKind::EpsCluster => {
                let (eps, alpha) = normalize_eps(doc.eps).map_err(|e| malformed(e.to_string()))?;
                if eps != doc.eps {
                    return Err(malformed(format!("eps {} is not a power of two", doc.eps)));
                }
                diagram.eps = eps;
                diagram.alpha = alpha;
                diagram.levels = alpha + 2;
                if doc.kind == DiagramKind::EpsCluster {
                    diagram.scale = cluster_scale(doc.p);
                }
                1.0 + eps
            }
        };
        if doc.level_count != diagram.levels {
            return Err(malformed(format!(
                "levelCount {} but eps implies {}",
                doc.level_count, diagram.levels
            )));
        }
        let base_len = if doc.kind.is_refined() { n_sites } else { 0 };
        if diagram.base.len() != base_len {
            return Err(malformed(format!(
                "{} base values for {} sites",
                diagram.base.len(),
                n_sites
            )));
        }
        if diagram.base.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(malformed("base values must be finite and >= 0"));
        }
        if (doc.guarantee_factor - expected_guarantee).abs() > 1e-12 * expected_guarantee {
            return Err(malformed(format!(
                "guaranteeFactor {} but kind implies {}",
                doc.guarantee_factor, expected_guarantee
            )));
        }
        diagram.guarantee = expected_guarantee;
        for face in doc.memoized_faces {
            let key = FaceKey {
                site: face.site,
                level: face.level,
                i: face.i,
                j: face.j,
            };
            diagram.check_key(&key)?;
            if face.matching.len() != diagram.k {
                return Err(malformed(format!(
                    "face {key:?} has {} pairs, expected {}",
                    face.matching.len(),
                    diagram.k
                )));
            }
            if diagram.faces.get(&key).is_some() {
                return Err(malformed(format!("face {key:?} listed twice")));
            }
            diagram.faces.insert(key, face.matching);
        }
        Ok(diagram)
    }

    fn check_key(&self, key: &FaceKey) -> Result<()> {
        if key.site >= self.sites.len() {
            return Err(malformed(format!("face site {} out of range", key.site)));
        }
        let ok = if !self.is_site_refined(key.site) {
            key.level == -1 && key.i == 0 && key.j == 0
        } else if key.level == self.levels as i32 + 1 {
            key.i == 0 && key.j == 0
        } else if (0..=self.levels as i32).contains(&key.level) {
            let half = 1i64 << (2 + self.alpha);
            let inner = half / 2;
            let in_range = (-half..half).contains(&key.i) && (-half..half).contains(&key.j);
            let in_hole = (-inner..inner).contains(&key.i) && (-inner..inner).contains(&key.j);
            in_range && (key.level == 0 || !in_hole)
        } else {
            false
        };
        if ok {
            Ok(())
        } else {
            Err(malformed(format!("no face {key:?} in this diagram")))
        }
    }
}
