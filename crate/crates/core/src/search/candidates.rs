use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    approx_smallest_weighted_hdisk, min_enclosing_disk, Disk, Point2, TranslationVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CandidateKind {
    PointToPoint,
    ClusterCenters,
}

/// A finite set of translations with no two bit-identical members.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub translations: Vec<TranslationVector>,
    pub kind: CandidateKind,
    /// Radius of the disk each cluster center stands for.
    pub per_candidate_radius: Option<Vec<f64>>,
    /// How many `(a, b)` pairs produced each point-to-point translation.
    pub multiplicity: Vec<usize>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.translations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.translations.is_empty()
    }
}

fn bit_key(t: &TranslationVector) -> (u64, u64) {
    // -0.0 and 0.0 are the same translation
    ((t.dx + 0.0).to_bits(), (t.dy + 0.0).to_bits())
}

/// All differences `b - a`, deduplicated exactly, in first-occurrence order
/// (A outer, B inner).
pub fn build_point_to_point_set(a: &[Point2], b: &[Point2]) -> Result<CandidateSet> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("point sets for point-to-point translations"));
    }
    let mut seen: HashMap<(u64, u64), usize> = HashMap::with_capacity(a.len() * b.len());
    let mut translations = Vec::new();
    let mut multiplicity = Vec::new();
    for pa in a {
        for pb in b {
            let d = *pb - *pa;
            let t = TranslationVector::new(d.dx + 0.0, d.dy + 0.0);
            match seen.get(&bit_key(&t)) {
                Some(&i) => multiplicity[i] += 1,
                None => {
                    seen.insert(bit_key(&t), translations.len());
                    translations.push(t);
                    multiplicity.push(1);
                }
            }
        }
    }
    Ok(CandidateSet {
        translations,
        kind: CandidateKind::PointToPoint,
        per_candidate_radius: None,
        multiplicity,
    })
}

/// One greedy step of the clustering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterStep {
    pub disk: Disk,
    /// `true` when the disk was an approximate smallest `h`-point disk, `false`
    /// for the enclosing disk of the final leftover points.
    pub h_disk: bool,
    /// Weight of the translations the step removed.
    pub removed: usize,
}

#[derive(Clone, Debug)]
pub struct Clustering {
    pub centers: CandidateSet,
    pub steps: Vec<ClusterStep>,
    pub h: usize,
}

/// Greedy disk-eating over `T`: repeatedly take a disk holding `ceil(k/2)`
/// translations (at most twice the smallest possible radius), or the enclosing
/// disk once fewer remain, record its center and delete what it covers.
/// Translations are weighted by multiplicity so that coincident differences
/// count once per producing pair.
pub fn cluster_point_to_point_set(t_set: &CandidateSet, k: usize) -> Result<Clustering> {
    if t_set.is_empty() {
        return Err(Error::EmptyInput("translation set"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let h = k.div_ceil(2);
    let weights: Vec<usize> = if t_set.multiplicity.len() == t_set.len() {
        t_set.multiplicity.clone()
    } else {
        vec![1; t_set.len()]
    };
    let mut remaining: Vec<usize> = (0..t_set.len()).collect();
    let mut steps = Vec::new();
    let mut centers: Vec<TranslationVector> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    while !remaining.is_empty() {
        pts.clear();
        wts.clear();
        pts.extend(remaining.iter().map(|&i| t_set.translations[i]));
        wts.extend(remaining.iter().map(|&i| weights[i]));
        let total: usize = wts.iter().sum();
        let (disk, h_disk) = if total <= h {
            (min_enclosing_disk(&pts)?, false)
        } else {
            (approx_smallest_weighted_hdisk(&pts, &wts, h)?, true)
        };
        let before = remaining.len();
        let mut removed = 0;
        remaining.retain(|&i| {
            let covered = disk.contains(&t_set.translations[i]);
            if covered {
                removed += weights[i];
            }
            !covered
        });
        if !h_disk && remaining.len() == before {
            // rounding left the leftovers outside their own enclosing disk
            removed = total;
            remaining.clear();
        }
        steps.push(ClusterStep {
            disk,
            h_disk,
            removed,
        });
        match index.get(&bit_key(&disk.center)) {
            Some(&i) => radii[i] = radii[i].max(disk.radius),
            None => {
                index.insert(bit_key(&disk.center), centers.len());
                centers.push(disk.center);
                radii.push(disk.radius);
            }
        }
    }
    let multiplicity = vec![1; centers.len()];
    Ok(Clustering {
        centers: CandidateSet {
            translations: centers,
            kind: CandidateKind::ClusterCenters,
            per_candidate_radius: Some(radii),
            multiplicity,
        },
        steps,
        h,
    })
}

/// Cluster centers `X` of the point-to-point set.
pub fn build_cluster_centers(t_set: &CandidateSet, k: usize) -> Result<CandidateSet> {
    Ok(cluster_point_to_point_set(t_set, k)?.centers)
}
