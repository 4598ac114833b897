use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CostExponent, Point2};
use crate::stationary::{check_problem, StationarySolver};

/// Two point sets, a matching size and a cost exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub a: Vec<Point2>,
    pub b: Vec<Point2>,
    pub k: usize,
    pub p: CostExponent,
}

impl Instance {
    pub fn new(a: Vec<Point2>, b: Vec<Point2>, k: usize, p: CostExponent) -> Result<Self> {
        if a.iter().chain(&b).any(|q| !q.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        check_problem(&a, &b, k)?;
        Ok(Self { a, b, k, p })
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    pub fn solver(&self) -> StationarySolver<'_> {
        StationarySolver::new(&self.a, &self.b, self.k, self.p).expect("validated instance")
    }

    /// Hex digest over the exact bit patterns of the instance data.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.a.len() as u64).to_le_bytes());
        h.update((self.b.len() as u64).to_le_bytes());
        h.update((self.k as u64).to_le_bytes());
        h.update(self.p.value().to_bits().to_le_bytes());
        for q in self.a.iter().chain(&self.b) {
            h.update(q.x.to_bits().to_le_bytes());
            h.update(q.y.to_bits().to_le_bytes());
        }
        h.finalize()[..16]
            .iter()
            .map(|byte| format!("{byte:02x}"))
            .collect()
    }
}
