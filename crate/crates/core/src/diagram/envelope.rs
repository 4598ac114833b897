use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{CostExponent, Point2, TranslationVector};
use crate::instance::Instance;
use crate::stationary::Matching;

/// Exact optimal matching at every site.
pub fn exact_site_matchings(inst: &Instance, sites: &[TranslationVector]) -> Vec<Matching> {
    exec::map_init(sites, || inst.solver(), |s, t| s.solve(*t).matching)
}

/// `2 sum <a - b, s> + sum |a - b|^2` over the pairs of `matching`, which
/// equals `k cost_2(matching, s)^2 - k |s|^2`.
pub fn l2_envelope_value(a: &[Point2], b: &[Point2], matching: &Matching, s: TranslationVector) -> f64 {
    let mut linear = 0.0;
    let mut constant = 0.0;
    for &(i, j) in matching.pairs() {
        let d = a[i] - b[j];
        linear += d.dot(&s);
        constant += d.norm_sq();
    }
    2.0 * linear + constant
}

/// Site whose matching minimizes the RMS cost at `s`, found as the lowest of
/// the linear functions above; ties go to the smaller index.
pub fn l2_envelope_query(
    sites: &[TranslationVector],
    site_matchings: &[Matching],
    s: TranslationVector,
    inst: &Instance,
) -> Result<(usize, Matching)> {
    if inst.p != CostExponent::Finite(2.0) {
        return Err(Error::InvalidParameter(format!(
            "linear envelope needs p = 2, got p = {}",
            inst.p
        )));
    }
    if sites.is_empty() {
        return Err(Error::EmptyInput("sites"));
    }
    if sites.len() != site_matchings.len() {
        return Err(Error::InvalidParameter(format!(
            "{} sites but {} matchings",
            sites.len(),
            site_matchings.len()
        )));
    }
    if !s.is_finite() {
        return Err(Error::NonFinite("query translation"));
    }
    for m in site_matchings {
        m.validate(inst.m(), inst.n(), inst.k)?;
    }
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (idx, m) in site_matchings.iter().enumerate() {
        let v = l2_envelope_value(&inst.a, &inst.b, m, s);
        if v < best_value {
            best = idx;
            best_value = v;
        }
    }
    Ok((best, site_matchings[best].clone()))
}
