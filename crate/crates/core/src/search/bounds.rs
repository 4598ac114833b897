use crate::error::{Error, Result};
use crate::geometry::CostExponent;

/// Lower bound `k - k / (1 + c)^p` on the number of pairs of a k-matching of
/// cost `mu` whose length is below `(1 + c) mu`; every pair qualifies when
/// `p = inf`.
pub fn close_pair_count_bound(k: usize, c: f64, p: CostExponent) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::InvalidParameter(format!("c = {c} outside (0, 1]")));
    }
    let k = k as f64;
    Ok(match p {
        CostExponent::Infinity => k,
        CostExponent::Finite(p) => k - k / (1.0 + c).powf(p),
    })
}

/// Probability lower bound `1 - (1 - (1 - e^{-eps p / 8}) k / m)^s` for the
/// sampled search reaching a `(2 + eps)`-approximation.
pub fn success_probability_bound(
    m: usize,
    k: usize,
    p: CostExponent,
    eps: f64,
    s: usize,
) -> Result<f64> {
    if k == 0 || k > m {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
    }
    if s == 0 {
        return Err(Error::InvalidParameter("s must be at least 1".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside (0, 1]")));
    }
    let decay = match p {
        CostExponent::Infinity => 0.0,
        CostExponent::Finite(p) => (-eps * p / 8.0).exp(),
    };
    let hit = (1.0 - decay) * k as f64 / m as f64;
    let miss_all = (1.0 - hit).powi(s.min(i32::MAX as usize) as i32);
    Ok((1.0 - miss_all).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn close_pair_examples() {
        let one = CostExponent::Finite(1.0);
        assert_eq!(close_pair_count_bound(8, 1.0, one).unwrap(), 4.0);
        assert_eq!(close_pair_count_bound(8, 1.0, CostExponent::Infinity).unwrap(), 8.0);
        assert_eq!(close_pair_count_bound(9, 1.0, CostExponent::Finite(2.0)).unwrap(), 6.75);
        assert!(close_pair_count_bound(8, 0.0, one).is_err());
        assert!(close_pair_count_bound(8, 1.5, one).is_err());
    }

    #[test]
    fn success_probability_examples() {
        let big = success_probability_bound(5, 5, CostExponent::Finite(1.0), 1.0, 1_000_000).unwrap();
        assert!((big - 1.0).abs() < 1e-6);

        // eps p / 8 = ln 2
        let p = CostExponent::Finite(8.0 * std::f64::consts::LN_2);
        let half = success_probability_bound(3, 3, p, 1.0, 1).unwrap();
        assert!((half - 0.5).abs() < 1e-12);

        // 1 - (1 - (1 - e^{-1/8}) / 2)^3, evaluated with 50-digit arithmetic
        let v = success_probability_bound(4, 2, CostExponent::Finite(1.0), 1.0, 3).unwrap();
        assert!((v - 0.16610220803012837).abs() < 1e-15, "{v}");

        let inf = success_probability_bound(4, 2, CostExponent::Infinity, 1.0, 1).unwrap();
        assert_eq!(inf, 0.5);
    }
}
