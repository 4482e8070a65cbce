//! Expected-error bounds of the noisy release and the tuning score.
//!
//! For one query region with overlap vector `alpha`, exact counts `c` and
//! true mass `T` (points of the dataset inside the region), Laplace noise of
//! scale `lambda` gives
//!
//! ```text
//! E|response - T|                 <= |sum alpha_i c_i - T| + lambda * ||alpha||_1
//! E|response - T| / max(T, rho)   <= (|sum alpha_i c_i - T| + lambda * ||alpha||_1) / max(T, rho)
//! ```
//!
//! The first term is aggregation error (the uniformity assumption), the
//! second perturbation error. Bounds are evaluated on the exact histogram;
//! noise only enters through `lambda`.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{OverlapVector, Rect};
use crate::histogram::{CellCounts, Histogram, PointSet};

/// Floor on the relative-error denominator, `rho = delta * |D|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SanityBound {
    delta: f64,
    rho: f64,
}

impl SanityBound {
    /// Requires `delta` in `(0, 1)` and `rho = delta * n > 1`.
    pub fn new(delta: f64, n: usize) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        let rho = delta * n as f64;
        if rho <= 1.0 {
            return Err(Error::SanityBoundTooSmall { rho });
        }
        Ok(Self { delta, rho })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// Per-query aggregates feeding the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryStats {
    /// `||alpha||_1`
    pub alpha_l1: f64,
    /// Noiseless histogram response `sum alpha_i c_i`.
    pub estimate: f64,
    /// True number of points in the region.
    pub true_mass: u64,
}

impl QueryStats {
    pub fn from_parts(overlap: &OverlapVector, h: &Histogram, true_mass: u64) -> Self {
        Self {
            alpha_l1: overlap.l1(),
            estimate: h.answer(overlap),
            true_mass,
        }
    }

    /// `|sum alpha_i c_i - T|`
    pub fn aggregation_error(&self) -> f64 {
        (self.estimate - self.true_mass as f64).abs()
    }

    /// `lambda * ||alpha||_1`
    pub fn perturbation_error(&self, lambda: f64) -> f64 {
        lambda * self.alpha_l1
    }
}

/// Query statistics for every region of a tuning workload.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadStats {
    per_query: Vec<QueryStats>,
}

impl WorkloadStats {
    pub fn new(per_query: Vec<QueryStats>) -> Result<Self> {
        if per_query.is_empty() {
            return Err(Error::Empty("workload"));
        }
        Ok(Self { per_query })
    }

    /// Statistics of `workload` against the exact histogram `h` of `ps`.
    pub fn compute(ps: &PointSet, h: &Histogram, workload: &[Rect]) -> Result<Self> {
        let per_query = workload
            .iter()
            .map(|qr| query_stats(ps, h, qr))
            .collect::<Result<Vec<_>>>()?;
        Self::new(per_query)
    }

    pub fn per_query(&self) -> &[QueryStats] {
        &self.per_query
    }

    pub fn len(&self) -> usize {
        self.per_query.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_query.is_empty()
    }

    fn mean(&self, f: impl Fn(&QueryStats) -> f64) -> f64 {
        self.per_query.iter().map(f).sum::<f64>() / self.per_query.len() as f64
    }
}

pub fn query_stats(ps: &PointSet, h: &Histogram, qr: &Rect) -> Result<QueryStats> {
    if ps.domain() != h.grid().domain() {
        return Err(Error::DomainMismatch);
    }
    let overlap = h.grid().overlap_vector(qr);
    Ok(QueryStats::from_parts(&overlap, h, ps.true_count(qr)))
}

pub fn abs_error_bound(qs: &QueryStats, lambda: f64) -> f64 {
    qs.aggregation_error() + qs.perturbation_error(lambda)
}

pub fn rel_error_bound(qs: &QueryStats, lambda: f64, rho: f64) -> f64 {
    abs_error_bound(qs, lambda) / (qs.true_mass as f64).max(rho)
}

pub fn avg_abs_error_bound(ws: &WorkloadStats, lambda: f64) -> f64 {
    ws.mean(|q| abs_error_bound(q, lambda))
}

pub fn avg_rel_error_bound(ws: &WorkloadStats, lambda: f64, rho: f64) -> f64 {
    ws.mean(|q| rel_error_bound(q, lambda, rho))
}

/// Relative-error tuning score: the negated average relative bound.
pub fn score(ws: &WorkloadStats, lambda: f64, rho: f64) -> f64 {
    -avg_rel_error_bound(ws, lambda, rho)
}

/// Absolute-error tuning score.
pub fn abs_score(ws: &WorkloadStats, lambda: f64) -> f64 {
    -avg_abs_error_bound(ws, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GridSpec, Point};
    use alloc::vec;

    fn stats(alpha_l1: f64, estimate: f64, true_mass: u64) -> QueryStats {
        QueryStats {
            alpha_l1,
            estimate,
            true_mass,
        }
    }

    /// Four 2x2 cells around the centre of [0,8]^2 hold 100 points each, one
    /// of which lies in the query [3,5]^2; four stray points sit in corner
    /// cells.
    fn worked_example() -> (PointSet, Rect) {
        let dom = Rect::new(0.0, 0.0, 8.0, 8.0).unwrap();
        let mut pts = vec![];
        for (cx, cy) in [(2.0, 2.0), (4.0, 2.0), (2.0, 4.0), (4.0, 4.0)] {
            // 99 points in the cell's quarter away from the query
            let ox = if cx < 3.0 { cx + 0.5 } else { cx + 1.5 };
            let oy = if cy < 3.0 { cy + 0.5 } else { cy + 1.5 };
            pts.extend(core::iter::repeat_n(Point::new(ox, oy).unwrap(), 99));
            let ix = if cx < 3.0 { cx + 1.5 } else { cx + 0.5 };
            let iy = if cy < 3.0 { cy + 1.5 } else { cy + 0.5 };
            pts.push(Point::new(ix, iy).unwrap());
        }
        for (x, y) in [(0.5, 0.5), (7.5, 0.5), (0.5, 7.5), (7.5, 7.5)] {
            pts.push(Point::new(x, y).unwrap());
        }
        (PointSet::new(dom, pts).unwrap(), Rect::new(3.0, 3.0, 5.0, 5.0).unwrap())
    }

    #[test]
    fn sanity_bound_validation() {
        assert_eq!(SanityBound::new(0.1, 404).unwrap().rho(), 0.1 * 404.0);
        assert!(matches!(SanityBound::new(0.1, 10), Err(Error::SanityBoundTooSmall { .. })));
        assert!(SanityBound::new(1.0, 1000).is_err());
        assert!(SanityBound::new(0.0, 1000).is_err());
    }

    #[test]
    fn query_stats_examples() {
        let (ps, qr) = worked_example();
        assert_eq!(ps.len(), 404);
        let coarse = Histogram::build(&ps, GridSpec::new(*ps.domain(), 4).unwrap()).unwrap();
        let qs = query_stats(&ps, &coarse, &qr).unwrap();
        assert_eq!(qs, stats(1.0, 100.0, 4));

        let fine = Histogram::build(&ps, GridSpec::new(*ps.domain(), 8).unwrap()).unwrap();
        let qs = query_stats(&ps, &fine, &qr).unwrap();
        assert_eq!(qs.estimate, 4.0);
        assert_eq!(qs.true_mass, 4);

        let empty = PointSet::empty(*ps.domain());
        let h0 = Histogram::build(&empty, GridSpec::new(*ps.domain(), 4).unwrap()).unwrap();
        let qs = query_stats(&empty, &h0, &qr).unwrap();
        assert_eq!((qs.estimate, qs.true_mass), (0.0, 0));

        let other = PointSet::empty(Rect::new(0.0, 0.0, 1.0, 1.0).unwrap());
        assert_eq!(query_stats(&other, &coarse, &qr), Err(Error::DomainMismatch));
    }

    #[test]
    fn abs_bound_examples() {
        assert_eq!(abs_error_bound(&stats(3.0, 5.0, 5), 0.0), 0.0);
        assert_eq!(abs_error_bound(&stats(2.0, 2.0, 2), 1.0), 2.0);
        assert_eq!(abs_error_bound(&stats(1.0, 100.0, 4), 1.0), 97.0);
    }

    #[test]
    fn rel_bound_examples() {
        assert_eq!(rel_error_bound(&stats(2.0, 2.0, 2), 1.0, 1.1), 1.0);
        assert_eq!(rel_error_bound(&stats(1.5, 3.0, 0), 2.0, 10.0), 6.0 / 10.0);
        let rho = SanityBound::new(0.1, 404).unwrap().rho();
        let b = rel_error_bound(&stats(1.0, 100.0, 4), 1.0, rho);
        assert!((b - 97.0 / 40.4).abs() < 1e-12);
        assert!((b - 2.4010).abs() < 5e-5);
    }

    #[test]
    fn averages_and_score() {
        let one = WorkloadStats::new(vec![stats(1.0, 100.0, 4)]).unwrap();
        assert_eq!(avg_rel_error_bound(&one, 1.0, 40.4), rel_error_bound(&one.per_query()[0], 1.0, 40.4));
        assert_eq!(avg_abs_error_bound(&one, 1.0), 97.0);
        assert!((score(&one, 1.0, 40.4) + 2.4010).abs() < 5e-5);

        // relative bounds 1 and 3 (rho = 1.1 < true mass)
        let two = WorkloadStats::new(vec![stats(2.0, 2.0, 2), stats(0.0, 8.0, 2)]).unwrap();
        assert_eq!(avg_rel_error_bound(&two, 1.0, 1.1), 2.0);
        assert_eq!(score(&two, 1.0, 1.1), -2.0);
        // absolute bounds 2 and 4
        let abs = WorkloadStats::new(vec![stats(2.0, 2.0, 2), stats(1.0, 5.0, 2)]).unwrap();
        assert_eq!(avg_abs_error_bound(&abs, 1.0), 3.0);
        assert_eq!(abs_score(&abs, 1.0), -3.0);

        let aligned = WorkloadStats::new(vec![stats(4.0, 7.0, 7), stats(1.0, 0.0, 0)]).unwrap();
        assert_eq!(score(&aligned, 0.0, 2.0), 0.0);
        assert_eq!(avg_abs_error_bound(&aligned, 0.0), 0.0);

        assert_eq!(WorkloadStats::new(vec![]), Err(Error::Empty("workload")));
    }

    #[test]
    fn decomposition_and_monotonicity() {
        let qs = stats(2.5, 40.0, 31);
        assert_eq!(abs_error_bound(&qs, 0.0), qs.aggregation_error());
        let aligned = stats(2.5, 31.0, 31);
        assert_eq!(abs_error_bound(&aligned, 1.5), 1.5 * 2.5);
        let mut prev = 0.0;
        for lambda in [0.0, 0.1, 0.5, 1.0, 4.0] {
            let b = rel_error_bound(&qs, lambda, 20.0);
            assert!(b >= prev);
            prev = b;
        }
    }
}
