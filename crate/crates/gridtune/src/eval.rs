//! Relative-error evaluation of a released histogram against true counts.

use gridtune_core::histogram::relative_error;
use gridtune_core::{CellCounts, PointSet};

use crate::workload::LabeledQuery;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryError {
    pub size_fraction: f64,
    pub response: f64,
    pub truth: u64,
    /// `|response - truth| / max(truth, 1)`
    pub error: f64,
}

impl QueryError {
    pub fn zero_true(&self) -> bool {
        self.truth == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub size_fraction: f64,
    pub queries: usize,
    pub median: f64,
    pub zero_true_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_query: Vec<QueryError>,
    /// One entry per size fraction, in first-seen order.
    pub by_size: Vec<SizeSummary>,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]) / 2.0
    }
}

pub fn eval_relative_error<H: CellCounts>(h: &H, ps: &PointSet, workload: &[LabeledQuery]) -> EvalReport {
    let per_query: Vec<QueryError> = workload
        .iter()
        .map(|q| {
            let response = h.range_query(&q.rect);
            let truth = ps.true_count(&q.rect);
            QueryError {
                size_fraction: q.size_fraction,
                response,
                truth,
                error: relative_error(response, truth),
            }
        })
        .collect();

    let mut sizes: Vec<f64> = Vec::new();
    for q in &per_query {
        if !sizes.contains(&q.size_fraction) {
            sizes.push(q.size_fraction);
        }
    }
    let by_size = sizes
        .into_iter()
        .map(|f| {
            let group: Vec<&QueryError> = per_query.iter().filter(|q| q.size_fraction == f).collect();
            let mut errs: Vec<f64> = group.iter().map(|q| q.error).collect();
            SizeSummary {
                size_fraction: f,
                queries: group.len(),
                median: median(&mut errs),
                zero_true_count: group.iter().filter(|q| q.zero_true()).count(),
            }
        })
        .collect();
    EvalReport { per_query, by_size }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridtune_core::{GridSpec, Histogram, NoisyHistogram, Point, Rect};

    #[test]
    fn exact_histogram_on_aligned_workload_is_error_free() {
        let dom = Rect::new(0.0, 0.0, 4.0, 4.0).unwrap();
        let pts = (0..64)
            .map(|i| Point::new((i % 8) as f64 * 0.5 + 0.1, (i / 8) as f64 * 0.5 + 0.3).unwrap())
            .collect();
        let ps = PointSet::new(dom, pts).unwrap();
        let h = Histogram::build(&ps, GridSpec::new(dom, 4).unwrap()).unwrap();
        let w: Vec<LabeledQuery> = [(0.0, 0.0, 2.0, 2.0), (1.0, 1.0, 4.0, 3.0), (0.0, 0.0, 4.0, 4.0)]
            .iter()
            .map(|&(a, b, c, d)| LabeledQuery {
                size_fraction: 0.5,
                rect: Rect::new(a, b, c, d).unwrap(),
            })
            .collect();
        let rep = eval_relative_error(&h, &ps, &w);
        assert!(rep.per_query.iter().all(|q| q.error == 0.0));
        assert_eq!(rep.by_size.len(), 1);
        assert_eq!(rep.by_size[0].median, 0.0);
    }

    #[test]
    fn metric_examples() {
        let dom = Rect::new(0.0, 0.0, 1.0, 1.0).unwrap();
        let grid = GridSpec::new(dom, 1).unwrap();
        let q = |f| LabeledQuery {
            size_fraction: f,
            rect: dom,
        };
        // response 100 against 4 true points
        let ps = PointSet::new(dom, vec![Point::new(0.5, 0.5).unwrap(); 4]).unwrap();
        let h = NoisyHistogram::from_counts(grid, vec![100.0]).unwrap();
        let rep = eval_relative_error(&h, &ps, &[q(0.1)]);
        assert_eq!(rep.per_query[0].error, 24.0);

        // response 3 against an empty region
        let empty = PointSet::empty(dom);
        let h = NoisyHistogram::from_counts(grid, vec![3.0]).unwrap();
        let rep = eval_relative_error(&h, &empty, &[q(0.2), q(0.2)]);
        assert_eq!(rep.per_query[0].error, 3.0);
        assert!(rep.per_query[0].zero_true());
        assert_eq!(rep.by_size[0].zero_true_count, 2);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
