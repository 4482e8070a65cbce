//! Comparison mechanisms: the fixed-rule grid size, a leaky tuner that
//! peeks at true counts, and the non-private exact histogram.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::geometry::{GridSpec, Rect};
use crate::histogram::{relative_error, CellCounts, Histogram, NoisyHistogram, PointSet};
use crate::mechanisms::{perturb_histogram, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeuristicParams {
    pub n: usize,
    pub epsilon: f64,
    pub c: f64,
}

impl HeuristicParams {
    pub fn new(n: usize, epsilon: f64) -> Self {
        Self { n, epsilon, c: 10.0 }
    }
}

/// `round(sqrt(N * epsilon / c))`, at least 1.
pub fn heuristic_grid_size(hp: &HeuristicParams) -> Result<u32> {
    if !(hp.epsilon.is_finite() && hp.epsilon > 0.0) {
        return Err(invalid("epsilon", "must be finite and positive"));
    }
    if !(hp.c.is_finite() && hp.c > 0.0) {
        return Err(invalid("c", "must be finite and positive"));
    }
    let m = libm::round(libm::sqrt(hp.n as f64 * hp.epsilon / hp.c));
    Ok((m as u32).max(1))
}

/// Outcome of the leaky tuner: the chosen size, its noisy histogram and the
/// mean workload error measured for every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakySelection {
    pub selected_g: u32,
    pub histogram: NoisyHistogram,
    pub errors: Vec<(u32, f64)>,
}

/// Release a noisy histogram (full budget, fresh noise) for every candidate,
/// score each by its mean relative error on `workload` against the true
/// counts, and keep the best. Ties go to the smaller grid. This consults the
/// data outside the privacy budget and is not differentially private.
pub fn leaky_select(
    ps: &PointSet,
    grids: &[u32],
    workload: &[Rect],
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<LeakySelection> {
    if grids.is_empty() {
        return Err(Error::Empty("grid candidates"));
    }
    if workload.is_empty() {
        return Err(Error::Empty("workload"));
    }
    let truth: Vec<u64> = workload.iter().map(|qr| ps.true_count(qr)).collect();
    let mut best: Option<(u32, f64, NoisyHistogram)> = None;
    let mut errors = Vec::with_capacity(grids.len());
    let mut order: Vec<u32> = grids.to_vec();
    order.sort_unstable();
    order.dedup();
    for g in order {
        let h = Histogram::build(ps, GridSpec::new(*ps.domain(), g)?)?;
        let noisy = perturb_histogram(&h, epsilon, rng)?;
        let err = workload
            .iter()
            .zip(&truth)
            .map(|(qr, t)| relative_error(noisy.range_query(qr), *t))
            .sum::<f64>()
            / workload.len() as f64;
        errors.push((g, err));
        if best.as_ref().is_none_or(|(_, e, _)| err < *e) {
            best = Some((g, err, noisy));
        }
    }
    let (selected_g, _, histogram) = best.expect("non-empty candidates");
    Ok(LeakySelection {
        selected_g,
        histogram,
        errors,
    })
}

/// Non-private reference: the exact histogram at the largest candidate size.
pub fn best_select(ps: &PointSet, grids: &[u32]) -> Result<(u32, Histogram)> {
    let g = *grids.iter().max().ok_or(Error::Empty("grid candidates"))?;
    let h = Histogram::build(ps, GridSpec::new(*ps.domain(), g)?)?;
    Ok((g, h))
}
