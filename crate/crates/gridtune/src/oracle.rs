//! Brute-force verifiers for the geometric, error-bound, sensitivity and
//! privacy claims of the core crate.
//!
//! Expected values are recomputed here from first principles (cell
//! membership, overlap areas, scores). Core functions are only called as the
//! thing being checked.

use std::io::Write;

use gridtune_core::bounds::{abs_error_bound, query_stats, rel_error_bound};
use gridtune_core::sensitivity::{abs_sensitivity, rel_sensitivity_avg};
use gridtune_core::tuner::phase1_distribution;
use gridtune_core::{
    GridSpec, Histogram, Point, PointSet, PrivacyBudget, Rect, RngStream, SensitivityMode, TuneConfig,
};
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::Result;

/// One machine-readable verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRecord {
    pub check: String,
    pub instance: String,
    pub observed: f64,
    pub bound: f64,
    pub pass: bool,
}

impl OracleRecord {
    fn new(check: &str, instance: impl Into<String>, observed: f64, bound: f64, pass: bool) -> Self {
        Self {
            check: check.into(),
            instance: instance.into(),
            observed,
            bound,
            pass,
        }
    }
}

pub fn write_json_lines<W: Write>(mut w: W, records: &[OracleRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Independent geometry

fn edge(lo: f64, extent: f64, k: u32, g: u32) -> f64 {
    lo + extent * f64::from(k) / f64::from(g)
}

/// Slot of `v` on one axis by scanning every slot.
fn slot(v: f64, lo: f64, hi: f64, g: u32) -> u32 {
    let extent = hi - lo;
    (0..g)
        .find(|&k| {
            let a = edge(lo, extent, k, g);
            let b = if k + 1 == g { hi } else { edge(lo, extent, k + 1, g) };
            v >= a && (v < b || (k + 1 == g && v <= hi))
        })
        .expect("point inside domain")
}

fn brute_cell(domain: &Rect, g: u32, p: Point) -> usize {
    let c = slot(p.x, domain.x_min, domain.x_max, g);
    let r = slot(p.y, domain.y_min, domain.y_max, g);
    r as usize * g as usize + c as usize
}

fn brute_cell_bounds(domain: &Rect, g: u32, index: usize) -> [f64; 4] {
    let (r, c) = ((index / g as usize) as u32, (index % g as usize) as u32);
    let (w, h) = (domain.x_max - domain.x_min, domain.y_max - domain.y_min);
    let x1 = if c + 1 == g { domain.x_max } else { edge(domain.x_min, w, c + 1, g) };
    let y1 = if r + 1 == g { domain.y_max } else { edge(domain.y_min, h, r + 1, g) };
    [edge(domain.x_min, w, c, g), edge(domain.y_min, h, r, g), x1, y1]
}

fn clamped_overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    let lo = if a0 > b0 { a0 } else { b0 };
    let hi = if a1 < b1 { a1 } else { b1 };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

fn brute_alphas(domain: &Rect, g: u32, qr: &Rect) -> Vec<(usize, f64)> {
    (0..(g as usize * g as usize))
        .filter_map(|i| {
            let [x0, y0, x1, y1] = brute_cell_bounds(domain, g, i);
            let fx = clamped_overlap(x0, x1, qr.x_min, qr.x_max) / (x1 - x0);
            let fy = clamped_overlap(y0, y1, qr.y_min, qr.y_max) / (y1 - y0);
            let a = fx * fy;
            (a > 0.0).then_some((i, a))
        })
        .collect()
}

fn brute_in_qr(domain: &Rect, qr: &Rect, p: Point) -> bool {
    let ax = |v: f64, lo: f64, hi: f64, dom_hi: f64| v >= lo && (v < hi || (v == hi && hi >= dom_hi));
    ax(p.x, qr.x_min, qr.x_max, domain.x_max) && ax(p.y, qr.y_min, qr.y_max, domain.y_max)
}

// ---------------------------------------------------------------------------
// Neighbours

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborCase {
    /// Added point outside the region and outside every cell it overlaps.
    OutsideQrOutsideCells,
    /// Outside the region but inside a cell the region overlaps.
    OutsideQrOverlappingCell,
    InsideQr,
}

impl NeighborCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::OutsideQrOutsideCells => "outside_qr_outside_cells",
            Self::OutsideQrOverlappingCell => "outside_qr_overlapping_cell",
            Self::InsideQr => "inside_qr",
        }
    }
}

/// `D' = D + point`, kept implicit to avoid copying `D` per neighbour.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub point: Point,
    pub case: NeighborCase,
}

impl Neighbor {
    pub fn dataset(&self, base: &PointSet) -> Result<PointSet> {
        Ok(base.with_point(self.point)?)
    }
}

fn lattice(x0: f64, y0: f64, x1: f64, y1: f64, steps: u32, out: &mut Vec<Point>) {
    for i in 0..=steps {
        for j in 0..=steps {
            let x = x0 + (x1 - x0) * f64::from(i) / f64::from(steps);
            let y = y0 + (y1 - y0) * f64::from(j) / f64::from(steps);
            out.push(Point { x, y });
        }
    }
}

/// Added-point neighbours of `ps` on a lattice of spacing cell/5 over the
/// whole domain, plus 5x5 lattices inside the region and inside every cell
/// the region overlaps. Each neighbour is labelled with its case relative to
/// `qr` and `grid`.
pub fn neighbor_instances(ps: &PointSet, qr: &Rect, grid: &GridSpec) -> Vec<Neighbor> {
    let d = *ps.domain();
    let g = grid.g();
    let mut pts = Vec::new();
    lattice(d.x_min, d.y_min, d.x_max, d.y_max, 5 * g, &mut pts);

    let overlapping: Vec<usize> = brute_alphas(&d, g, qr).into_iter().map(|(i, _)| i).collect();
    for &i in &overlapping {
        let [x0, y0, x1, y1] = brute_cell_bounds(&d, g, i);
        // 5x5 interior lattice
        for a in 1..=5 {
            for b in 1..=5 {
                pts.push(Point {
                    x: x0 + (x1 - x0) * f64::from(a) / 6.0,
                    y: y0 + (y1 - y0) * f64::from(b) / 6.0,
                });
            }
        }
    }
    let (qx0, qy0) = (qr.x_min.max(d.x_min), qr.y_min.max(d.y_min));
    let (qx1, qy1) = (qr.x_max.min(d.x_max), qr.y_max.min(d.y_max));
    if qx1 > qx0 && qy1 > qy0 {
        for a in 0..5 {
            for b in 0..5 {
                pts.push(Point {
                    x: qx0 + (qx1 - qx0) * (f64::from(a) + 0.5) / 5.0,
                    y: qy0 + (qy1 - qy0) * (f64::from(b) + 0.5) / 5.0,
                });
            }
        }
    }

    pts.into_iter()
        .filter(|p| d.contains(*p))
        .map(|point| {
            let case = if brute_in_qr(&d, qr, point) {
                NeighborCase::InsideQr
            } else if overlapping.contains(&brute_cell(&d, g, point)) {
                NeighborCase::OutsideQrOverlappingCell
            } else {
                NeighborCase::OutsideQrOutsideCells
            };
            Neighbor { point, case }
        })
        .collect()
}

/// Neighbours for every region of a tuning workload on its finest grid.
pub fn workload_neighbors(ps: &PointSet, cfg: &TuneConfig) -> Result<Vec<Neighbor>> {
    let g_max = *cfg.grid_candidates.iter().max().expect("non-empty candidates");
    let grid = GridSpec::new(*ps.domain(), g_max)?;
    let mut out: Vec<Neighbor> = Vec::new();
    for qr in &cfg.workload {
        out.extend(neighbor_instances(ps, qr, &grid));
    }
    out.sort_by(|a, b| {
        (a.point.x, a.point.y)
            .partial_cmp(&(b.point.x, b.point.y))
            .expect("finite")
            .then(a.case.cmp(&b.case))
    });
    out.dedup_by(|a, b| a.point == b.point);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Brute-force scores

/// Exact per-grid statistics of `D`, updatable for one added point.
struct BruteScores {
    domain: Rect,
    grids: Vec<u32>,
    n: usize,
    counts: Vec<Vec<u64>>,
    alphas: Vec<Vec<Vec<(usize, f64)>>>,
    truths: Vec<u64>,
    workload: Vec<Rect>,
}

impl BruteScores {
    fn new(ps: &PointSet, grids: &[u32], workload: &[Rect]) -> Self {
        let domain = *ps.domain();
        let counts = grids
            .iter()
            .map(|&g| {
                let mut c = vec![0u64; g as usize * g as usize];
                for p in ps.points() {
                    c[brute_cell(&domain, g, *p)] += 1;
                }
                c
            })
            .collect();
        let alphas = grids
            .iter()
            .map(|&g| workload.iter().map(|qr| brute_alphas(&domain, g, qr)).collect())
            .collect();
        let truths = workload
            .iter()
            .map(|qr| ps.points().iter().filter(|p| brute_in_qr(&domain, qr, **p)).count() as u64)
            .collect();
        Self {
            domain,
            grids: grids.to_vec(),
            n: ps.len(),
            counts,
            alphas,
            truths,
            workload: workload.to_vec(),
        }
    }

    fn alpha_l1(&self, r: usize) -> Vec<f64> {
        self.alphas[r].iter().map(|a| a.iter().map(|(_, v)| v).sum()).collect()
    }

    /// `(relative, absolute)` scores for grid `r`, optionally with `extra` added.
    fn scores(&self, r: usize, lambda: f64, delta: f64, extra: Option<Point>) -> (f64, f64) {
        let extra_cell = extra.map(|p| brute_cell(&self.domain, self.grids[r], p));
        let n = self.n + usize::from(extra.is_some());
        let rho = delta * n as f64;
        let (mut rel, mut abs) = (0.0, 0.0);
        for (t, qr) in self.workload.iter().enumerate() {
            let mut est = 0.0;
            let mut l1 = 0.0;
            for &(i, a) in &self.alphas[r][t] {
                let c = self.counts[r][i] + u64::from(extra_cell == Some(i));
                est += a * c as f64;
                l1 += a;
            }
            let truth = self.truths[t] + u64::from(extra.is_some_and(|p| brute_in_qr(&self.domain, qr, p)));
            let err = (est - truth as f64).abs() + lambda * l1;
            rel += err / (truth as f64).max(rho);
            abs += err;
        }
        let m = self.workload.len() as f64;
        (-rel / m, -abs / m)
    }
}

fn describe(ps: &PointSet, cfg: &TuneConfig) -> String {
    format!(
        "n={} grids={:?} queries={} eps1={} delta={}",
        ps.len(),
        cfg.grid_candidates,
        cfg.workload.len(),
        cfg.budget.eps1(),
        cfg.delta
    )
}

/// Exhaustive check of `|s(D,r) - s(D',r)| <= Δ_r(D)` over all enumerated
/// neighbours and grid candidates, for the relative score, plus the unit
/// bound for the absolute score. Returns `[relative, absolute]` records.
pub fn check_score_sensitivity(ps: &PointSet, cfg: &TuneConfig) -> Result<Vec<OracleRecord>> {
    let lambda = cfg.lambda();
    let brute = BruteScores::new(ps, &cfg.grid_candidates, &cfg.workload);
    let neighbors = workload_neighbors(ps, cfg)?;
    let mut worst_rel = (0.0f64, String::new());
    let mut worst_abs = (0.0f64, String::new());
    for (r, &g) in cfg.grid_candidates.iter().enumerate() {
        let bound = rel_sensitivity_avg(cfg.delta, ps.len(), lambda, &brute.alpha_l1(r))?;
        let (s_rel, s_abs) = brute.scores(r, lambda, cfg.delta, None);
        for nb in &neighbors {
            let (t_rel, t_abs) = brute.scores(r, lambda, cfg.delta, Some(nb.point));
            let where_ = || format!("g={g} case={} p=({},{})", nb.case.as_str(), nb.point.x, nb.point.y);
            let ratio = (s_rel - t_rel).abs() / bound;
            if ratio > worst_rel.0 {
                worst_rel = (ratio, where_());
            }
            let change = (s_abs - t_abs).abs() / abs_sensitivity();
            if change > worst_abs.0 {
                worst_abs = (change, where_());
            }
        }
    }
    let base = format!("{} neighbors={}", describe(ps, cfg), neighbors.len());
    Ok(vec![
        OracleRecord::new(
            "score_sensitivity",
            format!("{base} worst: {}", worst_rel.1),
            worst_rel.0,
            1.0,
            worst_rel.0 <= 1.0,
        ),
        OracleRecord::new(
            "abs_score_sensitivity",
            format!("{base} worst: {}", worst_abs.1),
            worst_abs.0,
            1.0,
            worst_abs.0 <= 1.0 + 1e-12,
        ),
    ])
}

/// `response_dependent <= global_maxr <= global_maxcells` per candidate, with
/// strictness against `global_maxcells` when some region overlaps fewer than
/// `g_max^2` cells. `observed` is the largest ratio between consecutive modes.
pub fn check_sensitivity_ordering(ps: &PointSet, cfg: &TuneConfig) -> Result<OracleRecord> {
    let with_mode = |m: SensitivityMode| -> Result<Vec<f64>> {
        let mut c = cfg.clone();
        c.sensitivity_mode = m;
        Ok(phase1_distribution(ps, &c)?.sensitivities)
    };
    let resp = with_mode(SensitivityMode::ResponseDependent)?;
    let maxr = with_mode(SensitivityMode::GlobalMaxR)?;
    let cells = with_mode(SensitivityMode::GlobalMaxCells)?;

    let g_max = *cfg.grid_candidates.iter().max().expect("non-empty");
    let n_max = g_max as usize * g_max as usize;
    let strict_expected = cfg
        .workload
        .iter()
        .any(|qr| brute_alphas(ps.domain(), g_max, qr).len() < n_max);

    let mut observed = 0.0f64;
    let mut pass = true;
    for r in 0..resp.len() {
        observed = observed.max(resp[r] / maxr[r]).max(maxr[r] / cells[r]);
        pass &= resp[r] <= maxr[r] && maxr[r] <= cells[r];
        if strict_expected {
            pass &= maxr[r] < cells[r];
        }
    }
    Ok(OracleRecord::new(
        "sensitivity_ordering",
        format!("{} strict={strict_expected}", describe(ps, cfg)),
        observed,
        1.0,
        pass,
    ))
}

/// Exact Phase 1 probabilities on `D` and every enumerated `D'`; the largest
/// probability ratio in either direction must not exceed `e^eps1`.
pub fn check_exp_mechanism_dp(ps: &PointSet, cfg: &TuneConfig) -> Result<OracleRecord> {
    let p_d = phase1_distribution(ps, cfg)?.probabilities;
    let neighbors = workload_neighbors(ps, cfg)?;
    let ratios: Vec<(f64, String)> = neighbors
        .par_iter()
        .map(|nb| -> Result<(f64, String)> {
            let p_n = phase1_distribution(&nb.dataset(ps)?, cfg)?.probabilities;
            let mut worst = (0.0f64, String::new());
            for (r, (a, b)) in p_d.iter().zip(&p_n).enumerate() {
                let ratio = (a / b).max(b / a);
                if ratio > worst.0 {
                    worst = (
                        ratio,
                        format!(
                            "g={} case={} p=({},{})",
                            cfg.grid_candidates[r],
                            nb.case.as_str(),
                            nb.point.x,
                            nb.point.y
                        ),
                    );
                }
            }
            Ok(worst)
        })
        .collect::<Result<_>>()?;
    let worst = ratios
        .into_iter()
        .fold((1.0f64, String::from("none")), |acc, x| if x.0 > acc.0 { x } else { acc });
    let bound = cfg.budget.eps1().exp() + 1e-9;
    Ok(OracleRecord::new(
        "exp_mechanism_dp",
        format!("{} neighbors={} worst: {}", describe(ps, cfg), neighbors.len(), worst.1),
        worst.0,
        bound,
        worst.0 <= bound,
    ))
}

/// Monte-Carlo expected absolute and relative error of a noisy answer to
/// `qr` against the analytical bound; passes when `mean <= bound + 3 SE`.
/// `lambda = 0` gives the noiseless response. Returns `[absolute, relative]`.
pub fn check_error_bound(
    ps: &PointSet,
    grid: &GridSpec,
    qr: &Rect,
    lambda: f64,
    rho: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<Vec<OracleRecord>> {
    let domain = *ps.domain();
    let g = grid.g();
    let mut counts = vec![0u64; g as usize * g as usize];
    for p in ps.points() {
        counts[brute_cell(&domain, g, *p)] += 1;
    }
    let alphas = brute_alphas(&domain, g, qr);
    let truth = ps.points().iter().filter(|p| brute_in_qr(&domain, qr, **p)).count() as f64;
    let exact: f64 = alphas.iter().map(|&(i, a)| a * counts[i] as f64).sum();
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(gridtune_core::Error::InvalidParameter {
            name: "lambda",
            reason: "must be finite and non-negative",
        }
        .into());
    }
    let exp = (lambda > 0.0).then(|| Exp::new(1.0 / lambda).expect("positive rate"));

    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..trials {
        let mut resp = exact;
        if let Some(exp) = &exp {
            for &(_, a) in &alphas {
                // Lap(0, λ) as the difference of two Exp(1/λ) draws
                resp += a * (exp.sample(rng) - exp.sample(rng));
            }
        }
        let e = (resp - truth).abs();
        sum += e;
        sum_sq += e * e;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = (sum_sq / t - mean * mean).max(0.0) * t / (t - 1.0).max(1.0);
    let se = (var / t).sqrt();

    let h = Histogram::build(ps, *grid)?;
    let qs = query_stats(ps, &h, qr)?;
    let abs_bound = abs_error_bound(&qs, lambda);
    let rel_bound = rel_error_bound(&qs, lambda, rho);
    let denom = truth.max(rho);
    let inst = format!(
        "n={} g={g} qr=({},{},{},{}) lambda={lambda} trials={trials}",
        ps.len(),
        qr.x_min,
        qr.y_min,
        qr.x_max,
        qr.y_max
    );
    Ok(vec![
        OracleRecord::new(
            "error_bound_abs",
            inst.clone(),
            mean,
            abs_bound,
            mean <= abs_bound + 3.0 * se + 1e-9 * abs_bound.max(1.0),
        ),
        OracleRecord::new(
            "error_bound_rel",
            inst,
            mean / denom,
            rel_bound,
            mean / denom <= rel_bound + 3.0 * se / denom + 1e-9 * rel_bound.max(1.0),
        ),
    ])
}

/// Random grids and regions (some partly or fully outside the domain);
/// `sum alpha_i * cellArea` must equal the clipped region area within 1e-9
/// relative. `observed` is the worst relative discrepancy.
pub fn check_overlap_conservation(rng: &mut RngStream, cases: usize) -> Result<OracleRecord> {
    let mut worst = (0.0f64, String::from("none"));
    let mut failures = 0usize;
    for _ in 0..cases {
        let x0 = rng.random_range(-10.0..10.0);
        let y0 = rng.random_range(-10.0..10.0);
        let domain = Rect::new(x0, y0, x0 + rng.random_range(0.1..20.0), y0 + rng.random_range(0.1..20.0))?;
        let g = rng.random_range(1..=64u32);
        let (w, h) = (domain.x_max - domain.x_min, domain.y_max - domain.y_min);
        let qx = domain.x_min + w * rng.random_range(-0.3..1.1);
        let qy = domain.y_min + h * rng.random_range(-0.3..1.1);
        let qr = Rect::new(qx, qy, qx + w * rng.random_range(0.01..1.2), qy + h * rng.random_range(0.01..1.2))?;

        let grid = GridSpec::new(domain, g)?;
        let lhs: f64 = grid.overlap_vector(&qr).iter().map(|e| e.alpha).sum::<f64>() * grid.cell_area();
        let rhs = clamped_overlap(domain.x_min, domain.x_max, qr.x_min, qr.x_max)
            * clamped_overlap(domain.y_min, domain.y_max, qr.y_min, qr.y_max);
        let err = if rhs == 0.0 { lhs.abs() } else { (lhs - rhs).abs() / rhs };
        let ok = if rhs == 0.0 { lhs == 0.0 } else { err <= 1e-9 };
        if !ok {
            failures += 1;
        }
        if err > worst.0 || (!ok && failures == 1) {
            worst = (err, format!("domain={domain:?} g={g} qr={qr:?} lhs={lhs} rhs={rhs}"));
        }
    }
    Ok(OracleRecord::new(
        "overlap_conservation",
        format!("cases={cases} failures={failures} worst: {}", worst.1),
        worst.0,
        1e-9,
        failures == 0,
    ))
}

// ---------------------------------------------------------------------------
// Instances and the suite

/// A small random tuning problem over the unit square.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub label: String,
    pub ps: PointSet,
    pub cfg: TuneConfig,
}

/// `n` in 50..=500, candidates {2,4,8}, 1..=5 regions, delta 0.1. Points mix
/// a uniform background with up to three Gaussian clusters.
pub fn random_instance(rng: &mut RngStream, budget: PrivacyBudget) -> Result<OracleInstance> {
    let unit = Rect::new(0.0, 0.0, 1.0, 1.0)?;
    let n = rng.random_range(50..=500usize);
    let n_clusters = rng.random_range(1..=3usize);
    let centers: Vec<(f64, f64, f64)> = (0..n_clusters)
        .map(|_| (rng.random::<f64>(), rng.random::<f64>(), rng.random_range(0.02..0.15)))
        .collect();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p = if rng.random::<f64>() < 0.3 {
            Point { x: rng.random(), y: rng.random() }
        } else {
            let (cx, cy, s) = centers[rng.random_range(0..n_clusters)];
            let nd = Normal::new(0.0, s).expect("positive std");
            Point {
                x: cx + nd.sample(rng),
                y: cy + nd.sample(rng),
            }
        };
        if unit.contains(p) {
            points.push(p);
        }
    }
    let n_q = rng.random_range(1..=5usize);
    let workload = (0..n_q)
        .map(|_| {
            let w = rng.random_range(0.05..0.8);
            let h = rng.random_range(0.05..0.8);
            let x = rng.random_range(0.0..1.0 - w);
            let y = rng.random_range(0.0..1.0 - h);
            Rect::new(x, y, x + w, y + h)
        })
        .collect::<gridtune_core::Result<Vec<_>>>()?;
    let cfg = TuneConfig::new(vec![2, 4, 8], workload, budget, 0.1)?;
    let ps = PointSet::new(unit, points)?;
    Ok(OracleInstance {
        label: format!("seed={} stream={}", rng.seed(), rng.stream()),
        ps,
        cfg,
    })
}

fn tag(mut rec: OracleRecord, label: &str) -> OracleRecord {
    rec.instance = format!("{label} {}", rec.instance);
    rec
}

/// Suite sizes; the defaults match the acceptance thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteSize {
    pub overlap_cases: usize,
    pub sensitivity_instances: usize,
    pub error_bound_triples: usize,
    pub error_bound_trials: usize,
    pub dp_instances: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self {
            overlap_cases: 10_000,
            sensitivity_instances: 20,
            error_bound_triples: 50,
            error_bound_trials: 10_000,
            dp_instances: 10,
        }
    }
}

pub fn sensitivity_instances(seed: u64, count: usize) -> Result<Vec<OracleInstance>> {
    let master = RngStream::new(seed, 0).fork(2);
    (0..count)
        .map(|i| random_instance(&mut master.fork(i as u64), PrivacyBudget::new(1.0, 0.2)?))
        .collect()
}

/// DP instances alternate eps1 = 0.2 and eps1 = 1.
pub fn dp_instances(seed: u64, count: usize) -> Result<Vec<OracleInstance>> {
    let master = RngStream::new(seed, 0).fork(4);
    (0..count)
        .map(|i| {
            let budget = if i % 2 == 0 {
                PrivacyBudget::new(1.0, 0.2)?
            } else {
                PrivacyBudget::new(1.25, 0.8)?
            };
            random_instance(&mut master.fork(i as u64), budget)
        })
        .collect()
}

/// Error-bound triples: random instance, one of its grids and regions, and
/// lambda drawn from {0.1, 1, 10}.
pub fn error_bound_checks(seed: u64, size: &SuiteSize) -> Result<Vec<OracleRecord>> {
    let master = RngStream::new(seed, 0).fork(3);
    let per: Vec<Vec<OracleRecord>> = (0..size.error_bound_triples)
        .into_par_iter()
        .map(|i| {
            let mut rng = master.fork(i as u64);
            let inst = random_instance(&mut rng, PrivacyBudget::new(1.0, 0.2)?)?;
            let g = inst.cfg.grid_candidates[rng.random_range(0..inst.cfg.grid_candidates.len())];
            let qr = inst.cfg.workload[rng.random_range(0..inst.cfg.workload.len())];
            let lambda = [0.1, 1.0, 10.0][rng.random_range(0..3usize)];
            let grid = GridSpec::new(*inst.ps.domain(), g)?;
            let rho = inst.cfg.delta * inst.ps.len() as f64;
            let recs = check_error_bound(&inst.ps, &grid, &qr, lambda, rho, size.error_bound_trials, &mut rng)?;
            Ok(recs.into_iter().map(|r| tag(r, &inst.label)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Every check at `size`, in a fixed order.
pub fn run_suite(seed: u64, size: &SuiteSize) -> Result<Vec<OracleRecord>> {
    let mut out = vec![check_overlap_conservation(
        &mut RngStream::new(seed, 0).fork(1),
        size.overlap_cases,
    )?];

    let sens = sensitivity_instances(seed, size.sensitivity_instances)?;
    let per: Vec<Vec<OracleRecord>> = sens
        .par_iter()
        .map(|inst| {
            let mut recs = check_score_sensitivity(&inst.ps, &inst.cfg)?;
            recs.push(check_sensitivity_ordering(&inst.ps, &inst.cfg)?);
            Ok(recs.into_iter().map(|r| tag(r, &inst.label)).collect())
        })
        .collect::<Result<_>>()?;
    out.extend(per.into_iter().flatten());

    out.extend(error_bound_checks(seed, size)?);

    for inst in dp_instances(seed, size.dp_instances)? {
        out.push(tag(check_exp_mechanism_dp(&inst.ps, &inst.cfg)?, &inst.label));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn toy(points: &[(f64, f64)], grids: Vec<u32>, workload: Vec<Rect>, eps: f64, frac: f64) -> (PointSet, TuneConfig) {
        let ps = PointSet::new(unit(), points.iter().map(|&(x, y)| Point { x, y }).collect()).unwrap();
        let cfg = TuneConfig::new(grids, workload, PrivacyBudget::new(eps, frac).unwrap(), 0.1).unwrap();
        (ps, cfg)
    }

    fn cluster(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| (0.1 + 0.3 * ((i * 7) % n) as f64 / n as f64, 0.2 + 0.5 * ((i * 13) % n) as f64 / n as f64))
            .collect()
    }

    #[test]
    fn lattice_covers_three_cases() {
        let (ps, _) = toy(&cluster(100), vec![2], vec![unit()], 1.0, 0.2);
        let grid = GridSpec::new(unit(), 2).unwrap();
        let qr = Rect::new(0.3, 0.3, 0.45, 0.45).unwrap();
        let nbs = neighbor_instances(&ps, &qr, &grid);
        assert!(nbs.len() >= 75);
        for case in [
            NeighborCase::InsideQr,
            NeighborCase::OutsideQrOverlappingCell,
            NeighborCase::OutsideQrOutsideCells,
        ] {
            assert!(nbs.iter().filter(|n| n.case == case).count() >= 25, "{case:?}");
        }
        let d2 = nbs[0].dataset(&ps).unwrap();
        assert_eq!(d2.len(), ps.len() + 1);
    }

    #[test]
    fn full_domain_region_has_no_outside_case() {
        let (ps, _) = toy(&cluster(20), vec![2], vec![unit()], 1.0, 0.2);
        let grid = GridSpec::new(unit(), 2).unwrap();
        let nbs = neighbor_instances(&ps, &unit(), &grid);
        assert!(nbs.iter().all(|n| n.case == NeighborCase::InsideQr));
    }

    #[test]
    fn brute_geometry_agrees_with_core() {
        let dom = Rect::new(-1.0, 2.0, 3.0, 5.0).unwrap();
        let grid = GridSpec::new(dom, 7).unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..2000 {
            let p = Point {
                x: rng.random_range(-1.0..=3.0),
                y: rng.random_range(2.0..=5.0),
            };
            assert_eq!(brute_cell(&dom, 7, p), grid.locate(p).unwrap());
        }
        for k in 0..=7 {
            let p = Point { x: edge(-1.0, 4.0, k, 7).min(3.0), y: 5.0 };
            assert_eq!(brute_cell(&dom, 7, p), grid.locate(p).unwrap());
        }
    }

    #[test]
    fn sensitivity_holds_on_toy_instance() {
        let work = vec![Rect::new(0.1, 0.1, 0.6, 0.4).unwrap(), Rect::new(0.5, 0.5, 0.9, 0.95).unwrap()];
        let (ps, cfg) = toy(&cluster(80), vec![2, 4], work, 1.0, 0.2);
        for rec in check_score_sensitivity(&ps, &cfg).unwrap() {
            assert!(rec.pass, "{rec:?}");
            assert!(rec.observed > 0.0);
        }
        assert!(check_sensitivity_ordering(&ps, &cfg).unwrap().pass);
    }

    #[test]
    fn single_candidate_gives_unit_ratios() {
        let (ps, cfg) = toy(&cluster(60), vec![4], vec![Rect::new(0.2, 0.2, 0.5, 0.5).unwrap()], 1.0, 0.2);
        let rec = check_exp_mechanism_dp(&ps, &cfg).unwrap();
        assert!(rec.pass);
        assert!((rec.observed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dp_ratio_grows_with_eps1() {
        let work = vec![Rect::new(0.1, 0.1, 0.35, 0.6).unwrap()];
        let mut last = 1.0;
        for frac in [0.1, 0.3, 0.6, 0.9] {
            let (ps, cfg) = toy(&cluster(70), vec![2, 4, 8], work.clone(), 1.0, frac);
            let rec = check_exp_mechanism_dp(&ps, &cfg).unwrap();
            assert!(rec.pass, "{rec:?}");
            assert!(rec.observed > last);
            last = rec.observed;
        }
    }

    #[test]
    fn noiseless_error_is_the_aggregation_error() {
        let (ps, _) = toy(&cluster(50), vec![2], vec![unit()], 1.0, 0.2);
        let grid = GridSpec::new(unit(), 2).unwrap();
        let qr = Rect::new(0.05, 0.05, 0.3, 0.3).unwrap();
        let recs = check_error_bound(&ps, &grid, &qr, 0.0, 5.0, 10, &mut RngStream::new(1, 0)).unwrap();
        assert!(recs[0].pass);
        assert!((recs[0].observed - recs[0].bound).abs() < 1e-9);
    }

    #[test]
    fn aligned_error_matches_noise_mass() {
        let (ps, _) = toy(&cluster(50), vec![2], vec![unit()], 1.0, 0.2);
        let grid = GridSpec::new(unit(), 2).unwrap();
        let qr = Rect::new(0.0, 0.0, 0.5, 0.5).unwrap();
        let recs = check_error_bound(&ps, &grid, &qr, 1.0, 5.0, 20_000, &mut RngStream::new(2, 0)).unwrap();
        assert!(recs.iter().all(|r| r.pass), "{recs:?}");
        assert!((recs[0].observed - 1.0).abs() < 0.05);
    }

    #[test]
    fn overlap_conservation_small() {
        let rec = check_overlap_conservation(&mut RngStream::new(3, 0), 500).unwrap();
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn json_lines_have_the_five_fields() {
        let rec = OracleRecord::new("c", "i", 0.5, 1.0, true);
        let mut buf = Vec::new();
        write_json_lines(&mut buf, &[rec]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 5);
        for k in ["check", "instance", "observed", "bound", "pass"] {
            assert!(v.get(k).is_some());
        }
    }

    #[test]
    fn random_instances_respect_limits() {
        for inst in sensitivity_instances(9, 5).unwrap() {
            assert!((50..=500).contains(&inst.ps.len()));
            assert!((1..=5).contains(&inst.cfg.workload.len()));
        }
    }
}
