//! Exact and noisy grid histograms, true counts and range-query answering.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{half_open_contains, GridSpec, OverlapVector, Point, Rect};

/// The sensitive dataset: points inside a public domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    domain: Rect,
}

impl PointSet {
    pub fn new(domain: Rect, points: Vec<Point>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !domain.contains(**p)) {
            return Err(Error::PointOutsideDomain { x: p.x, y: p.y });
        }
        Ok(Self { points, domain })
    }

    pub fn empty(domain: Rect) -> Self {
        Self {
            points: Vec::new(),
            domain,
        }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Neighbouring dataset with one extra point.
    pub fn with_point(&self, p: Point) -> Result<Self> {
        if !self.domain.contains(p) {
            return Err(Error::PointOutsideDomain { x: p.x, y: p.y });
        }
        let mut points = Vec::with_capacity(self.points.len() + 1);
        points.extend_from_slice(&self.points);
        points.push(p);
        Ok(Self {
            points,
            domain: self.domain,
        })
    }

    /// Number of points in `qr` under the same half-open rule as
    /// [`GridSpec::locate`].
    pub fn true_count(&self, qr: &Rect) -> u64 {
        self.points
            .iter()
            .filter(|p| half_open_contains(&self.domain, qr, **p))
            .count() as u64
    }
}

/// Read access to per-cell counts, shared by exact and noisy histograms.
pub trait CellCounts {
    fn grid(&self) -> &GridSpec;
    fn cell_count(&self, index: usize) -> f64;

    /// Answer `qr` under the uniformity assumption: `sum_i alpha_i * c_i`.
    fn range_query(&self, qr: &Rect) -> f64 {
        self.answer(&self.grid().overlap_vector(qr))
    }

    /// Like [`CellCounts::range_query`] with a precomputed overlap vector.
    fn answer(&self, overlap: &OverlapVector) -> f64 {
        overlap
            .iter()
            .map(|e| e.alpha * self.cell_count(e.index))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    grid: GridSpec,
    counts: Vec<u64>,
}

impl Histogram {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            counts: vec![0; grid.n_cells()],
            grid,
        }
    }

    pub fn from_counts(grid: GridSpec, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.n_cells() {
            return Err(Error::CountsLength {
                got: counts.len(),
                expected: grid.n_cells(),
            });
        }
        Ok(Self { grid, counts })
    }

    /// Count every point of `ps` into the cell it falls in.
    pub fn build(ps: &PointSet, grid: GridSpec) -> Result<Self> {
        if ps.domain() != grid.domain() {
            return Err(Error::DomainMismatch);
        }
        let mut h = Self::zeros(grid);
        h.add_points(ps.points())?;
        Ok(h)
    }

    /// Count a slice of points; partial histograms can be [`merge`](Self::merge)d.
    pub fn add_points(&mut self, points: &[Point]) -> Result<()> {
        for p in points {
            let i = self.grid.locate(*p)?;
            self.counts[i] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Histogram) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::DomainMismatch);
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
        Ok(())
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

impl CellCounts for Histogram {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn cell_count(&self, index: usize) -> f64 {
        self.counts[index] as f64
    }
}

/// Real-valued counts after perturbation; entries may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyHistogram {
    grid: GridSpec,
    counts: Vec<f64>,
}

impl NoisyHistogram {
    pub fn from_counts(grid: GridSpec, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != grid.n_cells() {
            return Err(Error::CountsLength {
                got: counts.len(),
                expected: grid.n_cells(),
            });
        }
        Ok(Self { grid, counts })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }
}

impl CellCounts for NoisyHistogram {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn cell_count(&self, index: usize) -> f64 {
        self.counts[index]
    }
}

/// Evaluation metric: `|response - truth| / max(truth, 1)` (no sanity bound).
pub fn relative_error(response: f64, truth: u64) -> f64 {
    let t = truth as f64;
    (response - t).abs() / t.max(1.0)
}
