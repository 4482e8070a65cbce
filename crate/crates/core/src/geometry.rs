//! Axis-aligned rectangles, `g x g` grid partitions and overlap fractions.
//!
//! Cell membership is half-open: a point on an interior cell edge belongs to
//! the cell with the larger index along that axis, and points on the maximum
//! edge of the domain belong to the last row/column. Cell edges are always
//! computed as `min + extent * k / g` so that `locate`, `cell_rect` and the
//! overlap fractions agree bit-for-bit on aligned queries.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(Self { x, y })
    }
}

/// A closed axis-aligned rectangle with positive area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self> {
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(x_min < x_max && y_min < y_max) {
            return Err(Error::DegenerateRect);
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Side lengths of the intersection with `other`, each clamped at zero.
    pub fn overlap_extents(&self, other: &Rect) -> (f64, f64) {
        let x = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let y = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        (x, y)
    }

    pub fn intersection_area(&self, other: &Rect) -> f64 {
        let (x, y) = self.overlap_extents(other);
        x * y
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// Fraction of `cell` covered by `qr`, in `[0, 1]`.
pub fn overlap_fraction(cell: &Rect, qr: &Rect) -> f64 {
    let (x, y) = cell.overlap_extents(qr);
    // Per-axis fractions keep aligned overlaps at exactly 1.0.
    ((x / cell.width()) * (y / cell.height())).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellOverlap {
    pub index: usize,
    pub alpha: f64,
}

/// Sparse overlap vector of a query region against a grid: only cells with
/// a strictly positive overlap, in ascending index order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverlapVector {
    entries: Vec<CellOverlap>,
}

impl OverlapVector {
    pub fn entries(&self) -> &[CellOverlap] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &CellOverlap> + '_ {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `||alpha||_1`, the effective number of overlapped cells.
    pub fn l1(&self) -> f64 {
        self.entries.iter().map(|e| e.alpha).sum()
    }

    /// `sum_i alpha_i * counts[i]`.
    pub fn weighted_sum(&self, counts: &[f64]) -> f64 {
        self.entries
            .iter()
            .map(|e| e.alpha * counts[e.index])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    domain: Rect,
    g: u32,
}

impl GridSpec {
    pub fn new(domain: Rect, g: u32) -> Result<Self> {
        if g == 0 {
            return Err(Error::ZeroGrid);
        }
        Ok(Self { domain, g })
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    /// Divisions per axis.
    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn n_cells(&self) -> usize {
        let g = self.g as usize;
        g * g
    }

    pub fn cell_area(&self) -> f64 {
        self.domain.area() / (self.n_cells() as f64)
    }

    fn x_edge(&self, k: u32) -> f64 {
        if k >= self.g {
            return self.domain.x_max;
        }
        self.domain.x_min + self.domain.width() * f64::from(k) / f64::from(self.g)
    }

    fn y_edge(&self, k: u32) -> f64 {
        if k >= self.g {
            return self.domain.y_max;
        }
        self.domain.y_min + self.domain.height() * f64::from(k) / f64::from(self.g)
    }

    /// Column (or row) holding coordinate `v` under the half-open rule.
    fn axis_slot(&self, v: f64, lo: f64, extent: f64, edge: impl Fn(u32) -> f64) -> u32 {
        let g = self.g;
        let guess = libm::floor((v - lo) / extent * f64::from(g));
        let mut k = if guess.is_nan() || guess < 0.0 {
            0
        } else if guess >= f64::from(g) {
            g - 1
        } else {
            guess as u32
        };
        // The division above can land one slot off on edges; snap to the
        // edges used by `cell_rect`.
        while k + 1 < g && v >= edge(k + 1) {
            k += 1;
        }
        while k > 0 && v < edge(k) {
            k -= 1;
        }
        k
    }

    fn col_of(&self, x: f64) -> u32 {
        self.axis_slot(x, self.domain.x_min, self.domain.width(), |k| self.x_edge(k))
    }

    fn row_of(&self, y: f64) -> u32 {
        self.axis_slot(y, self.domain.y_min, self.domain.height(), |k| self.y_edge(k))
    }

    /// Rectangle of cell `index` (row-major, row = y slot).
    pub fn cell_rect(&self, index: usize) -> Result<Rect> {
        let cells = self.n_cells();
        if index >= cells {
            return Err(Error::CellOutOfRange { index, cells });
        }
        let g = self.g as usize;
        let (row, col) = ((index / g) as u32, (index % g) as u32);
        Ok(Rect {
            x_min: self.x_edge(col),
            y_min: self.y_edge(row),
            x_max: self.x_edge(col + 1),
            y_max: self.y_edge(row + 1),
        })
    }

    /// Index of the cell containing `p`.
    pub fn locate(&self, p: Point) -> Result<usize> {
        if !self.domain.contains(p) {
            return Err(Error::PointOutsideDomain { x: p.x, y: p.y });
        }
        let (row, col) = (self.row_of(p.y), self.col_of(p.x));
        Ok(row as usize * self.g as usize + col as usize)
    }

    /// Overlap fractions of `qr` with every cell it touches with positive area.
    pub fn overlap_vector(&self, qr: &Rect) -> OverlapVector {
        let d = &self.domain;
        let (xo, yo) = d.overlap_extents(qr);
        if xo <= 0.0 || yo <= 0.0 {
            return OverlapVector::default();
        }
        let c0 = self.col_of(qr.x_min.max(d.x_min));
        let c1 = self.col_of(qr.x_max.min(d.x_max));
        let r0 = self.row_of(qr.y_min.max(d.y_min));
        let r1 = self.row_of(qr.y_max.min(d.y_max));
        let g = self.g as usize;
        let mut entries = Vec::with_capacity(((c1 - c0 + 1) * (r1 - r0 + 1)) as usize);
        for row in r0..=r1 {
            for col in c0..=c1 {
                let index = row as usize * g + col as usize;
                let cell = Rect {
                    x_min: self.x_edge(col),
                    y_min: self.y_edge(row),
                    x_max: self.x_edge(col + 1),
                    y_max: self.y_edge(row + 1),
                };
                let alpha = overlap_fraction(&cell, qr);
                if alpha > 0.0 {
                    entries.push(CellOverlap { index, alpha });
                }
            }
        }
        OverlapVector { entries }
    }
}

/// Half-open membership of `p` in `qr` within `domain`, consistent with
/// [`GridSpec::locate`]: the max edges of `qr` are excluded unless they reach
/// the max edge of the domain.
pub fn half_open_contains(domain: &Rect, qr: &Rect, p: Point) -> bool {
    let in_x = p.x >= qr.x_min && (p.x < qr.x_max || (p.x == qr.x_max && qr.x_max >= domain.x_max));
    let in_y = p.y >= qr.y_min && (p.y < qr.y_max || (p.y == qr.y_max && qr.y_max >= domain.y_max));
    in_x && in_y
}
