//! Points CSV (`x,y`) and released-histogram CSV (`cell_index,count`).

use std::fs;
use std::io::Write;
use std::path::Path;

use gridtune_core::{GridSpec, NoisyHistogram, Point, PointSet, Rect};

use crate::{HarnessError, Result};

/// A parsed points file.
#[derive(Debug, Clone)]
pub struct LoadedPoints {
    pub points: PointSet,
    /// Rows that parsed but fell outside the requested domain.
    pub rejected: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn is_points_header(line: &str) -> bool {
    let cols: Vec<String> = line.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    cols == ["x", "y"]
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| HarnessError::Parse {
        line,
        message: format!("not a number: {:?}", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(HarnessError::Parse {
            line,
            message: format!("non-finite value: {:?}", field.trim()),
        });
    }
    Ok(v)
}

/// Parse `x,y` rows (an optional `x,y` header line is skipped, blank lines
/// ignored). Without an explicit `domain` the bounding box of the points is
/// used, padded by 0.5 on any axis where it would be degenerate. Note that
/// a data-derived domain is itself a function of the private data.
pub fn parse_points_csv(text: &str, domain: Option<Rect>) -> Result<LoadedPoints> {
    let mut raw = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || (raw.is_empty() && lineno == 1 && is_points_header(line)) {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(x), Some(y), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(HarnessError::Parse {
                line: lineno,
                message: "expected two fields `x,y`".into(),
            });
        };
        let p = Point::new(parse_f64(x, lineno)?, parse_f64(y, lineno)?)?;
        raw.push(p);
    }
    if raw.is_empty() {
        return Err(HarnessError::EmptyDataset);
    }
    let domain = match domain {
        Some(d) => d,
        None => bounding_box(&raw)?,
    };
    let before = raw.len();
    raw.retain(|p| domain.contains(*p));
    let rejected = before - raw.len();
    Ok(LoadedPoints {
        points: PointSet::new(domain, raw)?,
        rejected,
    })
}

pub fn load_points_csv(path: &Path, domain: Option<Rect>) -> Result<LoadedPoints> {
    parse_points_csv(&read(path)?, domain)
}

fn bounding_box(points: &[Point]) -> Result<Rect> {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if x0 == x1 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y0 == y1 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    Ok(Rect::new(x0, y0, x1, y1)?)
}

pub fn write_points_csv<W: Write>(mut w: W, ps: &PointSet) -> std::io::Result<()> {
    writeln!(w, "x,y")?;
    for p in ps.points() {
        writeln!(w, "{},{}", p.x, p.y)?;
    }
    Ok(())
}

pub fn write_histogram_csv<W: Write>(mut w: W, h: &NoisyHistogram) -> std::io::Result<()> {
    writeln!(w, "cell_index,count")?;
    for (i, c) in h.counts().iter().enumerate() {
        writeln!(w, "{i},{c}")?;
    }
    Ok(())
}

/// Parse a released histogram. The grid size is recovered from the number
/// of rows, which must be a perfect square; the domain is public input.
pub fn parse_histogram_csv(text: &str, domain: Rect) -> Result<NoisyHistogram> {
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim();
        if line.is_empty() || (lineno == 1 && line.eq_ignore_ascii_case("cell_index,count")) {
            continue;
        }
        let (idx, count) = line.split_once(',').ok_or_else(|| HarnessError::Parse {
            line: lineno,
            message: "expected `cell_index,count`".into(),
        })?;
        let idx: usize = idx.trim().parse().map_err(|_| HarnessError::Parse {
            line: lineno,
            message: format!("bad cell index {:?}", idx.trim()),
        })?;
        rows.push((idx, parse_f64(count, lineno)?));
    }
    let n = rows.len();
    let g = (n as f64).sqrt().round() as usize;
    if n == 0 || g * g != n {
        return Err(HarnessError::Parse {
            line: n + 1,
            message: format!("{n} cells is not a square grid"),
        });
    }
    let mut counts = vec![f64::NAN; n];
    for (idx, c) in rows {
        if idx >= n || !counts[idx].is_nan() {
            return Err(HarnessError::Parse {
                line: 0,
                message: format!("cell index {idx} duplicated or out of range"),
            });
        }
        counts[idx] = c;
    }
    let grid = GridSpec::new(domain, g as u32)?;
    Ok(NoisyHistogram::from_counts(grid, counts)?)
}

pub fn load_histogram_csv(path: &Path, domain: Rect) -> Result<NoisyHistogram> {
    parse_histogram_csv(&read(path)?, domain)
}

/// Parse `x_min,y_min,x_max,y_max`.
pub fn parse_rect(s: &str) -> Result<Rect> {
    let v: Vec<f64> = s
        .split(',')
        .map(|f| parse_f64(f, 1))
        .collect::<Result<_>>()?;
    if v.len() != 4 {
        return Err(HarnessError::Parse {
            line: 1,
            message: format!("expected x_min,y_min,x_max,y_max, got {s:?}"),
        });
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3])?)
}
