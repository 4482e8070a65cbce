//! Random query workloads: squares-in-proportion regions of given side
//! fractions placed uniformly inside the domain.

use gridtune_core::{Rect, RngStream};
use rand::Rng;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    /// Side length as a fraction of each axis; `.3` covers 9% of the area.
    pub size_fractions: Vec<f64>,
    pub positions_per_size: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            size_fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.8],
            positions_per_size: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledQuery {
    pub size_fraction: f64,
    pub rect: Rect,
}

pub fn rects(workload: &[LabeledQuery]) -> Vec<Rect> {
    workload.iter().map(|q| q.rect).collect()
}

pub fn gen_workload(domain: &Rect, spec: &WorkloadSpec, rng: &mut RngStream) -> Result<Vec<LabeledQuery>> {
    if spec.positions_per_size == 0 {
        return Err(HarnessError::Config {
            key: "positions_per_size".into(),
            message: "must be at least 1".into(),
        });
    }
    if spec.size_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(HarnessError::Config {
            key: "size_fractions".into(),
            message: "fractions must lie in (0, 1]".into(),
        });
    }
    let mut out = Vec::with_capacity(spec.size_fractions.len() * spec.positions_per_size);
    for &f in &spec.size_fractions {
        let (w, h) = (f * domain.width(), f * domain.height());
        for _ in 0..spec.positions_per_size {
            let rect = if f == 1.0 {
                *domain
            } else {
                let x0 = domain.x_min + rng.random::<f64>() * (domain.width() - w);
                let y0 = domain.y_min + rng.random::<f64>() * (domain.height() - h);
                Rect::new(x0, y0, (x0 + w).min(domain.x_max), (y0 + h).min(domain.y_max))?
            };
            out.push(LabeledQuery { size_fraction: f, rect });
        }
    }
    Ok(out)
}
