//! Synthetic point sets: a mixture of clipped Gaussian clusters over a
//! uniform background.

use gridtune_core::{Point, PointSet, Rect, RngStream};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub weight: f64,
    pub center: Point,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_points: usize,
    pub domain: Rect,
    pub clusters: Vec<Cluster>,
    pub uniform_weight: f64,
}

const MAX_REJECTIONS: usize = 10_000;

/// Built-in mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SynthKind {
    /// Five clusters over a 20% uniform background on the unit square.
    #[default]
    Clustered,
    /// Many small city-like clusters with Zipf weights over a continental
    /// lon/lat box, 10% background.
    StorageLike,
}

impl SynthKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Clustered => "clustered",
            Self::StorageLike => "storage_like",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Clustered, Self::StorageLike].into_iter().find(|k| k.as_str() == s)
    }
}

impl SynthSpec {
    pub fn uniform(n_points: usize, domain: Rect) -> Self {
        Self {
            n_points,
            domain,
            clusters: Vec::new(),
            uniform_weight: 1.0,
        }
    }

    /// Default clustered surrogate on the unit square: a few dense clusters of
    /// different spread over a 20% uniform background.
    pub fn clustered(n_points: usize) -> Self {
        let c = |w, x, y, s| Cluster {
            weight: w,
            center: Point { x, y },
            std: s,
        };
        Self {
            n_points,
            domain: Rect {
                x_min: 0.0,
                y_min: 0.0,
                x_max: 1.0,
                y_max: 1.0,
            },
            clusters: vec![
                c(0.30, 0.25, 0.30, 0.04),
                c(0.20, 0.70, 0.65, 0.02),
                c(0.15, 0.55, 0.20, 0.08),
                c(0.10, 0.20, 0.80, 0.01),
                c(0.05, 0.85, 0.15, 0.03),
            ],
            uniform_weight: 0.20,
        }
    }

    /// 60 clusters at fixed pseudo-random centres in
    /// `[-125.5, -65.5] x [25, 50]`, weights proportional to `1/k`, spreads
    /// between 0.15 and 0.75 degrees.
    pub fn storage_like(n_points: usize) -> Self {
        let domain = Rect {
            x_min: -125.5,
            y_min: 25.0,
            x_max: -65.5,
            y_max: 50.0,
        };
        let mut layout = RngStream::new(0x0570_9A6E, 0);
        let k = 60;
        let harmonic: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
        let clusters = (1..=k)
            .map(|i| Cluster {
                weight: 0.9 / (i as f64 * harmonic),
                center: Point {
                    x: layout.random_range(-123.0..-68.0),
                    y: layout.random_range(26.0..49.0),
                },
                std: 0.15 + 0.6 * layout.random::<f64>(),
            })
            .collect();
        Self {
            n_points,
            domain,
            clusters,
            uniform_weight: 0.1,
        }
    }

    pub fn for_kind(kind: SynthKind, n_points: usize) -> Self {
        match kind {
            SynthKind::Clustered => Self::clustered(n_points),
            SynthKind::StorageLike => Self::storage_like(n_points),
        }
    }

    /// The same mixture mapped affinely onto `domain`; spreads scale with
    /// the mean of the two axis ratios.
    pub fn mapped_to(&self, domain: Rect) -> Self {
        let (sx, sy) = (domain.width() / self.domain.width(), domain.height() / self.domain.height());
        let clusters = self
            .clusters
            .iter()
            .map(|c| Cluster {
                weight: c.weight,
                center: Point {
                    x: domain.x_min + (c.center.x - self.domain.x_min) * sx,
                    y: domain.y_min + (c.center.y - self.domain.y_min) * sy,
                },
                std: c.std * (sx + sy) / 2.0,
            })
            .collect();
        Self {
            n_points: self.n_points,
            domain,
            clusters,
            uniform_weight: self.uniform_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| HarnessError::Config {
            key: "synth".into(),
            message: message.into(),
        };
        let weights = self.clusters.iter().map(|c| c.weight).chain([self.uniform_weight]);
        if weights.clone().any(|w| !(w.is_finite() && w >= 0.0)) {
            return Err(bad("mixture weights must be non-negative"));
        }
        if (weights.sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(bad("mixture weights must sum to 1"));
        }
        if self.clusters.iter().any(|c| !(c.std.is_finite() && c.std > 0.0)) {
            return Err(bad("cluster std must be positive"));
        }
        Ok(())
    }
}

/// Draw `spec.n_points` points. Gaussian draws falling outside the domain
/// are redrawn.
pub fn synth_points(spec: &SynthSpec, rng: &mut RngStream) -> Result<PointSet> {
    spec.validate()?;
    let d = spec.domain;
    let mut points = Vec::with_capacity(spec.n_points);
    for _ in 0..spec.n_points {
        let mut u = rng.random::<f64>();
        let mut chosen = None;
        for c in &spec.clusters {
            if u < c.weight {
                chosen = Some(c);
                break;
            }
            u -= c.weight;
        }
        let p = match chosen {
            None => Point {
                x: rng.random_range(d.x_min..d.x_max),
                y: rng.random_range(d.y_min..d.y_max),
            },
            Some(c) => {
                let nx = Normal::new(c.center.x, c.std).expect("validated std");
                let ny = Normal::new(c.center.y, c.std).expect("validated std");
                let mut tries = 0;
                loop {
                    let p = Point {
                        x: nx.sample(rng),
                        y: ny.sample(rng),
                    };
                    if d.contains(p) {
                        break p;
                    }
                    tries += 1;
                    if tries >= MAX_REJECTIONS {
                        return Err(HarnessError::Config {
                            key: "synth".into(),
                            message: "cluster lies (almost) entirely outside the domain".into(),
                        });
                    }
                }
            }
        };
        points.push(p);
    }
    Ok(PointSet::new(d, points)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn uniform_quadrants_balance() {
        let ps = synth_points(&SynthSpec::uniform(10_000, unit()), &mut RngStream::new(1, 0)).unwrap();
        let mut q = [0usize; 4];
        for p in ps.points() {
            q[(p.x >= 0.5) as usize + 2 * (p.y >= 0.5) as usize] += 1;
        }
        // binomial sd = 43.3; +-150 is ~3.5 sd
        for c in q {
            assert!((c as i64 - 2500).abs() <= 150, "{q:?}");
        }
    }

    #[test]
    fn tight_cluster_stays_near_centre() {
        let spec = SynthSpec {
            n_points: 5000,
            domain: unit(),
            clusters: vec![Cluster {
                weight: 1.0,
                center: Point { x: 0.4, y: 0.6 },
                std: 0.02,
            }],
            uniform_weight: 0.0,
        };
        let ps = synth_points(&spec, &mut RngStream::new(2, 0)).unwrap();
        let near = ps
            .points()
            .iter()
            .filter(|p| (p.x - 0.4).abs() <= 0.06 && (p.y - 0.6).abs() <= 0.06)
            .count();
        assert!(near as f64 >= 0.99 * 5000.0, "{near}");
    }

    #[test]
    fn empty_and_deterministic() {
        assert!(synth_points(&SynthSpec::uniform(0, unit()), &mut RngStream::new(3, 0))
            .unwrap()
            .is_empty());
        let a = synth_points(&SynthSpec::clustered(500), &mut RngStream::new(4, 1)).unwrap();
        let b = synth_points(&SynthSpec::clustered(500), &mut RngStream::new(4, 1)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_weights() {
        let mut spec = SynthSpec::clustered(10);
        spec.uniform_weight = 0.5;
        assert!(synth_points(&spec, &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn mapped_mixture_stays_in_new_domain() {
        let dom = Rect::new(10.0, -5.0, 30.0, 5.0).unwrap();
        let spec = SynthSpec::clustered(3000).mapped_to(dom);
        assert_eq!(spec.clusters[0].center, Point { x: 15.0, y: -2.0 });
        let ps = synth_points(&spec, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(ps.len(), 3000);
        assert_eq!(*ps.domain(), dom);
    }

    #[test]
    fn storage_like_mixture() {
        let spec = SynthSpec::storage_like(2000);
        spec.validate().unwrap();
        assert_eq!(spec.clusters.len(), 60);
        assert!(spec.clusters[0].weight > spec.clusters[59].weight);
        let ps = synth_points(&spec, &mut RngStream::new(1, 0)).unwrap();
        assert_eq!(ps.len(), 2000);
        assert_eq!(SynthKind::parse("storage_like"), Some(SynthKind::StorageLike));
    }
}
