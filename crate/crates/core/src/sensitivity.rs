//! Sensitivity bounds for the tuning score.
//!
//! With `n = |D|`, `rho = delta * n` and mean overlap mass
//! `A = mean_t ||alpha^{r,t}||_1` for candidate grid `r`, the relative-error
//! score changes by at most
//!
//! ```text
//! 1 / (delta (delta n + 1)) + lambda A / (delta n (delta n + 1)) + 1 / (delta n + delta)
//! ```
//!
//! when one point is added. The global variants replace `A` with the mean of
//! per-query maxima over all candidate grids, or with `max g^2`. The absolute
//! score has sensitivity 1.
//!
//! `rho` is never passed in; it is always derived from `delta` and `n`.

use crate::error::{invalid, Error, Result};

/// Inputs to the relative-score sensitivity of one candidate grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityInputs {
    pub delta: f64,
    pub n: usize,
    pub lambda: f64,
}

impl SensitivityInputs {
    pub fn new(delta: f64, n: usize, lambda: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        if n == 0 {
            return Err(invalid("n", "dataset must be non-empty"));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(invalid("lambda", "must be finite and positive"));
        }
        Ok(Self { delta, n, lambda })
    }

    /// The bound with mean overlap mass `mean_alpha_l1`.
    fn evaluate(&self, mean_alpha_l1: f64) -> f64 {
        let d = self.delta;
        let dn = d * self.n as f64;
        1.0 / (d * (dn + 1.0)) + self.lambda * mean_alpha_l1 / (dn * (dn + 1.0)) + 1.0 / (dn + d)
    }

    /// Single query with overlap mass `alpha_l1`.
    pub fn single(&self, alpha_l1: f64) -> Result<f64> {
        check_alpha(alpha_l1)?;
        Ok(self.evaluate(alpha_l1))
    }

    /// Averaged over a workload; `alpha_l1_per_query[t] = ||alpha^{r,t}||_1`.
    pub fn average(&self, alpha_l1_per_query: &[f64]) -> Result<f64> {
        Ok(self.evaluate(mean_alpha(alpha_l1_per_query)?))
    }

    /// Global variant: `max_over_grids[t] = max_r ||alpha^{r,t}||_1`.
    pub fn global_max_over_grids(&self, max_over_grids: &[f64]) -> Result<f64> {
        self.average(max_over_grids)
    }

    /// Global variant bounding every overlap mass by the largest cell count.
    pub fn global_max_cells(&self, g_max: u32) -> Result<f64> {
        if g_max == 0 {
            return Err(invalid("g_max", "must be at least 1"));
        }
        let cells = f64::from(g_max) * f64::from(g_max);
        Ok(self.evaluate(cells))
    }
}

fn check_alpha(a: f64) -> Result<()> {
    if a.is_finite() && a >= 0.0 {
        Ok(())
    } else {
        Err(invalid("alpha_l1", "must be finite and non-negative"))
    }
}

fn mean_alpha(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("alpha_l1_per_query"));
    }
    for a in values {
        check_alpha(*a)?;
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

pub fn rel_sensitivity_single(delta: f64, n: usize, lambda: f64, alpha_l1: f64) -> Result<f64> {
    SensitivityInputs::new(delta, n, lambda)?.single(alpha_l1)
}

pub fn rel_sensitivity_avg(delta: f64, n: usize, lambda: f64, alpha_l1_per_query: &[f64]) -> Result<f64> {
    SensitivityInputs::new(delta, n, lambda)?.average(alpha_l1_per_query)
}

pub fn rel_sensitivity_global_maxr(
    delta: f64,
    n: usize,
    lambda: f64,
    max_over_grids_alpha_l1_per_query: &[f64],
) -> Result<f64> {
    SensitivityInputs::new(delta, n, lambda)?.global_max_over_grids(max_over_grids_alpha_l1_per_query)
}

pub fn rel_sensitivity_global_maxcells(delta: f64, n: usize, lambda: f64, g_max: u32) -> Result<f64> {
    SensitivityInputs::new(delta, n, lambda)?.global_max_cells(g_max)
}

/// Sensitivity of the absolute-error score: each overlap weight moves the
/// aggregation term by `|1 - alpha_i| <= 1`.
pub fn abs_sensitivity() -> f64 {
    1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    const D: f64 = 0.1;

    #[test]
    fn single_query_examples() {
        let s = rel_sensitivity_single(D, 100, 1.0, 4.0).unwrap();
        let expected = 1.0 / 1.1 + 4.0 / 110.0 + 1.0 / 10.1;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 1.044464).abs() < 5e-7);

        let zero = rel_sensitivity_single(D, 100, 1.0, 0.0).unwrap();
        assert!((zero - (1.0 / 1.1 + 1.0 / 10.1)).abs() < 1e-12);

        let big = rel_sensitivity_single(D, 1_000_000, 1.0, 4.0).unwrap();
        // order 1e-4: 1/10000.1 + 4/(1e5 * 100001) + 1/100000.1
        assert!((big - 1.099_994e-4).abs() < 1e-10, "{big}");
    }

    #[test]
    fn average_examples() {
        let single = rel_sensitivity_single(D, 100, 1.0, 4.0).unwrap();
        assert_eq!(rel_sensitivity_avg(D, 100, 1.0, &[4.0]).unwrap(), single);
        assert!((rel_sensitivity_avg(D, 100, 1.0, &[2.0, 6.0]).unwrap() - single).abs() < 1e-15);
        assert!((rel_sensitivity_avg(D, 100, 1.0, &[4.0; 7]).unwrap() - single).abs() < 1e-15);
        assert_eq!(rel_sensitivity_avg(D, 100, 1.0, &[]), Err(Error::Empty("alpha_l1_per_query")));
    }

    #[test]
    fn global_examples() {
        let avg = rel_sensitivity_avg(D, 100, 1.0, &[2.0, 6.0]).unwrap();
        assert_eq!(rel_sensitivity_global_maxr(D, 100, 1.0, &[2.0, 6.0]).unwrap(), avg);
        assert!(rel_sensitivity_global_maxr(D, 100, 1.0, &[4.0, 8.0]).unwrap() > avg);

        let cells = rel_sensitivity_global_maxcells(D, 100, 1.0, 8).unwrap();
        assert!((cells - (1.0 / 1.1 + 64.0 / 110.0 + 1.0 / 10.1)).abs() < 1e-12);
        assert!((cells - 1.589919).abs() < 5e-7);
        let one = rel_sensitivity_global_maxcells(D, 100, 1.0, 1).unwrap();
        assert!((one - (1.0 / 1.1 + 1.0 / 110.0 + 1.0 / 10.1)).abs() < 1e-12);
        assert!(cells > rel_sensitivity_single(D, 100, 1.0, 4.0).unwrap());
        assert!(rel_sensitivity_global_maxcells(D, 100, 1.0, 0).is_err());
    }

    #[test]
    fn parameter_domain() {
        assert!(rel_sensitivity_single(0.0, 100, 1.0, 1.0).is_err());
        assert!(rel_sensitivity_single(1.0, 100, 1.0, 1.0).is_err());
        assert!(rel_sensitivity_single(D, 0, 1.0, 1.0).is_err());
        assert!(rel_sensitivity_single(D, 100, 0.0, 1.0).is_err());
        assert!(rel_sensitivity_single(D, 100, 1.0, -1.0).is_err());
        assert_eq!(abs_sensitivity(), 1.0);
    }

    #[test]
    fn monotonicity() {
        let base = rel_sensitivity_single(D, 500, 1.0, 3.0).unwrap();
        assert!(rel_sensitivity_single(D, 1000, 1.0, 3.0).unwrap() <= base);
        assert!(rel_sensitivity_single(D, 500, 2.0, 3.0).unwrap() >= base);
        assert!(rel_sensitivity_single(D, 500, 1.0, 5.0).unwrap() >= base);
        let mut prev = 0.0;
        for delta in [0.5, 0.2, 0.1, 0.05, 0.01, 0.005] {
            let s = rel_sensitivity_single(delta, 500, 1.0, 3.0).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }
}
