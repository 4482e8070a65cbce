//! Two-phase private release.
//!
//! Phase 1 spends `eps1` to pick a grid size with the exponential mechanism:
//! every candidate `g` is scored by the negated average error bound its
//! future noisy histogram would incur on the tuning workload, and sampled
//! with probability `∝ exp(eps1 * s_g / (2 Δ_g))`. Phase 2 spends `eps2` to
//! release the histogram at the chosen size with Laplace noise of scale
//! `1 / eps2`. Only the selected size and the noisy histogram are safe to
//! publish.

use alloc::vec::Vec;

use crate::bounds::{abs_score, score, SanityBound, WorkloadStats};
use crate::error::{invalid, Error, Result};
use crate::geometry::{GridSpec, Rect};
use crate::histogram::{Histogram, NoisyHistogram, PointSet};
use crate::mechanisms::{
    exp_mechanism_probabilities, exp_mechanism_sample, perturb_histogram, PrivacyAccountant,
    PrivacyBudget, RngStream,
};
use crate::sensitivity::{abs_sensitivity, SensitivityInputs};

/// Which sensitivity bound calibrates the exponential mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SensitivityMode {
    /// Per-grid bound from that grid's own overlap masses.
    #[default]
    ResponseDependent,
    /// Per-query overlap mass maximised over all candidate grids.
    GlobalMaxR,
    /// Overlap mass bounded by the cell count of the largest grid.
    GlobalMaxCells,
}

impl SensitivityMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ResponseDependent => "response_dependent",
            Self::GlobalMaxR => "global_maxr",
            Self::GlobalMaxCells => "global_maxcells",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "response_dependent" => Some(Self::ResponseDependent),
            "global_maxr" => Some(Self::GlobalMaxR),
            "global_maxcells" => Some(Self::GlobalMaxCells),
            _ => None,
        }
    }
}

/// Error measure the tuning score is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreKind {
    #[default]
    Relative,
    /// Absolute error; sensitivity is the constant 1 regardless of mode.
    Absolute,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    /// Candidate grid sizes, strictly ascending.
    pub grid_candidates: Vec<u32>,
    /// Tuning query regions.
    pub workload: Vec<Rect>,
    pub budget: PrivacyBudget,
    /// Sanity-bound fraction; `rho = delta * |D|` must exceed 1.
    pub delta: f64,
    pub sensitivity_mode: SensitivityMode,
    pub score_kind: ScoreKind,
    /// Attach per-grid scores and probabilities to the result. These are
    /// computed on the sensitive data and must not be published.
    pub debug_diagnostics: bool,
}

impl TuneConfig {
    pub fn new(grid_candidates: Vec<u32>, workload: Vec<Rect>, budget: PrivacyBudget, delta: f64) -> Result<Self> {
        let cfg = Self {
            grid_candidates,
            workload,
            budget,
            delta,
            sensitivity_mode: SensitivityMode::default(),
            score_kind: ScoreKind::default(),
            debug_diagnostics: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_candidates.is_empty() {
            return Err(Error::Empty("grid candidates"));
        }
        if self.grid_candidates.contains(&0) {
            return Err(Error::ZeroGrid);
        }
        if self.grid_candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("grid_candidates", "must be distinct and ascending"));
        }
        if self.workload.is_empty() {
            return Err(Error::Empty("workload"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.budget.release_noise().lambda
    }
}

/// Exact Phase 1 selection distribution. Everything here is computed on the
/// sensitive data.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Distribution {
    pub grids: Vec<u32>,
    pub scores: Vec<f64>,
    pub sensitivities: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// `alpha_l1[r][t] = ||alpha^{r,t}||_1`
    pub alpha_l1: Vec<Vec<f64>>,
}

pub fn phase1_distribution(ps: &PointSet, cfg: &TuneConfig) -> Result<Phase1Distribution> {
    cfg.validate()?;
    if ps.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let sanity = SanityBound::new(cfg.delta, ps.len())?;
    let lambda = cfg.lambda();
    let eps1 = cfg.budget.eps1();

    let mut scores = Vec::with_capacity(cfg.grid_candidates.len());
    let mut alpha_l1 = Vec::with_capacity(cfg.grid_candidates.len());
    for &g in &cfg.grid_candidates {
        let grid = GridSpec::new(*ps.domain(), g)?;
        let h = Histogram::build(ps, grid)?;
        let ws = WorkloadStats::compute(ps, &h, &cfg.workload)?;
        scores.push(match cfg.score_kind {
            ScoreKind::Relative => score(&ws, lambda, sanity.rho()),
            ScoreKind::Absolute => abs_score(&ws, lambda),
        });
        alpha_l1.push(ws.per_query().iter().map(|q| q.alpha_l1).collect::<Vec<_>>());
    }

    let sensitivities = match cfg.score_kind {
        ScoreKind::Absolute => alloc::vec![abs_sensitivity(); scores.len()],
        ScoreKind::Relative => {
            let inputs = SensitivityInputs::new(cfg.delta, ps.len(), lambda)?;
            match cfg.sensitivity_mode {
                SensitivityMode::ResponseDependent => alpha_l1
                    .iter()
                    .map(|a| inputs.average(a))
                    .collect::<Result<Vec<_>>>()?,
                SensitivityMode::GlobalMaxR => {
                    let max_per_query: Vec<f64> = (0..cfg.workload.len())
                        .map(|t| alpha_l1.iter().map(|a| a[t]).fold(0.0, f64::max))
                        .collect();
                    let s = inputs.global_max_over_grids(&max_per_query)?;
                    alloc::vec![s; scores.len()]
                }
                SensitivityMode::GlobalMaxCells => {
                    let g_max = *cfg.grid_candidates.last().expect("validated non-empty");
                    alloc::vec![inputs.global_max_cells(g_max)?; scores.len()]
                }
            }
        }
    };

    let probabilities = exp_mechanism_probabilities(&scores, &sensitivities, eps1)?;
    Ok(Phase1Distribution {
        grids: cfg.grid_candidates.clone(),
        scores,
        sensitivities,
        probabilities,
        alpha_l1,
    })
}

/// Per-grid internals of a tuning run. Not releasable.
#[derive(Debug, Clone, PartialEq)]
pub struct TuneDiagnostics {
    pub grids: Vec<u32>,
    pub scores: Vec<f64>,
    pub sensitivities: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub selected_g: u32,
    /// Present only with [`TuneConfig::debug_diagnostics`].
    pub diagnostics: Option<TuneDiagnostics>,
}

/// Phase 1: privately choose a grid size. Spends `eps1`.
pub fn phase1_select(ps: &PointSet, cfg: &TuneConfig, rng: &mut RngStream) -> Result<TuneResult> {
    let dist = phase1_distribution(ps, cfg)?;
    let idx = exp_mechanism_sample(rng, &dist.probabilities)?;
    let selected_g = dist.grids[idx];
    let diagnostics = cfg.debug_diagnostics.then_some(TuneDiagnostics {
        grids: dist.grids,
        scores: dist.scores,
        sensitivities: dist.sensitivities,
        probabilities: dist.probabilities,
    });
    Ok(TuneResult {
        selected_g,
        diagnostics,
    })
}

/// Phase 2: rebuild the histogram at `g_star` and add `Lap(0, 1/eps2)` per
/// cell. Spends `eps2`.
pub fn phase2_release(ps: &PointSet, g_star: u32, eps2: f64, rng: &mut RngStream) -> Result<NoisyHistogram> {
    let grid = GridSpec::new(*ps.domain(), g_star)?;
    let h = Histogram::build(ps, grid)?;
    perturb_histogram(&h, eps2, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndToEndRelease {
    pub tuning: TuneResult,
    pub histogram: NoisyHistogram,
    /// Total budget charged across both phases.
    pub epsilon_spent: f64,
}

/// Run both phases on independent substreams of `rng`.
pub fn e2e_release(ps: &PointSet, cfg: &TuneConfig, rng: &RngStream) -> Result<EndToEndRelease> {
    let mut accountant = PrivacyAccountant::new(cfg.budget.epsilon());
    let tuning = phase1_select(ps, cfg, &mut rng.fork(1))?;
    accountant.charge(cfg.budget.eps1())?;
    let histogram = phase2_release(ps, tuning.selected_g, cfg.budget.eps2(), &mut rng.fork(2))?;
    accountant.charge(cfg.budget.eps2())?;
    Ok(EndToEndRelease {
        tuning,
        histogram,
        epsilon_spent: accountant.spent(),
    })
}

/// Inputs to the exponential-mechanism utility tail bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityParams {
    /// Largest per-grid sensitivity.
    pub delta_max: f64,
    pub eps1: f64,
    pub n_candidates: usize,
    /// Number of candidates attaining the optimal score.
    pub n_opt: usize,
    pub tau: f64,
}

/// `(gap, e^-tau)` such that `Pr[s(g*) <= OPT - gap] <= e^-tau` with
/// `gap = (2 Δ / eps1) (ln(|G| / |G_opt|) + tau)`.
pub fn utility_tail_threshold(up: &UtilityParams) -> Result<(f64, f64)> {
    if !(up.delta_max > 0.0 && up.eps1 > 0.0 && up.tau > 0.0) {
        return Err(invalid("utility params", "delta_max, eps1 and tau must be positive"));
    }
    if up.n_opt == 0 || up.n_opt > up.n_candidates {
        return Err(invalid("n_opt", "must lie in 1..=n_candidates"));
    }
    let ratio = up.n_candidates as f64 / up.n_opt as f64;
    let gap = 2.0 * up.delta_max / up.eps1 * (libm::log(ratio) + up.tau);
    Ok((gap, libm::exp(-up.tau)))
}
