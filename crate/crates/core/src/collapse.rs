//! Stochastic collapse of a two-level superposition in discrete time.
//!
//! The branch measure `ρ₁` performs an unbiased walk with increment `s = ΔE/E_p` per
//! Planck time and is absorbed at 0 or 1. Near a barrier the step is replaced by a two-point
//! move that keeps both the mean and the variance `s²` of the increment, so the walk
//! is an exact martingale and the mean absorption time is `ρ₀(1-ρ₀)/s²` steps. Only states
//! closer to a barrier than `ρ(1-ρ) < s²` jump straight to 0 or 1 with a smaller variance;
//! walks on the lattice `ρ₀ + k·s` with `ρ₀/s` integer or half-integer never reach them.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::PhysicalConstants;
use crate::error::{DqmError, Result};
use crate::sampler::SeededRng;

/// Distance at which `ρ₁` is snapped onto a barrier.
pub const ABSORPTION_TOLERANCE: f64 = 1e-12;

/// `ℏ/ΔE`.
pub fn oscillation_period(delta_e: f64, hbar: f64) -> Result<f64> {
    if !(delta_e.is_finite() && delta_e > 0.0) {
        return Err(DqmError::InvalidInput(format!("energy gap must be positive, got {delta_e}")));
    }
    Ok(hbar / delta_e)
}

/// True iff `0 ≤ ΔE ≤ E_p`.
pub fn superposition_admissible(delta_e: f64, constants: &PhysicalConstants) -> bool {
    delta_e >= 0.0 && delta_e <= constants.planck_energy()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelCollapseState {
    rho1: f64,
    delta_e: f64,
    constants: PhysicalConstants,
    step_size: f64,
}

impl TwoLevelCollapseState {
    pub fn new(rho1: f64, delta_e: f64, constants: PhysicalConstants) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho1) {
            return Err(DqmError::InvalidInput(format!("branch measure must lie in [0, 1], got {rho1}")));
        }
        if !(delta_e.is_finite() && delta_e > 0.0) {
            return Err(DqmError::InvalidInput(format!("energy gap must be positive, got {delta_e}")));
        }
        if !superposition_admissible(delta_e, &constants) {
            return Err(DqmError::Inadmissible {
                delta_e,
                planck_energy: constants.planck_energy(),
            });
        }
        Ok(Self {
            rho1,
            delta_e,
            constants,
            step_size: delta_e / constants.planck_energy(),
        })
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn rho2(&self) -> f64 {
        1.0 - self.rho1
    }

    pub fn delta_e(&self) -> f64 {
        self.delta_e
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn is_absorbed(&self) -> bool {
        self.rho1 == 0.0 || self.rho1 == 1.0
    }

    pub fn outcome(&self) -> Option<Branch> {
        if self.rho1 == 1.0 {
            Some(Branch::One)
        } else if self.rho1 == 0.0 {
            Some(Branch::Two)
        } else {
            None
        }
    }

    pub fn oscillation_period(&self) -> f64 {
        self.constants.hbar() / self.delta_e
    }
}

/// Mean-zero move of `r ∈ (0, ½]` toward the barrier at 0, with variance `s²`.
fn lower_move(r: f64, s: f64, u: f64) -> f64 {
    let s2 = s * s;
    if r >= s {
        if u < 0.5 {
            r - s
        } else {
            r + s
        }
    } else if r * (1.0 - r) >= s2 {
        let up = r + s2 / r;
        if u < r / up {
            up
        } else {
            0.0
        }
    } else if u < r {
        1.0
    } else {
        0.0
    }
}

fn snap(r: f64) -> f64 {
    if r <= ABSORPTION_TOLERANCE {
        0.0
    } else if r >= 1.0 - ABSORPTION_TOLERANCE {
        1.0
    } else {
        r
    }
}

/// Advances the walk by one Planck time.
pub fn collapse_step(state: &TwoLevelCollapseState, rng: &mut impl Rng) -> Result<TwoLevelCollapseState> {
    if state.is_absorbed() {
        return Err(DqmError::State(format!("state already collapsed (rho1 = {})", state.rho1)));
    }
    let u: f64 = rng.gen();
    let r = state.rho1;
    let next = if r <= 0.5 {
        lower_move(r, state.step_size, u)
    } else {
        1.0 - lower_move(1.0 - r, state.step_size, u)
    };
    Ok(TwoLevelCollapseState {
        rho1: snap(next),
        ..*state
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CollapseOutcome {
    Branch1,
    Branch2,
    Timeout,
}

/// Steps until absorption; hitting `max_steps` first reports a timeout.
pub fn run_until_collapse(
    state: &TwoLevelCollapseState,
    rng: &mut impl Rng,
    max_steps: u64,
) -> Result<(u64, CollapseOutcome)> {
    let mut current = *state;
    let mut steps = 0;
    loop {
        match current.outcome() {
            Some(Branch::One) => return Ok((steps, CollapseOutcome::Branch1)),
            Some(Branch::Two) => return Ok((steps, CollapseOutcome::Branch2)),
            None if steps >= max_steps => return Ok((steps, CollapseOutcome::Timeout)),
            None => {
                current = collapse_step(&current, rng)?;
                steps += 1;
            }
        }
    }
}

/// Closed-form mean absorption time in steps (exact while the walk keeps `ρ(1-ρ) ≥ s²`).
pub fn expected_collapse_steps(rho1: f64, step_size: f64) -> f64 {
    rho1 * (1.0 - rho1) / (step_size * step_size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub steps: u64,
    pub outcome: CollapseOutcome,
}

/// Independent trials, trial `i` seeded from `(seed, i)`.
pub fn collapse_trials(
    state: &TwoLevelCollapseState,
    trials: u64,
    seed: u64,
    max_steps: u64,
) -> Result<Vec<TrialRecord>> {
    (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = SeededRng::for_trial(seed, trial);
            let (steps, outcome) = run_until_collapse(state, &mut rng, max_steps)?;
            Ok(TrialRecord { trial, steps, outcome })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapseStatistics {
    /// Mean collapse time, steps × `T_p`.
    pub tau_c: f64,
    pub stderr: f64,
    pub mean_steps: f64,
    pub steps_stderr: f64,
    pub branch1_fraction: f64,
    pub trials: u64,
}

pub fn summarize(records: &[TrialRecord], planck_time: f64) -> Result<CollapseStatistics> {
    let n = records.len();
    if n < 2 {
        return Err(DqmError::InvalidInput("need at least two trials".into()));
    }
    let timeouts = records.iter().filter(|r| r.outcome == CollapseOutcome::Timeout).count();
    if timeouts > 0 {
        return Err(DqmError::Timeout(format!("{timeouts} of {n} trials did not collapse")));
    }
    let nf = n as f64;
    let mean = records.iter().map(|r| r.steps as f64).sum::<f64>() / nf;
    let var = records.iter().map(|r| (r.steps as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let se = (var / nf).sqrt();
    let branch1 = records.iter().filter(|r| r.outcome == CollapseOutcome::Branch1).count() as f64 / nf;
    Ok(CollapseStatistics {
        tau_c: mean * planck_time,
        stderr: se * planck_time,
        mean_steps: mean,
        steps_stderr: se,
        branch1_fraction: branch1,
        trials: n as u64,
    })
}

/// Default step budget: far beyond the mean so that timeouts signal a real problem.
pub fn default_max_steps(rho1: f64, step_size: f64) -> u64 {
    let mean = expected_collapse_steps(rho1.clamp(0.01, 0.99), step_size);
    (1000.0 * mean).clamp(1e4, 1e12) as u64
}

/// Monte Carlo `τ_c` at gap `ΔE` from `ρ₁ = rho1_0`.
pub fn mean_collapse_time(
    delta_e: f64,
    rho1_0: f64,
    trials: u64,
    constants: &PhysicalConstants,
    seed: u64,
) -> Result<CollapseStatistics> {
    if trials < 100 {
        return Err(DqmError::InvalidInput(format!("need at least 100 trials, got {trials}")));
    }
    let state = TwoLevelCollapseState::new(rho1_0, delta_e, *constants)?;
    let records = collapse_trials(&state, trials, seed, default_max_steps(rho1_0, state.step_size))?;
    summarize(&records, constants.planck_time())
}
