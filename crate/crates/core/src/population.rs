//! Normalized occupation probabilities over the levels of a spin system.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries in [CLIP_FLOOR, 0) are treated as roundoff and clipped to zero.
pub const CLIP_FLOOR: f64 = -1e-12;
/// Entries below this are reported as a numerical failure.
pub const HARD_FLOOR: f64 = -1e-9;
pub const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PopulationState {
    populations: Vec<f64>,
}

impl PopulationState {
    /// Validates a probability vector exactly as given.
    pub fn new(populations: Vec<f64>) -> Result<Self> {
        let (state, clipped) = Self::from_raw(populations)?;
        if clipped > 0 {
            log::warn!("clipped {clipped} roundoff-negative population entries");
        }
        Ok(state)
    }

    /// Validates a vector produced by a numerical routine, clipping roundoff
    /// negatives and renormalizing. Returns the number of clipped entries.
    pub fn from_raw(mut populations: Vec<f64>) -> Result<(Self, usize)> {
        if populations.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let mut clipped = 0;
        for (level, p) in populations.iter_mut().enumerate() {
            if !p.is_finite() {
                return Err(Error::Integrator(format!("non-finite population at level {level}")));
            }
            if *p < 0.0 {
                if *p < HARD_FLOOR {
                    return Err(Error::NegativePopulation { level, value: *p });
                }
                if *p < CLIP_FLOOR {
                    log::debug!("population {p:e} at level {level} clipped");
                }
                *p = 0.0;
                clipped += 1;
            }
        }
        let sum: f64 = populations.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok((PopulationState { populations }, clipped))
    }

    /// Normalizes arbitrary non-negative weights.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::invalid("weights", "must be non-negative with a positive sum"));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(dim: usize) -> Self {
        PopulationState {
            populations: vec![1.0 / dim as f64; dim],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.populations
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.populations
    }

    pub fn len(&self) -> usize {
        self.populations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.populations.is_empty()
    }

    pub fn max_abs_diff(&self, other: &PopulationState) -> f64 {
        self.populations
            .iter()
            .zip(&other.populations)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_trusted(populations: Vec<f64>) -> Self {
        PopulationState { populations }
    }
}

impl std::ops::Index<usize> for PopulationState {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.populations[k]
    }
}

impl TryFrom<Vec<f64>> for PopulationState {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PopulationState::new(v)
    }
}

impl From<PopulationState> for Vec<f64> {
    fn from(p: PopulationState) -> Vec<f64> {
        p.populations
    }
}
