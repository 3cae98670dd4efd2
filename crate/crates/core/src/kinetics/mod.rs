//! Population rate equations: spin-lattice relaxation, saturating CW drives
//! and instantaneous pulses acting on the level populations.
//!
//! Generators use the column convention `R[(to, from)]`, so dp/dt = R·p and
//! every column sums to zero.

mod evolve;
mod pulses;
mod steady;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::constants::boltzmann_exponent;
use crate::error::{Error, Result};
use crate::levels::{transition_table, EnergyLevels, Transition, TransitionKind};
use crate::population::PopulationState;

pub use evolve::{evolve, evolve_sampled, Integrator, Sampled};
pub use pulses::{apply_manifold_rotation, apply_transition_pulse};
pub use steady::{closed_classes, steady_state};

/// Relaxation times and bath temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    /// Electronic spin-lattice relaxation time, s.
    pub t1e: f64,
    /// Nuclear spin-lattice relaxation time, s; `f64::INFINITY` disables nuclear relaxation.
    pub t1n: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl RateModel {
    pub fn new(t1e: f64, t1n: f64, temperature: f64) -> Result<Self> {
        let model = RateModel {
            t1e,
            t1n,
            temperature,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1e.is_finite() && self.t1e > 0.0) {
            return Err(Error::invalid("t1e", format!("{} s must be positive and finite", self.t1e)));
        }
        if !(self.t1n > 0.0) {
            return Err(Error::invalid("t1n", format!("{} s must be positive or infinite", self.t1n)));
        }
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::invalid("temperature", format!("{} K must be positive", self.temperature)));
        }
        Ok(())
    }

    pub fn without_nuclear_relaxation(self) -> Self {
        RateModel {
            t1n: f64::INFINITY,
            ..self
        }
    }
}

/// Symmetric induced-transition rate applied to a set of transitions of one kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drive {
    /// Indices into [`transition_table`].
    pub targets: Vec<usize>,
    /// 1/s.
    pub rate_w: f64,
}

impl Drive {
    pub fn new(targets: Vec<usize>, rate_w: f64) -> Self {
        Drive { targets, rate_w }
    }

    fn validate(&self, table: &[Transition]) -> Result<()> {
        if !(self.rate_w.is_finite() && self.rate_w >= 0.0) {
            return Err(Error::invalid("rate_w", format!("{} must be non-negative", self.rate_w)));
        }
        let first = self.targets.first().ok_or(Error::EmptyDrive)?;
        let kind = table
            .get(*first)
            .ok_or(Error::TransitionOutOfRange {
                index: *first,
                len: table.len(),
            })?
            .kind;
        for &t in &self.targets {
            let tr = table.get(t).ok_or(Error::TransitionOutOfRange {
                index: t,
                len: table.len(),
            })?;
            if tr.kind != kind {
                return Err(Error::MixedDrive);
            }
        }
        Ok(())
    }
}

/// Continuous-time Markov generator over the levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    matrix: DMatrix<f64>,
}

impl Generator {
    /// Wraps a matrix after checking it is a proper generator.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let g = Generator { matrix };
        g.validate()?;
        Ok(g)
    }

    pub fn zeros(dim: usize) -> Self {
        Generator {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Rate of the jump `from → to`.
    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.matrix[(to, from)]
    }

    /// Adds a one-way rate and keeps the column balanced.
    pub fn add_rate(&mut self, from: usize, to: usize, rate: f64) {
        self.matrix[(to, from)] += rate;
        self.matrix[(from, from)] -= rate;
    }

    /// Adds a symmetric rate between two levels.
    pub fn add_pair(&mut self, i: usize, j: usize, rate: f64) {
        self.add_rate(i, j, rate);
        self.add_rate(j, i, rate);
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(p)).iter().copied().collect()
    }

    /// Largest absolute entry.
    pub fn norm(&self) -> f64 {
        self.matrix.amax()
    }

    /// Columns sum to zero within 1e-12 relative and off-diagonals are non-negative.
    pub fn validate(&self) -> Result<()> {
        let n = self.matrix.nrows();
        if self.matrix.ncols() != n {
            return Err(Error::InvalidGenerator("matrix is not square".into()));
        }
        let scale = self.norm().max(f64::MIN_POSITIVE);
        for c in 0..n {
            let mut sum = 0.0;
            for r in 0..n {
                let x = self.matrix[(r, c)];
                if !x.is_finite() {
                    return Err(Error::InvalidGenerator(format!("entry ({r}, {c}) is not finite")));
                }
                if r != c && x < 0.0 {
                    return Err(Error::InvalidGenerator(format!("negative rate {x} at ({r}, {c})")));
                }
                sum += x;
            }
            if sum.abs() > 1e-12 * scale * n as f64 {
                return Err(Error::InvalidGenerator(format!("column {c} sums to {sum:e}")));
            }
        }
        Ok(())
    }
}

/// Downward and upward relaxation rates of one pair with k↓ + k↑ = 1/T1 and
/// k↑/k↓ = exp(−hΔE/k_BT).
pub fn pair_relaxation_rates(gap_mhz: f64, t1: f64, temperature: f64) -> (f64, f64) {
    let ratio = (-boltzmann_exponent(gap_mhz, temperature)).exp();
    let down = 1.0 / (t1 * (1.0 + ratio));
    (down, ratio * down)
}

/// Relaxation on every allowed pair plus the symmetric drive terms.
pub fn build_rate_matrix(levels: &EnergyLevels, model: &RateModel, drives: &[Drive]) -> Result<Generator> {
    model.validate()?;
    let table = transition_table(levels)?;
    for d in drives {
        d.validate(&table)?;
    }
    let mut g = Generator::zeros(levels.len());
    for t in &table {
        let t1 = match t.kind {
            TransitionKind::Epr => model.t1e,
            TransitionKind::Nmr => model.t1n,
        };
        if t1.is_infinite() {
            continue;
        }
        let (down, up) = pair_relaxation_rates(t.frequency, t1, model.temperature);
        g.add_rate(t.level_hi, t.level_lo, down);
        g.add_rate(t.level_lo, t.level_hi, up);
    }
    for d in drives {
        if d.rate_w == 0.0 {
            continue;
        }
        for &k in &d.targets {
            g.add_pair(table[k].level_lo, table[k].level_hi, d.rate_w);
        }
    }
    Ok(g)
}

/// Transition indices of one kind whose frequency lies in `[f_lo, f_hi]` MHz.
pub fn transitions_in_band(table: &[Transition], kind: TransitionKind, f_lo: f64, f_hi: f64) -> Vec<usize> {
    table
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == kind && t.frequency >= f_lo && t.frequency <= f_hi)
        .map(|(k, _)| k)
        .collect()
}

/// Validates an external population vector against a level scheme.
pub fn check_dim(p: &PopulationState, levels: &EnergyLevels) -> Result<()> {
    if p.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            got: p.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{H_OVER_KB, MU_B_OVER_H};
    use crate::levels::thermal_populations;
    use crate::spin::SpinSystem;
    use approx::assert_abs_diff_eq;

    fn two_level() -> EnergyLevels {
        let g = 240_000.0 / (MU_B_OVER_H * 8.57);
        let sys = SpinSystem::new(0.5, 0.0, g, 0.0, 0.0).unwrap();
        EnergyLevels::compute(&sys, 8.57).unwrap()
    }

    #[test]
    fn two_level_detailed_balance() {
        let levels = two_level();
        let model = RateModel::new(270.0, f64::INFINITY, 4.0).unwrap();
        let g = build_rate_matrix(&levels, &model, &[]).unwrap();
        let up = g.rate(0, 1);
        let down = g.rate(1, 0);
        let x = 240_000.0 * H_OVER_KB / 4.0;
        assert_abs_diff_eq!(up / down, (-x).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(up / down, 0.0562, epsilon = 1e-4);
        assert_abs_diff_eq!(up + down, 1.0 / 270.0, epsilon = 1e-15);
    }

    #[test]
    fn hot_limit_is_symmetric() {
        let (down, up) = pair_relaxation_rates(240_000.0, 2.0, 1e12);
        assert_abs_diff_eq!(down, 0.25, epsilon = 1e-6);
        assert_abs_diff_eq!(up, 0.25, epsilon = 1e-6);
    }

    #[test]
    fn zero_rate_drive_changes_nothing() {
        let levels = two_level();
        let model = RateModel::new(10.0, f64::INFINITY, 4.0).unwrap();
        let bare = build_rate_matrix(&levels, &model, &[]).unwrap();
        let driven = build_rate_matrix(&levels, &model, &[Drive::new(vec![0], 0.0)]).unwrap();
        assert_eq!(bare, driven);
    }

    #[test]
    fn drive_validation() {
        let sys = SpinSystem::new(1.5, 1.0, 2.00087, 3.0747, 15.76).unwrap();
        let levels = EnergyLevels::compute(&sys, 8.57).unwrap();
        let model = RateModel::new(10.0, f64::INFINITY, 4.0).unwrap();
        let err = |d: Drive| build_rate_matrix(&levels, &model, &[d]).unwrap_err();
        assert!(matches!(err(Drive::new(vec![0, 9], 1.0)), Error::MixedDrive));
        assert!(matches!(err(Drive::new(vec![17], 1.0)), Error::TransitionOutOfRange { .. }));
        assert!(matches!(err(Drive::new(vec![], 1.0)), Error::EmptyDrive));
    }

    #[test]
    fn boltzmann_is_in_the_kernel() {
        let sys = SpinSystem::new(1.5, 1.0, 2.00087, 3.0747, 15.76).unwrap();
        let levels = EnergyLevels::compute(&sys, 8.57).unwrap();
        let model = RateModel::new(270.0, 86_400.0, 4.0).unwrap();
        let g = build_rate_matrix(&levels, &model, &[]).unwrap();
        let p = thermal_populations(&levels, 4.0).unwrap();
        let r = g.apply(p.as_slice());
        assert!(r.iter().all(|x| x.abs() < 1e-10 * g.norm()));
    }

    #[test]
    fn rejects_bad_models() {
        assert!(RateModel::new(0.0, 1.0, 4.0).is_err());
        assert!(RateModel::new(1.0, -1.0, 4.0).is_err());
        assert!(RateModel::new(1.0, f64::INFINITY, 0.0).is_err());
    }
}
