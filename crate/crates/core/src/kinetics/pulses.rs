//! Instantaneous pulses in the population picture; coherences are discarded.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::levels::{find_transition, transition_table, EnergyLevels};
use crate::population::PopulationState;
use crate::spin::HalfInt;
use crate::wigner::population_rotation;

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid("theta", format!("{theta} rad is outside [0, π]")));
    }
    Ok(())
}

/// Mixes the populations of one allowed transition by a rotation of angle `theta`.
pub fn apply_transition_pulse(
    p: &PopulationState,
    levels: &EnergyLevels,
    i: usize,
    j: usize,
    theta: f64,
) -> Result<PopulationState> {
    super::check_dim(p, levels)?;
    check_angle(theta)?;
    find_transition(&transition_table(levels)?, i, j)?;
    let mut out = p.as_slice().to_vec();
    if theta == PI {
        out.swap(i, j);
    } else {
        let flip = (theta / 2.0).sin().powi(2);
        let keep = 1.0 - flip;
        out[i] = p[i] * keep + p[j] * flip;
        out[j] = p[j] * keep + p[i] * flip;
    }
    Ok(PopulationState::from_trusted(out))
}

/// Non-selective rotation of the whole mS ladder inside one mI manifold.
pub fn apply_manifold_rotation(
    p: &PopulationState,
    levels: &EnergyLevels,
    mi: HalfInt,
    theta: f64,
) -> Result<PopulationState> {
    super::check_dim(p, levels)?;
    check_angle(theta)?;
    let members = levels.manifold(mi)?;
    let mut out = p.as_slice().to_vec();
    if theta == PI {
        for (a, &level) in members.iter().enumerate() {
            out[level] = p[members[members.len() - 1 - a]];
        }
    } else {
        let t = population_rotation(levels.system().electron_spin(), theta);
        for (a, &level) in members.iter().enumerate() {
            out[level] = members.iter().enumerate().map(|(b, &src)| t[a][b] * p[src]).sum();
        }
    }
    Ok(PopulationState::from_trusted(out))
}
