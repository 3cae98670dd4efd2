//! Polarization observables of a population state.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::levels::EnergyLevels;
use crate::population::PopulationState;
use crate::spin::HalfInt;

/// Thermal polarizations below this make the enhancement factor undefined.
pub const EPS_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// ⟨Iz⟩/I; zero when I = 0.
    pub nuclear_polarization: f64,
    /// ⟨Sz⟩/S.
    pub electron_polarization: f64,
    /// Population of each mI manifold, mI descending.
    pub manifold_fractions: Vec<(HalfInt, f64)>,
    /// |P_n| / |P_n(thermal)|, or `None` when the thermal polarization vanishes.
    pub enhancement_eps: Option<f64>,
}

impl Metrics {
    pub fn fraction(&self, mi: HalfInt) -> Option<f64> {
        self.manifold_fractions.iter().find(|(m, _)| *m == mi).map(|(_, f)| *f)
    }
}

/// ⟨Iz⟩/I and ⟨Sz⟩/S from the dominant labels.
pub fn polarizations(p: &PopulationState, levels: &EnergyLevels) -> Result<(f64, f64)> {
    crate::kinetics::check_dim(p, levels)?;
    let sys = levels.system();
    let (mut iz, mut sz) = (0.0, 0.0);
    for (x, label) in p.as_slice().iter().zip(levels.labels()) {
        iz += x * label.mi.value();
        sz += x * label.ms.value();
    }
    let pn = if sys.i() > 0.0 { iz / sys.i() } else { 0.0 };
    Ok((pn, sz / sys.s()))
}

pub fn manifold_fractions(p: &PopulationState, levels: &EnergyLevels) -> Result<Vec<(HalfInt, f64)>> {
    crate::kinetics::check_dim(p, levels)?;
    levels
        .system()
        .nuclear_spin()
        .projections()
        .map(|mi| Ok((mi, levels.manifold(mi)?.iter().map(|&k| p[k]).sum())))
        .collect()
}

pub fn metrics(p: &PopulationState, levels: &EnergyLevels, p_thermal: &PopulationState) -> Result<Metrics> {
    if p.len() != p_thermal.len() {
        return Err(Error::DimensionMismatch {
            expected: p_thermal.len(),
            got: p.len(),
        });
    }
    let (pn, pe) = polarizations(p, levels)?;
    let (pn_th, _) = polarizations(p_thermal, levels)?;
    let enhancement_eps = (pn_th.abs() >= EPS_GUARD).then(|| pn.abs() / pn_th.abs());
    Ok(Metrics {
        nuclear_polarization: pn,
        electron_polarization: pe,
        manifold_fractions: manifold_fractions(p, levels)?,
        enhancement_eps,
    })
}
