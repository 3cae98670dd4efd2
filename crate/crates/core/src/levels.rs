//! Labeled energy levels and the spectroscopy derived from them: thermal
//! populations, allowed transitions, ENDOR lines and EPR resonance fields.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::{boltzmann_exponent, MU_B_OVER_H};
use crate::eigen::{diagonalize, Eigensystem};
use crate::error::{Error, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::population::PopulationState;
use crate::spin::{HalfInt, Label, SpinSystem};

/// ENDOR lines closer than this (MHz) are reported as one degenerate line.
pub const ENDOR_MERGE_MHZ: f64 = 5e-3;

/// Diagonalized levels of a spin system at one field, ascending in energy.
#[derive(Debug, Clone)]
pub struct EnergyLevels {
    system: SpinSystem,
    field: f64,
    energies: Vec<f64>,
    labels: Vec<Label>,
    vectors: Vec<Vec<Complex64>>,
}

impl EnergyLevels {
    /// Builds, diagonalizes and labels the Hamiltonian at `field` tesla.
    pub fn compute(system: &SpinSystem, field: f64) -> Result<Self> {
        let h = build_hamiltonian(system, field)?;
        let eig = diagonalize(&h)?;
        Self::from_eigensystem(system, field, eig)
    }

    /// Assigns each eigenvector the basis state carrying its largest component.
    pub fn from_eigensystem(system: &SpinSystem, field: f64, eig: Eigensystem) -> Result<Self> {
        let basis = system.basis();
        if eig.values.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: eig.values.len(),
            });
        }
        let mut owner: HashMap<Label, usize> = HashMap::new();
        let mut labels = Vec::with_capacity(basis.len());
        for (level, v) in eig.vectors.iter().enumerate() {
            let dominant = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
                .map(|(k, _)| k)
                .expect("non-empty eigenvector");
            let label = basis[dominant];
            if let Some(&first) = owner.get(&label) {
                return Err(Error::LabelAmbiguity {
                    first,
                    second: level,
                    label,
                });
            }
            owner.insert(label, level);
            labels.push(label);
        }
        Ok(EnergyLevels {
            system: *system,
            field,
            energies: eig.values,
            labels,
            vectors: eig.vectors,
        })
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn index_of(&self, label: Label) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| *l == label)
            .ok_or(Error::UnknownLabel(label))
    }

    pub fn energy_of(&self, label: Label) -> Result<f64> {
        Ok(self.energies[self.index_of(label)?])
    }

    /// Level indices of one mI manifold ordered by mS descending.
    pub fn manifold(&self, mi: HalfInt) -> Result<Vec<usize>> {
        if !self.system.has_mi(mi) {
            return Err(Error::InvalidManifold(mi.value()));
        }
        self.system
            .electron_spin()
            .projections()
            .map(|ms| self.index_of(Label::new(ms, mi)))
            .collect()
    }
}

/// Boltzmann populations p_i ∝ exp(−h·E_i/(k_B·T)).
pub fn thermal_populations(levels: &EnergyLevels, temperature: f64) -> Result<PopulationState> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::invalid("temperature", format!("{temperature} K must be positive")));
    }
    let e_min = levels.energies().iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = levels
        .energies()
        .iter()
        .map(|e| (-boltzmann_exponent(e - e_min, temperature)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    Ok(PopulationState::from_trusted(weights.into_iter().map(|w| w / z).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TransitionKind {
    Epr,
    Nmr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transition {
    pub kind: TransitionKind,
    /// Lower-energy endpoint.
    pub level_lo: usize,
    pub level_hi: usize,
    /// E_hi − E_lo, MHz.
    pub frequency: f64,
    pub label_lo: Label,
    pub label_hi: Label,
}

impl Transition {
    /// The mS shared by an NMR transition, or the mI shared by an EPR one.
    pub fn shared_projection(&self) -> HalfInt {
        match self.kind {
            TransitionKind::Epr => self.label_lo.mi,
            TransitionKind::Nmr => self.label_lo.ms,
        }
    }

    pub fn connects(&self, i: usize, j: usize) -> bool {
        (self.level_lo == i && self.level_hi == j) || (self.level_lo == j && self.level_hi == i)
    }
}

fn classify(a: Label, b: Label) -> Option<TransitionKind> {
    let dms = (a.ms.twice() - b.ms.twice()).abs();
    let dmi = (a.mi.twice() - b.mi.twice()).abs();
    match (dms, dmi) {
        (2, 0) => Some(TransitionKind::Epr),
        (0, 2) => Some(TransitionKind::Nmr),
        _ => None,
    }
}

/// All magnetic-dipole allowed transitions: EPR entries first, then NMR, each
/// ordered by their endpoints.
pub fn transition_table(levels: &EnergyLevels) -> Result<Vec<Transition>> {
    let n = levels.len();
    let mut epr = Vec::new();
    let mut nmr = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let Some(kind) = classify(levels.labels[i], levels.labels[j]) else {
                continue;
            };
            let frequency = levels.energies[j] - levels.energies[i];
            if frequency <= 0.0 {
                return Err(Error::invalid(
                    "levels",
                    format!("transition {i}-{j} is degenerate; populations are ill-defined"),
                ));
            }
            let t = Transition {
                kind,
                level_lo: i,
                level_hi: j,
                frequency,
                label_lo: levels.labels[i],
                label_hi: levels.labels[j],
            };
            match kind {
                TransitionKind::Epr => epr.push(t),
                TransitionKind::Nmr => nmr.push(t),
            }
        }
    }
    epr.extend(nmr);
    Ok(epr)
}

/// Finds an allowed transition joining levels `i` and `j`.
pub fn find_transition(table: &[Transition], i: usize, j: usize) -> Result<&Transition> {
    table
        .iter()
        .find(|t| t.connects(i, j))
        .ok_or(Error::InvalidTransition(i, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndorLine {
    pub frequency: f64,
    /// Number of NMR transitions merged into this line.
    pub multiplicity: usize,
}

/// NMR frequencies grouped by electron projection, from the exact levels.
///
/// Lines within one mS manifold closer than `merge_mhz` are merged; the merged
/// frequency is the mean of its members.
pub fn endor_frequencies_merged(
    levels: &EnergyLevels,
    merge_mhz: f64,
) -> Result<BTreeMap<HalfInt, Vec<EndorLine>>> {
    let mut by_ms: BTreeMap<HalfInt, Vec<f64>> = BTreeMap::new();
    for t in transition_table(levels)?.iter().filter(|t| t.kind == TransitionKind::Nmr) {
        by_ms.entry(t.shared_projection()).or_default().push(t.frequency);
    }
    Ok(by_ms
        .into_iter()
        .map(|(ms, mut freqs)| {
            freqs.sort_by(f64::total_cmp);
            let mut lines: Vec<(f64, usize)> = Vec::new();
            for f in freqs {
                match lines.last_mut() {
                    Some((sum, count)) if (f - *sum / *count as f64).abs() < merge_mhz => {
                        *sum += f;
                        *count += 1;
                    }
                    _ => lines.push((f, 1)),
                }
            }
            let lines = lines
                .into_iter()
                .map(|(sum, count)| EndorLine {
                    frequency: sum / count as f64,
                    multiplicity: count,
                })
                .collect();
            (ms, lines)
        })
        .collect())
}

/// [`endor_frequencies_merged`] at field `field` with the default merge threshold.
pub fn endor_frequencies(
    sys: &SpinSystem,
    field: f64,
) -> Result<BTreeMap<HalfInt, Vec<EndorLine>>> {
    if !(field > 0.0) {
        return Err(Error::invalid("field", "ENDOR frequencies need a positive field"));
    }
    endor_frequencies_merged(&EnergyLevels::compute(sys, field)?, ENDOR_MERGE_MHZ)
}

/// Mean exact EPR frequency of the mI manifold at `field`.
fn manifold_epr_frequency(sys: &SpinSystem, field: f64, mi: HalfInt) -> Result<f64> {
    let levels = EnergyLevels::compute(sys, field)?;
    let freqs: Vec<f64> = transition_table(&levels)?
        .into_iter()
        .filter(|t| t.kind == TransitionKind::Epr && t.label_lo.mi == mi)
        .map(|t| t.frequency)
        .collect();
    Ok(freqs.iter().sum::<f64>() / freqs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EprLine {
    pub mi: HalfInt,
    /// Resonance field, tesla.
    pub field: f64,
}

/// Resonance field of each hyperfine component at a fixed microwave frequency,
/// ordered by mI descending.
pub fn epr_lines(sys: &SpinSystem, microwave_mhz: f64) -> Result<Vec<EprLine>> {
    if !(microwave_mhz.is_finite() && microwave_mhz > 0.0) {
        return Err(Error::invalid("microwave_freq", "must be positive"));
    }
    let gyro = sys.g_factor() * MU_B_OVER_H;
    sys.nuclear_spin()
        .projections()
        .map(|mi| {
            let unreachable = Error::Unreachable {
                mi: mi.value(),
                freq_mhz: microwave_mhz,
            };
            let guess = (microwave_mhz - sys.hyperfine_a() * mi.value()) / gyro;
            if guess <= 0.0 {
                return Err(unreachable);
            }
            let f = |b: f64| manifold_epr_frequency(sys, b, mi).map(|nu| nu - microwave_mhz);
            let (mut lo, mut hi) = (guess * 0.9, guess * 1.1);
            let (mut f_lo, mut f_hi) = (f(lo)?, f(hi)?);
            let mut widen = 0;
            while f_lo * f_hi > 0.0 {
                widen += 1;
                if widen > 20 {
                    return Err(unreachable);
                }
                lo *= 0.5;
                hi *= 2.0;
                f_lo = f(lo)?;
                f_hi = f(hi)?;
            }
            Ok(EprLine {
                mi,
                field: bisect(f, lo, hi, f_lo)?,
            })
        })
        .collect()
}

fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, mut f_lo: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-15 * mid {
            return Ok(mid);
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The hyperfine component with the largest resonance field.
pub fn high_field_mi(sys: &SpinSystem, microwave_mhz: f64) -> Result<HalfInt> {
    let lines = epr_lines(sys, microwave_mhz)?;
    Ok(lines
        .iter()
        .max_by(|a, b| a.field.total_cmp(&b.field))
        .map(|l| l.mi)
        .expect("at least one hyperfine component"))
}
