//! DNP experiments as ordered step lists, and the two ENDOR-based recipes:
//! continuous-wave (selective EPR saturation with an RF sweep) and pulsed
//! (electron π, nuclear π, electronic relaxation wait, optionally cycled).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinetics::{
    apply_manifold_rotation, apply_transition_pulse, build_rate_matrix, evolve_sampled,
    steady_state, transitions_in_band, Drive, Generator, RateModel,
};
use crate::levels::{thermal_populations, transition_table, EnergyLevels, Transition, TransitionKind};
use crate::population::PopulationState;
use crate::spin::{HalfInt, Label};

/// RF band swept by the CW recipe, MHz.
pub const PONSEE_RF_BAND: (f64, f64) = (1.0, 4.0);
/// Ideal drive strength in units of 1/T1e.
pub const IDEAL_RATE_FACTOR: f64 = 1e6;
/// Default pulsed-recipe relaxation wait in units of T1e.
pub const DEFAULT_WAIT_T1E: f64 = 5.0;
pub const DEFAULT_POINTS_PER_STEP: usize = 50;

/// A level given either by index into the ascending energy list or by label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LevelRef {
    Index(usize),
    Label(Label),
}

impl LevelRef {
    pub fn resolve(&self, levels: &EnergyLevels) -> Result<usize> {
        match *self {
            LevelRef::Index(k) if k < levels.len() => Ok(k),
            LevelRef::Index(k) => Err(Error::DimensionMismatch {
                expected: levels.len(),
                got: k + 1,
            }),
            LevelRef::Label(l) => levels.index_of(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolStep {
    /// Symmetric drive on explicit transition indices.
    Saturate {
        targets: Vec<usize>,
        rate_w_per_s: f64,
        duration_s: f64,
    },
    /// Drive on every NMR transition inside the band, for the whole duration.
    RfSweep {
        f_start_mhz: f64,
        f_end_mhz: f64,
        rate_w_per_s: f64,
        duration_s: f64,
    },
    TransitionPulse {
        i: LevelRef,
        j: LevelRef,
        theta_rad: f64,
    },
    ManifoldPulse {
        mi: HalfInt,
        theta_rad: f64,
    },
    Wait {
        duration_s: f64,
    },
    /// Timed steps of equal duration whose drives act together.
    Simultaneous {
        steps: Vec<ProtocolStep>,
    },
}

impl ProtocolStep {
    fn duration(&self) -> Option<f64> {
        match self {
            ProtocolStep::Saturate { duration_s, .. }
            | ProtocolStep::RfSweep { duration_s, .. }
            | ProtocolStep::Wait { duration_s } => Some(*duration_s),
            ProtocolStep::Simultaneous { steps } => steps.first().and_then(|s| s.duration()),
            _ => None,
        }
    }

    /// Drives of a timed step; `None` for pulses.
    fn drives(&self, table: &[Transition]) -> Result<Option<Vec<Drive>>> {
        let check_time = |d: f64| {
            if d.is_finite() && d >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid("duration_s", format!("{d} must be non-negative")))
            }
        };
        match self {
            ProtocolStep::Saturate {
                targets,
                rate_w_per_s,
                duration_s,
            } => {
                check_time(*duration_s)?;
                Ok(Some(vec![Drive::new(targets.clone(), *rate_w_per_s)]))
            }
            ProtocolStep::RfSweep {
                f_start_mhz,
                f_end_mhz,
                rate_w_per_s,
                duration_s,
            } => {
                check_time(*duration_s)?;
                if !(f_start_mhz <= f_end_mhz) {
                    return Err(Error::invalid("rf_sweep", "f_start_mhz must not exceed f_end_mhz"));
                }
                let targets = transitions_in_band(table, TransitionKind::Nmr, *f_start_mhz, *f_end_mhz);
                if targets.is_empty() {
                    return Err(Error::InertSweep {
                        f_start: *f_start_mhz,
                        f_end: *f_end_mhz,
                    });
                }
                Ok(Some(vec![Drive::new(targets, *rate_w_per_s)]))
            }
            ProtocolStep::Wait { duration_s } => {
                check_time(*duration_s)?;
                Ok(Some(Vec::new()))
            }
            ProtocolStep::Simultaneous { steps } => {
                let duration = self
                    .duration()
                    .ok_or_else(|| Error::invalid("simultaneous", "needs at least one timed step"))?;
                let mut drives = Vec::new();
                for s in steps {
                    if matches!(s, ProtocolStep::Simultaneous { .. }) {
                        return Err(Error::invalid("simultaneous", "steps cannot be nested"));
                    }
                    if s.duration() != Some(duration) {
                        return Err(Error::invalid(
                            "simultaneous",
                            "members must be timed steps of equal duration",
                        ));
                    }
                    drives.extend(s.drives(table)?.unwrap_or_default());
                }
                Ok(Some(drives))
            }
            ProtocolStep::TransitionPulse { .. } | ProtocolStep::ManifoldPulse { .. } => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub points_per_step: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            points_per_step: DEFAULT_POINTS_PER_STEP,
        }
    }
}

/// Sampled populations over a protocol run.
///
/// Pulses are instantaneous: a sample at time t holds the state after every
/// pulse applied at t, so times stay strictly increasing.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    /// Index of the last sample written by each step.
    pub step_ends: Vec<usize>,
    /// Roundoff-negative entries clipped during integration.
    pub clipped: usize,
}

impl Trajectory {
    fn start(p0: PopulationState) -> Self {
        Trajectory {
            times: vec![0.0],
            states: vec![p0],
            step_ends: Vec::new(),
            clipped: 0,
        }
    }

    pub fn final_state(&self) -> &PopulationState {
        self.states.last().expect("trajectory always has a sample")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always has a sample")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Executes `steps` in order starting from `p0`.
pub fn run(
    levels: &EnergyLevels,
    model: &RateModel,
    steps: &[ProtocolStep],
    p0: &PopulationState,
    opts: RunOptions,
) -> Result<Trajectory> {
    crate::kinetics::check_dim(p0, levels)?;
    model.validate()?;
    if opts.points_per_step == 0 {
        return Err(Error::invalid("points_per_step", "must be at least 1"));
    }
    let table = transition_table(levels)?;
    let mut traj = Trajectory::start(p0.clone());
    for step in steps {
        let current = traj.final_state().clone();
        match step.drives(&table)? {
            Some(drives) => {
                let duration = step.duration().unwrap_or(0.0);
                if duration > 0.0 {
                    let r = build_rate_matrix(levels, model, &drives)?;
                    let t0 = traj.final_time();
                    let s = evolve_sampled(&current, &r, duration, opts.points_per_step)?;
                    traj.clipped += s.clipped;
                    traj.times.extend(s.times.iter().map(|t| t0 + t));
                    traj.states.extend(s.states);
                }
            }
            None => {
                let next = apply_pulse(step, levels, &current)?;
                *traj.states.last_mut().expect("non-empty") = next;
            }
        }
        traj.step_ends.push(traj.len() - 1);
    }
    Ok(traj)
}

fn apply_pulse(step: &ProtocolStep, levels: &EnergyLevels, p: &PopulationState) -> Result<PopulationState> {
    match step {
        ProtocolStep::TransitionPulse { i, j, theta_rad } => {
            apply_transition_pulse(p, levels, i.resolve(levels)?, j.resolve(levels)?, *theta_rad)
        }
        ProtocolStep::ManifoldPulse { mi, theta_rad } => apply_manifold_rotation(p, levels, *mi, *theta_rad),
        _ => unreachable!("timed steps are integrated, not pulsed"),
    }
}

/// EPR transition indices inside one mI manifold.
pub fn epr_targets(levels: &EnergyLevels, mi: HalfInt) -> Result<Vec<usize>> {
    levels.manifold(mi)?;
    Ok(transition_table(levels)?
        .iter()
        .enumerate()
        .filter(|(_, t)| t.kind == TransitionKind::Epr && t.label_lo.mi == mi)
        .map(|(k, _)| k)
        .collect())
}

/// Steps of the CW recipe: saturate every EPR transition of `target_mi` while
/// sweeping the RF band.
pub fn ponsee_steps(
    levels: &EnergyLevels,
    target_mi: HalfInt,
    rate_w: f64,
    duration: f64,
    rf_band: (f64, f64),
) -> Result<Vec<ProtocolStep>> {
    if !(duration > 0.0) {
        return Err(Error::invalid("duration_s", "CW protocol needs a positive duration"));
    }
    Ok(vec![ProtocolStep::Simultaneous {
        steps: vec![
            ProtocolStep::Saturate {
                targets: epr_targets(levels, target_mi)?,
                rate_w_per_s: rate_w,
                duration_s: duration,
            },
            ProtocolStep::RfSweep {
                f_start_mhz: rf_band.0,
                f_end_mhz: rf_band.1,
                rate_w_per_s: rate_w,
                duration_s: duration,
            },
        ],
    }])
}

/// CW recipe run from the thermal state.
pub fn ponsee_cw(
    levels: &EnergyLevels,
    model: &RateModel,
    target_mi: HalfInt,
    rate_w: f64,
    duration: f64,
    opts: RunOptions,
) -> Result<Trajectory> {
    let steps = ponsee_steps(levels, target_mi, rate_w, duration, PONSEE_RF_BAND)?;
    let p0 = thermal_populations(levels, model.temperature)?;
    run(levels, model, &steps, &p0, opts)
}

/// NMR transitions of the mS = +S manifold, which carries the inverted
/// population after the electron π pulse. They form one degenerate ENDOR line,
/// so all of them are pulsed, in the fixed order of descending upper mI
/// (0↔+1 before 0↔−1 for I = 1).
pub fn ponsepe_nmr_pairs(levels: &EnergyLevels) -> Result<Vec<(usize, usize)>> {
    let top = levels.system().electron_spin();
    let mut pairs: Vec<(HalfInt, usize, usize)> = transition_table(levels)?
        .into_iter()
        .filter(|t| t.kind == TransitionKind::Nmr && t.label_lo.ms == top)
        .map(|t| (t.label_lo.mi.max(t.label_hi.mi), t.level_lo, t.level_hi))
        .collect();
    pairs.sort_by_key(|p| std::cmp::Reverse(p.0));
    Ok(pairs.into_iter().map(|(_, i, j)| (i, j)).collect())
}

/// Steps of `n_cycles` pulsed cycles.
pub fn ponsepe_steps(
    levels: &EnergyLevels,
    target_mi: HalfInt,
    n_cycles: usize,
    wait: f64,
) -> Result<Vec<ProtocolStep>> {
    levels.manifold(target_mi)?;
    if !(wait.is_finite() && wait >= 0.0) {
        return Err(Error::invalid("inter_cycle_wait_s", "must be non-negative"));
    }
    let pairs = ponsepe_nmr_pairs(levels)?;
    let mut cycle = vec![ProtocolStep::ManifoldPulse {
        mi: target_mi,
        theta_rad: PI,
    }];
    cycle.extend(pairs.into_iter().map(|(i, j)| ProtocolStep::TransitionPulse {
        i: LevelRef::Index(i),
        j: LevelRef::Index(j),
        theta_rad: PI,
    }));
    cycle.push(ProtocolStep::Wait { duration_s: wait });
    Ok(std::iter::repeat_n(cycle, n_cycles).flatten().collect())
}

/// Pulsed recipe run from the thermal state with nuclear relaxation disabled.
pub fn ponsepe(
    levels: &EnergyLevels,
    model: &RateModel,
    target_mi: HalfInt,
    n_cycles: usize,
    wait: f64,
    opts: RunOptions,
) -> Result<Trajectory> {
    if n_cycles == 0 {
        return Err(Error::invalid("n_cycles", "must be at least 1"));
    }
    let steps = ponsepe_steps(levels, target_mi, n_cycles, wait)?;
    let model = model.without_nuclear_relaxation();
    let p0 = thermal_populations(levels, model.temperature)?;
    run(levels, &model, &steps, &p0, opts)
}

/// Generator whose steady state is the many-cycle limit of the pulsed recipe:
/// electronic relaxation plus a saturating exchange on each pulsed NMR pair,
/// with the endpoint in the target manifold mapped back through the electron
/// reversal (mS = +S → −S).
pub fn ponsepe_equivalent_generator(
    levels: &EnergyLevels,
    model: &RateModel,
    target_mi: HalfInt,
    rate_w: f64,
) -> Result<Generator> {
    let members = levels.manifold(target_mi)?;
    let (top, bottom) = (members[0], members[members.len() - 1]);
    let model = model.without_nuclear_relaxation();
    let mut g = build_rate_matrix(levels, &model, &[])?;
    for (i, j) in ponsepe_nmr_pairs(levels)? {
        let map = |k: usize| if k == top { bottom } else { k };
        g.add_pair(map(i), map(j), rate_w);
    }
    Ok(g)
}

pub fn ponsepe_cw_limit(
    levels: &EnergyLevels,
    model: &RateModel,
    target_mi: HalfInt,
) -> Result<PopulationState> {
    let rate = IDEAL_RATE_FACTOR / model.t1e;
    steady_state(&ponsepe_equivalent_generator(levels, model, target_mi, rate)?)
}

/// Generator of the CW recipe (EPR saturation of `target_mi` plus the RF band).
pub fn ponsee_generator(
    levels: &EnergyLevels,
    model: &RateModel,
    target_mi: HalfInt,
    rate_w: f64,
) -> Result<Generator> {
    let table = transition_table(levels)?;
    let nmr = transitions_in_band(&table, TransitionKind::Nmr, PONSEE_RF_BAND.0, PONSEE_RF_BAND.1);
    if nmr.is_empty() {
        return Err(Error::InertSweep {
            f_start: PONSEE_RF_BAND.0,
            f_end: PONSEE_RF_BAND.1,
        });
    }
    let drives = [
        Drive::new(epr_targets(levels, target_mi)?, rate_w),
        Drive::new(nmr, rate_w),
    ];
    build_rate_matrix(levels, model, &drives)
}
