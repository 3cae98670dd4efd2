//! Randomized invariants shared by the property suite and the acceptance run.
//! Each property is a case strategy plus a check over one case.

use std::f64::consts::PI;

use dnp_kinetics::eigen::diagonalize;
use dnp_kinetics::hamiltonian::{build_hamiltonian, first_order_energies};
use dnp_kinetics::kinetics::{
    apply_manifold_rotation, apply_transition_pulse, build_rate_matrix, evolve, steady_state, Drive, RateModel,
};
use dnp_kinetics::levels::{
    endor_frequencies_merged, epr_lines, high_field_mi, thermal_populations, transition_table,
};
use dnp_kinetics::metrics::metrics;
use dnp_kinetics::protocols::{
    epr_targets, ponsee_cw, ponsepe, run, LevelRef, ProtocolStep, RunOptions, IDEAL_RATE_FACTOR,
};
use dnp_kinetics::spectra::{component_areas, simulate_epr, EprOptions, LineShape};
use dnp_kinetics::wigner::population_rotation;
use dnp_kinetics::{EnergyLevels, HalfInt, PopulationState, SpinSystem, TransitionKind};
use proptest::prelude::*;
use proptest::sample::Index;
use proptest::test_runner::{Config, TestRunner};

pub const CASES: u32 = 1000;

type Outcome = Result<(), TestCaseError>;

/// Runs `check` over `CASES` cases drawn from `cases`.
pub fn check<S: Strategy>(cases: S, check: impl Fn(S::Value) -> Outcome) -> Result<(), String> {
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new(config).run(&cases, check).map_err(|e| e.to_string())
}

fn spin() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0, 1.5])
}

fn nuclear_spin() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.5, 1.0])
}

/// A spin system in the high-field regime that labels cleanly.
fn system() -> impl Strategy<Value = SpinSystem> {
    (spin(), nuclear_spin(), 1.99..2.01f64, -5.0..5.0f64, -30.0..30.0f64)
        .prop_map(|(s, i, g, gn, a)| SpinSystem::new(s, i, g, gn, a).unwrap())
}

/// Levels with a well-defined transition catalog (no accidental NMR degeneracy).
fn levels() -> impl Strategy<Value = EnergyLevels> {
    (system(), 1.0..10.0f64).prop_filter_map("degenerate transition", |(sys, b)| {
        let lv = EnergyLevels::compute(&sys, b).unwrap();
        transition_table(&lv).is_ok().then_some(lv)
    })
}

fn state(dim: usize) -> impl Strategy<Value = PopulationState> {
    prop::collection::vec(0.0..1.0f64, dim).prop_filter_map("all-zero weights", |w| {
        (w.iter().sum::<f64>() > 1e-6).then(|| PopulationState::from_weights(w).unwrap())
    })
}

fn levels_and_state() -> impl Strategy<Value = (EnergyLevels, PopulationState)> {
    levels().prop_flat_map(|lv| {
        let n = lv.len();
        (Just(lv), state(n))
    })
}

fn model() -> impl Strategy<Value = RateModel> {
    (1.0..1000.0f64, prop::option::of(10.0..1e5f64), 1.0..300.0f64)
        .prop_map(|(t1e, t1n, temp)| RateModel::new(t1e, t1n.unwrap_or(f64::INFINITY), temp).unwrap())
}

fn ideal(t1e: f64, temp: f64) -> RateModel {
    RateModel::new(t1e, f64::INFINITY, temp).unwrap()
}

fn assert_valid(p: &PopulationState) -> Outcome {
    let sum: f64 = p.as_slice().iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-9, "sum {sum}");
    prop_assert!(p.as_slice().iter().all(|&x| x >= 0.0));
    Ok(())
}

fn pn(p: &PopulationState, lv: &EnergyLevels, temp: f64) -> f64 {
    let th = thermal_populations(lv, temp).unwrap();
    metrics(p, lv, &th).unwrap().nuclear_polarization
}

fn manifolds(lv: &EnergyLevels) -> Vec<HalfInt> {
    lv.system().nuclear_spin().projections().collect()
}

pub fn evolution_cases() -> impl Strategy<Value = ((EnergyLevels, PopulationState), RateModel, Vec<Index>, f64, f64)> {
    (levels_and_state(), model(), prop::collection::vec(any::<Index>(), 0..4), -3.0..9.0f64, -4.0..4.0f64)
}

/// Relaxation plus random EPR drives conserves and stays non-negative.
pub fn evolution_conserves(((lv, p), m, picks, log_rate, log_t): ((EnergyLevels, PopulationState), RateModel, Vec<Index>, f64, f64)) -> Outcome {
    let table = transition_table(&lv).unwrap();
    let epr: Vec<usize> = (0..table.len()).filter(|&k| table[k].kind == TransitionKind::Epr).collect();
    let targets: Vec<usize> = picks.iter().map(|ix| epr[ix.index(epr.len())]).collect();
    let drives = if targets.is_empty() { vec![] } else { vec![Drive::new(targets, 10f64.powf(log_rate) / m.t1e)] };
    let r = build_rate_matrix(&lv, &m, &drives).unwrap();
    assert_valid(&evolve(&p, &r, 10f64.powf(log_t) * m.t1e).unwrap())
}

pub fn generator_cases() -> impl Strategy<Value = (EnergyLevels, RateModel)> {
    (levels(), model())
}

pub fn generator_is_valid((lv, m): (EnergyLevels, RateModel)) -> Outcome {
    let r = build_rate_matrix(&lv, &m, &[]).unwrap();
    let a = r.matrix();
    for c in 0..a.ncols() {
        prop_assert!(a.column(c).sum().abs() <= 1e-12 * a.amax().max(1.0));
        for row in 0..a.nrows() {
            prop_assert!(row == c || a[(row, c)] >= 0.0);
        }
    }
    Ok(())
}

pub fn pulse_cases() -> impl Strategy<Value = ((EnergyLevels, PopulationState), Index, f64)> {
    (levels_and_state(), any::<Index>(), 0.0..=PI)
}

pub fn pulses_conserve(((lv, p), pick, theta): ((EnergyLevels, PopulationState), Index, f64)) -> Outcome {
    let table = transition_table(&lv).unwrap();
    let t = &table[pick.index(table.len())];
    assert_valid(&apply_transition_pulse(&p, &lv, t.level_lo, t.level_hi, theta).unwrap())?;
    let mis = manifolds(&lv);
    assert_valid(&apply_manifold_rotation(&p, &lv, mis[pick.index(mis.len())], theta).unwrap())
}

pub fn inversion_cases() -> impl Strategy<Value = ((EnergyLevels, PopulationState), Index)> {
    (levels_and_state(), any::<Index>())
}

pub fn inversion_is_involution(((lv, p), pick): ((EnergyLevels, PopulationState), Index)) -> Outcome {
    let mis = manifolds(&lv);
    let mi = mis[pick.index(mis.len())];
    let once = apply_manifold_rotation(&p, &lv, mi, PI).unwrap();
    let twice = apply_manifold_rotation(&once, &lv, mi, PI).unwrap();
    prop_assert!(twice.max_abs_diff(&p) == 0.0);
    Ok(())
}

pub fn balance_cases() -> impl Strategy<Value = (EnergyLevels, f64, f64, f64)> {
    (levels(), 1.0..1000.0f64, 10.0..1e5f64, 1.0..300.0f64)
}

/// Without drives, R annihilates the Boltzmann state and the steady state is Boltzmann.
pub fn detailed_balance((lv, t1e, t1n, temp): (EnergyLevels, f64, f64, f64)) -> Outcome {
    let m = RateModel::new(t1e, t1n, temp).unwrap();
    let r = build_rate_matrix(&lv, &m, &[]).unwrap();
    let th = thermal_populations(&lv, temp).unwrap();
    let residual = r.apply(th.as_slice());
    prop_assert!(residual.iter().all(|x| x.abs() <= 1e-10), "{residual:?}");
    let ss = steady_state(&r).unwrap();
    prop_assert!(ss.max_abs_diff(&th) <= 1e-10, "{}", ss.max_abs_diff(&th));
    Ok(())
}

pub fn wigner_cases() -> impl Strategy<Value = (i32, f64)> {
    (1..=4i32, 0.0..=PI)
}

pub fn wigner_doubly_stochastic((twice, beta): (i32, f64)) -> Outcome {
    let t = population_rotation(HalfInt::from_twice(twice), beta);
    for k in 0..t.len() {
        let row: f64 = t[k].iter().sum();
        let col: f64 = t.iter().map(|r| r[k]).sum();
        prop_assert!((row - 1.0).abs() <= 1e-10 && (col - 1.0).abs() <= 1e-10);
        prop_assert!(t[k].iter().all(|&x| x >= 0.0));
    }
    Ok(())
}

pub fn eigen_cases() -> impl Strategy<Value = (SpinSystem, f64)> {
    (system(), 0.0..10.0f64)
}

pub fn eigen_residuals((sys, field): (SpinSystem, f64)) -> Outcome {
    let h = build_hamiltonian(&sys, field).unwrap();
    prop_assert_eq!(h.max_asymmetry(), 0.0);
    let eig = diagonalize(&h).unwrap();
    let norm = h.frobenius_norm();
    prop_assert!(eig.max_residual(&h) <= 1e-8 * norm);
    let sum: f64 = eig.values.iter().sum();
    prop_assert!((sum - h.trace()).abs() <= 1e-8 * norm.max(1.0));
    Ok(())
}

pub fn first_order_cases() -> impl Strategy<Value = (SpinSystem, f64)> {
    (system(), 1.0..10.0f64)
}

pub fn first_order_bound((sys, field): (SpinSystem, f64)) -> Outcome {
    let a = sys.hyperfine_a();
    let nu_e = sys.nu_e(field);
    prop_assume!(nu_e / a.abs() > 1e3);
    let lv = EnergyLevels::compute(&sys, field).unwrap();
    let approx = first_order_energies(&sys, field);
    for (e, label) in lv.energies().iter().zip(lv.labels()) {
        prop_assert!((e - approx[label]).abs() <= 10.0 * a * a / nu_e);
    }
    Ok(())
}

pub fn sign_flip_cases() -> impl Strategy<Value = EnergyLevels> {
    levels()
}

/// The joint flip of γn and A is a symmetry of the first-order energies only.
/// Second-order shifts change and can trade places between +mS and −mS, so
/// the pooled line set is compared against the second-order scale.
pub fn sign_flip(lv: EnergyLevels) -> Outcome {
    let (sys, field) = (*lv.system(), lv.field());
    let flipped = sys.with_gamma_n(-sys.gamma_n()).with_hyperfine(-sys.hyperfine_a());
    let pooled = |sys: &SpinSystem| {
        let lv = EnergyLevels::compute(sys, field).unwrap();
        let mut f: Vec<f64> =
            endor_frequencies_merged(&lv, 0.0).unwrap().into_values().flatten().map(|l| l.frequency).collect();
        f.sort_by(f64::total_cmp);
        f
    };
    let (a, b) = (pooled(&sys), pooled(&flipped));
    let bound = 10.0 * sys.hyperfine_a().powi(2) / sys.nu_e(field);
    prop_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        prop_assert!((x - y).abs() <= bound, "{a:?} vs {b:?}");
    }
    Ok(())
}

pub fn thermal_cases() -> impl Strategy<Value = (EnergyLevels, f64)> {
    (levels(), 0.5..300.0f64)
}

pub fn thermal_monotone((lv, temp): (EnergyLevels, f64)) -> Outcome {
    let th = thermal_populations(&lv, temp).unwrap();
    let sum: f64 = th.as_slice().iter().sum();
    prop_assert!((sum - 1.0).abs() <= 1e-12);
    prop_assert!(th.as_slice().iter().all(|&x| x > 0.0));
    let mut order: Vec<usize> = (0..lv.len()).collect();
    order.sort_by(|&a, &b| lv.energies()[a].total_cmp(&lv.energies()[b]));
    prop_assert!(order.windows(2).all(|w| th[w[0]] >= th[w[1]]));
    Ok(())
}

pub fn enhancement_cases() -> impl Strategy<Value = ((EnergyLevels, PopulationState), f64)> {
    (levels_and_state(), 1.0..300.0f64)
}

pub fn enhancement_consistent(((lv, p), temp): ((EnergyLevels, PopulationState), f64)) -> Outcome {
    let th = thermal_populations(&lv, temp).unwrap();
    let m = metrics(&p, &lv, &th).unwrap();
    let m_th = metrics(&th, &lv, &th).unwrap();
    let ratio = m.nuclear_polarization.abs() / m_th.nuclear_polarization.abs();
    prop_assert!((m.enhancement_eps.unwrap() - ratio).abs() <= 1e-12 * ratio.max(1.0));
    Ok(())
}

pub fn spectrum_cases() -> impl Strategy<Value = (Vec<f64>, bool, bool)> {
    (prop::collection::vec(0.05..1.0f64, 3), any::<bool>(), any::<bool>())
}

/// Render the N@C60 spectrum from known manifold fractions and re-extract them.
pub fn spectrum_round_trip((fractions, derivative, lorentzian): (Vec<f64>, bool, bool)) -> Outcome {
    let sys = SpinSystem::new(1.5, 1.0, 2.000_870_06, 3.0747, 15.76).unwrap();
    let lv = EnergyLevels::compute(&sys, 8.57).unwrap();
    let total: f64 = fractions.iter().sum();
    let want: Vec<f64> = fractions.iter().map(|f| f / total).collect();
    let mut w = vec![0.0; lv.len()];
    for (mi, f) in sys.nuclear_spin().projections().zip(&want) {
        let members = lv.manifold(mi).unwrap();
        for &k in &members {
            w[k] = f / members.len() as f64;
        }
    }
    let p = PopulationState::from_weights(w).unwrap();
    let centers: Vec<f64> = epr_lines(&sys, 240_000.0).unwrap().iter().map(|l| l.field * 1e3).collect();
    let mut opts = EprOptions::over((centers[0] - 1.5, centers[2] + 1.5));
    opts.derivative = derivative;
    // Lorentzian absorption tails leak across bins; it is only used in derivative mode.
    opts.shape = if derivative && lorentzian { LineShape::Lorentzian } else { LineShape::Gaussian };
    let spec = simulate_epr(&lv, &p, 240_000.0, &opts).unwrap();
    let got = component_areas(&spec, &centers).unwrap();
    for (g, w) in got.iter().zip(&want) {
        prop_assert!((g - w).abs() <= 5e-3 * w, "{got:?} vs {want:?}");
    }
    Ok(())
}

pub fn pumping_cases() -> impl Strategy<Value = (f64, f64, f64, f64, f64)> {
    // A is kept where the mS = 3/2 NMR line stays inside the swept RF band.
    (nuclear_spin(), 15.3..16.2f64, 1.0..20.0f64, 10.0..1000.0f64, 0.1..20.0f64)
}

pub fn pumping_monotone((i, a, temp, t1e, duration_t1e): (f64, f64, f64, f64, f64)) -> Outcome {
    let sys = SpinSystem::new(1.5, i, 2.000_870_06, 3.0747, a).unwrap();
    let lv = EnergyLevels::compute(&sys, 8.57).unwrap();
    let target = high_field_mi(&sys, 240_000.0).unwrap();
    let opts = RunOptions { points_per_step: 20 };
    let traj = ponsee_cw(&lv, &ideal(t1e, temp), target, IDEAL_RATE_FACTOR / t1e, duration_t1e * t1e, opts).unwrap();
    let members = lv.manifold(target).unwrap();
    let frac: Vec<f64> = traj.states.iter().map(|p| members.iter().map(|&k| p[k]).sum()).collect();
    prop_assert!(frac.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{frac:?}");
    Ok(())
}

pub fn cycle_cases() -> impl Strategy<Value = (f64, f64, f64, usize, f64)> {
    (prop::sample::select(vec![1.0, 1.5]), nuclear_spin(), 5.0..30.0f64, 1..6usize, 5.0..20.0f64)
}

pub fn cycles_monotone((s, i, a, n, wait_t1e): (f64, f64, f64, usize, f64)) -> Outcome {
    let sys = SpinSystem::new(s, i, 2.000_870_06, 3.0747, a).unwrap();
    let lv = EnergyLevels::compute(&sys, 8.57).unwrap();
    let m = ideal(270.0, 4.0);
    let target = high_field_mi(&sys, 240_000.0).unwrap();
    let opts = RunOptions { points_per_step: 1 };
    let before = pn(ponsepe(&lv, &m, target, n, wait_t1e * 270.0, opts).unwrap().final_state(), &lv, 4.0);
    let after = pn(ponsepe(&lv, &m, target, n + 1, wait_t1e * 270.0, opts).unwrap().final_state(), &lv, 4.0);
    prop_assert!(after >= before - 1e-12, "{before} -> {after}");
    Ok(())
}

pub fn spin_half_cases() -> impl Strategy<Value = (f64, usize, f64)> {
    (1.0..5.0f64, 2..6usize, 1.0..20.0f64)
}

pub fn spin_half_no_gain((gn, n, temp): (f64, usize, f64)) -> Outcome {
    let sys = SpinSystem::new(0.5, 0.5, 2.0, gn, 0.0).unwrap();
    let lv = EnergyLevels::compute(&sys, 8.57).unwrap();
    let m = ideal(270.0, temp);
    let target = HalfInt::from_twice(-1);
    let opts = RunOptions { points_per_step: 1 };
    let one = pn(ponsepe(&lv, &m, target, 1, 40.0 * 270.0, opts).unwrap().final_state(), &lv, temp);
    let many = pn(ponsepe(&lv, &m, target, n, 40.0 * 270.0, opts).unwrap().final_state(), &lv, temp);
    prop_assert!((one - many).abs() <= 1e-9, "{one} vs {many}");
    Ok(())
}

type StitchCase = ((EnergyLevels, PopulationState), RateModel, Vec<(u8, Index, f64, f64)>, Index);

pub fn stitch_cases() -> impl Strategy<Value = StitchCase> {
    (
        levels_and_state(),
        model(),
        prop::collection::vec((0..3u8, any::<Index>(), 0.0..=PI, 0.0..3.0f64), 1..6),
        any::<Index>(),
    )
}

pub fn stitching(((lv, p0), m, kinds, cut): StitchCase) -> Outcome {
    let table = transition_table(&lv).unwrap();
    let mis = manifolds(&lv);
    let steps: Vec<ProtocolStep> = kinds
        .iter()
        .map(|&(kind, ix, theta, t)| match kind {
            0 => {
                let tr = &table[ix.index(table.len())];
                ProtocolStep::TransitionPulse {
                    i: LevelRef::Index(tr.level_lo),
                    j: LevelRef::Index(tr.level_hi),
                    theta_rad: theta,
                }
            }
            1 => ProtocolStep::ManifoldPulse {
                mi: mis[ix.index(mis.len())],
                theta_rad: theta,
            },
            _ => ProtocolStep::Saturate {
                targets: epr_targets(&lv, mis[ix.index(mis.len())]).unwrap(),
                rate_w_per_s: 10.0 / m.t1e,
                duration_s: t * m.t1e,
            },
        })
        .collect();
    let k = cut.index(steps.len() + 1);
    let opts = RunOptions { points_per_step: 3 };
    let whole = run(&lv, &m, &steps, &p0, opts).unwrap();
    let head = run(&lv, &m, &steps[..k], &p0, opts).unwrap();
    let tail = run(&lv, &m, &steps[k..], head.final_state(), opts).unwrap();
    prop_assert!(tail.final_state().max_abs_diff(whole.final_state()) <= 1e-9);
    Ok(())
}
