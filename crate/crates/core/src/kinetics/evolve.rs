use nalgebra::{DMatrix, DVector};

use super::Generator;
use crate::error::{Error, Result};
use crate::population::PopulationState;

/// Explicit steps below this length hand the interval to the matrix exponential.
const MIN_EXPLICIT_STEP: f64 = 1e-6;
/// Explicit step budget per interval before the matrix exponential takes over.
const MAX_EXPLICIT_STEPS: f64 = 1e5;
/// RK4 stays stable for h·ρ below about 2.78.
const RK4_STABILITY: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// Adaptive step-halving classical Runge-Kutta.
    Rk4,
    /// Scaling-and-squaring matrix exponential (uniformized).
    Exponential,
}

/// Gershgorin bound on the spectral radius: every eigenvalue lies in a disc
/// centred at R_ii with radius |R_ii|.
fn spectral_bound(r: &Generator) -> f64 {
    (0..r.dim()).map(|k| 2.0 * r.matrix()[(k, k)].abs()).fold(0.0, f64::max)
}

/// Picks the integrator for one interval of length `dt`.
pub fn choose_integrator(r: &Generator, dt: f64) -> Integrator {
    let rho = spectral_bound(r);
    if rho == 0.0 {
        return Integrator::Rk4;
    }
    let stable_step = RK4_STABILITY / rho;
    if stable_step < MIN_EXPLICIT_STEP || dt / stable_step > MAX_EXPLICIT_STEPS {
        Integrator::Exponential
    } else {
        Integrator::Rk4
    }
}

fn rk4_step(m: &DMatrix<f64>, y: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = m * y;
    let k2 = m * (y + &k1 * (h / 2.0));
    let k3 = m * (y + &k2 * (h / 2.0));
    let k4 = m * (y + &k3 * h);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

enum Rk4Outcome {
    Done(DVector<f64>),
    TooStiff,
}

fn rk4_adaptive(r: &Generator, y0: DVector<f64>, duration: f64) -> Rk4Outcome {
    let m = r.matrix();
    let rho = spectral_bound(r);
    let h_max = if rho > 0.0 { RK4_STABILITY / rho } else { duration };
    let mut h = h_max.min(duration);
    let mut t = 0.0;
    let mut y = y0;
    while t < duration {
        h = h.min(duration - t);
        let full = rk4_step(m, &y, h);
        let half = rk4_step(m, &rk4_step(m, &y, h / 2.0), h / 2.0);
        let err = (&full - &half).amax();
        // Error budget proportional to the fraction of the interval covered.
        let tol = 1e-11 * (h / duration).max(1e-6);
        if err <= tol {
            // Richardson extrapolation of the step-doubling pair.
            y = &half + (&half - &full) / 15.0;
            t += h;
            if err < tol / 64.0 {
                h = (2.0 * h).min(h_max);
            }
        } else {
            h /= 2.0;
            if h < MIN_EXPLICIT_STEP {
                return Rk4Outcome::TooStiff;
            }
        }
    }
    Rk4Outcome::Done(y)
}

/// exp(R·dt) by uniformization with scaling and squaring.
///
/// With λ the largest exit rate, P = I + R/λ is column-stochastic and
/// exp(R·τ) = e^(−λτ)·Σ (λτ)^k/k!·P^k. Every term and every squaring sums
/// non-negative numbers, so the propagator cannot go negative however stiff
/// the generator is, and small entries keep their relative accuracy.
fn propagator(r: &Generator, dt: f64) -> Result<DMatrix<f64>> {
    let n = r.dim();
    let lambda = (0..n).map(|k| -r.matrix()[(k, k)]).fold(0.0, f64::max);
    if lambda == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let x = lambda * dt;
    let squarings = if x > 0.5 { (x / 0.5).log2().ceil() as i32 } else { 0 };
    if !x.is_finite() || squarings > 1000 {
        return Err(Error::Integrator(format!("propagator for λ·dt = {x:e} is out of range")));
    }
    let tau_x = x / 2f64.powi(squarings);
    let mut p = r.matrix() / lambda;
    for k in 0..n {
        // The diagonal is 1 + R_kk/λ; clamp the cancellation at the largest exit rate.
        p[(k, k)] = (1.0 + p[(k, k)]).max(0.0);
    }
    let mut term = DMatrix::identity(n, n);
    let mut m = term.clone();
    for k in 1..=40 {
        term = &p * term * (tau_x / k as f64);
        m += &term;
        if term.max() < 1e-18 * m.max() {
            break;
        }
    }
    m *= (-tau_x).exp();
    for _ in 0..squarings {
        m = &m * &m;
    }
    // Columns of exp(R·dt) sum to one exactly; divide out the roundoff.
    for mut col in m.column_iter_mut() {
        let total = col.sum();
        col /= total;
    }
    Ok(m)
}

fn advance(r: &Generator, y: DVector<f64>, dt: f64, integrator: Integrator) -> Result<DVector<f64>> {
    match integrator {
        Integrator::Rk4 => match rk4_adaptive(r, y.clone(), dt) {
            Rk4Outcome::Done(y) => Ok(y),
            Rk4Outcome::TooStiff => Ok(propagator(r, dt)? * y),
        },
        Integrator::Exponential => Ok(propagator(r, dt)? * y),
    }
}

fn finish(y: DVector<f64>) -> Result<(PopulationState, usize)> {
    let (state, clipped) = PopulationState::from_raw(y.iter().copied().collect())?;
    // Remove the sub-tolerance drift left by roundoff.
    let total: f64 = state.as_slice().iter().sum();
    let renorm = state.into_vec().into_iter().map(|x| x / total).collect();
    Ok((PopulationState::from_raw(renorm)?.0, clipped))
}

fn check(p0: &PopulationState, r: &Generator, duration: f64) -> Result<()> {
    if p0.len() != r.dim() {
        return Err(Error::DimensionMismatch {
            expected: r.dim(),
            got: p0.len(),
        });
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::invalid("duration", format!("{duration} s must be non-negative")));
    }
    Ok(())
}

/// Integrates dp/dt = R·p over `duration` seconds.
pub fn evolve(p0: &PopulationState, r: &Generator, duration: f64) -> Result<PopulationState> {
    check(p0, r, duration)?;
    if duration == 0.0 {
        return Ok(p0.clone());
    }
    let y = DVector::from_column_slice(p0.as_slice());
    let y = advance(r, y, duration, choose_integrator(r, duration))?;
    Ok(finish(y)?.0)
}

/// States at `n` equally spaced times after the start, ending at `duration`.
#[derive(Debug, Clone)]
pub struct Sampled {
    /// Offsets from the start of the interval, s.
    pub times: Vec<f64>,
    pub states: Vec<PopulationState>,
    /// Total number of roundoff-negative entries clipped to zero.
    pub clipped: usize,
}

pub fn evolve_sampled(p0: &PopulationState, r: &Generator, duration: f64, n: usize) -> Result<Sampled> {
    check(p0, r, duration)?;
    if n == 0 {
        return Err(Error::invalid("samples", "at least one sample is required"));
    }
    let dt = duration / n as f64;
    let integrator = choose_integrator(r, duration);
    let step = match integrator {
        Integrator::Exponential if dt > 0.0 => Some(propagator(r, dt)?),
        _ => None,
    };
    let mut y = DVector::from_column_slice(p0.as_slice());
    let mut out = Sampled {
        times: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        clipped: 0,
    };
    for k in 1..=n {
        if dt > 0.0 {
            y = match &step {
                Some(m) => m * y,
                None => advance(r, y, dt, Integrator::Rk4)?,
            };
        }
        let (state, clipped) = finish(y)?;
        y = DVector::from_column_slice(state.as_slice());
        out.clipped += clipped;
        out.times.push(if k == n { duration } else { dt * k as f64 });
        out.states.push(state);
    }
    Ok(out)
}
