//! Fitting the shipped parameter presets from the quoted spectroscopic values.

use crate::config::{ProtocolConfig, RatesConfig, RunConfig, TargetName, TargetSpec};
use crate::constants::{GAMMA_N14, GAMMA_N15, MU_B_OVER_H};
use crate::error::{Error, Result};
use crate::spin::SpinParams;

/// Operating point of the ¹⁴N experiment.
pub const N14_FIELD_T: f64 = 8.57;
pub const N14_TEMPERATURE_K: f64 = 4.0;
pub const MICROWAVE_MHZ: f64 = 240_000.0;
/// ENDOR lines of the ¹⁴N system at 8.57 T, MHz, for mS = 3/2, 1/2, −1/2, −3/2.
pub const N14_ENDOR_MHZ: [f64; 4] = [2.7, 18.5, 34.2, 50.0];
pub const N15_FIELD_T: f64 = 8.6;
pub const N15_TEMPERATURE_K: f64 = 3.0;
pub const T1E_S: f64 = 270.0;
pub const PONSEE_DURATION_S: f64 = 45.0 * 60.0;

/// g-factor placing the EPR center at `field` for microwave frequency `microwave_mhz`.
pub fn fit_g(microwave_mhz: f64, field: f64) -> Result<f64> {
    if !(microwave_mhz > 0.0 && field > 0.0) {
        return Err(Error::invalid("fit_g", "frequency and field must be positive"));
    }
    Ok(microwave_mhz / (MU_B_OVER_H * field))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndorFit {
    /// Nuclear Larmor frequency, MHz.
    pub nu_n: f64,
    pub hyperfine_a: f64,
    pub gamma_n: f64,
    /// Root-mean-square residual of the fitted lines, MHz.
    pub rms: f64,
}

/// Least-squares fit of f = ν_n − A·mS to (mS, frequency) pairs.
pub fn fit_endor(lines: &[(f64, f64)], field: f64) -> Result<EndorFit> {
    if lines.len() < 2 || !(field > 0.0) {
        return Err(Error::invalid("fit_endor", "needs two or more lines and a positive field"));
    }
    let n = lines.len() as f64;
    let mean_m = lines.iter().map(|l| l.0).sum::<f64>() / n;
    let mean_f = lines.iter().map(|l| l.1).sum::<f64>() / n;
    let sxx: f64 = lines.iter().map(|l| (l.0 - mean_m).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit_endor", "lines need distinct mS values"));
    }
    let sxy: f64 = lines.iter().map(|l| (l.0 - mean_m) * (l.1 - mean_f)).sum();
    let slope = sxy / sxx;
    let nu_n = mean_f - slope * mean_m;
    let rms = (lines
        .iter()
        .map(|l| (l.1 - (nu_n + slope * l.0)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(EndorFit {
        nu_n,
        hyperfine_a: -slope,
        gamma_n: nu_n / field,
        rms,
    })
}

/// The ¹⁴N fit from [`N14_ENDOR_MHZ`].
pub fn fit_n14() -> Result<EndorFit> {
    let lines: Vec<(f64, f64)> = [1.5, 0.5, -0.5, -1.5].into_iter().zip(N14_ENDOR_MHZ).collect();
    fit_endor(&lines, N14_FIELD_T)
}

fn ponsee_protocol() -> ProtocolConfig {
    ProtocolConfig::PonseeCw {
        target_mi: TargetSpec::Named(TargetName::HighField),
        rate_w_per_s: None,
        duration_s: PONSEE_DURATION_S,
    }
}

fn preset(description: &str, system: SpinParams, field_t: f64, temperature_k: f64) -> RunConfig {
    RunConfig {
        description: Some(description.to_string()),
        system,
        field_t,
        temperature_k,
        microwave_mhz: Some(MICROWAVE_MHZ),
        rates: RatesConfig {
            t1e_s: T1E_S,
            t1n_s: f64::INFINITY,
        },
        protocol: Some(ponsee_protocol()),
        spectrum: Default::default(),
        sampling: Default::default(),
        output: Default::default(),
    }
}

/// ¹⁴N@C₆₀ at 8.57 T and 4 K running the 45-minute CW protocol.
pub fn n14_preset() -> Result<RunConfig> {
    let fit = fit_n14()?;
    let system = SpinParams {
        electron_spin: 1.5,
        nuclear_spin: 1.0,
        g_factor: fit_g(MICROWAVE_MHZ, N14_FIELD_T)?,
        gamma_n_mhz_per_t: fit.gamma_n,
        hyperfine_a_mhz: fit.hyperfine_a,
    };
    Ok(preset("n14_c60", system, N14_FIELD_T, N14_TEMPERATURE_K))
}

/// ¹⁵N@C₆₀ at 8.6 T and 3 K; γn and A scaled from ¹⁴N by the nuclear gyromagnetic ratio.
pub fn n15_preset() -> Result<RunConfig> {
    let fit = fit_n14()?;
    let ratio = GAMMA_N15 / GAMMA_N14;
    let system = SpinParams {
        electron_spin: 1.5,
        nuclear_spin: 0.5,
        g_factor: fit_g(MICROWAVE_MHZ, N14_FIELD_T)?,
        gamma_n_mhz_per_t: fit.gamma_n * ratio,
        hyperfine_a_mhz: fit.hyperfine_a * ratio,
    };
    Ok(preset("n15_c60", system, N15_FIELD_T, N15_TEMPERATURE_K))
}
