//! Strict JSON run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kinetics::RateModel;
use crate::levels::{high_field_mi, EnergyLevels};
use crate::protocols::{ProtocolStep, DEFAULT_POINTS_PER_STEP, DEFAULT_WAIT_T1E, IDEAL_RATE_FACTOR};
use crate::spectra::{AmplitudeModel, LineShape, DEFAULT_ENDOR_LINEWIDTH_KHZ, DEFAULT_EPR_LINEWIDTH_MT};
use crate::spin::{HalfInt, SpinParams, SpinSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub system: SpinParams,
    pub field_t: f64,
    pub temperature_k: f64,
    /// Defaults to the bare electron Larmor frequency at `field_t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub microwave_mhz: Option<f64>,
    pub rates: RatesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolConfig>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesConfig {
    pub t1e_s: f64,
    #[serde(serialize_with = "ser_time", deserialize_with = "de_time")]
    pub t1n_s: f64,
}

fn ser_time<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if t.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*t)
    }
}

/// A number, or the string "inf".
fn de_time<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    struct TimeVisitor;
    impl Visitor<'_> for TimeVisitor {
        type Value = f64;
        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number of seconds or \"inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v {
                "inf" => Ok(f64::INFINITY),
                _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
            }
        }
    }
    d.deserialize_any(TimeVisitor)
}

/// Which hyperfine manifold a protocol acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Named(TargetName),
    Mi(HalfInt),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetName {
    /// The component with the largest resonance field at the microwave frequency.
    HighField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    PonseeCw {
        target_mi: TargetSpec,
        /// Defaults to the ideal drive, 1e6/T1e.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate_w_per_s: Option<f64>,
        duration_s: f64,
    },
    Ponsepe {
        target_mi: TargetSpec,
        n_cycles: usize,
        /// Defaults to 5·T1e.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inter_cycle_wait_s: Option<f64>,
    },
    /// Explicit steps run from the thermal state.
    Steps { steps: Vec<ProtocolStep> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Defaults to the EPR lines padded by 10 linewidths.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_range_mt: Option<(f64, f64)>,
    pub n_points: usize,
    pub linewidth_mt: f64,
    pub shape: LineShape,
    pub derivative: bool,
    pub amplitude: AmplitudeModel,
    pub endor_range_mhz: (f64, f64),
    pub endor_points: usize,
    pub endor_linewidth_khz: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            field_range_mt: None,
            n_points: 2001,
            linewidth_mt: DEFAULT_EPR_LINEWIDTH_MT,
            shape: LineShape::Gaussian,
            derivative: false,
            amplitude: AmplitudeModel::Saturated,
            endor_range_mhz: (0.0, 60.0),
            endor_points: 6001,
            endor_linewidth_khz: DEFAULT_ENDOR_LINEWIDTH_KHZ,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    pub points_per_step: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            points_per_step: DEFAULT_POINTS_PER_STEP,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Where `protocol` writes the final population state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn spin_system(&self) -> Result<SpinSystem> {
        SpinSystem::try_from(self.system)
    }

    pub fn rate_model(&self) -> Result<RateModel> {
        RateModel::new(self.rates.t1e_s, self.rates.t1n_s, self.temperature_k)
    }

    pub fn levels(&self) -> Result<EnergyLevels> {
        EnergyLevels::compute(&self.spin_system()?, self.field_t)
    }

    pub fn microwave(&self, sys: &SpinSystem) -> Result<f64> {
        let f = self.microwave_mhz.unwrap_or_else(|| sys.nu_e(self.field_t));
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::invalid("microwave_mhz", "must be positive"));
        }
        Ok(f)
    }

    pub fn resolve_target(&self, target: TargetSpec, sys: &SpinSystem) -> Result<HalfInt> {
        match target {
            TargetSpec::Named(TargetName::HighField) => high_field_mi(sys, self.microwave(sys)?),
            TargetSpec::Mi(mi) if sys.has_mi(mi) => Ok(mi),
            TargetSpec::Mi(mi) => Err(Error::InvalidManifold(mi.value())),
        }
    }

    /// Ideal drive strength for this configuration's T1e.
    pub fn ideal_rate(&self) -> f64 {
        IDEAL_RATE_FACTOR / self.rates.t1e_s
    }

    pub fn default_wait(&self) -> f64 {
        DEFAULT_WAIT_T1E * self.rates.t1e_s
    }
}
