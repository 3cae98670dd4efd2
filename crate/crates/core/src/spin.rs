//! Spin quantum numbers and the static parameters of an electron-nuclear spin pair.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A half-integer quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    /// Converts `value` if it is an exact multiple of 1/2.
    pub fn from_f64(value: f64) -> Option<Self> {
        let twice = 2.0 * value;
        if !twice.is_finite() || (twice - twice.round()).abs() > 1e-9 || twice.abs() > 1e6 {
            return None;
        }
        Some(HalfInt(twice.round() as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    /// Projections m = j, j-1, ..., -j.
    pub fn projections(self) -> impl Iterator<Item = HalfInt> {
        let j = self.0;
        (0..=j).map(move |k| HalfInt(j - 2 * k))
    }

    pub fn neg(self) -> Self {
        HalfInt(-self.0)
    }

    pub fn step(self, by: i32) -> Self {
        HalfInt(self.0 + 2 * by)
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }
}

impl Serialize for HalfInt {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(de)?;
        HalfInt::from_f64(v)
            .ok_or_else(|| serde::de::Error::custom(format!("{v} is not a half-integer")))
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Basis-state assignment (mS, mI) of a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Label {
    pub ms: HalfInt,
    pub mi: HalfInt,
}

impl Label {
    pub fn new(ms: HalfInt, mi: HalfInt) -> Self {
        Label { ms, mi }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(mS={}, mI={})", self.ms, self.mi)
    }
}

/// Static parameters of the coupled electron-nuclear spin system.
///
/// The Hamiltonian convention is H/h = ν_e·Sz − ν_n·Iz + A·S·I with
/// ν_e = g·μB·B/h and ν_n = γn·B. No quadrupole term exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpinParams", into = "SpinParams")]
pub struct SpinSystem {
    electron_spin: HalfInt,
    nuclear_spin: HalfInt,
    g_factor: f64,
    gamma_n: f64,
    hyperfine_a: f64,
}

impl SpinSystem {
    pub fn new(s: f64, i: f64, g_factor: f64, gamma_n: f64, hyperfine_a: f64) -> Result<Self> {
        let electron_spin = HalfInt::from_f64(s)
            .filter(|h| h.twice() >= 0)
            .ok_or(Error::InvalidSpin(s))?;
        let nuclear_spin = HalfInt::from_f64(i)
            .filter(|h| h.twice() >= 0)
            .ok_or(Error::InvalidSpin(i))?;
        if electron_spin.twice() < 1 {
            return Err(Error::ElectronSpinTooSmall(s));
        }
        if !(g_factor.is_finite() && g_factor > 0.0) {
            return Err(Error::invalid("g_factor", format!("{g_factor} is not a positive number")));
        }
        if !gamma_n.is_finite() {
            return Err(Error::invalid("gamma_n", "must be finite"));
        }
        if !hyperfine_a.is_finite() {
            return Err(Error::invalid("hyperfine_a", "must be finite"));
        }
        Ok(SpinSystem {
            electron_spin,
            nuclear_spin,
            g_factor,
            gamma_n,
            hyperfine_a,
        })
    }

    pub fn electron_spin(&self) -> HalfInt {
        self.electron_spin
    }

    pub fn nuclear_spin(&self) -> HalfInt {
        self.nuclear_spin
    }

    pub fn s(&self) -> f64 {
        self.electron_spin.value()
    }

    pub fn i(&self) -> f64 {
        self.nuclear_spin.value()
    }

    pub fn g_factor(&self) -> f64 {
        self.g_factor
    }

    /// Nuclear gyromagnetic ratio, MHz/T.
    pub fn gamma_n(&self) -> f64 {
        self.gamma_n
    }

    /// Isotropic hyperfine constant, MHz.
    pub fn hyperfine_a(&self) -> f64 {
        self.hyperfine_a
    }

    pub fn with_hyperfine(mut self, a: f64) -> Self {
        self.hyperfine_a = a;
        self
    }

    pub fn with_gamma_n(mut self, gamma_n: f64) -> Self {
        self.gamma_n = gamma_n;
        self
    }

    pub fn with_g_factor(mut self, g: f64) -> Self {
        self.g_factor = g;
        self
    }

    pub fn electron_multiplicity(&self) -> usize {
        self.electron_spin.twice() as usize + 1
    }

    pub fn nuclear_multiplicity(&self) -> usize {
        self.nuclear_spin.twice() as usize + 1
    }

    /// Hilbert-space dimension (2S+1)(2I+1).
    pub fn dim(&self) -> usize {
        self.electron_multiplicity() * self.nuclear_multiplicity()
    }

    /// Product basis in Hamiltonian row order: mS descending, then mI descending.
    pub fn basis(&self) -> Vec<Label> {
        self.electron_spin
            .projections()
            .flat_map(|ms| self.nuclear_spin.projections().map(move |mi| Label::new(ms, mi)))
            .collect()
    }

    pub fn basis_index(&self, label: Label) -> Option<usize> {
        let s2 = self.electron_spin.twice();
        let i2 = self.nuclear_spin.twice();
        let (ms2, mi2) = (label.ms.twice(), label.mi.twice());
        if ms2.abs() > s2 || mi2.abs() > i2 || (s2 - ms2) % 2 != 0 || (i2 - mi2) % 2 != 0 {
            return None;
        }
        let is = ((s2 - ms2) / 2) as usize;
        let ii = ((i2 - mi2) / 2) as usize;
        Some(is * self.nuclear_multiplicity() + ii)
    }

    pub fn has_mi(&self, mi: HalfInt) -> bool {
        mi.abs() <= self.nuclear_spin && (self.nuclear_spin.twice() - mi.twice()) % 2 == 0
    }

    pub fn has_ms(&self, ms: HalfInt) -> bool {
        ms.abs() <= self.electron_spin && (self.electron_spin.twice() - ms.twice()) % 2 == 0
    }

    /// Electron Zeeman frequency at `field`, MHz.
    pub fn nu_e(&self, field: f64) -> f64 {
        crate::constants::electron_larmor(self.g_factor, field)
    }

    /// Nuclear Zeeman frequency γn·B, MHz (signed).
    pub fn nu_n(&self, field: f64) -> f64 {
        self.gamma_n * field
    }
}

/// Unvalidated serialized form of [`SpinSystem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinParams {
    pub electron_spin: f64,
    pub nuclear_spin: f64,
    pub g_factor: f64,
    pub gamma_n_mhz_per_t: f64,
    pub hyperfine_a_mhz: f64,
}

impl TryFrom<SpinParams> for SpinSystem {
    type Error = Error;

    fn try_from(raw: SpinParams) -> Result<Self> {
        SpinSystem::new(
            raw.electron_spin,
            raw.nuclear_spin,
            raw.g_factor,
            raw.gamma_n_mhz_per_t,
            raw.hyperfine_a_mhz,
        )
    }
}

impl From<SpinSystem> for SpinParams {
    fn from(sys: SpinSystem) -> Self {
        SpinParams {
            electron_spin: sys.s(),
            nuclear_spin: sys.i(),
            g_factor: sys.g_factor,
            gamma_n_mhz_per_t: sys.gamma_n,
            hyperfine_a_mhz: sys.hyperfine_a,
        }
    }
}
