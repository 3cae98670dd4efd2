//! Synthetic field-swept EPR spectra and ENDOR stick spectra.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::kinetics::check_dim;
use crate::levels::{endor_frequencies_merged, epr_lines, transition_table, EnergyLevels, TransitionKind, ENDOR_MERGE_MHZ};
use crate::metrics::manifold_fractions;
use crate::population::PopulationState;

pub const DEFAULT_EPR_LINEWIDTH_MT: f64 = 0.1;
pub const DEFAULT_ENDOR_LINEWIDTH_KHZ: f64 = 50.0;
/// Minimum line spacing, in linewidths, for component areas to be separable.
pub const RESOLUTION_WIDTHS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineShape {
    #[default]
    Gaussian,
    Lorentzian,
}

impl LineShape {
    pub fn name(self) -> &'static str {
        match self {
            LineShape::Gaussian => "gaussian",
            LineShape::Lorentzian => "lorentzian",
        }
    }

    /// Unit-area profile with full width at half maximum `fwhm`, at offset `x`.
    pub fn value(self, x: f64, fwhm: f64) -> f64 {
        match self {
            LineShape::Gaussian => {
                let a = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
                (a / std::f64::consts::PI).sqrt() * (-a * x * x).exp()
            }
            LineShape::Lorentzian => {
                let g = 0.5 * fwhm;
                g / (std::f64::consts::PI * (x * x + g * g))
            }
        }
    }

    /// d/dx of [`LineShape::value`].
    pub fn derivative(self, x: f64, fwhm: f64) -> f64 {
        match self {
            LineShape::Gaussian => {
                let a = 4.0 * std::f64::consts::LN_2 / (fwhm * fwhm);
                -2.0 * a * x * self.value(x, fwhm)
            }
            LineShape::Lorentzian => {
                let g = 0.5 * fwhm;
                -2.0 * g * x / (std::f64::consts::PI * (x * x + g * g).powi(2))
            }
        }
    }

    fn profile(self, x: f64, fwhm: f64, derivative: bool) -> f64 {
        if derivative {
            self.derivative(x, fwhm)
        } else {
            self.value(x, fwhm)
        }
    }
}

/// How a hyperfine component's intensity follows the populations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeModel {
    /// Proportional to the manifold's total population.
    #[default]
    Saturated,
    /// Sum of lower-minus-upper population differences over the manifold's
    /// EPR transitions.
    PopulationDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumMeta {
    pub kind: &'static str,
    pub axis_unit: &'static str,
    pub shape: LineShape,
    /// FWHM in axis units.
    pub linewidth: f64,
    pub derivative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub axis: Vec<f64>,
    pub intensity: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    /// Two-column CSV with `# key=value` metadata lines.
    pub fn to_csv(&self) -> String {
        self.to_csv_with(&[])
    }

    /// As [`Spectrum::to_csv`], with extra metadata lines after the built-in ones.
    pub fn to_csv_with(&self, extra: &[(String, String)]) -> String {
        let mut out = String::new();
        let m = &self.meta;
        let _ = writeln!(out, "# kind={}", m.kind);
        let _ = writeln!(out, "# shape={}", m.shape.name());
        let _ = writeln!(out, "# linewidth_{}={}", m.axis_unit, sig12(m.linewidth));
        let _ = writeln!(out, "# derivative={}", m.derivative);
        for (k, v) in extra {
            let _ = writeln!(out, "# {k}={v}");
        }
        let axis_name = if m.axis_unit == "mT" { "field_mT" } else { "frequency_MHz" };
        let _ = writeln!(out, "{axis_name},intensity");
        for (x, y) in self.axis.iter().zip(&self.intensity) {
            let _ = writeln!(out, "{},{}", sig12(*x), sig12(*y));
        }
        out
    }

    fn step(&self) -> f64 {
        if self.axis.len() > 1 {
            self.axis[1] - self.axis[0]
        } else {
            0.0
        }
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("n_points", "at least 2 points are required"));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid("range", format!("({lo}, {hi}) must be increasing")));
    }
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|k| if k == n - 1 { hi } else { lo + step * k as f64 }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprOptions {
    pub field_range_mt: (f64, f64),
    pub n_points: usize,
    pub linewidth_mt: f64,
    pub shape: LineShape,
    pub derivative: bool,
    pub amplitude: AmplitudeModel,
}

impl EprOptions {
    /// Defaults over a given field window.
    pub fn over(field_range_mt: (f64, f64)) -> Self {
        EprOptions {
            field_range_mt,
            n_points: 2001,
            linewidth_mt: DEFAULT_EPR_LINEWIDTH_MT,
            shape: LineShape::Gaussian,
            derivative: false,
            amplitude: AmplitudeModel::Saturated,
        }
    }
}

/// One component per mI at its resonance field: (center mT, amplitude).
pub fn epr_components(
    levels: &EnergyLevels,
    p: &PopulationState,
    microwave_mhz: f64,
    amplitude: AmplitudeModel,
) -> Result<Vec<(f64, f64)>> {
    check_dim(p, levels)?;
    let lines = epr_lines(levels.system(), microwave_mhz)?;
    let fractions = manifold_fractions(p, levels)?;
    let table = transition_table(levels)?;
    lines
        .iter()
        .map(|line| {
            let amp = match amplitude {
                AmplitudeModel::Saturated => fractions
                    .iter()
                    .find(|(mi, _)| *mi == line.mi)
                    .map(|(_, f)| *f)
                    .unwrap_or(0.0),
                AmplitudeModel::PopulationDifference => table
                    .iter()
                    .filter(|t| t.kind == TransitionKind::Epr && t.label_lo.mi == line.mi)
                    .map(|t| p[t.level_lo] - p[t.level_hi])
                    .sum(),
            };
            Ok((line.field * 1e3, amp))
        })
        .collect()
}

/// Field-swept EPR spectrum at fixed microwave frequency.
pub fn simulate_epr(
    levels: &EnergyLevels,
    p: &PopulationState,
    microwave_mhz: f64,
    opts: &EprOptions,
) -> Result<Spectrum> {
    if !(opts.linewidth_mt.is_finite() && opts.linewidth_mt > 0.0) {
        return Err(Error::invalid("linewidth_mt", "must be positive"));
    }
    let axis = linspace(opts.field_range_mt.0, opts.field_range_mt.1, opts.n_points)?;
    let components = epr_components(levels, p, microwave_mhz, opts.amplitude)?;
    for &(center, _) in &components {
        if center < opts.field_range_mt.0 || center > opts.field_range_mt.1 {
            return Err(Error::LineOutOfRange(center));
        }
    }
    Ok(render(axis, &components, opts.shape, opts.linewidth_mt, opts.derivative, "epr", "mT"))
}

fn render(
    axis: Vec<f64>,
    components: &[(f64, f64)],
    shape: LineShape,
    width: f64,
    derivative: bool,
    kind: &'static str,
    axis_unit: &'static str,
) -> Spectrum {
    let intensity = axis
        .iter()
        .map(|&x| {
            components
                .iter()
                .map(|&(c, a)| a * shape.profile(x - c, width, derivative))
                .sum()
        })
        .collect();
    Spectrum {
        axis,
        intensity,
        meta: SpectrumMeta {
            kind,
            axis_unit,
            shape,
            linewidth: width,
            derivative,
        },
    }
}

/// Fraction of the total area carried by each component.
///
/// Absorption spectra are integrated by the trapezoid rule with each point
/// assigned to its nearest center. Derivative spectra are fitted by linear
/// least squares to the known derivative lineshapes, which gives the areas
/// without numerical double integration.
pub fn component_areas(spec: &Spectrum, centers: &[f64]) -> Result<Vec<f64>> {
    if centers.is_empty() {
        return Err(Error::invalid("line_centers", "at least one center is required"));
    }
    let width = spec.meta.linewidth;
    let mut sorted = centers.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        let spacing = w[1] - w[0];
        if spacing <= RESOLUTION_WIDTHS * width {
            return Err(Error::Unresolved(spacing, width));
        }
    }
    let areas = if spec.meta.derivative {
        fitted_amplitudes(spec, centers)?
    } else {
        binned_areas(spec, centers)
    };
    let total: f64 = areas.iter().sum();
    if !(total.is_finite() && total != 0.0) {
        return Err(Error::invalid("spectrum", "total component area is zero"));
    }
    Ok(areas.into_iter().map(|a| a / total).collect())
}

fn binned_areas(spec: &Spectrum, centers: &[f64]) -> Vec<f64> {
    let h = spec.step();
    let n = spec.axis.len();
    let mut areas = vec![0.0; centers.len()];
    for (k, (&x, &y)) in spec.axis.iter().zip(&spec.intensity).enumerate() {
        let weight = if k == 0 || k == n - 1 { 0.5 * h } else { h };
        let nearest = centers
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(i, _)| i)
            .expect("centers is non-empty");
        areas[nearest] += weight * y;
    }
    areas
}

fn fitted_amplitudes(spec: &Spectrum, centers: &[f64]) -> Result<Vec<f64>> {
    let m = &spec.meta;
    let design = DMatrix::from_fn(spec.axis.len(), centers.len(), |r, c| {
        m.shape.profile(spec.axis[r] - centers[c], m.linewidth, m.derivative)
    });
    let y = DVector::from_column_slice(&spec.intensity);
    let solution = design
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Integrator(format!("lineshape fit failed: {e}")))?;
    Ok(solution.iter().copied().collect())
}

/// Distinct NMR lines in `rf_range_mhz` as (frequency, weight), the weight
/// counting merged degenerate transitions.
pub fn endor_sticks(levels: &EnergyLevels, rf_range_mhz: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = rf_range_mhz;
    let mut sticks: Vec<(f64, f64)> = endor_frequencies_merged(levels, ENDOR_MERGE_MHZ)?
        .into_values()
        .flatten()
        .filter(|l| l.frequency >= lo && l.frequency <= hi)
        .map(|l| (l.frequency, l.multiplicity as f64))
        .collect();
    sticks.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Lines from different mS manifolds can coincide when A = 0.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (f, w) in sticks {
        match merged.last_mut() {
            Some((f0, w0)) if (f - *f0).abs() < ENDOR_MERGE_MHZ => {
                *f0 = (*f0 * *w0 + f * w) / (*w0 + w);
                *w0 += w;
            }
            _ => merged.push((f, w)),
        }
    }
    Ok(merged)
}

/// ENDOR stick spectrum; each line is a peak-normalized profile scaled by its weight.
pub fn simulate_endor_sticks(
    levels: &EnergyLevels,
    rf_range_mhz: (f64, f64),
    n_points: usize,
    linewidth_khz: f64,
    shape: LineShape,
) -> Result<Spectrum> {
    if !(linewidth_khz.is_finite() && linewidth_khz > 0.0) {
        return Err(Error::invalid("linewidth_khz", "must be positive"));
    }
    let axis = linspace(rf_range_mhz.0, rf_range_mhz.1, n_points)?;
    let width = linewidth_khz * 1e-3;
    let peak = shape.value(0.0, width);
    let sticks: Vec<(f64, f64)> = endor_sticks(levels, rf_range_mhz)?
        .into_iter()
        .map(|(f, w)| (f, w / peak))
        .collect();
    Ok(render(axis, &sticks, shape, width, false, "endor", "MHz"))
}
