//! Run configuration.
//!
//! A config file is flat TOML: one `key = value` per line, no tables. Every
//! key is optional and falls back to the default shown by
//! `RunConfig::default().to_toml()`; unknown keys are rejected. Lengths are in
//! metres unless the key says otherwise, and dipole offsets and constraint
//! radii are fractions of `gamma_radius`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::em::{DipoleSource, Medium};
use crate::error::{Error, Result};
use crate::geometry::{add, fibonacci_lattice, norm, normalize, scale, SurfaceKind, Vec3};
use crate::pinv::ConsistencyPolicy;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Properties,
    Spectrum,
    #[default]
    Reconstruct,
}

impl Experiment {
    pub fn label(&self) -> &'static str {
        match self {
            Experiment::Properties => "properties",
            Experiment::Spectrum => "spectrum",
            Experiment::Reconstruct => "reconstruct",
        }
    }
}

/// Placement of the constraint dipoles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// Fibonacci shell centred on the truth dipole.
    Shell,
    /// Evenly spaced circle in the xz-plane centred on the origin.
    Ring,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Hz.
    pub frequency: f64,
    pub gamma_radius: f64,
    /// Gap between the equivalent and measurement spheres, in wavelengths.
    pub distance_wavelengths: f64,
    pub n_s: usize,
    pub n_m: usize,

    /// Truth dipole position along `truth_axis`, as a fraction of `gamma_radius`.
    pub truth_offset: f64,
    pub truth_axis: Vec3,
    /// Electric dipole moment direction (A m), shared by the constraint dipoles.
    pub truth_moment: Vec3,

    /// Constraint dipoles of the reconstruction experiment.
    pub constraint_layout: Layout,
    pub constraint_count: usize,
    /// Shell or ring radius as a fraction of `gamma_radius`.
    pub constraint_radius: f64,
    /// Constraint dipoles of the properties and spectrum experiments.
    pub analysis_layout: Layout,
    pub analysis_count: usize,
    pub analysis_radius: f64,
    /// Highest degree analysed by the spectrum experiment; 0 picks the
    /// sampling limit of the equivalent-surface grid.
    pub spectrum_n_max: usize,

    /// Relative singular value cut-off for `reconstruct`.
    pub svd_tol: f64,
    /// Relative cut-off for `spectrum`.
    pub spectrum_svd_tol: f64,
    /// Relative cut-off for the scenario matrix in `properties`.
    pub properties_svd_tol: f64,
    /// Relative cut-off for `B•`.
    pub btil_tol: f64,
    pub consistency: ConsistencyPolicy,
    /// Entry scale of the random `W`, `V` of the `{1}`-inverse; 0 gives `R† = R⁺`.
    pub one_inverse_scale: f64,

    /// Near evaluation radius as a multiple of `gamma_radius`.
    pub near_factor: f64,
    /// Far evaluation radius in wavelengths.
    pub far_wavelengths: f64,
    pub n_eval: usize,
    /// Relative standard deviation of complex Gaussian noise added to `b`.
    pub noise: f64,

    /// Random systems in `properties`.
    pub properties_trials: usize,
    pub properties_max_rows: usize,
    pub properties_max_cols: usize,

    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Reconstruct,
            frequency: 5e9,
            gamma_radius: 0.04,
            distance_wavelengths: 2.0,
            n_s: 400,
            n_m: 400,
            truth_offset: 0.5,
            truth_axis: [0.0, 0.0, 1.0],
            truth_moment: [1.0, 0.0, 0.0],
            constraint_layout: Layout::Shell,
            constraint_count: 12,
            constraint_radius: 0.1,
            analysis_layout: Layout::Ring,
            analysis_count: 12,
            analysis_radius: 0.8,
            spectrum_n_max: 0,
            svd_tol: 1e-4,
            spectrum_svd_tol: 1e-3,
            properties_svd_tol: 1e-8,
            btil_tol: 1e-10,
            consistency: ConsistencyPolicy::Project,
            one_inverse_scale: 0.0,
            near_factor: 1.1,
            far_wavelengths: 20.0,
            n_eval: 200,
            noise: 0.0,
            properties_trials: 200,
            properties_max_rows: 50,
            properties_max_cols: 80,
            out_dir: PathBuf::from("results"),
            seed: 20240917,
        }
    }
}

fn config_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let quoted = e.message().split('`').nth(1).map(str::to_string);
            let from_span = e.span().and_then(|span| {
                let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
                let line = text[line_start..].lines().next()?;
                let key = line.split('=').next()?.trim();
                (!key.is_empty() && line.contains('=')).then(|| key.to_string())
            });
            let field = quoted.or(from_span).unwrap_or_else(|| "<file>".to_string());
            config_err(&field, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err("--config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// Singular value cut-off of the selected experiment.
    pub fn active_tol(&self) -> f64 {
        match self.experiment {
            Experiment::Properties => self.properties_svd_tol,
            Experiment::Spectrum => self.spectrum_svd_tol,
            Experiment::Reconstruct => self.svd_tol,
        }
    }

    pub fn set_active_tol(&mut self, tol: f64) {
        match self.experiment {
            Experiment::Properties => self.properties_svd_tol = tol,
            Experiment::Spectrum => self.spectrum_svd_tol = tol,
            Experiment::Reconstruct => self.svd_tol = tol,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("frequency", self.frequency),
            ("gamma_radius", self.gamma_radius),
            ("distance_wavelengths", self.distance_wavelengths),
            ("constraint_radius", self.constraint_radius),
            ("analysis_radius", self.analysis_radius),
            ("near_factor", self.near_factor),
            ("far_wavelengths", self.far_wavelengths),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(config_err(field, format!("must be positive and finite, got {v}")));
            }
        }
        for (field, v) in [
            ("svd_tol", self.svd_tol),
            ("spectrum_svd_tol", self.spectrum_svd_tol),
            ("properties_svd_tol", self.properties_svd_tol),
            ("btil_tol", self.btil_tol),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(config_err(field, format!("must lie in (0, 1), got {v}")));
            }
        }
        for (field, v) in [("noise", self.noise), ("one_inverse_scale", self.one_inverse_scale)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config_err(field, format!("must be non-negative, got {v}")));
            }
        }
        if !(self.truth_offset.is_finite() && self.truth_offset >= 0.0 && self.truth_offset < 1.0) {
            return Err(config_err(
                "truth_offset",
                format!("must lie in [0, 1) so the dipole is inside the equivalent sphere, got {}", self.truth_offset),
            ));
        }
        for (field, v) in [("truth_axis", self.truth_axis), ("truth_moment", self.truth_moment)] {
            if !(v.iter().all(|c| c.is_finite()) && norm(v) > 0.0) {
                return Err(config_err(field, "must be a finite non-zero vector"));
            }
        }
        for (field, v) in [("n_s", self.n_s), ("n_m", self.n_m)] {
            if v < 4 {
                return Err(config_err(field, format!("needs at least 4 nodes, got {v}")));
            }
        }
        if self.n_eval < 4 {
            return Err(config_err("n_eval", format!("needs at least 4 nodes, got {}", self.n_eval)));
        }
        if self.near_factor <= 1.0 {
            return Err(config_err("near_factor", "the near surface must lie outside the equivalent sphere"));
        }
        if self.analysis_count == 0 {
            return Err(config_err("analysis_count", "the spectrum experiment needs constraint dipoles"));
        }
        if self.properties_max_rows == 0 || self.properties_max_cols == 0 {
            return Err(config_err("properties_max_rows", "random system dimensions must be positive"));
        }
        let a = self.gamma_radius;
        for (field, layout, radius, count) in [
            ("constraint_radius", self.constraint_layout, self.constraint_radius, self.constraint_count),
            ("analysis_radius", self.analysis_layout, self.analysis_radius, self.analysis_count),
        ] {
            for d in constraint_positions(layout, count, radius, self.truth_offset, self.truth_axis, a) {
                if norm(d) >= a {
                    return Err(config_err(
                        field,
                        format!("constraint dipole at {:.4} a is outside the equivalent sphere", norm(d) / a),
                    ));
                }
            }
        }
        Medium::vacuum(self.frequency).map_err(|e| config_err("frequency", e.to_string()))?;
        Ok(())
    }

    pub fn truth_position(&self) -> Vec3 {
        scale(normalize(self.truth_axis), self.truth_offset * self.gamma_radius)
    }

    pub fn truth(&self) -> Result<DipoleSource> {
        DipoleSource::electric(self.truth_position(), self.truth_moment)
    }

    /// Constraint dipoles of the reconstruction experiment.
    pub fn constraint_dipoles(&self) -> Result<Vec<DipoleSource>> {
        self.dipoles(self.constraint_layout, self.constraint_count, self.constraint_radius)
    }

    /// Constraint dipoles of the properties and spectrum experiments.
    pub fn analysis_dipoles(&self) -> Result<Vec<DipoleSource>> {
        self.dipoles(self.analysis_layout, self.analysis_count, self.analysis_radius)
    }

    fn dipoles(&self, layout: Layout, count: usize, radius: f64) -> Result<Vec<DipoleSource>> {
        constraint_positions(layout, count, radius, self.truth_offset, self.truth_axis, self.gamma_radius)
            .into_iter()
            .map(|p| DipoleSource::electric(p, self.truth_moment))
            .collect()
    }
}

fn constraint_positions(
    layout: Layout,
    count: usize,
    radius: f64,
    truth_offset: f64,
    truth_axis: Vec3,
    a: f64,
) -> Vec<Vec3> {
    match layout {
        Layout::Ring => (0..count)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
                [radius * a * t.sin(), 0.0, radius * a * t.cos()]
            })
            .collect(),
        Layout::Shell => {
            let centre = scale(normalize(truth_axis), truth_offset * a);
            fibonacci_lattice(count, radius * a, SurfaceKind::Evaluation)
                .frames
                .iter()
                .map(|f| add(centre, f.position))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_names_field() {
        match RunConfig::from_toml("frequencyy = 1.0\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "frequencyy"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invalid_value_names_field() {
        match RunConfig::from_toml("gamma_radius = -1.0\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "gamma_radius"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml("seed = 1\nn_s = \"many\"\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "n_s"),
            other => panic!("{other:?}"),
        }
        match RunConfig::from_toml("truth_offset = 0.95\nconstraint_radius = 0.1\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "constraint_radius"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn shell_is_centred_on_truth() {
        let cfg = RunConfig::default();
        let t = cfg.truth_position();
        for d in cfg.constraint_dipoles().unwrap() {
            let r = norm(crate::geometry::sub(d.position, t));
            assert!((r - 0.1 * cfg.gamma_radius).abs() < 1e-15);
        }
        assert_eq!(cfg.analysis_dipoles().unwrap().len(), 12);
    }
}
