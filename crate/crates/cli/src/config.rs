//! Run configuration: TOML schema, defaults, presets and validation.

use std::path::Path;

use serde::{Deserialize, Serialize};

/// Top-level configuration of one batch run.  Every field has a default so
/// a preset or a sparse TOML file resolves to a complete, echoable config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// One of fig1..fig6, sample-moments, custom.
    pub experiment: String,
    pub seed: u64,
    pub lattice: LatticeSection,
    pub integrator: IntegratorSection,
    pub model: ModelSection,
    pub apodisation: ApodisationSection,
    pub state: StateSection,
    pub ensemble: EnsembleSection,
    pub assertions: AssertionsSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: "custom".into(),
            seed: 1,
            lattice: LatticeSection::default(),
            integrator: IntegratorSection::default(),
            model: ModelSection::default(),
            apodisation: ApodisationSection::default(),
            state: StateSection::default(),
            ensemble: EnsembleSection::default(),
            assertions: AssertionsSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSection {
    pub n_points: usize,
    pub x_max: f64,
}

impl Default for LatticeSection {
    fn default() -> Self {
        LatticeSection { n_points: 256, x_max: 20.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub dt: f64,
    pub t_final: f64,
    pub midpoint_iterations: usize,
    pub dealias: bool,
    /// Keep every `store_stride`-th step in the CSV (the initial and final
    /// rows are always present).
    pub store_stride: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            dt: 0.005,
            t_final: 20.0,
            midpoint_iterations: 4,
            dealias: false,
            store_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// none | diffraction | cubic (diffraction plus i g |psi|^2 psi drift).
    pub kind: String,
    pub cubic_coupling: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { kind: "diffraction".into(), cubic_coupling: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApodisationSection {
    pub enabled: bool,
    /// Power of the leading absorber term (tenth-order apodisation in the
    /// even-power series has leading term x^20).
    pub order: usize,
    /// Boundary absorption Gamma at x = +-x_max.
    pub gamma: f64,
    pub phase_correction: bool,
    /// Add the s-ordered vacuum noise that accompanies absorption.
    pub quantum_noise: bool,
    /// Track the reservoir density and the number bookkeeping columns.
    pub track_reservoir: bool,
}

impl Default for ApodisationSection {
    fn default() -> Self {
        ApodisationSection {
            enabled: false,
            order: 20,
            gamma: 10.0,
            phase_correction: true,
            quantum_noise: false,
            track_reservoir: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    /// gaussian-beam | vacuum | coherent | fock | gaussian
    pub kind: String,
    /// Width of the gaussian-beam initial condition.
    pub sigma: f64,
    /// positive-p | wigner | q
    pub ordering: String,
    /// Coherent amplitudes as [re, im] pairs (one per mode).
    pub amplitudes: Vec<[f64; 2]>,
    /// Fock occupations per mode.
    pub occupations: Vec<u64>,
    /// Optional per-mode contour radii (default sqrt(n)).
    pub radii: Option<Vec<f64>>,
    /// Extended mean vector of a general Gaussian state, [re, im] pairs of
    /// length 2M.
    pub mean: Vec<[f64; 2]>,
    /// Dense s-ordered covariance, 2M rows of 2M [re, im] pairs.
    pub covariance: Vec<Vec<[f64; 2]>>,
}

impl Default for StateSection {
    fn default() -> Self {
        StateSection {
            kind: "gaussian-beam".into(),
            sigma: 1.0,
            ordering: "wigner".into(),
            amplitudes: Vec::new(),
            occupations: vec![3],
            radii: None,
            mean: Vec::new(),
            covariance: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    /// Number of stochastic field trajectories (field experiments).
    pub trajectories: usize,
    /// Number of phase-space samples (moment experiments).
    pub samples: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { trajectories: 1, samples: 100_000 }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssertionsSection {
    /// Fail the run (nonzero exit) if an experiment invariant is breached.
    pub enabled: bool,
}

impl RunConfig {
    /// Parse a TOML file.
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| anyhow::anyhow!("cannot parse {}: {e}", path.display()))?;
        Ok(cfg)
    }

    /// Validate every section; all violations are reported together,
    /// field by field.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errors = Vec::new();
        let known = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "sample-moments", "custom"];
        if !known.contains(&self.experiment.as_str()) {
            errors.push(format!("experiment: unknown name '{}'", self.experiment));
        }
        if self.lattice.n_points < 2 || self.lattice.n_points % 2 != 0 {
            errors.push(format!(
                "lattice.n_points: must be even and >= 2, got {}",
                self.lattice.n_points
            ));
        }
        if self.lattice.x_max <= 0.0 || !self.lattice.x_max.is_finite() {
            errors.push(format!("lattice.x_max: must be positive and finite, got {}", self.lattice.x_max));
        }
        if self.integrator.dt <= 0.0 || !self.integrator.dt.is_finite() {
            errors.push(format!("integrator.dt: must be positive and finite, got {}", self.integrator.dt));
        }
        if self.integrator.t_final < 0.0 || !self.integrator.t_final.is_finite() {
            errors.push(format!(
                "integrator.t_final: must be non-negative and finite, got {}",
                self.integrator.t_final
            ));
        }
        if self.integrator.midpoint_iterations == 0 {
            errors.push("integrator.midpoint_iterations: must be at least 1".into());
        }
        if !["none", "diffraction", "cubic"].contains(&self.model.kind.as_str()) {
            errors.push(format!("model.kind: unknown kind '{}'", self.model.kind));
        }
        if self.apodisation.enabled {
            if self.apodisation.order < 4 || self.apodisation.order % 2 != 0 {
                errors.push(format!(
                    "apodisation.order: must be even and >= 4, got {}",
                    self.apodisation.order
                ));
            }
            if self.apodisation.gamma < 0.0 || !self.apodisation.gamma.is_finite() {
                errors.push(format!(
                    "apodisation.gamma: must be non-negative and finite, got {}",
                    self.apodisation.gamma
                ));
            }
        }
        if !["gaussian-beam", "vacuum", "coherent", "fock", "gaussian"]
            .contains(&self.state.kind.as_str())
        {
            errors.push(format!("state.kind: unknown kind '{}'", self.state.kind));
        }
        if self.state.kind == "gaussian-beam" && (self.state.sigma <= 0.0 || self.state.sigma.is_nan()) {
            errors.push(format!("state.sigma: must be positive, got {}", self.state.sigma));
        }
        if !["positive-p", "wigner", "q"].contains(&self.state.ordering.as_str()) {
            errors.push(format!("state.ordering: unknown ordering '{}'", self.state.ordering));
        }
        if self.state.kind == "coherent" && self.state.amplitudes.is_empty() {
            errors.push("state.amplitudes: coherent state needs at least one amplitude".into());
        }
        if self.state.kind == "fock" {
            if self.state.occupations.is_empty() {
                errors.push("state.occupations: fock state needs at least one mode".into());
            }
            if let Some(radii) = &self.state.radii {
                if radii.len() != self.state.occupations.len() {
                    errors.push(format!(
                        "state.radii: {} radii for {} occupations",
                        radii.len(),
                        self.state.occupations.len()
                    ));
                }
                for (&n, &r) in self.state.occupations.iter().zip(radii.iter()) {
                    if n > 0 && (r <= 0.0 || !r.is_finite()) {
                        errors.push(format!("state.radii: radius {r} invalid for occupation {n}"));
                    }
                }
            }
        }
        if self.state.kind == "gaussian" {
            let dim = self.state.mean.len();
            if dim == 0 || dim % 2 != 0 {
                errors.push(format!("state.mean: extended mean must have even nonzero length, got {dim}"));
            }
            if self.state.covariance.len() != dim
                || self.state.covariance.iter().any(|row| row.len() != dim)
            {
                errors.push(format!(
                    "state.covariance: must be a dense {dim}x{dim} matrix matching the mean length"
                ));
            }
        }
        if self.ensemble.trajectories == 0 {
            errors.push("ensemble.trajectories: must be at least 1".into());
        }
        if self.ensemble.samples == 0 {
            errors.push("ensemble.samples: must be at least 1".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(errors)
        }
    }

    /// Ordering parameter of the configured state.
    pub fn ordering(&self) -> phasespace::Ordering {
        match self.state.ordering.as_str() {
            "positive-p" => phasespace::Ordering::positive_p(),
            "q" => phasespace::Ordering::q(),
            _ => phasespace::Ordering::wigner(),
        }
    }

    /// Number of integration steps.
    pub fn n_steps(&self) -> usize {
        (self.integrator.t_final / self.integrator.dt).round() as usize
    }
}

/// Built-in experiment presets.  `fig1`/`fig2` are the unapodised
/// diffraction benchmarks on the small and doubled domain, `fig3`..`fig5`
/// the tenth-order absorber with and without the complex phase-shift, and
/// `fig6` the number-conservation bookkeeping run.
pub fn preset(name: &str) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig { experiment: name.to_string(), ..RunConfig::default() };
    match name {
        "fig1" => {
            cfg.lattice = LatticeSection { n_points: 256, x_max: 10.0 };
            cfg.integrator.dt = 0.025;
            cfg.integrator.store_stride = 8;
        }
        "fig2" => {
            cfg.lattice = LatticeSection { n_points: 256, x_max: 20.0 };
            cfg.integrator.dt = 0.005;
            cfg.integrator.store_stride = 40;
        }
        "fig3" | "fig4" | "fig5" | "fig6" => {
            cfg.lattice = LatticeSection { n_points: 256, x_max: 20.0 };
            cfg.integrator.dt = 0.005;
            cfg.integrator.store_stride = 40;
            cfg.apodisation.enabled = true;
            cfg.apodisation.order = 20;
            cfg.apodisation.gamma = 10.0;
            cfg.apodisation.phase_correction = name != "fig3";
            cfg.apodisation.track_reservoir = true;
        }
        "sample-moments" => {
            cfg.state.kind = "fock".into();
            cfg.state.occupations = vec![3];
        }
        other => anyhow::bail!("unknown experiment preset '{other}'"),
    }
    Ok(cfg)
}
