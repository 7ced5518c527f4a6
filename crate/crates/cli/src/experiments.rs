//! Field experiments: the figure reproductions and custom runs.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use phasespace::apodisation::{
    apply_apodisation, build_absorber, field_number, field_number_s_corrected, reservoir_number,
    update_reservoir,
};
use phasespace::integrator::{make_propagator, step, FieldState, IntegratorConfig, ModelSpec};
use phasespace::lattice::{make_lattice, Lattice};
use phasespace::oracle::GaussianBeam;
use phasespace::Result as CoreResult;

use crate::config::RunConfig;
use crate::observables::{version_string, ObservableRecord};

/// Max and L2 deviation between a computed field and an oracle field,
/// over the central half window `|x| < x_max / 2` and over the full
/// domain.
#[derive(Debug, Clone, Copy)]
pub struct ErrorSummary {
    pub max_central: f64,
    pub l2_central: f64,
    pub max_full: f64,
    pub l2_full: f64,
}

/// Pointwise comparison of two fields on the same lattice.
pub fn compare_against_oracle(
    lattice: &Lattice,
    field: &[Complex64],
    oracle: &[Complex64],
) -> anyhow::Result<ErrorSummary> {
    if field.len() != lattice.n_points || oracle.len() != lattice.n_points {
        anyhow::bail!(
            "grid mismatch: lattice has {} points, fields have {} and {}",
            lattice.n_points,
            field.len(),
            oracle.len()
        );
    }
    let half = lattice.x_max / 2.0;
    let mut max_central = 0.0f64;
    let mut l2_central = 0.0f64;
    let mut max_full = 0.0f64;
    let mut l2_full = 0.0f64;
    for (j, &x) in lattice.x_grid.iter().enumerate() {
        let d = (field[j] - oracle[j]).norm();
        max_full = max_full.max(d);
        l2_full += d * d;
        if x.abs() < half {
            max_central = max_central.max(d);
            l2_central += d * d;
        }
    }
    Ok(ErrorSummary {
        max_central,
        l2_central: (l2_central * lattice.dx).sqrt(),
        max_full,
        l2_full: (l2_full * lattice.dx).sqrt(),
    })
}

/// Result of one experiment: the record plus the final field for
/// follow-up comparisons, and any breached assertions.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub record: ObservableRecord,
    pub lattice: Lattice,
    pub final_field: Vec<Complex64>,
    pub assertion_failures: Vec<String>,
}

fn build_model(cfg: &RunConfig) -> ModelSpec {
    match cfg.model.kind.as_str() {
        "none" => ModelSpec::new(),
        "cubic" => {
            let g = cfg.model.cubic_coupling;
            ModelSpec::diffraction()
                .with_drift(move |psi, _| Complex64::new(0.0, g) * psi.norm_sqr() * psi)
        }
        _ => ModelSpec::diffraction(),
    }
}

fn initial_state(cfg: &RunConfig, lattice: &Lattice, rng: &mut ChaCha8Rng) -> FieldState {
    let ordering = cfg.ordering();
    match cfg.state.kind.as_str() {
        "vacuum" => FieldState::vacuum(lattice, ordering, rng),
        _ => {
            let s2 = cfg.state.sigma * cfg.state.sigma;
            FieldState::from_profile(lattice, ordering, |x| {
                Complex64::new((-x * x / (2.0 * s2)).exp(), 0.0)
            })
        }
    }
}

fn apodisation_substep(
    cfg: &RunConfig,
    lattice: &Lattice,
    state: &mut FieldState,
    t_mid: f64,
    rng: &mut ChaCha8Rng,
) -> CoreResult<()> {
    let profile = build_absorber(
        lattice,
        cfg.apodisation.order,
        cfg.apodisation.gamma,
        t_mid,
        cfg.apodisation.phase_correction,
    )?;
    let record =
        apply_apodisation(state, &profile, lattice, cfg.integrator.dt, rng, cfg.apodisation.quantum_noise)?;
    if cfg.apodisation.track_reservoir {
        update_reservoir(state, &record)?;
    }
    Ok(())
}

/// Single-trajectory field run (the classical figure experiments).
fn run_field_single(cfg: &RunConfig) -> anyhow::Result<ExperimentOutput> {
    let start = Instant::now();
    let lattice = make_lattice(cfg.lattice.n_points, cfg.lattice.x_max)?;
    let model = build_model(cfg);
    let dt = cfg.integrator.dt;
    let n_steps = cfg.n_steps();
    let int_cfg = IntegratorConfig {
        dt,
        n_steps,
        midpoint_iterations: cfg.integrator.midpoint_iterations,
        dealias: cfg.integrator.dealias,
        store_stride: cfg.integrator.store_stride,
    };
    let prop = make_propagator(&model, &lattice, dt, cfg.integrator.dealias)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut state = initial_state(cfg, &lattice, &mut rng);
    if cfg.apodisation.track_reservoir {
        state = state.with_reservoir();
    }

    let beam = (cfg.state.kind == "gaussian-beam" && cfg.model.kind == "diffraction")
        .then(|| GaussianBeam::new(cfg.state.sigma));
    let center = lattice.n_points / 2;
    let half = lattice.x_max / 2.0;

    let mut columns = vec!["central_intensity".to_string()];
    if beam.is_some() {
        columns.extend(
            ["central_intensity_exact", "central_intensity_error", "max_dpsi_half_window"]
                .map(String::from),
        );
    }
    if cfg.apodisation.track_reservoir {
        columns.extend(["n_a", "n_a_corrected", "n_r", "n_total"].map(String::from));
    }

    let observe = |state: &FieldState| -> Vec<f64> {
        let mut row = vec![state.psi[center].norm_sqr()];
        if let Some(beam) = &beam {
            let exact_c = beam.central_intensity(state.t);
            row.push(exact_c);
            row.push(state.psi[center].norm_sqr() - exact_c);
            let exact = beam.exact_profile(state.t, &lattice.x_grid);
            let mut max_dpsi = 0.0f64;
            for (j, &x) in lattice.x_grid.iter().enumerate() {
                if x.abs() < half {
                    max_dpsi = max_dpsi.max((state.psi[j] - exact[j]).norm());
                }
            }
            row.push(max_dpsi);
        }
        if cfg.apodisation.track_reservoir {
            row.push(field_number(state, &lattice));
            row.push(field_number_s_corrected(state, &lattice));
            row.push(reservoir_number(state, &lattice));
            row.push(field_number(state, &lattice) + reservoir_number(state, &lattice));
        }
        row
    };

    let mut times = vec![state.t];
    let mut rows = vec![observe(&state)];
    let n0 = field_number(&state, &lattice) + reservoir_number(&state, &lattice);
    let mut peak_central_err = 0.0f64;
    let mut conservation_err = 0.0f64;
    for k in 0..n_steps {
        let t0 = k as f64 * dt;
        step(&mut state, &model, &int_cfg, &prop, &mut rng)
            .map_err(|e| anyhow::anyhow!("step {}: {e}", k + 1))?;
        if cfg.apodisation.enabled {
            apodisation_substep(cfg, &lattice, &mut state, t0 + 0.5 * dt, &mut rng)
                .map_err(|e| anyhow::anyhow!("apodisation at step {}: {e}", k + 1))?;
        }
        if let Some(beam) = &beam {
            let err = (state.psi[center].norm_sqr() - beam.central_intensity(state.t)).abs();
            peak_central_err = peak_central_err.max(err);
        }
        if cfg.apodisation.track_reservoir {
            let total = field_number(&state, &lattice) + reservoir_number(&state, &lattice);
            conservation_err = conservation_err.max((total - n0).abs() / n0.abs().max(1e-300));
        }
        if (k + 1) % cfg.integrator.store_stride.max(1) == 0 || k + 1 == n_steps {
            times.push(state.t);
            rows.push(observe(&state));
        }
    }

    let mut summary = Vec::new();
    summary.push(("final_norm".to_string(), lattice.norm_squared(&state.psi)));
    if let Some(beam) = &beam {
        summary.push(("peak_central_intensity_error".to_string(), peak_central_err));
        let exact = beam.exact_profile(state.t, &lattice.x_grid);
        let errs = compare_against_oracle(&lattice, &state.psi, &exact)?;
        summary.push(("final_max_dpsi_half_window".to_string(), errs.max_central));
        summary.push(("final_l2_dpsi_half_window".to_string(), errs.l2_central));
        // Intensity error in a unit-wide band around |x| = x_max/2.
        let mut boundary = 0.0f64;
        for (j, &x) in lattice.x_grid.iter().enumerate() {
            if (x.abs() - half).abs() <= 1.0 {
                boundary = boundary.max((state.psi[j].norm_sqr() - exact[j].norm_sqr()).abs());
            }
        }
        summary.push(("boundary_intensity_error".to_string(), boundary));
    }
    if cfg.apodisation.track_reservoir {
        summary.push(("number_conservation_rel_error".to_string(), conservation_err));
        summary.push(("final_reservoir_number".to_string(), reservoir_number(&state, &lattice)));
    }

    let assertion_failures = check_assertions(cfg, &summary);
    let record = ObservableRecord {
        experiment: cfg.experiment.clone(),
        index_label: "t".into(),
        times,
        columns,
        rows,
        summary,
        seed: cfg.seed,
        version: version_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput { record, lattice, final_field: state.psi, assertion_failures })
}

/// Ensemble field run: independent trajectories on per-trajectory RNG
/// streams, reduced to means and standard errors per stored time.
fn run_field_ensemble(cfg: &RunConfig) -> anyhow::Result<ExperimentOutput> {
    let start = Instant::now();
    let lattice = make_lattice(cfg.lattice.n_points, cfg.lattice.x_max)?;
    let model = build_model(cfg);
    let dt = cfg.integrator.dt;
    let n_steps = cfg.n_steps();
    let int_cfg = IntegratorConfig {
        dt,
        n_steps,
        midpoint_iterations: cfg.integrator.midpoint_iterations,
        dealias: cfg.integrator.dealias,
        store_stride: cfg.integrator.store_stride,
    };
    let trajectories = cfg.ensemble.trajectories;

    // Per trajectory and stored time: (N_a corrected, N_r, total drift).
    type TrajectorySeries = (Vec<f64>, Vec<[f64; 3]>);
    let per_traj: Vec<anyhow::Result<TrajectorySeries>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|idx| {
            let prop = make_propagator(&model, &lattice, dt, cfg.integrator.dealias)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(idx);
            let mut state = initial_state(cfg, &lattice, &mut rng).with_reservoir();
            let mut times = vec![state.t];
            let total0 = field_number_s_corrected(&state, &lattice) + reservoir_number(&state, &lattice);
            let observe = |state: &FieldState| -> [f64; 3] {
                let na = field_number_s_corrected(state, &lattice);
                let nr = reservoir_number(state, &lattice);
                [na, nr, na + nr - total0]
            };
            let mut series = vec![observe(&state)];
            for k in 0..n_steps {
                let t0 = k as f64 * dt;
                step(&mut state, &model, &int_cfg, &prop, &mut rng)
                    .map_err(|e| anyhow::anyhow!("trajectory {idx}, step {}: {e}", k + 1))?;
                if cfg.apodisation.enabled {
                    apodisation_substep(cfg, &lattice, &mut state, t0 + 0.5 * dt, &mut rng)?;
                }
                if (k + 1) % cfg.integrator.store_stride.max(1) == 0 || k + 1 == n_steps {
                    times.push(state.t);
                    series.push(observe(&state));
                }
            }
            Ok((times, series))
        })
        .collect();

    let mut all = Vec::with_capacity(trajectories);
    let mut times = Vec::new();
    for r in per_traj {
        let (t, series) = r?;
        if times.is_empty() {
            times = t;
        }
        all.push(series);
    }

    let n_times = times.len();
    let nt = trajectories as f64;
    let mut rows = Vec::with_capacity(n_times);
    let mut max_drift_over_se = 0.0f64;
    for ti in 0..n_times {
        let mut row = Vec::new();
        for col in 0..3 {
            let values: Vec<Complex64> =
                all.iter().map(|s| Complex64::new(s[ti][col], 0.0)).collect();
            let est = phasespace::ensemble::mean_and_error(&values);
            row.push(est.mean.re);
            row.push(est.std_error.re);
            if col == 2 && ti > 0 {
                // Conservation drift measured in its own standard errors,
                // with an absolute floor for the exactly-conserved case.
                let floor = 1e-12 * (1.0 + nt.sqrt());
                max_drift_over_se =
                    max_drift_over_se.max(est.mean.re.abs() / est.std_error.re.max(floor));
            }
        }
        rows.push(row);
    }

    let summary = vec![("conservation_drift_over_se".to_string(), max_drift_over_se)];
    let assertion_failures = check_assertions(cfg, &summary);
    let record = ObservableRecord {
        experiment: cfg.experiment.clone(),
        index_label: "t".into(),
        times,
        columns: [
            "n_a_corrected_mean",
            "n_a_corrected_se",
            "n_r_mean",
            "n_r_se",
            "n_total_drift_mean",
            "n_total_drift_se",
        ]
        .map(String::from)
        .to_vec(),
        rows,
        summary,
        seed: cfg.seed,
        version: version_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentOutput {
        record,
        lattice,
        final_field: Vec::new(),
        assertion_failures,
    })
}

fn check_assertions(cfg: &RunConfig, summary: &[(String, f64)]) -> Vec<String> {
    if !cfg.assertions.enabled {
        return Vec::new();
    }
    let get = |key: &str| summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
    let mut failures = Vec::new();
    let mut require = |name: &str, cond: Option<bool>, detail: String| {
        if cond == Some(false) {
            failures.push(format!("{name}: {detail}"));
        }
    };
    match cfg.experiment.as_str() {
        "fig2" => {
            let v = get("boundary_intensity_error");
            require(
                "boundary_intensity_error in [1e-2, 1e-1]",
                v.map(|v| (1e-2..=1e-1).contains(&v)),
                format!("{v:?}"),
            );
        }
        "fig3" => {
            let v = get("peak_central_intensity_error");
            require("peak_central_intensity_error <= 3e-4", v.map(|v| v <= 3e-4), format!("{v:?}"));
        }
        "fig4" => {
            let v = get("peak_central_intensity_error");
            require("peak_central_intensity_error <= 5e-5", v.map(|v| v <= 5e-5), format!("{v:?}"));
        }
        "fig5" => {
            let v = get("peak_central_intensity_error");
            require("peak_central_intensity_error <= 5e-5", v.map(|v| v <= 5e-5), format!("{v:?}"));
            let d = get("final_max_dpsi_half_window");
            require("final_max_dpsi_half_window <= 2e-3", d.map(|v| v <= 2e-3), format!("{d:?}"));
        }
        "fig6" => {
            let v = get("number_conservation_rel_error");
            require("number_conservation_rel_error <= 1e-6", v.map(|v| v <= 1e-6), format!("{v:?}"));
        }
        _ => {
            if let Some(v) = get("conservation_drift_over_se") {
                require("conservation drift within 3 SE", Some(v <= 3.0), format!("{v}"));
            }
        }
    }
    failures
}

/// Run one experiment described by a validated config.
pub fn run_experiment(cfg: &RunConfig) -> anyhow::Result<ExperimentOutput> {
    if let Err(errors) = cfg.validate() {
        anyhow::bail!("invalid configuration:\n  {}", errors.join("\n  "));
    }
    match cfg.state.kind.as_str() {
        "fock" | "coherent" | "gaussian" => crate::moments::run_moments(cfg),
        _ if cfg.experiment == "sample-moments" => crate::moments::run_moments(cfg),
        _ if cfg.ensemble.trajectories > 1 => run_field_ensemble(cfg),
        _ => run_field_single(cfg),
    }
}
