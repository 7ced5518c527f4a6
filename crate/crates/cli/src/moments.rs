//! Sampler moment suites: particle-number estimates of one configured
//! state in the P, Wigner and Q orderings, with standard errors.
//!
//! Number states take three independent routes: the weighted complex-P
//! contour sampler, its Gaussian convolution to the Wigner ordering, and
//! the direct gamma-law Q sampler.  All three must agree on the
//! ordering-corrected occupation.

use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phasespace::convolution::convolve_ensemble;
use phasespace::ensemble::{Ordering, WeightedEnsemble};
use phasespace::fock::{sample_fock_complex_p, sample_fock_q, FockSpec};
use phasespace::gaussian::{factor_covariance, sample_gaussian, CovarianceSpec};

use crate::config::RunConfig;
use crate::experiments::ExperimentOutput;
use crate::observables::{version_string, ObservableRecord};

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct MomentTable {
    targets: Vec<f64>,
    rows: Vec<Vec<f64>>,
    max_deviation_se: f64,
    mean_weight: (f64, f64),
    ess_p: f64,
    ess_w: f64,
}

fn fock_table(cfg: &RunConfig) -> anyhow::Result<MomentTable> {
    let occupations = cfg.state.occupations.clone();
    let spec = match &cfg.state.radii {
        Some(radii) => FockSpec::with_radii(occupations.clone(), radii.clone())?,
        None => FockSpec::new(occupations.clone()),
    };
    let samples = cfg.ensemble.samples;
    let modes = spec.modes();

    let mut p_ens = WeightedEnsemble::new(Ordering::positive_p(), modes);
    let mut rng = stream_rng(cfg.seed, 0);
    for _ in 0..samples {
        p_ens.push(sample_fock_complex_p(&spec, &mut rng)?)?;
    }
    let mut rng = stream_rng(cfg.seed, 1);
    let w_ens = convolve_ensemble(&p_ens, 0.5, &mut rng)?;
    let mut q_ens = WeightedEnsemble::new(Ordering::q(), modes);
    let mut rng = stream_rng(cfg.seed, 2);
    for _ in 0..samples {
        q_ens.push(sample_fock_q(&spec, &mut rng))?;
    }

    let n_p = p_ens.number_per_mode()?;
    let n_w = w_ens.number_per_mode()?;
    let n_q = q_ens.number_per_mode()?;
    let w = p_ens.mean_weight()?;

    let mut rows = Vec::with_capacity(modes);
    let mut max_dev = 0.0f64;
    for k in 0..modes {
        let target = occupations[k] as f64;
        for (est, se) in [n_p[k], n_w[k], n_q[k]] {
            max_dev = max_dev.max((est - target).abs() / se.max(1e-12));
        }
        rows.push(vec![
            target, n_p[k].0, n_p[k].1, n_w[k].0, n_w[k].1, n_q[k].0, n_q[k].1,
        ]);
    }
    Ok(MomentTable {
        targets: occupations.iter().map(|&n| n as f64).collect(),
        rows,
        max_deviation_se: max_dev,
        mean_weight: (w.mean.re, w.std_error.re),
        ess_p: p_ens.effective_sample_size(),
        ess_w: w_ens.effective_sample_size(),
    })
}

fn coherent_table(cfg: &RunConfig) -> anyhow::Result<MomentTable> {
    let amplitudes: Vec<Complex64> =
        cfg.state.amplitudes.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    let samples = cfg.ensemble.samples;
    let modes = amplitudes.len();
    let mut per_ordering = Vec::new();
    for (stream, ordering) in
        [Ordering::positive_p(), Ordering::wigner(), Ordering::q()].iter().enumerate()
    {
        let spec = CovarianceSpec::coherent(&amplitudes, *ordering);
        let factor = factor_covariance(&spec)?;
        let mut ens = WeightedEnsemble::new(*ordering, modes);
        let mut rng = stream_rng(cfg.seed, stream as u64);
        for _ in 0..samples {
            ens.push(sample_gaussian(&spec, &factor, &mut rng)?)?;
        }
        per_ordering.push(ens.number_per_mode()?);
    }
    let mut rows = Vec::with_capacity(modes);
    let mut max_dev = 0.0f64;
    let targets: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    for k in 0..modes {
        let mut row = vec![targets[k]];
        for ord in &per_ordering {
            let (est, se) = ord[k];
            max_dev = max_dev.max((est - targets[k]).abs() / se.max(1e-12));
            row.push(est);
            row.push(se);
        }
        rows.push(row);
    }
    Ok(MomentTable {
        targets,
        rows,
        max_deviation_se: max_dev,
        mean_weight: (1.0, 0.0),
        ess_p: samples as f64,
        ess_w: samples as f64,
    })
}

/// A general Gaussian state given by its dense covariance: sampled in its
/// own ordering only, against the analytic occupations
/// `n_k = |mean_k|^2 + Re sigma_{k, M+k} - s`.
fn gaussian_table(cfg: &RunConfig) -> anyhow::Result<MomentTable> {
    let ordering = cfg.ordering();
    let mean: Vec<Complex64> =
        cfg.state.mean.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
    let dim = mean.len();
    let modes = dim / 2;
    let mut sigma = nalgebra::DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for (i, row) in cfg.state.covariance.iter().enumerate() {
        for (j, [re, im]) in row.iter().enumerate() {
            sigma[(i, j)] = Complex64::new(*re, *im);
        }
    }
    let targets: Vec<f64> = (0..modes)
        .map(|k| mean[k].norm_sqr() + sigma[(k, modes + k)].re - ordering.s())
        .collect();
    let spec = CovarianceSpec::new(mean, sigma, ordering)?;
    let factor = factor_covariance(&spec)?;
    let mut ens = WeightedEnsemble::new(ordering, modes);
    let mut rng = stream_rng(cfg.seed, 0);
    for _ in 0..cfg.ensemble.samples {
        ens.push(sample_gaussian(&spec, &factor, &mut rng)?)?;
    }
    let numbers = ens.number_per_mode()?;
    let mut rows = Vec::with_capacity(modes);
    let mut max_dev = 0.0f64;
    for k in 0..modes {
        let (est, se) = numbers[k];
        max_dev = max_dev.max((est - targets[k]).abs() / se.max(1e-12));
        rows.push(vec![targets[k], est, se]);
    }
    Ok(MomentTable {
        targets,
        rows,
        max_deviation_se: max_dev,
        mean_weight: (1.0, 0.0),
        ess_p: cfg.ensemble.samples as f64,
        ess_w: cfg.ensemble.samples as f64,
    })
}

/// Estimate the state's occupation in all three orderings and tabulate.
pub fn run_moments(cfg: &RunConfig) -> anyhow::Result<ExperimentOutput> {
    let start = Instant::now();
    let table = match cfg.state.kind.as_str() {
        "coherent" => coherent_table(cfg)?,
        "fock" => fock_table(cfg)?,
        "gaussian" => gaussian_table(cfg)?,
        other => anyhow::bail!("moment suite supports fock, coherent and gaussian states, not '{other}'"),
    };

    let mut summary = vec![
        ("max_number_deviation_se".to_string(), table.max_deviation_se),
        ("mean_weight".to_string(), table.mean_weight.0),
        ("mean_weight_se".to_string(), table.mean_weight.1),
        ("effective_samples_p".to_string(), table.ess_p),
        ("effective_samples_w".to_string(), table.ess_w),
    ];
    let weight_dev = (table.mean_weight.0 - 1.0).abs() / table.mean_weight.1.max(1e-12);
    summary.push(("weight_deviation_se".to_string(), weight_dev));

    let mut assertion_failures = Vec::new();
    if cfg.assertions.enabled {
        if table.max_deviation_se > 3.0 {
            assertion_failures.push(format!(
                "number estimates within 3 SE of target: worst deviation {:.2} SE",
                table.max_deviation_se
            ));
        }
        if weight_dev > 3.0 {
            assertion_failures
                .push(format!("mean weight within 3 SE of 1: deviation {weight_dev:.2} SE"));
        }
    }

    let columns: Vec<String> = match cfg.state.kind.as_str() {
        "gaussian" => ["n_target", "n_est", "n_se"].map(String::from).to_vec(),
        _ => ["n_target", "n_p", "n_p_se", "n_w", "n_w_se", "n_q", "n_q_se"]
            .map(String::from)
            .to_vec(),
    };
    let record = ObservableRecord {
        experiment: cfg.experiment.clone(),
        index_label: "mode".into(),
        times: (0..table.targets.len()).map(|k| k as f64).collect(),
        columns,
        rows: table.rows,
        summary,
        seed: cfg.seed,
        version: version_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let lattice = phasespace::lattice::make_lattice(2, 1.0)?;
    Ok(ExperimentOutput { record, lattice, final_field: Vec::new(), assertion_failures })
}
