//! Conversion of weighted P-ensembles to Wigner or Q ensembles.
//!
//! An s-ordered distribution is a Gaussian convolution of the generalized
//! P-function.  Sampling the convolution means splitting each doubled
//! sample into the classical coordinate `alpha_+ = (alpha_0 + conj(beta_0))/2`
//! and the non-classicality `alpha_- = (alpha_0 - conj(beta_0))/2`, adding a
//! complex Gaussian displacement `Delta` of variance `s/2` per real
//! component, and folding the remaining `beta_0` dependence into the weight
//!
//! ```text
//! Omega_s = Omega_P exp((|alpha_-|^2 - i delta)/s),
//! delta = -i (Delta . conj(alpha_-) - conj(Delta) . alpha_-),
//! ```
//!
//! which is complex with a real average.  The output lives on the
//! classical phase space: `alpha = alpha_+ + Delta`, `beta = conj(alpha)`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{mean_and_error, Ordering, PhaseSample, WeightedEnsemble};
use crate::error::{Error, Result};

/// Convert one doubled-phase-space sample to the target ordering.
pub fn convolve_sample<R: Rng + ?Sized>(
    p_sample: &PhaseSample,
    source: Ordering,
    s_target: f64,
    rng: &mut R,
) -> Result<PhaseSample> {
    if !source.doubled() {
        return Err(Error::NotDoubled);
    }
    if s_target <= 0.0 || !s_target.is_finite() {
        return Err(Error::InvalidTargetOrdering(s_target));
    }
    let m = p_sample.modes();
    let std = (0.5 * s_target).sqrt();
    let mut alpha = Vec::with_capacity(m);
    let mut alpha_minus_sq = 0.0f64;
    // delta = 2 Im(Delta . conj(alpha_-)), real by construction.
    let mut delta = 0.0f64;
    for k in 0..m {
        let a0 = p_sample.alpha[k];
        let b0c = p_sample.beta[k].conj();
        let plus = 0.5 * (a0 + b0c);
        let minus = 0.5 * (a0 - b0c);
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        let disp = Complex64::new(std * dx, std * dy);
        alpha.push(plus + disp);
        alpha_minus_sq += minus.norm_sqr();
        delta += 2.0 * (disp * minus.conj()).im;
    }
    let correction = Complex64::new(alpha_minus_sq / s_target, -delta / s_target);
    let weight = p_sample.weight * correction.exp();
    let beta = alpha.iter().map(|a| a.conj()).collect();
    Ok(PhaseSample { alpha, beta, weight })
}

/// Convert a whole doubled ensemble; the result is tagged with the target
/// ordering (s = 1/2 or s = 1).
pub fn convolve_ensemble<R: Rng + ?Sized>(
    ens: &WeightedEnsemble,
    s_target: f64,
    rng: &mut R,
) -> Result<WeightedEnsemble> {
    let ordering = Ordering::from_s(s_target)?;
    if ordering.doubled() {
        return Err(Error::InvalidTargetOrdering(s_target));
    }
    let mut out = WeightedEnsemble::new(ordering, ens.mode_count());
    for sample in ens.samples() {
        out.push(convolve_sample(sample, ens.ordering(), s_target, rng)?)?;
    }
    Ok(out)
}

/// Weighted Gaussian kernel-density estimate of a converted distribution
/// at one probe point (single-mode ensembles).
#[derive(Debug, Clone, Copy)]
pub struct DensityEstimate {
    /// Real part of the weighted estimate.
    pub value: f64,
    /// Imaginary residual; statistically zero for a valid conversion.
    pub imag_residual: f64,
    /// Standard error of the real part.
    pub std_error: f64,
    /// Kernel bandwidth used.
    pub bandwidth: f64,
}

/// Estimate the phase-space density at `alpha_probe` with an isotropic
/// Gaussian kernel `exp(-|d|^2/h^2) / (pi h^2)`.
///
/// The kernel integrates to one over the complex plane, so the estimate
/// converges to the density smoothed over a disc of radius ~`h`.
pub fn density_estimate(
    ens: &WeightedEnsemble,
    alpha_probe: Complex64,
    bandwidth: f64,
) -> Result<DensityEstimate> {
    if ens.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    if bandwidth <= 0.0 || !bandwidth.is_finite() {
        return Err(Error::InvalidBandwidth(bandwidth));
    }
    assert_eq!(ens.mode_count(), 1, "density readout is single-mode");
    let h2 = bandwidth * bandwidth;
    let norm = 1.0 / (std::f64::consts::PI * h2);
    let values: Vec<Complex64> = ens
        .samples()
        .iter()
        .map(|s| {
            let d = s.alpha[0] - alpha_probe;
            s.weight * norm * (-d.norm_sqr() / h2).exp()
        })
        .collect();
    let est = mean_and_error(&values);
    Ok(DensityEstimate {
        value: est.mean.re,
        imag_residual: est.mean.im / est.std_error.im.max(f64::MIN_POSITIVE),
        std_error: est.std_error.re,
        bandwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{sample_fock_complex_p, sample_fock_q, wigner_fock_value, FockSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn fock_p_ensemble(n: u64, s: usize, seed: u64) -> WeightedEnsemble {
        let spec = FockSpec::new(vec![n]);
        let mut ens = WeightedEnsemble::new(Ordering::positive_p(), 1);
        let mut r = rng(seed);
        for _ in 0..s {
            ens.push(sample_fock_complex_p(&spec, &mut r).unwrap()).unwrap();
        }
        ens
    }

    #[test]
    fn coherent_sample_convolves_cleanly() {
        // A classical P sample has alpha_- = 0: the weight stays exactly 1
        // and the output is the coherent amplitude plus noise of variance s.
        let a0 = c(1.5, -0.5);
        let p = PhaseSample { alpha: vec![a0], beta: vec![a0.conj()], weight: c(1.0, 0.0) };
        let mut r = rng(1);
        let mut sq = Vec::new();
        for _ in 0..100_000 {
            let w = convolve_sample(&p, Ordering::positive_p(), 0.5, &mut r).unwrap();
            assert_eq!(w.weight, c(1.0, 0.0));
            sq.push(c((w.alpha[0] - a0).norm_sqr(), 0.0));
        }
        let est = mean_and_error(&sq);
        assert!(
            (est.mean.re - 0.5).abs() < 3.0 * est.std_error.re,
            "<|Delta|^2> = {} +- {}",
            est.mean.re,
            est.std_error.re
        );
    }

    #[test]
    fn fock_one_to_wigner_number() {
        let p = fock_p_ensemble(1, 100_000, 2);
        let w = convolve_ensemble(&p, 0.5, &mut rng(3)).unwrap();
        assert!(!w.ordering().doubled());
        let est = w.weighted_mean(|s| s.beta[0] * s.alpha[0]).unwrap();
        // Symmetric-order moment of a Fock state: n + 1/2.
        assert!(
            (est.mean.re - 1.5).abs() < 3.0 * est.std_error.re,
            "<|alpha|^2>_W = {} +- {}",
            est.mean.re,
            est.std_error.re
        );
    }

    #[test]
    fn fock_one_to_q_number_cross_checked_against_gamma_sampler() {
        let p = fock_p_ensemble(1, 100_000, 4);
        let q = convolve_ensemble(&p, 1.0, &mut rng(5)).unwrap();
        let est = q.weighted_mean(|s| s.beta[0] * s.alpha[0]).unwrap();
        assert!(
            (est.mean.re - 2.0).abs() < 3.0 * est.std_error.re,
            "<|alpha|^2>_Q = {} +- {}",
            est.mean.re,
            est.std_error.re
        );

        let spec = FockSpec::new(vec![1]);
        let mut r = rng(6);
        let direct: Vec<Complex64> = (0..100_000)
            .map(|_| c(sample_fock_q(&spec, &mut r).alpha[0].norm_sqr(), 0.0))
            .collect();
        let direct_est = mean_and_error(&direct);
        let diff = (est.mean.re - direct_est.mean.re).abs();
        let combined = est.std_error.re.hypot(direct_est.std_error.re);
        assert!(diff < 3.0 * combined, "convolved {} vs direct {}", est.mean.re, direct_est.mean.re);
    }

    #[test]
    fn converted_weight_mean_stays_unity() {
        let p = fock_p_ensemble(2, 100_000, 7);
        let w = convolve_ensemble(&p, 0.5, &mut rng(8)).unwrap();
        let est = w.mean_weight().unwrap();
        assert!(
            (est.mean.re - 1.0).abs() < 3.0 * est.std_error.re,
            "<Omega_W> = {} +- {}",
            est.mean.re,
            est.std_error.re
        );
        assert!(est.mean.im.abs() < 3.0 * est.std_error.im);
        assert!(w.effective_sample_size() < 100_000.0);
    }

    #[test]
    fn delta_realness_identity() {
        // The complex route -i (Delta conj(a-) - conj(Delta) a-) equals the
        // real 2 Im(Delta conj(a-)) identically.
        let mut r = rng(9);
        for _ in 0..100 {
            let d = c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            let am = c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5);
            let z = d * am.conj() - d.conj() * am;
            let complex_route = c(0.0, -1.0) * z;
            assert_eq!(complex_route.im, 0.0);
            assert_eq!(complex_route.re, 2.0 * (d * am.conj()).im);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = PhaseSample::vacuum(1);
        assert!(convolve_sample(&p, Ordering::wigner(), 0.5, &mut rng(10)).is_err());
        assert!(convolve_sample(&p, Ordering::positive_p(), 0.0, &mut rng(10)).is_err());
        assert!(convolve_sample(&p, Ordering::positive_p(), -0.5, &mut rng(10)).is_err());
    }

    #[test]
    fn wigner_density_of_vacuum_peaks_at_two_over_pi() {
        let mut ens = WeightedEnsemble::new(Ordering::positive_p(), 1);
        for _ in 0..50_000 {
            ens.push(PhaseSample::vacuum(1)).unwrap();
        }
        let w = convolve_ensemble(&ens, 0.5, &mut rng(11)).unwrap();
        let est = density_estimate(&w, c(0.0, 0.0), 0.12).unwrap();
        // Smoothed peak: (2/pi) integrated against the kernel.
        let h2 = 0.12f64 * 0.12;
        let smoothed = 2.0 / std::f64::consts::PI / (1.0 + 2.0 * h2);
        assert!(
            (est.value - smoothed).abs() < 4.0 * est.std_error,
            "KDE {} +- {} vs smoothed {}",
            est.value,
            est.std_error,
            smoothed
        );
    }

    #[test]
    fn wigner_density_of_fock_one_is_negative_at_origin() {
        let p = fock_p_ensemble(1, 200_000, 12);
        let w = convolve_ensemble(&p, 0.5, &mut rng(13)).unwrap();
        let h = 0.1;
        let est = density_estimate(&w, c(0.0, 0.0), h).unwrap();
        assert!(est.value < 0.0, "W_1(0) estimate should be negative, got {}", est.value);
        // Analytic kernel smoothing of W_1 at the origin.
        let cc = 2.0 + 1.0 / (h * h);
        let smoothed = 2.0 / (std::f64::consts::PI * h * h * cc) * (4.0 / cc - 1.0);
        assert!(
            (est.value - smoothed).abs() < 4.0 * est.std_error,
            "KDE {} +- {} vs smoothed {}",
            est.value,
            est.std_error,
            smoothed
        );
        // Consistent with the Laguerre value within smoothing bias + noise.
        let exact = wigner_fock_value(1, c(0.0, 0.0)).unwrap();
        let bias = (smoothed - exact).abs();
        assert!((est.value - exact).abs() < bias + 4.0 * est.std_error);
        // Imaginary residual is statistically zero.
        assert!(est.imag_residual.abs() < 3.0);
    }

    #[test]
    fn density_estimate_rejects_bad_probe_setups() {
        let ens = WeightedEnsemble::new(Ordering::wigner(), 1);
        assert!(density_estimate(&ens, c(0.0, 0.0), 0.1).is_err());
        let mut ens = WeightedEnsemble::new(Ordering::wigner(), 1);
        ens.push(PhaseSample::vacuum(1)).unwrap();
        assert!(density_estimate(&ens, c(0.0, 0.0), 0.0).is_err());
    }
}
