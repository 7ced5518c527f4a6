//! Number-state sampling in the complex-P, Q and Wigner representations.
//!
//! The complex-P route samples each occupied mode on a circular contour of
//! radius `r`: a uniform classical phase `phi` and a nonclassical phase
//! `theta` drawn from the von Mises distribution `VM(0, r^2)`, giving
//!
//! ```text
//! alpha = r exp(i (phi + theta/2)),   beta = r exp(-i (phi - theta/2)),
//! ```
//!
//! with the per-mode complex weight
//!
//! ```text
//! Omega = n! I_0(r^2) / r^(2n) * exp(i (r^2 sin theta - n theta)).
//! ```
//!
//! The weight magnitude is the same for every sample; all randomness of
//! `Omega` sits in the phase, and `<Omega> = 1`.  The Q function of a
//! number state is a gamma law in `|alpha|^2` and is sampled directly.
//! A Laguerre-series evaluator for the Wigner function of low `n` is kept
//! as a verification utility; it is far too oscillatory to sample from.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use std::f64::consts::PI;

use crate::ensemble::PhaseSample;
use crate::error::{Error, Result};
use crate::special::{ln_bessel_i0, ln_factorial};

/// Above this concentration the von Mises sampler switches to the wrapped
/// Gaussian limit of width `1/sqrt(kappa)`.
const GAUSSIAN_LIMIT_KAPPA: f64 = 1e4;

/// Upward Laguerre recurrences are certified against the quadrature
/// normalization oracle up to this order.
pub const LAGUERRE_MAX_ORDER: usize = 30;

/// Occupations and contour radii of a factorized multimode number state.
#[derive(Debug, Clone)]
pub struct FockSpec {
    occupations: Vec<u64>,
    radii: Vec<f64>,
}

impl FockSpec {
    /// Default contour radii `r_k = sqrt(n_k)`, the sampling-efficiency
    /// optimum; vacuum modes get a placeholder radius that is never used.
    pub fn new(occupations: Vec<u64>) -> Self {
        let radii = occupations
            .iter()
            .map(|&n| if n > 0 { (n as f64).sqrt() } else { 1.0 })
            .collect();
        FockSpec { occupations, radii }
    }

    /// Explicit per-mode radii; must be finite and positive wherever the
    /// occupation is nonzero.
    pub fn with_radii(occupations: Vec<u64>, radii: Vec<f64>) -> Result<Self> {
        assert_eq!(occupations.len(), radii.len(), "one radius per mode");
        for (&n, &r) in occupations.iter().zip(radii.iter()) {
            if n > 0 && (!r.is_finite() || r <= 0.0) {
                return Err(Error::InvalidRadius(r));
            }
        }
        Ok(FockSpec { occupations, radii })
    }

    pub fn occupations(&self) -> &[u64] {
        &self.occupations
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }
}

/// Draw from the von Mises density `exp(kappa cos theta)` on `[-pi, pi)`.
///
/// Best-Fisher rejection sampling from a wrapped Cauchy envelope; `kappa`
/// of zero falls back to the uniform distribution and very large `kappa`
/// to the wrapped Gaussian limit.
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> Result<f64> {
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(Error::InvalidConcentration(kappa));
    }
    if kappa == 0.0 {
        return Ok(rng.random_range(-PI..PI));
    }
    if kappa > GAUSSIAN_LIMIT_KAPPA {
        let z: f64 = rng.sample(StandardNormal);
        let theta = z / kappa.sqrt();
        return Ok(theta - 2.0 * PI * (theta / (2.0 * PI)).round());
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = f.clamp(-1.0, 1.0).acos();
            return Ok(if u3 < 0.5 { -theta } else { theta });
        }
    }
}

/// `ln |Omega_k|` of an occupied mode: `ln(n!) + ln I_0(r^2) - n ln(r^2)`.
pub fn fock_log_weight_magnitude(n: u64, r: f64) -> Result<f64> {
    let r2 = r * r;
    let lw = ln_factorial(n) + ln_bessel_i0(r2) - n as f64 * r2.ln();
    if !lw.is_finite() {
        return Err(Error::NonFiniteWeight { n, r });
    }
    Ok(lw)
}

/// One complex-P contour sample of the factorized number state.
///
/// Vacuum modes sit at `alpha = beta = 0` with unit weight factor; the
/// trajectory weight is the product of the per-mode weights, evaluated in
/// log space so that occupations of boson-sampling scale stay finite.
pub fn sample_fock_complex_p<R: Rng + ?Sized>(spec: &FockSpec, rng: &mut R) -> Result<PhaseSample> {
    let m = spec.modes();
    let mut alpha = vec![Complex64::new(0.0, 0.0); m];
    let mut beta = vec![Complex64::new(0.0, 0.0); m];
    let mut log_magnitude = 0.0;
    let mut phase = 0.0;
    for k in 0..m {
        let n = spec.occupations[k];
        if n == 0 {
            continue;
        }
        let r = spec.radii[k];
        let r2 = r * r;
        let phi = rng.random_range(-PI..PI);
        let theta = sample_von_mises(r2, rng)?;
        alpha[k] = Complex64::from_polar(r, phi + 0.5 * theta);
        beta[k] = Complex64::from_polar(r, 0.5 * theta - phi);
        log_magnitude += fock_log_weight_magnitude(n, r)?;
        phase += r2 * theta.sin() - n as f64 * theta;
    }
    let weight = Complex64::from_polar(log_magnitude.exp(), phase);
    if !weight.re.is_finite() || !weight.im.is_finite() {
        return Err(Error::NonFiniteWeight { n: 0, r: f64::NAN });
    }
    Ok(PhaseSample { alpha, beta, weight })
}

/// Direct Q-function sample: `|alpha_k|^2` is gamma distributed with shape
/// `n_k + 1` and unit scale, the phase is uniform, and the weight is one.
pub fn sample_fock_q<R: Rng + ?Sized>(spec: &FockSpec, rng: &mut R) -> PhaseSample {
    let m = spec.modes();
    let mut alpha = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..m {
        let n = spec.occupations[k];
        let gamma = Gamma::new(n as f64 + 1.0, 1.0).expect("valid gamma shape");
        let u: f64 = gamma.sample(rng);
        let phi = rng.random_range(-PI..PI);
        alpha[k] = Complex64::from_polar(u.sqrt(), phi);
    }
    let beta = alpha.iter().map(|a| a.conj()).collect();
    PhaseSample { alpha, beta, weight: Complex64::new(1.0, 0.0) }
}

/// Wigner function of a single-mode number state,
/// `W_n(alpha) = (2/pi) e^(-2|alpha|^2) (-1)^n L_n(4 |alpha|^2)`.
///
/// Verification utility only: the upward Laguerre recurrence is stable for
/// small orders but the function is far too oscillatory to sample.
pub fn wigner_fock_value(n: usize, alpha: Complex64) -> Result<f64> {
    if n > LAGUERRE_MAX_ORDER {
        return Err(Error::LaguerreOrder { n, max: LAGUERRE_MAX_ORDER });
    }
    let x = 4.0 * alpha.norm_sqr();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok(2.0 / PI * (-2.0 * alpha.norm_sqr()).exp() * sign * laguerre(n, x))
}

/// `L_n(x)` by the three-term upward recurrence.
fn laguerre(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for k in 1..n {
        let next = ((2.0 * k as f64 + 1.0 - x) * cur - k as f64 * prev) / (k as f64 + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Mean deviation from unity of the truncated asymptotic weight
/// `exp(i (n sin theta - n theta))` over `samples` von Mises draws at
/// concentration `n` (the `r^2 = n` contour).
///
/// Dropping the `n! I_0(n)/n^n` prefactor biases the mean to
/// `1 - 15/(72 n)`; the returned deviation is that bias, estimated by
/// Monte Carlo.  Meaningful for `n` in the asymptotic regime (n >= 10).
pub fn weight_asymptotic_check<R: Rng + ?Sized>(
    n: u64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let kappa = n as f64;
    let mut acc = crate::ensemble::KahanSum::default();
    for _ in 0..samples {
        let theta = sample_von_mises(kappa, rng)?;
        acc.add(Complex64::from_polar(1.0, kappa * theta.sin() - n as f64 * theta));
    }
    Ok(acc.value().re / samples as f64 - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{mean_and_error, Ordering, WeightedEnsemble};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn complex_p_ensemble(spec: &FockSpec, s: usize, seed: u64) -> WeightedEnsemble {
        let mut ens = WeightedEnsemble::new(Ordering::positive_p(), spec.modes());
        let mut r = rng(seed);
        for _ in 0..s {
            ens.push(sample_fock_complex_p(spec, &mut r).unwrap()).unwrap();
        }
        ens
    }

    /// Kolmogorov-Smirnov distance against a CDF.
    fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn vacuum_mode_is_delta_at_zero() {
        let spec = FockSpec::new(vec![0, 0]);
        let s = sample_fock_complex_p(&spec, &mut rng(1)).unwrap();
        assert!(s.alpha.iter().all(|a| a.norm() == 0.0));
        assert!(s.beta.iter().all(|b| b.norm() == 0.0));
        assert_eq!(s.weight, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn weight_magnitude_is_constant_and_equals_bessel_value() {
        // n = 1, r = 1: |Omega| = 1! I_0(1) / 1 = 1.26607...
        let spec = FockSpec::new(vec![1]);
        let mut r = rng(2);
        for _ in 0..200 {
            let s = sample_fock_complex_p(&spec, &mut r).unwrap();
            assert_relative_eq!(s.weight.norm(), 1.2660658777520084, max_relative = 1e-12);
            assert_relative_eq!(s.alpha[0].norm(), 1.0, max_relative = 1e-12);
            assert_relative_eq!(s.beta[0].norm(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn weight_phase_matches_recovered_theta() {
        let spec = FockSpec::new(vec![3]);
        let mut r = rng(3);
        for _ in 0..100 {
            let s = sample_fock_complex_p(&spec, &mut r).unwrap();
            // alpha beta = r^2 exp(i theta) recovers the nonclassical phase.
            let theta = (s.alpha[0] * s.beta[0]).arg();
            let expected = 3.0 * theta.sin() - 3.0 * theta;
            let got = s.weight.arg();
            let diff = (got - expected + PI).rem_euclid(2.0 * PI) - PI;
            assert!(diff.abs() < 1e-10, "phase mismatch {diff}");
        }
    }

    #[test]
    fn von_mises_zero_kappa_is_uniform() {
        let mut r = rng(4);
        let xs: Vec<f64> = (0..20_000)
            .map(|_| sample_von_mises(0.0, &mut r).unwrap())
            .collect();
        let d = ks_statistic(xs, |x| (x + PI) / (2.0 * PI));
        // 1% critical value: 1.628 / sqrt(n)
        assert!(d < 1.628 / (20_000f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn von_mises_large_kappa_gaussian_width() {
        let mut r = rng(5);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| sample_von_mises(100.0, &mut r).unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / xs.len() as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std {}", var.sqrt());
        assert!(mean.abs() < 3.0 * 0.1 / (xs.len() as f64).sqrt() + 1e-3);
    }

    #[test]
    fn von_mises_cosine_moment_is_bessel_ratio() {
        let mut r = rng(6);
        let n = 100_000;
        let cos: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(sample_von_mises(1.0, &mut r).unwrap().cos(), 0.0))
            .collect();
        let est = mean_and_error(&cos);
        // I_1(1)/I_0(1) = 0.44639...
        assert!(
            (est.mean.re - 0.44639).abs() < 3.0 * est.std_error.re,
            "<cos> = {} +- {}",
            est.mean.re,
            est.std_error.re
        );
    }

    #[test]
    fn von_mises_rejects_negative_kappa() {
        assert!(sample_von_mises(-1.0, &mut rng(7)).is_err());
        assert!(sample_von_mises(f64::NAN, &mut rng(7)).is_err());
    }

    #[test]
    fn gaussian_limit_branch_draws_within_wrap() {
        let mut r = rng(8);
        for _ in 0..1000 {
            let t = sample_von_mises(2e4, &mut r).unwrap();
            assert!((-PI..PI).contains(&t));
            assert!(t.abs() < 0.1, "width should be ~1/sqrt(kappa)");
        }
    }

    #[test]
    fn complex_p_number_moments_n3() {
        let spec = FockSpec::new(vec![3]);
        let ens = complex_p_ensemble(&spec, 100_000, 9);
        let n_est = ens.weighted_mean(|s| s.beta[0] * s.alpha[0]).unwrap();
        assert!(
            (n_est.mean.re - 3.0).abs() < 3.0 * n_est.std_error.re,
            "<a'a> = {} +- {}",
            n_est.mean.re,
            n_est.std_error.re
        );
        // <a'^2 a^2> = n(n-1) = 6 for the normally ordered square.
        let n2 = ens
            .weighted_mean(|s| s.beta[0] * s.beta[0] * s.alpha[0] * s.alpha[0])
            .unwrap();
        assert!(
            (n2.mean.re - 6.0).abs() < 3.0 * n2.std_error.re,
            "<a'2a2> = {} +- {}",
            n2.mean.re,
            n2.std_error.re
        );
    }

    #[test]
    fn complex_p_weight_mean_is_unity() {
        let spec = FockSpec::new(vec![10]);
        let ens = complex_p_ensemble(&spec, 100_000, 10);
        let w = ens.mean_weight().unwrap();
        assert!(
            (w.mean.re - 1.0).abs() < 3.0 * w.std_error.re,
            "<Omega> = {} +- {}",
            w.mean.re,
            w.std_error.re
        );
        assert!(w.mean.im.abs() < 3.0 * w.std_error.im.max(1e-12));
    }

    #[test]
    fn contour_radius_invariance_quick() {
        let n = 2u64;
        for r2_rel in [0.5, 1.0, 2.0] {
            let r2 = n as f64 * r2_rel;
            let spec = FockSpec::with_radii(vec![n], vec![r2.sqrt()]).unwrap();
            let ens = complex_p_ensemble(&spec, 100_000, 11 + r2_rel as u64);
            let est = ens.weighted_mean(|s| s.beta[0] * s.alpha[0]).unwrap();
            assert!(
                (est.mean.re - 2.0).abs() < 3.0 * est.std_error.re,
                "r^2 = {r2}: {} +- {}",
                est.mean.re,
                est.std_error.re
            );
        }
    }

    #[test]
    fn invalid_radius_rejected() {
        assert!(FockSpec::with_radii(vec![2], vec![0.0]).is_err());
        assert!(FockSpec::with_radii(vec![2], vec![f64::INFINITY]).is_err());
        // Radius on an empty mode is irrelevant.
        assert!(FockSpec::with_radii(vec![0], vec![0.0]).is_ok());
    }

    #[test]
    fn q_sampler_gamma_moments() {
        let spec = FockSpec::new(vec![2]);
        let mut r = rng(12);
        let mut m1 = Vec::new();
        let mut m2 = Vec::new();
        for _ in 0..100_000 {
            let s = sample_fock_q(&spec, &mut r);
            let u = s.alpha[0].norm_sqr();
            m1.push(Complex64::new(u, 0.0));
            m2.push(Complex64::new(u * u, 0.0));
        }
        let e1 = mean_and_error(&m1);
        let e2 = mean_and_error(&m2);
        // gamma(3): <u> = 3, <u^2> = 12 = (n+1)(n+2)
        assert!((e1.mean.re - 3.0).abs() < 3.0 * e1.std_error.re);
        assert!((e2.mean.re - 12.0).abs() < 3.0 * e2.std_error.re);
    }

    #[test]
    fn q_sampler_vacuum_occupation() {
        let spec = FockSpec::new(vec![0]);
        let mut r = rng(13);
        let vals: Vec<Complex64> = (0..100_000)
            .map(|_| Complex64::new(sample_fock_q(&spec, &mut r).alpha[0].norm_sqr(), 0.0))
            .collect();
        let est = mean_and_error(&vals);
        assert!((est.mean.re - 1.0).abs() < 3.0 * est.std_error.re);
    }

    #[test]
    fn q_sampler_phase_is_uniform() {
        let spec = FockSpec::new(vec![2]);
        let mut r = rng(14);
        let phases: Vec<f64> = (0..20_000)
            .map(|_| sample_fock_q(&spec, &mut r).alpha[0].arg())
            .collect();
        let d = ks_statistic(phases, |x| (x + PI) / (2.0 * PI));
        assert!(d < 1.628 / (20_000f64).sqrt(), "KS statistic {d}");
    }

    #[test]
    fn wigner_laguerre_known_values() {
        let zero = Complex64::new(0.0, 0.0);
        assert_relative_eq!(wigner_fock_value(0, zero).unwrap(), 2.0 / PI, max_relative = 1e-14);
        assert_relative_eq!(wigner_fock_value(1, zero).unwrap(), -2.0 / PI, max_relative = 1e-14);
        assert!(wigner_fock_value(31, zero).is_err());
    }

    #[test]
    fn wigner_normalization_by_quadrature() {
        // integral of W over the plane = pi * integral_0^inf W(sqrt(u)) du,
        // evaluated with Simpson's rule on a fine grid.
        for n in 0..=3usize {
            let upper = 40.0;
            let steps = 40_000usize;
            let h = upper / steps as f64;
            let f = |u: f64| {
                PI * wigner_fock_value(n, Complex64::new(u.sqrt(), 0.0)).unwrap()
            };
            let mut integral = f(0.0) + f(upper);
            for j in 1..steps {
                let w = if j % 2 == 1 { 4.0 } else { 2.0 };
                integral += w * f(j as f64 * h);
            }
            integral *= h / 3.0;
            assert!((integral - 1.0).abs() < 1e-8, "n = {n}: integral = {integral}");
        }
    }

    #[test]
    fn asymptotic_weight_bias_matches_inverse_n() {
        let mut r = rng(15);
        for &n in &[10u64, 100] {
            let dev = weight_asymptotic_check(n, 200_000, &mut r).unwrap();
            let predicted = -15.0 / (72.0 * n as f64);
            assert!(dev < 0.0, "n = {n}: deviation {dev} should be negative");
            let ratio = dev / predicted;
            assert!((0.5..2.0).contains(&ratio), "n = {n}: ratio {ratio}");
        }
    }

    #[test]
    fn exact_weight_is_unbiased_on_same_draws() {
        let n = 30u64;
        let kappa = n as f64;
        let lw = fock_log_weight_magnitude(n, kappa.sqrt()).unwrap().exp();
        let mut r = rng(16);
        let vals: Vec<Complex64> = (0..100_000)
            .map(|_| {
                let theta = sample_von_mises(kappa, &mut r).unwrap();
                Complex64::from_polar(lw, kappa * theta.sin() - n as f64 * theta)
            })
            .collect();
        let est = mean_and_error(&vals);
        assert!(
            (est.mean.re - 1.0).abs() < 3.0 * est.std_error.re,
            "exact <Omega> = {} +- {}",
            est.mean.re,
            est.std_error.re
        );
    }

    #[test]
    fn multimode_weight_is_product_of_mode_weights() {
        let spec = FockSpec::new(vec![2, 0, 5]);
        let s = sample_fock_complex_p(&spec, &mut rng(17)).unwrap();
        let expected = (fock_log_weight_magnitude(2, (2.0f64).sqrt()).unwrap()
            + fock_log_weight_magnitude(5, (5.0f64).sqrt()).unwrap())
        .exp();
        assert_relative_eq!(s.weight.norm(), expected, max_relative = 1e-12);
        assert_eq!(s.alpha[1], Complex64::new(0.0, 0.0));
    }
}
