//! Closed-form references for free Gaussian diffraction and the log-field
//! power-series dynamics behind the complex absorber design.
//!
//! The free solution of `d psi/dt = (i/2) d^2 psi/dx^2` for a unit-peak
//! Gaussian of width `sigma` is
//!
//! ```text
//! psi(t, x) = sigma (sigma^2 + i t)^(-1/2) exp(-x^2 / (2 (sigma^2 + i t))),
//! ```
//!
//! whose central intensity decays as `1/sqrt(sigma^4 + t^2)`.  Writing
//! `psi = exp(-sum_q alpha_q(t) x^(2q))` turns the apodised equation into
//! coefficient ODEs
//!
//! ```text
//! alpha_q' = gamma_q - i beta_q + i (q+1)(2q+1) alpha_{q+1},
//! (1/2) (sum 2q alpha_q x^(2q-1))^2 = sum beta_q x^(2q),
//! ```
//!
//! where `gamma_q` are the absorber polynomial coefficients.  With a
//! constant leading absorber `gamma_p` the envelope grows like
//! `alpha_p -> gamma_p (t - i sigma^2) / (2p + 1)`, and the choice
//! `gamma_{p-1} = -i p (2p-1) alpha_p` cancels the cascade into the lower
//! coefficients that would otherwise distort the center.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Free Gaussian beam, normalized so `psi(0, 0) = 1`.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBeam {
    pub sigma: f64,
}

impl GaussianBeam {
    pub fn new(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "beam width must be positive");
        GaussianBeam { sigma }
    }

    /// Exact field at time `t` and position `x`.
    pub fn exact_field(&self, t: f64, x: f64) -> Complex64 {
        let denom = Complex64::new(self.sigma * self.sigma, t);
        self.sigma * denom.sqrt().inv() * (-x * x / (2.0 * denom)).exp()
    }

    /// Exact field on every point of a grid.
    pub fn exact_profile(&self, t: f64, xs: &[f64]) -> Vec<Complex64> {
        xs.iter().map(|&x| self.exact_field(t, x)).collect()
    }

    /// `|psi(t, 0)|^2 = sigma^2 / sqrt(sigma^4 + t^2)`.
    pub fn central_intensity(&self, t: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        s2 / (s2 * s2 + t * t).sqrt()
    }
}

/// Coefficients `alpha_q` of `psi = exp(-sum alpha_q x^(2q))`, index 0..=p.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPsiSeries {
    pub alphas: Vec<Complex64>,
}

impl LogPsiSeries {
    /// Free Gaussian initial data: `alpha_1 = 1/(2 sigma^2)`, all other
    /// coefficients zero, truncated at order `p_max`.
    pub fn gaussian(sigma: f64, p_max: usize) -> Self {
        let mut alphas = vec![Complex64::new(0.0, 0.0); p_max + 1];
        alphas[1] = Complex64::new(1.0 / (2.0 * sigma * sigma), 0.0);
        LogPsiSeries { alphas }
    }

    pub fn order(&self) -> usize {
        self.alphas.len() - 1
    }
}

/// Convolution coefficients of `(1/2)(sum 2q alpha_q x^(2q-1))^2`:
/// `beta_q = (1/2) sum_{j=1..q} (2j)(2(q+1-j)) alpha_j alpha_{q+1-j}`.
///
/// The result has the same truncation as the input; `beta_0 = 0`.
pub fn beta_coefficients(alphas: &[Complex64]) -> Vec<Complex64> {
    let p = alphas.len() - 1;
    let mut betas = vec![Complex64::new(0.0, 0.0); p + 1];
    for q in 1..=p {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=q {
            let l = q + 1 - j;
            if l <= p {
                acc += (2 * j) as f64 * (2 * l) as f64 * alphas[j] * alphas[l];
            }
        }
        betas[q] = 0.5 * acc;
    }
    betas
}

/// Absorber coefficients `gamma_q(t)` in the `x^(2q)` basis, as a function
/// of time; indexes 0..=p_max with unused orders zero.
pub type GammaCoefficients<'a> = &'a dyn Fn(f64) -> Vec<Complex64>;

/// Integrate the coefficient ODEs with classic RK4 to `t_final`.
///
/// Orders above the truncation are held at zero.  Blow-up (non-finite
/// coefficients) is detected and reported.
pub fn series_evolve(
    alphas0: &LogPsiSeries,
    gammas: GammaCoefficients,
    t_final: f64,
    dt: f64,
) -> Result<LogPsiSeries> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidTimeStep(dt));
    }
    let p = alphas0.order();
    let rhs = |t: f64, a: &[Complex64]| -> Vec<Complex64> {
        let betas = beta_coefficients(a);
        let g = gammas(t);
        (0..=p)
            .map(|q| {
                let coupling = if q < p {
                    Complex64::new(0.0, ((q + 1) * (2 * q + 1)) as f64) * a[q + 1]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                let gamma_q = g.get(q).copied().unwrap_or_else(|| Complex64::new(0.0, 0.0));
                gamma_q - Complex64::new(0.0, 1.0) * betas[q] + coupling
            })
            .collect()
    };
    let mut a = alphas0.alphas.clone();
    let mut t = 0.0;
    let steps = (t_final / dt).ceil() as usize;
    for k in 0..steps {
        let h = (t_final - t).min(dt);
        let k1 = rhs(t, &a);
        let a2: Vec<Complex64> = a.iter().zip(&k1).map(|(x, d)| x + 0.5 * h * d).collect();
        let k2 = rhs(t + 0.5 * h, &a2);
        let a3: Vec<Complex64> = a.iter().zip(&k2).map(|(x, d)| x + 0.5 * h * d).collect();
        let k3 = rhs(t + 0.5 * h, &a3);
        let a4: Vec<Complex64> = a.iter().zip(&k3).map(|(x, d)| x + h * d).collect();
        let k4 = rhs(t + h, &a4);
        for q in 0..=p {
            a[q] += h / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            if !a[q].re.is_finite() || !a[q].im.is_finite() {
                return Err(Error::Unstable {
                    t,
                    step: k,
                    max_abs: f64::INFINITY,
                });
            }
        }
        t += h;
    }
    Ok(LogPsiSeries { alphas: a })
}

/// The cancellation coefficient `gamma_{p-1}(t) = -i p (2p-1) gamma_p
/// (t - i sigma^2) / (2p + 1)` that keeps the orders below `p` unexcited.
///
/// Dropping the `-i sigma^2` memory term gives the purely imaginary
/// asymptotic form used by the lattice absorber
/// ([`crate::apodisation::build_absorber`]); this exact form is the one
/// that satisfies the cancellation condition from `t = 0`.
pub fn phase_shift_coefficient_exact(p: usize, gamma_p: f64, sigma: f64, t: f64) -> Complex64 {
    let pf = p as f64;
    Complex64::new(0.0, -1.0) * pf * (2.0 * pf - 1.0) / (2.0 * pf + 1.0)
        * gamma_p
        * Complex64::new(t, -sigma * sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_condition_is_unit_peak_gaussian() {
        let beam = GaussianBeam::new(1.3);
        for &x in &[0.0, 0.7, -2.1] {
            let v = beam.exact_field(0.0, x);
            assert_relative_eq!(v.re, (-x * x / (2.0 * 1.3 * 1.3)).exp(), max_relative = 1e-12);
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn central_intensity_at_t20() {
        let beam = GaussianBeam::new(1.0);
        // |sigma^2 + i t|^-1 at t = 20: 1/sqrt(401) = 0.049938...
        let v = beam.exact_field(20.0, 0.0);
        assert_relative_eq!(v.norm_sqr(), 0.049937617, max_relative = 1e-7);
        assert_relative_eq!(v.norm_sqr(), beam.central_intensity(20.0), max_relative = 1e-12);
    }

    #[test]
    fn central_intensity_decays_with_inverse_sqrt_law() {
        let beam = GaussianBeam::new(1.4);
        for &t in &[0.0, 0.5, 3.0, 25.0] {
            let s2 = 1.4f64 * 1.4;
            assert_relative_eq!(
                beam.central_intensity(t),
                s2 / (s2 * s2 + t * t).sqrt(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn exact_field_satisfies_the_diffraction_pde() {
        // Finite-difference residual of d_t psi - (i/2) d_x^2 psi.
        let beam = GaussianBeam::new(1.0);
        let h = 1e-3;
        for &(t, x) in &[(0.5, 0.3), (2.0, 1.5), (10.0, 4.0), (20.0, 0.0)] {
            let dt = (beam.exact_field(t + h, x) - beam.exact_field(t - h, x)) / (2.0 * h);
            let dxx = (beam.exact_field(t, x + h) - 2.0 * beam.exact_field(t, x)
                + beam.exact_field(t, x - h))
                / (h * h);
            let residual = dt - c(0.0, 0.5) * dxx;
            let scale = beam.exact_field(t, x).norm().max(1e-3);
            assert!(
                residual.norm() / scale < 1e-6,
                "t = {t}, x = {x}: residual {}",
                residual.norm() / scale
            );
        }
    }

    #[test]
    fn beta_coefficients_match_listed_cases() {
        let a1 = c(0.3, -0.2);
        let a2 = c(-0.1, 0.05);
        let a3 = c(0.07, 0.01);
        // alpha_1 only: beta_1 = 2 alpha_1^2.
        let betas = beta_coefficients(&[c(0.0, 0.0), a1]);
        assert!((betas[1] - 2.0 * a1 * a1).norm() < 1e-14);
        // alpha_1, alpha_2: beta_2 = 8 alpha_1 alpha_2.
        let betas = beta_coefficients(&[c(0.0, 0.0), a1, a2, c(0.0, 0.0)]);
        assert!((betas[2] - 8.0 * a1 * a2).norm() < 1e-14);
        // beta_3 = 12 alpha_1 alpha_3 + 8 alpha_2^2.
        let betas = beta_coefficients(&[c(0.0, 0.0), a1, a2, a3]);
        assert!((betas[3] - (12.0 * a1 * a3 + 8.0 * a2 * a2)).norm() < 1e-13);
    }

    /// Brute-force polynomial squaring oracle for the derivative series.
    fn beta_oracle(alphas: &[Complex64]) -> Vec<Complex64> {
        // derivative series: coefficient of x^(2j-1) is -2j alpha_j; square
        // the full polynomial in x and read the x^(2q) coefficients.
        let p = alphas.len() - 1;
        let mut poly = vec![c(0.0, 0.0); 2 * p]; // index = odd power (2j-1)
        for j in 1..=p {
            poly[2 * j - 1] = (2 * j) as f64 * alphas[j];
        }
        let mut square = vec![c(0.0, 0.0); 4 * p];
        for (i, &pi) in poly.iter().enumerate() {
            for (j, &pj) in poly.iter().enumerate() {
                square[i + j] += pi * pj;
            }
        }
        (0..=p).map(|q| 0.5 * square[2 * q]).collect()
    }

    #[test]
    fn beta_convolution_matches_brute_force_squaring() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let alphas: Vec<Complex64> = (0..=6)
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let fast = beta_coefficients(&alphas);
            let slow = beta_oracle(&alphas);
            for (a, b) in fast.iter().zip(slow.iter()) {
                assert!((a - b).norm() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn free_series_reproduces_closed_form_alpha1() {
        let zero_gamma = |_: f64| vec![c(0.0, 0.0); 6];
        let start = LogPsiSeries::gaussian(1.0, 5);
        for &t in &[1.0, 5.0, 20.0] {
            let evolved = series_evolve(&start, &zero_gamma, t, 1e-3).unwrap();
            let exact = (2.0 * c(1.0, t)).inv();
            assert!(
                (evolved.alphas[1] - exact).norm() < 1e-8,
                "t = {t}: {} vs {exact}",
                evolved.alphas[1]
            );
            // Higher orders stay numerically unexcited in free evolution.
            for q in 2..=5 {
                assert!(evolved.alphas[q].norm() < 1e-10);
            }
        }
    }

    #[test]
    fn constant_absorber_envelope_reaches_growth_limit() {
        // alpha_p / (t - i sigma^2) -> gamma_p / (2p + 1) for the designed
        // absorber (the phase-shift term keeps the lower orders from
        // feeding back into the envelope equation).
        let p = 5usize;
        let gamma_p = 1e-10;
        let gammas = move |t: f64| {
            let mut g = vec![c(0.0, 0.0); p + 1];
            g[p] = c(gamma_p, 0.0);
            g[p - 1] = phase_shift_coefficient_exact(p, gamma_p, 1.0, t);
            g
        };
        let start = LogPsiSeries::gaussian(1.0, p);
        let evolved = series_evolve(&start, &gammas, 100.0, 1e-3).unwrap();
        let ratio = evolved.alphas[p] / c(100.0, -1.0);
        let target = gamma_p / (2.0 * p as f64 + 1.0);
        assert!(
            (ratio - target).norm() < 0.01 * target,
            "ratio {ratio} vs {target}"
        );
    }

    #[test]
    fn phase_shift_correction_keeps_lower_orders_unexcited() {
        let p = 5usize;
        let sigma = 1.0;
        let gamma_p = 1e-10;
        let corrected = move |t: f64| {
            let mut g = vec![c(0.0, 0.0); p + 1];
            g[p] = c(gamma_p, 0.0);
            g[p - 1] = phase_shift_coefficient_exact(p, gamma_p, sigma, t);
            g
        };
        let start = LogPsiSeries::gaussian(sigma, p);
        let evolved = series_evolve(&start, &corrected, 20.0, 1e-3).unwrap();
        let envelope = evolved.alphas[p].norm();
        let sub = evolved.alphas[p - 1].norm();
        assert!(envelope > 0.0);
        assert!(
            sub < 1e-3 * envelope,
            "alpha_(p-1) = {sub} should stay below 1e-3 alpha_p = {envelope}"
        );
        // Without the correction the cascade excites the lower order.
        let uncorrected = move |_: f64| {
            let mut g = vec![c(0.0, 0.0); p + 1];
            g[p] = c(gamma_p, 0.0);
            g
        };
        let bare = series_evolve(&start, &uncorrected, 20.0, 1e-3).unwrap();
        assert!(bare.alphas[p - 1].norm() > 10.0 * sub);
        // And the cancellation condition 0 = gamma_{p-1} + i p (2p-1) alpha_p
        // holds asymptotically for the corrected run.
        let g_end = phase_shift_coefficient_exact(p, gamma_p, sigma, 20.0);
        let cond = g_end + c(0.0, (p * (2 * p - 1)) as f64) * evolved.alphas[p];
        assert!(cond.norm() < 1e-2 * g_end.norm(), "cancellation residual {}", cond.norm());
    }

    #[test]
    fn series_blow_up_is_detected() {
        // A huge positive gamma_1 makes alpha_1 negative enough to blow up
        // through the beta nonlinearity.
        let gammas = |_: f64| vec![c(0.0, 0.0), c(-1e8, 0.0)];
        let start = LogPsiSeries::gaussian(1.0, 1);
        let res = series_evolve(&start, &gammas, 10.0, 0.1);
        assert!(matches!(res, Err(Error::Unstable { .. })));
    }
}
