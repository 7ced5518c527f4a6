//! Boundary treatment: de-aliasing projector, complex power-law absorber,
//! apodisation quantum noise and the reservoir field.
//!
//! The absorber is a polynomial in even powers of position,
//! `gamma(x, t) = gamma' (x) + i V(x, t)` with
//!
//! ```text
//! gamma'(x) = Gamma (x / x_max)^(2p),
//! V(x, t)   = -[p (2p - 1) / (2p + 1)] (t / x_max^2) Gamma (x / x_max)^(2p-2),
//! ```
//!
//! so absorption vanishes at the center and reaches `Gamma` at the edge.
//! The imaginary part is the time-dependent phase-shift that cancels the
//! diffractive back-action of the absorber on the central region; it uses
//! the asymptotic, purely imaginary coefficient which is independent of
//! the beam width.
//!
//! In s-ordered representations absorption must be accompanied by complex
//! vacuum noise with `<zeta zeta*> = 2 s delta(x - x')` and `<zeta zeta> = 0`,
//! so that absorbed modes relax to `s` vacuum bosons instead of zero.  The
//! absorber sub-step is an exact exponential: the decay is `e^{-gamma dt}`
//! and the added noise carries the matching Ornstein-Uhlenbeck variance
//! `s (1 - e^{-2 gamma' dt}) / dv`.  The reservoir density `rho_2` receives
//! exactly what the field loses, pairing the identical noise realization,
//! so `N_a + N_r` is conserved trajectory by trajectory.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::integrator::FieldState;
use crate::lattice::Lattice;

/// Momentum-space mask passing `|k| < k_max / 2` and zeroing the rest
/// (the boundary bin `|k| = k_max / 2` counts as removed).
#[derive(Debug, Clone)]
pub struct Projector {
    mask: Vec<f64>,
}

/// Build the mask by index arithmetic: bin `j` has momentum index
/// `m = min(j, n - j)` and passes iff `4 m < n`, the exact integer form of
/// `|k| < k_max / 2`.
pub fn build_projector(lattice: &Lattice) -> Projector {
    let n = lattice.n_points;
    let mask = (0..n)
        .map(|j| {
            let m = j.min(n - j);
            if 4 * m < n {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Projector { mask }
}

impl Projector {
    /// Zero the masked bins of a spectrum in place.
    pub fn apply(&self, spectrum: &mut [Complex64]) {
        for (v, &m) in spectrum.iter_mut().zip(self.mask.iter()) {
            if m == 0.0 {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn mask(&self) -> &[f64] {
        &self.mask
    }

    /// Largest spectral amplitude in the removed band.
    pub fn masked_amplitude(&self, spectrum: &[Complex64]) -> f64 {
        spectrum
            .iter()
            .zip(self.mask.iter())
            .filter(|(_, &m)| m == 0.0)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Complex absorber `gamma'(x) + i V(x)` evaluated on the lattice.
#[derive(Debug, Clone)]
pub struct ApodisationProfile {
    /// Power of the leading term (`2p`).
    pub order_2p: usize,
    /// Absorption at the boundary, `gamma'(+-x_max) = Gamma`.
    pub gamma_boundary: f64,
    /// Whether the time-dependent phase-shift term is included.
    pub phase_correction: bool,
    /// Real absorption per point.
    pub gamma_real: Vec<f64>,
    /// Imaginary (phase-shifting) part per point.
    pub v_imag: Vec<f64>,
    /// `p = order_2p / 2`.
    pub p: usize,
    /// Time the profile was built for (the phase term grows linearly).
    pub t: f64,
}

/// Evaluate the absorber on the lattice at time `t`.  The arrays are
/// mirrored around the center so the profile is even in `x` bitwise.
pub fn build_absorber(
    lattice: &Lattice,
    order_2p: usize,
    gamma_boundary: f64,
    t: f64,
    phase_correction: bool,
) -> Result<ApodisationProfile> {
    if order_2p < 4 || order_2p % 2 != 0 {
        return Err(Error::InvalidAbsorberOrder(order_2p));
    }
    if !gamma_boundary.is_finite() || gamma_boundary < 0.0 {
        return Err(Error::NegativeAbsorption(gamma_boundary));
    }
    let n = lattice.n_points;
    let p = order_2p / 2;
    let pf = p as f64;
    // -i gamma_{p-1} coefficient in the (x/x_max)^(2p-2) basis.
    let v_coeff = -pf * (2.0 * pf - 1.0) / (2.0 * pf + 1.0) * t * gamma_boundary
        / (lattice.x_max * lattice.x_max);
    let mut gamma_real = vec![0.0; n];
    let mut v_imag = vec![0.0; n];
    for j in 0..=n / 2 {
        let u = lattice.x_grid[j].abs() / lattice.x_max;
        let g = gamma_boundary * u.powi(order_2p as i32);
        let v = if phase_correction { v_coeff * u.powi(order_2p as i32 - 2) } else { 0.0 };
        if !g.is_finite() || !v.is_finite() {
            return Err(Error::NonFiniteProfile);
        }
        gamma_real[j] = g;
        v_imag[j] = v;
        if j > 0 && n - j < n {
            gamma_real[n - j] = g;
            v_imag[n - j] = v;
        }
    }
    Ok(ApodisationProfile {
        order_2p,
        gamma_boundary,
        phase_correction,
        gamma_real,
        v_imag,
        p,
        t,
    })
}

/// What one absorber sub-step actually did to the field; consumed by
/// [`update_reservoir`] so the bookkeeping pairs the identical noise.
#[derive(Debug, Clone)]
pub struct AbsorptionRecord {
    psi_before: Vec<Complex64>,
    decay: Vec<Complex64>,
    noise: Option<Vec<Complex64>>,
}

/// Apply one exact-exponential absorber sub-step.
///
/// Classical part: `psi <- psi e^{-(gamma' + iV) dt}`.  With `quantum` the
/// sub-step is the exact Ornstein-Uhlenbeck update: complex Gaussian noise
/// with `<|eta|^2> = s (1 - e^{-2 gamma' dt}) / dv` and `<eta^2> = 0` is
/// added wherever `gamma' > 0`, so a pure vacuum stays a vacuum with `s`
/// bosons per mode.
pub fn apply_apodisation<R: Rng + ?Sized>(
    state: &mut FieldState,
    profile: &ApodisationProfile,
    lattice: &Lattice,
    dt: f64,
    rng: &mut R,
    quantum: bool,
) -> Result<AbsorptionRecord> {
    let n = state.psi.len();
    if profile.gamma_real.len() != n {
        return Err(Error::NoiseShapeMismatch { expected: n, got: profile.gamma_real.len() });
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidTimeStep(dt));
    }
    let s = state.ordering.s();
    let psi_before = state.psi.clone();
    let mut decay = Vec::with_capacity(n);
    let mut noise = if quantum { Some(Vec::with_capacity(n)) } else { None };
    for j in 0..n {
        let g = profile.gamma_real[j];
        let v = profile.v_imag[j];
        if !g.is_finite() || !v.is_finite() {
            return Err(Error::NonFiniteProfile);
        }
        let d = Complex64::from_polar((-g * dt).exp(), -v * dt);
        state.psi[j] = d * psi_before[j];
        if let Some(buf) = noise.as_mut() {
            let var = s * (1.0 - (-2.0 * g * dt).exp()) / lattice.dv;
            let amp = (0.5 * var).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let eta = Complex64::new(amp * re, amp * im);
            state.psi[j] += eta;
            buf.push(eta);
        }
        decay.push(d);
    }
    Ok(AbsorptionRecord { psi_before, decay, noise })
}

/// Transfer the particles removed by the matching [`apply_apodisation`]
/// call into the reservoir density:
///
/// ```text
/// d rho_2 = (1 - |d|^2) |psi|^2 - 2 Re(d psi conj(eta)) - |eta|^2,
/// ```
///
/// the discrete Stratonovich transcription of
/// `rho_2' = 2 gamma' psi psi* - (sqrt(gamma') zeta psi* + h.c.)` with the
/// bilinear term paired so that `|psi|^2 + rho_2` is conserved exactly per
/// trajectory.  In the classical regime this reduces to the exact
/// exponential loss `(1 - e^{-2 gamma' dt}) |psi|^2`.
pub fn update_reservoir(state: &mut FieldState, record: &AbsorptionRecord) -> Result<()> {
    let n = state.psi.len();
    if record.psi_before.len() != n || record.decay.len() != n {
        return Err(Error::NoiseShapeMismatch { expected: n, got: record.psi_before.len() });
    }
    if let Some(noise) = &record.noise {
        if noise.len() != n {
            return Err(Error::NoiseShapeMismatch { expected: n, got: noise.len() });
        }
    }
    if state.rho2.is_none() {
        state.rho2 = Some(vec![0.0; n]);
    }
    let rho2 = state.rho2.as_mut().expect("just initialized");
    for j in 0..n {
        let before = record.psi_before[j];
        let d = record.decay[j];
        let mut gain = (1.0 - d.norm_sqr()) * before.norm_sqr();
        if let Some(noise) = &record.noise {
            let eta = noise[j];
            gain -= 2.0 * (d * before * eta.conj()).re + eta.norm_sqr();
        }
        rho2[j] += gain;
    }
    Ok(())
}

/// Field number `N_a = sum |psi|^2 dx`.
pub fn field_number(state: &FieldState, lattice: &Lattice) -> f64 {
    lattice.norm_squared(&state.psi)
}

/// Vacuum-corrected field number `sum (|psi|^2 - s/dv) dx`.
pub fn field_number_s_corrected(state: &FieldState, lattice: &Lattice) -> f64 {
    lattice.norm_squared(&state.psi) - state.ordering.s() * lattice.n_points as f64
        * lattice.dx / lattice.dv
}

/// Reservoir number `N_r = sum rho_2 dx` (zero if no reservoir attached).
pub fn reservoir_number(state: &FieldState, lattice: &Lattice) -> f64 {
    state
        .rho2
        .as_ref()
        .map(|r| r.iter().sum::<f64>() * lattice.dx)
        .unwrap_or(0.0)
}
