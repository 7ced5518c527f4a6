//! Uniform periodic 1D lattice and its unitary discrete Fourier transform.
//!
//! The spatial grid is cell-centered at `x_j = -x_max + j dx` (the point
//! `-x_max` is included, `+x_max` is its periodic image).  The conjugate
//! momentum grid uses the standard FFT wrap-around layout
//! `k = 0, dk, ..., -2dk, -dk` with `dk = pi / x_max`, so the maximum
//! resolvable momentum is `k_max = pi / dx`.  Both transforms are scaled by
//! `1/sqrt(N)` which makes the pair unitary: the round trip is the identity
//! and `sum |f|^2 dx` is preserved.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Immutable lattice shared by every field operation.  Cloning is cheap
/// (the FFT plans are reference counted) and the type is `Send + Sync`,
/// so parallel trajectory workers can share one instance.
#[derive(Clone)]
pub struct Lattice {
    /// Number of grid points (even, at least 2).
    pub n_points: usize,
    /// Half-width of the domain `[-x_max, x_max)`.
    pub x_max: f64,
    /// Grid spacing `2 x_max / n_points`.
    pub dx: f64,
    /// Cell volume; equal to `dx` in one dimension.
    pub dv: f64,
    /// Nyquist momentum `pi / dx`.
    pub k_max: f64,
    /// Momenta in FFT wrap-around order, covering `[-k_max, k_max)`.
    pub k_grid: Vec<f64>,
    /// Positions `x_j = -x_max + j dx`.
    pub x_grid: Vec<f64>,
    /// Spatial dimension; fixed to 1 for now so an extension is additive.
    pub dim: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("n_points", &self.n_points)
            .field("x_max", &self.x_max)
            .field("dx", &self.dx)
            .field("k_max", &self.k_max)
            .finish()
    }
}

/// Build a lattice with `n_points` cells on `[-x_max, x_max)`.
pub fn make_lattice(n_points: usize, x_max: f64) -> Result<Lattice> {
    if n_points < 2 || n_points % 2 != 0 {
        return Err(Error::InvalidLatticeSize(n_points));
    }
    if !x_max.is_finite() || x_max <= 0.0 {
        return Err(Error::InvalidLatticeExtent(x_max));
    }
    let n = n_points;
    let dx = 2.0 * x_max / n as f64;
    let dk = std::f64::consts::PI / x_max;
    let k_grid: Vec<f64> = (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as isize } else { j as isize - n as isize };
            m as f64 * dk
        })
        .collect();
    let x_grid: Vec<f64> = (0..n).map(|j| -x_max + j as f64 * dx).collect();
    let mut planner = FftPlanner::new();
    Ok(Lattice {
        n_points: n,
        x_max,
        dx,
        dv: dx,
        k_max: std::f64::consts::PI / dx,
        k_grid,
        x_grid,
        dim: 1,
        fft: planner.plan_fft_forward(n),
        ifft: planner.plan_fft_inverse(n),
    })
}

impl Lattice {
    /// Position of grid point `j`.
    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        self.x_grid[j]
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_points {
            return Err(Error::LengthMismatch { expected: self.n_points, got: len });
        }
        Ok(())
    }

    /// In-place unitary forward transform (position to momentum).
    pub fn fft_forward_inplace(&self, field: &mut [Complex64]) -> Result<()> {
        self.check_len(field.len())?;
        self.fft.process(field);
        let scale = 1.0 / (self.n_points as f64).sqrt();
        for v in field.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }

    /// In-place unitary inverse transform (momentum to position).
    pub fn fft_inverse_inplace(&self, spectrum: &mut [Complex64]) -> Result<()> {
        self.check_len(spectrum.len())?;
        self.ifft.process(spectrum);
        let scale = 1.0 / (self.n_points as f64).sqrt();
        for v in spectrum.iter_mut() {
            *v *= scale;
        }
        Ok(())
    }

    /// Unitary forward transform of a field into the momentum grid.
    pub fn fft_forward(&self, field: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = field.to_vec();
        self.fft_forward_inplace(&mut buf)?;
        Ok(buf)
    }

    /// Unitary inverse transform of a spectrum back onto the lattice.
    pub fn fft_inverse(&self, spectrum: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut buf = spectrum.to_vec();
        self.fft_inverse_inplace(&mut buf)?;
        Ok(buf)
    }

    /// Discrete norm `sum |f|^2 dx`.
    pub fn norm_squared(&self, field: &[Complex64]) -> f64 {
        field.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dx
    }
}
