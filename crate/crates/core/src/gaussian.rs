//! Multimode Gaussian state sampling via covariance factorization.
//!
//! A Gaussian state in an s-ordered representation is specified by the
//! extended mean `alpha0` (length 2M) and the complex symmetric covariance
//! `sigma` with `<{a_i a_j}_s> = alpha0_i alpha0_j + sigma_ij`.  Samples
//! are `alpha = alpha0 + B w` with 2M independent real unit Gaussians `w`
//! and any complex square root `B B^T = sigma`.
//!
//! For the Wigner and Q orderings the last M entries must be the complex
//! conjugates of the first M sample by sample, which pins the factor rows:
//! `conj(row_j B) = row_{M+j} B`.  That factor is built from the
//! eigendecomposition of the real covariance that `sigma` induces on the
//! `(x, y)` quadratures.  Doubled (positive/complex P) covariances carry
//! no such constraint and are factorized with a Takagi-style symmetric
//! decomposition instead.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

use crate::ensemble::{Ordering, PhaseSample};
use crate::error::{Error, Result};

const FACTOR_TOL: f64 = 1e-10;

/// Mean vector and s-ordered covariance of a Gaussian state.
#[derive(Debug, Clone)]
pub struct CovarianceSpec {
    mean: DVector<Complex64>,
    sigma: DMatrix<Complex64>,
    ordering: Ordering,
}

impl CovarianceSpec {
    /// Validate and wrap an extended mean (length 2M) and 2M x 2M
    /// covariance.  Symmetry and, for classical orderings, the conjugate
    /// structure of the mean are enforced here; the deeper structure of
    /// `sigma` is checked during factorization.
    pub fn new(
        mean: Vec<Complex64>,
        sigma: DMatrix<Complex64>,
        ordering: Ordering,
    ) -> Result<Self> {
        let dim = mean.len();
        assert!(dim % 2 == 0, "extended mean must have even length");
        assert_eq!(sigma.nrows(), dim, "sigma must be 2M x 2M");
        assert_eq!(sigma.ncols(), dim, "sigma must be 2M x 2M");
        let scale = 1.0 + sigma.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let asym = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| (sigma[(i, j)] - sigma[(j, i)]).norm())
            .fold(0.0, f64::max);
        if asym > FACTOR_TOL * scale {
            return Err(Error::AsymmetricCovariance(asym));
        }
        if !ordering.doubled() {
            let m = dim / 2;
            for j in 0..m {
                if (mean[j].conj() - mean[m + j]).norm() > FACTOR_TOL * (1.0 + mean[j].norm()) {
                    return Err(Error::CovarianceStructure((mean[j].conj() - mean[m + j]).norm()));
                }
            }
        }
        Ok(CovarianceSpec { mean: DVector::from_vec(mean), sigma, ordering })
    }

    /// Vacuum state: zero mean, `sigma_{j,M+j} = s`.
    pub fn vacuum(modes: usize, ordering: Ordering) -> Self {
        Self::thermal(&vec![0.0; modes], ordering)
    }

    /// Coherent state `|alpha_0>`: vacuum covariance, displaced mean.
    pub fn coherent(amplitudes: &[Complex64], ordering: Ordering) -> Self {
        let mut spec = Self::thermal(&vec![0.0; amplitudes.len()], ordering);
        for (j, a) in amplitudes.iter().enumerate() {
            spec.mean[j] = *a;
            spec.mean[amplitudes.len() + j] = a.conj();
        }
        spec
    }

    /// Thermal state with mean occupations `nbar`: the cross block is
    /// `nbar_j + s` on the diagonal, all other covariances vanish.
    pub fn thermal(nbar: &[f64], ordering: Ordering) -> Self {
        let m = nbar.len();
        let mut sigma = DMatrix::from_element(2 * m, 2 * m, Complex64::new(0.0, 0.0));
        for (j, &n) in nbar.iter().enumerate() {
            let v = Complex64::new(n + ordering.s(), 0.0);
            sigma[(j, m + j)] = v;
            sigma[(m + j, j)] = v;
        }
        CovarianceSpec {
            mean: DVector::from_element(2 * m, Complex64::new(0.0, 0.0)),
            sigma,
            ordering,
        }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn extended_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn sigma(&self) -> &DMatrix<Complex64> {
        &self.sigma
    }

    pub fn mean(&self) -> &DVector<Complex64> {
        &self.mean
    }
}

/// A complex square root `B B^T = sigma`, with the conjugate row pairing
/// for classical orderings.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    b: DMatrix<Complex64>,
}

impl NoiseFactor {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.b
    }
}

/// Factorize the covariance of `spec` into a noise matrix.
pub fn factor_covariance(spec: &CovarianceSpec) -> Result<NoiseFactor> {
    let b = if spec.ordering().doubled() {
        takagi_factor(&spec.sigma)?
    } else {
        quadrature_factor(&spec.sigma)?
    };
    let scale = 1.0 + spec.sigma.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let residual = (&b * b.transpose() - &spec.sigma)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if residual > FACTOR_TOL * scale {
        return Err(Error::FactorizationResidual(residual));
    }
    Ok(NoiseFactor { b })
}

/// One Gaussian sample `alpha = alpha0 + B w`, weight one.
pub fn sample_gaussian<R: Rng + ?Sized>(
    spec: &CovarianceSpec,
    factor: &NoiseFactor,
    rng: &mut R,
) -> Result<PhaseSample> {
    let dim = spec.extended_dim();
    if factor.b.nrows() != dim {
        return Err(Error::FactorDimensionMismatch { expected: dim, got: factor.b.nrows() });
    }
    let w = DVector::from_fn(dim, |_, _| {
        let x: f64 = rng.sample(StandardNormal);
        Complex64::new(x, 0.0)
    });
    let ext = &spec.mean + &factor.b * w;
    let m = dim / 2;
    let alpha: Vec<Complex64> = ext.iter().take(m).copied().collect();
    let beta: Vec<Complex64> = ext.iter().skip(m).copied().collect();
    Ok(PhaseSample { alpha, beta, weight: Complex64::new(1.0, 0.0) })
}

/// Multiply every mode by one random global phase, `alpha_k -> e^{i phi}
/// alpha_k` and `beta_k -> e^{-i phi} beta_k`; used to turn a
/// phase-reference Gaussian into a quasi-Gaussian (Poissonian) mixture.
pub fn randomize_phase<R: Rng + ?Sized>(sample: &PhaseSample, rng: &mut R) -> PhaseSample {
    let phi = rng.random_range(-PI..PI);
    let fwd = Complex64::from_polar(1.0, phi);
    let bwd = Complex64::from_polar(1.0, -phi);
    PhaseSample {
        alpha: sample.alpha.iter().map(|a| a * fwd).collect(),
        beta: sample.beta.iter().map(|b| b * bwd).collect(),
        weight: sample.weight,
    }
}

/// Factor for classical orderings through the real quadrature covariance.
///
/// Writing `delta alpha = delta x + i delta y`, the blocks of `sigma`
/// determine the real covariance of `(x, y)`; its matrix square root `R`
/// (eigendecomposition, tiny negative eigenvalues clamped) gives
/// `B_j = R_j + i R_{M+j}` for the first M rows and conjugates below.
fn quadrature_factor(sigma: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let dim = sigma.nrows();
    let m = dim / 2;
    let scale = 1.0 + sigma.iter().map(|v| v.norm()).fold(0.0, f64::max);

    // Block structure: TL = <da da>, TR = <da da*> (Hermitian),
    // BR = conj(TL); violations mean the state cannot satisfy
    // beta = conj(alpha) sample-wise.
    let mut structure_residual = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let tl = sigma[(i, j)];
            let tr = sigma[(i, m + j)];
            let br = sigma[(m + i, m + j)];
            structure_residual = structure_residual
                .max((br - tl.conj()).norm())
                .max((tr - sigma[(j, m + i)].conj()).norm());
        }
    }
    if structure_residual > FACTOR_TOL * scale {
        return Err(Error::CovarianceStructure(structure_residual));
    }

    let mut real_cov = DMatrix::zeros(dim, dim);
    for i in 0..m {
        for j in 0..m {
            let mm = sigma[(i, j)];
            let hh = sigma[(i, m + j)];
            real_cov[(i, j)] = 0.5 * (mm.re + hh.re); // C_xx
            real_cov[(m + i, m + j)] = 0.5 * (hh.re - mm.re); // C_yy
            real_cov[(i, m + j)] = 0.5 * (mm.im - hh.im); // C_xy
            real_cov[(m + i, j)] = 0.5 * (mm.im + hh.im); // C_yx
        }
    }
    // Symmetrize away rounding before the eigensolve.
    let real_cov = 0.5 * (&real_cov + real_cov.transpose());

    let eig = nalgebra::SymmetricEigen::new(real_cov);
    let mut root = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -FACTOR_TOL * scale {
            return Err(Error::IndefiniteCovariance(lambda));
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..dim {
            root[(i, k)] *= s;
        }
    }

    let mut b = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for j in 0..m {
        for k in 0..dim {
            let v = Complex64::new(root[(j, k)], root[(m + j, k)]);
            b[(j, k)] = v;
            b[(m + j, k)] = v.conj();
        }
    }
    Ok(b)
}

/// Takagi-style factor `B B^T = sigma` of a complex symmetric matrix.
///
/// The antilinear map `A(u) = sigma conj(u)` squares to `G = sigma
/// conj(sigma)` (Hermitian PSD).  On each eigenspace of `G` with
/// eigenvalue `lambda^2 > 0` one can pick an orthonormal basis with
/// `A(u) = lambda u`; those vectors satisfy `sigma = sum lambda_k u_k
/// u_k^T`, so `B` has columns `sqrt(lambda_k) u_k`.
fn takagi_factor(sigma: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let dim = sigma.nrows();
    let scale = 1.0 + sigma.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let g = sigma * sigma.map(|v| v.conj());
    let eig = nalgebra::SymmetricEigen::new(g);

    // Sort eigenpairs descending and group degenerate clusters.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let cluster_tol = 1e-8 * scale * scale;

    let mut b = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let mut col = 0usize;
    let mut idx = 0usize;
    while idx < dim {
        let mut group = vec![order[idx]];
        while idx + group.len() < dim
            && (eig.eigenvalues[order[idx]] - eig.eigenvalues[order[idx + group.len()]]).abs()
                <= cluster_tol
        {
            group.push(order[idx + group.len()]);
        }
        let lambda2 = group.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / group.len() as f64;
        let lambda = lambda2.max(0.0).sqrt();
        if lambda <= FACTOR_TOL * scale {
            // Null space of sigma: zero columns.
            col += group.len();
            idx += group.len();
            continue;
        }
        let mut basis: Vec<DVector<Complex64>> =
            group.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
        for _ in 0..group.len() {
            let y = basis[0].clone();
            let ay = sigma * y.map(|v| v.conj()) / Complex64::new(lambda, 0.0);
            let w_plus = &y + &ay;
            let w_minus = (&y - &ay).map(|v| v * Complex64::new(0.0, 1.0));
            let w = if w_plus.norm() >= w_minus.norm() { w_plus } else { w_minus };
            let u = &w / Complex64::new(w.norm(), 0.0);
            for i in 0..dim {
                b[(i, col)] = Complex64::new(lambda.sqrt(), 0.0) * u[i];
            }
            col += 1;
            // Project the whole remaining basis onto the orthogonal
            // complement of u (the complement stays invariant under A) and
            // re-orthonormalize; exactly one vector drops below threshold.
            let mut next: Vec<DVector<Complex64>> = Vec::new();
            for v in basis.iter() {
                let proj = u.dotc(v);
                let mut w = v - &u * proj;
                for q in &next {
                    let c = q.dotc(&w);
                    w -= q * c;
                }
                let norm = w.norm();
                if norm > 1e-8 {
                    next.push(w / Complex64::new(norm, 0.0));
                }
            }
            basis = next;
            if basis.is_empty() {
                break;
            }
        }
        idx += group.len();
    }
    Ok(b)
}
