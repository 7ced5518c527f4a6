//! Weighted phase-space samples and ordering-aware ensemble averages.
//!
//! A trajectory is a pair of complex mode vectors `(alpha, beta)` plus one
//! complex weight `Omega`.  For the Wigner (`s = 1/2`) and Q (`s = 1`)
//! representations the phase space is classical and `beta = conj(alpha)`
//! holds exactly; the positive-P and complex-P representations (`s = 0`)
//! double the phase space and `beta` is independent.  Quantum expectation
//! values are weighted sample means `(1/S) sum Omega f(alpha, beta)`, and
//! the weights themselves average to one.

use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;

use crate::error::{Error, Result};

/// Samples are combined in fixed-size blocks so that the reduction result
/// is bitwise independent of the worker count.
const REDUCTION_BLOCK: usize = 1024;

/// Representation label: the ordering parameter `s` and whether the phase
/// space is doubled (`beta` independent of `conj(alpha)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ordering {
    s: f64,
    doubled: bool,
}

impl Ordering {
    /// Normal order, doubled phase space (positive-P / complex-P).
    pub const fn positive_p() -> Self {
        Ordering { s: 0.0, doubled: true }
    }

    /// Symmetric order.
    pub const fn wigner() -> Self {
        Ordering { s: 0.5, doubled: false }
    }

    /// Anti-normal order.
    pub const fn q() -> Self {
        Ordering { s: 1.0, doubled: false }
    }

    /// Construct from an ordering parameter; only the three canonical
    /// values are accepted (`doubled` is implied by `s = 0`).
    pub fn from_s(s: f64) -> Result<Self> {
        if s == 0.0 {
            Ok(Self::positive_p())
        } else if s == 0.5 {
            Ok(Self::wigner())
        } else if s == 1.0 {
            Ok(Self::q())
        } else {
            Err(Error::UnsupportedOrdering(s))
        }
    }

    #[inline]
    pub fn s(&self) -> f64 {
        self.s
    }

    #[inline]
    pub fn doubled(&self) -> bool {
        self.doubled
    }
}

/// One trajectory's phase-space coordinates and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSample {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub weight: Complex64,
}

impl PhaseSample {
    /// Vacuum sample: all amplitudes zero, weight one.
    pub fn vacuum(modes: usize) -> Self {
        PhaseSample {
            alpha: vec![Complex64::new(0.0, 0.0); modes],
            beta: vec![Complex64::new(0.0, 0.0); modes],
            weight: Complex64::new(1.0, 0.0),
        }
    }

    /// Classical sample with `beta = conj(alpha)` and weight one.
    pub fn classical(alpha: Vec<Complex64>) -> Self {
        let beta = alpha.iter().map(|a| a.conj()).collect();
        PhaseSample { alpha, beta, weight: Complex64::new(1.0, 0.0) }
    }

    pub fn modes(&self) -> usize {
        self.alpha.len()
    }
}

/// Weighted mean and the standard error of each complex component
/// (real and imaginary parts are treated as independent estimators).
#[derive(Debug, Clone, Copy)]
pub struct MeanEstimate {
    pub mean: Complex64,
    pub std_error: Complex64,
}

impl MeanEstimate {
    /// Combined scalar error, for callers that want a single number.
    pub fn total_error(&self) -> f64 {
        self.std_error.re.hypot(self.std_error.im)
    }
}

/// A set of independent trajectories sharing one ordering and mode count.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    samples: Vec<PhaseSample>,
    ordering: Ordering,
    mode_count: usize,
}

impl WeightedEnsemble {
    pub fn new(ordering: Ordering, mode_count: usize) -> Self {
        WeightedEnsemble { samples: Vec::new(), ordering, mode_count }
    }

    /// Add a sample, enforcing the mode count and (for non-doubled
    /// orderings) exact conjugacy between `beta` and `alpha`.
    pub fn push(&mut self, sample: PhaseSample) -> Result<()> {
        if sample.modes() != self.mode_count || sample.beta.len() != self.mode_count {
            return Err(Error::ModeCountMismatch {
                expected: self.mode_count,
                got: sample.modes(),
            });
        }
        if !self.ordering.doubled() {
            let exact = sample
                .alpha
                .iter()
                .zip(sample.beta.iter())
                .all(|(a, b)| a.conj() == *b);
            if !exact {
                return Err(Error::ConjugacyViolation { s: self.ordering.s() });
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn samples(&self) -> &[PhaseSample] {
        &self.samples
    }

    /// Weighted ensemble average `(1/S) sum Omega f` with standard errors.
    ///
    /// Moment values are evaluated in parallel; partial sums are taken over
    /// fixed-size blocks with compensated summation and combined in block
    /// order, so the result does not depend on the worker count.
    pub fn weighted_mean<F>(&self, f: F) -> Result<MeanEstimate>
    where
        F: Fn(&PhaseSample) -> Complex64 + Sync,
    {
        if self.samples.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        let values: Vec<Complex64> = self
            .samples
            .par_iter()
            .map(|s| s.weight * f(s))
            .collect();
        for (index, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteMoment { index });
            }
        }
        Ok(mean_and_error(&values))
    }

    /// Mean of the bare weights; statistically one for a correct sampler.
    pub fn mean_weight(&self) -> Result<MeanEstimate> {
        self.weighted_mean(|_| Complex64::new(1.0, 0.0))
    }

    /// Ordering-corrected particle number per mode:
    /// `Re <beta_k alpha_k> - s`, with the standard error of the real part.
    pub fn number_per_mode(&self) -> Result<Vec<(f64, f64)>> {
        let s = self.ordering.s();
        (0..self.mode_count)
            .map(|k| {
                let est = self.weighted_mean(|smp| smp.beta[k] * smp.alpha[k])?;
                Ok((est.mean.re - s, est.std_error.re))
            })
            .collect()
    }

    /// Effective sample size `|sum Omega|^2 / sum |Omega|^2` of the
    /// weighted estimator; equals S for unit weights.
    pub fn effective_sample_size(&self) -> f64 {
        let sum: Complex64 = kahan_sum(self.samples.iter().map(|s| s.weight));
        let sum_sq: f64 = self.samples.iter().map(|s| s.weight.norm_sqr()).sum();
        if sum_sq == 0.0 {
            0.0
        } else {
            sum.norm_sqr() / sum_sq
        }
    }

    /// Columnar CSV snapshot: re/im pairs of every mode amplitude plus the
    /// weight, one row per sample.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = Vec::new();
        for k in 0..self.mode_count {
            header.push(format!("alpha{k}_re"));
            header.push(format!("alpha{k}_im"));
        }
        for k in 0..self.mode_count {
            header.push(format!("beta{k}_re"));
            header.push(format!("beta{k}_im"));
        }
        header.push("weight_re".into());
        header.push("weight_im".into());
        writeln!(out, "{}", header.join(","))?;
        for s in &self.samples {
            let mut row = Vec::new();
            for a in &s.alpha {
                row.push(format!("{}", a.re));
                row.push(format!("{}", a.im));
            }
            for b in &s.beta {
                row.push(format!("{}", b.re));
                row.push(format!("{}", b.im));
            }
            row.push(format!("{}", s.weight.re));
            row.push(format!("{}", s.weight.im));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Compensated (Kahan) accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: Complex64) {
        let y = v.re - self.c_re;
        let t = self.sum_re + y;
        self.c_re = (t - self.sum_re) - y;
        self.sum_re = t;
        let y = v.im - self.c_im;
        let t = self.sum_im + y;
        self.c_im = (t - self.sum_im) - y;
        self.sum_im = t;
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re, self.sum_im)
    }
}

/// Compensated sum of complex values in iteration order.
pub fn kahan_sum<I: IntoIterator<Item = Complex64>>(values: I) -> Complex64 {
    let mut acc = KahanSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Block-compensated mean and per-component standard error of the mean.
pub fn mean_and_error(values: &[Complex64]) -> MeanEstimate {
    let n = values.len();
    let mean = block_sum(values) / n as f64;
    if n < 2 {
        return MeanEstimate { mean, std_error: Complex64::new(0.0, 0.0) };
    }
    let dev: Vec<Complex64> = values
        .iter()
        .map(|v| {
            let dr = v.re - mean.re;
            let di = v.im - mean.im;
            Complex64::new(dr * dr, di * di)
        })
        .collect();
    let var = block_sum(&dev) / (n as f64 - 1.0);
    let norm = n as f64;
    MeanEstimate {
        mean,
        std_error: Complex64::new((var.re / norm).sqrt(), (var.im / norm).sqrt()),
    }
}

fn block_sum(values: &[Complex64]) -> Complex64 {
    let partials: Vec<Complex64> = values
        .par_chunks(REDUCTION_BLOCK)
        .map(|chunk| kahan_sum(chunk.iter().copied()))
        .collect();
    kahan_sum(partials)
}
