//! Closed-form predictions for the average received power.
//!
//! With Rayleigh IRS-user channels and phase errors uniform on
//! `[-π/2^b, π/2^b]`, `E[e^{jΔθ}] = (2^b/π) sin(π/2^b)`, and the average power
//! with `b`-bit shifters grows as `M²` times the square of that factor.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::PhaseResolution;
use crate::error::{invalid, Error, Result};

/// `E[e^{jΔθ}]` for `Δθ` uniform on `[-π/2^b, π/2^b]`.
pub fn mean_phase_factor(bits: u32) -> f64 {
    let levels = 2f64.powi(bits as i32);
    levels / PI * (PI / levels).sin()
}

/// Power ratio `γ(b)/γ(∞)` in the large-M limit.
pub fn eta(bits: u32) -> f64 {
    mean_phase_factor(bits).powi(2)
}

pub fn eta_db(bits: u32) -> f64 {
    10.0 * eta(bits).log10()
}

/// [`mean_phase_factor`] extended to continuous phases (factor 1).
pub fn resolution_factor(resolution: PhaseResolution) -> f64 {
    match resolution {
        PhaseResolution::Bits(b) => mean_phase_factor(b),
        PhaseResolution::Continuous => 1.0,
    }
}

/// Inputs of the large-M power law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingLawParams {
    pub n: usize,
    pub m: usize,
    /// Per-IRS standard deviation `ϱ_k` of the Rayleigh IRS-user channel.
    pub varrho: Vec<f64>,
    /// Per-IRS `E[|ρ_k|²]`, with `λ_k = sqrt(NM) ρ_k`.
    pub rho2: Vec<f64>,
    pub resolution: PhaseResolution,
}

impl ScalingLawParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(invalid("n/m", "array sizes must be ≥ 1"));
        }
        if self.varrho.is_empty() || self.varrho.len() != self.rho2.len() {
            return Err(invalid("varrho/rho2", "need one entry per IRS in both lists"));
        }
        if self.varrho.iter().chain(&self.rho2).any(|v| v.is_nan() || *v <= 0.0) {
            return Err(invalid("varrho/rho2", "entries must be > 0"));
        }
        self.resolution.validate()
    }
}

/// Average received power at `p = 1`:
///
/// `N M Σ ϱ_k² E|ρ_k|² + N M (M−1) Σ E|ρ_k|² (π ϱ_k²/4) (E[e^{jΔθ}])²`,
/// cross-IRS terms dropped.
pub fn theoretical_gamma(params: &ScalingLawParams) -> Result<f64> {
    params.validate()?;
    let nm = (params.n * params.m) as f64;
    let factor = resolution_factor(params.resolution).powi(2);
    let (incoherent, coherent) = params
        .varrho
        .iter()
        .zip(&params.rho2)
        .fold((0.0, 0.0), |(inc, coh), (v, r)| {
            (inc + v * v * r, coh + r * PI * v * v / 4.0)
        });
    Ok(nm * incoherent + nm * (params.m as f64 - 1.0) * coherent * factor)
}

pub const MIN_ERROR_SAMPLES: usize = 1000;

/// Empirical statistics of quantization errors.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationStats {
    /// Sample mean of `e^{jΔθ}`.
    pub mean: Complex64,
    /// Counts over equal-width bins spanning `[-π/2^b, π/2^b]`.
    pub histogram: Vec<usize>,
    /// Kolmogorov-Smirnov distance to the uniform law on that interval.
    pub ks_statistic: f64,
    pub samples: usize,
}

/// Summarizes `Δθ` samples from `bits`-bit rounding.
pub fn discretization_error_stats(samples: &[f64], bits: u32, bins: usize) -> Result<DiscretizationStats> {
    if samples.len() < MIN_ERROR_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            min: MIN_ERROR_SAMPLES,
        });
    }
    PhaseResolution::Bits(bits).validate()?;
    if bins == 0 {
        return Err(invalid("bins", "need at least one histogram bin"));
    }
    let half = PI / 2f64.powi(bits as i32);
    let n = samples.len() as f64;

    let mean = samples.iter().map(|&t| Complex64::from_polar(1.0, t)).sum::<Complex64>() / n;

    let mut histogram = vec![0usize; bins];
    for &t in samples {
        let u = ((t + half) / (2.0 * half)).clamp(0.0, 1.0);
        histogram[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }

    let mut sorted: Vec<f64> = samples.iter().map(|&t| ((t + half) / (2.0 * half)).clamp(0.0, 1.0)).collect();
    sorted.sort_by(f64::total_cmp);
    let ks_statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - i as f64 / n).max((i + 1) as f64 / n - u))
        .fold(0.0, f64::max);

    Ok(DiscretizationStats {
        mean,
        histogram,
        ks_statistic,
        samples: samples.len(),
    })
}

/// Asymptotic one-sample Kolmogorov-Smirnov critical value at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}
