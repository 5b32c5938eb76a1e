//! Joint active/passive beamforming for multi-IRS downlinks.
//!
//! With rank-one BS-IRS channels `G_k = λ_k a_k b_kᵀ`, the contribution of
//! IRS `k` collapses to a scalar `θ_kᵀ g_k` with `g_k = λ_k (h_k* ∘ a_k)`.
//! Each IRS aligns the phases of `g_k` independently, the phases are rounded
//! to the `b`-bit alphabet, the common phase of every IRS is left at zero, and
//! the BS applies maximum-ratio transmission against the resulting composite
//! channel.

mod oracle;

pub use oracle::{brute_force_discrete, qcqp_upper_bound, upper_bound_power, BRUTE_FORCE_LIMIT};

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CVector, ChannelRealization, RankOneChannel};
use crate::config::{PhaseResolution, SystemConfig};
use crate::error::{check_dim, invalid, Error, Result};

/// Phase settings of one IRS.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseConfig {
    /// Indices into `{0, 2π/2^b, …, 2π(2^b − 1)/2^b}`.
    Discrete { bits: u32, indices: Vec<u32> },
    /// Angles in `[0, 2π)`.
    Continuous(Vec<f64>),
}

impl PhaseConfig {
    pub fn len(&self) -> usize {
        match self {
            PhaseConfig::Discrete { indices, .. } => indices.len(),
            PhaseConfig::Continuous(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn angle(&self, m: usize) -> f64 {
        match self {
            PhaseConfig::Discrete { bits, indices } => index_to_angle(indices[m], *bits),
            PhaseConfig::Continuous(a) => a[m],
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|m| self.angle(m)).collect()
    }

    /// Reflection coefficients `e^{jθ_m}`.
    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.len()).map(|m| Complex64::from_polar(1.0, self.angle(m)))
    }

    pub fn is_valid(&self) -> bool {
        match self {
            PhaseConfig::Discrete { bits, indices } => indices.iter().all(|&i| (i as u64) < (1u64 << bits)),
            PhaseConfig::Continuous(a) => a.iter().all(|&t| (0.0..TAU).contains(&t)),
        }
    }
}

/// Angle of alphabet point `index` for `bits`-bit shifters.
pub fn index_to_angle(index: u32, bits: u32) -> f64 {
    TAU * index as f64 / (1u64 << bits) as f64
}

/// Wraps an angle difference into `[-π, π)`.
pub fn wrap_to_pi(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

/// Result of a beamforming solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingSolution {
    /// BS precoder `w`, `‖w‖² = p`.
    pub precoder: CVector,
    pub phases: Vec<PhaseConfig>,
    /// Received signal power (W).
    pub gamma: f64,
    /// Per-IRS gains `z_k = ‖g_k‖₁` under perfect alignment.
    pub effective_gains: Vec<f64>,
}

/// `g = λ (h_r* ∘ a)`.
pub fn effective_gain_vector(ch: &RankOneChannel, h_r: &CVector) -> Result<CVector> {
    check_dim("effective gain", ch.a.len(), h_r.len())?;
    Ok(h_r.zip_map(&ch.a, |h, a| ch.lambda * h.conj() * a))
}

/// Phases `θ_m = −arg(g_m)` that make `θᵀg = ‖g‖₁`. Zero entries get phase 0.
pub fn optimal_continuous_phases(g: &CVector) -> PhaseConfig {
    PhaseConfig::Continuous(
        g.iter()
            .map(|x| {
                if *x == Complex64::new(0.0, 0.0) {
                    0.0
                } else {
                    let t = (-x.arg()).rem_euclid(TAU);
                    // rem_euclid can round up to exactly 2π.
                    if t >= TAU {
                        0.0
                    } else {
                        t
                    }
                }
            })
            .collect(),
    )
}

/// Index of the alphabet point nearest to `theta` in circular distance.
///
/// Exact midpoints go to the lower index; the midpoint between the last point
/// and 2π therefore maps to index 0.
pub fn quantize_angle(theta: f64, bits: u32) -> u32 {
    let levels = 1u64 << bits;
    let q = theta.rem_euclid(TAU) / TAU * levels as f64;
    let lo = q.floor();
    let frac = q - lo;
    let lo = lo as u64 % levels;
    let hi = (lo + 1) % levels;
    let idx = if frac < 0.5 {
        lo
    } else if frac > 0.5 {
        hi
    } else {
        lo.min(hi)
    };
    idx as u32
}

/// Rounds every phase to the `bits`-bit alphabet.
pub fn quantize_phases(theta: &PhaseConfig, bits: u32) -> Result<PhaseConfig> {
    PhaseResolution::Bits(bits).validate()?;
    Ok(PhaseConfig::Discrete {
        bits,
        indices: theta.angles().into_iter().map(|t| quantize_angle(t, bits)).collect(),
    })
}

/// Per-element discretization errors `θ_quantized − θ_continuous` in `[-π, π)`.
pub fn discretization_errors(continuous: &PhaseConfig, quantized: &PhaseConfig) -> Vec<f64> {
    continuous
        .angles()
        .into_iter()
        .zip(quantized.angles())
        .map(|(c, q)| wrap_to_pi(q - c))
        .collect()
}

/// `K × N` matrix whose rows are `b_kᵀ`.
pub fn steering_matrix(realization: &ChannelRealization) -> DMatrix<Complex64> {
    let k = realization.k();
    let n = realization.n_bs();
    DMatrix::from_fn(k, n, |i, j| realization.bs_irs[i].b[j])
}

/// `Φ = D_z B`.
pub fn assemble_phi(z: &[f64], b_rows: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    check_dim("Φ rows", b_rows.nrows(), z.len())?;
    if let Some(bad) = z.iter().find(|x| x.is_nan() || **x < 0.0) {
        return Err(invalid("z", format!("gains must be ≥ 0, got {bad}")));
    }
    let mut phi = b_rows.clone();
    for (mut row, &zk) in phi.row_iter_mut().zip(z) {
        row *= Complex64::new(zk, 0.0);
    }
    Ok(phi)
}

/// Precoder maximizing `|cᵀw|²` subject to `‖w‖² ≤ p`: `w = √p c*/‖c‖`.
pub fn mrt_for_channel(c: &CVector, p_watts: f64) -> Result<CVector> {
    let norm = c.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::DegenerateChannel);
    }
    Ok(c.conjugate() * Complex64::new(p_watts.sqrt() / norm, 0.0))
}

/// MRT against the effective channel `vᴴΦ`.
pub fn mrt_precoder(v: &CVector, phi: &DMatrix<Complex64>, p_watts: f64) -> Result<CVector> {
    check_dim("v", phi.nrows(), v.len())?;
    let eff: CVector = phi.transpose() * v.conjugate();
    mrt_for_channel(&eff, p_watts)
}

/// Scalar `h_rᴴ Θ a λ` of one IRS for the given phases.
fn irs_coefficient(ch: &RankOneChannel, h_r: &CVector, phases: &PhaseConfig) -> Complex64 {
    h_r.iter()
        .zip(ch.a.iter())
        .zip(phases.coefficients())
        .map(|((h, a), t)| h.conj() * t * a)
        .sum::<Complex64>()
        * ch.lambda
}

/// Composite row channel `Σ_k h_kᴴ Θ_k G_k` (as a column vector).
pub fn composite_channel(realization: &ChannelRealization, phases: &[PhaseConfig]) -> Result<CVector> {
    realization.validate_shapes()?;
    check_dim("phase configs", realization.k(), phases.len())?;
    let mut c = CVector::zeros(realization.n_bs());
    for ((ch, h), th) in realization.bs_irs.iter().zip(&realization.irs_user).zip(phases) {
        check_dim("phase config", ch.a.len(), th.len())?;
        c.axpy(irs_coefficient(ch, h, th), &ch.b, Complex64::new(1.0, 0.0));
    }
    Ok(c)
}

/// Received power `|Σ_k h_kᴴ Θ_k G_k w|²`.
pub fn receive_power(realization: &ChannelRealization, w: &CVector, phases: &[PhaseConfig]) -> Result<f64> {
    let c = composite_channel(realization, phases)?;
    check_dim("precoder", c.len(), w.len())?;
    Ok(c.dot(w).norm_sqr())
}

/// Closed-form joint solution at resolution `cfg.resolution`.
pub fn solve_joint(realization: &ChannelRealization, cfg: &SystemConfig) -> Result<BeamformingSolution> {
    solve_joint_with(realization, cfg.resolution, cfg.p_watts())
}

/// [`solve_joint`] with explicit resolution and power budget (watts).
pub fn solve_joint_with(
    realization: &ChannelRealization,
    resolution: PhaseResolution,
    p_watts: f64,
) -> Result<BeamformingSolution> {
    resolution.validate()?;
    realization.validate_shapes()?;
    let mut phases = Vec::with_capacity(realization.k());
    let mut effective_gains = Vec::with_capacity(realization.k());
    for (ch, h) in realization.bs_irs.iter().zip(&realization.irs_user) {
        let g = effective_gain_vector(ch, h)?;
        effective_gains.push(g.iter().map(|x| x.norm()).sum());
        let aligned = optimal_continuous_phases(&g);
        phases.push(match resolution {
            PhaseResolution::Continuous => aligned,
            PhaseResolution::Bits(b) => quantize_phases(&aligned, b)?,
        });
    }
    finish_solution(realization, phases, effective_gains, p_watts)
}

pub(crate) fn finish_solution(
    realization: &ChannelRealization,
    phases: Vec<PhaseConfig>,
    effective_gains: Vec<f64>,
    p_watts: f64,
) -> Result<BeamformingSolution> {
    let c = composite_channel(realization, &phases)?;
    let precoder = mrt_for_channel(&c, p_watts)?;
    let gamma = receive_power(realization, &precoder, &phases)?;
    Ok(BeamformingSolution {
        precoder,
        phases,
        gamma,
        effective_gains,
    })
}

/// Per-IRS aligned gains `z_k = ‖g_k‖₁`.
pub fn aligned_gains(realization: &ChannelRealization) -> Result<Vec<f64>> {
    realization
        .bs_irs
        .iter()
        .zip(&realization.irs_user)
        .map(|(ch, h)| Ok(effective_gain_vector(ch, h)?.iter().map(|x| x.norm()).sum()))
        .collect()
}

/// Received power of the no-IRS baseline under MRT: `p ‖h_d‖²`.
pub fn direct_link_power(h_d: &CVector, p_watts: f64) -> Result<f64> {
    let w = mrt_for_channel(h_d, p_watts)?;
    Ok(h_d.dot(&w).norm_sqr())
}
