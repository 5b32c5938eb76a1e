//! Reference solvers used to audit the closed-form solution.
//!
//! [`brute_force_discrete`] enumerates every discrete phase configuration;
//! [`upper_bound_power`] bounds the continuous-phase optimum, which dominates
//! every discrete configuration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{aligned_gains, assemble_phi, finish_solution, steering_matrix, BeamformingSolution, PhaseConfig};
use crate::channel::ChannelRealization;
use crate::config::{PhaseResolution, SystemConfig};
use crate::error::{invalid, Error, Result};

/// Largest search space `brute_force_discrete` will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 1 << 20;

/// Largest IRS count for which the common-phase search is refined.
const REFINE_MAX_K: usize = 5;
const REFINE_REL_TOL: f64 = 1e-4;
const REFINE_MAX_NODES: usize = 20_000;

/// Globally optimal discrete phases by exhaustive enumeration, with MRT.
///
/// The first element of the first IRS is pinned to index 0: a common rotation
/// of all phases only rotates the composite channel. Among equally good
/// configurations the lexicographically smallest index vector wins.
pub fn brute_force_discrete(realization: &ChannelRealization, cfg: &SystemConfig) -> Result<BeamformingSolution> {
    let bits = match cfg.resolution {
        PhaseResolution::Bits(b) => b,
        PhaseResolution::Continuous => {
            return Err(invalid("b", "brute force needs a finite phase resolution"))
        }
    };
    cfg.resolution.validate()?;
    realization.validate_shapes()?;

    let levels = 1usize << bits;
    let dims: Vec<usize> = realization.bs_irs.iter().map(|c| c.a.len()).collect();
    let total_elems: usize = dims.iter().sum();
    let size = (levels as f64).powi(total_elems as i32);
    if size > BRUTE_FORCE_LIMIT as f64 {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let k = realization.k();
    // Per-element terms λ_k h_km* a_km, flattened IRS-major.
    let terms: Vec<Complex64> = realization
        .bs_irs
        .iter()
        .zip(&realization.irs_user)
        .flat_map(|(ch, h)| h.iter().zip(ch.a.iter()).map(move |(h, a)| ch.lambda * h.conj() * a).collect::<Vec<_>>())
        .collect();
    let owner: Vec<usize> = dims.iter().enumerate().flat_map(|(k, &m)| std::iter::repeat_n(k, m)).collect();
    // gram[i][j] = b_jᴴ b_i, so that ‖Σ c_k b_k‖² = Σ_ij c_i c_j* gram[i][j].
    let gram: Vec<Vec<Complex64>> = (0..k)
        .map(|i| (0..k).map(|j| realization.bs_irs[j].b.dotc(&realization.bs_irs[i].b)).collect())
        .collect();
    let rotations: Vec<Complex64> = (0..levels).map(|i| Complex64::from_polar(1.0, TAU * i as f64 / levels as f64)).collect();

    let objective = |idx: &[usize], coeffs: &mut [Complex64]| -> f64 {
        coeffs.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for ((t, &i), &o) in terms.iter().zip(idx).zip(&owner) {
            coeffs[o] += t * rotations[i];
        }
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                total += (coeffs[i] * coeffs[j].conj() * gram[i][j]).re;
            }
        }
        total
    };

    let mut idx = vec![0usize; total_elems];
    let mut coeffs = vec![Complex64::new(0.0, 0.0); k];
    let mut best = objective(&idx, &mut coeffs);
    let mut best_idx = idx.clone();
    // Odometer over positions 1.. (position 0 stays pinned), last position fastest
    // so the visiting order is lexicographic.
    if total_elems > 1 {
        'outer: loop {
            let mut pos = total_elems - 1;
            loop {
                idx[pos] += 1;
                if idx[pos] < levels {
                    break;
                }
                idx[pos] = 0;
                if pos == 1 {
                    break 'outer;
                }
                pos -= 1;
            }
            let val = objective(&idx, &mut coeffs);
            if val > best {
                best = val;
                best_idx.copy_from_slice(&idx);
            }
        }
    }

    let mut phases = Vec::with_capacity(k);
    let mut offset = 0;
    for &m in &dims {
        phases.push(PhaseConfig::Discrete {
            bits,
            indices: best_idx[offset..offset + m].iter().map(|&i| i as u32).collect(),
        });
        offset += m;
    }
    finish_solution(realization, phases, aligned_gains(realization)?, cfg.p_watts())
}

/// Certified upper bound on the received power over all continuous phases.
///
/// Returns `p · min(K λ_max(A), Σ|A_ij|)` with `A = ΦΦᴴ`; for `K ≤ 5` the
/// unit-modulus maximization of `vᴴAv` is additionally bounded by
/// Lipschitz branch-and-bound over the common phases.
pub fn upper_bound_power(realization: &ChannelRealization, cfg: &SystemConfig) -> Result<f64> {
    realization.validate_shapes()?;
    let z = aligned_gains(realization)?;
    let phi = assemble_phi(&z, &steering_matrix(realization))?;
    let a = &phi * phi.adjoint();
    Ok(cfg.p_watts() * qcqp_upper_bound(&a))
}

/// Upper bound on `max vᴴAv` over `|v_k| = 1` for Hermitian PSD `A`.
pub fn qcqp_upper_bound(a: &DMatrix<Complex64>) -> f64 {
    let k = a.nrows();
    if k == 0 {
        return 0.0;
    }
    let lambda_max = a
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let abs_sum: f64 = a.iter().map(|x| x.norm()).sum();
    let analytic = (k as f64 * lambda_max).min(abs_sum);
    if k == 1 || k > REFINE_MAX_K {
        return analytic;
    }
    // Σ|A_ij| is exact for K = 2: A11 + A22 + 2|A12| is attained.
    if k == 2 {
        return abs_sum;
    }
    branch_and_bound(a, REFINE_REL_TOL, REFINE_MAX_NODES).min(analytic)
}

/// `vᴴAv` with `v = (1, e^{jα_1}, …)`.
fn quadratic_form(a: &DMatrix<Complex64>, alphas: &[f64]) -> f64 {
    let k = a.nrows();
    let v: Vec<Complex64> = std::iter::once(Complex64::new(1.0, 0.0))
        .chain(alphas.iter().map(|&t| Complex64::from_polar(1.0, t)))
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            total += (v[i].conj() * a[(i, j)] * v[j]).re;
        }
    }
    total
}

struct Cell {
    upper: f64,
    center: Vec<f64>,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.upper.total_cmp(&other.upper) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.upper.total_cmp(&other.upper)
    }
}

/// Best-first branch-and-bound over the common phases `α_2..α_K` (α_1 = 0).
///
/// On a cube of half-width `h` around `c`, `f(α) ≤ f(c) + h Σ_k L_k` with
/// `L_k = 2 Σ_{j≠k} |A_kj|` bounding `|∂f/∂α_k|`. The returned value is the
/// largest upper bound among the open cells, so it is always certified, even
/// when the node budget runs out.
fn branch_and_bound(a: &DMatrix<Complex64>, rel_tol: f64, max_nodes: usize) -> f64 {
    let k = a.nrows();
    let dims = k - 1;
    let slope: f64 = (1..k)
        .map(|i| 2.0 * (0..k).filter(|&j| j != i).map(|j| a[(i, j)].norm()).sum::<f64>())
        .sum();

    let mut lower = quadratic_form(a, &vec![0.0; dims]);
    let mut heap = BinaryHeap::new();
    let root = vec![PI; dims];
    let root_val = quadratic_form(a, &root);
    lower = lower.max(root_val);
    heap.push(Cell {
        upper: root_val + PI * slope,
        center: root,
        half: PI,
    });

    let mut expanded = 0;
    while let Some(cell) = heap.pop() {
        if cell.upper <= lower * (1.0 + rel_tol) || expanded >= max_nodes {
            return cell.upper;
        }
        expanded += 1;
        let half = cell.half / 2.0;
        for corner in 0..(1usize << dims) {
            let center: Vec<f64> = cell
                .center
                .iter()
                .enumerate()
                .map(|(d, c)| if corner >> d & 1 == 1 { c + half } else { c - half })
                .collect();
            let val = quadratic_form(a, &center);
            lower = lower.max(val);
            heap.push(Cell {
                upper: val + half * slope,
                center,
                half,
            });
        }
    }
    lower
}
