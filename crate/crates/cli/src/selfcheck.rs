//! Fast invariant suite behind `irs-sim selfcheck`.
//!
//! The quantizer is injectable so that a broken rounding rule can be shown
//! to trip the checks.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use irs_core::analysis::eta;
use irs_core::beamformer::{
    brute_force_discrete, composite_channel, effective_gain_vector, index_to_angle, mrt_for_channel,
    optimal_continuous_phases, quantize_angle, solve_joint_with, upper_bound_power, wrap_to_pi, PhaseConfig,
};
use irs_core::channel::{complex_normal, ula_response, ura_response, ChannelRealization, RankOneChannel};
use irs_core::sim::{run, ExperimentKind, ExperimentSpec};
use irs_core::{PhaseResolution, ScenarioGeometry, SystemConfig};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Maps a phase in `[0, 2π)` to an alphabet index for `b` bits.
pub type Quantizer = fn(f64, u32) -> u32;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name,
        passed,
        detail: detail.into(),
    }
}

const TOL: f64 = 1e-9;

fn random_instance(k: usize, m: usize, n: usize, rng: &mut ChaCha8Rng) -> ChannelRealization {
    let mut bs_irs = Vec::new();
    let mut irs_user = Vec::new();
    for _ in 0..k {
        bs_irs.push(RankOneChannel {
            lambda: complex_normal(1.0, rng) * ((n * m) as f64).sqrt(),
            a: ura_response(m, 1, rng.random_range(-FRAC_PI_2..FRAC_PI_2), 0.0),
            b: ula_response(n, rng.random_range(-FRAC_PI_2..FRAC_PI_2)).conjugate(),
        });
        irs_user.push(DVector::from_iterator(m, (0..m).map(|_| complex_normal(1.0, rng))));
    }
    ChannelRealization { bs_irs, irs_user, direct: None }
}

/// Single IRS whose aligned phases are exactly `theta`, unit gains.
fn instance_with_phases(theta: &[f64], n: usize) -> ChannelRealization {
    let m = theta.len();
    ChannelRealization {
        bs_irs: vec![RankOneChannel {
            lambda: Complex64::new(1.0, 0.0),
            a: ura_response(m, 1, 0.0, 0.0),
            b: ula_response(n, 0.0).conjugate(),
        }],
        irs_user: vec![DVector::from_iterator(m, theta.iter().map(|&t| Complex64::from_polar(1.0, t)))],
        direct: None,
    }
}

/// The closed-form solution with `quantize` in place of the library rounding.
fn power_with(r: &ChannelRealization, bits: Option<u32>, p: f64, quantize: Quantizer) -> f64 {
    let phases: Vec<PhaseConfig> = r
        .bs_irs
        .iter()
        .zip(&r.irs_user)
        .map(|(ch, h)| {
            let aligned = optimal_continuous_phases(&effective_gain_vector(ch, h).expect("shapes match"));
            match bits {
                None => aligned,
                Some(b) => PhaseConfig::Discrete {
                    bits: b,
                    indices: aligned.angles().into_iter().map(|t| quantize(t, b)).collect(),
                },
            }
        })
        .collect();
    p * composite_channel(r, &phases).expect("shapes match").norm_squared()
}

fn nearest_by_scan(theta: f64, bits: u32) -> u32 {
    (0..1u32 << bits)
        .min_by(|&i, &j| {
            let d = |k: u32| wrap_to_pi(theta - index_to_angle(k, bits)).abs();
            d(i).total_cmp(&d(j))
        })
        .expect("alphabet is nonempty")
}

fn alignment_optimality(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..200 {
        let r = random_instance(1, 12, 8, rng);
        let g = effective_gain_vector(&r.bs_irs[0], &r.irs_user[0]).expect("shapes match");
        let aligned = optimal_continuous_phases(&g);
        let l1: f64 = g.iter().map(|x| x.norm()).sum();
        let got = aligned.coefficients().zip(g.iter()).map(|(t, x)| t * x).sum::<Complex64>().norm();
        let random = g.iter().map(|x| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)) * x).sum::<Complex64>().norm();
        if (got - l1).abs() > TOL * l1 || got + TOL < random {
            return check("alignment_optimality", false, format!("|θᵀg| = {got}, ‖g‖₁ = {l1}, random = {random}"));
        }
    }
    check("alignment_optimality", true, "θᵀg = ‖g‖₁ and beats random phases on 200 draws")
}

fn quantizer_wrap(q: Quantizer) -> Check {
    // π/2 and 3π/2 are exact midpoints for b = 1; both ties resolve to index 0.
    let ties = [(1, FRAC_PI_2, 0), (1, 3.0 * FRAC_PI_2, 0)];
    let near_wrap = (1..=4).flat_map(|b| {
        let step = TAU / (1u32 << b) as f64;
        [(b, TAU - 1e-9, 0), (b, TAU - 0.3 * step, 0), (b, 0.0, 0)]
    });
    for (b, theta, want) in ties.into_iter().chain(near_wrap) {
        {
            let got = q(theta, b);
            if got != want {
                return check("quantizer_wrap", false, format!("b={b}: θ={theta:.6} → {got}, want {want}"));
            }
        }
    }
    check("quantizer_wrap", true, "near-2π phases (b = 1..4) and b = 1 midpoint ties map to index 0")
}

fn quantizer_nearest(q: Quantizer, rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..4000 {
        let b = rng.random_range(1..=6);
        let theta = rng.random_range(0.0..TAU);
        if q(theta, b) != nearest_by_scan(theta, b) {
            return check("quantizer_nearest", false, format!("b={b}, θ={theta}: {} vs {}", q(theta, b), nearest_by_scan(theta, b)));
        }
    }
    check("quantizer_nearest", true, "matches exhaustive circular scan on 4000 angles")
}

fn quantization_error_bound(q: Quantizer, rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..4000 {
        let b = rng.random_range(1..=6);
        let theta = rng.random_range(0.0..TAU);
        let err = wrap_to_pi(index_to_angle(q(theta, b), b) - theta).abs();
        if err > PI / (1u32 << b) as f64 + TOL {
            return check("quantization_error_bound", false, format!("b={b}, θ={theta}: |Δθ| = {err}"));
        }
    }
    check("quantization_error_bound", true, "|Δθ| ≤ π/2^b on 4000 angles")
}

fn single_irs_sandwich(q: Quantizer, rng: &mut ChaCha8Rng) -> Check {
    for b in 1..=3u32 {
        let delta = PI / (1u32 << b) as f64;
        let floor = delta.cos().powi(2);
        // Half the elements just past a decision midpoint, half just below 2π.
        let boundary: Vec<f64> = (0..8).map(|m| if m % 2 == 0 { delta + 1e-3 } else { TAU - 1e-3 }).collect();
        let mut instances = vec![instance_with_phases(&boundary, 8)];
        instances.extend((0..300).map(|_| random_instance(1, 8, 8, rng)));
        for r in &instances {
            let cont = power_with(r, None, 1.0, q);
            let disc = power_with(r, Some(b), 1.0, q);
            if disc < floor * cont * (1.0 - TOL) {
                return check(
                    "single_irs_sandwich",
                    false,
                    format!("b={b}: γ_b/γ_∞ = {:.4} < cos²(π/2^b) = {floor:.4}", disc / cont),
                );
            }
        }
    }
    check("single_irs_sandwich", true, "γ_b ≥ cos²(π/2^b) γ_∞ for K=1, M=8, b=1..3")
}

fn mrt_optimality(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..200 {
        let c = DVector::from_iterator(8, (0..8).map(|_| complex_normal(1.0, rng)));
        let w = mrt_for_channel(&c, 2.0).expect("nonzero channel");
        let best = c.dot(&w).norm_sqr();
        let v = DVector::from_iterator(8, (0..8).map(|_| complex_normal(1.0, rng)));
        let v = &v * Complex64::new(2f64.sqrt() / v.norm(), 0.0);
        if (w.norm_squared() - 2.0).abs() > TOL || c.dot(&v).norm_sqr() > best * (1.0 + TOL) {
            return check("mrt_optimality", false, "random precoder beat MRT or power budget violated");
        }
    }
    check("mrt_optimality", true, "MRT meets ‖w‖² = p and beats 200 random precoders")
}

fn oracle_ordering(q: Quantizer, rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..40 {
        let (k, m, b) = (rng.random_range(1..=3usize), rng.random_range(1..=3usize), rng.random_range(1..=2u32));
        let r = random_instance(k, m, 8, rng);
        let cfg = SystemConfig {
            n_bs: 8,
            k_irs: k,
            m_y: m,
            m_z: 1,
            resolution: PhaseResolution::Bits(b),
            ..Default::default()
        };
        let p = cfg.p_watts();
        let proposed = power_with(&r, Some(b), p, q);
        let best = brute_force_discrete(&r, &cfg).expect("small instance").gamma;
        let bound = upper_bound_power(&r, &cfg).expect("valid instance");
        if proposed > best * (1.0 + TOL) || best > bound * (1.0 + TOL) {
            return check("oracle_ordering", false, format!("proposed {proposed}, brute force {best}, bound {bound}"));
        }
    }
    check("oracle_ordering", true, "proposed ≤ brute force ≤ upper bound on 40 small instances")
}

fn library_matches_reference(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..100 {
        let r = random_instance(3, 6, 8, rng);
        for b in 1..=3 {
            let lib = solve_joint_with(&r, PhaseResolution::Bits(b), 1.0).expect("valid instance").gamma;
            let reference = power_with(&r, Some(b), 1.0, nearest_by_scan);
            if (lib - reference).abs() > 1e-9 * reference.max(1.0) {
                return check("solver_matches_reference", false, format!("b={b}: {lib} vs {reference}"));
            }
        }
    }
    check("solver_matches_reference", true, "library solver equals scan-quantized reference on 100 draws")
}

fn eta_closed_form() -> Check {
    let table = [(1, 0.4053), (2, 0.8106), (3, 0.9496)];
    for (b, want) in table {
        if (eta(b) - want).abs() > 5e-5 {
            return check("eta_closed_form", false, format!("η({b}) = {}", eta(b)));
        }
    }
    check("eta_closed_form", true, "η(1), η(2), η(3) = 0.4053, 0.8106, 0.9496")
}

fn eta_monotone() -> Check {
    let ok = (1..16).all(|b| eta(b) < eta(b + 1)) && (1.0 - eta(16)) < 1e-8;
    check("eta_monotone", ok, "η(b) increases in b and tends to 1")
}

fn array_unit_norm(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..200 {
        let u = ula_response(rng.random_range(1..64), rng.random_range(-PI..PI));
        let v = ura_response(rng.random_range(1..16), rng.random_range(1..16), rng.random_range(-PI..PI), rng.random_range(-PI..PI));
        if (u.norm() - 1.0).abs() > 1e-12 || (v.norm() - 1.0).abs() > 1e-12 {
            return check("array_unit_norm", false, "response vector norm differs from 1");
        }
    }
    check("array_unit_norm", true, "ULA/URA responses have unit norm")
}

fn reproducibility() -> Check {
    let mut spec = ExperimentSpec::new(ExperimentKind::SnrVsDistance, SystemConfig::default(), ScenarioGeometry::default());
    spec.trials = 4;
    spec.sweep = vec![30.0, 60.0];
    let ok = matches!((run(&spec), run(&spec)), (Ok(a), Ok(b)) if a == b);
    check("reproducibility", ok, "same seed gives identical results")
}

/// Runs every check with `quantize` as the rounding rule.
pub fn run_checks(quantize: Quantizer) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    vec![
        alignment_optimality(&mut rng),
        quantizer_wrap(quantize),
        quantizer_nearest(quantize, &mut rng),
        quantization_error_bound(quantize, &mut rng),
        single_irs_sandwich(quantize, &mut rng),
        mrt_optimality(&mut rng),
        oracle_ordering(quantize, &mut rng),
        library_matches_reference(&mut rng),
        eta_closed_form(),
        eta_monotone(),
        array_unit_norm(&mut rng),
        reproducibility(),
    ]
}

/// Checks against the library quantizer.
pub fn selfcheck() -> Vec<Check> {
    run_checks(quantize_angle)
}
