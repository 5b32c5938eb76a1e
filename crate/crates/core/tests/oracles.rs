use std::f64::consts::FRAC_PI_2;

use irs_core::analysis::{theoretical_gamma, ScalingLawParams};
use irs_core::beamformer::{brute_force_discrete, solve_joint, solve_joint_with, upper_bound_power};
use irs_core::channel::{complex_normal, gen_rayleigh_irs_user, ula_response, ura_response, ChannelRealization, RankOneChannel};
use irs_core::{PhaseResolution, SystemConfig};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

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

fn small_cfg(k: usize, m: usize, resolution: PhaseResolution) -> SystemConfig {
    SystemConfig {
        n_bs: 16,
        k_irs: k,
        m_y: m,
        m_z: 1,
        resolution,
        ..Default::default()
    }
}

#[test]
fn closed_form_is_sandwiched_by_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut ratios = Vec::new();
    while ratios.len() < 150 {
        let (k, m, b) = (rng.random_range(1..=3), rng.random_range(1..=5), rng.random_range(1..=2u32));
        if (k * m) as u32 * b > 14 {
            continue;
        }
        let r = random_instance(k, m, 16, &mut rng);
        let cfg = small_cfg(k, m, PhaseResolution::Bits(b));
        let proposed = solve_joint(&r, &cfg).unwrap().gamma;
        let best = brute_force_discrete(&r, &cfg).unwrap().gamma;
        let bound = upper_bound_power(&r, &cfg).unwrap();
        assert!(proposed <= best * (1.0 + 1e-9), "{proposed} > {best}");
        assert!(best <= bound * (1.0 + 1e-9), "{best} > {bound}");
        ratios.push(proposed / best);
    }
    assert!(ratios.iter().all(|r| *r > 0.0));
}

#[test]
fn continuous_solution_below_bound_for_larger_arrays() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 1..=5 {
        for _ in 0..20 {
            let r = random_instance(k, 40, 32, &mut rng);
            let cfg = small_cfg(k, 40, PhaseResolution::Continuous);
            let cont = solve_joint(&r, &cfg).unwrap().gamma;
            let bound = upper_bound_power(&r, &cfg).unwrap();
            assert!(cont <= bound * (1.0 + 1e-9));
        }
    }
}

#[test]
fn scaling_law_matches_monte_carlo() {
    let (n, m, trials) = (8, 256, 4000);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let realizations: Vec<ChannelRealization> = (0..trials)
        .map(|_| {
            let rho = complex_normal(1.0, &mut rng);
            let bs = RankOneChannel {
                lambda: rho * ((n * m) as f64).sqrt(),
                a: ura_response(16, 16, rng.random_range(-FRAC_PI_2..FRAC_PI_2), 0.0),
                b: ula_response(n, 0.3).conjugate(),
            };
            ChannelRealization {
                bs_irs: vec![bs],
                irs_user: vec![gen_rayleigh_irs_user(m, 1.0, &mut rng).unwrap()],
                direct: None,
            }
        })
        .collect();
    for resolution in [PhaseResolution::Bits(1), PhaseResolution::Bits(2), PhaseResolution::Continuous] {
        let mean = realizations
            .iter()
            .map(|r| solve_joint_with(r, resolution, 1.0).unwrap().gamma)
            .sum::<f64>()
            / trials as f64;
        let theory = theoretical_gamma(&ScalingLawParams {
            n,
            m,
            varrho: vec![1.0],
            rho2: vec![1.0],
            resolution,
        })
        .unwrap();
        // |ρ|² is exponential, so the relative standard error is about 1/√trials.
        assert!((mean / theory - 1.0).abs() < 0.06, "{resolution:?}: {mean} vs {theory}");
    }
}
