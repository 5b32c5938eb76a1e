use std::collections::HashMap;

use rayon::prelude::*;

use super::{aggregate, mean_std, stream, derive_seed, ExperimentKind, ExperimentResult, ExperimentSpec, ResultRow, TrialRecord, Variant};
use crate::analysis::eta;
use crate::beamformer::{direct_link_power, solve_joint_with, upper_bound_power};
use crate::channel::{ChannelGenerator, ChannelRealization};
use crate::config::{to_db, PhaseResolution, SystemConfig};
use crate::error::{invalid, Error, Result};

// Stream tags keep the independent random sources of a trial apart.
const STREAM_IRS: u64 = 1;
const STREAM_DIRECT: u64 = 2;
const STREAM_SHADOWING: u64 = 3;
const STREAM_BLOCKAGE: u64 = 4;
const STREAM_OUTAGE: u64 = 5;

/// Runs the experiment described by `spec`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    match spec.kind {
        ExperimentKind::SnrVsDistance => run_snr_vs_distance(spec),
        ExperimentKind::SnrVsElements => run_snr_vs_elements(spec),
        ExperimentKind::EtaValidation => run_eta_validation(spec),
        ExperimentKind::OutageVsBlockage => run_outage(spec),
    }
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(invalid(
            "kind",
            format!("expected {}, got {}", kind.name(), spec.kind.name()),
        ));
    }
    spec.validate()
}

fn generator(spec: &ExperimentSpec, cfg: SystemConfig, geom: crate::config::ScenarioGeometry) -> Result<ChannelGenerator> {
    ChannelGenerator::new(cfg, geom, spec.channel, derive_seed(spec.seed, &[STREAM_SHADOWING]))
}

/// Generators for each sweep point of an SNR experiment.
fn snr_generators(spec: &ExperimentSpec) -> Result<Vec<ChannelGenerator>> {
    spec.sweep
        .iter()
        .map(|&x| match spec.kind {
            ExperimentKind::SnrVsDistance => generator(spec, spec.cfg, spec.geom.with_user_at(x)),
            ExperimentKind::SnrVsElements => {
                let cfg = SystemConfig {
                    m_z: x as usize / spec.cfg.m_y,
                    ..spec.cfg
                };
                generator(spec, cfg, spec.geom)
            }
            _ => Err(invalid("kind", "not an SNR experiment")),
        })
        .collect()
}

fn variant_power(
    variant: Variant,
    realization: &ChannelRealization,
    generator: &ChannelGenerator,
    spec: &ExperimentSpec,
    trial: usize,
) -> Result<f64> {
    let cfg = generator.config();
    let p = cfg.p_watts();
    Ok(match variant {
        Variant::Proposed(b) => solve_joint_with(realization, PhaseResolution::Bits(b), p)?.gamma,
        Variant::Continuous => solve_joint_with(realization, PhaseResolution::Continuous, p)?.gamma,
        Variant::UpperBound => upper_bound_power(realization, cfg)?,
        Variant::NoIrs => {
            let h_d = generator.direct(&mut stream(spec.seed, &[STREAM_DIRECT, trial as u64]))?;
            direct_link_power(&h_d, p)?
        }
    })
}

fn snr_trial(spec: &ExperimentSpec, generators: &[ChannelGenerator], trial: usize) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::with_capacity(spec.sweep.len() * spec.variants.len());
    for (&x, generator) in spec.sweep.iter().zip(generators) {
        // Same stream at every sweep point: only the geometry/array changes.
        let realization = generator.realization(&mut stream(spec.seed, &[STREAM_IRS, trial as u64]))?;
        let noise = generator.config().noise_watts();
        for &variant in &spec.variants {
            let gamma = variant_power(variant, &realization, generator, spec, trial)?;
            out.push(TrialRecord {
                x,
                variant: variant.label(),
                value: to_db(gamma / noise),
            });
        }
    }
    Ok(out)
}

fn eta_trial(spec: &ExperimentSpec, generator: &ChannelGenerator, trial: usize) -> Result<(f64, Vec<f64>)> {
    let realization = generator.rayleigh_realization(spec.rayleigh_varrho, &mut stream(spec.seed, &[STREAM_IRS, trial as u64]))?;
    let p = generator.config().p_watts();
    let reference = solve_joint_with(&realization, PhaseResolution::Continuous, p)?.gamma;
    let quantized = spec
        .sweep
        .iter()
        .map(|&b| Ok(solve_joint_with(&realization, PhaseResolution::Bits(b as u32), p)?.gamma))
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, quantized))
}

/// Per-trial records of one trial of an SNR or η experiment.
///
/// SNR experiments record the SNR in dB per `(x, variant)`; η validation
/// records the per-trial power ratio `γ(b)/γ(∞)` under variant `ratio`.
/// The records depend only on `(spec, trial)`.
pub fn trial_records(spec: &ExperimentSpec, trial: usize) -> Result<Vec<TrialRecord>> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::SnrVsDistance | ExperimentKind::SnrVsElements => snr_trial(spec, &snr_generators(spec)?, trial),
        ExperimentKind::EtaValidation => {
            let (reference, quantized) = eta_trial(spec, &generator(spec, spec.cfg, spec.geom)?, trial)?;
            Ok(spec
                .sweep
                .iter()
                .zip(quantized)
                .map(|(&x, g)| TrialRecord {
                    x,
                    variant: "ratio".into(),
                    value: g / reference,
                })
                .collect())
        }
        ExperimentKind::OutageVsBlockage => Err(invalid("kind", "outage trials are blockage patterns; use run_outage")),
    }
}

fn run_snr(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let generators = snr_generators(spec)?;
    let per_trial = (0..spec.trials)
        .into_par_iter()
        .map(|t| snr_trial(spec, &generators, t))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    Ok(ExperimentResult {
        kind: spec.kind,
        rows: aggregate(&records)?,
    })
}

/// Mean receive SNR (dB) versus BS-user distance.
pub fn run_snr_vs_distance(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::SnrVsDistance)?;
    run_snr(spec)
}

/// Mean receive SNR (dB) versus elements per IRS; `M_z = M / M_y`.
pub fn run_snr_vs_elements(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::SnrVsElements)?;
    run_snr(spec)
}

/// Empirical `γ(b)/γ(∞)` with Rayleigh IRS-user channels.
///
/// Numerator and denominator are averaged over the same draws. Rows carry
/// the ratio of means under `empirical` (std: sample std of the per-trial
/// ratios) and the large-M prediction under `closed_form`.
pub fn run_eta_validation(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::EtaValidation)?;
    let generator = generator(spec, spec.cfg, spec.geom)?;
    let per_trial = (0..spec.trials)
        .into_par_iter()
        .map(|t| eta_trial(spec, &generator, t))
        .collect::<Result<Vec<_>>>()?;

    let reference_sum: f64 = per_trial.iter().map(|(r, _)| r).sum();
    let mut rows = Vec::with_capacity(2 * spec.sweep.len());
    for (i, &b) in spec.sweep.iter().enumerate() {
        let sum: f64 = per_trial.iter().map(|(_, q)| q[i]).sum();
        let ratios: Vec<f64> = per_trial.iter().map(|(r, q)| q[i] / r).collect();
        let (_, std) = mean_std(&ratios);
        rows.push(ResultRow {
            x: b,
            variant: "empirical".into(),
            value: sum / reference_sum,
            std,
            trials: spec.trials,
        });
        rows.push(ResultRow {
            x: b,
            variant: "closed_form".into(),
            value: eta(b as u32),
            std: 0.0,
            trials: 0,
        });
    }
    Ok(ExperimentResult {
        kind: spec.kind,
        rows,
    })
}

/// Uniform blockage draw attached to the IRS at abscissa `x` in pattern `pattern`.
///
/// Keying by position makes an IRS location see the same obstruction in
/// every deployment that includes it, and nesting `u < P` makes the blocked
/// set grow monotonically with `P`.
fn blockage_draw(seed: u64, pattern: usize, x: f64) -> f64 {
    use rand::Rng;
    stream(seed, &[STREAM_BLOCKAGE, pattern as u64, x.to_bits()]).random::<f64>()
}

/// Per-pattern outage indicators: `[k_index][p_index]`.
fn outage_pattern(spec: &ExperimentSpec, generators: &[ChannelGenerator], pattern: usize) -> Result<Vec<Vec<f64>>> {
    let threshold = spec.outage.tau_db;
    generators
        .iter()
        .map(|generator| {
            let cfg = generator.config();
            let p = cfg.p_watts();
            let noise = cfg.noise_watts();
            let draws: Vec<f64> = generator
                .geometry()
                .irs_abscissae(cfg.k_irs)
                .iter()
                .map(|&x| blockage_draw(spec.seed, pattern, x))
                .collect();
            let active_sets: Vec<Vec<usize>> = spec
                .sweep
                .iter()
                .map(|&prob| (0..cfg.k_irs).filter(|&k| draws[k] >= prob).collect())
                .collect();

            let mut rate_sums = vec![0.0; spec.sweep.len()];
            for i in 0..spec.outage.inner_samples {
                let realization = generator.realization(&mut stream(
                    spec.seed,
                    &[STREAM_OUTAGE, pattern as u64, cfg.k_irs as u64, i as u64],
                ))?;
                let mut cache: HashMap<&[usize], f64> = HashMap::new();
                for (sum, active) in rate_sums.iter_mut().zip(&active_sets) {
                    let gamma = match cache.get(active.as_slice()) {
                        Some(&g) => g,
                        None => {
                            let g = if active.is_empty() {
                                0.0
                            } else {
                                match solve_joint_with(&realization.subset(active), cfg.resolution, p) {
                                    Ok(sol) => sol.gamma,
                                    Err(Error::DegenerateChannel) => 0.0,
                                    Err(e) => return Err(e),
                                }
                            };
                            cache.insert(active.as_slice(), g);
                            g
                        }
                    };
                    *sum += to_db(1.0 + gamma / noise);
                }
            }
            Ok(rate_sums
                .into_iter()
                .map(|s| {
                    let mean_rate = s / spec.outage.inner_samples as f64;
                    if mean_rate < threshold {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect())
        })
        .collect()
}

/// Outage probability versus blockage probability for each IRS count.
///
/// A blockage pattern removes each IRS-user link independently with
/// probability `P`; the pattern is in outage when the mean of
/// `10 log10(1 + γ/σ²)` over `inner_samples` channel draws is below `τ`.
/// `trials` is the number of blockage patterns. Variants are labeled `k<K>`.
pub fn run_outage(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::OutageVsBlockage)?;
    let generators = spec
        .outage
        .irs_counts
        .iter()
        .map(|&k| generator(spec, SystemConfig { k_irs: k, ..spec.cfg }, spec.geom))
        .collect::<Result<Vec<_>>>()?;
    let per_pattern = (0..spec.trials)
        .into_par_iter()
        .map(|t| outage_pattern(spec, &generators, t))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::with_capacity(spec.trials * spec.sweep.len() * generators.len());
    for indicators in &per_pattern {
        for (pi, &x) in spec.sweep.iter().enumerate() {
            for (ki, &k) in spec.outage.irs_counts.iter().enumerate() {
                records.push(TrialRecord {
                    x,
                    variant: format!("k{k}"),
                    value: indicators[ki][pi],
                });
            }
        }
    }
    Ok(ExperimentResult {
        kind: spec.kind,
        rows: aggregate(&records)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioGeometry;

    fn small_spec(kind: ExperimentKind) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(kind, SystemConfig::default(), ScenarioGeometry::default());
        spec.trials = 20;
        spec.seed = 42;
        spec
    }

    #[test]
    fn rows_cover_sweep_and_variants() {
        let mut spec = small_spec(ExperimentKind::SnrVsElements);
        spec.sweep = vec![50.0, 100.0, 200.0];
        let res = run(&spec).unwrap();
        assert_eq!(res.rows.len(), 9);
        assert!(res.rows.iter().all(|r| r.trials == 20 && r.value.is_finite() && r.std.is_finite()));
        assert_eq!(res.rows[0].x, 50.0);
        assert_eq!(res.rows[0].variant, "b1");
    }

    #[test]
    fn reruns_are_identical() {
        let mut spec = small_spec(ExperimentKind::SnrVsDistance);
        spec.sweep = vec![20.0, 40.0];
        assert_eq!(run(&spec).unwrap(), run(&spec).unwrap());
    }

    #[test]
    fn worker_split_preserves_trial_values() {
        let mut spec = small_spec(ExperimentKind::SnrVsDistance);
        spec.sweep = vec![30.0, 60.0];
        let serial: Vec<TrialRecord> = (0..spec.trials).flat_map(|t| trial_records(&spec, t).unwrap()).collect();
        // Three workers over interleaved slices, gathered in worker order.
        let mut split = Vec::new();
        for w in 0..3 {
            for t in (w..spec.trials).step_by(3) {
                split.extend(trial_records(&spec, t).unwrap());
            }
        }
        let key = |r: &TrialRecord| (r.x.to_bits(), r.variant.clone(), r.value.to_bits());
        let mut a: Vec<_> = serial.iter().map(key).collect();
        let mut b: Vec<_> = split.iter().map(key).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn upper_bound_dominates_every_trial() {
        for k in [3, 5] {
            let mut spec = small_spec(ExperimentKind::SnrVsDistance);
            spec.cfg.k_irs = k;
            spec.sweep = vec![20.0, 37.0, 61.0];
            for t in 0..spec.trials {
                let recs = trial_records(&spec, t).unwrap();
                for &x in &spec.sweep {
                    let at = |v: &str| recs.iter().find(|r| r.x == x && r.variant == v).unwrap().value;
                    let ub = at("upper_bound");
                    assert!(ub >= at("b2") - 1e-9 && ub >= at("continuous") - 1e-9);
                }
            }
        }
    }

    #[test]
    fn baseline_ignores_irs_count() {
        let mut spec = small_spec(ExperimentKind::SnrVsDistance);
        spec.sweep = vec![25.0, 50.0];
        spec.variants = vec![Variant::NoIrs];
        let a = run(&spec).unwrap();
        spec.cfg.k_irs = 5;
        let b = run(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_kind_rejected() {
        let spec = small_spec(ExperimentKind::SnrVsDistance);
        assert!(run_outage(&spec).is_err());
        assert!(run_eta_validation(&spec).is_err());
    }

    #[test]
    fn outage_extremes() {
        let mut spec = small_spec(ExperimentKind::OutageVsBlockage);
        spec.trials = 10;
        spec.outage.inner_samples = 20;
        spec.sweep = vec![0.0, 1.0];
        spec.geom.d_u = 61.0;
        let res = run(&spec).unwrap();
        for k in [3, 5] {
            assert_eq!(res.row(0.0, &format!("k{k}")).unwrap().value, 0.0);
        }
        for k in [1, 3, 5] {
            assert_eq!(res.row(1.0, &format!("k{k}")).unwrap().value, 1.0);
        }
    }
}
