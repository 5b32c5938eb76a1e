//! Monte Carlo experiment engine.
//!
//! Every trial draws from its own ChaCha stream seeded from `(seed, stream
//! tag, trial index, …)`, so results do not depend on how trials are spread
//! over worker threads. Within a trial all solver variants see the same
//! channel draw, and the draw does not depend on the swept quantity, so each
//! curve is evaluated on common random numbers.

mod runners;

pub use runners::{run, run_eta_validation, run_outage, run_snr_vs_distance, run_snr_vs_elements, trial_records};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelOptions;
use crate::config::{PhaseResolution, ScenarioGeometry, SystemConfig};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Mean SNR as the user moves away from the BS (x = `d_u` in meters).
    SnrVsDistance,
    /// Mean SNR versus IRS size (x = `M`, with `M_y` fixed).
    SnrVsElements,
    /// Empirical `γ(b)/γ(∞)` under Rayleigh IRS-user channels (x = `b`).
    EtaValidation,
    /// Outage probability versus per-link blockage probability (x = `P`).
    OutageVsBlockage,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SnrVsDistance => "snr_vs_distance",
            ExperimentKind::SnrVsElements => "snr_vs_elements",
            ExperimentKind::EtaValidation => "eta_validation",
            ExperimentKind::OutageVsBlockage => "outage_vs_blockage",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ExperimentKind::SnrVsDistance,
            ExperimentKind::SnrVsElements,
            ExperimentKind::EtaValidation,
            ExperimentKind::OutageVsBlockage,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Whether `value` is an SNR in dB (otherwise a linear ratio/probability).
    pub fn reports_db(self) -> bool {
        matches!(self, ExperimentKind::SnrVsDistance | ExperimentKind::SnrVsElements)
    }
}

/// Solver evaluated on each channel draw of an SNR experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Closed-form solution with `b`-bit shifters.
    Proposed(u32),
    /// Closed-form solution with unquantized phases.
    Continuous,
    /// Certified bound on the continuous-phase optimum.
    UpperBound,
    /// BS-user link only, with MRT.
    NoIrs,
}

impl Variant {
    pub fn label(self) -> String {
        match self {
            Variant::Proposed(b) => format!("b{b}"),
            Variant::Continuous => "continuous".into(),
            Variant::UpperBound => "upper_bound".into(),
            Variant::NoIrs => "no_irs".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "continuous" => Some(Variant::Continuous),
            "upper_bound" => Some(Variant::UpperBound),
            "no_irs" => Some(Variant::NoIrs),
            _ => {
                let b: u32 = s.strip_prefix('b')?.parse().ok()?;
                PhaseResolution::Bits(b).validate().ok()?;
                Some(Variant::Proposed(b))
            }
        }
    }
}

impl Serialize for Variant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

impl<'de> Deserialize<'de> for Variant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Variant::parse(&s).ok_or_else(|| serde::de::Error::custom(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageSettings {
    /// Threshold on `E[10 log10(1 + γ/σ²)]` (dB).
    pub tau_db: f64,
    /// Channel draws per blockage pattern for the inner expectation.
    pub inner_samples: usize,
    /// IRS counts compared in one run; each becomes a `k<K>` variant.
    pub irs_counts: Vec<usize>,
}

impl Default for OutageSettings {
    fn default() -> Self {
        OutageSettings {
            tau_db: 1.5,
            inner_samples: 200,
            irs_counts: vec![1, 3, 5],
        }
    }
}

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub sweep: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub cfg: SystemConfig,
    pub geom: ScenarioGeometry,
    pub channel: ChannelOptions,
    pub variants: Vec<Variant>,
    pub outage: OutageSettings,
    /// Standard deviation of the Rayleigh IRS-user entries in `EtaValidation`.
    pub rayleigh_varrho: f64,
}

pub const DEFAULT_TRIALS: usize = 1000;

impl ExperimentSpec {
    /// Spec with the default sweep and variants for `kind`.
    pub fn new(kind: ExperimentKind, cfg: SystemConfig, geom: ScenarioGeometry) -> Self {
        ExperimentSpec {
            kind,
            sweep: default_sweep(kind, &cfg),
            trials: DEFAULT_TRIALS,
            seed: 0,
            cfg,
            geom,
            channel: ChannelOptions::default(),
            variants: default_variants(kind, &cfg),
            outage: OutageSettings::default(),
            rayleigh_varrho: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        self.geom.validate()?;
        if self.trials == 0 {
            return Err(invalid("trials", "must be ≥ 1"));
        }
        if self.channel.paths == 0 {
            return Err(invalid("paths", "must be ≥ 1"));
        }
        if self.sweep.is_empty() {
            return Err(invalid("sweep", "must not be empty"));
        }
        if self.sweep.iter().any(|x| !x.is_finite()) || self.sweep.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("sweep", "must be finite and strictly increasing"));
        }
        match self.kind {
            ExperimentKind::SnrVsDistance | ExperimentKind::SnrVsElements if self.variants.is_empty() => {
                return Err(invalid("variants", "must not be empty"));
            }
            _ => {}
        }
        match self.kind {
            ExperimentKind::SnrVsDistance => {
                if self.sweep.iter().any(|&d| d <= 0.0) {
                    return Err(invalid("sweep", "user distances must be > 0"));
                }
            }
            ExperimentKind::SnrVsElements => {
                for &m in &self.sweep {
                    let ok = m >= 1.0 && m.fract() == 0.0 && (m as usize).is_multiple_of(self.cfg.m_y);
                    if !ok {
                        return Err(invalid(
                            "sweep",
                            format!("element count {m} is not a positive multiple of m_y = {}", self.cfg.m_y),
                        ));
                    }
                }
            }
            ExperimentKind::EtaValidation => {
                for &b in &self.sweep {
                    if b.fract() != 0.0 || b < 1.0 || b > PhaseResolution::MAX_BITS as f64 {
                        return Err(invalid("sweep", format!("bit count {b} must be an integer in 1..=16")));
                    }
                }
                if !(self.rayleigh_varrho > 0.0 && self.rayleigh_varrho.is_finite()) {
                    return Err(invalid("varrho", "must be > 0"));
                }
            }
            ExperimentKind::OutageVsBlockage => {
                if self.sweep.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                    return Err(invalid("sweep", "blockage probabilities must lie in [0, 1]"));
                }
                if self.outage.inner_samples == 0 {
                    return Err(invalid("inner_samples", "must be ≥ 1"));
                }
                if self.outage.irs_counts.is_empty() || self.outage.irs_counts.contains(&0) {
                    return Err(invalid("irs_counts", "need at least one IRS count, each ≥ 1"));
                }
                if !self.outage.tau_db.is_finite() {
                    return Err(invalid("tau_db", "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Default sweep for each experiment kind.
pub fn default_sweep(kind: ExperimentKind, cfg: &SystemConfig) -> Vec<f64> {
    match kind {
        ExperimentKind::SnrVsDistance => (0..=30).map(|i| 15.0 + 2.0 * i as f64).collect(),
        ExperimentKind::SnrVsElements => (1..=20).map(|mz| (cfg.m_y * mz) as f64).collect(),
        ExperimentKind::EtaValidation => vec![1.0, 2.0, 3.0],
        ExperimentKind::OutageVsBlockage => (0..=10).map(|i| i as f64 / 10.0).collect(),
    }
}

/// Default solver variants for each experiment kind.
pub fn default_variants(kind: ExperimentKind, cfg: &SystemConfig) -> Vec<Variant> {
    let proposed = match cfg.resolution {
        PhaseResolution::Bits(b) => Variant::Proposed(b),
        PhaseResolution::Continuous => Variant::Continuous,
    };
    match kind {
        ExperimentKind::SnrVsDistance => {
            let mut v = vec![proposed, Variant::Continuous, Variant::UpperBound, Variant::NoIrs];
            v.dedup();
            v
        }
        ExperimentKind::SnrVsElements => vec![Variant::Proposed(1), Variant::Proposed(2), Variant::Continuous],
        ExperimentKind::EtaValidation | ExperimentKind::OutageVsBlockage => Vec::new(),
    }
}

/// One summary row: `(x, variant, value, std, trials)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub x: f64,
    pub variant: String,
    pub value: f64,
    pub std: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn row(&self, x: f64, variant: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.x == x && r.variant == variant)
    }

    /// `value` column of one variant, in sweep order.
    pub fn series(&self, variant: &str) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.variant == variant)
            .map(|r| (r.x, r.value))
            .collect()
    }
}

/// Per-trial observation before aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub x: f64,
    pub variant: String,
    pub value: f64,
}

/// Groups records by `(x, variant)` in order of first appearance and reports
/// the mean and the sample standard deviation of each group.
pub fn aggregate(records: &[TrialRecord]) -> Result<Vec<ResultRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: Vec<(f64, &str, Vec<f64>)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for r in records {
        let key = (r.x.to_bits(), r.variant.as_str());
        let slot = *index.entry(key).or_insert_with(|| {
            groups.push((r.x, r.variant.as_str(), Vec::new()));
            groups.len() - 1
        });
        groups[slot].2.push(r.value);
    }
    Ok(groups
        .into_iter()
        .map(|(x, variant, values)| {
            let (mean, std) = mean_std(&values);
            ResultRow {
                x,
                variant: variant.to_string(),
                value: mean,
                std,
                trials: values.len(),
            }
        })
        .collect())
}

/// Mean and sample (n − 1) standard deviation; a single value has std 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a path of stream identifiers.
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn stream(base: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: f64, v: &str, value: f64) -> TrialRecord {
        TrialRecord {
            x,
            variant: v.into(),
            value,
        }
    }

    #[test]
    fn aggregate_examples() {
        let rows = aggregate(&[rec(1.0, "a", 5.0)]).unwrap();
        assert_eq!(rows[0].std, 0.0);
        assert_eq!(rows[0].trials, 1);

        let rows = aggregate(&[rec(1.0, "a", 3.5), rec(1.0, "a", 3.5)]).unwrap();
        assert_eq!((rows[0].value, rows[0].std), (3.5, 0.0));

        let rows = aggregate(&[rec(1.0, "a", 1.0), rec(2.0, "b", 9.0), rec(1.0, "a", 2.0), rec(1.0, "a", 3.0)]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].x, rows[0].variant.as_str()), (1.0, "a"));
        assert_eq!((rows[0].value, rows[0].std, rows[0].trials), (2.0, 1.0, 3));

        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn variant_labels_round_trip() {
        for v in [Variant::Proposed(1), Variant::Proposed(3), Variant::Continuous, Variant::UpperBound, Variant::NoIrs] {
            assert_eq!(Variant::parse(&v.label()), Some(v));
        }
        assert_eq!(Variant::parse("b0"), None);
        assert_eq!(Variant::parse("bogus"), None);
    }

    #[test]
    fn seeds_separate_streams() {
        assert_ne!(derive_seed(1, &[0, 1]), derive_seed(1, &[1, 0]));
        assert_ne!(derive_seed(1, &[0]), derive_seed(2, &[0]));
        assert_eq!(derive_seed(7, &[3, 4]), derive_seed(7, &[3, 4]));
    }

    #[test]
    fn spec_validation() {
        let cfg = SystemConfig::default();
        let geom = ScenarioGeometry::default();
        let mut spec = ExperimentSpec::new(ExperimentKind::SnrVsElements, cfg, geom);
        spec.validate().unwrap();
        spec.sweep = vec![50.0, 55.0];
        assert!(spec.validate().is_err());
        spec.sweep = vec![100.0, 50.0];
        assert!(spec.validate().is_err());
        spec.sweep = vec![];
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::new(ExperimentKind::OutageVsBlockage, cfg, geom);
        spec.validate().unwrap();
        spec.sweep = vec![0.0, 1.5];
        assert!(spec.validate().is_err());

        let mut spec = ExperimentSpec::new(ExperimentKind::SnrVsDistance, cfg, geom);
        spec.trials = 0;
        assert!(spec.validate().is_err());
    }
}
