//! TOML run configuration.
//!
//! Every key is optional; missing keys take the default system (N = 32,
//! 10×5 IRSs, 30 dBm, −85 dBm noise) and geometry. Unknown keys are errors.
//!
//! ```toml
//! experiment = "snr_vs_elements"
//! seed = 7
//! trials = 500
//! sweep = [50, 100, 200]
//! variants = ["b1", "b2", "continuous"]
//!
//! [system]
//! k = 3
//! b = 2            # or "continuous"
//!
//! [geometry]
//! d_u = 41.0
//!
//! [output]
//! dir = "out"
//! ```

use std::path::PathBuf;

use irs_core::channel::ChannelOptions;
use irs_core::sim::{default_sweep, default_variants, ExperimentKind, ExperimentSpec, OutageSettings, Variant};
use irs_core::{PhaseResolution, ScenarioGeometry, SystemConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("config parse error: {0}")]
    Structure(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        reason: reason.into(),
    }
}

/// `b` accepts an integer or the string `"continuous"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitsSetting {
    Bits(i64),
    Name(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub n: Option<i64>,
    pub k: Option<i64>,
    pub m_y: Option<i64>,
    pub m_z: Option<i64>,
    pub p_dbm: Option<f64>,
    pub noise_dbm: Option<f64>,
    pub b: Option<BitsSetting>,
    pub gain_tx_dbi: Option<f64>,
    pub gain_rx_dbi: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub d_b: Option<f64>,
    pub d_v: Option<f64>,
    pub d_span: Option<f64>,
    pub d_u: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub paths: Option<i64>,
    pub freeze_shadowing: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutageSection {
    pub tau_db: Option<f64>,
    pub inner_samples: Option<i64>,
    pub irs_counts: Option<Vec<i64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSection {
    pub varrho: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub format: Option<String>,
}

/// The document as written, before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub trials: Option<i64>,
    pub sweep: Option<Vec<f64>>,
    pub variants: Option<Vec<String>>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub outage: OutageSection,
    #[serde(default)]
    pub eta: EtaSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
        }
    }
}

/// Validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

pub const DEFAULT_OUTPUT_DIR: &str = "out";

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Like [`parse_config`], then applies `key=value` overrides on dotted keys
/// (`system.b=1`, `trials=200`, `sweep=[1,2]`). Values are TOML; anything
/// that does not parse as TOML is taken as a string.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<RunConfig, ConfigError> {
    let doc: ConfigDocument = if overrides.is_empty() {
        toml::from_str(text).map_err(|e| located(text, &e))?
    } else {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| located(text, &e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Structure(e.message().to_string()))?
    };
    resolve(&doc)
}

fn located(text: &str, err: &toml::de::Error) -> ConfigError {
    match err.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            ConfigError::Parse {
                line,
                column,
                message: err.message().to_string(),
            }
        }
        None => ConfigError::Structure(err.message().to_string()),
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<(), ConfigError> {
    let (key, raw) = item.split_once('=').ok_or_else(|| ConfigError::Override(item.to_string()))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(item.to_string()));
    }
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));

    let (last, path) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for part in path {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| invalid(key, format!("`{part}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn count(field: &str, v: Option<i64>, default: usize) -> Result<usize, ConfigError> {
    match v {
        None => Ok(default),
        Some(v) if v >= 1 => Ok(v as usize),
        Some(v) => Err(invalid(field, format!("must be ≥ 1, got {v}"))),
    }
}

fn resolution(v: &Option<BitsSetting>, default: PhaseResolution) -> Result<PhaseResolution, ConfigError> {
    let err = || invalid("system.b", "b must be ≥ 1 or 'continuous'");
    match v {
        None => Ok(default),
        Some(BitsSetting::Name(s)) if s == "continuous" => Ok(PhaseResolution::Continuous),
        Some(BitsSetting::Name(_)) => Err(err()),
        Some(BitsSetting::Bits(b)) if *b >= 1 && *b <= PhaseResolution::MAX_BITS as i64 => Ok(PhaseResolution::Bits(*b as u32)),
        Some(BitsSetting::Bits(_)) => Err(err()),
    }
}

/// Applies defaults and validates.
pub fn resolve(doc: &ConfigDocument) -> Result<RunConfig, ConfigError> {
    let kind = match &doc.experiment {
        None => ExperimentKind::SnrVsDistance,
        Some(name) => ExperimentKind::parse(name).ok_or_else(|| {
            invalid(
                "experiment",
                format!("unknown experiment `{name}` (snr_vs_distance, snr_vs_elements, eta_validation, outage_vs_blockage)"),
            )
        })?,
    };

    let d = SystemConfig::default();
    let s = &doc.system;
    let cfg = SystemConfig {
        n_bs: count("system.n", s.n, d.n_bs)?,
        k_irs: count("system.k", s.k, d.k_irs)?,
        m_y: count("system.m_y", s.m_y, d.m_y)?,
        m_z: count("system.m_z", s.m_z, d.m_z)?,
        p_dbm: s.p_dbm.unwrap_or(d.p_dbm),
        noise_dbm: s.noise_dbm.unwrap_or(d.noise_dbm),
        resolution: resolution(&s.b, d.resolution)?,
        gain_tx_dbi: s.gain_tx_dbi.unwrap_or(d.gain_tx_dbi),
        gain_rx_dbi: s.gain_rx_dbi.unwrap_or(d.gain_rx_dbi),
    };

    let g = ScenarioGeometry::default();
    let geom = ScenarioGeometry {
        d_b: doc.geometry.d_b.unwrap_or(g.d_b),
        d_v: doc.geometry.d_v.unwrap_or(g.d_v),
        d_span: doc.geometry.d_span.unwrap_or(g.d_span),
        d_u: doc.geometry.d_u.unwrap_or(g.d_u),
    };

    let c = ChannelOptions::default();
    let channel = ChannelOptions {
        paths: count("channel.paths", doc.channel.paths, c.paths)?,
        freeze_shadowing: doc.channel.freeze_shadowing.unwrap_or(c.freeze_shadowing),
    };

    let o = OutageSettings::default();
    let outage = OutageSettings {
        tau_db: doc.outage.tau_db.unwrap_or(o.tau_db),
        inner_samples: count("outage.inner_samples", doc.outage.inner_samples, o.inner_samples)?,
        irs_counts: match &doc.outage.irs_counts {
            None => o.irs_counts,
            Some(v) => v
                .iter()
                .map(|&k| count("outage.irs_counts", Some(k), 0))
                .collect::<Result<_, _>>()?,
        },
    };

    let variants = match &doc.variants {
        None => default_variants(kind, &cfg),
        Some(names) => names
            .iter()
            .map(|n| {
                Variant::parse(n).ok_or_else(|| {
                    invalid("variants", format!("unknown variant `{n}` (b<bits>, continuous, upper_bound, no_irs)"))
                })
            })
            .collect::<Result<_, _>>()?,
    };

    let mut spec = ExperimentSpec::new(kind, cfg, geom);
    spec.trials = count("trials", doc.trials, spec.trials)?;
    spec.seed = doc.seed.unwrap_or(0);
    spec.sweep = doc.sweep.clone().unwrap_or_else(|| default_sweep(kind, &cfg));
    spec.channel = channel;
    spec.variants = variants;
    spec.outage = outage;
    spec.rayleigh_varrho = doc.eta.varrho.unwrap_or(spec.rayleigh_varrho);
    spec.validate().map_err(|e| match e {
        irs_core::Error::InvalidParameter { name, reason } => ConfigError::Invalid {
            field: name.to_string(),
            reason,
        },
        other => invalid("config", other.to_string()),
    })?;

    let format = match doc.output.format.as_deref() {
        None | Some("csv") => OutputFormat::Csv,
        Some(other) => return Err(invalid("output.format", format!("unsupported format `{other}` (csv)"))),
    };

    Ok(RunConfig {
        spec,
        output_dir: doc.output.dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
        format,
    })
}

/// Fully explicit document for `config`; parsing it yields `config` again.
pub fn to_document(config: &RunConfig) -> ConfigDocument {
    let spec = &config.spec;
    let cfg = &spec.cfg;
    ConfigDocument {
        experiment: Some(spec.kind.name().to_string()),
        seed: Some(spec.seed),
        trials: Some(spec.trials as i64),
        sweep: Some(spec.sweep.clone()),
        variants: Some(spec.variants.iter().map(|v| v.label()).collect()),
        system: SystemSection {
            n: Some(cfg.n_bs as i64),
            k: Some(cfg.k_irs as i64),
            m_y: Some(cfg.m_y as i64),
            m_z: Some(cfg.m_z as i64),
            p_dbm: Some(cfg.p_dbm),
            noise_dbm: Some(cfg.noise_dbm),
            b: Some(match cfg.resolution {
                PhaseResolution::Bits(b) => BitsSetting::Bits(b as i64),
                PhaseResolution::Continuous => BitsSetting::Name("continuous".into()),
            }),
            gain_tx_dbi: Some(cfg.gain_tx_dbi),
            gain_rx_dbi: Some(cfg.gain_rx_dbi),
        },
        geometry: GeometrySection {
            d_b: Some(spec.geom.d_b),
            d_v: Some(spec.geom.d_v),
            d_span: Some(spec.geom.d_span),
            d_u: Some(spec.geom.d_u),
        },
        channel: ChannelSection {
            paths: Some(spec.channel.paths as i64),
            freeze_shadowing: Some(spec.channel.freeze_shadowing),
        },
        outage: OutageSection {
            tau_db: Some(spec.outage.tau_db),
            inner_samples: Some(spec.outage.inner_samples as i64),
            irs_counts: Some(spec.outage.irs_counts.iter().map(|&k| k as i64).collect()),
        },
        eta: EtaSection {
            varrho: Some(spec.rayleigh_varrho),
        },
        output: OutputSection {
            dir: Some(config.output_dir.clone()),
            format: Some(config.format.name().to_string()),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let rc = parse_config("").unwrap();
        let s = &rc.spec;
        assert_eq!(s.kind, ExperimentKind::SnrVsDistance);
        assert_eq!((s.cfg.n_bs, s.cfg.m_y, s.cfg.m_z, s.cfg.k_irs), (32, 10, 5, 3));
        assert_eq!((s.cfg.p_dbm, s.cfg.noise_dbm), (30.0, -85.0));
        assert_eq!(s.cfg.resolution, PhaseResolution::Bits(2));
        assert_eq!((s.geom.d_b, s.geom.d_v, s.geom.d_span), (11.0, 1.5, 50.0));
        assert_eq!(s.outage.tau_db, 1.5);
        assert_eq!(s.trials, 1000);
        assert_eq!(rc.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn zero_bits_rejected() {
        let err = parse_config("[system]\nb = 0\n").unwrap_err().to_string();
        assert!(err.contains("b must be ≥ 1 or 'continuous'"), "{err}");
        assert!(parse_config("[system]\nb = \"fine\"\n").is_err());
        assert_eq!(
            parse_config("[system]\nb = \"continuous\"\n").unwrap().spec.cfg.resolution,
            PhaseResolution::Continuous
        );
    }

    #[test]
    fn negative_trials_rejected() {
        let err = parse_config("trials = -1").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "trials"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        let err = parse_config("seed = 1\n\n[system]\nbogus = 3\n").unwrap_err();
        match err {
            ConfigError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
        assert!(parse_config("frobnicate = true").is_err());
    }

    #[test]
    fn syntax_error_reports_line() {
        match parse_config("seed = 1\ntrials = = 2\n").unwrap_err() {
            ConfigError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn validation_names_the_field() {
        let err = parse_config("experiment = \"snr_vs_elements\"\nsweep = [15]").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "sweep"), "{err}");
        let err = parse_config("[geometry]\nd_v = -1.0").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "d_v"), "{err}");
        assert!(parse_config("[output]\nformat = \"json\"").is_err());
        assert!(parse_config("variants = [\"b0\"]").is_err());
    }

    #[test]
    fn overrides_apply_on_dotted_keys() {
        let sets = ["system.b=1", "trials=7", "experiment=eta_validation", "sweep=[1, 4]", "output.dir=elsewhere"]
            .map(String::from);
        let rc = parse_config_with("[system]\nb = 3\n", &sets).unwrap();
        assert_eq!(rc.spec.cfg.resolution, PhaseResolution::Bits(1));
        assert_eq!(rc.spec.trials, 7);
        assert_eq!(rc.spec.kind, ExperimentKind::EtaValidation);
        assert_eq!(rc.spec.sweep, vec![1.0, 4.0]);
        assert_eq!(rc.output_dir, PathBuf::from("elsewhere"));
        assert!(parse_config_with("", &["nonsense".to_string()]).is_err());
        assert!(parse_config_with("", &["system.wat=1".to_string()]).is_err());
    }

    #[test]
    fn resolved_document_round_trips() {
        for text in ["", "experiment = \"outage_vs_blockage\"\nseed = 99\n[system]\nb = \"continuous\"\n"] {
            let rc = parse_config(text).unwrap();
            let again = toml::to_string(&to_document(&rc)).unwrap();
            assert_eq!(parse_config(&again).unwrap(), rc);
        }
    }
}
