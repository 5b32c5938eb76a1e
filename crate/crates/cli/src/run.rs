//! Runs a configured experiment and writes its CSV and metadata sidecar.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use irs_core::sim::{self, ExperimentKind, ExperimentResult, ResultRow};

use crate::config::{to_document, RunConfig};

pub const CSV_HEADER: [&str; 5] = ["x", "variant", "value", "std", "trials"];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("experiment failed: {0}")]
    Experiment(#[from] irs_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("serializing metadata: {0}")]
    Meta(#[from] toml::ser::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> RunError + '_ {
    move |source| RunError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub result: ExperimentResult,
    pub csv_path: PathBuf,
    pub meta_path: PathBuf,
}

/// Comment line describing the columns of `kind`.
pub fn units_comment(kind: ExperimentKind) -> String {
    let (x, value) = match kind {
        ExperimentKind::SnrVsDistance => ("BS-user distance d_u [m]", "mean receive SNR [dB]"),
        ExperimentKind::SnrVsElements => ("elements per IRS M", "mean receive SNR [dB]"),
        ExperimentKind::EtaValidation => ("phase-shifter bits b", "power ratio gamma(b)/gamma(inf) [linear]"),
        ExperimentKind::OutageVsBlockage => ("link blockage probability P", "outage probability [0,1]"),
    };
    format!(
        "# {}: x = {x}; value = {value}; std = sample std over trials, same unit; trials = trials averaged",
        kind.name()
    )
}

pub fn csv_path(dir: &Path, kind: ExperimentKind) -> PathBuf {
    dir.join(format!("{}.csv", kind.name()))
}

pub fn meta_path(dir: &Path, kind: ExperimentKind) -> PathBuf {
    dir.join(format!("{}.meta.toml", kind.name()))
}

/// Runs the experiment, then writes `<dir>/<experiment>.csv` and
/// `<dir>/<experiment>.meta.toml` (the fully resolved config).
pub fn run(config: &RunConfig) -> Result<RunOutput, RunError> {
    let result = sim::run(&config.spec)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let csv_path = csv_path(dir, config.spec.kind);
    write_csv(&csv_path, &result)?;

    let meta_path = meta_path(dir, config.spec.kind);
    let meta = toml::to_string(&to_document(config))?;
    fs::write(&meta_path, meta).map_err(io_err(&meta_path))?;

    Ok(RunOutput {
        result,
        csv_path,
        meta_path,
    })
}

pub fn write_csv(path: &Path, result: &ExperimentResult) -> Result<(), RunError> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    writeln!(file, "{}", units_comment(result.kind)).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(CSV_HEADER).map_err(csv_err(path))?;
    for row in &result.rows {
        // `{}` on f64 is locale-free and the shortest string that parses back exactly.
        w.write_record([
            row.x.to_string(),
            row.variant.clone(),
            row.value.to_string(),
            row.std.to_string(),
            row.trials.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>, RunError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(RunError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("unexpected header {header:?}")),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result() -> ExperimentResult {
        ExperimentResult {
            kind: ExperimentKind::SnrVsElements,
            rows: vec![
                ResultRow {
                    x: 50.0,
                    variant: "b1".into(),
                    value: -1.779_690_524_192_412_1,
                    std: 0.1 + 0.2,
                    trials: 10,
                },
                ResultRow {
                    x: 100.0,
                    variant: "continuous".into(),
                    value: 1e-300,
                    std: 0.0,
                    trials: 10,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&path, &result()).unwrap();
        assert_eq!(read_csv(&path).unwrap(), result().rows);
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# snr_vs_elements: x = elements per IRS M"));
        assert_eq!(lines.next().unwrap(), "x,variant,value,std,trials");
        assert_eq!(lines.next().unwrap(), "50,b1,-1.7796905241924121,0.30000000000000004,10");
    }

    #[test]
    fn io_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope").join("r.csv");
        let err = write_csv(&missing, &result()).unwrap_err().to_string();
        assert!(err.contains("nope"), "{err}");
    }
}
