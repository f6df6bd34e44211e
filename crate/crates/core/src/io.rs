//! File formats: cluster-stats CSV, interaction CSV, and run-config JSON.
//!
//! Cluster-stats CSV: header `cluster_id,n,m,y`, one row per cluster, UTF-8.
//! Interaction CSV: header `interaction_id,cluster_id,r,f,y_star`; `f` and
//! `y_star` may be empty. Run configuration is a JSON document mirroring
//! [`RunConfig`] field names; unknown keys are rejected.

use std::io::{Read, Write};
use std::path::Path;

use crate::types::{
    validate_dataset, ClusterStats, DataError, Dataset, InteractionRecord, RunConfig,
};

/// Write a dataset as cluster-stats CSV.
pub fn write_cluster_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cluster_id", "n", "m", "y"])?;
    for c in dataset.clusters() {
        w.write_record([
            c.cluster_id.as_str(),
            &c.n.to_string(),
            &c.m.to_string(),
            &c.y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read and validate a cluster-stats CSV.
pub fn read_cluster_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut stats = Vec::new();
    for row in r.records() {
        let row = row?;
        let parse = |idx: usize, field: &str| -> Result<u64, DataError> {
            row.get(idx)
                .ok_or_else(|| bad_field(field, "missing"))?
                .trim()
                .parse::<u64>()
                .map_err(|e| bad_field(field, &e.to_string()))
        };
        stats.push(ClusterStats {
            cluster_id: row.get(0).ok_or_else(|| bad_field("cluster_id", "missing"))?.to_string(),
            n: parse(1, "n")?,
            m: parse(2, "m")?,
            y: parse(3, "y")?,
        });
    }
    validate_dataset(stats)
}

pub fn write_cluster_csv_path(dataset: &Dataset, path: &Path) -> Result<(), DataError> {
    write_cluster_csv(dataset, std::fs::File::create(path)?)
}

pub fn read_cluster_csv_path(path: &Path) -> Result<Dataset, DataError> {
    read_cluster_csv(std::fs::File::open(path)?)
}

fn bad_field(field: &str, detail: &str) -> DataError {
    DataError::Io(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("bad csv field {field}: {detail}"),
    ))
}

/// Write interaction records as CSV.
pub fn write_interaction_csv<W: Write>(
    records: &[InteractionRecord],
    writer: W,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["interaction_id", "cluster_id", "r", "f", "y_star"])?;
    for rec in records {
        let f = if rec.feedback {
            if rec.positive { "1" } else { "0" }
        } else {
            ""
        };
        let y_star = match rec.true_label {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        w.write_record([
            rec.interaction_id.as_str(),
            rec.cluster_id.as_str(),
            if rec.feedback { "1" } else { "0" },
            f,
            y_star,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read interaction records from CSV, enforcing the polarity invariant.
pub fn read_interaction_csv<R: Read>(reader: R) -> Result<Vec<InteractionRecord>, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let flag = |idx: usize, field: &str| -> Result<Option<bool>, DataError> {
            match row.get(idx).map(str::trim) {
                None | Some("") => Ok(None),
                Some("0") => Ok(Some(false)),
                Some("1") => Ok(Some(true)),
                Some(other) => Err(bad_field(field, &format!("expected 0/1/empty, got {other}"))),
            }
        };
        let rec = InteractionRecord {
            interaction_id: row
                .get(0)
                .ok_or_else(|| bad_field("interaction_id", "missing"))?
                .to_string(),
            cluster_id: row.get(1).ok_or_else(|| bad_field("cluster_id", "missing"))?.to_string(),
            feedback: flag(2, "r")?.ok_or_else(|| bad_field("r", "missing"))?,
            positive: flag(3, "f")?.unwrap_or(false),
            true_label: flag(4, "y_star")?,
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

/// A persisted fit: enough to reload the model, its draws, and diagnostics.
///
/// JSON mode stores everything in one document. Binary mode writes the draw
/// values as little-endian f64 in `[chain][draw][parameter]` order to the
/// data file, with this structure (minus `values`) in a `.meta.json` sidecar.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct DrawsFile {
    pub schema: String,
    pub variant: crate::models::ModelVariant,
    pub priors: crate::models::PriorConfig,
    pub clusters: Vec<ClusterStats>,
    pub sampler: crate::nuts::SamplerConfig,
    pub param_names: Vec<String>,
    /// (chains, draws per chain, parameter count)
    pub shape: (usize, usize, usize),
    pub stats: Vec<crate::nuts::DrawStats>,
    pub convergence: crate::nuts::ConvergenceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

pub const DRAWS_SCHEMA: &str = "debias.draws.v1";

/// On-disk layout for draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawsFormat {
    Json,
    Binary,
}

impl std::str::FromStr for DrawsFormat {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(DrawsFormat::Json),
            "bin" | "binary" => Ok(DrawsFormat::Binary),
            other => Err(DataError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("unknown draws format {other}; expected json or bin"),
            ))),
        }
    }
}

/// A loaded fit, with the model rebuilt from its stored definition.
pub struct LoadedFit {
    pub model: crate::models::ModelInstance,
    pub draws: crate::nuts::PosteriorDraws,
    pub convergence: crate::nuts::ConvergenceReport,
    pub sampler: crate::nuts::SamplerConfig,
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    std::path::PathBuf::from(s)
}

/// Persist a fit.
pub fn save_draws(
    path: &Path,
    format: DrawsFormat,
    model: &crate::models::ModelInstance,
    sampler: &crate::nuts::SamplerConfig,
    draws: &crate::nuts::PosteriorDraws,
    convergence: &crate::nuts::ConvergenceReport,
) -> Result<(), DataError> {
    let mut file = DrawsFile {
        schema: DRAWS_SCHEMA.to_string(),
        variant: model.variant(),
        priors: model.priors().clone(),
        clusters: model.dataset().clusters().to_vec(),
        sampler: sampler.clone(),
        param_names: draws.param_names.clone(),
        shape: (draws.chains, draws.draws_per_chain, draws.dim),
        stats: draws.stats.clone(),
        convergence: convergence.clone(),
        values: None,
    };
    match format {
        DrawsFormat::Json => {
            file.values = Some(draws.values_flat().to_vec());
            std::fs::write(path, serde_json::to_string(&file)?)?;
        }
        DrawsFormat::Binary => {
            let mut bytes = Vec::with_capacity(draws.values_flat().len() * 8);
            for v in draws.values_flat() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            std::fs::write(path, bytes)?;
            std::fs::write(sidecar_path(path), serde_json::to_string(&file)?)?;
        }
    }
    Ok(())
}

/// Load a fit saved by [`save_draws`]; binary files are recognized by their
/// `.meta.json` sidecar.
pub fn load_draws(path: &Path) -> Result<LoadedFit, DataError> {
    let sidecar = sidecar_path(path);
    let (file, values) = if sidecar.exists() {
        let file: DrawsFile = serde_json::from_str(&std::fs::read_to_string(&sidecar)?)?;
        let bytes = std::fs::read(path)?;
        if bytes.len() % 8 != 0 {
            return Err(DataError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "binary draws file length is not a multiple of 8",
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        (file, values)
    } else {
        let mut file: DrawsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let values = file.values.take().ok_or_else(|| {
            DataError::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "draws JSON is missing the values array",
            ))
        })?;
        (file, values)
    };
    if file.schema != DRAWS_SCHEMA {
        return Err(DataError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unsupported draws schema {}", file.schema),
        )));
    }
    let (chains, per_chain, dim) = file.shape;
    if values.len() != chains * per_chain * dim || file.param_names.len() != dim {
        return Err(DataError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "draws shape does not match stored values",
        )));
    }
    let dataset = validate_dataset(file.clusters)?;
    let model = crate::models::build_model(file.variant, dataset, file.priors);
    let draws = crate::nuts::PosteriorDraws::new(
        file.param_names,
        chains,
        per_chain,
        values,
        file.stats,
    );
    Ok(LoadedFit { model, draws, convergence: file.convergence, sampler: file.sampler })
}

/// Parse a run-config JSON document; unknown keys are rejected.
pub fn read_run_config(json: &str) -> Result<RunConfig, DataError> {
    let cfg: RunConfig = serde_json::from_str(json)?;
    cfg.validate().map_err(|msg| {
        DataError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, msg))
    })?;
    Ok(cfg)
}

pub fn read_run_config_path(path: &Path) -> Result<RunConfig, DataError> {
    read_run_config(&std::fs::read_to_string(path)?)
}
