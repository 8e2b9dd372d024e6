//! On-disk formats for datasets and trained models.
//!
//! A dataset directory holds a text `manifest` of `key = value` lines and
//! little-endian arrays:
//!
//! | file          | type | shape         |
//! |---------------|------|---------------|
//! | `sensors.f64` | f64  | `m × sensor_dim` |
//! | `inputs.f64`  | f64  | `N × m`       |
//! | `colloc_xy.f64` | f64 | `N × q × d`  |
//! | `colloc_u.f64`  | f64 | `N × q` (optional) |
//! | `mask.u8`     | u8   | `N × q`, point kind codes |
//!
//! Darcy manifests carry one `domain = <code> <params…>` line per
//! realization, in order.
//!
//! A model directory holds `manifest.json` and the arrays `branch_w.f64`,
//! `branch_b.f64`, `trunk_w.f64`, `trunk_b.f64`, `alpha.f64` and, for
//! hypercube-initialized layers, `branch_anchors.f64`/`trunk_anchors.f64`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::datagen::{Dataset, ExampleId, PointKind};
use crate::features::{Activation, RandomLayer};
use crate::geometry::DomainSpec;
use crate::model::{ConstraintWrapper, DistanceField, LiftField, PeriodicEmbedding, RannDeepONet};

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn io_err(path: &Path, e: std::io::Error) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

pub fn write_f64s(path: &Path, values: &[f64]) -> Result<(), BenchError> {
    let mut bytes = Vec::with_capacity(8 * values.len());
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Reads exactly `expected` values.
pub fn read_f64s(path: &Path, expected: usize) -> Result<Vec<f64>, BenchError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != 8 * expected {
        return Err(BenchError::TruncatedArray {
            file: path.display().to_string(),
            expected: 8 * expected,
            got: bytes.len(),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

fn read_u8s(path: &Path, expected: usize) -> Result<Vec<u8>, BenchError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.len() != expected {
        return Err(BenchError::TruncatedArray {
            file: path.display().to_string(),
            expected,
            got: bytes.len(),
        });
    }
    Ok(bytes)
}

fn create_dir(dir: &Path) -> Result<(), BenchError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `dataset` into `dir`, creating it if needed.
pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<(), BenchError> {
    dataset.validate()?;
    create_dir(dir)?;
    let mut manifest = String::new();
    let mut line = |k: &str, v: String| {
        manifest.push_str(k);
        manifest.push_str(" = ");
        manifest.push_str(&v);
        manifest.push('\n');
    };
    line("format_version", DATASET_FORMAT_VERSION.to_string());
    line("example", dataset.example.name().to_string());
    line("n", dataset.len().to_string());
    line("m", dataset.m.to_string());
    line("sensor_dim", dataset.sensor_dim.to_string());
    line("q", dataset.q.to_string());
    line("d", dataset.d.to_string());
    line("has_solution", dataset.solution.is_some().to_string());
    for (k, v) in &dataset.meta {
        line(&format!("meta.{k}"), v.clone());
    }
    if let Some(domains) = &dataset.domains {
        for d in domains {
            let params: Vec<String> = d.to_params().iter().map(|p| format!("{p:?}")).collect();
            line("domain", params.join(" "));
        }
    }
    let path = dir.join("manifest");
    fs::write(&path, manifest).map_err(|e| io_err(&path, e))?;
    write_f64s(&dir.join("sensors.f64"), &dataset.sensors)?;
    write_f64s(&dir.join("inputs.f64"), &dataset.inputs)?;
    write_f64s(&dir.join("colloc_xy.f64"), &dataset.colloc)?;
    if let Some(u) = &dataset.solution {
        write_f64s(&dir.join("colloc_u.f64"), u)?;
    }
    let path = dir.join("mask.u8");
    fs::write(&path, &dataset.kinds).map_err(|e| io_err(&path, e))
}

fn parse_manifest(text: &str, file: &Path) -> Result<Vec<(String, String)>, BenchError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            BenchError::CorruptManifest(format!("{}:{}: expected `key = value`", file.display(), i + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, BenchError> {
    let raw = map
        .get(key)
        .ok_or_else(|| BenchError::CorruptManifest(format!("missing key `{key}`")))?;
    raw.parse()
        .map_err(|_| BenchError::CorruptManifest(format!("bad value `{raw}` for `{key}`")))
}

/// Reads a directory written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset, BenchError> {
    let path = dir.join("manifest");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let entries = parse_manifest(&text, &path)?;
    let mut map = BTreeMap::new();
    let mut meta = BTreeMap::new();
    let mut domain_lines = Vec::new();
    for (k, v) in entries {
        if k == "domain" {
            domain_lines.push(v);
        } else if let Some(m) = k.strip_prefix("meta.") {
            meta.insert(m.to_string(), v);
        } else {
            map.insert(k, v);
        }
    }
    let version: u32 = field(&map, "format_version")?;
    if version != DATASET_FORMAT_VERSION {
        return Err(BenchError::VersionMismatch {
            expected: DATASET_FORMAT_VERSION,
            got: version,
        });
    }
    let example: ExampleId = map
        .get("example")
        .ok_or_else(|| BenchError::CorruptManifest("missing key `example`".into()))?
        .parse()
        .map_err(|e: crate::datagen::DatagenError| BenchError::ConfigInvalid(e.to_string()))?;
    let n: usize = field(&map, "n")?;
    let m: usize = field(&map, "m")?;
    let sensor_dim: usize = field(&map, "sensor_dim")?;
    let q: usize = field(&map, "q")?;
    let d: usize = field(&map, "d")?;
    let has_solution: bool = field(&map, "has_solution")?;

    let domains = if domain_lines.is_empty() {
        None
    } else {
        if domain_lines.len() != n {
            return Err(BenchError::CorruptManifest(format!(
                "{} domain lines for {n} realizations",
                domain_lines.len()
            )));
        }
        let parsed = domain_lines
            .iter()
            .map(|l| {
                let params = l
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| BenchError::CorruptManifest(format!("bad domain line `{l}`")))?;
                DomainSpec::from_params(&params).map_err(|e| BenchError::CorruptManifest(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Some(parsed)
    };

    let kinds = read_u8s(&dir.join("mask.u8"), n * q)?;
    if let Some(bad) = kinds.iter().find(|&&c| PointKind::from_code(c).is_none()) {
        return Err(BenchError::CorruptManifest(format!("unknown point code {bad} in mask.u8")));
    }
    let data = Dataset {
        example,
        sensors: read_f64s(&dir.join("sensors.f64"), m * sensor_dim)?,
        sensor_dim,
        m,
        inputs: read_f64s(&dir.join("inputs.f64"), n * m)?,
        q,
        d,
        colloc: read_f64s(&dir.join("colloc_xy.f64"), n * q * d)?,
        solution: if has_solution {
            Some(read_f64s(&dir.join("colloc_u.f64"), n * q)?)
        } else {
            None
        },
        kinds,
        domains,
        meta,
    };
    data.validate()?;
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LayerManifest {
    in_dim: usize,
    width: usize,
    activation: Activation,
    seed: Option<u64>,
    has_anchors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelManifest {
    format_version: u32,
    coord_dim: usize,
    branch: LayerManifest,
    trunk: LayerManifest,
    embedding: Option<PeriodicEmbedding>,
    /// `none`, `unit_interval_time` or `domain`.
    constraint: String,
    trained: bool,
}

fn constraint_name(c: &ConstraintWrapper) -> Result<&'static str, BenchError> {
    match c {
        ConstraintWrapper::None => Ok("none"),
        ConstraintWrapper::Dirichlet {
            distance,
            lift: LiftField::Zero,
        } => match distance {
            DistanceField::UnitIntervalTime => Ok("unit_interval_time"),
            DistanceField::Domain => Ok("domain"),
            DistanceField::Custom(f) => Err(BenchError::ConfigInvalid(format!(
                "custom distance field `{}` cannot be saved",
                f.name
            ))),
        },
        ConstraintWrapper::Dirichlet { .. } => {
            Err(BenchError::ConfigInvalid("custom lift fields cannot be saved".into()))
        }
    }
}

fn constraint_from_name(name: &str) -> Result<ConstraintWrapper, BenchError> {
    match name {
        "none" => Ok(ConstraintWrapper::None),
        "unit_interval_time" => Ok(ConstraintWrapper::unit_interval_time()),
        "domain" => Ok(ConstraintWrapper::domain()),
        other => Err(BenchError::ConfigInvalid(format!("unknown constraint `{other}`"))),
    }
}

fn layer_manifest(layer: &RandomLayer) -> LayerManifest {
    LayerManifest {
        in_dim: layer.in_dim(),
        width: layer.width(),
        activation: layer.activation(),
        seed: layer.seed(),
        has_anchors: layer.anchors().is_some(),
    }
}

fn save_layer(layer: &RandomLayer, dir: &Path, name: &str) -> Result<(), BenchError> {
    write_f64s(&dir.join(format!("{name}_w.f64")), layer.weights())?;
    write_f64s(&dir.join(format!("{name}_b.f64")), layer.biases())?;
    if let Some(a) = layer.anchors() {
        write_f64s(&dir.join(format!("{name}_anchors.f64")), a)?;
    }
    Ok(())
}

fn load_layer(m: &LayerManifest, dir: &Path, name: &str) -> Result<RandomLayer, BenchError> {
    let w = read_f64s(&dir.join(format!("{name}_w.f64")), m.width * m.in_dim)?;
    let b = read_f64s(&dir.join(format!("{name}_b.f64")), m.width)?;
    let anchors = if m.has_anchors {
        Some(read_f64s(&dir.join(format!("{name}_anchors.f64")), m.width * m.in_dim)?)
    } else {
        None
    };
    let layer = RandomLayer::new(w, b, m.in_dim, m.activation)
        .map_err(|e| BenchError::CorruptManifest(format!("{name} layer: {e}")))?;
    Ok(layer.with_metadata(anchors, m.seed))
}

/// Writes the layers, embedding, constraint kind and (if trained) `α`.
pub fn save_model(model: &RannDeepONet, dir: &Path) -> Result<(), BenchError> {
    let manifest = ModelManifest {
        format_version: MODEL_FORMAT_VERSION,
        coord_dim: model.coord_dim(),
        branch: layer_manifest(model.branch()),
        trunk: layer_manifest(model.trunk()),
        embedding: model.embedding().cloned(),
        constraint: constraint_name(model.constraint())?.to_string(),
        trained: model.alpha().is_some(),
    };
    create_dir(dir)?;
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))?;
    save_layer(model.branch(), dir, "branch")?;
    save_layer(model.trunk(), dir, "trunk")?;
    if let Some(alpha) = model.alpha() {
        write_f64s(&dir.join("alpha.f64"), alpha.as_slice())?;
    }
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<RannDeepONet, BenchError> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| BenchError::CorruptManifest(e.to_string()))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| BenchError::CorruptManifest("missing format_version".into()))?;
    if version != MODEL_FORMAT_VERSION as u64 {
        return Err(BenchError::VersionMismatch {
            expected: MODEL_FORMAT_VERSION,
            got: version as u32,
        });
    }
    let manifest: ModelManifest =
        serde_json::from_value(value).map_err(|e| BenchError::CorruptManifest(e.to_string()))?;
    let branch = load_layer(&manifest.branch, dir, "branch")?;
    let trunk = load_layer(&manifest.trunk, dir, "trunk")?;
    let constraint = constraint_from_name(&manifest.constraint)?;
    let mut model = RannDeepONet::new(branch, trunk, manifest.coord_dim, manifest.embedding, constraint)?;
    if manifest.trained {
        let alpha = read_f64s(&dir.join("alpha.f64"), model.coefficient_count())?;
        model.set_alpha_flat(alpha)?;
    }
    Ok(model)
}
