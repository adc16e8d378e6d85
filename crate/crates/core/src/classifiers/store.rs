//! Model persistence: a self-describing binary file with a versioned
//! header, so expensive training runs are resumable.
//!
//! Layout (little-endian): 8-byte magic `MSCRMODL`, u16 format version,
//! then the spec, fingerprint and fitted state. Strings are u64
//! length-prefixed UTF-8.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::separation::NormMetric;

use super::forest::ForestModel;
use super::knn::KnnModel;
use super::tree::{DecisionTree, Node};
use super::{FeatureSubsample, FittedState, ModelKind, ModelSpec, TrainedModel};

const MAGIC: &[u8; 8] = b"MSCRMODL";
const VERSION: u16 = 1;

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    write_model(&mut w, model).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut r = BufReader::new(file);
    read_model(&mut r).map_err(|e| match e {
        ReadError::Io(io) => Error::io(path.display().to_string(), io),
        ReadError::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
    })
}

fn write_model(w: &mut impl Write, model: &TrainedModel) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    write_spec(w, &model.spec)?;
    write_str(w, &model.training_set_fingerprint)?;
    match &model.state {
        FittedState::Knn(knn) => {
            w.write_all(&[0u8])?;
            write_knn(w, knn)?;
        }
        FittedState::Forest(forest) => {
            w.write_all(&[1u8])?;
            write_forest(w, forest)?;
        }
    }
    w.flush()
}

enum ReadError {
    Io(std::io::Error),
    Format(String),
}

impl From<std::io::Error> for ReadError {
    fn from(e: std::io::Error) -> Self {
        ReadError::Io(e)
    }
}

fn read_model(r: &mut impl Read) -> std::result::Result<TrainedModel, ReadError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ReadError::Format("not a model file (bad magic)".into()));
    }
    let version = read_u16(r)?;
    if version != VERSION {
        return Err(ReadError::Format(format!(
            "unsupported model format version {version} (supported: {VERSION})"
        )));
    }
    let spec = read_spec(r)?;
    let fingerprint = read_str(r)?;
    let state = match read_u8(r)? {
        0 => FittedState::Knn(read_knn(r)?),
        1 => FittedState::Forest(read_forest(r)?),
        tag => return Err(ReadError::Format(format!("unknown state tag {tag}"))),
    };
    Ok(TrainedModel {
        spec,
        training_set_fingerprint: fingerprint,
        state,
    })
}

fn write_spec(w: &mut impl Write, spec: &ModelSpec) -> std::io::Result<()> {
    let kind = match spec.kind {
        ModelKind::Knn => 0u8,
        ModelKind::RandomForest => 1,
        ModelKind::External => 2,
    };
    w.write_all(&[kind])?;
    write_u64(w, spec.knn_neighbors as u64)?;
    write_u64(w, spec.rf_trees as u64)?;
    match spec.rf_max_depth {
        Some(d) => {
            w.write_all(&[1])?;
            write_u64(w, d as u64)?;
        }
        None => w.write_all(&[0])?,
    }
    write_u64(w, spec.rf_min_leaf as u64)?;
    w.write_all(&[match spec.rf_feature_subsample {
        FeatureSubsample::All => 0u8,
        FeatureSubsample::Sqrt => 1,
    }])?;
    write_u64(w, spec.seed)?;
    match &spec.external_path {
        Some(p) => {
            w.write_all(&[1])?;
            write_str(w, p)?;
        }
        None => w.write_all(&[0])?,
    }
    Ok(())
}

fn read_spec(r: &mut impl Read) -> std::result::Result<ModelSpec, ReadError> {
    let kind = match read_u8(r)? {
        0 => ModelKind::Knn,
        1 => ModelKind::RandomForest,
        2 => ModelKind::External,
        tag => return Err(ReadError::Format(format!("unknown model kind {tag}"))),
    };
    let knn_neighbors = read_u64(r)? as usize;
    let rf_trees = read_u64(r)? as usize;
    let rf_max_depth = match read_u8(r)? {
        0 => None,
        _ => Some(read_u64(r)? as usize),
    };
    let rf_min_leaf = read_u64(r)? as usize;
    let rf_feature_subsample = match read_u8(r)? {
        0 => FeatureSubsample::All,
        _ => FeatureSubsample::Sqrt,
    };
    let seed = read_u64(r)?;
    let external_path = match read_u8(r)? {
        0 => None,
        _ => Some(read_str(r)?),
    };
    Ok(ModelSpec {
        kind,
        knn_neighbors,
        rf_trees,
        rf_max_depth,
        rf_min_leaf,
        rf_feature_subsample,
        seed,
        external_path,
    })
}

fn write_knn(w: &mut impl Write, knn: &KnnModel) -> std::io::Result<()> {
    write_u64(w, knn.dim as u64)?;
    write_u64(w, knn.k as u64)?;
    write_norm(w, knn.norm)?;
    write_u64(w, knn.class_count as u64)?;
    write_u64(w, knn.labels.len() as u64)?;
    for v in &knn.features {
        w.write_all(&v.to_le_bytes())?;
    }
    for l in &knn.labels {
        w.write_all(&l.to_le_bytes())?;
    }
    Ok(())
}

fn read_knn(r: &mut impl Read) -> std::result::Result<KnnModel, ReadError> {
    let dim = read_u64(r)? as usize;
    let k = read_u64(r)? as usize;
    let norm = read_norm(r)?;
    let class_count = read_u64(r)? as usize;
    let n = read_u64(r)? as usize;
    let mut features = Vec::with_capacity(n * dim);
    for _ in 0..n * dim {
        features.push(read_f64(r)?);
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(read_u32(r)?);
    }
    Ok(KnnModel {
        features,
        labels,
        dim,
        k,
        norm,
        class_count,
    })
}

fn write_forest(w: &mut impl Write, forest: &ForestModel) -> std::io::Result<()> {
    write_u64(w, forest.class_count as u64)?;
    write_u64(w, forest.dim as u64)?;
    write_u64(w, forest.trees.len() as u64)?;
    for tree in &forest.trees {
        write_u64(w, tree.nodes.len() as u64)?;
        for node in &tree.nodes {
            match node {
                Node::Leaf { label } => {
                    w.write_all(&[0u8])?;
                    w.write_all(&label.to_le_bytes())?;
                }
                Node::Split { feature, threshold, left, right } => {
                    w.write_all(&[1u8])?;
                    w.write_all(&feature.to_le_bytes())?;
                    w.write_all(&threshold.to_le_bytes())?;
                    w.write_all(&left.to_le_bytes())?;
                    w.write_all(&right.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

fn read_forest(r: &mut impl Read) -> std::result::Result<ForestModel, ReadError> {
    let class_count = read_u64(r)? as usize;
    let dim = read_u64(r)? as usize;
    let tree_count = read_u64(r)? as usize;
    let mut trees = Vec::with_capacity(tree_count);
    for _ in 0..tree_count {
        let node_count = read_u64(r)? as usize;
        let mut nodes = Vec::with_capacity(node_count);
        for _ in 0..node_count {
            let node = match read_u8(r)? {
                0 => Node::Leaf { label: read_u32(r)? },
                1 => Node::Split {
                    feature: read_u32(r)?,
                    threshold: read_f64(r)?,
                    left: read_u32(r)?,
                    right: read_u32(r)?,
                },
                tag => return Err(ReadError::Format(format!("unknown node tag {tag}"))),
            };
            nodes.push(node);
        }
        trees.push(DecisionTree { nodes });
    }
    Ok(ForestModel {
        trees,
        class_count,
        dim,
    })
}

fn write_norm(w: &mut impl Write, norm: NormMetric) -> std::io::Result<()> {
    w.write_all(&[match norm {
        NormMetric::Linf => 0u8,
        NormMetric::L2 => 1,
    }])
}

fn read_norm(r: &mut impl Read) -> std::result::Result<NormMetric, ReadError> {
    match read_u8(r)? {
        0 => Ok(NormMetric::Linf),
        1 => Ok(NormMetric::L2),
        tag => Err(ReadError::Format(format!("unknown norm tag {tag}"))),
    }
}

fn write_u64(w: &mut impl Write, v: u64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    write_u64(w, s.len() as u64)?;
    w.write_all(s.as_bytes())
}

fn read_u8(r: &mut impl Read) -> std::io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn read_u16(r: &mut impl Read) -> std::io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_str(r: &mut impl Read) -> std::result::Result<String, ReadError> {
    let len = read_u64(r)? as usize;
    if len > 1 << 32 {
        return Err(ReadError::Format(format!("string length {len} implausible")));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|_| ReadError::Format("invalid UTF-8 string".into()))
}
