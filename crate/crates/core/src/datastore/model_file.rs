//! Model weights as line-delimited JSON.
//!
//! ```text
//! {"kind":"header","format":"slipforge-model","format_version":1,"layer_dims":[64,128,64,32],...}
//! {"kind":"layer","index":0,"rows":128,"cols":64,"weights":[...],"biases":[...]}
//! ...
//! {"kind":"end","layers":3,"sha256":"<hex digest of every preceding byte>"}
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::write_atomically;
use crate::error::{Error, Result};
use crate::matcher::{Dense, EmbeddingModel, TrainingMeta};

pub const MODEL_FORMAT: &str = "slipforge-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header {
        format: String,
        format_version: u32,
        layer_dims: Vec<usize>,
        margin: f64,
        training: TrainingMeta,
    },
    Layer {
        index: usize,
        #[serde(flatten)]
        dense: Dense,
    },
    End {
        layers: usize,
        sha256: String,
    },
}

fn encode(line: &Line) -> Result<String> {
    serde_json::to_string(line).map_err(|e| Error::Input(e.to_string()))
}

fn payload(model: &EmbeddingModel) -> Result<String> {
    model.validate()?;
    let mut body = String::new();
    let header = Line::Header {
        format: MODEL_FORMAT.into(),
        format_version: MODEL_VERSION,
        layer_dims: model.layer_dims.clone(),
        margin: model.margin,
        training: model.training.clone(),
    };
    writeln!(body, "{}", encode(&header)?).unwrap();
    for (index, dense) in model.layers.iter().enumerate() {
        writeln!(body, "{}", encode(&Line::Layer { index, dense: dense.clone() })?).unwrap();
    }
    Ok(body)
}

/// Hex sha256 of the model's serialized weights; equals the trailer digest
/// of a saved file.
pub fn model_fingerprint(model: &EmbeddingModel) -> Result<String> {
    Ok(hex::encode(Sha256::digest(payload(model)?.as_bytes())))
}

pub fn save_model(path: impl AsRef<Path>, model: &EmbeddingModel) -> Result<()> {
    let mut body = payload(model)?;
    let digest = hex::encode(Sha256::digest(body.as_bytes()));
    writeln!(body, "{}", encode(&Line::End { layers: model.layers.len(), sha256: digest })?).unwrap();
    write_atomically(path.as_ref(), body.as_bytes())
}

/// Loads and verifies a model. Missing trailer, digest mismatch or any
/// unreadable line is an integrity error; a consistent file whose layers
/// disagree with its header dims is a shape error.
pub fn load_model(path: impl AsRef<Path>) -> Result<EmbeddingModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Error::Integrity(format!("{} is not UTF-8", path.display())))?;

    let trailer_start = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1).unwrap_or(0);
    let (payload, trailer) = text.split_at(trailer_start);
    let (layer_count, digest) = match serde_json::from_str::<Line>(trailer.trim()) {
        Ok(Line::End { layers, sha256 }) => (layers, sha256),
        _ => return Err(Error::Integrity(format!("{}: missing end record (truncated?)", path.display()))),
    };
    if hex::encode(Sha256::digest(payload.as_bytes())) != digest {
        return Err(Error::Integrity(format!("{}: checksum mismatch", path.display())));
    }

    let mut lines = payload.lines();
    let header = lines.next().ok_or_else(|| Error::Integrity("empty model file".into()))?;
    let header: serde_json::Value =
        serde_json::from_str(header).map_err(|e| Error::Integrity(format!("bad header: {e}")))?;
    if header.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(Error::Integrity(format!("{} is not a {MODEL_FORMAT} document", path.display())));
    }
    let version = header.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != MODEL_VERSION {
        return Err(Error::Version { found: version, expected: MODEL_VERSION });
    }
    let (layer_dims, margin, training) = match serde_json::from_value(header) {
        Ok(Line::Header { layer_dims, margin, training, .. }) => (layer_dims, margin, training),
        Ok(_) => return Err(Error::Integrity("first line must be the header".into())),
        Err(e) => return Err(Error::Integrity(format!("bad header: {e}"))),
    };

    let mut layers = Vec::new();
    for (i, raw) in lines.enumerate() {
        match serde_json::from_str::<Line>(raw) {
            Ok(Line::Layer { index, dense }) if index == i => layers.push(dense),
            Ok(Line::Layer { index, .. }) => {
                return Err(Error::Integrity(format!("layer {index} found where layer {i} expected")))
            }
            Ok(_) => return Err(Error::Integrity(format!("unexpected record at line {}", i + 2))),
            Err(e) => return Err(Error::Integrity(format!("line {}: {e}", i + 2))),
        }
    }
    if layers.len() != layer_count {
        return Err(Error::Integrity(format!("trailer promises {layer_count} layers, found {}", layers.len())));
    }
    let model = EmbeddingModel { layer_dims, layers, margin, training };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_edge_vector, EdgeRole};
    use crate::matcher::score_pair;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn roundtrip_preserves_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.jsonl");
        let mut model = EmbeddingModel::with_default_shape(0);
        model.training.loss_history = vec![0.3, 0.1 + 0.2];
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.trim_end().ends_with(&format!("\"{}\"}}", model_fingerprint(&back).unwrap())));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut edge = || {
            let raw: Vec<f64> = (0..64).map(|_| StandardNormal.sample(&mut rng)).collect();
            extract_edge_vector(&raw, EdgeRole::UpperBottom).unwrap()
        };
        for _ in 0..100 {
            let (a, b) = (edge(), edge());
            assert_eq!(score_pair(&model, &a, &b).unwrap(), score_pair(&back, &a, &b).unwrap());
        }
    }

    #[test]
    fn truncation_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.jsonl");
        save_model(&path, &EmbeddingModel::with_default_shape(0)).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        for cut in [bytes.len() / 3, bytes.len() - 20, 10] {
            std::fs::write(&path, &bytes[..cut]).unwrap();
            assert!(matches!(load_model(&path), Err(Error::Integrity(_))), "cut at {cut}");
        }
    }

    #[test]
    fn flipped_digit_is_integrity_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.jsonl");
        save_model(&path, &EmbeddingModel::with_default_shape(0)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let pos = text.find("\"weights\":[").unwrap() + 13;
        let mut bytes = text.into_bytes();
        bytes[pos] = if bytes[pos] == b'1' { b'2' } else { b'1' };
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Integrity(_))));
    }

    #[test]
    fn header_dims_mismatch_is_shape_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.jsonl");
        let model = EmbeddingModel::with_default_shape(0);
        // rewrite the header with wrong dims and a recomputed digest
        let mut body = String::new();
        let header = Line::Header {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_VERSION,
            layer_dims: vec![64, 100, 64, 32],
            margin: model.margin,
            training: model.training.clone(),
        };
        writeln!(body, "{}", encode(&header).unwrap()).unwrap();
        for (index, dense) in model.layers.iter().enumerate() {
            writeln!(body, "{}", encode(&Line::Layer { index, dense: dense.clone() }).unwrap()).unwrap();
        }
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        writeln!(body, "{}", encode(&Line::End { layers: 3, sha256: digest }).unwrap()).unwrap();
        std::fs::write(&path, body).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Shape(_))));
    }
}
