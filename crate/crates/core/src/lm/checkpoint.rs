//! Portable checkpoint files: a JSON header with a named-array manifest,
//! followed by raw little-endian f64 arrays in manifest order.

use super::{AdamState, LmError, ModelConfig, Parameters};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::Path;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"ULAB";

/// A complete training state: parameters, optimizer moments, and the RNG
/// position of the loop that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub config: ModelConfig,
    pub params: Parameters,
    pub opt: AdamState,
    pub rng_state: [u64; 4],
}

impl ModelCheckpoint {
    pub fn new(config: ModelConfig, params: Parameters, opt: AdamState, rng_state: [u64; 4]) -> Self {
        Self {
            config,
            params,
            opt,
            rng_state,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    config: ModelConfig,
    adam_step: u64,
    rng_state: [u64; 4],
    manifest: Vec<ManifestEntry>,
}

fn tensor_shapes(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = cfg.d_model;
    let mut shapes = vec![
        ("tok_emb".to_string(), vec![cfg.vocab_size, d]),
        ("pos_emb".to_string(), vec![cfg.max_context, d]),
    ];
    for l in 0..cfg.n_layers {
        for (field, shape) in [
            ("attn_norm_gain", vec![d]),
            ("attn_norm_bias", vec![d]),
            ("wq", vec![d, d]),
            ("wk", vec![d, d]),
            ("wv", vec![d, d]),
            ("wo", vec![d, d]),
            ("ff_norm_gain", vec![d]),
            ("ff_norm_bias", vec![d]),
            ("w1", vec![cfg.d_ff, d]),
            ("w2", vec![d, cfg.d_ff]),
        ] {
            shapes.push((format!("layer{l}.{field}"), shape));
        }
    }
    shapes.push(("final_norm_gain".to_string(), vec![d]));
    shapes.push(("final_norm_bias".to_string(), vec![d]));
    shapes
}

pub fn save_checkpoint(ckpt: &ModelCheckpoint, path: impl AsRef<Path>) -> Result<(), LmError> {
    let shapes = tensor_shapes(&ckpt.config);
    let mut manifest = Vec::new();
    let mut offset = 0usize;
    for prefix in ["", "adam_m.", "adam_v."] {
        for (name, shape) in &shapes {
            let len: usize = shape.iter().product();
            manifest.push(ManifestEntry {
                name: format!("{prefix}{name}"),
                shape: shape.clone(),
                offset,
            });
            offset += len * 8;
        }
    }

    let header = Header {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        config: ckpt.config,
        adam_step: ckpt.opt.step,
        rng_state: ckpt.rng_state,
        manifest,
    };
    let header_json = serde_json::to_vec(&header).expect("header json");

    let mut out = Vec::with_capacity(16 + header_json.len() + offset);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&header_json);
    for source in [&ckpt.params, &ckpt.opt.m, &ckpt.opt.v] {
        for tensor in source.tensors() {
            for &x in tensor {
                out.write_all(&x.to_le_bytes()).expect("vec write");
            }
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelCheckpoint, LmError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(LmError::Schema("bad magic bytes".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() < 8 + header_len {
        return Err(LmError::Schema("truncated header".into()));
    }
    let header: Header = serde_json::from_slice(&bytes[8..8 + header_len])
        .map_err(|e| LmError::Schema(format!("bad header json: {e}")))?;
    if header.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(LmError::Schema(format!(
            "schema version {} unsupported (expected {CHECKPOINT_SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    header.config.validate()?;

    let shapes = tensor_shapes(&header.config);
    let expected_entries = 3 * shapes.len();
    if header.manifest.len() != expected_entries {
        return Err(LmError::Schema(format!(
            "manifest has {} entries, expected {expected_entries}",
            header.manifest.len()
        )));
    }

    let payload = &bytes[8 + header_len..];
    let read_into = |tensor: &mut Vec<f64>,
                         entry: &ManifestEntry,
                         expected_shape: &[usize]|
     -> Result<(), LmError> {
        if entry.shape != expected_shape {
            return Err(LmError::ShapeMismatch {
                tensor: entry.name.clone(),
                expected: expected_shape.iter().product(),
                got: entry.shape.iter().product(),
            });
        }
        let len: usize = entry.shape.iter().product();
        let end = entry.offset + len * 8;
        if end > payload.len() {
            return Err(LmError::Schema(format!(
                "array {} overruns the payload",
                entry.name
            )));
        }
        if tensor.len() != len {
            return Err(LmError::ShapeMismatch {
                tensor: entry.name.clone(),
                expected: tensor.len(),
                got: len,
            });
        }
        for (i, chunk) in payload[entry.offset..end].chunks_exact(8).enumerate() {
            tensor[i] = f64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(())
    };

    let mut params = Parameters::zeros(&header.config);
    let mut opt = AdamState::new(&header.config);
    opt.step = header.adam_step;

    for (block, target) in [&mut params, &mut opt.m, &mut opt.v].into_iter().enumerate() {
        let mut tensors = target.tensors_mut();
        for (i, (name, shape)) in shapes.iter().enumerate() {
            let entry = &header.manifest[block * shapes.len() + i];
            let expected_name = match block {
                0 => name.clone(),
                1 => format!("adam_m.{name}"),
                _ => format!("adam_v.{name}"),
            };
            if entry.name != expected_name {
                return Err(LmError::Schema(format!(
                    "manifest entry `{}` where `{expected_name}` was expected",
                    entry.name
                )));
            }
            read_into(tensors[i], entry, shape)?;
        }
    }

    Ok(ModelCheckpoint {
        config: header.config,
        params,
        opt,
        rng_state: header.rng_state,
    })
}
