//! Tiny decoder-only autoregressive language model.
//!
//! Everything is f64 and single-threaded: the models are small enough that
//! exact, finite-difference-checkable gradients and bit-reproducible training
//! matter more than speed. Pre-norm blocks, learned absolute positional
//! embeddings, and an output projection tied to the token embedding.

mod adam;
mod checkpoint;
mod model;

pub use adam::{linear_lr, optimizer_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{load_checkpoint, save_checkpoint, ModelCheckpoint, CHECKPOINT_SCHEMA_VERSION};
pub use model::{forward, log_prob, loss_and_grad, probs, LogitMatrix, SequenceLoss, TokenTerm};

use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("sequence length {len} exceeds max_context {max}")]
    ContextOverflow { len: usize, max: usize },
    #[error("token id {id} outside vocabulary of size {vocab}")]
    TokenOutOfRange { id: u32, vocab: usize },
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("shape mismatch in {tensor}: expected {expected}, got {got}")]
    ShapeMismatch {
        tensor: String,
        expected: usize,
        got: usize,
    },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint schema error: {0}")]
    Schema(String),
}

/// Architecture and initialization parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_context: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LmError> {
        if self.vocab_size == 0
            || self.d_model == 0
            || self.n_layers == 0
            || self.n_heads == 0
            || self.d_ff == 0
            || self.max_context == 0
        {
            return Err(LmError::InvalidConfig("all dimensions must be >= 1".into()));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(LmError::InvalidConfig(format!(
                "d_model {} not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// The desk-scale default used by the experiment pipeline.
    pub fn desk(vocab_size: usize, seed: u64) -> Self {
        Self {
            vocab_size,
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
            max_context: 96,
            seed,
        }
    }
}

/// One transformer block's parameters. Norm gains are stored as offsets from
/// one, so a zero-initialized gain is an identity scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub attn_norm_gain: Vec<f64>,
    pub attn_norm_bias: Vec<f64>,
    pub wq: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
    pub wo: Vec<f64>,
    pub ff_norm_gain: Vec<f64>,
    pub ff_norm_bias: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

/// All model parameters as named dense arrays. The same container doubles as
/// gradient and moment storage since those share every shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub tok_emb: Vec<f64>,
    pub pos_emb: Vec<f64>,
    pub layers: Vec<LayerParams>,
    pub final_norm_gain: Vec<f64>,
    pub final_norm_bias: Vec<f64>,
}

impl Parameters {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let d = cfg.d_model;
        let layer = LayerParams {
            attn_norm_gain: vec![0.0; d],
            attn_norm_bias: vec![0.0; d],
            wq: vec![0.0; d * d],
            wk: vec![0.0; d * d],
            wv: vec![0.0; d * d],
            wo: vec![0.0; d * d],
            ff_norm_gain: vec![0.0; d],
            ff_norm_bias: vec![0.0; d],
            w1: vec![0.0; cfg.d_ff * d],
            w2: vec![0.0; d * cfg.d_ff],
        };
        Self {
            tok_emb: vec![0.0; cfg.vocab_size * d],
            pos_emb: vec![0.0; cfg.max_context * d],
            layers: vec![layer; cfg.n_layers],
            final_norm_gain: vec![0.0; d],
            final_norm_bias: vec![0.0; d],
        }
    }

    /// Canonical tensor names, in manifest order.
    pub fn tensor_names(n_layers: usize) -> Vec<String> {
        let mut names = vec!["tok_emb".to_string(), "pos_emb".to_string()];
        for l in 0..n_layers {
            for field in [
                "attn_norm_gain",
                "attn_norm_bias",
                "wq",
                "wk",
                "wv",
                "wo",
                "ff_norm_gain",
                "ff_norm_bias",
                "w1",
                "w2",
            ] {
                names.push(format!("layer{l}.{field}"));
            }
        }
        names.push("final_norm_gain".to_string());
        names.push("final_norm_bias".to_string());
        names
    }

    /// Tensors in the same order as [`Parameters::tensor_names`].
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out: Vec<&Vec<f64>> = vec![&self.tok_emb, &self.pos_emb];
        for l in &self.layers {
            out.extend([
                &l.attn_norm_gain,
                &l.attn_norm_bias,
                &l.wq,
                &l.wk,
                &l.wv,
                &l.wo,
                &l.ff_norm_gain,
                &l.ff_norm_bias,
                &l.w1,
                &l.w2,
            ]);
        }
        out.push(&self.final_norm_gain);
        out.push(&self.final_norm_bias);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = vec![&mut self.tok_emb, &mut self.pos_emb];
        for l in &mut self.layers {
            out.extend([
                &mut l.attn_norm_gain,
                &mut l.attn_norm_bias,
                &mut l.wq,
                &mut l.wk,
                &mut l.wv,
                &mut l.wo,
                &mut l.ff_norm_gain,
                &mut l.ff_norm_bias,
                &mut l.w1,
                &mut l.w2,
            ]);
        }
        out.push(&mut self.final_norm_gain);
        out.push(&mut self.final_norm_bias);
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// Error unless `other` has exactly the same tensor shapes.
    pub fn check_same_shape(&self, other: &Parameters) -> Result<(), LmError> {
        let a = self.tensors();
        let b = other.tensors();
        if a.len() != b.len() {
            return Err(LmError::ShapeMismatch {
                tensor: "tensor count".into(),
                expected: a.len(),
                got: b.len(),
            });
        }
        let names = Self::tensor_names(self.layers.len());
        for ((x, y), name) in a.iter().zip(b.iter()).zip(names) {
            if x.len() != y.len() {
                return Err(LmError::ShapeMismatch {
                    tensor: name,
                    expected: x.len(),
                    got: y.len(),
                });
            }
        }
        Ok(())
    }
}

/// Deterministic initialization: uniform embeddings, Xavier-uniform linear
/// maps, identity norms. Every entry lies strictly inside (-1, 1).
pub fn init_model(cfg: &ModelConfig) -> Result<Parameters, LmError> {
    cfg.validate()?;
    let mut rng = Rng::new(cfg.seed);
    let mut params = Parameters::zeros(cfg);

    const EMB_SCALE: f64 = 0.1;
    for x in params.tok_emb.iter_mut().chain(params.pos_emb.iter_mut()) {
        *x = rng.uniform_in(-EMB_SCALE, EMB_SCALE);
    }

    let d = cfg.d_model;
    let f = cfg.d_ff;
    let xavier = |w: &mut [f64], fan_out: usize, fan_in: usize, rng: &mut Rng| {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for x in w.iter_mut() {
            *x = rng.uniform_in(-limit, limit);
        }
    };
    for layer in &mut params.layers {
        xavier(&mut layer.wq, d, d, &mut rng);
        xavier(&mut layer.wk, d, d, &mut rng);
        xavier(&mut layer.wv, d, d, &mut rng);
        xavier(&mut layer.wo, d, d, &mut rng);
        xavier(&mut layer.w1, f, d, &mut rng);
        xavier(&mut layer.w2, d, f, &mut rng);
        // Norm gains/biases stay zero: identity normalization at init.
    }
    Ok(params)
}
