//! The unlearning loss family and the three training procedures: reference
//! finetuning, retain-only retraining, and unlearning proper.
//!
//! Every objective is a weighted sum of per-token log-probabilities, so all
//! of them flow through [`lm::loss_and_grad`] with per-position coefficients.
//! Weights are computed from a detached forward pass and enter the loss as
//! constants; the optimizer never differentiates through them.

use crate::corpus::{tokenize_all, CorpusError, CorpusSplit, TokenizedSample, Tokenizer};
use crate::lm::{
    forward, init_model, linear_lr, log_prob, loss_and_grad, optimizer_step, probs, AdamState,
    LmError, ModelCheckpoint, ModelConfig, Parameters, SequenceLoss, TokenTerm,
};
use crate::rng::Rng;
use crate::weighting::{self, etw_is_degenerate, Method, TokenWeights, WeightError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Weight(#[from] WeightError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("weights length {weights} does not match completion length {completion}")]
    WeightLengthMismatch { weights: usize, completion: usize },
    #[error("method requires a reference checkpoint")]
    MissingReference,
    #[error("training set is empty")]
    EmptyTrainingSet,
}

/// A weighting method with its hyperparameters resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum UnlearnMethod {
    Uniform,
    Etw { temperature: f64 },
    Wga { alpha: f64 },
    Imp,
    SatImp { alpha: f64 },
    Tnpo { beta: f64 },
    MaskNounLike,
    MaskEntityLike,
}

impl UnlearnMethod {
    pub fn method(&self) -> Method {
        match self {
            UnlearnMethod::Uniform => Method::Uniform,
            UnlearnMethod::Etw { .. } => Method::Etw,
            UnlearnMethod::Wga { .. } => Method::Wga,
            UnlearnMethod::Imp => Method::Imp,
            UnlearnMethod::SatImp { .. } => Method::SatImp,
            UnlearnMethod::Tnpo { .. } => Method::Tnpo,
            UnlearnMethod::MaskNounLike => Method::MaskNounLike,
            UnlearnMethod::MaskEntityLike => Method::MaskEntityLike,
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            UnlearnMethod::Etw { temperature } => Some(*temperature),
            _ => None,
        }
    }

    pub fn needs_reference(&self) -> bool {
        matches!(self, UnlearnMethod::Tnpo { .. })
    }

    pub fn validate(&self) -> Result<(), ObjectiveError> {
        let bad = |name: &str, v: f64| {
            Err(ObjectiveError::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )))
        };
        match *self {
            UnlearnMethod::Etw { temperature } if temperature <= 0.0 => {
                bad("temperature", temperature)
            }
            UnlearnMethod::Wga { alpha } if alpha <= 0.0 => bad("alpha", alpha),
            UnlearnMethod::SatImp { alpha } if alpha <= 0.0 => bad("alpha", alpha),
            UnlearnMethod::Tnpo { beta } if beta <= 0.0 => bad("beta", beta),
            _ => Ok(()),
        }
    }
}

/// Finetuning / retraining hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        if self.epochs == 0 || self.batch_size == 0 || self.lr < 0.0 || !self.lr.is_finite() {
            return Err(ObjectiveError::InvalidConfig(format!(
                "bad train config: epochs {}, lr {}, batch_size {}",
                self.epochs, self.lr, self.batch_size
            )));
        }
        Ok(())
    }
}

/// Unlearning run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnConfig {
    pub method: UnlearnMethod,
    /// Forget-loss multiplier in the combined objective.
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Epochs (1-based) after which a checkpoint is recorded.
    pub checkpoint_epochs: Vec<usize>,
    /// Abort threshold on |forget loss|; gradient ascent can diverge.
    pub divergence_ceiling: f64,
}

impl UnlearnConfig {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        self.method.validate()?;
        if self.lambda < 0.0
            || !self.lambda.is_finite()
            || self.epochs == 0
            || self.batch_size == 0
            || self.lr < 0.0
            || !self.lr.is_finite()
            || self.divergence_ceiling <= 0.0
        {
            return Err(ObjectiveError::InvalidConfig(format!(
                "bad unlearn config: lambda {}, epochs {}, lr {}, batch_size {}, ceiling {}",
                self.lambda, self.epochs, self.lr, self.batch_size, self.divergence_ceiling
            )));
        }
        if self.checkpoint_epochs.is_empty() {
            return Err(ObjectiveError::InvalidConfig(
                "checkpoint_epochs must name at least one epoch".into(),
            ));
        }
        if self
            .checkpoint_epochs
            .iter()
            .any(|&e| e == 0 || e > self.epochs)
        {
            return Err(ObjectiveError::InvalidConfig(format!(
                "checkpoint_epochs {:?} outside 1..={}",
                self.checkpoint_epochs, self.epochs
            )));
        }
        Ok(())
    }
}

/// Ground-truth token probabilities of the completion under `params`,
/// teacher-forced, softmax at the given temperature.
pub fn completion_gt_probs(
    params: &Parameters,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
    temperature: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    let seq = sample.full_sequence();
    let logits = forward(params, cfg, &seq)?;
    let m = sample.prompt_ids.len();
    sample
        .completion_ids
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let p = probs(logits.row(m - 1 + i), temperature)?;
            Ok(p[y as usize])
        })
        .collect()
}

/// Per-token predictive entropies over the completion positions, with the
/// softmax taken at `temperature`.
pub fn completion_entropies(
    params: &Parameters,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
    temperature: f64,
) -> Result<Vec<f64>, ObjectiveError> {
    let seq = sample.full_sequence();
    let logits = forward(params, cfg, &seq)?;
    let m = sample.prompt_ids.len();
    (0..sample.completion_ids.len())
        .map(|i| {
            let p = probs(logits.row(m - 1 + i), temperature)?;
            Ok(weighting::token_entropy(&p)?)
        })
        .collect()
}

/// Log-probabilities of `completion` tokens given `prompt`, teacher-forced.
pub fn completion_log_probs(
    params: &Parameters,
    cfg: &ModelConfig,
    prompt: &[u32],
    completion: &[u32],
) -> Result<Vec<f64>, ObjectiveError> {
    let mut seq = Vec::with_capacity(prompt.len() + completion.len());
    seq.extend_from_slice(prompt);
    seq.extend_from_slice(completion);
    let logits = forward(params, cfg, &seq)?;
    let m = prompt.len();
    Ok(completion
        .iter()
        .enumerate()
        .map(|(i, &y)| log_prob(logits.row(m - 1 + i), y))
        .collect())
}

/// Token weights for one forget sample under `method`, computed from a
/// detached snapshot of the current parameters (`params` itself; the result
/// never carries gradient). TNPO additionally needs the frozen reference.
pub fn compute_weights(
    params: &Parameters,
    ref_params: Option<&Parameters>,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
    method: &UnlearnMethod,
) -> Result<TokenWeights, ObjectiveError> {
    let n = sample.completion_len();
    let weights = match method {
        UnlearnMethod::Uniform => weighting::uniform_weights(n)?,
        UnlearnMethod::Etw { temperature } => {
            let entropies = completion_entropies(params, cfg, sample, *temperature)?;
            weighting::etw_weights(&entropies, *temperature)?
        }
        UnlearnMethod::Wga { alpha } => {
            let gt = completion_gt_probs(params, cfg, sample, 1.0)?;
            weighting::wga_weights(&gt, *alpha)?
        }
        UnlearnMethod::Imp => {
            let gt = completion_gt_probs(params, cfg, sample, 1.0)?;
            weighting::imp_weights(&gt)?
        }
        UnlearnMethod::SatImp { alpha } => {
            let gt = completion_gt_probs(params, cfg, sample, 1.0)?;
            weighting::satimp_weights(&gt, *alpha)?
        }
        UnlearnMethod::Tnpo { beta } => {
            let reference = ref_params.ok_or(ObjectiveError::MissingReference)?;
            let gt = completion_gt_probs(params, cfg, sample, 1.0)?;
            let ref_gt = completion_gt_probs(reference, cfg, sample, 1.0)?;
            weighting::tnpo_weights(&gt, &ref_gt, *beta)?
        }
        UnlearnMethod::MaskNounLike => {
            weighting::mask_weights(&sample.noun_like_mask, Method::MaskNounLike)?
        }
        UnlearnMethod::MaskEntityLike => {
            weighting::mask_weights(&sample.entity_like_mask, Method::MaskEntityLike)?
        }
    };
    Ok(weights)
}

fn completion_terms(sample: &TokenizedSample, coeffs: &[f64]) -> Vec<TokenTerm> {
    let m = sample.prompt_ids.len();
    sample
        .completion_ids
        .iter()
        .zip(coeffs)
        .enumerate()
        .map(|(i, (&y, &c))| TokenTerm {
            pos: m - 1 + i,
            target: y,
            coeff: c,
        })
        .collect()
}

/// Standard cross-entropy of the completion given the prompt: the retain
/// loss. Nonnegative; sums over completion tokens.
pub fn retain_loss(
    params: &Parameters,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
) -> Result<f64, ObjectiveError> {
    let lps = completion_log_probs(params, cfg, &sample.prompt_ids, &sample.completion_ids)?;
    let loss = -lps.iter().sum::<f64>();
    if !loss.is_finite() {
        return Err(ObjectiveError::Lm(LmError::NumericFailure(format!(
            "non-finite retain loss {loss}"
        ))));
    }
    Ok(loss)
}

/// Token-wise weighted gradient-ascent loss: `sum w_i * ln p(y_i | ...)`.
/// With all-ones weights this is exactly the negated retain loss.
pub fn weighted_ga_loss(
    params: &Parameters,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
    weights: &TokenWeights,
) -> Result<f64, ObjectiveError> {
    if weights.len() != sample.completion_len() {
        return Err(ObjectiveError::WeightLengthMismatch {
            weights: weights.len(),
            completion: sample.completion_len(),
        });
    }
    let lps = completion_log_probs(params, cfg, &sample.prompt_ids, &sample.completion_ids)?;
    let loss = lps
        .iter()
        .zip(&weights.weights)
        .map(|(lp, w)| w * lp)
        .sum::<f64>();
    if !loss.is_finite() {
        return Err(ObjectiveError::Lm(LmError::NumericFailure(format!(
            "non-finite weighted forget loss {loss}"
        ))));
    }
    Ok(loss)
}

/// The combined unlearning objective on one retain/forget sample pair:
/// retain loss plus lambda times the weighted forget loss, with forget
/// weights computed fresh from the current parameters.
pub fn combined_objective(
    params: &Parameters,
    ref_params: Option<&Parameters>,
    cfg: &ModelConfig,
    retain_sample: &TokenizedSample,
    forget_sample: &TokenizedSample,
    config: &UnlearnConfig,
) -> Result<f64, ObjectiveError> {
    config.validate()?;
    let weights = compute_weights(params, ref_params, cfg, forget_sample, &config.method)?;
    let lr = retain_loss(params, cfg, retain_sample)?;
    let lf = weighted_ga_loss(params, cfg, forget_sample, &weights)?;
    Ok(lr + config.lambda * lf)
}

/// Per-epoch training log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
}

/// Summary statistics of the forget-token weights used in one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    pub sum: f64,
    pub tokens: usize,
}

impl OmegaStats {
    fn from_weights(all: &[f64]) -> Self {
        let tokens = all.len();
        let sum: f64 = all.iter().sum();
        let min = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self {
            min,
            mean: sum / tokens.max(1) as f64,
            max,
            sum,
            tokens,
        }
    }
}

/// Per-step unlearning log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub retain_loss: f64,
    pub forget_loss: f64,
    pub lambda: f64,
    pub method: String,
    pub omega_stats: OmegaStats,
    /// True when ETW hit the all-zero-entropy fallback on this step.
    pub etw_fallback: bool,
}

/// Result of an unlearning run. On divergence the run stops early and keeps
/// every checkpoint recorded up to that point.
#[derive(Debug, Clone)]
pub struct UnlearnOutcome {
    pub checkpoints: Vec<(usize, ModelCheckpoint)>,
    pub log: Vec<StepRecord>,
    pub divergence: Option<String>,
}

fn check_context(cfg: &ModelConfig, samples: &[TokenizedSample]) -> Result<(), ObjectiveError> {
    let longest = samples
        .iter()
        .map(|s| s.prompt_ids.len() + s.completion_ids.len())
        .max()
        .unwrap_or(0);
    if longest > cfg.max_context {
        return Err(ObjectiveError::InvalidConfig(format!(
            "longest sample ({longest} tokens) exceeds max_context {}",
            cfg.max_context
        )));
    }
    Ok(())
}

/// Train from random init on `samples` with plain completion cross-entropy,
/// mean over batch samples, linear learning-rate decay to zero.
fn train(
    samples: &[TokenizedSample],
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<EpochRecord>), ObjectiveError> {
    train_cfg.validate()?;
    model_cfg.validate()?;
    if samples.is_empty() {
        return Err(ObjectiveError::EmptyTrainingSet);
    }
    check_context(model_cfg, samples)?;

    let sequences: Vec<Vec<u32>> = samples.iter().map(|s| s.full_sequence()).collect();
    let mut params = init_model(model_cfg)?;
    let mut opt = AdamState::new(model_cfg);
    let mut rng = Rng::new(train_cfg.seed);

    let n = samples.len();
    let steps_per_epoch = n.div_ceil(train_cfg.batch_size);
    let total_steps = (train_cfg.epochs * steps_per_epoch) as u64;
    let mut step = 0u64;
    let mut log = Vec::with_capacity(train_cfg.epochs);

    for epoch in 1..=train_cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let mut epoch_loss_sum = 0.0;

        for chunk in order.chunks(train_cfg.batch_size) {
            let inv = 1.0 / chunk.len() as f64;
            let batch: Vec<SequenceLoss> = chunk
                .iter()
                .map(|&i| SequenceLoss {
                    ids: &sequences[i],
                    terms: completion_terms(&samples[i], &vec![-inv; samples[i].completion_len()]),
                })
                .collect();
            let (mean_loss, grads) = loss_and_grad(&params, model_cfg, &batch)?;
            let lr = linear_lr(train_cfg.lr, step, total_steps);
            optimizer_step(&mut params, &grads, &mut opt, lr)?;
            step += 1;
            epoch_loss_sum += mean_loss * chunk.len() as f64;
        }

        log.push(EpochRecord {
            epoch,
            mean_loss: epoch_loss_sum / n as f64,
        });
    }

    Ok((
        ModelCheckpoint::new(*model_cfg, params, opt, rng.state()),
        log,
    ))
}

/// Fine-tune the reference model on the forget and retain sets together.
/// Holdout authors are never seen.
pub fn train_reference(
    corpus: &CorpusSplit,
    tokenizer: &Tokenizer,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<EpochRecord>), ObjectiveError> {
    let mut pairs = corpus.forget.clone();
    pairs.extend(corpus.retain.iter().cloned());
    let samples = tokenize_all(tokenizer, &pairs)?;
    train(&samples, model_cfg, train_cfg)
}

/// Train the retrained baseline on the retain set only: the unlearning gold
/// standard.
pub fn train_retain_only(
    corpus: &CorpusSplit,
    tokenizer: &Tokenizer,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<(ModelCheckpoint, Vec<EpochRecord>), ObjectiveError> {
    let samples = tokenize_all(tokenizer, &corpus.retain)?;
    train(&samples, model_cfg, train_cfg)
}

/// Run token-weighted unlearning from a reference checkpoint.
///
/// One epoch is a pass over the retain set; each step pairs one retain batch
/// with one forget batch (the forget stream reshuffles and cycles when
/// exhausted) and minimizes `retain + lambda * forget`. Forget weights are
/// recomputed from the current parameters every step; TNPO's reference
/// probabilities stay frozen at the reference checkpoint.
pub fn run_unlearning(
    reference: &ModelCheckpoint,
    corpus: &CorpusSplit,
    tokenizer: &Tokenizer,
    config: &UnlearnConfig,
) -> Result<UnlearnOutcome, ObjectiveError> {
    config.validate()?;
    let model_cfg = &reference.config;
    if model_cfg.vocab_size != tokenizer.vocab_size() {
        return Err(ObjectiveError::InvalidConfig(format!(
            "checkpoint vocab {} != tokenizer vocab {}",
            model_cfg.vocab_size,
            tokenizer.vocab_size()
        )));
    }
    let retain = tokenize_all(tokenizer, &corpus.retain)?;
    let forget = tokenize_all(tokenizer, &corpus.forget)?;
    if retain.is_empty() || forget.is_empty() {
        return Err(ObjectiveError::EmptyTrainingSet);
    }
    check_context(model_cfg, &retain)?;
    check_context(model_cfg, &forget)?;

    let retain_seqs: Vec<Vec<u32>> = retain.iter().map(|s| s.full_sequence()).collect();
    let forget_seqs: Vec<Vec<u32>> = forget.iter().map(|s| s.full_sequence()).collect();

    let ref_params = config.method.needs_reference().then(|| reference.params.clone());

    let mut params = reference.params.clone();
    let mut opt = AdamState::new(model_cfg);
    let mut rng = Rng::new(config.seed);

    let n_retain = retain.len();
    let forget_batch_size = config.batch_size.min(forget.len());
    let steps_per_epoch = n_retain.div_ceil(config.batch_size);
    let total_steps = (config.epochs * steps_per_epoch) as u64;

    // Cycling shuffled forget stream.
    let mut forget_order: Vec<usize> = (0..forget.len()).collect();
    rng.shuffle(&mut forget_order);
    let mut forget_cursor = 0usize;
    let mut next_forget_batch = |rng: &mut Rng| -> Vec<usize> {
        let mut out = Vec::with_capacity(forget_batch_size);
        for _ in 0..forget_batch_size {
            if forget_cursor == forget_order.len() {
                rng.shuffle(&mut forget_order);
                forget_cursor = 0;
            }
            out.push(forget_order[forget_cursor]);
            forget_cursor += 1;
        }
        out
    };

    let mut checkpoints = Vec::new();
    let mut log = Vec::new();
    let mut divergence = None;
    let mut step = 0u64;

    'epochs: for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..n_retain).collect();
        rng.shuffle(&mut order);

        for chunk in order.chunks(config.batch_size) {
            let forget_idx = next_forget_batch(&mut rng);

            // Detached weight computation for this step's forget batch.
            let mut omega_all = Vec::new();
            let mut etw_fallback = false;
            let mut forget_weights = Vec::with_capacity(forget_idx.len());
            for &fi in &forget_idx {
                let w = if let UnlearnMethod::Etw { temperature } = config.method {
                    let entropies =
                        completion_entropies(&params, model_cfg, &forget[fi], temperature)?;
                    etw_fallback |= etw_is_degenerate(&entropies);
                    weighting::etw_weights(&entropies, temperature)?
                } else {
                    compute_weights(&params, ref_params.as_ref(), model_cfg, &forget[fi], &config.method)?
                };
                omega_all.extend_from_slice(&w.weights);
                forget_weights.push(w);
            }

            let retain_inv = 1.0 / chunk.len() as f64;
            let retain_batch: Vec<SequenceLoss> = chunk
                .iter()
                .map(|&i| SequenceLoss {
                    ids: &retain_seqs[i],
                    terms: completion_terms(&retain[i], &vec![-retain_inv; retain[i].completion_len()]),
                })
                .collect();

            let forget_inv = 1.0 / forget_idx.len() as f64;
            let forget_batch: Vec<SequenceLoss> = forget_idx
                .iter()
                .zip(&forget_weights)
                .map(|(&fi, w)| {
                    let coeffs: Vec<f64> =
                        w.weights.iter().map(|&wi| wi * forget_inv).collect();
                    SequenceLoss {
                        ids: &forget_seqs[fi],
                        terms: completion_terms(&forget[fi], &coeffs),
                    }
                })
                .collect();

            let step_result = (|| -> Result<(f64, f64, Parameters), LmError> {
                let (retain_mean, mut grads) = loss_and_grad(&params, model_cfg, &retain_batch)?;
                let (forget_mean, forget_grads) =
                    loss_and_grad(&params, model_cfg, &forget_batch)?;
                add_scaled(&mut grads, &forget_grads, config.lambda);
                Ok((retain_mean, forget_mean, grads))
            })();

            let (retain_mean, forget_mean, grads) = match step_result {
                Ok(v) => v,
                Err(LmError::NumericFailure(msg)) => {
                    divergence = Some(format!("numeric failure at step {}: {msg}", step + 1));
                    break 'epochs;
                }
                Err(e) => return Err(e.into()),
            };

            if forget_mean.abs() > config.divergence_ceiling {
                divergence = Some(format!(
                    "forget loss {forget_mean} exceeded ceiling {} at step {}",
                    config.divergence_ceiling,
                    step + 1
                ));
                break 'epochs;
            }

            let lr = linear_lr(config.lr, step, total_steps);
            optimizer_step(&mut params, &grads, &mut opt, lr)?;
            step += 1;

            log.push(StepRecord {
                step: step as usize,
                epoch,
                retain_loss: retain_mean,
                forget_loss: forget_mean,
                lambda: config.lambda,
                method: config.method.method().name().to_string(),
                omega_stats: OmegaStats::from_weights(&omega_all),
                etw_fallback,
            });
        }

        if config.checkpoint_epochs.contains(&epoch) {
            checkpoints.push((
                epoch,
                ModelCheckpoint::new(*model_cfg, params.clone(), opt.clone(), rng.state()),
            ));
        }
    }

    Ok(UnlearnOutcome {
        checkpoints,
        log,
        divergence,
    })
}

/// grads += scale * other, tensor by tensor.
fn add_scaled(grads: &mut Parameters, other: &Parameters, scale: f64) {
    let mut a = grads.tensors_mut();
    let b = other.tensors();
    for (ta, tb) in a.iter_mut().zip(b.iter()) {
        for (x, y) in ta.iter_mut().zip(tb.iter()) {
            *x += scale * y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, tokenize, Tokenizer};

    fn small_setup() -> (CorpusSplit, Tokenizer, ModelConfig) {
        let corpus = generate_corpus(11, 6, 3, 0.2, 2).unwrap();
        let tokenizer = Tokenizer::from_split(&corpus);
        let cfg = ModelConfig {
            vocab_size: tokenizer.vocab_size(),
            d_model: 16,
            n_layers: 1,
            n_heads: 2,
            d_ff: 32,
            max_context: 48,
            seed: 3,
        };
        (corpus, tokenizer, cfg)
    }

    fn quick_train_cfg() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            lr: 2e-3,
            batch_size: 6,
            seed: 17,
        }
    }

    #[test]
    fn uniform_weighted_ga_is_negated_retain_loss() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let sample = tokenize(&tok, &corpus.retain[0]).unwrap();
        let w = weighting::uniform_weights(sample.completion_len()).unwrap();
        let lr = retain_loss(&params, &cfg, &sample).unwrap();
        let lga = weighted_ga_loss(&params, &cfg, &sample, &w).unwrap();
        assert!((lga + lr).abs() < 1e-12 * lr.abs().max(1.0));
        assert!(lr >= 0.0);
    }

    #[test]
    fn retain_loss_of_uniform_model_is_n_log_vocab() {
        // Zero parameters give identical logits everywhere: the uniform model.
        let (corpus, tok, cfg) = small_setup();
        let params = Parameters::zeros(&cfg);
        let sample = tokenize(&tok, &corpus.retain[0]).unwrap();
        let n = sample.completion_len() as f64;
        let expected = n * (cfg.vocab_size as f64).ln();
        let lr = retain_loss(&params, &cfg, &sample).unwrap();
        assert!((lr - expected).abs() < 1e-9);
    }

    #[test]
    fn retain_loss_matches_explicit_chain_product() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let sample = tokenize(&tok, &corpus.retain[1]).unwrap();

        // Oracle: product of per-position ground-truth probabilities.
        let seq = sample.full_sequence();
        let logits = forward(&params, &cfg, &seq).unwrap();
        let m = sample.prompt_ids.len();
        let mut product = 1.0f64;
        for (i, &y) in sample.completion_ids.iter().enumerate() {
            let p = probs(logits.row(m - 1 + i), 1.0).unwrap();
            product *= p[y as usize];
        }
        let lr = retain_loss(&params, &cfg, &sample).unwrap();
        assert!((lr - (-product.ln())).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_give_zero_loss() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let sample = tokenize(&tok, &corpus.forget[0]).unwrap();
        let w = weighting::mask_weights(&vec![false; sample.completion_len()], Method::MaskNounLike)
            .unwrap();
        let l = weighted_ga_loss(&params, &cfg, &sample, &w).unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn weight_length_mismatch_is_rejected() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let sample = tokenize(&tok, &corpus.forget[0]).unwrap();
        let w = weighting::uniform_weights(sample.completion_len() + 1).unwrap();
        assert!(matches!(
            weighted_ga_loss(&params, &cfg, &sample, &w),
            Err(ObjectiveError::WeightLengthMismatch { .. })
        ));
    }

    #[test]
    fn combined_objective_lambda_zero_is_retain_only() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let r = tokenize(&tok, &corpus.retain[0]).unwrap();
        let f = tokenize(&tok, &corpus.forget[0]).unwrap();
        let config = UnlearnConfig {
            method: UnlearnMethod::Uniform,
            lambda: 0.0,
            epochs: 1,
            lr: 1e-3,
            batch_size: 4,
            seed: 1,
            checkpoint_epochs: vec![1],
            divergence_ceiling: 1e4,
        };
        let combined = combined_objective(&params, None, &cfg, &r, &f, &config).unwrap();
        let lr = retain_loss(&params, &cfg, &r).unwrap();
        assert!((combined - lr).abs() < 1e-12);
    }

    #[test]
    fn combined_objective_is_linear_in_lambda() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let r = tokenize(&tok, &corpus.retain[0]).unwrap();
        let f = tokenize(&tok, &corpus.forget[0]).unwrap();
        let make = |lambda: f64| UnlearnConfig {
            method: UnlearnMethod::Etw { temperature: 1.0 },
            lambda,
            epochs: 1,
            lr: 1e-3,
            batch_size: 4,
            seed: 1,
            checkpoint_epochs: vec![1],
            divergence_ceiling: 1e4,
        };
        let l0 = combined_objective(&params, None, &cfg, &r, &f, &make(0.0)).unwrap();
        let l1 = combined_objective(&params, None, &cfg, &r, &f, &make(0.1)).unwrap();
        let l2 = combined_objective(&params, None, &cfg, &r, &f, &make(0.2)).unwrap();
        // Doubling lambda doubles the forget contribution.
        assert!(((l2 - l0) - 2.0 * (l1 - l0)).abs() < 1e-10);
    }

    #[test]
    fn tnpo_without_reference_errors() {
        let (corpus, tok, cfg) = small_setup();
        let params = init_model(&cfg).unwrap();
        let f = tokenize(&tok, &corpus.forget[0]).unwrap();
        assert!(matches!(
            compute_weights(&params, None, &cfg, &f, &UnlearnMethod::Tnpo { beta: 4.0 }),
            Err(ObjectiveError::MissingReference)
        ));
    }

    #[test]
    fn reference_training_learns_and_is_deterministic() {
        let (corpus, tok, cfg) = small_setup();
        let (ckpt_a, log_a) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let (ckpt_b, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        assert_eq!(ckpt_a, ckpt_b);
        assert!(
            log_a.last().unwrap().mean_loss < log_a.first().unwrap().mean_loss,
            "training loss did not decrease: {log_a:?}"
        );
    }

    #[test]
    fn retrain_differs_from_reference_under_same_seed() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let (retrain, _) = train_retain_only(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        assert_ne!(reference.params, retrain.params);
    }

    #[test]
    fn unlearning_runs_and_checkpoints_requested_epochs() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let config = UnlearnConfig {
            method: UnlearnMethod::Etw { temperature: 1.0 },
            lambda: 0.05,
            epochs: 4,
            lr: 1e-3,
            batch_size: 4,
            seed: 5,
            checkpoint_epochs: vec![2, 4],
            divergence_ceiling: 1e4,
        };
        let outcome = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        assert!(outcome.divergence.is_none());
        assert_eq!(
            outcome.checkpoints.iter().map(|(e, _)| *e).collect::<Vec<_>>(),
            vec![2, 4]
        );
        assert!(!outcome.log.is_empty());
        // ETW: weight sum equals token count on every step.
        for rec in &outcome.log {
            assert!(
                (rec.omega_stats.sum - rec.omega_stats.tokens as f64).abs() < 1e-6,
                "ETW sum-to-n identity violated at step {}",
                rec.step
            );
        }
    }

    #[test]
    fn unlearning_is_deterministic() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let config = UnlearnConfig {
            method: UnlearnMethod::Wga { alpha: 5.0 },
            lambda: 0.05,
            epochs: 2,
            lr: 1e-3,
            batch_size: 4,
            seed: 5,
            checkpoint_epochs: vec![2],
            divergence_ceiling: 1e4,
        };
        let a = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        let b = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        assert_eq!(a.checkpoints[0].1, b.checkpoints[0].1);
        assert_eq!(a.log, b.log);
    }

    #[test]
    fn lambda_zero_uniform_run_only_drifts_via_retain() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let config = UnlearnConfig {
            method: UnlearnMethod::Uniform,
            lambda: 0.0,
            epochs: 1,
            lr: 1e-3,
            batch_size: 4,
            seed: 5,
            checkpoint_epochs: vec![1],
            divergence_ceiling: 1e4,
        };
        let outcome = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        assert!(outcome.divergence.is_none());
        // Parameters moved (retain drift)...
        assert_ne!(outcome.checkpoints[0].1.params, reference.params);
        // ...but the forget gradient contribution was identically zero, which
        // shows up as the run being identical to a pure-retain run.
        let forget_first = outcome.log[0].forget_loss;
        assert!(forget_first <= 0.0, "forget loss is a sum of log-probs");
    }

    #[test]
    fn etw_weights_change_as_parameters_move() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let probe = tokenize(&tok, &corpus.forget[0]).unwrap();
        let method = UnlearnMethod::Etw { temperature: 1.0 };
        let w_ref =
            compute_weights(&reference.params, None, &cfg, &probe, &method).unwrap();

        let config = UnlearnConfig {
            method,
            lambda: 0.1,
            epochs: 3,
            lr: 2e-3,
            batch_size: 4,
            seed: 5,
            checkpoint_epochs: vec![3],
            divergence_ceiling: 1e4,
        };
        let outcome = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        let w_after = compute_weights(
            &outcome.checkpoints[0].1.params,
            None,
            &cfg,
            &probe,
            &method,
        )
        .unwrap();
        assert_ne!(w_ref.weights, w_after.weights);
    }

    #[test]
    fn divergence_guard_stops_the_run() {
        let (corpus, tok, cfg) = small_setup();
        let (reference, _) = train_reference(&corpus, &tok, &cfg, &quick_train_cfg()).unwrap();
        let config = UnlearnConfig {
            method: UnlearnMethod::Uniform,
            lambda: 0.5,
            epochs: 2,
            lr: 1e-3,
            batch_size: 4,
            seed: 5,
            checkpoint_epochs: vec![2],
            // Absurdly low ceiling: trips immediately.
            divergence_ceiling: 1e-6,
        };
        let outcome = run_unlearning(&reference, &corpus, &tok, &config).unwrap();
        assert!(outcome.divergence.is_some());
        assert!(outcome.checkpoints.is_empty());
    }
}
