//! The evaluation suite: truth ratios, KS forget quality, model utility,
//! aggregated score with exclusion rules, informative-token probability, and
//! token-discrimination ROC / histograms.

mod stats;

pub use stats::{
    class_histogram, kolmogorov_sf, ks_two_sample, operating_point, roc_auc, ClassHistogram,
};

use crate::corpus::TokenizedSample;
use crate::lm::{LmError, ModelConfig, Parameters};
use crate::objectives::{
    completion_entropies, completion_gt_probs, completion_log_probs, compute_weights,
    ObjectiveError, UnlearnMethod,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty sample")]
    EmptySample,
    #[error("both classes must be present")]
    SingleClass,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

impl From<LmError> for EvalError {
    fn from(e: LmError) -> Self {
        EvalError::Objective(ObjectiveError::Lm(e))
    }
}

/// Geometric mean of the ground-truth token probabilities of `completion`
/// given `prompt`; removes completion-length confounds between variants.
pub fn length_normalized_prob(
    params: &Parameters,
    cfg: &ModelConfig,
    prompt: &[u32],
    completion: &[u32],
) -> Result<f64, EvalError> {
    if completion.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let lps = completion_log_probs(params, cfg, prompt, completion)?;
    let mean = lps.iter().sum::<f64>() / lps.len() as f64;
    let p = mean.exp();
    if !p.is_finite() || p <= 0.0 {
        return Err(EvalError::NumericFailure(format!(
            "degenerate length-normalized probability {p}"
        )));
    }
    Ok(p)
}

/// Truth ratio of one sample: mean length-normalized probability of the
/// perturbed (false) answers over that of the paraphrased (true) answer.
/// Below one means the model prefers the truth.
pub fn truth_ratio(
    params: &Parameters,
    cfg: &ModelConfig,
    sample: &TokenizedSample,
) -> Result<f64, EvalError> {
    if sample.perturbed_ids.is_empty() || sample.paraphrase_ids.is_empty() {
        return Err(EvalError::InvalidArgument(
            "truth ratio needs a paraphrase and at least one perturbation".into(),
        ));
    }
    let para = length_normalized_prob(params, cfg, &sample.prompt_ids, &sample.paraphrase_ids)?;
    let mut sum = 0.0;
    for perturbed in &sample.perturbed_ids {
        sum += length_normalized_prob(params, cfg, &sample.prompt_ids, perturbed)?;
    }
    let ratio = (sum / sample.perturbed_ids.len() as f64) / para;
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(EvalError::NumericFailure(format!("truth ratio {ratio}")));
    }
    Ok(ratio)
}

/// Truth ratios over a set of samples, one value per QA pair.
pub fn truth_ratios(
    params: &Parameters,
    cfg: &ModelConfig,
    samples: &[TokenizedSample],
) -> Result<Vec<f64>, EvalError> {
    samples
        .iter()
        .map(|s| truth_ratio(params, cfg, s))
        .collect()
}

/// Forget quality of an unlearned model against the retrained baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForgetQuality {
    /// -log10 of the KS p-value; zero means indistinguishable from retrain.
    pub neg_log_fq: f64,
    pub p_value: f64,
    pub ks_d: f64,
    /// p > 0.05: the two truth-ratio distributions are not statistically
    /// distinguishable, i.e. forgetting is valid.
    pub valid: bool,
}

/// KS test between the truth-ratio distributions of the unlearned and
/// retrained models on the forget set.
pub fn forget_quality(
    unlearned: &Parameters,
    retrained: &Parameters,
    cfg: &ModelConfig,
    forget_set: &[TokenizedSample],
) -> Result<ForgetQuality, EvalError> {
    let a = truth_ratios(unlearned, cfg, forget_set)?;
    let b = truth_ratios(retrained, cfg, forget_set)?;
    forget_quality_from_ratios(&a, &b)
}

/// As [`forget_quality`], from precomputed truth-ratio samples.
pub fn forget_quality_from_ratios(
    unlearned_ratios: &[f64],
    retrain_ratios: &[f64],
) -> Result<ForgetQuality, EvalError> {
    let (d, p) = ks_two_sample(unlearned_ratios, retrain_ratios)?;
    Ok(ForgetQuality {
        neg_log_fq: -p.log10(),
        p_value: p,
        ks_d: d,
        valid: p > 0.05,
    })
}

/// Harmonic mean; zero if any component is nonpositive.
pub fn harmonic_mean(components: &[f64]) -> f64 {
    if components.is_empty() || components.iter().any(|&c| c <= 0.0) {
        return 0.0;
    }
    components.len() as f64 / components.iter().map(|c| 1.0 / c).sum::<f64>()
}

/// Model utility and its components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelUtility {
    pub mu: f64,
    pub retain_prob: f64,
    pub retain_truth_score: f64,
    pub holdout_prob: f64,
    /// True when a component was nonpositive and mu was forced to zero.
    pub degenerate: bool,
}

/// Harmonic mean of retain answer probability, retain truth-ratio score
/// (1 / (1 + ratio), larger is better), and holdout answer probability.
pub fn model_utility(
    params: &Parameters,
    cfg: &ModelConfig,
    retain_set: &[TokenizedSample],
    holdout_set: &[TokenizedSample],
) -> Result<ModelUtility, EvalError> {
    if retain_set.is_empty() || holdout_set.is_empty() {
        return Err(EvalError::EmptySample);
    }
    let mean_ln_prob = |set: &[TokenizedSample]| -> Result<f64, EvalError> {
        let mut sum = 0.0;
        for s in set {
            sum += length_normalized_prob(params, cfg, &s.prompt_ids, &s.completion_ids)?;
        }
        Ok(sum / set.len() as f64)
    };
    let retain_prob = mean_ln_prob(retain_set)?;
    let holdout_prob = mean_ln_prob(holdout_set)?;
    let ratios = truth_ratios(params, cfg, retain_set)?;
    let retain_truth_score =
        ratios.iter().map(|r| 1.0 / (1.0 + r)).sum::<f64>() / ratios.len() as f64;

    let components = [retain_prob, retain_truth_score, holdout_prob];
    let mu = harmonic_mean(&components);
    Ok(ModelUtility {
        mu,
        retain_prob,
        retain_truth_score,
        holdout_prob,
        degenerate: mu == 0.0,
    })
}

/// Relative utility degradation from the reference model, in percent.
/// Negative means the utility improved.
pub fn delta_mu(mu_ref: f64, mu: f64) -> Result<f64, EvalError> {
    if !mu_ref.is_finite() || mu_ref <= 0.0 {
        return Err(EvalError::InvalidArgument(format!(
            "reference utility must be positive, got {mu_ref}"
        )));
    }
    Ok((mu_ref - mu) / mu_ref * 100.0)
}

/// Best-model exclusion rules for the aggregated score.
///
/// The degraded-utility threshold is configurable in both directions because
/// the may-be-intended reading ("exclude when utility degraded by more than
/// the threshold") and the literal reading ("exclude when below") differ;
/// the default excludes severe degradation (delta MU above the threshold).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRule {
    pub max_neg_log_fq: f64,
    pub delta_mu_threshold: f64,
    /// true: exclude runs with delta MU above the threshold (default);
    /// false: exclude runs with delta MU below it.
    pub exclude_delta_mu_above: bool,
}

impl Default for ExclusionRule {
    fn default() -> Self {
        Self {
            max_neg_log_fq: 12.0,
            delta_mu_threshold: 50.0,
            exclude_delta_mu_above: true,
        }
    }
}

impl ExclusionRule {
    pub fn reason(&self, neg_log_fq: f64, delta_mu_pct: f64) -> Option<String> {
        if neg_log_fq > self.max_neg_log_fq {
            return Some(format!(
                "neg_log_fq {neg_log_fq:.3} > {}",
                self.max_neg_log_fq
            ));
        }
        if self.exclude_delta_mu_above {
            if delta_mu_pct > self.delta_mu_threshold {
                return Some(format!(
                    "delta_mu {delta_mu_pct:.3}% > {}%",
                    self.delta_mu_threshold
                ));
            }
        } else if delta_mu_pct < self.delta_mu_threshold {
            return Some(format!(
                "delta_mu {delta_mu_pct:.3}% < {}%",
                self.delta_mu_threshold
            ));
        }
        None
    }
}

/// The aggregated selection score: product of -log(FQ) and delta MU, with
/// the exclusion verdict.
pub fn aggregated(
    neg_log_fq: f64,
    delta_mu_pct: f64,
    rule: &ExclusionRule,
) -> (f64, bool, Option<String>) {
    let agg = neg_log_fq * delta_mu_pct;
    let reason = rule.reason(neg_log_fq, delta_mu_pct);
    (agg, reason.is_some(), reason)
}

/// Mean ground-truth probability over informative-masked completion tokens,
/// pooled across the set.
pub fn informative_prob(
    params: &Parameters,
    cfg: &ModelConfig,
    forget_set: &[TokenizedSample],
) -> Result<f64, EvalError> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in forget_set {
        let gt = completion_gt_probs(params, cfg, s, 1.0)?;
        for (p, &m) in gt.iter().zip(&s.informative_mask) {
            if m {
                sum += p;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(EvalError::InvalidArgument(
            "no informative tokens in the set".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Absolute relative change with respect to the retrained model, in percent.
pub fn delta_rt(retrain_value: f64, x: f64) -> Result<f64, EvalError> {
    if !retrain_value.is_finite() || retrain_value <= 0.0 {
        return Err(EvalError::InvalidArgument(format!(
            "retrain value must be positive, got {retrain_value}"
        )));
    }
    Ok(((retrain_value - x) / retrain_value).abs() * 100.0)
}

/// Per-token discrimination scores for one method at one checkpoint, pooled
/// over completion tokens, with the informative mask as labels.
///
/// ETW scores are raw per-token entropies (at the method temperature):
/// within a sample they order tokens exactly like the normalized weights,
/// and across samples entropy is the comparable quantity. Other methods
/// score with their weights directly.
pub fn method_token_scores(
    params: &Parameters,
    ref_params: Option<&Parameters>,
    cfg: &ModelConfig,
    samples: &[TokenizedSample],
    method: &UnlearnMethod,
) -> Result<(Vec<f64>, Vec<bool>), EvalError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for s in samples {
        match method {
            UnlearnMethod::Etw { temperature } => {
                scores.extend(completion_entropies(params, cfg, s, *temperature)?);
            }
            _ => {
                let w = compute_weights(params, ref_params, cfg, s, method)?;
                scores.extend_from_slice(&w.weights);
            }
        }
        labels.extend_from_slice(&s.informative_mask);
    }
    Ok((scores, labels))
}

/// ROC report for one method: the AUC, plus the single operating point when
/// the method is a binary mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub auc: f64,
    pub operating_point: Option<(f64, f64)>,
}

pub fn method_roc(
    params: &Parameters,
    ref_params: Option<&Parameters>,
    cfg: &ModelConfig,
    samples: &[TokenizedSample],
    method: &UnlearnMethod,
) -> Result<RocReport, EvalError> {
    let (scores, labels) = method_token_scores(params, ref_params, cfg, samples, method)?;
    let auc = roc_auc(&scores, &labels)?;
    let op = if method.method().is_binary() {
        let predictions: Vec<bool> = scores.iter().map(|&s| s > 0.5).collect();
        Some(operating_point(&predictions, &labels)?)
    } else {
        None
    };
    Ok(RocReport {
        auc,
        operating_point: op,
    })
}

/// Class-conditional histogram of a method's token weights on a set.
pub fn weight_histograms(
    params: &Parameters,
    ref_params: Option<&Parameters>,
    cfg: &ModelConfig,
    samples: &[TokenizedSample],
    method: &UnlearnMethod,
    bins: usize,
) -> Result<ClassHistogram, EvalError> {
    let mut values = Vec::new();
    for s in samples {
        let w = compute_weights(params, ref_params, cfg, s, method)?;
        for (&wi, &m) in w.weights.iter().zip(&s.informative_mask) {
            values.push((wi, m));
        }
    }
    class_histogram(&values, bins)
}

/// The full metrics record for one evaluated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub method: String,
    pub lambda: Option<f64>,
    pub temperature: Option<f64>,
    pub epoch: Option<usize>,
    pub neg_log_fq: f64,
    pub fq_valid: bool,
    pub mu: f64,
    pub delta_mu_pct: f64,
    pub agg: f64,
    pub excluded: bool,
    pub exclusion_reason: Option<String>,
    pub roc_auc: f64,
    pub operating_point: Option<(f64, f64)>,
    pub informative_prob: f64,
    pub delta_rt_pct: f64,
    /// Reserved: privacy-leak metric is not computed at desk scale.
    pub privleak: Option<f64>,
}

/// Shared evaluation state: the reference and retrain baselines evaluated
/// once, reused for every run of an experiment.
pub struct EvalContext<'a> {
    pub cfg: &'a ModelConfig,
    pub forget: &'a [TokenizedSample],
    pub retain: &'a [TokenizedSample],
    pub holdout: &'a [TokenizedSample],
    pub reference: &'a Parameters,
    pub exclusion: ExclusionRule,
    pub mu_ref: f64,
    pub retrain_ratios: Vec<f64>,
    pub retrain_informative_prob: f64,
}

impl<'a> EvalContext<'a> {
    pub fn new(
        cfg: &'a ModelConfig,
        forget: &'a [TokenizedSample],
        retain: &'a [TokenizedSample],
        holdout: &'a [TokenizedSample],
        reference: &'a Parameters,
        retrain: &Parameters,
        exclusion: ExclusionRule,
    ) -> Result<Self, EvalError> {
        let mu_ref = model_utility(reference, cfg, retain, holdout)?.mu;
        let retrain_ratios = truth_ratios(retrain, cfg, forget)?;
        let retrain_informative_prob = informative_prob(retrain, cfg, forget)?;
        Ok(Self {
            cfg,
            forget,
            retain,
            holdout,
            reference,
            exclusion,
            mu_ref,
            retrain_ratios,
            retrain_informative_prob,
        })
    }

    /// Evaluate one unlearned model.
    pub fn evaluate(
        &self,
        params: &Parameters,
        method: &UnlearnMethod,
        lambda: f64,
        epoch: usize,
    ) -> Result<RunMetrics, EvalError> {
        let ratios = truth_ratios(params, self.cfg, self.forget)?;
        let fq = forget_quality_from_ratios(&ratios, &self.retrain_ratios)?;
        let utility = model_utility(params, self.cfg, self.retain, self.holdout)?;
        let dmu = delta_mu(self.mu_ref, utility.mu)?;
        let (agg, excluded, reason) = aggregated(fq.neg_log_fq, dmu, &self.exclusion);
        let ref_params = method.needs_reference().then_some(self.reference);
        let roc = method_roc(params, ref_params, self.cfg, self.forget, method)?;
        let inf_prob = informative_prob(params, self.cfg, self.forget)?;
        let drt = delta_rt(self.retrain_informative_prob, inf_prob)?;
        Ok(RunMetrics {
            method: method.method().name().to_string(),
            lambda: Some(lambda),
            temperature: method.temperature(),
            epoch: Some(epoch),
            neg_log_fq: fq.neg_log_fq,
            fq_valid: fq.valid,
            mu: utility.mu,
            delta_mu_pct: dmu,
            agg,
            excluded,
            exclusion_reason: reason,
            roc_auc: roc.auc,
            operating_point: roc.operating_point,
            informative_prob: inf_prob,
            delta_rt_pct: drt,
            privleak: None,
        })
    }
}
