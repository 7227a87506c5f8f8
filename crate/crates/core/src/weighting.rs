//! Per-token weight functions for the forget loss.
//!
//! Every regularizer here is a pure map from predictive distributions (or a
//! token mask) to nonnegative per-token weights. Entropy-guided weighting
//! looks at the full next-token distribution; the confidence-based baselines
//! look only at the ground-truth token's probability; the mask baselines are
//! plain indicator functions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WeightError {
    #[error("probability vector is not normalized (sum = {sum})")]
    NotNormalized { sum: f64 },
    #[error("probability vector contains an invalid entry {value} at index {index}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("ground-truth probability {value} outside (0, 1]")]
    GtProbOutOfRange { value: f64 },
    #[error("hyperparameter {name} must be positive, got {value}")]
    NonPositiveHyperparam { name: &'static str, value: f64 },
    #[error("p must lie strictly inside (0, 1), got {value}")]
    POutOfOpenUnit { value: f64 },
    #[error("vocabulary size must be at least 2, got {got}")]
    VocabTooSmall { got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("reference probabilities are required for this method")]
    MissingReference,
    #[error("entropy must be nonnegative, got {value} at index {index}")]
    NegativeEntropy { index: usize, value: f64 },
    #[error("completion length must be at least 1")]
    EmptyCompletion,
}

/// Which weighting rule produced a weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Etw,
    Wga,
    Imp,
    SatImp,
    Tnpo,
    MaskNounLike,
    MaskEntityLike,
    Uniform,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Etw => "etw",
            Method::Wga => "wga",
            Method::Imp => "imp",
            Method::SatImp => "satimp",
            Method::Tnpo => "tnpo",
            Method::MaskNounLike => "mask_noun",
            Method::MaskEntityLike => "mask_entity",
            Method::Uniform => "uniform",
        }
    }

    /// Mask methods emit only 0/1 weights, so ROC reports a single operating
    /// point for them instead of a full curve.
    pub fn is_binary(&self) -> bool {
        matches!(self, Method::MaskNounLike | Method::MaskEntityLike)
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "etw" => Ok(Method::Etw),
            "wga" => Ok(Method::Wga),
            "imp" => Ok(Method::Imp),
            "satimp" => Ok(Method::SatImp),
            "tnpo" => Ok(Method::Tnpo),
            "mask_noun" => Ok(Method::MaskNounLike),
            "mask_entity" | "mask" => Ok(Method::MaskEntityLike),
            "uniform" | "ga" => Ok(Method::Uniform),
            other => Err(format!("unknown weighting method `{other}`")),
        }
    }
}

/// Hyperparameters actually used by a weight computation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub temperature: Option<f64>,
}

/// Per-completion-token weights, tagged with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWeights {
    pub weights: Vec<f64>,
    pub method: Method,
    pub hyperparams: Hyperparams,
}

impl TokenWeights {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

fn check_simplex(probs: &[f64]) -> Result<(), WeightError> {
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(WeightError::InvalidProbability { index: i, value: p });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(WeightError::NotNormalized { sum });
    }
    Ok(())
}

fn check_gt_probs(probs: &[f64]) -> Result<(), WeightError> {
    if probs.is_empty() {
        return Err(WeightError::EmptyCompletion);
    }
    for &p in probs {
        if !p.is_finite() || p <= 0.0 || p > 1.0 {
            return Err(WeightError::GtProbOutOfRange { value: p });
        }
    }
    Ok(())
}

/// Shannon entropy of a next-token distribution, in nats.
///
/// Zero-probability entries contribute zero by the usual limit convention.
pub fn token_entropy(probs: &[f64]) -> Result<f64, WeightError> {
    check_simplex(probs)?;
    let h = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum::<f64>();
    // Tiny negative values can appear from rounding when one entry is ~1.
    Ok(h.max(0.0))
}

/// Range of entropies achievable when the ground-truth token holds mass `p`.
///
/// The minimum puts all residual mass on a single alternative; the maximum
/// spreads it uniformly over the other `vocab_size - 1` tokens. Any actual
/// distribution with ground-truth mass `p` has entropy inside these bounds,
/// which is what makes entropy a strictly richer signal than `p` alone.
pub fn entropy_bounds(p: f64, vocab_size: usize) -> Result<(f64, f64), WeightError> {
    if !(p > 0.0 && p < 1.0) || !p.is_finite() {
        return Err(WeightError::POutOfOpenUnit { value: p });
    }
    if vocab_size < 2 {
        return Err(WeightError::VocabTooSmall { got: vocab_size });
    }
    let q = 1.0 - p;
    let h_min = -p * p.ln() - q * q.ln();
    let h_max = -p * p.ln() - q * (q / (vocab_size as f64 - 1.0)).ln();
    Ok((h_min, h_max))
}

/// Entropy-guided weights: proportional to per-token entropy, rescaled so the
/// weights sum to the completion length.
///
/// The rescaling keeps the overall magnitude of the forget loss comparable to
/// the unweighted case; it only redistributes pressure across tokens. A
/// degenerate all-zero entropy vector (every row exactly one-hot) falls back
/// to uniform weights so the loss never collapses to zero by accident.
pub fn etw_weights(entropies: &[f64], temperature: f64) -> Result<TokenWeights, WeightError> {
    if entropies.is_empty() {
        return Err(WeightError::EmptyCompletion);
    }
    for (i, &h) in entropies.iter().enumerate() {
        if !h.is_finite() || h < 0.0 {
            return Err(WeightError::NegativeEntropy { index: i, value: h });
        }
    }
    let n = entropies.len() as f64;
    let total: f64 = entropies.iter().sum();
    let weights = if total > 0.0 {
        entropies.iter().map(|&h| n * h / total).collect()
    } else {
        vec![1.0; entropies.len()]
    };
    Ok(TokenWeights {
        weights,
        method: Method::Etw,
        hyperparams: Hyperparams {
            temperature: Some(temperature),
            ..Default::default()
        },
    })
}

/// True when `etw_weights` would take the uniform fallback branch.
pub fn etw_is_degenerate(entropies: &[f64]) -> bool {
    entropies.iter().sum::<f64>() <= 0.0
}

/// Exponentiated ground-truth confidence: w = p^alpha.
pub fn wga_weights(gt_probs: &[f64], alpha: f64) -> Result<TokenWeights, WeightError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(WeightError::NonPositiveHyperparam {
            name: "alpha",
            value: alpha,
        });
    }
    check_gt_probs(gt_probs)?;
    Ok(TokenWeights {
        weights: gt_probs.iter().map(|&p| p.powf(alpha)).collect(),
        method: Method::Wga,
        hyperparams: Hyperparams {
            alpha: Some(alpha),
            ..Default::default()
        },
    })
}

/// Confidence complement: w = 1 - p.
pub fn imp_weights(gt_probs: &[f64]) -> Result<TokenWeights, WeightError> {
    check_gt_probs(gt_probs)?;
    Ok(TokenWeights {
        weights: gt_probs.iter().map(|&p| 1.0 - p).collect(),
        method: Method::Imp,
        hyperparams: Hyperparams::default(),
    })
}

/// Saturated importance: w = p^alpha * (1 - p).
///
/// Unimodal in p with its unique interior maximum at p = alpha / (alpha + 1).
pub fn satimp_weights(gt_probs: &[f64], alpha: f64) -> Result<TokenWeights, WeightError> {
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(WeightError::NonPositiveHyperparam {
            name: "alpha",
            value: alpha,
        });
    }
    check_gt_probs(gt_probs)?;
    Ok(TokenWeights {
        weights: gt_probs.iter().map(|&p| p.powf(alpha) * (1.0 - p)).collect(),
        method: Method::SatImp,
        hyperparams: Hyperparams {
            alpha: Some(alpha),
            ..Default::default()
        },
    })
}

/// Confidence deviation from a frozen reference model:
/// w = 2 p^beta / (p^beta + p_ref^beta). Equals 1 when p == p_ref.
pub fn tnpo_weights(
    gt_probs: &[f64],
    ref_gt_probs: &[f64],
    beta: f64,
) -> Result<TokenWeights, WeightError> {
    if beta <= 0.0 || !beta.is_finite() {
        return Err(WeightError::NonPositiveHyperparam {
            name: "beta",
            value: beta,
        });
    }
    if ref_gt_probs.is_empty() {
        return Err(WeightError::MissingReference);
    }
    if gt_probs.len() != ref_gt_probs.len() {
        return Err(WeightError::LengthMismatch {
            left: gt_probs.len(),
            right: ref_gt_probs.len(),
        });
    }
    check_gt_probs(gt_probs)?;
    check_gt_probs(ref_gt_probs)?;
    let weights = gt_probs
        .iter()
        .zip(ref_gt_probs)
        .map(|(&p, &pr)| {
            if p == pr {
                // Exact by symmetry; avoids rounding through powf.
                1.0
            } else {
                let a = p.powf(beta);
                let b = pr.powf(beta);
                2.0 * a / (a + b)
            }
        })
        .collect();
    Ok(TokenWeights {
        weights,
        method: Method::Tnpo,
        hyperparams: Hyperparams {
            beta: Some(beta),
            ..Default::default()
        },
    })
}

/// Indicator weights from a boolean token mask.
pub fn mask_weights(mask: &[bool], method: Method) -> Result<TokenWeights, WeightError> {
    if mask.is_empty() {
        return Err(WeightError::EmptyCompletion);
    }
    Ok(TokenWeights {
        weights: mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect(),
        method,
        hyperparams: Hyperparams::default(),
    })
}

/// All-ones weights; the plain gradient-ascent objective.
pub fn uniform_weights(n: usize) -> Result<TokenWeights, WeightError> {
    if n == 0 {
        return Err(WeightError::EmptyCompletion);
    }
    Ok(TokenWeights {
        weights: vec![1.0; n],
        method: Method::Uniform,
        hyperparams: Hyperparams::default(),
    })
}
