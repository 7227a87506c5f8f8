//! Statistical primitives: two-sample Kolmogorov-Smirnov test, rank-based
//! ROC-AUC with tie handling, and class-conditional histograms.

use super::EvalError;

/// Survival function of the Kolmogorov distribution, Q(z) = P(K > z).
///
/// Uses the Jacobi-theta form for small z and the alternating series
/// otherwise, each truncated at 100 terms; this is the standard convention
/// for the two-sided asymptotic two-sample test.
pub fn kolmogorov_sf(z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    const TERMS: usize = 100;
    let p = if z < 1.18 {
        // CDF = sqrt(2 pi)/z * sum_{k odd} exp(-k^2 pi^2 / (8 z^2))
        let t = std::f64::consts::PI * std::f64::consts::PI / (8.0 * z * z);
        let mut cdf = 0.0;
        for k in 0..TERMS {
            let odd = (2 * k + 1) as f64;
            cdf += (-odd * odd * t).exp();
        }
        cdf *= (2.0 * std::f64::consts::PI).sqrt() / z;
        1.0 - cdf
    } else {
        let mut sf = 0.0;
        for k in 1..=TERMS {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * z * z).exp();
            if k % 2 == 1 {
                sf += term;
            } else {
                sf -= term;
            }
        }
        2.0 * sf
    };
    p.clamp(1e-300, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// Returns the statistic `D = sup |ECDF_a - ECDF_b|` and the two-sided
/// asymptotic p-value with effective sample size `ne = m n / (m + n)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<(f64, f64), EvalError> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::EmptySample);
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(EvalError::NumericFailure("non-finite sample value".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));

    let m = xs.len();
    let n = ys.len();
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d = 0.0f64;
    while i < m && j < n {
        let x = xs[i].min(ys[j]);
        while i < m && xs[i] <= x {
            i += 1;
        }
        while j < n && ys[j] <= x {
            j += 1;
        }
        let diff = (i as f64 / m as f64 - j as f64 / n as f64).abs();
        if diff > d {
            d = diff;
        }
    }

    let ne = (m * n) as f64 / (m + n) as f64;
    let p = if d == 0.0 {
        1.0
    } else {
        kolmogorov_sf(ne.sqrt() * d)
    };
    Ok((d, p))
}

/// ROC-AUC via the rank statistic with average ranks for ties; equivalent to
/// the normalized Mann-Whitney U.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.iter().any(|x| !x.is_finite()) {
        return Err(EvalError::NumericFailure("non-finite score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));

    // Average ranks over tie groups, 1-based.
    let mut ranks = vec![0.0f64; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }

    let rank_sum_pos: f64 = labels
        .iter()
        .zip(&ranks)
        .filter(|(&l, _)| l)
        .map(|(_, &r)| r)
        .sum();
    let auc =
        (rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0) / (n_pos as f64 * n_neg as f64);
    Ok(auc)
}

/// The single (FPR, TPR) operating point of a binary scorer.
pub fn operating_point(predictions: &[bool], labels: &[bool]) -> Result<(f64, f64), EvalError> {
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let tp = predictions
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| p && l)
        .count();
    let fp = predictions
        .iter()
        .zip(labels)
        .filter(|(&p, &l)| p && !l)
        .count();
    Ok((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64))
}

/// Two class-conditional densities over shared uniform bin edges. Each
/// density integrates to one over the binned range.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClassHistogram {
    pub bin_edges: Vec<f64>,
    pub informative_density: Vec<f64>,
    pub structural_density: Vec<f64>,
    pub informative_count: usize,
    pub structural_count: usize,
}

pub fn class_histogram(values: &[(f64, bool)], bins: usize) -> Result<ClassHistogram, EvalError> {
    if bins < 2 {
        return Err(EvalError::InvalidArgument(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let informative_count = values.iter().filter(|(_, l)| *l).count();
    let structural_count = values.len() - informative_count;
    if informative_count == 0 || structural_count == 0 {
        return Err(EvalError::SingleClass);
    }
    if values.iter().any(|(v, _)| !v.is_finite()) {
        return Err(EvalError::NumericFailure("non-finite weight".into()));
    }

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(v, _) in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let bin_edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();

    let mut informative = vec![0usize; bins];
    let mut structural = vec![0usize; bins];
    for &(v, label) in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        if label {
            informative[idx] += 1;
        } else {
            structural[idx] += 1;
        }
    }

    let to_density = |counts: &[usize], total: usize| -> Vec<f64> {
        counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * width))
            .collect()
    };
    Ok(ClassHistogram {
        bin_edges,
        informative_density: to_density(&informative, informative_count),
        structural_density: to_density(&structural, structural_count),
        informative_count,
        structural_count,
    })
}
