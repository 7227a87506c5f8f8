//! Experiment configuration: a single TOML document drives the whole
//! pipeline. Every field has a desk-scale default, so a partial file (or no
//! file at all) is a valid experiment.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use unlearn_core::objectives::UnlearnMethod;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Global seed; every stage derives its own stream from it.
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusConfig,
    pub model: ModelSection,
    pub train: TrainSection,
    pub unlearn: UnlearnSection,
    pub eval: EvalSection,
    pub sweep: SweepSection,
    pub report: ReportSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            seed: 7,
            out_dir: PathBuf::from("runs/desk"),
            corpus: CorpusConfig::default(),
            model: ModelSection::default(),
            train: TrainSection::default(),
            unlearn: UnlearnSection::default(),
            eval: EvalSection::default(),
            sweep: SweepSection::default(),
            report: ReportSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_authors: usize,
    pub qa_per_author: usize,
    pub forget_fraction: f64,
    pub holdout_fraction: f64,
    pub k_perturbations: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            n_authors: 20,
            qa_per_author: 5,
            forget_fraction: 0.10,
            holdout_fraction: 0.10,
            k_perturbations: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_context: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_layers: 2,
            n_heads: 4,
            d_ff: 128,
            max_context: 96,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            epochs: 30,
            lr: 1e-3,
            batch_size: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnlearnSection {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub checkpoint_epochs: Vec<usize>,
    pub methods: Vec<String>,
    pub lambdas: Vec<f64>,
    /// Softmax temperatures for the entropy weighting; other methods run
    /// once per lambda at temperature 1.
    pub temperatures: Vec<f64>,
    pub wga_alpha: f64,
    pub satimp_alpha: f64,
    pub tnpo_beta: f64,
    pub divergence_ceiling: f64,
}

impl Default for UnlearnSection {
    fn default() -> Self {
        Self {
            epochs: 10,
            lr: 1e-3,
            batch_size: 16,
            checkpoint_epochs: vec![10],
            methods: vec![
                "uniform".into(),
                "etw".into(),
                "wga".into(),
                "imp".into(),
                "satimp".into(),
                "tnpo".into(),
                "mask_entity".into(),
            ],
            lambdas: vec![0.02, 0.06, 0.15],
            temperatures: vec![1.0, 1.5],
            wga_alpha: 5.0,
            satimp_alpha: 5.0,
            tnpo_beta: 4.0,
            divergence_ceiling: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub histogram_bins: usize,
    pub histogram_methods: Vec<String>,
    pub exclusion_max_neg_log_fq: f64,
    pub exclusion_delta_mu_threshold: f64,
    /// true: exclude runs whose utility degraded by more than the threshold;
    /// false: the literal below-threshold reading.
    pub exclusion_delta_mu_above: bool,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            histogram_bins: 30,
            histogram_methods: vec!["etw".into(), "satimp".into(), "wga".into(), "tnpo".into()],
            exclusion_max_neg_log_fq: 12.0,
            exclusion_delta_mu_threshold: 50.0,
            exclusion_delta_mu_above: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub forget_fractions: Vec<f64>,
    pub temperatures: Vec<f64>,
    pub lambda: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            forget_fractions: vec![0.10, 0.05, 0.01],
            temperatures: vec![0.7, 1.0, 1.2, 1.5],
            lambda: 0.06,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub highlight_methods: Vec<String>,
    /// Forget samples per highlight page.
    pub highlight_samples: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            highlight_methods: vec![
                "etw".into(),
                "wga".into(),
                "imp".into(),
                "satimp".into(),
                "tnpo".into(),
                "mask_noun".into(),
                "mask_entity".into(),
            ],
            highlight_samples: 4,
        }
    }
}

impl ExperimentConfig {
    /// Load from TOML; missing keys take defaults, unknown keys error.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let config: Self = toml::from_str(&text)
            .with_context(|| format!("cannot parse config file {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "config schema_version {} unsupported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if self.model.d_model == 0 || !self.model.d_model.is_multiple_of(self.model.n_heads) {
            bail!(
                "model.d_model {} must be a positive multiple of n_heads {}",
                self.model.d_model,
                self.model.n_heads
            );
        }
        if self.unlearn.methods.is_empty() || self.unlearn.lambdas.is_empty() {
            bail!("unlearn.methods and unlearn.lambdas must be nonempty");
        }
        if self.unlearn.checkpoint_epochs.is_empty() {
            bail!("unlearn.checkpoint_epochs must name at least one epoch");
        }
        // Every configured cell must build a valid method spec.
        for cell in self.unlearn_cells()? {
            cell.method
                .validate()
                .map_err(|e| anyhow::anyhow!("cell {}: {e}", cell.id))?;
        }
        for m in &self.eval.histogram_methods {
            self.method_for(m, None)?;
        }
        for m in &self.report.highlight_methods {
            self.method_for(m, None)?;
        }
        Ok(())
    }

    /// Resolve a method name into a spec with this config's hyperparameters.
    pub fn method_for(&self, name: &str, temperature: Option<f64>) -> Result<UnlearnMethod> {
        let method = match name {
            "uniform" | "ga" => UnlearnMethod::Uniform,
            "etw" => UnlearnMethod::Etw {
                temperature: temperature.unwrap_or(1.0),
            },
            "wga" => UnlearnMethod::Wga {
                alpha: self.unlearn.wga_alpha,
            },
            "imp" => UnlearnMethod::Imp,
            "satimp" => UnlearnMethod::SatImp {
                alpha: self.unlearn.satimp_alpha,
            },
            "tnpo" => UnlearnMethod::Tnpo {
                beta: self.unlearn.tnpo_beta,
            },
            "mask_noun" => UnlearnMethod::MaskNounLike,
            "mask_entity" | "mask" => UnlearnMethod::MaskEntityLike,
            other => bail!("unknown weighting method `{other}`"),
        };
        Ok(method)
    }

    /// The full unlearning grid: every method crossed with every lambda, and
    /// the entropy method additionally crossed with every temperature.
    pub fn unlearn_cells(&self) -> Result<Vec<CellSpec>> {
        let mut cells = Vec::new();
        for name in &self.unlearn.methods {
            for &lambda in &self.unlearn.lambdas {
                if name == "etw" {
                    for &t in &self.unlearn.temperatures {
                        cells.push(CellSpec::new(
                            self.method_for(name, Some(t))?,
                            lambda,
                        ));
                    }
                } else {
                    cells.push(CellSpec::new(self.method_for(name, None)?, lambda));
                }
            }
        }
        Ok(cells)
    }

    // Derived per-stage seeds: distinct deterministic streams per stage.
    pub fn corpus_seed(&self) -> u64 {
        self.seed
    }
    pub fn model_seed(&self) -> u64 {
        self.seed.wrapping_add(0x9e37_79b9)
    }
    pub fn train_seed(&self) -> u64 {
        self.seed.wrapping_add(0x1234_5678)
    }
    pub fn unlearn_seed(&self) -> u64 {
        self.seed.wrapping_add(0x0bad_cafe)
    }
}

/// One cell of the unlearning grid with its artifact directory name.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub method: UnlearnMethod,
    pub lambda: f64,
    pub id: String,
}

impl CellSpec {
    pub fn new(method: UnlearnMethod, lambda: f64) -> Self {
        let mut id = format!("{}_lam{}", method.method().name(), lambda);
        if let Some(t) = method.temperature() {
            id.push_str(&format!("_T{t}"));
        }
        Self { method, lambda, id }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_round_trips() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let text = config.to_toml();
        let parsed: ExperimentConfig = toml::from_str(&text).unwrap();
        assert_eq!(config, parsed);
    }

    #[test]
    fn partial_config_takes_defaults() {
        let parsed: ExperimentConfig =
            toml::from_str("seed = 99\n[train]\nepochs = 3\n").unwrap();
        assert_eq!(parsed.seed, 99);
        assert_eq!(parsed.train.epochs, 3);
        assert_eq!(parsed.train.batch_size, 16);
        assert_eq!(parsed.corpus.n_authors, 20);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<ExperimentConfig>("nonsense = 1\n").is_err());
        assert!(toml::from_str::<ExperimentConfig>("[train]\nnonsense = 1\n").is_err());
    }

    #[test]
    fn default_grid_has_expected_cells() {
        let config = ExperimentConfig::default();
        let cells = config.unlearn_cells().unwrap();
        // 6 non-etw methods x 3 lambdas + etw x 3 lambdas x 2 temperatures.
        assert_eq!(cells.len(), 6 * 3 + 3 * 2);
        assert!(cells.iter().any(|c| c.id == "etw_lam0.06_T1.5"));
        assert!(cells.iter().any(|c| c.id == "uniform_lam0.02"));
        // Ids are unique.
        let mut ids: Vec<&String> = cells.iter().map(|c| &c.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), cells.len());
    }

    #[test]
    fn bad_method_names_fail_validation() {
        let mut config = ExperimentConfig::default();
        config.unlearn.methods = vec!["nonsense".into()];
        assert!(config.validate().is_err());
    }
}
