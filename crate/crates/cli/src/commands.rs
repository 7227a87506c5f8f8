//! Pipeline commands. Each command reads its prerequisites from the output
//! directory, writes its artifacts under it, and records a manifest. Rerun
//! with unchanged inputs, every command reproduces its outputs byte for
//! byte.

use crate::config::{CellSpec, ExperimentConfig};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use unlearn_core::corpus::{
    generate_corpus_with_holdout, load_corpus, save_corpus, tokenize, tokenize_all, CorpusSplit, Tokenizer,
};
use unlearn_core::eval::{
    forget_quality_from_ratios, informative_prob, model_utility, truth_ratios, weight_histograms,
    EvalContext, ExclusionRule, RunMetrics,
};
use unlearn_core::lm::{
    load_checkpoint, save_checkpoint, ModelCheckpoint, ModelConfig,
};
use unlearn_core::objectives::{
    compute_weights, run_unlearning, train_reference, train_retain_only, EpochRecord, TrainConfig,
    UnlearnConfig, UnlearnMethod,
};
use unlearn_core::report::{
    emit_highlight_html, emit_metrics_table, emit_sweep, HighlightDocument, HighlightSample,
    HighlightToken, SweepCell,
};

/// A pipeline rooted at the configured output directory.
pub struct Pipeline {
    pub config: ExperimentConfig,
    pub dry_run: bool,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    command: String,
    schema_version: u32,
    outputs: Vec<String>,
}

/// Divergence / checkpoint inventory for one unlearning cell.
#[derive(Debug, Serialize, Deserialize)]
struct CellRunInfo {
    id: String,
    method: String,
    lambda: f64,
    temperature: Option<f64>,
    checkpoint_epochs: Vec<usize>,
    divergence: Option<String>,
}

/// Reference/retrain context written by `eval` alongside the metrics rows.
#[derive(Debug, Serialize, Deserialize)]
struct EvalSummary {
    mu_reference: f64,
    mu_retrain: f64,
    reference_neg_log_fq: f64,
    reference_informative_prob: f64,
    retrain_informative_prob: f64,
    diverged_cells: Vec<(String, String)>,
}

impl Pipeline {
    pub fn new(config: ExperimentConfig, dry_run: bool) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, dry_run })
    }

    fn out(&self) -> &Path {
        &self.config.out_dir
    }

    fn corpus_path(&self) -> PathBuf {
        self.out().join("corpus.jsonl")
    }

    fn reference_path(&self) -> PathBuf {
        self.out().join("checkpoints/reference.ckpt")
    }

    fn retrain_path(&self) -> PathBuf {
        self.out().join("checkpoints/retrain.ckpt")
    }

    fn cell_dir(&self, id: &str) -> PathBuf {
        self.out().join("unlearn").join(id)
    }

    fn require(&self, path: &Path, produced_by: &str) -> Result<()> {
        if !path.exists() {
            bail!(
                "missing prerequisite artifact {} (run `unlearnlab {produced_by}` first)",
                path.display()
            );
        }
        Ok(())
    }

    fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            d_model: self.config.model.d_model,
            n_layers: self.config.model.n_layers,
            n_heads: self.config.model.n_heads,
            d_ff: self.config.model.d_ff,
            max_context: self.config.model.max_context,
            seed: self.config.model_seed(),
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.config.train.epochs,
            lr: self.config.train.lr,
            batch_size: self.config.train.batch_size,
            seed: self.config.train_seed(),
        }
    }

    fn unlearn_config(&self, cell: &CellSpec) -> UnlearnConfig {
        UnlearnConfig {
            method: cell.method,
            lambda: cell.lambda,
            epochs: self.config.unlearn.epochs,
            lr: self.config.unlearn.lr,
            batch_size: self.config.unlearn.batch_size,
            seed: self.config.unlearn_seed(),
            checkpoint_epochs: self.config.unlearn.checkpoint_epochs.clone(),
            divergence_ceiling: self.config.unlearn.divergence_ceiling,
        }
    }

    fn exclusion_rule(&self) -> ExclusionRule {
        ExclusionRule {
            max_neg_log_fq: self.config.eval.exclusion_max_neg_log_fq,
            delta_mu_threshold: self.config.eval.exclusion_delta_mu_threshold,
            exclude_delta_mu_above: self.config.eval.exclusion_delta_mu_above,
        }
    }

    fn write_manifest(&self, command: &str, outputs: &[PathBuf]) -> Result<()> {
        let dir = self.out().join("manifest");
        fs::create_dir_all(&dir)?;
        let mut rel: Vec<String> = outputs
            .iter()
            .map(|p| {
                p.strip_prefix(self.out())
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
        rel.sort();
        let manifest = Manifest {
            command: command.to_string(),
            schema_version: 1,
            outputs: rel,
        };
        write_json(&dir.join(format!("{command}.json")), &manifest)?;
        Ok(())
    }

    fn load_corpus_artifact(&self) -> Result<(CorpusSplit, Tokenizer)> {
        let path = self.corpus_path();
        self.require(&path, "gen-corpus")?;
        load_corpus(&path).with_context(|| format!("loading corpus {}", path.display()))
    }

    fn load_ckpt(&self, path: &Path, produced_by: &str) -> Result<ModelCheckpoint> {
        self.require(path, produced_by)?;
        load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
    }

    // ----- commands ------------------------------------------------------

    pub fn cmd_gen_corpus(&self) -> Result<()> {
        let c = &self.config.corpus;
        println!(
            "gen-corpus: {} authors x {} QA, forget {} / holdout {}, {} perturbations, seed {}",
            c.n_authors,
            c.qa_per_author,
            c.forget_fraction,
            c.holdout_fraction,
            c.k_perturbations,
            self.config.corpus_seed()
        );
        if self.dry_run {
            return Ok(());
        }
        let split = generate_corpus_with_holdout(
            self.config.corpus_seed(),
            c.n_authors,
            c.qa_per_author,
            c.forget_fraction,
            c.k_perturbations,
            c.holdout_fraction,
        )?;
        let tokenizer = Tokenizer::from_split(&split);
        fs::create_dir_all(self.out())?;
        let path = self.corpus_path();
        save_corpus(&split, &tokenizer, &path)?;
        println!(
            "  wrote {} ({} forget / {} retain / {} holdout pairs, vocab {})",
            path.display(),
            split.forget.len(),
            split.retain.len(),
            split.holdout.len(),
            tokenizer.vocab_size()
        );
        self.write_manifest("gen-corpus", &[path])
    }

    pub fn cmd_finetune(&self) -> Result<()> {
        println!(
            "finetune: {} epochs on forget+retain, lr {}, batch {}",
            self.config.train.epochs, self.config.train.lr, self.config.train.batch_size
        );
        if self.dry_run {
            return Ok(());
        }
        let (split, tokenizer) = self.load_corpus_artifact()?;
        let model_cfg = self.model_config(tokenizer.vocab_size());
        let (ckpt, log) = train_reference(&split, &tokenizer, &model_cfg, &self.train_config())?;
        self.save_training_outputs("finetune", &ckpt, &log, &self.reference_path())
    }

    pub fn cmd_retrain(&self) -> Result<()> {
        println!(
            "retrain: {} epochs on retain only, lr {}, batch {}",
            self.config.train.epochs, self.config.train.lr, self.config.train.batch_size
        );
        if self.dry_run {
            return Ok(());
        }
        let (split, tokenizer) = self.load_corpus_artifact()?;
        let model_cfg = self.model_config(tokenizer.vocab_size());
        let (ckpt, log) = train_retain_only(&split, &tokenizer, &model_cfg, &self.train_config())?;
        self.save_training_outputs("retrain", &ckpt, &log, &self.retrain_path())
    }

    fn save_training_outputs(
        &self,
        command: &str,
        ckpt: &ModelCheckpoint,
        log: &[EpochRecord],
        ckpt_path: &Path,
    ) -> Result<()> {
        fs::create_dir_all(ckpt_path.parent().unwrap())?;
        save_checkpoint(ckpt, ckpt_path)?;
        let log_path = self.out().join(format!("logs/{command}_train.jsonl"));
        fs::create_dir_all(log_path.parent().unwrap())?;
        write_jsonl(&log_path, log)?;
        let first = log.first().map(|r| r.mean_loss).unwrap_or(f64::NAN);
        let last = log.last().map(|r| r.mean_loss).unwrap_or(f64::NAN);
        println!(
            "  wrote {} (loss {first:.4} -> {last:.4})",
            ckpt_path.display()
        );
        self.write_manifest(command, &[ckpt_path.to_path_buf(), log_path])
    }

    pub fn cmd_unlearn(&self) -> Result<()> {
        let cells = self.config.unlearn_cells()?;
        println!(
            "unlearn: {} cells x {} epochs (checkpoints at {:?})",
            cells.len(),
            self.config.unlearn.epochs,
            self.config.unlearn.checkpoint_epochs
        );
        if self.dry_run {
            for cell in &cells {
                println!("  would run {}", cell.id);
            }
            return Ok(());
        }
        let (split, tokenizer) = self.load_corpus_artifact()?;
        let reference = self.load_ckpt(&self.reference_path(), "finetune")?;
        if reference.config.vocab_size != tokenizer.vocab_size() {
            bail!(
                "reference checkpoint vocab {} does not match corpus vocab {}",
                reference.config.vocab_size,
                tokenizer.vocab_size()
            );
        }

        let mut outputs = Vec::new();
        for cell in &cells {
            let outcome = run_unlearning(&reference, &split, &tokenizer, &self.unlearn_config(cell))?;
            let dir = self.cell_dir(&cell.id);
            fs::create_dir_all(&dir)?;

            let mut epochs_written = Vec::new();
            for (epoch, ckpt) in &outcome.checkpoints {
                let path = dir.join(format!("epoch_{epoch}.ckpt"));
                save_checkpoint(ckpt, &path)?;
                epochs_written.push(*epoch);
                outputs.push(path);
            }
            let steps_path = dir.join("steps.jsonl");
            write_jsonl(&steps_path, &outcome.log)?;
            outputs.push(steps_path);

            let info = CellRunInfo {
                id: cell.id.clone(),
                method: cell.method.method().name().to_string(),
                lambda: cell.lambda,
                temperature: cell.method.temperature(),
                checkpoint_epochs: epochs_written,
                divergence: outcome.divergence.clone(),
            };
            let info_path = dir.join("run.json");
            write_json(&info_path, &info)?;
            outputs.push(info_path);

            match &outcome.divergence {
                Some(reason) => println!("  {}: DIVERGED ({reason})", cell.id),
                None => println!(
                    "  {}: done, final forget loss {:.4}",
                    cell.id,
                    outcome.log.last().map(|r| r.forget_loss).unwrap_or(f64::NAN)
                ),
            }
        }
        self.write_manifest("unlearn", &outputs)
    }

    pub fn cmd_eval(&self) -> Result<()> {
        println!("eval: scoring unlearned checkpoints against reference and retrain");
        if self.dry_run {
            return Ok(());
        }
        let (split, tokenizer) = self.load_corpus_artifact()?;
        let reference = self.load_ckpt(&self.reference_path(), "finetune")?;
        let retrain = self.load_ckpt(&self.retrain_path(), "retrain")?;
        let cells = self.config.unlearn_cells()?;

        let model_cfg = reference.config;
        let forget = tokenize_all(&tokenizer, &split.forget)?;
        let retain = tokenize_all(&tokenizer, &split.retain)?;
        let holdout = tokenize_all(&tokenizer, &split.holdout)?;

        let ctx = EvalContext::new(
            &model_cfg,
            &forget,
            &retain,
            &holdout,
            &reference.params,
            &retrain.params,
            self.exclusion_rule(),
        )?;

        let eval_dir = self.out().join("eval");
        fs::create_dir_all(&eval_dir)?;
        let mut outputs = Vec::new();

        // Per-cell metrics over every checkpoint that exists.
        let mut metrics: Vec<RunMetrics> = Vec::new();
        let mut diverged = Vec::new();
        for cell in &cells {
            let dir = self.cell_dir(&cell.id);
            let info_path = dir.join("run.json");
            self.require(&info_path, "unlearn")?;
            let info: CellRunInfo = read_json(&info_path)?;
            if let Some(reason) = &info.divergence {
                diverged.push((cell.id.clone(), reason.clone()));
            }
            for epoch in &info.checkpoint_epochs {
                let ckpt = self.load_ckpt(&dir.join(format!("epoch_{epoch}.ckpt")), "unlearn")?;
                metrics.push(ctx.evaluate(&ckpt.params, &cell.method, cell.lambda, *epoch)?);
            }
        }
        if metrics.is_empty() {
            bail!("no unlearned checkpoints to evaluate (every cell diverged before its first checkpoint?)");
        }

        let metrics_jsonl = eval_dir.join("metrics.jsonl");
        write_jsonl(&metrics_jsonl, &metrics)?;
        outputs.push(metrics_jsonl);
        let metrics_csv = eval_dir.join("metrics.csv");
        emit_metrics_table(&metrics, &metrics_csv)?;
        outputs.push(metrics_csv);

        // Token-discrimination ROC of every distinct method spec at the
        // reference checkpoint (the model before unlearning).
        let mut specs: Vec<UnlearnMethod> = Vec::new();
        for cell in &cells {
            if !specs.contains(&cell.method) {
                specs.push(cell.method);
            }
        }
        let mut roc_rows = vec![vec![
            "method".to_string(),
            "temperature".to_string(),
            "auc".to_string(),
            "op_fpr".to_string(),
            "op_tpr".to_string(),
        ]];
        for method in &specs {
            let ref_params = method.needs_reference().then_some(&reference.params);
            let roc = unlearn_core::eval::method_roc(
                &reference.params,
                ref_params,
                &model_cfg,
                &forget,
                method,
            )?;
            roc_rows.push(vec![
                method.method().name().to_string(),
                method.temperature().map(|t| t.to_string()).unwrap_or_default(),
                roc.auc.to_string(),
                roc.operating_point.map(|p| p.0.to_string()).unwrap_or_default(),
                roc.operating_point.map(|p| p.1.to_string()).unwrap_or_default(),
            ]);
        }
        let roc_path = eval_dir.join("reference_roc.csv");
        fs::write(&roc_path, unlearn_core::report::emit_csv(&roc_rows))?;
        outputs.push(roc_path);

        // Weight histograms at the reference and retrain checkpoints, plus
        // every evaluated epoch of the histogram methods.
        for name in &self.config.eval.histogram_methods {
            let method = self.config.method_for(name, None)?;
            for (tag, params) in [("reference", &reference.params), ("retrain", &retrain.params)] {
                let ref_params = method.needs_reference().then_some(&reference.params);
                let hist = weight_histograms(
                    params,
                    ref_params,
                    &model_cfg,
                    &forget,
                    &method,
                    self.config.eval.histogram_bins,
                )?;
                outputs.extend(self.write_histogram(
                    &eval_dir,
                    &format!("hist_{tag}_{name}"),
                    &hist,
                )?);
            }
        }
        for cell in &cells {
            let name = cell.method.method().name().to_string();
            if !self.config.eval.histogram_methods.contains(&name) {
                continue;
            }
            let dir = self.cell_dir(&cell.id);
            let info: CellRunInfo = read_json(&dir.join("run.json"))?;
            for epoch in &info.checkpoint_epochs {
                let ckpt = self.load_ckpt(&dir.join(format!("epoch_{epoch}.ckpt")), "unlearn")?;
                let ref_params = cell.method.needs_reference().then_some(&reference.params);
                let hist = weight_histograms(
                    &ckpt.params,
                    ref_params,
                    &model_cfg,
                    &forget,
                    &cell.method,
                    self.config.eval.histogram_bins,
                )?;
                outputs.extend(self.write_histogram(
                    &eval_dir,
                    &format!("hist_{}_epoch{epoch}", cell.id),
                    &hist,
                )?);
            }
        }

        // Baseline context values.
        let ref_ratios = truth_ratios(&reference.params, &model_cfg, &forget)?;
        let ref_fq = forget_quality_from_ratios(&ref_ratios, &ctx.retrain_ratios)?;
        let summary = EvalSummary {
            mu_reference: ctx.mu_ref,
            mu_retrain: model_utility(&retrain.params, &model_cfg, &retain, &holdout)?.mu,
            reference_neg_log_fq: ref_fq.neg_log_fq,
            reference_informative_prob: informative_prob(&reference.params, &model_cfg, &forget)?,
            retrain_informative_prob: ctx.retrain_informative_prob,
            diverged_cells: diverged,
        };
        let summary_path = eval_dir.join("summary.json");
        write_json(&summary_path, &summary)?;
        outputs.push(summary_path);

        println!(
            "  wrote {} metric rows ({} diverged cells)",
            metrics.len(),
            summary.diverged_cells.len()
        );
        self.write_manifest("eval", &outputs)
    }

    fn write_histogram(
        &self,
        dir: &Path,
        stem: &str,
        hist: &unlearn_core::eval::ClassHistogram,
    ) -> Result<Vec<PathBuf>> {
        let json_path = dir.join(format!("{stem}.json"));
        write_json(&json_path, hist)?;
        let mut rows = vec![vec![
            "bin_lo".to_string(),
            "bin_hi".to_string(),
            "informative_density".to_string(),
            "structural_density".to_string(),
        ]];
        for i in 0..hist.informative_density.len() {
            rows.push(vec![
                hist.bin_edges[i].to_string(),
                hist.bin_edges[i + 1].to_string(),
                hist.informative_density[i].to_string(),
                hist.structural_density[i].to_string(),
            ]);
        }
        let csv_path = dir.join(format!("{stem}.csv"));
        fs::write(&csv_path, unlearn_core::report::emit_csv(&rows))?;
        Ok(vec![json_path, csv_path])
    }

    pub fn cmd_sweep(&self) -> Result<()> {
        let s = &self.config.sweep;
        println!(
            "sweep: entropy weighting over {} splits x {} temperatures at lambda {}",
            s.forget_fractions.len(),
            s.temperatures.len(),
            s.lambda
        );
        if self.dry_run {
            return Ok(());
        }

        let mut cells = Vec::new();
        for &fraction in &s.forget_fractions {
            let split = generate_corpus_with_holdout(
                self.config.corpus_seed(),
                self.config.corpus.n_authors,
                self.config.corpus.qa_per_author,
                fraction,
                self.config.corpus.k_perturbations,
                self.config.corpus.holdout_fraction,
            )?;
            let tokenizer = Tokenizer::from_split(&split);
            let model_cfg = self.model_config(tokenizer.vocab_size());
            let (reference, _) =
                train_reference(&split, &tokenizer, &model_cfg, &self.train_config())?;
            let (retrain, _) =
                train_retain_only(&split, &tokenizer, &model_cfg, &self.train_config())?;

            let forget = tokenize_all(&tokenizer, &split.forget)?;
            let retain = tokenize_all(&tokenizer, &split.retain)?;
            let holdout = tokenize_all(&tokenizer, &split.holdout)?;
            let ctx = EvalContext::new(
                &model_cfg,
                &forget,
                &retain,
                &holdout,
                &reference.params,
                &retrain.params,
                self.exclusion_rule(),
            )?;

            for &temperature in &s.temperatures {
                let cell = CellSpec::new(UnlearnMethod::Etw { temperature }, s.lambda);
                let mut cfg = self.unlearn_config(&cell);
                cfg.checkpoint_epochs = vec![cfg.epochs];
                let outcome = run_unlearning(&reference, &split, &tokenizer, &cfg)?;
                let sweep_cell = match outcome.checkpoints.last() {
                    Some((epoch, ckpt)) => {
                        let m = ctx.evaluate(&ckpt.params, &cell.method, cell.lambda, *epoch)?;
                        SweepCell {
                            temperature,
                            split: fraction,
                            agg: m.agg,
                            neg_log_fq: m.neg_log_fq,
                            delta_mu: m.delta_mu_pct,
                            excluded: m.excluded,
                        }
                    }
                    None => SweepCell {
                        temperature,
                        split: fraction,
                        agg: f64::NAN,
                        neg_log_fq: f64::NAN,
                        delta_mu: f64::NAN,
                        excluded: true,
                    },
                };
                println!(
                    "  split {fraction} T {temperature}: agg {:.4}{}",
                    sweep_cell.agg,
                    if sweep_cell.excluded { " (excluded)" } else { "" }
                );
                cells.push(sweep_cell);
            }
        }

        let dir = self.out().join("sweep");
        fs::create_dir_all(&dir)?;
        let path = dir.join("sweep.csv");
        emit_sweep(&cells, &path)?;
        self.write_manifest("sweep", &[path])
    }

    pub fn cmd_report(&self) -> Result<()> {
        println!("report: metrics table and token-highlight pages");
        if self.dry_run {
            return Ok(());
        }
        let metrics_jsonl = self.out().join("eval/metrics.jsonl");
        self.require(&metrics_jsonl, "eval")?;
        let metrics: Vec<RunMetrics> = read_jsonl(&metrics_jsonl)?;

        let report_dir = self.out().join("report");
        fs::create_dir_all(&report_dir)?;
        let mut outputs = Vec::new();

        let table_path = report_dir.join("table.csv");
        emit_metrics_table(&metrics, &table_path)?;
        outputs.push(table_path);

        // Highlight pages: forget samples, weights from the model before
        // unlearning (the reference checkpoint).
        let (split, tokenizer) = self.load_corpus_artifact()?;
        let reference = self.load_ckpt(&self.reference_path(), "finetune")?;
        let model_cfg = reference.config;
        let n_samples = self.config.report.highlight_samples.min(split.forget.len());

        for name in &self.config.report.highlight_methods {
            let method = self.config.method_for(name, None)?;
            let ref_params = method.needs_reference().then_some(&reference.params);
            let mut samples = Vec::new();
            for (i, qa) in split.forget.iter().take(n_samples).enumerate() {
                let sample = tokenize(&tokenizer, qa)?;
                let weights =
                    compute_weights(&reference.params, ref_params, &model_cfg, &sample, &method)?;
                let mut tokens = Vec::new();
                for &id in &sample.prompt_ids {
                    tokens.push(HighlightToken {
                        text: tokenizer.decode(&[id])?,
                        weight: None,
                        informative: false,
                    });
                }
                for ((&id, &w), &informative) in sample
                    .completion_ids
                    .iter()
                    .zip(&weights.weights)
                    .zip(&sample.informative_mask)
                {
                    tokens.push(HighlightToken {
                        text: tokenizer.decode(&[id])?,
                        weight: Some(w),
                        informative,
                    });
                }
                samples.push(HighlightSample {
                    title: format!("forget sample {i} (author {})", qa.author_id),
                    tokens,
                });
            }
            let doc = HighlightDocument {
                method: name.clone(),
                samples,
            };
            let path = report_dir.join(format!("highlights_{name}.html"));
            emit_highlight_html(&doc, &path)?;
            outputs.push(path);
        }

        println!("  wrote {} report artifacts", outputs.len());
        self.write_manifest("report", &outputs)
    }

    /// The full pipeline in dependency order.
    pub fn cmd_run_all(&self) -> Result<()> {
        self.cmd_gen_corpus()?;
        self.cmd_finetune()?;
        self.cmd_retrain()?;
        self.cmd_unlearn()?;
        self.cmd_eval()?;
        self.cmd_report()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).with_context(|| format!("parsing line of {}", path.display())))
        .collect()
}
