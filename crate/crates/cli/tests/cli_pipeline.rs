//! Integration tests for the pipeline commands: prerequisite checks,
//! dry runs, per-command idempotence, and the metrics-table contract.

use std::fs;
use std::path::PathBuf;
use unlearn_cli::{ExperimentConfig, Pipeline};

fn small_config(out: PathBuf) -> ExperimentConfig {
    let mut config = ExperimentConfig {
        seed: 23,
        out_dir: out,
        ..ExperimentConfig::default()
    };
    config.corpus.n_authors = 8;
    config.corpus.qa_per_author = 3;
    config.corpus.forget_fraction = 0.25;
    config.corpus.k_perturbations = 2;
    config.model.d_model = 32;
    config.model.n_layers = 1;
    config.model.n_heads = 2;
    config.model.d_ff = 64;
    config.model.max_context = 64;
    config.train.epochs = 4;
    config.train.lr = 2e-3;
    config.unlearn.epochs = 2;
    config.unlearn.checkpoint_epochs = vec![1, 2];
    config.unlearn.methods = vec!["uniform".into(), "etw".into(), "mask_noun".into()];
    config.unlearn.lambdas = vec![0.05];
    config.unlearn.temperatures = vec![1.0];
    config.eval.histogram_methods = vec!["etw".into()];
    config.report.highlight_samples = 2;
    config
}

#[test]
fn eval_before_prerequisites_names_the_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(small_config(dir.path().join("out")), false).unwrap();

    // Nothing exists yet: the corpus is the first missing artifact.
    let err = pipeline.cmd_eval().unwrap_err().to_string();
    assert!(err.contains("missing prerequisite artifact"), "{err}");
    assert!(err.contains("corpus.jsonl"), "{err}");
    assert!(err.contains("gen-corpus"), "{err}");

    // With corpus and reference but no retrain, eval must name retrain.ckpt.
    pipeline.cmd_gen_corpus().unwrap();
    pipeline.cmd_finetune().unwrap();
    pipeline.cmd_unlearn().unwrap();
    let err = pipeline.cmd_eval().unwrap_err().to_string();
    assert!(err.contains("retrain.ckpt"), "{err}");
    assert!(err.contains("retrain"), "{err}");
}

#[test]
fn dry_run_validates_without_side_effects() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let pipeline = Pipeline::new(small_config(out.clone()), true).unwrap();
    pipeline.cmd_gen_corpus().unwrap();
    pipeline.cmd_finetune().unwrap();
    pipeline.cmd_run_all().unwrap();
    assert!(!out.exists(), "dry run created {}", out.display());
}

#[test]
fn commands_are_idempotent_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let pipeline = Pipeline::new(small_config(out.clone()), false).unwrap();

    pipeline.cmd_gen_corpus().unwrap();
    let corpus_a = fs::read(out.join("corpus.jsonl")).unwrap();
    pipeline.cmd_gen_corpus().unwrap();
    assert_eq!(corpus_a, fs::read(out.join("corpus.jsonl")).unwrap());

    pipeline.cmd_finetune().unwrap();
    let ckpt_a = fs::read(out.join("checkpoints/reference.ckpt")).unwrap();
    pipeline.cmd_finetune().unwrap();
    assert_eq!(ckpt_a, fs::read(out.join("checkpoints/reference.ckpt")).unwrap());

    pipeline.cmd_retrain().unwrap();
    pipeline.cmd_unlearn().unwrap();
    let steps_a = fs::read(out.join("unlearn/etw_lam0.05_T1/steps.jsonl")).unwrap();
    pipeline.cmd_unlearn().unwrap();
    assert_eq!(
        steps_a,
        fs::read(out.join("unlearn/etw_lam0.05_T1/steps.jsonl")).unwrap()
    );
}

#[test]
fn metrics_table_has_one_row_per_cell_and_epoch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = small_config(out.clone());
    let n_cells = config.unlearn_cells().unwrap().len();
    let n_epochs = config.unlearn.checkpoint_epochs.len();
    let pipeline = Pipeline::new(config, false).unwrap();
    pipeline.cmd_run_all().unwrap();

    let text = fs::read_to_string(out.join("eval/metrics.csv")).unwrap();
    let rows = unlearn_core::report::parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 1 + n_cells * n_epochs);

    // Manifest files exist for every command that ran.
    for command in ["gen-corpus", "finetune", "retrain", "unlearn", "eval", "report"] {
        let path = out.join(format!("manifest/{command}.json"));
        assert!(path.exists(), "missing {}", path.display());
    }

    // Highlight pages exist for each configured method.
    for method in ["etw", "wga", "imp", "satimp", "tnpo", "mask_noun", "mask_entity"] {
        assert!(out.join(format!("report/highlights_{method}.html")).exists());
    }
}
