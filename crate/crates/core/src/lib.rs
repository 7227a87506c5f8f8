//! Desk-scale laboratory for token-level language-model unlearning.
//!
//! The crate trains a tiny decoder-only language model on a synthetic
//! annotated QA corpus, unlearns a forget split with a family of token-wise
//! weighted gradient-ascent objectives, and evaluates forget quality, model
//! utility, and informative-token discrimination.
//!
//! Module map:
//! - [`corpus`]: synthetic annotated QA corpus, tokenizer, span alignment
//! - [`lm`]: the model, exact reverse-mode gradients, Adam, checkpoints
//! - [`weighting`]: entropy machinery and every token regularizer
//! - [`objectives`]: loss family and the three training procedures
//! - [`eval`]: truth ratio, KS forget quality, utility, ROC, histograms
//! - [`report`]: CSV tables, sweep tables, token-highlight HTML

pub mod corpus;
pub mod eval;
pub mod lm;
pub mod objectives;
pub mod report;
pub mod rng;
pub mod weighting;
