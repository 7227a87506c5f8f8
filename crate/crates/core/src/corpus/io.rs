//! Line-delimited corpus files: one header record, then one record per QA
//! pair.

use super::{CorpusError, CorpusSplit, QAPair, Tokenizer};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    seed: u64,
    n_authors: usize,
    qa_per_author: usize,
    forget_fraction: f64,
    vocab: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    author_id: usize,
    split: String,
    question: String,
    answer: String,
    spans: Vec<(usize, usize)>,
    paraphrase: String,
    perturbations: Vec<String>,
}

impl Record {
    fn from_qa(qa: &QAPair, split: &str) -> Self {
        Self {
            author_id: qa.author_id,
            split: split.to_string(),
            question: qa.question.clone(),
            answer: qa.answer.clone(),
            spans: qa.informative_spans.clone(),
            paraphrase: qa.paraphrased_answer.clone(),
            perturbations: qa.perturbed_answers.clone(),
        }
    }

    fn into_qa(self) -> QAPair {
        QAPair {
            author_id: self.author_id,
            question: self.question,
            answer: self.answer,
            informative_spans: self.spans,
            paraphrased_answer: self.paraphrase,
            perturbed_answers: self.perturbations,
        }
    }
}

/// Write the corpus and its vocabulary as UTF-8 JSON lines.
pub fn save_corpus(
    split: &CorpusSplit,
    tokenizer: &Tokenizer,
    path: impl AsRef<Path>,
) -> Result<(), CorpusError> {
    let header = Header {
        schema_version: CORPUS_SCHEMA_VERSION,
        seed: split.seed,
        n_authors: split.n_authors,
        qa_per_author: split.qa_per_author,
        forget_fraction: split.forget_fraction,
        vocab: tokenizer.vocab().to_vec(),
    };
    let mut out = Vec::new();
    writeln!(out, "{}", serde_json::to_string(&header).expect("header json"))
        .expect("vec write");
    for (pairs, name) in [
        (&split.forget, "forget"),
        (&split.retain, "retain"),
        (&split.holdout, "holdout"),
    ] {
        for qa in pairs.iter() {
            let record = Record::from_qa(qa, name);
            writeln!(out, "{}", serde_json::to_string(&record).expect("record json"))
                .expect("vec write");
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Load a corpus file, validating the schema version, the vocabulary, and
/// the record count so a truncated file fails loudly.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<(CorpusSplit, Tokenizer), CorpusError> {
    let file = fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();

    let header_line = lines
        .next()
        .ok_or_else(|| CorpusError::Schema("missing header record".into()))??;
    let header: Header = serde_json::from_str(&header_line)
        .map_err(|e| CorpusError::Schema(format!("bad header record: {e}")))?;
    if header.schema_version != CORPUS_SCHEMA_VERSION {
        return Err(CorpusError::Schema(format!(
            "schema version {} unsupported (expected {CORPUS_SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    let tokenizer = Tokenizer::from_vocab(header.vocab)?;

    let mut forget = Vec::new();
    let mut retain = Vec::new();
    let mut holdout = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Schema(format!("bad QA record: {e}")))?;
        let split = record.split.clone();
        let qa = record.into_qa();
        qa.validate()?;
        match split.as_str() {
            "forget" => forget.push(qa),
            "retain" => retain.push(qa),
            "holdout" => holdout.push(qa),
            other => {
                return Err(CorpusError::Schema(format!("unknown split tag `{other}`")));
            }
        }
    }

    let expected = header.n_authors * header.qa_per_author;
    let got = forget.len() + retain.len() + holdout.len();
    if got != expected {
        return Err(CorpusError::Schema(format!(
            "expected {expected} QA records, found {got} (truncated or padded file?)"
        )));
    }

    Ok((
        CorpusSplit {
            seed: header.seed,
            n_authors: header.n_authors,
            qa_per_author: header.qa_per_author,
            forget_fraction: header.forget_fraction,
            forget,
            retain,
            holdout,
        },
        tokenizer,
    ))
}
