//! Word-level tokenizer with a closed vocabulary, span-to-mask alignment,
//! and the lexical noun/entity taggers backing the mask baselines.

use super::pools::{CAPITALIZED_FUNCTION_WORDS, NOUN_LEXICON};
use super::{CorpusError, CorpusSplit, QAPair};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const PAD_ID: u32 = 2;
pub const UNK_ID: u32 = 3;

const SPECIALS: [&str; 4] = ["<bos>", "<eos>", "<pad>", "<unk>"];

/// Closed word+punctuation vocabulary. Ids 0..=3 are the specials in fixed
/// order; the rest are the corpus word types, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    vocab: Vec<String>,
    #[serde(skip)]
    token_to_id: HashMap<String, u32>,
}

impl Tokenizer {
    /// Build the vocabulary from every string the corpus contains, including
    /// paraphrases and perturbations, so no generator output can be unknown.
    pub fn from_split(split: &CorpusSplit) -> Self {
        let mut words = std::collections::BTreeSet::new();
        for qa in split.all_pairs() {
            for text in [&qa.question, &qa.answer, &qa.paraphrased_answer]
                .into_iter()
                .chain(qa.perturbed_answers.iter())
            {
                for w in text.split_whitespace() {
                    words.insert(w.to_string());
                }
            }
        }
        let mut vocab: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        vocab.extend(words);
        Self::from_vocab(vocab).expect("generated vocabulary is well-formed")
    }

    /// Rebuild a tokenizer from a stored vocabulary list.
    pub fn from_vocab(vocab: Vec<String>) -> Result<Self, CorpusError> {
        if vocab.len() < SPECIALS.len() || vocab.len() > u32::MAX as usize {
            return Err(CorpusError::Schema(format!(
                "vocabulary has {} entries",
                vocab.len()
            )));
        }
        for (i, s) in SPECIALS.iter().enumerate() {
            if vocab[i] != *s {
                return Err(CorpusError::Schema(format!(
                    "vocabulary slot {i} must be the special `{s}`, found `{}`",
                    vocab[i]
                )));
            }
        }
        let mut token_to_id = HashMap::with_capacity(vocab.len());
        for (i, t) in vocab.iter().enumerate() {
            if token_to_id.insert(t.clone(), i as u32).is_some() {
                return Err(CorpusError::Schema(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        Ok(Self { vocab, token_to_id })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// Encode normalized text. Unknown words are an error: the vocabulary is
    /// closed over the corpus, so an unknown word means foreign input.
    pub fn encode(&self, text: &str) -> Result<Vec<u32>, CorpusError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        if words.is_empty() {
            return Err(CorpusError::EmptyText);
        }
        words
            .into_iter()
            .map(|w| {
                self.token_to_id
                    .get(w)
                    .copied()
                    .ok_or_else(|| CorpusError::UnknownToken(w.to_string()))
            })
            .collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Result<String, CorpusError> {
        let mut out = String::new();
        for &id in ids {
            let tok = self
                .vocab
                .get(id as usize)
                .ok_or(CorpusError::InvalidTokenId(id))?;
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(tok);
        }
        Ok(out)
    }
}

/// A QA pair mapped onto token ids, with per-completion-token masks and the
/// tokenized answer variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenizedSample {
    pub author_id: usize,
    pub prompt_ids: Vec<u32>,
    pub completion_ids: Vec<u32>,
    /// True for completion tokens intersecting a ground-truth informative span.
    pub informative_mask: Vec<bool>,
    /// Lexical noun tagger output (mask baseline, noun flavor).
    pub noun_like_mask: Vec<bool>,
    /// Lexical entity tagger output (mask baseline, entity flavor).
    pub entity_like_mask: Vec<bool>,
    /// Tokenized paraphrased answer (same prompt).
    pub paraphrase_ids: Vec<u32>,
    /// Tokenized perturbed answers (same prompt).
    pub perturbed_ids: Vec<Vec<u32>>,
}

impl TokenizedSample {
    pub fn completion_len(&self) -> usize {
        self.completion_ids.len()
    }

    /// Prompt and completion concatenated: the model input sequence.
    pub fn full_sequence(&self) -> Vec<u32> {
        let mut seq = Vec::with_capacity(self.prompt_ids.len() + self.completion_ids.len());
        seq.extend_from_slice(&self.prompt_ids);
        seq.extend_from_slice(&self.completion_ids);
        seq
    }
}

/// Byte range of each whitespace-separated token of `text`.
pub fn token_char_ranges(text: &str) -> Vec<(usize, usize)> {
    let mut ranges = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i > start {
            ranges.push((start, i));
        }
    }
    ranges
}

/// Map character spans onto a per-token boolean mask by a left-to-right
/// greedy scan: a token is marked when its character extent intersects the
/// current span, and spans are consumed as the scan passes them.
pub fn align_informative_spans(qa: &QAPair) -> Vec<bool> {
    align_spans(&qa.answer, &qa.informative_spans)
}

pub(crate) fn align_spans(text: &str, spans: &[(usize, usize)]) -> Vec<bool> {
    let ranges = token_char_ranges(text);
    let mut mask = vec![false; ranges.len()];
    let mut s = 0usize;
    for (i, &(ts, te)) in ranges.iter().enumerate() {
        // Drop spans that end before this token starts.
        while s < spans.len() && spans[s].1 <= ts {
            s += 1;
        }
        // Mark against every span that starts before this token ends.
        let mut j = s;
        while j < spans.len() && spans[j].0 < te {
            if spans[j].1 > ts {
                mask[i] = true;
            }
            j += 1;
        }
    }
    mask
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// Entity tagger: capitalized words that are not sentence-level function
/// words. Context-blind on purpose: it marks name echoes from the question
/// just as eagerly as new facts, mirroring what an off-the-shelf NER pass
/// does on this corpus.
pub fn entity_like_mask(text: &str) -> Vec<bool> {
    text.split_whitespace()
        .map(|w| is_capitalized(w) && !CAPITALIZED_FUNCTION_WORDS.contains(&w))
        .collect()
}

/// Noun tagger: entities plus a fixed lexicon of common nouns, including the
/// lowercase pool values (occupations and genre words).
pub fn noun_like_mask(text: &str) -> Vec<bool> {
    text.split_whitespace()
        .map(|w| {
            (is_capitalized(w) && !CAPITALIZED_FUNCTION_WORDS.contains(&w))
                || NOUN_LEXICON.contains(&w)
                || super::pools::OCCUPATIONS.contains(&w)
                || super::pools::GENRES
                    .iter()
                    .any(|g| g.split_whitespace().any(|gw| gw == w))
        })
        .collect()
}

/// Tokenize a QA pair: prompt from the question, completion from the answer,
/// masks over completion tokens, plus tokenized paraphrase and perturbations.
pub fn tokenize(tokenizer: &Tokenizer, qa: &QAPair) -> Result<TokenizedSample, CorpusError> {
    let prompt_ids = tokenizer.encode(&qa.question)?;
    let completion_ids = tokenizer.encode(&qa.answer)?;
    let informative_mask = align_informative_spans(qa);
    debug_assert_eq!(informative_mask.len(), completion_ids.len());
    let paraphrase_ids = tokenizer.encode(&qa.paraphrased_answer)?;
    let perturbed_ids = qa
        .perturbed_answers
        .iter()
        .map(|p| tokenizer.encode(p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TokenizedSample {
        author_id: qa.author_id,
        prompt_ids,
        completion_ids,
        informative_mask,
        noun_like_mask: noun_like_mask(&qa.answer),
        entity_like_mask: entity_like_mask(&qa.answer),
        paraphrase_ids,
        perturbed_ids,
    })
}

/// Tokenize every sample of a split in order.
pub fn tokenize_all(
    tokenizer: &Tokenizer,
    pairs: &[QAPair],
) -> Result<Vec<TokenizedSample>, CorpusError> {
    pairs.iter().map(|qa| tokenize(tokenizer, qa)).collect()
}
