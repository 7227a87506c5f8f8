//! Synthetic fictitious-author QA corpus with exact informative-span
//! annotations.
//!
//! The generator knows which template slots carry author-specific facts, so
//! the informative spans are ground truth rather than the output of a parser.
//! Answers come with a paraphrased variant and k perturbed (false) variants
//! whose informative slots are swapped for other pool values, which is what
//! the truth-ratio evaluation compares against.
//!
//! All emitted text is normalized: single spaces between tokens and a
//! terminal period or question mark, so tokenization round-trips exactly.

mod io;
mod pools;
mod text;

pub use io::{load_corpus, save_corpus};
pub use pools::{AttributeKind, ATTRIBUTE_KINDS, MAX_QA_PER_AUTHOR};
pub use text::{
    align_informative_spans, entity_like_mask, noun_like_mask, token_char_ranges, tokenize,
    tokenize_all, TokenizedSample, Tokenizer, BOS_ID, EOS_ID, PAD_ID, UNK_ID,
};

use crate::rng::Rng;
use pools::{Piece, QaTemplate, Slot, TEMPLATES};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown token `{0}` not in the closed vocabulary")]
    UnknownToken(String),
    #[error("token id {0} out of vocabulary range")]
    InvalidTokenId(u32),
    #[error("empty text cannot be tokenized")]
    EmptyText,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corpus schema error: {0}")]
    Schema(String),
}

/// Fictitious author: a unique name plus attribute values from closed pools.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorProfile {
    pub author_id: usize,
    pub name: String,
    pub attributes: BTreeMap<AttributeKind, String>,
}

/// One question-answer pair with ground-truth informative spans and the
/// paraphrased / perturbed answer variants used by truth-ratio evaluation.
///
/// Spans are half-open `(start, end)` byte offsets into `answer`; all
/// generated text is ASCII so these coincide with character offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub author_id: usize,
    pub question: String,
    pub answer: String,
    pub informative_spans: Vec<(usize, usize)>,
    pub paraphrased_answer: String,
    pub perturbed_answers: Vec<String>,
}

impl QAPair {
    /// Check the span invariants: sorted, non-overlapping, in bounds, each
    /// covering at least one non-whitespace character.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut prev_end = 0usize;
        for &(s, e) in &self.informative_spans {
            if s >= e || e > self.answer.len() {
                return Err(CorpusError::Schema(format!(
                    "span ({s}, {e}) out of bounds for answer of length {}",
                    self.answer.len()
                )));
            }
            if s < prev_end {
                return Err(CorpusError::Schema(format!(
                    "span ({s}, {e}) overlaps or is out of order"
                )));
            }
            if self.answer[s..e].chars().all(char::is_whitespace) {
                return Err(CorpusError::Schema(format!(
                    "span ({s}, {e}) covers only whitespace"
                )));
            }
            prev_end = e;
        }
        for p in &self.perturbed_answers {
            if !differs_only_inside_spans(&self.answer, p, &self.informative_spans) {
                return Err(CorpusError::Schema(
                    "perturbed answer differs outside the informative spans".into(),
                ));
            }
        }
        Ok(())
    }
}

/// True when `perturbed` agrees with `original` on everything outside the
/// spans and differs somewhere inside them. Perturbed values may have a
/// different length, so the comparison works gap-by-gap.
fn differs_only_inside_spans(original: &str, perturbed: &str, spans: &[(usize, usize)]) -> bool {
    if spans.is_empty() {
        return false;
    }
    // Outside segments of the original, in order.
    let mut outside = Vec::new();
    let mut cursor = 0usize;
    for &(s, e) in spans {
        outside.push(&original[cursor..s]);
        cursor = e;
    }
    outside.push(&original[cursor..]);

    // The perturbed string must contain the same outside segments in order,
    // with some (possibly different) span content between them.
    let mut rest = perturbed;
    let first = outside[0];
    if !rest.starts_with(first) {
        return false;
    }
    rest = &rest[first.len()..];
    for seg in &outside[1..outside.len() - 1] {
        match rest.find(*seg) {
            Some(idx) => rest = &rest[idx + seg.len()..],
            None => return false,
        }
    }
    let last = outside[outside.len() - 1];
    if !rest.ends_with(last) {
        return false;
    }
    perturbed != original
}

/// Forget/retain/holdout partition of the generated QA pairs, author-disjoint
/// by construction. Holdout authors are never trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub seed: u64,
    pub n_authors: usize,
    pub qa_per_author: usize,
    pub forget_fraction: f64,
    pub forget: Vec<QAPair>,
    pub retain: Vec<QAPair>,
    pub holdout: Vec<QAPair>,
}

impl CorpusSplit {
    pub fn all_pairs(&self) -> impl Iterator<Item = &QAPair> {
        self.forget
            .iter()
            .chain(self.retain.iter())
            .chain(self.holdout.iter())
    }

    pub fn k_perturbations(&self) -> usize {
        self.all_pairs()
            .next()
            .map(|qa| qa.perturbed_answers.len())
            .unwrap_or(0)
    }
}

/// Fraction of authors held out entirely from training, used by the default
/// [`generate_corpus`] entry point.
pub const DEFAULT_HOLDOUT_FRACTION: f64 = 0.10;

const MAX_AUTHORS: usize = 200;
const MAX_PERTURBATIONS: usize = 8;

/// Generate the full corpus deterministically from its arguments.
pub fn generate_corpus(
    seed: u64,
    n_authors: usize,
    qa_per_author: usize,
    forget_fraction: f64,
    k_perturbations: usize,
) -> Result<CorpusSplit, CorpusError> {
    generate_corpus_with_holdout(
        seed,
        n_authors,
        qa_per_author,
        forget_fraction,
        k_perturbations,
        DEFAULT_HOLDOUT_FRACTION,
    )
}

/// As [`generate_corpus`], with an explicit holdout fraction.
pub fn generate_corpus_with_holdout(
    seed: u64,
    n_authors: usize,
    qa_per_author: usize,
    forget_fraction: f64,
    k_perturbations: usize,
    holdout_fraction: f64,
) -> Result<CorpusSplit, CorpusError> {
    if !(4..=MAX_AUTHORS).contains(&n_authors) {
        return Err(CorpusError::InvalidArgument(format!(
            "n_authors must be in 4..={MAX_AUTHORS}, got {n_authors}"
        )));
    }
    if qa_per_author == 0 || qa_per_author > MAX_QA_PER_AUTHOR {
        return Err(CorpusError::InvalidArgument(format!(
            "qa_per_author must be in 1..={MAX_QA_PER_AUTHOR}, got {qa_per_author}"
        )));
    }
    if !(forget_fraction > 0.0 && forget_fraction < 1.0) {
        return Err(CorpusError::InvalidArgument(format!(
            "forget_fraction must lie in (0, 1), got {forget_fraction}"
        )));
    }
    if k_perturbations == 0 || k_perturbations > MAX_PERTURBATIONS {
        return Err(CorpusError::InvalidArgument(format!(
            "k_perturbations must be in 1..={MAX_PERTURBATIONS}, got {k_perturbations}"
        )));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(CorpusError::InvalidArgument(format!(
            "holdout_fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }

    let n_forget = ((forget_fraction * n_authors as f64).round() as usize).max(1);
    let n_holdout = ((holdout_fraction * n_authors as f64).round() as usize).max(1);
    if n_forget + n_holdout >= n_authors {
        return Err(CorpusError::InvalidArgument(format!(
            "forget ({n_forget}) + holdout ({n_holdout}) authors leave no retain set \
             out of {n_authors}"
        )));
    }

    let mut rng = Rng::new(seed);
    let authors = gen_authors(&mut rng, n_authors);

    let mut qa_by_author: Vec<Vec<QAPair>> = Vec::with_capacity(n_authors);
    for author in &authors {
        let mut pairs = Vec::with_capacity(qa_per_author);
        for template in TEMPLATES.iter().take(qa_per_author) {
            let qa = gen_qa(&mut rng, author, template, k_perturbations);
            debug_assert!(qa.validate().is_ok());
            pairs.push(qa);
        }
        qa_by_author.push(pairs);
    }

    // Author-level partition: forget, then holdout, rest retain.
    let mut order: Vec<usize> = (0..n_authors).collect();
    rng.shuffle(&mut order);
    let mut forget_ids: Vec<usize> = order[..n_forget].to_vec();
    let mut holdout_ids: Vec<usize> = order[n_forget..n_forget + n_holdout].to_vec();
    let mut retain_ids: Vec<usize> = order[n_forget + n_holdout..].to_vec();
    forget_ids.sort_unstable();
    holdout_ids.sort_unstable();
    retain_ids.sort_unstable();

    let collect = |ids: &[usize], qa_by_author: &[Vec<QAPair>]| -> Vec<QAPair> {
        ids.iter().flat_map(|&i| qa_by_author[i].clone()).collect()
    };

    Ok(CorpusSplit {
        seed,
        n_authors,
        qa_per_author,
        forget_fraction,
        forget: collect(&forget_ids, &qa_by_author),
        retain: collect(&retain_ids, &qa_by_author),
        holdout: collect(&holdout_ids, &qa_by_author),
    })
}

/// The author profiles `generate_corpus` would produce for this seed.
pub fn generate_authors(seed: u64, n_authors: usize) -> Result<Vec<AuthorProfile>, CorpusError> {
    if n_authors == 0 || n_authors > MAX_AUTHORS {
        return Err(CorpusError::InvalidArgument(format!(
            "n_authors must be in 1..={MAX_AUTHORS}, got {n_authors}"
        )));
    }
    let mut rng = Rng::new(seed);
    Ok(gen_authors(&mut rng, n_authors))
}

fn all_names() -> Vec<String> {
    let mut names = Vec::with_capacity(pools::FIRST_NAMES.len() * pools::LAST_NAMES.len());
    for f in pools::FIRST_NAMES {
        for l in pools::LAST_NAMES {
            names.push(format!("{f} {l}"));
        }
    }
    names
}

fn all_titles() -> Vec<String> {
    let mut titles = Vec::with_capacity(pools::TITLE_ADJECTIVES.len() * pools::TITLE_NOUNS.len());
    for a in pools::TITLE_ADJECTIVES {
        for n in pools::TITLE_NOUNS {
            titles.push(format!("The {a} {n}"));
        }
    }
    titles
}

fn gen_authors(rng: &mut Rng, n_authors: usize) -> Vec<AuthorProfile> {
    // Names and debut titles are sampled without replacement so the full
    // attribute tuple is unique per author and every question is unambiguous.
    let mut names = all_names();
    rng.shuffle(&mut names);
    let mut titles = all_titles();
    rng.shuffle(&mut titles);

    (0..n_authors)
        .map(|author_id| {
            let mut attributes = BTreeMap::new();
            attributes.insert(
                AttributeKind::Birthplace,
                pick(rng, pools::BIRTHPLACES).to_string(),
            );
            attributes.insert(AttributeKind::Genre, pick(rng, pools::GENRES).to_string());
            attributes.insert(AttributeKind::DebutWork, titles[author_id].clone());
            attributes.insert(
                AttributeKind::FatherOccupation,
                pick(rng, pools::OCCUPATIONS).to_string(),
            );
            attributes.insert(
                AttributeKind::MotherOccupation,
                pick(rng, pools::OCCUPATIONS).to_string(),
            );
            attributes.insert(AttributeKind::Award, pick(rng, pools::AWARDS).to_string());
            AuthorProfile {
                author_id,
                name: names[author_id].clone(),
                attributes,
            }
        })
        .collect()
}

fn pick<'a>(rng: &mut Rng, pool: &'a [&'a str]) -> &'a str {
    pool[rng.below(pool.len())]
}

fn slot_value(author: &AuthorProfile, slot: Slot) -> &str {
    match slot {
        Slot::Name => &author.name,
        Slot::Attr(kind) => &author.attributes[&kind],
    }
}

/// Render a template into normalized text, returning the byte spans of the
/// `Fact` pieces. `overrides` substitutes fact values (used for perturbed
/// answers); echo slots always keep the author's true values.
fn render(
    pieces: &[Piece],
    author: &AuthorProfile,
    overrides: &[(Slot, &str)],
) -> (String, Vec<(usize, usize)>) {
    let mut text = String::new();
    let mut spans = Vec::new();
    for piece in pieces {
        if !text.is_empty() {
            text.push(' ');
        }
        match piece {
            Piece::Lit(s) => text.push_str(s),
            Piece::Echo(slot) => text.push_str(slot_value(author, *slot)),
            Piece::Fact(slot) => {
                let value = overrides
                    .iter()
                    .find(|(s, _)| s == slot)
                    .map(|(_, v)| *v)
                    .unwrap_or_else(|| slot_value(author, *slot));
                let start = text.len();
                text.push_str(value);
                spans.push((start, text.len()));
            }
        }
    }
    (text, spans)
}

/// Draw `k` distinct replacement values for a fact slot, all different from
/// the author's true value.
fn alternatives(rng: &mut Rng, slot: Slot, original: &str, k: usize) -> Vec<String> {
    let pool: Vec<String> = match slot {
        Slot::Name => all_names(),
        Slot::Attr(AttributeKind::DebutWork) => all_titles(),
        Slot::Attr(kind) => pools::flat_pool(kind)
            .expect("flat pool")
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let mut chosen: Vec<String> = Vec::with_capacity(k);
    while chosen.len() < k {
        let candidate = &pool[rng.below(pool.len())];
        if candidate != original && !chosen.iter().any(|c| c == candidate) {
            chosen.push(candidate.clone());
        }
    }
    chosen
}

fn gen_qa(rng: &mut Rng, author: &AuthorProfile, template: &QaTemplate, k: usize) -> QAPair {
    let (question, _) = render(template.question, author, &[]);
    let (answer, informative_spans) = render(template.answer, author, &[]);
    let (paraphrased_answer, _) = render(template.paraphrase, author, &[]);

    // Distinct fact slots of the answer, in order of first appearance.
    let mut fact_slots: Vec<Slot> = Vec::new();
    for piece in template.answer {
        if let Piece::Fact(slot) = piece {
            if !fact_slots.contains(slot) {
                fact_slots.push(*slot);
            }
        }
    }

    let alts_per_slot: Vec<(Slot, Vec<String>)> = fact_slots
        .iter()
        .map(|&slot| {
            let alts = alternatives(rng, slot, slot_value(author, slot), k);
            (slot, alts)
        })
        .collect();

    let perturbed_answers = (0..k)
        .map(|j| {
            let overrides: Vec<(Slot, &str)> = alts_per_slot
                .iter()
                .map(|(slot, alts)| (*slot, alts[j].as_str()))
                .collect();
            render(template.answer, author, &overrides).0
        })
        .collect();

    QAPair {
        author_id: author.author_id,
        question,
        answer,
        informative_spans,
        paraphrased_answer,
        perturbed_answers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn default_desk_corpus_counts() {
        let c = generate_corpus(7, 20, 5, 0.10, 3).unwrap();
        let forget_authors: BTreeSet<usize> = c.forget.iter().map(|q| q.author_id).collect();
        let holdout_authors: BTreeSet<usize> = c.holdout.iter().map(|q| q.author_id).collect();
        let retain_authors: BTreeSet<usize> = c.retain.iter().map(|q| q.author_id).collect();
        assert_eq!(forget_authors.len(), 2);
        assert_eq!(holdout_authors.len(), 2);
        assert_eq!(retain_authors.len(), 16);
        assert_eq!(c.forget.len(), 10);
        assert_eq!(
            c.forget.len() + c.retain.len() + c.holdout.len(),
            20 * 5
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_corpus(7, 20, 5, 0.10, 3).unwrap();
        let b = generate_corpus(7, 20, 5, 0.10, 3).unwrap();
        assert_eq!(a, b);
        let c = generate_corpus(8, 20, 5, 0.10, 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bad_arguments_rejected() {
        assert!(generate_corpus(7, 20, 5, 1.2, 3).is_err());
        assert!(generate_corpus(7, 3, 5, 0.1, 3).is_err());
        assert!(generate_corpus(7, 20, 0, 0.1, 3).is_err());
        assert!(generate_corpus(7, 20, 99, 0.1, 3).is_err());
        assert!(generate_corpus(7, 20, 5, 0.1, 0).is_err());
        // Fractions that leave no retain authors.
        assert!(generate_corpus_with_holdout(7, 10, 5, 0.5, 3, 0.5).is_err());
    }

    #[test]
    fn qa_invariants_hold_for_every_pair() {
        let c = generate_corpus(123, 12, 16, 0.25, 4).unwrap();
        for qa in c.all_pairs() {
            qa.validate().unwrap();
            assert!(qa.answer.is_ascii());
            assert!(!qa.informative_spans.is_empty());
            assert_eq!(qa.perturbed_answers.len(), 4);
            for p in &qa.perturbed_answers {
                assert_ne!(p, &qa.answer);
            }
            // Perturbations are pairwise distinct.
            let distinct: BTreeSet<&String> = qa.perturbed_answers.iter().collect();
            assert_eq!(distinct.len(), qa.perturbed_answers.len());
        }
    }

    #[test]
    fn author_tuples_are_unique() {
        let authors = generate_authors(99, 200).unwrap();
        let tuples: BTreeSet<String> = authors
            .iter()
            .map(|a| format!("{}|{:?}", a.name, a.attributes))
            .collect();
        assert_eq!(tuples.len(), 200);
        let names: BTreeSet<&String> = authors.iter().map(|a| &a.name).collect();
        assert_eq!(names.len(), 200);
    }

    #[test]
    fn profile_generation_matches_corpus_generation() {
        let authors = generate_authors(7, 20).unwrap();
        let again = generate_authors(7, 20).unwrap();
        assert_eq!(authors, again);
    }

    #[test]
    fn parents_template_has_two_spans() {
        let c = generate_corpus(7, 4, 5, 0.25, 2).unwrap();
        let two_span = c
            .all_pairs()
            .filter(|qa| qa.informative_spans.len() == 2)
            .count();
        assert!(two_span > 0, "expected at least one two-fact answer");
    }
}
