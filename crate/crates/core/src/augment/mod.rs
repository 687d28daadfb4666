//! Predicate-synonym augmentation: generate variants of commonsense
//! sentences by swapping the predicate for a synonym, keeping subject,
//! object, term, and labels intact. Eligibility is gated either by a
//! polarized-term set or by target categories.

pub mod remote;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use thiserror::Error;

use crate::corpus::{render_text, Category, Corpus, Label, Provenance, SentenceRecord};
use crate::text;

/// Default number of synonym variants generated per eligible record.
pub const DEFAULT_VARIANTS: usize = 3;

/// The offline predicate thesaurus shipped with the crate.
pub const BUNDLED_THESAURUS_TSV: &str = include_str!("../../data/thesaurus.tsv");

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("synonym `{synonym}` equals the original predicate")]
    IdenticalPredicate { synonym: String },
    #[error("record `{id}`: term no longer occurs after predicate substitution")]
    TermLost { id: String },
    #[error("line {line}: malformed thesaurus row")]
    MalformedRow { line: usize },
    #[error("synonym backend unavailable after {attempts} attempts: {reason}")]
    BackendUnavailable { attempts: u32, reason: String },
    #[error("unparseable synonym response (raw response kept at {cache_path})")]
    UnparseableResponse { cache_path: String },
    #[error("synonym cache I/O at {path}: {reason}")]
    CacheIo { path: String, reason: String },
}

fn fold(value: &str) -> String {
    text::nfc(value).to_lowercase()
}

/// Predicate synonym table loaded from TSV (`predicate\tsyn1|syn2|...`,
/// `#` comments ignored). Lookups are case-folded; synonym order is
/// file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thesaurus {
    entries: BTreeMap<String, Vec<String>>,
}

impl Thesaurus {
    pub fn load<R: BufRead>(reader: R) -> Result<Thesaurus, AugmentError> {
        let mut entries = BTreeMap::new();
        for (index, line) in reader.lines().enumerate() {
            let line_no = index + 1;
            let line = line.map_err(|_| AugmentError::MalformedRow { line: line_no })?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (predicate, synonyms) = trimmed
                .split_once('\t')
                .ok_or(AugmentError::MalformedRow { line: line_no })?;
            let predicate = predicate.trim();
            if predicate.is_empty() {
                return Err(AugmentError::MalformedRow { line: line_no });
            }
            let list: Vec<String> = synonyms
                .split('|')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            entries.insert(fold(predicate), list);
        }
        Ok(Thesaurus { entries })
    }

    pub fn from_tsv_str(tsv: &str) -> Result<Thesaurus, AugmentError> {
        Self::load(tsv.as_bytes())
    }

    pub fn bundled() -> Thesaurus {
        Self::from_tsv_str(BUNDLED_THESAURUS_TSV).expect("bundled thesaurus is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Synonyms for a predicate in file order, excluding the predicate
/// itself; empty when the predicate is unknown.
pub fn synonyms_thesaurus(predicate: &str, table: &Thesaurus) -> Vec<String> {
    let key = fold(predicate);
    table
        .entries
        .get(&key)
        .map(|list| {
            list.iter()
                .filter(|s| fold(s) != key)
                .cloned()
                .collect()
        })
        .unwrap_or_default()
}

/// Synonym source: the offline thesaurus or a chat-completions
/// endpoint with a persistent cache. Both are deterministic given
/// their configuration (the remote side via temperature-0 requests and
/// the response cache).
pub enum SynonymProvider {
    Thesaurus(Thesaurus),
    Remote(remote::RemoteSynonymProvider),
}

impl SynonymProvider {
    pub fn bundled_thesaurus() -> SynonymProvider {
        SynonymProvider::Thesaurus(Thesaurus::bundled())
    }

    /// Short provider tag recorded in augmented records' provenance.
    pub fn kind(&self) -> &'static str {
        match self {
            SynonymProvider::Thesaurus(_) => "thesaurus",
            SynonymProvider::Remote(_) => "remote",
        }
    }

    /// Up to `k` distinct synonyms for the predicate in its sentence
    /// context.
    pub fn synonyms(
        &self,
        predicate: &str,
        sentence: &str,
        k: usize,
    ) -> Result<Vec<String>, AugmentError> {
        match self {
            SynonymProvider::Thesaurus(table) => {
                let mut seen = BTreeSet::new();
                Ok(synonyms_thesaurus(predicate, table)
                    .into_iter()
                    .filter(|s| seen.insert(fold(s)))
                    .take(k)
                    .collect())
            }
            SynonymProvider::Remote(provider) => provider.synonyms(predicate, sentence, k),
        }
    }
}

/// Build one augmented record: predicate swapped for the synonym, text
/// re-rendered from the tuple, everything else inherited from the
/// source. The id derives from the source id and the synonym.
pub fn augment_record(
    record: &SentenceRecord,
    synonym: &str,
    provider_kind: &str,
) -> Result<SentenceRecord, AugmentError> {
    let synonym = synonym.trim();
    if fold(synonym) == fold(&record.predicate) {
        return Err(AugmentError::IdenticalPredicate {
            synonym: synonym.to_string(),
        });
    }
    let rendered = text::nfc(&render_text(&record.subject, synonym, &record.object));
    if !text::contains_word(&rendered, &record.term) {
        return Err(AugmentError::TermLost {
            id: record.id.clone(),
        });
    }
    Ok(SentenceRecord {
        id: format!("{}-aug-{}", record.id, slug(synonym)),
        subject: record.subject.clone(),
        predicate: synonym.to_string(),
        object: record.object.clone(),
        text: rendered,
        category: record.category,
        term: record.term.clone(),
        annotator_labels: record.annotator_labels.clone(),
        gold: record.gold,
        provenance: Provenance::Augmented {
            source_id: record.id.clone(),
            synonym: synonym.to_string(),
            provider: provider_kind.to_string(),
        },
    })
}

fn slug(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    let mut last_dash = true;
    for c in value.chars() {
        if c.is_alphanumeric() {
            out.extend(c.to_lowercase());
            last_dash = false;
        } else if !last_dash {
            out.push('-');
            last_dash = true;
        }
    }
    out.trim_end_matches('-').to_string()
}

/// An augmented corpus: originals untouched and first, augmented
/// records appended in (source order, synonym order), with per-record
/// provider failures tallied instead of aborting.
#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub corpus: Corpus,
    pub added: usize,
    pub warnings: usize,
}

fn augment_where<F: Fn(&SentenceRecord) -> bool>(
    corpus: &Corpus,
    eligible: F,
    provider: &SynonymProvider,
    k: usize,
) -> AugmentOutcome {
    let mut seen: HashSet<(String, Label)> = corpus
        .records
        .iter()
        .map(|r| (r.text.clone(), r.gold))
        .collect();
    let mut seen_ids: HashSet<String> = corpus.records.iter().map(|r| r.id.clone()).collect();
    let mut augmented = Vec::new();
    let mut warnings = 0;
    for record in &corpus.records {
        if !eligible(record) {
            continue;
        }
        let synonyms = match provider.synonyms(&record.predicate, &record.text, k) {
            Ok(list) => list,
            Err(_) => {
                warnings += 1;
                continue;
            }
        };
        for synonym in synonyms {
            match augment_record(record, &synonym, provider.kind()) {
                Ok(mut aug) => {
                    if !seen.insert((aug.text.clone(), aug.gold)) {
                        continue; // duplicate text with identical gold
                    }
                    let mut candidate = aug.id.clone();
                    let mut suffix = 2;
                    while !seen_ids.insert(candidate.clone()) {
                        candidate = format!("{}-{}", aug.id, suffix);
                        suffix += 1;
                    }
                    aug.id = candidate;
                    augmented.push(aug);
                }
                Err(_) => warnings += 1,
            }
        }
    }
    let added = augmented.len();
    let mut records = corpus.records.clone();
    records.extend(augmented);
    AugmentOutcome {
        corpus: Corpus::new(corpus.name.clone(), records),
        added,
        warnings,
    }
}

/// Augment every record whose term is in the polarized set
/// (case-insensitive membership), up to `k` variants per record.
pub fn threshold_augment(
    corpus: &Corpus,
    polarized_terms: &BTreeSet<String>,
    provider: &SynonymProvider,
    k: usize,
) -> AugmentOutcome {
    let folded: BTreeSet<String> = polarized_terms.iter().map(|t| fold(t)).collect();
    augment_where(corpus, |r| folded.contains(&fold(&r.term)), provider, k)
}

/// Ungated baseline: augment every record in the target categories.
pub fn standard_augment(
    corpus: &Corpus,
    target_categories: &BTreeSet<Category>,
    provider: &SynonymProvider,
    k: usize,
) -> AugmentOutcome {
    augment_where(
        corpus,
        |r| target_categories.contains(&r.category),
        provider,
        k,
    )
}
