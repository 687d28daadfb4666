//! Labeled commonsense corpus: ingestion, validation, annotation
//! agreement, category statistics, and train/test splits.
//!
//! The on-disk format is UTF-8 JSONL, one record per line. `text` and
//! `gold` may be omitted on input: `text` defaults to the space-joined
//! (subject, predicate, object) tuple and `gold` to the majority of the
//! annotator labels.

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;

/// Polarity label with the fixed order Negative < Neutral < Positive.
/// The order is load-bearing: change-direction comparisons and argmax
/// tie-breaking both use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Neutral,
    Positive,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Negative, Label::Neutral, Label::Positive];

    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Neutral => 1,
            Label::Positive => 2,
        }
    }

    pub fn from_index(index: usize) -> Label {
        Self::ALL[index]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Negative => "negative",
            Label::Neutral => "neutral",
            Label::Positive => "positive",
        }
    }

    pub fn parse(value: &str) -> Option<Label> {
        match value {
            "negative" => Some(Label::Negative),
            "neutral" => Some(Label::Neutral),
            "positive" => Some(Label::Positive),
            _ => None,
        }
    }

    fn distance_from_neutral(self) -> usize {
        self.index().abs_diff(1)
    }
}

/// Demographic term category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Gender,
    Origin,
    Profession,
    Religion,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Gender,
        Category::Origin,
        Category::Profession,
        Category::Religion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Gender => "gender",
            Category::Origin => "origin",
            Category::Profession => "profession",
            Category::Religion => "religion",
        }
    }

    pub fn parse(value: &str) -> Option<Category> {
        match value {
            "gender" => Some(Category::Gender),
            "origin" => Some(Category::Origin),
            "profession" => Some(Category::Profession),
            "religion" => Some(Category::Religion),
            _ => None,
        }
    }
}

/// Where a record came from: the source corpus, a generalization pass,
/// or predicate-synonym augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Original,
    Generalized {
        level: u8,
    },
    Augmented {
        source_id: String,
        synonym: String,
        provider: String,
    },
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance::Original
    }
}

/// One commonsense tuple rendered as a short sentence.
///
/// Invariants (enforced by [`parse_corpus`] and the constructors):
/// `term` occurs in `text` as a whole word, `gold` is the majority of
/// `annotator_labels`, and ids are unique within a [`Corpus`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    pub subject: String,
    pub predicate: String,
    pub object: String,
    pub text: String,
    pub category: Category,
    pub term: String,
    pub annotator_labels: Vec<Label>,
    pub gold: Label,
    #[serde(default)]
    pub provenance: Provenance,
}

/// Space-joined tuple rendering, the default `text` shape.
pub fn render_text(subject: &str, predicate: &str, object: &str) -> String {
    format!("{subject} {predicate} {object}")
}

impl SentenceRecord {
    /// Build a record with `text` rendered from the tuple and `gold`
    /// computed from the annotator labels.
    pub fn from_tuple(
        id: impl Into<String>,
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
        category: Category,
        term: impl Into<String>,
        annotator_labels: Vec<Label>,
    ) -> Result<SentenceRecord, CorpusError> {
        let subject = subject.into();
        let predicate = predicate.into();
        let object = object.into();
        let gold = majority_gold(&annotator_labels)?;
        let record = SentenceRecord {
            id: id.into(),
            text: text::nfc(&render_text(&subject, &predicate, &object)),
            subject,
            predicate,
            object,
            category,
            term: text::nfc(&term.into()),
            annotator_labels,
            gold,
            provenance: Provenance::Original,
        };
        record.validate()?;
        Ok(record)
    }

    /// Check the record-level invariants.
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.annotator_labels.is_empty() {
            return Err(CorpusError::EmptyLabelList);
        }
        if !text::contains_word(&self.text, &self.term) {
            return Err(CorpusError::TermNotInText {
                id: self.id.clone(),
            });
        }
        let majority = majority_gold(&self.annotator_labels)?;
        if majority != self.gold {
            return Err(CorpusError::GoldMismatch {
                id: self.id.clone(),
            });
        }
        Ok(())
    }
}

/// Ordered collection of records. Record order is stable under
/// serialization round-trips.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub records: Vec<SentenceRecord>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, records: Vec<SentenceRecord>) -> Corpus {
        Corpus {
            name: name.into(),
            records,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Serialize to JSONL, one record per line, in record order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    /// Deduplicate by `text`, pooling each duplicate group's annotator
    /// labels and keeping the first record whose gold matches the
    /// pooled majority (the first record of the group otherwise).
    pub fn unique_view(&self) -> Corpus {
        let mut order: Vec<&str> = Vec::new();
        let mut groups: BTreeMap<&str, Vec<&SentenceRecord>> = BTreeMap::new();
        for record in &self.records {
            let entry = groups.entry(&record.text).or_default();
            if entry.is_empty() {
                order.push(&record.text);
            }
            entry.push(record);
        }
        let mut records = Vec::with_capacity(order.len());
        for key in order {
            let group = &groups[key];
            let pooled: Vec<Label> = group
                .iter()
                .flat_map(|r| r.annotator_labels.iter().copied())
                .collect();
            let majority = majority_gold(&pooled).expect("group is nonempty");
            let kept = group
                .iter()
                .find(|r| r.gold == majority)
                .unwrap_or(&group[0]);
            records.push((*kept).clone());
        }
        Corpus::new(format!("{}-unique", self.name), records)
    }
}

/// Errors raised while ingesting or validating corpus data.
#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: not a valid JSON record")]
    MalformedLine { line: usize },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("duplicate record id `{id}`")]
    DuplicateId { id: String },
    #[error("record `{id}`: term does not occur in text as a whole word")]
    TermNotInText { id: String },
    #[error("bad label value `{value}`")]
    BadLabel { value: String },
    #[error("bad category value `{value}`")]
    BadCategory { value: String },
    #[error("record `{id}`: gold label does not match annotator majority")]
    GoldMismatch { id: String },
    #[error("annotator label list is empty")]
    EmptyLabelList,
    #[error("test fraction must lie strictly between 0 and 1")]
    InvalidFraction,
    #[error("category `{category}` has fewer than 2 records; cannot split")]
    TooSmall { category: &'static str },
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    subject: Option<String>,
    predicate: Option<String>,
    object: Option<String>,
    text: Option<String>,
    category: Option<String>,
    term: Option<String>,
    annotator_labels: Option<Vec<String>>,
    gold: Option<String>,
    provenance: Option<Provenance>,
}

fn field<T>(value: Option<T>, line: usize, name: &'static str) -> Result<T, CorpusError> {
    value.ok_or(CorpusError::MissingField { line, field: name })
}

/// Parse a JSONL stream into a validated [`Corpus`], preserving line
/// order. Labels are lowercase strings; `text`, `gold`, and
/// `provenance` are optional.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|_| CorpusError::MalformedLine { line: line_no })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|_| CorpusError::MalformedLine { line: line_no })?;

        let id = field(raw.id, line_no, "id")?;
        let subject = field(raw.subject, line_no, "subject")?;
        let predicate = field(raw.predicate, line_no, "predicate")?;
        let object = field(raw.object, line_no, "object")?;
        let category_raw = field(raw.category, line_no, "category")?;
        let term = field(raw.term, line_no, "term")?;
        let labels_raw = field(raw.annotator_labels, line_no, "annotator_labels")?;

        let category = Category::parse(&category_raw).ok_or(CorpusError::BadCategory {
            value: category_raw,
        })?;
        let mut annotator_labels = Vec::with_capacity(labels_raw.len());
        for value in labels_raw {
            let label = Label::parse(&value).ok_or(CorpusError::BadLabel { value })?;
            annotator_labels.push(label);
        }
        let gold = match raw.gold {
            Some(value) => Label::parse(&value).ok_or(CorpusError::BadLabel { value })?,
            None => majority_gold(&annotator_labels)?,
        };
        let text_value = match raw.text {
            Some(t) => t,
            None => render_text(&subject, &predicate, &object),
        };

        let record = SentenceRecord {
            id,
            subject,
            predicate,
            object,
            text: text::nfc(&text_value),
            category,
            term: text::nfc(&term),
            annotator_labels,
            gold,
            provenance: raw.provenance.unwrap_or_default(),
        };
        record.validate()?;
        if !seen_ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId { id: record.id });
        }
        records.push(record);
    }
    Ok(Corpus::new("corpus", records))
}

/// Majority label with a fixed tie rule: among the most frequent
/// labels, take the one nearest Neutral in the label order; a
/// Negative/Positive standoff (and the full three-way tie) resolves to
/// Neutral.
pub fn majority_gold(labels: &[Label]) -> Result<Label, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyLabelList);
    }
    let mut counts = [0usize; 3];
    for label in labels {
        counts[label.index()] += 1;
    }
    let max = *counts.iter().max().expect("three counts");
    let mut best: Option<Label> = None;
    let mut tied = false;
    for label in Label::ALL {
        if counts[label.index()] != max {
            continue;
        }
        match best {
            None => best = Some(label),
            Some(current) => match label
                .distance_from_neutral()
                .cmp(&current.distance_from_neutral())
            {
                std::cmp::Ordering::Less => {
                    best = Some(label);
                    tied = false;
                }
                std::cmp::Ordering::Equal => tied = true,
                std::cmp::Ordering::Greater => {}
            },
        }
    }
    let winner = best.expect("nonempty labels yield a max count");
    if tied {
        // Negative and Positive equally frequent and equidistant.
        Ok(Label::Neutral)
    } else {
        Ok(winner)
    }
}

/// Errors from the agreement computation.
#[derive(Debug, Error, PartialEq)]
pub enum KappaError {
    #[error("agreement needs at least one item")]
    NoItems,
    #[error("agreement needs at least 2 raters per item, got {raters}")]
    TooFewRaters { raters: usize },
    #[error("item {item}: rater counts sum to {actual}, expected {expected}")]
    InconsistentRaterCount {
        item: usize,
        expected: usize,
        actual: usize,
    },
}

/// Fleiss' kappa over per-item label counts.
///
/// Each row counts how many of the `raters_per_item` raters assigned
/// each of the three labels to that item. When every rating in the
/// whole matrix lands on a single label, expected agreement is 1 and
/// the statistic is returned as 1.0 by convention.
pub fn fleiss_kappa(items: &[[usize; 3]], raters_per_item: usize) -> Result<f64, KappaError> {
    if items.is_empty() {
        return Err(KappaError::NoItems);
    }
    if raters_per_item < 2 {
        return Err(KappaError::TooFewRaters {
            raters: raters_per_item,
        });
    }
    let n = raters_per_item;
    let n_items = items.len();
    let mut label_totals = [0usize; 3];
    let mut p_sum = 0.0f64;
    for (index, row) in items.iter().enumerate() {
        let total: usize = row.iter().sum();
        if total != n {
            return Err(KappaError::InconsistentRaterCount {
                item: index,
                expected: n,
                actual: total,
            });
        }
        let agreeing_pairs: usize = row.iter().map(|&c| c * c).sum::<usize>() - n;
        p_sum += agreeing_pairs as f64 / (n * (n - 1)) as f64;
        for (slot, &count) in label_totals.iter_mut().zip(row.iter()) {
            *slot += count;
        }
    }
    let p_bar = p_sum / n_items as f64;
    let grand_total = (n_items * n) as f64;
    let p_e: f64 = label_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / grand_total;
            p * p
        })
        .sum();
    if 1.0 - p_e == 0.0 {
        return Ok(1.0);
    }
    Ok((p_bar - p_e) / (1.0 - p_e))
}

/// Build the per-item annotation matrix from a corpus' annotator
/// labels. Every record must carry the same number of labels.
pub fn annotation_matrix(corpus: &Corpus) -> Result<(Vec<[usize; 3]>, usize), KappaError> {
    if corpus.is_empty() {
        return Err(KappaError::NoItems);
    }
    let raters = corpus.records[0].annotator_labels.len();
    let mut items = Vec::with_capacity(corpus.len());
    for (index, record) in corpus.records.iter().enumerate() {
        if record.annotator_labels.len() != raters {
            return Err(KappaError::InconsistentRaterCount {
                item: index,
                expected: raters,
                actual: record.annotator_labels.len(),
            });
        }
        let mut row = [0usize; 3];
        for label in &record.annotator_labels {
            row[label.index()] += 1;
        }
        items.push(row);
    }
    Ok((items, raters))
}

/// Deterministic stratified train/test split. Records keep their
/// corpus order within each side; membership is drawn per category
/// from a seeded generator, so the same seed always yields the same
/// partition.
pub fn split(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<(Corpus, Corpus), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction);
    }
    let mut by_category: BTreeMap<Category, Vec<usize>> = BTreeMap::new();
    for (index, record) in corpus.records.iter().enumerate() {
        by_category.entry(record.category).or_default().push(index);
    }
    for (category, indices) in &by_category {
        if indices.len() < 2 {
            return Err(CorpusError::TooSmall {
                category: category.as_str(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_indices: HashSet<usize> = HashSet::new();
    for indices in by_category.values() {
        let mut shuffled = indices.clone();
        shuffled.shuffle(&mut rng);
        let want = (indices.len() as f64 * test_fraction).round() as usize;
        let take = want.clamp(1, indices.len() - 1);
        test_indices.extend(shuffled.into_iter().take(take));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (index, record) in corpus.records.iter().enumerate() {
        if test_indices.contains(&index) {
            test.push(record.clone());
        } else {
            train.push(record.clone());
        }
    }
    Ok((
        Corpus::new(format!("{}-train", corpus.name), train),
        Corpus::new(format!("{}-test", corpus.name), test),
    ))
}

/// Per-category count and share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStat {
    pub category: Category,
    pub count: usize,
    pub share: f64,
}

/// Corpus-level counts: per-category breakdown, total, and the number
/// of distinct texts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub total: usize,
    pub unique_texts: usize,
    pub categories: Vec<CategoryStat>,
}

/// Count records per category; shares are fractions of the total (0
/// on an empty corpus).
pub fn category_stats(corpus: &Corpus) -> CategoryStats {
    let total = corpus.len();
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
    let mut texts: HashSet<&str> = HashSet::new();
    for record in &corpus.records {
        *counts.get_mut(&record.category).expect("all categories") += 1;
        texts.insert(&record.text);
    }
    let categories = Category::ALL
        .iter()
        .map(|&category| {
            let count = counts[&category];
            let share = if total == 0 {
                0.0
            } else {
                count as f64 / total as f64
            };
            CategoryStat {
                category,
                count,
                share,
            }
        })
        .collect();
    CategoryStats {
        total,
        unique_texts: texts.len(),
        categories,
    }
}
