//! Demographic-term polarization: compare predictions on masked vs
//! unmasked sentences, tally per-term change directions, and aggregate
//! to group-level views.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifierError, TextClassifier, MASK_TOKEN};
use crate::corpus::{Category, Corpus, Label, SentenceRecord};
use crate::ontology::TermOntology;
use crate::text;

#[derive(Debug, Error, PartialEq)]
pub enum PolarizationError {
    #[error("record `{id}`: term has no occurrence in text")]
    NoOccurrence { id: String },
    #[error("term `{term}` does not occur in any record")]
    TermNotFound { term: String },
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Per-term polarization counts. `p_signed` is the net fraction of
/// such sentences whose predicted polarity moved toward the positive
/// end when the term is present; its absolute value is the thresholded
/// polarization score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermPolarization {
    pub term: String,
    pub n_total: usize,
    pub n_changed_positive: usize,
    pub n_changed_negative: usize,
    pub p_signed: f64,
}

/// Group-level aggregation by ontology level-1 term, weighted by each
/// member term's sentence count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPolarization {
    pub group: String,
    pub category: Category,
    pub n_total: usize,
    pub p_signed: f64,
}

/// Full polarization report: per-term rows, per-group aggregation, and
/// the number of distinct terms skipped because the ontology does not
/// know them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    pub terms: Vec<TermPolarization>,
    pub groups: Vec<GroupPolarization>,
    pub warnings: usize,
}

/// Replace every whole-word occurrence of the record's term with the
/// literal `[MASK]` token. All other fields are unchanged.
pub fn mask_term(record: &SentenceRecord) -> Result<SentenceRecord, PolarizationError> {
    let spans = text::find_word(&record.text, &record.term);
    if spans.is_empty() {
        return Err(PolarizationError::NoOccurrence {
            id: record.id.clone(),
        });
    }
    let mut out = record.clone();
    out.text = text::splice(&record.text, &spans, |_| MASK_TOKEN.to_string());
    Ok(out)
}

/// +1 when the unmasked prediction sits above the masked one in the
/// label order (the term's presence shifts the prediction positive),
/// -1 for the opposite shift, 0 when equal.
pub fn change_direction(masked: Label, unmasked: Label) -> i32 {
    match unmasked.cmp(&masked) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Less => -1,
        std::cmp::Ordering::Equal => 0,
    }
}

fn fold(term: &str) -> String {
    text::nfc(term).to_lowercase()
}

fn measure_records(
    predictor: &dyn TextClassifier,
    records: &[&SentenceRecord],
    term: &str,
) -> Result<TermPolarization, PolarizationError> {
    let mut unmasked_texts = Vec::with_capacity(records.len());
    let mut masked_texts = Vec::with_capacity(records.len());
    for record in records {
        unmasked_texts.push(record.text.clone());
        masked_texts.push(mask_term(record)?.text);
    }
    let unmasked = predictor.classify(&unmasked_texts)?;
    let masked = predictor.classify(&masked_texts)?;
    let mut n_changed_positive = 0;
    let mut n_changed_negative = 0;
    for (masked_dist, unmasked_dist) in masked.iter().zip(unmasked.iter()) {
        match change_direction(masked_dist.argmax(), unmasked_dist.argmax()) {
            1 => n_changed_positive += 1,
            -1 => n_changed_negative += 1,
            _ => {}
        }
    }
    let n_total = records.len();
    Ok(TermPolarization {
        term: term.to_string(),
        n_total,
        n_changed_positive,
        n_changed_negative,
        p_signed: (n_changed_positive as f64 - n_changed_negative as f64) / n_total as f64,
    })
}

/// Measure one term over every record whose `term` field matches it
/// (case-insensitively): predict each sentence masked and unmasked and
/// tally the change directions.
pub fn measure_term(
    predictor: &dyn TextClassifier,
    corpus: &Corpus,
    term: &str,
) -> Result<TermPolarization, PolarizationError> {
    let key = fold(term);
    let records: Vec<&SentenceRecord> = corpus
        .records
        .iter()
        .filter(|r| fold(&r.term) == key)
        .collect();
    if records.is_empty() {
        return Err(PolarizationError::TermNotFound {
            term: term.to_string(),
        });
    }
    measure_records(predictor, &records, term)
}

/// Measure every distinct term the ontology knows and aggregate to
/// level-1 groups. Unknown terms are skipped and tallied as warnings.
/// Term rows are sorted by case-folded term, groups by category and
/// name.
pub fn measure_all(
    predictor: &dyn TextClassifier,
    corpus: &Corpus,
    ontology: &TermOntology,
) -> Result<PolarizationReport, PolarizationError> {
    let mut by_term: BTreeMap<String, (String, Vec<&SentenceRecord>)> = BTreeMap::new();
    for record in &corpus.records {
        by_term
            .entry(fold(&record.term))
            .or_insert_with(|| (record.term.clone(), Vec::new()))
            .1
            .push(record);
    }
    let mut terms = Vec::new();
    let mut warnings = 0;
    let mut group_tallies: BTreeMap<(Category, String), (String, usize, i64)> = BTreeMap::new();
    for (display, records) in by_term.values() {
        let Some(entry) = ontology.get(display) else {
            warnings += 1;
            continue;
        };
        let row = measure_records(predictor, records, display)?;
        let tally = group_tallies
            .entry((entry.category, fold(&entry.level1)))
            .or_insert_with(|| (entry.level1.clone(), 0, 0));
        tally.1 += row.n_total;
        tally.2 += row.n_changed_positive as i64 - row.n_changed_negative as i64;
        terms.push(row);
    }
    let groups = group_tallies
        .into_iter()
        .map(|((category, _), (group, n_total, net))| GroupPolarization {
            group,
            category,
            n_total,
            p_signed: if n_total > 0 {
                net as f64 / n_total as f64
            } else {
                0.0
            },
        })
        .collect();
    Ok(PolarizationReport {
        terms,
        groups,
        warnings,
    })
}

/// The terms whose absolute polarization strictly exceeds `tau`.
pub fn select_polarized(report: &[TermPolarization], tau: f64) -> BTreeSet<String> {
    report
        .iter()
        .filter(|t| t.p_signed.abs() > tau)
        .map(|t| t.term.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::LabelDistribution;

    fn record(id: &str, subject: &str, predicate: &str, object: &str) -> SentenceRecord {
        SentenceRecord::from_tuple(
            id,
            subject,
            predicate,
            object,
            Category::Origin,
            subject,
            vec![Label::Neutral],
        )
        .unwrap()
    }

    /// Predicts a fixed label per text; anything unknown is Neutral.
    struct FixedPredictor {
        map: BTreeMap<String, Label>,
    }

    impl FixedPredictor {
        fn new(pairs: &[(&str, Label)]) -> Self {
            FixedPredictor {
                map: pairs
                    .iter()
                    .map(|(text, label)| (text.to_string(), *label))
                    .collect(),
            }
        }
    }

    impl TextClassifier for FixedPredictor {
        fn classify(
            &self,
            texts: &[String],
        ) -> Result<Vec<LabelDistribution>, ClassifierError> {
            Ok(texts
                .iter()
                .map(|t| {
                    let label = self.map.get(t).copied().unwrap_or(Label::Neutral);
                    let mut probs = [0.0; 3];
                    probs[label.index()] = 1.0;
                    LabelDistribution { probs }
                })
                .collect())
        }
    }

    #[test]
    fn mask_single_occurrence() {
        let masked = mask_term(&record("a", "Iraq", "causes", "war")).unwrap();
        assert_eq!(masked.text, "[MASK] causes war");
        assert_eq!(masked.term, "Iraq");
        assert_eq!(masked.gold, Label::Neutral);
    }

    #[test]
    fn mask_every_occurrence() {
        let record = record("a", "woman", "helps", "woman");
        let masked = mask_term(&record).unwrap();
        assert_eq!(masked.text, "[MASK] helps [MASK]");
    }

    #[test]
    fn mask_missing_term_errors() {
        let mut broken = record("a", "Iraq", "causes", "war");
        broken.text = "Sweden causes war".into();
        assert_eq!(
            mask_term(&broken).unwrap_err(),
            PolarizationError::NoOccurrence { id: "a".into() }
        );
    }

    #[test]
    fn change_direction_follows_label_order() {
        use Label::*;
        assert_eq!(change_direction(Neutral, Positive), 1);
        assert_eq!(change_direction(Positive, Negative), -1);
        assert_eq!(change_direction(Negative, Negative), 0);
    }

    #[test]
    fn measure_term_mixed_directions() {
        use Label::*;
        // four sentences: unmasked [Neg, Neg, Neu, Pos], masked [Neu, Neg, Neu, Neu]
        let records = vec![
            record("a", "alpha", "causes", "one"),
            record("b", "alpha", "causes", "two"),
            record("c", "alpha", "causes", "three"),
            record("d", "alpha", "causes", "four"),
        ];
        let predictor = FixedPredictor::new(&[
            ("alpha causes one", Negative),
            ("alpha causes two", Negative),
            ("alpha causes three", Neutral),
            ("alpha causes four", Positive),
            ("[MASK] causes one", Neutral),
            ("[MASK] causes two", Negative),
            ("[MASK] causes three", Neutral),
            ("[MASK] causes four", Neutral),
        ]);
        let corpus = Corpus::new("four", records);
        let result = measure_term(&predictor, &corpus, "alpha").unwrap();
        assert_eq!(result.n_total, 4);
        assert_eq!(result.n_changed_positive, 1);
        assert_eq!(result.n_changed_negative, 1);
        assert_eq!(result.p_signed, 0.0);
    }

    #[test]
    fn measure_term_net_negative() {
        use Label::*;
        let records: Vec<SentenceRecord> = (0..5)
            .map(|i| record(&format!("r{i}"), "alpha", "causes", &format!("o{i}")))
            .collect();
        let predictor = FixedPredictor::new(&[
            ("alpha causes o0", Negative),
            ("alpha causes o1", Negative),
            ("alpha causes o2", Negative),
            ("alpha causes o3", Neutral),
            ("alpha causes o4", Positive),
            ("[MASK] causes o0", Neutral),
            ("[MASK] causes o1", Neutral),
            ("[MASK] causes o2", Positive),
            ("[MASK] causes o3", Neutral),
            ("[MASK] causes o4", Positive),
        ]);
        let corpus = Corpus::new("five", records);
        let result = measure_term(&predictor, &corpus, "alpha").unwrap();
        assert_eq!(result.n_changed_positive, 0);
        assert_eq!(result.n_changed_negative, 3);
        assert_eq!(result.p_signed, -0.6);
    }

    #[test]
    fn constant_predictor_measures_zero() {
        let records = vec![
            record("a", "alpha", "causes", "one"),
            record("b", "alpha", "causes", "two"),
        ];
        let predictor = FixedPredictor::new(&[]);
        let corpus = Corpus::new("two", records);
        let result = measure_term(&predictor, &corpus, "alpha").unwrap();
        assert_eq!(result.p_signed, 0.0);
    }

    #[test]
    fn measure_term_unknown_term_errors() {
        let corpus = Corpus::new("one", vec![record("a", "alpha", "causes", "x")]);
        let predictor = FixedPredictor::new(&[]);
        assert_eq!(
            measure_term(&predictor, &corpus, "beta").unwrap_err(),
            PolarizationError::TermNotFound { term: "beta".into() }
        );
    }

    #[test]
    fn measure_is_order_invariant() {
        use Label::*;
        let a = record("a", "alpha", "causes", "one");
        let b = record("b", "alpha", "causes", "two");
        let predictor = FixedPredictor::new(&[
            ("alpha causes one", Negative),
            ("alpha causes two", Positive),
            ("[MASK] causes one", Neutral),
            ("[MASK] causes two", Neutral),
        ]);
        let forward = Corpus::new("f", vec![a.clone(), b.clone()]);
        let backward = Corpus::new("b", vec![b, a]);
        assert_eq!(
            measure_term(&predictor, &forward, "alpha").unwrap(),
            measure_term(&predictor, &backward, "alpha").unwrap()
        );
    }

    #[test]
    fn measure_all_groups_and_warns() {
        use Label::*;
        let ontology = crate::ontology::TermOntology::from_tsv_str(
            "Iraq\torigin\tAsian\tPeople\nKorea\torigin\tAsian\tPeople",
        )
        .unwrap();
        let records = vec![
            record("a", "Iraq", "causes", "one"),
            record("b", "Korea", "causes", "two"),
            record("c", "Atlantis", "causes", "three"),
        ];
        let predictor = FixedPredictor::new(&[
            ("Iraq causes one", Negative),
            ("Korea causes two", Negative),
            ("[MASK] causes one", Neutral),
            ("[MASK] causes two", Neutral),
        ]);
        let corpus = Corpus::new("mixed", records);
        let report = measure_all(&predictor, &corpus, &ontology).unwrap();
        assert_eq!(report.warnings, 1);
        assert_eq!(report.terms.len(), 2);
        assert_eq!(report.groups.len(), 1);
        let group = &report.groups[0];
        assert_eq!(group.group, "Asian");
        assert_eq!(group.n_total, 2);
        assert_eq!(group.p_signed, -1.0);
    }

    #[test]
    fn empty_corpus_measures_empty() {
        let ontology = crate::ontology::TermOntology::from_tsv_str("").unwrap();
        let predictor = FixedPredictor::new(&[]);
        let report = measure_all(&predictor, &Corpus::default(), &ontology).unwrap();
        assert!(report.terms.is_empty());
        assert!(report.groups.is_empty());
        assert_eq!(report.warnings, 0);
    }

    #[test]
    fn select_polarized_uses_strict_threshold() {
        let rows = vec![
            TermPolarization {
                term: "A".into(),
                n_total: 20,
                n_changed_positive: 1,
                n_changed_negative: 0,
                p_signed: 0.05,
            },
            TermPolarization {
                term: "B".into(),
                n_total: 5,
                n_changed_positive: 0,
                n_changed_negative: 1,
                p_signed: -0.2,
            },
            TermPolarization {
                term: "C".into(),
                n_total: 4,
                n_changed_positive: 0,
                n_changed_negative: 0,
                p_signed: 0.0,
            },
        ];
        let at_zero = select_polarized(&rows, 0.0);
        assert_eq!(at_zero.len(), 2);
        assert!(at_zero.contains("A") && at_zero.contains("B"));
        let at_tenth = select_polarized(&rows, 0.1);
        assert_eq!(at_tenth.len(), 1);
        assert!(at_tenth.contains("B"));
        assert!(select_polarized(&[], 0.0).is_empty());
    }
}
