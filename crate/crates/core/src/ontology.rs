//! Two-level demographic term hierarchy and hierarchical
//! generalization of records and corpora.
//!
//! Level-0 surface terms generalize to level-1 group terms, which
//! generalize to a small per-category top term. A curated default
//! hierarchy ships with the crate ([`TermOntology::bundled`]); any
//! TSV file in the same format can replace it.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Category, Corpus, Provenance, SentenceRecord};
use crate::text::{self, Span};

/// The curated default hierarchy, embedded at build time.
pub const BUNDLED_ONTOLOGY_TSV: &str = include_str!("../data/ontology.tsv");

/// How far to generalize: L0 leaves records untouched, L1 substitutes
/// level-1 group terms, L2 substitutes the top terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum GeneralizationLevel {
    L0,
    L1,
    L2,
}

impl GeneralizationLevel {
    pub fn as_u8(self) -> u8 {
        match self {
            GeneralizationLevel::L0 => 0,
            GeneralizationLevel::L1 => 1,
            GeneralizationLevel::L2 => 2,
        }
    }
}

impl TryFrom<u8> for GeneralizationLevel {
    type Error = String;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        match value {
            0 => Ok(GeneralizationLevel::L0),
            1 => Ok(GeneralizationLevel::L1),
            2 => Ok(GeneralizationLevel::L2),
            other => Err(format!("generalization level must be 0, 1, or 2, got {other}")),
        }
    }
}

impl From<GeneralizationLevel> for u8 {
    fn from(level: GeneralizationLevel) -> u8 {
        level.as_u8()
    }
}

/// One level-0 surface form with its two generalization steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologyEntry {
    pub term: String,
    pub category: Category,
    pub level1: String,
    pub level2: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Level1Group {
    display: String,
    category: Category,
    level2: String,
}

/// Immutable term hierarchy keyed by case-folded surface form, with a
/// level-1 index guaranteeing that every level-1 term resolves to a
/// single level-2 term.
#[derive(Debug, Clone, Default)]
pub struct TermOntology {
    entries: BTreeMap<String, OntologyEntry>,
    level1_index: BTreeMap<String, Level1Group>,
}

/// Errors from loading or applying the hierarchy.
#[derive(Debug, Error, PartialEq)]
pub enum OntologyError {
    #[error("line {line}: malformed ontology row")]
    MalformedRow { line: usize },
    #[error("term `{term}` maps to conflicting hierarchy entries")]
    ConflictingMapping { term: String },
    #[error("level-1 term `{term}` resolves to conflicting level-2 terms")]
    UnresolvableLevel1 { term: String },
    #[error("term `{term}` is not in the ontology")]
    TermUnmapped { term: String },
}

fn fold(term: &str) -> String {
    text::nfc(term).to_lowercase()
}

/// Load a hierarchy from TSV: header `term\tcategory\tlevel1\tlevel2`,
/// one entry per line, `#`-prefixed comment lines ignored. Duplicate
/// identical rows collapse; conflicting rows are errors.
pub fn load_ontology<R: BufRead>(reader: R) -> Result<TermOntology, OntologyError> {
    let mut entries: BTreeMap<String, OntologyEntry> = BTreeMap::new();
    let mut level1_index: BTreeMap<String, Level1Group> = BTreeMap::new();
    let mut header_seen = false;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|_| OntologyError::MalformedRow { line: line_no })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            if trimmed == "term\tcategory\tlevel1\tlevel2" {
                continue;
            }
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(OntologyError::MalformedRow { line: line_no });
        }
        let term = fields[0].trim();
        let category = Category::parse(fields[1].trim())
            .ok_or(OntologyError::MalformedRow { line: line_no })?;
        let level1 = fields[2].trim();
        let level2 = fields[3].trim();
        if term.is_empty() || level1.is_empty() || level2.is_empty() {
            return Err(OntologyError::MalformedRow { line: line_no });
        }
        let entry = OntologyEntry {
            term: text::nfc(term),
            category,
            level1: text::nfc(level1),
            level2: text::nfc(level2),
        };

        let key = fold(term);
        match entries.get(&key) {
            Some(existing) if *existing != entry => {
                return Err(OntologyError::ConflictingMapping {
                    term: entry.term,
                });
            }
            Some(_) => {} // identical duplicate, collapse
            None => {
                let level1_key = fold(&entry.level1);
                match level1_index.get(&level1_key) {
                    Some(group) if fold(&group.level2) != fold(&entry.level2) => {
                        return Err(OntologyError::UnresolvableLevel1 {
                            term: entry.level1,
                        });
                    }
                    Some(_) => {}
                    None => {
                        level1_index.insert(
                            level1_key,
                            Level1Group {
                                display: entry.level1.clone(),
                                category: entry.category,
                                level2: entry.level2.clone(),
                            },
                        );
                    }
                }
                entries.insert(key, entry);
            }
        }
    }
    Ok(TermOntology {
        entries,
        level1_index,
    })
}

impl TermOntology {
    /// Parse a hierarchy from an in-memory TSV string.
    pub fn from_tsv_str(tsv: &str) -> Result<TermOntology, OntologyError> {
        load_ontology(tsv.as_bytes())
    }

    /// The curated default hierarchy shipped with the crate.
    pub fn bundled() -> TermOntology {
        Self::from_tsv_str(BUNDLED_ONTOLOGY_TSV).expect("bundled ontology is valid")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Look up a level-0 surface form, case-insensitively.
    pub fn get(&self, term: &str) -> Option<&OntologyEntry> {
        self.entries.get(&fold(term))
    }

    pub fn entries(&self) -> impl Iterator<Item = &OntologyEntry> {
        self.entries.values()
    }

    /// The level-1 term for a level-0 surface form.
    pub fn level1_of(&self, term: &str) -> Option<&str> {
        self.get(term).map(|e| e.level1.as_str())
    }

    /// The level-2 term for a surface form that is either a level-0
    /// term or a level-1 group term.
    pub fn level2_of(&self, term: &str) -> Option<&str> {
        if let Some(entry) = self.get(term) {
            return Some(entry.level2.as_str());
        }
        self.level1_index
            .get(&fold(term))
            .map(|g| g.level2.as_str())
    }

    /// Derived hierarchy whose level-0 terms are this hierarchy's
    /// level-1 group terms. Generalizing with it at L1 performs the
    /// level-1 to level-2 step.
    pub fn level1_view(&self) -> TermOntology {
        let mut entries = BTreeMap::new();
        let mut level1_index = BTreeMap::new();
        for (key, group) in &self.level1_index {
            entries.insert(
                key.clone(),
                OntologyEntry {
                    term: group.display.clone(),
                    category: group.category,
                    level1: group.level2.clone(),
                    level2: group.level2.clone(),
                },
            );
            level1_index.insert(
                fold(&group.level2),
                Level1Group {
                    display: group.level2.clone(),
                    category: group.category,
                    level2: group.level2.clone(),
                },
            );
        }
        TermOntology {
            entries,
            level1_index,
        }
    }

    /// Replacement table for a generalization level: matched surface
    /// form -> substitute. At L2 both level-0 and level-1 terms map to
    /// their level-2 term; level-0 entries win on key collisions.
    fn replacement_table(&self, level: GeneralizationLevel) -> Vec<(&str, &str)> {
        let mut table: BTreeMap<&str, (&str, &str)> = BTreeMap::new();
        match level {
            GeneralizationLevel::L0 => {}
            GeneralizationLevel::L1 => {
                for (key, entry) in &self.entries {
                    table.insert(key, (entry.term.as_str(), entry.level1.as_str()));
                }
            }
            GeneralizationLevel::L2 => {
                for (key, group) in &self.level1_index {
                    table.insert(key, (group.display.as_str(), group.level2.as_str()));
                }
                for (key, entry) in &self.entries {
                    table.insert(key, (entry.term.as_str(), entry.level2.as_str()));
                }
            }
        }
        table.into_values().collect()
    }
}

/// All non-overlapping whole-word matches of ontology terms in `text`,
/// leftmost-longest, case-insensitive. `text` is expected to be NFC
/// (corpus records already are); spans are byte offsets into it.
pub fn find_terms<'a>(text: &str, ontology: &'a TermOntology) -> Vec<(Span, &'a OntologyEntry)> {
    let keys: Vec<&str> = ontology.entries.values().map(|e| e.term.as_str()).collect();
    scan(text, &keys)
        .into_iter()
        .map(|(span, index)| {
            let entry = ontology
                .get(keys[index])
                .expect("scanned term is an entry");
            (span, entry)
        })
        .collect()
}

/// Leftmost-longest whole-word scan for any of `terms`; returns spans
/// with the index of the matched term.
fn scan(text: &str, terms: &[&str]) -> Vec<(Span, usize)> {
    // longest-first so the first hit at a position is the longest
    let mut by_length: Vec<usize> = (0..terms.len()).collect();
    by_length.sort_by_key(|&i| std::cmp::Reverse(terms[i].len()));

    let mut matches = Vec::new();
    let mut pos = 0;
    'outer: while pos < text.len() {
        if !text.is_char_boundary(pos) || !word_start(text, pos) {
            pos += 1;
            continue;
        }
        for &index in &by_length {
            let term = terms[index];
            let end = pos + term.len();
            if end <= text.len()
                && text.is_char_boundary(end)
                && text[pos..end].eq_ignore_ascii_case(term)
                && word_end(text, end)
            {
                matches.push((Span { start: pos, end }, index));
                pos = end;
                continue 'outer;
            }
        }
        pos += 1;
    }
    matches
}

fn word_start(text: &str, pos: usize) -> bool {
    (pos == 0 || !text.as_bytes()[pos - 1].is_ascii_alphanumeric())
        && pos < text.len()
        && text.as_bytes()[pos].is_ascii_alphanumeric()
}

fn word_end(text: &str, pos: usize) -> bool {
    pos >= text.len() || !text.as_bytes()[pos].is_ascii_alphanumeric()
}

/// Generalize one record. L0 is the identity. L1 substitutes every
/// matched level-0 term with its level-1 term; L2 substitutes level-0
/// and level-1 terms with their level-2 term. Substitution mirrors the
/// first-letter case of the matched occurrence; gold and annotator
/// labels are untouched.
pub fn generalize(
    record: &SentenceRecord,
    ontology: &TermOntology,
    level: GeneralizationLevel,
) -> Result<SentenceRecord, OntologyError> {
    if level == GeneralizationLevel::L0 {
        return Ok(record.clone());
    }
    let new_term = match level {
        GeneralizationLevel::L1 => ontology.level1_of(&record.term),
        GeneralizationLevel::L2 => ontology.level2_of(&record.term),
        GeneralizationLevel::L0 => unreachable!(),
    }
    .ok_or_else(|| OntologyError::TermUnmapped {
        term: record.term.clone(),
    })?
    .to_string();

    let table = ontology.replacement_table(level);
    let terms: Vec<&str> = table.iter().map(|(term, _)| *term).collect();
    let matches = scan(&record.text, &terms);
    let mut new_text = String::with_capacity(record.text.len());
    let mut cursor = 0;
    for &(span, index) in &matches {
        new_text.push_str(&record.text[cursor..span.start]);
        let matched = &record.text[span.start..span.end];
        new_text.push_str(&text::mirror_case(matched, table[index].1));
        cursor = span.end;
    }
    new_text.push_str(&record.text[cursor..]);

    let mut out = record.clone();
    out.text = new_text;
    out.term = new_term;
    out.provenance = Provenance::Generalized {
        level: level.as_u8(),
    };
    Ok(out)
}

/// A generalized corpus plus the number of records whose term was not
/// in the ontology and passed through unchanged.
#[derive(Debug, Clone)]
pub struct GeneralizedCorpus {
    pub corpus: Corpus,
    pub warnings: usize,
}

/// Generalize every record, preserving order. Records with unmapped
/// terms pass through unchanged and are tallied as warnings.
pub fn generalize_corpus(
    corpus: &Corpus,
    ontology: &TermOntology,
    level: GeneralizationLevel,
) -> GeneralizedCorpus {
    let mut records = Vec::with_capacity(corpus.len());
    let mut warnings = 0;
    for record in &corpus.records {
        match generalize(record, ontology, level) {
            Ok(generalized) => records.push(generalized),
            Err(OntologyError::TermUnmapped { .. }) => {
                warnings += 1;
                records.push(record.clone());
            }
            Err(_) => unreachable!("generalize only fails with TermUnmapped"),
        }
    }
    GeneralizedCorpus {
        corpus: Corpus::new(corpus.name.clone(), records),
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn origin_record(id: &str, subject: &str, term: &str) -> SentenceRecord {
        SentenceRecord::from_tuple(
            id,
            subject,
            "causes",
            "war",
            Category::Origin,
            term,
            vec![Label::Negative, Label::Negative, Label::Negative],
        )
        .unwrap()
    }

    #[test]
    fn load_single_row() {
        let ontology =
            TermOntology::from_tsv_str("Afghanistan\torigin\tAsian\tPeople").unwrap();
        let entry = ontology.get("afghanistan").unwrap();
        assert_eq!(entry.level1, "Asian");
        assert_eq!(entry.level2, "People");
        assert_eq!(ontology.level2_of("Asian"), Some("People"));
    }

    #[test]
    fn load_rejects_conflicting_terms() {
        let tsv = "Korean\torigin\tAsian\tPeople\nKorean\torigin\tEuropean\tPeople";
        assert_eq!(
            TermOntology::from_tsv_str(tsv).unwrap_err(),
            OntologyError::ConflictingMapping {
                term: "Korean".into()
            }
        );
    }

    #[test]
    fn load_rejects_inconsistent_level1() {
        let tsv = "Afghanistan\torigin\tAsian\tPeople\nKorean\torigin\tAsian\tBeings";
        assert_eq!(
            TermOntology::from_tsv_str(tsv).unwrap_err(),
            OntologyError::UnresolvableLevel1 {
                term: "Asian".into()
            }
        );
    }

    #[test]
    fn load_collapses_identical_duplicates() {
        let tsv = "Iraq\torigin\tAsian\tPeople\nIraq\torigin\tAsian\tPeople";
        let ontology = TermOntology::from_tsv_str(tsv).unwrap();
        assert_eq!(ontology.len(), 1);
    }

    #[test]
    fn load_empty_file_is_valid() {
        let ontology = TermOntology::from_tsv_str("").unwrap();
        assert!(ontology.is_empty());
    }

    #[test]
    fn load_rejects_short_rows() {
        assert_eq!(
            TermOntology::from_tsv_str("Iraq\torigin\tAsian").unwrap_err(),
            OntologyError::MalformedRow { line: 1 }
        );
    }

    #[test]
    fn find_terms_whole_word() {
        let ontology = TermOntology::from_tsv_str("Iraq\torigin\tAsian\tPeople").unwrap();
        let hits = find_terms("Iraq causes war", &ontology);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, Span { start: 0, end: 4 });
        assert!(find_terms("Iraqis protest", &ontology).is_empty());
    }

    #[test]
    fn find_terms_leftmost_longest() {
        let tsv = "Asian\torigin\tAsian\tPeople\nAmerican\torigin\tAmerican\tPeople\nAsian American\torigin\tAmerican\tPeople";
        let ontology = TermOntology::from_tsv_str(tsv).unwrap();
        let hits = find_terms("an Asian American votes", &ontology);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].1.term, "Asian American");
    }

    #[test]
    fn generalize_figure_examples() {
        let ontology = TermOntology::bundled();
        let record = origin_record("a", "Afghanistan", "Afghanistan");
        let l1 = generalize(&record, &ontology, GeneralizationLevel::L1).unwrap();
        assert_eq!(l1.text, "Asian causes war");
        assert_eq!(l1.term, "Asian");
        assert_eq!(l1.provenance, Provenance::Generalized { level: 1 });
        let l2 = generalize(&record, &ontology, GeneralizationLevel::L2).unwrap();
        assert_eq!(l2.text, "People causes war");
        assert_eq!(l2.term, "People");

        let korean = origin_record("b", "Korean", "Korean");
        assert_eq!(
            generalize(&korean, &ontology, GeneralizationLevel::L1)
                .unwrap()
                .text,
            "Asian causes war"
        );
    }

    #[test]
    fn generalize_mirrors_sentence_initial_case() {
        let ontology = TermOntology::bundled();
        let record = SentenceRecord::from_tuple(
            "a",
            "She",
            "helps",
            "children",
            Category::Gender,
            "she",
            vec![Label::Positive],
        )
        .unwrap();
        let l1 = generalize(&record, &ontology, GeneralizationLevel::L1).unwrap();
        assert_eq!(l1.text, "Woman helps children");
        assert_eq!(l1.term, "woman");
    }

    #[test]
    fn generalize_l0_is_identity() {
        let ontology = TermOntology::bundled();
        let record = origin_record("a", "Afghanistan", "Afghanistan");
        assert_eq!(
            generalize(&record, &ontology, GeneralizationLevel::L0).unwrap(),
            record
        );
    }

    #[test]
    fn generalize_unmapped_term_errors() {
        let ontology = TermOntology::bundled();
        let unknown = origin_record("a", "Atlantis", "Atlantis");
        assert_eq!(
            generalize(&unknown, &ontology, GeneralizationLevel::L1).unwrap_err(),
            OntologyError::TermUnmapped {
                term: "Atlantis".into()
            }
        );
    }

    #[test]
    fn generalize_replaces_all_known_terms() {
        let ontology = TermOntology::bundled();
        let record = SentenceRecord::from_tuple(
            "a",
            "Iraq",
            "attacks",
            "Sweden",
            Category::Origin,
            "Iraq",
            vec![Label::Negative],
        )
        .unwrap();
        let l1 = generalize(&record, &ontology, GeneralizationLevel::L1).unwrap();
        assert_eq!(l1.text, "Asian attacks European");
    }

    #[test]
    fn generalize_corpus_counts_unmapped() {
        let ontology = TermOntology::bundled();
        let known = origin_record("a", "Afghanistan", "Afghanistan");
        let mut unknown = origin_record("b", "Afghanistan", "Afghanistan");
        unknown.text = "Atlantis causes war".into();
        unknown.subject = "Atlantis".into();
        unknown.term = "Atlantis".into();
        let corpus = Corpus::new("mix", vec![known, unknown.clone()]);
        let out = generalize_corpus(&corpus, &ontology, GeneralizationLevel::L2);
        assert_eq!(out.warnings, 1);
        assert_eq!(out.corpus.records[0].text, "People causes war");
        assert_eq!(out.corpus.records[1], unknown);
    }

    #[test]
    fn composition_matches_direct_l2() {
        let ontology = TermOntology::bundled();
        let view = ontology.level1_view();
        for (subject, term) in [
            ("Afghanistan", "Afghanistan"),
            ("doctor", "doctor"),
            ("stepmother", "stepmother"),
            ("mosque", "mosque"),
        ] {
            let record = SentenceRecord::from_tuple(
                "a",
                subject,
                "visits",
                "events",
                Category::Origin,
                term,
                vec![Label::Neutral],
            )
            .unwrap();
            let l1 = generalize(&record, &ontology, GeneralizationLevel::L1).unwrap();
            let composed = generalize(&l1, &view, GeneralizationLevel::L1).unwrap();
            let direct = generalize(&record, &ontology, GeneralizationLevel::L2).unwrap();
            assert_eq!(composed.text, direct.text);
            assert_eq!(composed.term, direct.term);
        }
    }

    #[test]
    fn l2_is_idempotent_at_the_top() {
        let ontology = TermOntology::bundled();
        let corpus = Corpus::new(
            "two",
            vec![
                origin_record("a", "Afghanistan", "Afghanistan"),
                origin_record("b", "Korea", "Korea"),
            ],
        );
        let once = generalize_corpus(&corpus, &ontology, GeneralizationLevel::L2);
        let twice = generalize_corpus(&once.corpus, &ontology, GeneralizationLevel::L2);
        assert_eq!(once.corpus.records, twice.corpus.records);
    }

    #[test]
    fn span_safety_against_bundled_ontology() {
        let ontology = TermOntology::bundled();
        let record = SentenceRecord::from_tuple(
            "a",
            "stepmother",
            "helps",
            "daughter",
            Category::Gender,
            "stepmother",
            vec![Label::Positive],
        )
        .unwrap();
        let l1 = generalize(&record, &ontology, GeneralizationLevel::L1).unwrap();
        for entry in ontology.entries() {
            assert!(
                !text::contains_word(&l1.text, &entry.term),
                "level-0 term `{}` survived L1 in `{}`",
                entry.term,
                l1.text
            );
        }
        let l2 = generalize(&record, &ontology, GeneralizationLevel::L2).unwrap();
        for entry in ontology.entries() {
            assert!(!text::contains_word(&l2.text, &entry.term));
            assert!(!text::contains_word(&l2.text, &entry.level1));
        }
    }
}
