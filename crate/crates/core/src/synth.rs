//! Seeded synthetic corpus generator.
//!
//! Produces a desk-scale corpus over the four demographic categories
//! with planted per-group label biases, so polarization measurement,
//! generalization, and augmentation all have something real to find
//! without the original crowd-labeled data. Every term comes from the
//! bundled ontology and every predicate from the bundled thesaurus.
//!
//! Planted structure:
//! - terms of the same ontology level-1 group share a label profile
//!   (negative-leaning, positive-leaning, or balanced), so the term
//!   token correlates with gold and masking it moves predictions;
//! - predicates are drawn from synonym groups with the canonical form
//!   favored, leaving synonym forms under-trained — the coverage gap
//!   predicate-synonym augmentation closes;
//! - half the objects are shared across polarity classes, keeping the
//!   content signal from saturating.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::corpus::{Category, Corpus, Label, SentenceRecord};

/// Default corpus size.
pub const DEFAULT_SIZE: usize = 500;

/// Chance that a record keeps the canonical predicate of its group.
const CANONICAL_PREDICATE_WEIGHT: f64 = 0.55;
/// Chance that all three annotators agree with the gold label.
const FULL_AGREEMENT_RATE: f64 = 0.7;
/// Chance to draw the object from the shared (ambiguous) pool.
const SHARED_OBJECT_RATE: f64 = 0.5;
/// Label profile of biased groups: majority pole, then the others.
const BIASED_PROFILE: [f64; 3] = [0.6, 0.2, 0.2];

// Predicate groups, canonical form first; mirrors the bundled
// thesaurus so augmentation can regenerate the non-canonical forms.
const NEGATIVE_PREDICATES: [[&str; 4]; 5] = [
    ["causes", "provokes", "triggers", "produces"],
    ["destroys", "ruins", "wrecks", "demolishes"],
    ["attacks", "assaults", "raids", "ambushes"],
    ["threatens", "menaces", "intimidates", "endangers"],
    ["steals", "robs", "loots", "pilfers"],
];
const POSITIVE_PREDICATES: [[&str; 4]; 5] = [
    ["helps", "aids", "assists", "supports"],
    ["protects", "defends", "guards", "shields"],
    ["heals", "cures", "mends", "restores"],
    ["celebrates", "honors", "praises", "applauds"],
    ["improves", "enhances", "enriches", "uplifts"],
];
const NEUTRAL_PREDICATES: [[&str; 4]; 5] = [
    ["discusses", "mentions", "describes", "reviews"],
    ["visits", "attends", "tours", "enters"],
    ["observes", "watches", "notices", "views"],
    ["studies", "examines", "surveys", "analyzes"],
    ["organizes", "arranges", "schedules", "coordinates"],
];

const NEGATIVE_OBJECTS: [&str; 5] = ["war", "conflict", "damage", "unrest", "distrust"];
const POSITIVE_OBJECTS: [&str; 5] = ["peace", "hope", "charity", "harmony", "progress"];
const NEUTRAL_OBJECTS: [&str; 5] = ["meetings", "weather", "schedules", "documents", "routines"];
const SHARED_OBJECTS: [&str; 5] = ["events", "changes", "stories", "news", "questions"];

/// Per-category terms, grouped by their ontology level-1 group. The
/// group's position decides its planted profile.
struct CategoryPlan {
    category: Category,
    share: f64,
    groups: &'static [&'static [&'static str]],
}

const PLANS: [CategoryPlan; 4] = [
    CategoryPlan {
        category: Category::Origin,
        share: 0.40,
        groups: &[
            &["Afghanistan", "Korea", "Iraq", "China"],
            &["Nigeria", "Egypt", "Kenya", "Ethiopia"],
            &["Sweden", "Germany", "France", "Italy"],
            &["Mexico", "Brazil", "Canada", "Cuba"],
        ],
    },
    CategoryPlan {
        category: Category::Profession,
        share: 0.35,
        groups: &[
            &["doctor", "nurse", "surgeon", "dentist"],
            &["singer", "actor", "painter", "musician"],
            &["engineer", "scientist", "programmer", "chemist"],
            &["mechanic", "welder", "miner", "carpenter"],
        ],
    },
    CategoryPlan {
        category: Category::Gender,
        share: 0.15,
        groups: &[
            &["she", "lady", "female", "stepmother", "mother", "girl", "wife", "daughter"],
            &["he", "male", "stepfather", "father", "boy", "husband", "son", "brother"],
        ],
    },
    CategoryPlan {
        category: Category::Religion,
        share: 0.10,
        groups: &[
            &["Christianity", "church", "priest", "bible"],
            &["Islam", "mosque", "imam", "Quran"],
            &["Hinduism", "Brahmin"],
            &["Buddhism", "monk"],
        ],
    },
];

fn group_profile(group_index: usize) -> [f64; 3] {
    match group_index % 3 {
        0 => BIASED_PROFILE, // negative-leaning
        1 => [BIASED_PROFILE[2], BIASED_PROFILE[1], BIASED_PROFILE[0]],
        _ => [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    }
}

fn sample_label(rng: &mut ChaCha8Rng, profile: [f64; 3]) -> Label {
    let draw: f64 = rng.gen();
    if draw < profile[0] {
        Label::Negative
    } else if draw < profile[0] + profile[1] {
        Label::Neutral
    } else {
        Label::Positive
    }
}

fn capitalize_first(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        None => String::new(),
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
    }
}

/// Generate a corpus of roughly `size` records (exact once per-category
/// rounding settles). Deterministic given the seed.
pub fn generate(seed: u64, size: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(size);
    let mut used_texts: HashSet<String> = HashSet::new();
    let mut id = 0usize;

    for plan in &PLANS {
        // keep every category splittable even for tiny sizes
        let count = ((size as f64 * plan.share).round() as usize).max(2);
        let terms: Vec<(usize, &str)> = plan
            .groups
            .iter()
            .enumerate()
            .flat_map(|(gi, group)| group.iter().map(move |t| (gi, *t)))
            .collect();
        for i in 0..count {
            let (group_index, term) = terms[i % terms.len()];
            let profile = group_profile(group_index);
            let gold = sample_label(&mut rng, profile);
            let (groups, objects): (&[[&str; 4]; 5], &[&str; 5]) = match gold {
                Label::Negative => (&NEGATIVE_PREDICATES, &NEGATIVE_OBJECTS),
                Label::Positive => (&POSITIVE_PREDICATES, &POSITIVE_OBJECTS),
                Label::Neutral => (&NEUTRAL_PREDICATES, &NEUTRAL_OBJECTS),
            };

            // re-roll a few times to keep texts mostly distinct
            let mut predicate = "";
            let mut object = "";
            for _ in 0..20 {
                let group = &groups[rng.gen_range(0usize..groups.len())];
                predicate = if rng.gen::<f64>() < CANONICAL_PREDICATE_WEIGHT {
                    group[0]
                } else {
                    group[1 + rng.gen_range(0usize..3)]
                };
                object = if rng.gen::<f64>() < SHARED_OBJECT_RATE {
                    SHARED_OBJECTS[rng.gen_range(0usize..SHARED_OBJECTS.len())]
                } else {
                    objects[rng.gen_range(0usize..objects.len())]
                };
                let text = format!("{} {} {}", capitalize_first(term), predicate, object);
                if !used_texts.contains(&text) {
                    break;
                }
            }

            let mut annotator_labels = vec![gold, gold, gold];
            if rng.gen::<f64>() >= FULL_AGREEMENT_RATE {
                let others: Vec<Label> =
                    Label::ALL.iter().copied().filter(|&l| l != gold).collect();
                annotator_labels[2] = others[rng.gen_range(0usize..others.len())];
                annotator_labels.shuffle(&mut rng);
            }

            let record = SentenceRecord::from_tuple(
                format!("syn-{id:05}"),
                capitalize_first(term),
                predicate,
                object,
                plan.category,
                term,
                annotator_labels,
            )
            .expect("generated record is valid");
            used_texts.insert(record.text.clone());
            records.push(record);
            id += 1;
        }
    }

    records.shuffle(&mut rng);
    Corpus::new(format!("synthetic-{seed}"), records)
}

/// The default fixture: seed 42, ~500 records.
pub fn default_corpus() -> Corpus {
    generate(42, DEFAULT_SIZE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::ontology::TermOntology;

    #[test]
    fn generation_is_deterministic() {
        let a = generate(42, 200);
        let b = generate(42, 200);
        assert_eq!(a.records, b.records);
        let c = generate(43, 200);
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn default_corpus_shape() {
        let corpus = default_corpus();
        assert!((480..=520).contains(&corpus.len()), "len = {}", corpus.len());
        let stats = corpus::category_stats(&corpus);
        assert!(stats.categories.iter().all(|c| c.count >= 2));
    }

    #[test]
    fn every_record_is_valid_and_mapped() {
        let ontology = TermOntology::bundled();
        let corpus = generate(7, 300);
        for record in &corpus.records {
            record.validate().unwrap();
            assert!(
                ontology.get(&record.term).is_some(),
                "term `{}` missing from bundled ontology",
                record.term
            );
        }
    }

    #[test]
    fn predicates_come_from_the_bundled_thesaurus() {
        let thesaurus = crate::augment::Thesaurus::bundled();
        let corpus = generate(11, 300);
        for record in &corpus.records {
            assert!(
                !crate::augment::synonyms_thesaurus(&record.predicate, &thesaurus).is_empty(),
                "predicate `{}` has no synonyms",
                record.predicate
            );
        }
    }

    #[test]
    fn split_works_on_small_sizes() {
        let corpus = generate(3, 60);
        let (train, test) = corpus::split(&corpus, 0.2, 1).unwrap();
        assert_eq!(train.len() + test.len(), corpus.len());
    }
}
