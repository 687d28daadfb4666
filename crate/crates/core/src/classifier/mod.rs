//! Deterministic reference polarity classifier and evaluation metrics.
//!
//! The reference model is a multinomial bag-of-words classifier with
//! additive smoothing: every posterior is exactly reproducible by hand,
//! which is what the rest of the pipeline is verified against.
//! Transformer-style backends plug in through [`remote`] behind the
//! same [`TextClassifier`] trait.

pub mod remote;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Label};
use crate::text;

/// Literal mask token; survives tokenization as a single token.
pub const MASK_TOKEN: &str = "[MASK]";

/// NFC-normalize, case-fold, and split on non-alphanumeric runs.
/// `[MASK]` is preserved verbatim.
pub fn tokenize(input: &str) -> Vec<String> {
    let normalized = text::nfc(input);
    let mut tokens = Vec::new();
    let mut rest = normalized.as_str();
    while let Some(pos) = rest.find(MASK_TOKEN) {
        push_word_tokens(&rest[..pos], &mut tokens);
        tokens.push(MASK_TOKEN.to_string());
        rest = &rest[pos + MASK_TOKEN.len()..];
    }
    push_word_tokens(rest, &mut tokens);
    tokens
}

fn push_word_tokens(segment: &str, tokens: &mut Vec<String>) {
    for piece in segment.split(|c: char| !c.is_alphanumeric()) {
        if !piece.is_empty() {
            tokens.push(piece.to_lowercase());
        }
    }
}

/// Probability over the three labels, indexed by label order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub probs: [f64; 3],
}

impl LabelDistribution {
    pub fn prob(&self, label: Label) -> f64 {
        self.probs[label.index()]
    }

    /// Highest-probability label; ties break toward the lower label in
    /// the Negative < Neutral < Positive order.
    pub fn argmax(&self) -> Label {
        let mut best = Label::Negative;
        for label in [Label::Neutral, Label::Positive] {
            if self.prob(label) > self.prob(best) {
                best = label;
            }
        }
        best
    }

    /// Each probability in [0, 1] and the total within `tol` of 1.
    pub fn is_valid(&self, tol: f64) -> bool {
        self.probs.iter().all(|p| (0.0..=1.0).contains(p))
            && (self.probs.iter().sum::<f64>() - 1.0).abs() <= tol
    }
}

/// Multinomial bag-of-words model with additive smoothing. Classes
/// absent from training carry no prior and are never predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub smoothing_alpha: f64,
    pub vocabulary: BTreeSet<String>,
    pub class_priors: BTreeMap<Label, f64>,
    pub token_likelihoods: BTreeMap<Label, BTreeMap<String, f64>>,
    pub unseen_likelihood: BTreeMap<Label, f64>,
}

impl ClassifierModel {
    /// Labels with at least one training record.
    pub fn trained_classes(&self) -> Vec<Label> {
        self.class_priors.keys().copied().collect()
    }
}

/// Errors from training, prediction, evaluation, or a remote backend.
#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("smoothing alpha must be positive, got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("model has no trained classes")]
    UntrainedModel,
    #[error("prediction and gold lists differ in length ({predictions} vs {golds})")]
    LengthMismatch { predictions: usize, golds: usize },
    #[error("cannot evaluate empty inputs")]
    EmptyInput,
    #[error("backend unavailable after {attempts} attempts: {reason}")]
    BackendUnavailable { attempts: u32, reason: String },
    #[error("backend protocol violation: {reason}")]
    ProtocolViolation { reason: String },
}

/// Train the reference model. Fully deterministic: identical corpora
/// produce bit-identical parameters.
pub fn train_reference(corpus: &Corpus, alpha: f64) -> Result<ClassifierModel, ClassifierError> {
    if corpus.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    if !(alpha > 0.0) {
        return Err(ClassifierError::InvalidAlpha { alpha });
    }
    let mut vocabulary: BTreeSet<String> = BTreeSet::new();
    let mut doc_counts: BTreeMap<Label, u64> = BTreeMap::new();
    let mut token_counts: BTreeMap<Label, BTreeMap<String, u64>> = BTreeMap::new();
    for record in &corpus.records {
        *doc_counts.entry(record.gold).or_insert(0) += 1;
        let counts = token_counts.entry(record.gold).or_default();
        for token in tokenize(&record.text) {
            *counts.entry(token.clone()).or_insert(0) += 1;
            vocabulary.insert(token);
        }
    }
    let total_docs = corpus.len() as f64;
    let mut class_priors = BTreeMap::new();
    let mut token_likelihoods = BTreeMap::new();
    let mut unseen_likelihood = BTreeMap::new();
    for (&label, counts) in &token_counts {
        class_priors.insert(label, doc_counts[&label] as f64 / total_docs);
        let token_total: u64 = counts.values().sum();
        let denom = token_total as f64 + alpha * vocabulary.len() as f64;
        let mut likelihoods = BTreeMap::new();
        for token in &vocabulary {
            let count = counts.get(token).copied().unwrap_or(0);
            likelihoods.insert(token.clone(), (count as f64 + alpha) / denom);
        }
        token_likelihoods.insert(label, likelihoods);
        unseen_likelihood.insert(label, if denom > 0.0 { alpha / denom } else { 1.0 });
    }
    Ok(ClassifierModel {
        smoothing_alpha: alpha,
        vocabulary,
        class_priors,
        token_likelihoods,
        unseen_likelihood,
    })
}

/// Posterior over trained classes via log-space accumulation. Tokens
/// outside the vocabulary contribute only smoothing mass.
pub fn predict(model: &ClassifierModel, input: &str) -> Result<LabelDistribution, ClassifierError> {
    if model.class_priors.is_empty() {
        return Err(ClassifierError::UntrainedModel);
    }
    let tokens = tokenize(input);
    let mut scores: Vec<(Label, f64)> = Vec::with_capacity(model.class_priors.len());
    for (&label, &prior) in &model.class_priors {
        let likelihoods = &model.token_likelihoods[&label];
        let unseen = model.unseen_likelihood[&label];
        let mut log_score = prior.ln();
        for token in &tokens {
            let p = likelihoods.get(token).copied().unwrap_or(unseen);
            log_score += p.ln();
        }
        scores.push((label, log_score));
    }
    let max = scores
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs = [0.0f64; 3];
    let mut total = 0.0;
    for &(label, score) in &scores {
        let p = (score - max).exp();
        probs[label.index()] = p;
        total += p;
    }
    for p in &mut probs {
        *p /= total;
    }
    Ok(LabelDistribution { probs })
}

/// Anything that can score a batch of texts: the reference model or a
/// remote backend. Output order always matches input order.
pub trait TextClassifier {
    fn classify(&self, texts: &[String]) -> Result<Vec<LabelDistribution>, ClassifierError>;
}

impl TextClassifier for ClassifierModel {
    fn classify(&self, texts: &[String]) -> Result<Vec<LabelDistribution>, ClassifierError> {
        texts.iter().map(|t| predict(self, t)).collect()
    }
}

/// Per-class precision, recall, F1, and gold support. Classes that are
/// never predicted or have zero support score 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Evaluation summary. The headline values are support-weighted means
/// of the per-class values; macro means are available as methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub per_class: BTreeMap<Label, ClassMetrics>,
}

impl Metrics {
    pub fn macro_precision(&self) -> f64 {
        self.per_class.values().map(|m| m.precision).sum::<f64>() / 3.0
    }

    pub fn macro_recall(&self) -> f64 {
        self.per_class.values().map(|m| m.recall).sum::<f64>() / 3.0
    }

    pub fn macro_f1(&self) -> f64 {
        self.per_class.values().map(|m| m.f1).sum::<f64>() / 3.0
    }
}

/// Compare predictions against golds. Weighted recall equals accuracy
/// by identity (every record is scored exactly once).
pub fn evaluate(predictions: &[Label], golds: &[Label]) -> Result<Metrics, ClassifierError> {
    if predictions.len() != golds.len() {
        return Err(ClassifierError::LengthMismatch {
            predictions: predictions.len(),
            golds: golds.len(),
        });
    }
    if predictions.is_empty() {
        return Err(ClassifierError::EmptyInput);
    }
    let n = predictions.len();
    let mut tp = [0usize; 3];
    let mut predicted = [0usize; 3];
    let mut support = [0usize; 3];
    for (&pred, &gold) in predictions.iter().zip(golds.iter()) {
        predicted[pred.index()] += 1;
        support[gold.index()] += 1;
        if pred == gold {
            tp[gold.index()] += 1;
        }
    }
    let mut per_class = BTreeMap::new();
    let mut weighted_precision = 0.0;
    let mut weighted_f1 = 0.0;
    for label in Label::ALL {
        let i = label.index();
        let precision = if predicted[i] > 0 {
            tp[i] as f64 / predicted[i] as f64
        } else {
            0.0
        };
        let recall = if support[i] > 0 {
            tp[i] as f64 / support[i] as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        weighted_precision += support[i] as f64 * precision;
        weighted_f1 += support[i] as f64 * f1;
        per_class.insert(
            label,
            ClassMetrics {
                precision,
                recall,
                f1,
                support: support[i],
            },
        );
    }
    let accuracy = tp.iter().sum::<usize>() as f64 / n as f64;
    Ok(Metrics {
        accuracy,
        weighted_precision: weighted_precision / n as f64,
        // identical to accuracy: sum over classes of
        // support * (tp/support) / n collapses to total tp / n
        weighted_recall: accuracy,
        weighted_f1: weighted_f1 / n as f64,
        per_class,
    })
}
