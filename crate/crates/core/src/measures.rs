//! Conversation- and call-level NOR measures, category tallies, Gricean
//! score summaries, quarterly ratios and cross-model overlap.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::date::Quarter;
use crate::elicitor::{Category, NorAnnotation, NorCount};
use crate::math::mean;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("every annotation of transcript {0} is an ERROR")]
    AllErrored(String),
    #[error("no valid calls in quarter {0}")]
    EmptyQuarter(Quarter),
}

/// One valid (non-ERROR) annotation reduced to its measures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationMeasure {
    pub conver_id: String,
    pub nor_c: u8,
    pub nor_con: u8,
    /// At most `nor_con` labels.
    pub category: Vec<Category>,
    pub quantity: Option<u8>,
    pub relevance: Option<u8>,
    pub clarity: Option<u8>,
}

impl ConversationMeasure {
    /// `None` for ERROR annotations.
    pub fn from_annotation(a: &NorAnnotation) -> Option<ConversationMeasure> {
        let n = a.nor_count.count()?;
        let mut category = a.category.clone();
        category.truncate(n as usize);
        Some(ConversationMeasure {
            conver_id: a.conver_id.clone(),
            nor_c: u8::from(n > 0),
            nor_con: n,
            category,
            quantity: a.quantity,
            relevance: a.relevance,
            clarity: a.clarity,
        })
    }
}

/// Label tallies. `other` holds labels outside the taxonomy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub refusal: u64,
    pub lack: u64,
    pub legal: u64,
    pub recall: u64,
    pub irrelevant: u64,
    pub other: u64,
}

impl CategoryCounts {
    pub fn add(&mut self, c: &Category) {
        *self.slot(c) += 1;
    }

    fn slot(&mut self, c: &Category) -> &mut u64 {
        match c {
            Category::Refusal => &mut self.refusal,
            Category::LackOfInfo => &mut self.lack,
            Category::LegalAffairs => &mut self.legal,
            Category::Recall => &mut self.recall,
            Category::Irrelevant => &mut self.irrelevant,
            Category::Other(_) => &mut self.other,
        }
    }

    pub fn get(&self, c: &Category) -> u64 {
        match c {
            Category::Refusal => self.refusal,
            Category::LackOfInfo => self.lack,
            Category::LegalAffairs => self.legal,
            Category::Recall => self.recall,
            Category::Irrelevant => self.irrelevant,
            Category::Other(_) => self.other,
        }
    }

    pub fn total(&self) -> u64 {
        self.refusal + self.lack + self.legal + self.recall + self.irrelevant + self.other
    }

    pub fn merge(&mut self, other: &CategoryCounts) {
        self.refusal += other.refusal;
        self.lack += other.lack;
        self.legal += other.legal;
        self.recall += other.recall;
        self.irrelevant += other.irrelevant;
        self.other += other.other;
    }
}

/// Identifies the call an annotation set belongs to.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallKey {
    pub transcript_id: String,
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallMeasures {
    pub transcript_id: String,
    pub firm_id: String,
    pub fiscal_quarter: Quarter,
    pub nor_f: u8,
    pub nor_firm: u64,
    pub categories: CategoryCounts,
    /// Non-responses without a label.
    pub unlabeled: u64,
    pub quantity: Option<f64>,
    pub relevance: Option<f64>,
    pub clarity: Option<f64>,
    /// Mean of the available per-call score means.
    pub mscore: Option<f64>,
    /// Valid exchanges.
    pub n_exchanges: u64,
    pub n_errors: u64,
    #[serde(skip)]
    pub conversations: Vec<ConversationMeasure>,
}

fn score_mean(values: impl Iterator<Item = Option<u8>>) -> Option<f64> {
    let xs: Vec<f64> = values.flatten().map(f64::from).collect();
    (!xs.is_empty()).then(|| mean(&xs))
}

/// Aggregates the annotations of one call. ERROR annotations only count
/// towards `n_errors`.
pub fn summarize_call(key: &CallKey, annotations: &[NorAnnotation]) -> Result<CallMeasures, MeasureError> {
    let conversations: Vec<ConversationMeasure> =
        annotations.iter().filter_map(ConversationMeasure::from_annotation).collect();
    let n_errors = (annotations.len() - conversations.len()) as u64;
    if conversations.is_empty() {
        return Err(MeasureError::AllErrored(key.transcript_id.clone()));
    }
    let mut categories = CategoryCounts::default();
    let mut nor_firm = 0u64;
    for c in &conversations {
        nor_firm += u64::from(c.nor_con);
        c.category.iter().for_each(|l| categories.add(l));
    }
    let quantity = score_mean(conversations.iter().map(|c| c.quantity));
    let relevance = score_mean(conversations.iter().map(|c| c.relevance));
    let clarity = score_mean(conversations.iter().map(|c| c.clarity));
    let means: Vec<f64> = [quantity, relevance, clarity].into_iter().flatten().collect();
    Ok(CallMeasures {
        transcript_id: key.transcript_id.clone(),
        firm_id: key.firm_id.clone(),
        fiscal_quarter: key.fiscal_quarter,
        nor_f: u8::from(nor_firm > 0),
        nor_firm,
        unlabeled: nor_firm.saturating_sub(categories.total()),
        categories,
        quantity,
        relevance,
        clarity,
        mscore: (!means.is_empty()).then(|| mean(&means)),
        n_exchanges: conversations.len() as u64,
        n_errors,
        conversations,
    })
}

/// Groups annotations by the transcript part of their `conver_id`.
pub fn group_by_transcript(annotations: &[NorAnnotation]) -> BTreeMap<&str, Vec<NorAnnotation>> {
    let mut out: BTreeMap<&str, Vec<NorAnnotation>> = BTreeMap::new();
    for a in annotations {
        let id = a.conver_id.rsplit_once('-').map(|(id, _)| id).unwrap_or(&a.conver_id);
        out.entry(id).or_default().push(a.clone());
    }
    out
}

/// Share of valid conversations carrying at least one label of a category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryShares {
    pub refusal: f64,
    pub lack: f64,
    pub legal: f64,
    pub recall: f64,
    pub irrelevant: f64,
    pub other: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterRatios {
    pub quarter: Quarter,
    pub n_calls: u64,
    pub n_calls_nor: u64,
    pub nor_f_ratio: f64,
    pub n_conversations: u64,
    pub n_conversations_nor: u64,
    pub nor_c_ratio: f64,
    pub shares: CategoryShares,
}

/// Ratios for one quarter over the given calls (other quarters are ignored).
pub fn quarter_ratios(calls: &[CallMeasures], quarter: Quarter) -> Result<QuarterRatios, MeasureError> {
    let calls: Vec<&CallMeasures> = calls.iter().filter(|c| c.fiscal_quarter == quarter).collect();
    if calls.is_empty() {
        return Err(MeasureError::EmptyQuarter(quarter));
    }
    let n_calls = calls.len() as u64;
    let n_calls_nor = calls.iter().filter(|c| c.nor_f == 1).count() as u64;
    let mut n_conv = 0u64;
    let mut n_conv_nor = 0u64;
    let mut with = CategoryCounts::default();
    for conv in calls.iter().flat_map(|c| &c.conversations) {
        n_conv += 1;
        n_conv_nor += u64::from(conv.nor_c);
        let distinct: BTreeSet<&Category> = conv.category.iter().collect();
        distinct.into_iter().for_each(|l| with.add(l));
    }
    let share = |k: u64| if n_conv == 0 { 0.0 } else { k as f64 / n_conv as f64 };
    Ok(QuarterRatios {
        quarter,
        n_calls,
        n_calls_nor,
        nor_f_ratio: n_calls_nor as f64 / n_calls as f64,
        n_conversations: n_conv,
        n_conversations_nor: n_conv_nor,
        nor_c_ratio: share(n_conv_nor),
        shares: CategoryShares {
            refusal: share(with.refusal),
            lack: share(with.lack),
            legal: share(with.legal),
            recall: share(with.recall),
            irrelevant: share(with.irrelevant),
            other: share(with.other),
        },
    })
}

/// [`quarter_ratios`] for every quarter present, in quarter order.
pub fn all_quarter_ratios(calls: &[CallMeasures]) -> Vec<QuarterRatios> {
    let quarters: BTreeSet<Quarter> = calls.iter().map(|c| c.fiscal_quarter).collect();
    quarters
        .into_iter()
        .filter_map(|q| quarter_ratios(calls, q).ok())
        .collect()
}

/// Distribution of per-conversation NOR counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NorDistribution {
    /// Conversations with 0, 1, 2 and 3 non-responses.
    pub counts: [u64; 4],
    pub errors: u64,
}

impl NorDistribution {
    pub fn from_annotations<'a>(annotations: impl IntoIterator<Item = &'a NorAnnotation>) -> Self {
        let mut d = NorDistribution::default();
        for a in annotations {
            match a.nor_count {
                NorCount::Count(n) => d.counts[usize::from(n.min(3))] += 1,
                NorCount::Error => d.errors += 1,
            }
        }
        d
    }

    pub fn valid(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.valid() + self.errors
    }

    /// Conversations with at least one non-response.
    pub fn nor_conversations(&self) -> u64 {
        self.counts[1..].iter().sum()
    }

    /// Sum of NOR counts over conversations.
    pub fn nor_sum(&self) -> u64 {
        self.counts.iter().enumerate().map(|(k, n)| k as u64 * n).sum()
    }

    /// NOR_C ratio over valid conversations.
    pub fn nor_c_ratio(&self) -> f64 {
        self.nor_conversations() as f64 / self.valid() as f64
    }
}

/// Label tallies over all valid annotations.
pub fn category_tally<'a>(annotations: impl IntoIterator<Item = &'a NorAnnotation>) -> CategoryCounts {
    let mut counts = CategoryCounts::default();
    for m in annotations.into_iter().filter_map(ConversationMeasure::from_annotation) {
        m.category.iter().for_each(|c| counts.add(c));
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub common: u64,
    pub only_a: u64,
    pub only_b: u64,
    pub jaccard: f64,
}

fn nor_ids(annotations: &[NorAnnotation]) -> BTreeSet<&str> {
    annotations
        .iter()
        .filter(|a| a.nor_indicator() == Some(1))
        .map(|a| a.conver_id.as_str())
        .collect()
}

/// Agreement between two models on which conversations contain a NOR.
pub fn model_overlap(a: &[NorAnnotation], b: &[NorAnnotation]) -> Overlap {
    let sa = nor_ids(a);
    let sb = nor_ids(b);
    let common = sa.intersection(&sb).count() as u64;
    let only_a = sa.len() as u64 - common;
    let only_b = sb.len() as u64 - common;
    let union = common + only_a + only_b;
    Overlap {
        common,
        only_a,
        only_b,
        jaccard: if union == 0 { 1.0 } else { common as f64 / union as f64 },
    }
}
