//! Agreement between a baseline annotation run and repeated runs.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::elicitor::NorAnnotation;
use crate::math::{mean, sample_sd};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitMatch {
    pub conver_id: String,
    pub baseline_nor: u8,
    /// Percent of repetitions agreeing with the baseline indicator.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRatio {
    pub units: Vec<UnitMatch>,
    /// Baseline NOR = 0, baseline NOR = 1, then all units.
    pub groups: Vec<GroupSummary>,
}

pub fn summarize(group: &str, ratios: &[f64]) -> GroupSummary {
    GroupSummary {
        group: group.to_string(),
        n: ratios.len(),
        mean: mean(ratios),
        sd: sample_sd(ratios),
        min: ratios.iter().copied().fold(f64::NAN, f64::min),
        max: ratios.iter().copied().fold(f64::NAN, f64::max),
    }
}

/// Per-unit match percentages. Baseline units with an ERROR annotation are
/// skipped; an ERROR repetition counts as a disagreement.
pub fn match_ratio(baseline: &[NorAnnotation], repetitions: &[Vec<NorAnnotation>]) -> Result<MatchRatio, StatsError> {
    if repetitions.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    let runs: Vec<BTreeMap<&str, &NorAnnotation>> = repetitions
        .iter()
        .map(|r| r.iter().map(|a| (a.conver_id.as_str(), a)).collect())
        .collect();
    let mut units = Vec::new();
    for b in baseline {
        let Some(base) = b.nor_indicator() else {
            continue;
        };
        let mut hits = 0usize;
        for (run, m) in runs.iter().enumerate() {
            let a = m.get(b.conver_id.as_str()).ok_or_else(|| StatsError::CoverageGap {
                run,
                conver_id: b.conver_id.clone(),
            })?;
            if a.nor_indicator() == Some(base) {
                hits += 1;
            }
        }
        units.push(UnitMatch {
            conver_id: b.conver_id.clone(),
            baseline_nor: base,
            ratio: 100.0 * hits as f64 / runs.len() as f64,
        });
    }
    if units.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(MatchRatio {
        groups: group_summaries(&units),
        units,
    })
}

pub fn group_summaries(units: &[UnitMatch]) -> Vec<GroupSummary> {
    let pick = |nor: Option<u8>| -> Vec<f64> {
        units
            .iter()
            .filter(|u| nor.is_none_or(|n| u.baseline_nor == n))
            .map(|u| u.ratio)
            .collect()
    };
    alloc::vec![
        summarize("0", &pick(Some(0))),
        summarize("1", &pick(Some(1))),
        summarize("Total", &pick(None)),
    ]
}
