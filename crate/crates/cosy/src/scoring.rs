//! Per-neuron explanation scores and their aggregation into benchmark
//! tables.
//!
//! The rank score is the probability that a uniformly drawn control
//! activation sits below a uniformly drawn synthetic activation. The strict
//! policy counts tied pairs as losses, which is the literal reading of the
//! definition; the midrank policy credits half a win per tie, the usual
//! statistics convention, and is offered because activations stored as f32
//! can tie after rounding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationStore, SourceTag};
use crate::concepts::ExplanationRecord;
use crate::stats::{mean, population_std};

#[derive(Debug, thiserror::Error)]
pub enum ScoringError {
    #[error("activation set {side} is empty")]
    EmptyInput { side: &'static str },
    #[error("activation set {side} holds a non-finite value at index {index}")]
    NonFiniteValue { side: &'static str, index: usize },
    #[error("store mismatch: {detail}")]
    StoreMismatch { detail: String },
    #[error("neuron index {index} out of range for {count} neurons")]
    NeuronOutOfRange { index: usize, count: usize },
    #[error("activation set {side} holds {count} values; scoring needs at least 2")]
    TooFewSamples { side: &'static str, count: usize },
    #[error("benchmark aggregation received no scored records")]
    EmptyCell,
    #[error("no control store for layer {layer_id:?}")]
    MissingControlStore { layer_id: String },
    #[error("no synthetic store for ({method_id}, {layer_id}, {neuron_index})")]
    MissingSyntheticStore { method_id: String, layer_id: String, neuron_index: usize },
}

/// How tied control/synthetic pairs are credited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiePolicy {
    #[default]
    Strict,
    Midrank,
}

// ===== Score kernels =====

fn check_finite(values: &[f64], side: &'static str) -> Result<(), ScoringError> {
    if values.is_empty() {
        return Err(ScoringError::EmptyInput { side });
    }
    for (index, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(ScoringError::NonFiniteValue { side, index });
        }
    }
    Ok(())
}

/// Pair-counting AUC between a control set `a0` and a synthetic set `a1`.
///
/// Runs in O((n+m) log n) by sorting `a0` and binary-searching each synthetic
/// value, and matches the O(nm) pair-count definition bit-for-bit: both
/// accumulate sums of halves, which f64 represents exactly at these sizes.
pub fn auc_score(a0: &[f64], a1: &[f64], tie_policy: TiePolicy) -> Result<f64, ScoringError> {
    check_finite(a0, "A0")?;
    check_finite(a1, "A1")?;
    let mut sorted = a0.to_vec();
    sorted.sort_by(f64::total_cmp);
    // total_cmp puts -0.0 before 0.0, which the numeric predicates below
    // treat as equal; the array stays partitioned for both of them.
    let mut wins = 0.0f64;
    for &b in a1 {
        let lt = sorted.partition_point(|&a| a < b);
        wins += lt as f64;
        if tie_policy == TiePolicy::Midrank {
            let le = sorted.partition_point(|&a| a <= b);
            wins += 0.5 * (le - lt) as f64;
        }
    }
    Ok(wins / (a0.len() as f64 * a1.len() as f64))
}

/// Mean synthetic activation minus mean control activation, in raw
/// activation units.
pub fn mad_score(a0: &[f64], a1: &[f64]) -> Result<f64, ScoringError> {
    check_finite(a0, "A0")?;
    check_finite(a1, "A1")?;
    Ok(mean(a1) - mean(a0))
}

// ===== Per-record evaluation =====

/// Both scores for one neuron under one explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResult {
    pub neuron_index: usize,
    pub method_id: String,
    pub auc: f64,
    pub mad: f64,
    pub n: usize,
    pub m: usize,
    pub tie_policy: TiePolicy,
}

/// Scores `record`'s neuron by comparing its control column against its
/// synthetic column. The synthetic store must consist entirely of rows
/// generated for the record's text.
pub fn evaluate_explanation(
    record: &ExplanationRecord,
    control: &ActivationStore,
    synthetic: &ActivationStore,
    tie_policy: TiePolicy,
) -> Result<ScoreResult, ScoringError> {
    let mismatch = |detail: String| ScoringError::StoreMismatch { detail };
    if control.model_id() != synthetic.model_id() {
        return Err(mismatch(format!(
            "control is from model {:?}, synthetic from {:?}",
            control.model_id(),
            synthetic.model_id()
        )));
    }
    if control.layer_id() != synthetic.layer_id() || control.layer_id() != record.layer_id {
        return Err(mismatch(format!(
            "layers disagree: control {:?}, synthetic {:?}, record {:?}",
            control.layer_id(),
            synthetic.layer_id(),
            record.layer_id
        )));
    }
    if control.neuron_count() != synthetic.neuron_count() {
        return Err(mismatch(format!(
            "control has {} neurons, synthetic {}",
            control.neuron_count(),
            synthetic.neuron_count()
        )));
    }
    for prov in synthetic.rows() {
        if prov.source != SourceTag::Synthetic || prov.concept_text.as_deref() != Some(record.text.as_str()) {
            return Err(mismatch(format!(
                "synthetic store row {:?} is not tagged with the record's text {:?}",
                prov.image_ref, record.text
            )));
        }
    }
    if record.neuron_index >= control.neuron_count() {
        return Err(ScoringError::NeuronOutOfRange {
            index: record.neuron_index,
            count: control.neuron_count(),
        });
    }

    let a0 = control.column(record.neuron_index).expect("bounds checked above");
    let a1 = synthetic.column(record.neuron_index).expect("bounds checked above");
    if a0.len() < 2 {
        return Err(ScoringError::TooFewSamples { side: "A0", count: a0.len() });
    }
    if a1.len() < 2 {
        return Err(ScoringError::TooFewSamples { side: "A1", count: a1.len() });
    }
    Ok(ScoreResult {
        neuron_index: record.neuron_index,
        method_id: record.method_id.clone(),
        auc: auc_score(&a0, &a1, tie_policy)?,
        mad: mad_score(&a0, &a1)?,
        n: a0.len(),
        m: a1.len(),
        tie_policy,
    })
}

// ===== Benchmark tables =====

/// A scored record plus the grouping context it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredExplanation {
    pub dataset_id: String,
    pub model_id: String,
    pub layer_id: String,
    pub result: ScoreResult,
}

/// One (dataset, model, layer, method) cell: mean and population standard
/// deviation of both scores over the cell's neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub dataset_id: String,
    pub model_id: String,
    pub layer_id: String,
    pub method_id: String,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub mad_mean: f64,
    pub mad_std: f64,
    pub neuron_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkTable {
    /// Groups scored records into cells, sorted by (dataset, model, layer,
    /// method) so the table is deterministic regardless of input order.
    pub fn aggregate(scored: &[ScoredExplanation]) -> Result<Self, ScoringError> {
        if scored.is_empty() {
            return Err(ScoringError::EmptyCell);
        }
        let mut cells: BTreeMap<(String, String, String, String), Vec<&ScoreResult>> = BTreeMap::new();
        for s in scored {
            cells
                .entry((
                    s.dataset_id.clone(),
                    s.model_id.clone(),
                    s.layer_id.clone(),
                    s.result.method_id.clone(),
                ))
                .or_default()
                .push(&s.result);
        }
        let rows = cells
            .into_iter()
            .map(|((dataset_id, model_id, layer_id, method_id), results)| {
                let aucs: Vec<f64> = results.iter().map(|r| r.auc).collect();
                let mads: Vec<f64> = results.iter().map(|r| r.mad).collect();
                BenchmarkRow {
                    dataset_id,
                    model_id,
                    layer_id,
                    method_id,
                    auc_mean: mean(&aucs),
                    auc_std: population_std(&aucs),
                    mad_mean: mean(&mads),
                    mad_std: population_std(&mads),
                    neuron_count: results.len(),
                }
            })
            .collect();
        Ok(Self { rows })
    }
}

/// Scores every record and aggregates the results. Controls are keyed by
/// layer; synthetic stores by (method, layer, neuron).
pub fn benchmark(
    dataset_id: &str,
    records: &[ExplanationRecord],
    controls: &BTreeMap<String, ActivationStore>,
    synthetics: &BTreeMap<(String, String, usize), ActivationStore>,
    tie_policy: TiePolicy,
) -> Result<(BenchmarkTable, Vec<ScoredExplanation>), ScoringError> {
    if records.is_empty() {
        return Err(ScoringError::EmptyCell);
    }
    let mut scored = Vec::with_capacity(records.len());
    for record in records {
        let control = controls.get(&record.layer_id).ok_or_else(|| {
            ScoringError::MissingControlStore { layer_id: record.layer_id.clone() }
        })?;
        let key = (record.method_id.clone(), record.layer_id.clone(), record.neuron_index);
        let synthetic = synthetics.get(&key).ok_or_else(|| ScoringError::MissingSyntheticStore {
            method_id: record.method_id.clone(),
            layer_id: record.layer_id.clone(),
            neuron_index: record.neuron_index,
        })?;
        scored.push(ScoredExplanation {
            dataset_id: dataset_id.to_string(),
            model_id: control.model_id().to_string(),
            layer_id: record.layer_id.clone(),
            result: evaluate_explanation(record, control, synthetic, tie_policy)?,
        });
    }
    Ok((BenchmarkTable::aggregate(&scored)?, scored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::RowProvenance;

    fn pair_count_oracle(a0: &[f64], a1: &[f64], tie_policy: TiePolicy) -> f64 {
        let mut total = 0.0;
        for &a in a0 {
            for &b in a1 {
                if a < b {
                    total += 1.0;
                } else if a == b && tie_policy == TiePolicy::Midrank {
                    total += 0.5;
                }
            }
        }
        total / (a0.len() as f64 * a1.len() as f64)
    }

    #[test]
    fn closed_form_spot_checks() {
        assert_eq!(auc_score(&[0.1, 0.2], &[0.9, 1.0], TiePolicy::Strict).unwrap(), 1.0);
        assert_eq!(auc_score(&[1.0], &[0.0], TiePolicy::Strict).unwrap(), 0.0);
        let v = auc_score(&[1.0, 2.0, 3.0, 4.0], &[2.5, 3.5], TiePolicy::Strict).unwrap();
        assert!((v - 0.625).abs() < 1e-12);

        let shared = [0.0, 1.0];
        assert!((auc_score(&shared, &shared, TiePolicy::Strict).unwrap() - 0.25).abs() < 1e-12);
        assert!((auc_score(&shared, &shared, TiePolicy::Midrank).unwrap() - 0.5).abs() < 1e-12);

        assert!((mad_score(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(mad_score(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn fast_auc_equals_pair_count_oracle_on_tied_data() {
        let a0 = [1.0, 2.0, 2.0, 2.0, 3.0, -0.0, 0.0, 5.5];
        let a1 = [2.0, 2.5, 0.0, 7.0, 1.0, 2.0];
        for policy in [TiePolicy::Strict, TiePolicy::Midrank] {
            assert_eq!(auc_score(&a0, &a1, policy).unwrap(), pair_count_oracle(&a0, &a1, policy));
        }
    }

    #[test]
    fn complement_identities() {
        let a0 = [0.5, 1.5, 2.0, 2.0, 9.0];
        let a1 = [2.0, 0.5, 3.0];
        let forward = auc_score(&a0, &a1, TiePolicy::Midrank).unwrap();
        let backward = auc_score(&a1, &a0, TiePolicy::Midrank).unwrap();
        assert!((forward + backward - 1.0).abs() < 1e-12);

        let tied_pairs = 3.0; // (2.0, 2.0) twice and (0.5, 0.5) once
        let tie_mass = tied_pairs / (a0.len() as f64 * a1.len() as f64);
        let fs = auc_score(&a0, &a1, TiePolicy::Strict).unwrap();
        let bs = auc_score(&a1, &a0, TiePolicy::Strict).unwrap();
        assert!((fs + bs + tie_mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mad_shift_cancels() {
        let a0 = [1.0, 2.0, 3.0];
        let a1 = [2.0, 4.0];
        let base = mad_score(&a0, &a1).unwrap();
        let shifted_a0: Vec<f64> = a0.iter().map(|v| v + 10.0).collect();
        let shifted_a1: Vec<f64> = a1.iter().map(|v| v + 10.0).collect();
        assert!((mad_score(&shifted_a0, &shifted_a1).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn empty_and_non_finite_inputs_are_rejected() {
        assert!(matches!(
            auc_score(&[], &[1.0], TiePolicy::Strict),
            Err(ScoringError::EmptyInput { side: "A0" })
        ));
        assert!(matches!(
            auc_score(&[1.0], &[f64::NAN], TiePolicy::Strict),
            Err(ScoringError::NonFiniteValue { side: "A1", index: 0 })
        ));
        assert!(matches!(mad_score(&[1.0], &[]), Err(ScoringError::EmptyInput { side: "A1" })));
    }

    fn store_with(values: &[f32], source: SourceTag, concept: Option<&str>, layer: &str) -> ActivationStore {
        let mut store = ActivationStore::new("toy-color", layer, 1);
        for (i, &v) in values.iter().enumerate() {
            store
                .push_row(
                    &[v],
                    RowProvenance {
                        source,
                        concept_text: concept.map(str::to_string),
                        image_ref: format!("row{i}"),
                        seed: None,
                    },
                )
                .unwrap();
        }
        store
    }

    fn record(text: &str, neuron: usize) -> ExplanationRecord {
        ExplanationRecord {
            method_id: "TEST".into(),
            layer_id: "color".into(),
            neuron_index: neuron,
            text: text.into(),
        }
    }

    #[test]
    fn evaluate_explanation_scores_columns() {
        let control = store_with(&[0.1, 0.2, 0.3], SourceTag::Control, None, "color");
        let synthetic = store_with(&[0.8, 0.9], SourceTag::Synthetic, Some("rope"), "color");
        let result = evaluate_explanation(&record("rope", 0), &control, &synthetic, TiePolicy::Strict).unwrap();
        assert_eq!(result.auc, 1.0);
        assert_eq!((result.n, result.m), (3, 2));
        assert!((result.mad - (0.85 - 0.2)).abs() < 1e-6);
    }

    #[test]
    fn evaluate_explanation_guards() {
        let control = store_with(&[0.1, 0.2], SourceTag::Control, None, "color");
        let synthetic = store_with(&[0.8, 0.9], SourceTag::Synthetic, Some("rope"), "color");

        let other_layer = store_with(&[0.8, 0.9], SourceTag::Synthetic, Some("rope"), "other");
        assert!(matches!(
            evaluate_explanation(&record("rope", 0), &control, &other_layer, TiePolicy::Strict),
            Err(ScoringError::StoreMismatch { .. })
        ));

        assert!(matches!(
            evaluate_explanation(&record("rope", 1), &control, &synthetic, TiePolicy::Strict),
            Err(ScoringError::NeuronOutOfRange { index: 1, count: 1 })
        ));

        // Synthetic rows tagged with a different concept are refused.
        assert!(matches!(
            evaluate_explanation(&record("ladder", 0), &control, &synthetic, TiePolicy::Strict),
            Err(ScoringError::StoreMismatch { .. })
        ));

        let control_tagged = store_with(&[0.7, 0.9], SourceTag::Control, Some("rope"), "color");
        assert!(matches!(
            evaluate_explanation(&record("rope", 0), &control, &control_tagged, TiePolicy::Strict),
            Err(ScoringError::StoreMismatch { .. })
        ));
    }

    fn scored(layer: &str, method: &str, neuron: usize, auc: f64, mad: f64) -> ScoredExplanation {
        ScoredExplanation {
            dataset_id: "desk".into(),
            model_id: "toy-color".into(),
            layer_id: layer.into(),
            result: ScoreResult {
                neuron_index: neuron,
                method_id: method.into(),
                auc,
                mad,
                n: 10,
                m: 10,
                tie_policy: TiePolicy::Strict,
            },
        }
    }

    #[test]
    fn aggregation_mean_and_population_std() {
        let table = BenchmarkTable::aggregate(&[
            scored("color", "INVERT", 0, 0.9, 1.0),
            scored("color", "INVERT", 1, 1.0, 3.0),
            scored("color", "MILAN", 0, 0.5, 0.0),
        ])
        .unwrap();
        assert_eq!(table.rows.len(), 2);
        let invert = &table.rows[0];
        assert_eq!(invert.method_id, "INVERT");
        assert!((invert.auc_mean - 0.95).abs() < 1e-12);
        assert!((invert.auc_std - 0.05).abs() < 1e-12);
        assert!((invert.mad_mean - 2.0).abs() < 1e-12);
        assert_eq!(invert.neuron_count, 2);

        let milan = &table.rows[1];
        assert_eq!(milan.auc_std, 0.0);
        assert_eq!(milan.neuron_count, 1);

        assert!(matches!(BenchmarkTable::aggregate(&[]), Err(ScoringError::EmptyCell)));
    }

    #[test]
    fn benchmark_groups_by_layer() {
        let mut controls = BTreeMap::new();
        controls.insert("color".to_string(), store_with(&[0.1, 0.2, 0.3], SourceTag::Control, None, "color"));
        let mut synthetics = BTreeMap::new();
        synthetics.insert(
            ("TEST".to_string(), "color".to_string(), 0),
            store_with(&[0.8, 0.9], SourceTag::Synthetic, Some("rope"), "color"),
        );
        let records = vec![record("rope", 0)];
        let (table, scored) = benchmark("desk", &records, &controls, &synthetics, TiePolicy::Strict).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(scored.len(), 1);
        assert_eq!(table.rows[0].layer_id, "color");
        assert_eq!(table.rows[0].auc_mean, 1.0);

        let missing = vec![record("rope", 0), {
            let mut r = record("rope", 1);
            r.layer_id = "absent".into();
            r
        }];
        assert!(matches!(
            benchmark("desk", &missing, &controls, &synthetics, TiePolicy::Strict),
            Err(ScoringError::MissingControlStore { .. })
        ));
    }
}
