//! One serializable document per run, renderable as JSON, CSV, or Markdown.
//!
//! The document carries no timestamps and only deterministic content, so two
//! runs with the same config and backend produce byte-identical JSON. Every
//! document embeds the hash of the config that produced it; rendering for a
//! different config is refused.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::activation::SourceTag;
use crate::metaeval::{
    BroadnessReport, ResponseReport, SanityReport, SimilarityStats, StabilityReport,
};
use crate::scoring::{BenchmarkTable, ScoredExplanation};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("document was produced for config {found}, not {expected}")]
    ConfigHashMismatch { found: String, expected: String },
    #[error("unknown report format {format:?}; expected json, csv, or md")]
    UnknownFormat { format: String },
    #[error("malformed report document: {detail}")]
    MalformedDocument { detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Md,
}

impl std::str::FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "md" => Ok(Self::Md),
            other => Err(ReportError::UnknownFormat { format: other.to_string() }),
        }
    }
}

/// One raw activation sample for histogram rendering downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionPoint {
    pub neuron_index: usize,
    pub source_tag: SourceTag,
    pub value: f64,
}

/// Everything one command run produced. Sections are filled per command
/// kind; absent sections stay `None`/empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub tool_version: String,
    /// Which command produced this document (score, benchmark, metaeval:*).
    pub kind: String,
    pub config_hash: String,
    pub global_seed: u64,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub benchmark: Option<BenchmarkTable>,
    #[serde(default)]
    pub scores: Vec<ScoredExplanation>,
    #[serde(default)]
    pub distributions: Vec<DistributionPoint>,
    #[serde(default)]
    pub response: Option<ResponseReport>,
    #[serde(default)]
    pub sanity: Option<SanityReport>,
    #[serde(default)]
    pub stability: Option<StabilityReport>,
    #[serde(default)]
    pub broadness: Option<BroadnessReport>,
    /// Intraclass similarity per concept, keyed by concept text.
    #[serde(default)]
    pub similarity: Option<BTreeMap<String, SimilarityStats>>,
}

impl ReportDocument {
    pub fn new(kind: &str, config_hash: &str, global_seed: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            global_seed,
            seeds: vec![global_seed],
            benchmark: None,
            scores: Vec::new(),
            distributions: Vec::new(),
            response: None,
            sanity: None,
            stability: None,
            broadness: None,
            similarity: None,
        }
    }

    pub fn verify_config_hash(&self, expected: &str) -> Result<(), ReportError> {
        if self.config_hash != expected {
            return Err(ReportError::ConfigHashMismatch {
                found: self.config_hash.clone(),
                expected: expected.to_string(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ReportError> {
        serde_json::from_slice(bytes)
            .map_err(|e| ReportError::MalformedDocument { detail: e.to_string() })
    }
}

// ===== Rendering =====

fn write_file(path: &Path, content: &str) -> Result<(), ReportError> {
    std::fs::write(path, content).map_err(|e| ReportError::Io { path: path.to_path_buf(), source: e })
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// The score table in long form: one row per (cell, metric), fixed columns
/// `dataset,model,layer,method,metric,mean,std,count`. Uses the embedded
/// benchmark table when present, otherwise aggregates the raw scores.
fn score_table_csv(doc: &ReportDocument) -> String {
    let mut out = String::from("dataset,model,layer,method,metric,mean,std,count\n");
    let table = match &doc.benchmark {
        Some(table) => Some(table.clone()),
        None if !doc.scores.is_empty() => BenchmarkTable::aggregate(&doc.scores).ok(),
        None => None,
    };
    if let Some(table) = table {
        for row in &table.rows {
            for (metric, cell_mean, cell_std) in
                [("auc", row.auc_mean, row.auc_std), ("mad", row.mad_mean, row.mad_std)]
            {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{metric},{cell_mean},{cell_std},{}",
                    csv_field(&row.dataset_id),
                    csv_field(&row.model_id),
                    csv_field(&row.layer_id),
                    csv_field(&row.method_id),
                    row.neuron_count,
                );
            }
        }
    }
    out
}

/// Renders the document under `out_dir` and returns every file written.
///
/// JSON is the full document. CSV writes the score table plus one file per
/// populated section; distribution exports are per-neuron files with
/// columns `source_tag,value`. Markdown is a human-readable digest.
pub fn render_report(
    doc: &ReportDocument,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| ReportError::Io { path: out_dir.to_path_buf(), source: e })?;
    let mut written = Vec::new();
    let emit = |name: &str, content: String, written: &mut Vec<PathBuf>| -> Result<(), ReportError> {
        let path = out_dir.join(name);
        write_file(&path, &content)?;
        written.push(path);
        Ok(())
    };

    match format {
        ReportFormat::Json => {
            emit("report.json", doc.to_json(), &mut written)?;
        }
        ReportFormat::Csv => {
            emit("report.csv", score_table_csv(doc), &mut written)?;
            let mut by_neuron: BTreeMap<usize, Vec<&DistributionPoint>> = BTreeMap::new();
            for point in &doc.distributions {
                by_neuron.entry(point.neuron_index).or_default().push(point);
            }
            for (neuron, points) in by_neuron {
                let mut out = String::from("source_tag,value\n");
                for p in points {
                    let _ = writeln!(out, "{},{}", p.source_tag, p.value);
                }
                emit(&format!("distribution_neuron_{neuron}.csv"), out, &mut written)?;
            }
            if let Some(response) = &doc.response {
                let mut out = String::from(
                    "class,neuron,natural_mean,natural_std,natural_n,synthetic_mean,synthetic_std,synthetic_n,mad\n",
                );
                for r in &response.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{}",
                        csv_field(&r.class_label),
                        r.neuron_index,
                        r.natural_mean,
                        r.natural_std,
                        r.natural_values.len(),
                        r.synthetic_mean,
                        r.synthetic_std,
                        r.synthetic_values.len(),
                        r.mad,
                    );
                }
                emit("response.csv", out, &mut written)?;
            }
            if let Some(sanity) = &doc.sanity {
                let mut out = String::from(
                    "neuron,true_concept,random_concept,true_auc,random_auc,true_mad,random_mad\n",
                );
                for r in &sanity.rows {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.neuron_index,
                        csv_field(&r.true_concept),
                        csv_field(&r.random_concept),
                        r.true_auc,
                        r.random_auc,
                        r.true_mad,
                        r.random_mad,
                    );
                }
                emit("sanity.csv", out, &mut written)?;
            }
            if let Some(stability) = &doc.stability {
                let mut out = String::from("seed,auc,cs_mean,ed_mean\n");
                for (i, seed) in stability.seeds.iter().enumerate() {
                    let _ = writeln!(
                        out,
                        "{seed},{},{},{}",
                        stability.auc_per_seed[i],
                        stability.cs_per_seed[i],
                        stability.ed_per_seed[i],
                    );
                }
                emit("stability.csv", out, &mut written)?;
            }
            if let Some(broadness) = &doc.broadness {
                let mut out = String::from("concept,hypernym_count,cs_mean,cs_std,ed_mean,ed_std\n");
                for level in &broadness.levels {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        csv_field(&level.concept),
                        level.hypernym_count,
                        level.cs_mean,
                        level.cs_std,
                        level.ed_mean,
                        level.ed_std,
                    );
                }
                emit("broadness.csv", out, &mut written)?;
            }
            if let Some(similarity) = &doc.similarity {
                let mut out = String::from("concept,cs_mean,cs_std,ed_mean,ed_std,pair_count\n");
                for (concept, stats) in similarity {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        csv_field(concept),
                        stats.cs_mean,
                        stats.cs_std,
                        stats.ed_mean,
                        stats.ed_std,
                        stats.pair_count,
                    );
                }
                emit("similarity.csv", out, &mut written)?;
            }
        }
        ReportFormat::Md => {
            emit("report.md", render_markdown(doc), &mut written)?;
        }
    }
    Ok(written)
}

fn pm(mean: f64, std: f64) -> String {
    format!("{mean:.4} ± {std:.4}")
}

fn render_markdown(doc: &ReportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# CoSy report: {}\n", doc.kind);
    let _ = writeln!(out, "- tool version: {}", doc.tool_version);
    let _ = writeln!(out, "- config hash: `{}`", doc.config_hash);
    let _ = writeln!(out, "- global seed: {}", doc.global_seed);
    if doc.seeds.len() > 1 {
        let seeds: Vec<String> = doc.seeds.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "- seeds: {}", seeds.join(", "));
    }

    let table = match &doc.benchmark {
        Some(table) => Some(table.clone()),
        None if !doc.scores.is_empty() => BenchmarkTable::aggregate(&doc.scores).ok(),
        None => None,
    };
    if let Some(table) = table {
        let _ = writeln!(out, "\n## Scores\n");
        let _ = writeln!(out, "| dataset | model | layer | method | AUC | MAD | neurons |");
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for row in &table.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                row.dataset_id,
                row.model_id,
                row.layer_id,
                row.method_id,
                pm(row.auc_mean, row.auc_std),
                pm(row.mad_mean, row.mad_std),
                row.neuron_count,
            );
        }
    }
    if let Some(response) = &doc.response {
        let _ = writeln!(out, "\n## Natural vs synthetic response ({}, {})\n", response.model_id, response.layer_id);
        let _ = writeln!(out, "| class | neuron | natural | synthetic | MAD |");
        let _ = writeln!(out, "|---|---|---|---|---|");
        for r in &response.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} |",
                r.class_label,
                r.neuron_index,
                pm(r.natural_mean, r.natural_std),
                pm(r.synthetic_mean, r.synthetic_std),
                r.mad,
            );
        }
    }
    if let Some(sanity) = &doc.sanity {
        let _ = writeln!(out, "\n## Sanity check\n");
        let _ = writeln!(out, "| neuron | true concept | random concept | true AUC | random AUC |");
        let _ = writeln!(out, "|---|---|---|---|---|");
        for r in &sanity.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {:.4} |",
                r.neuron_index, r.true_concept, r.random_concept, r.true_auc, r.random_auc,
            );
        }
        let _ = writeln!(
            out,
            "\naggregate: true {} vs random {}",
            pm(sanity.true_auc_mean, sanity.true_auc_std),
            pm(sanity.random_auc_mean, sanity.random_auc_std),
        );
    }
    if let Some(stability) = &doc.stability {
        let _ = writeln!(
            out,
            "\n## Seed stability: {} (neuron {})\n",
            stability.concept, stability.neuron_index
        );
        let _ = writeln!(out, "| seed | AUC | CS mean | ED mean |");
        let _ = writeln!(out, "|---|---|---|---|");
        for (i, seed) in stability.seeds.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {seed} | {:.4} | {:.4} | {:.4} |",
                stability.auc_per_seed[i], stability.cs_per_seed[i], stability.ed_per_seed[i],
            );
        }
        let _ = writeln!(
            out,
            "\nAUC over seeds: {}; CS: {}; ED: {}",
            pm(stability.auc_mean, stability.auc_std),
            pm(stability.cs_mean, stability.cs_std),
            pm(stability.ed_mean, stability.ed_std),
        );
    }
    if let Some(broadness) = &doc.broadness {
        let _ = writeln!(out, "\n## Concept broadness: {}\n", broadness.concept);
        let _ = writeln!(out, "| level | hypernym count | CS | ED |");
        let _ = writeln!(out, "|---|---|---|---|");
        for level in &broadness.levels {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                level.concept,
                level.hypernym_count,
                pm(level.cs_mean, level.cs_std),
                pm(level.ed_mean, level.ed_std),
            );
        }
        let fmt_rho = |rho: Option<f64>| match rho {
            Some(v) => format!("{v:.4}"),
            None => "absent".to_string(),
        };
        let _ = writeln!(
            out,
            "\nSpearman(depth, CS) = {}; Spearman(depth, ED) = {}",
            fmt_rho(broadness.spearman_cs),
            fmt_rho(broadness.spearman_ed),
        );
    }
    if let Some(similarity) = &doc.similarity {
        let _ = writeln!(out, "\n## Intraclass similarity\n");
        let _ = writeln!(out, "| concept | CS | ED | pairs |");
        let _ = writeln!(out, "|---|---|---|---|");
        for (concept, stats) in similarity {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} |",
                concept,
                pm(stats.cs_mean, stats.cs_std),
                pm(stats.ed_mean, stats.ed_std),
                stats.pair_count,
            );
        }
    }
    out
}
