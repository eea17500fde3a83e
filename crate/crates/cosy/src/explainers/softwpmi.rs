//! Soft pointwise-mutual-information labeling from an image-by-concept
//! similarity matrix.
//!
//! Each concept `s` gets the score `ln E[p(s|x)] - lambda * ln p(s)`, where
//! `p(s|x)` is a per-image softmax over concepts at temperature `tau`, the
//! expectation weights images by their (clamped) activation mass over the
//! `top_k` most-activating images, and `p(s)` is the mean of `p(s|x)` over
//! all images. The hard-membership special case (0/1 activations, `top_k` =
//! number of ones) reduces the expectation to a plain mean over the member
//! set.

use super::ExplainerError;

/// Dense row-major image-by-concept similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ExplainerError> {
        if rows == 0 || cols == 0 {
            return Err(ExplainerError::InvalidConfig {
                detail: "similarity matrix must have at least one row and one column".into(),
            });
        }
        if data.len() != rows * cols {
            return Err(ExplainerError::InputMismatch {
                detail: format!("{} entries for a {rows}x{cols} matrix", data.len()),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(ExplainerError::InputMismatch {
                detail: format!("similarity entry {pos} is not finite"),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        assert!(row < self.rows && col < self.cols, "index ({row}, {col}) out of bounds");
        self.data[row * self.cols + col]
    }
}

/// Labeler knobs. `lambda` trades fit against concept rarity, `top_k` caps
/// how many images carry expectation weight, `temperature` sharpens the
/// per-image concept posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftWpmiConfig {
    pub lambda: f64,
    pub top_k: usize,
    pub temperature: f64,
}

impl SoftWpmiConfig {
    fn validate(&self, n_rows: usize) -> Result<(), ExplainerError> {
        let invalid = |detail: String| ExplainerError::InvalidConfig { detail };
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(invalid(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if self.top_k == 0 || self.top_k > n_rows {
            return Err(invalid(format!(
                "top_k must be in 1..={n_rows}, got {}",
                self.top_k
            )));
        }
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(invalid(format!(
                "temperature must be finite and > 0, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

fn softmax_rows(sim: &SimilarityMatrix, temperature: f64) -> Vec<f64> {
    let mut out = vec![0.0; sim.rows * sim.cols];
    for r in 0..sim.rows {
        let row = &sim.data[r * sim.cols..(r + 1) * sim.cols];
        let peak = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let slot = &mut out[r * sim.cols..(r + 1) * sim.cols];
        let mut total = 0.0;
        for (o, &v) in slot.iter_mut().zip(row) {
            *o = ((v - peak) / temperature).exp();
            total += *o;
        }
        for o in slot.iter_mut() {
            *o /= total;
        }
    }
    out
}

/// One score per concept column. `activations` weights the expectation: the
/// `top_k` most-activating images (ties to the lower index) keep their value
/// clamped at zero, everything else gets weight zero, and the kept mass is
/// normalized to sum to one.
pub fn softwpmi_scores(
    activations: &[f64],
    sim: &SimilarityMatrix,
    config: &SoftWpmiConfig,
) -> Result<Vec<f64>, ExplainerError> {
    config.validate(sim.rows)?;
    if activations.len() != sim.rows {
        return Err(ExplainerError::InputMismatch {
            detail: format!(
                "{} activations but similarity matrix has {} rows",
                activations.len(),
                sim.rows
            ),
        });
    }
    if let Some(pos) = activations.iter().position(|v| !v.is_finite()) {
        return Err(ExplainerError::InputMismatch {
            detail: format!("activation {pos} is not finite"),
        });
    }

    // Select the top_k rows by activation, ties resolved toward the lower
    // index so the selection is reproducible.
    let mut order: Vec<usize> = (0..sim.rows).collect();
    order.sort_by(|&a, &b| {
        activations[b].total_cmp(&activations[a]).then(a.cmp(&b))
    });
    order.truncate(config.top_k);

    let mut weights = vec![0.0; sim.rows];
    let mut mass = 0.0;
    for &r in &order {
        let w = activations[r].max(0.0);
        weights[r] = w;
        mass += w;
    }
    if mass <= 0.0 {
        return Err(ExplainerError::AllZeroActivations);
    }
    for w in weights.iter_mut() {
        *w /= mass;
    }

    let posterior = softmax_rows(sim, config.temperature);
    let mut scores = Vec::with_capacity(sim.cols);
    for c in 0..sim.cols {
        let mut expectation = 0.0;
        let mut marginal = 0.0;
        for r in 0..sim.rows {
            let p = posterior[r * sim.cols + c];
            expectation += weights[r] * p;
            marginal += p;
        }
        marginal /= sim.rows as f64;
        scores.push(expectation.ln() - config.lambda * marginal.ln());
    }
    Ok(scores)
}

/// Index of the highest-scoring concept, ties to the lower index.
pub fn softwpmi_label(
    activations: &[f64],
    sim: &SimilarityMatrix,
    config: &SoftWpmiConfig,
) -> Result<usize, ExplainerError> {
    let scores = softwpmi_scores(activations, sim, config)?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(best)
}
