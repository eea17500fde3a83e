//! Compositional explanation search: finds the boolean concept formula whose
//! membership best separates a neuron's activations.

use crate::concepts::ConceptDataset;
use crate::scoring::{auc_score, TiePolicy};

use super::formula::CompositionFormula;
use super::ExplainerError;

/// Separation score of a membership split: AUC of member activations over
/// non-member activations. 1.0 means every member outranks every non-member.
pub fn delta_auc(
    values: &[f64],
    membership: &[bool],
    tie_policy: TiePolicy,
) -> Result<f64, ExplainerError> {
    if values.len() != membership.len() {
        return Err(ExplainerError::InputMismatch {
            detail: format!(
                "{} activations but {} membership flags",
                values.len(),
                membership.len()
            ),
        });
    }
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (&v, &m) in values.iter().zip(membership) {
        if m {
            inside.push(v);
        } else {
            outside.push(v);
        }
    }
    if inside.is_empty() || outside.is_empty() {
        return Err(ExplainerError::DegenerateMembership);
    }
    Ok(auc_score(&outside, &inside, tie_policy)?)
}

/// Best formula found by the beam search.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertResult {
    pub formula: CompositionFormula,
    pub text: String,
    pub delta_auc: f64,
}

#[derive(Clone)]
struct Candidate {
    formula: CompositionFormula,
    membership: Vec<bool>,
    text: String,
    delta: f64,
}

/// Beam search over concept formulas, maximizing [`delta_auc`].
///
/// Round 1 seeds the beam with every concept and its negation; each later
/// round extends every kept candidate with `AND c`, `AND NOT c`, `OR c`,
/// `OR NOT c` for every concept `c`. Formulas whose membership is all-true
/// or all-false are skipped, duplicates (by canonical text) are merged, and
/// the `beam_width` best survive. The returned formula is the best seen at
/// any length up to `max_length`; ties break toward fewer leaves, then
/// lexicographic text. Midranks are used throughout so tied activations do
/// not favor one operand order over another.
pub fn invert_explain(
    values: &[f64],
    dataset: &ConceptDataset,
    max_length: usize,
    beam_width: usize,
) -> Result<InvertResult, ExplainerError> {
    if max_length == 0 {
        return Err(ExplainerError::InvalidConfig { detail: "max_length must be at least 1".into() });
    }
    if beam_width == 0 {
        return Err(ExplainerError::InvalidConfig { detail: "beam_width must be at least 1".into() });
    }
    if values.len() != dataset.n_images() {
        return Err(ExplainerError::InputMismatch {
            detail: format!(
                "{} activations but dataset has {} images",
                values.len(),
                dataset.n_images()
            ),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(ExplainerError::InputMismatch {
            detail: "activations must be finite".into(),
        });
    }

    let names = &dataset.concept_names;
    // Leaf memberships and their negations, computed once. Dataset
    // construction guarantees each column is mixed, so every seed candidate
    // has a defined delta.
    let leaves: Vec<(CompositionFormula, Vec<bool>)> = (0..dataset.n_concepts())
        .flat_map(|c| {
            let column = dataset.column(c);
            let negated = column.iter().map(|b| !b).collect();
            [
                (CompositionFormula::Leaf(c), column),
                (CompositionFormula::Not(Box::new(CompositionFormula::Leaf(c))), negated),
            ]
        })
        .collect();

    let score = |membership: &[bool]| -> Result<Option<f64>, ExplainerError> {
        let members = membership.iter().filter(|&&m| m).count();
        if members == 0 || members == membership.len() {
            return Ok(None); // degenerate, not a usable candidate
        }
        Ok(Some(delta_auc(values, membership, TiePolicy::Midrank)?))
    };

    let mut beam: Vec<Candidate> = Vec::new();
    for (formula, membership) in &leaves {
        if let Some(delta) = score(membership)? {
            beam.push(Candidate {
                formula: formula.clone(),
                membership: membership.clone(),
                text: formula.render(names)?,
                delta,
            });
        }
    }
    if beam.is_empty() {
        return Err(ExplainerError::EmptyBeam);
    }
    prune(&mut beam, beam_width);
    let mut best = beam[0].clone();

    for _ in 2..=max_length {
        let mut next: Vec<Candidate> = Vec::new();
        for candidate in &beam {
            for (leaf, leaf_membership) in &leaves {
                for use_and in [true, false] {
                    let membership: Vec<bool> = candidate
                        .membership
                        .iter()
                        .zip(leaf_membership)
                        .map(|(&a, &b)| if use_and { a && b } else { a || b })
                        .collect();
                    let Some(delta) = score(&membership)? else { continue };
                    let formula = if use_and {
                        CompositionFormula::And(
                            Box::new(candidate.formula.clone()),
                            Box::new(leaf.clone()),
                        )
                    } else {
                        CompositionFormula::Or(
                            Box::new(candidate.formula.clone()),
                            Box::new(leaf.clone()),
                        )
                    };
                    let text = formula.render(names)?;
                    next.push(Candidate { formula, membership, text, delta });
                }
            }
        }
        if next.is_empty() {
            break;
        }
        prune(&mut next, beam_width);
        if better(&next[0], &best) {
            best = next[0].clone();
        }
        beam = next;
    }

    Ok(InvertResult { formula: best.formula, text: best.text, delta_auc: best.delta })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    rank_key(a) < rank_key(b)
}

fn rank_key(c: &Candidate) -> (std::cmp::Reverse<u64>, usize, &str) {
    // total_cmp order encoded so that higher delta sorts first; deltas are
    // AUC values in [0, 1], hence non-negative and bit-order-monotone.
    (std::cmp::Reverse(c.delta.to_bits()), c.formula.length(), &c.text)
}

fn prune(candidates: &mut Vec<Candidate>, beam_width: usize) {
    candidates.sort_by(|a, b| rank_key(a).cmp(&rank_key(b)));
    candidates.dedup_by(|a, b| a.text == b.text);
    candidates.truncate(beam_width);
}
