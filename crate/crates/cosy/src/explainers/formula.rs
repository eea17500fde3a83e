//! Boolean formulas over concept labels, with a canonical text form.
//!
//! Text grammar: `expr := term | expr " OR " term`, `term := factor | term
//! " AND " factor`, `factor := "NOT " factor | "(" expr ")" | name`. AND
//! binds tighter than OR, NOT tightest. Names containing spaces are
//! double-quoted. Parentheses extend the factor rule so every tree the beam
//! search can build (an OR fed into an AND, for instance) has a faithful
//! rendering.

use crate::concepts::ConceptDataset;

use super::ExplainerError;

/// AND/OR/NOT tree over concept indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CompositionFormula {
    Leaf(usize),
    Not(Box<CompositionFormula>),
    And(Box<CompositionFormula>, Box<CompositionFormula>),
    Or(Box<CompositionFormula>, Box<CompositionFormula>),
}

impl CompositionFormula {
    /// Number of concept leaves (the formula length L).
    pub fn length(&self) -> usize {
        match self {
            Self::Leaf(_) => 1,
            Self::Not(inner) => inner.length(),
            Self::And(l, r) | Self::Or(l, r) => l.length() + r.length(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Self::Or(..) => 0,
            Self::And(..) => 1,
            Self::Not(..) => 2,
            Self::Leaf(_) => 3,
        }
    }

    /// Canonical text. Parentheses appear only where the grammar demands
    /// them, so `parse_formula(render(f)) == f`.
    pub fn render(&self, concept_names: &[String]) -> Result<String, ExplainerError> {
        let wrap = |node: &Self, min_prec: u8| -> Result<String, ExplainerError> {
            let text = node.render(concept_names)?;
            if node.precedence() < min_prec {
                Ok(format!("({text})"))
            } else {
                Ok(text)
            }
        };
        match self {
            Self::Leaf(index) => {
                let name = concept_names.get(*index).ok_or(ExplainerError::UnknownConcept {
                    index: *index,
                    count: concept_names.len(),
                })?;
                if name.contains('"') {
                    return Err(ExplainerError::MalformedFormula {
                        detail: format!("concept name {name:?} contains a double quote"),
                    });
                }
                let needs_quotes = name.contains([' ', '(', ')'])
                    || matches!(name.as_str(), "AND" | "OR" | "NOT")
                    || name.is_empty();
                Ok(if needs_quotes { format!("\"{name}\"") } else { name.clone() })
            }
            Self::Not(inner) => Ok(format!("NOT {}", wrap(inner, 2)?)),
            // The grammar is left-recursive: the right operand must sit one
            // precedence level up, the left operand may repeat the operator.
            Self::And(l, r) => Ok(format!("{} AND {}", wrap(l, 1)?, wrap(r, 2)?)),
            Self::Or(l, r) => Ok(format!("{} OR {}", wrap(l, 0)?, wrap(r, 1)?)),
        }
    }
}

/// Evaluates the formula on one dataset row with standard boolean semantics.
pub fn formula_eval(
    formula: &CompositionFormula,
    dataset: &ConceptDataset,
    image: usize,
) -> Result<bool, ExplainerError> {
    match formula {
        CompositionFormula::Leaf(index) => {
            if *index >= dataset.n_concepts() {
                return Err(ExplainerError::UnknownConcept {
                    index: *index,
                    count: dataset.n_concepts(),
                });
            }
            Ok(dataset.label(image, *index))
        }
        CompositionFormula::Not(inner) => Ok(!formula_eval(inner, dataset, image)?),
        CompositionFormula::And(l, r) => {
            Ok(formula_eval(l, dataset, image)? && formula_eval(r, dataset, image)?)
        }
        CompositionFormula::Or(l, r) => {
            Ok(formula_eval(l, dataset, image)? || formula_eval(r, dataset, image)?)
        }
    }
}

/// The formula's truth value on every dataset row, in row order.
pub fn membership(
    formula: &CompositionFormula,
    dataset: &ConceptDataset,
) -> Result<Vec<bool>, ExplainerError> {
    (0..dataset.n_images()).map(|i| formula_eval(formula, dataset, i)).collect()
}

// ===== Parsing =====

#[derive(Debug, PartialEq)]
enum Token {
    And,
    Or,
    Not,
    Open,
    Close,
    Name(String),
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExplainerError> {
    let malformed = |detail: String| ExplainerError::MalformedFormula { detail };
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' => {
                chars.next();
            }
            '(' => {
                chars.next();
                tokens.push(Token::Open);
            }
            ')' => {
                chars.next();
                tokens.push(Token::Close);
            }
            '"' => {
                chars.next();
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('"') => break,
                        Some(ch) => name.push(ch),
                        None => return Err(malformed("unterminated quoted name".into())),
                    }
                }
                tokens.push(Token::Name(name));
            }
            _ => {
                let mut word = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch == ' ' || ch == '\t' || ch == '(' || ch == ')' || ch == '"' {
                        break;
                    }
                    word.push(ch);
                    chars.next();
                }
                tokens.push(match word.as_str() {
                    "AND" => Token::And,
                    "OR" => Token::Or,
                    "NOT" => Token::Not,
                    _ => Token::Name(word),
                });
            }
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    concept_names: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn expr(&mut self) -> Result<CompositionFormula, ExplainerError> {
        let mut node = self.term()?;
        while self.peek() == Some(&Token::Or) {
            self.pos += 1;
            node = CompositionFormula::Or(Box::new(node), Box::new(self.term()?));
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<CompositionFormula, ExplainerError> {
        let mut node = self.factor()?;
        while self.peek() == Some(&Token::And) {
            self.pos += 1;
            node = CompositionFormula::And(Box::new(node), Box::new(self.factor()?));
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<CompositionFormula, ExplainerError> {
        let malformed = |detail: String| ExplainerError::MalformedFormula { detail };
        match self.tokens.get(self.pos) {
            Some(Token::Not) => {
                self.pos += 1;
                Ok(CompositionFormula::Not(Box::new(self.factor()?)))
            }
            Some(Token::Open) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.tokens.get(self.pos) != Some(&Token::Close) {
                    return Err(malformed("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Token::Name(name)) => {
                let index = self
                    .concept_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| ExplainerError::UnknownName { name: name.clone() })?;
                self.pos += 1;
                Ok(CompositionFormula::Leaf(index))
            }
            other => Err(malformed(format!("expected NOT, a name, or a group, found {other:?}"))),
        }
    }
}

/// Parses the canonical formula grammar against a concept name list.
pub fn parse_formula(text: &str, concept_names: &[String]) -> Result<CompositionFormula, ExplainerError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(ExplainerError::MalformedFormula { detail: "empty formula".into() });
    }
    let mut parser = Parser { tokens, pos: 0, concept_names };
    let formula = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(ExplainerError::MalformedFormula {
            detail: format!("trailing input after position {}", parser.pos),
        });
    }
    Ok(formula)
}
