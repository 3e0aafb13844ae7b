//! Desk-scale entity linking with diagonal bilinear scores.
//!
//! * local score: `psi(e, c) = e^T B f(c)`
//! * pairwise score: `phi(e_i, e_j) = e_i^T C e_j / (n - 1)`
//! * relation score: `phi(e_i, e_j) = sum_k a_ijk e_i^T R_k e_j`
//!
//! `B`, `C` and every `R_k` are diagonal and stored as vectors. The context
//! feature `f(c)` is the mean word vector of the tokens around the mention.

mod infer;
pub mod io;
mod score;
mod train;

use serde::{Deserialize, Serialize};

pub use infer::{infer, infer_labels, link_document, Strategy, EXHAUSTIVE_LIMIT};
pub use score::{
    document_score, local_score, pairwise_score, relation_pairwise_score, relation_weights,
    PreparedDocument,
};
pub use train::{
    mention_loss_and_gradient, train, EpochStats, MentionGradient, TrainConfig, TrainOutcome,
};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Default number of context tokens taken on each side of a mention.
pub const DEFAULT_WINDOW: usize = 25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mention {
    pub surface: String,
    /// Lowercased tokens around the mention, at most `window` per side.
    pub context: Vec<String>,
    pub candidates: Vec<String>,
    pub gold: Option<String>,
}

impl Mention {
    /// Builds a mention from a tokenized document and a `[start, end)` token
    /// span, taking up to `window` tokens on each side as context.
    pub fn from_span(
        tokens: &[String],
        start: usize,
        end: usize,
        window: usize,
        candidates: Vec<String>,
        gold: Option<String>,
    ) -> Result<Self> {
        if start >= end || end > tokens.len() {
            return Err(Error::InvalidDocument(format!(
                "mention span [{start}, {end}) outside document of {} tokens",
                tokens.len()
            )));
        }
        let left = start.saturating_sub(window);
        let right = (end + window).min(tokens.len());
        let context = tokens[left..start]
            .iter()
            .chain(&tokens[end..right])
            .flat_map(|t| tokenize(t))
            .collect();
        Ok(Mention {
            surface: tokens[start..end].join(" "),
            context,
            candidates,
            gold,
        })
    }

    /// Whether the gold entity (if any) is among the candidates.
    pub fn gold_in_candidates(&self) -> bool {
        self.gold
            .as_ref()
            .is_some_and(|g| self.candidates.iter().any(|c| c == g))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkingDocument {
    pub doc_id: String,
    pub mentions: Vec<Mention>,
}

impl LinkingDocument {
    /// Mentions whose gold entity is not among their candidates.
    pub fn gold_violations(&self) -> Vec<usize> {
        self.mentions
            .iter()
            .enumerate()
            .filter(|(_, m)| m.gold.is_some() && !m.gold_in_candidates())
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationWeighting {
    /// `a_ijk = 1 / K`.
    #[default]
    Uniform,
    /// `a_ijk = softmax_k(f_i^T R_k f_j)` over the context features of the
    /// two mentions.
    Softmax,
}

impl RelationWeighting {
    pub fn tag(self) -> &'static str {
        match self {
            RelationWeighting::Uniform => "uniform",
            RelationWeighting::Softmax => "softmax",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "uniform" => Some(RelationWeighting::Uniform),
            "softmax" => Some(RelationWeighting::Softmax),
            _ => None,
        }
    }
}

/// Diagonal score matrices. When `relations` is non-empty the pairwise term
/// uses the relation score instead of `C`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkingModel {
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub relations: Vec<Vec<f64>>,
    pub weighting: RelationWeighting,
}

impl LinkingModel {
    /// `B = C = I`, no relations.
    pub fn identity(dim: usize) -> Self {
        LinkingModel {
            b: vec![1.0; dim],
            c: vec![1.0; dim],
            relations: Vec::new(),
            weighting: RelationWeighting::Uniform,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::Value("model dimension must be positive".into()));
        }
        for (name, diag) in [("B", &self.b), ("C", &self.c)]
            .into_iter()
            .chain(self.relations.iter().map(|r| ("R", r)))
        {
            if diag.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: diag.len(),
                });
            }
            if diag.iter().any(|v| !v.is_finite()) {
                return Err(Error::Value(format!("non-finite entry in {name}")));
            }
        }
        Ok(())
    }

    /// Multiplies `B`, `C` and every `R_k` by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |v: &Vec<f64>| v.iter().map(|x| x * factor).collect();
        LinkingModel {
            b: scale(&self.b),
            c: scale(&self.c),
            relations: self.relations.iter().map(scale).collect(),
            weighting: self.weighting,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContextFeature {
    pub vector: Vec<f64>,
    /// Context tokens without a word vector.
    pub oov: usize,
}

/// Mean word vector of the mention's context tokens; zero when none of them
/// has a vector.
pub fn context_feature(mention: &Mention, words: &EmbeddingTable) -> ContextFeature {
    let mut acc = vec![0f64; words.dim()];
    let mut found = 0usize;
    for tok in &mention.context {
        if let Some(v) = words.vector(tok) {
            for (a, &x) in acc.iter_mut().zip(v) {
                *a += f64::from(x);
            }
            found += 1;
        }
    }
    if found > 0 {
        let n = found as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    ContextFeature {
        vector: acc,
        oov: mention.context.len() - found,
    }
}

/// Word and entity tables used for scoring.
#[derive(Clone, Copy, Debug)]
pub struct LinkingTables<'a> {
    pub words: &'a EmbeddingTable,
    pub entities: &'a EmbeddingTable,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn span_context_window() {
        let t = toks("a b c Mr. Mueller said d e");
        let m = Mention::from_span(&t, 3, 5, 2, vec!["M".into()], Some("M".into())).unwrap();
        assert_eq!(m.surface, "Mr. Mueller");
        assert_eq!(m.context, ["b", "c", "said", "d"]);
        assert!(m.gold_in_candidates());
        assert!(Mention::from_span(&t, 5, 5, 2, vec![], None).is_err());
        assert!(Mention::from_span(&t, 7, 9, 2, vec![], None).is_err());
    }

    #[test]
    fn context_feature_mean_and_oov() {
        let words = EmbeddingTable::from_rows(2, [("w", vec![1.0, 3.0]), ("v", vec![3.0, 1.0])]).unwrap();
        let m = |ctx: &[&str]| Mention {
            surface: "x".into(),
            context: ctx.iter().map(|s| s.to_string()).collect(),
            candidates: vec![],
            gold: None,
        };
        let f = context_feature(&m(&["w"]), &words);
        assert_eq!((f.vector, f.oov), (vec![1.0, 3.0], 0));
        let f = context_feature(&m(&["zz", "yy"]), &words);
        assert_eq!((f.vector, f.oov), (vec![0.0, 0.0], 2));
        let f = context_feature(&m(&["w", "v", "qq"]), &words);
        assert_eq!((f.vector, f.oov), (vec![2.0, 2.0], 1));
    }

    #[test]
    fn model_validation_and_scaling() {
        let mut m = LinkingModel::identity(3);
        assert!(m.validate().is_ok());
        let s = m.scaled(2.0);
        assert_eq!(s.b, [2.0; 3]);
        m.relations.push(vec![1.0; 2]);
        assert!(m.validate().is_err());
        m.relations[0] = vec![f64::NAN; 3];
        assert!(m.validate().is_err());
    }
}
