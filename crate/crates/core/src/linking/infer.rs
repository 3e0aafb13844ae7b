use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::score::PreparedDocument;
use super::{LinkingDocument, LinkingModel, LinkingTables};
use crate::error::{Error, Result};

/// Largest candidate-set product accepted by exhaustive inference.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    /// Argmax of the global document score over all assignments.
    Exhaustive,
    /// Independent argmax of the local score per mention.
    #[default]
    GreedyLocal,
}

impl Strategy {
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Exhaustive => "exhaustive",
            Strategy::GreedyLocal => "greedy-local",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "exhaustive" => Some(Strategy::Exhaustive),
            "greedy" | "greedy-local" => Some(Strategy::GreedyLocal),
            _ => None,
        }
    }
}

/// Lexicographic comparison of the labels selected by two assignments.
fn cmp_labels(prep: &PreparedDocument<'_>, a: &[usize], b: &[usize]) -> Ordering {
    let ms = &prep.doc.mentions;
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(i, (&x, &y))| ms[i].candidates[x].cmp(&ms[i].candidates[y]))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn greedy(prep: &PreparedDocument<'_>, model: &LinkingModel) -> Result<Vec<usize>> {
    (0..prep.len())
        .map(|i| {
            let cands = &prep.doc.mentions[i].candidates;
            let mut best = 0;
            let mut best_score = prep.local(model, i, 0)?;
            for c in 1..cands.len() {
                let s = prep.local(model, i, c)?;
                if s > best_score || (s == best_score && cands[c] < cands[best]) {
                    best = c;
                    best_score = s;
                }
            }
            Ok(best)
        })
        .collect()
}

fn exhaustive(prep: &PreparedDocument<'_>, model: &LinkingModel) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = prep.candidate_rows.iter().map(Vec::len).collect();
    let product = sizes
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
        .unwrap_or(u128::MAX);
    if product > EXHAUSTIVE_LIMIT {
        return Err(Error::Capacity {
            product,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let n = prep.len();
    let local: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..sizes[i]).map(|c| prep.local(model, i, c)).collect())
        .collect::<Result<_>>()?;
    let weights = prep.pair_weights(model);
    // pair[i][j - i - 1][ci][cj] for i < j
    let pair: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    (0..sizes[i])
                        .map(|ci| {
                            (0..sizes[j])
                                .map(|cj| prep.pair(model, &weights, (i, ci), (j, cj)))
                                .collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut choice = vec![0usize; n];
    let mut best = choice.clone();
    let mut best_score = f64::NEG_INFINITY;
    loop {
        // Same summation order as `PreparedDocument::score`.
        let mut total = 0.0;
        for i in 0..n {
            total += local[i][choice[i]];
        }
        for i in 0..n {
            for j in i + 1..n {
                total += pair[i][j - i - 1][choice[i]][choice[j]];
            }
        }
        if total > best_score
            || (total == best_score && cmp_labels(prep, &choice, &best) == Ordering::Less)
        {
            best_score = total;
            best.copy_from_slice(&choice);
        }
        // Odometer increment, last mention fastest.
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(best);
            }
            k -= 1;
            choice[k] += 1;
            if choice[k] < sizes[k] {
                break;
            }
            choice[k] = 0;
        }
    }
}

pub(crate) fn infer_prepared(
    prep: &PreparedDocument<'_>,
    model: &LinkingModel,
    strategy: Strategy,
) -> Result<Vec<usize>> {
    match strategy {
        Strategy::Exhaustive => exhaustive(prep, model),
        Strategy::GreedyLocal => greedy(prep, model),
    }
}

/// Candidate index chosen for every mention.
pub fn infer(
    doc: &LinkingDocument,
    model: &LinkingModel,
    tables: LinkingTables<'_>,
    strategy: Strategy,
) -> Result<Vec<usize>> {
    infer_prepared(&PreparedDocument::new(doc, tables)?, model, strategy)
}

pub fn infer_labels(
    doc: &LinkingDocument,
    model: &LinkingModel,
    tables: LinkingTables<'_>,
    strategy: Strategy,
) -> Result<Vec<String>> {
    let choice = infer(doc, model, tables, strategy)?;
    Ok(choice
        .iter()
        .zip(&doc.mentions)
        .map(|(&c, m)| m.candidates[c].clone())
        .collect())
}

/// Links the scorable part of a document: candidates without an entity
/// vector are dropped and mentions left without candidates abstain (`None`).
/// The document size used by the pairwise score is the number of scorable
/// mentions.
pub fn link_document(
    doc: &LinkingDocument,
    model: &LinkingModel,
    tables: LinkingTables<'_>,
    strategy: Strategy,
) -> Result<Vec<Option<String>>> {
    let mut sub = LinkingDocument {
        doc_id: doc.doc_id.clone(),
        mentions: Vec::new(),
    };
    let mut slots = Vec::new();
    for (i, m) in doc.mentions.iter().enumerate() {
        let mut m = m.clone();
        m.candidates.retain(|c| tables.entities.contains(c));
        if !m.candidates.is_empty() {
            slots.push(i);
            sub.mentions.push(m);
        }
    }
    let mut out = vec![None; doc.mentions.len()];
    if sub.mentions.is_empty() {
        return Ok(out);
    }
    let labels = infer_labels(&sub, model, tables, strategy)?;
    for (slot, label) in slots.into_iter().zip(labels) {
        out[slot] = Some(label);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::EmbeddingTable;
    use crate::linking::Mention;

    fn mention(cands: &[&str]) -> Mention {
        Mention {
            surface: "m".into(),
            context: vec!["w".into()],
            candidates: cands.iter().map(|c| c.to_string()).collect(),
            gold: None,
        }
    }

    fn tables() -> (EmbeddingTable, EmbeddingTable) {
        let words = EmbeddingTable::from_rows(2, [("w", vec![1.0, 0.0])]).unwrap();
        let ents = EmbeddingTable::from_rows(
            2,
            [("A", vec![1.0, 0.0]), ("B", vec![0.0, 1.0]), ("C", vec![1.0, 0.0])],
        )
        .unwrap();
        (words, ents)
    }

    #[test]
    fn single_candidates() {
        let (w, e) = tables();
        let t = LinkingTables { words: &w, entities: &e };
        let doc = LinkingDocument { doc_id: "d".into(), mentions: vec![mention(&["B"]), mention(&["A"])] };
        let m = LinkingModel::identity(2);
        for s in [Strategy::Exhaustive, Strategy::GreedyLocal] {
            assert_eq!(infer(&doc, &m, t, s).unwrap(), [0, 0]);
        }
    }

    #[test]
    fn ties_prefer_smaller_label() {
        let (w, e) = tables();
        let t = LinkingTables { words: &w, entities: &e };
        let doc = LinkingDocument { doc_id: "d".into(), mentions: vec![mention(&["C", "A", "B"])] };
        let m = LinkingModel::identity(2);
        assert_eq!(infer_labels(&doc, &m, t, Strategy::GreedyLocal).unwrap(), ["A"]);
        assert_eq!(infer_labels(&doc, &m, t, Strategy::Exhaustive).unwrap(), ["A"]);
    }

    #[test]
    fn coherence_can_flip_a_choice() {
        let (w, e) = tables();
        let t = LinkingTables { words: &w, entities: &e };
        // Mention 0 prefers A locally; mention 1 can only be B, and a large
        // coherence weight on dim 1 rewards picking B for mention 0 too.
        let doc = LinkingDocument {
            doc_id: "d".into(),
            mentions: vec![mention(&["A", "B"]), mention(&["B"])],
        };
        let mut m = LinkingModel::identity(2);
        m.c = vec![0.0, 10.0];
        assert_eq!(infer_labels(&doc, &m, t, Strategy::GreedyLocal).unwrap(), ["A", "B"]);
        assert_eq!(infer_labels(&doc, &m, t, Strategy::Exhaustive).unwrap(), ["B", "B"]);
    }

    #[test]
    fn capacity_limit() {
        let (w, _) = tables();
        let labels: Vec<String> = (0..32).map(|i| format!("E{i:02}")).collect();
        let e = EmbeddingTable::from_rows(2, labels.iter().map(|l| (l.as_str(), vec![1.0, 1.0]))).unwrap();
        let t = LinkingTables { words: &w, entities: &e };
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        let doc = LinkingDocument { doc_id: "d".into(), mentions: vec![mention(&refs); 4] };
        let m = LinkingModel::identity(2);
        let err = infer(&doc, &m, t, Strategy::Exhaustive).unwrap_err();
        assert!(matches!(err, Error::Capacity { product: 1_048_576, .. }));
        assert_eq!(err.exit_code(), 3);
        assert!(infer(&doc, &m, t, Strategy::GreedyLocal).is_ok());
    }

    #[test]
    fn link_document_abstains_on_unscorable() {
        let (w, e) = tables();
        let t = LinkingTables { words: &w, entities: &e };
        let doc = LinkingDocument {
            doc_id: "d".into(),
            mentions: vec![mention(&["Z"]), mention(&["Z", "B"]), mention(&[])],
        };
        let m = LinkingModel::identity(2);
        let out = link_document(&doc, &m, t, Strategy::Exhaustive).unwrap();
        assert_eq!(out, [None, Some("B".to_string()), None]);
    }
}
