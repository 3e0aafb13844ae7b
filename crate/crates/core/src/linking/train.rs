//! Max-margin SGD for the diagonal score matrices.
//!
//! For a training mention with gold entity `g` and every other candidate `n`
//! the loss is `max(0, margin - S(g) + S(n))`, where `S` is the local score
//! and, with `train_pairwise`, additionally the pairwise score against the
//! gold entities of the other mentions in the document.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::infer::{link_document, Strategy};
use super::score::PreparedDocument;
use super::{LinkingDocument, LinkingModel, LinkingTables};
use crate::error::{Error, Result};
use crate::eval::{micro_f1, DocLinks};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Also learn `C` through the pairwise term.
    pub train_pairwise: bool,
    /// Inference used for the per-epoch dev F1.
    pub strategy: Strategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.1,
            learning_rate: 0.01,
            epochs: 50,
            seed: 0,
            train_pairwise: false,
            strategy: Strategy::GreedyLocal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Mean margin loss per training mention after the epoch.
    pub loss: f64,
    pub dev_f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: LinkingModel,
    /// Dev F1 of the initial model.
    pub initial_dev_f1: Option<f64>,
    pub trace: Vec<EpochStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MentionGradient {
    pub loss: f64,
    pub b: Vec<f64>,
    /// All zeros unless the pairwise term is included.
    pub c: Vec<f64>,
}

fn gold_index(prep: &PreparedDocument<'_>, i: usize) -> Result<usize> {
    let m = &prep.doc.mentions[i];
    let gold = m
        .gold
        .as_ref()
        .ok_or_else(|| Error::InvalidDocument(format!("mention {i} has no gold entity")))?;
    m.candidates
        .iter()
        .position(|c| c == gold)
        .ok_or_else(|| Error::InvalidDocument(format!("gold `{gold}` of mention {i} is not a candidate")))
}

/// Margin loss of one mention and its gradient with respect to the diagonals
/// of `B` and `C`. Every mention of the document must have its gold entity
/// among its candidates.
pub fn mention_loss_and_gradient(
    prep: &PreparedDocument<'_>,
    mention: usize,
    model: &LinkingModel,
    margin: f64,
    include_pairwise: bool,
) -> Result<MentionGradient> {
    if include_pairwise && !model.relations.is_empty() {
        return Err(Error::Config(
            "pairwise training supports the diagonal C form only".into(),
        ));
    }
    let d = model.dim();
    let n = prep.len();
    let gold = gold_index(prep, mention)?;
    let f = &prep.features[mention].vector;
    let others: Vec<&[f32]> = if include_pairwise && n > 1 {
        (0..n)
            .filter(|&j| j != mention)
            .map(|j| Ok(prep.candidate_vector(j, gold_index(prep, j)?)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let scale = if n > 1 { 1.0 / (n - 1) as f64 } else { 0.0 };

    let total_score = |cand: usize| -> Result<f64> {
        let e = prep.candidate_vector(mention, cand);
        let mut s = prep.local(model, mention, cand)?;
        for g in &others {
            s += super::pairwise_score(e, g, &model.c, n)?;
        }
        Ok(s)
    };

    let gold_score = total_score(gold)?;
    let e_gold = prep.candidate_vector(mention, gold);
    let mut out = MentionGradient {
        loss: 0.0,
        b: vec![0.0; d],
        c: vec![0.0; d],
    };
    for cand in 0..prep.candidate_rows[mention].len() {
        if cand == gold {
            continue;
        }
        let hinge = margin - gold_score + total_score(cand)?;
        if hinge <= 0.0 {
            continue;
        }
        out.loss += hinge;
        let e_neg = prep.candidate_vector(mention, cand);
        for k in 0..d {
            let diff = f64::from(e_neg[k]) - f64::from(e_gold[k]);
            out.b[k] += diff * f[k];
            for g in &others {
                out.c[k] += scale * diff * f64::from(g[k]);
            }
        }
    }
    Ok(out)
}

/// Keeps candidates that have entity vectors and mentions whose gold entity
/// survives among them.
fn training_view(doc: &LinkingDocument, tables: LinkingTables<'_>) -> Option<LinkingDocument> {
    let mentions: Vec<_> = doc
        .mentions
        .iter()
        .filter_map(|m| {
            let mut m = m.clone();
            m.candidates.retain(|c| tables.entities.contains(c));
            m.gold_in_candidates().then_some(m)
        })
        .collect();
    (!mentions.is_empty()).then(|| LinkingDocument {
        doc_id: doc.doc_id.clone(),
        mentions,
    })
}

/// Micro F1 of `model` on `docs`, `None` when there is nothing to score.
pub(crate) fn dev_f1(
    docs: &[LinkingDocument],
    model: &LinkingModel,
    tables: LinkingTables<'_>,
    strategy: Strategy,
) -> Result<Option<f64>> {
    if docs.is_empty() {
        return Ok(None);
    }
    let mut predicted = Vec::with_capacity(docs.len());
    let mut gold = Vec::with_capacity(docs.len());
    for doc in docs {
        predicted.push(DocLinks {
            doc_id: doc.doc_id.clone(),
            links: link_document(doc, model, tables, strategy)?,
        });
        gold.push(DocLinks::gold_of(doc));
    }
    Ok(Some(micro_f1(&predicted, &gold)?.micro_f1))
}

/// Trains `init` on `train_docs`, reporting loss and dev F1 after every
/// epoch. Deterministic for a given `config.seed`.
pub fn train(
    train_docs: &[LinkingDocument],
    dev_docs: &[LinkingDocument],
    tables: LinkingTables<'_>,
    config: &TrainConfig,
    init: LinkingModel,
) -> Result<TrainOutcome> {
    init.validate()?;
    if init.dim() != tables.entities.dim() {
        return Err(Error::Dimension {
            expected: tables.entities.dim(),
            found: init.dim(),
        });
    }
    let views: Vec<LinkingDocument> = train_docs
        .iter()
        .filter_map(|d| training_view(d, tables))
        .collect();
    if views.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let prepared: Vec<PreparedDocument<'_>> = views
        .iter()
        .map(|d| PreparedDocument::new(d, tables))
        .collect::<Result<_>>()?;
    let mut order: Vec<(usize, usize)> = prepared
        .iter()
        .enumerate()
        .flat_map(|(di, p)| (0..p.len()).map(move |mi| (di, mi)))
        .collect();

    let mut model = init;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial_dev_f1 = dev_f1(dev_docs, &model, tables, config.strategy)?;
    let mut trace = Vec::with_capacity(config.epochs);
    let lr = config.learning_rate;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for &(di, mi) in &order {
            let g = mention_loss_and_gradient(&prepared[di], mi, &model, config.margin, config.train_pairwise)?;
            if g.loss == 0.0 {
                continue;
            }
            for (b, gb) in model.b.iter_mut().zip(&g.b) {
                *b -= lr * gb;
            }
            if config.train_pairwise {
                for (c, gc) in model.c.iter_mut().zip(&g.c) {
                    *c -= lr * gc;
                }
            }
        }
        let mut loss = 0.0;
        for &(di, mi) in &order {
            loss += mention_loss_and_gradient(&prepared[di], mi, &model, config.margin, config.train_pairwise)?
                .loss;
        }
        trace.push(EpochStats {
            epoch,
            loss: loss / order.len() as f64,
            dev_f1: dev_f1(dev_docs, &model, tables, config.strategy)?,
        });
    }
    Ok(TrainOutcome {
        model,
        initial_dev_f1,
        trace,
    })
}
