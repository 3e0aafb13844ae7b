use super::{context_feature, ContextFeature, LinkingDocument, LinkingModel, LinkingTables, RelationWeighting};
use crate::error::{Error, Result};

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

/// `sum_j diag[j] * (a[j] * b[j])`, accumulated in order. Multiplying
/// `a[j] * b[j]` first keeps the form exactly symmetric in `a` and `b`.
fn diag_form<A, B>(a: &[A], diag: &[f64], b: &[B]) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    a.iter()
        .zip(diag)
        .zip(b)
        .map(|((&x, &d), &y)| d * (x.into() * y.into()))
        .sum()
}

/// `e^T B f` for diagonal `B`.
pub fn local_score<E, F>(entity: &[E], b: &[f64], feature: &[F]) -> Result<f64>
where
    E: Copy + Into<f64>,
    F: Copy + Into<f64>,
{
    check_dims(b.len(), entity.len())?;
    check_dims(b.len(), feature.len())?;
    Ok(diag_form(entity, b, feature))
}

/// `e_i^T C e_j / (n - 1)` for diagonal `C` in a document of `n` mentions.
pub fn pairwise_score<E>(e_i: &[E], e_j: &[E], c: &[f64], n: usize) -> Result<f64>
where
    E: Copy + Into<f64>,
{
    if n < 2 {
        return Err(Error::InvalidDocument(format!(
            "pairwise score needs at least 2 mentions, document has {n}"
        )));
    }
    check_dims(c.len(), e_i.len())?;
    check_dims(c.len(), e_j.len())?;
    Ok(diag_form(e_i, c, e_j) / (n - 1) as f64)
}

/// `sum_k weights[k] * e_i^T R_k e_j`.
pub fn relation_pairwise_score<E>(
    e_i: &[E],
    e_j: &[E],
    model: &LinkingModel,
    weights: &[f64],
) -> Result<f64>
where
    E: Copy + Into<f64>,
{
    if weights.len() != model.relations.len() {
        return Err(Error::RelationArity {
            expected: model.relations.len(),
            found: weights.len(),
        });
    }
    let mut total = 0.0;
    for (r, &w) in model.relations.iter().zip(weights) {
        check_dims(r.len(), e_i.len())?;
        check_dims(r.len(), e_j.len())?;
        total += w * diag_form(e_i, r, e_j);
    }
    Ok(total)
}

/// Relation weights `a_ijk` for a mention pair with context features
/// `f_i`, `f_j`.
pub fn relation_weights(f_i: &[f64], f_j: &[f64], model: &LinkingModel) -> Vec<f64> {
    let k = model.relations.len();
    match model.weighting {
        RelationWeighting::Uniform => vec![1.0 / k as f64; k],
        RelationWeighting::Softmax => {
            let logits: Vec<f64> = model
                .relations
                .iter()
                .map(|r| diag_form(f_i, r, f_j))
                .collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            exps.into_iter().map(|e| e / z).collect()
        }
    }
}

/// A document with context features computed and candidates resolved to
/// entity rows, ready for repeated scoring.
#[derive(Clone, Debug)]
pub struct PreparedDocument<'a> {
    pub doc: &'a LinkingDocument,
    pub features: Vec<ContextFeature>,
    /// Entity-table row of every candidate, per mention.
    pub candidate_rows: Vec<Vec<usize>>,
    entities: &'a crate::embeddings::EmbeddingTable,
}

impl<'a> PreparedDocument<'a> {
    pub fn new(doc: &'a LinkingDocument, tables: LinkingTables<'a>) -> Result<Self> {
        if doc.mentions.is_empty() {
            return Err(Error::InvalidDocument(format!("document `{}` has no mentions", doc.doc_id)));
        }
        check_dims(tables.entities.dim(), tables.words.dim())?;
        let mut candidate_rows = Vec::with_capacity(doc.mentions.len());
        for (i, m) in doc.mentions.iter().enumerate() {
            if m.candidates.is_empty() {
                return Err(Error::InvalidDocument(format!(
                    "mention {i} (`{}`) of `{}` has no candidates",
                    m.surface, doc.doc_id
                )));
            }
            let rows = m
                .candidates
                .iter()
                .map(|c| {
                    tables
                        .entities
                        .position(c)
                        .ok_or_else(|| Error::MissingLabel(c.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            candidate_rows.push(rows);
        }
        let features = doc
            .mentions
            .iter()
            .map(|m| context_feature(m, tables.words))
            .collect();
        Ok(PreparedDocument {
            doc,
            features,
            candidate_rows,
            entities: tables.entities,
        })
    }

    pub fn len(&self) -> usize {
        self.doc.mentions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc.mentions.is_empty()
    }

    pub fn candidate_vector(&self, mention: usize, cand: usize) -> &'a [f32] {
        self.entities.row(self.candidate_rows[mention][cand]).values
    }

    pub fn local(&self, model: &LinkingModel, mention: usize, cand: usize) -> Result<f64> {
        local_score(
            self.candidate_vector(mention, cand),
            &model.b,
            &self.features[mention].vector,
        )
    }

    /// Relation weights for every ordered mention pair (empty without
    /// relations).
    pub fn pair_weights(&self, model: &LinkingModel) -> Vec<Vec<Vec<f64>>> {
        if model.relations.is_empty() {
            return Vec::new();
        }
        (0..self.len())
            .map(|i| {
                (0..self.len())
                    .map(|j| relation_weights(&self.features[i].vector, &self.features[j].vector, model))
                    .collect()
            })
            .collect()
    }

    pub fn pair(
        &self,
        model: &LinkingModel,
        weights: &[Vec<Vec<f64>>],
        (i, ci): (usize, usize),
        (j, cj): (usize, usize),
    ) -> Result<f64> {
        let (ei, ej) = (self.candidate_vector(i, ci), self.candidate_vector(j, cj));
        if model.relations.is_empty() {
            pairwise_score(ei, ej, &model.c, self.len())
        } else {
            relation_pairwise_score(ei, ej, model, &weights[i][j])
        }
    }

    /// Sum of local scores plus pairwise scores over unordered mention
    /// pairs, for one candidate index per mention.
    pub fn score(&self, model: &LinkingModel, choice: &[usize]) -> Result<f64> {
        if choice.len() != self.len() {
            return Err(Error::InvalidDocument(format!(
                "assignment covers {} of {} mentions",
                choice.len(),
                self.len()
            )));
        }
        for (i, &c) in choice.iter().enumerate() {
            if c >= self.candidate_rows[i].len() {
                return Err(Error::InvalidDocument(format!(
                    "candidate index {c} out of range for mention {i}"
                )));
            }
        }
        let weights = self.pair_weights(model);
        let mut total = 0.0;
        for (i, &c) in choice.iter().enumerate() {
            total += self.local(model, i, c)?;
        }
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                total += self.pair(model, &weights, (i, choice[i]), (j, choice[j]))?;
            }
        }
        Ok(total)
    }
}

/// Global score of a document under a candidate choice per mention.
pub fn document_score(
    doc: &LinkingDocument,
    choice: &[usize],
    model: &LinkingModel,
    tables: LinkingTables<'_>,
) -> Result<f64> {
    PreparedDocument::new(doc, tables)?.score(model, choice)
}
