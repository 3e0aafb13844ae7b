//! Semantic entity embeddings and semantic-reinforced aggregation.
//!
//! For an entity with extracted type words `w_1..w_n`, the semantic embedding
//! is the mean of the word vectors of the first `min(T, n)` words. The
//! reinforced embedding is `(1 - alpha) * wikitext + alpha * semantic`.
//! Entities without type words keep their wikitext vector unchanged.
//!
//! All sums are accumulated in `f64` in a fixed order and rounded to `f32`
//! once, so results are reproducible across platforms and thread counts.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::{EmbeddingTable, VectorRef};
use crate::error::{Error, Result};
use crate::extraction::{Assignments, EntityTypeAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationConfig {
    /// Maximum number of type words averaged per entity.
    pub max_words: usize,
    /// Weight of the semantic embedding, in `[0, 1]`.
    pub alpha: f32,
}

impl AggregationConfig {
    pub fn new(max_words: usize, alpha: f32) -> Result<Self> {
        let cfg = AggregationConfig { max_words, alpha };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_words == 0 {
            return Err(Error::Config("T must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticEmbeddingResult {
    pub entity_id: String,
    pub used_words: Vec<String>,
    pub vector: Vec<f32>,
    /// Set when the entity has no type words; `vector` is then all zeros.
    pub uncovered: bool,
}

pub fn semantic_embedding(
    assignment: &EntityTypeAssignment,
    words: &EmbeddingTable,
    cfg: &AggregationConfig,
) -> Result<SemanticEmbeddingResult> {
    let used = &assignment.type_words[..assignment.type_words.len().min(cfg.max_words)];
    let mut acc = vec![0f64; words.dim()];
    for w in used {
        let v = words.vector(w).ok_or_else(|| Error::MissingWordVector {
            word: w.clone(),
            entity: assignment.entity_id.clone(),
        })?;
        for (a, &x) in acc.iter_mut().zip(v) {
            *a += f64::from(x);
        }
    }
    let n = used.len().max(1) as f64;
    Ok(SemanticEmbeddingResult {
        entity_id: assignment.entity_id.clone(),
        used_words: used.to_vec(),
        vector: acc.into_iter().map(|a| (a / n) as f32).collect(),
        uncovered: used.is_empty(),
    })
}

/// `(1 - alpha) * wikitext + alpha * semantic`, exact at both endpoints.
pub fn aggregate(wikitext: &[f32], semantic: &[f32], alpha: f32) -> Result<Vec<f32>> {
    if wikitext.len() != semantic.len() {
        return Err(Error::Dimension {
            expected: wikitext.len(),
            found: semantic.len(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Value(format!("alpha {alpha} outside [0, 1]")));
    }
    // The general formula would turn -0.0 into 0.0 at the endpoints.
    if alpha == 0.0 {
        return Ok(wikitext.to_vec());
    }
    if alpha == 1.0 {
        return Ok(semantic.to_vec());
    }
    let a = f64::from(alpha);
    Ok(wikitext
        .iter()
        .zip(semantic)
        .map(|(&w, &s)| ((1.0 - a) * f64::from(w) + a * f64::from(s)) as f32)
        .collect())
}

pub fn aggregate_refs(wikitext: VectorRef<'_>, semantic: VectorRef<'_>, alpha: f32) -> Result<Vec<f32>> {
    aggregate(wikitext.values, semantic.values, alpha)
}

/// Semantic embeddings for every entity with at least one type word, in
/// assignment order.
pub fn semantic_table(
    assignments: &Assignments,
    words: &EmbeddingTable,
    cfg: &AggregationConfig,
) -> Result<EmbeddingTable> {
    cfg.validate()?;
    let rows: Vec<SemanticEmbeddingResult> = assignments
        .values()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|a| semantic_embedding(a, words, cfg))
        .collect::<Result<_>>()?;
    let mut table = EmbeddingTable::with_capacity(words.dim(), rows.len())?;
    for r in rows.into_iter().filter(|r| !r.uncovered) {
        table.push(&r.entity_id, &r.vector)?;
    }
    Ok(table)
}

/// Reinforces every row of `wikitext` whose entity has a row in `semantic`.
/// Label set and order follow `wikitext`.
pub fn reinforce_with_semantic(
    wikitext: &EmbeddingTable,
    semantic: &EmbeddingTable,
    alpha: f32,
) -> Result<EmbeddingTable> {
    if wikitext.dim() != semantic.dim() {
        return Err(Error::Dimension {
            expected: wikitext.dim(),
            found: semantic.dim(),
        });
    }
    let rows: Vec<Vec<f32>> = (0..wikitext.len())
        .into_par_iter()
        .map(|i| {
            let row = wikitext.row(i);
            match semantic.lookup(row.label) {
                Some(s) => aggregate(row.values, s.values, alpha),
                None => Ok(row.values.to_vec()),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = EmbeddingTable::with_capacity(wikitext.dim(), wikitext.len())?;
    for (i, v) in rows.iter().enumerate() {
        out.push(wikitext.label(i), v)?;
    }
    Ok(out)
}

/// Semantic-reinforced table: label set and order identical to `wikitext`.
pub fn aggregate_table(
    wikitext: &EmbeddingTable,
    assignments: &Assignments,
    words: &EmbeddingTable,
    cfg: &AggregationConfig,
) -> Result<EmbeddingTable> {
    cfg.validate()?;
    if wikitext.dim() != words.dim() {
        return Err(Error::Dimension {
            expected: wikitext.dim(),
            found: words.dim(),
        });
    }
    let rows: Vec<Vec<f32>> = (0..wikitext.len())
        .into_par_iter()
        .map(|i| {
            let row = wikitext.row(i);
            let assignment = std::str::from_utf8(row.label)
                .ok()
                .and_then(|l| assignments.get(l))
                .filter(|a| !a.type_words.is_empty());
            match assignment {
                Some(a) => {
                    let s = semantic_embedding(a, words, cfg)?;
                    aggregate(row.values, &s.vector, cfg.alpha)
                }
                None => Ok(row.values.to_vec()),
            }
        })
        .collect::<Result<_>>()?;
    let mut out = EmbeddingTable::with_capacity(wikitext.dim(), wikitext.len())?;
    for (i, v) in rows.iter().enumerate() {
        out.push(wikitext.label(i), v)?;
    }
    Ok(out)
}

/// Number of entities of `wikitext` by count of type words used (0 means the
/// wikitext vector was kept as is).
pub fn coverage_histogram(
    wikitext: &EmbeddingTable,
    assignments: &Assignments,
    cfg: &AggregationConfig,
) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for label in wikitext.labels() {
        let used = std::str::from_utf8(label)
            .ok()
            .and_then(|l| assignments.get(l))
            .map_or(0, |a| a.type_words.len().min(cfg.max_words));
        *hist.entry(used).or_default() += 1;
    }
    hist
}

fn dot_norms(u: &[f32], v: &[f32]) -> (f64, f64, f64) {
    let (mut dot, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (f64::from(a), f64::from(b));
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    (dot, uu, vv)
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(u: &[f32], v: &[f32]) -> f64 {
    let (dot, uu, vv) = dot_norms(u, v);
    if uu == 0.0 || vv == 0.0 {
        return 0.0;
    }
    dot / (uu.sqrt() * vv.sqrt())
}

pub fn euclidean_distance(u: &[f32], v: &[f32]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// The `k` rows most cosine-similar to `query`, excluding `query`; ties are
/// broken by label bytes.
pub fn neighbor_report(table: &EmbeddingTable, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
    let qi = table
        .position(query)
        .ok_or_else(|| Error::MissingLabel(query.to_owned()))?;
    let q = table.row(qi).values;
    let mut scored: Vec<(usize, f64)> = (0..table.len())
        .filter(|&i| i != qi)
        .map(|i| (i, cosine(q, table.row(i).values)))
        .collect();
    scored.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| table.label(a.0).cmp(table.label(b.0)))
    });
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(i, s)| (table.label_str(i).into_owned(), s))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityStats {
    pub mean: f64,
    /// Population standard deviation over the sampled pairs.
    pub std: f64,
    pub pairs: usize,
}

/// Mean and standard deviation of pairwise cosine over `sample_pairs`
/// distinct unordered pairs drawn with `seed`; all pairs when
/// `sample_pairs` covers them. `None` for tables with fewer than two rows.
pub fn homogeneity_stats(table: &EmbeddingTable, sample_pairs: usize, seed: u64) -> Option<HomogeneityStats> {
    let n = table.len();
    if n < 2 {
        return None;
    }
    let total = n * (n - 1) / 2;
    let pair_at = |idx: usize| -> (usize, usize) {
        // Row-major enumeration of the strict upper triangle.
        let mut i = 0;
        let mut rem = idx;
        while rem >= n - 1 - i {
            rem -= n - 1 - i;
            i += 1;
        }
        (i, i + 1 + rem)
    };
    let mut indices: Vec<usize> = if sample_pairs >= total {
        (0..total).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample(&mut rng, total, sample_pairs.max(1)).into_vec()
    };
    indices.sort_unstable();
    let sims: Vec<f64> = indices
        .iter()
        .map(|&p| {
            let (i, j) = pair_at(p);
            cosine(table.row(i).values, table.row(j).values)
        })
        .collect();
    let m = sims.len() as f64;
    let mean = sims.iter().sum::<f64>() / m;
    let var = sims.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / m;
    Some(HomogeneityStats {
        mean,
        std: var.sqrt(),
        pairs: sims.len(),
    })
}
