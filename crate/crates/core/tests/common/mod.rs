//! Random instances and naive oracles shared by the integration tests and
//! the acceptance suite. The oracles expand diagonals into full matrices and
//! loop over every index, so they share no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use semlink_core::linking::{LinkingDocument, LinkingModel, Mention};
use semlink_core::EmbeddingTable;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

pub fn rand_table(rng: &mut ChaCha8Rng, prefix: &str, n: usize, dim: usize) -> EmbeddingTable {
    let rows: Vec<(String, Vec<f32>)> = (0..n).map(|i| (format!("{prefix}{i}"), rand_vec(rng, dim))).collect();
    EmbeddingTable::from_rows(dim, rows).unwrap()
}

pub fn rand_diag(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Words `w0..`, entities `E0..`, and one document whose mentions each have
/// `cands[i]` distinct candidates (gold first candidate drawn at random).
pub struct Instance {
    pub words: EmbeddingTable,
    pub entities: EmbeddingTable,
    pub doc: LinkingDocument,
}

pub fn rand_instance(rng: &mut ChaCha8Rng, dim: usize, cands: &[usize]) -> Instance {
    let n_words = 12;
    let n_ent = cands.iter().copied().max().unwrap_or(1).max(2) + 3;
    let words = rand_table(rng, "w", n_words, dim);
    let entities = rand_table(rng, "E", n_ent, dim);
    let mentions = cands
        .iter()
        .map(|&c| {
            let picks = rand::seq::index::sample(rng, n_ent, c).into_vec();
            let candidates: Vec<String> = picks.iter().map(|p| format!("E{p}")).collect();
            let gold = candidates[rng.random_range(0..c)].clone();
            let ctx_len = rng.random_range(1..6);
            let mut context: Vec<String> = (0..ctx_len).map(|_| format!("w{}", rng.random_range(0..n_words))).collect();
            context.push("oov_token".into());
            Mention {
                surface: "m".into(),
                context,
                candidates,
                gold: Some(gold),
            }
        })
        .collect();
    Instance {
        words,
        entities,
        doc: LinkingDocument {
            doc_id: "doc".into(),
            mentions,
        },
    }
}

pub fn rand_model(rng: &mut ChaCha8Rng, dim: usize, relations: usize) -> LinkingModel {
    let mut m = LinkingModel::identity(dim);
    m.b = rand_diag(rng, dim);
    m.c = rand_diag(rng, dim);
    m.relations = (0..relations).map(|_| rand_diag(rng, dim)).collect();
    m
}

pub fn full_matrix(diag: &[f64]) -> Vec<Vec<f64>> {
    let d = diag.len();
    (0..d)
        .map(|i| (0..d).map(|j| if i == j { diag[i] } else { 0.0 }).collect())
        .collect()
}

/// `x^T M y` by a double loop over a full matrix.
pub fn bilinear(x: &[f64], m: &[Vec<f64>], y: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..y.len() {
            s += x[i] * m[i][j] * y[j];
        }
    }
    s
}

pub fn f64s(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

/// Mean of the in-vocabulary context word vectors; zeros if none.
pub fn oracle_feature(words: &EmbeddingTable, context: &[String]) -> Vec<f64> {
    let mut acc = vec![0.0; words.dim()];
    let mut n = 0;
    for w in context {
        if let Some(v) = words.vector(w) {
            for k in 0..acc.len() {
                acc[k] += f64::from(v[k]);
            }
            n += 1;
        }
    }
    if n > 0 {
        for x in &mut acc {
            *x /= n as f64;
        }
    }
    acc
}

pub fn oracle_local(e: &[f64], b: &[f64], f: &[f64]) -> f64 {
    bilinear(e, &full_matrix(b), f)
}

pub fn oracle_pairwise(ei: &[f64], ej: &[f64], c: &[f64], n: usize) -> f64 {
    bilinear(ei, &full_matrix(c), ej) / (n as f64 - 1.0)
}

pub fn oracle_relation(ei: &[f64], ej: &[f64], rel: &[Vec<f64>], weights: &[f64]) -> f64 {
    rel.iter()
        .zip(weights)
        .map(|(r, w)| w * bilinear(ei, &full_matrix(r), ej))
        .sum()
}

/// Document score with uniform relation weights when relations exist.
pub fn oracle_doc_score(inst: &Instance, model: &LinkingModel, choice: &[usize]) -> f64 {
    let ms = &inst.doc.mentions;
    let n = ms.len();
    let vec_of = |i: usize| f64s(inst.entities.vector(&ms[i].candidates[choice[i]]).unwrap());
    let mut s = 0.0;
    for i in 0..n {
        s += oracle_local(&vec_of(i), &model.b, &oracle_feature(&inst.words, &ms[i].context));
    }
    for i in 0..n {
        for j in 0..n {
            if i < j {
                s += if model.relations.is_empty() {
                    oracle_pairwise(&vec_of(i), &vec_of(j), &model.c, n)
                } else {
                    let w = vec![1.0 / model.relations.len() as f64; model.relations.len()];
                    oracle_relation(&vec_of(i), &vec_of(j), &model.relations, &w)
                };
            }
        }
    }
    s
}

/// Every assignment in odometer order.
pub fn all_assignments(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..s).map(move |c| {
                    let mut p = prefix.clone();
                    p.push(c);
                    p
                })
            })
            .collect();
    }
    out
}

/// Brute-force argmax; ties go to the lexicographically smaller label list.
pub fn oracle_argmax(inst: &Instance, model: &LinkingModel) -> Vec<usize> {
    let sizes: Vec<usize> = inst.doc.mentions.iter().map(|m| m.candidates.len()).collect();
    let labels = |a: &[usize]| -> Vec<String> {
        a.iter()
            .zip(&inst.doc.mentions)
            .map(|(&c, m)| m.candidates[c].clone())
            .collect()
    };
    let mut best: Option<(f64, Vec<usize>)> = None;
    for a in all_assignments(&sizes) {
        let s = oracle_doc_score(inst, model, &a);
        best = match best {
            None => Some((s, a)),
            Some((bs, ba)) => {
                if s > bs || (s == bs && labels(&a) < labels(&ba)) {
                    Some((s, a))
                } else {
                    Some((bs, ba))
                }
            }
        };
    }
    best.unwrap().1
}

/// Hinge loss of one mention: local term plus, optionally, the pairwise term
/// against the golds of the other mentions.
pub fn oracle_mention_loss(
    inst: &Instance,
    b: &[f64],
    c: &[f64],
    mention: usize,
    margin: f64,
    pairwise: bool,
) -> f64 {
    let ms = &inst.doc.mentions;
    let n = ms.len();
    let f = oracle_feature(&inst.words, &ms[mention].context);
    let gold_vec = |j: usize| f64s(inst.entities.vector(ms[j].gold.as_ref().unwrap()).unwrap());
    let total = |label: &str| {
        let e = f64s(inst.entities.vector(label).unwrap());
        let mut s = oracle_local(&e, b, &f);
        if pairwise && n > 1 {
            for j in (0..n).filter(|&j| j != mention) {
                s += oracle_pairwise(&e, &gold_vec(j), c, n);
            }
        }
        s
    };
    let gold = ms[mention].gold.as_ref().unwrap();
    let g = total(gold);
    ms[mention]
        .candidates
        .iter()
        .filter(|c| *c != gold)
        .map(|c| (margin - g + total(c)).max(0.0))
        .sum()
}

/// 0.975 quantile of Student's t, from standard tables.
pub fn t_table_975(df: usize) -> f64 {
    match df {
        1 => 12.706204736174698,
        2 => 4.302652729749464,
        3 => 3.182446305284263,
        4 => 2.7764451051977987,
        5 => 2.570581835636314,
        9 => 2.2621571628540993,
        _ => panic!("no table entry for df={df}"),
    }
}

/// Mean and `t * s / sqrt(n)` with the sample standard deviation, computed
/// with a two-pass sum.
pub fn oracle_summary(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let mean = sum / n;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - mean) * (x - mean);
    }
    let s = (ss / (n - 1.0)).sqrt();
    (mean, t_table_975(xs.len() - 1) * s / n.sqrt())
}
