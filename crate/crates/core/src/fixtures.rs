//! Deterministic synthetic data: word and entity embeddings, an article
//! corpus, a type dictionary and linking train/dev sets.
//!
//! Every entity gets 2 or 3 type words. Its entity vector is the mean of its
//! type-word vectors plus entity-unique noise. Mention contexts mix the gold
//! entity's type words with filler words.
//!
//! The first half of the dimensions carries type signal. The second half
//! carries most of the entity noise, so a trained `B` that damps it helps.
//! The type mean enters the entity vector with weight below one, so the
//! entity table alone underweights type information.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{write_tsv, ArticleRecord};
use crate::embeddings::{save_binary, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{PairClass, ProbePair};
use crate::extraction::{Assignments, EntityTypeAssignment};
use crate::linking::io::{write_raw_jsonl, RawDocument, RawMention};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSizes {
    pub entities: usize,
    pub type_words: usize,
    pub filler_words: usize,
    pub train_docs: usize,
    pub dev_docs: usize,
    pub mentions_per_doc: usize,
    pub candidates: usize,
    pub dim: usize,
    /// Context tokens on each side of a mention. Also the linking window.
    pub context_side: usize,
}

impl Default for FixtureSizes {
    fn default() -> Self {
        FixtureSizes {
            entities: 60,
            type_words: 200,
            filler_words: 200,
            train_docs: 80,
            dev_docs: 100,
            mentions_per_doc: 5,
            candidates: 4,
            dim: 32,
            context_side: 12,
        }
    }
}

impl FixtureSizes {
    /// Nothing but the dimension; every output file is empty but valid.
    pub fn zero() -> Self {
        FixtureSizes {
            entities: 0,
            type_words: 0,
            filler_words: 0,
            train_docs: 0,
            dev_docs: 0,
            mentions_per_doc: 0,
            candidates: 0,
            dim: 8,
            context_side: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureNoise {
    /// Weight of the type-word mean inside an entity vector.
    pub type_weight: f64,
    /// Std of entity noise on the signal dimensions.
    pub entity_signal: f64,
    /// Std of entity noise on the noise dimensions.
    pub entity_noise: f64,
    /// Std of type-word components on the noise dimensions.
    pub type_leak: f64,
    /// Probability that a context token is one of the gold's type words.
    pub type_token_rate: f64,
    /// Probability that an article uses the rare surface form of a type
    /// word that has one.
    pub rare_rate: f64,
    /// Number of type words with a rare surface form in the remap file.
    pub rare_words: usize,
}

impl Default for FixtureNoise {
    fn default() -> Self {
        FixtureNoise {
            type_weight: 0.5,
            entity_signal: 0.1,
            entity_noise: 1.5,
            type_leak: 0.1,
            type_token_rate: 0.7,
            rare_rate: 0.5,
            rare_words: 3,
        }
    }
}

/// In-memory fixture. [`FixtureSet::write`] lays it out on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSet {
    pub seed: u64,
    pub sizes: FixtureSizes,
    pub words: EmbeddingTable,
    pub wikitext: EmbeddingTable,
    /// True type words of every entity, in wikitext order.
    pub types: Assignments,
    pub articles: Vec<ArticleRecord>,
    /// `(word, category tag)` lines of the seed dictionary.
    pub dictionary: Vec<(String, String)>,
    pub remap: Vec<(String, String)>,
    pub train: Vec<RawDocument>,
    pub dev: Vec<RawDocument>,
    pub probes: Vec<ProbePair>,
}

pub const WORDS_FILE: &str = "words.bin";
pub const WIKITEXT_FILE: &str = "wikitext.bin";
pub const CORPUS_FILE: &str = "corpus.tsv";
pub const SEEDS_FILE: &str = "seeds.txt";
pub const EXTENSIONS_FILE: &str = "extensions.txt";
pub const REMAP_FILE: &str = "remap.tsv";
pub const TRAIN_FILE: &str = "train.jsonl";
pub const DEV_FILE: &str = "dev.jsonl";
pub const PROBES_FILE: &str = "probes.tsv";
pub const CONFIG_FILE: &str = "pipeline.conf";
pub const META_FILE: &str = "fixture.json";

const CATEGORIES: [&str; 6] = ["profession", "title", "industry", "geospatial", "ideology", "misc"];

fn type_word(i: usize) -> String {
    format!("sem{i:03}")
}

fn rare_word(i: usize) -> String {
    format!("rare{i:03}")
}

fn filler_word(i: usize) -> String {
    format!("fill{i:03}")
}

fn entity_label(i: usize) -> String {
    format!("Entity_{i:04}")
}

fn gaussian(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    Normal::new(0.0, std).expect("finite std").sample(rng)
}

pub fn make_fixtures(seed: u64, sizes: &FixtureSizes) -> Result<FixtureSet> {
    make_fixtures_with(seed, sizes, &FixtureNoise::default())
}

pub fn make_fixtures_with(seed: u64, sizes: &FixtureSizes, noise: &FixtureNoise) -> Result<FixtureSet> {
    if sizes.dim == 0 {
        return Err(Error::Config("fixture dimension must be positive".into()));
    }
    if sizes.entities > 0 && sizes.type_words < 3 {
        return Err(Error::Config("fixtures with entities need at least 3 type words".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = sizes.dim;
    let signal_dims = d.div_ceil(2);

    let mut words = EmbeddingTable::with_capacity(d, sizes.type_words + sizes.filler_words)?;
    let mut type_vecs = Vec::with_capacity(sizes.type_words);
    for i in 0..sizes.type_words {
        let v: Vec<f64> = (0..d)
            .map(|k| gaussian(&mut rng, if k < signal_dims { 1.0 } else { noise.type_leak }))
            .collect();
        words.push(type_word(i), &to_f32(&v))?;
        type_vecs.push(v);
    }
    for i in 0..sizes.filler_words {
        let v: Vec<f64> = (0..d).map(|_| gaussian(&mut rng, 1.0)).collect();
        words.push(filler_word(i), &to_f32(&v))?;
    }

    let mut wikitext = EmbeddingTable::with_capacity(d, sizes.entities)?;
    let mut types = Assignments::new();
    let mut articles = Vec::with_capacity(sizes.entities);
    let rare = noise.rare_words.min(sizes.type_words);
    for e in 0..sizes.entities {
        let k = rng.random_range(2..=3);
        let chosen = rand::seq::index::sample(&mut rng, sizes.type_words, k).into_vec();
        let mut v = vec![0.0f64; d];
        for &t in &chosen {
            for (x, y) in v.iter_mut().zip(&type_vecs[t]) {
                *x += noise.type_weight * y / k as f64;
            }
        }
        for (i, x) in v.iter_mut().enumerate() {
            *x += gaussian(&mut rng, if i < signal_dims { noise.entity_signal } else { noise.entity_noise });
        }
        let label = entity_label(e);
        wikitext.push(&label, &to_f32(&v))?;

        let surfaces: Vec<String> = chosen
            .iter()
            .map(|&t| {
                if t < rare && rng.random_bool(noise.rare_rate) {
                    rare_word(t)
                } else {
                    type_word(t)
                }
            })
            .collect();
        let mut text = format!("Entity {e} is a {}.", surfaces.join(" and "));
        if sizes.filler_words > 0 {
            let body: Vec<String> = (0..8).map(|_| filler_word(rng.random_range(0..sizes.filler_words))).collect();
            text.push(' ');
            text.push_str(&body.join(" "));
            text.push('.');
        }
        articles.push(ArticleRecord::from_text(&label, format!("Entity {e}"), &text));
        types.insert(
            label.clone(),
            EntityTypeAssignment {
                entity_id: label,
                type_words: chosen.iter().map(|&t| type_word(t)).collect(),
            },
        );
    }

    let dictionary = (0..sizes.type_words)
        .map(|i| (type_word(i), CATEGORIES[i % CATEGORIES.len()].to_owned()))
        .collect();
    let remap = (0..rare).map(|i| (rare_word(i), type_word(i))).collect();

    let train = make_docs(&mut rng, "train", sizes.train_docs, sizes, noise, &types)?;
    let dev = make_docs(&mut rng, "dev", sizes.dev_docs, sizes, noise, &types)?;
    let probes = type_probes(&mut rng, &types, 50);

    Ok(FixtureSet {
        seed,
        sizes: sizes.clone(),
        words,
        wikitext,
        types,
        articles,
        dictionary,
        remap,
        train,
        dev,
        probes,
    })
}

fn to_f32(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn make_docs(
    rng: &mut ChaCha8Rng,
    prefix: &str,
    count: usize,
    sizes: &FixtureSizes,
    noise: &FixtureNoise,
    types: &Assignments,
) -> Result<Vec<RawDocument>> {
    let n_ent = types.len();
    if n_ent == 0 || sizes.mentions_per_doc == 0 {
        return Ok(Vec::new());
    }
    let n_cand = sizes.candidates.clamp(1, n_ent);
    let mut docs = Vec::with_capacity(count);
    for di in 0..count {
        let mut tokens = Vec::new();
        let mut mentions = Vec::with_capacity(sizes.mentions_per_doc);
        for _ in 0..sizes.mentions_per_doc {
            let gold = rng.random_range(0..n_ent);
            let gold_types = &types[gold].type_words;
            let context = |rng: &mut ChaCha8Rng| -> Vec<String> {
                (0..sizes.context_side)
                    .map(|_| {
                        if sizes.filler_words == 0 || rng.random_bool(noise.type_token_rate) {
                            gold_types.choose(rng).expect("at least two types").clone()
                        } else {
                            filler_word(rng.random_range(0..sizes.filler_words))
                        }
                    })
                    .collect()
            };
            let left = context(rng);
            let right = context(rng);
            tokens.extend(left);
            let start = tokens.len();
            tokens.push(format!("Entity{gold}"));
            tokens.extend(right);

            let mut cands: Vec<usize> = rand::seq::index::sample(rng, n_ent - 1, n_cand - 1)
                .into_iter()
                .map(|i| if i >= gold { i + 1 } else { i })
                .collect();
            cands.push(gold);
            cands.shuffle(rng);
            mentions.push(RawMention {
                start,
                end: start + 1,
                gold: Some(entity_label(gold)),
                candidates: cands.into_iter().map(entity_label).collect(),
                priors: None,
            });
        }
        docs.push(RawDocument {
            doc_id: format!("{prefix}{di:04}"),
            tokens,
            mentions,
        });
    }
    Ok(docs)
}

/// Pairs sharing at least one type word are same-type; pairs sharing none
/// are different-type. At most `per_class` of each.
fn type_probes(rng: &mut ChaCha8Rng, types: &Assignments, per_class: usize) -> Vec<ProbePair> {
    let n = types.len();
    let mut same = Vec::new();
    let mut diff = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&types[i], &types[j]);
            let shared = a.type_words.iter().any(|w| b.type_words.contains(w));
            let class = if shared { PairClass::SameType } else { PairClass::DifferentType };
            let pair = ProbePair {
                a: a.entity_id.clone(),
                b: b.entity_id.clone(),
                class,
            };
            if shared { same.push(pair) } else { diff.push(pair) }
        }
    }
    same.shuffle(rng);
    diff.shuffle(rng);
    same.truncate(per_class);
    diff.truncate(per_class);
    same.into_iter().chain(diff).collect()
}

impl FixtureSet {
    /// Every mention's gold is among its candidates and every candidate has
    /// an entity vector. Returns the offending `doc_id:mention` keys.
    pub fn gold_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in self.train.iter().chain(&self.dev) {
            for (i, m) in d.mentions.iter().enumerate() {
                let gold_ok = m.gold.as_ref().is_some_and(|g| m.candidates.contains(g));
                let cands_ok = m.candidates.iter().all(|c| self.wikitext.contains(c));
                if !gold_ok || !cands_ok {
                    out.push(format!("{}:{i}", d.doc_id));
                }
            }
        }
        out
    }

    /// Writes all fixture files into `dir`, creating it if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io_path(dir, e))?;
        save_binary(&self.words, dir.join(WORDS_FILE))?;
        save_binary(&self.wikitext, dir.join(WIKITEXT_FILE))?;

        write_file(dir, CORPUS_FILE, |w| write_tsv(&self.articles, w))?;
        write_file(dir, SEEDS_FILE, |w| {
            for (word, cat) in &self.dictionary {
                writeln!(w, "{word}\t{cat}")?;
            }
            Ok(())
        })?;
        write_file(dir, EXTENSIONS_FILE, |_| Ok(()))?;
        write_file(dir, REMAP_FILE, |w| {
            for (from, to) in &self.remap {
                writeln!(w, "{from}\t{to}")?;
            }
            Ok(())
        })?;
        write_file(dir, TRAIN_FILE, |w| write_raw_jsonl(&self.train, w))?;
        write_file(dir, DEV_FILE, |w| write_raw_jsonl(&self.dev, w))?;
        write_file(dir, PROBES_FILE, |w| {
            for p in &self.probes {
                writeln!(w, "{}\t{}\t{}", p.a, p.b, p.class.tag())?;
            }
            Ok(())
        })?;
        write_file(dir, CONFIG_FILE, |w| {
            write!(
                w,
                "# generated by `fixtures make`, seed {seed}\n\
                 word_embeddings = {WORDS_FILE}\n\
                 wikitext_embeddings = {WIKITEXT_FILE}\n\
                 corpus = {CORPUS_FILE}\n\
                 dict_seeds = {SEEDS_FILE}\n\
                 dict_extensions = {EXTENSIONS_FILE}\n\
                 dict_remap = {REMAP_FILE}\n\
                 train = {TRAIN_FILE}\n\
                 dev = {DEV_FILE}\n\
                 output_dir = out\n\
                 window = {window}\n",
                seed = self.seed,
                window = self.sizes.context_side.max(1),
            )?;
            Ok(())
        })?;
        write_file(dir, META_FILE, |w| {
            let meta = serde_json::json!({ "seed": self.seed, "sizes": self.sizes });
            serde_json::to_writer_pretty(&mut *w, &meta).map_err(std::io::Error::from)?;
            writeln!(w)?;
            Ok(())
        })
    }
}

fn write_file(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut std::io::BufWriter<fs::File>) -> Result<()>,
) -> Result<()> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io_path(&path, e))?;
    let mut w = std::io::BufWriter::new(file);
    body(&mut w)?;
    w.flush().map_err(|e| Error::io_path(&path, e))?;
    Ok(())
}

/// Probe set whose geometry is forced by construction: same-type pairs share
/// one type word, different-type pairs get a type word and its negation.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryFixture {
    pub words: EmbeddingTable,
    pub wikitext: EmbeddingTable,
    pub types: Assignments,
    pub probes: Vec<ProbePair>,
}

pub fn geometry_fixture(seed: u64, pairs_per_class: usize, dim: usize) -> Result<GeometryFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut words = EmbeddingTable::with_capacity(dim, 3 * pairs_per_class)?;
    let mut wikitext = EmbeddingTable::with_capacity(dim, 4 * pairs_per_class)?;
    let mut types = Assignments::new();
    let mut probes = Vec::with_capacity(2 * pairs_per_class);
    let random_vec = |rng: &mut ChaCha8Rng| -> Vec<f32> { (0..dim).map(|_| gaussian(rng, 1.0) as f32).collect() };
    let mut entity = |name: String, word: String, rng: &mut ChaCha8Rng, wikitext: &mut EmbeddingTable| -> Result<String> {
        wikitext.push(&name, &random_vec(rng))?;
        types.insert(
            name.clone(),
            EntityTypeAssignment {
                entity_id: name.clone(),
                type_words: vec![word],
            },
        );
        Ok(name)
    };
    for p in 0..pairs_per_class {
        let s: Vec<f32> = (0..dim).map(|_| gaussian(&mut rng, 1.0) as f32).collect();
        let shared = format!("shared{p:03}");
        words.push(&shared, &s)?;
        let a = entity(format!("same{p:03}a"), shared.clone(), &mut rng, &mut wikitext)?;
        let b = entity(format!("same{p:03}b"), shared, &mut rng, &mut wikitext)?;
        probes.push(ProbePair { a, b, class: PairClass::SameType });

        let t: Vec<f32> = (0..dim).map(|_| gaussian(&mut rng, 1.0) as f32).collect();
        let neg: Vec<f32> = t.iter().map(|x| -x).collect();
        let (pos_w, neg_w) = (format!("pos{p:03}"), format!("neg{p:03}"));
        words.push(&pos_w, &t)?;
        words.push(&neg_w, &neg)?;
        let a = entity(format!("diff{p:03}a"), pos_w, &mut rng, &mut wikitext)?;
        let b = entity(format!("diff{p:03}b"), neg_w, &mut rng, &mut wikitext)?;
        probes.push(ProbePair { a, b, class: PairClass::DifferentType });
    }
    Ok(GeometryFixture {
        words,
        wikitext,
        types,
        probes,
    })
}
