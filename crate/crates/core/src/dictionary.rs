//! Fine-grained semantic type dictionary.
//!
//! Building a dictionary is a semi-manual workflow:
//!
//! 1. [`mine_noun_frequency`] counts nouns in article first sentences so a
//!    curator can pick seed words among the frequent ones.
//! 2. [`expand_seeds`] proposes the most similar embedding labels for each
//!    seed, restricted to words that occur in the articles.
//! 3. The curator's accepted seeds, accepted expansions and a remap table are
//!    merged by [`build_dictionary`].
//!
//! Multi-word phrases are stored with underscores (`rugby_league`) so every
//! entry names a single embedding label; the spaced surface form is added to
//! the remap table automatically.

use std::borrow::Borrow;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregation::cosine;
use crate::corpus::ArticleRecord;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::text::tokens;

/// Default minimum count for a noun to be reported as frequent.
pub const DEFAULT_NOUN_THRESHOLD: u64 = 10;
/// Default number of neighbours proposed per seed.
pub const DEFAULT_EXPANSION_K: usize = 100;

/// Part-of-speech oracle used by noun mining.
pub trait PosTagger {
    fn is_noun(&self, token: &str) -> bool;
}

impl<F: Fn(&str) -> bool> PosTagger for F {
    fn is_noun(&self, token: &str) -> bool {
        self(token)
    }
}

/// Rule-based fallback tagger: a token is a noun unless it is a stop word,
/// numeric, a single character, or carries an adverb/participle suffix.
#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicNounTagger;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "against", "all", "also", "an", "and", "any", "are", "as", "at", "be",
    "became", "become", "been", "before", "being", "between", "born", "both", "but", "by", "can",
    "could", "did", "do", "does", "during", "each", "for", "from", "had", "has", "have", "he",
    "her", "hers", "him", "his", "how", "if", "in", "into", "is", "it", "its", "known", "many",
    "may", "more", "most", "not", "of", "on", "one", "only", "or", "other", "over", "she", "since",
    "so", "some", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "this", "those", "through", "to", "two", "under", "until", "up", "was", "we", "were", "what",
    "when", "where", "which", "while", "who", "whom", "whose", "will", "with", "within", "would",
];

impl PosTagger for HeuristicNounTagger {
    fn is_noun(&self, token: &str) -> bool {
        if token.chars().count() < 2 || token.chars().all(|c| c.is_ascii_digit()) {
            return false;
        }
        if STOPWORDS.binary_search(&token).is_ok() {
            return false;
        }
        !(token.ends_with("ly") || token.ends_with("ed"))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NounFrequencyReport {
    pub counts: BTreeMap<String, u64>,
    pub total_sentences: u64,
}

impl NounFrequencyReport {
    /// Associative merge of two shard reports.
    pub fn merge(mut self, other: NounFrequencyReport) -> Self {
        for (noun, n) in other.counts {
            *self.counts.entry(noun).or_default() += n;
        }
        self.total_sentences += other.total_sentences;
        self
    }

    fn add_sentence(&mut self, sentence: &str, tagger: &(impl PosTagger + ?Sized)) {
        self.total_sentences += 1;
        for tok in tokens(sentence) {
            if tagger.is_noun(&tok) {
                *self.counts.entry(tok).or_default() += 1;
            }
        }
    }

    /// Nouns with `count >= threshold`, most frequent first (ties by word).
    pub fn frequent(&self, threshold: u64) -> Vec<(&str, u64)> {
        let mut out: Vec<_> = self
            .counts
            .iter()
            .filter(|(_, &n)| n >= threshold)
            .map(|(w, &n)| (w.as_str(), n))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }

    pub fn write_tsv<W: Write>(&self, threshold: u64, writer: &mut W) -> Result<()> {
        writeln!(writer, "# sentences\t{}", self.total_sentences)?;
        for (w, n) in self.frequent(threshold) {
            writeln!(writer, "{w}\t{n}")?;
        }
        Ok(())
    }
}

/// Counts lowercased noun tokens over the first sentence of every article.
pub fn mine_noun_frequency<I>(articles: I, tagger: &(impl PosTagger + ?Sized)) -> NounFrequencyReport
where
    I: IntoIterator,
    I::Item: Borrow<ArticleRecord>,
{
    let mut report = NounFrequencyReport::default();
    for article in articles {
        report.add_sentence(&article.borrow().first_sentence, tagger);
    }
    report
}

/// Sharded variant of [`mine_noun_frequency`]; the result is identical.
pub fn mine_noun_frequency_parallel(
    articles: &[ArticleRecord],
    tagger: &(impl PosTagger + Sync + ?Sized),
    shards: usize,
) -> NounFrequencyReport {
    let chunk = articles.len().div_ceil(shards.max(1)).max(1);
    articles
        .par_chunks(chunk)
        .map(|shard| mine_noun_frequency(shard, tagger))
        .reduce(NounFrequencyReport::default, NounFrequencyReport::merge)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedExpansion {
    pub seed: String,
    /// Descending by similarity, ties by label.
    pub neighbors: Vec<(String, f64)>,
}

/// For each seed, the `k` embedding labels most cosine-similar to it among
/// `words_in_articles`, excluding the seed itself.
pub fn expand_seeds<S: AsRef<str>>(
    seeds: &[S],
    words_in_articles: &HashSet<String>,
    embeddings: &EmbeddingTable,
    k: usize,
) -> Result<Vec<SeedExpansion>> {
    if k == 0 {
        return Err(Error::Value("expansion size k must be at least 1".into()));
    }
    let pool: Vec<(usize, &str)> = (0..embeddings.len())
        .filter_map(|i| {
            let label = std::str::from_utf8(embeddings.label(i)).ok()?;
            words_in_articles.contains(label).then_some((i, label))
        })
        .collect();

    seeds
        .iter()
        .map(|seed| {
            let seed = seed.as_ref();
            let seed_vec = embeddings
                .vector(seed)
                .ok_or_else(|| Error::MissingSeed(seed.to_owned()))?;
            let mut scored: Vec<(String, f64)> = pool
                .iter()
                .filter(|(_, label)| *label != seed)
                .map(|&(i, label)| {
                    let s = cosine(seed_vec, embeddings.row(i).values).clamp(-1.0, 1.0);
                    (label.to_owned(), s)
                })
                .collect();
            scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            scored.truncate(k);
            Ok(SeedExpansion {
                seed: seed.to_owned(),
                neighbors: scored,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    ProfessionSubject,
    Title,
    IndustryGenre,
    Geospatial,
    IdeologyReligion,
    Miscellaneous,
}

impl Category {
    pub fn tag(self) -> &'static str {
        match self {
            Category::ProfessionSubject => "profession",
            Category::Title => "title",
            Category::IndustryGenre => "industry",
            Category::Geospatial => "geospatial",
            Category::IdeologyReligion => "ideology",
            Category::Miscellaneous => "misc",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s.trim().to_lowercase().as_str() {
            "profession" | "subject" | "profession/subject" => Category::ProfessionSubject,
            "title" => Category::Title,
            "industry" | "genre" | "industry/genre" => Category::IndustryGenre,
            "geospatial" => Category::Geospatial,
            "ideology" | "religion" | "ideology/religion" => Category::IdeologyReligion,
            "misc" | "miscellaneous" => Category::Miscellaneous,
            other => return Err(format!("unknown category `{other}`")),
        })
    }
}

/// Lowercases and collapses internal whitespace to single spaces.
pub fn normalize_surface(word: &str) -> String {
    word.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Dictionary form of a word: normalized surface with spaces as underscores.
pub fn normalize_entry(word: &str) -> String {
    normalize_surface(word).replace(' ', "_")
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticTypeDictionary {
    words: BTreeMap<String, Option<Category>>,
    remap: BTreeMap<String, String>,
}

impl SemanticTypeDictionary {
    pub fn words(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.words.keys().map(String::as_str)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains_key(word)
    }

    pub fn category(&self, word: &str) -> Option<Category> {
        self.words.get(word).copied().flatten()
    }

    pub fn remap_table(&self) -> &BTreeMap<String, String> {
        &self.remap
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Returns the remap target of `word`, or `word` itself. Chains are not
    /// followed (and cannot exist in a validated dictionary).
    pub fn apply_remap<'a>(&'a self, word: &'a str) -> &'a str {
        self.remap.get(word).map_or(word, String::as_str)
    }

    /// Dictionary words that do not resolve to a vector in `embeddings`
    /// after remapping.
    pub fn unresolved(&self, embeddings: &EmbeddingTable) -> Vec<&str> {
        self.words()
            .filter(|w| !embeddings.contains(self.apply_remap(w)))
            .collect()
    }

    /// Parses a serialized dictionary. Structural remap rules (no self maps,
    /// no chains) are checked; target availability is not.
    pub fn parse(words: &str, remap: &str) -> Result<Self> {
        let mut dict = SemanticTypeDictionary::default();
        for (word, cat) in parse_word_list(words)? {
            dict.insert_word(word, cat);
        }
        for (from, to) in parse_remap(remap)? {
            dict.insert_remap(from, to, None)?;
        }
        Ok(dict)
    }

    pub fn write_words<W: Write>(&self, writer: &mut W) -> Result<()> {
        for (w, cat) in &self.words {
            match cat {
                Some(c) => writeln!(writer, "{w}\t{c}")?,
                None => writeln!(writer, "{w}")?,
            }
        }
        Ok(())
    }

    pub fn write_remap<W: Write>(&self, writer: &mut W) -> Result<()> {
        for (from, to) in &self.remap {
            writeln!(writer, "{from}\t{to}")?;
        }
        Ok(())
    }

    fn insert_word(&mut self, word: String, cat: Option<Category>) {
        let slot = self.words.entry(word).or_insert(None);
        if slot.is_none() {
            *slot = cat;
        }
    }

    fn insert_remap(
        &mut self,
        from: String,
        to: String,
        in_embeddings: Option<&dyn Fn(&str) -> bool>,
    ) -> Result<()> {
        let reject = |reason: &str| Error::RemapTarget {
            from: from.clone(),
            to: to.clone(),
            reason: reason.into(),
        };
        if from == to {
            return Err(reject("word maps to itself"));
        }
        if self.remap.contains_key(&to) {
            return Err(reject("target is itself remapped (chains are not allowed)"));
        }
        if self.remap.values().any(|t| *t == from) {
            return Err(reject("source is the target of another entry (chains are not allowed)"));
        }
        if let Some(prev) = self.remap.get(&from) {
            if *prev != to {
                return Err(reject(&format!("conflicts with existing target `{prev}`")));
            }
        }
        let known = match in_embeddings {
            Some(check) => self.words.contains_key(&to) || check(&to),
            None => true,
        };
        if !known {
            return Err(reject("target is neither a dictionary word nor an embedding label"));
        }
        self.remap.insert(from, to);
        Ok(())
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

/// One word or phrase per line, optionally followed by a tab and a category.
pub fn parse_word_list(text: &str) -> Result<Vec<(String, Option<Category>)>> {
    content_lines(text)
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            let (word, cat) = match cols.as_slice() {
                [w] => (*w, None),
                [w, c] => (
                    *w,
                    Some(c.parse::<Category>().map_err(|m| Error::format(Some(n), m))?),
                ),
                _ => return Err(Error::format(Some(n), "expected `<word>[\\t<category>]`")),
            };
            let word = normalize_entry(word);
            if word.is_empty() {
                return Err(Error::format(Some(n), "empty word"));
            }
            if word.contains(',') {
                return Err(Error::format(Some(n), "words may not contain commas"));
            }
            Ok((word, cat))
        })
        .collect()
}

/// `<from>\t<to>` per line. Sources keep spaces (they name surface forms);
/// targets are embedding labels.
pub fn parse_remap(text: &str) -> Result<Vec<(String, String)>> {
    content_lines(text)
        .map(|(n, line)| match line.split('\t').collect::<Vec<_>>().as_slice() {
            [from, to] => {
                let from = normalize_surface(from);
                let to = normalize_entry(to);
                if from.is_empty() || to.is_empty() {
                    return Err(Error::format(Some(n), "empty remap field"));
                }
                Ok((from, to))
            }
            _ => Err(Error::format(Some(n), "expected `<from>\\t<to>`")),
        })
        .collect()
}

/// Merges curated seeds and accepted expansions into a dictionary and
/// validates the remap table against the dictionary and `embeddings`.
///
/// `frequent_nouns` is used for diagnostics only: seeds that were never seen
/// as nouns in first sentences are logged.
pub fn build_dictionary(
    frequent_nouns: &NounFrequencyReport,
    curated_seeds: &str,
    curated_extensions: &str,
    remap: &str,
    embeddings: &EmbeddingTable,
) -> Result<SemanticTypeDictionary> {
    let mut dict = SemanticTypeDictionary::default();
    let seeds = parse_word_list(curated_seeds)?;
    let unseen = seeds
        .iter()
        .filter(|(w, _)| !frequent_nouns.counts.contains_key(w))
        .count();
    if unseen > 0 && frequent_nouns.total_sentences > 0 {
        log::info!("{unseen} of {} seeds never occur as first-sentence nouns", seeds.len());
    }
    for (w, cat) in seeds.into_iter().chain(parse_word_list(curated_extensions)?) {
        dict.insert_word(w, cat);
    }

    let explicit = parse_remap(remap)?;
    let explicit_sources: HashSet<&str> = explicit.iter().map(|(f, _)| f.as_str()).collect();
    let phrase_forms: Vec<(String, String)> = dict
        .words
        .keys()
        .filter(|w| w.contains('_'))
        .map(|w| (w.replace('_', " "), w.clone()))
        .filter(|(surface, _)| !explicit_sources.contains(surface.as_str()))
        .collect();

    let in_embeddings = |w: &str| embeddings.contains(w);
    for (from, to) in explicit.iter().cloned().chain(phrase_forms) {
        dict.insert_remap(from, to, Some(&in_embeddings))?;
    }
    Ok(dict)
}
