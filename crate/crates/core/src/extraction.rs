//! Per-entity semantic type extraction.
//!
//! Article text is tokenized (first sentence, then body) and scanned left to
//! right with greedy longest-match against a token trie of dictionary
//! entries. The first `cap` distinct matches, after remapping, form the
//! entity's type assignment. A phrase counts as one word towards the cap.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::ArticleRecord;
use crate::dictionary::SemanticTypeDictionary;
use crate::error::{Error, Result};
use crate::text::{tokenize, tokens};

pub const DEFAULT_CAP: usize = 11;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityTypeAssignment {
    pub entity_id: String,
    pub type_words: Vec<String>,
}

pub type Assignments = IndexMap<String, EntityTypeAssignment>;

#[derive(Debug, Default)]
struct TrieNode {
    children: HashMap<String, TrieNode>,
    entry: Option<String>,
}

/// Compiled matcher over a dictionary. Cheap to share across threads.
#[derive(Debug)]
pub struct TypeExtractor<'d> {
    dict: &'d SemanticTypeDictionary,
    root: TrieNode,
    cap: usize,
}

impl<'d> TypeExtractor<'d> {
    pub fn new(dict: &'d SemanticTypeDictionary, cap: usize) -> Result<Self> {
        if cap == 0 {
            return Err(Error::Value("type cap must be at least 1".into()));
        }
        let mut root = TrieNode::default();
        // Remap sources are surface forms of type words too (e.g. a rare
        // word curated only in the remap file).
        let entries = dict
            .words()
            .map(|w| (w.to_owned(), w.replace('_', " ")))
            .chain(dict.remap_table().keys().map(|k| (k.clone(), k.clone())));
        for (entry, surface) in entries {
            let toks = tokenize(&surface);
            if toks.is_empty() {
                continue;
            }
            let mut node = &mut root;
            for t in toks {
                node = node.children.entry(t).or_default();
            }
            // Dictionary words win over remap sources with the same surface.
            node.entry.get_or_insert(entry);
        }
        Ok(TypeExtractor { dict, root, cap })
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    /// Longest dictionary match starting at `tokens[start]`: (entry, length).
    fn longest_match<'a>(&'a self, toks: &[String], start: usize) -> Option<(&'a str, usize)> {
        let mut node = &self.root;
        let mut best = None;
        for (offset, t) in toks[start..].iter().enumerate() {
            match node.children.get(t) {
                Some(next) => {
                    node = next;
                    if let Some(e) = &node.entry {
                        best = Some((e.as_str(), offset + 1));
                    }
                }
                None => break,
            }
        }
        best
    }

    fn scan(&self, text: &str, out: &mut Vec<String>, seen: &mut HashSet<String>) {
        let toks: Vec<String> = tokens(text).collect();
        let mut i = 0;
        while i < toks.len() && out.len() < self.cap {
            match self.longest_match(&toks, i) {
                Some((entry, len)) => {
                    let word = self.dict.apply_remap(entry);
                    if seen.insert(word.to_owned()) {
                        out.push(word.to_owned());
                    }
                    i += len;
                }
                None => i += 1,
            }
        }
    }

    pub fn extract(&self, article: &ArticleRecord) -> EntityTypeAssignment {
        let mut words = Vec::new();
        let mut seen = HashSet::new();
        self.scan(&article.first_sentence, &mut words, &mut seen);
        if let Some(body) = &article.body {
            self.scan(body, &mut words, &mut seen);
        }
        EntityTypeAssignment {
            entity_id: article.entity_id.clone(),
            type_words: words,
        }
    }
}

/// At most `cap` distinct, remapped dictionary words in order of first
/// occurrence.
pub fn extract_types(
    article: &ArticleRecord,
    dict: &SemanticTypeDictionary,
    cap: usize,
) -> Result<EntityTypeAssignment> {
    Ok(TypeExtractor::new(dict, cap)?.extract(article))
}

/// Sequential extraction over a stream of articles.
pub fn extract_corpus<I>(articles: I, dict: &SemanticTypeDictionary, cap: usize) -> Result<Assignments>
where
    I: IntoIterator<Item = Result<ArticleRecord>>,
{
    let extractor = TypeExtractor::new(dict, cap)?;
    let mut out = Assignments::new();
    for article in articles {
        let assignment = extractor.extract(&article?);
        if out.contains_key(&assignment.entity_id) {
            return Err(Error::DuplicateEntity(assignment.entity_id));
        }
        out.insert(assignment.entity_id.clone(), assignment);
    }
    Ok(out)
}

/// Parallel extraction; output order follows input order, so the result is
/// identical to [`extract_corpus`].
pub fn extract_corpus_parallel(
    articles: &[ArticleRecord],
    dict: &SemanticTypeDictionary,
    cap: usize,
) -> Result<Assignments> {
    let extractor = TypeExtractor::new(dict, cap)?;
    let results: Vec<EntityTypeAssignment> =
        articles.par_iter().map(|a| extractor.extract(a)).collect();
    let mut out = Assignments::with_capacity(results.len());
    for a in results {
        if out.contains_key(&a.entity_id) {
            return Err(Error::DuplicateEntity(a.entity_id));
        }
        out.insert(a.entity_id.clone(), a);
    }
    Ok(out)
}

/// Streams articles to an assignments file without holding the corpus in
/// memory. Returns the number of articles processed.
pub fn extract_stream<I, W>(
    articles: I,
    dict: &SemanticTypeDictionary,
    cap: usize,
    writer: &mut W,
) -> Result<usize>
where
    I: IntoIterator<Item = Result<ArticleRecord>>,
    W: Write,
{
    let extractor = TypeExtractor::new(dict, cap)?;
    let mut ids = HashSet::new();
    let mut n = 0;
    for article in articles {
        let a = extractor.extract(&article?);
        if !ids.insert(a.entity_id.clone()) {
            return Err(Error::DuplicateEntity(a.entity_id));
        }
        write_assignment(&a, writer)?;
        n += 1;
    }
    Ok(n)
}

pub fn write_assignment<W: Write>(a: &EntityTypeAssignment, writer: &mut W) -> Result<()> {
    writeln!(writer, "{}\t{}", a.entity_id, a.type_words.join(","))?;
    Ok(())
}

pub fn write_assignments<'a, W: Write>(
    assignments: impl IntoIterator<Item = &'a EntityTypeAssignment>,
    writer: &mut W,
) -> Result<()> {
    for a in assignments {
        write_assignment(a, writer)?;
    }
    Ok(())
}

/// Reads `<entity_id>\t<w1,w2,...>` lines.
pub fn read_assignments<R: BufRead>(reader: R) -> Result<Assignments> {
    let mut out = Assignments::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, words) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(Some(i + 1), "expected `<entity_id>\\t<words>`"))?;
        if id.is_empty() {
            return Err(Error::format(Some(i + 1), "empty entity id"));
        }
        let type_words: Vec<String> = words
            .split(',')
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_owned)
            .collect();
        if out.contains_key(id) {
            return Err(Error::DuplicateEntity(id.to_owned()));
        }
        out.insert(
            id.to_owned(),
            EntityTypeAssignment {
                entity_id: id.to_owned(),
                type_words,
            },
        );
    }
    Ok(out)
}
