//! File formats for linking corpora, predictions and models.
//!
//! **Corpus (JSON lines)**, one document per line:
//!
//! ```text
//! {"doc_id":"d1","tokens":["Mr.","Mueller","met","Congress"],
//!  "mentions":[{"start":0,"end":2,"gold":"Robert_Mueller",
//!               "candidates":["Robert_Mueller","Mueller_(band)"],"priors":[0.9,0.1]}]}
//! ```
//!
//! Spans are token offsets, `end` exclusive. `priors` is optional and ignored
//! by the scorer.
//!
//! **Simplified CoNLL/AIDA TSV**: `-DOCSTART- (<id>)` starts a document; each
//! following line is a token, optionally with tab-separated `B`/`I`, the
//! mention surface, the gold entity (`--NME--` for none) and, on `B` lines, a
//! `|`-separated candidate list.
//!
//! **Model**: a header `<d> <K> <weighting>` followed by lines `B ...`,
//! `C ...` and `R<k> ...` of `d` floats each.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{LinkingDocument, LinkingModel, Mention, RelationWeighting};
use crate::error::{Error, Result};
use crate::eval::DocLinks;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawMention {
    pub start: usize,
    pub end: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<Vec<f32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub tokens: Vec<String>,
    pub mentions: Vec<RawMention>,
}

impl RawDocument {
    pub fn into_document(self, window: usize) -> Result<LinkingDocument> {
        let mentions = self
            .mentions
            .into_iter()
            .map(|m| {
                if let Some(p) = &m.priors {
                    if p.len() != m.candidates.len() {
                        return Err(Error::InvalidDocument(format!(
                            "`{}`: {} priors for {} candidates",
                            self.doc_id,
                            p.len(),
                            m.candidates.len()
                        )));
                    }
                }
                Mention::from_span(&self.tokens, m.start, m.end, window, m.candidates, m.gold)
            })
            .collect::<Result<Vec<_>>>()?;
        if mentions.is_empty() {
            return Err(Error::InvalidDocument(format!("`{}` has no mentions", self.doc_id)));
        }
        Ok(LinkingDocument {
            doc_id: self.doc_id,
            mentions,
        })
    }
}

pub fn read_raw_jsonl<R: BufRead>(reader: R) -> Result<Vec<RawDocument>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line)
            .map_err(|e| Error::format(Some(i + 1), e.to_string()))?;
        out.push(doc);
    }
    Ok(out)
}

pub fn read_jsonl<R: BufRead>(reader: R, window: usize) -> Result<Vec<LinkingDocument>> {
    read_raw_jsonl(reader)?
        .into_iter()
        .map(|d| d.into_document(window))
        .collect()
}

pub fn write_raw_jsonl<'a, W: Write>(
    docs: impl IntoIterator<Item = &'a RawDocument>,
    writer: &mut W,
) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut *writer, d).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

const NIL: &str = "--NME--";

/// Reads the simplified CoNLL/AIDA layout described in the module docs.
pub fn read_conll<R: BufRead>(reader: R, window: usize) -> Result<Vec<LinkingDocument>> {
    struct Open {
        start: usize,
        gold: Option<String>,
        candidates: Vec<String>,
    }
    let mut raw: Vec<RawDocument> = Vec::new();
    let mut open: Option<Open> = None;

    fn close(raw: &mut [RawDocument], open: &mut Option<Open>) {
        if let (Some(doc), Some(m)) = (raw.last_mut(), open.take()) {
            doc.mentions.push(RawMention {
                start: m.start,
                end: doc.tokens.len(),
                gold: m.gold,
                candidates: m.candidates,
                priors: None,
            });
        }
    }

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if let Some(rest) = line.strip_prefix("-DOCSTART-") {
            close(&mut raw, &mut open);
            let id = rest
                .trim()
                .trim_start_matches('(')
                .trim_end_matches(')')
                .trim()
                .to_owned();
            let id = if id.is_empty() { format!("doc{}", raw.len() + 1) } else { id };
            raw.push(RawDocument {
                doc_id: id,
                tokens: Vec::new(),
                mentions: Vec::new(),
            });
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let doc = raw
            .last_mut()
            .ok_or_else(|| Error::format(Some(lineno), "token before the first -DOCSTART-"))?;
        match cols.get(1).copied() {
            Some("B") => {
                close(std::slice::from_mut(doc), &mut open);
                let gold = cols
                    .get(3)
                    .map(|g| g.trim())
                    .filter(|g| !g.is_empty() && *g != NIL)
                    .map(str::to_owned);
                let candidates = cols
                    .get(4)
                    .map(|c| {
                        c.split('|')
                            .map(str::trim)
                            .filter(|c| !c.is_empty())
                            .map(str::to_owned)
                            .collect()
                    })
                    .unwrap_or_default();
                open = Some(Open {
                    start: doc.tokens.len(),
                    gold,
                    candidates,
                });
            }
            Some("I") => {
                if open.is_none() {
                    return Err(Error::format(Some(lineno), "`I` tag without a preceding `B`"));
                }
            }
            Some(other) => {
                return Err(Error::format(Some(lineno), format!("unknown tag `{other}`")));
            }
            None => close(std::slice::from_mut(doc), &mut open),
        }
        doc.tokens.push(cols[0].to_owned());
    }
    close(&mut raw, &mut open);
    raw.into_iter()
        .filter(|d| !d.mentions.is_empty())
        .map(|d| d.into_document(window))
        .collect()
}

/// One `{"doc_id": ..., "links": [label | null, ...]}` object per line.
pub fn write_predictions<'a, W: Write>(
    preds: impl IntoIterator<Item = &'a DocLinks>,
    writer: &mut W,
) -> Result<()> {
    for p in preds {
        serde_json::to_writer(&mut *writer, p).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<Vec<DocLinks>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::format(Some(i + 1), e.to_string()))?);
    }
    Ok(out)
}

pub fn write_model<W: Write>(model: &LinkingModel, writer: &mut W) -> Result<()> {
    writeln!(
        writer,
        "{} {} {}",
        model.dim(),
        model.relations.len(),
        model.weighting.tag()
    )?;
    let mut row = |name: String, v: &[f64]| -> Result<()> {
        write!(writer, "{name}")?;
        for x in v {
            write!(writer, " {x}")?;
        }
        writeln!(writer)?;
        Ok(())
    };
    row("B".into(), &model.b)?;
    row("C".into(), &model.c)?;
    for (k, r) in model.relations.iter().enumerate() {
        row(format!("R{}", k + 1), r)?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(reader: R) -> Result<LinkingModel> {
    let mut lines = reader
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(Some(1), "empty model file"))?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (dim, k, weighting) = match fields.as_slice() {
        [d, k] | [d, k, _] => {
            let d: usize = d.parse().map_err(|_| Error::format(Some(1), "bad dimension"))?;
            let k: usize = k.parse().map_err(|_| Error::format(Some(1), "bad relation count"))?;
            let w = match fields.get(2) {
                Some(tag) => RelationWeighting::from_tag(tag)
                    .ok_or_else(|| Error::format(Some(1), format!("unknown weighting `{tag}`")))?,
                None => RelationWeighting::Uniform,
            };
            (d, k, w)
        }
        _ => return Err(Error::format(Some(1), "expected `<d> <K> [weighting]`")),
    };
    let mut diag = |expected: &str| -> Result<Vec<f64>> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::Truncated(format!("model lacks row {expected}")))?;
        let line = line?;
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap_or_default();
        if name != expected {
            return Err(Error::format(Some(i + 1), format!("expected row `{expected}`, found `{name}`")));
        }
        let v: Vec<f64> = parts
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(Some(i + 1), e.to_string()))?;
        if v.len() != dim {
            return Err(Error::format(
                Some(i + 1),
                format!("row `{expected}` has {} values, expected {dim}", v.len()),
            ));
        }
        Ok(v)
    };
    let b = diag("B")?;
    let c = diag("C")?;
    let relations = (1..=k).map(|i| diag(&format!("R{i}"))).collect::<Result<_>>()?;
    let model = LinkingModel {
        b,
        c,
        relations,
        weighting,
    };
    model.validate()?;
    Ok(model)
}
