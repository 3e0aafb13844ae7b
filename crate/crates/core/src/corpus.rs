//! Article records and the two on-disk corpus layouts: a line-delimited TSV
//! file (`<entity_id>\t<title>\t<text>`) and a directory of per-entity text
//! files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::text::split_first_sentence;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArticleRecord {
    pub entity_id: String,
    pub title: String,
    pub first_sentence: String,
    pub body: Option<String>,
}

impl ArticleRecord {
    /// Splits `text` into first sentence and body.
    pub fn from_text(entity_id: impl Into<String>, title: impl Into<String>, text: &str) -> Self {
        let (first, rest) = split_first_sentence(text);
        ArticleRecord {
            entity_id: entity_id.into(),
            title: title.into(),
            first_sentence: first.to_owned(),
            body: (!rest.is_empty()).then(|| rest.to_owned()),
        }
    }

    pub fn to_tsv_line(&self) -> String {
        let mut text = self.first_sentence.clone();
        if let Some(body) = &self.body {
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(body);
        }
        format!("{}\t{}\t{}", self.entity_id, self.title, flatten(&text))
    }
}

fn flatten(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

/// Streaming reader over a TSV corpus. Blank lines and `#` comments are
/// skipped.
pub struct TsvArticles<R> {
    reader: R,
    line: String,
    lineno: usize,
}

impl<R: BufRead> TsvArticles<R> {
    pub fn new(reader: R) -> Self {
        TsvArticles {
            reader,
            line: String::new(),
            lineno: 0,
        }
    }
}

impl<R: BufRead> Iterator for TsvArticles<R> {
    type Item = Result<ArticleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line.clear();
            match self.reader.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.lineno += 1;
            let line = self.line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(3, '\t');
            let (Some(id), Some(title), Some(text)) = (parts.next(), parts.next(), parts.next())
            else {
                return Some(Err(Error::format(
                    Some(self.lineno),
                    "expected `<entity_id>\\t<title>\\t<text>`",
                )));
            };
            if id.is_empty() {
                return Some(Err(Error::format(Some(self.lineno), "empty entity id")));
            }
            return Some(Ok(ArticleRecord::from_text(id, title, text)));
        }
    }
}

pub fn open_tsv(path: impl AsRef<Path>) -> Result<TsvArticles<BufReader<File>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io_path(path, e))?;
    Ok(TsvArticles::new(BufReader::new(file)))
}

/// Reads a corpus from either a TSV file or a directory of `*.txt` files
/// (entity id = file stem, title = stem with underscores as spaces). Directory
/// entries are returned sorted by file name.
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<ArticleRecord>> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io_path(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let stem = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let mut text = String::new();
                File::open(&p)
                    .and_then(|mut f| f.read_to_string(&mut text))
                    .map_err(|e| Error::io_path(&p, e))?;
                let title = stem.replace('_', " ");
                Ok(ArticleRecord::from_text(stem, title, &text))
            })
            .collect()
    } else {
        open_tsv(path)?.collect()
    }
}

pub fn write_tsv<'a, W: Write>(
    articles: impl IntoIterator<Item = &'a ArticleRecord>,
    writer: &mut W,
) -> Result<()> {
    for a in articles {
        writeln!(writer, "{}", a.to_tsv_line())?;
    }
    Ok(())
}
