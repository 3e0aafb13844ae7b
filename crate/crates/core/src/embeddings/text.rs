//! Plain-text format: one `<label> v1 ... vd` row per line.
//!
//! Values are written with Rust's shortest round-trip formatting (at most 9
//! significant digits for `f32`), so text round trips are exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingTable;
use crate::error::{Error, Result};

pub fn load_text(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io_path(path, e))?;
    read_text(file)
}

pub fn read_text<R: Read>(reader: R) -> Result<EmbeddingTable> {
    let mut reader = BufReader::new(reader);
    let mut table: Option<EmbeddingTable> = None;
    let mut line = Vec::new();
    let mut values = Vec::new();
    let mut lineno = 0;
    loop {
        line.clear();
        if reader.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        lineno += 1;
        let mut fields = line
            .split(|b| b.is_ascii_whitespace())
            .filter(|f| !f.is_empty());
        let Some(label) = fields.next() else {
            continue;
        };
        values.clear();
        for field in fields {
            let v: f32 = std::str::from_utf8(field)
                .ok()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| {
                    Error::format(
                        Some(lineno),
                        format!("`{}` is not a number", String::from_utf8_lossy(field)),
                    )
                })?;
            values.push(v);
        }
        let table = match &mut table {
            Some(t) => t,
            None => {
                if values.is_empty() {
                    return Err(Error::format(Some(lineno), "row has no values"));
                }
                table.insert(EmbeddingTable::new(values.len())?)
            }
        };
        if values.len() != table.dim() {
            return Err(Error::format(
                Some(lineno),
                format!(
                    "ragged row: {} values, expected {}",
                    values.len(),
                    table.dim()
                ),
            ));
        }
        table.push(label, &values).map_err(|e| match e {
            Error::Value(m) => Error::format(Some(lineno), m),
            other => other,
        })?;
    }
    table.ok_or_else(|| Error::format(None, "no rows; dimension cannot be inferred"))
}

pub fn save_text(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io_path(path, e))?;
    let mut writer = BufWriter::new(file);
    write_text(table, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn write_text<W: Write>(table: &EmbeddingTable, writer: &mut W) -> Result<()> {
    for row in table.iter() {
        writer.write_all(row.label)?;
        for v in row.values {
            write!(writer, " {v}")?;
        }
        writer.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_dimension() {
        let t = read_text(&b"a 1.0 2.0\n"[..]).unwrap();
        assert_eq!(t.dim(), 2);
        assert_eq!(t.vector("a").unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = read_text(&b"a 1 2 3\nb 1 2\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(2), .. }), "{err}");
    }

    #[test]
    fn bad_number_and_empty_input() {
        assert!(matches!(read_text(&b"a 1 x\n"[..]), Err(Error::Format { line: Some(1), .. })));
        assert!(matches!(read_text(&b"a 1 nan\n"[..]), Err(Error::Format { .. })));
        assert!(matches!(read_text(&b"\n\n"[..]), Err(Error::Format { .. })));
        assert!(matches!(read_text(&b"a\n"[..]), Err(Error::Format { .. })));
    }

    #[test]
    fn blank_lines_and_crlf_tolerated() {
        let t = read_text(&b"a 1 2\r\n\r\nb 3 4\r\n"[..]).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.vector("b").unwrap(), &[3.0, 4.0]);
    }

    #[test]
    fn writes_shortest_roundtrip_values() {
        let t = EmbeddingTable::from_rows(2, [("a", vec![0.1, -3.0])]).unwrap();
        let mut out = Vec::new();
        write_text(&t, &mut out).unwrap();
        assert_eq!(out, b"a 0.1 -3\n");
    }
}
