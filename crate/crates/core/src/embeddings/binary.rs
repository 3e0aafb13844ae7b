//! word2vec-compatible binary format.
//!
//! ```text
//! <count> <dim>\n
//! (<label bytes> 0x20 <dim little-endian f32>) [0x0A]   x count
//! ```
//!
//! The newline after each entry is optional when reading and never written.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingTable;
use crate::error::{Error, Result};

pub fn load_binary(path: impl AsRef<Path>) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io_path(path, e))?;
    parse_binary(&bytes)
}

pub fn read_binary<R: Read>(mut reader: R) -> Result<EmbeddingTable> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    parse_binary(&bytes)
}

pub fn save_binary(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io_path(path, e))?;
    let mut writer = BufWriter::new(file);
    write_binary(table, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(table: &EmbeddingTable, writer: &mut W) -> Result<()> {
    write!(writer, "{} {}\n", table.len(), table.dim())?;
    let mut buf = Vec::with_capacity(table.dim() * 4);
    for row in table.iter() {
        writer.write_all(row.label)?;
        writer.write_all(b" ")?;
        buf.clear();
        for v in row.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

fn parse_header(bytes: &[u8]) -> Result<(usize, usize, usize)> {
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format(Some(1), "missing header line"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| Error::format(Some(1), "header is not ASCII"))?;
    let mut fields = header.split(' ');
    let mut number = |what: &str| -> Result<usize> {
        let field = fields
            .next()
            .ok_or_else(|| Error::format(Some(1), format!("header lacks {what}")))?;
        if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::format(
                Some(1),
                format!("header {what} `{field}` is not a non-negative integer"),
            ));
        }
        field
            .parse()
            .map_err(|_| Error::format(Some(1), format!("header {what} `{field}` out of range")))
    };
    let count = number("count")?;
    let dim = number("dimension")?;
    if fields.next().is_some() {
        return Err(Error::format(Some(1), "header has more than two fields"));
    }
    if dim == 0 {
        return Err(Error::format(Some(1), "header dimension must be positive"));
    }
    Ok((count, dim, nl + 1))
}

pub(crate) fn parse_binary(bytes: &[u8]) -> Result<EmbeddingTable> {
    let (count, dim, mut pos) = parse_header(bytes)?;
    let vec_bytes = dim
        .checked_mul(4)
        .ok_or_else(|| Error::format(Some(1), "dimension too large"))?;
    // Cap the up-front reservation by what the file can actually hold.
    let plausible = count.min(bytes.len() / (vec_bytes + 2).max(1) + 1);
    let mut table = EmbeddingTable::with_capacity(dim, plausible)?;
    let mut values = vec![0f32; dim];

    for entry in 0..count {
        if entry > 0 && bytes.get(pos) == Some(&b'\n') {
            pos += 1;
        }
        let rest = &bytes[pos..];
        let space = match rest.iter().position(|&b| b == b' ' || b == b'\n') {
            Some(i) if rest[i] == b' ' => i,
            Some(_) => {
                return Err(Error::format(
                    None,
                    format!("entry {entry}: newline inside label"),
                ))
            }
            None => {
                return Err(Error::Truncated(format!(
                    "entry {entry} of {count}: label not terminated"
                )))
            }
        };
        if space == 0 {
            return Err(Error::format(None, format!("entry {entry}: empty label")));
        }
        let label = &rest[..space];
        pos += space + 1;
        let raw = bytes.get(pos..pos + vec_bytes).ok_or_else(|| {
            Error::Truncated(format!(
                "entry {entry} of {count} (`{}`): expected {vec_bytes} vector bytes, found {}",
                String::from_utf8_lossy(label),
                bytes.len() - pos
            ))
        })?;
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(Error::Value(format!(
                    "non-finite component in `{}`",
                    String::from_utf8_lossy(label)
                )));
            }
        }
        pos += vec_bytes;
        table.push_unchecked_values(label.into(), &values)?;
    }

    let tail = &bytes[pos..];
    if !(tail.is_empty() || (count > 0 && tail == b"\n")) {
        return Err(Error::format(
            None,
            format!("{} unexpected trailing bytes after {count} entries", tail.len()),
        ));
    }
    Ok(table)
}
