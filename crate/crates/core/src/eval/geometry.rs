use serde::{Deserialize, Serialize};

use crate::aggregation::cosine;
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairClass {
    SameType,
    DifferentType,
}

impl PairClass {
    pub fn tag(self) -> &'static str {
        match self {
            PairClass::SameType => "same",
            PairClass::DifferentType => "different",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "same" | "same-type" => Some(PairClass::SameType),
            "different" | "different-type" | "diff" => Some(PairClass::DifferentType),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbePair {
    pub a: String,
    pub b: String,
    pub class: PairClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryRow {
    pub a: String,
    pub b: String,
    pub class: PairClass,
    pub cosine_baseline: f64,
    pub cosine_reinforced: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub rows: Vec<GeometryRow>,
    /// `None` when the probe set has no pair of that class.
    pub mean_delta_same: Option<f64>,
    pub mean_delta_different: Option<f64>,
}

impl GeometryReport {
    pub fn write_tsv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "a\tb\tclass\tcos_baseline\tcos_reinforced\tdelta")?;
        for r in &self.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{:.6}\t{:.6}\t{:+.6}",
                r.a,
                r.b,
                r.class.tag(),
                r.cosine_baseline,
                r.cosine_reinforced,
                r.delta
            )?;
        }
        Ok(())
    }
}

/// Cosine of every probe pair under both tables and the change between them.
pub fn geometry_report(
    baseline: &EmbeddingTable,
    reinforced: &EmbeddingTable,
    probes: &[ProbePair],
) -> Result<GeometryReport> {
    let get = |t: &'_ EmbeddingTable, l: &str| -> Result<Vec<f32>> {
        t.vector(l)
            .map(<[f32]>::to_vec)
            .ok_or_else(|| Error::MissingLabel(l.to_owned()))
    };
    let rows = probes
        .iter()
        .map(|p| {
            let before = cosine(&get(baseline, &p.a)?, &get(baseline, &p.b)?);
            let after = cosine(&get(reinforced, &p.a)?, &get(reinforced, &p.b)?);
            Ok(GeometryRow {
                a: p.a.clone(),
                b: p.b.clone(),
                class: p.class,
                cosine_baseline: before,
                cosine_reinforced: after,
                delta: after - before,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mean = |class: PairClass| {
        let ds: Vec<f64> = rows.iter().filter(|r| r.class == class).map(|r| r.delta).collect();
        (!ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64)
    };
    Ok(GeometryReport {
        mean_delta_same: mean(PairClass::SameType),
        mean_delta_different: mean(PairClass::DifferentType),
        rows,
    })
}

/// Reads `<a>\t<b>\t<same|different>` lines.
pub fn read_probes<R: std::io::BufRead>(reader: R) -> Result<Vec<ProbePair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [a, b, class] = cols.as_slice() else {
            return Err(Error::format(Some(i + 1), "expected `<a>\\t<b>\\t<class>`"));
        };
        let class = PairClass::from_tag(class)
            .ok_or_else(|| Error::format(Some(i + 1), format!("unknown pair class `{class}`")))?;
        out.push(ProbePair {
            a: (*a).to_owned(),
            b: (*b).to_owned(),
            class,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unchanged_table_has_zero_deltas() {
        let t = EmbeddingTable::from_rows(2, [("a", vec![1.0, 2.0]), ("b", vec![-1.0, 0.5])]).unwrap();
        let probes = [ProbePair { a: "a".into(), b: "b".into(), class: PairClass::SameType }];
        let r = geometry_report(&t, &t, &probes).unwrap();
        assert_eq!(r.rows[0].delta, 0.0);
        assert_eq!(r.mean_delta_same, Some(0.0));
        assert_eq!(r.mean_delta_different, None);
        let bad = [ProbePair { a: "a".into(), b: "zz".into(), class: PairClass::SameType }];
        assert!(matches!(geometry_report(&t, &t, &bad), Err(Error::MissingLabel(_))));
    }

    #[test]
    fn probe_file() {
        let p = read_probes("# x\na\tb\tsame\nc\td\tdifferent\n".as_bytes()).unwrap();
        assert_eq!(p[1].class, PairClass::DifferentType);
        assert!(read_probes("a\tb\n".as_bytes()).is_err());
    }
}
