use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linking::LinkingDocument;

/// Links of one document, one slot per mention. `None` is an abstention in
/// predictions and a NIL (out-of-KB) mention in gold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocLinks {
    pub doc_id: String,
    pub links: Vec<Option<String>>,
}

impl DocLinks {
    pub fn gold_of(doc: &LinkingDocument) -> Self {
        DocLinks {
            doc_id: doc.doc_id.clone(),
            links: doc.mentions.iter().map(|m| m.gold.clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocCounts {
    pub doc_id: String,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub per_doc: Vec<DocCounts>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Micro-averaged precision, recall and F1 over in-KB gold mentions.
///
/// A correct link is a true positive. A wrong link is a false positive and a
/// false negative. An abstention is a false negative. Gold NIL mentions are
/// ignored. Documents are matched by id; order does not matter.
pub fn micro_f1(predictions: &[DocLinks], gold: &[DocLinks]) -> Result<EvalReport> {
    let mut offenders = Vec::new();
    let by_id: std::collections::HashMap<&str, &DocLinks> =
        predictions.iter().map(|p| (p.doc_id.as_str(), p)).collect();
    if by_id.len() != predictions.len() {
        offenders.push("duplicate document ids in predictions".to_owned());
    }
    let mut gold_ids = std::collections::HashSet::new();
    for g in gold {
        if !gold_ids.insert(g.doc_id.as_str()) {
            offenders.push(format!("duplicate gold document `{}`", g.doc_id));
        }
        match by_id.get(g.doc_id.as_str()) {
            None => offenders.push(format!("`{}` missing from predictions", g.doc_id)),
            Some(p) if p.links.len() != g.links.len() => offenders.push(format!(
                "`{}`: {} predicted vs {} gold mentions",
                g.doc_id,
                p.links.len(),
                g.links.len()
            )),
            Some(_) => {}
        }
    }
    for p in predictions {
        if !gold_ids.contains(p.doc_id.as_str()) {
            offenders.push(format!("`{}` has no gold", p.doc_id));
        }
    }
    if !offenders.is_empty() {
        return Err(Error::Alignment(offenders));
    }

    let mut per_doc = Vec::with_capacity(gold.len());
    for g in gold {
        let p = by_id[g.doc_id.as_str()];
        let mut c = DocCounts {
            doc_id: g.doc_id.clone(),
            ..DocCounts::default()
        };
        for (pred, truth) in p.links.iter().zip(&g.links) {
            let Some(truth) = truth else { continue };
            match pred {
                Some(pred) if pred == truth => c.tp += 1,
                Some(_) => {
                    c.fp += 1;
                    c.fn_ += 1;
                }
                None => c.fn_ += 1,
            }
        }
        per_doc.push(c);
    }
    let tp = per_doc.iter().map(|c| c.tp).sum();
    let fp = per_doc.iter().map(|c| c.fp).sum();
    let fn_ = per_doc.iter().map(|c| c.fn_).sum();
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    Ok(EvalReport {
        tp,
        fp,
        fn_,
        micro_precision: p,
        micro_recall: r,
        micro_f1: f1,
        per_doc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn links(id: &str, l: &[Option<&str>]) -> DocLinks {
        DocLinks {
            doc_id: id.into(),
            links: l.iter().map(|x| x.map(String::from)).collect(),
        }
    }

    #[test]
    fn perfect_and_empty() {
        let g = [links("a", &[Some("X"), Some("Y")])];
        assert_eq!(micro_f1(&g, &g).unwrap().micro_f1, 1.0);
        let r = micro_f1(&[links("a", &[None, None])], &g).unwrap();
        assert_eq!((r.micro_precision, r.micro_recall, r.micro_f1), (0.0, 0.0, 0.0));
        assert_eq!(r.fn_, 2);
    }

    #[test]
    fn nil_gold_is_ignored() {
        let g = [links("a", &[Some("X"), None])];
        let r = micro_f1(&[links("a", &[Some("X"), Some("Z")])], &g).unwrap();
        assert_eq!((r.tp, r.fp, r.fn_), (1, 0, 0));
    }

    #[test]
    fn alignment_errors_list_offenders() {
        let g = [links("a", &[Some("X")]), links("b", &[Some("X")])];
        let p = [links("a", &[Some("X"), None]), links("c", &[None])];
        let Err(Error::Alignment(off)) = micro_f1(&p, &g) else {
            panic!("expected alignment error")
        };
        assert_eq!(off.len(), 3, "{off:?}");
    }
}
