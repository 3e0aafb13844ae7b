//! End-to-end driver: dict -> types -> semantic -> aggregate -> link -> eval.
//!
//! Each stage writes its artifacts as `<name>.partial` and renames them once
//! the stage succeeds. `manifest.json` in the output directory records the
//! parameters and the SHA-256 of every input and output; a stage whose
//! record still matches is skipped.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{parse_pairs, PipelineConfig, Stage};
pub use manifest::{hash_file, Manifest, StageRecord, MANIFEST_FILE};

use crate::aggregation::{reinforce_with_semantic, semantic_table};
use crate::corpus::read_corpus;
use crate::dictionary::{
    build_dictionary, mine_noun_frequency_parallel, HeuristicNounTagger, SemanticTypeDictionary,
    DEFAULT_NOUN_THRESHOLD,
};
use crate::embeddings::{load_binary, save_binary, EmbeddingTable};
use crate::error::{Error, Result};
use crate::eval::{summarize_runs, DocLinks, MultiRunSummary};
use crate::extraction::{extract_corpus_parallel, read_assignments, write_assignments};
use crate::linking::io::{read_jsonl, write_model, write_predictions};
use crate::linking::{link_document, train, LinkingDocument, LinkingModel, LinkingTables, TrainConfig};

pub const NOUNS_OUT: &str = "nouns.tsv";
pub const DICTIONARY_OUT: &str = "dictionary.txt";
pub const REMAP_OUT: &str = "remap.tsv";
pub const TYPES_OUT: &str = "types.tsv";
pub const SEMANTIC_OUT: &str = "semantic.bin";
pub const REINFORCED_OUT: &str = "reinforced.bin";
pub const MODEL_OUT: &str = "model.txt";
pub const PREDICTIONS_OUT: &str = "predictions.jsonl";
pub const TRACE_OUT: &str = "link_trace.json";
pub const EVAL_OUT: &str = "eval.json";

fn outputs_of(stage: Stage) -> &'static [&'static str] {
    match stage {
        Stage::Dict => &[NOUNS_OUT, DICTIONARY_OUT, REMAP_OUT],
        Stage::Types => &[TYPES_OUT],
        Stage::Semantic => &[SEMANTIC_OUT],
        Stage::Aggregate => &[REINFORCED_OUT],
        Stage::Link => &[MODEL_OUT, PREDICTIONS_OUT, TRACE_OUT],
        Stage::Eval => &[EVAL_OUT],
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PipelineReport {
    pub ran: Vec<&'static str>,
    pub skipped: Vec<&'static str>,
}

/// Named inputs of one stage. Optional inputs that are not configured are
/// absent.
type Inputs = BTreeMap<&'static str, PathBuf>;

/// Produced by an earlier enabled stage, else the configured path, else a
/// leftover artifact from an earlier run.
fn upstream(cfg: &PipelineConfig, producer: Stage, key: &str, file: &str) -> PathBuf {
    match cfg.path(key) {
        Some(p) if !cfg.is_enabled(producer) => p.to_path_buf(),
        _ => cfg.output_dir.join(file),
    }
}

fn required(cfg: &PipelineConfig, key: &str) -> Result<PathBuf> {
    cfg.path(key)
        .map(Path::to_path_buf)
        .ok_or_else(|| Error::Config(format!("`{key}` is required by an enabled stage")))
}

fn stage_inputs(cfg: &PipelineConfig, stage: Stage) -> Result<Inputs> {
    let mut m = Inputs::new();
    match stage {
        Stage::Dict => {
            m.insert("corpus", required(cfg, "corpus")?);
            m.insert("dict_seeds", required(cfg, "dict_seeds")?);
            m.insert("word_embeddings", required(cfg, "word_embeddings")?);
            for key in ["dict_extensions", "dict_remap"] {
                if let Some(p) = cfg.path(key) {
                    m.insert(key, p.to_path_buf());
                }
            }
        }
        Stage::Types => {
            m.insert("corpus", required(cfg, "corpus")?);
            m.insert("dictionary", upstream(cfg, Stage::Dict, "dictionary", DICTIONARY_OUT));
            if cfg.is_enabled(Stage::Dict) || cfg.path("remap").is_some() {
                m.insert("remap", upstream(cfg, Stage::Dict, "remap", REMAP_OUT));
            }
        }
        Stage::Semantic => {
            m.insert("types", upstream(cfg, Stage::Types, "types", TYPES_OUT));
            m.insert("word_embeddings", required(cfg, "word_embeddings")?);
        }
        Stage::Aggregate => {
            m.insert("wikitext_embeddings", required(cfg, "wikitext_embeddings")?);
            m.insert("semantic", upstream(cfg, Stage::Semantic, "semantic", SEMANTIC_OUT));
        }
        Stage::Link | Stage::Eval => {
            m.insert("train", required(cfg, "train")?);
            m.insert("dev", required(cfg, "dev")?);
            m.insert("word_embeddings", required(cfg, "word_embeddings")?);
            m.insert("reinforced", upstream(cfg, Stage::Aggregate, "reinforced", REINFORCED_OUT));
            if stage == Stage::Eval {
                m.insert("wikitext_embeddings", required(cfg, "wikitext_embeddings")?);
            }
        }
    }
    Ok(m)
}

/// Every configured path must exist, and every enabled stage's inputs must
/// exist or be produced by an earlier enabled stage.
pub fn validate(cfg: &PipelineConfig) -> Result<()> {
    for (key, path) in &cfg.paths {
        if !path.exists() {
            return Err(Error::Config(format!("`{key}` path {} does not exist", path.display())));
        }
    }
    let mut produced: Vec<PathBuf> = Vec::new();
    for stage in Stage::ALL.into_iter().filter(|s| cfg.is_enabled(*s)) {
        for (key, path) in stage_inputs(cfg, stage)? {
            if !path.exists() && !produced.contains(&path) {
                return Err(Error::Config(format!(
                    "stage `{}`: input `{key}` ({}) is neither configured nor produced by an enabled stage",
                    stage.name(),
                    path.display()
                )));
            }
        }
        produced.extend(outputs_of(stage).iter().map(|f| cfg.output_dir.join(f)));
    }
    Ok(())
}

fn partial(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".partial");
    PathBuf::from(s)
}

fn hash_inputs(inputs: &Inputs) -> Result<BTreeMap<String, String>> {
    inputs
        .values()
        .map(|p| Ok((p.display().to_string(), hash_file(p)?)))
        .collect()
}

fn up_to_date(record: &StageRecord, params: &BTreeMap<String, String>, inputs: &BTreeMap<String, String>, dir: &Path) -> bool {
    record.params == *params
        && record.inputs == *inputs
        && record
            .outputs
            .iter()
            .all(|(name, hash)| hash_file(&dir.join(name)).is_ok_and(|h| h == *hash))
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    validate(cfg)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io_path(dir, e))?;
    let mut manifest = Manifest::load(dir)?;
    let mut report = PipelineReport::default();

    for stage in Stage::ALL.into_iter().filter(|s| cfg.is_enabled(*s)) {
        let name = stage.name();
        let wrap = |e: Error| Error::Stage {
            stage: name.to_owned(),
            source: Box::new(e),
        };
        let inputs = stage_inputs(cfg, stage)?;
        let input_hashes = hash_inputs(&inputs).map_err(wrap)?;
        let params = cfg.stage_params(stage);
        if manifest
            .stages
            .get(name)
            .is_some_and(|r| up_to_date(r, &params, &input_hashes, dir))
        {
            log::info!("stage {name}: up to date");
            report.skipped.push(name);
            continue;
        }
        log::info!("stage {name}: running");
        let outs: BTreeMap<&str, PathBuf> = outputs_of(stage)
            .iter()
            .map(|f| (*f, partial(&dir.join(f))))
            .collect();
        run_stage(cfg, stage, &inputs, &outs).map_err(wrap)?;
        let mut outputs = BTreeMap::new();
        for (file, tmp) in &outs {
            let fin = dir.join(file);
            fs::rename(tmp, &fin).map_err(|e| wrap(Error::io_path(&fin, e)))?;
            outputs.insert((*file).to_owned(), hash_file(&fin).map_err(wrap)?);
        }
        manifest.stages.insert(
            name.to_owned(),
            StageRecord {
                params,
                inputs: input_hashes,
                outputs,
            },
        );
        manifest.save(dir)?;
        report.ran.push(name);
    }
    manifest.save(dir)?;
    Ok(report)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io_path(path, e))?))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io_path(path, e))
}

fn read_docs(path: &Path, window: usize) -> Result<Vec<LinkingDocument>> {
    let file = File::open(path).map_err(|e| Error::io_path(path, e))?;
    read_jsonl(BufReader::new(file), window)
}

fn load_entities(path: &Path, normalize: bool) -> Result<EmbeddingTable> {
    let t = load_binary(path)?;
    Ok(if normalize { t.normalized() } else { t })
}

fn run_stage(
    cfg: &PipelineConfig,
    stage: Stage,
    inputs: &Inputs,
    outs: &BTreeMap<&str, PathBuf>,
) -> Result<()> {
    match stage {
        Stage::Dict => {
            let articles = read_corpus(&inputs["corpus"])?;
            let report = mine_noun_frequency_parallel(&articles, &HeuristicNounTagger, rayon::current_num_threads());
            let words = load_binary(&inputs["word_embeddings"])?;
            let opt = |k: &str| inputs.get(k).map(|p| read_text(p)).transpose().map(Option::unwrap_or_default);
            let dict = build_dictionary(
                &report,
                &read_text(&inputs["dict_seeds"])?,
                &opt("dict_extensions")?,
                &opt("dict_remap")?,
                &words,
            )?;
            let mut w = create(&outs[NOUNS_OUT])?;
            report.write_tsv(DEFAULT_NOUN_THRESHOLD, &mut w)?;
            w.flush()?;
            let mut w = create(&outs[DICTIONARY_OUT])?;
            dict.write_words(&mut w)?;
            w.flush()?;
            let mut w = create(&outs[REMAP_OUT])?;
            dict.write_remap(&mut w)?;
            w.flush()?;
        }
        Stage::Types => {
            let remap = inputs.get("remap").map(|p| read_text(p)).transpose()?.unwrap_or_default();
            let dict = SemanticTypeDictionary::parse(&read_text(&inputs["dictionary"])?, &remap)?;
            let articles = read_corpus(&inputs["corpus"])?;
            let assignments = extract_corpus_parallel(&articles, &dict, cfg.cap)?;
            let mut w = create(&outs[TYPES_OUT])?;
            write_assignments(assignments.values(), &mut w)?;
            w.flush()?;
        }
        Stage::Semantic => {
            let file = File::open(&inputs["types"]).map_err(|e| Error::io_path(&inputs["types"], e))?;
            let assignments = read_assignments(BufReader::new(file))?;
            let words = load_binary(&inputs["word_embeddings"])?;
            let table = semantic_table(&assignments, &words, &cfg.aggregation)?;
            save_binary(&table, &outs[SEMANTIC_OUT])?;
        }
        Stage::Aggregate => {
            let wikitext = load_binary(&inputs["wikitext_embeddings"])?;
            let semantic = load_binary(&inputs["semantic"])?;
            let table = reinforce_with_semantic(&wikitext, &semantic, cfg.aggregation.alpha)?;
            save_binary(&table, &outs[REINFORCED_OUT])?;
        }
        Stage::Link => {
            let train_docs = read_docs(&inputs["train"], cfg.window)?;
            let dev_docs = read_docs(&inputs["dev"], cfg.window)?;
            let words = load_binary(&inputs["word_embeddings"])?;
            let entities = load_entities(&inputs["reinforced"], cfg.normalize)?;
            let tables = LinkingTables { words: &words, entities: &entities };
            let tc = TrainConfig {
                seed: cfg.seeds[0],
                ..cfg.train.clone()
            };
            let out = train(&train_docs, &dev_docs, tables, &tc, LinkingModel::identity(entities.dim()))?;
            let mut w = create(&outs[MODEL_OUT])?;
            write_model(&out.model, &mut w)?;
            w.flush()?;
            let preds = dev_docs
                .par_iter()
                .map(|d| {
                    Ok(DocLinks {
                        doc_id: d.doc_id.clone(),
                        links: link_document(d, &out.model, tables, tc.strategy)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut w = create(&outs[PREDICTIONS_OUT])?;
            write_predictions(&preds, &mut w)?;
            w.flush()?;
            let mut w = create(&outs[TRACE_OUT])?;
            let trace = serde_json::json!({ "initial_dev_f1": out.initial_dev_f1, "epochs": out.trace });
            serde_json::to_writer_pretty(&mut w, &trace).map_err(std::io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
        }
        Stage::Eval => {
            let train_docs = read_docs(&inputs["train"], cfg.window)?;
            let dev_docs = read_docs(&inputs["dev"], cfg.window)?;
            let words = load_binary(&inputs["word_embeddings"])?;
            let baseline = load_entities(&inputs["wikitext_embeddings"], cfg.normalize)?;
            let reinforced = load_entities(&inputs["reinforced"], cfg.normalize)?;
            let runs = |entities: &EmbeddingTable| -> Result<MultiRunSummary> {
                let tables = LinkingTables { words: &words, entities };
                let scores = cfg
                    .seeds
                    .par_iter()
                    .map(|&seed| {
                        let tc = TrainConfig { seed, ..cfg.train.clone() };
                        let out = train(&train_docs, &dev_docs, tables, &tc, LinkingModel::identity(entities.dim()))?;
                        let last = out.trace.last().map_or(out.initial_dev_f1, |e| e.dev_f1);
                        Ok(last.unwrap_or(0.0))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                Ok(summarize_runs(&scores))
            };
            let summary = serde_json::json!({
                "baseline": runs(&baseline)?,
                "reinforced": runs(&reinforced)?,
            });
            let mut w = create(&outs[EVAL_OUT])?;
            serde_json::to_writer_pretty(&mut w, &summary).map_err(std::io::Error::from)?;
            writeln!(w)?;
            w.flush()?;
        }
    }
    Ok(())
}
