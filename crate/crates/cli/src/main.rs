use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semlink_core::aggregation::{
    aggregate_table, coverage_histogram, neighbor_report, semantic_table, AggregationConfig,
};
use semlink_core::corpus::read_corpus;
use semlink_core::dictionary::{
    build_dictionary, expand_seeds, mine_noun_frequency_parallel, parse_word_list, HeuristicNounTagger,
    SemanticTypeDictionary, DEFAULT_EXPANSION_K, DEFAULT_NOUN_THRESHOLD,
};
use semlink_core::embeddings::{load_binary, load_text, save_binary, save_text, EmbeddingTable};
use semlink_core::eval::{
    convergence_experiment, geometry_report, micro_f1, read_probes, summarize_runs, ConvergenceConfig,
    DocLinks,
};
use semlink_core::extraction::{extract_corpus_parallel, read_assignments, write_assignments, DEFAULT_CAP};
use semlink_core::fixtures::{make_fixtures, FixtureSizes};
use semlink_core::linking::io::{read_conll, read_jsonl, read_model, read_predictions, write_model, write_predictions};
use semlink_core::linking::{
    document_score, infer, link_document, train, LinkingDocument, LinkingModel, LinkingTables, Strategy,
    TrainConfig, DEFAULT_WINDOW,
};
use semlink_core::pipeline::{run_pipeline, PipelineConfig};
use semlink_core::text::tokens;
use semlink_core::{Error, Result};

#[derive(Parser)]
#[command(name = "semlink", version, about = "Semantic-type reinforced entity embeddings and entity linking")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the type-word dictionary.
    #[command(subcommand)]
    Dict(DictCmd),
    /// Extract type words per entity.
    #[command(subcommand)]
    Types(TypesCmd),
    /// Convert, reinforce and inspect embedding tables.
    #[command(subcommand)]
    Embed(EmbedCmd),
    /// Train, apply and inspect linking models.
    #[command(subcommand)]
    Link(LinkCmd),
    /// Evaluation reports.
    #[command(subcommand)]
    Eval(EvalCmd),
    /// Run the configured end-to-end pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCmd),
    /// Synthetic data.
    #[command(subcommand)]
    Fixtures(FixturesCmd),
}

#[derive(Subcommand)]
enum DictCmd {
    /// Count nouns in first sentences.
    Mine {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NOUN_THRESHOLD)]
        threshold: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Nearest corpus words of each seed word.
    Expand {
        /// Word list, one seed per line.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EXPANSION_K)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge seeds and extensions into a validated dictionary.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        extensions: Option<PathBuf>,
        #[arg(long)]
        remap: Option<PathBuf>,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out_dictionary: PathBuf,
        #[arg(long)]
        out_remap: PathBuf,
    },
}

#[derive(Subcommand)]
enum TypesCmd {
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        dictionary: PathBuf,
        #[arg(long)]
        remap: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Binary,
    Text,
}

#[derive(Subcommand)]
enum EmbedCmd {
    /// Convert between binary and text tables.
    Convert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "binary")]
        from: TableFormat,
        #[arg(long, value_enum, default_value = "text")]
        to: TableFormat,
    },
    /// Blend entity vectors with the mean of their type-word vectors.
    Reinforce {
        #[arg(long)]
        wikitext: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        types: PathBuf,
        /// Maximum number of type words averaged per entity.
        #[arg(short = 'T', long = "max-words", default_value_t = 11)]
        max_words: usize,
        #[arg(long, default_value_t = 0.2)]
        alpha: f32,
        #[arg(long)]
        out: PathBuf,
        /// Also write the semantic table.
        #[arg(long)]
        semantic_out: Option<PathBuf>,
    },
    /// Top-k cosine neighbours of a label.
    Neighbors {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
}

#[derive(Args)]
struct LinkInputs {
    #[arg(long)]
    words: PathBuf,
    #[arg(long)]
    entities: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    window: usize,
    /// Unit-normalize entity vectors.
    #[arg(long)]
    normalize: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Greedy,
    Exhaustive,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Greedy => Strategy::GreedyLocal,
            StrategyArg::Exhaustive => Strategy::Exhaustive,
        }
    }
}

#[derive(Subcommand)]
enum LinkCmd {
    Train {
        #[command(flatten)]
        inputs: LinkInputs,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train_pairwise: bool,
        #[arg(long, value_enum, default_value = "greedy")]
        strategy: StrategyArg,
        #[arg(long)]
        model_out: PathBuf,
        /// Per-epoch loss and dev F1 as JSON.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    Infer {
        #[command(flatten)]
        inputs: LinkInputs,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "greedy")]
        strategy: StrategyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Document score of the inferred and the gold assignment.
    Score {
        #[command(flatten)]
        inputs: LinkInputs,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "exhaustive")]
        strategy: StrategyArg,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// Micro F1 of predictions against a gold corpus.
    F1 {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        gold: PathBuf,
    },
    /// Mean and 95% interval of per-run scores.
    Runs {
        /// Scores; read one per line from stdin when omitted.
        scores: Vec<f64>,
    },
    /// Epochs to a dev F1 threshold, baseline vs reinforced.
    Converge {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        words: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        reinforced: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        #[arg(long, default_value_t = 200)]
        max_epochs: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 0.01)]
        learning_rate: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mean dev F1 per epoch for plotting.
        #[arg(long)]
        curves: Option<PathBuf>,
    },
    /// Cosine change of probe pairs between two tables.
    Geometry {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        reinforced: PathBuf,
        #[arg(long)]
        probes: PathBuf,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override a config entry, `key=value`. Repeatable.
        #[arg(long = "set")]
        overrides: Vec<String>,
    },
}

#[derive(Subcommand)]
enum FixturesCmd {
    Make {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Empty but valid files.
        #[arg(long)]
        empty: bool,
        #[arg(long)]
        entities: Option<usize>,
        #[arg(long)]
        train_docs: Option<usize>,
        #[arg(long)]
        dev_docs: Option<usize>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| io_err(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(path: &Path, e: io::Error) -> Error {
    Error::IoPath {
        path: path.to_path_buf(),
        source: e,
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?))
}

/// `.jsonl`/`.json` files are JSON lines, anything else the CoNLL layout.
fn read_docs(path: &Path, window: usize) -> Result<Vec<LinkingDocument>> {
    let jsonl = path.extension().is_some_and(|e| e == "jsonl" || e == "json");
    if jsonl {
        read_jsonl(open(path)?, window)
    } else {
        read_conll(open(path)?, window)
    }
}

fn load_entities(path: &Path, normalize: bool) -> Result<EmbeddingTable> {
    let t = load_binary(path)?;
    Ok(if normalize { t.normalized() } else { t })
}

fn to_json<T: serde::Serialize>(value: &T, w: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Dict(c) => dict(c),
        Command::Types(TypesCmd::Extract {
            corpus,
            dictionary,
            remap,
            cap,
            out,
        }) => {
            let remap = remap.as_deref().map(read_text).transpose()?.unwrap_or_default();
            let dict = SemanticTypeDictionary::parse(&read_text(&dictionary)?, &remap)?;
            let articles = read_corpus(&corpus)?;
            let assignments = extract_corpus_parallel(&articles, &dict, cap)?;
            let mut w = output(out.as_deref())?;
            write_assignments(assignments.values(), &mut w)?;
            w.flush()?;
            Ok(())
        }
        Command::Embed(c) => embed(c),
        Command::Link(c) => link(c),
        Command::Eval(c) => eval(c),
        Command::Pipeline(PipelineCmd::Run { config, overrides }) => {
            let cfg = PipelineConfig::load(&config, &overrides)?;
            let report = run_pipeline(&cfg)?;
            to_json(&report, &mut io::stdout().lock())
        }
        Command::Fixtures(FixturesCmd::Make {
            out,
            seed,
            empty,
            entities,
            train_docs,
            dev_docs,
            dim,
        }) => {
            let mut sizes = if empty { FixtureSizes::zero() } else { FixtureSizes::default() };
            if let Some(n) = entities {
                sizes.entities = n;
            }
            if let Some(n) = train_docs {
                sizes.train_docs = n;
            }
            if let Some(n) = dev_docs {
                sizes.dev_docs = n;
            }
            if let Some(n) = dim {
                sizes.dim = n;
            }
            make_fixtures(seed, &sizes)?.write(&out)
        }
    }
}

fn dict(cmd: DictCmd) -> Result<()> {
    let shards = std::thread::available_parallelism().map_or(1, |n| n.get());
    match cmd {
        DictCmd::Mine { corpus, threshold, out } => {
            let articles = read_corpus(&corpus)?;
            let report = mine_noun_frequency_parallel(&articles, &HeuristicNounTagger, shards);
            let mut w = output(out.as_deref())?;
            report.write_tsv(threshold, &mut w)?;
            w.flush()?;
        }
        DictCmd::Expand {
            seeds,
            embeddings,
            corpus,
            k,
            out,
        } => {
            let seeds: Vec<String> = parse_word_list(&read_text(&seeds)?)?.into_iter().map(|(w, _)| w).collect();
            let table = load_binary(&embeddings)?;
            let mut vocab = HashSet::new();
            for a in read_corpus(&corpus)? {
                vocab.extend(tokens(&a.first_sentence));
                if let Some(b) = &a.body {
                    vocab.extend(tokens(b));
                }
            }
            let mut w = output(out.as_deref())?;
            for e in expand_seeds(&seeds, &vocab, &table, k)? {
                for (word, score) in &e.neighbors {
                    writeln!(w, "{}\t{word}\t{score:.6}", e.seed)?;
                }
            }
            w.flush()?;
        }
        DictCmd::Build {
            corpus,
            seeds,
            extensions,
            remap,
            embeddings,
            out_dictionary,
            out_remap,
        } => {
            let articles = read_corpus(&corpus)?;
            let report = mine_noun_frequency_parallel(&articles, &HeuristicNounTagger, shards);
            let opt = |p: &Option<PathBuf>| p.as_deref().map(read_text).transpose().map(Option::unwrap_or_default);
            let dict = build_dictionary(
                &report,
                &read_text(&seeds)?,
                &opt(&extensions)?,
                &opt(&remap)?,
                &load_binary(&embeddings)?,
            )?;
            let mut w = output(Some(&out_dictionary))?;
            dict.write_words(&mut w)?;
            w.flush()?;
            let mut w = output(Some(&out_remap))?;
            dict.write_remap(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn embed(cmd: EmbedCmd) -> Result<()> {
    match cmd {
        EmbedCmd::Convert { input, output, from, to } => {
            let table = match from {
                TableFormat::Binary => load_binary(&input)?,
                TableFormat::Text => load_text(&input)?,
            };
            match to {
                TableFormat::Binary => save_binary(&table, &output),
                TableFormat::Text => save_text(&table, &output),
            }
        }
        EmbedCmd::Reinforce {
            wikitext,
            words,
            types,
            max_words,
            alpha,
            out,
            semantic_out,
        } => {
            let cfg = AggregationConfig::new(max_words, alpha)?;
            let wikitext = load_binary(&wikitext)?;
            let words = load_binary(&words)?;
            let assignments = read_assignments(open(&types)?)?;
            let hist = coverage_histogram(&wikitext, &assignments, &cfg);
            log::info!("type words used per entity: {hist:?}");
            if let Some(p) = semantic_out {
                save_binary(&semantic_table(&assignments, &words, &cfg)?, p)?;
            }
            save_binary(&aggregate_table(&wikitext, &assignments, &words, &cfg)?, out)
        }
        EmbedCmd::Neighbors { embeddings, query, k } => {
            let table = load_binary(&embeddings)?;
            let mut w = output(None)?;
            for (label, score) in neighbor_report(&table, &query, k)? {
                writeln!(w, "{label}\t{score:.6}")?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn link(cmd: LinkCmd) -> Result<()> {
    match cmd {
        LinkCmd::Train {
            inputs,
            train: train_path,
            dev,
            epochs,
            learning_rate,
            margin,
            seed,
            train_pairwise,
            strategy,
            model_out,
            trace_out,
        } => {
            let words = load_binary(&inputs.words)?;
            let entities = load_entities(&inputs.entities, inputs.normalize)?;
            let train_docs = read_docs(&train_path, inputs.window)?;
            let dev_docs = dev.as_deref().map(|p| read_docs(p, inputs.window)).transpose()?.unwrap_or_default();
            let tables = LinkingTables { words: &words, entities: &entities };
            let cfg = TrainConfig {
                margin,
                learning_rate,
                epochs,
                seed,
                train_pairwise,
                strategy: strategy.into(),
            };
            let out = train(&train_docs, &dev_docs, tables, &cfg, LinkingModel::identity(entities.dim()))?;
            let mut w = output(Some(&model_out))?;
            write_model(&out.model, &mut w)?;
            w.flush()?;
            if let Some(p) = trace_out {
                let mut w = output(Some(&p))?;
                to_json(&out, &mut w)?;
                w.flush()?;
            }
            Ok(())
        }
        LinkCmd::Infer {
            inputs,
            docs,
            model,
            strategy,
            out,
        } => {
            let words = load_binary(&inputs.words)?;
            let entities = load_entities(&inputs.entities, inputs.normalize)?;
            let model = read_model(open(&model)?)?;
            let tables = LinkingTables { words: &words, entities: &entities };
            let preds = read_docs(&docs, inputs.window)?
                .iter()
                .map(|d| {
                    Ok(DocLinks {
                        doc_id: d.doc_id.clone(),
                        links: link_document(d, &model, tables, strategy.into())?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let mut w = output(out.as_deref())?;
            write_predictions(&preds, &mut w)?;
            w.flush()?;
            Ok(())
        }
        LinkCmd::Score {
            inputs,
            docs,
            model,
            strategy,
        } => {
            let words = load_binary(&inputs.words)?;
            let entities = load_entities(&inputs.entities, inputs.normalize)?;
            let model = read_model(open(&model)?)?;
            let tables = LinkingTables { words: &words, entities: &entities };
            let mut w = output(None)?;
            writeln!(w, "doc_id\tinferred_score\tgold_score")?;
            for d in read_docs(&docs, inputs.window)? {
                let choice = infer(&d, &model, tables, strategy.into())?;
                let inferred = document_score(&d, &choice, &model, tables)?;
                let gold: Option<Vec<usize>> = d
                    .mentions
                    .iter()
                    .map(|m| m.gold.as_ref().and_then(|g| m.candidates.iter().position(|c| c == g)))
                    .collect();
                let gold = gold
                    .map(|g| document_score(&d, &g, &model, tables))
                    .transpose()?
                    .map_or("NA".to_owned(), |s| format!("{s:.6}"));
                writeln!(w, "{}\t{inferred:.6}\t{gold}", d.doc_id)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

fn eval(cmd: EvalCmd) -> Result<()> {
    let mut stdout = io::stdout().lock();
    match cmd {
        EvalCmd::F1 { predictions, gold } => {
            let preds = read_predictions(open(&predictions)?)?;
            let gold: Vec<DocLinks> = read_docs(&gold, DEFAULT_WINDOW)?.iter().map(DocLinks::gold_of).collect();
            to_json(&micro_f1(&preds, &gold)?, &mut stdout)
        }
        EvalCmd::Runs { mut scores } => {
            if scores.is_empty() {
                for line in io::stdin().lock().lines() {
                    let line = line?;
                    let t = line.trim();
                    if t.is_empty() {
                        continue;
                    }
                    scores.push(t.parse().map_err(|_| Error::Value(format!("not a number: `{t}`")))?);
                }
            }
            if scores.is_empty() {
                return Err(Error::Config("no scores given".into()));
            }
            to_json(&summarize_runs(&scores), &mut stdout)
        }
        EvalCmd::Converge {
            train,
            dev,
            words,
            baseline,
            reinforced,
            window,
            threshold,
            max_epochs,
            seeds,
            learning_rate,
            out,
            curves,
        } => {
            let cfg = ConvergenceConfig {
                threshold,
                max_epochs,
                seeds,
                train: TrainConfig {
                    learning_rate,
                    ..TrainConfig::default()
                },
            };
            let report = convergence_experiment(
                &read_docs(&train, window)?,
                &read_docs(&dev, window)?,
                &load_binary(&words)?,
                &load_binary(&baseline)?,
                &load_binary(&reinforced)?,
                &cfg,
            )?;
            if let Some(p) = curves {
                let mut w = output(Some(&p))?;
                report.write_curves(&mut w)?;
                w.flush()?;
            }
            let mut w = output(out.as_deref())?;
            to_json(&report, &mut w)?;
            w.flush()?;
            eprintln!(
                "mean epochs to {threshold}: baseline {:.2}, reinforced {:.2}",
                report.baseline.mean_epochs_to_threshold, report.reinforced.mean_epochs_to_threshold
            );
            Ok(())
        }
        EvalCmd::Geometry {
            baseline,
            reinforced,
            probes,
        } => {
            let probes = read_probes(open(&probes)?)?;
            let report = geometry_report(&load_binary(&baseline)?, &load_binary(&reinforced)?, &probes)?;
            report.write_tsv(&mut stdout)?;
            let fmt = |x: Option<f64>| x.map_or("NA".to_owned(), |v| format!("{v:+.6}"));
            writeln!(
                stdout,
                "# mean delta: same {} different {}",
                fmt(report.mean_delta_same),
                fmt(report.mean_delta_different)
            )?;
            Ok(())
        }
    }
}
