use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linking::{train, LinkingDocument, LinkingModel, LinkingTables, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    /// Dev F1 that counts as converged.
    pub threshold: f64,
    pub max_epochs: usize,
    pub seeds: Vec<u64>,
    /// Trainer settings; `epochs` and `seed` are overridden per run.
    pub train: TrainConfig,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            threshold: 0.95,
            max_epochs: 200,
            seeds: (0..5).collect(),
            train: TrainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub seed: u64,
    /// Dev F1 before training followed by one value per epoch.
    pub dev_f1: Vec<f64>,
    pub loss: Vec<f64>,
    /// First epoch (0 = untrained) at which dev F1 reached the threshold;
    /// `None` if it never did (censored).
    pub epochs_to_threshold: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub runs: Vec<RunTrace>,
    /// Censored runs count as `max_epochs + 1`.
    pub mean_epochs_to_threshold: f64,
    pub censored: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub threshold: f64,
    pub max_epochs: usize,
    pub baseline: SetSummary,
    pub reinforced: SetSummary,
}

impl ConvergenceReport {
    pub fn reinforced_is_faster(&self) -> bool {
        self.reinforced.mean_epochs_to_threshold < self.baseline.mean_epochs_to_threshold
    }

    /// Gnuplot-friendly table: epoch, then mean dev F1 of each set.
    pub fn write_curves<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# epoch\tbaseline_dev_f1\treinforced_dev_f1")?;
        let mean_at = |s: &SetSummary, e: usize| {
            s.runs.iter().map(|r| r.dev_f1[e]).sum::<f64>() / s.runs.len() as f64
        };
        for e in 0..=self.max_epochs {
            writeln!(w, "{e}\t{:.6}\t{:.6}", mean_at(&self.baseline, e), mean_at(&self.reinforced, e))?;
        }
        Ok(())
    }
}

fn run_set(
    train_docs: &[LinkingDocument],
    dev_docs: &[LinkingDocument],
    tables: LinkingTables<'_>,
    cfg: &ConvergenceConfig,
) -> Result<SetSummary> {
    let runs: Vec<RunTrace> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let tc = TrainConfig {
                epochs: cfg.max_epochs,
                seed,
                ..cfg.train.clone()
            };
            let out = train(train_docs, dev_docs, tables, &tc, LinkingModel::identity(tables.entities.dim()))?;
            let mut dev_f1 = vec![out.initial_dev_f1.unwrap_or(0.0)];
            dev_f1.extend(out.trace.iter().map(|e| e.dev_f1.unwrap_or(0.0)));
            let epochs_to_threshold = dev_f1.iter().position(|&f| f >= cfg.threshold);
            Ok(RunTrace {
                seed,
                loss: out.trace.iter().map(|e| e.loss).collect(),
                dev_f1,
                epochs_to_threshold,
            })
        })
        .collect::<Result<_>>()?;
    let censored = runs.iter().filter(|r| r.epochs_to_threshold.is_none()).count();
    let total: usize = runs
        .iter()
        .map(|r| r.epochs_to_threshold.unwrap_or(cfg.max_epochs + 1))
        .sum();
    Ok(SetSummary {
        mean_epochs_to_threshold: total as f64 / runs.len() as f64,
        censored,
        runs,
    })
}

/// Trains one model per (embedding set, seed) from the identity
/// initialization and compares how many epochs each set needs to reach the
/// dev F1 threshold.
pub fn convergence_experiment(
    train_docs: &[LinkingDocument],
    dev_docs: &[LinkingDocument],
    words: &EmbeddingTable,
    baseline: &EmbeddingTable,
    reinforced: &EmbeddingTable,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    if baseline.dim() != reinforced.dim() {
        return Err(Error::Dimension {
            expected: baseline.dim(),
            found: reinforced.dim(),
        });
    }
    if baseline.len() != reinforced.len() || baseline.labels().any(|l| !reinforced.contains(l)) {
        return Err(Error::Value("baseline and reinforced tables have different label sets".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(Error::Config("convergence experiment needs at least one seed".into()));
    }
    if dev_docs.is_empty() {
        return Err(Error::Config("convergence experiment needs dev documents".into()));
    }
    let base = run_set(train_docs, dev_docs, LinkingTables { words, entities: baseline }, cfg)?;
    let rein = run_set(train_docs, dev_docs, LinkingTables { words, entities: reinforced }, cfg)?;
    Ok(ConvergenceReport {
        threshold: cfg.threshold,
        max_epochs: cfg.max_epochs,
        baseline: base,
        reinforced: rein,
    })
}
