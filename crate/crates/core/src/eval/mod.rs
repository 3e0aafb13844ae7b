//! Evaluation: micro F1, multi-run confidence intervals, convergence and
//! neighbour-geometry comparisons between two entity tables.

mod converge;
mod f1;
mod geometry;
mod stats;

pub use converge::{convergence_experiment, ConvergenceConfig, ConvergenceReport, RunTrace, SetSummary};
pub use f1::{micro_f1, DocCounts, DocLinks, EvalReport};
pub use geometry::{geometry_report, read_probes, GeometryReport, GeometryRow, PairClass, ProbePair};
pub use stats::{summarize_runs, t_quantile_975, MultiRunSummary};
