//! Flat `key = value` configuration. `#` starts a comment line. Relative
//! paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::aggregation::AggregationConfig;
use crate::error::{Error, Result};
use crate::extraction::DEFAULT_CAP;
use crate::linking::{Strategy, TrainConfig, DEFAULT_WINDOW};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stage {
    Dict,
    Types,
    Semantic,
    Aggregate,
    Link,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Dict,
        Stage::Types,
        Stage::Semantic,
        Stage::Aggregate,
        Stage::Link,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Dict => "dict",
            Stage::Types => "types",
            Stage::Semantic => "semantic",
            Stage::Aggregate => "aggregate",
            Stage::Link => "link",
            Stage::Eval => "eval",
        }
    }
}

const PATH_KEYS: [&str; 14] = [
    "word_embeddings",
    "wikitext_embeddings",
    "corpus",
    "dict_seeds",
    "dict_extensions",
    "dict_remap",
    "dictionary",
    "remap",
    "types",
    "semantic",
    "reinforced",
    "train",
    "dev",
    "output_dir",
];

const PARAM_KEYS: [&str; 11] = [
    "T",
    "alpha",
    "cap",
    "window",
    "seeds",
    "epochs",
    "learning_rate",
    "margin",
    "strategy",
    "train_pairwise",
    "normalize",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    /// Input and intermediate paths by key, already resolved.
    pub paths: BTreeMap<String, PathBuf>,
    pub output_dir: PathBuf,
    pub aggregation: AggregationConfig,
    pub cap: usize,
    pub window: usize,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// Unit-normalize both entity tables before linking.
    pub normalize: bool,
    pub enabled: BTreeMap<&'static str, bool>,
}

impl PipelineConfig {
    /// Reads `path` and applies `overrides` (`key=value`) on top.
    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io_path(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut map = parse_pairs(&text)?;
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
            map.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        Self::from_map(&map, base)
    }

    pub fn from_map(map: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let mut paths = BTreeMap::new();
        let mut enabled: BTreeMap<&'static str, bool> =
            Stage::ALL.iter().map(|s| (s.name(), true)).collect();
        let mut cfg_t = 11usize;
        let mut alpha = 0.2f32;
        let mut cap = DEFAULT_CAP;
        let mut window = DEFAULT_WINDOW;
        let mut seeds: Vec<u64> = (0..5).collect();
        let mut train = TrainConfig::default();
        let mut normalize = false;

        for (key, value) in map {
            let bad = |what: &str| Error::Config(format!("`{key}`: {what} `{value}`"));
            if PATH_KEYS.contains(&key.as_str()) {
                paths.insert(key.clone(), base.join(value));
                continue;
            }
            if let Some(stage) = key.strip_prefix("stage.") {
                let slot = enabled
                    .get_mut(stage)
                    .ok_or_else(|| Error::Config(format!("unknown stage `{stage}`")))?;
                *slot = parse_bool(value).ok_or_else(|| bad("expected true/false, got"))?;
                continue;
            }
            if !PARAM_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
            match key.as_str() {
                "T" => cfg_t = value.parse().map_err(|_| bad("expected an integer, got"))?,
                "alpha" => alpha = value.parse().map_err(|_| bad("expected a number, got"))?,
                "cap" => cap = value.parse().map_err(|_| bad("expected an integer, got"))?,
                "window" => window = value.parse().map_err(|_| bad("expected an integer, got"))?,
                "seeds" => {
                    seeds = value
                        .split(',')
                        .map(|s| s.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("expected comma-separated integers, got"))?
                }
                "epochs" => train.epochs = value.parse().map_err(|_| bad("expected an integer, got"))?,
                "learning_rate" => {
                    train.learning_rate = value.parse().map_err(|_| bad("expected a number, got"))?
                }
                "margin" => train.margin = value.parse().map_err(|_| bad("expected a number, got"))?,
                "strategy" => {
                    train.strategy = Strategy::from_tag(value).ok_or_else(|| bad("unknown strategy"))?
                }
                "train_pairwise" => {
                    train.train_pairwise = parse_bool(value).ok_or_else(|| bad("expected true/false, got"))?
                }
                "normalize" => normalize = parse_bool(value).ok_or_else(|| bad("expected true/false, got"))?,
                _ => unreachable!("checked against PARAM_KEYS"),
            }
        }

        let aggregation = AggregationConfig::new(cfg_t, alpha)?;
        if cap == 0 {
            return Err(Error::Config("cap must be at least 1".into()));
        }
        if seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let output_dir = paths
            .remove("output_dir")
            .unwrap_or_else(|| base.join("out"));
        Ok(PipelineConfig {
            paths,
            output_dir,
            aggregation,
            cap,
            window,
            seeds,
            train,
            normalize,
            enabled,
        })
    }

    pub fn is_enabled(&self, stage: Stage) -> bool {
        self.enabled[stage.name()]
    }

    pub fn path(&self, key: &str) -> Option<&Path> {
        self.paths.get(key).map(PathBuf::as_path)
    }

    /// Parameters that affect the output of `stage`, for the manifest.
    pub fn stage_params(&self, stage: Stage) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            p.insert(k.to_owned(), v);
        };
        match stage {
            Stage::Dict => {}
            Stage::Types => put("cap", self.cap.to_string()),
            Stage::Semantic => put("T", self.aggregation.max_words.to_string()),
            Stage::Aggregate => put("alpha", self.aggregation.alpha.to_string()),
            Stage::Link | Stage::Eval => {
                put("window", self.window.to_string());
                put("normalize", self.normalize.to_string());
                put("epochs", self.train.epochs.to_string());
                put("learning_rate", self.train.learning_rate.to_string());
                put("margin", self.train.margin.to_string());
                put("strategy", self.train.strategy.tag().to_owned());
                put("train_pairwise", self.train.train_pairwise.to_string());
                let seeds: Vec<String> = if stage == Stage::Link {
                    vec![self.seeds[0].to_string()]
                } else {
                    self.seeds.iter().map(u64::to_string).collect()
                };
                put("seeds", seeds.join(","));
            }
        }
        p
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        map.insert(k.trim().to_owned(), v.trim().to_owned());
    }
    Ok(map)
}
