//! Experiment configuration (TOML) and dataset resolution.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSchema;
use crate::graph::{load_edge_list, Graph};
use crate::insert::{InsertionConfig, Variant};
use crate::synth::{builtin_graph, gen_ba, gen_sbm, BaSpec, BuiltinGraph, SbmSpec};
use crate::train::TrainConfig;

/// Environment variable that overrides `train.max_epochs`.
pub const EPOCHS_ENV: &str = "AGN_EPOCHS";

/// Insertion count used for the small real graphs.
pub const REAL_GRAPH_M: usize = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// 3 blocks of 400, p_within 0.35, p_between 0.03.
    CommunitySbm,
    /// 5 blocks of 300, p_within 0.25, p_between 0.01.
    MultiSbm,
    /// Barabási–Albert with n = 2000, m = 2.
    ScaleFree,
    Sbm {
        block_sizes: Vec<usize>,
        p_within: f64,
        p_between: f64,
    },
    Ba {
        n: usize,
        m: usize,
    },
    Karate,
    Lesmis,
    EdgeList {
        path: PathBuf,
        #[serde(default = "yes")]
        relabel: bool,
    },
}

fn yes() -> bool {
    true
}

impl DatasetSource {
    pub fn default_schema(&self) -> FeatureSchema {
        match self {
            DatasetSource::CommunitySbm | DatasetSource::Sbm { .. } | DatasetSource::Karate => {
                FeatureSchema::community()
            }
            DatasetSource::MultiSbm => FeatureSchema::multi_community(),
            DatasetSource::ScaleFree
            | DatasetSource::Ba { .. }
            | DatasetSource::Lesmis
            | DatasetSource::EdgeList { .. } => FeatureSchema::scale_free(),
        }
    }

    fn is_real(&self) -> bool {
        matches!(
            self,
            DatasetSource::Karate | DatasetSource::Lesmis | DatasetSource::EdgeList { .. }
        )
    }

    pub fn sbm_spec(&self, seed: u64) -> Option<SbmSpec> {
        match self {
            DatasetSource::CommunitySbm => Some(SbmSpec::community(seed)),
            DatasetSource::MultiSbm => Some(SbmSpec::multi_community(seed)),
            DatasetSource::Sbm {
                block_sizes,
                p_within,
                p_between,
            } => Some(SbmSpec {
                block_sizes: block_sizes.clone(),
                p_within: *p_within,
                p_between: *p_between,
                seed,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
    /// Feature names; defaults to the regime's schema.
    #[serde(default)]
    pub features: Option<Vec<String>>,
    /// Overrides the insertion count for this dataset.
    #[serde(default)]
    pub m_new: Option<usize>,
}

const DATASET_KEYS: &[&str] = &[
    "name",
    "kind",
    "features",
    "m_new",
    "block_sizes",
    "p_within",
    "p_between",
    "n",
    "m",
    "path",
    "relabel",
];

impl DatasetConfig {
    pub fn new(name: &str, source: DatasetSource) -> Self {
        Self {
            name: name.into(),
            source,
            features: None,
            m_new: None,
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        match &self.features {
            Some(names) => FeatureSchema::parse_list(&names.join(",")),
            None => Ok(self.source.default_schema()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsertionSection {
    pub m_new: usize,
    pub top_k: usize,
    pub tau: f64,
}

impl Default for InsertionSection {
    fn default() -> Self {
        let d = InsertionConfig::default();
        Self {
            m_new: d.m_new,
            top_k: d.top_k,
            tau: d.tau,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantOverride {
    pub m_new: Option<usize>,
    pub top_k: Option<usize>,
    pub tau: Option<f64>,
    pub allow_gg: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub path_sample: usize,
    pub sample_above: usize,
    pub drop_frac: f64,
    /// Upper bound on the threshold-binding fraction of the AGN variants.
    pub max_binding_fraction: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            path_sample: 500,
            sample_above: 1000,
            drop_frac: 0.1,
            max_binding_fraction: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every stage derives its stream from it.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub insertion: InsertionSection,
    #[serde(default)]
    pub overrides: BTreeMap<Variant, VariantOverride>,
    #[serde(default)]
    pub evaluation: EvalSection,
    /// Also write augmented edge lists and generated features.
    #[serde(default)]
    pub save_graphs: bool,
    #[serde(rename = "dataset", default)]
    pub datasets: Vec<DatasetConfig>,
}

fn default_seed() -> u64 {
    42
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

impl ExperimentConfig {
    /// The three synthetic regimes plus the two small real graphs, all variants.
    pub fn paper_default() -> Self {
        Self {
            seed: default_seed(),
            out: None,
            variants: all_variants(),
            train: TrainConfig::default(),
            insertion: InsertionSection::default(),
            overrides: BTreeMap::new(),
            evaluation: EvalSection::default(),
            save_graphs: false,
            datasets: vec![
                DatasetConfig::new("community_sbm", DatasetSource::CommunitySbm),
                DatasetConfig::new("multi_sbm", DatasetSource::MultiSbm),
                DatasetConfig::new("scale_free", DatasetSource::ScaleFree),
                DatasetConfig::new("karate", DatasetSource::Karate),
                DatasetConfig::new("lesmis", DatasetSource::Lesmis),
            ],
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        // flatten disables serde's unknown-field check, so dataset tables are checked here
        let raw: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(toml::Value::Array(sets)) = raw.get("dataset") {
            for t in sets.iter().filter_map(|v| v.as_table()) {
                for key in t.keys() {
                    if !DATASET_KEYS.contains(&key.as_str()) {
                        return Err(Error::Config(format!("unknown dataset field `{key}`")));
                    }
                }
            }
        }
        Ok(cfg)
    }

    /// Parse, resolve relative edge-list paths against the file's directory,
    /// apply the environment override and validate.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for ds in &mut cfg.datasets {
            if let DatasetSource::EdgeList { path, .. } = &mut ds.source {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        }
        cfg.apply_env_overrides(std::env::var(EPOCHS_ENV).ok().as_deref())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env_overrides(&mut self, epochs: Option<&str>) -> Result<()> {
        if let Some(v) = epochs {
            let n: usize = v.trim().parse().map_err(|_| {
                Error::Config(format!("{EPOCHS_ENV}=`{v}` is not a positive integer"))
            })?;
            if n == 0 {
                return Err(Error::Config(format!("{EPOCHS_ENV} must be positive")));
            }
            self.train.max_epochs = n;
            self.train.patience = self.train.patience.min(n);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no [[dataset]] entries".into()));
        }
        let mut names = BTreeSet::new();
        for ds in &self.datasets {
            if !names.insert(&ds.name) {
                return Err(Error::Config(format!(
                    "duplicate dataset name `{}`",
                    ds.name
                )));
            }
            if ds.name.is_empty() || ds.name.contains(['/', '\\', ',']) {
                return Err(Error::Config(format!("invalid dataset name `{}`", ds.name)));
            }
            ds.schema()
                .map_err(|e| Error::Config(format!("dataset `{}`: {e}", ds.name)))?;
            if let DatasetSource::EdgeList { path, .. } = &ds.source {
                if !path.exists() {
                    return Err(Error::Config(format!(
                        "dataset `{}`: {} does not exist",
                        ds.name,
                        path.display()
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for v in &self.variants {
            if !seen.insert(v) {
                return Err(Error::Config(format!("duplicate variant `{v}`")));
            }
        }
        self.train
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let e = &self.evaluation;
        if !(0.0..=1.0).contains(&e.drop_frac)
            || !(0.0..=1.0).contains(&e.max_binding_fraction)
            || e.path_sample == 0
        {
            return Err(Error::Config(format!("invalid [evaluation] section {e:?}")));
        }
        if self.insertion.top_k == 0 || self.insertion.tau.is_nan() {
            return Err(Error::Config("invalid [insertion] section".into()));
        }
        Ok(())
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    /// Insertion settings for one variant on one dataset.
    pub fn insertion_config(&self, ds: &DatasetConfig, variant: Variant) -> InsertionConfig {
        let base_m = ds.m_new.unwrap_or(if ds.source.is_real() {
            REAL_GRAPH_M
        } else {
            self.insertion.m_new
        });
        let o = self.overrides.get(&variant).copied().unwrap_or_default();
        InsertionConfig {
            m_new: o.m_new.unwrap_or(base_m),
            top_k: o.top_k.unwrap_or(self.insertion.top_k),
            tau: o.tau.unwrap_or(self.insertion.tau),
            allow_gg: o.allow_gg.unwrap_or(variant == Variant::AgnOriginal),
            seed: crate::rng::derive_seed(self.seed, &format!("insert/{}", variant.name())),
        }
    }
}

/// A materialized dataset.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub graph: Graph,
    /// Planted block labels for SBM sources.
    pub blocks: Option<Vec<usize>>,
    pub sbm: Option<SbmSpec>,
}

pub fn load_dataset(source: &DatasetSource, seed: u64) -> Result<LoadedDataset> {
    if let Some(spec) = source.sbm_spec(seed) {
        let sbm = gen_sbm(&spec)?;
        return Ok(LoadedDataset {
            graph: sbm.graph,
            blocks: Some(sbm.blocks),
            sbm: Some(spec),
        });
    }
    let graph = match source {
        DatasetSource::ScaleFree => gen_ba(&BaSpec::scale_free(seed))?,
        DatasetSource::Ba { n, m } => gen_ba(&BaSpec { n: *n, m: *m, seed })?,
        DatasetSource::Karate => builtin_graph(BuiltinGraph::Karate),
        DatasetSource::Lesmis => builtin_graph(BuiltinGraph::Lesmis),
        DatasetSource::EdgeList { path, relabel } => load_edge_list(path, *relabel)?,
        _ => unreachable!("SBM sources handled above"),
    };
    Ok(LoadedDataset {
        graph,
        blocks: None,
        sbm: None,
    })
}

impl std::str::FromStr for DatasetSource {
    type Err = Error;

    /// Named regimes and fixtures, or a path to an edge list.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "community_sbm" => DatasetSource::CommunitySbm,
            "multi_sbm" => DatasetSource::MultiSbm,
            "scale_free" => DatasetSource::ScaleFree,
            "karate" => DatasetSource::Karate,
            "lesmis" => DatasetSource::Lesmis,
            path => DatasetSource::EdgeList {
                path: PathBuf::from(path),
                relabel: true,
            },
        })
    }
}
