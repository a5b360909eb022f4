//! Result tables (CSV) and run metadata (JSON).

use std::path::Path;
use std::time::SystemTime;

use serde_json::json;

use crate::error::{Error, Result};
use crate::report::{csv_string, fmt_opt, fmt_sig, write_text};

use super::{ExperimentConfig, RunSummary};

pub const RUN_META_SCHEMA: &str = "agn-run-meta/1";

const TOPOLOGY_HEADER: [&str; 24] = [
    "dataset",
    "variant",
    "nodes",
    "edges",
    "density",
    "mean_degree",
    "min_degree",
    "max_degree",
    "components",
    "largest_component",
    "avg_clustering",
    "transitivity",
    "avg_shortest_path",
    "diameter",
    "assortativity",
    "modularity",
    "communities",
    "delta_density_pct",
    "delta_clustering_pct",
    "delta_transitivity_pct",
    "delta_path_pct",
    "delta_diameter_pct",
    "delta_assortativity_pct",
    "delta_modularity_pct",
];

fn opt_usize(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn topology_row(
    dataset: &str,
    variant: &str,
    r: &crate::eval::TopologyReport,
    d: Option<&crate::eval::TopologyDelta>,
) -> Vec<String> {
    let communities = r.partition.iter().max().map_or(0, |&c| c + 1);
    let mut row = vec![
        dataset.to_string(),
        variant.to_string(),
        r.nodes.to_string(),
        r.edges.to_string(),
        fmt_sig(r.density),
        fmt_sig(r.mean_degree),
        r.min_degree.to_string(),
        r.max_degree.to_string(),
        r.component_count.to_string(),
        r.largest_component.to_string(),
        fmt_sig(r.avg_clustering),
        fmt_sig(r.transitivity),
        fmt_opt(r.avg_shortest_path),
        opt_usize(r.diameter),
        fmt_opt(r.degree_assortativity),
        fmt_opt(r.modularity),
        if r.modularity.is_some() {
            communities.to_string()
        } else {
            String::new()
        },
    ];
    match d {
        Some(d) => row.extend(
            [
                d.density,
                d.avg_clustering,
                d.transitivity,
                d.avg_shortest_path,
                d.diameter,
                d.degree_assortativity,
                d.modularity,
            ]
            .map(fmt_opt),
        ),
        None => row.extend(std::iter::repeat_n(String::new(), 7)),
    }
    row
}

/// One `original` row per dataset followed by one row per variant.
pub fn topology_csv(summary: &RunSummary) -> Result<String> {
    let mut rows = Vec::new();
    for ds in &summary.datasets {
        rows.push(topology_row(&ds.name, "original", &ds.before, None));
        for v in &ds.variants {
            rows.push(topology_row(
                &ds.name,
                v.variant.name(),
                &v.after,
                Some(&v.delta),
            ));
        }
    }
    csv_string(&TOPOLOGY_HEADER, &rows)
}

pub fn composition_csv(summary: &RunSummary) -> Result<String> {
    let header = [
        "dataset",
        "variant",
        "m_new",
        "top_k",
        "tau",
        "allow_gg",
        "go_edges",
        "gg_edges",
        "gg_ratio",
        "avg_generated_degree",
        "majority_gg_nodes",
        "candidates",
        "rejected",
        "binding_fraction",
        "isolated_generated",
    ];
    let mut rows = Vec::new();
    for ds in &summary.datasets {
        for v in &ds.variants {
            let c = &v.composition;
            let t = &v.telemetry;
            rows.push(vec![
                ds.name.clone(),
                v.variant.name().to_string(),
                v.insertion.m_new.to_string(),
                v.insertion.top_k.to_string(),
                fmt_sig(v.insertion.tau),
                v.insertion.allow_gg.to_string(),
                c.go_count.to_string(),
                c.gg_count.to_string(),
                fmt_sig(c.gg_ratio),
                fmt_sig(c.avg_generated_degree),
                c.majority_gg_node_count.to_string(),
                t.candidates.to_string(),
                t.rejected.to_string(),
                fmt_sig(t.binding_fraction()),
                t.isolated.to_string(),
            ]);
        }
    }
    csv_string(&header, &rows)
}

/// Rows only for variants that generate features.
pub fn novelty_csv(summary: &RunSummary) -> Result<String> {
    let header = [
        "dataset",
        "variant",
        "nn_dist_mean",
        "nn_dist_std",
        "mean_dist_to_original",
        "wasserstein",
        "diversity",
    ];
    let mut rows = Vec::new();
    for ds in &summary.datasets {
        for v in &ds.variants {
            if let Some(n) = &v.novelty {
                rows.push(vec![
                    ds.name.clone(),
                    v.variant.name().to_string(),
                    fmt_sig(n.nn_dist_mean),
                    fmt_sig(n.nn_dist_std),
                    fmt_sig(n.mean_dist_to_original),
                    fmt_sig(n.wasserstein),
                    fmt_sig(n.diversity),
                ]);
            }
        }
    }
    csv_string(&header, &rows)
}

pub fn tasks_csv(summary: &RunSummary) -> Result<String> {
    let header = [
        "dataset",
        "variant",
        "lp_auc",
        "lp_ap",
        "cn_auc",
        "cn_ap",
        "augmented_cn_auc",
        "augmented_cn_ap",
        "nmi",
        "ari",
        "stress_dropped",
        "stress_nmi",
        "stress_ari",
        "stress_components",
    ];
    let mut rows = Vec::new();
    for ds in &summary.datasets {
        let lp = &ds.link_prediction;
        for v in &ds.variants {
            rows.push(vec![
                ds.name.clone(),
                v.variant.name().to_string(),
                fmt_sig(lp.model_auc),
                fmt_sig(lp.model_ap),
                fmt_sig(lp.cn_auc),
                fmt_sig(lp.cn_ap),
                fmt_sig(v.augmented_cn_auc),
                fmt_sig(v.augmented_cn_ap),
                fmt_sig(v.stability.nmi),
                fmt_sig(v.stability.ari),
                v.stress.dropped.to_string(),
                fmt_sig(v.stress.agreement.nmi),
                fmt_sig(v.stress.agreement.ari),
                v.stress.components_after.to_string(),
            ]);
        }
    }
    csv_string(&header, &rows)
}

pub fn run_meta(
    cfg: &ExperimentConfig,
    summary: &RunSummary,
    started: SystemTime,
) -> serde_json::Value {
    let unix = |t: SystemTime| {
        t.duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let datasets: Vec<serde_json::Value> = summary
        .datasets
        .iter()
        .map(|ds| {
            json!({
                "name": ds.name,
                "source": ds.source,
                "features": ds.features,
                "nodes": ds.before.nodes,
                "edges": ds.before.edges,
                "realized_density": ds.before.density,
                "sbm": ds.sbm,
                "expected_density": ds.sbm.as_ref().map(|s| s.expected_density()),
                "training": ds.training,
                "link_prediction": ds.link_prediction,
                "binding_fraction": ds.variants.iter().map(|v| (v.variant.name(), v.telemetry.binding_fraction())).collect::<std::collections::BTreeMap<_, _>>(),
                "isolated_generated": ds.variants.iter().map(|v| (v.variant.name(), v.telemetry.isolated)).collect::<std::collections::BTreeMap<_, _>>(),
                "insertion": ds.variants.iter().map(|v| (v.variant.name(), v.insertion)).collect::<std::collections::BTreeMap<_, _>>(),
                "density_inconsistency": ds.density_inconsistency,
                "design_flags": ds.flags,
                "stage_seconds": ds.stage_seconds,
            })
        })
        .collect();
    json!({
        "schema": RUN_META_SCHEMA,
        "crate_version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "rng_algorithm": crate::rng::RNG_ALGORITHM,
        "scalar": "f64",
        "hyperparameters": {
            "train": cfg.train_config(),
            "insertion": cfg.insertion,
            "overrides": cfg.overrides,
            "evaluation": cfg.evaluation,
            "split_ratios": crate::train::SplitRatios::default(),
            "model": {"hidden_dim": cfg.train.hidden_dim, "latent_dim": cfg.train.latent_dim, "logvar_clamp": crate::model::LOGVAR_CLAMP},
        },
        "variants": cfg.variants,
        "datasets": datasets,
        "failures": summary.failures,
        "started_unix": unix(started),
        "finished_unix": unix(SystemTime::now()),
    })
}

pub fn write_outputs(
    cfg: &ExperimentConfig,
    summary: &RunSummary,
    out: &Path,
    started: SystemTime,
) -> Result<()> {
    write_text(out.join("topology.csv"), &topology_csv(summary)?)?;
    write_text(out.join("composition.csv"), &composition_csv(summary)?)?;
    write_text(out.join("novelty.csv"), &novelty_csv(summary)?)?;
    write_text(out.join("tasks.csv"), &tasks_csv(summary)?)?;
    let meta =
        serde_json::to_string_pretty(&run_meta(cfg, summary, started)).map_err(Error::from)?;
    write_text(out.join("run_meta.json"), &meta)
}
