//! `agn`: run the node-insertion experiment grid or its individual stages.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use agn_core::eval::{
    graph_edge_composition, partition_stability, topology_delta, topology_report, TopologyOptions,
};
use agn_core::features::FeatureSchema;
use agn_core::graph::{load_edge_list, save_graph};
use agn_core::insert::{InsertionConfig, Variant};
use agn_core::pipeline::stages::{save_training_artifacts, TrainArtifacts};
use agn_core::pipeline::{
    insert_variant, load_dataset, prepare_dataset, run_experiment, DatasetConfig, DatasetSource,
    ExperimentConfig, LoadedDataset, PreparedDataset, EPOCHS_ENV,
};
use agn_core::rng::derive_seed;
use agn_core::train::TrainConfig;
use agn_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "agn",
    version,
    about = "Controlled node insertion with a graph VAE"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured dataset x variant grid and write the result tables.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Restrict to these variants (repeatable).
        #[arg(long = "variant")]
        variants: Vec<Variant>,
    },
    /// Print the topology summary of an edge list.
    Inspect {
        graph: PathBuf,
        /// Relabel arbitrary node tokens to 0..N in order of appearance.
        #[arg(long)]
        relabel: bool,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Write a synthetic regime or built-in graph as an edge list.
    Gen {
        /// community_sbm, multi_sbm, scale_free, karate or lesmis.
        dataset: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on an edge list and store checkpoint, normalization and split.
    Train {
        #[arg(long)]
        graph: PathBuf,
        /// Regime name or comma-separated feature list.
        #[arg(long, default_value = "community")]
        features: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Insert generated nodes using a trained model directory.
    Insert(InsertArgs),
    /// Compare an augmented graph with its backbone.
    Eval {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args)]
struct InsertArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value = "agn")]
    variant: Variant,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    m_new: usize,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::UnknownGraph(_)
        | Error::UnknownFeature(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cmd: Command) -> agn_core::Result<u8> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            variants,
        } => cmd_run(config.as_deref(), out, seed, variants),
        Command::Inspect {
            graph,
            relabel,
            json,
            seed,
        } => cmd_inspect(&graph, relabel, json, seed),
        Command::Gen { dataset, seed, out } => {
            let source: DatasetSource = dataset.parse()?;
            if matches!(&source, DatasetSource::EdgeList { path, .. } if !path.exists()) {
                return Err(Error::UnknownGraph(dataset));
            }
            let LoadedDataset { graph, .. } = load_dataset(&source, seed)?;
            save_graph(&graph, &out)?;
            println!(
                "{}: {} nodes, {} edges -> {}",
                dataset,
                graph.node_count(),
                graph.edge_count(),
                out.display()
            );
            Ok(0)
        }
        Command::Train {
            graph,
            features,
            seed,
            epochs,
            out,
        } => cmd_train(&graph, &features, seed, epochs, &out),
        Command::Insert(args) => cmd_insert(args),
        Command::Eval {
            before,
            after,
            seed,
            json,
        } => cmd_eval(&before, &after, seed, json),
    }
}

fn cmd_run(
    config: Option<&Path>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    variants: Vec<Variant>,
) -> agn_core::Result<u8> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => {
            let mut c = ExperimentConfig::paper_default();
            c.apply_env_overrides(std::env::var(EPOCHS_ENV).ok().as_deref())?;
            c
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if !variants.is_empty() {
        cfg.variants = variants;
    }
    cfg.validate()?;
    let out = out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let summary = run_experiment(&cfg, &out)?;
    for ds in &summary.datasets {
        println!(
            "{}: N={} |E|={} lp_auc={:.4} epochs={} (best {})",
            ds.name,
            ds.before.nodes,
            ds.before.edges,
            ds.link_prediction.model_auc,
            ds.training.epochs_run,
            ds.training.best_epoch
        );
    }
    for f in &summary.failures {
        eprintln!("failure [{} / {}]: {}", f.dataset, f.stage, f.message);
    }
    println!("results written to {}", out.display());
    Ok(summary.exit_code() as u8)
}

fn cmd_inspect(path: &Path, relabel: bool, json: bool, seed: u64) -> agn_core::Result<u8> {
    let g = load_edge_list(path, relabel)?;
    let r = topology_report(
        &g,
        &TopologyOptions {
            seed,
            ..Default::default()
        },
    )?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(0);
    }
    let opt = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:.6}"));
    let rows = [
        ("nodes", r.nodes.to_string()),
        ("edges", r.edges.to_string()),
        ("density", format!("{:.6}", r.density)),
        ("mean_degree", format!("{:.6}", r.mean_degree)),
        ("min_degree", r.min_degree.to_string()),
        ("max_degree", r.max_degree.to_string()),
        ("components", r.component_count.to_string()),
        ("largest_component", r.largest_component.to_string()),
        ("avg_clustering", format!("{:.6}", r.avg_clustering)),
        ("transitivity", format!("{:.6}", r.transitivity)),
        ("avg_shortest_path", opt(r.avg_shortest_path)),
        (
            "diameter",
            r.diameter.map_or("n/a".into(), |d| d.to_string()),
        ),
        ("assortativity", opt(r.degree_assortativity)),
        ("modularity", opt(r.modularity)),
        ("original_nodes", g.original_count().to_string()),
        ("generated_nodes", g.generated_count().to_string()),
    ];
    for (k, v) in rows {
        println!("{k:<18} {v}");
    }
    Ok(0)
}

fn prepared_from(
    graph_path: &Path,
    features: &str,
    seed: u64,
    epochs: Option<usize>,
) -> agn_core::Result<PreparedDataset> {
    let schema = FeatureSchema::from_spec(features)?;
    let ds = DatasetConfig {
        features: Some(schema.names().iter().map(|s| s.to_string()).collect()),
        ..DatasetConfig::new(
            "graph",
            DatasetSource::EdgeList {
                path: graph_path.to_path_buf(),
                relabel: false,
            },
        )
    };
    let mut cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    if let Some(n) = epochs.or_else(|| std::env::var(EPOCHS_ENV).ok().and_then(|v| v.parse().ok()))
    {
        cfg.max_epochs = n;
        cfg.patience = cfg.patience.min(n);
    }
    prepare_dataset(&ds, seed, &cfg)
}

fn cmd_train(
    graph: &Path,
    features: &str,
    seed: u64,
    epochs: Option<usize>,
    out: &Path,
) -> agn_core::Result<u8> {
    let prep = prepared_from(graph, features, seed, epochs)?;
    save_training_artifacts(&prep, seed, out)?;
    println!(
        "trained {} epochs (best {} val {:.5}) -> {}",
        prep.training.epochs_run,
        prep.training.best_epoch,
        prep.training.best_val_loss,
        out.display()
    );
    Ok(0)
}

fn cmd_insert(a: InsertArgs) -> agn_core::Result<u8> {
    let graph = load_edge_list(&a.graph, false)?;
    let art = TrainArtifacts::load(&a.model)?;
    let x_norm = art.normalized_features(&graph)?;
    let prep = PreparedDataset {
        config: DatasetConfig::new("graph", DatasetSource::Karate),
        loaded: LoadedDataset {
            graph,
            blocks: None,
            sbm: None,
        },
        schema: art.schema.clone(),
        x_norm,
        norm: art.norm,
        split: art.split,
        params: art.params,
        training: art.summary.training,
        history: Vec::new(),
        flags: Vec::new(),
    };
    let cfg = InsertionConfig {
        m_new: a.m_new,
        top_k: a.top_k,
        tau: a.tau,
        allow_gg: a.variant == Variant::AgnOriginal,
        seed: derive_seed(a.seed, &format!("insert/{}", a.variant.name())),
    };
    let ag = insert_variant(&prep, a.variant, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::Io {
        path: a.out.clone(),
        source: e,
    })?;
    ag.save(&a.out, a.variant.name(), &prep.schema.names())?;
    let telemetry_path = a.out.join(format!("{}_telemetry.json", a.variant.name()));
    std::fs::write(
        &telemetry_path,
        serde_json::to_string_pretty(&ag.telemetry)?,
    )
    .map_err(|e| Error::Io {
        path: telemetry_path.clone(),
        source: e,
    })?;
    println!(
        "{}: {} new edges ({} G-O, {} G-G), binding fraction {:.4}",
        a.variant,
        ag.new_edges.len(),
        ag.go_count(),
        ag.gg_count(),
        ag.telemetry.binding_fraction()
    );
    Ok(0)
}

fn cmd_eval(before: &Path, after: &Path, seed: u64, json: bool) -> agn_core::Result<u8> {
    let g0 = load_edge_list(before, false)?;
    let g1 = load_edge_list(after, false)?;
    if g1.induced_prefix(g0.node_count()).edge_vec() != g0.edge_vec() {
        return Err(Error::InvalidGraph(format!(
            "{} does not contain {} as its backbone",
            after.display(),
            before.display()
        )));
    }
    let opts = TopologyOptions {
        seed,
        ..Default::default()
    };
    let r0 = topology_report(&g0, &opts)?;
    let r1 = topology_report(&g1, &opts)?;
    let delta = topology_delta(&r0, &r1);
    let composition = graph_edge_composition(&g1);
    let stability = partition_stability(&g0, &g1, seed)?;
    let value = serde_json::json!({
        "before": r0,
        "after": r1,
        "delta_pct": delta,
        "composition": composition,
        "stability": stability,
    });
    if json {
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        let pct = |x: Option<f64>| x.map_or("n/a".to_string(), |v| format!("{v:+.2}%"));
        println!("nodes            {} -> {}", r0.nodes, r1.nodes);
        println!("edges            {} -> {}", r0.edges, r1.edges);
        println!("density          {}", pct(delta.density));
        println!("clustering       {}", pct(delta.avg_clustering));
        println!("modularity       {}", pct(delta.modularity));
        println!("path length      {}", pct(delta.avg_shortest_path));
        println!(
            "composition      G-O {} G-G {} ratio {:.4} avg gen degree {:.2}",
            composition.go_count,
            composition.gg_count,
            composition.gg_ratio,
            composition.avg_generated_degree
        );
        println!(
            "stability        NMI {:.4} ARI {:.4}",
            stability.nmi, stability.ari
        );
    }
    Ok(0)
}
