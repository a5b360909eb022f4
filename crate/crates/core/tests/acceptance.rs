//! End-to-end acceptance gate. Prints one line per criterion and exits non-zero
//! when any criterion fails.

#[path = "support/gradcheck.rs"]
mod gradcheck;
#[path = "support/oracles.rs"]
mod oracles;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use agn_core::eval::{self, topology::average_clustering, topology::transitivity};
use agn_core::features::{denormalize, extract_features, normalize, FeatureMatrix};
use agn_core::insert::{cosine_similarity, EdgeKind, Variant};
use agn_core::model::LossWeights;
use agn_core::pipeline::{
    insert_variant, run_dataset, write_outputs, DatasetConfig, DatasetResult, DatasetSource,
    ExperimentConfig, PreparedDataset, RunSummary,
};
use agn_core::rng::seeded;
use agn_core::synth::{gen_ba, BaSpec};
use agn_core::{Graph, Matrix};
use rand::Rng;

type Outcome = Result<String, String>;
type EdgeSet = BTreeSet<(usize, usize)>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

struct Regime {
    result: DatasetResult,
    prep: PreparedDataset,
    elapsed: Duration,
}

struct Grid {
    cfg: ExperimentConfig,
    regimes: Vec<Regime>,
}

impl Grid {
    fn run() -> Result<Self, String> {
        let mut cfg = ExperimentConfig::paper_default();
        cfg.datasets.retain(|d| !d.source_is_real());
        let mut regimes = Vec::new();
        for ds in &cfg.datasets {
            let t = Instant::now();
            let (result, failures, prep) =
                run_dataset(&cfg, ds).map_err(|e| format!("{}: {e}", ds.name))?;
            for f in failures {
                eprintln!("stage failure [{} / {}]: {}", f.dataset, f.stage, f.message);
            }
            regimes.push(Regime {
                result,
                prep,
                elapsed: t.elapsed(),
            });
        }
        Ok(Self { cfg, regimes })
    }

    fn regime(&self, name: &str) -> &Regime {
        self.regimes
            .iter()
            .find(|r| r.result.name == name)
            .expect("regime in grid")
    }

    fn dataset_config(&self, name: &str) -> &DatasetConfig {
        self.cfg
            .datasets
            .iter()
            .find(|d| d.name == name)
            .expect("dataset in grid")
    }
}

trait RealSource {
    fn source_is_real(&self) -> bool;
}

impl RealSource for DatasetConfig {
    fn source_is_real(&self) -> bool {
        matches!(
            self.source,
            DatasetSource::Karate | DatasetSource::Lesmis | DatasetSource::EdgeList { .. }
        )
    }
}

const REGIMES: [&str; 3] = ["community_sbm", "multi_sbm", "scale_free"];

fn ba_edge_count() -> Outcome {
    let t = Instant::now();
    let g = gen_ba(&BaSpec {
        n: 2000,
        m: 2,
        seed: 42,
    })
    .map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    ensure(g.edge_count() == 3996, format!("|E| = {}", g.edge_count()))?;
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("|E| = 3996 in {elapsed:.2?}"))
}

fn agn_composition(grid: &Grid) -> Outcome {
    let mut notes = Vec::new();
    for name in REGIMES {
        let r = grid
            .regime(name)
            .result
            .variant(Variant::Agn)
            .ok_or("agn missing")?;
        let c = &r.composition;
        let bf = r.telemetry.binding_fraction();
        ensure(c.gg_count == 0, format!("{name}: {} GG edges", c.gg_count))?;
        ensure(
            c.go_count <= 1000,
            format!("{name}: {} G-O edges", c.go_count),
        )?;
        if bf == 0.0 {
            ensure(
                c.go_count == 1000,
                format!("{name}: G-O {} with no binding", c.go_count),
            )?;
            ensure(
                c.avg_generated_degree == 10.0,
                format!("{name}: avg degree {}", c.avg_generated_degree),
            )?;
        }
        ensure(
            bf < 0.03,
            format!("{name}: binding fraction {bf} exceeds 3%"),
        )?;
        notes.push(format!("{name} go={} bf={bf:.4}", c.go_count));
    }
    Ok(notes.join(", "))
}

/// Expected edges of a similarity-attached insertion, computed pair by pair.
fn similarity_oracle(
    x_orig: &Matrix<f64>,
    gen: &Matrix<f64>,
    k: usize,
    tau: f64,
    allow_gg: bool,
) -> (EdgeSet, EdgeSet) {
    let n = x_orig.rows();
    let mut go = BTreeSet::new();
    for i in 0..gen.rows() {
        let mut scored: Vec<(f64, usize)> = (0..n)
            .map(|j| (cosine_similarity(gen.row(i), x_orig.row(j)), j))
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(s, j) in scored.iter().take(k) {
            if s >= tau {
                go.insert((j, n + i));
            }
        }
    }
    let mut gg = BTreeSet::new();
    if allow_gg {
        for i in 0..gen.rows() {
            for j in i + 1..gen.rows() {
                if cosine_similarity(gen.row(i), gen.row(j)) >= tau {
                    gg.insert((n + i, n + j));
                }
            }
        }
    }
    (go, gg)
}

fn agn_original_artifact(grid: &Grid) -> Outcome {
    let mut checked = Vec::new();
    for name in REGIMES {
        let reg = grid.regime(name);
        let icfg = grid
            .cfg
            .insertion_config(grid.dataset_config(name), Variant::AgnOriginal);
        let ag =
            insert_variant(&reg.prep, Variant::AgnOriginal, &icfg).map_err(|e| e.to_string())?;
        let (go, gg) = similarity_oracle(
            &reg.prep.x_norm,
            &ag.gen_features_norm,
            icfg.top_k,
            icfg.tau,
            true,
        );
        let m = ag.gen_features_norm.rows();
        if gg.len() != m * (m - 1) / 2 {
            continue;
        }
        let pairs = |kind: EdgeKind| -> BTreeSet<(usize, usize)> {
            ag.new_edges
                .iter()
                .filter(|e| e.kind == kind)
                .map(|e| (e.u.min(e.v), e.u.max(e.v)))
                .collect()
        };
        ensure(
            pairs(EdgeKind::GeneratedGenerated) == gg,
            format!("{name}: GG edges differ from all-pairs oracle"),
        )?;
        ensure(
            pairs(EdgeKind::GeneratedOriginal) == go,
            format!("{name}: G-O edges differ from top-k oracle"),
        )?;
        let c = eval::edge_composition(&ag);
        ensure(c.gg_count == 4950, format!("{name}: GG {}", c.gg_count))?;
        let exact = 4950.0 / 5950.0;
        ensure(
            (c.gg_ratio - exact).abs() < 1e-9,
            format!("{name}: gg_ratio {}", c.gg_ratio),
        )?;
        ensure(
            (exact - 0.83193_f64).abs() < 5e-6,
            "4950/5950 does not round to 0.83193",
        )?;
        ensure(
            c.avg_generated_degree == 109.0,
            format!("{name}: avg degree {}", c.avg_generated_degree),
        )?;
        checked.push(name);
    }
    ensure(
        !checked.is_empty(),
        "no regime had every generated pair above tau",
    )?;
    Ok(format!(
        "GG=4950, ratio 0.831933, degree 109 on {}",
        checked.join(", ")
    ))
}

fn backbone_immutable(grid: &Grid) -> Outcome {
    let mut count = 0;
    for name in REGIMES {
        let reg = grid.regime(name);
        let g = &reg.prep.loaded.graph;
        for v in Variant::ALL {
            let icfg = grid.cfg.insertion_config(grid.dataset_config(name), v);
            let ag = insert_variant(&reg.prep, v, &icfg).map_err(|e| e.to_string())?;
            let induced = ag.graph.induced_prefix(g.node_count());
            ensure(
                induced.edge_vec() == g.edge_vec(),
                format!("{name}/{v}: backbone changed"),
            )?;
            ensure(
                ag.graph.original_count() == g.node_count(),
                format!("{name}/{v}: original node count changed"),
            )?;
            count += 1;
        }
    }
    Ok(format!("{count} augmented graphs keep their backbone"))
}

fn round_trip_error(x: &FeatureMatrix<f64>) -> Result<f64, String> {
    let (xn, p) = normalize(x).map_err(|e| e.to_string())?;
    let back = denormalize(&xn, &p).map_err(|e| e.to_string())?;
    Ok(back.values.max_abs_diff(&x.values))
}

fn normalization_round_trip(grid: &Grid) -> Outcome {
    let mut worst: f64 = 0.0;
    for name in REGIMES {
        let reg = grid.regime(name);
        let x: FeatureMatrix<f64> = extract_features(&reg.prep.loaded.graph, &reg.prep.schema);
        worst = worst.max(round_trip_error(&x)?);
        let mut constant = x.clone();
        for i in 0..constant.rows() {
            constant.values.row_mut(i)[0] = 7.25;
        }
        worst = worst.max(round_trip_error(&constant)?);
    }
    ensure(worst < 1e-9, format!("max abs error {worst:e}"))?;
    Ok(format!("max abs error {worst:.2e}"))
}

fn gradient_check() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in [1, 2, 3] {
        let checks = gradcheck::check(&gradcheck::case(seed, LossWeights::default()));
        let bad = gradcheck::violations(&format!("seed {seed}"), &checks);
        ensure(bad.is_empty(), bad.join("; "))?;
        worst = checks.iter().map(|c| c.max_rel_err).fold(worst, f64::max);
    }
    let elapsed = t.elapsed();
    ensure(
        elapsed < Duration::from_secs(10),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!("max rel err {worst:.2e} in {elapsed:.2?}"))
}

fn random_graph(rng: &mut impl Rng) -> Graph {
    let n = rng.random_range(4..=30);
    let p = rng.random_range(0.1..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1));
    }
    Graph::from_edges(n, edges).expect("valid edges")
}

fn close(label: &str, got: f64, want: f64) -> Result<(), String> {
    ensure(
        (got - want).abs() <= 1e-12,
        format!("{label}: {got} vs oracle {want}"),
    )
}

fn metric_oracles() -> Outcome {
    let mut rng = seeded(2024);
    let trials = 25;
    for t in 0..trials {
        let g = random_graph(&mut rng);
        let n = g.node_count();
        close(
            &format!("clustering #{t}"),
            average_clustering(&g),
            oracles::average_clustering(&g),
        )?;
        close(
            &format!("transitivity #{t}"),
            transitivity(&g),
            oracles::transitivity(&g),
        )?;
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
        let q = eval::modularity(&g, &labels).map_err(|e| e.to_string())?;
        close(
            &format!("modularity #{t}"),
            q,
            oracles::modularity(&g, &labels),
        )?;
        let lv = eval::louvain(&g, t).map_err(|e| e.to_string())?;
        close(
            &format!("louvain Q #{t}"),
            lv.modularity,
            oracles::modularity(&g, &lv.partition),
        )?;

        let (np, nn) = (rng.random_range(1..=50), rng.random_range(1..=50));
        let pos: Vec<f64> = (0..np)
            .map(|_| rng.random_range(0..6) as f64 / 5.0)
            .collect();
        let neg: Vec<f64> = (0..nn)
            .map(|_| rng.random_range(0..6) as f64 / 5.0)
            .collect();
        close(
            &format!("auc #{t}"),
            eval::roc_auc(&pos, &neg).unwrap(),
            oracles::auc(&pos, &neg),
        )?;
        close(
            &format!("ap #{t}"),
            eval::average_precision(&pos, &neg).unwrap(),
            oracles::average_precision(&pos, &neg),
        )?;

        let other: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        close(
            &format!("nmi #{t}"),
            eval::nmi(&labels, &other).unwrap(),
            oracles::nmi(&labels, &other),
        )?;
        close(
            &format!("ari #{t}"),
            eval::ari(&labels, &other).unwrap(),
            oracles::ari(&labels, &other),
        )?;
        close(
            &format!("nmi louvain #{t}"),
            eval::nmi(&lv.partition, &labels).unwrap(),
            oracles::nmi(&lv.partition, &labels),
        )?;
        close(
            &format!("ari louvain #{t}"),
            eval::ari(&lv.partition, &labels).unwrap(),
            oracles::ari(&lv.partition, &labels),
        )?;
    }
    Ok(format!("{trials} random graphs, every metric within 1e-12"))
}

fn delta(grid: &Grid, ds: &str, v: Variant) -> Result<agn_core::eval::TopologyDelta, String> {
    Ok(grid
        .regime(ds)
        .result
        .variant(v)
        .ok_or(format!("{ds}/{v} missing"))?
        .delta
        .clone())
}

fn pct(x: Option<f64>, what: &str) -> Result<f64, String> {
    x.ok_or(format!("{what} delta undefined"))
}

fn community_topology(grid: &Grid) -> Outcome {
    let d = delta(grid, "community_sbm", Variant::Agn)?;
    let (dc, dq, dd) = (
        pct(d.avg_clustering, "clustering")?,
        pct(d.modularity, "modularity")?,
        pct(d.density, "density")?,
    );
    ensure(dc.abs() <= 10.0, format!("clustering {dc:+.2}%"))?;
    ensure(dq.abs() <= 10.0, format!("modularity {dq:+.2}%"))?;
    ensure(dd < 0.0, format!("density {dd:+.2}%"))?;
    let elapsed = grid.regime("community_sbm").elapsed;
    ensure(
        elapsed < Duration::from_secs(600),
        format!("took {elapsed:?}"),
    )?;
    Ok(format!(
        "clustering {dc:+.2}%, modularity {dq:+.2}%, density {dd:+.2}% in {elapsed:.1?}"
    ))
}

fn scale_free_topology(grid: &Grid) -> Outcome {
    let a = delta(grid, "scale_free", Variant::Agn)?;
    let o = delta(grid, "scale_free", Variant::AgnOriginal)?;
    let (ad, ac) = (
        pct(a.density, "density")?,
        pct(a.avg_clustering, "clustering")?,
    );
    let (od, oc) = (
        pct(o.density, "density")?,
        pct(o.avg_clustering, "clustering")?,
    );
    ensure(ad > 0.0 && ad < 25.0, format!("agn density {ad:+.2}%"))?;
    ensure(ac.abs() < 15.0, format!("agn clustering {ac:+.2}%"))?;
    ensure(od > 80.0, format!("agn_original density {od:+.2}%"))?;
    ensure(oc > 200.0, format!("agn_original clustering {oc:+.2}%"))?;
    Ok(format!(
        "agn density {ad:+.1}% clustering {ac:+.1}%; agn_original density {od:+.1}% clustering {oc:+.1}%"
    ))
}

fn novelty_ordering(grid: &Grid) -> Outcome {
    let nov = |ds: &str| {
        grid.regime(ds)
            .result
            .variant(Variant::Agn)
            .and_then(|r| r.novelty)
            .ok_or(format!("{ds}: no novelty report"))
    };
    let (c, m, s) = (nov("community_sbm")?, nov("multi_sbm")?, nov("scale_free")?);
    let detail = format!(
        "dist {:.4} vs {:.4}/{:.4}, wasserstein {:.4} vs {:.4}/{:.4}",
        s.mean_dist_to_original,
        c.mean_dist_to_original,
        m.mean_dist_to_original,
        s.wasserstein,
        c.wasserstein,
        m.wasserstein
    );
    let floor = 3.0 * c.mean_dist_to_original.max(m.mean_dist_to_original);
    ensure(
        s.mean_dist_to_original >= floor,
        format!("distance ratio below 3x: {detail}"),
    )?;
    ensure(
        s.wasserstein > c.wasserstein.max(m.wasserstein),
        format!("wasserstein not larger: {detail}"),
    )?;
    Ok(detail)
}

fn partition_stability(grid: &Grid) -> Outcome {
    let s = grid
        .regime("community_sbm")
        .result
        .variant(Variant::Agn)
        .ok_or("agn missing")?
        .stability;
    ensure(
        s.nmi >= 0.9 && s.ari >= 0.9,
        format!("NMI {:.4} ARI {:.4}", s.nmi, s.ari),
    )?;
    Ok(format!("NMI {:.4} ARI {:.4}", s.nmi, s.ari))
}

fn link_prediction(grid: &Grid) -> Outcome {
    let lp = grid.regime("community_sbm").result.link_prediction;
    let detail = format!("model AUC {:.4}, CN AUC {:.4}", lp.model_auc, lp.cn_auc);
    ensure(lp.model_auc >= 0.70, detail.clone())?;
    ensure((lp.cn_auc - lp.model_auc).abs() <= 0.15, detail.clone())?;
    Ok(detail)
}

fn multi_sbm_flag(grid: &Grid) -> Outcome {
    let reg = grid.regime("multi_sbm");
    let g = &reg.prep.loaded.graph;
    let d = reg
        .result
        .density_inconsistency
        .as_ref()
        .ok_or("no density record")?;
    ensure(
        reg.result
            .flags
            .iter()
            .any(|f| f.id == "multi_sbm_density_inconsistency"),
        "design flag missing",
    )?;
    let n = g.node_count() as f64;
    let pairs = n * (n - 1.0) / 2.0;
    let within = 5.0 * 300.0 * 299.0 / 2.0;
    let between = pairs - within;
    let expected = 0.25 * within + 0.01 * between;
    let sigma = (0.25 * 0.75 * within + 0.01 * 0.99 * between).sqrt() / pairs;
    let realized = g.edge_count() as f64 / pairs;
    ensure(
        d.stated_density == 0.087,
        format!("stated {}", d.stated_density),
    )?;
    ensure(d.realized_edges == g.edge_count(), "realized edge count")?;
    ensure(
        (d.realized_density - realized).abs() < 1e-12,
        "realized density",
    )?;
    ensure(
        (d.expected_edges - expected).abs() < 1e-9,
        format!("expected edges {}", d.expected_edges),
    )?;
    ensure(
        (d.expected_density - expected / pairs).abs() < 1e-12,
        "expected density",
    )?;
    ensure(
        d.inconsistent == ((realized - 0.087).abs() > 3.0 * sigma),
        "inconsistency verdict",
    )?;
    ensure(d.inconsistent, "stated density not flagged")?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let summary = RunSummary {
        datasets: vec![reg.result.clone()],
        failures: Vec::new(),
    };
    write_outputs(
        &grid.cfg,
        &summary,
        dir.path(),
        std::time::SystemTime::now(),
    )
    .map_err(|e| e.to_string())?;
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("run_meta.json")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let text = meta.to_string();
    ensure(
        text.contains("multi_sbm_density_inconsistency"),
        "flag absent from run_meta.json",
    )?;
    ensure(
        text.contains("0.087"),
        "stated density absent from run_meta.json",
    )?;
    Ok(format!(
        "realized {:.4} vs stated 0.087 (expected {:.4})",
        realized,
        expected / pairs
    ))
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "BA generator edge count", ba_edge_count()),
        (6, "gradient check", gradient_check()),
        (7, "metric oracles", metric_oracles()),
    ];
    let t = Instant::now();
    match Grid::run() {
        Ok(grid) => {
            println!(
                "synthetic grid trained and evaluated in {:.1?}",
                t.elapsed()
            );
            results.extend([
                (2, "AGN edge composition", agn_composition(&grid)),
                (3, "AGN-original artifact", agn_original_artifact(&grid)),
                (4, "backbone immutability", backbone_immutable(&grid)),
                (
                    5,
                    "normalization round trip",
                    normalization_round_trip(&grid),
                ),
                (8, "community SBM topology", community_topology(&grid)),
                (9, "scale-free topology", scale_free_topology(&grid)),
                (10, "novelty ordering", novelty_ordering(&grid)),
                (11, "partition stability", partition_stability(&grid)),
                (12, "link prediction", link_prediction(&grid)),
                (13, "multi-SBM density flag", multi_sbm_flag(&grid)),
            ]);
        }
        Err(e) => {
            for (id, name) in [
                (2, "AGN edge composition"),
                (3, "AGN-original artifact"),
                (4, "backbone immutability"),
                (5, "normalization round trip"),
                (8, "community SBM topology"),
                (9, "scale-free topology"),
                (10, "novelty ordering"),
                (11, "partition stability"),
                (12, "link prediction"),
                (13, "multi-SBM density flag"),
            ] {
                results.push((id, name, Err(format!("grid failed: {e}"))));
            }
        }
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
