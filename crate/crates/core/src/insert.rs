//! Controlled insertion of generated nodes and the comparison baselines.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{denormalize_matrix, NormParams};
use crate::graph::save_graph;
use crate::graph::{Graph, NormalizedAdjacency, Provenance};
use crate::matrix::{dot, norm, Matrix};
use crate::model::{decode_features, edge_prob, encode, ModelParams};
use crate::rng::{standard_normal_matrix, uniform_matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsertionConfig {
    pub m_new: usize,
    pub top_k: usize,
    pub tau: f64,
    pub allow_gg: bool,
    pub seed: u64,
}

impl Default for InsertionConfig {
    fn default() -> Self {
        Self {
            m_new: 100,
            top_k: 10,
            tau: 0.5,
            allow_gg: false,
            seed: 42,
        }
    }
}

impl InsertionConfig {
    pub fn validate(&self, original_nodes: usize) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::InvalidArgument("top_k must be positive".into()));
        }
        if self.top_k > original_nodes {
            return Err(Error::InvalidArgument(format!(
                "top_k = {} exceeds the {original_nodes} original nodes",
                self.top_k
            )));
        }
        if self.tau.is_nan() {
            return Err(Error::InvalidArgument("tau is NaN".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Top-k cosine attachment to originals only.
    Agn,
    /// Same attachment plus every above-threshold generated pair.
    AgnOriginal,
    Random,
    Preferential,
    Knn,
    VanillaVgae,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Agn,
        Variant::AgnOriginal,
        Variant::Random,
        Variant::Preferential,
        Variant::Knn,
        Variant::VanillaVgae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Agn => "agn",
            Variant::AgnOriginal => "agn_original",
            Variant::Random => "random",
            Variant::Preferential => "preferential",
            Variant::Knn => "knn",
            Variant::VanillaVgae => "vanilla_vgae",
        }
    }

    pub fn needs_model(self) -> bool {
        matches!(
            self,
            Variant::Agn | Variant::AgnOriginal | Variant::VanillaVgae
        )
    }

    /// Variants whose attachment is the cosine top-k rule.
    pub fn uses_similarity_rule(self) -> bool {
        matches!(self, Variant::Agn | Variant::AgnOriginal | Variant::Knn)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeKind {
    #[serde(rename = "GO")]
    GeneratedOriginal,
    #[serde(rename = "GG")]
    GeneratedGenerated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewEdge {
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    pub weight: f64,
}

/// Threshold accounting over the top-k candidate lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InsertionTelemetry {
    pub candidates: usize,
    pub rejected: usize,
    /// Rejected candidates per generated node.
    pub rejected_per_node: Vec<usize>,
    /// Generated nodes that ended with no edges at all.
    pub isolated: usize,
}

impl InsertionTelemetry {
    pub fn binding_fraction(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.rejected as f64 / self.candidates as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct AugmentedGraph<T> {
    pub variant: Variant,
    /// Backbone on nodes `0..N`, generated nodes on `N..N+M`.
    pub graph: Graph,
    pub gen_features_norm: Matrix<T>,
    pub gen_features_raw: Matrix<T>,
    /// False for baselines that attach without features (rows are zero-filled).
    pub features_generated: bool,
    pub new_edges: Vec<NewEdge>,
    pub telemetry: InsertionTelemetry,
}

impl<T: Scalar> AugmentedGraph<T> {
    pub fn original_count(&self) -> usize {
        self.graph.original_count()
    }

    pub fn generated_count(&self) -> usize {
        self.graph.generated_count()
    }

    pub fn go_count(&self) -> usize {
        self.new_edges
            .iter()
            .filter(|e| e.kind == EdgeKind::GeneratedOriginal)
            .count()
    }

    pub fn gg_count(&self) -> usize {
        self.new_edges
            .iter()
            .filter(|e| e.kind == EdgeKind::GeneratedGenerated)
            .count()
    }

    /// Edge list with provenance headers plus `<stem>_features.csv`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str, feature_names: &[&str]) -> Result<()> {
        let dir = dir.as_ref();
        save_graph(&self.graph, dir.join(format!("{stem}.edgelist")))?;
        let path = dir.join(format!("{stem}_features.csv"));
        std::fs::write(&path, self.features_csv(feature_names)?).map_err(|e| Error::io(&path, e))
    }

    pub fn features_csv(&self, feature_names: &[&str]) -> Result<String> {
        let d = self.gen_features_norm.cols();
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "{} feature names for {d} columns",
                feature_names.len()
            )));
        }
        let mut header = vec!["node".to_string()];
        header.extend(feature_names.iter().map(|n| format!("{n}_norm")));
        header.extend(feature_names.iter().map(|n| format!("{n}_raw")));
        let n0 = self.original_count();
        let rows: Vec<Vec<String>> = (0..self.generated_count())
            .map(|i| {
                let mut r = vec![(n0 + i).to_string()];
                r.extend(self.gen_features_norm.row(i).iter().map(|v| v.to_string()));
                r.extend(self.gen_features_raw.row(i).iter().map(|v| v.to_string()));
                r
            })
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        crate::report::csv_string(&header, &rows)
    }
}

/// `u·v / (‖u‖‖v‖)`, or 0 when either vector is zero.
pub fn cosine_similarity<T: Scalar>(u: &[T], v: &[T]) -> T {
    let (nu, nv) = (norm(u), norm(v));
    if nu == T::zero() || nv == T::zero() {
        return T::zero();
    }
    clamp_unit(dot(u, v) / (nu * nv))
}

fn clamp_unit<T: Scalar>(s: T) -> T {
    s.max(-T::one()).min(T::one())
}

fn unit_rows<T: Scalar>(x: &Matrix<T>) -> Matrix<T> {
    let mut out = x.clone();
    for i in 0..x.rows() {
        let n = norm(x.row(i));
        if n > T::zero() {
            out.row_mut(i).iter_mut().for_each(|v| *v /= n);
        }
    }
    out
}

/// Indices of the `k` best scores under (descending score, ascending index).
pub fn top_k_indices<T: Scalar>(scores: &[T], k: usize) -> Vec<usize> {
    let order = |&a: &usize, &b: &usize| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    };
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, order);
        idx.truncate(k);
    }
    idx.sort_unstable_by(order);
    idx
}

/// Per generated row: the admitted `(original, score)` pairs and the rejected count.
type Attachment<T> = (Vec<(usize, T)>, usize);

fn attach_top_k<T: Scalar>(
    scores_for: impl Fn(usize) -> Vec<T> + Sync,
    m: usize,
    k: usize,
    threshold: T,
) -> Vec<Attachment<T>> {
    (0..m)
        .into_par_iter()
        .map(|i| {
            let scores = scores_for(i);
            let top = top_k_indices(&scores, k);
            let total = top.len();
            let kept: Vec<(usize, T)> = top
                .into_iter()
                .filter(|&j| scores[j] >= threshold)
                .map(|j| (j, scores[j]))
                .collect();
            let rejected = total - kept.len();
            (kept, rejected)
        })
        .collect()
}

fn start_augmented(g: &Graph, m: usize) -> Result<Graph> {
    let mut out = g.clone();
    for _ in 0..m {
        out.add_node(Provenance::Generated)?;
    }
    Ok(out)
}

fn assemble<T: Scalar>(
    variant: Variant,
    g: &Graph,
    attachments: Vec<Attachment<T>>,
    gg: Vec<(usize, usize, T)>,
    gen_norm: Matrix<T>,
    gen_raw: Matrix<T>,
    features_generated: bool,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    let m = attachments.len();
    let mut graph = start_augmented(g, m)?;
    let mut new_edges = Vec::new();
    let mut telemetry = InsertionTelemetry::default();
    for (i, (kept, rejected)) in attachments.into_iter().enumerate() {
        telemetry.candidates += kept.len() + rejected;
        telemetry.rejected += rejected;
        telemetry.rejected_per_node.push(rejected);
        for (j, s) in kept {
            let w = s.as_f64();
            graph.add_weighted_edge(n0 + i, j, w)?;
            new_edges.push(NewEdge {
                u: n0 + i,
                v: j,
                kind: EdgeKind::GeneratedOriginal,
                weight: w,
            });
        }
    }
    for (a, b, s) in gg {
        let w = s.as_f64();
        graph.add_weighted_edge(n0 + a, n0 + b, w)?;
        new_edges.push(NewEdge {
            u: n0 + a,
            v: n0 + b,
            kind: EdgeKind::GeneratedGenerated,
            weight: w,
        });
    }
    telemetry.isolated = (n0..n0 + m).filter(|&v| graph.degree(v) == 0).count();
    Ok(AugmentedGraph {
        variant,
        graph,
        gen_features_norm: gen_norm,
        gen_features_raw: gen_raw,
        features_generated,
        new_edges,
        telemetry,
    })
}

/// Cosine top-k wiring of generated feature rows against the originals, plus
/// the generated-pair pass when `allow_gg` is set.
pub fn attach_by_similarity<T: Scalar>(
    variant: Variant,
    g: &Graph,
    x_norm: &Matrix<T>,
    gen_norm: Matrix<T>,
    gen_raw: Matrix<T>,
    cfg: &InsertionConfig,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    if x_norm.rows() != n0 || gen_norm.cols() != x_norm.cols() {
        return Err(Error::DimensionMismatch(format!(
            "features {:?} and generated {:?} for {n0} nodes",
            x_norm.shape(),
            gen_norm.shape()
        )));
    }
    cfg.validate(n0)?;
    let orig_unit = unit_rows(x_norm);
    let gen_unit = unit_rows(&gen_norm);
    let tau = T::of(cfg.tau);
    let m = gen_norm.rows();
    let attachments = attach_top_k(
        |i| {
            let gi = gen_unit.row(i);
            (0..n0)
                .map(|j| clamp_unit(dot(gi, orig_unit.row(j))))
                .collect()
        },
        m,
        cfg.top_k,
        tau,
    );
    let mut gg = Vec::new();
    if cfg.allow_gg {
        for a in 0..m {
            for b in a + 1..m {
                let s = clamp_unit(dot(gen_unit.row(a), gen_unit.row(b)));
                if s >= tau {
                    gg.push((a, b, s));
                }
            }
        }
    }
    assemble(variant, g, attachments, gg, gen_norm, gen_raw, true)
}

/// Sample `m_new` prior latents, decode them and attach by similarity.
pub fn insert_agn<T: Scalar, R: Rng + ?Sized>(
    g: &Graph,
    x_norm: &Matrix<T>,
    params: &ModelParams<T>,
    norm_params: &NormParams<T>,
    cfg: &InsertionConfig,
    rng: &mut R,
) -> Result<AugmentedGraph<T>> {
    let z = standard_normal_matrix(cfg.m_new, params.config().latent_dim, rng);
    let gen_norm = decode_features(&z, params)?;
    let gen_raw = denormalize_matrix(&gen_norm, norm_params)?;
    let variant = if cfg.allow_gg {
        Variant::AgnOriginal
    } else {
        Variant::Agn
    };
    attach_by_similarity(variant, g, x_norm, gen_norm, gen_raw, cfg)
}

/// Uniform `[0,1]^d` features wired by the same similarity rule.
pub fn insert_knn_features<T: Scalar, R: Rng + ?Sized>(
    g: &Graph,
    x_norm: &Matrix<T>,
    norm_params: &NormParams<T>,
    cfg: &InsertionConfig,
    rng: &mut R,
) -> Result<AugmentedGraph<T>> {
    let gen_norm = uniform_matrix(cfg.m_new, x_norm.cols(), 0.0, 1.0, rng);
    let gen_raw = denormalize_matrix(&gen_norm, norm_params)?;
    attach_by_similarity(Variant::Knn, g, x_norm, gen_norm, gen_raw, cfg)
}

fn featureless<T: Scalar>(
    variant: Variant,
    g: &Graph,
    targets: Vec<Vec<usize>>,
    d: usize,
) -> Result<AugmentedGraph<T>> {
    let m = targets.len();
    let attachments = targets
        .into_iter()
        .map(|t| (t.into_iter().map(|j| (j, T::one())).collect(), 0))
        .collect();
    assemble(
        variant,
        g,
        attachments,
        Vec::new(),
        Matrix::zeros(m, d),
        Matrix::zeros(m, d),
        false,
    )
}

/// Each generated node joins `k` distinct uniformly chosen originals.
pub fn insert_random<T: Scalar, R: Rng + ?Sized>(
    g: &Graph,
    feature_dim: usize,
    cfg: &InsertionConfig,
    rng: &mut R,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    cfg.validate(n0)?;
    let targets = (0..cfg.m_new)
        .map(|_| {
            let mut t = index::sample(rng, n0, cfg.top_k).into_vec();
            t.sort_unstable();
            t
        })
        .collect();
    featureless(Variant::Random, g, targets, feature_dim)
}

/// Each generated node joins `k` distinct originals drawn with probability
/// proportional to their degree in `g`.
pub fn insert_preferential<T: Scalar, R: Rng + ?Sized>(
    g: &Graph,
    feature_dim: usize,
    cfg: &InsertionConfig,
    rng: &mut R,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    cfg.validate(n0)?;
    let degrees = g.degrees();
    let nonzero = degrees.iter().filter(|&&d| d > 0).count();
    if cfg.top_k > nonzero {
        return Err(Error::InvalidArgument(format!(
            "top_k = {} exceeds the {nonzero} nodes with nonzero degree",
            cfg.top_k
        )));
    }
    let mut targets = Vec::with_capacity(cfg.m_new);
    for _ in 0..cfg.m_new {
        let mut t = index::sample_weighted(rng, n0, |i| degrees[i] as f64, cfg.top_k)
            .map_err(|e| Error::InvalidArgument(format!("weighted sampling failed: {e}")))?
            .into_vec();
        t.sort_unstable();
        targets.push(t);
    }
    featureless(Variant::Preferential, g, targets, feature_dim)
}

/// Prior latents wired by the inner-product decoder against the originals'
/// posterior means: top-k by probability, admitted when `p ≥ 0.5`.
pub fn insert_vanilla_vgae<T: Scalar, R: Rng + ?Sized>(
    g: &Graph,
    x_norm: &Matrix<T>,
    params: &ModelParams<T>,
    norm_params: &NormParams<T>,
    cfg: &InsertionConfig,
    rng: &mut R,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    cfg.validate(n0)?;
    let (mu, _) = encode(&NormalizedAdjacency::from_graph(g), x_norm, params)?;
    let z = standard_normal_matrix(cfg.m_new, params.config().latent_dim, rng);
    vanilla_from_latents(g, &mu, &z, params, norm_params, cfg)
}

/// Wiring step of [`insert_vanilla_vgae`] for given latents.
pub fn vanilla_from_latents<T: Scalar>(
    g: &Graph,
    mu: &Matrix<T>,
    z: &Matrix<T>,
    params: &ModelParams<T>,
    norm_params: &NormParams<T>,
    cfg: &InsertionConfig,
) -> Result<AugmentedGraph<T>> {
    let n0 = g.node_count();
    cfg.validate(n0)?;
    let half = T::of(0.5);
    let attachments = attach_top_k(
        |i| (0..n0).map(|j| edge_prob(z.row(i), mu.row(j))).collect(),
        z.rows(),
        cfg.top_k,
        half,
    );
    let gen_norm = decode_features(z, params)?;
    let gen_raw = denormalize_matrix(&gen_norm, norm_params)?;
    assemble(
        Variant::VanillaVgae,
        g,
        attachments,
        Vec::new(),
        gen_norm,
        gen_raw,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, normalize, FeatureSchema};
    use crate::model::ModelConfig;
    use crate::rng::seeded;
    use proptest::prelude::*;

    fn setup() -> (Graph, Matrix<f64>, NormParams<f64>, ModelParams<f64>) {
        let g = crate::synth::builtin_graph(crate::synth::BuiltinGraph::Karate);
        let x = extract_features::<f64>(&g, &FeatureSchema::community());
        let (xn, np) = normalize(&x).unwrap();
        let p = ModelParams::init(ModelConfig::new(4), &mut seeded(5));
        (g, xn.values, np, p)
    }

    fn assert_backbone(g: &Graph, ag: &AugmentedGraph<f64>) {
        let n = g.node_count();
        assert_eq!(ag.graph.induced_prefix(n).edge_vec(), g.edge_vec());
        assert_eq!(ag.graph.original_count(), n);
    }

    #[test]
    fn cosine_examples() {
        assert!((cosine_similarity::<f64>(&[0.3, 0.4], &[0.3, 0.4]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 2.0]), 0.0);
        assert!(
            (cosine_similarity::<f64>(&[1.0, 0.0], &[1.0, 1.0]) - std::f64::consts::FRAC_1_SQRT_2)
                .abs()
                < 1e-12
        );
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 1.0]), 0.0);
    }

    #[test]
    fn top_k_tie_break() {
        assert_eq!(top_k_indices(&[0.5, 0.9, 0.5, 0.9, 0.1], 3), vec![1, 3, 0]);
        assert_eq!(top_k_indices(&[1.0; 4], 2), vec![0, 1]);
        assert_eq!(top_k_indices(&[0.2, 0.1], 5), vec![0, 1]);
    }

    #[test]
    fn zero_insertions_is_identity() {
        let (g, x, np, p) = setup();
        let cfg = InsertionConfig {
            m_new: 0,
            ..Default::default()
        };
        let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(ag.graph, g);
        assert!(ag.new_edges.is_empty());
    }

    #[test]
    fn tau_above_one_isolates_everything() {
        let (g, x, np, p) = setup();
        let cfg = InsertionConfig {
            m_new: 7,
            tau: 1.01,
            ..Default::default()
        };
        let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(ag.graph.edge_count(), g.edge_count());
        assert_eq!(ag.telemetry.isolated, 7);
        assert_eq!(ag.telemetry.binding_fraction(), 1.0);
        assert_backbone(&g, &ag);
    }

    #[test]
    fn non_binding_threshold_gives_exactly_k() {
        let (g, x, np, p) = setup();
        let cfg = InsertionConfig {
            m_new: 100,
            tau: -1.0,
            ..Default::default()
        };
        let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(ag.go_count(), 1000);
        assert_eq!(ag.gg_count(), 0);
        for v in 34..134 {
            assert_eq!(ag.graph.degree(v), 10);
        }
        assert_eq!(ag.telemetry.binding_fraction(), 0.0);
        assert_backbone(&g, &ag);
    }

    #[test]
    fn generated_pairs_all_admitted() {
        let (g, x, np, p) = setup();
        let cfg = InsertionConfig {
            m_new: 100,
            tau: -1.0,
            allow_gg: true,
            ..Default::default()
        };
        let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(ag.variant, Variant::AgnOriginal);
        assert_eq!(ag.gg_count(), 4950);
        // brute force over generated pairs
        let mut oracle = 0;
        for a in 0..100 {
            for b in a + 1..100 {
                let s = cosine_similarity(ag.gen_features_norm.row(a), ag.gen_features_norm.row(b));
                if s >= -1.0 {
                    oracle += 1;
                    assert!((ag.graph.weight(34 + a, 34 + b).unwrap() - s).abs() < 1e-12);
                }
            }
        }
        assert_eq!(oracle, ag.gg_count());
        assert_backbone(&g, &ag);
    }

    #[test]
    fn similarity_rule_matches_brute_force() {
        let (g, x, np, p) = setup();
        let cfg = InsertionConfig {
            m_new: 20,
            top_k: 5,
            tau: 0.97,
            ..Default::default()
        };
        let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(9)).unwrap();
        let mut rejected = 0;
        for i in 0..20 {
            let mut scored: Vec<(f64, usize)> = (0..34)
                .map(|j| (cosine_similarity(ag.gen_features_norm.row(i), x.row(j)), j))
                .collect();
            scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let mut want: Vec<usize> = scored[..5]
                .iter()
                .filter(|s| s.0 >= 0.97)
                .map(|s| s.1)
                .collect();
            rejected += 5 - want.len();
            want.sort_unstable();
            let got: Vec<usize> = ag.graph.neighbors(34 + i).to_vec();
            assert_eq!(got, want, "generated node {i}");
            for &j in &got {
                assert!(ag.graph.weight(34 + i, j).unwrap() >= 0.97);
            }
        }
        assert_eq!(ag.telemetry.rejected, rejected);
        assert_eq!(ag.telemetry.candidates, 100);
    }

    #[test]
    fn raw_features_invert_normalization() {
        let (g, x, np, p) = setup();
        let ag = insert_agn(&g, &x, &p, &np, &InsertionConfig::default(), &mut seeded(2)).unwrap();
        let back = crate::features::apply_normalization(
            &crate::features::FeatureMatrix::new(
                ag.gen_features_raw.clone(),
                FeatureSchema::community(),
            )
            .unwrap(),
            &np,
        )
        .unwrap();
        assert!(back.values.max_abs_diff(&ag.gen_features_norm) < 1e-9);
        assert!(ag.features_generated);
    }

    #[test]
    fn random_baseline() {
        let tri = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let cfg = InsertionConfig {
            m_new: 1,
            top_k: 1,
            ..Default::default()
        };
        let ag = insert_random::<f64, _>(&tri, 2, &cfg, &mut seeded(1)).unwrap();
        assert_eq!(ag.graph.edge_count(), 4);
        assert!(!ag.features_generated);
        let all = InsertionConfig {
            m_new: 2,
            top_k: 3,
            ..Default::default()
        };
        let ag = insert_random::<f64, _>(&tri, 2, &all, &mut seeded(1)).unwrap();
        assert_eq!(ag.graph.neighbors(3), &[0, 1, 2]);
        assert_eq!(ag.graph.neighbors(4), &[0, 1, 2]);
        let too_many = InsertionConfig {
            top_k: 4,
            ..Default::default()
        };
        assert!(insert_random::<f64, _>(&tri, 2, &too_many, &mut seeded(1)).is_err());
    }

    #[test]
    fn preferential_favours_hub() {
        let star = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        let cfg = InsertionConfig {
            m_new: 1,
            top_k: 1,
            ..Default::default()
        };
        let mut counts = [0usize; 6];
        for seed in 0..1000 {
            let ag = insert_preferential::<f64, _>(&star, 1, &cfg, &mut seeded(seed)).unwrap();
            counts[ag.graph.neighbors(6)[0]] += 1;
        }
        // P(center) = 5/10
        assert!(counts[0] > 400 && counts[0] < 600, "{counts:?}");
        assert!(counts[1..].iter().all(|&c| c < counts[0]));
        let isolated = Graph::from_edges(4, [(0, 1)]).unwrap();
        let k3 = InsertionConfig {
            top_k: 3,
            ..Default::default()
        };
        assert!(insert_preferential::<f64, _>(&isolated, 1, &k3, &mut seeded(1)).is_err());
    }

    #[test]
    fn knn_baseline_shares_rule() {
        let (g, x, np, _) = setup();
        let cfg = InsertionConfig {
            tau: -1.0,
            ..Default::default()
        };
        let ag = insert_knn_features(&g, &x, &np, &cfg, &mut seeded(4)).unwrap();
        assert!((34..134).all(|v| ag.graph.degree(v) == 10));
        let again = insert_knn_features(&g, &x, &np, &cfg, &mut seeded(4)).unwrap();
        assert_eq!(ag.graph, again.graph);
        let strict =
            insert_knn_features(&g, &x, &np, &InsertionConfig::default(), &mut seeded(4)).unwrap();
        assert!(strict.new_edges.iter().all(|e| e.weight >= 0.5));
    }

    #[test]
    fn vanilla_zero_latents_admit_at_boundary() {
        let (g, x, np, p) = setup();
        let (mu, _) = encode(&NormalizedAdjacency::from_graph(&g), &x, &p).unwrap();
        let z = Matrix::zeros(3, 32);
        let ag = vanilla_from_latents(&g, &mu, &z, &p, &np, &InsertionConfig::default()).unwrap();
        for i in 0..3 {
            assert_eq!(ag.graph.neighbors(34 + i), &(0..10).collect::<Vec<_>>()[..]);
        }
        assert!(ag.new_edges.iter().all(|e| e.weight == 0.5));
        let ag = insert_vanilla_vgae(&g, &x, &p, &np, &InsertionConfig::default(), &mut seeded(3))
            .unwrap();
        assert!((34..134).all(|v| ag.graph.degree(v) <= 10));
        assert!(ag.new_edges.iter().all(|e| e.weight >= 0.5));
        assert_backbone(&g, &ag);
    }

    #[test]
    fn deterministic_under_seed() {
        let (g, x, np, p) = setup();
        let a = insert_agn(&g, &x, &p, &np, &InsertionConfig::default(), &mut seeded(8)).unwrap();
        let b = insert_agn(&g, &x, &p, &np, &InsertionConfig::default(), &mut seeded(8)).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.new_edges, b.new_edges);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("vgae".parse::<Variant>().is_err());
    }

    #[test]
    fn save_writes_edge_list_and_features() {
        let (g, x, np, p) = setup();
        let ag = insert_agn(&g, &x, &p, &np, &InsertionConfig::default(), &mut seeded(8)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ag.save(dir.path(), "agn", &FeatureSchema::community().names())
            .unwrap();
        let back = crate::graph::load_edge_list(dir.path().join("agn.edgelist"), false).unwrap();
        assert_eq!(back.edge_vec(), ag.graph.edge_vec());
        assert_eq!(back.generated_count(), 100);
        let csv = std::fs::read_to_string(dir.path().join("agn_features.csv")).unwrap();
        assert_eq!(csv.lines().count(), 101);
        assert!(csv.starts_with("node,"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unit_dot_equals_cosine(u in prop::collection::vec(0.0f64..1.0, 5), v in prop::collection::vec(0.0f64..1.0, 5)) {
            let m = unit_rows(&Matrix::from_rows(&[u.clone(), v.clone()]));
            let s = clamp_unit(dot(m.row(0), m.row(1)));
            prop_assert!((s - cosine_similarity(&u, &v)).abs() < 1e-12);
        }

        #[test]
        fn insertion_invariants(seed in 0u64..1000, k in 1usize..12, tau in 0.0f64..1.0, allow_gg: bool) {
            let (g, x, np, p) = setup();
            let cfg = InsertionConfig { m_new: 15, top_k: k, tau, allow_gg, seed };
            let ag = insert_agn(&g, &x, &p, &np, &cfg, &mut seeded(seed)).unwrap();
            assert_backbone(&g, &ag);
            if !allow_gg {
                prop_assert_eq!(ag.gg_count(), 0);
            }
            for v in 34..49 {
                let to_orig = ag.graph.neighbors(v).iter().filter(|&&u| u < 34).count();
                prop_assert!(to_orig <= k);
            }
            prop_assert!(ag.new_edges.iter().all(|e| e.weight >= tau));
            prop_assert_eq!(ag.telemetry.candidates, 15 * k);
        }
    }
}
