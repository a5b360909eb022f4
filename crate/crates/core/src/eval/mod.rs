//! Metrics for augmented graphs: topology, communities, integration,
//! novelty, link prediction and partition stability.

pub mod community;
pub mod composition;
pub mod linkpred;
pub mod stability;
pub mod topology;

pub use community::{louvain, modularity, LouvainResult};
pub use composition::{
    edge_composition, graph_edge_composition, novelty_report, EdgeCompositionReport, NoveltyReport,
};
pub use linkpred::{average_precision, link_prediction_scores, roc_auc, LinkPredictionReport};
pub use stability::{
    ari, edge_drop_stress, nmi, partition_stability, PartitionAgreement, StressReport,
};
pub use topology::{
    topology_delta, topology_report, TopologyDelta, TopologyOptions, TopologyReport,
};
