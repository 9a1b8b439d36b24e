//! Self-supervised link prediction on citation graphs: edge-removal
//! augmentation (region-constrained per-row removal and a DropEdge
//! baseline), balanced pair sampling, a two-layer GCN with hand-derived
//! gradients, and Adam training.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`graph`] — CSR graphs, degree stats, symmetric renormalization, spmm
//! * [`dataset`] — content/cites loaders, canonical interchange format, stats
//! * [`augment`] — the region edge-removal strategy, DropEdge, decomposition
//!   checks
//! * [`linkpred`] — balanced train/test pair construction, pair scoring,
//!   accuracy
//! * [`model`] — GCN forward/backward, Adam, the training loop

pub mod augment;
pub mod dataset;
pub mod graph;
pub mod linkpred;
pub mod model;
mod sparse;

pub use augment::{
    drop_edge, rrlfsor, verify_decomposition, AugmentConfig, AugmentError, AugmentResult,
    RemovalEvent, RowChoice,
};
pub use dataset::{
    dataset_stats, l1_normalize_features, load_canonical, load_content_cites, save_canonical,
    Dataset, DatasetError, DatasetStats, LoadReport,
};
pub use graph::{EdgeList, EdgeListStats, Graph, GraphError, NormalizedAdjacency};
pub use linkpred::{
    accuracy, build_samples, score_pairs, LabeledPair, LinkSampleSet, SampleError,
    TrainNegStrategy,
};
pub use model::{
    adam_step, backward, forward, init_params, loss, train, AdamState, GcnParams, ModelError,
    TrainConfig, TrainReport,
};
