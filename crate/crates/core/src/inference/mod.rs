//! Exact inference on unrolled two-slice networks.

mod factor;
mod jtree;
mod net;
mod oracle;
mod predict;

pub use factor::Factor;
pub use jtree::{
    calibrate, compile_junction_tree, query_marginals, Calibrated, JunctionTree, Posterior, TreeEdge,
    DEFAULT_CLIQUE_STATE_CAP,
};
pub use net::{unroll_tables, unroll_topology, BayesNet, Topology, UnrolledNet};
pub use oracle::{brute_force_all, brute_force_joint, ORACLE_STATE_LIMIT};
pub use predict::{predict_event, PredictOptions, Predictor};
