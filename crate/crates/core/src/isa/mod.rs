//! Independent subspace analysis on a white series: PCA, ICA, pairwise
//! dependence and clustering of the ICA coordinates.

pub mod dependence;
pub mod ica;
pub mod ncut;
pub mod objective;
pub mod pca;

pub use dependence::{pairwise_dependence, Estimator, SimilarityGraph};
pub use ica::{ica, IcaOptions, IcaStage};
pub use ncut::{ncut_cluster, Clustering, KRule, NcutOptions, Partition};
pub use objective::{graph_objective, ipa_objective, silhouette};
pub use pca::{pca_whiten, DimRule, PcaStage};
