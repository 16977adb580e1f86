//! Spatial preprocessing: exact KNN, voxel subsampling, neighborhood
//! normalization and positional encoding.

pub mod cloud;
pub mod encoding;
pub mod features;
pub mod grid;
pub mod knn;
pub mod normalize;
pub mod vec3;
pub mod voxel;

pub use cloud::{PointCloud, ScaleRecord};
pub use encoding::{encode_backward, positional_encode, C_IN, PE_LEVELS};
pub use features::{build_features, features_backward, FeatureBatch};
pub use grid::SpatialGrid;
pub use knn::{knn_search, knn_search_brute_force, Neighborhood};
pub use normalize::{normalize_neighborhood, NormalizedNeighborhood, ETA0};
pub use vec3::Point3;
pub use voxel::{estimate_voxel_size, voxel_subsample};
