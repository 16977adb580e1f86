//! Triangle-prediction network: parameters, forward/backward passes, masked
//! BCE loss and the binary parameter file format.

pub mod batch;
pub mod io;
pub mod loss;
pub mod model;
pub mod params;

pub use batch::{batch_backward, batch_forward, predict, BatchGradients, BatchPass};
pub use io::{load_params, save_params};
pub use loss::{bce_sum_and_grad, masked_bce_loss, LabelSet};
pub use model::{backward, forward, sigmoid, ForwardPass, Gradients, Need, TrianglePrediction};
pub use params::{NetConfig, NetworkParams, TensorSpec};
