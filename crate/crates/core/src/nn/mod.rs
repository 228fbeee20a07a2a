//! Minimal differentiable kernel set for small 1-D CNN regressors.
//!
//! Everything is `f64`, row-major, and computed on the CPU. Layers expose
//! explicit forward and backward functions; [`Network`] chains them according
//! to a serialisable [`ModelSpec`].

mod conv;
mod dense;
mod layers;
mod loss;
mod model;
mod optim;
mod tensor;

pub use conv::{Conv1d, ConvBackend, ConvCache, ConvGrads, Padding};
pub use dense::{Dense, DenseGrads};
pub use layers::{dropout_forward, relu_backward, relu_forward, Mode};
pub use loss::{huber_loss, HuberLoss};
pub use model::{
    build_fishcnn, build_fishcnn_with, receptive_field, Activation, ForwardPass, LayerSpec, ModelSpec, ModelState,
    FISHCNN_DROPOUT, FISHCNN_KERNEL,
    Network,
};
pub use optim::{AdamW, AdamWState, StepOutcome};
pub use tensor::Tensor;
