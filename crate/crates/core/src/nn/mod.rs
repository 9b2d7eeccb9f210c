//! A small dense-network engine in `f64`: tensors, linear layers, activations,
//! inverted dropout, MSE, reverse-mode gradients and AdamW.

pub mod adamw;
pub mod checkpoint;
pub mod layers;
pub mod mlp;
pub mod tensor;

pub use adamw::{AdamW, AdamWConfig};
pub use checkpoint::Checkpoint;
pub use layers::{
    activation_forward, dropout_forward, linear_forward, mse_grad, mse_loss, Activation,
    LinearLayer, Mode,
};
pub use mlp::{build_mlp, LayerSpec, Mlp, MlpSpec};
pub use tensor::Tensor;
