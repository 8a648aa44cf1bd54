//! Survival network, logistic-hazard loss, optimizer and training loop.

mod adam;
mod checkpoint;
mod loss;
mod network;
mod train;

pub use adam::Adam;
pub use checkpoint::{read_checkpoint, write_checkpoint, Checkpoint};
pub use loss::{loss, loss_grad_logits, mean_loss, PRED_MAX, PRED_MIN};
pub use network::{
    sigmoid, BatchNorm, Dense, ForwardCache, Gradients, HiddenLayer, LayerGrad, Mode, NetworkConfig, SurvivalNetwork,
};
pub use train::{
    evaluate_loss, geometric_lrs, lr_range_test, lr_sweep, suggest_lr, train, LrSweep, TrainConfig, TrainData,
    TrainHistory,
};
