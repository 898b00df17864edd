//! Similarity, landmark and regularization losses with analytic field gradients.

mod config;
mod landmarks;
pub(crate) mod ncc;
mod regularizers;
pub(crate) mod total;

pub use config::{Mode, ObjectiveConfig, RegNormalization};
pub use landmarks::weak_loss;
pub use ncc::{local_ncc, self_loss, VARIANCE_FLOOR};
pub use regularizers::{l2_grad_reg, njd_penalty, reg_loss};
pub use total::{loss_gradient, total_loss, LevelData, LevelLoss, LossSummary, Pyramid};
