//! Losses, commutator gradients, layer updates and training loops.
pub mod gradient;
pub mod kupdate;
pub mod loss;
pub mod trainer;

pub use gradient::{layer_gradients, param_gradient};
pub use kupdate::{k_update, GradientUpdate, LocalGenerator};
pub use loss::{loss, LossKind};
pub use swap_test::swap_test_fidelity;
pub use trainer::{
    train, train_conditional, train_step, Method, Schedule, StepReport, TrainTrace,
    TrainingConfig,
};
