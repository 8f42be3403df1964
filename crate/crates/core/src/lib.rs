//! Deep Ising Born machines: layered quantum circuits trained on pairs of
//! input and target states by commutator-based updates.

pub mod datagen;
pub mod error;
pub mod expressivity;
pub mod gates;
pub mod linalg;
pub mod network;
pub mod training;

pub use error::{Error, Result};
pub use gates::Layer;
pub use linalg::{DensityMatrix, PureState, RngSeed};
