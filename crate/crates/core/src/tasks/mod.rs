//! Task environments.

pub mod cartpole;
pub mod mnist;

pub use cartpole::{CartParams, CartState, SwingUp};
pub use mnist::{MnistDataset, MnistTask, Split};
