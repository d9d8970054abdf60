//! Convolutional attention network with an N-sample Snake regression head.
//!
//! Two branches share one spatial grid. The appearance branch sees the mean
//! frame of a window and produces two soft-attention masks; the motion
//! branch sees the window's N stacked motion maps and is gated by those
//! masks before a dense head regresses N signal samples.

pub mod io;
pub mod layers;
mod network;
pub mod train;

pub use io::{load_weights, save_weights, weights_from_bytes, weights_to_bytes};
pub use layers::{attention_mask, snake, snake_grad};
pub use network::{CanConfig, CanModel, CanParams, ForwardCache, Tensor};
pub use train::{train, Adam, OwnedWindows, TrainConfig, TrainOutcome, Window, WindowSet};
