//! Neuro-symbolic complex event processing.
//!
//! A perception network turns each timestamped feature vector into a
//! distribution over event classes; a probabilistic-logic rule base defines
//! which temporal patterns of those classes constitute complex events. Exact
//! inference compiles rule proofs into arithmetic circuits, which also carry
//! gradients back into the network so the whole system trains end-to-end
//! from complex-event labels alone.
//!
//! Module map:
//! - [`rulelang`] — rule syntax, parser, validation, bundled sequence library
//! - [`engine`] — SLD proof search over a timestamped stream context
//! - [`circuit`] — proof sets compiled to exact, differentiable circuits
//! - [`neural`] — the perception MLP with manual backprop and Adam
//! - [`datagen`] — synthetic streams, labeling, noise injection, dataset files
//! - [`trainer`] — end-to-end training loop and evaluation metrics
//! - [`cli`] — command implementations behind the `neurocep` binary

pub mod circuit;
pub mod cli;
pub mod datagen;
pub mod engine;
pub mod neural;
pub mod rulelang;
pub mod trainer;

pub use rulelang::{parse_program, pretty_print, Program};
