//! Memristor-coupled heterogeneous dual-neuron map (MHDNN): simulation, dynamical
//! analysis, and the chaos-based PRNG, image cipher and key-gated image service built on it.

pub mod cipher;
pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod neuron;
pub mod pnm;
pub mod presets;
pub mod prng;
pub mod report;
pub mod sync;
pub mod testimage;
pub mod transport;

pub use cipher::{CipherKey, SBox};
pub use error::{Error, Result};
pub use neuron::{MhdnnParams, MhdnnState, Orbit, Param};
pub use pnm::ImageBuffer;
