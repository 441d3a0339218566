//! Quantized models of inductively coupled flux qubits and an rf-SQUID
//! coupler: bare circuit spectra, coupler response, semi-classical and
//! composite-quantum coupling strength, and 1/f flux-noise coherence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuits;
pub mod config;
pub mod coupled;
pub mod coupler;
pub mod error;
pub mod noise;
pub mod operators;
pub mod optimize;
pub mod output;
pub mod semiclassical;
pub mod units;

pub use error::{Error, ErrorKind, Result};

/// Runs dense linear algebra on the calling thread. Sweeps parallelize over
/// flux points instead, so results no longer depend on the thread count.
pub fn sequential_linear_algebra() {
    faer::set_global_parallelism(faer::Par::Seq);
}
