//! Quantized Hamiltonians of the bare circuits: the capacitively shunted
//! three-junction flux qubit and the single-junction rf-SQUID coupler.
//!
//! Every loop current operator is defined as `∂Ĥ/∂Φ_ext`, so its ground-state
//! expectation equals the slope of the ground energy with respect to the
//! applied flux.

mod flux_qubit;
mod params;
mod rf_squid;
mod two_level;

pub use flux_qubit::{build_flux_qubit, FluxQubit, NormalModes, DEFAULT_QUBIT_LEVELS};
pub use params::{
    junction_capacitance, CouplerParams, DeviceParams, FluxPoint, ParameterSet, QubitId,
    QubitParams,
};
pub use rf_squid::{build_coupler, RfSquid, DEFAULT_COUPLER_LEVELS};
pub use two_level::{locate_degeneracy, two_level_reduction, TwoLevelModel, DEGENERACY_TOLERANCE};

use crate::operators::{HermitianOperator, ModeBasis};

/// Spectra are converged when adding two levels to every mode moves each
/// retained transition by less than this (GHz), i.e. 1 kHz.
pub const CONVERGENCE_TOLERANCE_GHZ: f64 = 1e-6;

/// Branch of a loop that carries the external flux in the potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// The linear loop inductor.
    Inductor,
    /// Josephson branch `k` of the qubit ring: 0 and 2 are the large
    /// junctions, 1 is the small (shunted) junction.
    Junction(usize),
}

/// A quantized circuit at one flux bias.
#[derive(Debug, Clone)]
pub struct CircuitHamiltonian {
    /// Hamiltonian, GHz.
    pub hamiltonian: HermitianOperator,
    /// Loop inductor current operator, nA.
    pub current_op: HermitianOperator,
    /// `∂Ĥ/∂Φ_ext`, nA. Equals `current_op` in the inductor gauge.
    pub flux_derivative_op: HermitianOperator,
    /// Per-mode truncated bases, in tensor-product order.
    pub basis: Vec<ModeBasis>,
    pub gauge: Gauge,
}

impl CircuitHamiltonian {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }
}
