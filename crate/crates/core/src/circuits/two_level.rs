use serde::Serialize;

use super::FluxQubit;
use crate::error::{Error, Result};
use crate::operators::eigendecompose;
use crate::optimize;
use crate::units;

/// Absolute tolerance (Φ₀) of the degeneracy-point search.
pub const DEGENERACY_TOLERANCE: f64 = 1e-7;

/// Two-level description `H = −(ħε σ_z + ħΔ σ_x)/2` of a flux qubit near
/// its degeneracy point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelModel {
    /// Flux (Φ₀) of the minimum gap.
    pub f_degeneracy: f64,
    /// Minimum gap Δ/2π, GHz.
    pub delta_ghz: f64,
    /// `|⟨ψ₀|Î|ψ₁⟩|` at the degeneracy point, nA.
    pub ip_na: f64,
}

impl TwoLevelModel {
    pub fn delta_rad_per_s(&self) -> f64 {
        units::ghz_to_rad_per_s(self.delta_ghz)
    }

    /// `ε(f) = 2 I_p (f − f*) Φ₀ / ħ`, rad/s.
    pub fn epsilon_rad_per_s(&self, f: f64) -> f64 {
        units::ghz_to_rad_per_s(
            2.0 * self.ip_na * (f - self.f_degeneracy) * units::FLUX_ENERGY_GHZ_PER_NA,
        )
    }

    /// `√(ε² + Δ²)/2π`, GHz.
    pub fn gap_ghz(&self, f: f64) -> f64 {
        units::rad_per_s_to_ghz(self.epsilon_rad_per_s(f).hypot(self.delta_rad_per_s()))
    }
}

/// Minimum of the 0–1 gap over `bracket`, returned as `(f*, Δ/2π [GHz])`.
pub fn locate_degeneracy(qubit: &FluxQubit, bracket: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = bracket;
    let (f, gap) = optimize::minimize(|f| qubit.gap_ghz(f), lo, hi, DEGENERACY_TOLERANCE)?;
    let edge = 10.0 * DEGENERACY_TOLERANCE;
    if f - lo < edge || hi - f < edge {
        return Err(Error::Range(format!(
            "gap minimum not bracketed by [{lo}, {hi}] (search ended at {f})"
        )));
    }
    Ok((f, gap))
}

/// Reduces the qubit to its two-level parameters: Δ at the located
/// degeneracy point and `I_p` from the off-diagonal current element there.
pub fn two_level_reduction(qubit: &FluxQubit, bracket: (f64, f64)) -> Result<TwoLevelModel> {
    let (f_degeneracy, _) = locate_degeneracy(qubit, bracket)?;
    let circuit = qubit.build(f_degeneracy)?;
    let sol = eigendecompose(&circuit.hamiltonian, 2)?;
    let ip_na = circuit
        .current_op
        .matrix_element(sol.states.as_ref(), 0, 1)
        .norm();
    Ok(TwoLevelModel {
        f_degeneracy,
        delta_ghz: sol.energies[1] - sol.energies[0],
        ip_na,
    })
}
