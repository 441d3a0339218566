//! Unit system and conversion constants.
//!
//! Internally every energy is stored as a frequency `E/h` in GHz, flux in
//! units of Φ₀, current in nA, inductance in pH and capacitance in fF.
//! Mode operators are expressed in reduced units: phase `φ = 2πΦ/Φ₀` and
//! Cooper-pair number `n = Q/2e`, so that `[φ, n] = i` (ħ = 1).

use std::f64::consts::PI;

/// Planck constant (J·s), exact SI value.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Elementary charge (C), exact SI value.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Magnetic flux quantum h/2e (Wb).
pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);

const NANO: f64 = 1e-9;
const PICO: f64 = 1e-12;
const FEMTO: f64 = 1e-15;
const GIGA: f64 = 1e9;

/// Energy (GHz) of one nA of current moved through one flux quantum.
///
/// `∂E/∂f` in GHz equals `I[nA] * FLUX_ENERGY_GHZ_PER_NA`.
pub const FLUX_ENERGY_GHZ_PER_NA: f64 = FLUX_QUANTUM * NANO / PLANCK / GIGA;

/// Energy (GHz) of `M·I₁·I₂` with M in pH and currents in nA.
pub const MUTUAL_ENERGY_GHZ: f64 = PICO * NANO * NANO / PLANCK / GIGA;

/// Josephson energy `E_J = Φ₀I₀/2π` in GHz for a critical current in nA.
pub fn josephson_energy(critical_current_na: f64) -> f64 {
    FLUX_QUANTUM / (2.0 * PI) * critical_current_na * NANO / PLANCK / GIGA
}

/// Inductive energy `E_L = (Φ₀/2π)²/L` in GHz for an inductance in pH.
pub fn inductive_energy(inductance_ph: f64) -> f64 {
    let reduced = FLUX_QUANTUM / (2.0 * PI);
    reduced * reduced / (inductance_ph * PICO) / PLANCK / GIGA
}

/// Charging energy `E_C = e²/2C` in GHz for a capacitance in fF.
pub fn charging_energy(capacitance_ff: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * capacitance_ff * FEMTO) / PLANCK / GIGA
}

/// Screening parameter `β = 2π L I₀ / Φ₀` of an rf-SQUID.
pub fn screening_beta(inductance_ph: f64, critical_current_na: f64) -> f64 {
    2.0 * PI * inductance_ph * PICO * critical_current_na * NANO / FLUX_QUANTUM
}

/// Converts a slope `dI/df` (nA per Φ₀) to an inverse inductance in 1/pH.
pub fn inverse_inductance_per_ph(di_df_na: f64) -> f64 {
    di_df_na * NANO / FLUX_QUANTUM * PICO
}

/// Converts a frequency in GHz (E/h) to an angular frequency in rad/s.
pub fn ghz_to_rad_per_s(ghz: f64) -> f64 {
    2.0 * PI * GIGA * ghz
}

/// Converts an angular frequency in rad/s to GHz.
pub fn rad_per_s_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * GIGA)
}

/// Converts a current in nA to amperes.
pub fn na_to_amp(current_na: f64) -> f64 {
    current_na * NANO
}
