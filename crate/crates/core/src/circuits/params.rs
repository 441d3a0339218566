use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which reference parameter set a device was taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterSet {
    SemiClassical,
    FullCircuit,
    Custom,
}

/// Selects one of the two qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitId {
    A,
    B,
}

impl std::fmt::Display for QubitId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QubitId::A => f.write_str("A"),
            QubitId::B => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitParams {
    /// Small-junction critical current (nA).
    pub i0_small_na: f64,
    /// Critical current of each of the two large junctions (nA).
    pub i0_large_na: f64,
    /// Shunt capacitance across the small junction (fF).
    pub c_shunt_ff: f64,
    /// Loop inductance (pH).
    pub l_q_ph: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerParams {
    /// Junction critical current (nA).
    pub i0_na: f64,
    /// Loop inductance (pH).
    pub l_c_ph: f64,
}

/// Circuit parameters for two qubits sharing inductance with one coupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceParams {
    /// Critical current density (μA/μm²).
    pub j_c: f64,
    /// Specific capacitance (fF/μm²).
    pub s_c: f64,
    pub qubit_a: QubitParams,
    pub qubit_b: QubitParams,
    pub coupler: CouplerParams,
    /// Shared inductance between each qubit and the coupler (pH).
    pub m_ph: f64,
    pub parameter_set: ParameterSet,
}

impl DeviceParams {
    /// Reference device, parameters fitted for the semi-classical model.
    pub fn table1_semiclassical() -> Self {
        DeviceParams {
            j_c: 2.78,
            s_c: 50.0,
            qubit_a: QubitParams {
                i0_small_na: 78.0,
                i0_large_na: 206.0,
                c_shunt_ff: 53.0,
                l_q_ph: 115.0,
            },
            qubit_b: QubitParams {
                i0_small_na: 78.0,
                i0_large_na: 209.0,
                c_shunt_ff: 53.0,
                l_q_ph: 115.0,
            },
            coupler: CouplerParams {
                i0_na: 727.0,
                l_c_ph: 467.0,
            },
            m_ph: 39.0,
            parameter_set: ParameterSet::SemiClassical,
        }
    }

    /// Reference device, parameters for the full galvanic circuit.
    pub fn table1_full() -> Self {
        DeviceParams {
            coupler: CouplerParams {
                i0_na: 736.0,
                l_c_ph: 542.0,
            },
            m_ph: 43.0,
            parameter_set: ParameterSet::FullCircuit,
            ..Self::table1_semiclassical()
        }
    }

    pub fn qubit(&self, which: QubitId) -> &QubitParams {
        match which {
            QubitId::A => &self.qubit_a,
            QubitId::B => &self.qubit_b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("j_c", self.j_c),
            ("s_c", self.s_c),
            ("qubit_a.i0_small_na", self.qubit_a.i0_small_na),
            ("qubit_a.i0_large_na", self.qubit_a.i0_large_na),
            ("qubit_a.c_shunt_ff", self.qubit_a.c_shunt_ff),
            ("qubit_a.l_q_ph", self.qubit_a.l_q_ph),
            ("qubit_b.i0_small_na", self.qubit_b.i0_small_na),
            ("qubit_b.i0_large_na", self.qubit_b.i0_large_na),
            ("qubit_b.c_shunt_ff", self.qubit_b.c_shunt_ff),
            ("qubit_b.l_q_ph", self.qubit_b.l_q_ph),
            ("coupler.i0_na", self.coupler.i0_na),
            ("coupler.l_c_ph", self.coupler.l_c_ph),
            ("m_ph", self.m_ph),
        ];
        for (name, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "device parameter {name} must be positive and finite, got {v}"
                )));
            }
        }
        for i0 in [
            self.qubit_a.i0_small_na,
            self.qubit_a.i0_large_na,
            self.qubit_b.i0_small_na,
            self.qubit_b.i0_large_na,
            self.coupler.i0_na,
        ] {
            junction_capacitance(i0, self)?;
        }
        Ok(())
    }
}

/// Junction self-capacitance (fF) from its area, `S_c · I₀ / J_c`.
pub fn junction_capacitance(i0_na: f64, params: &DeviceParams) -> Result<f64> {
    if !(i0_na.is_finite() && i0_na > 0.0) {
        return Err(Error::Validation(format!(
            "critical current must be positive, got {i0_na} nA"
        )));
    }
    // I₀ in nA over J_c in μA/μm² gives area in units of 1e-3 μm².
    let c = params.s_c * i0_na / (params.j_c * 1000.0);
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Validation(format!(
            "junction capacitance {c} fF is not positive and finite"
        )));
    }
    Ok(c)
}

/// Reduced external fluxes Φ/Φ₀ of the two qubit loops and the coupler loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxPoint {
    pub f_a: f64,
    pub f_b: f64,
    pub f_c: f64,
}

impl FluxPoint {
    pub fn new(f_a: f64, f_b: f64, f_c: f64) -> Result<Self> {
        let p = FluxPoint { f_a, f_b, f_c };
        if !(f_a.is_finite() && f_b.is_finite() && f_c.is_finite()) {
            return Err(Error::Validation(format!("non-finite flux point {p:?}")));
        }
        Ok(p)
    }

    /// Representative with every component in `[0, 1)`.
    pub fn folded(&self) -> Self {
        FluxPoint {
            f_a: self.f_a.rem_euclid(1.0),
            f_b: self.f_b.rem_euclid(1.0),
            f_c: self.f_c.rem_euclid(1.0),
        }
    }
}
