//! Semi-classical coupling model: galvanic-to-mutual renormalization, direct
//! and coupler-mediated `J`, coupler-induced flux offsets, and inductive
//! loading of the qubit gap.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{two_level_reduction, DeviceParams, FluxQubit, QubitId, TwoLevelModel};
use crate::coupler::{CouplerGroundState, INDUCTANCE_STEP};
use crate::error::{Error, Result};
use crate::units;

/// Bracket (Φ₀) searched for each qubit's degeneracy point.
pub const DEGENERACY_BRACKET: (f64, f64) = (0.49, 0.51);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenormalizedInductances {
    pub l_tilde_a_ph: f64,
    pub l_tilde_b_ph: f64,
    pub m_tilde_ph: f64,
}

/// Maps two loops sharing inductance `M` to an equivalent pair of loops
/// coupled by a mutual inductance.
pub fn galvanic_to_mutual(l_a: f64, l_b: f64, m: f64) -> Result<RenormalizedInductances> {
    if ![l_a, l_b, m].iter().all(|v| v.is_finite()) {
        return Err(Error::Validation("non-finite inductance".into()));
    }
    if l_a * l_b <= m * m {
        return Err(Error::Unphysical(format!(
            "L_A·L_B = {:.4} pH² does not exceed M² = {:.4} pH²",
            l_a * l_b,
            m * m
        )));
    }
    Ok(RenormalizedInductances {
        l_tilde_a_ph: l_a - m * m / l_b,
        l_tilde_b_ph: l_b - m * m / l_a,
        m_tilde_ph: m * (1.0 - m * m / (l_a * l_b)),
    })
}

/// `M̃` between qubit `which` and the coupler.
pub fn coupler_mutual(params: &DeviceParams, which: QubitId) -> Result<f64> {
    let l_q = params.qubit(which).l_q_ph;
    Ok(galvanic_to_mutual(l_q, params.coupler.l_c_ph, params.m_ph)?.m_tilde_ph)
}

/// `J = M̃ I_p^A I_p^B / ħ`, rad/s.
pub fn direct_coupling(m_tilde_ph: f64, ip_a_na: f64, ip_b_na: f64) -> f64 {
    units::ghz_to_rad_per_s(units::MUTUAL_ENERGY_GHZ * m_tilde_ph * ip_a_na * ip_b_na)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingResult {
    /// Signed coupling, rad/s; positive is antiferromagnetic.
    pub j_rad_per_s: f64,
    /// `M̃²/L_eff`, pH.
    pub m_eff_ph: f64,
    pub m_tilde_ph: f64,
    pub inv_l_eff_per_ph: f64,
    pub ip_a_na: f64,
    pub ip_b_na: f64,
}

impl CouplingResult {
    pub fn j_over_2pi_mhz(&self) -> f64 {
        units::rad_per_s_to_ghz(self.j_rad_per_s) * 1e3
    }
}

/// Coupler-mediated `J = (M̃²/L_eff) I_p^A I_p^B / ħ`.
pub fn mediated_coupling(
    m_tilde_ph: f64,
    inv_l_eff_per_ph: f64,
    ip_a_na: f64,
    ip_b_na: f64,
) -> CouplingResult {
    let m_eff_ph = m_tilde_ph * m_tilde_ph * inv_l_eff_per_ph;
    CouplingResult {
        j_rad_per_s: direct_coupling(m_eff_ph, ip_a_na, ip_b_na),
        m_eff_ph,
        m_tilde_ph,
        inv_l_eff_per_ph,
        ip_a_na,
        ip_b_na,
    }
}

/// Flux offset `δf = M̃ I_circ / Φ₀` and bias shift `δε = 2 M̃ I_p I_circ / ħ`
/// (rad/s) induced in a qubit by the coupler current.
pub fn qubit_flux_offset(m_tilde_ph: f64, i_circ_na: f64, ip_na: f64) -> (f64, f64) {
    let df = units::MUTUAL_ENERGY_GHZ * m_tilde_ph * i_circ_na / units::FLUX_ENERGY_GHZ_PER_NA;
    let de =
        units::ghz_to_rad_per_s(2.0 * units::MUTUAL_ENERGY_GHZ * m_tilde_ph * ip_na * i_circ_na);
    (df, de)
}

/// Qubit inductance loaded by the coupler susceptibility, `L_q − M²/L_eff`.
pub fn loaded_inductance(l_q_ph: f64, m_ph: f64, inv_l_eff_per_ph: f64) -> f64 {
    l_q_ph - m_ph * m_ph * inv_l_eff_per_ph
}

/// One coupler bias of a gap-versus-coupler curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaPoint {
    pub f_c: f64,
    pub inv_l_eff_per_ph: f64,
    pub l_loaded_a_ph: f64,
    pub l_loaded_b_ph: f64,
    pub qubit_a: TwoLevelModel,
    pub qubit_b: TwoLevelModel,
    /// `∂Δ_A/∂Φ_C`, rad/s per Φ₀.
    pub kappa_a: f64,
    /// `∂Δ_B/∂Φ_C`, rad/s per Φ₀.
    pub kappa_b: f64,
}

/// Qubit gaps with the coupler's loading at each `f_c`, and their
/// sensitivity to coupler flux.
#[derive(Debug, Clone)]
pub struct LoadedQubits {
    params: DeviceParams,
    ground: CouplerGroundState,
    levels: [usize; 3],
}

impl LoadedQubits {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        Ok(LoadedQubits {
            params: *params,
            ground: CouplerGroundState::new(params)?,
            levels: crate::circuits::DEFAULT_QUBIT_LEVELS,
        })
    }

    pub fn with_levels(mut self, levels: [usize; 3]) -> Self {
        self.levels = levels;
        self
    }

    pub fn qubit(&self, which: QubitId, inv_l_eff: f64) -> Result<FluxQubit> {
        let q = self.params.qubit(which);
        let l = loaded_inductance(q.l_q_ph, self.params.m_ph, inv_l_eff);
        if !(l > 0.0) {
            return Err(Error::Unphysical(format!(
                "loaded inductance of qubit {which} is {l} pH"
            )));
        }
        FluxQubit::new(&self.params, which, Some(l))?.with_levels(self.levels)
    }

    /// Checks the qubit truncation at the loading of `f_c` (qubit gap only).
    pub fn verify_convergence(&self, which: QubitId, f_c: f64) -> Result<f64> {
        let inv_l = self.ground.inverse_inductance(f_c)?;
        self.qubit(which, inv_l)?.verify_convergence(0.5, 2)
    }

    pub fn two_level(&self, which: QubitId, f_c: f64) -> Result<TwoLevelModel> {
        let inv_l = self.ground.inverse_inductance(f_c)?;
        two_level_reduction(&self.qubit(which, inv_l)?, DEGENERACY_BRACKET)
    }

    fn gap(&self, which: QubitId, f_c: f64) -> Result<f64> {
        Ok(self.two_level(which, f_c)?.delta_ghz)
    }

    /// `∂Δ/∂Φ_C` (rad/s per Φ₀) by a centred difference.
    pub fn kappa(&self, which: QubitId, f_c: f64) -> Result<f64> {
        let h = INDUCTANCE_STEP;
        let d = (self.gap(which, f_c + h)? - self.gap(which, f_c - h)?) / (2.0 * h);
        Ok(units::ghz_to_rad_per_s(d))
    }

    pub fn point(&self, f_c: f64) -> Result<DeltaPoint> {
        let inv_l = self.ground.inverse_inductance(f_c)?;
        let qa = self.qubit(QubitId::A, inv_l)?;
        let qb = self.qubit(QubitId::B, inv_l)?;
        Ok(DeltaPoint {
            f_c,
            inv_l_eff_per_ph: inv_l,
            l_loaded_a_ph: qa.loop_inductance_ph(),
            l_loaded_b_ph: qb.loop_inductance_ph(),
            qubit_a: two_level_reduction(&qa, DEGENERACY_BRACKET)?,
            qubit_b: two_level_reduction(&qb, DEGENERACY_BRACKET)?,
            kappa_a: self.kappa(QubitId::A, f_c)?,
            kappa_b: self.kappa(QubitId::B, f_c)?,
        })
    }

    /// Coupling at `f_c` with each qubit's `I_p` taken from its loaded
    /// two-level reduction.
    pub fn coupling(&self, f_c: f64) -> Result<CouplingResult> {
        let inv_l = self.ground.inverse_inductance(f_c)?;
        let ip_a = two_level_reduction(&self.qubit(QubitId::A, inv_l)?, DEGENERACY_BRACKET)?.ip_na;
        let ip_b = two_level_reduction(&self.qubit(QubitId::B, inv_l)?, DEGENERACY_BRACKET)?.ip_na;
        let m_a = coupler_mutual(&self.params, QubitId::A)?;
        let m_b = coupler_mutual(&self.params, QubitId::B)?;
        // The two qubit–coupler pairs may differ; the geometric mean keeps
        // J = M̃_A M̃_B I_A I_B / (ħ L_eff).
        Ok(mediated_coupling((m_a * m_b).sqrt(), inv_l, ip_a, ip_b))
    }
}

/// Δ_A, Δ_B and their coupler-flux sensitivities over `grid`.
pub fn delta_vs_coupler(params: &DeviceParams, grid: &[f64]) -> Result<Vec<DeltaPoint>> {
    let loaded = LoadedQubits::new(params)?;
    if let Some(&f) = grid.first() {
        for which in [QubitId::A, QubitId::B] {
            loaded
                .verify_convergence(which, f)
                .map_err(|e| e.at_flux(f))?;
        }
    }
    grid.par_iter()
        .map(|&f| loaded.point(f).map_err(|e| e.at_flux(f)))
        .collect()
}
