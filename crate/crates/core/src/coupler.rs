//! Coupler ground-state response: circulating current by energy slope and by
//! operator expectation, quantum inductance, and coupling-sign regions.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{DeviceParams, RfSquid};
use crate::error::{Error, Result};
use crate::operators::{eigendecompose, lowest_eigenvalues};
use crate::optimize;
use crate::units;

/// Finite-difference step (Φ₀) for the current.
pub const CURRENT_STEP: f64 = 1e-4;
/// Finite-difference step (Φ₀) for the inverse inductance.
pub const INDUCTANCE_STEP: f64 = 5e-4;
/// Absolute tolerance (Φ₀) of located zero crossings.
pub const CROSSING_TOLERANCE: f64 = 1e-4;

/// Sign of the coupler susceptibility at a grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    /// `1/L_eff > 0`, antiferromagnetic coupling.
    AF,
    /// `1/L_eff < 0`, ferromagnetic coupling.
    FM,
    /// Nearest grid point to a located zero of `1/L_eff`.
    Zero,
}

impl Region {
    pub fn label(&self) -> &'static str {
        match self {
            Region::AF => "AF",
            Region::FM => "FM",
            Region::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CouplerResponse {
    pub flux_grid: Vec<f64>,
    /// Ground energy, GHz.
    pub e0_ghz: Vec<f64>,
    /// `∂E₀/∂Φ_C`, nA.
    pub i_slope_na: Vec<f64>,
    /// `⟨g|Î^C|g⟩`, nA.
    pub i_op_na: Vec<f64>,
    /// `∂⟨I_C⟩/∂Φ_C`, 1/pH.
    pub inv_l_eff_per_ph: Vec<f64>,
    pub region: Vec<Region>,
    /// Located zeros of `1/L_eff`, Φ₀.
    pub zero_crossings: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Ground-state evaluator for one coupler.
#[derive(Debug, Clone, Copy)]
pub struct CouplerGroundState {
    squid: RfSquid,
}

impl CouplerGroundState {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        Ok(CouplerGroundState {
            squid: RfSquid::new(params)?,
        })
    }

    pub fn from_squid(squid: RfSquid) -> Self {
        CouplerGroundState { squid }
    }

    pub fn squid(&self) -> &RfSquid {
        &self.squid
    }

    pub fn energy(&self, f_c: f64) -> Result<f64> {
        let h = self.squid.build(f_c)?.hamiltonian;
        Ok(lowest_eigenvalues(&h, 1)?[0])
    }

    /// `∂E₀/∂Φ_C` (nA) by a Richardson-extrapolated centred difference.
    pub fn slope_current(&self, f_c: f64) -> Result<f64> {
        let d = |h: f64| -> Result<f64> {
            Ok((self.energy(f_c + h)? - self.energy(f_c - h)?) / (2.0 * h))
        };
        let coarse = d(CURRENT_STEP)?;
        let fine = d(0.5 * CURRENT_STEP)?;
        Ok((4.0 * fine - coarse) / 3.0 / units::FLUX_ENERGY_GHZ_PER_NA)
    }

    /// `⟨g|Î^C|g⟩`, nA.
    pub fn operator_current(&self, f_c: f64) -> Result<f64> {
        let c = self.squid.build(f_c)?;
        let sol = eigendecompose(&c.hamiltonian, 1)?;
        Ok(c.current_op.expectation(sol.states.as_ref(), 0))
    }

    /// `1/L_eff` (1/pH) from the slope of the slope-method current.
    pub fn inverse_inductance(&self, f_c: f64) -> Result<f64> {
        let d = |h: f64| -> Result<f64> {
            Ok((self.slope_current(f_c + h)? - self.slope_current(f_c - h)?) / (2.0 * h))
        };
        let coarse = d(INDUCTANCE_STEP)?;
        let fine = d(0.5 * INDUCTANCE_STEP)?;
        Ok(units::inverse_inductance_per_ph(
            (4.0 * fine - coarse) / 3.0,
        ))
    }
}

/// Circulating current at `f_c` as `(slope method, operator method)`, nA.
pub fn circulating_current(params: &DeviceParams, f_c: f64) -> Result<(f64, f64)> {
    let g = CouplerGroundState::new(params)?;
    g.squid().verify_convergence(f_c)?;
    Ok((g.slope_current(f_c)?, g.operator_current(f_c)?))
}

/// `1/L_eff` at `f_c`, 1/pH.
pub fn effective_inductance(params: &DeviceParams, f_c: f64) -> Result<f64> {
    let g = CouplerGroundState::new(params)?;
    g.squid().verify_convergence(f_c)?;
    g.inverse_inductance(f_c)
}

/// Evaluates the coupler response on `grid` and labels coupling regions.
pub fn coupling_region_map(params: &DeviceParams, grid: &[f64]) -> Result<CouplerResponse> {
    if grid.len() < 2 {
        return Err(Error::Validation(
            "coupler grid needs at least two points".into(),
        ));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Validation(
            "coupler grid must be strictly increasing".into(),
        ));
    }
    let g = CouplerGroundState::new(params)?;
    g.squid()
        .verify_convergence(0.5)
        .map_err(|e| e.at_flux(0.5))?;
    let rows: Vec<(f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&f| -> Result<_> {
            let eval = || -> Result<_> {
                Ok((
                    g.energy(f)?,
                    g.slope_current(f)?,
                    g.operator_current(f)?,
                    g.inverse_inductance(f)?,
                ))
            };
            eval().map_err(|e| e.at_flux(f))
        })
        .collect::<Result<_>>()?;
    let inv_l: Vec<f64> = rows.iter().map(|r| r.3).collect();

    let mut warnings = Vec::new();
    let mut zero_crossings = Vec::new();
    let root = |lo: f64, hi: f64| -> Result<f64> {
        optimize::find_root(
            |f| g.inverse_inductance(f),
            lo,
            hi,
            0.1 * CROSSING_TOLERANCE,
        )
    };
    for i in 0..grid.len() - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (inv_l[i], inv_l[i + 1]);
        if fa == 0.0 {
            zero_crossings.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            zero_crossings.push(root(a, b).map_err(|e| e.at_flux(a))?);
        } else {
            // A pair of crossings can hide inside one interval.
            let mid = 0.5 * (a + b);
            let fm = g.inverse_inductance(mid).map_err(|e| e.at_flux(mid))?;
            if fm.signum() != fa.signum() && fm != 0.0 {
                warnings.push(format!(
                    "grid too coarse: 1/L_eff changes sign twice within [{a:.6}, {b:.6}]"
                ));
                zero_crossings.push(root(a, mid).map_err(|e| e.at_flux(a))?);
                zero_crossings.push(root(mid, b).map_err(|e| e.at_flux(mid))?);
            }
        }
    }
    if *inv_l.last().unwrap() == 0.0 {
        zero_crossings.push(*grid.last().unwrap());
    }
    let span = grid.last().unwrap() - grid[0];
    if zero_crossings.is_empty() && span >= 1.0 {
        warnings.push("no sign change of 1/L_eff found over a full period".into());
    }

    let mut region: Vec<Region> = inv_l
        .iter()
        .map(|&v| if v >= 0.0 { Region::AF } else { Region::FM })
        .collect();
    for &z in &zero_crossings {
        let nearest = (0..grid.len())
            .min_by(|&i, &j| (grid[i] - z).abs().total_cmp(&(grid[j] - z).abs()))
            .unwrap();
        region[nearest] = Region::Zero;
    }

    Ok(CouplerResponse {
        flux_grid: grid.to_vec(),
        e0_ghz: rows.iter().map(|r| r.0).collect(),
        i_slope_na: rows.iter().map(|r| r.1).collect(),
        i_op_na: rows.iter().map(|r| r.2).collect(),
        inv_l_eff_per_ph: inv_l,
        region,
        zero_crossings,
        warnings,
    })
}
