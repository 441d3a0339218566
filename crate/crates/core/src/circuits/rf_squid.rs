use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;

use super::{
    junction_capacitance, CircuitHamiltonian, DeviceParams, Gauge, CONVERGENCE_TOLERANCE_GHZ,
};
use crate::error::{Error, Result};
use crate::operators::{self, HermitianOperator, ModeBasis};
use crate::units;

pub const DEFAULT_COUPLER_LEVELS: usize = 60;

/// Levels whose transitions are checked when verifying truncation.
const CHECKED_LEVELS: usize = 6;

/// rf-SQUID coupler: one junction (area-rule capacitance) in a loop of
/// inductance `L_C`, quantized in the oscillator basis of its LC part
/// centred on the external flux.
#[derive(Debug, Clone, Copy)]
pub struct RfSquid {
    ej: f64,
    el: f64,
    ec: f64,
    levels: usize,
}

impl RfSquid {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        params.validate()?;
        let c = junction_capacitance(params.coupler.i0_na, params)?;
        Ok(RfSquid {
            ej: units::josephson_energy(params.coupler.i0_na),
            el: units::inductive_energy(params.coupler.l_c_ph),
            ec: units::charging_energy(c),
            levels: DEFAULT_COUPLER_LEVELS,
        })
    }

    pub fn with_levels(mut self, levels: usize) -> Result<Self> {
        ModeBasis::oscillator(levels, self.ec, self.el)?;
        self.levels = levels;
        Ok(self)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Small-oscillation frequency `√(8E_C E_L)` of the bare LC loop, GHz.
    pub fn lc_frequency_ghz(&self) -> f64 {
        (8.0 * self.ec * self.el).sqrt()
    }

    /// `Ĥ = ω(a†a + ½) − E_J cos(2πf + x̂)`, with `x̂` the phase across the
    /// inductor measured from its flux-biased rest point.
    pub fn build(&self, f_c: f64) -> Result<CircuitHamiltonian> {
        if !f_c.is_finite() {
            return Err(Error::Validation(format!("non-finite coupler flux {f_c}")));
        }
        let basis = ModeBasis::oscillator(self.levels, self.ec, self.el)?;
        let n = self.levels;
        let omega = self.lc_frequency_ghz();
        let mut h = Mat::from_fn(n, n, |i, j| {
            if i == j {
                omega * (i as f64 + 0.5)
            } else {
                0.0
            }
        });
        let disp = basis.exp_i_phase(1.0)?;
        let phase = C64::from_polar(1.0, 2.0 * PI * f_c);
        operators::add_kron_real_part(&mut h, &[disp], -self.ej * phase);
        let x = basis.phase()?;
        let scale = -2.0 * PI * self.el / units::FLUX_ENERGY_GHZ_PER_NA;
        let current = Mat::from_fn(n, n, |i, j| scale * x[(i, j)]);
        let current_op = HermitianOperator::from_real_unchecked(current);
        Ok(CircuitHamiltonian {
            hamiltonian: HermitianOperator::from_real_unchecked(h),
            flux_derivative_op: current_op.clone(),
            current_op,
            basis: vec![basis],
            gauge: Gauge::Inductor,
        })
    }

    /// Largest shift (GHz) of the lowest transitions when two levels are
    /// added; fails with a convergence error above 1 kHz.
    pub fn verify_convergence(&self, f_c: f64) -> Result<f64> {
        let k = CHECKED_LEVELS.min(self.levels);
        let lo = operators::lowest_eigenvalues(&self.build(f_c)?.hamiltonian, k)?;
        let bigger = self.with_levels(self.levels + 2)?;
        let hi = operators::lowest_eigenvalues(&bigger.build(f_c)?.hamiltonian, k)?;
        let shift = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((a - lo[0]) - (b - hi[0])).abs())
            .fold(0.0f64, f64::max);
        if shift >= CONVERGENCE_TOLERANCE_GHZ {
            return Err(Error::Convergence {
                mode: "coupler".into(),
                levels: self.levels,
                shift_khz: shift * 1e6,
                tolerance_khz: CONVERGENCE_TOLERANCE_GHZ * 1e6,
            });
        }
        Ok(shift)
    }
}

/// Coupler Hamiltonian at reduced flux `f_c` with the default truncation,
/// after verifying the truncation-convergence contract.
pub fn build_coupler(params: &DeviceParams, f_c: f64) -> Result<CircuitHamiltonian> {
    let squid = RfSquid::new(params)?;
    squid.verify_convergence(f_c)?;
    squid.build(f_c)
}
