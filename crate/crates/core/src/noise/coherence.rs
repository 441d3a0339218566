use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    combine_t1, decay_envelope, eta, rate_from_eta, relaxation_rate, total_rate, NoiseModel,
    Sequence, DEFAULT_T1_BACKGROUND,
};
use crate::circuits::{DeviceParams, FluxPoint, QubitId};
use crate::coupled::{CompositeModel, Retained, StateTag, Subsystem};
use crate::error::{Error, Result};
use crate::semiclassical::LoadedQubits;
use crate::units;

/// Decay from sources other than coupler flux noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Backgrounds {
    /// Coupler-independent relaxation time, s.
    pub t1_qubit: f64,
    /// Ramsey background rate, 1/s.
    pub ramsey: f64,
    /// Echo background rate, 1/s.
    pub echo: f64,
}

impl Backgrounds {
    /// Relaxation-limited backgrounds `Γ_N,other = 1/(2T₁^Q)`.
    pub fn from_t1(t1_qubit: f64) -> Result<Self> {
        let b = Backgrounds {
            t1_qubit,
            ramsey: 0.5 / t1_qubit,
            echo: 0.5 / t1_qubit,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_qubit > 0.0 && self.ramsey > 0.0 && self.echo > 0.0)
            || !self.t1_qubit.is_finite()
        {
            return Err(Error::Validation(
                "background times and rates must be positive".into(),
            ));
        }
        if self.echo > self.ramsey {
            return Err(Error::Validation(
                "echo background rate exceeds the Ramsey background".into(),
            ));
        }
        Ok(())
    }

    pub fn rate(&self, seq: Sequence) -> f64 {
        match seq {
            Sequence::Ramsey => self.ramsey,
            Sequence::Echo => self.echo,
        }
    }
}

impl Default for Backgrounds {
    fn default() -> Self {
        Backgrounds::from_t1(DEFAULT_T1_BACKGROUND).expect("positive default")
    }
}

/// Qubit B at its degeneracy for one coupler bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitResponse {
    pub f_c: f64,
    /// Qubit B bias cancelling the coupler's mean flux, Φ₀.
    pub f_b: f64,
    /// Loaded gap Δ_B/2π, GHz.
    pub delta_ghz: f64,
    /// `∂Δ_B/∂Φ_C`, rad/s per Φ₀.
    pub kappa: f64,
    /// `|⟨e|Î^C|g⟩|`, nA.
    pub element_na: f64,
    /// `|⟨e|Î^B|g⟩|`, nA.
    pub qubit_element_na: f64,
    /// Composite qubit transition, rad/s.
    pub omega01: f64,
}

/// Evaluates [`QubitResponse`] from the semi-classical gap and the
/// qubit B + coupler composite.
#[derive(Debug, Clone)]
pub struct ResponseEvaluator {
    loaded: LoadedQubits,
    composite: CompositeModel,
}

impl ResponseEvaluator {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        Ok(ResponseEvaluator {
            loaded: LoadedQubits::new(params)?,
            composite: CompositeModel::new(params)?.with_retained(Retained { a: 0, b: 7, c: 5 })?,
        })
    }

    /// Checks qubit and composite truncations at coupler bias `f_c`.
    pub fn verify(&self, f_c: f64) -> Result<()> {
        self.loaded.verify_convergence(QubitId::B, f_c)?;
        let f_b = self.composite.qubit_b_compensated_flux(f_c)?;
        self.composite
            .verify_retained_convergence(FluxPoint::new(0.0, f_b, f_c)?)?;
        Ok(())
    }

    pub fn eval(&self, f_c: f64) -> Result<QubitResponse> {
        let two_level = self.loaded.two_level(QubitId::B, f_c)?;
        let kappa = self.loaded.kappa(QubitId::B, f_c)?;
        let f_b = self.composite.qubit_b_compensated_flux(f_c)?;
        let sys = self.composite.build(FluxPoint::new(0.0, f_b, f_c)?)?;
        let sol = sys.eigen(8)?;
        let e = (1..sol.len())
            .find(|&j| sys.tag(sol.states.col(j)) == StateTag::QubitB)
            .ok_or_else(|| Error::Identification("no qubit-B-like composite state".into()))?;
        Ok(QubitResponse {
            f_c,
            f_b,
            delta_ghz: two_level.delta_ghz,
            kappa,
            element_na: sys.current_element(Subsystem::Coupler, &sol, e, 0)?,
            qubit_element_na: sys.current_element(Subsystem::QubitB, &sol, e, 0)?,
            omega01: units::ghz_to_rad_per_s(sol.energies[e] - sol.energies[0]),
        })
    }

    /// Responses over `grid`, checking truncation once at the first point.
    pub fn sweep(&self, grid: &[f64]) -> Result<Vec<QubitResponse>> {
        if let Some(&f) = grid.first() {
            self.verify(f).map_err(|e| e.at_flux(f))?;
        }
        grid.par_iter()
            .map(|&f| self.eval(f).map_err(|e| e.at_flux(f)))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherencePoint {
    pub response: QubitResponse,
    pub t1_coupler: f64,
    pub t1_qubit_background: f64,
    pub t1_total: f64,
    /// Coupler-noise dephasing rates Γ_{N,Φ_C}, 1/s.
    pub gamma0_phi: f64,
    pub gamma1_phi: f64,
    /// Total 1/e rates including backgrounds, 1/s.
    pub gamma0: f64,
    pub gamma1: f64,
    pub ramsey_background: f64,
    pub echo_background: f64,
    pub noise_gamma: f64,
}

impl CoherencePoint {
    pub fn t2_ramsey(&self) -> f64 {
        1.0 / self.gamma0
    }

    pub fn t2_echo(&self) -> f64 {
        1.0 / self.gamma1
    }

    /// Phase-decay envelope of `seq` at delay `tau`.
    pub fn envelope(&self, seq: Sequence, tau: f64) -> Result<f64> {
        let (other, phi) = match seq {
            Sequence::Ramsey => (self.ramsey_background, self.gamma0_phi),
            Sequence::Echo => (self.echo_background, self.gamma1_phi),
        };
        decay_envelope(other, phi, self.noise_gamma, tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceOptions {
    pub noise: NoiseModel,
    pub backgrounds: Backgrounds,
    /// Flux noise in qubit B's own loop, added to the relaxation background.
    pub qubit_noise: Option<NoiseModel>,
}

impl CoherenceOptions {
    pub fn new(noise: NoiseModel) -> Self {
        CoherenceOptions {
            noise,
            backgrounds: Backgrounds::default(),
            qubit_noise: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CoherenceReport {
    pub options: CoherenceOptions,
    pub eta0: f64,
    pub eta1: f64,
    pub points: Vec<CoherencePoint>,
}

/// Coherence predictions from precomputed qubit responses.
pub fn coherence_from_responses(
    responses: &[QubitResponse],
    options: &CoherenceOptions,
) -> Result<CoherenceReport> {
    let noise = &options.noise;
    noise.validate()?;
    options.backgrounds.validate()?;
    if let Some(q) = &options.qubit_noise {
        q.validate()?;
    }
    let eta0 = eta(Sequence::Ramsey, noise.gamma, noise.window())?;
    let eta1 = eta(Sequence::Echo, noise.gamma, noise.window())?;
    let bg = &options.backgrounds;
    let points = responses
        .iter()
        .map(|r| -> Result<CoherencePoint> {
            let coupler_rate = relaxation_rate(r.element_na, noise, r.omega01)?;
            let t1_coupler = if coupler_rate > 0.0 {
                1.0 / coupler_rate
            } else {
                f64::INFINITY
            };
            let qubit_rate = match &options.qubit_noise {
                Some(q) => relaxation_rate(r.qubit_element_na, q, r.omega01)?,
                None => 0.0,
            };
            let t1_qubit_background = if qubit_rate > 0.0 {
                1.0 / (1.0 / bg.t1_qubit + qubit_rate)
            } else {
                bg.t1_qubit
            };
            let gamma0_phi = rate_from_eta(r.kappa, noise.amplitude, noise.gamma, eta0);
            let gamma1_phi = rate_from_eta(r.kappa, noise.amplitude, noise.gamma, eta1);
            Ok(CoherencePoint {
                response: *r,
                t1_coupler,
                t1_qubit_background,
                t1_total: combine_t1(t1_coupler, t1_qubit_background),
                gamma0_phi,
                gamma1_phi,
                gamma0: total_rate(bg.ramsey, gamma0_phi, noise.gamma)?,
                gamma1: total_rate(bg.echo, gamma1_phi, noise.gamma)?,
                ramsey_background: bg.ramsey,
                echo_background: bg.echo,
                noise_gamma: noise.gamma,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoherenceReport {
        options: *options,
        eta0,
        eta1,
        points,
    })
}

/// Qubit B relaxation and dephasing versus coupler bias.
pub fn coherence_vs_coupler(
    params: &DeviceParams,
    options: &CoherenceOptions,
    grid: &[f64],
) -> Result<CoherenceReport> {
    options.noise.validate()?;
    let responses = ResponseEvaluator::new(params)?.sweep(grid)?;
    coherence_from_responses(&responses, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(kappa: f64, element: f64) -> QubitResponse {
        QubitResponse {
            f_c: 0.45,
            f_b: 0.5,
            delta_ghz: 5.0,
            kappa,
            element_na: element,
            qubit_element_na: 45.0,
            omega01: units::ghz_to_rad_per_s(5.0),
        }
    }

    #[test]
    fn zero_amplitude_equals_backgrounds() {
        let opts = CoherenceOptions::new(NoiseModel::reference().with_amplitude(0.0).unwrap());
        let r = coherence_from_responses(&[response(3e9, 20.0)], &opts).unwrap();
        let p = &r.points[0];
        assert_eq!(p.t1_total, DEFAULT_T1_BACKGROUND);
        assert_eq!(p.gamma0, opts.backgrounds.ramsey);
        assert_eq!(p.gamma1, opts.backgrounds.echo);
    }

    #[test]
    fn t1_decomposition_and_echo_ordering() {
        let opts = CoherenceOptions::new(NoiseModel::reference());
        let r =
            coherence_from_responses(&[response(3e9, 20.0), response(-1e8, 2.0)], &opts).unwrap();
        for p in &r.points {
            let lhs = 1.0 / p.t1_total;
            let rhs = 1.0 / p.t1_coupler + 1.0 / p.t1_qubit_background;
            assert!((lhs - rhs).abs() <= 1e-15 * lhs);
            assert!(p.gamma1 <= p.gamma0);
        }
    }

    #[test]
    fn qubit_channel_shortens_background() {
        let mut opts = CoherenceOptions::new(NoiseModel::reference());
        opts.qubit_noise = Some(NoiseModel::reference().with_amplitude(1.4e-6).unwrap());
        let r = coherence_from_responses(&[response(0.0, 0.0)], &opts).unwrap();
        assert!(r.points[0].t1_qubit_background < DEFAULT_T1_BACKGROUND);
    }

    #[test]
    fn echo_background_above_ramsey_rejected() {
        let b = Backgrounds {
            t1_qubit: 1e-6,
            ramsey: 1.0,
            echo: 2.0,
        };
        assert!(b.validate().is_err());
    }
}
