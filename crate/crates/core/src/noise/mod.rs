//! Flux-noise decoherence: power spectrum, pulse-sequence filter functions,
//! dephasing factors η_N, 1/e rates, golden-rule relaxation and the inverse
//! amplitude estimate.

mod coherence;
mod fit;

pub use coherence::*;
pub use fit::*;

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

/// Default qubit relaxation time from sources other than the coupler, s.
pub const DEFAULT_T1_BACKGROUND: f64 = 3.5e-6;
/// Upper end of the numerically integrated range of `z = ωτ`.
pub const QUADRATURE_CAP: f64 = 1e6;
/// Target relative accuracy of [`eta`].
pub const ETA_TOLERANCE: f64 = 1e-6;

/// `S(ω) = A² (2π·1 Hz/ω)^γ` flux noise with a low-frequency cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Amplitude at the 1 Hz pivot, Φ₀/√Hz.
    pub amplitude: f64,
    pub gamma: f64,
    /// rad/s.
    pub omega_low: f64,
    /// Typical free-evolution time, s.
    pub t_evol: f64,
}

impl NoiseModel {
    pub fn new(amplitude: f64, gamma: f64, omega_low: f64, t_evol: f64) -> Result<Self> {
        let m = NoiseModel {
            amplitude,
            gamma,
            omega_low,
            t_evol,
        };
        m.validate()?;
        Ok(m)
    }

    /// 15 μΦ₀/√Hz, γ = 0.91, ω_low/2π = 3 mHz, t = 200 ns.
    pub fn reference() -> Self {
        NoiseModel {
            amplitude: 15e-6,
            gamma: 0.91,
            omega_low: 2.0 * PI * 3e-3,
            t_evol: 200e-9,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Result<Self> {
        self.amplitude = amplitude;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(Error::Validation(format!(
                "noise amplitude must be finite and non-negative, got {}",
                self.amplitude
            )));
        }
        check_gamma(self.gamma)?;
        if !(self.omega_low > 0.0 && self.t_evol > 0.0) {
            return Err(Error::Validation(
                "omega_low and t_evol must be positive".into(),
            ));
        }
        check_window(self.window())
    }

    /// `ω_low · t`.
    pub fn window(&self) -> f64 {
        self.omega_low * self.t_evol
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "noise exponent must lie in (0, 2), got {gamma}"
        )))
    }
}

fn check_window(window: f64) -> Result<()> {
    if window > 0.0 && window < 1.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "omega_low * t must lie in (0, 1), got {window}"
        )))
    }
}

/// Free-evolution pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sequence {
    Ramsey,
    Echo,
}

impl Sequence {
    pub fn index(&self) -> u8 {
        match self {
            Sequence::Ramsey => 0,
            Sequence::Echo => 1,
        }
    }
}

/// Noise power at angular frequency `omega`, Φ₀²/Hz.
pub fn psd(model: &NoiseModel, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!(
            "PSD needs a positive frequency, got {omega}"
        )));
    }
    Ok(model.amplitude.powi(2) * (2.0 * PI / omega).powf(model.gamma))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `g₀(z) = sinc²(z/2)`, `g₁(z) = sinc²(z/4) sin²(z/4)`.
pub fn filter_function(seq: Sequence, z: f64) -> f64 {
    match seq {
        Sequence::Ramsey => sinc(0.5 * z).powi(2),
        Sequence::Echo => (sinc(0.25 * z) * (0.25 * z).sin()).powi(2),
    }
}

fn rule(degree: usize) -> &'static GaussLegendre {
    static LOW: OnceLock<GaussLegendre> = OnceLock::new();
    static HIGH: OnceLock<GaussLegendre> = OnceLock::new();
    let cell = if degree == LOW_DEGREE { &LOW } else { &HIGH };
    cell.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(degree).expect("nonzero degree")))
}

const LOW_DEGREE: usize = 20;
const HIGH_DEGREE: usize = 30;

/// `∫_{lo}^{∞} z^{−γ} g(z) dz`: log-variable panels up to the first period,
/// one panel per period up to the cap, and the period-averaged tail beyond.
fn integrate(seq: Sequence, gamma: f64, lo: f64, degree: usize) -> f64 {
    let gl = rule(degree);
    let f = |z: f64| z.powf(-gamma) * filter_function(seq, z);
    // sin² repeats every 2π in z/2 and sin⁴ every 4π in z/4.
    let period = match seq {
        Sequence::Ramsey => 2.0 * PI,
        Sequence::Echo => 4.0 * PI,
    };
    let mut total = 0.0;
    let mut start = lo;
    if lo < period {
        // Below ~1e-14 the echo integrand is below z^{2−γ}/16 and negligible.
        let u_lo = lo.max(1e-14).ln();
        let u_hi = period.ln();
        let panels = (u_hi - u_lo).ceil() as usize;
        let w = (u_hi - u_lo) / panels as f64;
        for k in 0..panels {
            let a = u_lo + k as f64 * w;
            total += gl.integrate(a, a + w, |u| {
                let z = u.exp();
                z * f(z)
            });
        }
        start = period;
    }
    let periods = ((QUADRATURE_CAP - start) / period).ceil().max(0.0) as usize;
    for k in 0..periods {
        let a = start + k as f64 * period;
        total += gl.integrate(a, a + period, f);
    }
    let cap = start + periods as f64 * period;
    // Period averages: ⟨4 sin²(z/2)⟩ = 2 and ⟨16 sin⁴(z/4)⟩ = 6 over z^{−γ−2}.
    let weight = match seq {
        Sequence::Ramsey => 2.0,
        Sequence::Echo => 6.0,
    };
    total + weight * cap.powf(-gamma - 1.0) / (gamma + 1.0)
}

/// `η_N = (2π)^{γ−1} ∫ z^{−γ} g_N(z) dz`, with the Ramsey integral starting
/// at `window = ω_low t` and the echo integral at zero.
pub fn eta(seq: Sequence, gamma: f64, window: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let lo = match seq {
        Sequence::Ramsey => {
            check_window(window)?;
            window
        }
        Sequence::Echo => 0.0,
    };
    let coarse = integrate(seq, gamma, lo, LOW_DEGREE);
    let fine = integrate(seq, gamma, lo, HIGH_DEGREE);
    let rel = ((fine - coarse) / fine).abs();
    if !fine.is_finite() || !(rel < 0.1 * ETA_TOLERANCE) {
        return Err(Error::Numeric(format!(
            "eta_{} quadrature unconverged at gamma = {gamma}: orders {LOW_DEGREE}/{HIGH_DEGREE} give {coarse:.9e}/{fine:.9e}",
            seq.index()
        )));
    }
    Ok((2.0 * PI).powf(gamma - 1.0) * fine)
}

/// 1/e dephasing rate `Γ = (κ A √η)^{2/(1+γ)}` (1/s) for sensitivity
/// `kappa` in rad/s per Φ₀.
pub fn dephasing_rate(kappa: f64, model: &NoiseModel, seq: Sequence) -> Result<f64> {
    let eta = eta(seq, model.gamma, model.window())?;
    Ok(rate_from_eta(kappa, model.amplitude, model.gamma, eta))
}

pub(crate) fn rate_from_eta(kappa: f64, amplitude: f64, gamma: f64, eta: f64) -> f64 {
    (kappa.abs() * amplitude * eta.sqrt()).powf(2.0 / (1.0 + gamma))
}

/// Coupler-limited relaxation time `ħ² / (2 |⟨e|Î|g⟩ Φ₀|² S(ω₀₁))`, s, for
/// a matrix element in nA. Infinite when the element vanishes.
pub fn t1_coupler_limit(element_na: f64, model: &NoiseModel, omega01: f64) -> Result<f64> {
    let rate = relaxation_rate(element_na, model, omega01)?;
    Ok(if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    })
}

pub(crate) fn relaxation_rate(element_na: f64, model: &NoiseModel, omega01: f64) -> Result<f64> {
    let s = psd(model, omega01)?;
    let coupling = units::na_to_amp(element_na) * units::FLUX_QUANTUM / units::HBAR;
    Ok(2.0 * coupling * coupling * s)
}

/// `1/T₁ = 1/T₁^Q + 1/T₁^C`.
pub fn combine_t1(t1_coupler: f64, t1_background: f64) -> f64 {
    if t1_coupler.is_infinite() {
        return t1_background;
    }
    1.0 / (1.0 / t1_coupler + 1.0 / t1_background)
}

/// `exp[−Γ_other τ − (Γ_ΦC τ)^{1+γ}]`.
pub fn decay_envelope(gamma_other: f64, gamma_phi: f64, gamma: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!(
            "decay time must be non-negative, got {tau}"
        )));
    }
    Ok((-gamma_other * tau - (gamma_phi * tau).powf(1.0 + gamma)).exp())
}

/// 1/e rate of [`decay_envelope`]: the `x` solving
/// `Γ_other/x + (Γ_ΦC/x)^{1+γ} = 1`.
pub fn total_rate(gamma_other: f64, gamma_phi: f64, gamma: f64) -> Result<f64> {
    if !(gamma_other >= 0.0 && gamma_phi >= 0.0) {
        return Err(Error::Domain("decay rates must be non-negative".into()));
    }
    if gamma_phi == 0.0 {
        return Ok(gamma_other);
    }
    if gamma_other == 0.0 {
        return Ok(gamma_phi);
    }
    let g = |x: f64| gamma_other / x + (gamma_phi / x).powf(1.0 + gamma) - 1.0;
    // g is decreasing, g(max) > 0 and g(sum) < 0.
    let (lo, hi) = (gamma_other.max(gamma_phi), gamma_other + gamma_phi);
    if g(hi) >= 0.0 {
        return Ok(hi);
    }
    crate::optimize::find_root(|x| Ok(g(x)), lo, hi, 1e-14 * hi)
}

/// Inverts a measured 1/e rate: `Γ_ΦC = Γ_N (1 − Γ_other/Γ_N)^{1/(1+γ)}` and
/// `A = Γ_ΦC^{(1+γ)/2} / (κ √η_N)`, Φ₀/√Hz.
pub fn estimate_amplitude(
    gamma_n: f64,
    gamma_other: f64,
    kappa: f64,
    gamma: f64,
    eta_n: f64,
) -> Result<f64> {
    let g_phi = coupler_dephasing(gamma_n, gamma_other, gamma, 0)?;
    if g_phi == 0.0 {
        return Ok(0.0);
    }
    if kappa == 0.0 {
        return Err(Error::UnboundedAmplitude(
            "zero sensitivity: any amplitude is consistent with the excess dephasing".into(),
        ));
    }
    Ok(g_phi.powf(0.5 * (1.0 + gamma)) / (kappa.abs() * eta_n.sqrt()))
}

/// Coupler share of a total 1/e rate.
pub(crate) fn coupler_dephasing(
    gamma_n: f64,
    gamma_other: f64,
    gamma: f64,
    row: usize,
) -> Result<f64> {
    if !(gamma_other > 0.0 && gamma_n.is_finite()) {
        return Err(Error::InconsistentData {
            row,
            detail: format!("background rate must be positive, got {gamma_other}"),
        });
    }
    if gamma_n < gamma_other {
        return Err(Error::InconsistentData {
            row,
            detail: format!("rate {gamma_n} is below its background {gamma_other}"),
        });
    }
    Ok(gamma_n * (1.0 - gamma_other / gamma_n).powf(1.0 / (1.0 + gamma)))
}

/// Amplitude from a coupler-limited relaxation rate `Γ₁ − Γ₁^Q`.
pub fn estimate_amplitude_t1(
    gamma1: f64,
    gamma1_background: f64,
    element_na: f64,
    omega01: f64,
    gamma: f64,
) -> Result<f64> {
    if gamma1 < gamma1_background || !(gamma1_background > 0.0) {
        return Err(Error::InconsistentData {
            row: 0,
            detail: format!("relaxation rate {gamma1} below background {gamma1_background}"),
        });
    }
    let excess = gamma1 - gamma1_background;
    if excess == 0.0 {
        return Ok(0.0);
    }
    if element_na == 0.0 {
        return Err(Error::UnboundedAmplitude(
            "vanishing coupler matrix element".into(),
        ));
    }
    let unit = NoiseModel {
        amplitude: 1.0,
        gamma,
        omega_low: 1.0,
        t_evol: 0.5,
    };
    Ok((excess / relaxation_rate(element_na, &unit, omega01)?).sqrt())
}

/// First-order sensitivity of `ω₀₁ = √(ε² + Δ²)` to a parameter moving ε
/// and Δ at rates `kappa_eps` and `kappa_delta`.
pub fn sensitivity(epsilon: f64, delta: f64, kappa_eps: f64, kappa_delta: f64) -> f64 {
    let w = epsilon.hypot(delta);
    (epsilon * kappa_eps + delta * kappa_delta) / w
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psd_pivot_and_scaling() {
        let m = NoiseModel::reference();
        assert_relative_eq!(
            psd(&m, 2.0 * PI).unwrap(),
            m.amplitude.powi(2),
            max_relative = 1e-14
        );
        let r = psd(&m, 2.0 * PI * 5.0).unwrap() / psd(&m, 2.0 * PI * 50.0).unwrap();
        assert_relative_eq!(r, 10f64.powf(m.gamma), max_relative = 1e-12);
        let w = 2.0 * PI * 5.1e9;
        assert_relative_eq!(
            psd(&m, w).unwrap(),
            m.amplitude.powi(2) * 5.1e9f64.powf(-0.91),
            max_relative = 1e-12
        );
        assert!(matches!(psd(&m, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn filter_values() {
        assert_eq!(filter_function(Sequence::Ramsey, 0.0), 1.0);
        assert_eq!(filter_function(Sequence::Echo, 0.0), 0.0);
        assert_relative_eq!(
            filter_function(Sequence::Echo, 2.0 * PI),
            (2.0 / PI).powi(2),
            max_relative = 1e-14
        );
    }

    #[test]
    fn echo_factor_at_unit_exponent() {
        assert!((eta(Sequence::Echo, 1.0, 0.1).unwrap() - 2f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn ramsey_factor_tracks_log_window() {
        let w = 2.0 * PI * 3e-3 * 200e-9;
        let e = eta(Sequence::Ramsey, 1.0, w).unwrap();
        assert!((e / (1.0 / w).ln() - 1.0).abs() < 0.05, "{e}");
        let e2 = eta(Sequence::Ramsey, 1.0, w / 10.0).unwrap();
        assert!(((e2 - e) / 10f64.ln() - 1.0).abs() < 0.05);
    }

    #[test]
    fn zero_sensitivity_gives_zero_rate() {
        let m = NoiseModel::reference();
        assert_eq!(dephasing_rate(0.0, &m, Sequence::Echo).unwrap(), 0.0);
    }

    #[test]
    fn t1_background_only_without_element() {
        let m = NoiseModel::reference();
        let t1c = t1_coupler_limit(0.0, &m, 3e10).unwrap();
        assert!(t1c.is_infinite());
        assert_eq!(
            combine_t1(t1c, DEFAULT_T1_BACKGROUND),
            DEFAULT_T1_BACKGROUND
        );
        let r1 = 1.0 / t1_coupler_limit(1.0, &m, 3e10).unwrap();
        let r4 = 1.0 / t1_coupler_limit(4.0, &m, 3e10).unwrap();
        assert_relative_eq!(r4 / r1, 16.0, max_relative = 1e-12);
    }

    #[test]
    fn envelope_defines_rate() {
        for g in [0.8, 0.91, 1.3] {
            assert_relative_eq!(
                decay_envelope(0.0, 2e5, g, 1.0 / 2e5).unwrap(),
                (-1f64).exp()
            );
            let x = total_rate(1e5, 3e5, g).unwrap();
            assert_relative_eq!(
                decay_envelope(1e5, 3e5, g, 1.0 / x).unwrap(),
                (-1f64).exp(),
                max_relative = 1e-10
            );
        }
        assert_eq!(decay_envelope(1.0, 0.0, 0.9, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn inconsistent_and_unbounded() {
        assert!(matches!(
            estimate_amplitude(1.0, 2.0, 1e9, 0.9, 1.0),
            Err(Error::InconsistentData { .. })
        ));
        assert!(matches!(
            estimate_amplitude(3.0, 2.0, 0.0, 0.9, 1.0),
            Err(Error::UnboundedAmplitude(_))
        ));
        assert_eq!(estimate_amplitude(2.0, 2.0, 1e9, 0.9, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn model_validation() {
        assert!(NoiseModel::new(-1.0, 1.0, 1.0, 0.1).is_err());
        assert!(NoiseModel::new(1e-6, 2.0, 1.0, 0.1).is_err());
        assert!(NoiseModel::new(1e-6, 1.0, 10.0, 0.2).is_err());
        assert!(NoiseModel::new(1e-6, 1.0, 1.0, 0.2).is_ok());
    }

    #[test]
    fn sensitivity_at_degeneracy() {
        assert_eq!(sensitivity(0.0, 5.0, 7.0, 3.0), 3.0);
    }
}
