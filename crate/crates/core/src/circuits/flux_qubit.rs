use std::f64::consts::PI;

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use super::{
    junction_capacitance, CircuitHamiltonian, DeviceParams, Gauge, QubitId,
    CONVERGENCE_TOLERANCE_GHZ,
};
use crate::error::{Error, Result};
use crate::operators::{self, HermitianOperator, ModeBasis};
use crate::units;

/// Default levels per normal mode, lowest-frequency mode first.
pub const DEFAULT_QUBIT_LEVELS: [usize; 3] = [16, 12, 6];

const NEWTON_MAX_ITERS: usize = 200;

/// Linearized circuit about the classical potential minimum.
#[derive(Debug, Clone)]
pub struct NormalModes {
    /// Branch phases `θ_j` of the three junctions at the minimum.
    pub theta: [f64; 3],
    /// Inductor phase at the minimum.
    pub phi_l: f64,
    /// Mode frequencies (GHz), ascending.
    pub omega: [f64; 3],
    /// `δθ_j = Σ_k s[j][k] y_k`, with `y_k` the unit-mass mode coordinate.
    pub s: [[f64; 3]; 3],
}

/// Three-junction ring (large, small ∥ C_sh, large) closed by a linear
/// inductor, quantized in the normal-mode oscillator basis.
#[derive(Debug, Clone)]
pub struct FluxQubit {
    which: QubitId,
    ej: [f64; 3],
    el: f64,
    capacitance: [f64; 3],
    l_ph: f64,
    levels: [usize; 3],
    gauge: Gauge,
}

impl FluxQubit {
    /// Qubit `which` of `params`; `l_override` replaces the loop inductance.
    pub fn new(params: &DeviceParams, which: QubitId, l_override: Option<f64>) -> Result<Self> {
        params.validate()?;
        let q = params.qubit(which);
        let l_ph = l_override.unwrap_or(q.l_q_ph);
        if !(l_ph.is_finite() && l_ph > 0.0) {
            return Err(Error::Validation(format!(
                "qubit {which} loop inductance must be positive, got {l_ph} pH"
            )));
        }
        let c_lg = junction_capacitance(q.i0_large_na, params)?;
        let c_sm = junction_capacitance(q.i0_small_na, params)?;
        Ok(FluxQubit {
            which,
            ej: [
                units::josephson_energy(q.i0_large_na),
                units::josephson_energy(q.i0_small_na),
                units::josephson_energy(q.i0_large_na),
            ],
            el: units::inductive_energy(l_ph),
            capacitance: [c_lg, c_sm + q.c_shunt_ff, c_lg],
            l_ph,
            levels: DEFAULT_QUBIT_LEVELS,
            gauge: Gauge::Inductor,
        })
    }

    pub fn with_levels(mut self, levels: [usize; 3]) -> Result<Self> {
        for &n in &levels {
            ModeBasis::harmonic(n, 1.0)?;
        }
        self.levels = levels;
        Ok(self)
    }

    pub fn with_gauge(mut self, gauge: Gauge) -> Result<Self> {
        if let Gauge::Junction(k) = gauge {
            if k >= 3 {
                return Err(Error::Validation(format!(
                    "junction gauge index {k} out of range"
                )));
            }
        }
        self.gauge = gauge;
        Ok(self)
    }

    /// Replaces the branch capacitances (fF). The matrix must be positive
    /// definite.
    pub fn with_capacitance(mut self, capacitance: [f64; 3]) -> Result<Self> {
        if capacitance.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return Err(Error::Validation(format!(
                "capacitance matrix diag{capacitance:?} is not positive definite"
            )));
        }
        self.capacitance = capacitance;
        Ok(self)
    }

    pub fn which(&self) -> QubitId {
        self.which
    }

    pub fn levels(&self) -> [usize; 3] {
        self.levels
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn loop_inductance_ph(&self) -> f64 {
        self.l_ph
    }

    fn offsets(&self, f: f64) -> ([f64; 3], f64) {
        let ext = 2.0 * PI * f;
        match self.gauge {
            Gauge::Inductor => ([0.0; 3], ext),
            Gauge::Junction(k) => {
                let mut o = [0.0; 3];
                o[k] = ext;
                (o, 0.0)
            }
        }
    }

    /// Potential energy (GHz) for node variables `psi`.
    fn potential(&self, psi: &[f64; 3], f: f64) -> f64 {
        let (o, ol) = self.offsets(f);
        let phi_l = ol - psi.iter().sum::<f64>();
        0.5 * self.el * phi_l * phi_l
            - (0..3)
                .map(|j| self.ej[j] * (psi[j] + o[j]).cos())
                .sum::<f64>()
    }

    /// Classical minimum by damped Newton iteration from the state with the
    /// whole bias on the small junction.
    fn minimum(&self, f: f64) -> Result<[f64; 3]> {
        let (o, ol) = self.offsets(f);
        let mut psi = [-o[0], 2.0 * PI * f - o[1], -o[2]];
        let scale = self.el.max(self.ej.iter().cloned().fold(0.0, f64::max));
        for _ in 0..NEWTON_MAX_ITERS {
            let phi_l = ol - psi.iter().sum::<f64>();
            let grad: [f64; 3] =
                std::array::from_fn(|j| -self.el * phi_l + self.ej[j] * (psi[j] + o[j]).sin());
            if grad.iter().all(|g| g.abs() < 1e-13 * scale) {
                return Ok(psi);
            }
            let hess = Mat::from_fn(3, 3, |i, j| {
                self.el
                    + if i == j {
                        self.ej[i] * (psi[i] + o[i]).cos()
                    } else {
                        0.0
                    }
            });
            let step: [f64; 3] = match hess.llt(Side::Lower) {
                Ok(llt) => {
                    let rhs = Mat::from_fn(3, 1, |i, _| -grad[i]);
                    let x = llt.solve(&rhs);
                    std::array::from_fn(|i| x[(i, 0)])
                }
                Err(_) => std::array::from_fn(|i| -grad[i] / (self.el + self.ej[i])),
            };
            let predicted = -0.5 * (0..3).map(|i| grad[i] * step[i]).sum::<f64>();
            if predicted.abs() < 1e-12 * scale {
                psi = std::array::from_fn(|i| psi[i] + step[i]);
                continue;
            }
            let u0 = self.potential(&psi, f);
            let mut t = 1.0;
            loop {
                let trial: [f64; 3] = std::array::from_fn(|i| psi[i] + t * step[i]);
                if self.potential(&trial, f) <= u0 || t < 1e-10 {
                    psi = trial;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::Numeric(format!(
            "classical minimum search did not converge at f = {f}"
        )))
    }

    /// Potential minimum and normal modes at flux `f`.
    pub fn normal_modes(&self, f: f64) -> Result<NormalModes> {
        if !f.is_finite() {
            return Err(Error::Validation(format!("non-finite qubit flux {f}")));
        }
        let psi = self.minimum(f)?;
        let (o, ol) = self.offsets(f);
        let theta: [f64; 3] = std::array::from_fn(|j| psi[j] + o[j]);
        let phi_l = ol - psi.iter().sum::<f64>();
        // T = ½ nᵀ W n with W = 8 E_C(1 fF) C⁻¹; the capacitance matrix is
        // diagonal in branch variables.
        let ec1 = units::charging_energy(1.0);
        let w_sqrt: [f64; 3] = std::array::from_fn(|j| (8.0 * ec1 / self.capacitance[j]).sqrt());
        let a = Mat::from_fn(3, 3, |i, j| {
            let k = self.el
                + if i == j {
                    self.ej[i] * theta[i].cos()
                } else {
                    0.0
                };
            w_sqrt[i] * k * w_sqrt[j]
        });
        let evd = a
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Solver {
                dim: 3,
                detail: format!("{e:?}"),
            })?;
        let ev = evd.S().column_vector();
        let u = evd.U();
        let mut omega = [0.0; 3];
        for k in 0..3 {
            if !(ev[k] > 0.0) {
                return Err(Error::Numeric(format!(
                    "potential at f = {f} is not a minimum (curvature {:.3e})",
                    ev[k]
                )));
            }
            omega[k] = ev[k].sqrt();
        }
        let s = std::array::from_fn(|j| std::array::from_fn(|k| w_sqrt[j] * u[(j, k)]));
        Ok(NormalModes {
            theta,
            phi_l,
            omega,
            s,
        })
    }

    pub fn build(&self, f: f64) -> Result<CircuitHamiltonian> {
        let modes = self.normal_modes(f)?;
        let NormalModes {
            theta,
            phi_l,
            omega,
            s,
        } = modes;
        let basis: Vec<ModeBasis> = (0..3)
            .map(|k| ModeBasis::harmonic(self.levels[k], 1.0 / (2.0 * omega[k]).sqrt()))
            .collect::<Result<_>>()?;
        let dims = self.levels;
        let n: usize = dims.iter().product();
        let ident: Vec<Mat<f64>> = dims.iter().map(|&d| Mat::identity(d, d)).collect();
        let x: Vec<Mat<f64>> = basis.iter().map(|b| b.phase()).collect::<Result<_>>()?;
        let x2: Vec<Mat<f64>> = basis
            .iter()
            .map(|b| b.phase_squared())
            .collect::<Result<_>>()?;
        fn embed<'a>(ident: &'a [Mat<f64>], slot: usize, op: &'a Mat<f64>) -> Vec<MatRef<'a, f64>> {
            (0..ident.len())
                .map(|k| {
                    if k == slot {
                        op.as_ref()
                    } else {
                        ident[k].as_ref()
                    }
                })
                .collect()
        }

        let mut h = Mat::<f64>::zeros(n, n);
        let constant = 0.5 * self.el * phi_l * phi_l;
        for idx in 0..n {
            let m = [
                idx / (dims[1] * dims[2]),
                (idx / dims[2]) % dims[1],
                idx % dims[2],
            ];
            h[(idx, idx)] = constant + (0..3).map(|k| omega[k] * (m[k] as f64 + 0.5)).sum::<f64>();
        }

        // Inductor force at the minimum, balanced by the junctions.
        let s_sum: [f64; 3] = std::array::from_fn(|k| (0..3).map(|j| s[j][k]).sum());
        for k in 0..3 {
            operators::add_kron_real(
                &mut h,
                &embed(&ident, k, &x[k]),
                -self.el * phi_l * s_sum[k],
            );
        }

        // Remove the junctions' quadratic part, already inside the modes.
        let q: [[f64; 3]; 3] = std::array::from_fn(|k| {
            std::array::from_fn(|l| {
                (0..3)
                    .map(|j| self.ej[j] * theta[j].cos() * s[j][k] * s[j][l])
                    .sum()
            })
        });
        for k in 0..3 {
            operators::add_kron_real(&mut h, &embed(&ident, k, &x2[k]), -0.5 * q[k][k]);
            for l in k + 1..3 {
                let factors: Vec<_> = (0..3)
                    .map(|m| {
                        if m == k {
                            x[k].as_ref()
                        } else if m == l {
                            x[l].as_ref()
                        } else {
                            ident[m].as_ref()
                        }
                    })
                    .collect();
                operators::add_kron_real(&mut h, &factors, -q[k][l]);
            }
        }

        let displacements = |j: usize| -> Result<Vec<Mat<C64>>> {
            (0..3).map(|k| basis[k].exp_i_phase(s[j][k])).collect()
        };
        for (j, (&ej, &th)) in self.ej.iter().zip(&theta).enumerate() {
            let d = displacements(j)?;
            operators::add_kron_real_part(&mut h, &d, -ej * C64::from_polar(1.0, th));
        }

        let to_na = 2.0 * PI / units::FLUX_ENERGY_GHZ_PER_NA;
        let mut current = Mat::<f64>::zeros(n, n);
        for i in 0..n {
            current[(i, i)] = to_na * self.el * phi_l;
        }
        for k in 0..3 {
            operators::add_kron_real(
                &mut current,
                &embed(&ident, k, &x[k]),
                -to_na * self.el * s_sum[k],
            );
        }
        let current_op = HermitianOperator::from_real_unchecked(current);
        let flux_derivative_op = match self.gauge {
            Gauge::Inductor => current_op.clone(),
            Gauge::Junction(j) => {
                let mut m = Mat::<f64>::zeros(n, n);
                // sin(θ + δ) = Re(−i e^{iθ} e^{iδ})
                let coeff = C64::new(0.0, -1.0) * C64::from_polar(to_na * self.ej[j], theta[j]);
                operators::add_kron_real_part(&mut m, &displacements(j)?, coeff);
                HermitianOperator::from_real_unchecked(m)
            }
        };
        Ok(CircuitHamiltonian {
            hamiltonian: HermitianOperator::from_real_unchecked(h),
            current_op,
            flux_derivative_op,
            basis,
            gauge: self.gauge,
        })
    }

    /// Lowest `k` energies (GHz) without eigenvectors.
    pub fn energies(&self, f: f64, k: usize) -> Result<Vec<f64>> {
        operators::lowest_eigenvalues(&self.build(f)?.hamiltonian, k)
    }

    /// 0–1 transition frequency (GHz).
    pub fn gap_ghz(&self, f: f64) -> Result<f64> {
        let e = self.energies(f, 2)?;
        Ok(e[1] - e[0])
    }

    /// Largest change (GHz) of the lowest `k` transitions when every mode
    /// gains two levels; a convergence error names the most sensitive mode
    /// when the change reaches 1 kHz.
    pub fn verify_convergence(&self, f: f64, k: usize) -> Result<f64> {
        let transitions = |q: &FluxQubit| -> Result<Vec<f64>> {
            let e = q.energies(f, k)?;
            Ok(e.iter().map(|x| x - e[0]).collect())
        };
        let base = transitions(self)?;
        let all = self.clone().with_levels(self.levels.map(|n| n + 2))?;
        let shift = max_shift(&base, &transitions(&all)?);
        if shift < CONVERGENCE_TOLERANCE_GHZ {
            return Ok(shift);
        }
        let mut worst = (0, 0.0);
        for m in 0..3 {
            let mut levels = self.levels;
            levels[m] += 2;
            let d = max_shift(&base, &transitions(&self.clone().with_levels(levels)?)?);
            if d > worst.1 {
                worst = (m, d);
            }
        }
        Err(Error::Convergence {
            mode: format!("qubit {} normal mode {}", self.which, worst.0),
            levels: self.levels[worst.0],
            shift_khz: shift * 1e6,
            tolerance_khz: CONVERGENCE_TOLERANCE_GHZ * 1e6,
        })
    }
}

fn max_shift(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Qubit Hamiltonian at reduced flux `f_q` with the default truncation.
pub fn build_flux_qubit(
    params: &DeviceParams,
    which: QubitId,
    f_q: f64,
    l_override: Option<f64>,
) -> Result<CircuitHamiltonian> {
    FluxQubit::new(params, which, l_override)?.build(f_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{eigendecompose, lowest_eigenvalues};

    fn small_qubit() -> FluxQubit {
        FluxQubit::new(&DeviceParams::table1_semiclassical(), QubitId::B, None)
            .unwrap()
            .with_levels([10, 6, 4])
            .unwrap()
    }

    #[test]
    fn minimum_at_degeneracy_is_symmetric() {
        let m = small_qubit().normal_modes(0.5).unwrap();
        assert!(m.theta[0].abs() < 1e-10 && m.theta[2].abs() < 1e-10);
        assert!((m.theta[1] - PI).abs() < 1e-10);
        assert!(m.phi_l.abs() < 1e-10);
        assert!(m.omega[0] < m.omega[1] && m.omega[1] < m.omega[2]);
    }

    #[test]
    fn reflection_and_periodicity() {
        let q = small_qubit();
        let e = |f: f64| q.energies(f, 3).unwrap();
        let (a, b, c) = (e(0.497), e(0.503), e(1.497));
        for k in 0..3 {
            assert!(
                (a[k] - b[k]).abs() < 1e-6,
                "reflection {k}: {} vs {}",
                a[k],
                b[k]
            );
            assert!(
                (a[k] - c[k]).abs() < 1e-6,
                "period {k}: {} vs {}",
                a[k],
                c[k]
            );
        }
    }

    #[test]
    fn gauge_choice_leaves_spectrum_unchanged() {
        let q = small_qubit();
        let f = 0.496;
        let base = q.energies(f, 4).unwrap();
        for k in 0..3 {
            let e = q
                .clone()
                .with_gauge(Gauge::Junction(k))
                .unwrap()
                .energies(f, 4)
                .unwrap();
            for i in 0..4 {
                assert!((e[i] - base[i]).abs() < 1e-6, "gauge {k} level {i}");
            }
        }
    }

    #[test]
    fn flux_derivative_agrees_across_gauges() {
        let q = small_qubit();
        let f = 0.496;
        let reference = {
            let c = q.build(f).unwrap();
            let sol = eigendecompose(&c.hamiltonian, 1).unwrap();
            c.flux_derivative_op.expectation(sol.states.as_ref(), 0)
        };
        let c = q
            .clone()
            .with_gauge(Gauge::Junction(1))
            .unwrap()
            .build(f)
            .unwrap();
        let sol = eigendecompose(&c.hamiltonian, 1).unwrap();
        let v = c.flux_derivative_op.expectation(sol.states.as_ref(), 0);
        assert!(
            (v - reference).abs() < 1e-3 * reference.abs(),
            "{v} vs {reference}"
        );
    }

    #[test]
    fn hellmann_feynman() {
        let q = small_qubit();
        let f = 0.496;
        let h = 1e-5;
        let e0 = |f: f64| q.energies(f, 1).unwrap()[0];
        let slope = (e0(f + h) - e0(f - h)) / (2.0 * h) / units::FLUX_ENERGY_GHZ_PER_NA;
        let c = q.build(f).unwrap();
        let sol = eigendecompose(&c.hamiltonian, 1).unwrap();
        let op = c.current_op.expectation(sol.states.as_ref(), 0);
        assert!(
            (slope - op).abs() < 1e-3 * op.abs(),
            "slope {slope} op {op}"
        );
    }

    #[test]
    fn minimum_found_across_bias_range() {
        let q = FluxQubit::new(&DeviceParams::table1_semiclassical(), QubitId::A, None).unwrap();
        for i in 0..=400 {
            let f = 0.48 + i as f64 * 1e-4 + 1.37e-7;
            assert!(q.normal_modes(f).is_ok(), "no minimum at {f}");
        }
    }

    #[test]
    fn invalid_capacitance_rejected() {
        assert!(small_qubit().with_capacitance([1.0, -2.0, 1.0]).is_err());
    }

    #[test]
    fn hamiltonian_and_current_share_dimension() {
        let c = small_qubit().build(0.5).unwrap();
        assert_eq!(c.dim(), 240);
        assert_eq!(c.current_op.dim(), 240);
        let e = lowest_eigenvalues(&c.hamiltonian, 2).unwrap();
        assert!(e[1] > e[0]);
    }
}
