//! Composite qubit–coupler–qubit model in the product of truncated bare
//! eigenbases, two-qubit spectroscopy sweeps and avoided-crossing analysis.
//!
//! The qubits act on the coupler by shifting its external flux by
//! `Σ M̃_i Î^i`. Expanding the coupler's inductive energy gives the bilinear
//! terms `M̃_i Î^i Î^C` and the flux-shift term `(Σ M̃_i Î^i)²/2L_C`.
//!
//! The static part `M̃_i ⟨Î^C⟩ Î^i` of each bilinear term is absorbed into
//! the qubit's bias: in the inductor gauge `H(f + δ) = H(f) + δ ∂H/∂f` up to
//! a constant, so the qubit is diagonalized at the shifted flux and couples
//! through `Î^C − ⟨Î^C⟩`. The rewrite is exact before truncation and keeps
//! the bare eigenbasis close to the dressed one.

use faer::{ColRef, Mat};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::circuits::{CircuitHamiltonian, DeviceParams, FluxPoint, FluxQubit, QubitId, RfSquid};
use crate::error::{Error, Result};
use crate::operators::{self, eigendecompose, EigenSolution, HermitianOperator};
use crate::optimize;
use crate::semiclassical::coupler_mutual;
use crate::units;

/// Overlap with a bare product state required to identify an eigenstate.
pub const IDENTIFICATION_THRESHOLD: f64 = 0.5;
/// Composite transitions must move less than this (GHz) when each retained
/// count grows by two.
pub const RETAINED_TOLERANCE_GHZ: f64 = 1e-5;
/// Default spacing (Φ₀) of the refinement points around a crossing.
pub const RESONANCE_RESOLUTION: f64 = 2e-4;
/// Default qubit B bias offset from degeneracy (Φ₀) in crossing sweeps.
pub const DEFAULT_FB_OFFSET: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Subsystem {
    QubitA,
    QubitB,
    Coupler,
}

/// Retained bare levels per subsystem; `a = 0` leaves qubit A out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Retained {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

pub const DEFAULT_RETAINED: Retained = Retained { a: 5, b: 5, c: 5 };

/// A diagonalized bare circuit restricted to its lowest levels.
#[derive(Debug, Clone)]
pub struct BareSubsystem {
    /// GHz, ascending.
    pub energies: Vec<f64>,
    /// Loop current in the retained eigenbasis, nA.
    pub current: Mat<C64>,
    /// `P Î² P` evaluated in the full basis before truncation, nA².
    pub current_sq: Mat<C64>,
}

impl BareSubsystem {
    pub fn from_circuit(circuit: &CircuitHamiltonian, k: usize) -> Result<Self> {
        let sol = eigendecompose(&circuit.hamiltonian, k)?;
        let iv = circuit.current_op.apply(sol.states.as_ref());
        let current = sol.states.adjoint() * &iv;
        let current_sq = iv.adjoint() * &iv;
        Ok(BareSubsystem {
            energies: sol.energies,
            current,
            current_sq,
        })
    }

    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    /// Ground-state current, nA.
    pub fn mean_current(&self) -> f64 {
        self.current[(0, 0)].re
    }

    /// The leading `k` levels.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.levels() {
            return Err(Error::Validation(format!(
                "cannot keep {k} of {} bare levels",
                self.levels()
            )));
        }
        Ok(BareSubsystem {
            energies: self.energies[..k].to_vec(),
            current: self.current.submatrix(0, 0, k, k).to_owned(),
            current_sq: self.current_sq.submatrix(0, 0, k, k).to_owned(),
        })
    }
}

/// Bare-state character of a composite eigenstate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StateTag {
    Ground,
    QubitA,
    QubitB,
    Coupler,
    /// Dominated by a product state with more than one excitation or a
    /// higher bare level.
    Multi,
    /// No product state reaches the identification threshold.
    Hybridized,
}

impl StateTag {
    pub fn label(&self) -> &'static str {
        match self {
            StateTag::Ground => "ground",
            StateTag::QubitA => "A",
            StateTag::QubitB => "B",
            StateTag::Coupler => "C",
            StateTag::Multi => "multi",
            StateTag::Hybridized => "hybrid",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompositeSystem {
    pub labels: Vec<Subsystem>,
    pub retained: Vec<usize>,
    pub bare_energies: Vec<Vec<f64>>,
    /// `M̃` of each qubit to the coupler (pH), in `labels` order; zero for
    /// the coupler itself.
    pub m_tilde_ph: Vec<f64>,
    pub hamiltonian: HermitianOperator,
    currents: Vec<Mat<C64>>,
}

impl CompositeSystem {
    /// Assembles the composite Hamiltonian. The coupler must be the last
    /// part; `m_tilde_ph` gives each qubit's mutual to it. The bilinear
    /// terms use `Î^C − coupler_offset`, so qubits must already be biased by
    /// `M̃ · coupler_offset` when the offset is nonzero.
    pub fn assemble(
        parts: &[(Subsystem, &BareSubsystem)],
        m_tilde_ph: &[f64],
        l_c_ph: f64,
        flux_shift_term: bool,
        coupler_offset: f64,
    ) -> Result<Self> {
        let n_parts = parts.len();
        if n_parts < 2 || parts[n_parts - 1].0 != Subsystem::Coupler {
            return Err(Error::Validation(
                "composite needs at least one qubit followed by the coupler".into(),
            ));
        }
        if m_tilde_ph.len() != n_parts - 1 {
            return Err(Error::Validation(
                "one mutual inductance per qubit required".into(),
            ));
        }
        let dims: Vec<usize> = parts.iter().map(|p| p.1.levels()).collect();
        let dim: usize = dims.iter().product();
        if dim < 2 {
            return Err(Error::Validation("composite dimension below 2".into()));
        }
        let embed = |slot_ops: &[(usize, &Mat<C64>)]| -> Mat<C64> {
            let mut out = Mat::<C64>::identity(1, 1);
            for (k, &d) in dims.iter().enumerate() {
                let factor = match slot_ops.iter().find(|(s, _)| *s == k) {
                    Some((_, op)) => (*op).clone(),
                    None => Mat::<C64>::identity(d, d),
                };
                out = operators::kron(out.as_ref(), factor.as_ref());
            }
            out
        };
        let currents: Vec<Mat<C64>> = (0..n_parts)
            .map(|k| embed(&[(k, &parts[k].1.current)]))
            .collect();

        let mut h = Mat::<C64>::zeros(dim, dim);
        for (k, (_, part)) in parts.iter().enumerate() {
            let diag = Mat::from_fn(dims[k], dims[k], |i, j| {
                C64::new(if i == j { part.energies[i] } else { 0.0 }, 0.0)
            });
            h += embed(&[(k, &diag)]);
        }
        let coupler = n_parts - 1;
        let mu = units::MUTUAL_ENERGY_GHZ;
        let mut fluctuation = parts[coupler].1.current.clone();
        for i in 0..dims[coupler] {
            fluctuation[(i, i)] -= coupler_offset;
        }
        for q in 0..coupler {
            let m = m_tilde_ph[q];
            h += embed(&[(q, &parts[q].1.current), (coupler, &fluctuation)])
                * faer::Scale(C64::new(mu * m, 0.0));
            if flux_shift_term {
                let scale = mu / (2.0 * l_c_ph);
                h += embed(&[(q, &parts[q].1.current_sq)])
                    * faer::Scale(C64::new(scale * m * m, 0.0));
                for p in q + 1..coupler {
                    h += embed(&[(q, &parts[q].1.current), (p, &parts[p].1.current)])
                        * faer::Scale(C64::new(2.0 * scale * m * m_tilde_ph[p], 0.0));
                }
            }
        }
        let mut m_all = m_tilde_ph.to_vec();
        m_all.push(0.0);
        Ok(CompositeSystem {
            labels: parts.iter().map(|p| p.0).collect(),
            retained: dims,
            bare_energies: parts.iter().map(|p| p.1.energies.clone()).collect(),
            m_tilde_ph: m_all,
            hamiltonian: HermitianOperator::from_complex_unchecked(h),
            currents,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn eigen(&self, k: usize) -> Result<EigenSolution> {
        eigendecompose(&self.hamiltonian, k.min(self.dim()))
    }

    /// Lowest `n` transition frequencies from the ground state, GHz.
    pub fn transitions(&self, n: usize) -> Result<Vec<f64>> {
        let e = operators::lowest_eigenvalues(&self.hamiltonian, (n + 1).min(self.dim()))?;
        Ok(e[1..].iter().map(|x| x - e[0]).collect())
    }

    /// Bare level index of each subsystem for a composite basis index.
    pub fn product_state(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.retained.len()];
        for k in (0..self.retained.len()).rev() {
            out[k] = index % self.retained[k];
            index /= self.retained[k];
        }
        out
    }

    /// Tag from the dominant bare product state.
    pub fn tag(&self, state: ColRef<'_, C64>) -> StateTag {
        let (best, weight) = (0..state.nrows())
            .map(|i| (i, state[i].norm_sqr()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if weight < IDENTIFICATION_THRESHOLD {
            return StateTag::Hybridized;
        }
        let levels = self.product_state(best);
        let excited: Vec<usize> = (0..levels.len()).filter(|&k| levels[k] > 0).collect();
        match excited.as_slice() {
            [] => StateTag::Ground,
            [k] if levels[*k] == 1 => match self.labels[*k] {
                Subsystem::QubitA => StateTag::QubitA,
                Subsystem::QubitB => StateTag::QubitB,
                Subsystem::Coupler => StateTag::Coupler,
            },
            _ => StateTag::Multi,
        }
    }

    /// `|⟨a|Î^s|b⟩|` (nA) between two composite eigenstates.
    pub fn current_element(
        &self,
        which: Subsystem,
        sol: &EigenSolution,
        a: usize,
        b: usize,
    ) -> Result<f64> {
        let k = self
            .labels
            .iter()
            .position(|&l| l == which)
            .ok_or_else(|| Error::Validation(format!("{which:?} is not part of this composite")))?;
        let ib = &self.currents[k] * sol.states.subcols(b, 1);
        let v: C64 = (0..self.dim())
            .map(|i| sol.states[(i, a)].conj() * ib[(i, 0)])
            .sum();
        Ok(v.norm())
    }
}

/// Builder for composite systems from one parameter set.
#[derive(Debug, Clone)]
pub struct CompositeModel {
    qubit_a: FluxQubit,
    qubit_b: FluxQubit,
    squid: RfSquid,
    m_tilde_a: f64,
    m_tilde_b: f64,
    l_c_ph: f64,
    retained: Retained,
    flux_shift_term: bool,
}

impl CompositeModel {
    /// Bare qubits (loop inductance `L_q`) and bare coupler, coupled through
    /// the renormalized mutuals.
    pub fn new(params: &DeviceParams) -> Result<Self> {
        Ok(CompositeModel {
            qubit_a: FluxQubit::new(params, QubitId::A, None)?,
            qubit_b: FluxQubit::new(params, QubitId::B, None)?,
            squid: RfSquid::new(params)?,
            m_tilde_a: coupler_mutual(params, QubitId::A)?,
            m_tilde_b: coupler_mutual(params, QubitId::B)?,
            l_c_ph: params.coupler.l_c_ph,
            retained: DEFAULT_RETAINED,
            flux_shift_term: true,
        })
    }

    pub fn with_retained(mut self, retained: Retained) -> Result<Self> {
        if retained.b < 2 || retained.c < 2 || retained.a == 1 {
            return Err(Error::Validation(format!(
                "retained levels {retained:?}: each included subsystem needs at least 2"
            )));
        }
        self.retained = retained;
        Ok(self)
    }

    pub fn with_mutuals(mut self, m_tilde_a: f64, m_tilde_b: f64) -> Self {
        self.m_tilde_a = m_tilde_a;
        self.m_tilde_b = m_tilde_b;
        self
    }

    pub fn with_qubit_levels(mut self, levels: [usize; 3]) -> Result<Self> {
        self.qubit_a = self.qubit_a.with_levels(levels)?;
        self.qubit_b = self.qubit_b.with_levels(levels)?;
        Ok(self)
    }

    /// Drops the `(Σ M̃ Î)²/2L_C` term, leaving only the bilinear couplings.
    pub fn without_flux_shift_term(mut self) -> Self {
        self.flux_shift_term = false;
        self
    }

    pub fn retained(&self) -> Retained {
        self.retained
    }

    pub fn m_tilde(&self, which: QubitId) -> f64 {
        match which {
            QubitId::A => self.m_tilde_a,
            QubitId::B => self.m_tilde_b,
        }
    }

    pub fn bare_coupler(&self, f_c: f64, k: usize) -> Result<BareSubsystem> {
        BareSubsystem::from_circuit(&self.squid.build(f_c)?, k)
    }

    /// Flux shift (Φ₀) of a qubit from a coupler carrying `coupler_current` nA.
    pub fn qubit_flux_shift(&self, which: QubitId, coupler_current: f64) -> f64 {
        units::MUTUAL_ENERGY_GHZ * self.m_tilde(which) * coupler_current
            / units::FLUX_ENERGY_GHZ_PER_NA
    }

    /// Bare qubit at bias `flux`, diagonalized at the flux shifted by the
    /// coupler's mean current. The current operator is the loop current at
    /// that shifted flux.
    pub fn bare_qubit(
        &self,
        which: QubitId,
        flux: f64,
        k: usize,
        coupler: &BareSubsystem,
    ) -> Result<BareSubsystem> {
        let q = match which {
            QubitId::A => &self.qubit_a,
            QubitId::B => &self.qubit_b,
        };
        let shift = self.qubit_flux_shift(which, coupler.mean_current());
        BareSubsystem::from_circuit(&q.build(flux + shift)?, k)
    }

    pub fn assemble(
        &self,
        a: Option<&BareSubsystem>,
        b: &BareSubsystem,
        c: &BareSubsystem,
    ) -> Result<CompositeSystem> {
        let mut parts = Vec::new();
        let mut mutuals = Vec::new();
        if let Some(a) = a {
            parts.push((Subsystem::QubitA, a));
            mutuals.push(self.m_tilde_a);
        }
        parts.push((Subsystem::QubitB, b));
        mutuals.push(self.m_tilde_b);
        parts.push((Subsystem::Coupler, c));
        CompositeSystem::assemble(
            &parts,
            &mutuals,
            self.l_c_ph,
            self.flux_shift_term,
            c.mean_current(),
        )
    }

    fn build_with(&self, flux: FluxPoint, r: Retained) -> Result<CompositeSystem> {
        let c = self.bare_coupler(flux.f_c, r.c)?;
        let a = if r.a > 0 {
            Some(self.bare_qubit(QubitId::A, flux.f_a, r.a, &c)?)
        } else {
            None
        };
        let b = self.bare_qubit(QubitId::B, flux.f_b, r.b, &c)?;
        self.assemble(a.as_ref(), &b, &c)
    }

    pub fn build(&self, flux: FluxPoint) -> Result<CompositeSystem> {
        self.build_with(flux, self.retained)
    }

    /// Largest change (GHz) of the lowest three composite transitions when
    /// every retained count grows by two.
    pub fn verify_retained_convergence(&self, flux: FluxPoint) -> Result<f64> {
        let r = self.retained;
        let grown = Retained {
            a: if r.a > 0 { r.a + 2 } else { 0 },
            b: r.b + 2,
            c: r.c + 2,
        };
        let base = self.build_with(flux, r)?.transitions(3)?;
        let big = self.build_with(flux, grown)?.transitions(3)?;
        let shift = base
            .iter()
            .zip(&big)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if shift >= RETAINED_TOLERANCE_GHZ {
            return Err(Error::Convergence {
                mode: format!(
                    "composite retained levels (A {}, B {}, C {})",
                    r.a, r.b, r.c
                ),
                levels: r.b,
                shift_khz: shift * 1e6,
                tolerance_khz: RETAINED_TOLERANCE_GHZ * 1e6,
            });
        }
        Ok(shift)
    }

    /// Qubit B bias that cancels the coupler's mean flux offset at `f_c`.
    pub fn qubit_b_compensated_flux(&self, f_c: f64) -> Result<f64> {
        let c = self.squid.build(f_c)?;
        let sol = eigendecompose(&c.hamiltonian, 1)?;
        let i_c = c.current_op.expectation(sol.states.as_ref(), 0);
        Ok(0.5 - self.qubit_flux_shift(QubitId::B, i_c))
    }
}

/// Composite at `flux` with bare qubits, the bare coupler, and the
/// renormalized mutuals of `params`.
pub fn build_composite(
    params: &DeviceParams,
    flux: FluxPoint,
    retained: Retained,
) -> Result<CompositeSystem> {
    CompositeModel::new(params)?
        .with_retained(retained)?
        .build(flux)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumPoint {
    pub flux: f64,
    /// Transition frequencies from the ground state, GHz, ascending.
    pub freqs: Vec<f64>,
    pub tags: Vec<StateTag>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionSpectrum {
    pub axis: Subsystem,
    pub fixed: FluxPoint,
    pub points: Vec<SpectrumPoint>,
}

impl TransitionSpectrum {
    /// Synthetic spectrum from explicit branch frequencies (tags unknown).
    pub fn from_branches(axis: Subsystem, flux: &[f64], branches: &[Vec<f64>]) -> Result<Self> {
        if branches.iter().any(|b| b.len() != flux.len()) {
            return Err(Error::Validation(
                "branch length differs from the flux axis".into(),
            ));
        }
        let points = flux
            .iter()
            .enumerate()
            .map(|(i, &f)| SpectrumPoint {
                flux: f,
                freqs: branches.iter().map(|b| b[i]).collect(),
                tags: vec![StateTag::Hybridized; branches.len()],
            })
            .collect();
        Ok(TransitionSpectrum {
            axis,
            fixed: FluxPoint {
                f_a: 0.0,
                f_b: 0.0,
                f_c: 0.0,
            },
            points,
        })
    }

    fn sort(&mut self) {
        self.points.sort_by(|a, b| a.flux.total_cmp(&b.flux));
        self.points.dedup_by(|a, b| a.flux == b.flux);
    }
}

/// Lowest `branches` transitions along `axis` over `grid`, with the other
/// fluxes held at `fixed`.
pub fn spectroscopy_sweep(
    model: &CompositeModel,
    axis: Subsystem,
    grid: &[f64],
    fixed: FluxPoint,
    branches: usize,
) -> Result<TransitionSpectrum> {
    let r = model.retained();
    if axis == Subsystem::QubitA && r.a == 0 {
        return Err(Error::Validation(
            "cannot sweep qubit A when it is excluded".into(),
        ));
    }
    // Qubit bases depend on the coupler's mean current, so only a qubit
    // sweep can reuse the other subsystems.
    let cached = if axis == Subsystem::Coupler {
        None
    } else {
        let c = model.bare_coupler(fixed.f_c, r.c)?;
        let other = match axis {
            Subsystem::QubitA => model.bare_qubit(QubitId::B, fixed.f_b, r.b, &c)?,
            _ if r.a > 0 => model.bare_qubit(QubitId::A, fixed.f_a, r.a, &c)?,
            _ => c.clone(),
        };
        Some((c, other))
    };
    let points = grid
        .par_iter()
        .map(|&f| -> Result<SpectrumPoint> {
            let eval = || -> Result<SpectrumPoint> {
                let sys = match (&cached, axis) {
                    (None, _) => model.build(FluxPoint { f_c: f, ..fixed })?,
                    (Some((c, b)), Subsystem::QubitA) => {
                        let a = model.bare_qubit(QubitId::A, f, r.a, c)?;
                        model.assemble(Some(&a), b, c)?
                    }
                    (Some((c, a)), _) => {
                        let b = model.bare_qubit(QubitId::B, f, r.b, c)?;
                        model.assemble((r.a > 0).then_some(a), &b, c)?
                    }
                };
                let sol = sys.eigen(branches + 1)?;
                let e0 = sol.energies[0];
                Ok(SpectrumPoint {
                    flux: f,
                    freqs: sol.energies[1..].iter().map(|e| e - e0).collect(),
                    tags: (1..sol.len()).map(|j| sys.tag(sol.states.col(j))).collect(),
                })
            };
            eval().map_err(|e| e.at_flux(f))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionSpectrum {
        axis,
        fixed,
        points,
    })
}

/// Minimum separation of two branches of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Splitting {
    /// Minimum branch separation `2|J|/2π`, GHz.
    pub split_ghz: f64,
    /// Swept flux at the minimum, Φ₀.
    pub location: f64,
    /// The separation is below the resolution floor (effectively zero).
    pub below_floor: bool,
}

impl Splitting {
    pub fn two_j_rad_per_s(&self) -> f64 {
        units::ghz_to_rad_per_s(self.split_ghz)
    }

    /// `|J|/2π`, MHz.
    pub fn j_over_2pi_mhz(&self) -> f64 {
        0.5 * self.split_ghz * 1e3
    }
}

/// Separation minimum of `lower` and `upper` branches, refined by a
/// least-squares parabola through the squared separation at the five
/// points nearest the sampled minimum (exact for a two-level crossing).
pub fn extract_splitting(
    spectrum: &TransitionSpectrum,
    lower: usize,
    upper: usize,
    floor_ghz: f64,
) -> Result<Splitting> {
    let pts = &spectrum.points;
    if pts.len() < 5 {
        return Err(Error::NotBracketed(format!(
            "{} sweep points; at least 5 required",
            pts.len()
        )));
    }
    let dist: Vec<f64> = pts
        .iter()
        .map(|p| -> Result<f64> {
            match (p.freqs.get(lower), p.freqs.get(upper)) {
                (Some(a), Some(b)) => Ok((b - a).abs()),
                _ => Err(Error::Validation(format!(
                    "branch {upper} missing at flux {}",
                    p.flux
                ))),
            }
        })
        .collect::<Result<_>>()?;
    let imin = (0..dist.len())
        .min_by(|&i, &j| dist[i].total_cmp(&dist[j]))
        .unwrap();
    if imin == 0 || imin == dist.len() - 1 {
        return Err(Error::NotBracketed(format!(
            "branch separation is smallest at the sweep edge (flux {})",
            pts[imin].flux
        )));
    }
    let x0 = pts[imin].flux;
    let mut near: Vec<usize> = (0..pts.len()).collect();
    near.sort_by(|&i, &j| {
        (pts[i].flux - x0)
            .abs()
            .total_cmp(&(pts[j].flux - x0).abs())
    });
    near.truncate(5);
    let scale = near
        .iter()
        .map(|&i| (pts[i].flux - x0).abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let xs: Vec<f64> = near.iter().map(|&i| (pts[i].flux - x0) / scale).collect();
    let ys: Vec<f64> = near.iter().map(|&i| dist[i] * dist[i]).collect();
    let (split, location) = match fit_parabola(&xs, &ys) {
        Some((a, b, c)) if a > 0.0 => {
            let xv = -b / (2.0 * a);
            if xv.abs() <= 1.0 {
                let vertex = c - b * b / (4.0 * a);
                (vertex.max(0.0).sqrt().min(dist[imin]), x0 + xv * scale)
            } else {
                (dist[imin], x0)
            }
        }
        _ => (dist[imin], x0),
    };
    Ok(Splitting {
        split_ghz: split,
        location,
        below_floor: split < floor_ghz,
    })
}

/// Least-squares `y = a x² + b x + c`.
fn fit_parabola(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let a = Mat::from_fn(xs.len(), 3, |i, j| xs[i].powi(2 - j as i32));
    let y = Mat::from_fn(ys.len(), 1, |i, _| ys[i]);
    let ata = a.transpose() * &a;
    let aty = a.transpose() * &y;
    let lu = ata.partial_piv_lu();
    use faer::linalg::solvers::Solve;
    let sol = lu.solve(&aty);
    let out = (sol[(0, 0)], sol[(1, 0)], sol[(2, 0)]);
    (out.0.is_finite() && out.1.is_finite() && out.2.is_finite()).then_some(out)
}

/// A located qubit–qubit crossing and the sweep used to resolve it.
#[derive(Debug, Clone, Serialize)]
pub struct Resonance {
    pub splitting: Splitting,
    pub spectrum: TransitionSpectrum,
}

/// Sweeps qubit A across qubit B (held at `f_b`) at coupler bias `f_c` and
/// resolves the avoided crossing of the two lowest transitions.
///
/// A coarse scan over `window` brackets the crossing, a Brent search
/// locates the separation minimum, and points spaced `resolution`,
/// `resolution/10` and `resolution/100` around it feed
/// [`extract_splitting`].
pub fn resolve_crossing(
    model: &CompositeModel,
    f_b: f64,
    f_c: f64,
    window: (f64, f64),
    resolution: f64,
) -> Result<Resonance> {
    let fixed = FluxPoint::new(0.0, f_b, f_c)?;
    let r = model.retained();
    if r.a == 0 {
        return Err(Error::Validation("crossing sweeps need qubit A".into()));
    }
    let c = model.bare_coupler(f_c, r.c)?;
    let b = model.bare_qubit(QubitId::B, f_b, r.b, &c)?;
    let separation = |f_a: f64| -> Result<f64> {
        let a = model.bare_qubit(QubitId::A, f_a, r.a, &c)?;
        let t = model.assemble(Some(&a), &b, &c)?.transitions(2)?;
        Ok(t[1] - t[0])
    };
    let coarse_n = 17;
    let step = (window.1 - window.0) / (coarse_n - 1) as f64;
    let coarse: Vec<f64> = (0..coarse_n).map(|i| window.0 + step * i as f64).collect();
    let d: Vec<f64> = coarse
        .par_iter()
        .map(|&f| separation(f).map_err(|e| e.at_flux(f)))
        .collect::<Result<_>>()?;
    let imin = (0..d.len()).min_by(|&i, &j| d[i].total_cmp(&d[j])).unwrap();
    if imin == 0 || imin == d.len() - 1 {
        return Err(Error::NotBracketed(format!(
            "qubit crossing not inside [{}, {}] at f_C = {f_c}",
            window.0, window.1
        )));
    }
    let (x_star, _) = optimize::minimize(separation, coarse[imin - 1], coarse[imin + 1], 1e-9)?;
    let mut grid = coarse;
    for s in [resolution, resolution / 10.0, resolution / 100.0] {
        grid.extend((-2..=2).map(|k| x_star + k as f64 * s));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut spectrum = spectroscopy_sweep(model, Subsystem::QubitA, &grid, fixed, 3)?;
    spectrum.sort();
    let splitting = extract_splitting(&spectrum, 0, 1, 1e-6)?;
    Ok(Resonance {
        splitting,
        spectrum,
    })
}

/// Default window for [`resolve_crossing`]: qubit A within ±`3|f_B − ½|`
/// of ½ on qubit B's side.
pub fn default_window(f_b: f64) -> (f64, f64) {
    let off = (f_b - 0.5).abs().max(2e-3);
    if f_b >= 0.5 {
        (0.5 + 0.3 * off, 0.5 + 2.0 * off)
    } else {
        (0.5 - 2.0 * off, 0.5 - 0.3 * off)
    }
}

/// `|⟨e|Î^C|g⟩|` (nA) between the composite ground state and the lowest
/// qubit-B-like excited state.
pub fn t1_matrix_element(system: &CompositeSystem) -> Result<f64> {
    let sol = system.eigen(8)?;
    let e = (1..sol.len())
        .find(|&j| system.tag(sol.states.col(j)) == StateTag::QubitB)
        .ok_or_else(|| {
            Error::Identification("no qubit-B-like state among the lowest composite levels".into())
        })?;
    if system.tag(sol.states.col(0)) != StateTag::Ground {
        return Err(Error::Identification(
            "composite ground state is not the bare ground".into(),
        ));
    }
    system.current_element(Subsystem::Coupler, &sol, e, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> CompositeModel {
        CompositeModel::new(&DeviceParams::table1_semiclassical())
            .unwrap()
            .with_qubit_levels([10, 6, 4])
            .unwrap()
    }

    #[test]
    fn noninteracting_spectrum_is_sum_of_bare() {
        let m = model().with_mutuals(0.0, 0.0);
        let flux = FluxPoint::new(0.505, 0.51, 0.45).unwrap();
        let sys = m.build(flux).unwrap();
        assert_eq!(sys.dim(), 125);
        let sol = sys.eigen(125).unwrap();
        let mut sums = Vec::new();
        for a in &sys.bare_energies[0] {
            for b in &sys.bare_energies[1] {
                for c in &sys.bare_energies[2] {
                    sums.push(a + b + c);
                }
            }
        }
        sums.sort_by(f64::total_cmp);
        for (x, y) in sol.energies.iter().zip(&sums) {
            assert!((x - y).abs() < 1e-9 * y.abs().max(1.0));
        }
    }

    #[test]
    fn product_state_decoding() {
        let m = model()
            .with_retained(Retained { a: 3, b: 4, c: 5 })
            .unwrap();
        let sys = m.build(FluxPoint::new(0.5, 0.5, 0.0).unwrap()).unwrap();
        assert_eq!(sys.product_state(0), vec![0, 0, 0]);
        assert_eq!(sys.product_state(1), vec![0, 0, 1]);
        assert_eq!(sys.product_state(5), vec![0, 1, 0]);
        assert_eq!(sys.product_state(20), vec![1, 0, 0]);
    }

    #[test]
    fn t1_element_vanishes_without_coupling() {
        let m = model()
            .with_mutuals(0.0, 0.0)
            .with_retained(Retained { a: 0, b: 5, c: 5 })
            .unwrap();
        let sys = m.build(FluxPoint::new(0.0, 0.5, 0.45).unwrap()).unwrap();
        assert!(t1_matrix_element(&sys).unwrap() < 1e-9);
    }

    #[test]
    fn synthetic_crossing_recovers_j() {
        let j = 0.047; // GHz
        let flux: Vec<f64> = (0..41).map(|i| 0.49 + i as f64 * 5e-4).collect();
        let slope = 28.0; // GHz per Φ₀ of detuning
        let center = 5.1;
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for &f in &flux {
            let det = slope * (f - 0.5013);
            let r = (det * det + 4.0 * j * j).sqrt();
            lo.push(center - 0.5 * r);
            hi.push(center + 0.5 * r);
        }
        let spec = TransitionSpectrum::from_branches(Subsystem::QubitA, &flux, &[lo, hi]).unwrap();
        let s = extract_splitting(&spec, 0, 1, 1e-6).unwrap();
        assert!(
            (s.split_ghz - 2.0 * j).abs() / (2.0 * j) < 1e-3,
            "{}",
            s.split_ghz
        );
        assert!((s.location - 0.5013).abs() < 1e-6);
        assert!(!s.below_floor);
    }

    #[test]
    fn zero_coupling_is_flagged() {
        let flux: Vec<f64> = (0..21).map(|i| i as f64 * 0.1).collect();
        let lo: Vec<f64> = flux.iter().map(|f| 5.0 + 0.3 * (f - 1.0)).collect();
        let hi: Vec<f64> = flux.iter().map(|f| 5.0 - 0.3 * (f - 1.0)).collect();
        let spec = TransitionSpectrum::from_branches(Subsystem::QubitA, &flux, &[lo, hi]).unwrap();
        let s = extract_splitting(&spec, 0, 1, 1e-6).unwrap();
        assert!(s.below_floor, "{s:?}");
    }

    #[test]
    fn edge_minimum_is_not_bracketed() {
        let flux: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let lo = vec![0.0; 10];
        let hi: Vec<f64> = flux.iter().map(|f| 1.0 + f).collect();
        let spec = TransitionSpectrum::from_branches(Subsystem::QubitA, &flux, &[lo, hi]).unwrap();
        assert!(matches!(
            extract_splitting(&spec, 0, 1, 1e-6),
            Err(Error::NotBracketed(_))
        ));
    }
}
