//! Dense operator substrate: Hermitian matrices, truncated mode bases,
//! tensor-product embedding and eigendecomposition with a residual contract.
//!
//! Operators built by this crate are usually real symmetric (oscillator
//! bases with a real phase convention), so [`HermitianOperator`] keeps a real
//! storage variant and dispatches to the cheaper real eigensolver when it can.

use faer::{Mat, MatRef, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;
/// Residual bound, relative to the spectral range, every eigenpair must meet.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
enum Storage {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

/// A Hermitian matrix with energies stored as frequencies (GHz) or currents
/// (nA), depending on what it represents.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    storage: Storage,
}

impl HermitianOperator {
    /// Validates and wraps a real symmetric matrix.
    pub fn from_real(m: Mat<f64>) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        let n = m.nrows();
        let scale = max_abs_real(m.as_ref()).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j + 1..n {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > HERMITIAN_TOLERANCE * scale {
            return Err(Error::Validation(format!(
                "matrix is not symmetric: max |A - A^T| = {worst:e} (scale {scale:e})"
            )));
        }
        Ok(Self::from_real_unchecked(m))
    }

    /// Validates and wraps a complex matrix. Matrices whose imaginary part is
    /// identically zero are stored as real.
    pub fn from_complex(m: Mat<C64>) -> Result<Self> {
        check_square(m.nrows(), m.ncols())?;
        let n = m.nrows();
        let scale = max_abs_complex(m.as_ref()).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in j..n {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOLERANCE * scale {
            return Err(Error::Validation(format!(
                "matrix is not Hermitian: max |A - A^H| = {worst:e} (scale {scale:e})"
            )));
        }
        Ok(Self::from_complex_unchecked(m))
    }

    /// Symmetrizes without validation. Callers guarantee Hermiticity by
    /// construction.
    pub(crate) fn from_real_unchecked(mut m: Mat<f64>) -> Self {
        let n = m.nrows();
        for j in 0..n {
            for i in j + 1..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = avg;
                m[(j, i)] = avg;
            }
        }
        HermitianOperator {
            storage: Storage::Real(m),
        }
    }

    pub(crate) fn from_complex_unchecked(mut m: Mat<C64>) -> Self {
        let n = m.nrows();
        let scale = max_abs_complex(m.as_ref());
        let imag = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .map(|(i, j)| m[(i, j)].im.abs())
            .fold(0.0f64, f64::max);
        if imag <= 1e-15 * scale {
            let real = Mat::from_fn(n, n, |i, j| m[(i, j)].re);
            return Self::from_real_unchecked(real);
        }
        for j in 0..n {
            m[(j, j)] = C64::new(m[(j, j)].re, 0.0);
            for i in j + 1..n {
                let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        HermitianOperator {
            storage: Storage::Complex(m),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            Storage::Real(m) => m.nrows(),
            Storage::Complex(m) => m.nrows(),
        }
    }

    pub fn is_real(&self) -> bool {
        matches!(self.storage, Storage::Real(_))
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        match &self.storage {
            Storage::Real(m) => C64::new(m[(i, j)], 0.0),
            Storage::Complex(m) => m[(i, j)],
        }
    }

    pub fn to_complex(&self) -> Mat<C64> {
        match &self.storage {
            Storage::Real(m) => to_complex(m.as_ref()),
            Storage::Complex(m) => m.clone(),
        }
    }

    /// Real storage, if the operator has no imaginary part.
    pub fn as_real(&self) -> Option<MatRef<'_, f64>> {
        match &self.storage {
            Storage::Real(m) => Some(m.as_ref()),
            Storage::Complex(_) => None,
        }
    }

    /// `O · V` for a block of column vectors.
    pub fn apply(&self, v: MatRef<'_, C64>) -> Mat<C64> {
        match &self.storage {
            Storage::Real(m) => {
                // Real and imaginary parts of V are multiplied separately to
                // stay on the real GEMM path.
                let re = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)].re);
                let im = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)].im);
                let ore = m * &re;
                let oim = m * &im;
                Mat::from_fn(v.nrows(), v.ncols(), |i, j| {
                    C64::new(ore[(i, j)], oim[(i, j)])
                })
            }
            Storage::Complex(m) => m * v,
        }
    }

    /// Matrix of the operator in the subspace spanned by `states`: `V† O V`.
    pub fn project(&self, states: MatRef<'_, C64>) -> Mat<C64> {
        let ov = self.apply(states);
        states.adjoint() * &ov
    }

    /// `⟨ψ_a|O|ψ_b⟩` for two columns of `states`.
    pub fn matrix_element(&self, states: MatRef<'_, C64>, a: usize, b: usize) -> C64 {
        let ob = self.apply(states.subcols(b, 1));
        (0..states.nrows())
            .map(|i| states[(i, a)].conj() * ob[(i, 0)])
            .sum()
    }

    pub fn expectation(&self, states: MatRef<'_, C64>, j: usize) -> f64 {
        self.matrix_element(states, j, j).re
    }

    /// Unitary change of basis by a diagonal phase matrix, `P O P†`.
    pub fn rephase(&self, phases: &[f64]) -> Result<Self> {
        if phases.len() != self.dim() {
            return Err(Error::Validation("phase vector length mismatch".into()));
        }
        let m = self.to_complex();
        let n = self.dim();
        let out = Mat::from_fn(n, n, |i, j| {
            m[(i, j)] * C64::from_polar(1.0, phases[i] - phases[j])
        });
        Ok(Self::from_complex_unchecked(out))
    }
}

/// Ascending eigenpairs retained from one diagonalization.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    /// Eigenvalues (GHz for Hamiltonians), ascending.
    pub energies: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the same order.
    pub states: Mat<C64>,
    /// `max_j ‖H v_j − λ_j v_j‖` over retained pairs.
    pub residual: f64,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `E_j − E_0` for every retained level.
    pub fn transitions(&self) -> Vec<f64> {
        let e0 = self.energies[0];
        self.energies.iter().map(|e| e - e0).collect()
    }
}

/// The `k` lowest eigenpairs of `h`, with residual verification.
pub fn eigendecompose(h: &HermitianOperator, k: usize) -> Result<EigenSolution> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::Validation(format!(
            "requested {k} eigenpairs from a {n}-dimensional operator"
        )));
    }
    let (all, states) = match &h.storage {
        Storage::Real(m) => {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| solver_error(n, e))?;
            let s = evd.S().column_vector();
            let all: Vec<f64> = (0..n).map(|i| s[i]).collect();
            let u = evd.U();
            let states = Mat::from_fn(n, k, |i, j| C64::new(u[(i, j)], 0.0));
            (all, states)
        }
        Storage::Complex(m) => {
            let evd = m
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| solver_error(n, e))?;
            let s = evd.S().column_vector();
            let all: Vec<f64> = (0..n).map(|i| s[i].re).collect();
            let states = evd.U().subcols(0, k).to_owned();
            (all, states)
        }
    };
    check_sorted(&all, n)?;
    let energies = all[..k].to_vec();
    let hv = h.apply(states.as_ref());
    let residual = (0..k)
        .map(|j| {
            (0..n)
                .map(|i| (hv[(i, j)] - states[(i, j)] * energies[j]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max);
    let range = (all[n - 1] - all[0])
        .max(all[0].abs().max(all[n - 1].abs()) * f64::EPSILON)
        .max(f64::MIN_POSITIVE);
    if !(residual <= RESIDUAL_TOLERANCE * range) {
        return Err(Error::Solver {
            dim: n,
            detail: format!(
                "residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e} x spectral range {range:e}"
            ),
        });
    }
    Ok(EigenSolution {
        energies,
        states,
        residual,
    })
}

/// The `k` lowest eigenvalues only; skips eigenvector accumulation.
pub fn lowest_eigenvalues(h: &HermitianOperator, k: usize) -> Result<Vec<f64>> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::Validation(format!(
            "requested {k} eigenvalues from a {n}-dimensional operator"
        )));
    }
    let mut all: Vec<f64> = match &h.storage {
        Storage::Real(m) => m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| solver_error(n, e))?,
        Storage::Complex(m) => m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| solver_error(n, e))?,
    };
    check_sorted(&all, n)?;
    all.truncate(k);
    Ok(all)
}

fn solver_error(n: usize, e: faer::linalg::evd::EvdError) -> Error {
    Error::Solver {
        dim: n,
        detail: format!("{e:?} (QR iteration limit reached)"),
    }
}

fn check_sorted(all: &[f64], n: usize) -> Result<()> {
    if all.iter().any(|x| !x.is_finite()) {
        return Err(Error::Solver {
            dim: n,
            detail: "non-finite eigenvalue".into(),
        });
    }
    if all.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Solver {
            dim: n,
            detail: "eigenvalues returned out of order".into(),
        });
    }
    Ok(())
}

fn check_square(r: usize, c: usize) -> Result<()> {
    if r != c {
        return Err(Error::Validation(format!("matrix is {r}x{c}, not square")));
    }
    if r < 2 {
        return Err(Error::Validation(format!(
            "operator dimension {r} is below the minimum of 2"
        )));
    }
    Ok(())
}

fn max_abs_real(m: MatRef<'_, f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

fn max_abs_complex(m: MatRef<'_, C64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].norm());
        }
    }
    out
}

pub fn to_complex(m: MatRef<'_, f64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| C64::new(m[(i, j)], 0.0))
}

/// Kind of single-mode truncated basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    /// Oscillator number states; `phase_zpf` is `sqrt(⟨0|φ²|0⟩)`.
    Harmonic { phase_zpf: f64 },
    /// Cooper-pair number states `n = -(N-1)/2 ..` (integer steps).
    Charge,
}

/// A truncated single-mode basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    levels: usize,
    kind: BasisKind,
}

pub const MIN_LEVELS: usize = 4;

impl ModeBasis {
    pub fn harmonic(levels: usize, phase_zpf: f64) -> Result<Self> {
        check_levels(levels)?;
        if !(phase_zpf.is_finite() && phase_zpf > 0.0) {
            return Err(Error::Validation(format!(
                "oscillator zero-point phase must be positive, got {phase_zpf}"
            )));
        }
        Ok(ModeBasis {
            levels,
            kind: BasisKind::Harmonic { phase_zpf },
        })
    }

    /// Oscillator basis of `H = 4E_C n² + E_L φ²/2`.
    pub fn oscillator(levels: usize, charging_ghz: f64, inductive_ghz: f64) -> Result<Self> {
        if !(charging_ghz > 0.0 && inductive_ghz > 0.0) {
            return Err(Error::Validation(
                "oscillator energies must be positive".into(),
            ));
        }
        Self::harmonic(levels, (2.0 * charging_ghz / inductive_ghz).powf(0.25))
    }

    pub fn charge(levels: usize) -> Result<Self> {
        check_levels(levels)?;
        Ok(ModeBasis {
            levels,
            kind: BasisKind::Charge,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn with_levels(&self, levels: usize) -> Result<Self> {
        check_levels(levels)?;
        Ok(ModeBasis { levels, ..*self })
    }

    /// Charge quantum number of basis index `i` (charge basis only).
    pub fn charge_of(&self, i: usize) -> i64 {
        i as i64 - (self.levels as i64 - 1) / 2
    }

    /// Truncated `φ̂` in the harmonic basis.
    pub fn phase(&self) -> Result<Mat<f64>> {
        let zpf = self.harmonic_zpf()?;
        let n = self.levels;
        Ok(Mat::from_fn(n, n, |i, j| {
            if i + 1 == j {
                zpf * (j as f64).sqrt()
            } else if j + 1 == i {
                zpf * (i as f64).sqrt()
            } else {
                0.0
            }
        }))
    }

    /// `P φ̂² P` with untruncated matrix elements (not the square of the
    /// truncated `φ̂`, which is wrong in the last level).
    pub fn phase_squared(&self) -> Result<Mat<f64>> {
        let zpf = self.harmonic_zpf()?;
        let n = self.levels;
        let z2 = zpf * zpf;
        Ok(Mat::from_fn(n, n, |i, j| {
            if i == j {
                z2 * (2 * i + 1) as f64
            } else if i + 2 == j {
                z2 * ((i + 1) as f64 * (i + 2) as f64).sqrt()
            } else if j + 2 == i {
                z2 * ((j + 1) as f64 * (j + 2) as f64).sqrt()
            } else {
                0.0
            }
        }))
    }

    /// Truncated `n̂`, Cooper pairs.
    pub fn number(&self) -> Mat<C64> {
        let n = self.levels;
        match self.kind {
            BasisKind::Harmonic { phase_zpf } => {
                let nz = 0.5 / phase_zpf;
                // n = i n_zpf (a† − a)
                Mat::from_fn(n, n, |i, j| {
                    if i == j + 1 {
                        C64::new(0.0, nz * (i as f64).sqrt())
                    } else if j == i + 1 {
                        C64::new(0.0, -nz * (j as f64).sqrt())
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
            BasisKind::Charge => Mat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::new(self.charge_of(i) as f64, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }),
        }
    }

    /// Matrix of `exp(i α φ̂)`.
    ///
    /// Harmonic basis: exact (untruncated) displacement-operator elements via
    /// generalized Laguerre polynomials. Charge basis: `α` must be an integer
    /// and the operator shifts the charge index by `α`.
    pub fn exp_i_phase(&self, alpha: f64) -> Result<Mat<C64>> {
        let n = self.levels;
        match self.kind {
            BasisKind::Harmonic { .. } => {
                let mag = self.displacement_magnitudes(alpha)?;
                Ok(Mat::from_fn(n, n, |i, j| {
                    i_pow(i.abs_diff(j)) * mag[(i, j)]
                }))
            }
            BasisKind::Charge => {
                if alpha.fract() != 0.0 {
                    return Err(Error::Validation(format!(
                        "exp(i α φ) in the charge basis requires integer α, got {alpha}"
                    )));
                }
                let shift = alpha as i64;
                Ok(Mat::from_fn(n, n, |i, j| {
                    if i as i64 - j as i64 == shift {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }))
            }
        }
    }

    /// Real factors `r_mn` such that `⟨m|exp(iαφ̂)|n⟩ = i^{|m−n|} r_mn` in
    /// the harmonic basis.
    pub(crate) fn displacement_magnitudes(&self, alpha: f64) -> Result<Mat<f64>> {
        let zpf = self.harmonic_zpf()?;
        let n = self.levels;
        let beta = alpha * zpf;
        let x = beta * beta;
        let envelope = (-0.5 * x).exp();
        let ln_fact: Vec<f64> = std::iter::once(0.0)
            .chain((1..n).scan(0.0, |acc, k| {
                *acc += (k as f64).ln();
                Some(*acc)
            }))
            .collect();
        let mut mag = Mat::<f64>::zeros(n, n);
        for m in 0..n {
            for k in m..n {
                let d = k - m;
                let lag = laguerre(m, d as f64, x);
                // sqrt(m!/k!) β^d, assembled in log space to avoid overflow.
                let pref = if d == 0 {
                    1.0
                } else if beta == 0.0 {
                    0.0
                } else {
                    let ln_mag = 0.5 * (ln_fact[m] - ln_fact[k]) + d as f64 * beta.abs().ln();
                    let sign = if beta < 0.0 && d % 2 == 1 { -1.0 } else { 1.0 };
                    sign * ln_mag.exp()
                };
                let v = pref * envelope * lag;
                mag[(m, k)] = v;
                mag[(k, m)] = v;
            }
        }
        Ok(mag)
    }

    fn harmonic_zpf(&self) -> Result<f64> {
        match self.kind {
            BasisKind::Harmonic { phase_zpf } => Ok(phase_zpf),
            BasisKind::Charge => Err(Error::Validation(
                "phase operator is not defined in the charge basis".into(),
            )),
        }
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if levels < MIN_LEVELS {
        return Err(Error::Validation(format!(
            "mode truncation of {levels} levels is below the minimum of {MIN_LEVELS}"
        )));
    }
    Ok(())
}

pub(crate) fn i_pow(k: usize) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Generalized Laguerre polynomial `L_n^{(a)}(x)` by upward recurrence.
fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Truncated phase and charge operators of one mode.
#[derive(Debug, Clone)]
pub enum ModeOperators {
    /// `φ̂` and `n̂` with `[φ̂, n̂] = i` away from the truncation edge.
    Harmonic { phase: Mat<C64>, number: Mat<C64> },
    /// The phase is compact here, so `exp(iφ̂)` replaces `φ̂`.
    Charge {
        exp_i_phase: Mat<C64>,
        number: Mat<C64>,
    },
}

pub fn mode_operators(basis: &ModeBasis) -> Result<ModeOperators> {
    check_levels(basis.levels())?;
    match basis.kind() {
        BasisKind::Harmonic { .. } => Ok(ModeOperators::Harmonic {
            phase: to_complex(basis.phase()?.as_ref()),
            number: basis.number(),
        }),
        BasisKind::Charge => Ok(ModeOperators::Charge {
            exp_i_phase: basis.exp_i_phase(1.0)?,
            number: basis.number(),
        }),
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron<T>(a: MatRef<'_, T>, b: MatRef<'_, T>) -> Mat<T>
where
    T: Copy + std::ops::Mul<Output = T>,
{
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` in position `slot` of `dims.len()` modes.
pub fn embed_matrix(dims: &[usize], op: MatRef<'_, C64>, slot: usize) -> Result<Mat<C64>> {
    if slot >= dims.len() {
        return Err(Error::Validation(format!(
            "slot {slot} out of range for {} modes",
            dims.len()
        )));
    }
    if op.nrows() != dims[slot] || op.ncols() != dims[slot] {
        return Err(Error::Validation(format!(
            "operator is {}x{} but mode {slot} has {} levels",
            op.nrows(),
            op.ncols(),
            dims[slot]
        )));
    }
    let mut out = Mat::<C64>::identity(1, 1);
    for (k, &d) in dims.iter().enumerate() {
        let factor = if k == slot {
            op.to_owned()
        } else {
            Mat::<C64>::identity(d, d)
        };
        out = kron(out.as_ref(), factor.as_ref());
    }
    Ok(out)
}

/// Embeds a single-mode Hermitian operator into a product space of
/// `dims.len()` modes.
pub fn tensor_embed(
    dims: &[usize],
    op: &HermitianOperator,
    slot: usize,
) -> Result<HermitianOperator> {
    let full = embed_matrix(dims, op.to_complex().as_ref(), slot)?;
    Ok(HermitianOperator::from_complex_unchecked(full))
}

/// Accumulates `Re(coeff · ⊗ factors)` into `out`.
pub(crate) fn add_kron_real_part(out: &mut Mat<f64>, factors: &[Mat<C64>], coeff: C64) {
    let mut prod = Mat::<C64>::identity(1, 1);
    for f in factors {
        prod = kron(prod.as_ref(), f.as_ref());
    }
    let n = out.nrows();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] += (coeff * prod[(i, j)]).re;
        }
    }
}

/// Accumulates `coeff · ⊗ factors` for real factors.
pub(crate) fn add_kron_real(out: &mut Mat<f64>, factors: &[MatRef<'_, f64>], coeff: f64) {
    let mut prod = Mat::<f64>::identity(1, 1);
    for f in factors {
        prod = kron(prod.as_ref(), *f);
    }
    let n = out.nrows();
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] += coeff * prod[(i, j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_x_gives_half_gap() {
        // Δ/2π = 5 GHz, H = (Δ/2) σx in GHz units
        let h = Mat::from_fn(2, 2, |i, j| if i != j { 2.5 } else { 0.0 });
        let sol = eigendecompose(&HermitianOperator::from_real(h).unwrap(), 2).unwrap();
        assert_relative_eq!(sol.energies[0], -2.5, epsilon = 1e-14);
        assert_relative_eq!(sol.energies[1], 2.5, epsilon = 1e-14);
    }

    #[test]
    fn diagonal_eigenvectors_are_permuted_identity() {
        let d = [1.0, 3.0, 2.0];
        let h = Mat::from_fn(3, 3, |i, j| if i == j { d[i] } else { 0.0 });
        let sol = eigendecompose(&HermitianOperator::from_real(h).unwrap(), 3).unwrap();
        assert_eq!(sol.energies, vec![1.0, 2.0, 3.0]);
        let expected_index = [0usize, 2, 1];
        for (col, &row) in expected_index.iter().enumerate() {
            assert_relative_eq!(sol.states[(row, col)].norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let m = Mat::from_fn(2, 2, |i, j| {
            if i == 0 && j == 1 {
                c(1.0, 1.0)
            } else {
                c(0.0, 0.0)
            }
        });
        assert!(matches!(
            HermitianOperator::from_complex(m),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn k_out_of_range_is_rejected() {
        let h = HermitianOperator::from_real(Mat::identity(3, 3)).unwrap();
        assert!(eigendecompose(&h, 0).is_err());
        assert!(eigendecompose(&h, 4).is_err());
    }

    #[test]
    fn one_by_one_is_rejected() {
        assert!(HermitianOperator::from_real(Mat::identity(1, 1)).is_err());
    }

    #[test]
    fn complex_with_zero_imaginary_part_is_stored_real() {
        let m = Mat::from_fn(2, 2, |i, j| c((i + j) as f64, 0.0));
        assert!(HermitianOperator::from_complex(m).unwrap().is_real());
    }

    #[test]
    fn harmonic_ground_state_phase_variance() {
        let basis = ModeBasis::oscillator(10, 1.5, 350.0).unwrap();
        let zpf = (2.0f64 * 1.5 / 350.0).powf(0.25);
        let p2 = basis.phase_squared().unwrap();
        assert_relative_eq!(p2[(0, 0)], zpf * zpf, epsilon = 1e-15);
        let p = basis.phase().unwrap();
        let p_sq = &p * &p;
        assert_relative_eq!(p_sq[(0, 0)], zpf * zpf, epsilon = 1e-15);
    }

    #[test]
    fn interior_commutator_is_i() {
        let basis = ModeBasis::harmonic(10, 0.37).unwrap();
        let ModeOperators::Harmonic { phase, number } = mode_operators(&basis).unwrap() else {
            panic!("expected harmonic operators");
        };
        let comm = &phase * &number - &number * &phase;
        for i in 0..8 {
            for j in 0..8 {
                let expected = if i == j { c(0.0, 1.0) } else { c(0.0, 0.0) };
                assert!(
                    (comm[(i, j)] - expected).norm() < 1e-12,
                    "({i},{j}) {:?}",
                    comm[(i, j)]
                );
            }
        }
    }

    #[test]
    fn charge_basis_exp_phase_shifts_by_one() {
        let basis = ModeBasis::charge(21).unwrap();
        let ModeOperators::Charge {
            exp_i_phase,
            number,
        } = mode_operators(&basis).unwrap()
        else {
            panic!("expected charge operators");
        };
        assert_eq!(basis.charge_of(0), -10);
        assert_eq!(basis.charge_of(20), 10);
        // e^{iφ} n e^{-iφ} = n - 1 on the interior
        for j in 0..20 {
            assert_eq!(exp_i_phase[(j + 1, j)], c(1.0, 0.0));
            assert_eq!(number[(j + 1, j + 1)].re - number[(j, j)].re, 1.0);
        }
        let total: f64 = (0..21)
            .flat_map(|i| (0..21).map(move |j| (i, j)))
            .map(|(i, j)| exp_i_phase[(i, j)].norm())
            .sum();
        assert_eq!(total, 20.0);
    }

    #[test]
    fn too_few_levels_rejected() {
        assert!(ModeBasis::harmonic(3, 0.5).is_err());
        assert!(ModeBasis::charge(3).is_err());
    }

    #[test]
    fn exp_i_phase_matches_matrix_exponential_in_large_basis() {
        // Independent route: diagonalize the truncated φ in a much larger
        // basis and exponentiate; low-lying elements converge to the exact ones.
        let zpf = 0.45;
        let alpha = 1.3;
        let small = ModeBasis::harmonic(8, zpf).unwrap();
        let big = ModeBasis::harmonic(120, zpf).unwrap();
        let phi = big.phase().unwrap();
        let evd = phi.self_adjoint_eigen(Side::Lower).unwrap();
        let u = evd.U();
        let s = evd.S().column_vector();
        let exact = small.exp_i_phase(alpha).unwrap();
        for m in 0..8 {
            for n in 0..8 {
                let mut acc = c(0.0, 0.0);
                for k in 0..120 {
                    acc += C64::from_polar(1.0, alpha * s[k]) * u[(m, k)] * u[(n, k)];
                }
                assert!((acc - exact[(m, n)]).norm() < 1e-10, "({m},{n})");
            }
        }
    }

    #[test]
    fn embed_slots() {
        let sx = Mat::from_fn(2, 2, |i, j| if i != j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        let id = Mat::<C64>::identity(2, 2);
        let e0 = embed_matrix(&[2, 2], sx.as_ref(), 0).unwrap();
        let e1 = embed_matrix(&[2, 2], sx.as_ref(), 1).unwrap();
        let k0 = kron(sx.as_ref(), id.as_ref());
        let k1 = kron(id.as_ref(), sx.as_ref());
        assert_eq!(e0, k0);
        assert_eq!(e1, k1);
        // σx ⊗ I flips the first qubit: |00⟩ → |10⟩ (index 0 → 2)
        assert_eq!(e0[(2, 0)], c(1.0, 0.0));
        assert_eq!(e1[(1, 0)], c(1.0, 0.0));
        assert!(embed_matrix(&[2, 2], sx.as_ref(), 2).is_err());
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert_relative_eq!(
            laguerre(2, 0.0, x),
            0.5 * (x * x - 4.0 * x + 2.0),
            epsilon = 1e-14
        );
        assert_relative_eq!(laguerre(1, 3.0, x), 4.0 - x, epsilon = 1e-14);
    }
}
