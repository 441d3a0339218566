//! Scalar minimization and root finding over fallible objectives, backed by
//! argmin's Brent solvers.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::brent::{BrentOpt, BrentRoot};

use crate::error::{Error, Result};

struct Objective<F>(F);

impl<F> CostFunction for Objective<F>
where
    F: Fn(f64) -> Result<f64>,
{
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        (self.0)(*x).map_err(argmin::core::Error::from)
    }
}

fn recover(e: argmin::core::Error) -> Error {
    match e.downcast::<Error>() {
        Ok(inner) => inner,
        Err(other) => Error::Numeric(other.to_string()),
    }
}

/// Local minimum of `f` on `[lo, hi]` located to absolute tolerance `tol`.
/// Returns `(x, f(x))`.
pub fn minimize<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(lo < hi) {
        return Err(Error::Validation(format!("empty bracket [{lo}, {hi}]")));
    }
    // argmin's tolerance is eps·|x| + t; the relative part is kept tiny so the
    // absolute tolerance governs.
    let solver = BrentOpt::new(lo, hi).set_tolerance(f64::EPSILON.sqrt() * 1e-2, tol / 3.0);
    let res = Executor::new(Objective(f), solver)
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(recover)?;
    let state = res.state();
    let x = *state
        .get_best_param()
        .ok_or_else(|| Error::Numeric("minimizer returned no point".into()))?;
    Ok((x, state.get_best_cost()))
}

/// Root of `f` in `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Range(format!(
            "no sign change on [{lo}, {hi}] (values {flo:e}, {fhi:e})"
        )));
    }
    let res = Executor::new(Objective(f), BrentRoot::new(lo, hi, tol))
        .configure(|s| s.max_iters(500))
        .run()
        .map_err(recover)?;
    res.state()
        .get_best_param()
        .copied()
        .ok_or_else(|| Error::Numeric("root finder returned no point".into()))
}
