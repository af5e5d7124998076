use super::{vcycle, CoarseSolver, CycleRecord, ExactCoarseSolver, Hierarchy, VcycleTrace};
use crate::error::{Error, Result};
use crate::linalg::{norm2, sub};

pub const DEFAULT_MAX_CYCLES: usize = 50;

/// Finest-level stopping rule for the V-cycle drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinestStop {
    /// Stop once `‖x - x^(n)‖_A ≤ theta` (needs a reference solution), or after `max_cycles`.
    ErrorBelow { theta: f64, max_cycles: usize },
    /// Run exactly this many cycles.
    MaxCycles(usize),
}

impl FinestStop {
    pub fn error_below(theta: f64) -> Self {
        Self::ErrorBelow {
            theta,
            max_cycles: DEFAULT_MAX_CYCLES,
        }
    }

    fn max_cycles(&self) -> usize {
        match *self {
            Self::ErrorBelow { max_cycles, .. } => max_cycles,
            Self::MaxCycles(n) => n,
        }
    }

    fn reached(&self, err: Option<f64>) -> bool {
        match *self {
            Self::ErrorBelow { theta, .. } => err.is_some_and(|e| e <= theta),
            Self::MaxCycles(_) => false,
        }
    }
}

/// Flags runaway growth: five consecutive increases adding up to more than 10x.
#[derive(Default)]
struct DivergenceGuard {
    history: Vec<f64>,
}

impl DivergenceGuard {
    const WINDOW: usize = 5;
    const FACTOR: f64 = 10.0;

    fn push(&mut self, value: f64) -> Result<()> {
        self.history.push(value);
        let n = self.history.len();
        if n > Self::WINDOW {
            let window = &self.history[n - Self::WINDOW - 1..];
            let rising = window.windows(2).all(|w| w[1] > w[0]);
            if rising && window[Self::WINDOW] > Self::FACTOR * window[0] {
                return Err(Error::Diverged(format!(
                    "monitored norm grew from {:.3e} to {:.3e} over the last {} cycles",
                    window[0],
                    window[Self::WINDOW],
                    Self::WINDOW
                )));
            }
        }
        Ok(())
    }
}

fn check_dims(h: &Hierarchy, b: &[f64], x0: &[f64], reference: Option<&[f64]>) -> Result<()> {
    let n = h.dim(h.finest_level());
    let bad = |what: &str, len: usize| {
        Error::DimensionMismatch(format!("{what} has length {len}, finest level has {n}"))
    };
    if b.len() != n {
        return Err(bad("right-hand side", b.len()));
    }
    if x0.len() != n {
        return Err(bad("initial guess", x0.len()));
    }
    if let Some(r) = reference {
        if r.len() != n {
            return Err(bad("reference solution", r.len()));
        }
    }
    Ok(())
}

fn error_anorm(h: &Hierarchy, reference: Option<&[f64]>, x: &[f64]) -> Result<Option<f64>> {
    reference
        .map(|xr| h.finest_matrix().a_norm(&sub(xr, x)))
        .transpose()
}

/// Repeats V-cycles from `x0` until `stop` fires.
pub fn run_vcycles(
    h: &Hierarchy,
    b: &[f64],
    x0: &[f64],
    stop: FinestStop,
    coarse: &dyn CoarseSolver,
    reference: Option<&[f64]>,
) -> Result<VcycleTrace> {
    check_dims(h, b, x0, reference)?;
    if matches!(stop, FinestStop::ErrorBelow { .. }) && reference.is_none() {
        return Err(Error::Missing(
            "error-based finest stopping needs a reference solution".into(),
        ));
    }
    let a = h.finest_matrix();
    let mut x = x0.to_vec();
    let mut err = error_anorm(h, reference, &x)?;
    let initial_res = norm2(&a.residual(b, &x)?);
    let mut guard = DivergenceGuard::default();
    guard.push(err.unwrap_or(initial_res))?;

    let mut trace = VcycleTrace {
        initial_err_anorm: err,
        initial_res_2norm: initial_res,
        records: Vec::new(),
        stop_reached: stop.reached(err),
        final_iterate: Vec::new(),
    };
    if !trace.stop_reached {
        for cycle in 1..=stop.max_cycles() {
            let (next, coarse_report) = vcycle(h, b, &x, h.finest_level(), coarse, err)?;
            x = next;
            err = error_anorm(h, reference, &x)?;
            let res = norm2(&a.residual(b, &x)?);
            trace.records.push(CycleRecord {
                cycle,
                err_anorm: err,
                res_2norm: res,
                onecycle_reldiff: None,
                cumdiff_anorm: None,
                coarse: coarse_report,
            });
            guard.push(err.unwrap_or(res))?;
            if stop.reached(err) {
                trace.stop_reached = true;
                break;
            }
        }
    }
    trace.final_iterate = x;
    Ok(trace)
}

/// Advances an inexact-cycle sequence and, alongside it, measures
/// (a) one exact cycle branched off every inexact iterate and
/// (b) an independent exact-cycle sequence started from `x0`.
pub fn run_lockstep(
    h: &Hierarchy,
    b: &[f64],
    x0: &[f64],
    stop: FinestStop,
    coarse_in: &dyn CoarseSolver,
    reference: &[f64],
) -> Result<VcycleTrace> {
    check_dims(h, b, x0, Some(reference))?;
    let a = h.finest_matrix();
    let j = h.finest_level();
    let exact = ExactCoarseSolver;

    let mut x_in = x0.to_vec();
    let mut x_ex = x0.to_vec();
    let mut err = a.a_norm(&sub(reference, &x_in))?;
    let initial_res = norm2(&a.residual(b, &x_in)?);
    let mut guard = DivergenceGuard::default();
    guard.push(err)?;

    let mut trace = VcycleTrace {
        initial_err_anorm: Some(err),
        initial_res_2norm: initial_res,
        records: Vec::new(),
        stop_reached: stop.reached(Some(err)),
        final_iterate: Vec::new(),
    };
    if !trace.stop_reached {
        for cycle in 1..=stop.max_cycles() {
            let (branch, _) = vcycle(h, b, &x_in, j, &exact, Some(err))?;
            let (next, coarse_report) = vcycle(h, b, &x_in, j, coarse_in, Some(err))?;
            let onecycle = if err > 0.0 {
                Some(a.a_norm(&sub(&branch, &next))? / err)
            } else {
                None
            };
            x_ex = vcycle(h, b, &x_ex, j, &exact, None)?.0;
            let cumdiff = a.a_norm(&sub(&x_ex, &next))?;
            x_in = next;
            err = a.a_norm(&sub(reference, &x_in))?;
            trace.records.push(CycleRecord {
                cycle,
                err_anorm: Some(err),
                res_2norm: norm2(&a.residual(b, &x_in)?),
                onecycle_reldiff: onecycle,
                cumdiff_anorm: Some(cumdiff),
                coarse: coarse_report,
            });
            guard.push(err)?;
            if stop.reached(Some(err)) {
                trace.stop_reached = true;
                break;
            }
        }
    }
    trace.final_iterate = x_in;
    Ok(trace)
}

#[derive(Debug, Clone, Copy)]
pub struct ReferenceOptions {
    /// Required `‖b - A x_ref‖ / ‖b‖` once the iteration has stagnated.
    pub rel_residual_target: f64,
    pub max_cycles: usize,
    /// Cycles without a 10% residual improvement that count as stagnation.
    pub patience: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            rel_residual_target: 1e-12,
            max_cycles: 200,
            patience: 3,
        }
    }
}

/// Finest-level solution by exact V-cycles driven until the residual stagnates.
/// Returns the iterate with the smallest residual seen.
pub fn reference_solution(h: &Hierarchy, b: &[f64], opts: &ReferenceOptions) -> Result<Vec<f64>> {
    let a = h.finest_matrix();
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has length {}, finest level has {n}",
            b.len()
        )));
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut best = x.clone();
    let mut best_res = b_norm;
    let mut anchor = b_norm;
    let mut stalled = 0;
    for _ in 0..opts.max_cycles {
        x = vcycle(h, b, &x, h.finest_level(), &ExactCoarseSolver, None)?.0;
        let res = norm2(&a.residual(b, &x)?);
        if res < best_res {
            best_res = res;
            best.copy_from_slice(&x);
        }
        if res < 0.9 * anchor {
            anchor = res;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= opts.patience {
                break;
            }
        }
    }
    let attained = best_res / b_norm;
    if attained > opts.rel_residual_target {
        return Err(Error::Stagnation {
            attained,
            target: opts.rel_residual_target,
        });
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_guard_needs_sustained_growth() {
        let mut g = DivergenceGuard::default();
        for v in [1.0, 0.5, 2.0, 1.0, 30.0, 0.1] {
            g.push(v).unwrap();
        }
        let mut g = DivergenceGuard::default();
        let mut out = Ok(());
        for v in [1.0, 2.0, 3.0, 5.0, 8.0, 13.0] {
            out = g.push(v);
        }
        assert!(matches!(out, Err(Error::Diverged(_))));
    }
}
