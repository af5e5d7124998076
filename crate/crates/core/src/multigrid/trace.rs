use std::io::Write;

use super::CoarseSolveReport;
use crate::error::Result;

pub const TRACE_CSV_HEADER: &str =
    "cycle,err_anorm,res_2norm,onecycle_reldiff,cumdiff_anorm,coarse_iters,coarse_eta,coarse_err_a0";

/// One V-cycle of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    /// 1-based cycle number.
    pub cycle: usize,
    /// `‖x - x^(n)‖_A`, when a reference solution is available.
    pub err_anorm: Option<f64>,
    pub res_2norm: f64,
    /// `‖x_ex^new - x_in^new‖_A / ‖x - x^prev‖_A` for one exact cycle branched off the previous iterate.
    pub onecycle_reldiff: Option<f64>,
    /// `‖x_ex^(n) - x_in^(n)‖_A` against an independent exact-cycle sequence.
    pub cumdiff_anorm: Option<f64>,
    pub coarse: CoarseSolveReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VcycleTrace {
    pub initial_err_anorm: Option<f64>,
    pub initial_res_2norm: f64,
    pub records: Vec<CycleRecord>,
    /// Whether the finest-level stopping rule fired (as opposed to running out of cycles).
    pub stop_reached: bool,
    pub final_iterate: Vec<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

impl VcycleTrace {
    pub fn cycles(&self) -> usize {
        self.records.len()
    }

    pub fn total_coarse_iterations(&self) -> usize {
        self.records.iter().map(|r| r.coarse.iterations).sum()
    }

    pub fn final_err_anorm(&self) -> Option<f64> {
        self.records
            .last()
            .map_or(self.initial_err_anorm, |r| r.err_anorm)
    }

    /// Per-cycle error reduction factors `‖e^(n)‖_A / ‖e^(n-1)‖_A`.
    pub fn convergence_rates(&self) -> Vec<Option<f64>> {
        let mut prev = self.initial_err_anorm;
        self.records
            .iter()
            .map(|r| {
                let rate = match (prev, r.err_anorm) {
                    (Some(p), Some(c)) if p > 0.0 => Some(c / p),
                    _ => None,
                };
                prev = r.err_anorm;
                rate
            })
            .collect()
    }

    /// Writes `# `-prefixed comment lines, the header, and one row per cycle.
    /// Absent values are empty fields.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{TRACE_CSV_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:e},{},{},{},{},{}",
                r.cycle,
                opt(r.err_anorm),
                r.res_2norm,
                opt(r.onecycle_reldiff),
                opt(r.cumdiff_anorm),
                r.coarse.iterations,
                opt(r.coarse.final_bound_eta),
                opt(r.coarse.oracle_error_a0norm),
            )?;
        }
        Ok(())
    }
}
