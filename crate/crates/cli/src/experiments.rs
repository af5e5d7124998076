//! The experiment subcommands. Each builds its hierarchies, runs the solver
//! variants (independent runs in parallel), writes CSV files and checks the
//! properties the theory predicts for that experiment.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, OnceLock};

use anyhow::{Context, Result};
use inexact_mg::analysis::{
    estimate_a0_inv_norm, estimate_a_norm, estimate_e_norm, estimate_t_norm, NormConstants,
};
use inexact_mg::fem::{build_hierarchy, ModelProblem, ProblemSpec};
use inexact_mg::krylov::{
    epsilon_policy, estimate_mu, tau_for_gamma, CgCoarseSolver, Estimator, StopRule,
};
use inexact_mg::linalg::EigenEstimate;
use inexact_mg::multigrid::{
    reference_solution, run_lockstep, run_vcycles, BoundComparison, CoarseSolver,
    ExactCoarseSolver, FinestStop, ReferenceOptions, SmootherSpec, VcycleTrace,
};
use log::info;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ProblemKind};
use crate::summary::{flag_rows, write_summary, RowKind, SummaryRow};

/// Which predicted property a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    /// One-cycle relative difference above `γ`.
    OneCycle,
    /// Per-cycle error reduction above `‖E‖_A + γ`.
    Rate,
    /// Inexact and exact cycles stagnate at different error levels.
    Attainable,
    /// Cumulative exact/inexact difference above `θ`.
    Cumulative,
    /// The residual-bound rule did less coarse work than the Gauss-Radau rule.
    BoundOrder,
    /// The Gauss-Radau bound was not the sharper one often enough.
    BoundShare,
    /// A computable stopping rule changed the finest-level cycle count.
    CycleCount,
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub check: Check,
    pub message: String,
}

impl Violation {
    pub fn new(check: Check, message: String) -> Self {
        Self { check, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}] {}", self.check, self.message)
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    /// Predicted properties that failed; any entry makes the CLI exit with 2.
    pub violations: Vec<Violation>,
    /// Observations worth reporting that are not failures.
    pub notes: Vec<String>,
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<NamedTrace>,
    pub constants: Vec<(String, NormConstants)>,
}

impl Report {
    fn violate(&mut self, check: Check, message: String) {
        self.violations.push(Violation::new(check, message));
    }

    pub fn violations_of(&self, check: Check) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.check == check)
    }
}

#[derive(Debug, Clone)]
pub struct NamedTrace {
    pub problem: String,
    pub name: String,
    /// Tolerance-like parameter of the run (γ, θ, τ, ...).
    pub param: f64,
    pub trace: VcycleTrace,
    /// `θ` of the run when it has one.
    pub theta: Option<f64>,
}

fn e(x: f64) -> String {
    format!("{x:e}")
}

/// An assembled problem with its reference solution.
struct Prepared {
    name: String,
    problem: ModelProblem,
    reference: Vec<f64>,
}

impl Prepared {
    fn header(&self) -> Vec<String> {
        let h = &self.problem.hierarchy;
        let spec = &self.problem.spec;
        vec![
            format!("problem={}", self.name),
            format!(
                "levels={} coarsest_m={} finest_m={}",
                spec.levels,
                spec.coarsest_m,
                spec.finest_m()
            ),
            format!(
                "coarsest_dof={} finest_dof={}",
                h.dim(0),
                h.dim(h.finest_level())
            ),
        ]
    }

    fn zero(&self) -> Vec<f64> {
        vec![0.0; self.reference.len()]
    }
}

fn smoother(cfg: &ExperimentConfig) -> Result<SmootherSpec> {
    Ok(SmootherSpec::symmetric_gauss_seidel(cfg.smoother_sweeps)?)
}

fn build(cfg: &ExperimentConfig, spec: ProblemSpec, cap: usize) -> Result<ModelProblem> {
    info!(
        "assembling {} levels, finest {} unknowns",
        spec.levels,
        spec.finest_dim()
    );
    Ok(build_hierarchy(spec, Some(smoother(cfg)?), cap)?)
}

fn reference(cfg: &ExperimentConfig, problem: &ModelProblem) -> Result<Vec<f64>> {
    let opts = ReferenceOptions {
        rel_residual_target: cfg.reference_rel_residual,
        ..Default::default()
    };
    reference_solution(&problem.hierarchy, &problem.rhs, &opts)
        .context("computing the reference solution")
}

fn prepare(cfg: &ExperimentConfig, kind: ProblemKind) -> Result<Prepared> {
    let problem = build(cfg, cfg.spec(kind)?, cfg.direct_cap)?;
    let reference = reference(cfg, &problem)?;
    Ok(Prepared {
        name: kind.to_string(),
        problem,
        reference,
    })
}

fn config_header(cfg: &ExperimentConfig, command: &str) -> Vec<String> {
    vec![
        format!("experiment={command}"),
        format!(
            "smoother=symmetric-gauss-seidel sweeps={} seed={} power_tol={}",
            cfg.smoother_sweeps,
            cfg.seed,
            e(cfg.power_tol)
        ),
    ]
}

fn write_trace(
    out_dir: &Path,
    file: &str,
    comments: &[String],
    trace: &VcycleTrace,
    report: &mut Report,
) -> Result<()> {
    let path = out_dir.join(file);
    let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    trace.write_csv(BufWriter::new(f), comments)?;
    report.files.push(path);
    Ok(())
}

fn write_rows(out_dir: &Path, file: &str, comments: &[String], report: &mut Report) -> Result<()> {
    let path = out_dir.join(file);
    let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_summary(BufWriter::new(f), comments, &report.rows)?;
    report.files.push(path);
    Ok(())
}

fn summary_row(
    group: &str,
    label: &str,
    kind: RowKind,
    param: Option<f64>,
    run: &Result<VcycleTrace>,
) -> SummaryRow {
    let (cycles, work, err) = match run {
        Ok(t) if t.stop_reached => (
            Some(t.cycles()),
            Some(t.total_coarse_iterations()),
            t.final_err_anorm(),
        ),
        Ok(t) => (None, Some(t.total_coarse_iterations()), t.final_err_anorm()),
        Err(_) => (None, None, None),
    };
    SummaryRow {
        group: group.to_string(),
        label: label.to_string(),
        kind,
        param,
        v_cycles: cycles,
        total_coarse_iters: work,
        err_anorm: err,
        matches_exact: false,
        least_work: false,
    }
}

/// `‖E‖_A` estimates already computed in this process, keyed by everything
/// they depend on. The estimate is deterministic, so reuse is exact.
fn e_norm_cache() -> &'static Mutex<HashMap<String, EigenEstimate>> {
    static CACHE: OnceLock<Mutex<HashMap<String, EigenEstimate>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

fn e_norm_estimate(cfg: &ExperimentConfig, p: &Prepared) -> Result<EigenEstimate> {
    let spec = &p.problem.spec;
    let key = format!(
        "{}|{}|{}|{}|{:?}",
        p.name,
        spec.levels,
        spec.coarsest_m,
        cfg.smoother_sweeps,
        cfg.power_options()
    );
    if let Some(est) = e_norm_cache().lock().unwrap().get(&key) {
        return Ok(*est);
    }
    info!("estimating the error propagation norm for {}", p.name);
    let est = estimate_e_norm(&p.problem.hierarchy, &cfg.power_options())?;
    e_norm_cache().lock().unwrap().insert(key, est);
    Ok(est)
}

fn with_e_norm(cfg: &ExperimentConfig, p: &Prepared) -> Result<(f64, NormConstants)> {
    let est = e_norm_estimate(cfg, p)?;
    Ok((
        est.value,
        NormConstants {
            e_anorm: Some(est),
            ..Default::default()
        },
    ))
}

/// Records the run failure of a variant and keeps going.
fn note_failure(report: &mut Report, what: &str, run: &Result<VcycleTrace>) {
    if let Err(err) = run {
        report.notes.push(format!("{what}: run failed: {err:#}"));
    }
}

pub type Experiment = fn(&ExperimentConfig, &Path) -> Result<Report>;

/// Exact and relative-residual coarse solves for every θ and `τ = 2^-i`.
pub fn motivating(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    let mut comments = config_header(cfg, "motivating");
    let taus = cfg.taus();
    for &kind in &cfg.problems {
        let p = prepare(cfg, kind)?;
        comments.extend(p.header());
        for &theta in &cfg.thetas {
            let group = format!("{}/theta={}", p.name, e(theta));
            info!(
                "{group}: exact baseline and {} relative residual tolerances",
                taus.len()
            );
            let stop = FinestStop::ErrorBelow {
                theta,
                max_cycles: cfg.max_cycles,
            };
            let variants: Vec<Option<f64>> = std::iter::once(None)
                .chain(taus.iter().map(|&t| Some(t)))
                .collect();
            let runs: Vec<Result<VcycleTrace>> = variants
                .par_iter()
                .map(|tau| {
                    let h = &p.problem.hierarchy;
                    let solver: Box<dyn CoarseSolver> = match tau {
                        None => Box::new(ExactCoarseSolver),
                        Some(t) => Box::new(CgCoarseSolver::new(StopRule::RelResidual(*t))),
                    };
                    Ok(run_vcycles(
                        h,
                        &p.problem.rhs,
                        &p.zero(),
                        stop,
                        solver.as_ref(),
                        Some(&p.reference),
                    )?)
                })
                .collect();
            let mut prev_cycles: Option<usize> = None;
            for (tau, run) in variants.iter().zip(&runs) {
                let (label, kind) = match tau {
                    None => ("exact", RowKind::Baseline),
                    Some(_) => ("relres", RowKind::Sweep),
                };
                note_failure(&mut report, &format!("{group}/{label} τ={tau:?}"), run);
                let row = summary_row(&group, label, kind, *tau, run);
                if let (Some(t), Some(c)) = (tau, row.v_cycles) {
                    if prev_cycles.is_some_and(|p| c > p) {
                        report.notes.push(format!(
                            "{group}: cycle count rises from {} to {c} as τ decreases to {}",
                            prev_cycles.unwrap(),
                            e(*t)
                        ));
                    }
                    prev_cycles = Some(c);
                }
                report.rows.push(row);
            }
        }
    }
    flag_rows(&mut report.rows);
    comments.extend(report.notes.iter().map(|n| format!("note: {n}")));
    write_rows(out_dir, "motivating_summary.csv", &comments, &mut report)?;
    Ok(report)
}

/// Checks one-cycle differences and per-cycle rates against `γ` and
/// `‖E‖_A + γ`, skipping cycles that start below the roundoff floor.
fn check_relative(
    report: &mut Report,
    label: &str,
    trace: &VcycleTrace,
    gamma: f64,
    e_anorm: Option<f64>,
    floor: f64,
) {
    let mut prev = trace.initial_err_anorm.unwrap_or(f64::INFINITY);
    for rec in &trace.records {
        let diff = rec.onecycle_reldiff.unwrap_or(0.0);
        let rate = rec.err_anorm.map(|x| x / prev);
        if prev > floor {
            if diff > gamma {
                report.violate(
                    Check::OneCycle,
                    format!(
                        "{label} cycle {}: one-cycle relative difference {} exceeds γ={}",
                        rec.cycle,
                        e(diff),
                        e(gamma)
                    ),
                );
            }
            if let (Some(en), Some(rate)) = (e_anorm, rate) {
                if rate > en + gamma {
                    report.violate(
                        Check::Rate,
                        format!(
                            "{label} cycle {}: error reduction {} exceeds ‖E‖_A+γ={}",
                            rec.cycle,
                            e(rate),
                            e(en + gamma)
                        ),
                    );
                }
            }
        } else if diff > gamma {
            report.notes.push(format!(
                "{label} cycle {}: one-cycle relative difference {} above γ at error level {} (roundoff)",
                rec.cycle,
                e(diff),
                e(prev)
            ));
        }
        prev = rec.err_anorm.unwrap_or(prev);
    }
}

/// Cycles at the end of a run over which the stagnation level is taken.
const PLATEAU: usize = 10;

/// Error level a run stagnates at: the largest error over its last cycles,
/// raised to `resolution` (below which errors against a computed reference
/// cannot be told apart).
fn attainable(trace: &VcycleTrace, resolution: f64) -> f64 {
    let n = trace.records.len();
    trace.records[n.saturating_sub(PLATEAU)..]
        .iter()
        .filter_map(|r| r.err_anorm)
        .fold(resolution, f64::max)
}

/// Relative-error oracle stopping with each γ, run long enough to reach the
/// attainable accuracy, next to an exact-solve run of the same length.
pub fn relative_gamma(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    for &kind in &cfg.problems {
        let p = prepare(cfg, kind)?;
        let (e_anorm, constants) = with_e_norm(cfg, &p)?;
        let mut header = config_header(cfg, "relative-gamma");
        header.extend(p.header());
        header.extend(constants.header_lines());
        header.push(format!(
            "attainable accuracy: largest err_anorm over the last {PLATEAU} cycles, at least 64*eps*||x||_A"
        ));
        let stop = FinestStop::MaxCycles(cfg.attainable_cycles);
        let h = &p.problem.hierarchy;
        let exact = run_vcycles(
            h,
            &p.problem.rhs,
            &p.zero(),
            stop,
            &ExactCoarseSolver,
            Some(&p.reference),
        )?;
        let runs: Vec<Result<VcycleTrace>> = cfg
            .gammas
            .par_iter()
            .map(|&gamma| {
                let solver = CgCoarseSolver::new(StopRule::RelErrorOracle(gamma));
                Ok(run_lockstep(
                    h,
                    &p.problem.rhs,
                    &p.zero(),
                    stop,
                    &solver,
                    &p.reference,
                )?)
            })
            .collect();
        let x_anorm = h
            .finest_matrix()
            .a_inner(&p.reference, &p.reference)?
            .sqrt();
        let resolution = 64.0 * f64::EPSILON * x_anorm;
        let exact_floor = attainable(&exact, resolution);
        let mut comments = header.clone();
        comments.push("variant=exact".into());
        write_trace(
            out_dir,
            &format!("relative_gamma_{}_exact.csv", p.name),
            &comments,
            &exact,
            &mut report,
        )?;
        report.traces.push(NamedTrace {
            problem: p.name.clone(),
            name: "exact".into(),
            param: 0.0,
            trace: exact,
            theta: None,
        });
        for (&gamma, run) in cfg.gammas.iter().zip(runs) {
            let label = format!("{} γ={}", p.name, e(gamma));
            let trace = run.with_context(|| label.clone())?;
            check_relative(
                &mut report,
                &label,
                &trace,
                gamma,
                Some(e_anorm),
                cfg.roundoff_floor,
            );
            let floor = attainable(&trace, resolution);
            if floor > 10.0 * exact_floor || exact_floor > 10.0 * floor {
                report.violate(Check::Attainable, format!(
                    "{label}: attainable accuracy {} differs from the exact cycle's {} by more than 10x",
                    e(floor),
                    e(exact_floor)
                ));
            }
            let mut comments = header.clone();
            comments.push(format!("variant=rel-error-oracle gamma={}", e(gamma)));
            comments.push(format!(
                "attainable_err_anorm={} exact_attainable_err_anorm={}",
                e(floor),
                e(exact_floor)
            ));
            write_trace(
                out_dir,
                &format!("relative_gamma_{}_gamma={}.csv", p.name, e(gamma)),
                &comments,
                &trace,
                &mut report,
            )?;
            report.traces.push(NamedTrace {
                problem: p.name.clone(),
                name: "rel-error-oracle".into(),
                param: gamma,
                trace,
                theta: None,
            });
        }
        report.constants.push((p.name.clone(), constants));
    }
    Ok(report)
}

/// Relative residual stopping with `τ` chosen from estimated norms so that
/// the relative error assumption holds with `γ = relres_gamma`.
pub fn relres_estimate(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    let theta = cfg.thetas.iter().copied().fold(f64::INFINITY, f64::min);
    for &kind in &cfg.problems {
        let p = prepare(cfg, kind)?;
        let h = &p.problem.hierarchy;
        let opts = cfg.power_options();
        info!("estimating ‖T‖, ‖A‖, ‖A₀⁻¹‖ for {}", p.name);
        let constants = NormConstants {
            t_norm: Some(estimate_t_norm(h, &opts)?),
            a_norm: Some(estimate_a_norm(h, &opts)?),
            a0_inv_norm: Some(estimate_a0_inv_norm(h, &opts)?),
            ..Default::default()
        };
        let gamma = cfg.relres_gamma;
        let tau = tau_for_gamma(
            gamma,
            constants.t_norm.unwrap().value,
            constants.a_norm.unwrap().value,
            constants.a0_inv_norm.unwrap().value,
        );
        let stop = FinestStop::ErrorBelow {
            theta,
            max_cycles: cfg.max_cycles,
        };
        let solver = CgCoarseSolver::new(StopRule::RelResidual(tau));
        let trace = run_lockstep(h, &p.problem.rhs, &p.zero(), stop, &solver, &p.reference)?;
        let label = format!("{} τ={}", p.name, e(tau));
        check_relative(&mut report, &label, &trace, gamma, None, cfg.roundoff_floor);
        let largest = trace
            .records
            .iter()
            .filter_map(|r| r.onecycle_reldiff)
            .fold(0.0, f64::max);
        let mut comments = config_header(cfg, "relres-estimate");
        comments.extend(p.header());
        comments.extend(constants.header_lines());
        comments.push(format!(
            "variant=rel-residual tau={} gamma={} theta={}",
            e(tau),
            e(gamma),
            e(theta)
        ));
        comments.push(format!("largest_onecycle_reldiff={}", e(largest)));
        write_trace(
            out_dir,
            &format!("relres_estimate_{}.csv", p.name),
            &comments,
            &trace,
            &mut report,
        )?;
        report.traces.push(NamedTrace {
            problem: p.name.clone(),
            name: "rel-residual".into(),
            param: tau,
            trace,
            theta: Some(theta),
        });
        report.constants.push((p.name.clone(), constants));
    }
    Ok(report)
}

fn check_cumulative(report: &mut Report, label: &str, trace: &VcycleTrace, theta: f64) {
    for rec in &trace.records {
        let d = rec.cumdiff_anorm.unwrap_or(0.0);
        if d > theta {
            report.violate(
                Check::Cumulative,
                format!(
                    "{label} cycle {}: cumulative difference {} exceeds θ={}",
                    rec.cycle,
                    e(d),
                    e(theta)
                ),
            );
        }
    }
}

/// First cycle whose coarsest-level rule held without any iteration, and the
/// finest error there.
fn auto_satisfied(trace: &VcycleTrace) -> Option<(usize, Option<f64>)> {
    trace
        .records
        .iter()
        .find(|r| r.coarse.iterations == 0)
        .map(|r| (r.cycle, r.err_anorm))
}

fn indicator_comment(trace: &VcycleTrace, theta: f64) -> String {
    match auto_satisfied(trace) {
        Some((c, err)) => format!(
            "heuristic_indicator: coarsest rule auto-satisfied first at cycle {c}, err_anorm={} (theta={})",
            err.map(e).unwrap_or_default(),
            e(theta)
        ),
        None => "heuristic_indicator: coarsest rule never auto-satisfied".into(),
    }
}

/// Absolute-error oracle stopping with `ε = θ(1 - ‖E‖_A)` for a fixed number of cycles.
pub fn absolute_eps(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    for &kind in &cfg.problems {
        let p = prepare(cfg, kind)?;
        let (e_anorm, constants) = with_e_norm(cfg, &p)?;
        let h = &p.problem.hierarchy;
        let stop = FinestStop::MaxCycles(cfg.fixed_cycles);
        let runs: Vec<Result<VcycleTrace>> = cfg
            .thetas
            .par_iter()
            .map(|&theta| {
                let solver = CgCoarseSolver::new(StopRule::AbsErrorOracle(theta * (1.0 - e_anorm)));
                Ok(run_lockstep(
                    h,
                    &p.problem.rhs,
                    &p.zero(),
                    stop,
                    &solver,
                    &p.reference,
                )?)
            })
            .collect();
        for (&theta, run) in cfg.thetas.iter().zip(runs) {
            let label = format!("{} θ={}", p.name, e(theta));
            let trace = run.with_context(|| label.clone())?;
            check_cumulative(&mut report, &label, &trace, theta);
            if trace
                .records
                .last()
                .is_some_and(|r| r.coarse.iterations != 0)
            {
                report.notes.push(format!(
                    "{label}: coarsest solver still iterating in the last cycle"
                ));
            }
            let mut comments = config_header(cfg, "absolute-eps");
            comments.extend(p.header());
            comments.extend(constants.header_lines());
            comments.push(format!(
                "variant=abs-error-oracle theta={} eps={}",
                e(theta),
                e(theta * (1.0 - e_anorm))
            ));
            comments.push(indicator_comment(&trace, theta));
            write_trace(
                out_dir,
                &format!("absolute_eps_{}_theta={}.csv", p.name, e(theta)),
                &comments,
                &trace,
                &mut report,
            )?;
            report.traces.push(NamedTrace {
                problem: p.name.clone(),
                name: "abs-error-oracle".into(),
                param: theta * (1.0 - e_anorm),
                trace,
                theta: Some(theta),
            });
        }
        report.constants.push((p.name.clone(), constants));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
enum AbsVariant {
    Err,
    GaussRadau,
    Residual,
}

impl AbsVariant {
    fn label(self) -> &'static str {
        match self {
            Self::Err => "ERR",
            Self::GaussRadau => "GR",
            Self::Residual => "RES",
        }
    }

    fn solver(self, eps: f64, mu: f64) -> CgCoarseSolver {
        match self {
            Self::Err => CgCoarseSolver::new(StopRule::AbsErrorOracle(eps)),
            Self::GaussRadau | Self::Residual => {
                let estimator = if matches!(self, Self::GaussRadau) {
                    Estimator::GaussRadau
                } else {
                    Estimator::Residual
                };
                CgCoarseSolver::new(StopRule::AbsEta { eps, estimator })
                    .with_mu(mu)
                    .comparing_bounds()
            }
        }
    }
}

fn bound_tally(trace: &VcycleTrace) -> BoundComparison {
    trace
        .records
        .iter()
        .filter_map(|r| r.coarse.bound_comparison)
        .fold(BoundComparison::default(), BoundComparison::merge)
}

/// The computable `η`-based rules (Gauss-Radau and residual bound) against
/// the error oracle, with `ε = θ(1 - ‖E‖_A)`.
pub fn abs_stopping(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    let variants = [
        AbsVariant::Err,
        AbsVariant::GaussRadau,
        AbsVariant::Residual,
    ];
    for &kind in &cfg.problems {
        let p = prepare(cfg, kind)?;
        let h = &p.problem.hierarchy;
        let (e_anorm, mut constants) = with_e_norm(cfg, &p)?;
        let mu = estimate_mu(h.coarse_matrix(), h.coarse_factor(), &cfg.power_options())?;
        constants.mu = Some(mu);
        let stop = FinestStop::MaxCycles(cfg.fixed_cycles);
        let jobs: Vec<(f64, AbsVariant)> = cfg
            .thetas
            .iter()
            .flat_map(|&t| variants.iter().map(move |&v| (t, v)))
            .collect();
        let runs: Vec<Result<VcycleTrace>> = jobs
            .par_iter()
            .map(|&(theta, v)| {
                let solver = v.solver(theta * (1.0 - e_anorm), mu);
                Ok(run_lockstep(
                    h,
                    &p.problem.rhs,
                    &p.zero(),
                    stop,
                    &solver,
                    &p.reference,
                )?)
            })
            .collect();
        let mut tally = BoundComparison::default();
        let mut work: Vec<(f64, &str, usize)> = Vec::new();
        for (&(theta, v), run) in jobs.iter().zip(runs) {
            let label = format!("{} θ={} {}", p.name, e(theta), v.label());
            let trace = run.with_context(|| label.clone())?;
            check_cumulative(&mut report, &label, &trace, theta);
            tally = tally.merge(bound_tally(&trace));
            work.push((theta, v.label(), trace.total_coarse_iterations()));
            let mut comments = config_header(cfg, "abs-stopping");
            comments.extend(p.header());
            comments.extend(constants.header_lines());
            comments.push(format!(
                "variant={} theta={} eps={} total_coarse_iters={}",
                v.label(),
                e(theta),
                e(theta * (1.0 - e_anorm)),
                trace.total_coarse_iterations()
            ));
            comments.push(indicator_comment(&trace, theta));
            write_trace(
                out_dir,
                &format!(
                    "abs_stopping_{}_theta={}_{}.csv",
                    p.name,
                    e(theta),
                    v.label()
                ),
                &comments,
                &trace,
                &mut report,
            )?;
            report.traces.push(NamedTrace {
                problem: p.name.clone(),
                name: v.label().into(),
                param: theta * (1.0 - e_anorm),
                trace,
                theta: Some(theta),
            });
        }
        for &theta in &cfg.thetas {
            let of = |l: &str| {
                work.iter()
                    .find(|w| w.0 == theta && w.1 == l)
                    .map(|w| w.2)
                    .unwrap_or(0)
            };
            let (gr, res) = (of("GR"), of("RES"));
            if res < gr {
                report.violate(
                    Check::BoundOrder,
                    format!(
                        "{} θ={}: RES used {res} coarse iterations, fewer than GR's {gr}",
                        p.name,
                        e(theta)
                    ),
                );
            }
        }
        if tally.iterations > 0 {
            let share = tally.gauss_radau_sharper as f64 / tally.iterations as f64;
            report.notes.push(format!(
                "{}: Gauss-Radau bound at or below the residual bound in {}/{} CG iterations",
                p.name, tally.gauss_radau_sharper, tally.iterations
            ));
            if share < 0.95 {
                report.violate(
                    Check::BoundShare,
                    format!(
                        "{}: Gauss-Radau bound sharper in only {:.1}% of iterations",
                        p.name,
                        100.0 * share
                    ),
                );
            }
        }
        report.constants.push((p.name.clone(), constants));
    }
    Ok(report)
}

/// Label, summary role, parameter and coarse solver of one performance run.
type Variant = (&'static str, RowKind, Option<f64>, Box<dyn CoarseSolver>);

/// `ε = (1 - α)θ` with an assumed `α` (no norm estimate), on the configured
/// hierarchy and optionally a three-level one over the same finest mesh.
pub fn performance(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Report> {
    fs::create_dir_all(out_dir)?;
    let mut report = Report::default();
    let mut comments = config_header(cfg, "performance");
    comments.push(format!("alpha={}", e(cfg.alpha)));
    let taus = cfg.taus();
    for &kind in &cfg.problems {
        let main = prepare(cfg, kind)?;
        let three_spec = cfg.three_level_spec(kind)?;
        let three = if cfg.three_level && three_spec != main.problem.spec {
            let spec = three_spec;
            let cap = cfg.direct_cap.max(cfg.three_level_direct_cap);
            Some(build(cfg, spec, cap)?)
        } else {
            None
        };
        let mut hierarchies = vec![(format!("{}-level", cfg.levels), &main.problem)];
        hierarchies.extend(three.as_ref().map(|t| ("3-level".to_string(), t)));
        for (tag, problem) in hierarchies {
            let h = &problem.hierarchy;
            let mu = estimate_mu(h.coarse_matrix(), h.coarse_factor(), &cfg.power_options())?;
            comments.push(format!(
                "problem={} hierarchy={tag} levels={} coarsest_dof={} finest_dof={} mu={}",
                main.name,
                h.num_levels(),
                h.dim(0),
                h.dim(h.finest_level()),
                e(mu)
            ));
            for &theta in &cfg.thetas {
                let group = format!("{}/{tag}/theta={}", main.name, e(theta));
                info!(
                    "{group}: exact, GR, RES and {} relative residual tolerances",
                    taus.len()
                );
                let eps = epsilon_policy(theta, cfg.alpha)?;
                let stop = FinestStop::ErrorBelow {
                    theta,
                    max_cycles: cfg.max_cycles,
                };
                let mut variants: Vec<Variant> = vec![
                    (
                        "exact",
                        RowKind::Baseline,
                        None,
                        Box::new(ExactCoarseSolver),
                    ),
                    (
                        "GR",
                        RowKind::Other,
                        Some(eps),
                        Box::new(AbsVariant::GaussRadau.solver(eps, mu)),
                    ),
                    (
                        "RES",
                        RowKind::Other,
                        Some(eps),
                        Box::new(AbsVariant::Residual.solver(eps, mu)),
                    ),
                ];
                for &t in &taus {
                    variants.push((
                        "relres",
                        RowKind::Sweep,
                        Some(t),
                        Box::new(CgCoarseSolver::new(StopRule::RelResidual(t))),
                    ));
                }
                let runs: Vec<Result<VcycleTrace>> = variants
                    .par_iter()
                    .map(|(_, _, _, solver)| {
                        Ok(run_vcycles(
                            h,
                            &problem.rhs,
                            &main.zero(),
                            stop,
                            solver.as_ref(),
                            Some(&main.reference),
                        )?)
                    })
                    .collect();
                let start = report.rows.len();
                for ((label, kind, param, _), run) in variants.iter().zip(&runs) {
                    note_failure(&mut report, &format!("{group}/{label}"), run);
                    report
                        .rows
                        .push(summary_row(&group, label, *kind, *param, run));
                }
                flag_rows(&mut report.rows[start..]);
                let rows = &report.rows[start..];
                let exact = rows[0].v_cycles;
                let sweep: Vec<usize> = rows
                    .iter()
                    .filter(|r| r.kind == RowKind::Sweep && r.matches_exact)
                    .filter_map(|r| r.total_coarse_iters)
                    .collect();
                let (lo, hi) = (sweep.iter().min().copied(), sweep.iter().max().copied());
                let mut violations = Vec::new();
                let mut notes = Vec::new();
                for r in &rows[1..3] {
                    if r.v_cycles.is_none() || r.v_cycles != exact {
                        violations.push(Violation::new(
                            Check::CycleCount,
                            format!(
                                "{}: {:?} V-cycles, exact solve needs {:?}",
                                r.variant(),
                                r.v_cycles,
                                exact
                            ),
                        ));
                    }
                    if let (Some(w), Some(lo), Some(hi)) = (r.total_coarse_iters, lo, hi) {
                        let place = if w < lo {
                            "below"
                        } else if w > hi {
                            "above"
                        } else {
                            "within"
                        };
                        notes.push(format!(
                            "{}: {w} coarse iterations, {place} the matching relres range [{lo}, {hi}]",
                            r.variant()
                        ));
                    }
                }
                report.violations.extend(violations);
                report.notes.extend(notes);
            }
        }
    }
    comments.extend(report.notes.iter().map(|n| format!("note: {n}")));
    write_rows(out_dir, "performance_summary.csv", &comments, &mut report)?;
    Ok(report)
}

/// `‖E‖_A` estimates for each configured problem.
pub fn e_norms(cfg: &ExperimentConfig) -> Result<Vec<(String, EigenEstimate)>> {
    cfg.problems
        .iter()
        .map(|&kind| {
            let problem = build(cfg, cfg.spec(kind)?, cfg.direct_cap)?;
            let p = Prepared {
                name: kind.to_string(),
                problem,
                reference: Vec::new(),
            };
            Ok((p.name.clone(), e_norm_estimate(cfg, &p)?))
        })
        .collect()
}
