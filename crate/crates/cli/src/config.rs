use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use inexact_mg::fem::{Coefficient, ProblemSpec};
use inexact_mg::linalg::PowerOptions;
use serde::{Deserialize, Deserializer};

/// A named model problem: `poisson` or `jump-<k_high>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemKind {
    pub coefficient: Coefficient,
}

impl ProblemKind {
    pub fn poisson() -> Self {
        Self {
            coefficient: Coefficient::poisson(),
        }
    }

    pub fn jump(k_high: f64) -> Self {
        Self {
            coefficient: Coefficient::FourQuadrantJump { k_high },
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        if s == "poisson" {
            return Ok(Self::poisson());
        }
        if let Some(k) = s.strip_prefix("jump-") {
            let k: f64 = k
                .parse()
                .with_context(|| format!("bad jump coefficient in {s:?}"))?;
            if !(k > 0.0) {
                bail!("jump coefficient must be positive in {s:?}");
            }
            return Ok(Self::jump(k));
        }
        bail!("unknown problem {s:?}; expected \"poisson\" or \"jump-<k>\"")
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.coefficient {
            Coefficient::Constant(k) => {
                if k == 1.0 {
                    write!(f, "poisson")
                } else {
                    write!(f, "constant-{k}")
                }
            }
            Coefficient::FourQuadrantJump { k_high } => write!(f, "jump-{k_high}"),
        }
    }
}

impl<'de> Deserialize<'de> for ProblemKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Self::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Experiment settings, read from TOML. Every key is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problems: Vec<ProblemKind>,
    /// Number of levels `J + 1` at desk scale.
    pub levels: usize,
    /// Number of levels with `--paper-scale`.
    pub full_levels: usize,
    pub coarsest_m: usize,
    pub smoother_sweeps: usize,
    /// Largest coarsest-level dimension factored densely.
    pub direct_cap: usize,
    /// Also run the three-level hierarchy in `performance`.
    pub three_level: bool,
    /// Direct-solver cap for the three-level hierarchy, whose coarsest level is large.
    pub three_level_direct_cap: usize,
    pub seed: u64,
    pub power_tol: f64,
    pub power_max_iter: usize,
    /// Relative residual the reference solution must reach.
    pub reference_rel_residual: f64,
    /// The same with `--paper-scale`; the residual floor grows with the condition number.
    pub full_reference_rel_residual: f64,
    /// Cap on V-cycles for error-based finest stopping.
    pub max_cycles: usize,
    /// Finest-level error tolerances θ.
    pub thetas: Vec<f64>,
    /// `τ = 2^-i` for `i` in this inclusive range.
    pub tau_exponents: [u32; 2],
    pub gammas: Vec<f64>,
    /// Target γ translated into a relative residual tolerance by `relres-estimate`.
    pub relres_gamma: f64,
    /// Length of the attainable-accuracy runs.
    pub attainable_cycles: usize,
    /// Length of the fixed-length absolute-criterion runs.
    pub fixed_cycles: usize,
    /// Assumed contraction bound α in `ε = (1 - α) θ`.
    pub alpha: f64,
    /// Error level below which one-cycle differences are attributed to roundoff.
    pub roundoff_floor: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problems: vec![ProblemKind::poisson(), ProblemKind::jump(1024.0)],
            levels: 4,
            full_levels: 6,
            coarsest_m: 40,
            smoother_sweeps: 1,
            direct_cap: 20_000,
            three_level: true,
            three_level_direct_cap: 120_000,
            seed: 1,
            power_tol: 1e-6,
            power_max_iter: 5000,
            reference_rel_residual: 1e-11,
            full_reference_rel_residual: 1e-10,
            max_cycles: 50,
            thetas: vec![1e-4, 1e-11],
            tau_exponents: [1, 20],
            gammas: vec![0.3, 1e-3, 1e-4],
            relres_gamma: 1e-4,
            attainable_cycles: 50,
            fixed_cycles: 15,
            alpha: 2.0 / 3.0,
            roundoff_floor: 1e-10,
        }
    }
}

fn in_unit_interval(name: &str, values: &[f64]) -> Result<()> {
    for &v in values {
        if !(v > 0.0 && v < 1.0) {
            bail!("{name} must lie in (0, 1), got {v}");
        }
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.problems.is_empty() {
            bail!("no problems configured");
        }
        if self.levels < 2 || self.full_levels < 2 {
            bail!("need at least two levels");
        }
        if self.smoother_sweeps == 0 {
            bail!("smoother_sweeps must be at least 1");
        }
        if self.thetas.is_empty() || self.gammas.is_empty() {
            bail!("thetas and gammas must be nonempty");
        }
        in_unit_interval("thetas", &self.thetas)?;
        in_unit_interval("gammas", &self.gammas)?;
        in_unit_interval("relres_gamma", &[self.relres_gamma])?;
        in_unit_interval("alpha", &[self.alpha])?;
        let [first, last] = self.tau_exponents;
        if first == 0 || first > last || last > 60 {
            bail!("tau_exponents must satisfy 1 <= first <= last <= 60, got [{first}, {last}]");
        }
        for p in &self.problems {
            ProblemSpec::new(p.coefficient, self.levels, self.coarsest_m)?;
        }
        Ok(())
    }

    /// Switches to the full-size hierarchy.
    pub fn full_scale(mut self) -> Self {
        self.levels = self.full_levels;
        self.reference_rel_residual = self.full_reference_rel_residual;
        self
    }

    pub fn taus(&self) -> Vec<f64> {
        let [first, last] = self.tau_exponents;
        (first..=last).map(|i| 2f64.powi(-(i as i32))).collect()
    }

    pub fn power_options(&self) -> PowerOptions {
        PowerOptions {
            tol: self.power_tol,
            max_iter: self.power_max_iter,
            seed: self.seed,
        }
    }

    pub fn spec(&self, problem: ProblemKind) -> Result<ProblemSpec> {
        Ok(ProblemSpec::new(
            problem.coefficient,
            self.levels,
            self.coarsest_m,
        )?)
    }

    /// Three levels ending on the same finest mesh.
    pub fn three_level_spec(&self, problem: ProblemKind) -> Result<ProblemSpec> {
        let finest = self.spec(problem)?.finest_m();
        Ok(ProblemSpec::new(problem.coefficient, 3, finest / 4)?)
    }
}
