use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use livsic_core::base::BaseConfig;
use livsic_core::cocycle::CocycleSpec;
use livsic_core::livsic::{SolveOptions, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    PocCheck,
    Spectrum,
    Solve,
    Classify,
    Shadow,
    LemmaTests,
    MainTheoremSweep,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::PocCheck,
        Experiment::Spectrum,
        Experiment::Solve,
        Experiment::Classify,
        Experiment::Shadow,
        Experiment::LemmaTests,
        Experiment::MainTheoremSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::PocCheck => "poc-check",
            Experiment::Spectrum => "spectrum",
            Experiment::Solve => "solve",
            Experiment::Classify => "classify",
            Experiment::Shadow => "shadow",
            Experiment::LemmaTests => "lemma-tests",
            Experiment::MainTheoremSweep => "main-theorem-sweep",
        }
    }

    fn needs_cocycle(self) -> bool {
        !matches!(self, Experiment::LemmaTests | Experiment::MainTheoremSweep)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| LabError::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Conjugacy,
    Cones,
    Gap,
    Localization,
}

/// Lemma suite settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaParams {
    pub suites: Vec<Suite>,
    pub ell: f64,
    pub delta: f64,
    /// Length of the synthetic product traces.
    pub horizon: usize,
    /// Half-width of the hypothesis window on the traces.
    pub window: f64,
    /// Exponents of the synthetic traces, descending.
    pub lambdas: Vec<f64>,
    /// Vectors sampled per cone and step; every other one on the boundary.
    pub cone_samples: usize,
    pub cone_steps: usize,
    pub flag_horizon: usize,
    pub flag_tol: f64,
    /// `η` in the conjugated C¹ gap bound.
    pub eta: f64,
    pub radii: Vec<f64>,
    pub beta: f64,
    pub slope_tol: f64,
}

impl Default for LemmaParams {
    fn default() -> Self {
        Self {
            suites: vec![Suite::Conjugacy, Suite::Cones, Suite::Gap, Suite::Localization],
            ell: 2.0,
            delta: 0.1,
            horizon: 40,
            window: 0.05,
            lambdas: vec![0.3, -0.3],
            cone_samples: 2000,
            cone_steps: 20,
            flag_horizon: 200,
            flag_tol: 1e-2,
            eta: 0.2,
            radii: vec![0.1, 0.05, 0.025, 0.0125],
            beta: 1.0,
            slope_tol: 0.1,
        }
    }
}

/// Numeric parameters shared by the experiments; each uses the subset it needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    /// Orbit length for exponents and closing.
    pub n: usize,
    /// Random starts or recurrent events.
    pub trials: usize,
    /// Largest period for poc-check.
    pub p_max: usize,
    pub poc_tol: f64,
    /// Clustering tolerance for exponent estimates.
    pub exponent_tol: f64,
    /// Checkpoints written to the spectrum trace.
    pub checkpoints: usize,
    /// Segment length of recurrent events in shadow.
    pub closing_n: usize,
    /// Stable offset of recurrent starts from their periodic orbit.
    pub recurrence: f64,
    /// Fiber laps over the periodic orbit before a shadowing start.
    pub laps: usize,
    pub closing_rate_tol: f64,
    pub amplitudes: Vec<f64>,
    pub tolerances: Tolerances,
    pub solve: SolveOptions,
    pub lemma: LemmaParams,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            n: 1000,
            trials: 10,
            p_max: 6,
            poc_tol: 1e-12,
            exponent_tol: 1e-2,
            checkpoints: 100,
            closing_n: 40,
            recurrence: 1e-7,
            laps: 50,
            closing_rate_tol: 0.05,
            amplitudes: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            tolerances: Tolerances::default(),
            solve: SolveOptions::default(),
            lemma: LemmaParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub base: BaseConfig,
    #[serde(default)]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; a location, so it is not echoed into reports.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self { experiment: Some(experiment), base: BaseConfig::default(), cocycle: None, params: Params::default(), seed: 0, out: None }
    }

    pub fn parse(text: &str) -> Result<Self, LabError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            LabError::config(if path == "." { "$".to_string() } else { path }, e.inner().to_string())
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::config("$", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies command-line overrides and checks cross-field constraints.
    pub fn resolve(mut self, experiment: Experiment, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self, LabError> {
        match self.experiment {
            Some(e) if e != experiment => {
                return Err(LabError::config("experiment", format!("config is for `{e}`, command line asks for `{experiment}`")))
            }
            _ => self.experiment = Some(experiment),
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.out = out;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment.expect("resolved config has an experiment")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let e = self.experiment.ok_or_else(|| LabError::config("experiment", "missing"))?;
        if e.needs_cocycle() && self.cocycle.is_none() {
            return Err(LabError::config("cocycle", format!("required by `{e}`")));
        }
        let p = &self.params;
        let check = |ok: bool, path: &str, msg: &str| if ok { Ok(()) } else { Err(LabError::config(path, msg)) };
        check(p.trials >= 1, "params.trials", "must be at least 1")?;
        check(p.n >= 2, "params.n", "must be at least 2")?;
        check(p.closing_n >= 2, "params.closing_n", "must be at least 2")?;
        check(!matches!(e, Experiment::Spectrum | Experiment::Shadow) || p.n >= 1000, "params.n", "exponent estimates need n ≥ 1000")?;
        check(p.p_max >= 1, "params.p_max", "must be at least 1")?;
        check(p.poc_tol > 0.0, "params.poc_tol", "must be positive")?;
        check(p.exponent_tol > 0.0, "params.exponent_tol", "must be positive")?;
        check(p.checkpoints >= 1, "params.checkpoints", "must be at least 1")?;
        check(p.recurrence > 0.0 && p.recurrence < 0.1, "params.recurrence", "must lie in (0, 0.1)")?;
        check(p.solve.density > 0.0 && p.solve.density < 1.0, "params.solve.density", "must lie in (0, 1)")?;
        check(p.solve.stride >= 1, "params.solve.stride", "must be at least 1")?;
        check(p.solve.grid_for(2) >= 8, "params.solve.grid", "must be at least 8")?;
        check(p.tolerances.margin >= 1.0, "params.tolerances.margin", "must be at least 1")?;
        check(!p.amplitudes.is_empty(), "params.amplitudes", "must not be empty")?;
        let l = &p.lemma;
        check(l.ell >= 1.0, "params.lemma.ell", "must be at least 1")?;
        check(l.delta > 0.0, "params.lemma.delta", "must be positive")?;
        check(l.window >= 0.0, "params.lemma.window", "must be non-negative")?;
        check(l.lambdas.len() >= 2, "params.lemma.lambdas", "needs at least two exponents")?;
        check(l.lambdas.windows(2).all(|w| w[0] > w[1]), "params.lemma.lambdas", "must be strictly descending")?;
        check(l.horizon >= 1 && l.cone_steps >= 1 && l.flag_horizon >= 1, "params.lemma", "horizons must be at least 1")?;
        check(l.cone_samples >= 2, "params.lemma.cone_samples", "must be at least 2")?;
        check(l.radii.len() >= 2 && l.radii.iter().all(|r| *r > 0.0), "params.lemma.radii", "needs two or more positive radii")?;
        check(l.beta > 0.0 && l.beta <= 1.0, "params.lemma.beta", "must lie in (0, 1]")?;
        Ok(())
    }
}
