//! Configuration-driven runs.
//!
//! A [`RunConfig`] is read from TOML, validated, and handed to [`run`]
//! together with a [`Command`]. Every run writes `report.json` plus
//! command-specific CSV, JSON and SVG artifacts into the output directory.

pub mod diagram;
pub mod json;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::branch::{
    build_global_branch, classify, BranchControls, BranchGraph, Classification, OutcomeReport,
};
use crate::conley::{
    check_hypotheses, continuation_check, ContinuationCheckOptions, ContinuationReport,
    HypothesisCheck, IndexProfile, IsolatingBall, PROXY_LABEL,
};
use crate::equilibria::SearchOptions;
use crate::error::{invalid, Error, Result};
use crate::flow::{integrate, FlowControls, TerminalStatus};
use crate::nonlinearity::{
    bifurcation_values_in_window, check_beta_monotone, check_f1, check_f2, suggest_mu, CheckGrid,
    F1Report, F2Report, FamilySpec, NonlinearityFamily,
};
use crate::spectral::{DomainShape, ModeIndex, SpectralDomain, Truncation};

pub use diagram::{render_diagram, DiagramStyle};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_UNDETERMINED: i32 = 3;
pub const EXIT_CONSISTENCY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Check,
    Bifvalues,
    Profile,
    Branch,
    Sweep,
    Simulate,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Check,
        Command::Bifvalues,
        Command::Profile,
        Command::Branch,
        Command::Sweep,
        Command::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Check => "check",
            Command::Bifvalues => "bifvalues",
            Command::Profile => "profile",
            Command::Branch => "branch",
            Command::Sweep => "sweep",
            Command::Simulate => "simulate",
        }
    }

    pub fn uses_randomness(self) -> bool {
        matches!(self, Command::Branch | Command::Sweep | Command::Simulate)
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// V-norm budget for continuation and integration.
    pub norm: f64,
    pub nodes: usize,
    /// Time horizon for trajectories.
    pub horizon: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            norm: 1e3,
            nodes: 20_000,
            horizon: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckConfig {
    /// Exponent for the superquadraticity check; suggested from the family
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    pub epsilon: f64,
    pub grid: CheckGrid,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            mu: None,
            epsilon: 1.0,
            grid: CheckGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BranchConfig {
    /// Explicit bifurcation value; otherwise the `k`-th one in the window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_step: Option<f64>,
    pub secondary_depth: usize,
}

impl Default for BranchConfig {
    fn default() -> Self {
        BranchConfig {
            gamma: None,
            k: 1,
            lambda_step: None,
            secondary_depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Initial coefficients; drawn uniformly from `[−amplitude, amplitude]`
    /// when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    pub amplitude: f64,
    pub tol: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            lambda: None,
            initial: None,
            amplitude: 0.1,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    /// When set, the proxy continuation check runs over `interval`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball: Option<IsolatingBall>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval: Option<(f64, f64)>,
    pub samples: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            ball: None,
            interval: None,
            samples: 21,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_modes")]
    pub modes: usize,
    /// `(nx, ny)` tensor truncation on rectangles; overrides `modes`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor: Option<(usize, usize)>,
    #[serde(default = "default_degree")]
    pub quadrature_degree: usize,
    #[serde(default = "default_window")]
    pub lambda_window: (f64, f64),
    #[serde(default = "default_domain")]
    pub domain: DomainShape,
    #[serde(default = "default_family")]
    pub family: FamilySpec,
    #[serde(default)]
    pub budgets: BudgetConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub branch: BranchConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub profile: ProfileConfig,
}

fn default_out() -> String {
    "out".into()
}

fn default_modes() -> usize {
    16
}

fn default_degree() -> usize {
    crate::spectral::DEFAULT_QUADRATURE_DEGREE
}

fn default_window() -> (f64, f64) {
    (0.5, 10.5)
}

fn default_domain() -> DomainShape {
    DomainShape::unit_interval_pi()
}

fn default_family() -> FamilySpec {
    FamilySpec::PowerLaw {
        alpha: -1.0,
        p: 3.0,
        beta_c: 0.0,
        q: 2.0,
        mu: None,
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            out: default_out(),
            modes: default_modes(),
            tensor: None,
            quadrature_degree: default_degree(),
            lambda_window: default_window(),
            domain: default_domain(),
            family: default_family(),
            budgets: BudgetConfig::default(),
            check: CheckConfig::default(),
            branch: BranchConfig::default(),
            simulate: SimulateConfig::default(),
            profile: ProfileConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn window(&self) -> (f64, f64) {
        self.lambda_window
    }

    pub fn domain(&self) -> Result<SpectralDomain> {
        let truncation = match self.tensor {
            Some((nx, ny)) => Truncation::Tensor(nx, ny),
            None => Truncation::Lowest(self.modes),
        };
        SpectralDomain::with_truncation(self.domain, truncation, self.quadrature_degree)
    }

    pub fn family(&self) -> Result<NonlinearityFamily> {
        self.family.build()
    }

    /// Checks everything that can be checked without computing.
    pub fn validate(&self, cmd: Command) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        let (lo, hi) = self.lambda_window;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return cfg(format!(
                "lambda_window must satisfy lo < hi, got [{lo}, {hi}]"
            ));
        }
        if self.modes == 0 {
            return cfg("modes must be positive".into());
        }
        let b = &self.budgets;
        if !(b.norm > 0.0 && b.horizon > 0.0) || b.nodes == 0 {
            return cfg("budgets must be positive".into());
        }
        if cmd.uses_randomness() && self.seed.is_none() {
            return cfg(format!(
                "`{}` needs a seed (config `seed` or --seed)",
                cmd.name()
            ));
        }
        if cmd == Command::Simulate && self.simulate.lambda.is_none() {
            return cfg("`simulate` needs simulate.lambda".into());
        }
        if self.branch.k == 0 {
            return cfg("branch.k is 1-based".into());
        }
        if let Some((a, b)) = self.profile.interval {
            if !(a <= b) {
                return cfg("profile.interval must satisfy a ≤ b".into());
            }
        }
        let d = self.domain().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(init) = &self.simulate.initial {
            if init.len() != d.dim() {
                return cfg(format!(
                    "simulate.initial has {} entries, domain has {} modes",
                    init.len(),
                    d.dim()
                ));
            }
        }
        self.family().map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub operation: String,
    pub message: String,
}

fn warn(operation: &str, message: impl Into<String>) -> Warning {
    Warning {
        operation: operation.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub mode: ModeIndex,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `β` strictly increasing on the window.
    pub a1_transversality: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<F1Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f2: Option<F2Report>,
    /// H1–H3 on the trivial index profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<HypothesisCheck>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub lambda: f64,
    pub status: TerminalStatus,
    pub samples: usize,
    pub t_end: f64,
    pub energy_start: f64,
    pub energy_end: f64,
    pub v_norm_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<SpectrumRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<HypothesisReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<IndexProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuation: Option<ContinuationReport>,
    #[serde(default)]
    pub outcomes: Vec<OutcomeReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    pub artifacts: Vec<String>,
    pub warnings: Vec<Warning>,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Result of [`run`]: the report and a human-readable summary.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub summary: String,
}

struct Session {
    out: PathBuf,
    artifacts: Vec<String>,
    warnings: Vec<Warning>,
    summary: String,
}

impl Session {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.out.join(name), contents)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }
}

/// Validates `config`, runs `cmd` and writes the artifacts.
pub fn run(cmd: Command, config: &RunConfig) -> Result<RunOutput> {
    config.validate(cmd)?;
    let start = Instant::now();
    let out = PathBuf::from(&config.out);
    fs::create_dir_all(&out)?;
    let mut s = Session {
        out,
        artifacts: Vec::new(),
        warnings: Vec::new(),
        summary: String::new(),
    };
    let mut report = RunReport {
        tool: "dynbif".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cmd,
        config: config.clone(),
        exit_code: EXIT_OK,
        spectrum: None,
        hypotheses: None,
        upsilon: None,
        profile: None,
        continuation: None,
        outcomes: Vec::new(),
        simulation: None,
        artifacts: Vec::new(),
        warnings: Vec::new(),
        elapsed_seconds: 0.0,
    };
    let d = config.domain()?;
    match cmd {
        Command::Spectrum => spectrum(&d, &mut s, &mut report)?,
        Command::Check => check(config, &d, &mut s, &mut report)?,
        Command::Bifvalues => bifvalues(config, &d, &mut s, &mut report)?,
        Command::Profile => profile(config, &d, &mut s, &mut report)?,
        Command::Branch | Command::Sweep => branch(cmd, config, &d, &mut s, &mut report)?,
        Command::Simulate => simulate(config, &d, &mut s, &mut report)?,
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    report.warnings = std::mem::take(&mut s.warnings);
    s.artifacts.push("report.json".into());
    report.artifacts = s.artifacts.clone();
    fs::write(s.out.join("report.json"), report.to_json()?)?;
    for w in &report.warnings {
        let _ = writeln!(s.summary, "warning [{}]: {}", w.operation, w.message);
    }
    Ok(RunOutput {
        report,
        summary: s.summary,
    })
}

fn spectrum(d: &SpectralDomain, s: &mut Session, report: &mut RunReport) -> Result<()> {
    let rows: Vec<SpectrumRow> = d
        .modes()
        .iter()
        .enumerate()
        .map(|(i, m)| SpectrumRow {
            index: i + 1,
            mode: m.index,
            eigenvalue: m.eigenvalue,
        })
        .collect();
    let mut csv = String::from("index,j,k,eigenvalue\n");
    let _ = writeln!(
        s.summary,
        "{:>5}  {:>8}  {:>24}",
        "index", "mode", "eigenvalue"
    );
    for r in &rows {
        let (j, k) = match r.mode {
            ModeIndex::Interval(j) => (j.to_string(), String::new()),
            ModeIndex::Rectangle(j, k) => (j.to_string(), k.to_string()),
        };
        let _ = writeln!(csv, "{},{j},{k},{:.16e}", r.index, r.eigenvalue);
        let label = if k.is_empty() {
            j.clone()
        } else {
            format!("({j},{k})")
        };
        let _ = writeln!(
            s.summary,
            "{:>5}  {label:>8}  {:>24}",
            r.index, r.eigenvalue
        );
    }
    s.write("spectrum.csv", &csv)?;
    report.spectrum = Some(rows);
    Ok(())
}

fn check(
    config: &RunConfig,
    d: &SpectralDomain,
    s: &mut Session,
    report: &mut RunReport,
) -> Result<()> {
    let fam = config.family()?;
    let window = config.window();
    let a1 = match check_beta_monotone(&fam, window, 1000) {
        Ok(()) => true,
        Err(e) => {
            s.warnings.push(warn("check_beta_monotone", e.to_string()));
            false
        }
    };
    let f1 = check_f1(&fam, window, &config.check.grid)?;
    let mu = match config.check.mu.map(Ok).unwrap_or_else(|| suggest_mu(&fam)) {
        Ok(mu) => Some(mu),
        Err(e) => {
            s.warnings.push(warn("suggest_mu", e.to_string()));
            None
        }
    };
    let f2 = match mu {
        Some(mu) => Some(check_f2(
            &fam,
            window,
            mu,
            config.check.epsilon,
            &config.check.grid,
        )?),
        None => None,
    };
    let structure = if a1 {
        let ups = bifurcation_values_in_window(&fam, d, window)?;
        match crate::conley::index_profile(d, &fam, window, &ups) {
            Ok(p) => {
                let h = check_hypotheses(&p);
                report.upsilon = Some(ups);
                report.profile = Some(p);
                Some(h)
            }
            Err(e) => {
                s.warnings.push(warn("index_profile", e.to_string()));
                None
            }
        }
    } else {
        None
    };
    let passed = a1
        && f1.passed()
        && f2.as_ref().is_some_and(F2Report::passed)
        && structure.is_some_and(|h| h.all());
    let yn = |b: bool| if b { "pass" } else { "FAIL" };
    let _ = writeln!(s.summary, "A1 transversality: {}", yn(a1));
    let _ = writeln!(s.summary, "f1 growth: {}", yn(f1.passed()));
    match (&f2, mu) {
        (Some(r), Some(mu)) => {
            let _ = writeln!(
                s.summary,
                "f2 superquadratic (μ = {mu}): {}",
                yn(r.passed())
            );
        }
        _ => {
            let _ = writeln!(s.summary, "f2 superquadratic: no μ available");
        }
    }
    match structure {
        Some(h) => {
            let _ = writeln!(
                s.summary,
                "H1 {}  H2 {}  H3 {}",
                yn(h.h1),
                yn(h.h2),
                yn(h.h3)
            );
        }
        None => {
            let _ = writeln!(s.summary, "H1-H3: not evaluated");
        }
    }
    report.hypotheses = Some(HypothesisReport {
        a1_transversality: a1,
        f1: Some(f1),
        f2,
        profile: structure,
        passed,
    });
    if !passed {
        report.exit_code = EXIT_HYPOTHESIS;
    }
    Ok(())
}

fn bifvalues(
    config: &RunConfig,
    d: &SpectralDomain,
    s: &mut Session,
    report: &mut RunReport,
) -> Result<()> {
    let fam = config.family()?;
    let ups = bifurcation_values_in_window(&fam, d, config.window())?;
    let distinct = d.distinct_eigenvalues();
    let mut csv = String::from("k,gamma,mu,multiplicity\n");
    for (k, &g) in ups.iter().enumerate() {
        let beta = fam.beta(g);
        let (mu, mult) = distinct
            .iter()
            .copied()
            .min_by(|a, b| (a.0 - beta).abs().total_cmp(&(b.0 - beta).abs()))
            .unwrap_or((beta, 0));
        let _ = writeln!(csv, "{},{:.16e},{:.16e},{mult}", k + 1, g, mu);
        let _ = writeln!(
            s.summary,
            "γ_{} = {g:.12}  (μ = {mu}, multiplicity {mult})",
            k + 1
        );
    }
    if ups.is_empty() {
        let _ = writeln!(s.summary, "no bifurcation values in the window");
    }
    s.write("bifvalues.csv", &csv)?;
    report.upsilon = Some(ups);
    Ok(())
}

fn profile_csv(p: &IndexProfile) -> String {
    let mut csv = String::from("lo,hi,value,dimension\n");
    for g in &p.gaps {
        let dim = g
            .value
            .sphere_dimension()
            .map_or(String::new(), |k| k.to_string());
        let _ = writeln!(csv, "{:.16e},{:.16e},{},{dim}", g.lo, g.hi, g.value);
    }
    csv
}

fn profile(
    config: &RunConfig,
    d: &SpectralDomain,
    s: &mut Session,
    report: &mut RunReport,
) -> Result<()> {
    let fam = config.family()?;
    let window = config.window();
    let ups = bifurcation_values_in_window(&fam, d, window)?;
    let p = crate::conley::index_profile(d, &fam, window, &ups)?;
    for g in &p.gaps {
        let _ = writeln!(s.summary, "({:.6}, {:.6}): {}", g.lo, g.hi, g.value);
    }
    s.write("profile.csv", &profile_csv(&p))?;
    if let Some(ball) = config.profile.ball {
        let interval = config.profile.interval.unwrap_or(window);
        let opts = ContinuationCheckOptions {
            samples: config.profile.samples.max(1),
            search: SearchOptions {
                seed: config.seed.unwrap_or(0),
                ..SearchOptions::default()
            },
            ..ContinuationCheckOptions::default()
        };
        s.warnings.push(warn(
            "continuation_check",
            format!("indices over the ball are a {PROXY_LABEL}, valid without connecting orbits inside the ball"),
        ));
        match continuation_check(d, &fam, interval, ball, &opts) {
            Ok(r) => {
                if let Some(l) = r.violated_at {
                    s.warnings.push(warn(
                        "continuation_check",
                        format!("proxy index changed at λ = {l}"),
                    ));
                }
                let _ = writeln!(
                    s.summary,
                    "{PROXY_LABEL} over radius {}: {}",
                    ball.radius,
                    r.value
                        .as_ref()
                        .map_or("not constant".to_string(), |v| v.to_string())
                );
                report.continuation = Some(r);
            }
            Err(e @ (Error::IsolationFailure { .. } | Error::ContinuationViolation { .. })) => {
                s.warnings.push(warn("continuation_check", e.to_string()));
            }
            Err(e) => return Err(e),
        }
    }
    report.upsilon = Some(ups);
    report.profile = Some(p);
    Ok(())
}

fn graph_csvs(g: &BranchGraph) -> (String, String) {
    let mut branches = String::from("id,parent,seed_lambda,termination,end_lambda,lambda_min,lambda_max,max_v_norm,steps,in_component\n");
    for b in &g.branches {
        let _ = writeln!(
            branches,
            "{},{},{:.16e},{:?},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            b.id,
            b.parent.map_or(String::new(), |p| p.to_string()),
            b.seed_lambda,
            b.termination,
            b.end_lambda,
            b.lambda_range.0,
            b.lambda_range.1,
            b.max_v_norm,
            b.steps,
            b.in_component
        );
    }
    let mut nodes = String::from(
        "branch,step,kind,lambda,signed_v_norm,morse_index,margin,energy,in_component\n",
    );
    for n in &g.nodes {
        let _ = writeln!(
            nodes,
            "{},{},{:?},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            n.id.branch,
            n.id.step,
            n.kind,
            n.lambda,
            diagram::signed_norm(n),
            n.equilibrium.morse_index,
            n.equilibrium.margin,
            n.energy,
            n.in_component
        );
    }
    (branches, nodes)
}

fn branch(
    cmd: Command,
    config: &RunConfig,
    d: &SpectralDomain,
    s: &mut Session,
    report: &mut RunReport,
) -> Result<()> {
    let fam = config.family()?;
    let window = config.window();
    let seed = config.seed.ok_or_else(|| invalid("seed required"))?;
    let ups = bifurcation_values_in_window(&fam, d, window)?;
    let profile = crate::conley::index_profile(d, &fam, window, &ups)?;
    let targets: Vec<(usize, f64)> = match cmd {
        Command::Sweep => ups
            .iter()
            .copied()
            .enumerate()
            .map(|(i, g)| (i + 1, g))
            .collect(),
        _ => {
            let g = match config.branch.gamma {
                Some(g) => g,
                None => *ups.get(config.branch.k - 1).ok_or_else(|| {
                    Error::OutOfRange(format!(
                        "only {} bifurcation values in the window",
                        ups.len()
                    ))
                })?,
            };
            let k = ups
                .iter()
                .position(|&u| (u - g).abs() <= crate::branch::ROOT_TOL)
                .map_or(0, |i| i + 1);
            vec![(k, g)]
        }
    };
    let mut exit = EXIT_OK;
    for (k, gamma) in targets {
        let mut controls = BranchControls::new(window, seed);
        controls.lambda_step = config.branch.lambda_step;
        controls.norm_budget = config.budgets.norm;
        controls.max_nodes = config.budgets.nodes;
        controls.secondary_depth = config.branch.secondary_depth;
        controls.heteroclinic.flow = FlowControls {
            horizon: config.budgets.horizon,
            norm_budget: config.budgets.norm,
            ..controls.heteroclinic.flow
        };
        let g = build_global_branch(d, &fam, gamma, &controls)?;
        let outcome = classify(&g, &profile);
        let suffix = if cmd == Command::Sweep {
            format!("_{k}")
        } else {
            String::new()
        };
        s.write(&format!("graph{suffix}.json"), &json::to_string(&g)?)?;
        s.write(
            &format!("diagram{suffix}.svg"),
            &render_diagram(&g, Some(&profile), &DiagramStyle::default()),
        )?;
        let (branches, nodes) = graph_csvs(&g);
        s.write(&format!("branches{suffix}.csv"), &branches)?;
        s.write(&format!("nodes{suffix}.csv"), &nodes)?;
        if let Some(flag) = &outcome.consistency_flag {
            s.warnings.push(warn("classify", flag.clone()));
            exit = exit.max(EXIT_CONSISTENCY);
        }
        if outcome.classification == Classification::UndeterminedBudget {
            exit = if exit == EXIT_CONSISTENCY {
                exit
            } else {
                EXIT_UNDETERMINED
            };
        }
        if g.exhausted.any() {
            s.warnings.push(warn(
                "build_global_branch",
                format!(
                    "budget exhausted (nodes: {}, continuation: {})",
                    g.exhausted.max_nodes, g.exhausted.continuation
                ),
            ));
        }
        let _ = writeln!(
            s.summary,
            "γ = {gamma:.12}: {} (nodes {}, max ||u|| {:.6}, λ-range {:?})",
            outcome.classification.name(),
            g.nodes.len(),
            outcome.evidence.max_v_norm,
            outcome.evidence.lambda_range
        );
        report.outcomes.push(outcome);
    }
    report.upsilon = Some(ups);
    report.profile = Some(profile);
    report.exit_code = exit;
    Ok(())
}

fn simulate(
    config: &RunConfig,
    d: &SpectralDomain,
    s: &mut Session,
    report: &mut RunReport,
) -> Result<()> {
    let fam = config.family()?;
    let lambda = config
        .simulate
        .lambda
        .ok_or_else(|| invalid("simulate.lambda required"))?;
    let seed = config.seed.ok_or_else(|| invalid("seed required"))?;
    let initial = match &config.simulate.initial {
        Some(a) => a.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amp = config.simulate.amplitude;
            (0..d.dim()).map(|_| rng.random_range(-amp..=amp)).collect()
        }
    };
    let controls = FlowControls {
        horizon: config.budgets.horizon,
        tol: config.simulate.tol,
        norm_budget: config.budgets.norm,
    };
    let rec = integrate(d, &fam, lambda, &initial, &controls)?;
    s.write("trajectory.csv", &rec.to_csv(d))?;
    let last = rec.last();
    let summary = SimulationSummary {
        lambda,
        status: rec.status,
        samples: rec.samples.len(),
        t_end: last.t,
        energy_start: rec.samples[0].energy,
        energy_end: last.energy,
        v_norm_end: d.v_norm(&last.coeffs),
    };
    let _ = writeln!(
        s.summary,
        "{} at t = {:.6} after {} samples; J {:.9} -> {:.9}; ||u|| = {:.9}",
        summary.status.as_str(),
        summary.t_end,
        summary.samples,
        summary.energy_start,
        summary.energy_end,
        summary.v_norm_end
    );
    report.simulation = Some(summary);
    Ok(())
}
