//! Galerkin truncation of the nonclassical flow `u_t − Δu_t − Δu = f_λ(u)`.
//!
//! In the eigenbasis the flow reads `ȧ_j = (f̂_j − μ_j a_j)/(1 + μ_j)`. The
//! linear part has spectrum `−μ_j/(1 + μ_j) ∈ (−1, 0)`, so an explicit
//! embedded Runge–Kutta pair is adequate. Along trajectories
//!
//! ```text
//! dJ/dt = −(|u_t|² + ||u_t||²) = −Σ (1 + μ_j) ȧ_j²
//! ```

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::galerkin::Problem;
use crate::nonlinearity::{F2Report, NonlinearityFamily};
use crate::ode::{Dopri5, StepControl, StepResult};
use crate::spectral::SpectralDomain;

/// Coefficients of `u` in the H-orthonormal basis at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalerkinState {
    pub coeffs: Vec<f64>,
    pub t: f64,
}

impl GalerkinState {
    pub fn new(coeffs: Vec<f64>, t: f64) -> Result<Self> {
        if coeffs.iter().any(|a| !a.is_finite()) || !(t >= 0.0) {
            return Err(invalid("state must be finite with t ≥ 0"));
        }
        Ok(GalerkinState { coeffs, t })
    }

    pub fn h_norm(&self) -> f64 {
        self.coeffs.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn v_norm(&self, d: &SpectralDomain) -> f64 {
        d.v_norm(&self.coeffs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowControls {
    pub horizon: f64,
    pub tol: f64,
    pub norm_budget: f64,
}

impl Default for FlowControls {
    fn default() -> Self {
        FlowControls {
            horizon: 1e4,
            tol: 1e-9,
            norm_budget: 1e3,
        }
    }
}

impl FlowControls {
    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.tol > 0.0 && self.norm_budget > 0.0) {
            return Err(invalid("flow controls must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalStatus {
    Converged,
    HorizonReached,
    NormBudgetExceeded,
    /// A caller-supplied stop condition fired.
    Stopped,
}

impl TerminalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalStatus::Converged => "converged",
            TerminalStatus::HorizonReached => "horizon_reached",
            TerminalStatus::NormBudgetExceeded => "norm_budget_exceeded",
            TerminalStatus::Stopped => "stopped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub coeffs: Vec<f64>,
    pub energy: f64,
    pub dissipation: f64,
}

/// One sample per accepted step, starting with the initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub lambda: f64,
    pub samples: Vec<TrajectorySample>,
    pub status: TerminalStatus,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("records are never empty")
    }

    /// CSV with columns `t, h_norm, v_norm, energy, dissipation, status`.
    pub fn to_csv(&self, d: &SpectralDomain) -> String {
        let mut out = String::from("t,h_norm,v_norm,energy,dissipation,status\n");
        let n = self.samples.len();
        for (i, s) in self.samples.iter().enumerate() {
            let status = if i + 1 == n { self.status.as_str() } else { "" };
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                s.t,
                d.h_norm(&s.coeffs),
                d.v_norm(&s.coeffs),
                s.energy,
                s.dissipation,
                status
            );
        }
        out
    }
}

fn check_dim(d: &SpectralDomain, state: &[f64]) -> Result<()> {
    if state.len() != d.dim() {
        return Err(invalid(format!(
            "state has dimension {}, domain has {}",
            state.len(),
            d.dim()
        )));
    }
    Ok(())
}

/// `ȧ_j = (f̂_j − μ_j a_j)/(1 + μ_j)`.
pub fn vector_field(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state: &[f64],
) -> Result<Vec<f64>> {
    check_dim(d, state)?;
    Ok(Problem::new(d, fam, lambda).velocity(state))
}

/// `J(u) = ½||u||² − ∫F_λ(u)`.
pub fn energy(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state: &[f64],
) -> Result<f64> {
    check_dim(d, state)?;
    Ok(Problem::new(d, fam, lambda).energy(state))
}

/// `−(|u_t|² + ||u_t||²)`.
pub fn dissipation_rate(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state: &[f64],
) -> Result<f64> {
    let v = vector_field(d, fam, lambda, state)?;
    Ok(dissipation_of(d, &v))
}

fn dissipation_of(d: &SpectralDomain, v: &[f64]) -> f64 {
    -v.iter()
        .zip(d.eigenvalues())
        .map(|(x, mu)| (1.0 + mu) * x * x)
        .sum::<f64>()
}

pub fn integrate(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state0: &[f64],
    controls: &FlowControls,
) -> Result<TrajectoryRecord> {
    integrate_until(d, fam, lambda, state0, controls, |_| false)
}

/// Like [`integrate`], stopping with [`TerminalStatus::Stopped`] as soon as
/// `stop` returns true on an accepted sample.
pub fn integrate_until(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state0: &[f64],
    controls: &FlowControls,
    mut stop: impl FnMut(&TrajectorySample) -> bool,
) -> Result<TrajectoryRecord> {
    check_dim(d, state0)?;
    controls.validate()?;
    if state0.iter().any(|a| !a.is_finite()) {
        return Err(invalid("initial state is not finite"));
    }
    let problem = Problem::new(d, fam, lambda);
    let rhs = |y: &[f64], dy: &mut [f64]| dy.copy_from_slice(&problem.velocity(y));
    let ctl = StepControl {
        rtol: controls.tol,
        atol: controls.tol,
        h_init: 1e-2,
        h_max: 10.0,
        h_min: 1e-12,
    };
    let mut solver = Dopri5::new(rhs, 0.0, state0.to_vec(), ctl);

    let sample = |t: f64, y: &[f64], dy: &[f64]| TrajectorySample {
        t,
        coeffs: y.to_vec(),
        energy: problem.energy(y),
        dissipation: dissipation_of(d, dy),
    };
    let settled = |y: &[f64], dy: &[f64]| d.v_norm(dy) <= controls.tol * (1.0 + d.v_norm(y));

    let mut samples = vec![sample(0.0, &solver.y, &solver.dy)];
    if settled(&solver.y, &solver.dy) {
        return Ok(TrajectoryRecord {
            lambda,
            samples,
            status: TerminalStatus::Converged,
        });
    }
    let status = loop {
        if let StepResult::Underflow = solver.step(controls.horizon) {
            return Err(Error::IntegrationFailure {
                t: solver.t,
                message: format!("step size underflow at V-norm {:.3e}", d.v_norm(&solver.y)),
            });
        }
        let s = sample(solver.t, &solver.y, &solver.dy);
        let done = stop(&s);
        samples.push(s);
        if done {
            break TerminalStatus::Stopped;
        }
        if settled(&solver.y, &solver.dy) {
            break TerminalStatus::Converged;
        }
        if d.v_norm(&solver.y) > controls.norm_budget {
            break TerminalStatus::NormBudgetExceeded;
        }
        if solver.t >= controls.horizon {
            break TerminalStatus::HorizonReached;
        }
    };
    Ok(TrajectoryRecord {
        lambda,
        samples,
        status,
    })
}

/// Outcome of [`tail_decay_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDecayReport {
    pub m0: usize,
    /// `min(μ_1, 1)`.
    pub alpha: f64,
    pub e0: f64,
    pub e_floor: f64,
    /// Least-squares exponential rate of `E − E_∞` while it exceeds the floor.
    pub fitted_rate: Option<f64>,
    pub samples: usize,
    /// `(t, E(t), e^{−αt}E(0) + E_∞ + tol)` where the envelope fails.
    pub violations: Vec<(f64, f64, f64)>,
    pub status: TerminalStatus,
}

impl TailDecayReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Tracks `E(t) = Σ_{j>m0} (1 + μ_j) a_j(t)²` and checks the envelope
/// `E(t) ≤ e^{−αt}E(0) + E_∞ + tol`.
pub fn tail_decay_probe(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state0: &[f64],
    m0: usize,
    horizon: f64,
) -> Result<TailDecayReport> {
    if m0 >= d.dim() {
        return Err(invalid(format!("m0 = {m0} must be below m = {}", d.dim())));
    }
    let controls = FlowControls {
        horizon,
        ..FlowControls::default()
    };
    let rec = integrate(d, fam, lambda, state0, &controls)?;
    let tail = |a: &[f64]| -> Result<f64> {
        let (h, v) = d.tail_norms(a, m0)?;
        Ok(h + v)
    };
    let series: Vec<(f64, f64)> = rec
        .samples
        .iter()
        .map(|s| Ok((s.t, tail(&s.coeffs)?)))
        .collect::<Result<_>>()?;

    let e0 = series[0].1;
    let e_floor = if rec.status == TerminalStatus::Converged {
        series.last().unwrap().1
    } else {
        let t_end = series.last().unwrap().0;
        let late: Vec<f64> = series
            .iter()
            .filter(|(t, _)| *t >= 0.9 * t_end)
            .map(|(_, e)| *e)
            .collect();
        late.iter().sum::<f64>() / late.len() as f64
    };
    let alpha = d.eigenvalues()[0].min(1.0);
    let tol = 10.0 * controls.tol * (1.0 + e0);
    let violations = series
        .iter()
        .filter_map(|&(t, e)| {
            let bound = (-alpha * t).exp() * e0 + e_floor + tol;
            (e > bound).then_some((t, e, bound))
        })
        .collect();

    let fit: Vec<(f64, f64)> = series
        .iter()
        .filter(|(_, e)| e - e_floor > 1e-6 * e0 && *e > 0.0)
        .map(|&(t, e)| (t, (e - e_floor).ln()))
        .collect();
    let fitted_rate = (fit.len() >= 3).then(|| {
        let n = fit.len() as f64;
        let mt = fit.iter().map(|p| p.0).sum::<f64>() / n;
        let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = fit.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|p| (p.0 - mt).powi(2)).sum();
        -sxy / sxx
    });

    Ok(TailDecayReport {
        m0,
        alpha,
        e0,
        e_floor,
        fitted_rate,
        samples: series.len(),
        violations,
        status: rec.status,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfinityProbeOptions {
    /// Random states for the pointwise inequality.
    pub samples: usize,
    /// Trajectories launched from `||u₀|| ≥ 2R₁`.
    pub trajectories: usize,
    pub seed: u64,
    /// Radius `R` in the conclusion `||Φ(t)u₀|| > R`; defaults to `R₀`.
    pub radius: Option<f64>,
    pub horizon: f64,
}

impl Default for InfinityProbeOptions {
    fn default() -> Self {
        InfinityProbeOptions {
            samples: 1000,
            trajectories: 8,
            seed: 0,
            radius: None,
            horizon: 1e2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRun {
    pub lambda: f64,
    pub start_norm: f64,
    pub min_norm: f64,
    pub status: TerminalStatus,
    pub left_region: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfinityReport {
    pub c: f64,
    pub mu: f64,
    /// `C' = 2(cμ + C_ε|Ω|)`.
    pub c_prime: f64,
    /// `R₀ = 2√(C'/(μ − 2))`.
    pub r0: f64,
    pub radius: f64,
    /// `√((μ_1 + 1)/μ_1)·R`.
    pub r1: f64,
    pub checked: usize,
    /// Draws rejected because `|J| ≤ c` had no solution above the radius.
    pub rejected: usize,
    pub violations: usize,
    /// Smallest `d/dt(|u|²+||u||²) − (½(μ−2)||u||² − C')` over the samples.
    pub min_slack: f64,
    pub runs: Vec<EscapeRun>,
    /// Smallest launch norm among runs that stayed above the radius.
    pub r1_empirical: Option<f64>,
    pub seed: u64,
}

impl InfinityReport {
    pub fn holds(&self) -> bool {
        self.violations == 0 && self.runs.iter().all(|r| r.min_norm > self.radius)
    }
}

/// `2Σ(1 + μ_j) a_j ȧ_j = d/dt(|u|² + ||u||²)`.
pub fn norm_growth_rate(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    state: &[f64],
) -> Result<f64> {
    let v = vector_field(d, fam, lambda, state)?;
    Ok(2.0
        * state
            .iter()
            .zip(&v)
            .zip(d.eigenvalues())
            .map(|((a, x), mu)| (1.0 + mu) * a * x)
            .sum::<f64>())
}

/// Samples states with `|J(u)| ≤ c` and large V-norm and checks that
/// `|u|² + ||u||²` grows there, then launches trajectories from beyond `R₁`.
pub fn infinity_stability_probe(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    window: (f64, f64),
    c: f64,
    f2: &F2Report,
    opts: &InfinityProbeOptions,
) -> Result<InfinityReport> {
    let cert = f2.certificate().ok_or_else(|| {
        Error::PreconditionViolation("family has no passing superquadraticity certificate".into())
    })?;
    if !(c > 0.0) {
        return Err(invalid("energy bound c must be positive"));
    }
    let mu1 = d.eigenvalues()[0];
    let mu = cert.mu;
    if cert.epsilon > mu1 * (mu - 2.0) / 4.0 {
        return Err(Error::PreconditionViolation(format!(
            "ε = {} exceeds μ_1(μ − 2)/4 = {}",
            cert.epsilon,
            mu1 * (mu - 2.0) / 4.0
        )));
    }
    if window.0 < cert.window.0 || window.1 > cert.window.1 {
        return Err(Error::PreconditionViolation(
            "λ-window is not covered by the certificate".into(),
        ));
    }
    let c_prime = 2.0 * (c * mu + cert.c_eps * d.measure());
    let r0 = 2.0 * (c_prime / (mu - 2.0)).sqrt();
    let radius = opts.radius.unwrap_or(r0);
    let r1 = ((mu1 + 1.0) / mu1).sqrt() * radius;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draw = |rng: &mut ChaCha8Rng, r_min: f64| -> Option<(f64, Vec<f64>)> {
        let lambda = if window.0 == window.1 {
            window.0
        } else {
            rng.random_range(window.0..=window.1)
        };
        let mut w: Vec<f64> = (0..d.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let n = d.v_norm(&w);
        w.iter_mut().for_each(|x| *x /= n);
        let target = rng.random_range(-c..=c);
        let p = Problem::new(d, fam, lambda);
        let g = |r: f64| p.energy(&w.iter().map(|x| r * x).collect::<Vec<_>>()) - target;
        let (mut lo, mut glo) = (r_min, g(r_min));
        let mut hi = lo;
        loop {
            hi *= 1.25;
            if hi > 1e6 * r_min.max(1.0) {
                return None;
            }
            let ghi = g(hi);
            if !ghi.is_finite() {
                return None;
            }
            if glo.signum() != ghi.signum() {
                break;
            }
            lo = hi;
            glo = ghi;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
        }
        Some((lambda, w.iter().map(|x| hi * x).collect()))
    };

    let mut checked = 0;
    let mut rejected = 0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    while checked < opts.samples {
        if rejected > 100 * opts.samples.max(1) {
            break;
        }
        let Some((lambda, u)) = draw(&mut rng, r0) else {
            rejected += 1;
            continue;
        };
        let rate = norm_growth_rate(d, fam, lambda, &u)?;
        let bound = 0.5 * (mu - 2.0) * d.v_norm_sq(&u) - c_prime;
        let slack = rate - bound;
        min_slack = min_slack.min(slack);
        if slack < -1e-9 * (1.0 + bound.abs()) {
            violations += 1;
        }
        checked += 1;
    }

    let controls = FlowControls {
        horizon: opts.horizon,
        norm_budget: f64::MAX,
        ..FlowControls::default()
    };
    let mut runs = Vec::new();
    let mut attempts = 0;
    while runs.len() < opts.trajectories && attempts < 100 * opts.trajectories.max(1) {
        attempts += 1;
        let Some((lambda, u0)) = draw(&mut rng, 2.0 * r1) else {
            continue;
        };
        let mut min_norm = d.v_norm(&u0);
        let mut left = false;
        let rec = integrate_until(d, fam, lambda, &u0, &controls, |s| {
            min_norm = min_norm.min(d.v_norm(&s.coeffs));
            left = s.energy.abs() > c;
            left || d.v_norm(&s.coeffs) > 1e12
        });
        let status = match rec {
            Ok(r) => r.status,
            // blow-up ends the run outside any bounded region
            Err(Error::IntegrationFailure { .. }) => {
                left = true;
                TerminalStatus::NormBudgetExceeded
            }
            Err(e) => return Err(e),
        };
        runs.push(EscapeRun {
            lambda,
            start_norm: d.v_norm(&u0),
            min_norm,
            status,
            left_region: left,
        });
    }
    let r1_empirical = runs
        .iter()
        .filter(|r| r.min_norm > radius)
        .map(|r| r.start_norm)
        .min_by(f64::total_cmp);

    Ok(InfinityReport {
        c,
        mu,
        c_prime,
        r0,
        radius,
        r1,
        checked,
        rejected,
        violations,
        min_slack,
        runs,
        r1_empirical,
        seed: opts.seed,
    })
}
