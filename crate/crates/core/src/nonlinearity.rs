//! Parametric nonlinearities `f_λ(s)` and the growth/superquadraticity checks.
//!
//! Three forms are supported:
//!
//! * `power_law`: `f_λ(s) = λs + α|s|^{p-1}s + β|s|^{q-1}s`
//! * `affine_gain`: `f_λ(s) = λ·g(s) + f(s)` with `g`, `f` sums of registered
//!   scalar terms ([`ScalarTerm`])
//! * `custom`: arbitrary closures for `f`, `f'` and `F`, registered in code.
//!
//! Every family carries `f`, `∂_s f`, the antiderivative `F_λ(s) = ∫_0^s f_λ`
//! and `∂_λ f`. Construction verifies `f_λ(0) = 0` and the mutual consistency
//! of `f`, `f'` and `F` by central differences.
//!
//! The growth condition `|f'_λ(s)| ≤ a1 + a2|s|^{p-1}` and the
//! superquadraticity condition `s f_λ(s) ≥ μF_λ(s) − ε s² − C_ε` are
//! universally quantified over `s ∈ ℝ`; [`check_f1`] and [`check_f2`] decide
//! them on a bounded `(λ, s)` grid plus samples at `|s| = 10¹ … 10⁶`, which
//! mirrors the usual leading-term argument.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralDomain;

/// One registered scalar function of `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarTerm {
    /// `coeff·|s|^{exponent-1}·s`, `exponent ≥ 1`.
    Power { coeff: f64, exponent: f64 },
    /// `coeff·tanh(scale·s)`.
    Tanh { coeff: f64, scale: f64 },
    /// `coeff·atan(scale·s)`.
    Atan { coeff: f64, scale: f64 },
    /// `coeff·(exp(scale·s) − 1)`.
    Exp { coeff: f64, scale: f64 },
}

impl ScalarTerm {
    fn validate(&self) -> Result<()> {
        match *self {
            ScalarTerm::Power { coeff, exponent } => {
                if !coeff.is_finite() || !(exponent >= 1.0) || !exponent.is_finite() {
                    return Err(invalid(format!(
                        "power term needs finite coeff and exponent ≥ 1, got ({coeff}, {exponent})"
                    )));
                }
            }
            ScalarTerm::Tanh { coeff, scale }
            | ScalarTerm::Atan { coeff, scale }
            | ScalarTerm::Exp { coeff, scale } => {
                if !coeff.is_finite() || !scale.is_finite() || scale == 0.0 {
                    return Err(invalid(format!(
                        "transcendental term needs finite coeff and nonzero scale, got ({coeff}, {scale})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        match *self {
            ScalarTerm::Power { coeff, exponent } => coeff * s.abs().powf(exponent - 1.0) * s,
            ScalarTerm::Tanh { coeff, scale } => coeff * (scale * s).tanh(),
            ScalarTerm::Atan { coeff, scale } => coeff * (scale * s).atan(),
            ScalarTerm::Exp { coeff, scale } => coeff * (scale * s).exp_m1(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            ScalarTerm::Power { coeff, exponent } => {
                coeff * exponent * s.abs().powf(exponent - 1.0)
            }
            ScalarTerm::Tanh { coeff, scale } => {
                let t = (scale * s).tanh();
                coeff * scale * (1.0 - t * t)
            }
            ScalarTerm::Atan { coeff, scale } => coeff * scale / (1.0 + (scale * s).powi(2)),
            ScalarTerm::Exp { coeff, scale } => coeff * scale * (scale * s).exp(),
        }
    }

    /// `∫_0^s` of the term.
    pub fn antiderivative(&self, s: f64) -> f64 {
        match *self {
            ScalarTerm::Power { coeff, exponent } => {
                coeff * s.abs().powf(exponent + 1.0) / (exponent + 1.0)
            }
            ScalarTerm::Tanh { coeff, scale } => {
                // ln cosh x = |x| + ln(1 + e^{-2|x|}) − ln 2
                let x = (scale * s).abs();
                coeff / scale * (x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2)
            }
            ScalarTerm::Atan { coeff, scale } => {
                let x = scale * s;
                coeff * (s * x.atan() - (x * x).ln_1p() / (2.0 * scale))
            }
            ScalarTerm::Exp { coeff, scale } => coeff * ((scale * s).exp_m1() / scale - s),
        }
    }

    fn power_exponent(&self) -> Option<f64> {
        match *self {
            ScalarTerm::Power { coeff, exponent } if coeff != 0.0 => Some(exponent),
            _ => None,
        }
    }
}

/// A sum of [`ScalarTerm`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarFn(pub Vec<ScalarTerm>);

impl ScalarFn {
    pub fn new(terms: Vec<ScalarTerm>) -> Self {
        ScalarFn(terms)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.0.iter().map(|t| t.value(s)).sum()
    }

    pub fn derivative(&self, s: f64) -> f64 {
        self.0.iter().map(|t| t.derivative(s)).sum()
    }

    pub fn antiderivative(&self, s: f64) -> f64 {
        self.0.iter().map(|t| t.antiderivative(s)).sum()
    }

    /// Largest exponent among nonzero power terms (transcendental terms
    /// count as growth 1, except `exp`, which has no polynomial bound).
    fn growth(&self) -> f64 {
        self.0
            .iter()
            .map(|t| match t {
                ScalarTerm::Exp { .. } => f64::INFINITY,
                other => other.power_exponent().unwrap_or(1.0),
            })
            .fold(1.0, f64::max)
    }

    /// The power term of largest exponent.
    fn leading_power(&self) -> Option<(f64, f64)> {
        self.0
            .iter()
            .filter_map(|t| match *t {
                ScalarTerm::Power { coeff, exponent } if coeff != 0.0 => Some((coeff, exponent)),
                _ => None,
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Code-registered family: closures of `(λ, s)`.
#[derive(Clone)]
pub struct CustomFamily {
    pub name: String,
    pub f: ScalarField,
    pub df: ScalarField,
    pub antiderivative: ScalarField,
}

impl fmt::Debug for CustomFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFamily")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum FamilyForm {
    PowerLaw {
        alpha: f64,
        p: f64,
        beta_c: f64,
        q: f64,
    },
    AffineGain {
        g: ScalarFn,
        f: ScalarFn,
    },
    Custom(CustomFamily),
}

#[derive(Debug, Clone)]
pub struct NonlinearityFamily {
    form: FamilyForm,
    growth: f64,
    declared_mu: Option<f64>,
}

const CHECK_LAMBDAS: [f64; 7] = [-10.0, -5.0, -1.0, 0.0, 1.0, 5.0, 10.0];

impl NonlinearityFamily {
    /// `f_λ(s) = λs + α|s|^{p-1}s + β_c|s|^{q-1}s`.
    pub fn power_law(alpha: f64, p: f64, beta_c: f64, q: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("p", p), ("beta_c", beta_c), ("q", q)] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite")));
            }
        }
        if p < 1.0 || q < 1.0 {
            return Err(invalid(format!(
                "exponents must be ≥ 1, got p = {p}, q = {q}"
            )));
        }
        let mut growth: f64 = 1.0;
        if alpha != 0.0 {
            growth = growth.max(p);
        }
        if beta_c != 0.0 {
            growth = growth.max(q);
        }
        let fam = NonlinearityFamily {
            form: FamilyForm::PowerLaw {
                alpha,
                p,
                beta_c,
                q,
            },
            growth,
            declared_mu: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// `f_λ(s) = λs + α|s|²s`.
    pub fn cubic(alpha: f64) -> Self {
        Self::power_law(alpha, 3.0, 0.0, 2.0).expect("cubic family is valid")
    }

    /// `f_λ(s) = λs`.
    pub fn linear() -> Self {
        Self::power_law(0.0, 3.0, 0.0, 2.0).expect("linear family is valid")
    }

    /// `f_λ(s) = λ·g(s) + f(s)`.
    pub fn affine_gain(g: ScalarFn, f: ScalarFn) -> Result<Self> {
        for t in g.0.iter().chain(&f.0) {
            t.validate()?;
        }
        let growth = g.growth().max(f.growth());
        let fam = NonlinearityFamily {
            form: FamilyForm::AffineGain { g, f },
            growth,
            declared_mu: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Registers closures for `f`, `∂_s f` and `F`. `growth` is the exponent
    /// `p` used by [`check_f1`].
    pub fn custom(
        name: impl Into<String>,
        f: ScalarField,
        df: ScalarField,
        antiderivative: ScalarField,
        growth: f64,
    ) -> Result<Self> {
        if !(growth >= 1.0) {
            return Err(invalid("growth exponent must be ≥ 1"));
        }
        let fam = NonlinearityFamily {
            form: FamilyForm::Custom(CustomFamily {
                name: name.into(),
                f,
                df,
                antiderivative,
            }),
            growth,
            declared_mu: None,
        };
        fam.validate()?;
        Ok(fam)
    }

    /// Declares the `μ` used for the superquadraticity check.
    pub fn with_declared_mu(mut self, mu: f64) -> Self {
        self.declared_mu = Some(mu);
        self
    }

    pub fn form(&self) -> &FamilyForm {
        &self.form
    }

    /// Growth exponent `p`.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn declared_mu(&self) -> Option<f64> {
        self.declared_mu
    }

    /// True when `f_λ(−s) = −f_λ(s)` is known structurally.
    pub fn is_odd(&self) -> bool {
        match &self.form {
            FamilyForm::PowerLaw { .. } => true,
            FamilyForm::AffineGain { g, f } => {
                g.0.iter()
                    .chain(&f.0)
                    .all(|t| !matches!(t, ScalarTerm::Exp { .. }))
            }
            FamilyForm::Custom(_) => false,
        }
    }

    pub fn value(&self, lambda: f64, s: f64) -> f64 {
        match &self.form {
            FamilyForm::PowerLaw {
                alpha,
                p,
                beta_c,
                q,
            } => {
                let a = s.abs();
                lambda * s + alpha * a.powf(p - 1.0) * s + beta_c * a.powf(q - 1.0) * s
            }
            FamilyForm::AffineGain { g, f } => lambda * g.value(s) + f.value(s),
            FamilyForm::Custom(c) => (c.f)(lambda, s),
        }
    }

    /// `∂_s f_λ(s)`.
    pub fn derivative(&self, lambda: f64, s: f64) -> f64 {
        match &self.form {
            FamilyForm::PowerLaw {
                alpha,
                p,
                beta_c,
                q,
            } => {
                let a = s.abs();
                lambda + alpha * p * a.powf(p - 1.0) + beta_c * q * a.powf(q - 1.0)
            }
            FamilyForm::AffineGain { g, f } => lambda * g.derivative(s) + f.derivative(s),
            FamilyForm::Custom(c) => (c.df)(lambda, s),
        }
    }

    /// `F_λ(s) = ∫_0^s f_λ(t) dt`.
    pub fn antiderivative(&self, lambda: f64, s: f64) -> f64 {
        match &self.form {
            FamilyForm::PowerLaw {
                alpha,
                p,
                beta_c,
                q,
            } => {
                let a = s.abs();
                0.5 * lambda * s * s
                    + alpha * a.powf(p + 1.0) / (p + 1.0)
                    + beta_c * a.powf(q + 1.0) / (q + 1.0)
            }
            FamilyForm::AffineGain { g, f } => lambda * g.antiderivative(s) + f.antiderivative(s),
            FamilyForm::Custom(c) => (c.antiderivative)(lambda, s),
        }
    }

    /// `∂_λ f_λ(s)`.
    pub fn dlambda(&self, lambda: f64, s: f64) -> f64 {
        match &self.form {
            FamilyForm::PowerLaw { .. } => s,
            FamilyForm::AffineGain { g, .. } => g.value(s),
            FamilyForm::Custom(c) => {
                let h = 1e-6 * (1.0 + lambda.abs());
                ((c.f)(lambda + h, s) - (c.f)(lambda - h, s)) / (2.0 * h)
            }
        }
    }

    /// `β(λ) = f'_λ(0)`.
    pub fn beta(&self, lambda: f64) -> f64 {
        self.derivative(lambda, 0.0)
    }

    fn validate(&self) -> Result<()> {
        const RTOL: f64 = 1e-6;
        for &lambda in &CHECK_LAMBDAS {
            let f0 = self.value(lambda, 0.0);
            if f0.abs() > 1e-12 {
                return Err(Error::HypothesisViolation(format!(
                    "f_λ(0) = {f0} ≠ 0 at λ = {lambda}"
                )));
            }
            let big0 = self.antiderivative(lambda, 0.0);
            if big0.abs() > 1e-12 {
                return Err(invalid(format!("F_λ(0) = {big0} ≠ 0 at λ = {lambda}")));
            }
            for i in 0..=40 {
                let s = -10.0 + 0.5 * i as f64;
                let h = 1e-7 * s.abs().max(1.0);
                let fd = (self.value(lambda, s + h) - self.value(lambda, s - h)) / (2.0 * h);
                let df = self.derivative(lambda, s);
                // Power terms with exponent in (1, 2) are only Hölder at 0.
                if s != 0.0 && (fd - df).abs() > RTOL * df.abs().max(1.0) {
                    return Err(invalid(format!(
                        "f' inconsistent with f at (λ, s) = ({lambda}, {s}): {df} vs FD {fd}"
                    )));
                }
                let fd = (self.antiderivative(lambda, s + h) - self.antiderivative(lambda, s - h))
                    / (2.0 * h);
                let f = self.value(lambda, s);
                if (fd - f).abs() > RTOL * f.abs().max(1.0) {
                    return Err(invalid(format!(
                        "F inconsistent with f at (λ, s) = ({lambda}, {s}): {f} vs FD {fd}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Config-facing description of a built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    PowerLaw {
        alpha: f64,
        p: f64,
        #[serde(default)]
        beta_c: f64,
        #[serde(default = "default_q")]
        q: f64,
        #[serde(default)]
        mu: Option<f64>,
    },
    AffineGain {
        g: Vec<ScalarTerm>,
        f: Vec<ScalarTerm>,
        #[serde(default)]
        mu: Option<f64>,
    },
}

fn default_q() -> f64 {
    2.0
}

impl FamilySpec {
    pub fn build(&self) -> Result<NonlinearityFamily> {
        let (fam, mu) = match self {
            FamilySpec::PowerLaw {
                alpha,
                p,
                beta_c,
                q,
                mu,
            } => (NonlinearityFamily::power_law(*alpha, *p, *beta_c, *q)?, *mu),
            FamilySpec::AffineGain { g, f, mu } => (
                NonlinearityFamily::affine_gain(ScalarFn(g.clone()), ScalarFn(f.clone()))?,
                *mu,
            ),
        };
        Ok(match mu {
            Some(mu) => fam.with_declared_mu(mu),
            None => fam,
        })
    }
}

/// Grid used by the hypothesis checkers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGrid {
    pub s_points: usize,
    pub lambda_points: usize,
    pub s_max: f64,
    /// Asymptotic samples at `|s| = 10^k` for `k` in `1..=max_decade`.
    pub max_decade: i32,
}

impl Default for CheckGrid {
    fn default() -> Self {
        CheckGrid {
            s_points: 512,
            lambda_points: 129,
            s_max: 1e3,
            max_decade: 6,
        }
    }
}

impl CheckGrid {
    fn lambdas(&self, window: (f64, f64)) -> Vec<f64> {
        linspace(window.0, window.1, self.lambda_points.max(1))
    }

    /// `S_max·sinh(κx)/sinh(κ)` for uniform `x ∈ [−1, 1]`: fine near the
    /// origin, where the supremands peak for moderate `λ`.
    fn s_values(&self) -> Vec<f64> {
        const KAPPA: f64 = 10.0;
        let mut s: Vec<f64> = linspace(-1.0, 1.0, self.s_points.max(2))
            .into_iter()
            .map(|x| self.s_max * (KAPPA * x).sinh() / KAPPA.sinh())
            .collect();
        s.push(0.0);
        s
    }

    fn decades(&self) -> Vec<f64> {
        (1..=self.max_decade).map(|k| 10f64.powi(k)).collect()
    }
}

pub(crate) fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if !(window.0.is_finite() && window.1.is_finite() && window.0 <= window.1) {
        return Err(invalid(format!(
            "bad λ-window [{}, {}]",
            window.0, window.1
        )));
    }
    Ok(())
}

/// Verifies that `β` is strictly increasing on `n` equally spaced points of
/// the window.
pub fn check_beta_monotone(fam: &NonlinearityFamily, window: (f64, f64), n: usize) -> Result<()> {
    check_window(window)?;
    let grid = linspace(window.0, window.1, n.max(2));
    for w in grid.windows(2) {
        let (b0, b1) = (fam.beta(w[0]), fam.beta(w[1]));
        if !(b1 > b0) {
            return Err(Error::HypothesisViolation(format!(
                "β not strictly increasing: β({}) = {b0}, β({}) = {b1}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// The first `count` solutions `γ_k` of `β(γ) = μ_k`, one per distinct
/// eigenvalue, searched inside `window`.
pub fn bifurcation_values(
    fam: &NonlinearityFamily,
    d: &SpectralDomain,
    count: usize,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    check_beta_monotone(fam, window, 1000)?;
    let mut out = Vec::with_capacity(count);
    for k in 1..=count {
        let (mu, _) = d.distinct_eigenvalue(k)?;
        out.push(solve_beta(fam, mu, window).ok_or(Error::WindowExhausted {
            k,
            lo: window.0,
            hi: window.1,
        })?);
    }
    Ok(out)
}

/// All `γ_k` inside the window for the retained spectrum.
pub fn bifurcation_values_in_window(
    fam: &NonlinearityFamily,
    d: &SpectralDomain,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    check_beta_monotone(fam, window, 1000)?;
    Ok(d.distinct_eigenvalues()
        .iter()
        .filter_map(|&(mu, _)| solve_beta(fam, mu, window))
        .collect())
}

fn solve_beta(fam: &NonlinearityFamily, target: f64, window: (f64, f64)) -> Option<f64> {
    let g = |l: f64| fam.beta(l) - target;
    let (mut lo, mut hi) = window;
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(lo);
    }
    if ghi == 0.0 {
        return Some(hi);
    }
    if glo > 0.0 || ghi < 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Some(mid);
        }
        if gm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum F1Report {
    Pass {
        a1: f64,
        a2: f64,
        /// Log-log slope of `max_λ |f'_λ(±s)|` over `|s| ∈ [10³, 10⁶]`.
        exponent_slope: f64,
    },
    Fail {
        lambda: f64,
        s: f64,
        reason: String,
    },
}

impl F1Report {
    pub fn passed(&self) -> bool {
        matches!(self, F1Report::Pass { .. })
    }
}

/// Slope tolerance above `p − 1` before the growth bound is rejected.
pub const F1_SLOPE_TOL: f64 = 0.1;

/// Checks `|f'_λ(s)| ≤ a1 + a2|s|^{p-1}` on the grid and its asymptotic
/// exponent.
pub fn check_f1(
    fam: &NonlinearityFamily,
    window: (f64, f64),
    grid: &CheckGrid,
) -> Result<F1Report> {
    check_window(window)?;
    let p = fam.growth();
    let lambdas = grid.lambdas(window);
    let mut samples: Vec<f64> = grid.s_values();
    for s in grid.decades() {
        samples.push(s);
        samples.push(-s);
    }

    let mut a1: f64 = 0.0;
    let mut table = Vec::with_capacity(samples.len() * lambdas.len());
    for &s in &samples {
        for &l in &lambdas {
            let d = fam.derivative(l, s).abs();
            if !d.is_finite() {
                return Ok(F1Report::Fail {
                    lambda: l,
                    s,
                    reason: "derivative is not finite".into(),
                });
            }
            if s.abs() <= 1.0 {
                a1 = a1.max(d);
            }
            table.push((l, s, d));
        }
    }

    // Asymptotic exponent from the upper decades.
    let upper: Vec<(f64, f64, f64)> = grid
        .decades()
        .into_iter()
        .filter(|&s| s >= 1e3)
        .map(|s| {
            let (mut best, mut arg) = (0.0_f64, (lambdas[0], s));
            for &l in &lambdas {
                for sv in [s, -s] {
                    let d = fam.derivative(l, sv).abs();
                    if d > best {
                        best = d;
                        arg = (l, sv);
                    }
                }
            }
            (s.ln(), best.ln_1p(), arg.0 + 0.0 * arg.1)
        })
        .collect();
    let slope = if upper.len() >= 2 {
        least_squares_slope(upper.iter().map(|u| (u.0, u.1)))
    } else {
        0.0
    };
    if !(slope <= p - 1.0 + F1_SLOPE_TOL) {
        let s = grid.decades().last().copied().unwrap_or(grid.s_max);
        let lambda = upper.last().map(|u| u.2).unwrap_or(window.1);
        return Ok(F1Report::Fail {
            lambda,
            s,
            reason: format!("asymptotic exponent {slope:.4} exceeds p − 1 = {}", p - 1.0),
        });
    }

    let mut a2: f64 = 0.0;
    for &(_, s, d) in &table {
        if s.abs() > 1.0 {
            let excess = (d - a1).max(0.0);
            a2 = a2.max(excess / s.abs().powf(p - 1.0));
        }
    }
    Ok(F1Report::Pass {
        a1,
        a2,
        exponent_slope: slope,
    })
}

fn least_squares_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Grid-certified constants for the superquadraticity condition. `c_eps` is
/// valid for the examined grid and asymptotic samples only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct F2Certificate {
    pub mu: f64,
    pub epsilon: f64,
    pub c_eps: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum F2Report {
    Pass(F2Certificate),
    Fail { lambda: f64, s: f64, value: f64 },
}

impl F2Report {
    pub fn passed(&self) -> bool {
        matches!(self, F2Report::Pass(_))
    }

    pub fn certificate(&self) -> Option<&F2Certificate> {
        match self {
            F2Report::Pass(c) => Some(c),
            F2Report::Fail { .. } => None,
        }
    }
}

/// Checks `s f_λ(s) ≥ μF_λ(s) − ε s² − C_ε` by bounding the supremand
/// `μF − s f − ε s²` on the grid and testing that it does not grow at
/// `|s| = 10^k`.
pub fn check_f2(
    fam: &NonlinearityFamily,
    window: (f64, f64),
    mu: f64,
    epsilon: f64,
    grid: &CheckGrid,
) -> Result<F2Report> {
    check_window(window)?;
    if !(mu > 2.0) {
        return Err(invalid(format!("μ must exceed 2, got {mu}")));
    }
    if !(epsilon > 0.0) {
        return Err(invalid(format!("ε must be positive, got {epsilon}")));
    }
    let sup =
        |l: f64, s: f64| mu * fam.antiderivative(l, s) - s * fam.value(l, s) - epsilon * s * s;
    let lambdas = grid.lambdas(window);

    let mut c: f64 = 0.0;
    for &s in &grid.s_values() {
        for &l in &lambdas {
            let v = sup(l, s);
            if !v.is_finite() {
                return Ok(F2Report::Fail {
                    lambda: l,
                    s,
                    value: v,
                });
            }
            c = c.max(v);
        }
    }

    let mut tail = Vec::new();
    for s in grid.decades() {
        let mut best = (f64::NEG_INFINITY, window.0, s);
        for &l in &lambdas {
            for sv in [s, -s] {
                let v = sup(l, sv);
                if !v.is_finite() {
                    return Ok(F2Report::Fail {
                        lambda: l,
                        s: sv,
                        value: v,
                    });
                }
                if v > best.0 {
                    best = (v, l, sv);
                }
            }
        }
        tail.push(best);
    }
    if let [.., prev, last] = tail.as_slice() {
        if last.0 > 0.0 && last.0 > 2.0 * prev.0.max(0.0) + 1.0 {
            return Ok(F2Report::Fail {
                lambda: last.1,
                s: last.2,
                value: last.0,
            });
        }
    }
    for t in &tail {
        c = c.max(t.0);
    }
    Ok(F2Report::Pass(F2Certificate {
        mu,
        epsilon,
        c_eps: c,
        window,
    }))
}

/// A `μ` for which [`check_f2`] is expected to pass: the midpoint of
/// `(2, p + 1)` for a positive leading coefficient, `p + 2` for a negative
/// one.
pub fn suggest_mu(fam: &NonlinearityFamily) -> Result<f64> {
    if let Some(mu) = fam.declared_mu {
        return Ok(mu);
    }
    let from_leading = |coeff: f64, p: f64| -> Result<f64> {
        if p <= 1.0 {
            return Err(Error::Unsupported("no superlinear leading term".into()));
        }
        Ok(if coeff > 0.0 {
            (2.0 + p + 1.0) / 2.0
        } else {
            p + 2.0
        })
    };
    match &fam.form {
        FamilyForm::PowerLaw {
            alpha,
            p,
            beta_c,
            q,
        } => {
            let leading = [(*alpha, *p), (*beta_c, *q)]
                .into_iter()
                .filter(|t| t.0 != 0.0)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match leading {
                Some((c, p)) => from_leading(c, p),
                None => Err(Error::Unsupported("family is purely linear".into())),
            }
        }
        FamilyForm::AffineGain { g, f } => {
            if g.growth() > 1.0 {
                return Err(Error::Unsupported("gain g is superlinear".into()));
            }
            match f.leading_power() {
                Some((c, p)) => from_leading(c, p),
                None => Err(Error::Unsupported("f has no power term".into())),
            }
        }
        FamilyForm::Custom(c) => Err(Error::Unsupported(format!(
            "custom family '{}' has no declared μ",
            c.name
        ))),
    }
}
