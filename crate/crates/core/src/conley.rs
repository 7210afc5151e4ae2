//! Conley-index values and checks along the trivial branch.
//!
//! Indices live in the class `{0̄, Σ^p, Σ^{p1} ∨ … ∨ Σ^{pk}}`, which is closed
//! under wedge and contains the index of every hyperbolic equilibrium.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::equilibria::{conley_index, find_equilibria, newton_solve, Equilibrium, SearchOptions};
use crate::error::{invalid, Error, Result};
use crate::nonlinearity::NonlinearityFamily;
use crate::spectral::SpectralDomain;

/// Canonical homotopy type of a pointed space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HomotopyType {
    /// The one-point space `0̄`.
    Zero,
    /// The pointed `p`-sphere `Σ^p`.
    Sphere(usize),
    /// Sorted sphere dimensions, at least two.
    Wedge(Vec<usize>),
}

impl HomotopyType {
    pub fn zero() -> Self {
        HomotopyType::Zero
    }

    pub fn sphere(p: usize) -> Self {
        HomotopyType::Sphere(p)
    }

    /// Canonical form of a wedge of spheres of the given dimensions.
    pub fn from_spheres(mut dims: Vec<usize>) -> Self {
        dims.sort_unstable();
        match dims.len() {
            0 => HomotopyType::Zero,
            1 => HomotopyType::Sphere(dims[0]),
            _ => HomotopyType::Wedge(dims),
        }
    }

    /// Sphere dimensions in ascending order (empty for `0̄`).
    pub fn spheres(&self) -> Vec<usize> {
        match self {
            HomotopyType::Zero => Vec::new(),
            HomotopyType::Sphere(p) => vec![*p],
            HomotopyType::Wedge(v) => v.clone(),
        }
    }

    pub fn wedge(&self, other: &HomotopyType) -> HomotopyType {
        let mut dims = self.spheres();
        dims.extend(other.spheres());
        Self::from_spheres(dims)
    }

    pub fn sphere_dimension(&self) -> Option<usize> {
        match self {
            HomotopyType::Sphere(p) => Some(*p),
            _ => None,
        }
    }
}

/// `a ∨ b`.
pub fn wedge(a: &HomotopyType, b: &HomotopyType) -> HomotopyType {
    a.wedge(b)
}

pub fn wedge_all<'a>(items: impl IntoIterator<Item = &'a HomotopyType>) -> HomotopyType {
    items
        .into_iter()
        .fold(HomotopyType::Zero, |acc, x| acc.wedge(x))
}

impl fmt::Display for HomotopyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomotopyType::Zero => f.write_str("0"),
            other => {
                let parts: Vec<String> = other.spheres().iter().map(|p| format!("S^{p}")).collect();
                f.write_str(&parts.join(" v "))
            }
        }
    }
}

impl FromStr for HomotopyType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(HomotopyType::Zero);
        }
        let dims = s
            .split(" v ")
            .map(|t| {
                t.trim()
                    .strip_prefix("S^")
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| invalid(format!("cannot parse homotopy type '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        let canonical = Self::from_spheres(dims);
        if canonical.to_string() != s {
            return Err(invalid(format!("'{s}' is not in canonical form")));
        }
        Ok(canonical)
    }
}

impl Serialize for HomotopyType {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HomotopyType {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Factor {
    Found(HomotopyType),
    /// No `X` in the representable class satisfies `X ∨ known = Σ^m`.
    Contradiction,
}

/// Solves `X ∨ known = total` for a sphere `total = Σ^m`. A wedge equals a
/// sphere only if one side is `0̄`, so `X ∈ {Σ^m, 0̄}` or no solution.
pub fn factor_through_sphere(total: &HomotopyType, known: &HomotopyType) -> Result<Factor> {
    let Some(m) = total.sphere_dimension() else {
        return Err(invalid(format!("total {total} is not a sphere")));
    };
    Ok(match known {
        HomotopyType::Zero => Factor::Found(HomotopyType::Sphere(m)),
        HomotopyType::Sphere(p) if *p == m => Factor::Found(HomotopyType::Zero),
        _ => Factor::Contradiction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileGap {
    pub lo: f64,
    pub hi: f64,
    pub samples: Vec<(f64, HomotopyType)>,
    pub value: HomotopyType,
}

/// Index of the trivial equilibrium on each gap between bifurcation values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexProfile {
    pub window: (f64, f64),
    /// Bifurcation values inside the window, ascending.
    pub upsilon: Vec<f64>,
    pub gaps: Vec<ProfileGap>,
}

/// Sample positions inside a gap, as fractions: midpoint first.
const GAP_FRACTIONS: [f64; 4] = [0.5, 0.15, 0.35, 0.85];

impl IndexProfile {
    /// A profile with given gap values, e.g. for hand-built scenarios.
    pub fn from_values(
        window: (f64, f64),
        upsilon: Vec<f64>,
        values: Vec<HomotopyType>,
    ) -> Result<Self> {
        if values.len() != upsilon.len() + 1 {
            return Err(invalid("need one value per gap"));
        }
        let bounds = breakpoints(window, &upsilon);
        let gaps = bounds
            .windows(2)
            .zip(values)
            .map(|(b, v)| ProfileGap {
                lo: b[0],
                hi: b[1],
                samples: vec![(0.5 * (b[0] + b[1]), v.clone())],
                value: v,
            })
            .collect();
        Ok(IndexProfile {
            window,
            upsilon,
            gaps,
        })
    }

    pub fn values(&self) -> Vec<HomotopyType> {
        self.gaps.iter().map(|g| g.value.clone()).collect()
    }

    /// Sphere dimension per gap (`None` where the value is not a sphere).
    pub fn dimensions(&self) -> Vec<Option<usize>> {
        self.gaps
            .iter()
            .map(|g| g.value.sphere_dimension())
            .collect()
    }

    /// Value on the open gap containing `lambda`.
    pub fn value_at(&self, lambda: f64) -> Option<&HomotopyType> {
        self.gaps
            .iter()
            .find(|g| g.lo < lambda && lambda < g.hi)
            .map(|g| &g.value)
    }
}

fn breakpoints(window: (f64, f64), upsilon: &[f64]) -> Vec<f64> {
    let mut b = vec![window.0];
    b.extend(upsilon.iter().copied());
    b.push(window.1);
    b
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Samples the trivial equilibrium's index on every gap of the window cut by
/// `upsilon`; all samples of a gap must agree.
pub fn index_profile(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    window: (f64, f64),
    upsilon: &[f64],
) -> Result<IndexProfile> {
    if !(window.0 < window.1) {
        return Err(invalid(format!(
            "empty window [{}, {}]",
            window.0, window.1
        )));
    }
    if upsilon
        .iter()
        .any(|&g| close(g, window.0) || close(g, window.1))
    {
        return Err(invalid("window endpoints must not be bifurcation values"));
    }
    let mut ups: Vec<f64> = upsilon
        .iter()
        .copied()
        .filter(|&g| window.0 < g && g < window.1)
        .collect();
    ups.sort_by(f64::total_cmp);
    let bounds = breakpoints(window, &ups);
    let mut gaps = Vec::with_capacity(bounds.len() - 1);
    for b in bounds.windows(2) {
        let (lo, hi) = (b[0], b[1]);
        let mut samples = Vec::with_capacity(GAP_FRACTIONS.len());
        for f in GAP_FRACTIONS {
            let lambda = lo + f * (hi - lo);
            let idx = conley_index(&Equilibrium::trivial(d, fam, lambda))
                .map_err(|_| Error::ContinuationViolation { lo, hi, lambda })?;
            if let Some((_, first)) = samples.first() {
                if *first != idx {
                    return Err(Error::ContinuationViolation { lo, hi, lambda });
                }
            }
            samples.push((lambda, idx));
        }
        let value = samples[0].1.clone();
        gaps.push(ProfileGap {
            lo,
            hi,
            samples,
            value,
        });
    }
    Ok(IndexProfile {
        window,
        upsilon: ups,
        gaps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Essentiality {
    Essential,
    Inessential,
}

/// Minimum gap width for a bifurcation value to count as isolated.
pub const ISOLATION_TOL: f64 = 1e-9;

/// Compares the indices on the two gaps adjacent to `gamma`.
pub fn essential_test(profile: &IndexProfile, gamma: f64) -> Result<Essentiality> {
    let k = profile
        .upsilon
        .iter()
        .position(|&g| (g - gamma).abs() <= 1e-9 * (1.0 + g.abs()))
        .ok_or_else(|| invalid(format!("{gamma} is not a bifurcation value of the profile")))?;
    let (left, right) = (&profile.gaps[k], &profile.gaps[k + 1]);
    if left.hi - left.lo <= ISOLATION_TOL || right.hi - right.lo <= ISOLATION_TOL {
        return Err(Error::Undecidable(format!(
            "{gamma} is not isolated at the grid resolution"
        )));
    }
    Ok(if left.value != right.value {
        Essentiality::Essential
    } else {
        Essentiality::Inessential
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    /// Bifurcation values are isolated.
    pub h1: bool,
    /// Every gap value is a sphere.
    pub h2: bool,
    /// Gaps separated by a bifurcation value carry different indices.
    pub h3: bool,
}

impl HypothesisCheck {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3
    }
}

pub fn check_hypotheses(profile: &IndexProfile) -> HypothesisCheck {
    let h1 = profile
        .upsilon
        .windows(2)
        .all(|w| w[1] - w[0] > ISOLATION_TOL)
        && profile.gaps.iter().all(|g| g.hi - g.lo > ISOLATION_TOL);
    let h2 = profile
        .gaps
        .iter()
        .all(|g| matches!(g.value, HomotopyType::Sphere(_)));
    let values = profile.values();
    let h3 = (0..values.len()).all(|i| (i + 1..values.len()).all(|j| values[i] != values[j]));
    HypothesisCheck { h1, h2, h3 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallNorm {
    /// `||u|| = (Σ μ_j a_j²)^{1/2}`.
    #[default]
    V,
    /// `|u| = (Σ a_j²)^{1/2}`.
    H,
    /// `max |u|` on the quadrature grid.
    Sup,
}

impl BallNorm {
    pub fn eval(self, d: &SpectralDomain, coeffs: &[f64]) -> f64 {
        match self {
            BallNorm::V => d.v_norm(coeffs),
            BallNorm::H => d.h_norm(coeffs),
            BallNorm::Sup => d.sup_norm(coeffs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsolatingBall {
    pub radius: f64,
    #[serde(default)]
    pub norm: BallNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationCheckOptions {
    pub samples: usize,
    /// Boundary band half-width as a fraction of the radius.
    pub delta_fraction: f64,
    pub search: SearchOptions,
}

impl Default for ContinuationCheckOptions {
    fn default() -> Self {
        ContinuationCheckOptions {
            samples: 21,
            delta_fraction: 0.05,
            search: SearchOptions::default(),
        }
    }
}

pub const PROXY_LABEL: &str = "Morse-decomposition proxy";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySample {
    pub lambda: f64,
    /// Norms of the equilibria inside the ball.
    pub norms: Vec<f64>,
    pub index: HomotopyType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub label: String,
    pub ball: IsolatingBall,
    pub samples: Vec<ProxySample>,
    /// Common value when constant.
    pub value: Option<HomotopyType>,
    /// First sample whose value differs from the first one.
    pub violated_at: Option<f64>,
}

impl ContinuationReport {
    pub fn is_constant(&self) -> bool {
        self.violated_at.is_none()
    }
}

/// Wedge of the indices of all equilibria in the ball, sampled across
/// `[a, b]`. An equilibrium inside the boundary band, or one that changes
/// side of the boundary between samples, is an isolation failure. Valid as the index of the maximal invariant set only when it
/// has no connecting orbits inside the ball; reported with [`PROXY_LABEL`].
pub fn continuation_check(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    interval: (f64, f64),
    ball: IsolatingBall,
    opts: &ContinuationCheckOptions,
) -> Result<ContinuationReport> {
    if !(ball.radius > 0.0) || !(interval.0 <= interval.1) || opts.samples == 0 {
        return Err(invalid("need radius > 0, a ≤ b and at least one sample"));
    }
    let delta = opts.delta_fraction * ball.radius;
    let n = opts.samples;
    let mut previous: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut samples = Vec::with_capacity(n);
    for i in 0..n {
        let lambda = if n == 1 {
            interval.0
        } else {
            interval.0 + (interval.1 - interval.0) * i as f64 / (n - 1) as f64
        };
        for (coeffs, r_prev) in &previous {
            if let Ok(eq) = newton_solve(d, fam, lambda, coeffs) {
                let r = ball.norm.eval(d, &eq.coeffs);
                if (r_prev - ball.radius) * (r - ball.radius) < 0.0 {
                    return Err(Error::IsolationFailure { lambda, norm: r });
                }
            }
        }
        let guesses: Vec<Vec<f64>> = previous.iter().map(|(c, _)| c.clone()).collect();
        let eqs = find_equilibria(d, fam, lambda, &guesses, &opts.search);
        let mut inside = Vec::new();
        let mut norms = Vec::new();
        for eq in &eqs {
            let r = ball.norm.eval(d, &eq.coeffs);
            if (r - ball.radius).abs() <= delta {
                return Err(Error::IsolationFailure { lambda, norm: r });
            }
            if r < ball.radius {
                inside.push(conley_index(eq)?);
                norms.push(r);
            }
        }
        previous = eqs
            .into_iter()
            .map(|e| {
                let r = ball.norm.eval(d, &e.coeffs);
                (e.coeffs, r)
            })
            .collect();
        samples.push(ProxySample {
            lambda,
            norms,
            index: wedge_all(&inside),
        });
    }
    let first = samples[0].index.clone();
    let violated_at = samples.iter().find(|s| s.index != first).map(|s| s.lambda);
    Ok(ContinuationReport {
        label: PROXY_LABEL.to_string(),
        ball,
        value: violated_at.is_none().then_some(first),
        samples,
        violated_at,
    })
}
