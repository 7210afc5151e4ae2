//! Pseudo-arclength continuation of `R(a, λ) = 0`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{newton_solve, Equilibrium};
use crate::error::{invalid, Result};
use crate::galerkin::{norm, Problem};
use crate::nonlinearity::NonlinearityFamily;
use crate::spectral::SpectralDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    IncreasingLambda,
    DecreasingLambda,
    /// Away from the trivial solution.
    IncreasingNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationControls {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub window: (f64, f64),
    /// V-norm at which the branch is abandoned.
    pub norm_budget: f64,
    pub max_steps: usize,
}

impl Default for ContinuationControls {
    fn default() -> Self {
        ContinuationControls {
            ds: 0.05,
            ds_min: 1e-8,
            ds_max: 0.5,
            window: (f64::NEG_INFINITY, f64::INFINITY),
            norm_budget: 1e3,
            max_steps: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BranchEvent {
    /// `dλ/ds` changed sign between points `step − 1` and `step`.
    Fold { step: usize, lambda: f64 },
    /// A pencil eigenvalue crossed zero; located by arclength bisection.
    IndexChange {
        step: usize,
        lambda: f64,
        arclength: f64,
        old: usize,
        new: usize,
    },
    /// The branch returned to `u = 0`.
    TrivialIntersection { step: usize, lambda: f64 },
}

impl BranchEvent {
    pub fn step(&self) -> usize {
        match *self {
            BranchEvent::Fold { step, .. }
            | BranchEvent::IndexChange { step, .. }
            | BranchEvent::TrivialIntersection { step, .. } => step,
        }
    }

    pub fn lambda(&self) -> f64 {
        match *self {
            BranchEvent::Fold { lambda, .. }
            | BranchEvent::IndexChange { lambda, .. }
            | BranchEvent::TrivialIntersection { lambda, .. } => lambda,
        }
    }

    fn label(&self) -> &'static str {
        match self {
            BranchEvent::Fold { .. } => "fold",
            BranchEvent::IndexChange { .. } => "index_change",
            BranchEvent::TrivialIntersection { .. } => "trivial_intersection",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    WindowEdge,
    NormBudget,
    StepFailure,
    MaxSteps,
    TrivialIntersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub arclength: f64,
    pub equilibrium: Equilibrium,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuedBranch {
    pub points: Vec<BranchPoint>,
    pub events: Vec<BranchEvent>,
    pub termination: Termination,
}

impl ContinuedBranch {
    pub fn lambda_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(p.equilibrium.lambda), hi.max(p.equilibrium.lambda))
            })
    }

    /// Equilibria at parameter `lambda`: one per segment crossing it,
    /// Newton-corrected from the linear interpolant. Each is tagged with the
    /// index of the segment's first point.
    pub fn solve_at(
        &self,
        d: &SpectralDomain,
        fam: &NonlinearityFamily,
        lambda: f64,
    ) -> Vec<(usize, Equilibrium)> {
        let mut out = Vec::new();
        for (i, w) in self.points.windows(2).enumerate() {
            let (a, b) = (&w[0].equilibrium, &w[1].equilibrium);
            let (la, lb) = (a.lambda, b.lambda);
            let inside = (la <= lambda && lambda < lb) || (lb < lambda && lambda <= la);
            let last = i + 2 == self.points.len() && lambda == lb;
            if !(inside || last) {
                continue;
            }
            let t = if lb == la {
                0.0
            } else {
                (lambda - la) / (lb - la)
            };
            let guess: Vec<f64> = a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| x + t * (y - x))
                .collect();
            if let Ok(eq) = newton_solve(d, fam, lambda, &guess) {
                out.push((i, eq));
            }
        }
        out
    }

    /// CSV with columns `arclength, lambda, h_norm, v_norm, morse_index,
    /// margin, event`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("arclength,lambda,h_norm,v_norm,morse_index,margin,event\n");
        for (i, p) in self.points.iter().enumerate() {
            let e = &p.equilibrium;
            let events: Vec<&str> = self
                .events
                .iter()
                .filter(|ev| ev.step() == i)
                .map(|ev| ev.label())
                .collect();
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
                p.arclength,
                e.lambda,
                e.h_norm,
                e.v_norm,
                e.morse_index,
                e.margin,
                events.join(";")
            );
        }
        out
    }
}

/// Extended unknown `(a, λ)`.
fn extended(eq: &Equilibrium) -> DVector<f64> {
    let m = eq.coeffs.len();
    DVector::from_fn(m + 1, |i, _| if i < m { eq.coeffs[i] } else { eq.lambda })
}

fn split(x: &DVector<f64>) -> (Vec<f64>, f64) {
    let m = x.len() - 1;
    (x.rows(0, m).iter().copied().collect(), x[m])
}

/// `[R_a R_λ]` stacked over `τᵀ`.
fn bordered(p: &Problem<'_>, a: &[f64], tau: &DVector<f64>) -> DMatrix<f64> {
    let m = a.len();
    let mut mat = DMatrix::zeros(m + 1, m + 1);
    mat.view_mut((0, 0), (m, m))
        .copy_from(&p.residual_jacobian(a));
    mat.view_mut((0, m), (m, 1))
        .copy_from(&p.residual_dlambda(a));
    mat.view_mut((m, 0), (1, m + 1)).copy_from(&tau.transpose());
    mat
}

fn solve(mat: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    mat.clone()
        .lu()
        .solve(rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .or_else(|| mat.svd(true, true).solve(rhs, 1e-14).ok())
}

/// Null vector of `[R_a R_λ]` via SVD.
fn initial_tangent(p: &Problem<'_>, a: &[f64]) -> DVector<f64> {
    let m = a.len();
    let mut mat = DMatrix::zeros(m + 1, m + 1);
    mat.view_mut((0, 0), (m, m))
        .copy_from(&p.residual_jacobian(a));
    mat.view_mut((0, m), (m, 1))
        .copy_from(&p.residual_dlambda(a));
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let k = (0..m + 1)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap();
    let t: DVector<f64> = v_t.row(k).transpose();
    t.normalize()
}

struct Corrected {
    x: DVector<f64>,
    tangent: DVector<f64>,
    iterations: usize,
}

const CORRECTOR_ITERATIONS: usize = 8;

fn correct(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    x0: &DVector<f64>,
    tau: &DVector<f64>,
    ds: f64,
) -> Option<Corrected> {
    let pred = x0 + tau * ds;
    let mut y = pred.clone();
    for it in 0..=CORRECTOR_ITERATIONS {
        let (a, lambda) = split(&y);
        let p = Problem::new(d, fam, lambda);
        let r = p.residual(&a);
        let rn = norm(&r);
        if !rn.is_finite() {
            return None;
        }
        let mat = bordered(&p, &a, tau);
        if rn <= 1e-10 * (1.0 + norm(&a)) {
            let mut e = DVector::zeros(a.len() + 1);
            e[a.len()] = 1.0;
            let t = solve(mat, &e)?;
            let n = t.norm();
            if !(n > 0.0) {
                return None;
            }
            return Some(Corrected {
                x: y,
                tangent: t / n,
                iterations: it,
            });
        }
        if it == CORRECTOR_ITERATIONS {
            break;
        }
        let mut rhs = DVector::zeros(a.len() + 1);
        for (i, v) in r.iter().enumerate() {
            rhs[i] = -v;
        }
        rhs[a.len()] = -tau.dot(&(&y - &pred));
        y += solve(mat, &rhs)?;
    }
    None
}

/// Traces the solution curve through `start` by pseudo-arclength
/// predictor–corrector steps.
pub fn continue_branch(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    start: &Equilibrium,
    direction: Direction,
    controls: &ContinuationControls,
) -> Result<ContinuedBranch> {
    if !(controls.ds > 0.0 && controls.ds_min > 0.0 && controls.ds_max >= controls.ds) {
        return Err(invalid(
            "continuation step sizes must satisfy 0 < ds ≤ ds_max, ds_min > 0",
        ));
    }
    if start.coeffs.len() != d.dim() {
        return Err(invalid("start point does not match the domain"));
    }
    let p0 = Problem::new(d, fam, start.lambda);
    if norm(&p0.residual(&start.coeffs)) > 1e-8 * (1.0 + start.h_norm) {
        return Err(invalid("start point is not an equilibrium"));
    }

    let mut tau = initial_tangent(&p0, &start.coeffs);
    let m = d.dim();
    let flip = match direction {
        Direction::IncreasingLambda => tau[m] < 0.0,
        Direction::DecreasingLambda => tau[m] > 0.0,
        Direction::IncreasingNorm => {
            let growth: f64 = start
                .coeffs
                .iter()
                .zip(tau.iter())
                .map(|(a, t)| a * t)
                .sum();
            if start.h_norm > 0.0 {
                growth < 0.0
            } else {
                tau[m] < 0.0
            }
        }
    };
    if flip {
        tau = -tau;
    }

    let mut points = vec![BranchPoint {
        arclength: 0.0,
        equilibrium: start.clone(),
    }];
    let mut events = Vec::new();
    let mut x = extended(start);
    let mut s = 0.0;
    let mut ds = controls.ds;
    let start_norm = start.h_norm;
    let mut max_norm = start_norm;
    let (lo, hi) = controls.window;

    let termination = 'outer: loop {
        if points.len() > controls.max_steps {
            break Termination::MaxSteps;
        }
        let step = loop {
            if ds < controls.ds_min {
                break 'outer Termination::StepFailure;
            }
            match correct(d, fam, &x, &tau, ds) {
                Some(c) if c.tangent.dot(&tau) >= 0.9 && (&c.x - &x).norm() <= 2.0 * ds => break c,
                _ => ds *= 0.5,
            }
        };
        let (a, lambda) = split(&step.x);

        if lambda < lo || lambda > hi {
            let edge = if lambda < lo { lo } else { hi };
            let (a0, l0) = split(&x);
            let t = (edge - l0) / (lambda - l0);
            let guess: Vec<f64> = a0.iter().zip(&a).map(|(u, v)| u + t * (v - u)).collect();
            if let Ok(eq) = newton_solve(d, fam, edge, &guess) {
                let prev = &points.last().unwrap().equilibrium;
                if eq.morse_index != prev.morse_index {
                    events.push(BranchEvent::IndexChange {
                        step: points.len(),
                        lambda: edge,
                        arclength: s + t * ds,
                        old: prev.morse_index,
                        new: eq.morse_index,
                    });
                }
                points.push(BranchPoint {
                    arclength: s + t * ds,
                    equilibrium: eq,
                });
            }
            break Termination::WindowEdge;
        }

        let eq = newton_solve(d, fam, lambda, &a).unwrap_or_else(|_| {
            Equilibrium::assemble(
                &Problem::new(d, fam, lambda),
                a.clone(),
                norm(&Problem::new(d, fam, lambda).residual(&a)),
            )
        });
        let prev = points.last().unwrap().equilibrium.clone();
        let step_no = points.len();

        if step.tangent[m] * tau[m] < 0.0 {
            events.push(BranchEvent::Fold {
                step: step_no,
                lambda,
            });
        }
        if eq.morse_index != prev.morse_index {
            let (sigma, l_star) = locate_crossing(d, fam, &x, &tau, ds, prev.morse_index);
            events.push(BranchEvent::IndexChange {
                step: step_no,
                lambda: l_star,
                arclength: s + sigma,
                old: prev.morse_index,
                new: eq.morse_index,
            });
        }

        let crossed_zero = prev.h_norm > 0.0
            && eq
                .coeffs
                .iter()
                .zip(&prev.coeffs)
                .map(|(u, v)| u * v)
                .sum::<f64>()
                < 0.0;
        let returned = max_norm >= 4.0 * start_norm.max(1e-12) && eq.h_norm <= start_norm;

        s += ds;
        max_norm = max_norm.max(eq.h_norm);
        let v_norm = eq.v_norm;
        points.push(BranchPoint {
            arclength: s,
            equilibrium: eq,
        });
        x = step.x;
        tau = step.tangent;

        if crossed_zero || returned {
            let lambda = if crossed_zero {
                let (pa, pb) = (prev.h_norm, points.last().unwrap().equilibrium.h_norm);
                prev.lambda + pa / (pa + pb) * (lambda - prev.lambda)
            } else {
                lambda
            };
            events.push(BranchEvent::TrivialIntersection {
                step: step_no,
                lambda,
            });
            break Termination::TrivialIntersection;
        }
        if v_norm > controls.norm_budget {
            break Termination::NormBudget;
        }
        if step.iterations <= 3 {
            ds = (ds * 1.3).min(controls.ds_max);
        }
    };

    Ok(ContinuedBranch {
        points,
        events,
        termination,
    })
}

/// Bisects the arclength offset in `(0, ds)` at which the Morse index
/// leaves `old`; returns `(offset, λ)`.
fn locate_crossing(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    x: &DVector<f64>,
    tau: &DVector<f64>,
    ds: f64,
    old: usize,
) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0, ds);
    let mut lambda_hi = x[x.len() - 1] + tau[x.len() - 1] * ds;
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        let Some(c) = correct(d, fam, x, tau, mid) else {
            break;
        };
        let (a, lambda) = split(&c.x);
        let idx = super::inertia_of(&Problem::new(d, fam, lambda), &a).morse_index;
        if idx == old {
            lo = mid;
        } else {
            hi = mid;
            lambda_hi = lambda;
        }
    }
    let mid = 0.5 * (lo + hi);
    let lambda = correct(d, fam, x, tau, mid)
        .map(|c| c.x[x.len() - 1])
        .unwrap_or(lambda_hi);
    (mid, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{branch_switch, SwitchOptions};
    use crate::spectral::DomainShape;
    use approx::assert_abs_diff_eq;

    fn line(m: usize) -> SpectralDomain {
        SpectralDomain::new(DomainShape::unit_interval_pi(), m).unwrap()
    }

    #[test]
    fn trivial_branch_index_change() {
        let d = line(4);
        let fam = NonlinearityFamily::cubic(-1.0);
        let start = Equilibrium::trivial(&d, &fam, 0.5);
        let controls = ContinuationControls {
            window: (0.0, 2.0),
            ds: 0.07,
            ..Default::default()
        };
        let b = continue_branch(&d, &fam, &start, Direction::IncreasingLambda, &controls).unwrap();
        assert_eq!(b.termination, Termination::WindowEdge);
        let changes: Vec<&BranchEvent> = b
            .events
            .iter()
            .filter(|e| matches!(e, BranchEvent::IndexChange { .. }))
            .collect();
        assert_eq!(changes.len(), 1);
        assert_abs_diff_eq!(changes[0].lambda(), 1.0, epsilon = 1e-8);
        assert!(b.points.iter().all(|p| p.equilibrium.is_trivial()));
    }

    #[test]
    fn supercritical_branch_grows() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let seeds = branch_switch(&d, &fam, 1.0, &vec![0.0; 8], &SwitchOptions::default()).unwrap();
        let controls = ContinuationControls {
            window: (0.5, 11.0),
            ..Default::default()
        };
        let b = continue_branch(&d, &fam, &seeds[0], Direction::IncreasingNorm, &controls).unwrap();
        assert_eq!(b.termination, Termination::WindowEdge);
        assert_abs_diff_eq!(
            b.points.last().unwrap().equilibrium.lambda,
            11.0,
            epsilon = 1e-12
        );
        for w in b.points.windows(2) {
            assert!(w[1].equilibrium.lambda > w[0].equilibrium.lambda);
            assert!(w[1].equilibrium.v_norm > w[0].equilibrium.v_norm);
            assert!(w[1].arclength - w[0].arclength <= controls.ds_max + 1e-12);
        }
        let at = b.solve_at(&d, &fam, 1.1);
        assert_eq!(at.len(), 1);
        let oracle = (2.0 * std::f64::consts::PI / 3.0 * 0.1).sqrt();
        assert!((at[0].1.coeffs[0].abs() - oracle).abs() / oracle < 0.05);
        let csv = b.to_csv();
        assert_eq!(csv.lines().count(), b.points.len() + 1);
    }

    #[test]
    fn subcritical_branch_reaches_left_edge() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(1.0);
        let seeds = branch_switch(&d, &fam, 1.0, &vec![0.0; 8], &SwitchOptions::default()).unwrap();
        assert!(seeds.iter().all(|s| s.lambda < 1.0));
        let controls = ContinuationControls {
            window: (-9.0, 1.5),
            ..Default::default()
        };
        let b = continue_branch(&d, &fam, &seeds[0], Direction::IncreasingNorm, &controls).unwrap();
        assert_eq!(b.termination, Termination::WindowEdge);
        assert_abs_diff_eq!(
            b.points.last().unwrap().equilibrium.lambda,
            -9.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn returns_to_trivial_line() {
        let d = line(4);
        let fam = NonlinearityFamily::cubic(-1.0);
        let seeds = branch_switch(&d, &fam, 1.0, &vec![0.0; 4], &SwitchOptions::default()).unwrap();
        let controls = ContinuationControls {
            window: (0.0, 3.0),
            ..Default::default()
        };
        let b =
            continue_branch(&d, &fam, &seeds[0], Direction::DecreasingLambda, &controls).unwrap();
        assert_eq!(b.termination, Termination::TrivialIntersection);
        assert_abs_diff_eq!(b.events.last().unwrap().lambda(), 1.0, epsilon = 1e-2);
    }
}
