//! Steady states of the Galerkin system, their linearization and branches.
//!
//! Equilibria solve `R(a) = μ∘a − f̂(a) = 0`. The Morse index is read off
//! the symmetric pencil `(F' − diag μ, I + diag μ)`, whose eigenvalues `ν`
//! coincide with those of the flow Jacobian `(I + diag μ)⁻¹(F' − diag μ)`.

mod continuation;

pub use continuation::{
    continue_branch, BranchEvent, BranchPoint, ContinuationControls, ContinuedBranch, Direction,
    Termination,
};

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conley::HomotopyType;
use crate::error::{invalid, Error, Result};
use crate::galerkin::{dist, norm, Problem};
use crate::nonlinearity::NonlinearityFamily;
use crate::spectral::SpectralDomain;

/// Margin below which an equilibrium counts as non-hyperbolic.
pub const HYPERBOLICITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub lambda: f64,
    pub coeffs: Vec<f64>,
    pub residual: f64,
    pub morse_index: usize,
    /// `min |ν|` over the pencil eigenvalues.
    pub margin: f64,
    pub h_norm: f64,
    pub v_norm: f64,
    /// Pencil eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl Equilibrium {
    pub fn is_hyperbolic(&self) -> bool {
        self.margin > HYPERBOLICITY_THRESHOLD
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(|&a| a == 0.0)
    }

    pub fn trivial(d: &SpectralDomain, fam: &NonlinearityFamily, lambda: f64) -> Self {
        Self::assemble(&Problem::new(d, fam, lambda), vec![0.0; d.dim()], 0.0)
    }

    pub(crate) fn assemble(p: &Problem<'_>, coeffs: Vec<f64>, residual: f64) -> Self {
        let inertia = inertia_of(p, &coeffs);
        Equilibrium {
            lambda: p.lambda,
            h_norm: p.domain.h_norm(&coeffs),
            v_norm: p.domain.v_norm(&coeffs),
            coeffs,
            residual,
            morse_index: inertia.morse_index,
            margin: inertia.margin,
            eigenvalues: inertia.eigenvalues,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inertia {
    pub morse_index: usize,
    pub margin: f64,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`; original coordinates,
    /// normalized so that `vᵀ(I + diag μ)v = 1`.
    pub eigenvectors: DMatrix<f64>,
}

impl Inertia {
    /// Eigenvectors with `ν > 0`.
    pub fn unstable_directions(&self) -> Vec<Vec<f64>> {
        (0..self.morse_index)
            .map(|k| self.eigenvectors.column(k).iter().copied().collect())
            .collect()
    }
}

/// Inertia of the pencil `(F'(ū) − diag μ, I + diag μ)`.
pub fn linearization_inertia(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    coeffs: &[f64],
) -> Result<Inertia> {
    if coeffs.len() != d.dim() {
        return Err(invalid("coefficient length does not match the domain"));
    }
    Ok(inertia_of(&Problem::new(d, fam, lambda), coeffs))
}

pub(crate) fn inertia_of(p: &Problem<'_>, coeffs: &[f64]) -> Inertia {
    let m = p.dim();
    let scale: Vec<f64> = p
        .domain
        .eigenvalues()
        .iter()
        .map(|mu| 1.0 / (1.0 + mu).sqrt())
        .collect();
    let mut a = -p.residual_jacobian(coeffs);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] *= scale[i] * scale[j];
        }
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::zeros(m, m);
    for (c, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        // deterministic sign: largest component positive
        let pivot = (0..m)
            .max_by(|&i, &j| col[i].abs().total_cmp(&col[j].abs()))
            .unwrap_or(0);
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            eigenvectors[(i, c)] = sign * col[i] * scale[i];
        }
    }
    Inertia {
        morse_index: eigenvalues.iter().filter(|&&v| v > 0.0).count(),
        margin: eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs())),
        eigenvalues,
        eigenvectors,
    }
}

/// `Σ^p` for a hyperbolic equilibrium with Morse index `p`.
pub fn conley_index(eq: &Equilibrium) -> Result<HomotopyType> {
    if !eq.is_hyperbolic() {
        return Err(Error::NonHyperbolic { margin: eq.margin });
    }
    Ok(HomotopyType::sphere(eq.morse_index))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Converged when `|R(a)| ≤ tol·(1 + |a|)`.
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iterations: 50,
            tol: 1e-10,
        }
    }
}

pub fn newton_solve(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    guess: &[f64],
) -> Result<Equilibrium> {
    newton_solve_with(d, fam, lambda, guess, &NewtonOptions::default())
}

/// Damped Newton on `R(a) = μ∘a − f̂(a)` with backtracking; a singular
/// Jacobian falls back to an SVD least-squares step.
pub fn newton_solve_with(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    guess: &[f64],
    opts: &NewtonOptions,
) -> Result<Equilibrium> {
    if guess.len() != d.dim() {
        return Err(invalid(format!(
            "guess has length {}, expected {}",
            guess.len(),
            d.dim()
        )));
    }
    if guess.iter().any(|a| !a.is_finite()) || !lambda.is_finite() {
        return Err(invalid("guess and λ must be finite"));
    }
    let p = Problem::new(d, fam, lambda);
    let mut x = guess.to_vec();
    let mut r = p.residual(&x);
    let mut rn = norm(&r);
    let mut best = (rn, x.clone());
    let converged = |rn: f64, x: &[f64]| rn <= opts.tol * (1.0 + norm(x));

    for _ in 0..opts.max_iterations {
        if converged(rn, &x) {
            // one polishing step, kept only if it helps
            if rn > 0.0 {
                if let Some(step) = newton_step(&p, &x, &r) {
                    let y: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
                    let yn = norm(&p.residual(&y));
                    if yn < rn {
                        x = y;
                        rn = yn;
                    }
                }
            }
            return Ok(Equilibrium::assemble(&p, x, rn));
        }
        let Some(step) = newton_step(&p, &x, &r) else {
            break;
        };
        let mut t = 1.0;
        let (mut y, mut ry, mut yn);
        loop {
            y = x
                .iter()
                .zip(&step)
                .map(|(a, s)| a + t * s)
                .collect::<Vec<_>>();
            ry = p.residual(&y);
            yn = norm(&ry);
            if (yn.is_finite() && yn <= (1.0 - 1e-4 * t) * rn) || t < 1.0 / 1024.0 {
                break;
            }
            t *= 0.5;
        }
        if !yn.is_finite() {
            break;
        }
        x = y;
        r = ry;
        rn = yn;
        if rn < best.0 {
            best = (rn, x.clone());
        }
    }
    if converged(rn, &x) {
        return Ok(Equilibrium::assemble(&p, x, rn));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        best: Box::new(Equilibrium::assemble(&p, best.1, best.0)),
    })
}

fn newton_step(p: &Problem<'_>, x: &[f64], r: &[f64]) -> Option<Vec<f64>> {
    let jac = p.residual_jacobian(x);
    let rhs = -DVector::from_column_slice(r);
    let step = jac
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .or_else(|| jac.svd(true, true).solve(&rhs, 1e-12).ok())?;
    step.iter()
        .all(|v| v.is_finite())
        .then(|| step.iter().copied().collect())
}

/// Two equilibria are identified when their coefficient distance is below
/// `1e-6·(1 + |a|)`.
pub fn same_equilibrium(a: &[f64], b: &[f64]) -> bool {
    dist(a, b) < 1e-6 * (1.0 + norm(a).max(norm(b)))
}

pub(crate) fn push_unique(list: &mut Vec<Equilibrium>, eq: Equilibrium) -> bool {
    if list.iter().any(|e| same_equilibrium(&e.coeffs, &eq.coeffs)) {
        return false;
    }
    list.push(eq);
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchOptions {
    /// Seed amplitude along kernel directions.
    pub delta: f64,
    /// Offset of the correction parameters `λ* ± dλ`.
    pub dlambda: f64,
    /// `|ν|` below which a pencil eigenvalue counts as zero.
    pub kernel_tol: f64,
    /// Angular directions per kernel dimension when `r ≥ 2`.
    pub directions_per_dim: usize,
    pub seed: u64,
}

impl Default for SwitchOptions {
    fn default() -> Self {
        SwitchOptions {
            delta: 1e-2,
            dlambda: 1e-3,
            kernel_tol: 1e-6,
            directions_per_dim: 8,
            seed: 0,
        }
    }
}

/// Seeds nontrivial equilibria near a non-hyperbolic point `(base, λ*)`.
///
/// Each seed direction `w` is scanned along the ray `base + t·w`, `t ≥ δ`,
/// for a zero of `⟨R, w⟩` at `λ* ± dλ`; the bracketed point is then
/// Newton-corrected at that parameter.
pub fn branch_switch(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda_star: f64,
    base: &[f64],
    opts: &SwitchOptions,
) -> Result<Vec<Equilibrium>> {
    if !(opts.delta > 0.0) {
        return Err(invalid("seed amplitude δ must be positive"));
    }
    if !(opts.dlambda > 0.0) {
        return Err(invalid("dλ must be positive"));
    }
    let inertia = linearization_inertia(d, fam, lambda_star, base)?;
    let kernel: Vec<Vec<f64>> = inertia
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() <= opts.kernel_tol)
        .map(|(k, _)| {
            let v: Vec<f64> = inertia.eigenvectors.column(k).iter().copied().collect();
            let n = norm(&v);
            v.into_iter().map(|x| x / n).collect()
        })
        .collect();
    let r = kernel.len();
    if r == 0 {
        return Err(invalid(format!(
            "no pencil eigenvalue within {} of zero (margin {:e})",
            opts.kernel_tol, inertia.margin
        )));
    }

    let combine = |c: &[f64]| -> Vec<f64> {
        let mut w = vec![0.0; d.dim()];
        for (ck, v) in c.iter().zip(&kernel) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi += ck * vi;
            }
        }
        let n = norm(&w);
        w.into_iter().map(|x| x / n).collect()
    };
    let directions: Vec<Vec<f64>> = match r {
        1 => vec![kernel[0].clone(), kernel[0].iter().map(|x| -x).collect()],
        2 => {
            let n = opts.directions_per_dim * 2;
            (0..n)
                .map(|k| {
                    let th = 2.0 * PI * k as f64 / n as f64;
                    combine(&[th.cos(), th.sin()])
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            (0..opts.directions_per_dim * r)
                .map(|_| {
                    let c: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
                    combine(&c)
                })
                .collect()
        }
    };

    let mut out = Vec::new();
    for lambda in [lambda_star + opts.dlambda, lambda_star - opts.dlambda] {
        let p = Problem::new(d, fam, lambda);
        for w in &directions {
            let Some(t) = ray_root(&p, base, w, opts.delta) else {
                continue;
            };
            let guess: Vec<f64> = base.iter().zip(w).map(|(b, x)| b + t * x).collect();
            let Ok(eq) = newton_solve(d, fam, lambda, &guess) else {
                continue;
            };
            if same_equilibrium(&eq.coeffs, base) {
                continue;
            }
            push_unique(&mut out, eq);
        }
    }
    Ok(out)
}

/// First sign change of `t ↦ ⟨R(base + t·w), w⟩` on a geometric scan
/// starting at `t0`, refined by bisection.
fn ray_root(p: &Problem<'_>, base: &[f64], w: &[f64], t0: f64) -> Option<f64> {
    let h = |t: f64| -> f64 {
        let x: Vec<f64> = base.iter().zip(w).map(|(b, v)| b + t * v).collect();
        p.residual(&x).iter().zip(w).map(|(r, v)| r * v).sum()
    };
    let mut lo = t0;
    let mut hlo = h(lo);
    let (mut hi, mut found) = (lo, false);
    for _ in 0..60 {
        hi = lo * 1.25;
        let hhi = h(hi);
        if !hhi.is_finite() {
            return None;
        }
        if hhi.signum() != hlo.signum() {
            found = true;
            break;
        }
        lo = hi;
        hlo = hhi;
    }
    if !found {
        return None;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let hm = h(mid);
        if hm.signum() == hlo.signum() {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOptions {
    /// Amplitudes `t` for the seeds `±t·e_j`.
    pub amplitudes: Vec<f64>,
    /// Modes used for axis seeds.
    pub axis_modes: usize,
    pub random_starts: usize,
    /// Coefficient box half-width for random starts.
    pub random_scale: f64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            amplitudes: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            axis_modes: 4,
            random_starts: 16,
            random_scale: 2.0,
            seed: 0,
        }
    }
}

/// Multi-start Newton: the origin, axis seeds, random seeds and `extra`
/// guesses. Results are de-duplicated and sorted by V-norm.
pub fn find_equilibria(
    d: &SpectralDomain,
    fam: &NonlinearityFamily,
    lambda: f64,
    extra: &[Vec<f64>],
    opts: &SearchOptions,
) -> Vec<Equilibrium> {
    let m = d.dim();
    let mut guesses: Vec<Vec<f64>> = vec![vec![0.0; m]];
    for j in 0..opts.axis_modes.min(m) {
        for &t in &opts.amplitudes {
            for s in [1.0, -1.0] {
                let mut g = vec![0.0; m];
                g[j] = s * t;
                guesses.push(g);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        guesses.push(
            (0..m)
                .map(|_| rng.random_range(-opts.random_scale..=opts.random_scale))
                .collect(),
        );
    }
    guesses.extend(extra.iter().cloned());

    let mut out = Vec::new();
    for g in &guesses {
        if let Ok(eq) = newton_solve(d, fam, lambda, g) {
            push_unique(&mut out, eq);
        }
    }
    out.sort_by(|a, b| a.v_norm.total_cmp(&b.v_norm));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{DomainShape, Truncation, DEFAULT_QUADRATURE_DEGREE};
    use approx::assert_abs_diff_eq;

    fn line(m: usize) -> SpectralDomain {
        SpectralDomain::new(DomainShape::unit_interval_pi(), m).unwrap()
    }

    fn one_mode(lambda: f64) -> f64 {
        (2.0 * PI / 3.0 * (lambda - 1.0)).sqrt()
    }

    #[test]
    fn newton_examples() {
        let d = line(1);
        let fam = NonlinearityFamily::cubic(-1.0);
        let eq = newton_solve(&d, &fam, 1.1, &[0.0]).unwrap();
        assert_eq!(eq.residual, 0.0);
        let eq = newton_solve(&d, &fam, 1.1, &[0.4]).unwrap();
        assert_abs_diff_eq!(eq.coeffs[0], one_mode(1.1), epsilon = 1e-10);
        assert_abs_diff_eq!(eq.coeffs[0], 0.45765, epsilon = 1e-5);
        let neg = newton_solve(&d, &fam, 1.1, &[-0.4]).unwrap();
        assert_eq!(neg.coeffs[0], -eq.coeffs[0]);
    }

    #[test]
    fn newton_symmetry_higher_dimension() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let g = [0.9, 0.1, -0.2, 0.05, 0.0, 0.01, 0.0, 0.0];
        let neg: Vec<f64> = g.iter().map(|x| -x).collect();
        let a = newton_solve(&d, &fam, 3.0, &g).unwrap();
        let b = newton_solve(&d, &fam, 3.0, &neg).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((x + y).abs() <= 1e-9);
        }
        assert!(a.residual <= 1e-10 * (1.0 + a.h_norm));
    }

    #[test]
    fn newton_reports_nonconvergence() {
        let d = line(2);
        // no nonzero roots: λ < μ_1 with defocusing cubic has only u = 0,
        // but a one-iteration cap stops before reaching it
        let fam = NonlinearityFamily::cubic(-1.0);
        let opts = NewtonOptions {
            max_iterations: 1,
            tol: 1e-10,
        };
        match newton_solve_with(&d, &fam, 0.5, &[3.0, 1.0], &opts) {
            Err(Error::NonConvergence { best, .. }) => assert!(best.residual.is_finite()),
            other => panic!("expected nonconvergence, got {other:?}"),
        }
    }

    #[test]
    fn inertia_examples() {
        let d = line(5);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = [0.0; 5];
        let inn = linearization_inertia(&d, &fam, 2.5, &zero).unwrap();
        assert_eq!(inn.morse_index, 1);
        for (j, mu) in d.eigenvalues().iter().enumerate() {
            assert_abs_diff_eq!(inn.eigenvalues[j], (2.5 - mu) / (1.0 + mu), epsilon = 1e-12);
        }
        let inn = linearization_inertia(&d, &fam, 0.5, &zero).unwrap();
        assert_eq!(inn.morse_index, 0);
        assert_abs_diff_eq!(inn.margin, 0.25, epsilon = 1e-12);

        let d1 = line(1);
        let eq = newton_solve(&d1, &fam, 1.1, &[0.4]).unwrap();
        assert_abs_diff_eq!(eq.eigenvalues[0], -2.0 * 0.1 / 2.0, epsilon = 1e-10);
        assert_eq!(eq.morse_index, 0);
    }

    #[test]
    fn inertia_matches_flow_jacobian() {
        let d = line(6);
        let fam = NonlinearityFamily::cubic(1.0);
        let a = [0.4, -0.3, 0.2, 0.1, 0.0, 0.05];
        let inn = linearization_inertia(&d, &fam, 3.0, &a).unwrap();
        let p = Problem::new(&d, &fam, 3.0);
        let mut jf = -p.residual_jacobian(&a);
        for (i, mu) in d.eigenvalues().iter().enumerate() {
            for j in 0..6 {
                jf[(i, j)] /= 1.0 + mu;
            }
        }
        let mut ev: Vec<f64> = jf.complex_eigenvalues().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (x, y) in ev.iter().zip(&inn.eigenvalues) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn conley_index_examples() {
        let d = line(5);
        let fam = NonlinearityFamily::cubic(-1.0);
        let idx = |l: f64| conley_index(&Equilibrium::trivial(&d, &fam, l));
        assert_eq!(idx(2.5).unwrap(), HomotopyType::sphere(1));
        assert_eq!(idx(0.5).unwrap(), HomotopyType::sphere(0));
        assert!(matches!(idx(4.0), Err(Error::NonHyperbolic { .. })));
    }

    #[test]
    fn trivial_index_law() {
        let d = SpectralDomain::new(DomainShape::square_pi(), 10).unwrap();
        let fam = NonlinearityFamily::cubic(-1.0);
        for l in [1.0, 3.0, 6.0, 9.0, 11.0, 15.0] {
            let expected = d.eigenvalues().iter().filter(|&&mu| mu < l).count();
            assert_eq!(Equilibrium::trivial(&d, &fam, l).morse_index, expected);
        }
    }

    #[test]
    fn branch_switch_examples() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let zero = vec![0.0; 8];
        let seeds = branch_switch(&d, &fam, 1.0, &zero, &SwitchOptions::default()).unwrap();
        assert_eq!(seeds.len(), 2);
        assert_abs_diff_eq!(seeds[0].coeffs[0], -seeds[1].coeffs[0], epsilon = 1e-12);
        assert!(seeds.iter().all(|s| (s.lambda - 1.001).abs() < 1e-15));

        let opts = SwitchOptions {
            delta: 0.0,
            ..Default::default()
        };
        assert!(branch_switch(&d, &fam, 1.0, &zero, &opts).is_err());
        assert!(branch_switch(&d, &fam, 2.5, &zero, &SwitchOptions::default()).is_err());

        let sq = SpectralDomain::with_truncation(
            DomainShape::square_pi(),
            Truncation::Tensor(4, 4),
            DEFAULT_QUADRATURE_DEGREE,
        )
        .unwrap();
        let seeds =
            branch_switch(&sq, &fam, 5.0, &vec![0.0; 16], &SwitchOptions::default()).unwrap();
        let mut classes: Vec<Vec<f64>> = Vec::new();
        for s in &seeds {
            let neg: Vec<f64> = s.coeffs.iter().map(|x| -x).collect();
            if !classes
                .iter()
                .any(|c| same_equilibrium(c, &s.coeffs) || same_equilibrium(c, &neg))
            {
                classes.push(s.coeffs.clone());
            }
        }
        assert!(classes.len() >= 2);
    }

    #[test]
    fn find_equilibria_interval() {
        let d = line(8);
        let fam = NonlinearityFamily::cubic(-1.0);
        let eqs = find_equilibria(&d, &fam, 2.5, &[], &SearchOptions::default());
        assert_eq!(eqs.len(), 3);
        assert!(eqs[0].is_trivial());
        assert_eq!(eqs[1].morse_index, 0);
        let eqs = find_equilibria(&d, &fam, 4.5, &[], &SearchOptions::default());
        assert_eq!(eqs.len(), 5);
    }

    #[test]
    fn m_refinement() {
        let amp = |m: usize| {
            let d = line(m);
            let mut g = vec![0.0; m];
            g[0] = 0.4;
            newton_solve(&d, &NonlinearityFamily::cubic(-1.0), 1.1, &g)
                .unwrap()
                .coeffs[0]
        };
        let (a8, a16) = (amp(8), amp(16));
        assert!(((a16 - a8) / a16).abs() < 0.01);
    }
}
