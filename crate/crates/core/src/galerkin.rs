//! The Galerkin problem `μ_j a_j = ⟨f_λ(u), φ_j⟩` evaluated by quadrature.

use nalgebra::{DMatrix, DVector};

use crate::nonlinearity::NonlinearityFamily;
use crate::spectral::SpectralDomain;

/// A domain, a family and a parameter value.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub domain: &'a SpectralDomain,
    pub family: &'a NonlinearityFamily,
    pub lambda: f64,
}

impl<'a> Problem<'a> {
    pub fn new(domain: &'a SpectralDomain, family: &'a NonlinearityFamily, lambda: f64) -> Self {
        Problem {
            domain,
            family,
            lambda,
        }
    }

    pub fn at(&self, lambda: f64) -> Self {
        Problem { lambda, ..*self }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn samples(&self, a: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.domain.n_points()];
        self.domain.synthesize_into(a, &mut u);
        u
    }

    /// `f̂_j = ⟨f_λ(u), φ_j⟩`.
    pub fn nonlinear_coeffs(&self, a: &[f64]) -> Vec<f64> {
        let mut u = self.samples(a);
        for v in &mut u {
            *v = self.family.value(self.lambda, *v);
        }
        let mut out = vec![0.0; self.dim()];
        self.domain.project_into(&u, &mut out);
        out
    }

    /// `R(a) = μ∘a − f̂(a)`, the gradient of `J` in coefficients.
    pub fn residual(&self, a: &[f64]) -> Vec<f64> {
        let mut r = self.nonlinear_coeffs(a);
        for ((r, &a), &mu) in r.iter_mut().zip(a).zip(self.domain.eigenvalues()) {
            *r = mu * a - *r;
        }
        r
    }

    /// `F'_{ij} = ∫ f_λ'(u) φ_i φ_j`.
    pub fn nonlinear_jacobian(&self, a: &[f64]) -> DMatrix<f64> {
        let m = self.dim();
        let d = self.domain;
        let mut w = self.samples(a);
        for v in &mut w {
            *v = self.family.derivative(self.lambda, *v) * d.weight();
        }
        let mut jac = DMatrix::zeros(m, m);
        let mut scratch = vec![0.0; w.len()];
        for i in 0..m {
            for ((s, &p), &wv) in scratch.iter_mut().zip(d.basis_row(i)).zip(&w) {
                *s = p * wv;
            }
            for j in i..m {
                let v = d.mirror_dot(&scratch, d.basis_row(j));
                jac[(i, j)] = v;
                jac[(j, i)] = v;
            }
        }
        jac
    }

    /// `∂R/∂a = diag(μ) − F'`.
    pub fn residual_jacobian(&self, a: &[f64]) -> DMatrix<f64> {
        let mut j = -self.nonlinear_jacobian(a);
        for (k, &mu) in self.domain.eigenvalues().iter().enumerate() {
            j[(k, k)] += mu;
        }
        j
    }

    /// `∂R/∂λ = −⟨∂_λ f_λ(u), φ_j⟩`.
    pub fn residual_dlambda(&self, a: &[f64]) -> DVector<f64> {
        let mut u = self.samples(a);
        for v in &mut u {
            *v = -self.family.dlambda(self.lambda, *v);
        }
        let mut out = vec![0.0; self.dim()];
        self.domain.project_into(&u, &mut out);
        DVector::from_vec(out)
    }

    /// `J(u) = ½||u||² − ∫F_λ(u)`.
    pub fn energy(&self, a: &[f64]) -> f64 {
        let mut u = self.samples(a);
        for v in &mut u {
            *v = self.family.antiderivative(self.lambda, *v);
        }
        0.5 * self.domain.v_norm_sq(a) - self.domain.integrate(&u)
    }

    /// `ȧ_j = (f̂_j − μ_j a_j)/(1 + μ_j)`.
    pub fn velocity(&self, a: &[f64]) -> Vec<f64> {
        let mut v = self.residual(a);
        for (v, &mu) in v.iter_mut().zip(self.domain.eigenvalues()) {
            *v = -*v / (1.0 + mu);
        }
        v
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
