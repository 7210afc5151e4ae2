//! Dirichlet Laplacian eigenbasis on intervals and rectangles.
//!
//! Basis functions are orthonormal in `H = L²(Ω)`:
//!
//! * interval `(0, L)`: `φ_k(x) = √(2/L) sin(kπx/L)`, `μ_k = (kπ/L)²`
//! * rectangle `(0, Lx) × (0, Ly)`: `φ_{jk} = (2/√(Lx Ly)) sin(jπx/Lx) sin(kπy/Ly)`,
//!   `μ_{jk} = (jπ/Lx)² + (kπ/Ly)²`
//!
//! A state `u = Σ a_j φ_j` then has `|u|² = Σ a_j²` and `||u||² = Σ μ_j a_j²`
//! (the V-norm `||u||² = ∫|∇u|²`). A V-normalized basis is obtained by
//! scaling each `φ_j` by `1/√μ_j`.
//!
//! Integrals are evaluated with the composite trapezoidal rule on a uniform
//! grid. With `N = 2(p_max + 1)·M` subintervals per axis (`M` the largest
//! retained mode index on that axis) the rule is exact for products of up to
//! `p_max + 1` retained sine modes, which covers `f(u)·φ_j` for polynomial
//! nonlinearities of degree `p_max`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Polynomial degree the quadrature is sized for unless overridden.
pub const DEFAULT_QUADRATURE_DEGREE: usize = 5;

const TIE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainShape {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
}

impl DomainShape {
    pub fn unit_interval_pi() -> Self {
        DomainShape::Interval { length: PI }
    }

    pub fn square_pi() -> Self {
        DomainShape::Rectangle { lx: PI, ly: PI }
    }

    /// Lebesgue measure `|Ω|`.
    pub fn measure(&self) -> f64 {
        match *self {
            DomainShape::Interval { length } => length,
            DomainShape::Rectangle { lx, ly } => lx * ly,
        }
    }
}

/// Which modes are retained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// The `m` lowest modes, ties broken by lexicographic `(j, k)` order.
    Lowest(usize),
    /// All `(j, k)` with `j ≤ nx`, `k ≤ ny` (rectangles only), sorted like
    /// [`Truncation::Lowest`].
    Tensor(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeIndex {
    Interval(usize),
    Rectangle(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub eigenvalue: f64,
    pub index: ModeIndex,
}

/// Eigenbasis, truncation and quadrature grid. Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpectralDomain {
    shape: DomainShape,
    modes: Vec<Mode>,
    eigenvalues: Vec<f64>,
    /// Subintervals per axis (`ny = 1` for intervals).
    nx: usize,
    ny: usize,
    points: Vec<[f64; 2]>,
    weight: f64,
    /// Row-major `m × n_points` basis samples.
    basis: Vec<f64>,
    /// Grid points grouped into orbits of the reflections `x ↦ Lx − x`,
    /// `y ↦ Ly − y`; see [`SpectralDomain::mirror_dot`].
    order: Vec<usize>,
    group_len: Vec<u8>,
}

impl SpectralDomain {
    /// Builds the domain with the `m` lowest modes.
    pub fn new(shape: DomainShape, m: usize) -> Result<Self> {
        Self::with_truncation(shape, Truncation::Lowest(m), DEFAULT_QUADRATURE_DEGREE)
    }

    pub fn with_truncation(
        shape: DomainShape,
        truncation: Truncation,
        p_max: usize,
    ) -> Result<Self> {
        validate_shape(&shape)?;
        if p_max == 0 {
            return Err(invalid("quadrature degree must be positive"));
        }
        let modes = select_modes(&shape, truncation)?;
        let (mx, my) = modes.iter().fold((1, 1), |(mx, my), m| match m.index {
            ModeIndex::Interval(k) => (mx.max(k), my),
            ModeIndex::Rectangle(j, k) => (mx.max(j), my.max(k)),
        });
        let per_axis = |m_axis: usize| 2 * (p_max + 1) * m_axis;
        let (nx, ny) = match shape {
            DomainShape::Interval { .. } => (per_axis(mx), 1),
            DomainShape::Rectangle { .. } => (per_axis(mx), per_axis(my)),
        };

        let (points, weight) = match shape {
            DomainShape::Interval { length } => {
                let h = length / nx as f64;
                let pts = (1..nx).map(|i| [i as f64 * h, 0.0]).collect();
                (pts, h)
            }
            DomainShape::Rectangle { lx, ly } => {
                let hx = lx / nx as f64;
                let hy = ly / ny as f64;
                let mut pts = Vec::with_capacity((nx - 1) * (ny - 1));
                for i in 1..nx {
                    for k in 1..ny {
                        pts.push([i as f64 * hx, k as f64 * hy]);
                    }
                }
                (pts, hx * hy)
            }
        };

        let tx = sine_table(mx, nx);
        let mut basis = Vec::with_capacity(modes.len() * points.len());
        match shape {
            DomainShape::Interval { length } => {
                let c = (2.0 / length).sqrt();
                for mode in &modes {
                    let ModeIndex::Interval(k) = mode.index else {
                        unreachable!()
                    };
                    basis.extend(tx[k - 1].iter().map(|&sx| c * sx));
                }
            }
            DomainShape::Rectangle { lx, ly } => {
                let c = 2.0 / (lx * ly).sqrt();
                let ty = sine_table(my, ny);
                for mode in &modes {
                    let ModeIndex::Rectangle(j, k) = mode.index else {
                        unreachable!()
                    };
                    for &sx in &tx[j - 1] {
                        basis.extend(ty[k - 1].iter().map(|&sy| c * sx * sy));
                    }
                }
            }
        }
        let (order, group_len) = mirror_groups(nx, ny);
        let eigenvalues = modes.iter().map(|m| m.eigenvalue).collect();

        Ok(SpectralDomain {
            shape,
            modes,
            eigenvalues,
            nx,
            ny,
            points,
            weight,
            basis,
            order,
            group_len,
        })
    }

    pub fn shape(&self) -> DomainShape {
        self.shape
    }

    /// Truncation dimension `m`.
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// `μ_j` in ascending order, with multiplicity.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn measure(&self) -> f64 {
        self.shape.measure()
    }

    /// Quadrature subintervals per axis.
    pub fn grid_size(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// Uniform quadrature weight (all nodes are interior).
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Samples of basis function `j` on the grid.
    pub fn basis_row(&self, j: usize) -> &[f64] {
        let n = self.points.len();
        &self.basis[j * n..(j + 1) * n]
    }

    /// Distinct eigenvalues among the retained modes with their multiplicity.
    pub fn distinct_eigenvalues(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &mu in &self.eigenvalues {
            match out.last_mut() {
                Some((v, mult)) if same_eigenvalue(*v, mu) => *mult += 1,
                _ => out.push((mu, 1)),
            }
        }
        out
    }

    /// The `k`-th distinct eigenvalue (1-based) and its multiplicity within
    /// the truncation.
    pub fn distinct_eigenvalue(&self, k: usize) -> Result<(f64, usize)> {
        if k == 0 {
            return Err(invalid("distinct eigenvalue index is 1-based"));
        }
        let distinct = self.distinct_eigenvalues();
        distinct.get(k - 1).copied().ok_or_else(|| {
            Error::OutOfRange(format!(
                "k = {k} exceeds the {} distinct eigenvalues retained",
                distinct.len()
            ))
        })
    }

    fn check_len(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.dim() {
            return Err(invalid(format!(
                "coefficient vector has length {}, expected {}",
                coeffs.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Grid samples of `u = Σ a_j φ_j`.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs)?;
        let mut out = vec![0.0; self.n_points()];
        self.synthesize_into(coeffs, &mut out);
        Ok(out)
    }

    pub(crate) fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (o, &phi) in out.iter_mut().zip(self.basis_row(j)) {
                *o += a * phi;
            }
        }
    }

    /// `⟨w, φ_j⟩_H` for every retained mode.
    pub fn project(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.n_points() {
            return Err(invalid(format!(
                "sample vector has length {}, grid has {} points",
                samples.len(),
                self.n_points()
            )));
        }
        let mut out = vec![0.0; self.dim()];
        self.project_into(samples, &mut out);
        Ok(out)
    }

    pub(crate) fn project_into(&self, samples: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.weight * self.mirror_dot(self.basis_row(j), samples);
        }
    }

    /// `Σ_i x_i y_i` summed orbit by orbit under the reflections of the
    /// domain, so that the sum of a product that is odd under one reflection
    /// is exactly zero.
    pub(crate) fn mirror_dot(&self, x: &[f64], y: &[f64]) -> f64 {
        let t = |i: usize| x[i] * y[i];
        let mut total = 0.0;
        let mut k = 0;
        for &len in &self.group_len {
            let g = &self.order[k..k + len as usize];
            total += match len {
                1 => t(g[0]),
                2 => t(g[0]) + t(g[1]),
                _ => (t(g[0]) + t(g[1])) + (t(g[2]) + t(g[3])),
            };
            k += len as usize;
        }
        total
    }

    /// Quadrature of `∫ w dx`.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        let ones = vec![1.0; samples.len()];
        self.weight * self.mirror_dot(&ones, samples)
    }

    /// Grid samples of `∇u` (second component is zero on intervals). The
    /// grid is interior, so [`SpectralDomain::integrate`] of these samples
    /// misses the boundary; use [`SpectralDomain::dirichlet_integral`].
    pub fn gradient_samples(&self, coeffs: &[f64]) -> Result<Vec<[f64; 2]>> {
        self.check_len(coeffs)?;
        let mut out = vec![[0.0; 2]; self.n_points()];
        for (mode, &a) in self.modes.iter().zip(coeffs) {
            for (o, &p) in out.iter_mut().zip(&self.points) {
                let g = eval_mode_gradient(&self.shape, mode.index, p);
                o[0] += a * g[0];
                o[1] += a * g[1];
            }
        }
        Ok(out)
    }

    /// `∫|∇u|²` by the trapezoid rule on the closed grid, boundary included.
    pub fn dirichlet_integral(&self, coeffs: &[f64]) -> Result<f64> {
        self.check_len(coeffs)?;
        let (lx, ly) = match self.shape {
            DomainShape::Interval { length } => (length, 0.0),
            DomainShape::Rectangle { lx, ly } => (lx, ly),
        };
        let rect = matches!(self.shape, DomainShape::Rectangle { .. });
        let (hx, hy) = (
            lx / self.nx as f64,
            if rect { ly / self.ny as f64 } else { 1.0 },
        );
        let end_weight = |i: usize, n: usize| if i == 0 || i == n { 0.5 } else { 1.0 };
        let y_nodes = if rect { self.ny } else { 0 };
        let mut sum = 0.0;
        for i in 0..=self.nx {
            for k in 0..=y_nodes {
                let p = [i as f64 * hx, k as f64 * hy];
                let mut g = [0.0; 2];
                for (mode, &a) in self.modes.iter().zip(coeffs) {
                    let e = eval_mode_gradient(&self.shape, mode.index, p);
                    g[0] += a * e[0];
                    g[1] += a * e[1];
                }
                let w = end_weight(i, self.nx) * if rect { end_weight(k, self.ny) } else { 1.0 };
                sum += w * (g[0] * g[0] + g[1] * g[1]);
            }
        }
        Ok(sum * hx * if rect { hy } else { 1.0 })
    }

    /// `(Σ_{j>m0} a_j², Σ_{j>m0} μ_j a_j²)`: squared H and V norms of the
    /// part of `u` above the first `m0` modes.
    pub fn tail_norms(&self, coeffs: &[f64], m0: usize) -> Result<(f64, f64)> {
        self.check_len(coeffs)?;
        if m0 > self.dim() {
            return Err(invalid(format!("m0 = {m0} exceeds m = {}", self.dim())));
        }
        let h = coeffs[m0..].iter().map(|a| a * a).sum();
        let v = coeffs[m0..]
            .iter()
            .zip(&self.eigenvalues[m0..])
            .map(|(a, mu)| mu * a * a)
            .sum();
        Ok((h, v))
    }

    /// `|u|²`.
    pub fn h_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs.iter().map(|a| a * a).sum()
    }

    /// `||u||²`.
    pub fn v_norm_sq(&self, coeffs: &[f64]) -> f64 {
        coeffs
            .iter()
            .zip(&self.eigenvalues)
            .map(|(a, mu)| mu * a * a)
            .sum()
    }

    pub fn v_norm(&self, coeffs: &[f64]) -> f64 {
        self.v_norm_sq(coeffs).sqrt()
    }

    pub fn h_norm(&self, coeffs: &[f64]) -> f64 {
        self.h_norm_sq(coeffs).sqrt()
    }

    /// Maximum of `|u|` over the quadrature grid.
    pub fn sup_norm(&self, coeffs: &[f64]) -> f64 {
        let mut u = vec![0.0; self.n_points()];
        self.synthesize_into(coeffs, &mut u);
        u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn same_eigenvalue(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}

fn validate_shape(shape: &DomainShape) -> Result<()> {
    let ok = |v: f64| v.is_finite() && v > 0.0;
    match *shape {
        DomainShape::Interval { length } if !ok(length) => Err(invalid(format!(
            "interval length must be positive, got {length}"
        ))),
        DomainShape::Rectangle { lx, ly } if !ok(lx) || !ok(ly) => Err(invalid(format!(
            "rectangle sides must be positive, got {lx} × {ly}"
        ))),
        _ => Ok(()),
    }
}

fn select_modes(shape: &DomainShape, truncation: Truncation) -> Result<Vec<Mode>> {
    match (*shape, truncation) {
        (_, Truncation::Lowest(0)) => Err(invalid("truncation dimension m must be positive")),
        (DomainShape::Interval { length }, Truncation::Lowest(m)) => Ok((1..=m)
            .map(|k| Mode {
                eigenvalue: (k as f64 * PI / length).powi(2),
                index: ModeIndex::Interval(k),
            })
            .collect()),
        (DomainShape::Interval { .. }, Truncation::Tensor(..)) => {
            Err(invalid("tensor truncation requires a rectangle"))
        }
        (DomainShape::Rectangle { lx, ly }, trunc) => {
            let (jmax, kmax, take) = match trunc {
                Truncation::Lowest(m) => (m, m, m),
                Truncation::Tensor(nx, ny) => {
                    if nx == 0 || ny == 0 {
                        return Err(invalid("tensor truncation needs nx, ny ≥ 1"));
                    }
                    (nx, ny, nx * ny)
                }
            };
            let mut all = Vec::with_capacity(jmax * kmax);
            for j in 1..=jmax {
                for k in 1..=kmax {
                    all.push(Mode {
                        eigenvalue: (j as f64 * PI / lx).powi(2) + (k as f64 * PI / ly).powi(2),
                        index: ModeIndex::Rectangle(j, k),
                    });
                }
            }
            all.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
            // Re-sort runs of numerically equal eigenvalues by (j, k).
            let mut start = 0;
            while start < all.len() {
                let mut end = start + 1;
                while end < all.len() && same_eigenvalue(all[start].eigenvalue, all[end].eigenvalue)
                {
                    end += 1;
                }
                all[start..end].sort_by_key(|m| match m.index {
                    ModeIndex::Rectangle(j, k) => (j, k),
                    ModeIndex::Interval(k) => (k, 0),
                });
                start = end;
            }
            all.truncate(take);
            Ok(all)
        }
    }
}

/// `sin(kπ i/n)` for `k = 1..=m`, `i = 1..n`, built on the first half of
/// the grid and reflected with the sign `(−1)^{k+1}`, so that the mirror
/// symmetry of each mode holds exactly in floating point.
fn sine_table(m: usize, n: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|k| {
            let mut row = vec![0.0; n - 1];
            for i in 1..n {
                row[i - 1] = if 2 * i < n {
                    (PI * (k * i) as f64 / n as f64).sin()
                } else if 2 * i == n {
                    match k % 4 {
                        1 => 1.0,
                        3 => -1.0,
                        _ => 0.0,
                    }
                } else if k % 2 == 1 {
                    row[n - i - 1]
                } else {
                    -row[n - i - 1]
                };
            }
            row
        })
        .collect()
}

/// Orbits of the grid points under the reflections, listed as
/// `[(i, l), (i', l), (i, l'), (i', l')]` with duplicates dropped.
fn mirror_groups(nx: usize, ny: usize) -> (Vec<usize>, Vec<u8>) {
    let cols = ny.saturating_sub(1).max(1);
    let index = |i: usize, l: usize| (i - 1) * cols + (l - 1);
    let (mut order, mut lens) = (Vec::new(), Vec::new());
    let ls: Vec<usize> = if ny == 1 {
        vec![1]
    } else {
        (1..=ny / 2).collect()
    };
    for i in 1..=nx / 2 {
        for &l in &ls {
            let (ix, ly) = (nx - i, if ny == 1 { 1 } else { ny - l });
            let before = order.len();
            order.push(index(i, l));
            if ix != i {
                order.push(index(ix, l));
            }
            if ly != l {
                order.push(index(i, ly));
                if ix != i {
                    order.push(index(ix, ly));
                }
            }
            lens.push((order.len() - before) as u8);
        }
    }
    (order, lens)
}

#[cfg(test)]
fn eval_mode(shape: &DomainShape, index: ModeIndex, p: [f64; 2]) -> f64 {
    match (*shape, index) {
        (DomainShape::Interval { length }, ModeIndex::Interval(k)) => {
            (2.0 / length).sqrt() * (k as f64 * PI * p[0] / length).sin()
        }
        (DomainShape::Rectangle { lx, ly }, ModeIndex::Rectangle(j, k)) => {
            2.0 / (lx * ly).sqrt()
                * (j as f64 * PI * p[0] / lx).sin()
                * (k as f64 * PI * p[1] / ly).sin()
        }
        _ => unreachable!("mode index does not match domain shape"),
    }
}

fn eval_mode_gradient(shape: &DomainShape, index: ModeIndex, p: [f64; 2]) -> [f64; 2] {
    match (*shape, index) {
        (DomainShape::Interval { length }, ModeIndex::Interval(k)) => {
            let w = k as f64 * PI / length;
            [(2.0 / length).sqrt() * w * (w * p[0]).cos(), 0.0]
        }
        (DomainShape::Rectangle { lx, ly }, ModeIndex::Rectangle(j, k)) => {
            let c = 2.0 / (lx * ly).sqrt();
            let wx = j as f64 * PI / lx;
            let wy = k as f64 * PI / ly;
            [
                c * wx * (wx * p[0]).cos() * (wy * p[1]).sin(),
                c * wy * (wx * p[0]).sin() * (wy * p[1]).cos(),
            ]
        }
        _ => unreachable!("mode index does not match domain shape"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn interval(m: usize) -> SpectralDomain {
        SpectralDomain::new(DomainShape::unit_interval_pi(), m).unwrap()
    }

    #[test]
    fn interval_spectrum() {
        let d = interval(3);
        assert_eq!(d.eigenvalues().len(), 3);
        for (mu, want) in d.eigenvalues().iter().zip([1.0, 4.0, 9.0]) {
            assert_abs_diff_eq!(*mu, want, epsilon = 1e-12);
        }
        let d = SpectralDomain::new(DomainShape::Interval { length: 2.0 * PI }, 2).unwrap();
        assert_abs_diff_eq!(d.eigenvalues()[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(d.eigenvalues()[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn square_spectrum_and_ties() {
        let d = SpectralDomain::new(DomainShape::square_pi(), 4).unwrap();
        let mus: Vec<f64> = d.eigenvalues().to_vec();
        for (mu, want) in mus.iter().zip([2.0, 5.0, 5.0, 8.0]) {
            assert_abs_diff_eq!(*mu, want, epsilon = 1e-12);
        }
        assert_eq!(d.modes()[1].index, ModeIndex::Rectangle(1, 2));
        assert_eq!(d.modes()[2].index, ModeIndex::Rectangle(2, 1));
        let (v, mult) = d.distinct_eigenvalue(2).unwrap();
        assert_abs_diff_eq!(v, 5.0, epsilon = 1e-12);
        assert_eq!(mult, 2);
        assert_eq!(d.distinct_eigenvalue(1).unwrap().1, 1);
    }

    #[test]
    fn distinct_eigenvalue_errors() {
        let d = interval(3);
        let (v, mult) = d.distinct_eigenvalue(2).unwrap();
        assert_abs_diff_eq!(v, 4.0, epsilon = 1e-12);
        assert_eq!(mult, 1);
        assert!(matches!(
            d.distinct_eigenvalue(4),
            Err(Error::OutOfRange(_))
        ));
        assert!(matches!(
            d.distinct_eigenvalue(0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn invalid_domains() {
        assert!(SpectralDomain::new(DomainShape::Interval { length: 0.0 }, 3).is_err());
        assert!(SpectralDomain::new(DomainShape::Rectangle { lx: 1.0, ly: -1.0 }, 3).is_err());
        assert!(SpectralDomain::new(DomainShape::unit_interval_pi(), 0).is_err());
        assert!(SpectralDomain::with_truncation(
            DomainShape::unit_interval_pi(),
            Truncation::Tensor(2, 2),
            5
        )
        .is_err());
    }

    #[test]
    fn basis_table_matches_direct_evaluation() {
        for d in [
            interval(7),
            SpectralDomain::with_truncation(
                DomainShape::Rectangle { lx: 2.0, ly: 3.0 },
                Truncation::Tensor(3, 4),
                3,
            )
            .unwrap(),
        ] {
            for (j, mode) in d.modes().iter().enumerate() {
                for (&v, &p) in d.basis_row(j).iter().zip(d.points()) {
                    assert_abs_diff_eq!(v, eval_mode(&d.shape(), mode.index, p), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn reflection_odd_integrands_vanish_exactly() {
        let d = interval(8);
        let odd = [0.0, 0.7, 0.0, -0.2, 0.0, 0.05, 0.0, 0.01];
        let u = d.synthesize(&odd).unwrap();
        let cube: Vec<f64> = u.iter().map(|v| v * v * v).collect();
        let c = d.project(&cube).unwrap();
        for k in (0..8).step_by(2) {
            assert_eq!(c[k], 0.0);
        }
        assert_eq!(d.integrate(&u), 0.0);

        let sq = SpectralDomain::new(DomainShape::square_pi(), 12).unwrap();
        let mut a = vec![0.0; 12];
        for (k, m) in sq.modes().iter().enumerate() {
            if let ModeIndex::Rectangle(_, ky) = m.index {
                if ky % 2 == 0 {
                    a[k] = 0.3 / (k + 1) as f64;
                }
            }
        }
        let u = sq.synthesize(&a).unwrap();
        let cube: Vec<f64> = u.iter().map(|v| v * v * v).collect();
        let c = sq.project(&cube).unwrap();
        for (k, m) in sq.modes().iter().enumerate() {
            if let ModeIndex::Rectangle(_, ky) = m.index {
                if ky % 2 == 1 {
                    assert_eq!(c[k], 0.0, "mode {:?}", m.index);
                }
            }
        }
    }

    #[test]
    fn tensor_truncation_is_block() {
        let d =
            SpectralDomain::with_truncation(DomainShape::square_pi(), Truncation::Tensor(4, 4), 5)
                .unwrap();
        assert_eq!(d.dim(), 16);
        assert_abs_diff_eq!(*d.eigenvalues().last().unwrap(), 32.0, epsilon = 1e-12);
        let lowest = SpectralDomain::new(DomainShape::square_pi(), 16).unwrap();
        assert!(lowest
            .modes()
            .iter()
            .any(|m| m.index == ModeIndex::Rectangle(1, 5)));
    }

    #[test]
    fn synthesize_first_mode() {
        let d = interval(4);
        let zero = d.synthesize(&[0.0; 4]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let u = d.synthesize(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        for (v, p) in u.iter().zip(d.points()) {
            assert_abs_diff_eq!(*v, (2.0 / PI).sqrt() * p[0].sin(), epsilon = 1e-14);
        }
        assert!(d.synthesize(&[1.0]).is_err());
    }

    #[test]
    fn project_examples() {
        let d = interval(4);
        let phi2 = d.basis_row(1).to_vec();
        let a = d.project(&phi2).unwrap();
        for (j, v) in a.iter().enumerate() {
            assert_abs_diff_eq!(*v, if j == 1 { 1.0 } else { 0.0 }, epsilon = 1e-10);
        }
        // (2/π)² ∫ sin⁴ = (2/π)²·3π/8
        let cube: Vec<f64> = d.basis_row(0).iter().map(|p| p * p * p).collect();
        let a = d.project(&cube).unwrap();
        assert_abs_diff_eq!(a[0], 3.0 / (2.0 * PI), epsilon = 1e-12);
        let z = d.project(&vec![0.0; d.n_points()]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(d.project(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn tail_norm_examples() {
        let d = interval(4);
        let a = [0.3, -0.2, 0.5, 0.1];
        assert_eq!(d.tail_norms(&a, 4).unwrap(), (0.0, 0.0));
        let (h, v) = d.tail_norms(&a, 0).unwrap();
        assert_abs_diff_eq!(h, d.h_norm_sq(&a), epsilon = 1e-15);
        assert_abs_diff_eq!(v, d.v_norm_sq(&a), epsilon = 1e-15);
        let (h, v) = d.tail_norms(&[0.0, 0.0, 1.0, 0.0], 2).unwrap();
        assert_abs_diff_eq!(h, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v, 9.0, epsilon = 1e-12);
        assert!(d.tail_norms(&a, 5).is_err());
    }
}
