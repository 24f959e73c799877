//! Discrete Orlicz energy `J(u) = Σ_T |T| G(|∇u|_T)` on piecewise-linear
//! fields, its first variation, and the analytic Signorini benchmark.

use crate::mesh::{Mesh, VertexTag};
use crate::orlicz::NFunction;
use crate::scalar::{cst, Scalar};
use crate::{Error, Result};
use num_complex::Complex;

/// Nodal values of a piecewise-linear field on a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<S> {
    values: Vec<S>,
}

impl<S: Scalar> ScalarField<S> {
    pub fn new(m: &Mesh<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != m.num_vertices() {
            return Err(Error::Shape(format!(
                "field has {} values, mesh has {} vertices",
                values.len(),
                m.num_vertices()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite nodal value at vertex {i}")));
        }
        Ok(Self { values })
    }

    pub fn from_fn(m: &Mesh<S>, f: impl Fn([S; 2]) -> S) -> Self {
        Self {
            values: (0..m.num_vertices()).map(|i| f(m.vertex(i))).collect(),
        }
    }

    pub fn zeros(m: &Mesh<S>) -> Self {
        Self {
            values: vec![S::zero(); m.num_vertices()],
        }
    }

    pub fn check_mesh(&self, m: &Mesh<S>) -> Result<()> {
        if self.values.len() != m.num_vertices() {
            return Err(Error::Shape("field/mesh size mismatch".into()));
        }
        Ok(())
    }

    pub fn value(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn sup_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Value of the linear interpolant at the centroid of triangle `t`.
    pub fn centroid_value(&self, m: &Mesh<S>, t: usize) -> S {
        let [a, b, c] = m.triangle(t);
        (self.values[a] + self.values[b] + self.values[c]) / cst(3.0)
    }
}

/// Per-triangle constant gradients of a piecewise-linear field.
#[derive(Clone, Debug)]
pub struct GradientField<S> {
    grads: Vec<[S; 2]>,
}

impl<S: Scalar> GradientField<S> {
    pub fn compute(m: &Mesh<S>, u: &ScalarField<S>) -> Result<Self> {
        u.check_mesh(m)?;
        let grads = (0..m.num_triangles())
            .map(|t| {
                let tri = m.triangle(t);
                let hg = m.hat_gradients(t);
                let mut g = [S::zero(); 2];
                for k in 0..3 {
                    let v = u.value(tri[k]);
                    g[0] += v * hg[k][0];
                    g[1] += v * hg[k][1];
                }
                g
            })
            .collect();
        Ok(Self { grads })
    }

    pub fn grad(&self, t: usize) -> [S; 2] {
        self.grads[t]
    }

    pub fn grads(&self) -> &[[S; 2]] {
        &self.grads
    }

    pub fn magnitude(&self, t: usize) -> S {
        let [gx, gy] = self.grads[t];
        (gx * gx + gy * gy).sqrt()
    }

    pub fn magnitudes(&self) -> Vec<S> {
        (0..self.grads.len()).map(|t| self.magnitude(t)).collect()
    }
}

/// First-variation coefficients paired with the nodal hat basis.
#[derive(Clone, Debug)]
pub struct Residual<S> {
    values: Vec<S>,
    epsilon: S,
}

impl<S: Scalar> Residual<S> {
    pub fn value(&self, i: usize) -> S {
        self.values[i]
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    pub fn sup_norm(&self) -> S {
        self.values
            .iter()
            .fold(S::zero(), |acc, v| acc.max(v.abs()))
    }
}

/// `J(u) = Σ_T |T| G(|∇u|_T)`.
pub fn energy<S: Scalar>(m: &Mesh<S>, u: &ScalarField<S>, f: &NFunction<S>) -> Result<S> {
    let grad = GradientField::compute(m, u)?;
    let mut total = S::zero();
    for t in 0..m.num_triangles() {
        total += m.triangle_area(t) * f.big_g(grad.magnitude(t));
    }
    Ok(total)
}

/// Assemble the first variation of `J` against every hat function, with the
/// regularized flux coefficient `h_ε(t) = g(√(t²+ε²))/√(t²+ε²)`.
///
/// Entries at Dirichlet-fixed vertices are zeroed: those directions are not
/// admissible variations.
pub fn first_variation<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    f: &NFunction<S>,
    epsilon: S,
) -> Result<Residual<S>> {
    let raw = first_variation_raw(m, u, f, epsilon)?;
    let mut values = raw.values;
    for i in 0..m.num_vertices() {
        if m.tag(i).is_fixed() {
            values[i] = S::zero();
        }
    }
    Ok(Residual { values, epsilon })
}

/// As [`first_variation`] but without zeroing the Dirichlet entries.
pub fn first_variation_raw<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    f: &NFunction<S>,
    epsilon: S,
) -> Result<Residual<S>> {
    let grad = GradientField::compute(m, u)?;
    let mut values = vec![S::zero(); m.num_vertices()];
    for t in 0..m.num_triangles() {
        let [gx, gy] = grad.grad(t);
        let mag = grad.magnitude(t);
        let coeff = m.triangle_area(t) * f.flux_coeff(mag, epsilon);
        let tri = m.triangle(t);
        let hg = m.hat_gradients(t);
        for k in 0..3 {
            values[tri[k]] += coeff * (gx * hg[k][0] + gy * hg[k][1]);
        }
    }
    Ok(Residual { values, epsilon })
}

/// Exact solution of the scalar Signorini problem for `G(t) = t²/2`:
/// `u = Re((x₁ + i x₂)^{3/2})` with the principal branch.
///
/// Contact set `{x₁ ≤ 0, x₂ = 0}`, free boundary point at the origin,
/// `|∇u| = (3/2)|x|^{1/2}`.
pub fn signorini_exact<S: Scalar>(p: [S; 2]) -> (S, [S; 2]) {
    let z = Complex::new(p[0], p[1]);
    if z.norm() == S::zero() {
        return (S::zero(), [S::zero(), S::zero()]);
    }
    let u = z.powf(cst(1.5)).re;
    let fp = z.powf(cst(0.5)) * cst::<S>(1.5);
    (u, [fp.re, -fp.im])
}

/// Linearized coefficient matrix `a^{ij}(∇u)`; the identity at `∇u = 0`.
pub fn aij_coefficients<S: Scalar>(f: &NFunction<S>, grad: [S; 2]) -> [[S; 2]; 2] {
    let [gx, gy] = grad;
    let mag = (gx * gx + gy * gy).sqrt();
    if mag < cst(1e-300) {
        return [[S::one(), S::zero()], [S::zero(), S::one()]];
    }
    let factor = f.g_prime(mag) / (f.g(mag) * mag) - S::one() / (mag * mag);
    let mut a = [[S::zero(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = grad[i] * grad[j] * factor;
            if i == j {
                a[i][j] += S::one();
            }
        }
    }
    a
}

/// Area-weighted recovery of per-triangle gradients to a vertex field.
pub fn recover_vertex_gradients<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
) -> Result<Vec<[S; 2]>> {
    let grad = GradientField::compute(m, u)?;
    let mut acc = vec![[S::zero(); 2]; m.num_vertices()];
    let mut weight = vec![S::zero(); m.num_vertices()];
    for t in 0..m.num_triangles() {
        let area = m.triangle_area(t);
        let g = grad.grad(t);
        for &v in m.triangle(t).iter() {
            acc[v][0] += area * g[0];
            acc[v][1] += area * g[1];
            weight[v] += area;
        }
    }
    for v in 0..m.num_vertices() {
        acc[v][0] = acc[v][0] / weight[v];
        acc[v][1] = acc[v][1] / weight[v];
    }
    Ok(acc)
}

/// A gradient-component vertex field `v = u_{x_m}`, by area-weighted
/// recovery.
pub fn gradient_component_field<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    component: usize,
) -> Result<ScalarField<S>> {
    if component > 1 {
        return Err(Error::Domain(format!("component {component} out of range")));
    }
    let rec = recover_vertex_gradients(m, u)?;
    ScalarField::new(m, rec.iter().map(|g| g[component]).collect())
}

/// Count of vertices where a field is prescribed.
pub fn num_fixed_vertices<S: Scalar>(m: &Mesh<S>) -> usize {
    (0..m.num_vertices())
        .filter(|&i| m.tag(i).is_fixed())
        .count()
}

/// Sup of the per-entry flux magnitudes, used by scale-invariant stopping
/// rules.
pub fn max_flux_magnitude<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    f: &NFunction<S>,
    epsilon: S,
) -> Result<S> {
    let grad = GradientField::compute(m, u)?;
    let mut sup = S::zero();
    for t in 0..m.num_triangles() {
        let mag = grad.magnitude(t);
        sup = sup.max(f.flux_coeff(mag, epsilon) * mag);
    }
    Ok(sup)
}

pub fn is_interior<S: Scalar>(m: &Mesh<S>, i: usize) -> bool {
    m.tag(i) == VertexTag::Interior
}
