//! Triangulated half-disc domains with tagged boundary parts.
//!
//! The generator is a structured polar fan: ring `i` of `n` carries `3i`
//! angular segments, so triangles stay near-equilateral at every radius and
//! the triangulation is exactly symmetric under `x₁ ↦ −x₁`. Construction is
//! deterministic; no Delaunay step is involved.

use crate::energy::ScalarField;
use crate::scalar::{cst, Scalar};
use crate::{Error, Result};

pub const GEOM_TOL: f64 = 1e-12;

/// Classification of a mesh vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum VertexTag {
    /// Strictly inside the (half-)disc.
    Interior,
    /// On the circular arc, Dirichlet data prescribed.
    DirichletArc,
    /// On the thin boundary `{x₂ = 0, |x₁| < radius}`.
    Thin,
    /// The points `(±radius, 0)`; treated as Dirichlet for constraints.
    RimCorner,
}

impl VertexTag {
    /// Dirichlet data is imposed here (rim corners included).
    pub fn is_fixed(self) -> bool {
        matches!(self, VertexTag::DirichletArc | VertexTag::RimCorner)
    }

    pub fn is_boundary(self) -> bool {
        !matches!(self, VertexTag::Interior)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VertexTag::Interior => "INTERIOR",
            VertexTag::DirichletArc => "DIRICHLET_ARC",
            VertexTag::Thin => "THIN",
            VertexTag::RimCorner => "RIM_CORNER",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "INTERIOR" => Ok(VertexTag::Interior),
            "DIRICHLET_ARC" => Ok(VertexTag::DirichletArc),
            "THIN" => Ok(VertexTag::Thin),
            "RIM_CORNER" => Ok(VertexTag::RimCorner),
            other => Err(Error::Input(format!("unknown vertex tag `{other}`"))),
        }
    }
}

/// A conforming triangulation with per-vertex tags.
#[derive(Clone, Debug)]
pub struct Mesh<S> {
    vertices: Vec<[S; 2]>,
    triangles: Vec<[usize; 3]>,
    tags: Vec<VertexTag>,
    h_target: S,
    radius: S,
    /// Mirror pairing for reflected (full-disc) meshes; identity on the
    /// interface line.
    reflection_map: Option<Vec<usize>>,
    // Cached per-triangle geometry.
    areas: Vec<S>,
    hat_grads: Vec<[[S; 2]; 3]>,
}

/// Triangles of a mesh contained in a ball intersected with the domain.
#[derive(Clone, Debug)]
pub struct BallPatch<S> {
    pub center: [S; 2],
    pub radius: S,
    pub triangle_ids: Vec<usize>,
}

impl<S: Scalar> Mesh<S> {
    /// Assemble a mesh from raw data, computing cached geometry.
    ///
    /// Triangles are reoriented counterclockwise if needed; degenerate
    /// triangles are rejected.
    pub fn from_raw(
        vertices: Vec<[S; 2]>,
        mut triangles: Vec<[usize; 3]>,
        tags: Vec<VertexTag>,
        h_target: S,
        radius: S,
        reflection_map: Option<Vec<usize>>,
    ) -> Result<Self> {
        if tags.len() != vertices.len() {
            return Err(Error::Shape("one tag per vertex required".into()));
        }
        let mut areas = Vec::with_capacity(triangles.len());
        let mut hat_grads = Vec::with_capacity(triangles.len());
        for tri in triangles.iter_mut() {
            for &v in tri.iter() {
                if v >= vertices.len() {
                    return Err(Error::Shape(format!("triangle references vertex {v}")));
                }
            }
            let signed = signed_area(&vertices, *tri);
            if signed < S::zero() {
                tri.swap(1, 2);
            }
            let area = signed.abs();
            if area <= S::zero() {
                return Err(Error::Shape("degenerate triangle".into()));
            }
            areas.push(area);
            hat_grads.push(hat_gradients(&vertices, *tri, area));
        }
        Ok(Self {
            vertices,
            triangles,
            tags,
            h_target,
            radius,
            reflection_map,
            areas,
            hat_grads,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, i: usize) -> [S; 2] {
        self.vertices[i]
    }

    pub fn vertices(&self) -> &[[S; 2]] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn tag(&self, i: usize) -> VertexTag {
        self.tags[i]
    }

    pub fn tags(&self) -> &[VertexTag] {
        &self.tags
    }

    pub fn h_target(&self) -> S {
        self.h_target
    }

    pub fn radius(&self) -> S {
        self.radius
    }

    pub fn reflection_map(&self) -> Option<&[usize]> {
        self.reflection_map.as_deref()
    }

    pub fn triangle_area(&self, t: usize) -> S {
        self.areas[t]
    }

    pub fn total_area(&self) -> S {
        self.areas.iter().copied().sum()
    }

    /// Gradients of the three nodal hat functions on triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [[S; 2]; 3] {
        self.hat_grads[t]
    }

    pub fn centroid(&self, t: usize) -> [S; 2] {
        let [a, b, c] = self.triangles[t];
        let third = S::one() / cst(3.0);
        [
            (self.vertices[a][0] + self.vertices[b][0] + self.vertices[c][0]) * third,
            (self.vertices[a][1] + self.vertices[b][1] + self.vertices[c][1]) * third,
        ]
    }

    /// Vertex indices on the thin boundary, ordered by increasing `x₁`.
    pub fn thin_vertices_ordered(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.num_vertices())
            .filter(|&i| self.tags[i] == VertexTag::Thin)
            .collect();
        v.sort_by(|&a, &b| {
            self.vertices[a][0]
                .partial_cmp(&self.vertices[b][0])
                .expect("finite coordinates")
        });
        v
    }
}

fn signed_area<S: Scalar>(vertices: &[[S; 2]], [a, b, c]: [usize; 3]) -> S {
    let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
    ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])) / cst(2.0)
}

fn hat_gradients<S: Scalar>(vertices: &[[S; 2]], [a, b, c]: [usize; 3], area: S) -> [[S; 2]; 3] {
    let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
    let two_a = cst::<S>(2.0) * area;
    // grad(phi_i) = rot90(opposite edge) / (2 area), with the CCW convention
    [
        [(pb[1] - pc[1]) / two_a, (pc[0] - pb[0]) / two_a],
        [(pc[1] - pa[1]) / two_a, (pa[0] - pc[0]) / two_a],
        [(pa[1] - pb[1]) / two_a, (pb[0] - pa[0]) / two_a],
    ]
}

const SECTORS: usize = 3;

/// Build a structured triangulation of the half-disc `B_radius⁺`.
///
/// `h` controls both the radial spacing and the arc length of angular
/// segments (the two agree up to a factor `π/3`).
pub fn build_half_disc<S: Scalar>(radius: S, h: S) -> Result<Mesh<S>> {
    if !(h > S::zero()) || !(radius > S::zero()) {
        return Err(Error::Resolution("radius and h must be positive".into()));
    }
    if h >= radius {
        return Err(Error::Resolution(format!(
            "mesh size h = {h} must be smaller than radius = {radius}"
        )));
    }
    let n_rings = (radius / h).round().to_usize().unwrap_or(0).max(1);

    let mut vertices: Vec<[S; 2]> = Vec::new();
    let mut tags: Vec<VertexTag> = Vec::new();
    let mut ring_start: Vec<usize> = Vec::with_capacity(n_rings + 1);

    // Center vertex (ring 0).
    ring_start.push(0);
    vertices.push([S::zero(), S::zero()]);
    tags.push(VertexTag::Thin);

    for i in 1..=n_rings {
        ring_start.push(vertices.len());
        let r = radius * cst(i as f64) / cst(n_rings as f64);
        let segs = SECTORS * i;
        for j in 0..=segs {
            // Mirror-exact coordinates: compute the angle from the nearer
            // axis endpoint and negate x for the left half.
            let jm = j.min(segs - j);
            let theta = std::f64::consts::PI * jm as f64 / segs as f64;
            let (mut x, mut y) = (
                r * cst::<S>(theta.cos()),
                r * cst::<S>(theta.sin()),
            );
            if jm == 0 {
                x = r;
                y = S::zero();
            } else if 2 * jm == segs {
                x = S::zero();
                y = r;
            }
            if j > segs - j {
                x = -x;
            }
            vertices.push([x, y]);
            let on_axis = j == 0 || j == segs;
            let tag = if i == n_rings {
                if on_axis {
                    VertexTag::RimCorner
                } else {
                    VertexTag::DirichletArc
                }
            } else if on_axis {
                VertexTag::Thin
            } else {
                VertexTag::Interior
            };
            tags.push(tag);
        }
    }

    let mut triangles: Vec<[usize; 3]> = Vec::new();
    for i in 0..n_rings {
        let outer = i + 1;
        for s in 0..SECTORS {
            // Sector-local node indexing on the two rings.
            let a = |l: usize| {
                if i == 0 {
                    0
                } else {
                    ring_start[i] + s * i + l
                }
            };
            let b = |l: usize| ring_start[outer] + s * outer + l;
            for j in 0..=i {
                triangles.push([b(j), b(j + 1), a(j)]);
            }
            for j in 0..i {
                triangles.push([a(j), b(j + 1), a(j + 1)]);
            }
        }
    }

    Mesh::from_raw(vertices, triangles, tags, h, radius, None)
}

/// Reflection parity across the thin boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// Reflect a half-disc mesh (and a nodal field on it) to the full disc.
///
/// Even parity extends by `ũ(x', −x₂) = u(x', x₂)`; odd parity negates and
/// requires the field to vanish on the thin boundary.
pub fn reflect_to_disc<S: Scalar>(
    m: &Mesh<S>,
    field: &ScalarField<S>,
    parity: Parity,
) -> Result<(Mesh<S>, ScalarField<S>)> {
    field.check_mesh(m)?;
    let tol_zero = cst::<S>(1e-8);
    if parity == Parity::Odd {
        for i in 0..m.num_vertices() {
            if m.vertex(i)[1] == S::zero() && field.value(i).abs() > tol_zero {
                return Err(Error::Parity(format!(
                    "odd reflection requires zero thin-boundary values; |u[{i}]| = {}",
                    field.value(i).abs()
                )));
            }
        }
    }

    let n = m.num_vertices();
    let mut mirror = vec![usize::MAX; n];
    let mut vertices: Vec<[S; 2]> = m.vertices().to_vec();
    let mut tags: Vec<VertexTag> = m.tags().to_vec();
    let mut values: Vec<S> = field.values().to_vec();
    for i in 0..n {
        let [x, y] = m.vertex(i);
        if y == S::zero() {
            mirror[i] = i;
            if parity == Parity::Odd && m.tag(i) == VertexTag::Thin {
                values[i] = S::zero();
            }
        } else {
            mirror[i] = vertices.len();
            vertices.push([x, -y]);
            tags.push(m.tag(i));
            values.push(match parity {
                Parity::Even => field.value(i),
                Parity::Odd => -field.value(i),
            });
        }
    }

    let mut triangles: Vec<[usize; 3]> = m.triangles().to_vec();
    for t in 0..m.num_triangles() {
        let [a, b, c] = m.triangle(t);
        // Mirrored triangle; orientation is fixed up in from_raw.
        triangles.push([mirror[a], mirror[b], mirror[c]]);
    }

    let full_map: Vec<usize> = {
        let mut fm = vec![usize::MAX; vertices.len()];
        for i in 0..n {
            fm[i] = mirror[i];
            fm[mirror[i]] = i;
        }
        fm
    };

    let mesh = Mesh::from_raw(
        vertices,
        triangles,
        tags,
        m.h_target(),
        m.radius(),
        Some(full_map),
    )?;
    let field = ScalarField::new(&mesh, values)?;
    Ok((mesh, field))
}

/// Triangles of `m` whose three vertices lie in the closed ball `B_r(center)`.
pub fn ball_patch<S: Scalar>(m: &Mesh<S>, center: [S; 2], r: S) -> Result<BallPatch<S>> {
    if r < S::zero() {
        return Err(Error::Domain("ball radius must be nonnegative".into()));
    }
    let tol = cst::<S>(GEOM_TOL) * (S::one() + r);
    let inside = |p: [S; 2]| {
        let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
        (dx * dx + dy * dy).sqrt() <= r + tol
    };
    let triangle_ids = (0..m.num_triangles())
        .filter(|&t| m.triangle(t).iter().all(|&v| inside(m.vertex(v))))
        .collect();
    Ok(BallPatch {
        center,
        radius: r,
        triangle_ids,
    })
}

impl<S: Scalar> BallPatch<S> {
    pub fn area(&self, m: &Mesh<S>) -> S {
        self.triangle_ids.iter().map(|&t| m.triangle_area(t)).sum()
    }
}
