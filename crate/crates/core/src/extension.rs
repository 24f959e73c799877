//! Even/odd reflection workflows: the thin-obstacle problem on the half-disc
//! against the classical obstacle problem on the even-reflected full disc.

use crate::energy::{self, ScalarField};
use crate::mesh::{self, Mesh, Parity, VertexTag};
use crate::orlicz::NFunction;
use crate::scalar::Scalar;
use crate::solver::{self, BoundaryData, SolveOptions, SolveReport};
use crate::Result;

/// Outcome of the equivalence check between the two formulations.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ExtensionReport<S> {
    pub half_energy: S,
    pub full_energy: S,
    /// Sup-norm discrepancy between the two solutions on the upper half.
    pub discrepancy_sup: S,
    pub half_converged: bool,
    pub full_converged: bool,
}

/// Solve the thin-obstacle problem on the half mesh and the classical
/// obstacle problem (interface constraint `v ≥ 0` on `x₂ = 0` only) on the
/// even-reflected disc, and compare.
pub fn even_extension_solve<S: Scalar>(
    m: &Mesh<S>,
    f: &NFunction<S>,
    phi: &BoundaryData<S>,
    opts: &SolveOptions<S>,
) -> Result<(ExtensionReport<S>, ScalarField<S>, SolveReport<S>)> {
    let (u_half, rep_half) = solver::solve_thin_obstacle(m, f, phi, opts)?;

    let (full, _) = mesh::reflect_to_disc(m, &u_half, Parity::Even)?;
    // Obstacle only on the interface line.
    let psi: Vec<S> = (0..full.num_vertices())
        .map(|i| {
            if full.tag(i) == VertexTag::Thin {
                S::zero()
            } else {
                S::neg_infinity()
            }
        })
        .collect();
    let (u_full, rep_full) = solver::solve_classical_obstacle(&full, f, &psi, phi, opts)?;

    // Compare on the shared (upper) vertex indices.
    let mut disc = S::zero();
    for i in 0..m.num_vertices() {
        disc = disc.max((u_half.value(i) - u_full.value(i)).abs());
    }

    let report = ExtensionReport {
        half_energy: energy::energy(m, &u_half, f)?,
        full_energy: energy::energy(&full, &u_full, f)?,
        discrepancy_sup: disc,
        half_converged: rep_half.converged,
        full_converged: rep_full.converged,
    };
    Ok((report, u_half, rep_half))
}

/// Energy of a half-mesh field and of its even reflection; the latter is
/// exactly twice the former (mirror triangles are congruent).
pub fn reflected_energy_identity<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    f: &NFunction<S>,
) -> Result<(S, S)> {
    let half = energy::energy(m, u, f)?;
    let (full_mesh, full_field) = mesh::reflect_to_disc(m, u, Parity::Even)?;
    let full = energy::energy(&full_mesh, &full_field, f)?;
    Ok((half, full))
}
