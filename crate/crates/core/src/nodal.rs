//! Contact set, relative free boundary, nodal sets and dimension
//! stratification of point clouds.

use crate::energy::{self, ScalarField};
use crate::mesh::Mesh;
use crate::scalar::{cst, to_f64, Scalar};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum PointLabel {
    Contact,
    FreeBoundary,
    Nodal(usize),
}

impl PointLabel {
    pub fn as_str(&self) -> String {
        match self {
            PointLabel::Contact => "CONTACT".into(),
            PointLabel::FreeBoundary => "FREE_BOUNDARY".into(),
            PointLabel::Nodal(k) => format!("NODAL_{k}"),
        }
    }
}

/// Labeled points, each carrying its originating vertex id.
#[derive(Clone, Debug)]
pub struct PointSet<S> {
    pub label: PointLabel,
    /// `(vertex id, coordinates)` pairs.
    pub points: Vec<(usize, [S; 2])>,
}

impl<S: Scalar> PointSet<S> {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn coords(&self) -> Vec<[S; 2]> {
        self.points.iter().map(|(_, p)| *p).collect()
    }
}

/// Contact set and relative free boundary on the thin boundary.
///
/// Contact: thin vertices with `|u| ≤ tol_c`. Free boundary: thin vertices
/// adjacent (in the `x₁` ordering) to a vertex of the opposite
/// classification.
pub fn contact_sets<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    tol_c: S,
) -> Result<(PointSet<S>, PointSet<S>)> {
    u.check_mesh(m)?;
    if !(tol_c > S::zero()) {
        return Err(Error::Domain("tol_c must be positive".into()));
    }
    let thin = m.thin_vertices_ordered();
    let in_contact: Vec<bool> = thin.iter().map(|&i| u.value(i).abs() <= tol_c).collect();

    let contact = PointSet {
        label: PointLabel::Contact,
        points: thin
            .iter()
            .zip(&in_contact)
            .filter(|(_, &c)| c)
            .map(|(&i, _)| (i, m.vertex(i)))
            .collect(),
    };

    let mut fb = Vec::new();
    for w in 0..thin.len().saturating_sub(1) {
        if in_contact[w] != in_contact[w + 1] {
            // both endpoints of the transition edge belong to the closure
            fb.push((thin[w], m.vertex(thin[w])));
            fb.push((thin[w + 1], m.vertex(thin[w + 1])));
        }
    }
    fb.dedup_by_key(|(i, _)| *i);
    let free_boundary = PointSet {
        label: PointLabel::FreeBoundary,
        points: fb,
    };
    Ok((contact, free_boundary))
}

/// Default contact tolerance: `1e-8 · sup|u|`.
pub fn default_contact_tol<S: Scalar>(u: &ScalarField<S>) -> S {
    let sup = u.sup_norm();
    cst::<S>(1e-8) * if sup > S::zero() { sup } else { S::one() }
}

/// Nodal set of order `k`: vertices where all derivatives of order `< k`
/// vanish and some order-`k` derivative does not.
///
/// Only `k = 1` is supported: the fields are piecewise linear and carry one
/// (recovered) derivative. `tol_u` and `tol_grad` are relative to the sup
/// norms of `u` and of the recovered gradient.
///
/// Dirichlet-fixed vertices are excluded: their values are imposed data, so
/// an exact zero there (e.g. a trace that changes sign on the arc) is not a
/// zero of the unknown.
pub fn nodal_set<S: Scalar>(
    m: &Mesh<S>,
    u: &ScalarField<S>,
    k: usize,
    tol_u: S,
    tol_grad: S,
) -> Result<PointSet<S>> {
    if k != 1 {
        return Err(Error::UnsupportedOrder(k));
    }
    u.check_mesh(m)?;
    let rec = energy::recover_vertex_gradients(m, u)?;
    let mags: Vec<S> = rec.iter().map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt()).collect();
    let scale_u = {
        let s = u.sup_norm();
        if s > S::zero() { s } else { S::one() }
    };
    let scale_grad = {
        let s = mags.iter().copied().fold(S::zero(), S::max);
        if s > S::zero() { s } else { S::one() }
    };
    let points = (0..m.num_vertices())
        .filter(|&i| {
            !m.tag(i).is_fixed()
                && u.value(i).abs() <= tol_u * scale_u
                && mags[i] > tol_grad * scale_grad
        })
        .map(|i| (i, m.vertex(i)))
        .collect();
    Ok(PointSet {
        label: PointLabel::Nodal(1),
        points,
    })
}

/// Per-dimension counts from local principal-component analysis.
#[derive(Clone, Debug, serde::Serialize)]
pub struct StratifyReport {
    /// Counts for local dimension 0, 1, 2.
    pub counts: [usize; 3],
    pub dominant: usize,
    pub scale: f64,
}

/// Classify each point's local dimension by the eigenvalue spectrum of the
/// covariance of its neighbors within `scale`; an eigenvalue counts if it is
/// at least `0.1` times the largest.
pub fn stratify<S: Scalar>(points: &[[S; 2]], scale: S) -> Result<StratifyReport> {
    if points.is_empty() {
        return Err(Error::Input("empty point set".into()));
    }
    if !(scale > S::zero()) {
        return Err(Error::Domain("scale must be positive".into()));
    }
    let ratio_threshold = cst::<S>(0.1);
    let mut counts = [0usize; 3];
    for p in points {
        let neigh: Vec<[S; 2]> = points
            .iter()
            .filter(|q| {
                let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                (dx * dx + dy * dy).sqrt() <= scale
            })
            .copied()
            .collect();
        if neigh.len() < 3 {
            counts[0] += 1;
            continue;
        }
        let n = cst::<S>(neigh.len() as f64);
        let mean = neigh.iter().fold([S::zero(); 2], |acc, q| {
            [acc[0] + q[0] / n, acc[1] + q[1] / n]
        });
        let (mut cxx, mut cxy, mut cyy) = (S::zero(), S::zero(), S::zero());
        for q in &neigh {
            let (dx, dy) = (q[0] - mean[0], q[1] - mean[1]);
            cxx += dx * dx / n;
            cxy += dx * dy / n;
            cyy += dy * dy / n;
        }
        // eigenvalues of the 2x2 covariance
        let tr = cxx + cyy;
        let det = cxx * cyy - cxy * cxy;
        let disc = (tr * tr / cst(4.0) - det).max(S::zero()).sqrt();
        let l1 = tr / cst(2.0) + disc;
        let l2 = (tr / cst(2.0) - disc).max(S::zero());
        let dim = if l1 <= S::zero() {
            0
        } else {
            1 + usize::from(l2 >= ratio_threshold * l1)
        };
        counts[dim] += 1;
    }
    let dominant = (0..3).max_by_key(|&d| counts[d]).unwrap();
    Ok(StratifyReport {
        counts,
        dominant,
        scale: to_f64(scale),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_half_disc;
    use crate::solver::{self, BoundaryData, SolveOptions};

    #[test]
    fn contact_trivial_cases() {
        let m = build_half_disc::<f64>(1.0, 0.1).unwrap();

        let ones = ScalarField::from_fn(&m, |_| 1.0);
        let (c, fb) = contact_sets(&m, &ones, default_contact_tol(&ones)).unwrap();
        assert!(c.is_empty());
        assert!(fb.is_empty());

        let contact_all = ScalarField::from_fn(&m, |p| -p[1]);
        let (c, fb) = contact_sets(&m, &contact_all, 1e-8).unwrap();
        assert_eq!(c.len(), m.thin_vertices_ordered().len());
        assert!(fb.is_empty());
    }

    #[test]
    fn signorini_contact_and_free_boundary() {
        let h = 0.05;
        let m = build_half_disc::<f64>(1.0, h).unwrap();
        let f = crate::orlicz::NFunction::power(1.0).unwrap();
        let opts = SolveOptions::default_for(1.0);
        let (u, _) = solver::solve_thin_obstacle(&m, &f, &BoundaryData::SignoriniTrace, &opts)
            .unwrap();
        let (c, fb) = contact_sets(&m, &u, default_contact_tol(&u)).unwrap();
        // contact on the negative side of the thin boundary
        assert!(!c.is_empty());
        for (_, p) in &c.points {
            assert!(p[0] <= 2.0 * h, "contact at x1 = {}", p[0]);
        }
        assert!(!fb.is_empty());
        let min_offset = fb
            .points
            .iter()
            .map(|(_, p)| p[0].abs())
            .fold(f64::INFINITY, f64::min);
        assert!(min_offset <= 2.0 * h, "offset = {min_offset}");
    }

    #[test]
    fn nodal_set_examples() {
        let m = build_half_disc::<f64>(1.0, 0.1).unwrap();

        let zero = ScalarField::zeros(&m);
        let set = nodal_set(&m, &zero, 1, 1e-8, 1e-8).unwrap();
        assert!(set.is_empty());

        let contact_all = ScalarField::from_fn(&m, |p| -p[1]);
        let set = nodal_set(&m, &contact_all, 1, 1e-8, 1e-8).unwrap();
        let thin: Vec<usize> = m.thin_vertices_ordered();
        let ids: Vec<usize> = set.points.iter().map(|(i, _)| *i).collect();
        for &t in &thin {
            assert!(ids.contains(&t));
        }

        assert!(nodal_set(&m, &zero, 2, 1e-8, 1e-8).is_err());
    }

    #[test]
    fn nodal_excludes_positive_part() {
        let m = build_half_disc::<f64>(1.0, 0.1).unwrap();
        let u = ScalarField::from_fn(&m, |p| 0.5 + p[0]);
        let set = nodal_set(&m, &u, 1, 1e-6, 1e-6).unwrap();
        for (i, _) in &set.points {
            assert!(u.value(*i).abs() <= 1e-6 * u.sup_norm());
        }
    }

    #[test]
    fn stratify_examples() {
        // straight segment -> dimension 1
        let seg: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.05, 0.0]).collect();
        let rep = stratify(&seg, 0.3).unwrap();
        assert_eq!(rep.dominant, 1);

        // single isolated point -> dimension 0
        let rep = stratify(&[[0.3, 0.4]], 0.3).unwrap();
        assert_eq!(rep.dominant, 0);

        // 2d patch -> dimension 2
        let mut patch = Vec::new();
        for i in 0..15 {
            for j in 0..15 {
                patch.push([i as f64 * 0.05, j as f64 * 0.05]);
            }
        }
        let rep = stratify(&patch, 0.3).unwrap();
        assert_eq!(rep.dominant, 2);
    }

    #[test]
    fn contact_tol_stability() {
        let m = build_half_disc::<f64>(1.0, 0.05).unwrap();
        let u = ScalarField::from_fn(&m, |p| p[0].max(0.0));
        let tol = 1e-3;
        let (c1, _) = contact_sets(&m, &u, tol).unwrap();
        let (c2, _) = contact_sets(&m, &u, tol / 2.0).unwrap();
        let ids1: std::collections::HashSet<usize> =
            c1.points.iter().map(|(i, _)| *i).collect();
        let ids2: std::collections::HashSet<usize> =
            c2.points.iter().map(|(i, _)| *i).collect();
        let sym_diff = ids1.symmetric_difference(&ids2).count();
        let borderline = m
            .thin_vertices_ordered()
            .iter()
            .filter(|&&i| {
                let a = u.value(i).abs();
                a >= tol / 2.0 && a <= 2.0 * tol
            })
            .count();
        assert!(sym_diff <= borderline);
    }
}
