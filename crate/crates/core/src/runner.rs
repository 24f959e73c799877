//! Config-driven experiment execution: solve, diagnose, emit reports.
//! Also hosts the verification suite and the mesh-refinement driver.

use std::path::PathBuf;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::energy::{self, GradientField};
use crate::extension;
use crate::io;
use crate::mesh;
use crate::nodal;
use crate::orlicz::{CombineOp, NFunction};
use crate::regularity::{self, IterationVerdict};
use crate::scalar::{cst, to_f64, Scalar};
use crate::solver::{self, BoundaryData, SolveOptions};
use crate::{Error, Result};

/// Diagnostics emitted by an experiment. Every key is always present;
/// diagnostics that were disabled or inapplicable hold `null`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DiagnosticsReport<S> {
    pub converged: bool,
    pub final_energy: S,
    pub kkt: S,
    pub error_linf: Option<S>,
    pub beta_fit: Option<S>,
    pub holder_constant: Option<S>,
    pub free_boundary_offset: Option<S>,
    pub contact_count: Option<usize>,
    pub nodal_dominant_dimension: Option<usize>,
    pub caccioppoli_pass: Option<bool>,
    pub extension_discrepancy: Option<S>,
}

/// Everything a run produced, plus where it was written.
#[derive(Clone, Debug)]
pub struct RunOutcome<S> {
    /// Converged and every enabled check passed.
    pub success: bool,
    pub output_dir: PathBuf,
    pub diagnostics: DiagnosticsReport<S>,
}

/// The known closed-form solution for boundary data whose unconstrained
/// g-harmonic extension already satisfies the thin constraint.
pub fn exact_solution<S: Scalar>(
    data: &BoundaryData<S>,
    radius: S,
) -> Option<impl Fn([S; 2]) -> S + '_> {
    let feasible = match data {
        BoundaryData::SignoriniTrace => true,
        BoundaryData::Constant(c) => *c >= S::zero(),
        // thin trace a x1 + c over [-radius, radius]
        BoundaryData::Linear { a, c, .. } => *c - a.abs() * radius >= cst(-1e-12),
        BoundaryData::HarmonicQuadratic { scale } => *scale >= S::zero(),
    };
    if feasible {
        Some(move |p: [S; 2]| data.eval(p))
    } else {
        None
    }
}

/// Solve per the config, run the enabled diagnostics and write
/// `mesh.csv`, `field.csv`, `solve_report.json`, `diagnostics.json` into the
/// output directory. Outputs are retained even when the solver fails to
/// converge.
pub fn run_experiment<S: Scalar>(cfg: &ExperimentConfig<S>) -> Result<RunOutcome<S>> {
    let m = mesh::build_half_disc(cfg.radius, cfg.h)?;
    let (u, solve_report) =
        solver::solve_thin_obstacle(&m, &cfg.nfunction, &cfg.boundary, &cfg.options)?;

    io::write_text(&cfg.output_dir.join("mesh.csv"), &io::mesh_to_csv(&m))?;
    io::write_text(&cfg.output_dir.join("field.csv"), &io::field_to_csv(&u))?;
    io::write_text(
        &cfg.output_dir.join("solve_report.json"),
        &io::report_to_json(&solve_report)?,
    )?;
    let grad = GradientField::compute(&m, &u)?;
    io::write_text(
        &cfg.output_dir.join("gradient.csv"),
        &io::gradient_to_csv(&grad),
    )?;

    let error_linf = exact_solution(&cfg.boundary, cfg.radius)
        .map(|exact| solver::sup_error_against(&m, &u, exact));

    let mut all_checks_pass = true;

    let contact_tol = cfg
        .contact_tol
        .unwrap_or_else(|| nodal::default_contact_tol(&u));
    let (contact, fb) = nodal::contact_sets(&m, &u, contact_tol)?;
    let free_boundary_offset = fb
        .points
        .iter()
        .map(|(_, p)| p[0].abs())
        .fold(S::infinity(), S::min);
    let free_boundary_offset = if fb.is_empty() {
        None
    } else {
        Some(free_boundary_offset)
    };

    let (beta_fit, holder_constant) = if cfg.diagnostics.holder {
        // center the fit on the free-boundary point nearest the origin
        let center = fb
            .points
            .iter()
            .min_by(|a, b| {
                a.1[0]
                    .abs()
                    .partial_cmp(&b.1[0].abs())
                    .expect("finite coordinates")
            })
            .map(|(_, p)| *p)
            .unwrap_or([S::zero(), S::zero()]);
        let rep = regularity::holder_fit(&m, &u, center, &cfg.holder_radii)?;
        if rep.flags.iter().any(|f| f == "insufficient_radii") {
            all_checks_pass = false;
            (None, None)
        } else {
            (Some(rep.beta), Some(rep.constant))
        }
    } else {
        (None, None)
    };

    let (contact_count, nodal_dominant_dimension) = if cfg.diagnostics.nodal {
        let set = nodal::nodal_set(&m, &u, 1, cst(1e-7), cst(0.05))?;
        let dim = if set.is_empty() {
            None
        } else {
            Some(nodal::stratify(&set.coords(), cst::<S>(8.0) * cfg.h)?.dominant)
        };
        (Some(contact.len()), dim)
    } else {
        (Some(contact.len()), None)
    };

    let caccioppoli_pass = if cfg.diagnostics.caccioppoli {
        let v = energy::gradient_component_field(&m, &u, 0)?;
        let sup_v = v.sup_norm();
        let c1m = S::one().max(u.sup_norm());
        let mut pass = true;
        for frac in [0.25, 0.5, 1.0] {
            let k = cst::<S>(frac) * sup_v;
            if !(k > S::zero()) {
                continue;
            }
            let rep = regularity::caccioppoli_check(
                &m,
                &u,
                &cfg.nfunction,
                0,
                k,
                cst(0.25),
                cst(0.5),
                c1m,
            )?;
            pass &= rep.pass;
        }
        all_checks_pass &= pass;
        Some(pass)
    } else {
        None
    };

    let extension_discrepancy = if cfg.diagnostics.extension_check {
        let (rep, _, _) =
            extension::even_extension_solve(&m, &cfg.nfunction, &cfg.boundary, &cfg.options)?;
        let budget = cst::<S>(2.0) * cfg.options.tol_kkt + cst::<S>(10.0) * cfg.h * cfg.h;
        all_checks_pass &= rep.discrepancy_sup <= budget;
        Some(rep.discrepancy_sup)
    } else {
        None
    };

    let diagnostics = DiagnosticsReport {
        converged: solve_report.converged,
        final_energy: solve_report.final_energy,
        kkt: solve_report.kkt,
        error_linf,
        beta_fit,
        holder_constant,
        free_boundary_offset,
        contact_count,
        nodal_dominant_dimension,
        caccioppoli_pass,
        extension_discrepancy,
    };
    io::write_text(
        &cfg.output_dir.join("diagnostics.json"),
        &io::report_to_json(&diagnostics)?,
    )?;

    let exports = [
        ("contact.csv", io::point_set_to_csv(&contact)),
        ("free_boundary.csv", io::point_set_to_csv(&fb)),
    ];
    for (name, text) in exports {
        io::write_text(&cfg.output_dir.join(name), &text)?;
    }

    Ok(RunOutcome {
        success: solve_report.converged && all_checks_pass,
        output_dir: cfg.output_dir.clone(),
        diagnostics,
    })
}

/// Parallelism cap: the `THREADS` environment variable, default 1.
pub fn thread_cap() -> usize {
    std::env::var("THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Run a batch of experiments, at most [`thread_cap`] concurrently. Each
/// experiment is internally deterministic and writes to its own directory.
pub fn run_batch<S: Scalar>(cfgs: &[ExperimentConfig<S>]) -> Result<Vec<RunOutcome<S>>> {
    let cap = thread_cap();
    let mut outcomes = Vec::with_capacity(cfgs.len());
    for chunk in cfgs.chunks(cap.max(1)) {
        let results: Vec<Result<RunOutcome<S>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|cfg| scope.spawn(move || run_experiment(cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("experiment thread panicked"))
                .collect()
        });
        for r in results {
            outcomes.push(r?);
        }
    }
    Ok(outcomes)
}

/// One row of a mesh-refinement study.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvergenceRow<S> {
    pub h: S,
    pub error_linf: Option<S>,
    pub energy: S,
    pub kkt: S,
    pub converged: bool,
}

/// Re-solve the configured problem on each mesh size and tabulate errors.
pub fn convergence_study<S: Scalar>(
    cfg: &ExperimentConfig<S>,
    hs: &[S],
) -> Result<Vec<ConvergenceRow<S>>> {
    if hs.is_empty() {
        return Err(Error::Input("empty h list".into()));
    }
    let mut rows = Vec::new();
    for &h in hs {
        if !(h > S::zero() && h < cfg.radius) {
            return Err(Error::Config {
                key: "convergence.h".into(),
                reason: format!("h = {} outside (0, radius)", to_f64(h)),
            });
        }
        let m = mesh::build_half_disc(cfg.radius, h)?;
        let (u, rep) =
            solver::solve_thin_obstacle(&m, &cfg.nfunction, &cfg.boundary, &cfg.options)?;
        let error_linf = exact_solution(&cfg.boundary, cfg.radius)
            .map(|exact| solver::sup_error_against(&m, &u, exact));
        rows.push(ConvergenceRow {
            h,
            error_linf,
            energy: rep.final_energy,
            kkt: rep.kkt,
            converged: rep.converged,
        });
    }
    Ok(rows)
}

/// Convergence table as CSV.
pub fn convergence_to_csv<S: Scalar>(rows: &[ConvergenceRow<S>]) -> String {
    let mut out = String::from("h,error_linf,energy,kkt,converged\n");
    for r in rows {
        let err = r
            .error_linf
            .map(|e| to_f64(e).to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            to_f64(r.h),
            err,
            to_f64(r.energy),
            to_f64(r.kkt),
            r.converged
        ));
    }
    out
}

/// Verification depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifySummary {
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

impl VerifySummary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.suites {
            let status = if s.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {}: {}\n", s.name, s.detail));
        }
        out.push_str(if self.all_pass {
            "all suites passed\n"
        } else {
            "FAILURES present\n"
        });
        out
    }
}

/// A randomized instance for the geometric-decay iteration lemma whose
/// hypothesis and threshold hold by construction.
pub fn random_pre2_instance<S: Scalar>(rng: &mut ChaCha8Rng) -> (Vec<S>, S, S, S) {
    let c: f64 = rng.gen_range(0.5..5.0);
    let b: f64 = rng.gen_range(1.5..4.0);
    let alpha: f64 = rng.gen_range(0.5..2.0);
    let threshold = c.powf(-1.0 / alpha) * b.powf(-(1.0 + alpha) / (alpha * alpha));
    let mut psi = vec![threshold * rng.gen_range(0.05..1.0)];
    let len = rng.gen_range(3..12usize);
    for i in 1..len {
        let prev = psi[i - 1];
        let next = c * b.powi(i as i32) * prev.powf(1.0 + alpha) * rng.gen_range(0.05..=1.0);
        if next < 1e-280 {
            break;
        }
        psi.push(next);
    }
    (
        psi.into_iter().map(cst).collect(),
        cst(c),
        cst(b),
        cst(alpha),
    )
}

/// A randomized instance for the interpolation iteration lemma whose
/// hypothesis holds by construction: either `z` constant with
/// `C ≥ (1−η)z`, or `z` arbitrary but uniformly below `C`.
#[allow(clippy::type_complexity)]
pub fn random_pre1_instance<S: Scalar>(
    rng: &mut ChaCha8Rng,
) -> (Vec<(S, S)>, S, S, S, S, S, S) {
    let beta: f64 = rng.gen_range(0.2..2.0);
    let alpha: f64 = beta + rng.gen_range(0.1..2.0);
    let eta: f64 = rng.gen_range(0.1..0.9);
    let a: f64 = rng.gen_range(0.0..5.0);
    let b: f64 = rng.gen_range(0.0..5.0);
    let rho: f64 = rng.gen_range(0.1..0.5);
    let big_r: f64 = rho + rng.gen_range(0.2..1.0);
    let n = rng.gen_range(5..40usize);
    let ts: Vec<f64> = (0..n)
        .map(|i| rho + (big_r - rho) * i as f64 / (n - 1) as f64)
        .collect();

    let (c, zs): (f64, Vec<f64>) = if rng.gen_bool(0.5) {
        let z: f64 = rng.gen_range(0.0..10.0);
        let c = (1.0 - eta) * z * rng.gen_range(1.0..2.0) + 1e-9;
        (c, vec![z; n])
    } else {
        let c: f64 = rng.gen_range(0.1..5.0);
        (c, (0..n).map(|_| c * rng.gen_range(0.0..1.0)).collect())
    };
    let samples = ts
        .into_iter()
        .zip(zs)
        .map(|(t, z)| (cst(t), cst(z)))
        .collect();
    (samples, cst(a), cst(b), cst(c), cst(alpha), cst(beta), cst(eta))
}

fn suite(name: &str, run: impl FnOnce() -> Result<(bool, String)>, out: &mut Vec<SuiteResult>) {
    let (pass, detail) = match run() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    out.push(SuiteResult {
        name: name.into(),
        pass,
        detail,
    });
}

/// Run the built-in verification suites. `Quick` uses coarse meshes and small
/// sample counts; `Full` adds the fine-mesh exponent benchmark.
pub fn verify_suite(level: VerifyLevel) -> VerifySummary {
    let mut suites: Vec<SuiteResult> = Vec::new();
    let (n_lemma, h_solver) = match level {
        VerifyLevel::Quick => (500usize, 0.1f64),
        VerifyLevel::Full => (10_000, 0.05),
    };

    suite(
        "orlicz_algebra",
        || {
            // The power_log ratio approaches delta0 only like 1/ln t, so the
            // grid must reach far into the tails for a 0.02-accurate estimate.
            let grid: Vec<f64> = (0..=240)
                .map(|i| 10f64.powf(-30.0 + 60.0 * i as f64 / 240.0))
                .collect();
            let cases: Vec<(NFunction<f64>, (f64, f64))> = vec![
                (NFunction::power(1.0)?, (1.0, 1.0)),
                (NFunction::power_log(2.0, 1.0, 1.0)?, (2.0, 3.0)),
                (NFunction::double_power(2.0, 3.0, 1.0, 3.0)?, (1.0, 3.0)),
                (
                    NFunction::combine(
                        CombineOp::Product,
                        &NFunction::power(1.0)?,
                        &NFunction::power(2.0)?,
                    )?,
                    (3.0, 3.0),
                ),
                (
                    NFunction::combine(
                        CombineOp::Composition,
                        &NFunction::power(2.0)?,
                        &NFunction::power(3.0)?,
                    )?,
                    (6.0, 6.0),
                ),
            ];
            let mut worst = 0f64;
            for (f, (d0, g0)) in &cases {
                let (ed0, eg0) = crate::orlicz::lieberman_estimate(f, &grid)?;
                worst = worst.max((ed0 - d0).abs()).max((eg0 - g0).abs());
            }
            Ok((worst <= 0.02, format!("max constant deviation {worst:.2e}")))
        },
        &mut suites,
    );

    suite(
        "iteration_pre1",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(41);
            let mut violated = 0usize;
            for _ in 0..n_lemma {
                let (s, a, b, c, al, be, eta) = random_pre1_instance::<f64>(&mut rng);
                match regularity::check_pre1(&s, a, b, c, al, be, eta)? {
                    IterationVerdict::ConclusionViolated => violated += 1,
                    IterationVerdict::HypothesisViolated => {
                        return Ok((false, "generator produced a bad instance".into()))
                    }
                    _ => {}
                }
            }
            Ok((
                violated == 0,
                format!("{violated}/{n_lemma} conclusion violations"),
            ))
        },
        &mut suites,
    );

    suite(
        "iteration_pre2",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut violated = 0usize;
            for _ in 0..n_lemma {
                let (psi, c, b, alpha) = random_pre2_instance::<f64>(&mut rng);
                match regularity::check_pre2(&psi, c, b, alpha)? {
                    IterationVerdict::ConclusionViolated => violated += 1,
                    IterationVerdict::HypothesisViolated | IterationVerdict::ThresholdViolated => {
                        return Ok((false, "generator produced a bad instance".into()))
                    }
                    _ => {}
                }
            }
            Ok((
                violated == 0,
                format!("{violated}/{n_lemma} conclusion violations"),
            ))
        },
        &mut suites,
    );

    suite(
        "comparison_principle",
        || {
            let m = mesh::build_half_disc(1.0, 0.125)?;
            let f = NFunction::power(1.0)?;
            let opts = SolveOptions::default_for(1.0);
            let lo = BoundaryData::Constant(0.5);
            let hi = BoundaryData::Constant(1.0);
            let (ul, _) = solver::solve_thin_obstacle(&m, &f, &lo, &opts)?;
            let (uh, _) = solver::solve_thin_obstacle(&m, &f, &hi, &opts)?;
            let min_gap = (0..m.num_vertices())
                .map(|i| uh.value(i) - ul.value(i))
                .fold(f64::INFINITY, f64::min);
            Ok((min_gap >= -1e-8, format!("min ordering gap {min_gap:.2e}")))
        },
        &mut suites,
    );

    suite(
        "thin_obstacle_symmetry",
        || {
            // Boundary data even in x1 on the mirror-exact mesh must produce
            // a solution even in x1 (the Signorini trace itself is not even).
            let m = mesh::build_half_disc(1.0, h_solver)?;
            let f = NFunction::power(1.0)?;
            let opts = SolveOptions::default_for(1.0);
            let (u, rep) = solver::solve_thin_obstacle(
                &m,
                &f,
                &BoundaryData::HarmonicQuadratic { scale: 1.0 },
                &opts,
            )?;
            if !rep.converged {
                return Ok((false, "solver did not converge".into()));
            }
            let mut asym = 0f64;
            for i in 0..m.num_vertices() {
                let [x, y] = m.vertex(i);
                // partner under x1 -> -x1 exists by mirror-exact construction
                let mut partner = None;
                for j in 0..m.num_vertices() {
                    let [px, py] = m.vertex(j);
                    if (px + x).abs() <= 1e-12 && (py - y).abs() <= 1e-12 {
                        partner = Some(j);
                        break;
                    }
                }
                if let Some(j) = partner {
                    asym = asym.max((u.value(i) - u.value(j)).abs());
                }
            }
            Ok((asym <= 1e-10, format!("max x1-mirror asymmetry {asym:.2e}")))
        },
        &mut suites,
    );

    if level == VerifyLevel::Full {
        suite(
            "signorini_exponent",
            || {
                let m = mesh::build_half_disc(1.0, 0.02)?;
                let f = NFunction::power(1.0)?;
                let opts = SolveOptions::default_for(1.0);
                let (u, rep) =
                    solver::solve_thin_obstacle(&m, &f, &BoundaryData::SignoriniTrace, &opts)?;
                if !rep.converged {
                    return Ok((false, "solver did not converge".into()));
                }
                let radii = [0.25, 0.125, 0.0625];
                let hr = regularity::holder_fit(&m, &u, [0.0, 0.0], &radii)?;
                let ok = hr.beta >= 0.4 && hr.beta <= 0.6;
                Ok((ok, format!("beta_fit = {:.4}", hr.beta)))
            },
            &mut suites,
        );
    }

    let all_pass = suites.iter().all(|s| s.pass);
    VerifySummary { suites, all_pass }
}
