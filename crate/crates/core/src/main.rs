use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use thin_obstacle::config::ExperimentConfig;
use thin_obstacle::energy::GradientField;
use thin_obstacle::orlicz::{lieberman_estimate, log_grid, NFunction};
use thin_obstacle::runner::{self, VerifyLevel};
use thin_obstacle::{io, nodal, regularity};

#[derive(Parser)]
#[command(name = "thin-obstacle", about = "Thin-obstacle solver for Orlicz energies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from an INI config and write its report bundle.
    Solve { config: PathBuf },
    /// Recompute diagnostics for a stored mesh and field.
    Analyze {
        mesh: PathBuf,
        field: PathBuf,
        /// Hölder-fit radii, comma separated.
        #[arg(long)]
        radii: Option<String>,
        /// Skip the nodal/contact diagnostics.
        #[arg(long)]
        no_nodal: bool,
    },
    /// Report growth constants for an N-function spec, e.g.
    /// `power:p=2` or `power_log:a=2,b=1,c=1`.
    CheckNfunction { spec: String },
    /// Run the built-in verification suites.
    Verify {
        #[arg(long, default_value = "quick")]
        level: String,
    },
    /// Re-solve a configured problem over several mesh sizes.
    Convergence {
        config: PathBuf,
        /// Mesh sizes, comma separated, e.g. `0.08,0.04,0.02`.
        #[arg(long)]
        h: String,
    },
}

fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{}`", p.trim()))
        })
        .collect()
}

fn parse_nfunction_spec(spec: &str) -> thin_obstacle::Result<NFunction<f64>> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let mut params: Vec<(String, f64)> = Vec::new();
    for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = part.split_once('=').ok_or_else(|| {
            thin_obstacle::Error::Input(format!("expected name=value, got `{part}`"))
        })?;
        let v: f64 = value.trim().parse().map_err(|_| {
            thin_obstacle::Error::Input(format!("bad value for `{}`", name.trim()))
        })?;
        params.push((name.trim().to_string(), v));
    }
    let borrowed: Vec<(&str, f64)> = params.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    NFunction::from_catalog(kind, &borrowed)
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Solve { config } => {
            let text = io::read_text(&config).map_err(|e| e.to_string())?;
            let cfg: ExperimentConfig<f64> =
                ExperimentConfig::from_str(&text).map_err(|e| e.to_string())?;
            let outcome = runner::run_experiment(&cfg).map_err(|e| e.to_string())?;
            println!(
                "{}",
                io::report_to_json(&outcome.diagnostics).map_err(|e| e.to_string())?
            );
            println!("outputs written to {}", outcome.output_dir.display());
            Ok(outcome.success)
        }
        Command::Analyze {
            mesh,
            field,
            radii,
            no_nodal,
        } => {
            let m = io::mesh_from_csv::<f64>(&io::read_text(&mesh).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let u = io::field_from_csv(&m, &io::read_text(&field).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let radii = match radii {
                Some(list) => parse_list(&list)?,
                None => vec![0.5, 0.25, 0.125],
            };
            let grad = GradientField::compute(&m, &u).map_err(|e| e.to_string())?;
            let sup_grad = grad
                .magnitudes()
                .into_iter()
                .fold(0f64, f64::max);
            println!("sup |u|      = {}", u.sup_norm());
            println!("sup |grad u| = {sup_grad}");
            let hr = regularity::holder_fit(&m, &u, [0.0, 0.0], &radii)
                .map_err(|e| e.to_string())?;
            println!(
                "holder fit: beta = {}, C = {}, flags = {:?}",
                hr.beta, hr.constant, hr.flags
            );
            if !no_nodal {
                let tol = nodal::default_contact_tol(&u);
                let (c, fb) = nodal::contact_sets(&m, &u, tol).map_err(|e| e.to_string())?;
                println!("contact vertices       = {}", c.len());
                println!("free-boundary vertices = {}", fb.len());
            }
            Ok(true)
        }
        Command::CheckNfunction { spec } => {
            let f = parse_nfunction_spec(&spec).map_err(|e| e.to_string())?;
            println!("declared: delta0 = {}, g0 = {}", f.delta0(), f.g0());
            // deep tails: slowly varying ratios (e.g. power_log) approach
            // their constants only like 1/ln t
            let grid = log_grid(1e-30, 1e30, 601);
            let (d0, g0) = lieberman_estimate(&f, &grid).map_err(|e| e.to_string())?;
            println!("estimated: delta0 = {d0}, g0 = {g0}");
            let ok = (d0 - f.delta0()).abs() <= 0.02 && (g0 - f.g0()).abs() <= 0.02;
            println!("{}", if ok { "consistent" } else { "MISMATCH" });
            Ok(ok)
        }
        Command::Verify { level } => {
            let level = match level.as_str() {
                "quick" => VerifyLevel::Quick,
                "full" => VerifyLevel::Full,
                other => return Err(format!("unknown level `{other}`")),
            };
            let summary = runner::verify_suite(level);
            print!("{}", summary.render());
            Ok(summary.all_pass)
        }
        Command::Convergence { config, h } => {
            let text = io::read_text(&config).map_err(|e| e.to_string())?;
            let cfg: ExperimentConfig<f64> =
                ExperimentConfig::from_str(&text).map_err(|e| e.to_string())?;
            let hs = parse_list(&h)?;
            let rows = runner::convergence_study(&cfg, &hs).map_err(|e| e.to_string())?;
            let csv = runner::convergence_to_csv(&rows);
            print!("{csv}");
            io::write_text(&cfg.output_dir.join("convergence.csv"), &csv)
                .map_err(|e| e.to_string())?;
            Ok(rows.iter().all(|r| r.converged))
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
