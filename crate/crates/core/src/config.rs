//! Experiment configuration: a small INI dialect with `[section]` headers,
//! `key = value` pairs and `#`/`;` comments, validated into typed settings.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::orlicz::NFunction;
use crate::scalar::{cst, Scalar};
use crate::solver::{BoundaryData, SolveOptions};
use crate::{Error, Result};

/// Raw parsed INI: `section -> key -> value`, keys lowercased.
pub type IniMap = BTreeMap<String, BTreeMap<String, String>>;

/// Parse INI text. Duplicate keys within a section are an error; values keep
/// their surrounding whitespace trimmed.
pub fn parse_ini(text: &str) -> Result<IniMap> {
    let mut out: IniMap = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| Error::Input(format!("line {}: unterminated section", lineno + 1)))?
                .trim();
            if name.is_empty() {
                return Err(Error::Input(format!("line {}: empty section name", lineno + 1)));
            }
            section = name.to_lowercase();
            out.entry(section.clone()).or_default();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("line {}: expected key = value", lineno + 1)))?;
        let key = key.trim().to_lowercase();
        if key.is_empty() {
            return Err(Error::Input(format!("line {}: empty key", lineno + 1)));
        }
        if section.is_empty() {
            return Err(Error::Input(format!(
                "line {}: key outside any section",
                lineno + 1
            )));
        }
        let sec = out.entry(section.clone()).or_default();
        if sec.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config {
                key: format!("{section}.{key}"),
                reason: "duplicate key".into(),
            });
        }
    }
    Ok(out)
}

fn get_f64(ini: &IniMap, section: &str, key: &str) -> Result<Option<f64>> {
    match ini.get(section).and_then(|s| s.get(key)) {
        None => Ok(None),
        Some(v) => v.parse::<f64>().map(Some).map_err(|_| Error::Config {
            key: format!("{section}.{key}"),
            reason: format!("expected a number, got `{v}`"),
        }),
    }
}

fn require_f64(ini: &IniMap, section: &str, key: &str) -> Result<f64> {
    get_f64(ini, section, key)?.ok_or_else(|| Error::Config {
        key: format!("{section}.{key}"),
        reason: "missing required key".into(),
    })
}

fn get_str<'a>(ini: &'a IniMap, section: &str, key: &str) -> Option<&'a str> {
    ini.get(section).and_then(|s| s.get(key)).map(|v| v.as_str())
}

/// Which diagnostics an experiment runs.
#[derive(Clone, Copy, Debug)]
pub struct DiagnosticsToggles {
    pub holder: bool,
    pub caccioppoli: bool,
    pub nodal: bool,
    pub extension_check: bool,
}

impl Default for DiagnosticsToggles {
    fn default() -> Self {
        DiagnosticsToggles {
            holder: true,
            caccioppoli: false,
            nodal: true,
            extension_check: false,
        }
    }
}

/// Validated experiment settings.
#[derive(Clone, Debug)]
pub struct ExperimentConfig<S> {
    pub radius: S,
    pub h: S,
    pub nfunction: NFunction<S>,
    pub boundary: BoundaryData<S>,
    pub options: SolveOptions<S>,
    pub contact_tol: Option<S>,
    pub holder_radii: Vec<S>,
    pub diagnostics: DiagnosticsToggles,
    pub output_dir: PathBuf,
    pub seed: u64,
}

impl<S: Scalar> ExperimentConfig<S> {
    /// Validate a parsed INI map into a configuration. Required:
    /// `[domain] h`, `[nfunction] kind`. Everything else defaults.
    pub fn from_ini(ini: &IniMap) -> Result<Self> {
        let radius = get_f64(ini, "domain", "radius")?.unwrap_or(1.0);
        if !(radius > 0.0) {
            return Err(Error::Config {
                key: "domain.radius".into(),
                reason: "must be positive".into(),
            });
        }
        let h = require_f64(ini, "domain", "h")?;
        if !(h > 0.0 && h < radius) {
            return Err(Error::Config {
                key: "domain.h".into(),
                reason: "must satisfy 0 < h < radius".into(),
            });
        }

        let nfunction = Self::nfunction_from_ini(ini)?;
        let boundary = Self::boundary_from_ini(ini)?;

        let data_sup = match &boundary {
            BoundaryData::Constant(c) => c.abs().max(S::one()),
            _ => S::one(),
        };
        let mut options = SolveOptions::default_for(data_sup);
        if let Some(tol) = get_f64(ini, "solver", "tol_kkt")? {
            if !(tol > 0.0) {
                return Err(Error::Config {
                    key: "solver.tol_kkt".into(),
                    reason: "must be positive".into(),
                });
            }
            options = options.with_tol(cst(tol));
        }
        if let Some(iters) = get_f64(ini, "solver", "max_iters")? {
            if iters < 1.0 || iters.fract() != 0.0 {
                return Err(Error::Config {
                    key: "solver.max_iters".into(),
                    reason: "must be a positive integer".into(),
                });
            }
            options.max_iters = iters as usize;
        }

        let contact_tol = match get_f64(ini, "diagnostics", "contact_tol")? {
            Some(t) if t > 0.0 => Some(cst(t)),
            Some(_) => {
                return Err(Error::Config {
                    key: "diagnostics.contact_tol".into(),
                    reason: "must be positive".into(),
                })
            }
            None => None,
        };
        let holder_radii = match get_str(ini, "diagnostics", "holder_radii") {
            None => vec![cst(0.25), cst(0.125), cst(0.0625), cst(0.03125)],
            Some(list) => {
                let mut radii = Vec::new();
                for part in list.split(',') {
                    let r: f64 = part.trim().parse().map_err(|_| Error::Config {
                        key: "diagnostics.holder_radii".into(),
                        reason: format!("bad radius `{}`", part.trim()),
                    })?;
                    if !(r > 0.0 && r <= radius) {
                        return Err(Error::Config {
                            key: "diagnostics.holder_radii".into(),
                            reason: format!("radius {r} outside (0, radius]"),
                        });
                    }
                    radii.push(cst(r));
                }
                radii
            }
        };

        let mut diagnostics = DiagnosticsToggles::default();
        for (key, slot) in [
            ("holder", &mut diagnostics.holder as &mut bool),
            ("caccioppoli", &mut diagnostics.caccioppoli),
            ("nodal", &mut diagnostics.nodal),
            ("extension_check", &mut diagnostics.extension_check),
        ] {
            if let Some(v) = get_str(ini, "diagnostics", key) {
                *slot = match v {
                    "true" | "1" | "yes" | "on" => true,
                    "false" | "0" | "no" | "off" => false,
                    other => {
                        return Err(Error::Config {
                            key: format!("diagnostics.{key}"),
                            reason: format!("expected a boolean, got `{other}`"),
                        })
                    }
                };
            }
        }

        let output_dir = PathBuf::from(get_str(ini, "output", "dir").unwrap_or("out"));
        let seed = match get_str(ini, "output", "seed") {
            None => 0,
            Some(v) => v.parse().map_err(|_| Error::Config {
                key: "output.seed".into(),
                reason: format!("expected an unsigned integer, got `{v}`"),
            })?,
        };

        Ok(ExperimentConfig {
            radius: cst(radius),
            h: cst(h),
            nfunction,
            boundary,
            options,
            contact_tol,
            holder_radii,
            diagnostics,
            output_dir,
            seed,
        })
    }

    fn nfunction_from_ini(ini: &IniMap) -> Result<NFunction<S>> {
        let kind = get_str(ini, "nfunction", "kind").ok_or_else(|| Error::Config {
            key: "nfunction.kind".into(),
            reason: "missing required key".into(),
        })?;
        let names: &[&str] = match kind {
            "power" => &["p"],
            "power_log" => &["a", "b", "c"],
            "double_power" => &["a", "p", "b", "q"],
            other => {
                return Err(Error::Config {
                    key: "nfunction.kind".into(),
                    reason: format!("unknown kind `{other}`"),
                })
            }
        };
        let mut params: Vec<(&str, S)> = Vec::new();
        for &name in names {
            let v = require_f64(ini, "nfunction", name)?;
            params.push((name, cst(v)));
        }
        NFunction::from_catalog(kind, &params).map_err(|e| match e {
            Error::InvalidParameter { name, reason } => Error::Config {
                key: format!("nfunction.{name}"),
                reason,
            },
            other => other,
        })
    }

    fn boundary_from_ini(ini: &IniMap) -> Result<BoundaryData<S>> {
        let kind = get_str(ini, "boundary", "kind").unwrap_or("signorini");
        match kind {
            "signorini" | "signorini_trace" => Ok(BoundaryData::SignoriniTrace),
            "constant" => Ok(BoundaryData::Constant(cst(require_f64(
                ini, "boundary", "value",
            )?))),
            "linear" => Ok(BoundaryData::Linear {
                a: cst(require_f64(ini, "boundary", "a")?),
                b: cst(require_f64(ini, "boundary", "b")?),
                c: cst(require_f64(ini, "boundary", "c")?),
            }),
            "harmonic_quadratic" => Ok(BoundaryData::HarmonicQuadratic {
                scale: cst(get_f64(ini, "boundary", "scale")?.unwrap_or(1.0)),
            }),
            other => Err(Error::Config {
                key: "boundary.kind".into(),
                reason: format!("unknown kind `{other}`"),
            }),
        }
    }

    /// Parse and validate in one step.
    pub fn from_str(text: &str) -> Result<Self> {
        Self::from_ini(&parse_ini(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "\
[domain]
radius = 1.0
h = 0.05

[nfunction]
kind = power
p = 1.0

[boundary]
kind = signorini

[solver]
tol_kkt = 1e-8

[output]
dir = results
seed = 7
";

    #[test]
    fn full_config_parses() {
        let cfg: ExperimentConfig<f64> = ExperimentConfig::from_str(BASE).unwrap();
        assert_eq!(cfg.h, 0.05);
        assert_eq!(cfg.radius, 1.0);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
        assert_eq!(cfg.nfunction.delta0(), 1.0);
        assert!(matches!(cfg.boundary, BoundaryData::SignoriniTrace));
    }

    #[test]
    fn defaults_fill_in() {
        let cfg: ExperimentConfig<f64> =
            ExperimentConfig::from_str("[domain]\nh = 0.1\n[nfunction]\nkind = power\np = 2\n")
                .unwrap();
        assert_eq!(cfg.radius, 1.0);
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.holder_radii.len(), 4);
    }

    #[test]
    fn error_names_offending_key() {
        let text = "\
[domain]
h = 0.05
[nfunction]
kind = power_log
a = 2
b = -1
c = 1
";
        let err = ExperimentConfig::<f64>::from_str(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('b'), "message was: {msg}");

        let err = ExperimentConfig::<f64>::from_str(
            "[domain]\nh = 2.0\n[nfunction]\nkind = power\np = 1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("domain.h"));

        let err = ExperimentConfig::<f64>::from_str(
            "[domain]\nh = 0.1\n[nfunction]\nkind = bogus\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("nfunction.kind"));
    }

    #[test]
    fn ini_parser_details() {
        let ini = parse_ini("# comment\n[a]\nx = 1\n; also comment\n[b]\ny = hello world\n")
            .unwrap();
        assert_eq!(ini["a"]["x"], "1");
        assert_eq!(ini["b"]["y"], "hello world");

        assert!(parse_ini("x = 1\n").is_err()); // key outside section
        assert!(parse_ini("[a\nx = 1\n").is_err()); // unterminated
        assert!(parse_ini("[a]\nx = 1\nx = 2\n").is_err()); // duplicate
        assert!(parse_ini("[a]\nnot a pair\n").is_err());
    }

    #[test]
    fn boundary_variants() {
        let text = "[domain]\nh = 0.1\n[nfunction]\nkind = power\np = 1\n[boundary]\nkind = linear\na = 1\nb = 2\nc = 3\n";
        let cfg: ExperimentConfig<f64> = ExperimentConfig::from_str(text).unwrap();
        assert!(matches!(
            cfg.boundary,
            BoundaryData::Linear { a: 1.0, b: 2.0, c: 3.0 }
        ));

        let text = "[domain]\nh = 0.1\n[nfunction]\nkind = power\np = 1\n[boundary]\nkind = constant\nvalue = 2.5\n";
        let cfg: ExperimentConfig<f64> = ExperimentConfig::from_str(text).unwrap();
        assert!(matches!(cfg.boundary, BoundaryData::Constant(c) if c == 2.5));
    }

    #[test]
    fn solver_overrides() {
        let text = "[domain]\nh = 0.1\n[nfunction]\nkind = power\np = 1\n[solver]\nmax_iters = 500\ntol_kkt = 1e-6\n";
        let cfg: ExperimentConfig<f64> = ExperimentConfig::from_str(text).unwrap();
        assert_eq!(cfg.options.max_iters, 500);
        assert_eq!(cfg.options.tol_kkt, 1e-6);

        let bad = "[domain]\nh = 0.1\n[nfunction]\nkind = power\np = 1\n[solver]\nmax_iters = 2.5\n";
        assert!(ExperimentConfig::<f64>::from_str(bad)
            .unwrap_err()
            .to_string()
            .contains("solver.max_iters"));
    }
}
