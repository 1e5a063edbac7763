//! The four end-to-end commands. Each returns a rendered report and an exit
//! status; writing files is left to the caller.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{Format, ModelConfig};
use crate::diagnostics::{check_general_conditions, check_separable_conditions, slope_anisotropy_check, ConditionReport};
use crate::error::{Error, Result};
use crate::inversion::{eddington_invert, forward_moment, DEFAULT_ENERGY_NODES};
use crate::model::{linear_nodes, EvaluationGrid, PowerLawDf};
use crate::quadrature::Quadrature;
use crate::transforms::{eq21_lhs, eq21_rhs, Line, TransformField, TransformValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Transform,
    Invert,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Transform => "transform",
            Command::Invert => "invert",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// 0 all satisfied, 2 violations, 3 only undefined entries.
    pub status: i32,
    pub file_name: String,
    pub contents: String,
    /// One-line summaries for standard error.
    pub messages: Vec<String>,
}

pub fn run(command: Command, cfg: &ModelConfig, format: Format) -> Result<Outcome> {
    match command {
        Command::Check => check(cfg, format),
        Command::Transform => transform(cfg, format),
        Command::Invert => invert(cfg, format),
        Command::Validate => validate(cfg, format),
    }
}

fn outcome(command: Command, format: Format, status: i32, contents: String, messages: Vec<String>) -> Outcome {
    Outcome {
        status,
        file_name: format!("{}.{}", command.name(), format.extension()),
        contents,
        messages,
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json value");
    s.push('\n');
    s
}

/// All applicable condition checks.
pub fn check_report(cfg: &ModelConfig) -> Result<ConditionReport> {
    let model = cfg.build_model()?;
    let q = cfg.build_quadrature()?;
    let grid = cfg.build_grid()?;
    let mut report = check_general_conditions(&q, &model, &grid)?;
    if model.is_separable() {
        report = report.merge(check_separable_conditions(&q, &model, &grid)?);
    }
    if let Some(potential) = cfg.build_potential()? {
        report = report.merge(slope_anisotropy_check(&q, &model, &potential, &grid)?);
    }
    Ok(report)
}

pub fn check(cfg: &ModelConfig, format: Format) -> Result<Outcome> {
    let report = check_report(cfg)?;
    let status = report.status();
    let mut messages = vec![format!("{}: {status:?}", report.model)];
    if let Some((id, at)) = report.first_violation() {
        messages.push(format!(
            "first violation: {} at psi = {}, r2 = {}",
            id.name(),
            at.psi.map_or("-".into(), |v| format!("{v}")),
            at.r2.map_or("-".into(), |v| format!("{v}")),
        ));
    }
    let contents = match format {
        Format::Json => pretty(&report.to_json()),
        Format::Csv => report.to_csv(),
        Format::Text => report.to_text(),
    };
    Ok(outcome(Command::Check, format, status.exit_code(), contents, messages))
}

pub fn transform(cfg: &ModelConfig, format: Format) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let field = TransformField::compute(&cfg.build_quadrature()?, &model, &cfg.build_grid()?)?;
    let divergent = field.divergence_mask.iter().filter(|&&d| d).count();
    let messages = vec![format!(
        "{} points, {divergent} with divergent rho_bar, {} negative entries",
        field.values.len(),
        field.negative_entries()
    )];
    let contents = match format {
        Format::Json => pretty(&field.to_json(model.name())),
        Format::Csv => field.to_csv(),
        Format::Text => field.to_csv().replace(',', "\t"),
    };
    Ok(outcome(Command::Transform, format, 0, contents, messages))
}

/// Interior points used for the round trip: a few Ψ nodes away from both
/// ends and two r² nodes.
fn residual_points(grid: &EvaluationGrid) -> Vec<(f64, f64)> {
    let pick = |nodes: &[f64], fractions: &[usize]| {
        let mut out: Vec<f64> = fractions.iter().map(|&k| nodes[(nodes.len() * k / 4).min(nodes.len() - 1)]).collect();
        out.dedup();
        out
    };
    let psi = pick(grid.psi_nodes(), &[1, 2, 3]);
    let r2 = pick(grid.r2_nodes(), &[1, 3]);
    psi.iter().flat_map(|&p| r2.iter().map(move |&r| (p, r))).collect()
}

pub fn invert(cfg: &ModelConfig, format: Format) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let (a, b) = match model.separable_parts() {
        Some(parts) if model.is_isotropic() => parts,
        _ => {
            return Err(Error::Precondition(
                "invert needs an isotropic model (separable with constant B)".into(),
            ))
        }
    };
    let q = cfg.build_quadrature()?;
    let grid = cfg.build_grid()?;
    let density = a.scaled(b.value(1.0));
    let df = eddington_invert(&q, &density, &linear_nodes(cfg.grid.psi_max, DEFAULT_ENERGY_NODES))?;
    let points = residual_points(&grid);
    let residuals = points
        .par_iter()
        .map(|&(psi, r2)| {
            let want = model.evaluate(psi, r2);
            let diff = (forward_moment(&q, &df, 0, 0, psi, r2)? - want).abs();
            Ok(if want != 0.0 { diff / want.abs() } else { diff })
        })
        .collect::<Result<Vec<f64>>>()?;
    let residual = residuals.iter().copied().fold(0.0, f64::max);
    let negative = df.f_values.iter().any(|&f| f < 0.0);
    let status = if negative || !(residual <= cfg.tolerance) { 2 } else { 0 };
    let messages = vec![format!(
        "negative_mass_fraction = {:e}, round-trip residual = {residual:e}",
        df.negative_mass_fraction
    )];
    let contents = match format {
        Format::Json => {
            let mut value = df.to_json();
            let obj = value.as_object_mut().expect("object");
            obj.insert("model".into(), model.name().into());
            obj.insert("roundtrip_residual".into(), residual.into());
            obj.insert("tolerance".into(), cfg.tolerance.into());
            obj.insert("residual_points".into(), json!(points));
            obj.insert("status".into(), status.into());
            pretty(&value)
        }
        Format::Csv => df.to_csv(),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "model: {}", model.name());
            let _ = writeln!(s, "negative_mass_fraction: {:e}", df.negative_mass_fraction);
            let _ = writeln!(s, "roundtrip_residual: {residual:e} (tolerance {:e})", cfg.tolerance);
            let _ = writeln!(s, "f(E) at {} energies; min {:e}", df.e_nodes.len(), df.f_values.iter().copied().fold(f64::INFINITY, f64::min));
            s
        }
    };
    Ok(outcome(Command::Invert, format, status, contents, messages))
}

/// Oracle DFs for the identity suite: `1`, `L²`, `ℰ²`, `ℰL²`.
pub fn oracle_dfs() -> [PowerLawDf; 4] {
    [
        PowerLawDf::new(1.0, 0.0, 0.0),
        PowerLawDf::new(1.0, 0.0, 1.0),
        PowerLawDf::new(1.0, 2.0, 0.0),
        PowerLawDf::new(1.0, 1.0, 1.0),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityResult {
    pub df: String,
    pub line: u8,
    pub max_relative_error: Option<f64>,
    pub worst_psi: Option<f64>,
    pub worst_r2: Option<f64>,
    pub evaluated: usize,
    pub undefined: usize,
    pub passed: bool,
}

/// Both sides of every identity line for each oracle DF over `grid`.
pub fn identity_suite(q: &Quadrature, grid: &EvaluationGrid, tolerance: f64) -> Result<Vec<IdentityResult>> {
    let points = grid.points();
    let mut results = Vec::new();
    for df in oracle_dfs() {
        let model = df.augmented_density()?;
        for line in Line::ALL {
            let errors = points
                .par_iter()
                .map(|&(psi, r2)| {
                    let lhs = eq21_lhs(q, &model, psi, r2, line)?;
                    let rhs = eq21_rhs(q, &df, psi, r2, line)?;
                    Ok(match (lhs, rhs) {
                        (TransformValue::Finite(l), TransformValue::Finite(r)) => {
                            let diff = (l - r).abs();
                            Some(if r != 0.0 { diff / r.abs() } else { diff })
                        }
                        _ => None,
                    })
                })
                .collect::<Result<Vec<Option<f64>>>>()?;
            let mut worst: Option<(f64, usize)> = None;
            for (i, e) in errors.iter().enumerate() {
                if let Some(e) = *e {
                    if worst.is_none_or(|(w, _)| e > w || e.is_nan()) {
                        worst = Some((e, i));
                    }
                }
            }
            let undefined = errors.iter().filter(|e| e.is_none()).count();
            results.push(IdentityResult {
                df: df.label(),
                line: line as u8,
                max_relative_error: worst.map(|w| w.0),
                worst_psi: worst.map(|w| points[w.1].0),
                worst_r2: worst.map(|w| points[w.1].1),
                evaluated: errors.len() - undefined,
                undefined,
                passed: worst.is_none_or(|(w, _)| w <= tolerance),
            });
        }
    }
    Ok(results)
}

pub fn validate(cfg: &ModelConfig, format: Format) -> Result<Outcome> {
    let q = cfg.build_quadrature()?;
    let grid = cfg.build_grid()?;
    let results = identity_suite(&q, &grid, cfg.tolerance)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    let status = if failed == 0 { 0 } else { 2 };
    let messages = vec![format!("{} identity checks, {failed} failed", results.len())];
    let contents = match format {
        Format::Json => pretty(&json!({
            "schema_version": 1,
            "command": "validate",
            "quadrature_nodes": cfg.quadrature.node_count,
            "grid": cfg.grid,
            "tolerance": cfg.tolerance,
            "results": results,
            "status": status,
        })),
        Format::Csv => {
            let mut s = String::from("df,line,max_relative_error,worst_psi,worst_r2,evaluated,undefined,passed\n");
            let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
            for r in &results {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{}",
                    r.df,
                    r.line,
                    opt(r.max_relative_error),
                    opt(r.worst_psi),
                    opt(r.worst_r2),
                    r.evaluated,
                    r.undefined,
                    r.passed
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for r in &results {
                let _ = writeln!(
                    s,
                    "{:<24} line {}  max rel err {:>10}  {}",
                    r.df,
                    r.line,
                    r.max_relative_error.map_or("-".into(), |v| format!("{v:.2e}")),
                    if r.passed { "ok" } else { "FAILED" }
                );
            }
            s
        }
    };
    Ok(outcome(Command::Validate, format, status, contents, messages))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Builtin, GridSpec};

    fn small(mut cfg: ModelConfig) -> ModelConfig {
        cfg.grid = GridSpec {
            psi_nodes: 8,
            r2_nodes: 6,
            r2_min: 1e-2,
            r2_max: 1e2,
            ..GridSpec::default()
        };
        cfg.quadrature.node_count = 128;
        cfg
    }

    #[test]
    fn plummer_check_passes() {
        let mut cfg = small(ModelConfig::default());
        cfg.potential = None;
        let out = check(&cfg, Format::Json).unwrap();
        assert_eq!(out.status, 0, "{}", out.contents);
        assert_eq!(out.file_name, "check.json");
    }

    #[test]
    fn non_monotone_check_fails() {
        let out = check(&small(ModelConfig::separable("Psi*(1-Psi)", "1")), Format::Text).unwrap();
        assert_eq!(out.status, 2);
        assert!(out.messages[1].contains("first violation"));
    }

    #[test]
    fn divergent_bar_is_undefined_only() {
        let out = check(&small(ModelConfig::bivariate("r2^(-0.75)*Psi^4")), Format::Csv).unwrap();
        assert_eq!(out.status, 3);
    }

    #[test]
    fn invert_requires_isotropy() {
        let cfg = small(ModelConfig::bivariate("Psi^2"));
        assert!(matches!(invert(&cfg, Format::Json), Err(Error::Precondition(_))));
        let out = invert(&small(ModelConfig::builtin(Builtin::Plummer)), Format::Json).unwrap();
        assert_eq!(out.status, 0, "{}", out.messages[0]);
    }

    #[test]
    fn validate_small_grid() {
        let mut cfg = small(ModelConfig::default());
        cfg.grid.psi_nodes = 3;
        cfg.grid.r2_nodes = 3;
        let out = validate(&cfg, Format::Csv).unwrap();
        assert_eq!(out.status, 0, "{}", out.contents);
        assert_eq!(out.contents.lines().count(), 17);
    }
}
