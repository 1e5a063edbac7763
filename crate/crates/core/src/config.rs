//! JSON model definitions.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_with_parameters, CompiledExpr, VARIABLES};
use crate::model::{
    linear_nodes, log_nodes, make_plummer_pair, make_powerlaw_separable, plummer_density_part, AugmentedDensityModel,
    EvaluationGrid, PotentialModel, PowerLawDf, SeparablePart,
};
use crate::quadrature::{Quadrature, QuadratureSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: ModelSpec,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_tolerance() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Builtin { name: Builtin },
    SeparableExpr {
        a: String,
        #[serde(default = "unit_expr")]
        b: String,
    },
    BivariateExpr { p: String },
}

fn unit_expr() -> String {
    "1".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Isotropic Plummer sphere.
    Plummer,
    /// Plummer `A(Ψ)` with `B = (r²)^(-beta0)`.
    PlummerAnisotropic,
    /// `f = coeff · ℰ^energy_exp · L^(2 l2_exp)`.
    PowerLawDf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Plummer,
    /// `Ψ` as an expression in `r2`.
    Expr { psi: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub psi_max: f64,
    pub psi_nodes: usize,
    pub r2_min: f64,
    pub r2_max: f64,
    pub r2_nodes: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            psi_max: 1.0,
            psi_nodes: 64,
            r2_min: 1e-3,
            r2_max: 1e3,
            r2_nodes: 64,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<EvaluationGrid> {
        if self.psi_nodes == 0 || self.r2_nodes == 0 {
            return Err(Error::Config("grid node counts must be positive".into()));
        }
        if !(self.r2_min > 0.0 && self.r2_max >= self.r2_min) {
            return Err(Error::Config("grid needs 0 < r2_min <= r2_max".into()));
        }
        EvaluationGrid::new(
            linear_nodes(self.psi_max, self.psi_nodes),
            log_nodes(self.r2_min, self.r2_max, self.r2_nodes),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Directory for report files; standard output when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self::builtin(Builtin::Plummer)
    }
}

impl ModelConfig {
    pub fn builtin(name: Builtin) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            name: None,
            model: ModelSpec::Builtin { name },
            params: BTreeMap::new(),
            potential: Some(PotentialSpec::Plummer),
            grid: GridSpec::default(),
            quadrature: QuadratureSpec::default(),
            tolerance: default_tolerance(),
            output: OutputSpec::default(),
        }
    }

    pub fn separable(a: &str, b: &str) -> Self {
        Self {
            model: ModelSpec::SeparableExpr {
                a: a.into(),
                b: b.into(),
            },
            potential: None,
            ..Self::default()
        }
    }

    pub fn bivariate(p: &str) -> Self {
        Self {
            model: ModelSpec::BivariateExpr { p: p.into() },
            potential: None,
            ..Self::default()
        }
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(src).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn param(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    fn compile(&self, src: &str) -> Result<CompiledExpr> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let expr = parse_with_parameters(src, &names)?;
        Ok(expr.compile(&self.params)?)
    }

    fn part(&self, src: &str) -> Result<SeparablePart> {
        let expr = parse_with_parameters(src, &self.params.keys().map(String::as_str).collect::<Vec<_>>())?;
        let compiled = expr.compile(&self.params)?;
        if !VARIABLES.iter().any(|v| expr.uses(v)) {
            return Ok(SeparablePart::constant(compiled.evaluate(0.0, 0.0)?).with_label(src));
        }
        Ok(SeparablePart::from_fn(src, move |x| compiled.evaluate_or_nan(x, x)))
    }

    pub fn build_model(&self) -> Result<AugmentedDensityModel> {
        let model = match &self.model {
            ModelSpec::Builtin { name: Builtin::Plummer } => make_plummer_pair().0,
            ModelSpec::Builtin {
                name: Builtin::PlummerAnisotropic,
            } => make_powerlaw_separable(self.param("beta0", 0.0), plummer_density_part())?,
            ModelSpec::Builtin { name: Builtin::PowerLawDf } => PowerLawDf::new(
                self.param("coeff", 1.0),
                self.param("energy_exp", 0.0),
                self.param("l2_exp", 0.0),
            )
            .augmented_density()?,
            ModelSpec::SeparableExpr { a, b } => {
                self.check_variables(a, &["Psi"])?;
                self.check_variables(b, &["r2"])?;
                AugmentedDensityModel::separable(format!("A = {a}, B = {b}"), self.part(a)?, self.part(b)?)
            }
            ModelSpec::BivariateExpr { p } => {
                let compiled = self.compile(p)?;
                AugmentedDensityModel::bivariate(p.clone(), move |psi, r2| compiled.evaluate_or_nan(psi, r2))
            }
        };
        let model = match &self.name {
            Some(name) => model.renamed(name.clone()),
            None => model,
        };
        let mut params: Vec<(String, f64)> = model.parameters().to_vec();
        for (k, v) in &self.params {
            if !params.iter().any(|(name, _)| name == k) {
                params.push((k.clone(), *v));
            }
        }
        Ok(model.with_parameters(params))
    }

    fn check_variables(&self, src: &str, allowed: &[&str]) -> Result<()> {
        let names: Vec<&str> = self.params.keys().map(String::as_str).collect();
        let expr = parse_with_parameters(src, &names)?;
        if let Some(bad) = VARIABLES.iter().find(|v| expr.uses(v) && !allowed.contains(v)) {
            return Err(Error::Config(format!(
                "`{src}` may only depend on {}, found {bad}",
                allowed.join(", ")
            )));
        }
        Ok(())
    }

    pub fn build_potential(&self) -> Result<Option<PotentialModel>> {
        match &self.potential {
            None => Ok(None),
            Some(PotentialSpec::Plummer) => Ok(Some(PotentialModel::plummer())),
            Some(PotentialSpec::Expr { psi }) => {
                self.check_variables(psi, &["r2"])?;
                let compiled = self.compile(psi)?;
                Ok(Some(PotentialModel::from_fn(psi.clone(), move |r| {
                    compiled.evaluate_or_nan(0.0, r * r)
                })))
            }
        }
    }

    pub fn build_grid(&self) -> Result<EvaluationGrid> {
        self.grid.build()
    }

    pub fn build_quadrature(&self) -> Result<Quadrature> {
        Ok(Quadrature::new(self.quadrature)?)
    }
}
