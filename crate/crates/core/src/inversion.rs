//! Isotropic (Eddington) inversion and the forward moment integrator used to
//! check it.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::AnisotropyProfile;
use crate::error::{Error, Result};
use crate::model::{linear_nodes, AugmentedDensityModel, DistributionFunction, EvaluationGrid, PotentialModel, SeparablePart};
use crate::quadrature::Quadrature;

/// Number of energy samples kept for reporting.
pub const DEFAULT_ENERGY_NODES: usize = 128;

/// `f(ℰ)` recovered from `A(Ψ)`.
///
/// Sampled on `e_nodes` for output; [`DistributionFunction::evaluate`]
/// recomputes the inversion integral at the requested energy rather than
/// interpolating the samples.
#[derive(Debug, Clone)]
pub struct RecoveredDF {
    pub e_nodes: Vec<f64>,
    pub f_values: Vec<f64>,
    pub negative_mass_fraction: f64,
    a: SeparablePart,
    quadrature: Quadrature,
}

#[derive(Serialize)]
struct Sample {
    energy: f64,
    f: f64,
}

impl RecoveredDF {
    /// `f(ℰ) = (1/(√8 π²)) [A'(0)/√ℰ + ∫_0^ℰ A''(Ψ) dΨ / √(ℰ - Ψ)]`.
    pub fn value(&self, energy: f64) -> f64 {
        eddington_value(&self.quadrature, &self.a, energy).unwrap_or(f64::NAN)
    }

    /// Least-squares slope of `ln f` against `ln ℰ` over samples in `[lo, hi]`.
    pub fn log_slope(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .e_nodes
            .iter()
            .zip(&self.f_values)
            .filter(|(e, f)| **e >= lo && **e <= hi && **f > 0.0)
            .map(|(e, f)| (e.ln(), f.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("energy,f\n");
        for (e, f) in self.e_nodes.iter().zip(&self.f_values) {
            let _ = writeln!(out, "{e:?},{f:?}");
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let samples: Vec<Sample> = self
            .e_nodes
            .iter()
            .zip(&self.f_values)
            .map(|(&energy, &f)| Sample { energy, f })
            .collect();
        serde_json::json!({
            "schema_version": 1,
            "negative_mass_fraction": self.negative_mass_fraction,
            "samples": samples,
        })
    }
}

impl DistributionFunction for RecoveredDF {
    fn evaluate(&self, energy: f64, _l2: f64) -> f64 {
        if energy <= 0.0 {
            return 0.0;
        }
        self.value(energy)
    }
}

fn eddington_value(q: &Quadrature, a: &SeparablePart, energy: f64) -> Result<f64> {
    if energy <= 0.0 {
        return Ok(0.0);
    }
    let boundary = a.derivative(0.0) / energy.sqrt();
    let integral = q.abel_integral(|psi| a.second_derivative(psi), energy)?;
    Ok((boundary + integral) / (8f64.sqrt() * PI * PI))
}

/// Isotropic DF of the density `A(Ψ)` (with `B ≡ 1`).
pub fn eddington_invert(q: &Quadrature, a: &SeparablePart, e_nodes: &[f64]) -> Result<RecoveredDF> {
    let a0 = a.value(0.0);
    if a0 != 0.0 {
        return Err(Error::Precondition(format!(
            "Eddington inversion needs A(0) = 0, got {a0}"
        )));
    }
    if let Some(bad) = e_nodes.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Grid(format!("energy node {bad} is not strictly positive")));
    }
    let f_values = e_nodes
        .par_iter()
        .map(|&e| eddington_value(q, a, e))
        .collect::<Result<Vec<f64>>>()?;
    let e_max = e_nodes.iter().copied().fold(0.0, f64::max);
    let (neg, total) = e_nodes
        .iter()
        .zip(&f_values)
        .fold((0.0, 0.0), |(neg, total), (&e, &f)| {
            let w = (e_max - e).max(0.0).sqrt();
            (neg + w * (-f).max(0.0), total + w * f.abs())
        });
    let negative_mass_fraction = if total > 0.0 { neg / total } else { 0.0 };
    Ok(RecoveredDF {
        e_nodes: e_nodes.to_vec(),
        f_values,
        negative_mass_fraction,
        a: a.clone(),
        quadrature: q.clone(),
    })
}

/// Constant-anisotropy inversion. Only `β = 0`, which is the Eddington case,
/// is available.
pub fn constant_beta_invert(q: &Quadrature, beta: f64, a: &SeparablePart, e_nodes: &[f64]) -> Result<RecoveredDF> {
    if beta == 0.0 {
        return eddington_invert(q, a, e_nodes);
    }
    Err(Error::Unsupported(format!(
        "inversion for constant anisotropy beta = {beta} is not implemented; only beta = 0"
    )))
}

/// `p_{n,m}(Ψ, r²) = (2π / r^{2m+2}) ∬ K^{n-1/2} L^{2m} f dℰ dL²`.
pub fn forward_moment<F>(q: &Quadrature, f: &F, n: u32, m: u32, psi: f64, r2: f64) -> Result<f64>
where
    F: DistributionFunction + ?Sized,
{
    let integral = q.triangle_integral(f, psi, r2, n as f64, m as f64)?;
    Ok(2.0 * PI / r2.powi(m as i32 + 1) * integral)
}

/// Largest relative difference between `A(Ψ)·B` and the zeroth moment of
/// its Eddington inverse over the grid.
pub fn roundtrip_residual(q: &Quadrature, model: &AugmentedDensityModel, grid: &EvaluationGrid) -> Result<f64> {
    if !model.is_isotropic() {
        return Err(Error::Precondition("round trip needs an isotropic separable model".into()));
    }
    let (a, b) = model.separable_parts().expect("isotropic models are separable");
    let density = a.scaled(b.value(1.0));
    let psi_max = grid.psi_nodes().iter().copied().fold(0.0, f64::max);
    let df = eddington_invert(q, &density, &linear_nodes(psi_max, DEFAULT_ENERGY_NODES))?;
    let residuals = grid
        .points()
        .par_iter()
        .map(|&(psi, r2)| {
            let forward = forward_moment(q, &df, 0, 0, psi, r2)?;
            let want = model.evaluate(psi, r2);
            let diff = (forward - want).abs();
            Ok(if want != 0.0 { diff / want.abs() } else { diff })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(residuals.into_iter().fold(0.0, f64::max))
}

/// `β(r) = 1 - p₀,₁ / (2 p₁,₀)` from forward moments at `[Ψ(r), r²]`.
pub fn anisotropy_from_moments<F>(
    q: &Quadrature,
    f: &F,
    potential: &PotentialModel,
    r_nodes: &[f64],
) -> Result<AnisotropyProfile>
where
    F: DistributionFunction + ?Sized,
{
    let beta_values = r_nodes
        .par_iter()
        .map(|&r| {
            let (psi, r2) = (potential.psi(r), r * r);
            let p10 = forward_moment(q, f, 1, 0, psi, r2)?;
            if !(p10 > 0.0) {
                return Ok(None);
            }
            let p01 = forward_moment(q, f, 0, 1, psi, r2)?;
            Ok(Some(1.0 - p01 / (2.0 * p10)))
        })
        .collect::<Result<Vec<Option<f64>>>>()?;
    Ok(AnisotropyProfile {
        r_nodes: r_nodes.to_vec(),
        beta0_estimate: beta_values.first().copied().flatten(),
        beta_values,
    })
}
