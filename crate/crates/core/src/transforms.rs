//! Abel transforms `ρ̂`, `ρ̄`, `ρ̃` of an augmented density, their partial
//! derivatives, the diagonal line-integral right-hand sides, the separable
//! one-dimensional transforms and the moment transforms of a DF.
//!
//! All three density transforms carry the `1/π` normalization:
//!
//! ```text
//! ρ̂(Ψ, r²) = (1/π) ∫_0^Ψ  p₀,₀(Q, r²) dQ / √(Ψ - Q)
//! ρ̄(Ψ, r²) = (1/π) ∫_0^r² p₀,₀(Ψ, R²) dR² / (R √(r² - R²))
//! ρ̃(Ψ, r²) = (1/π) ∫_0^r² R p₀,₀(Ψ, R²) dR² / √(r² - R²)
//! ```
//!
//! The line-integral right-hand sides are written in terms of `f` directly
//! and already absorb that normalization, so they are compared with the
//! derivatives of the transforms as they stand:
//!
//! | line | left side          | right side                              |
//! |------|--------------------|-----------------------------------------|
//! | 1    | ∂ρ̂/∂Ψ              | (√2π / r²)   ∫ dL² f                    |
//! | 2    | ∂(r²ρ̂)/∂r²         | (π / √2 r⁴)  ∫ dL² L² f                 |
//! | 3    | ∂ρ̄/∂Ψ              | (2π / r)     ∫ dL² f / L                |
//! | 4    | ∂ρ̃/∂r²             | (π / r³)     ∫ dL² L f                  |

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::ser::{Serialize, Serializer};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{AugmentedDensityModel, DistributionFunction, EvaluationGrid, SeparablePart};
use crate::quadrature::{LinePower, QuadResult, Quadrature};

/// A transform value, or the marker for an integral that does not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformValue {
    Finite(f64),
    Divergent,
}

impl TransformValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            TransformValue::Finite(v) => Some(v),
            TransformValue::Divergent => None,
        }
    }

    pub fn is_divergent(self) -> bool {
        matches!(self, TransformValue::Divergent)
    }

    pub fn map(self, op: impl FnOnce(f64) -> f64) -> Self {
        match self {
            TransformValue::Finite(v) => TransformValue::Finite(op(v)),
            TransformValue::Divergent => TransformValue::Divergent,
        }
    }

    fn csv(self) -> String {
        match self {
            TransformValue::Finite(v) => format!("{v:?}"),
            TransformValue::Divergent => "divergent".into(),
        }
    }
}

impl Serialize for TransformValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TransformValue::Finite(v) => s.serialize_f64(*v),
            TransformValue::Divergent => s.serialize_str("divergent"),
        }
    }
}

/// Turns divergence into a value and passes every other failure on.
pub fn classify(r: QuadResult<f64>) -> Result<TransformValue> {
    match r {
        Ok(v) => Ok(TransformValue::Finite(v)),
        Err(e) if e.is_divergent() => Ok(TransformValue::Divergent),
        Err(e) => Err(e.into()),
    }
}

fn check_point(psi: f64, r2: f64) -> Result<()> {
    if !(psi >= 0.0 && psi.is_finite()) {
        return Err(Error::Domain(format!("Ψ must be non-negative, got {psi}")));
    }
    if !(r2 > 0.0 && r2.is_finite()) {
        return Err(Error::Domain(format!("r² must be positive, got {r2}")));
    }
    Ok(())
}

fn check_interior(psi: f64, r2: f64) -> Result<()> {
    check_point(psi, r2)?;
    if psi == 0.0 {
        return Err(Error::Domain("derivatives need Ψ > 0".into()));
    }
    Ok(())
}

pub fn rho_hat(q: &Quadrature, model: &AugmentedDensityModel, psi: f64, r2: f64) -> Result<TransformValue> {
    check_point(psi, r2)?;
    if psi == 0.0 {
        return Ok(TransformValue::Finite(0.0));
    }
    classify(q.abel_integral(|x| model.evaluate(x, r2), psi)).map(|v| v.map(|v| v / PI))
}

pub fn rho_bar(q: &Quadrature, model: &AugmentedDensityModel, psi: f64, r2: f64) -> Result<TransformValue> {
    check_point(psi, r2)?;
    classify(q.abel_integral_inner_singular(|t| model.evaluate(psi, t), r2)).map(|v| v.map(|v| v / PI))
}

pub fn rho_tilde(q: &Quadrature, model: &AugmentedDensityModel, psi: f64, r2: f64) -> Result<TransformValue> {
    check_point(psi, r2)?;
    classify(q.abel_integral(|t| t.sqrt() * model.evaluate(psi, t), r2)).map(|v| v.map(|v| v / PI))
}

/// `∂ρ̄/∂r²`, by five-point differencing of `ρ̄` with step `r²/1000`.
pub fn d_rho_bar_dr2(q: &Quadrature, model: &AugmentedDensityModel, psi: f64, r2: f64) -> Result<TransformValue> {
    let h = 1e-3 * r2;
    let mut vals = [0.0; 4];
    for (slot, k) in vals.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
        match rho_bar(q, model, psi, r2 + k * h)? {
            TransformValue::Finite(v) => *slot = v,
            TransformValue::Divergent => return Ok(TransformValue::Divergent),
        }
    }
    Ok(TransformValue::Finite(
        (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h),
    ))
}

/// Selects one of the four diagonal-line identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Line {
    One = 1,
    Two = 2,
    Three = 3,
    Four = 4,
}

impl Line {
    pub const ALL: [Line; 4] = [Line::One, Line::Two, Line::Three, Line::Four];

    pub fn from_index(i: u8) -> Result<Line> {
        match i {
            1 => Ok(Line::One),
            2 => Ok(Line::Two),
            3 => Ok(Line::Three),
            4 => Ok(Line::Four),
            _ => Err(Error::Domain(format!("line index must be 1..=4, got {i}"))),
        }
    }

    pub fn power(self) -> LinePower {
        match self {
            Line::One => LinePower::Zero,
            Line::Two => LinePower::LSquared,
            Line::Three => LinePower::InverseL,
            Line::Four => LinePower::L,
        }
    }

    fn prefactor(self, r2: f64) -> f64 {
        let r = r2.sqrt();
        match self {
            Line::One => SQRT_2 * PI / r2,
            Line::Two => PI / (SQRT_2 * r2 * r2),
            Line::Three => 2.0 * PI / r,
            Line::Four => PI / (r2 * r),
        }
    }
}

/// Left-hand side of the selected identity, computed from `p₀,₀` with
/// the derivative taken inside the Abel integral.
pub fn eq21_lhs(
    q: &Quadrature,
    model: &AugmentedDensityModel,
    psi: f64,
    r2: f64,
    line: Line,
) -> Result<TransformValue> {
    check_interior(psi, r2)?;
    match line {
        Line::One => {
            let p0 = model.evaluate(0.0, r2);
            if !p0.is_finite() {
                return Err(Error::Precondition(format!(
                    "p₀,₀(0, r²) must be finite for ∂ρ̂/∂Ψ, got {p0} at r² = {r2}"
                )));
            }
            let integral = classify(q.abel_integral(|x| model.d_dpsi(x, r2), psi))?;
            Ok(integral.map(|v| (p0 / psi.sqrt() + v) / PI))
        }
        Line::Two => {
            let hat = rho_hat(q, model, psi, r2)?;
            let integral = classify(q.abel_integral(|x| model.d_dr2(x, r2), psi))?;
            Ok(match (hat, integral) {
                (TransformValue::Finite(h), TransformValue::Finite(i)) => TransformValue::Finite(h + r2 * i / PI),
                _ => TransformValue::Divergent,
            })
        }
        Line::Three => {
            classify(q.abel_integral_inner_singular(|t| model.d_dpsi(psi, t), r2)).map(|v| v.map(|v| v / PI))
        }
        Line::Four => {
            // ρ̃ = (r²/π) ∫_0^1 √u p(Ψ, r²u) du / √(1-u)
            let integrand = |u: f64| {
                let t = r2 * u;
                u.sqrt() * (model.evaluate(psi, t) + t * model.d_dr2(psi, t))
            };
            classify(q.abel_integral(integrand, 1.0)).map(|v| v.map(|v| v / PI))
        }
    }
}

/// Right-hand side of the selected identity, from the DF.
pub fn eq21_rhs<F>(q: &Quadrature, f: &F, psi: f64, r2: f64, line: Line) -> Result<TransformValue>
where
    F: DistributionFunction + ?Sized,
{
    check_interior(psi, r2)?;
    let integral = classify(q.diagonal_line_integral(f, psi, r2, line.power()))?;
    Ok(integral.map(|v| line.prefactor(r2) * v))
}

/// The one-dimensional transforms of a separable density `A(Ψ)·B(r²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableTransforms {
    pub a_hat: TransformValue,
    pub b_tilde: TransformValue,
    pub b_bar: TransformValue,
}

/// `Â(Ψ) = ∫_0^Ψ A(Q) dQ / √(Ψ - Q)`.
pub fn a_hat(q: &Quadrature, a: &SeparablePart, psi: f64) -> Result<TransformValue> {
    if psi == 0.0 {
        return Ok(TransformValue::Finite(0.0));
    }
    classify(q.abel_integral(|x| a.value(x), psi))
}

/// `dÂ/dΨ = A(0)/√Ψ + ∫_0^Ψ A'(Q) dQ / √(Ψ - Q)`.
pub fn d_a_hat_dpsi(q: &Quadrature, a: &SeparablePart, psi: f64) -> Result<TransformValue> {
    let a0 = a.value(0.0);
    if !a0.is_finite() {
        return Err(Error::Precondition(format!("A(0) must be finite, got {a0}")));
    }
    let integral = classify(q.abel_integral(|x| a.derivative(x), psi))?;
    Ok(integral.map(|v| a0 / psi.sqrt() + v))
}

/// `B̃(r²) = ∫_0^r² R B(R²) dR² / √(r² - R²)`.
pub fn b_tilde(q: &Quadrature, b: &SeparablePart, r2: f64) -> Result<TransformValue> {
    classify(q.abel_integral(|t| t.sqrt() * b.value(t), r2))
}

/// `dB̃/dr² = (1/r²) ∫_0^r² d[R²B]/dR² · R dR² / √(r² - R²)`.
pub fn d_b_tilde_dr2(q: &Quadrature, b: &SeparablePart, r2: f64) -> Result<TransformValue> {
    let integral = classify(q.abel_integral(|t| t.sqrt() * (b.value(t) + t * b.derivative(t)), r2))?;
    Ok(integral.map(|v| v / r2))
}

/// `B̄(r²) = ∫_0^π B(r² sin²(φ/2)) dφ`.
pub fn b_bar(q: &Quadrature, b: &SeparablePart, r2: f64) -> Result<TransformValue> {
    classify(q.abel_integral_inner_singular(|t| b.value(t), r2))
}

/// `d[r B̄]/dr² = (1/r) ∫_0^π [B/2 + R² B'](r² sin²(φ/2)) dφ`.
pub fn d_r_b_bar_dr2(q: &Quadrature, b: &SeparablePart, r2: f64) -> Result<TransformValue> {
    let integral = classify(q.abel_integral_inner_singular(|t| 0.5 * b.value(t) + t * b.derivative(t), r2))?;
    Ok(integral.map(|v| v / r2.sqrt()))
}

pub fn separable_transforms(
    q: &Quadrature,
    a: &SeparablePart,
    b: &SeparablePart,
    psi: f64,
    r2: f64,
) -> Result<SeparableTransforms> {
    check_point(psi, r2)?;
    Ok(SeparableTransforms {
        a_hat: a_hat(q, a, psi)?,
        b_tilde: b_tilde(q, b, r2)?,
        b_bar: b_bar(q, b, r2)?,
    })
}

/// `(a)_n = a (a+1) ⋯ (a+n-1)`.
pub fn pochhammer(a: f64, n: u32) -> f64 {
    (0..n).map(|i| a + i as f64).product()
}

/// `B(n + 1/2, 1/2) = (1/2)_n π / n!`.
pub fn beta_half_coefficient(n: u32) -> f64 {
    let factorial: f64 = (1..=n).map(f64::from).product();
    pochhammer(0.5, n) * PI / factorial
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentKind {
    Hat,
    Bar,
    Tilde,
}

/// Transform of `p_{n,0}` written as a triangle integral of `Kⁿ f`:
///
/// ```text
/// p̂_n = (1/2)_n/n! · (√2π/r²)  ∬ Kⁿ f
/// p̄_n = (1/2)_n/n! · (2π/r)    ∬ Kⁿ f / L
/// p̃_n = (1/2)_n/n! · √2π r²ⁿ   ∬ Kⁿ f / √(Ψ - ℰ)
/// ```
pub fn moment_transform<F>(
    q: &Quadrature,
    f: &F,
    psi: f64,
    r2: f64,
    n: u32,
    kind: MomentKind,
) -> Result<TransformValue>
where
    F: DistributionFunction + ?Sized,
{
    if n > 2 {
        return Err(Error::Unsupported(format!("moment transforms are provided for n ≤ 2, got {n}")));
    }
    check_point(psi, r2)?;
    let factorial: f64 = (1..=n).map(f64::from).product();
    let coef = pochhammer(0.5, n) / factorial;
    let nk = n as f64 + 0.5;
    let value = match kind {
        MomentKind::Hat => classify(q.triangle_integral(f, psi, r2, nk, 0.0))?
            .map(|v| coef * SQRT_2 * PI / r2 * v),
        MomentKind::Bar => classify(q.triangle_integral(f, psi, r2, nk, -0.5))?
            .map(|v| coef * 2.0 * PI / r2.sqrt() * v),
        MomentKind::Tilde => classify(q.triangle_integral_weighted(f, psi, r2, nk, 0.0, -0.5))?
            .map(|v| coef * SQRT_2 * PI * r2.powi(n as i32) * v),
    };
    Ok(value)
}

/// The innermost integrals obtained after interchanging the order of
/// integration in the moment transforms, evaluated numerically at a point
/// `(ℰ, L²)` inside the accessible triangle of `(Ψ, r²)`.
///
/// The closed forms are `Kⁿ B(n+½, ½)` times `1/√2`, `1/(rL)` and
/// `r²ⁿ/√(2(Ψ-ℰ))` for the hat, bar and tilde kinds.
pub fn inner_kernel_integral(
    q: &Quadrature,
    kind: MomentKind,
    n: u32,
    energy: f64,
    l2: f64,
    psi: f64,
    r2: f64,
) -> Result<f64> {
    let k = 2.0 * (psi - energy) - l2 / r2;
    if !(k > 0.0 && energy >= 0.0 && l2 > 0.0) {
        return Err(Error::Domain("point must lie strictly inside the accessible triangle".into()));
    }
    let p = n as f64 - 0.5;
    let value = match kind {
        MomentKind::Hat => {
            // K(Q) = 2(Q - Q₀), Q₀ = ℰ + L²/(2r²); t = Q - Q₀
            let q0 = energy + l2 / (2.0 * r2);
            q.abel_integral(|t| (2.0 * t).powf(p), psi - q0)?
        }
        MomentKind::Bar | MomentKind::Tilde => {
            // K(R²) = 2(Ψ - ℰ) - L²/R², R₀² = L²/(2(Ψ - ℰ)); t = R² - R₀²
            let gap = psi - energy;
            let r02 = l2 / (2.0 * gap);
            let weight = |big_r2: f64| match kind {
                MomentKind::Bar => big_r2.powf(-1.5),
                _ => big_r2.powf(n as f64 - 0.5),
            };
            q.abel_integral(
                |t| {
                    let big_r2 = r02 + t;
                    // 2(Ψ-ℰ) - L²/R² = 2(Ψ-ℰ) t / R²
                    (2.0 * gap * t / big_r2).powf(p) * weight(big_r2)
                },
                r2 - r02,
            )?
        }
    };
    Ok(value)
}

/// One of the seven tabulated quantities of a [`TransformField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    RhoHat,
    RhoBar,
    RhoTilde,
    DRhoHatDPsi,
    DR2RhoHatDR2,
    DRhoBarDPsi,
    DRhoTildeDR2,
}

impl Column {
    pub const ALL: [Column; 7] = [
        Column::RhoHat,
        Column::RhoBar,
        Column::RhoTilde,
        Column::DRhoHatDPsi,
        Column::DR2RhoHatDR2,
        Column::DRhoBarDPsi,
        Column::DRhoTildeDR2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::RhoHat => "rho_hat",
            Column::RhoBar => "rho_bar",
            Column::RhoTilde => "rho_tilde",
            Column::DRhoHatDPsi => "d_rho_hat_dpsi",
            Column::DR2RhoHatDR2 => "d_r2_rho_hat_dr2",
            Column::DRhoBarDPsi => "d_rho_bar_dpsi",
            Column::DRhoTildeDR2 => "d_rho_tilde_dr2",
        }
    }
}

pub fn evaluate_column(
    q: &Quadrature,
    model: &AugmentedDensityModel,
    column: Column,
    psi: f64,
    r2: f64,
) -> Result<TransformValue> {
    match column {
        Column::RhoHat => rho_hat(q, model, psi, r2),
        Column::RhoBar => rho_bar(q, model, psi, r2),
        Column::RhoTilde => rho_tilde(q, model, psi, r2),
        Column::DRhoHatDPsi => eq21_lhs(q, model, psi, r2, Line::One),
        Column::DR2RhoHatDR2 => eq21_lhs(q, model, psi, r2, Line::Two),
        Column::DRhoBarDPsi => eq21_lhs(q, model, psi, r2, Line::Three),
        Column::DRhoTildeDR2 => eq21_lhs(q, model, psi, r2, Line::Four),
    }
}

/// Transforms and derivatives tabulated over a grid, Ψ-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformField {
    pub grid: EvaluationGrid,
    /// `values[point][column]` in [`Column::ALL`] order.
    pub values: Vec<[TransformValue; 7]>,
    /// Set where `ρ̄` does not exist.
    pub divergence_mask: Vec<bool>,
}

impl TransformField {
    pub fn compute(q: &Quadrature, model: &AugmentedDensityModel, grid: &EvaluationGrid) -> Result<Self> {
        let values: Vec<[TransformValue; 7]> = grid
            .points()
            .par_iter()
            .map(|&(psi, r2)| {
                let mut row = [TransformValue::Divergent; 7];
                for (slot, col) in row.iter_mut().zip(Column::ALL) {
                    *slot = evaluate_column(q, model, col, psi, r2)?;
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let divergence_mask = values.iter().map(|row| row[1].is_divergent()).collect();
        Ok(Self {
            grid: grid.clone(),
            values,
            divergence_mask,
        })
    }

    pub fn column(&self, column: Column) -> Vec<TransformValue> {
        let idx = Column::ALL.iter().position(|&c| c == column).expect("known column");
        self.values.iter().map(|row| row[idx]).collect()
    }

    /// Entries that are finite yet negative, over the seven columns.
    pub fn negative_entries(&self) -> usize {
        self.values
            .iter()
            .flat_map(|row| row.iter())
            .filter(|v| matches!(v, TransformValue::Finite(x) if *x < 0.0))
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("psi,r2");
        for c in Column::ALL {
            out.push(',');
            out.push_str(c.name());
        }
        out.push_str(",rho_bar_divergent\n");
        for ((&(psi, r2), row), mask) in self.grid.points().iter().zip(&self.values).zip(&self.divergence_mask) {
            let _ = write!(out, "{psi:?},{r2:?}");
            for v in row {
                out.push(',');
                out.push_str(&v.csv());
            }
            let _ = writeln!(out, ",{mask}");
        }
        out
    }

    pub fn to_json(&self, model_name: &str) -> serde_json::Value {
        let points: Vec<serde_json::Value> = self
            .grid
            .points()
            .iter()
            .zip(&self.values)
            .zip(&self.divergence_mask)
            .map(|((&(psi, r2), row), &mask)| {
                let mut obj = serde_json::Map::new();
                obj.insert("psi".into(), psi.into());
                obj.insert("r2".into(), r2.into());
                for (c, v) in Column::ALL.iter().zip(row) {
                    obj.insert(c.name().into(), serde_json::to_value(v).expect("plain value"));
                }
                obj.insert("rho_bar_divergent".into(), mask.into());
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::json!({
            "schema_version": 1,
            "model": model_name,
            "grid": {
                "psi_nodes": self.grid.psi_nodes(),
                "r2_nodes": self.grid.r2_nodes(),
            },
            "points": points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_plummer_pair, make_powerlaw_separable, ConstantDf, PowerLawDf};

    fn quad() -> Quadrature {
        Quadrature::default()
    }

    fn fin(v: TransformValue) -> f64 {
        v.finite().expect("finite")
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn constant_model(c: f64) -> AugmentedDensityModel {
        AugmentedDensityModel::separable("const", SeparablePart::constant(c), SeparablePart::constant(1.0))
    }

    #[test]
    fn rho_hat_examples() {
        let q = quad();
        let psi = 0.6;
        assert!(rel(fin(rho_hat(&q, &constant_model(1.0), psi, 2.0).unwrap()), 2.0 * psi.sqrt() / PI) < 1e-14);
        let m = PowerLawDf::new(1.0, 0.0, 0.0).augmented_density().unwrap();
        assert!(rel(fin(rho_hat(&q, &m, psi, 2.0).unwrap()), SQRT_2 * PI * psi * psi) < 1e-13);
        assert_eq!(fin(rho_hat(&q, &m, 0.0, 2.0).unwrap()), 0.0);
    }

    #[test]
    fn rho_bar_examples() {
        let q = quad();
        assert!(rel(fin(rho_bar(&q, &constant_model(1.0), 0.5, 3.0).unwrap()), 1.0) < 1e-14);
        let root = AugmentedDensityModel::bivariate("sqrt", |_, r2: f64| r2.sqrt());
        let r2: f64 = 3.0;
        assert!(rel(fin(rho_bar(&q, &root, 0.5, r2).unwrap()), 2.0 * r2.sqrt() / PI) < 1e-13);
        let steep = make_powerlaw_separable(0.75, SeparablePart::power(1.0, 4.0)).unwrap();
        assert!(rho_bar(&q, &steep, 0.5, r2).unwrap().is_divergent());
    }

    #[test]
    fn rho_tilde_examples() {
        let q = quad();
        assert!(rel(fin(rho_tilde(&q, &constant_model(1.0), 0.5, 3.0).unwrap()), 1.5) < 1e-14);
        let inv = AugmentedDensityModel::bivariate("inv", |_, r2: f64| 1.0 / r2.sqrt());
        assert!(rel(fin(rho_tilde(&q, &inv, 0.5, 3.0).unwrap()), 2.0 * 3f64.sqrt() / PI) < 1e-13);
        assert!(fin(rho_tilde(&q, &constant_model(1.0), 0.5, 1e-12).unwrap()) < 1e-11);
    }

    #[test]
    fn constant_df_identities() {
        let q = quad();
        let m = PowerLawDf::new(1.0, 0.0, 0.0).augmented_density().unwrap();
        let f = ConstantDf(1.0);
        let (psi, r2) = (0.7, 1.9);
        let expected = [
            2.0 * SQRT_2 * PI * psi,
            SQRT_2 * PI * psi * psi,
            4.0 * PI * (2.0 * psi).sqrt(),
            4.0 * SQRT_2 * PI / 3.0 * psi.powf(1.5),
        ];
        for (line, want) in Line::ALL.into_iter().zip(expected) {
            let lhs = fin(eq21_lhs(&q, &m, psi, r2, line).unwrap());
            let rhs = fin(eq21_rhs(&q, &f, psi, r2, line).unwrap());
            assert!(rel(lhs, want) < 1e-12, "{line:?} lhs {lhs} vs {want}");
            assert!(rel(rhs, want) < 1e-12, "{line:?} rhs {rhs} vs {want}");
        }
        assert!(rel(fin(eq21_lhs(&q, &constant_model(1.0), 0.3, 2.0, Line::Four).unwrap()), 0.5) < 1e-14);
    }

    #[test]
    fn line_three_divergence() {
        let q = quad();
        let f = PowerLawDf::new(1.0, 0.0, -0.75);
        assert!(eq21_rhs(&q, &f, 0.5, 1.0, Line::Three).unwrap().is_divergent());
        let m = f.augmented_density().unwrap();
        assert!(eq21_lhs(&q, &m, 0.5, 1.0, Line::Three).unwrap().is_divergent());
        assert!(eq21_lhs(&q, &m, 0.5, 1.0, Line::One).unwrap().finite().is_some());
    }

    #[test]
    fn separable_examples() {
        let q = quad();
        let one = SeparablePart::constant(1.0);
        let s = separable_transforms(&q, &one, &one, 0.8, 2.5).unwrap();
        assert!(rel(fin(s.a_hat), 2.0 * 0.8f64.sqrt()) < 1e-14);
        assert!(rel(fin(s.b_tilde), PI * 2.5 / 2.0) < 1e-14);
        assert!(rel(fin(s.b_bar), PI) < 1e-14);
        let quarter = SeparablePart::power(1.0, -0.25);
        let bb = fin(b_bar(&q, &quarter, 1.0).unwrap());
        // ∫_0^π sin(φ/2)^{-1/2} dφ = B(1/4, 1/2)
        assert!(rel(bb, 5.244_115_108_584_239) < 1e-12);
        assert!(b_bar(&q, &SeparablePart::power(1.0, -0.75), 1.0).unwrap().is_divergent());
    }

    #[test]
    fn r_b_bar_derivative_matches_b_tilde_derivative() {
        let q = quad();
        let b = SeparablePart::from_fn("1/(1+x)", |x| 1.0 / (1.0 + x)).with_derivative(|x| -1.0 / ((1.0 + x) * (1.0 + x)));
        for r2 in [0.01, 0.5, 4.0, 100.0] {
            let lhs = fin(d_r_b_bar_dr2(&q, &b, r2).unwrap());
            let rhs = fin(d_b_tilde_dr2(&q, &b, r2).unwrap()) / r2.sqrt();
            assert!(rel(lhs, rhs) < 1e-10, "{r2}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn coefficients() {
        assert!(rel(beta_half_coefficient(0), PI) < 1e-15);
        assert!(rel(beta_half_coefficient(1), PI / 2.0) < 1e-15);
        assert!(rel(beta_half_coefficient(2), 3.0 * PI / 8.0) < 1e-15);
        assert_eq!(pochhammer(3.0, 0), 1.0);
        assert_eq!(pochhammer(1.0, 4), 24.0);
    }

    #[test]
    fn moment_transform_constant_df() {
        let q = quad();
        let (psi, r2) = (0.9, 1.7);
        let v = fin(moment_transform(&q, &ConstantDf(2.0), psi, r2, 0, MomentKind::Hat).unwrap());
        assert!(rel(v, SQRT_2 * PI * 2.0 * psi * psi) < 1e-13);
        assert!(moment_transform(&q, &ConstantDf(1.0), psi, r2, 3, MomentKind::Hat).is_err());
    }

    #[test]
    fn inner_kernel_integrals_match_closed_forms() {
        let q = quad();
        let (psi, r2, e, l2): (f64, f64, f64, f64) = (1.0, 2.0, 0.2, 0.9);
        let k = 2.0 * (psi - e) - l2 / r2;
        for n in 0..3u32 {
            let b = beta_half_coefficient(n);
            let kn = k.powi(n as i32);
            let hat = inner_kernel_integral(&q, MomentKind::Hat, n, e, l2, psi, r2).unwrap();
            assert!(rel(hat, kn * b / SQRT_2) < 1e-10, "hat {n}");
            let bar = inner_kernel_integral(&q, MomentKind::Bar, n, e, l2, psi, r2).unwrap();
            assert!(rel(bar, kn * b / (r2.sqrt() * l2.sqrt())) < 1e-10, "bar {n}");
            let tilde = inner_kernel_integral(&q, MomentKind::Tilde, n, e, l2, psi, r2).unwrap();
            let want = r2.powi(n as i32) * kn * b / (2.0 * (psi - e)).sqrt();
            assert!(rel(tilde, want) < 1e-10, "tilde {n}");
        }
    }

    #[test]
    fn field_is_non_negative_for_plummer() {
        let q = Quadrature::with_nodes(64).unwrap();
        let (m, _) = make_plummer_pair();
        let grid = EvaluationGrid::new(vec![0.25, 0.5, 1.0], vec![0.01, 1.0, 100.0]).unwrap();
        let field = TransformField::compute(&q, &m, &grid).unwrap();
        assert_eq!(field.negative_entries(), 0);
        assert!(field.divergence_mask.iter().all(|m| !m));
        let csv = field.to_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("psi,r2,rho_hat,rho_bar"));
        let json = field.to_json("plummer");
        assert_eq!(json["points"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn divergent_values_serialize_as_marker() {
        let v = serde_json::to_string(&TransformValue::Divergent).unwrap();
        assert_eq!(v, "\"divergent\"");
        assert_eq!(serde_json::to_string(&TransformValue::Finite(0.5)).unwrap(), "0.5");
    }
}
