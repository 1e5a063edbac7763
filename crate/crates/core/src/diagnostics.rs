//! Necessary non-negativity conditions for the DF behind an augmented
//! density, anisotropy and slope profiles, and the verdict report.
//!
//! Every condition is a sign test on a computed quantity. A point is
//! violated when `value + floor < 0`, where `floor = absolute_floor +
//! 1e-10 · scale` and `scale` is a local magnitude of the quantities the
//! value is built from. Quantities that do not exist (a divergent `ρ̄` or
//! `B̄`) or could not be computed are `undefined`, never satisfied or violated.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AugmentedDensityModel, EvaluationGrid, PotentialModel, SeparablePart};
use crate::quadrature::Quadrature;
use crate::transforms::{self, Line, TransformValue};

/// Relative part of the margin floor.
pub const RELATIVE_FLOOR: f64 = 1e-10;

/// Half-width of the indeterminate band around `β₀ = 1/2`.
pub const BETA0_BAND: f64 = 1e-3;

pub const NECESSARY_ONLY_NOTE: &str = "These are necessary conditions only: passing all of them does not certify that the distribution function is non-negative.";

pub const LINE_THREE_CAVEAT: &str = "requires f/L to be integrable along the diagonal, a strictly stronger condition than the mere integrability of f; undefined entries mean the quantity does not exist, not that the condition fails";

pub const IMPLICATION_NOTE: &str = "Implication chain: d_a_dpsi >= 0 and d_r_b_bar_dr2 >= 0 together imply d_a_hat_dpsi >= 0 and d_b_tilde_dr2 >= 0; one_minus_beta_b >= 0 alone implies d_b_tilde_dr2 >= 0.";

pub const BOUNDARY_NOTE: &str = "The B-bar based deduction is not directly applicable for the case beta0 = 1/2, for which B-bar diverges.";

pub const DIVERGENT_NOTE: &str = "B-bar diverges (beta0 > 1/2): the d_a_dpsi and d_r_b_bar_dr2 conditions do not apply; d_a_hat_dpsi and d_b_tilde_dr2 remain necessary.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionId {
    DensityNonNegative,
    DRhoHatDPsi,
    DR2RhoHatDR2,
    DRhoBarDPsi,
    DRhoTildeDR2,
    DAHatDPsi,
    DBTildeDR2,
    OneMinusBetaB,
    DADPsi,
    DRBBarDR2,
    SlopeAnisotropy,
}

impl ConditionId {
    pub fn name(self) -> &'static str {
        match self {
            ConditionId::DensityNonNegative => "density_non_negative",
            ConditionId::DRhoHatDPsi => "d_rho_hat_dpsi",
            ConditionId::DR2RhoHatDR2 => "d_r2_rho_hat_dr2",
            ConditionId::DRhoBarDPsi => "d_rho_bar_dpsi",
            ConditionId::DRhoTildeDR2 => "d_rho_tilde_dr2",
            ConditionId::DAHatDPsi => "d_a_hat_dpsi",
            ConditionId::DBTildeDR2 => "d_b_tilde_dr2",
            ConditionId::OneMinusBetaB => "one_minus_beta_b",
            ConditionId::DADPsi => "d_a_dpsi",
            ConditionId::DRBBarDR2 => "d_r_b_bar_dr2",
            ConditionId::SlopeAnisotropy => "slope_anisotropy",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ConditionId::DensityNonNegative => "p00(Psi, r2) >= 0",
            ConditionId::DRhoHatDPsi => "d rho_hat / d Psi >= 0",
            ConditionId::DR2RhoHatDR2 => "d (r2 rho_hat) / d r2 >= 0",
            ConditionId::DRhoBarDPsi => "d rho_bar / d Psi >= 0",
            ConditionId::DRhoTildeDR2 => "d rho_tilde / d r2 >= 0",
            ConditionId::DAHatDPsi => "d A_hat / d Psi >= 0",
            ConditionId::DBTildeDR2 => "d B_tilde / d r2 >= 0",
            ConditionId::OneMinusBetaB => "(1 - beta) B = d (r2 B) / d r2 >= 0",
            ConditionId::DADPsi => "d A / d Psi >= 0",
            ConditionId::DRBBarDR2 => "d (r B_bar) / d r2 >= 0",
            ConditionId::SlopeAnisotropy => "gamma - 2 beta >= 0",
        }
    }

    pub fn caveat(self) -> Option<&'static str> {
        match self {
            ConditionId::DRhoBarDPsi => Some(LINE_THREE_CAVEAT),
            ConditionId::DADPsi | ConditionId::DRBBarDR2 => {
                Some("defined only when B_bar converges (beta0 < 1/2)")
            }
            _ => None,
        }
    }
}

impl Serialize for ConditionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Satisfied,
    Violated,
    Undefined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
    pub value: Option<f64>,
    pub margin: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ConditionPoint {
    fn judged(psi: Option<f64>, r2: Option<f64>, value: f64, scale: f64, absolute_floor: f64) -> Self {
        if !value.is_finite() {
            return Self::undefined(psi, r2, format!("value is not finite ({value})"));
        }
        let floor = absolute_floor + RELATIVE_FLOOR * if scale.is_finite() { scale.abs() } else { 0.0 };
        let margin = value + floor;
        Self {
            psi,
            r2,
            value: Some(value),
            margin: Some(margin),
            verdict: if margin < 0.0 { Verdict::Violated } else { Verdict::Satisfied },
            reason: None,
        }
    }

    fn undefined(psi: Option<f64>, r2: Option<f64>, reason: impl Into<String>) -> Self {
        Self {
            psi,
            r2,
            value: None,
            margin: None,
            verdict: Verdict::Undefined,
            reason: Some(reason.into()),
        }
    }

    fn from_transform(
        psi: Option<f64>,
        r2: Option<f64>,
        value: Result<TransformValue>,
        scale: f64,
        absolute_floor: f64,
        divergent_reason: &str,
    ) -> Self {
        match value {
            Ok(TransformValue::Finite(v)) => Self::judged(psi, r2, v, scale, absolute_floor),
            Ok(TransformValue::Divergent) => Self::undefined(psi, r2, divergent_reason),
            Err(e) => Self::undefined(psi, r2, e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionSummary {
    pub satisfied: usize,
    pub violated: usize,
    pub undefined: usize,
    /// Smallest margin over defined points.
    pub worst_margin: Option<f64>,
    pub worst_location: Option<Location>,
    /// First violated point in entry order (ascending Ψ, then r²).
    pub first_violation: Option<Location>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
}

impl ConditionSummary {
    fn of(points: &[ConditionPoint]) -> Self {
        let count = |v| points.iter().filter(|p| p.verdict == v).count();
        let worst = points
            .iter()
            .filter_map(|p| p.margin.map(|m| (m, p)))
            .fold(None::<(f64, &ConditionPoint)>, |acc, (m, p)| match acc {
                Some((best, _)) if best <= m => acc,
                _ => Some((m, p)),
            });
        let first = points.iter().find(|p| p.verdict == Verdict::Violated);
        Self {
            satisfied: count(Verdict::Satisfied),
            violated: count(Verdict::Violated),
            undefined: count(Verdict::Undefined),
            worst_margin: worst.map(|w| w.0),
            worst_location: worst.map(|(_, p)| Location { psi: p.psi, r2: p.r2 }),
            first_violation: first.map(|p| Location { psi: p.psi, r2: p.r2 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionResult {
    pub id: ConditionId,
    pub description: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caveat: Option<&'static str>,
    pub points: Vec<ConditionPoint>,
    pub summary: ConditionSummary,
}

impl ConditionResult {
    fn new(id: ConditionId, points: Vec<ConditionPoint>) -> Self {
        let summary = ConditionSummary::of(&points);
        Self {
            id,
            description: id.description(),
            caveat: id.caveat(),
            points,
            summary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BbarConvergence {
    Converges,
    Divergent,
    BoundaryIndeterminate,
    /// `B` is not positive at the smallest nodes, so no exponent can be fitted.
    Unavailable,
}

impl BbarConvergence {
    pub fn label(self) -> &'static str {
        match self {
            BbarConvergence::Converges => "B-bar converges",
            BbarConvergence::Divergent => "B-bar divergent",
            BbarConvergence::BoundaryIndeterminate => "boundary - indeterminate",
            BbarConvergence::Unavailable => "unavailable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BbarClassification {
    pub beta0_estimate: Option<f64>,
    pub verdict: BbarConvergence,
    pub label: &'static str,
}

impl BbarClassification {
    pub fn from_beta0(beta0: Option<f64>) -> Self {
        let verdict = match beta0 {
            None => BbarConvergence::Unavailable,
            Some(b) if b < 0.5 - BETA0_BAND => BbarConvergence::Converges,
            Some(b) if b > 0.5 + BETA0_BAND => BbarConvergence::Divergent,
            Some(_) => BbarConvergence::BoundaryIndeterminate,
        };
        Self {
            beta0_estimate: beta0,
            verdict,
            label: verdict.label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportStatus {
    AllSatisfied,
    Violations,
    UndefinedOnly,
}

impl ReportStatus {
    /// Process exit status for this outcome.
    pub fn exit_code(self) -> i32 {
        match self {
            ReportStatus::AllSatisfied => 0,
            ReportStatus::Violations => 2,
            ReportStatus::UndefinedOnly => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub model: String,
    pub parameters: Vec<(String, f64)>,
    pub conditions: Vec<ConditionResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b_bar_classification: Option<BbarClassification>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn empty(model: &AugmentedDensityModel) -> Self {
        Self {
            model: model.name().to_string(),
            parameters: model.parameters().to_vec(),
            conditions: Vec::new(),
            b_bar_classification: None,
            notes: vec![NECESSARY_ONLY_NOTE.to_string()],
        }
    }

    pub fn condition(&self, id: ConditionId) -> Option<&ConditionResult> {
        self.conditions.iter().find(|c| c.id == id)
    }

    /// Appends the conditions and notes of `other`.
    pub fn merge(mut self, other: ConditionReport) -> Self {
        self.conditions.extend(other.conditions);
        if other.b_bar_classification.is_some() {
            self.b_bar_classification = other.b_bar_classification;
        }
        for note in other.notes {
            if !self.notes.contains(&note) {
                self.notes.push(note);
            }
        }
        self
    }

    pub fn status(&self) -> ReportStatus {
        let violated = self.conditions.iter().any(|c| c.summary.violated > 0);
        let undefined = self.conditions.iter().any(|c| c.summary.undefined > 0);
        match (violated, undefined) {
            (true, _) => ReportStatus::Violations,
            (false, true) => ReportStatus::UndefinedOnly,
            (false, false) => ReportStatus::AllSatisfied,
        }
    }

    /// Violated location with the smallest `(Ψ, r²)` over all conditions.
    pub fn first_violation(&self) -> Option<(ConditionId, Location)> {
        let key = |l: &Location| (l.psi.unwrap_or(f64::INFINITY), l.r2.unwrap_or(f64::INFINITY));
        self.conditions
            .iter()
            .filter_map(|c| c.summary.first_violation.map(|l| (c.id, l)))
            .min_by(|a, b| key(&a.1).partial_cmp(&key(&b.1)).expect("finite keys"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("report is serializable");
        let obj = value.as_object_mut().expect("object");
        obj.insert("schema_version".into(), 1.into());
        obj.insert("status".into(), serde_json::to_value(self.status()).expect("status"));
        value
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,psi,r2,value,margin,verdict,reason\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
        for c in &self.conditions {
            for p in &c.points {
                let verdict = serde_json::to_value(p.verdict).expect("verdict");
                let reason = p.reason.as_deref().unwrap_or("").replace('"', "'");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},\"{}\"",
                    c.id.name(),
                    opt(p.psi),
                    opt(p.r2),
                    opt(p.value),
                    opt(p.margin),
                    verdict.as_str().expect("string"),
                    reason
                );
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model: {}", self.model);
        for (k, v) in &self.parameters {
            let _ = writeln!(out, "  {k} = {v}");
        }
        let _ = writeln!(out, "status: {:?}", self.status());
        let _ = writeln!(
            out,
            "{:<22} {:>9} {:>9} {:>9} {:>14}  first violation",
            "condition", "satisfied", "violated", "undefined", "worst margin"
        );
        for c in &self.conditions {
            let s = &c.summary;
            let worst = s.worst_margin.map_or("-".to_string(), |m| format!("{m:.6e}"));
            let first = s.first_violation.map_or("-".to_string(), |l| {
                let mut parts = Vec::new();
                if let Some(p) = l.psi {
                    parts.push(format!("Psi={p:.6}"));
                }
                if let Some(r) = l.r2 {
                    parts.push(format!("r2={r:.6e}"));
                }
                parts.join(" ")
            });
            let _ = writeln!(
                out,
                "{:<22} {:>9} {:>9} {:>9} {:>14}  {}",
                c.id.name(),
                s.satisfied,
                s.violated,
                s.undefined,
                worst,
                first
            );
        }
        if let Some(b) = &self.b_bar_classification {
            let beta0 = b.beta0_estimate.map_or("-".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(out, "B-bar: {} (beta0 estimate {beta0})", b.label);
        }
        for c in &self.conditions {
            if let Some(caveat) = c.caveat {
                let _ = writeln!(out, "note [{}]: {caveat}", c.id.name());
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Non-negativity of the density and of the four diagonal-line derivatives.
pub fn check_general_conditions(
    q: &Quadrature,
    model: &AugmentedDensityModel,
    grid: &EvaluationGrid,
) -> Result<ConditionReport> {
    let floor = q.spec().absolute_floor;
    let rows: Vec<[ConditionPoint; 5]> = grid
        .points()
        .par_iter()
        .map(|&(psi, r2)| {
            let at = (Some(psi), Some(r2));
            let scale_of = |r: Result<TransformValue>| r.ok().and_then(|v| v.finite()).map_or(0.0, f64::abs);
            let hat = scale_of(transforms::rho_hat(q, model, psi, r2));
            let bar_raw = transforms::rho_bar(q, model, psi, r2);
            let bar_divergent = matches!(bar_raw, Ok(TransformValue::Divergent));
            let bar = scale_of(bar_raw);
            let tilde = scale_of(transforms::rho_tilde(q, model, psi, r2));
            let density = model.evaluate(psi, r2);
            let line = |l: Line, scale: f64| {
                ConditionPoint::from_transform(
                    at.0,
                    at.1,
                    transforms::eq21_lhs(q, model, psi, r2, l),
                    scale,
                    floor,
                    "integral diverges",
                )
            };
            let third = if bar_divergent {
                ConditionPoint::undefined(at.0, at.1, "rho_bar diverges")
            } else {
                line(Line::Three, bar / psi)
            };
            [
                ConditionPoint::judged(at.0, at.1, density, density, floor),
                line(Line::One, hat / psi),
                line(Line::Two, hat),
                third,
                line(Line::Four, tilde / r2),
            ]
        })
        .collect();
    let ids = [
        ConditionId::DensityNonNegative,
        ConditionId::DRhoHatDPsi,
        ConditionId::DR2RhoHatDR2,
        ConditionId::DRhoBarDPsi,
        ConditionId::DRhoTildeDR2,
    ];
    let mut report = ConditionReport::empty(model);
    for (k, id) in ids.into_iter().enumerate() {
        let points = rows.iter().map(|row| row[k].clone()).collect();
        report.conditions.push(ConditionResult::new(id, points));
    }
    Ok(report)
}

/// `β₀` from a log-log fit of `B` over the three smallest nodes.
pub fn estimate_beta0(b: &SeparablePart, r2_nodes: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = r2_nodes
        .iter()
        .take(3)
        .map(|&x| (x.ln(), b.value(x)))
        .collect();
    if pts.len() < 2 || pts.iter().any(|&(_, v)| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(x, v)| (x, v.ln())).collect();
    Some(-least_squares_slope(&pts))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// The separable conditions on `A(Ψ)` and `B(r²)`.
pub fn check_separable_conditions(
    q: &Quadrature,
    model: &AugmentedDensityModel,
    grid: &EvaluationGrid,
) -> Result<ConditionReport> {
    let (a, b) = model
        .separable_parts()
        .ok_or_else(|| Error::Precondition("separable conditions need a separable model".into()))?;
    let floor = q.spec().absolute_floor;
    let classification = BbarClassification::from_beta0(estimate_beta0(b, grid.r2_nodes()));
    let b_bar_usable = classification.verdict == BbarConvergence::Converges;
    let not_applicable = format!("B_bar is not defined ({})", classification.label);

    let psi_rows: Vec<[ConditionPoint; 2]> = grid
        .psi_nodes()
        .par_iter()
        .map(|&psi| {
            let at = Some(psi);
            let a_hat_scale = transforms::a_hat(q, a, psi)
                .ok()
                .and_then(|v| v.finite())
                .map_or(0.0, |v| v.abs() / psi);
            let d_a_hat = ConditionPoint::from_transform(
                at,
                None,
                transforms::d_a_hat_dpsi(q, a, psi),
                a_hat_scale,
                floor,
                "integral diverges",
            );
            let d_a = if b_bar_usable {
                ConditionPoint::judged(at, None, a.derivative(psi), a.value(psi).abs() / psi, floor)
            } else {
                ConditionPoint::undefined(at, None, not_applicable.clone())
            };
            [d_a_hat, d_a]
        })
        .collect();

    let r2_rows: Vec<[ConditionPoint; 3]> = grid
        .r2_nodes()
        .par_iter()
        .map(|&r2| {
            let at = Some(r2);
            let b_tilde_scale = transforms::b_tilde(q, b, r2)
                .ok()
                .and_then(|v| v.finite())
                .map_or(0.0, |v| v.abs() / r2);
            let d_b_tilde = ConditionPoint::from_transform(
                None,
                at,
                transforms::d_b_tilde_dr2(q, b, r2),
                b_tilde_scale,
                floor,
                "integral diverges",
            );
            let bv = b.value(r2);
            let one_minus_beta = ConditionPoint::judged(None, at, bv + r2 * b.derivative(r2), bv, floor);
            let r_b_bar = if b_bar_usable {
                let scale = transforms::b_bar(q, b, r2)
                    .ok()
                    .and_then(|v| v.finite())
                    .map_or(0.0, |v| v.abs() / r2.sqrt());
                ConditionPoint::from_transform(
                    None,
                    at,
                    transforms::d_r_b_bar_dr2(q, b, r2),
                    scale,
                    floor,
                    "B_bar diverges",
                )
            } else {
                ConditionPoint::undefined(None, at, not_applicable.clone())
            };
            [d_b_tilde, one_minus_beta, r_b_bar]
        })
        .collect();

    let mut report = ConditionReport::empty(model);
    let column = |rows: &[[ConditionPoint; 2]], k: usize| rows.iter().map(|r| r[k].clone()).collect::<Vec<_>>();
    let column3 = |rows: &[[ConditionPoint; 3]], k: usize| rows.iter().map(|r| r[k].clone()).collect::<Vec<_>>();
    report.conditions.push(ConditionResult::new(ConditionId::DAHatDPsi, column(&psi_rows, 0)));
    report.conditions.push(ConditionResult::new(ConditionId::DBTildeDR2, column3(&r2_rows, 0)));
    report.conditions.push(ConditionResult::new(ConditionId::OneMinusBetaB, column3(&r2_rows, 1)));
    report.conditions.push(ConditionResult::new(ConditionId::DADPsi, column(&psi_rows, 1)));
    report.conditions.push(ConditionResult::new(ConditionId::DRBBarDR2, column3(&r2_rows, 2)));
    report.b_bar_classification = Some(classification);
    report.notes.push(IMPLICATION_NOTE.to_string());
    match classification.verdict {
        BbarConvergence::BoundaryIndeterminate => report.notes.push(BOUNDARY_NOTE.to_string()),
        BbarConvergence::Divergent => report.notes.push(DIVERGENT_NOTE.to_string()),
        _ => {}
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnisotropyProfile {
    pub r_nodes: Vec<f64>,
    /// `None` where `β` cannot be computed.
    pub beta_values: Vec<Option<f64>>,
    pub beta0_estimate: Option<f64>,
}

/// `β = -d ln B / d ln r²` at a single radius.
pub fn beta_from_b(b: &SeparablePart, r: f64) -> Option<f64> {
    let r2 = r * r;
    let bv = b.value(r2);
    if !(bv > 0.0 && bv.is_finite()) {
        return None;
    }
    let beta = -r2 * b.derivative(r2) / bv;
    beta.is_finite().then_some(beta)
}

pub fn anisotropy_from_b(b: &SeparablePart, r_nodes: &[f64]) -> AnisotropyProfile {
    let r2_nodes: Vec<f64> = r_nodes.iter().map(|r| r * r).collect();
    AnisotropyProfile {
        r_nodes: r_nodes.to_vec(),
        beta_values: r_nodes.iter().map(|&r| beta_from_b(b, r)).collect(),
        beta0_estimate: estimate_beta0(b, &r2_nodes),
    }
}

/// `B(r²) = exp(-∫_1^r 2β(s)/s ds)`, normalized to `B(1) = 1`.
///
/// The integral is taken in `ln r` with a fixed Gauss-Legendre rule, so the
/// returned part is cheap to evaluate; its derivative follows from `β` itself.
pub fn b_from_anisotropy<F>(beta_fn: F, r_nodes: &[f64]) -> Result<SeparablePart>
where
    F: Fn(f64) -> f64 + Send + Sync + Clone + 'static,
{
    if let Some(&r) = r_nodes.iter().find(|&&r| !(r > 0.0 && beta_fn(r).is_finite())) {
        return Err(Error::Domain(format!("β is not finite at r = {r}")));
    }
    let q = Quadrature::with_nodes(64)?;
    let beta = beta_fn.clone();
    let log_b = move |r2: f64| -> f64 {
        let x = 0.5 * r2.ln();
        if x == 0.0 {
            return 0.0;
        }
        let integral = q.integrate(|u| 2.0 * beta(u.exp()), 0.0, x).unwrap_or(f64::NAN);
        -integral
    };
    let log_b_value = log_b.clone();
    Ok(SeparablePart::from_fn("B from beta", move |r2| log_b_value(r2).exp())
        .with_derivative(move |r2| -beta_fn(r2.sqrt()) * log_b(r2).exp() / r2))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeProfile {
    pub r_nodes: Vec<f64>,
    pub rho_values: Vec<f64>,
    /// `γ = -d ln ρ / d ln r`; `None` where `ρ` is not positive.
    pub gamma_values: Vec<Option<f64>>,
}

/// Step in `ln r` for the slope estimate.
pub const LOG_SLOPE_STEP: f64 = 1e-3;

/// `ρ(r) = p₀,₀[Ψ(r), r²]` and its logarithmic slope by a five-point
/// centred difference in `ln r` with step [`LOG_SLOPE_STEP`], independent of
/// the node spacing.
pub fn slope_profile(model: &AugmentedDensityModel, potential: &PotentialModel, r_nodes: &[f64]) -> SlopeProfile {
    let rho_at = |r: f64| model.evaluate(potential.psi(r), r * r);
    let rho: Vec<f64> = r_nodes.iter().map(|&r| rho_at(r)).collect();
    let h = LOG_SLOPE_STEP;
    let gamma = r_nodes
        .iter()
        .map(|&r| {
            let y = [-2.0, -1.0, 1.0, 2.0].map(|k| rho_at(r * (k * h).exp()));
            if y.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return None;
            }
            let [a, b, c, d] = y.map(f64::ln);
            Some(-(a - 8.0 * b + 8.0 * c - d) / (12.0 * h))
        })
        .collect();
    SlopeProfile {
        r_nodes: r_nodes.to_vec(),
        rho_values: rho,
        gamma_values: gamma,
    }
}

/// `β(r)` of any augmented density from `p₁,₀ = ∫_0^Ψ p₀,₀ dQ`:
/// `β = -∂ ln p₁,₀ / ∂ ln r²`.
pub fn beta_from_density(q: &Quadrature, model: &AugmentedDensityModel, psi: f64, r2: f64) -> Result<f64> {
    if let Some((_, b)) = model.separable_parts() {
        return beta_from_b(b, r2.sqrt()).ok_or_else(|| Error::Domain(format!("B is not positive at r² = {r2}")));
    }
    let p10 = q.integrate(|x| model.evaluate(x, r2), 0.0, psi)?;
    let dp10 = q.integrate(|x| model.d_dr2(x, r2), 0.0, psi)?;
    if !(p10 > 0.0) {
        return Err(Error::Domain(format!("p₁,₀ vanishes at Ψ = {psi}, r² = {r2}")));
    }
    Ok(-r2 * dp10 / p10)
}

/// `γ(r) - 2β(r) ≥ 0` at the radii `√r²` of the grid's r² nodes.
pub fn slope_anisotropy_check(
    q: &Quadrature,
    model: &AugmentedDensityModel,
    potential: &PotentialModel,
    grid: &EvaluationGrid,
) -> Result<ConditionReport> {
    let r_nodes: Vec<f64> = grid.r2_nodes().iter().map(|r2| r2.sqrt()).collect();
    potential.check_monotone(&r_nodes)?;
    let slope = slope_profile(model, potential, &r_nodes);
    let floor = q.spec().absolute_floor;
    let points: Vec<ConditionPoint> = r_nodes
        .par_iter()
        .zip(slope.gamma_values.par_iter())
        .map(|(&r, gamma)| {
            let (psi, r2) = (potential.psi(r), r * r);
            let Some(gamma) = *gamma else {
                return ConditionPoint::undefined(Some(psi), Some(r2), "density is not positive");
            };
            match beta_from_density(q, model, psi, r2) {
                Ok(beta) => {
                    ConditionPoint::judged(Some(psi), Some(r2), gamma - 2.0 * beta, gamma.abs() + 2.0 * beta.abs(), floor)
                }
                Err(e) => ConditionPoint::undefined(Some(psi), Some(r2), e.to_string()),
            }
        })
        .collect();
    let mut report = ConditionReport::empty(model);
    report.conditions.push(ConditionResult::new(ConditionId::SlopeAnisotropy, points));
    Ok(report)
}
