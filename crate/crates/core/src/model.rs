//! Domain types: augmented densities, distribution functions, potentials,
//! evaluation grids and the accessible-region kernel `K`.
//!
//! Built-in models use units with `G = M = b = 1`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type BivariateFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Finite-difference step for a derivative at `x`: `x·1e-5 + 1e-8`, capped at
/// `x/10` so that central stencils never cross zero.
pub fn fd_step(x: f64) -> f64 {
    let h = x.abs() * 1e-5 + 1e-8;
    if x > 0.0 {
        h.min(0.1 * x)
    } else {
        h
    }
}

/// Central difference at `x > 0`, second-order forward difference at `x = 0`.
pub fn numerical_derivative<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
    let h = fd_step(x);
    if x > 0.0 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    } else {
        (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
    }
}

/// Five-point central difference with an explicit step.
pub fn five_point_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// One factor of a separable augmented density, `A(Ψ)` or `B(r²)`.
#[derive(Clone)]
pub struct SeparablePart {
    label: String,
    value: ScalarFn,
    derivative: Option<ScalarFn>,
    second_derivative: Option<ScalarFn>,
    constant: bool,
}

impl fmt::Debug for SeparablePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparablePart")
            .field("label", &self.label)
            .field("analytic_derivative", &self.derivative.is_some())
            .field("constant", &self.constant)
            .finish()
    }
}

impl SeparablePart {
    pub fn from_fn<F>(label: impl Into<String>, value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.into(),
            value: Arc::new(value),
            derivative: None,
            second_derivative: None,
            constant: false,
        }
    }

    pub fn with_derivative<F>(mut self, derivative: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_second_derivative<F>(mut self, second: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.second_derivative = Some(Arc::new(second));
        self
    }

    pub fn constant(c: f64) -> Self {
        let mut part = Self::from_fn(format!("{c}"), move |_| c)
            .with_derivative(|_| 0.0)
            .with_second_derivative(|_| 0.0);
        part.constant = true;
        part
    }

    /// `coeff · x^exponent` with analytic derivatives.
    pub fn power(coeff: f64, exponent: f64) -> Self {
        if exponent == 0.0 {
            return Self::constant(coeff);
        }
        let d1 = move |x: f64| {
            if exponent == 1.0 {
                coeff
            } else {
                coeff * exponent * x.powf(exponent - 1.0)
            }
        };
        let d2 = move |x: f64| {
            if exponent == 1.0 || exponent == 2.0 {
                coeff * exponent * (exponent - 1.0)
            } else {
                coeff * exponent * (exponent - 1.0) * x.powf(exponent - 2.0)
            }
        };
        Self::from_fn(format!("{coeff}*x^{exponent}"), move |x| coeff * x.powf(exponent))
            .with_derivative(d1)
            .with_second_derivative(d2)
    }

    /// `Σ c_k x^k` with analytic derivatives.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let c = Arc::new(coeffs);
        let (c0, c1, c2) = (c.clone(), c.clone(), c.clone());
        let label = format!("poly{:?}", c.as_slice());
        Self::from_fn(label, move |x| c0.iter().rev().fold(0.0, |acc, &ck| acc * x + ck))
            .with_derivative(move |x| {
                c1.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &ck)| acc * x + k as f64 * ck)
            })
            .with_second_derivative(move |x| {
                c2.iter()
                    .enumerate()
                    .skip(2)
                    .rev()
                    .fold(0.0, |acc, (k, &ck)| acc * x + (k * (k - 1)) as f64 * ck)
            })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.derivative {
            Some(d) => d(x),
            None => numerical_derivative(|y| (self.value)(y), x),
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        if let Some(d2) = &self.second_derivative {
            return d2(x);
        }
        let h = {
            let h = x.abs() * 1e-4 + 1e-6;
            if x > 0.0 {
                h.min(0.1 * x)
            } else {
                h
            }
        };
        if x > 0.0 {
            (self.derivative(x + h) - self.derivative(x - h)) / (2.0 * h)
        } else {
            (-3.0 * self.derivative(x) + 4.0 * self.derivative(x + h) - self.derivative(x + 2.0 * h))
                / (2.0 * h)
        }
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    /// `c · part`.
    pub fn scaled(&self, c: f64) -> Self {
        let v = self.value.clone();
        let mut out = Self::from_fn(format!("{c}*({})", self.label), move |x| c * v(x));
        if let Some(d) = self.derivative.clone() {
            out = out.with_derivative(move |x| c * d(x));
        }
        if let Some(d2) = self.second_derivative.clone() {
            out = out.with_second_derivative(move |x| c * d2(x));
        }
        out.constant = self.constant;
        out
    }

    /// `a·self + other`.
    pub fn linear_combination(&self, a: f64, other: &SeparablePart) -> Self {
        let (v1, v2) = (self.value.clone(), other.value.clone());
        let mut out = Self::from_fn(format!("{a}*({})+({})", self.label, other.label), move |x| {
            a * v1(x) + v2(x)
        });
        if let (Some(d1), Some(d2)) = (self.derivative.clone(), other.derivative.clone()) {
            out = out.with_derivative(move |x| a * d1(x) + d2(x));
        }
        if let (Some(s1), Some(s2)) = (self.second_derivative.clone(), other.second_derivative.clone()) {
            out = out.with_second_derivative(move |x| a * s1(x) + s2(x));
        }
        out
    }
}

#[derive(Clone)]
enum Repr {
    Separable {
        a: SeparablePart,
        b: SeparablePart,
    },
    Bivariate {
        eval: BivariateFn,
        d_psi: Option<BivariateFn>,
        d_r2: Option<BivariateFn>,
    },
}

/// The augmented density `p₀,₀(Ψ, r²)`.
#[derive(Clone)]
pub struct AugmentedDensityModel {
    name: String,
    parameters: Vec<(String, f64)>,
    repr: Repr,
}

impl fmt::Debug for AugmentedDensityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Separable { .. } => "separable",
            Repr::Bivariate { .. } => "bivariate",
        };
        f.debug_struct("AugmentedDensityModel")
            .field("name", &self.name)
            .field("kind", &kind)
            .field("parameters", &self.parameters)
            .finish()
    }
}

impl AugmentedDensityModel {
    pub fn separable(name: impl Into<String>, a: SeparablePart, b: SeparablePart) -> Self {
        Self {
            name: name.into(),
            parameters: Vec::new(),
            repr: Repr::Separable { a, b },
        }
    }

    pub fn bivariate<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            parameters: Vec::new(),
            repr: Repr::Bivariate {
                eval: Arc::new(eval),
                d_psi: None,
                d_r2: None,
            },
        }
    }

    /// Supplies analytic partial derivatives for a bivariate model.
    pub fn with_partials<P, R>(mut self, d_psi: P, d_r2: R) -> Self
    where
        P: Fn(f64, f64) -> f64 + Send + Sync + 'static,
        R: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        if let Repr::Bivariate {
            d_psi: ref mut dp,
            d_r2: ref mut dr,
            ..
        } = self.repr
        {
            *dp = Some(Arc::new(d_psi));
            *dr = Some(Arc::new(d_r2));
        }
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_parameters(mut self, parameters: Vec<(String, f64)>) -> Self {
        self.parameters = parameters;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn parameters(&self) -> &[(String, f64)] {
        &self.parameters
    }

    pub fn evaluate(&self, psi: f64, r2: f64) -> f64 {
        match &self.repr {
            Repr::Separable { a, b } => a.value(psi) * b.value(r2),
            Repr::Bivariate { eval, .. } => eval(psi, r2),
        }
    }

    pub fn d_dpsi(&self, psi: f64, r2: f64) -> f64 {
        match &self.repr {
            Repr::Separable { a, b } => a.derivative(psi) * b.value(r2),
            Repr::Bivariate {
                d_psi: Some(d), ..
            } => d(psi, r2),
            Repr::Bivariate { eval, .. } => numerical_derivative(|x| eval(x, r2), psi),
        }
    }

    pub fn d_dr2(&self, psi: f64, r2: f64) -> f64 {
        match &self.repr {
            Repr::Separable { a, b } => a.value(psi) * b.derivative(r2),
            Repr::Bivariate { d_r2: Some(d), .. } => d(psi, r2),
            Repr::Bivariate { eval, .. } => numerical_derivative(|x| eval(psi, x), r2),
        }
    }

    pub fn separable_parts(&self) -> Option<(&SeparablePart, &SeparablePart)> {
        match &self.repr {
            Repr::Separable { a, b } => Some((a, b)),
            Repr::Bivariate { .. } => None,
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.repr, Repr::Separable { .. })
    }

    /// Separable with a constant `B`, i.e. an isotropic system.
    pub fn is_isotropic(&self) -> bool {
        matches!(&self.repr, Repr::Separable { b, .. } if b.is_constant())
    }

    /// `c · p₀,₀`.
    pub fn scaled(&self, c: f64) -> Self {
        let repr = match &self.repr {
            Repr::Separable { a, b } => Repr::Separable {
                a: a.scaled(c),
                b: b.clone(),
            },
            Repr::Bivariate { eval, d_psi, d_r2 } => {
                let e = eval.clone();
                let scale = |d: &Option<BivariateFn>| {
                    d.clone().map(|d| Arc::new(move |x: f64, y: f64| c * d(x, y)) as BivariateFn)
                };
                Repr::Bivariate {
                    eval: Arc::new(move |x, y| c * e(x, y)),
                    d_psi: scale(d_psi),
                    d_r2: scale(d_r2),
                }
            }
        };
        Self {
            name: format!("{c}*{}", self.name),
            parameters: self.parameters.clone(),
            repr,
        }
    }

    /// Largest relative deviation of `evaluate` from `A(Ψ)·B(r²)` over the
    /// sample points; `None` for bivariate models.
    pub fn factorization_error(&self, samples: &[(f64, f64)]) -> Option<f64> {
        let (a, b) = self.separable_parts()?;
        let worst = samples
            .iter()
            .map(|&(psi, r2)| {
                let direct = self.evaluate(psi, r2);
                let product = a.value(psi) * b.value(r2);
                (direct - product).abs() / product.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        Some(worst)
    }
}

/// A two-integral distribution function `f(ℰ, L²)`.
pub trait DistributionFunction: Send + Sync {
    fn evaluate(&self, energy: f64, l2: f64) -> f64;
}

impl<F> DistributionFunction for F
where
    F: Fn(f64, f64) -> f64 + Send + Sync,
{
    fn evaluate(&self, energy: f64, l2: f64) -> f64 {
        self(energy, l2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantDf(pub f64);

impl DistributionFunction for ConstantDf {
    fn evaluate(&self, _energy: f64, _l2: f64) -> f64 {
        self.0
    }
}

/// `f = c · ℰ^a · (L²)^b`, the family used as test oracle throughout.
///
/// `b = -β` gives a constant-anisotropy system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawDf {
    pub coeff: f64,
    pub energy_exp: f64,
    pub l2_exp: f64,
}

impl PowerLawDf {
    pub fn new(coeff: f64, energy_exp: f64, l2_exp: f64) -> Self {
        Self {
            coeff,
            energy_exp,
            l2_exp,
        }
    }

    pub fn label(&self) -> String {
        format!("{}*E^{}*L2^{}", self.coeff, self.energy_exp, self.l2_exp)
    }

    /// Closed-form augmented density of this DF:
    /// `p₀,₀ = c·2π·2^{b+1/2}·B(b+1, 1/2)·B(a+1, b+3/2)·Ψ^{a+b+3/2}·(r²)^b`.
    pub fn augmented_density(&self) -> Result<AugmentedDensityModel> {
        let (a, b) = (self.energy_exp, self.l2_exp);
        if !(a > -1.0 && b > -1.0) {
            return Err(Error::Precondition(
                "power-law DF exponents must exceed -1 for a finite density".into(),
            ));
        }
        let coeff = self.coeff
            * 2.0
            * PI
            * 2f64.powf(b + 0.5)
            * beta(b + 1.0, 0.5)
            * beta(a + 1.0, b + 1.5);
        Ok(AugmentedDensityModel::separable(
            format!("density of {}", self.label()),
            SeparablePart::power(coeff, a + b + 1.5),
            SeparablePart::power(1.0, b),
        ))
    }
}

impl DistributionFunction for PowerLawDf {
    fn evaluate(&self, energy: f64, l2: f64) -> f64 {
        self.coeff * energy.powf(self.energy_exp) * l2.powf(self.l2_exp)
    }
}

/// Relative potential `Ψ(r)`, non-negative and decreasing outward.
#[derive(Clone)]
pub struct PotentialModel {
    name: String,
    psi: ScalarFn,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialModel").field("name", &self.name).finish()
    }
}

impl PotentialModel {
    pub fn from_fn<F>(name: impl Into<String>, psi: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            psi: Arc::new(psi),
        }
    }

    /// `Ψ(r) = (1 + r²)^{-1/2}`.
    pub fn plummer() -> Self {
        Self::from_fn("plummer", |r| 1.0 / (1.0 + r * r).sqrt())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn psi(&self, r: f64) -> f64 {
        (self.psi)(r)
    }

    /// Checks non-negativity and monotone decrease on ascending radii.
    pub fn check_monotone(&self, radii: &[f64]) -> Result<()> {
        let values: Vec<f64> = radii.iter().map(|&r| self.psi(r)).collect();
        if let Some((r, v)) = radii.iter().zip(&values).find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("Ψ({r}) = {v} is negative or not finite")));
        }
        for (i, w) in values.windows(2).enumerate() {
            if w[1] > w[0] {
                return Err(Error::Domain(format!(
                    "potential increases between r = {} and r = {}",
                    radii[i],
                    radii[i + 1]
                )));
            }
        }
        Ok(())
    }
}

/// Tensor grid of `Ψ` and `r²` nodes, both strictly positive and ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    psi_nodes: Vec<f64>,
    r2_nodes: Vec<f64>,
}

impl EvaluationGrid {
    pub fn new(psi_nodes: Vec<f64>, r2_nodes: Vec<f64>) -> Result<Self> {
        check_nodes("Ψ", &psi_nodes)?;
        check_nodes("r²", &r2_nodes)?;
        Ok(Self { psi_nodes, r2_nodes })
    }

    /// 64 linear Ψ nodes on `(0, psi_max]` and 64 logarithmic r² nodes on `[1e-3, 1e3]`.
    pub fn default_for(psi_max: f64) -> Result<Self> {
        Self::new(linear_nodes(psi_max, 64), log_nodes(1e-3, 1e3, 64))
    }

    pub fn psi_nodes(&self) -> &[f64] {
        &self.psi_nodes
    }

    pub fn r2_nodes(&self) -> &[f64] {
        &self.r2_nodes
    }

    pub fn len(&self) -> usize {
        self.psi_nodes.len() * self.r2_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All `(Ψ, r²)` points, Ψ-major.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.psi_nodes
            .iter()
            .flat_map(|&p| self.r2_nodes.iter().map(move |&r| (p, r)))
            .collect()
    }
}

fn check_nodes(label: &str, nodes: &[f64]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Grid(format!("{label} node list is empty")));
    }
    if let Some(bad) = nodes.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::Grid(format!("{label} node {bad} is not strictly positive")));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Grid(format!("{label} nodes are not strictly ascending")));
    }
    Ok(())
}

/// `max · i / n` for `i = 1..=n`.
pub fn linear_nodes(max: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| max * i as f64 / n as f64).collect()
}

/// `n` logarithmically spaced nodes spanning `[min, max]`.
pub fn log_nodes(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![min];
    }
    let (lo, hi) = (min.ln(), max.ln());
    (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `K = 2(Ψ - ℰ) - L²/r²`; positive inside the accessible triangle.
pub fn kernel_k(energy: f64, l2: f64, psi: f64, r2: f64) -> Result<f64> {
    if !(r2 > 0.0) {
        return Err(Error::Domain(format!("kernel K needs r² > 0, got {r2}")));
    }
    Ok(2.0 * (psi - energy) - l2 / r2)
}

/// `A(Ψ) = (3/4π) Ψ⁵`, the isotropic Plummer augmented density.
pub fn plummer_density_part() -> SeparablePart {
    SeparablePart::power(3.0 / (4.0 * PI), 5.0).with_label("3/(4π)·Ψ^5")
}

/// Unit-scaled Plummer sphere: `p₀,₀ = (3/4π)Ψ⁵`, `Ψ(r) = (1 + r²)^{-1/2}`.
pub fn make_plummer_pair() -> (AugmentedDensityModel, PotentialModel) {
    let model = AugmentedDensityModel::separable("plummer", plummer_density_part(), SeparablePart::constant(1.0));
    (model, PotentialModel::plummer())
}

/// `p₀,₀ = A(Ψ) · (r²)^{-β₀}`.
pub fn make_powerlaw_separable(beta0: f64, a_part: SeparablePart) -> Result<AugmentedDensityModel> {
    if !(beta0 < 1.0) {
        return Err(Error::Precondition(format!(
            "β₀ = {beta0} ≥ 1 makes (1-β)B negative everywhere"
        )));
    }
    let b = SeparablePart::power(1.0, -beta0).with_label(format!("(r2)^(-{beta0})"));
    Ok(
        AugmentedDensityModel::separable(format!("powerlaw(beta0={beta0}, A={})", a_part.label()), a_part, b)
            .with_parameters(vec![("beta0".into(), beta0)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_k(0.0, 0.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(kernel_k(3.0, 0.0, 3.0, 2.0).unwrap(), 0.0);
        assert_eq!(kernel_k(0.0, 8.0, 1.0, 4.0).unwrap(), 0.0);
        assert!(kernel_k(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_is_affine() {
        let (psi, r2) = (0.8, 3.0);
        let k = |e, l2| kernel_k(e, l2, psi, r2).unwrap();
        assert!((k(0.3, 0.5) - k(0.2, 0.5) + 0.2).abs() < 1e-15);
        assert!((k(0.2, 1.5) - k(0.2, 0.5) + 1.0 / r2).abs() < 1e-15);
    }

    #[test]
    fn plummer_examples() {
        let (model, pot) = make_plummer_pair();
        assert_eq!(pot.psi(0.0), 1.0);
        for r2 in [1e-3, 1.0, 50.0] {
            assert!((model.evaluate(1.0, r2) - 3.0 / (4.0 * PI)).abs() < 1e-16);
            assert_eq!(model.evaluate(0.0, r2), 0.0);
        }
        for r in [0.01, 0.5, 2.0, 30.0] {
            let rho = model.evaluate(pot.psi(r), r * r);
            let exact = 3.0 / (4.0 * PI) * (1.0 + r * r).powf(-2.5);
            assert!((rho - exact).abs() / exact < 1e-13);
        }
        assert!(model.is_isotropic());
    }

    #[test]
    fn powerlaw_examples() {
        let iso = make_powerlaw_separable(0.0, SeparablePart::power(1.0, 2.0)).unwrap();
        assert!(iso.is_isotropic());
        let m = make_powerlaw_separable(0.25, SeparablePart::power(1.0, 2.0)).unwrap();
        assert!((m.evaluate(0.5, 16.0) - 0.25 / 2.0).abs() < 1e-16);
        let tangential = make_powerlaw_separable(-1.0, SeparablePart::constant(1.0)).unwrap();
        assert!((tangential.evaluate(0.3, 7.0) - 7.0).abs() < 1e-14);
        assert!(make_powerlaw_separable(1.0, SeparablePart::constant(1.0)).is_err());
    }

    #[test]
    fn separable_factorization_holds() {
        let m = make_powerlaw_separable(0.25, plummer_density_part()).unwrap();
        let samples: Vec<_> = [(0.1, 0.01), (0.5, 2.0), (0.9, 300.0)].to_vec();
        assert!(m.factorization_error(&samples).unwrap() < 1e-12);
        let biv = AugmentedDensityModel::bivariate("b", |p, r| p * r);
        assert!(biv.factorization_error(&samples).is_none());
    }

    #[test]
    fn rank_one_cross_product() {
        let m = make_powerlaw_separable(-0.5, plummer_density_part()).unwrap();
        let pts = [(0.2, 0.5), (0.7, 20.0), (0.95, 1e-2)];
        for &(p, r) in &pts {
            for &(q, s) in &pts {
                let lhs = m.evaluate(p, r) * m.evaluate(q, s);
                let rhs = m.evaluate(p, s) * m.evaluate(q, r);
                assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()));
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let parts = [
            plummer_density_part(),
            SeparablePart::power(2.0, -0.25),
            SeparablePart::polynomial(vec![0.0, 1.0, -1.0]),
            SeparablePart::power(1.0, 3.5),
        ];
        for part in &parts {
            for x in [0.1, 0.4, 0.77, 2.0] {
                let fd = numerical_derivative(|y| part.value(y), x);
                let an = part.derivative(x);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-12), "{part:?} at {x}");
            }
        }
    }

    #[test]
    fn numerical_second_derivative() {
        let p = SeparablePart::from_fn("cube", |x| x * x * x);
        for x in [0.0, 0.3, 1.5] {
            assert!((p.second_derivative(x) - 6.0 * x).abs() < 1e-5);
        }
        assert!((p.derivative(0.0)).abs() < 1e-10);
    }

    #[test]
    fn polynomial_part() {
        let p = SeparablePart::polynomial(vec![1.0, -2.0, 3.0]);
        assert_eq!(p.value(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.derivative(2.0), -2.0 + 12.0);
        assert_eq!(p.second_derivative(2.0), 6.0);
    }

    #[test]
    fn grid_validation() {
        assert!(EvaluationGrid::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(EvaluationGrid::new(vec![0.5, 0.4], vec![1.0]).is_err());
        assert!(EvaluationGrid::new(vec![], vec![1.0]).is_err());
        let g = EvaluationGrid::default_for(1.0).unwrap();
        assert_eq!(g.psi_nodes().len(), 64);
        assert_eq!(*g.psi_nodes().last().unwrap(), 1.0);
        assert!((g.r2_nodes()[0] - 1e-3).abs() < 1e-15);
        assert!((g.r2_nodes()[63] - 1e3).abs() < 1e-9);
        assert_eq!(g.points().len(), 64 * 64);
    }

    #[test]
    fn potential_monotonicity() {
        let pot = PotentialModel::plummer();
        assert!(pot.check_monotone(&[0.0, 0.5, 1.0, 10.0]).is_ok());
        let bad = PotentialModel::from_fn("bad", |r| r);
        assert!(bad.check_monotone(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn power_law_df_density_of_constant_df() {
        let m = PowerLawDf::new(1.0, 0.0, 0.0).augmented_density().unwrap();
        let expected = 8.0 * 2f64.sqrt() * PI / 3.0;
        assert!((m.evaluate(1.0, 5.0) - expected).abs() < 1e-13);
        assert!(PowerLawDf::new(1.0, -1.0, 0.0).augmented_density().is_err());
    }

    #[test]
    fn scaled_model() {
        let (m, _) = make_plummer_pair();
        let s = m.scaled(3.0);
        assert!((s.evaluate(0.5, 1.0) - 3.0 * m.evaluate(0.5, 1.0)).abs() < 1e-16);
        assert!(s.is_isotropic());
    }
}
