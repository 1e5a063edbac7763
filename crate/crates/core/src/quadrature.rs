//! Integration kernels for Abel-type integrals with inverse-square-root
//! endpoint singularities, double integrals over the accessible triangle and
//! line integrals along its diagonal.
//!
//! Every singular weight is removed by a trigonometric substitution
//! (`t = X sin²θ` for `(X - t)^{-1/2}`, `t = X sin²(φ/2)` for
//! `t^{-1/2}(X - t)^{-1/2}`), after which a fixed Gauss-Legendre rule is
//! applied. Integrands that carry an additional non-half-integer power law at
//! an endpoint are detected by probing the integrand at `X·{1e-6, 1e-8, 1e-10}`
//! from that endpoint; the fitted exponent decides both divergence and an
//! algebraic grading map `s = v^q` that turns the leading power into an
//! integer one. The rule never adapts to the integrand beyond that, so results
//! are deterministic and independent of evaluation order.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::DistributionFunction;

/// Offsets (relative to the interval length) at which endpoint behaviour is probed.
pub const PROBE_OFFSETS: [f64; 3] = [1e-6, 1e-8, 1e-10];

/// Dead band on the power-law exponent used when classifying divergence.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-3;

/// Exponents closer than this to an integer are treated as integers.
const EXPONENT_SNAP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand is not finite at {at} (value {value})")]
    NonFinite { at: f64, value: f64 },

    /// The integrand behaves like `|x - endpoint|^exponent` with an exponent at
    /// or beyond the integrability limit (after the dead band).
    #[error("integral diverges at the {endpoint:?} endpoint (local exponent {exponent:.4})")]
    Divergent { endpoint: Endpoint, exponent: f64 },

    #[error("invalid quadrature specification: {0}")]
    InvalidSpec(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

impl QuadratureError {
    pub fn is_divergent(&self) -> bool {
        matches!(self, QuadratureError::Divergent { .. })
    }
}

pub type QuadResult<T> = Result<T, QuadratureError>;

/// User-facing quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub node_count: usize,
    pub relative_tolerance: f64,
    pub absolute_floor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            node_count: 256,
            relative_tolerance: 1e-10,
            absolute_floor: 0.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_nodes(node_count: usize) -> Self {
        Self {
            node_count,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> QuadResult<()> {
        if self.node_count < 8 {
            return Err(QuadratureError::InvalidSpec("node_count must be at least 8"));
        }
        if !(self.relative_tolerance > 0.0 && self.relative_tolerance.is_finite()) {
            return Err(QuadratureError::InvalidSpec(
                "relative_tolerance must be positive and finite",
            ));
        }
        if !(self.absolute_floor >= 0.0 && self.absolute_floor.is_finite()) {
            return Err(QuadratureError::InvalidSpec(
                "absolute_floor must be non-negative and finite",
            ));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights mapped onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the `n`-point rule by Newton iteration in the angle variable
    /// `x = cos θ`, which keeps the nodes next to the endpoints accurate to
    /// full relative precision.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut theta = PI * (i as f64 + 0.75) / (nf + 0.5);
            let mut dp = 0.0;
            for _ in 0..100 {
                let z = theta.cos();
                let (p, d) = legendre_with_derivative(n, z);
                dp = d;
                // dP/dθ = -sin θ P'(z)
                let step = p / (theta.sin() * d);
                theta += step;
                if step.abs() < 1e-16 * theta.max(1e-300) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, theta.cos());
            if d.is_finite() {
                dp = d;
            }
            let s = theta.sin();
            let w = 2.0 / (s * s * dp * dp);
            // 1 - cos θ = 2 sin²(θ/2); node measured from the lower end.
            let half = (0.5 * theta).sin();
            let u_low = half * half;
            let u_high = (0.5 * theta).cos().powi(2);
            nodes[i] = u_low;
            weights[i] = 0.5 * w;
            nodes[n - 1 - i] = u_high;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Diagonal-line moment power `m` in `∫ dL² L^{2m} f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinePower {
    /// m = -1/2
    InverseL,
    /// m = 0
    Zero,
    /// m = 1/2
    L,
    /// m = 1
    LSquared,
}

impl LinePower {
    pub fn exponent(self) -> f64 {
        match self {
            LinePower::InverseL => -0.5,
            LinePower::Zero => 0.0,
            LinePower::L => 0.5,
            LinePower::LSquared => 1.0,
        }
    }
}

/// Integration order for the triangle double integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleOrder {
    EnergyOuter,
    MomentumOuter,
}

/// Result of a node-doubling refinement check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedIntegral {
    pub value: f64,
    pub coarse: f64,
    pub converged: bool,
}

/// Stateless integrator; cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Quadrature {
    spec: QuadratureSpec,
    rule: GaussLegendre,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self::new(QuadratureSpec::default()).expect("default spec is valid")
    }
}

impl Quadrature {
    pub fn new(spec: QuadratureSpec) -> QuadResult<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            rule: GaussLegendre::new(spec.node_count),
        })
    }

    pub fn with_nodes(node_count: usize) -> QuadResult<Self> {
        Self::new(QuadratureSpec::with_nodes(node_count))
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// The same integrator with twice the node count.
    pub fn refined(&self) -> Self {
        let spec = QuadratureSpec {
            node_count: self.spec.node_count * 2,
            ..self.spec
        };
        Self {
            spec,
            rule: GaussLegendre::new(spec.node_count),
        }
    }

    /// Runs `op` at this node count and at double the node count.
    pub fn checked<F>(&self, op: F) -> QuadResult<CheckedIntegral>
    where
        F: Fn(&Quadrature) -> QuadResult<f64>,
    {
        let coarse = op(self)?;
        let value = op(&self.refined())?;
        let scale = value.abs().max(coarse.abs());
        let converged = (value - coarse).abs()
            <= self.spec.relative_tolerance * scale + self.spec.absolute_floor;
        Ok(CheckedIntegral {
            value,
            coarse,
            converged,
        })
    }

    /// `∫_a^b h(s) ds` for an integrand that may carry integrable power-law
    /// singularities at either endpoint.
    pub fn integrate<F>(&self, h: F, a: f64, b: f64) -> QuadResult<f64>
    where
        F: Fn(f64) -> f64,
    {
        if !(a.is_finite() && b.is_finite()) {
            return Err(QuadratureError::InvalidArgument("integration limits must be finite"));
        }
        if a == b {
            return Ok(0.0);
        }
        if b < a {
            return self.integrate(h, b, a).map(|v| -v);
        }
        let len = b - a;
        let p0 = probe_exponent(|d| h(a + len * d))?;
        let p1 = probe_exponent(|d| h(b - len * d))?;
        for (p, endpoint) in [(p0, Endpoint::Lower), (p1, Endpoint::Upper)] {
            if let Some(p) = p {
                if p <= -1.0 + DIVERGENCE_TOLERANCE {
                    return Err(QuadratureError::Divergent { endpoint, exponent: p });
                }
            }
        }
        self.graded_kappa(|s| h(a + s), len, p0, p1)
    }

    /// `∫_0^X g(t) (X - t)^{-1/2} dt` via `t = X sin²θ`.
    pub fn abel_integral<F>(&self, g: F, x: f64) -> QuadResult<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.abel_integral_split(|t, _| g(t), x)
    }

    /// As [`Quadrature::abel_integral`], but `g` also receives the gap
    /// `X - t` computed as `X cos²θ`, which stays accurate where `t` rounds
    /// to `X`.
    pub fn abel_integral_split<F>(&self, g: F, x: f64) -> QuadResult<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        if !(x > 0.0 && x.is_finite()) {
            return Err(QuadratureError::InvalidArgument("upper limit must be positive"));
        }
        let p0 = probe_exponent(|d| g(x * d, x - x * d))?;
        let p1 = probe_exponent(|d| g(x - x * d, x * d))?;
        if let Some(p) = p0 {
            if p <= -1.0 + DIVERGENCE_TOLERANCE {
                return Err(QuadratureError::Divergent {
                    endpoint: Endpoint::Lower,
                    exponent: p,
                });
            }
        }
        if let Some(p) = p1 {
            if -p >= 0.5 - DIVERGENCE_TOLERANCE {
                return Err(QuadratureError::Divergent {
                    endpoint: Endpoint::Upper,
                    exponent: p - 0.5,
                });
            }
        }
        let root = x.sqrt();
        // near θ = 0: g ~ θ^{2p0}, times sin θ; near θ = π/2: g ~ (π/2 - θ)^{2p1}
        let k0 = p0.map(|p| 2.0 * p + 1.0);
        let k1 = p1.map(|p| 2.0 * p);
        self.graded_kappa(
            |theta| {
                let (s, c) = theta.sin_cos();
                2.0 * root * s * g(x * s * s, x * c * c)
            },
            FRAC_PI_2,
            k0,
            k1,
        )
    }

    /// `∫_0^X g(t) t^{-1/2} (X - t)^{-1/2} dt = ∫_0^π g(X sin²(φ/2)) dφ`.
    ///
    /// Returns [`QuadratureError::Divergent`] when `g(t) ~ t^{-α}` with
    /// `α ≥ 1/2` (minus the dead band) at either end.
    pub fn abel_integral_inner_singular<F>(&self, g: F, x: f64) -> QuadResult<f64>
    where
        F: Fn(f64) -> f64,
    {
        if !(x > 0.0 && x.is_finite()) {
            return Err(QuadratureError::InvalidArgument("upper limit must be positive"));
        }
        let p0 = probe_exponent(|d| g(x * d))?;
        let p1 = probe_exponent(|d| g(x - x * d))?;
        for (p, endpoint) in [(p0, Endpoint::Lower), (p1, Endpoint::Upper)] {
            if let Some(p) = p {
                if -p >= 0.5 - DIVERGENCE_TOLERANCE {
                    return Err(QuadratureError::Divergent {
                        endpoint,
                        exponent: p - 0.5,
                    });
                }
            }
        }
        let k0 = p0.map(|p| 2.0 * p);
        let k1 = p1.map(|p| 2.0 * p);
        self.graded_kappa(
            |phi| {
                let s = (0.5 * phi).sin();
                g(x * s * s)
            },
            PI,
            k0,
            k1,
        )
    }

    /// `∬_T K^{n-1/2} L^{2m} f dℰ dL²` over the accessible triangle, with the
    /// energy integral outermost.
    pub fn triangle_integral<F>(&self, f: &F, psi: f64, r2: f64, n: f64, m: f64) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        self.triangle_integral_ordered(f, psi, r2, n, m, TriangleOrder::EnergyOuter)
    }

    pub fn triangle_integral_ordered<F>(
        &self,
        f: &F,
        psi: f64,
        r2: f64,
        n: f64,
        m: f64,
        order: TriangleOrder,
    ) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        check_triangle_args(psi, r2, n, m)?;
        if psi == 0.0 {
            return Ok(0.0);
        }
        match order {
            TriangleOrder::EnergyOuter => self.triangle_energy_outer(f, psi, r2, n, m, 0.0),
            TriangleOrder::MomentumOuter => self.triangle_momentum_outer(f, psi, r2, n, m),
        }
    }

    /// Triangle integral with an extra `(Ψ - ℰ)^w` weight (energy outermost).
    pub fn triangle_integral_weighted<F>(
        &self,
        f: &F,
        psi: f64,
        r2: f64,
        n: f64,
        m: f64,
        gap_power: f64,
    ) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        check_triangle_args(psi, r2, n, m)?;
        if psi == 0.0 {
            return Ok(0.0);
        }
        self.triangle_energy_outer(f, psi, r2, n, m, gap_power)
    }

    fn triangle_energy_outer<F>(&self, f: &F, psi: f64, r2: f64, n: f64, m: f64, w: f64) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        // L² = 2r²(Ψ-ℰ)s, K = 2(Ψ-ℰ)(1-s)
        let prefactor = (2.0 * r2).powf(m + 1.0) * 2f64.powf(n - 0.5);
        let failure = Cell::new(None);
        let outer = self.abel_integral_split(
            |e, gap| {
                if gap == 0.0 {
                    return 0.0;
                }
                let lambda = 2.0 * r2 * gap;
                let inner = self.abel_integral(
                    |s| s.powf(m) * (1.0 - s).powf(n) * f.evaluate(e.max(0.0), lambda * s),
                    1.0,
                );
                match inner {
                    Ok(v) => prefactor * gap.powf(w + m + n + 1.0) * v,
                    Err(err) => {
                        failure.set(Some(err));
                        f64::NAN
                    }
                }
            },
            psi,
        );
        resolve(outer, failure)
    }

    fn triangle_momentum_outer<F>(&self, f: &F, psi: f64, r2: f64, n: f64, m: f64) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        let x = 2.0 * r2 * psi;
        let kfac = 2f64.powf(n - 0.5);
        let failure = Cell::new(None);
        let outer = self.abel_integral_split(
            |t, remaining| {
                let e_max = remaining / (2.0 * r2);
                if e_max == 0.0 {
                    return 0.0;
                }
                let inner = self.abel_integral_split(|e, gap| gap.powf(n) * f.evaluate(e, t), e_max);
                match inner {
                    Ok(v) => t.powf(m) * kfac * v * remaining.sqrt(),
                    Err(err) => {
                        failure.set(Some(err));
                        f64::NAN
                    }
                }
            },
            x,
        );
        resolve(outer, failure)
    }

    /// `∫_0^{2r²Ψ} dL² L^{2m} f(Ψ - L²/(2r²), L²)`, evaluated in the energy
    /// parametrization `(2r²)^{m+1} ∫_0^Ψ dℰ (Ψ-ℰ)^m f[ℰ, 2r²(Ψ-ℰ)]`.
    pub fn diagonal_line_integral<F>(&self, f: &F, psi: f64, r2: f64, power: LinePower) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        check_line_args(psi, r2)?;
        if psi == 0.0 {
            return Ok(0.0);
        }
        let m = power.exponent();
        let value = self.abel_integral_split(
            |e, gap| gap.powf(m + 0.5) * f.evaluate(e, 2.0 * r2 * gap),
            psi,
        )?;
        Ok((2.0 * r2).powf(m + 1.0) * value)
    }

    /// The same line integral computed directly in the angular-momentum
    /// variable `L` (`dL² = 2L dL`).
    pub fn diagonal_line_integral_momentum<F>(
        &self,
        f: &F,
        psi: f64,
        r2: f64,
        power: LinePower,
    ) -> QuadResult<f64>
    where
        F: DistributionFunction + ?Sized,
    {
        check_line_args(psi, r2)?;
        if psi == 0.0 {
            return Ok(0.0);
        }
        let m = power.exponent();
        let l_max = (2.0 * r2 * psi).sqrt();
        self.integrate(
            |l| {
                let l2 = l * l;
                let e = (psi - l2 / (2.0 * r2)).max(0.0);
                2.0 * l.powf(2.0 * m + 1.0) * f.evaluate(e, l2)
            },
            0.0,
            l_max,
        )
    }

    /// Integrates `h` over `[0, len]` where `h(s) ~ s^{k0}` near 0 and
    /// `h ~ (len - s)^{k1}` near `len`.
    fn graded_kappa<F>(&self, h: F, len: f64, k0: Option<f64>, k1: Option<f64>) -> QuadResult<f64>
    where
        F: Fn(f64) -> f64,
    {
        let q0 = k0.map_or(1.0, grading_power);
        let q1 = k1.map_or(1.0, grading_power);
        let nodes = self.rule.nodes();
        let weights = self.rule.weights();
        let mut sum = 0.0;
        if q0 == 1.0 && q1 == 1.0 {
            for (&u, &w) in nodes.iter().zip(weights) {
                let s = len * u;
                let v = h(s);
                if !v.is_finite() {
                    return Err(QuadratureError::NonFinite { at: s, value: v });
                }
                sum += w * v;
            }
            return Ok(len * sum);
        }
        let half = 0.5 * len;
        for (&u, &w) in nodes.iter().zip(weights) {
            let uq = u.powf(q0);
            let s = half * uq;
            let v = h(s);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { at: s, value: v });
            }
            sum += w * q0 * uq / u * v;
        }
        for (&u, &w) in nodes.iter().zip(weights) {
            let uq = u.powf(q1);
            let s = len - half * uq;
            let v = h(s);
            if !v.is_finite() {
                return Err(QuadratureError::NonFinite { at: s, value: v });
            }
            sum += w * q1 * uq / u * v;
        }
        Ok(half * sum)
    }
}

fn resolve(outer: QuadResult<f64>, failure: Cell<Option<QuadratureError>>) -> QuadResult<f64> {
    match (failure.get(), outer) {
        (Some(err), _) => Err(err),
        (None, r) => r,
    }
}

fn check_triangle_args(psi: f64, r2: f64, n: f64, m: f64) -> QuadResult<()> {
    if !(psi >= 0.0 && psi.is_finite()) {
        return Err(QuadratureError::InvalidArgument("Ψ must be non-negative"));
    }
    if !(r2 > 0.0 && r2.is_finite()) {
        return Err(QuadratureError::InvalidArgument("r² must be positive"));
    }
    if !(n >= 0.0) {
        return Err(QuadratureError::InvalidArgument("kernel power n must be non-negative"));
    }
    if !(m > -1.0) {
        return Err(QuadratureError::InvalidArgument("momentum power m must exceed -1"));
    }
    Ok(())
}

fn check_line_args(psi: f64, r2: f64) -> QuadResult<()> {
    if !(psi >= 0.0 && psi.is_finite()) {
        return Err(QuadratureError::InvalidArgument("Ψ must be non-negative"));
    }
    if !(r2 > 0.0 && r2.is_finite()) {
        return Err(QuadratureError::InvalidArgument("r² must be positive"));
    }
    Ok(())
}

/// Least-squares power-law exponent of `g(δ)` over the probe offsets.
///
/// `None` when the probe values vanish or change sign, i.e. when there is no
/// power-law signature to act on.
pub fn probe_exponent<F>(g: F) -> QuadResult<Option<f64>>
where
    F: Fn(f64) -> f64,
{
    let mut pts = [(0.0, 0.0); 3];
    let mut sign = 0.0;
    for (slot, &d) in pts.iter_mut().zip(PROBE_OFFSETS.iter()) {
        let v = g(d);
        if !v.is_finite() {
            return Err(QuadratureError::NonFinite { at: d, value: v });
        }
        if v == 0.0 {
            return Ok(None);
        }
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign {
            return Ok(None);
        }
        *slot = (d.ln(), v.abs().ln());
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(Some(sxy / sxx))
}

/// Grading exponent `q` for an integrand `~ s^κ`; chosen so `s = v^q` turns the
/// leading behaviour into an integer power of `v`.
fn grading_power(kappa: f64) -> f64 {
    if (kappa - kappa.round()).abs() < EXPONENT_SNAP {
        return 1.0;
    }
    let k1 = kappa + 1.0;
    k1.ceil() / k1
}
