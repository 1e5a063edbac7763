use abelcheck::model::{AugmentedDensityModel, PowerLawDf};
use abelcheck::quadrature::Quadrature;
use abelcheck::transforms::{eq21_lhs, eq21_rhs, moment_transform, rho_bar, rho_hat, rho_tilde, Line, MomentKind};
use abelcheck::{DistributionFunction, TransformValue};
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn fin(v: TransformValue) -> f64 {
    v.finite().expect("finite transform")
}

fn five_point<G: Fn(f64) -> f64>(g: G, x: f64, h: f64) -> f64 {
    (g(x - 2.0 * h) - 8.0 * g(x - h) + 8.0 * g(x + h) - g(x + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eq21_lines_hold_for_power_laws(
        a in 0.0f64..3.0, b in 0.0f64..2.0,
        psi in 0.05f64..1.0, r2 in 1e-2f64..1e2,
    ) {
        let q = Quadrature::with_nodes(128).unwrap();
        let f = PowerLawDf::new(1.0, a, b);
        let model = f.augmented_density().unwrap();
        for line in Line::ALL {
            let lhs = fin(eq21_lhs(&q, &model, psi, r2, line).unwrap());
            let rhs = fin(eq21_rhs(&q, &f, psi, r2, line).unwrap());
            prop_assert!(rel(lhs, rhs) < 1e-6, "line {:?}: {} vs {}", line, lhs, rhs);
        }
    }

    /// The n = 0 moment transforms are the Abel transforms of `p₀,₀`.
    #[test]
    fn zeroth_moment_transforms_are_abel_transforms(
        a in 0.0f64..3.0, b in 0.0f64..2.0,
        psi in 0.05f64..1.0, r2 in 1e-2f64..1e2,
    ) {
        let q = Quadrature::with_nodes(128).unwrap();
        let f = PowerLawDf::new(1.0, a, b);
        let model = f.augmented_density().unwrap();
        let pairs = [
            (rho_hat(&q, &model, psi, r2).unwrap(), MomentKind::Hat),
            (rho_bar(&q, &model, psi, r2).unwrap(), MomentKind::Bar),
            (rho_tilde(&q, &model, psi, r2).unwrap(), MomentKind::Tilde),
        ];
        for (direct, kind) in pairs {
            let from_f = fin(moment_transform(&q, &f, psi, r2, 0, kind).unwrap());
            prop_assert!(rel(fin(direct), from_f) < 1e-6, "{:?}", kind);
        }
    }

    /// `∂_Ψ ∫ √(Ψ-ℰ) f[ℰ, 2R²(Ψ-ℰ)] dℰ = (1/2 + R² ∂_R²) ∫ f[ℰ, 2R²(Ψ-ℰ)] dℰ / √(Ψ-ℰ)`,
    /// also against the closed form with `∂f/∂ℰ` inside the integral.
    #[test]
    fn alternative_derivation_agrees(
        a in 1.0f64..3.0, b in 0.0f64..2.0,
        psi in 0.1f64..1.0, big_r2 in 0.05f64..20.0,
    ) {
        let q = Quadrature::with_nodes(128).unwrap();
        let f = PowerLawDf::new(1.0, a, b);
        let weighted = |p: f64, r2: f64| {
            q.abel_integral_split(|e, gap| gap * f.evaluate(e, 2.0 * r2 * gap), p).unwrap()
        };
        let plain = |p: f64, r2: f64| {
            q.abel_integral_split(|e, gap| f.evaluate(e, 2.0 * r2 * gap), p).unwrap()
        };
        let lhs = five_point(|p| weighted(p, big_r2), psi, 1e-3 * psi);
        let rhs = 0.5 * plain(psi, big_r2) + big_r2 * five_point(|r2| plain(psi, r2), big_r2, 1e-3 * big_r2);
        prop_assert!(rel(lhs, rhs) < 1e-6, "{} vs {}", lhs, rhs);

        // Ψ^{1/2} f(0, 2R²Ψ) + (2R²)^{-3/2} ∫ dL² L f_ℰ(Ψ - L²/(2R²), L²)
        let d_f = |e: f64, l2: f64| a * e.powf(a - 1.0) * l2.powf(b);
        let top = 2.0 * big_r2 * psi;
        let integral = q
            .integrate(|l2| l2.sqrt() * d_f(psi - l2 / (2.0 * big_r2), l2), 0.0, top)
            .unwrap();
        let closed = psi.sqrt() * f.evaluate(0.0, top) + integral / (2.0 * big_r2).powf(1.5);
        prop_assert!(rel(lhs, closed) < 1e-6, "{} vs {}", lhs, closed);
    }

    #[test]
    fn transforms_are_linear(c in -3.0f64..3.0, psi in 0.05f64..1.0, r2 in 1e-2f64..1e2) {
        let q = Quadrature::with_nodes(128).unwrap();
        let p1 = PowerLawDf::new(1.0, 2.0, 0.0).augmented_density().unwrap();
        let p2 = PowerLawDf::new(1.0, 1.0, 1.0).augmented_density().unwrap();
        let (m1, m2) = (p1.clone(), p2.clone());
        let combo = AugmentedDensityModel::bivariate("c p1 + p2", move |x, t| c * m1.evaluate(x, t) + m2.evaluate(x, t));
        for transform in [rho_hat, rho_bar, rho_tilde] {
            let lhs = fin(transform(&q, &combo, psi, r2).unwrap());
            let (t1, t2) = (fin(transform(&q, &p1, psi, r2).unwrap()), fin(transform(&q, &p2, psi, r2).unwrap()));
            let rhs = c * t1 + t2;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (c.abs() * t1.abs() + t2.abs()));
        }
    }
}
