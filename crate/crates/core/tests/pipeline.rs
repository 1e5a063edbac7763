use std::f64::consts::PI;

use abelcheck::config::{Builtin, Format, GridSpec, ModelConfig, PotentialSpec};
use abelcheck::inversion::eddington_invert;
use abelcheck::model::{linear_nodes, SeparablePart};
use abelcheck::pipeline::{check, invert, transform, Command};
use abelcheck::quadrature::Quadrature;
use proptest::prelude::*;
use statrs::function::gamma::gamma;

fn small(mut cfg: ModelConfig) -> ModelConfig {
    cfg.grid = GridSpec {
        psi_nodes: 8,
        r2_nodes: 8,
        ..GridSpec::default()
    };
    cfg.quadrature.node_count = 128;
    cfg
}

fn in_pool<T: Send>(threads: usize, op: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(op)
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let configs = [
        small(ModelConfig::default()),
        small(ModelConfig::separable("Psi*(1-Psi)", "r2^(-0.25)")),
        small(ModelConfig::bivariate("r2^(-0.75)*Psi^4")),
    ];
    for cfg in &configs {
        for run in [check, transform] {
            let one = in_pool(1, || run(cfg, Format::Json).unwrap());
            let many = in_pool(8, || run(cfg, Format::Json).unwrap());
            assert_eq!(one, many);
        }
    }
}

#[test]
fn status_contract() {
    let status = |cfg: ModelConfig, command: Command| abelcheck::pipeline::run(command, &small(cfg), Format::Text).map(|o| o.status);
    assert_eq!(status(ModelConfig::default(), Command::Check).unwrap(), 0);
    assert_eq!(status(ModelConfig::separable("Psi*(1-Psi)", "1"), Command::Check).unwrap(), 2);
    assert_eq!(status(ModelConfig::bivariate("r2^(-0.75)*Psi^4"), Command::Check).unwrap(), 3);
    assert_eq!(status(ModelConfig::separable("Psi*(1-Psi)", "1"), Command::Invert).unwrap(), 2);
    assert!(status(ModelConfig::separable("1+Psi", "1"), Command::Invert).is_err());
    let mut aniso = ModelConfig::builtin(Builtin::PlummerAnisotropic);
    aniso.params.insert("beta0".into(), 0.5);
    aniso.potential = None;
    assert_eq!(status(aniso, Command::Check).unwrap(), 3);
}

#[test]
fn invert_json_reports_negative_mass() {
    let out = invert(&small(ModelConfig::separable("Psi*(1-Psi)", "1")), Format::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out.contents).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert!(v["negative_mass_fraction"].as_f64().unwrap() > 0.0);
    assert_eq!(v["samples"].as_array().unwrap().len(), 128);
}

fn config_strategy() -> impl Strategy<Value = ModelConfig> {
    let model = prop_oneof![
        Just(ModelConfig::default()),
        Just(ModelConfig::builtin(Builtin::PowerLawDf)),
        ("[a-z]{1,3}", "[a-z]{1,3}").prop_map(|(a, b)| ModelConfig::separable(&a, &b)),
        "[ -~]{0,20}".prop_map(|p| ModelConfig::bivariate(&p)),
    ];
    (
        model,
        prop::collection::btree_map("[a-z]{1,4}", -1e9f64..1e9, 0..3),
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        1usize..500,
        prop::bool::ANY,
    )
        .prop_map(|(mut cfg, params, x, n, potential)| {
            cfg.params = params;
            cfg.grid.r2_min = x.abs();
            cfg.grid.psi_nodes = n;
            cfg.quadrature.relative_tolerance = x.abs() / 7.0;
            cfg.tolerance = x / 3.0;
            if potential {
                cfg.potential = Some(PotentialSpec::Expr { psi: "1/sqrt(1+r2)".into() });
            }
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn config_round_trips(cfg in config_strategy()) {
        let back = ModelConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    /// `A = Ψ^k` inverts to `f = Γ(k+1) √π / (√8 π² Γ(k - 1/2)) ℰ^{k - 3/2}`.
    #[test]
    fn power_law_density_inverts_in_closed_form(k in 1.6f64..7.0) {
        let q = Quadrature::with_nodes(128).unwrap();
        let df = eddington_invert(&q, &SeparablePart::power(1.0, k), &linear_nodes(1.0, 16)).unwrap();
        let c = gamma(k + 1.0) * PI.sqrt() / (8f64.sqrt() * PI * PI * gamma(k - 0.5));
        for (&e, &f) in df.e_nodes.iter().zip(&df.f_values) {
            let want = c * e.powf(k - 1.5);
            prop_assert!((f - want).abs() <= 1e-8 * want, "{} vs {}", f, want);
        }
        prop_assert_eq!(df.negative_mass_fraction, 0.0);
    }
}
