//! Fixtures shared by the benchmarks.

use abelcheck::config::{GridSpec, ModelConfig};
use abelcheck::model::{linear_nodes, log_nodes, EvaluationGrid};
use abelcheck::{PowerLawDf, Quadrature, QuadratureSpec};

pub fn quadrature(nodes: usize) -> Quadrature {
    Quadrature::with_nodes(nodes).expect("valid node count")
}

/// `n × n` grid over `Ψ ∈ (0, 1]`, `r² ∈ [1e-3, 1e3]`.
pub fn square_grid(n: usize) -> EvaluationGrid {
    EvaluationGrid::new(linear_nodes(1.0, n), log_nodes(1e-3, 1e3, n)).expect("valid grid")
}

/// `f = ℰ L²`.
pub fn oracle_df() -> PowerLawDf {
    PowerLawDf::new(1.0, 1.0, 1.0)
}

/// Built-in Plummer config on an `n × n` grid.
pub fn plummer_config(n: usize, nodes: usize) -> ModelConfig {
    ModelConfig {
        grid: GridSpec {
            psi_nodes: n,
            r2_nodes: n,
            ..GridSpec::default()
        },
        quadrature: QuadratureSpec::with_nodes(nodes),
        ..ModelConfig::default()
    }
}
