//! Shared inputs for the pipeline benchmarks.

use std::collections::BTreeMap;

use nullstring_core::catalog::{instantiate, Bindings, MetricInstance};
use nullstring_core::dsl::ScalarField;
use nullstring_core::frame::PlebanskiData;
use nullstring_core::{Mode, Scalar};

pub const POINT: [f64; 4] = [0.3, -0.4, 0.7, 0.2];

pub fn point() -> [Scalar; 4] {
    POINT.map(|v| Scalar::new(v, 0.0))
}

pub fn field(src: &str) -> ScalarField {
    ScalarField::parse(src, BTreeMap::new(), Mode::Real).expect("benchmark expression parses")
}

/// A generic weak-HH metric: every curvature component nonzero.
pub fn generic_plebanski() -> PlebanskiData {
    PlebanskiData {
        a: field("x^2*y + q*p*x + sin(x*q)"),
        q: field("x*y + p*x^2 + exp(q)*y"),
        b: field("y^3 + q*x*y - p*x^2"),
    }
}

/// Catalog family with its default bindings.
pub fn family(id: &str) -> MetricInstance {
    instantiate(id, &Bindings::new(Mode::Real)).expect("catalog family instantiates")
}
