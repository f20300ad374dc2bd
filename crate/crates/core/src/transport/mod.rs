//! Exact 1-D optimal transport for convex costs of distance, brute-force
//! oracles, and the reduction of spatially uniform measures on a warped
//! product to their base.

mod cost;
mod measure;
mod oracle;
mod warped;

pub use cost::ConvexCost;
pub use measure::Measure1D;
pub use oracle::{assignment, discrete_oracle, OracleValue, MAX_EXHAUSTIVE};
pub use warped::{grid_oracle, warped_reduction, ProductGrid, SurfaceGraph, WarpedDensity};

use crate::error::{Error, Result};

/// Tolerance of the internal W1 cross-check.
pub const W1_TOL: f64 = 1e-8;

/// Piecewise-linear function evaluated at both ends of a piece through two
/// interior samples, so jumps at the ends do not leak in.
fn end_values(g: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let len = b - a;
    let (p, q) = (g(a + 0.25 * len), g(a + 0.75 * len));
    (p - 0.5 * (q - p), q + 0.5 * (q - p))
}

fn merged(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// `∫_0^1 h(|F^{-1}(t) - G^{-1}(t)|) dt`, integrating exactly between the
/// CDF levels of both measures.
pub fn total_cost_1d(m1: &Measure1D, m2: &Measure1D, h: &ConvexCost) -> f64 {
    let levels = merged(
        [0.0, 1.0]
            .into_iter()
            .chain(m1.levels())
            .chain(m2.levels())
            .collect(),
    );
    levels
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (d0, d1) = end_values(|t| m1.quantile(t) - m2.quantile(t), w[0], w[1]);
            h.integrate_linear(d0, d1, w[1] - w[0])
        })
        .sum()
}

/// `∫ |F - G| dx` over the union of knots.
pub fn w1_cdf_form(m1: &Measure1D, m2: &Measure1D) -> f64 {
    let xs = merged(m1.knots().iter().chain(m2.knots()).copied().collect());
    xs.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (d0, d1) = end_values(|x| m1.cdf(x) - m2.cdf(x), w[0], w[1]);
            ConvexCost::Linear.integrate_linear(d0, d1, w[1] - w[0])
        })
        .sum()
}

/// W1 by the CDF-difference formula, cross-checked against the quantile form.
pub fn w1(m1: &Measure1D, m2: &Measure1D) -> Result<f64> {
    let quantile = total_cost_1d(m1, m2, &ConvexCost::Linear);
    let cdf = w1_cdf_form(m1, m2);
    if (quantile - cdf).abs() > W1_TOL * cdf.abs().max(1.0) {
        return Err(Error::FormulaMismatch { quantile, cdf });
    }
    Ok(cdf)
}
