//! Degrees of first- and second-order coherence along the Opposite scheme.

use super::engine::Evaluator;
use super::{DetectionScheme, PatternSeries, Point, Quantity, Route, SlitGeometry};
use crate::correlator::{Order, PhaseAverage};
use crate::error::{Error, Result};
use crate::states::StateSpec;

/// Ratios whose denominator falls below this fraction of its maximum are undefined.
pub const UNDEFINED_THRESHOLD: f64 = 1e-12;

fn evaluator(spec: &StateSpec, order: Order, route: Route, avg: Option<&PhaseAverage>) -> Result<Evaluator> {
    match route {
        Route::Catalog => Evaluator::catalog(spec, order),
        Route::Engine => {
            let default;
            let avg = match avg {
                Some(a) => a,
                None => {
                    default = PhaseAverage::default_for(spec)?;
                    &default
                }
            };
            Evaluator::engine(spec, order, avg, None)
        }
        Route::Ensemble => Err(Error::InvalidInput("coherence is computed on the catalog or engine route".into())),
    }
}

/// `g⁽ᴼ⁾(ρ, −ρ)`: `P⁽ᴼ⁾(ρ,−ρ)` over `[P⁽¹⁾(ρ,ρ)·P⁽¹⁾(−ρ,−ρ)]^{O/2}`.
///
/// Undefined points carry NaN in `values` and `false` in `defined`.
pub fn coherence_series(
    spec: &StateSpec,
    order: Order,
    grid: &[f64],
    geom: &SlitGeometry,
    route: Route,
    avg: Option<&PhaseAverage>,
) -> Result<PatternSeries> {
    geom.validate()?;
    let first = evaluator(spec, Order::First, route, avg)?;
    let numerator = match order {
        Order::First => first.clone(),
        Order::Second => evaluator(spec, Order::Second, route, avg)?,
    };
    let mut nums = Vec::with_capacity(grid.len());
    let mut dens = Vec::with_capacity(grid.len());
    for &rho in grid {
        nums.push(numerator.value(&Point::at(geom, rho, -rho))?);
        let d = first.value(&Point::at(geom, rho, rho))? * first.value(&Point::at(geom, -rho, -rho))?;
        dens.push(match order {
            Order::First => d.max(0.0).sqrt(),
            Order::Second => d,
        });
    }
    let top = dens.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let values = nums
        .iter()
        .zip(&dens)
        .map(|(n, d)| if top > 0.0 && d.abs() >= UNDEFINED_THRESHOLD * top { n / d } else { f64::NAN })
        .collect();
    let quantity = match order {
        Order::First => Quantity::G1,
        Order::Second => Quantity::G2,
    };
    Ok(PatternSeries::from_values(
        quantity,
        order,
        Some(spec.clone()),
        DetectionScheme::Opposite,
        *geom,
        route,
        grid.to_vec(),
        values,
        1.0,
        numerator.model(),
    ))
}

/// Catalog-route `g⁽¹⁾`.
pub fn g1(spec: &StateSpec, grid: &[f64], geom: &SlitGeometry) -> Result<PatternSeries> {
    coherence_series(spec, Order::First, grid, geom, Route::Catalog, None)
}

/// Catalog-route `g⁽²⁾`.
pub fn g2(spec: &StateSpec, grid: &[f64], geom: &SlitGeometry) -> Result<PatternSeries> {
    coherence_series(spec, Order::Second, grid, geom, Route::Catalog, None)
}
