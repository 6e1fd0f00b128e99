//! Effective widths `(ka/πz₀)·∫𝒢 dρ = (2/π)·∫𝒢 dv`.

use serde::Serialize;

use super::catalog::catalog_form;
use super::{reduce_coords, DetectionScheme, EnvelopeModel, PatternSeries, Point, SlitGeometry};
use crate::correlator::Order;
use crate::error::{Error, Result};
use crate::numeric::{trapezoid, NeumaierSum};
use crate::states::StateSpec;

/// Largest admissible envelope mass outside the integration window.
pub const WIDTH_TAIL_LIMIT: f64 = 1e-6;

/// Bound on `(2/π)∫_{|v|>V} sinc^{2O} v dv`.
fn tail_bound(order: Order, half_range_v: f64) -> f64 {
    let p = 2.0 * order.value() as f64 - 1.0;
    4.0 / std::f64::consts::PI * half_range_v.powf(-p) / p
}

/// Smallest `V` whose tail bound meets [`WIDTH_TAIL_LIMIT`].
fn half_range_for(order: Order) -> f64 {
    let p = 2.0 * order.value() as f64 - 1.0;
    (4.0 / std::f64::consts::PI / (p * WIDTH_TAIL_LIMIT)).powf(1.0 / p) * (1.0 + 1e-9)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WidthReport {
    pub order: Order,
    pub width: f64,
    pub tail_bound: f64,
    pub half_range_v: f64,
    pub step_v: f64,
    /// Change in `width` over the last step halving.
    pub refinement_change: f64,
}

/// Width of a sampled Factored-model series by the trapezoid rule over its own grid.
///
/// Integrates `shape`; for Factored series the grid must reach far enough in
/// `v` that the envelope tail bound stays below [`WIDTH_TAIL_LIMIT`].
pub fn effective_width(series: &PatternSeries, geom: &SlitGeometry) -> Result<f64> {
    geom.validate()?;
    if series.len() < 2 {
        return Err(Error::InvalidInput("width needs at least two grid points".into()));
    }
    if series.shape.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("width needs a fully defined shape".into()));
    }
    if series.envelope_model == EnvelopeModel::Factored {
        let (_, v_lo) = reduce_coords(geom, series.grid[0]);
        let (_, v_hi) = reduce_coords(geom, series.grid[series.len() - 1]);
        let bound = tail_bound(series.order, v_lo.abs().min(v_hi.abs()));
        if !(bound <= WIDTH_TAIL_LIMIT) || v_lo >= 0.0 || v_hi <= 0.0 {
            return Err(Error::TailBound { bound, limit: WIDTH_TAIL_LIMIT });
        }
    }
    let factor = geom.wavenumber * geom.slit_width / (std::f64::consts::PI * geom.screen_distance);
    Ok(factor * trapezoid(&series.grid, &series.shape))
}

/// Width of the SamePoint catalog shape, integrated in `v` without materializing a grid.
///
/// The integrand is band-limited, so the trapezoid rule is exact up to the
/// window tail once the step resolves the highest fringe frequency; the step
/// is still halved until two successive values agree.
pub fn effective_width_for(spec: &StateSpec, order: Order, geom: &SlitGeometry) -> Result<WidthReport> {
    geom.validate()?;
    let form = catalog_form(spec, order)?;
    if form.model != EnvelopeModel::Factored {
        return Err(Error::InvalidInput(format!(
            "{} has no decaying SamePoint envelope; its width integral diverges",
            spec.label()
        )));
    }
    let ratio = geom.ratio();
    let half = half_range_for(order);
    let rho_per_v = geom.rho_per_u() * ratio;
    let shape = |v: f64| {
        let rho = v * rho_per_v;
        form.bracket(&Point::new(geom, &DetectionScheme::SamePoint, rho))
    };
    let integrate = |h: f64| {
        let n = (half / h).ceil() as usize;
        let h = half / n as f64;
        let mut s = NeumaierSum::default();
        s.add(0.5 * shape(0.0));
        for i in 1..n {
            s.add(shape(i as f64 * h));
        }
        s.add(0.5 * shape(half));
        (2.0 / std::f64::consts::PI) * 2.0 * h * s.value()
    };
    // Highest frequency of the integrand is 2·O·(ratio + 1).
    let mut h = 0.9 * std::f64::consts::TAU / (2.0 * order.value() as f64 * (ratio + 1.0));
    let mut width = integrate(h);
    let mut change = f64::INFINITY;
    for _ in 0..8 {
        h /= 2.0;
        let next = integrate(h);
        change = (next - width).abs();
        width = next;
        if change < 1e-9 {
            break;
        }
    }
    Ok(WidthReport {
        order,
        width,
        tail_bound: tail_bound(order, half),
        half_range_v: half,
        step_v: h,
        refinement_change: change,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{catalog_pattern, Quantity, Route};
    use super::*;

    fn geom() -> SlitGeometry {
        SlitGeometry::with_ratio(4.0).unwrap()
    }

    #[test]
    fn coherent_widths() {
        let g = geom();
        let w1 = effective_width_for(&StateSpec::coherent(1.0), Order::First, &g).unwrap();
        assert!((w1.width - 1.0).abs() < 1e-4, "{w1:?}");
        assert!(w1.tail_bound <= WIDTH_TAIL_LIMIT);
        let w2 = effective_width_for(&StateSpec::coherent_substate(3), Order::Second, &g).unwrap();
        assert!((w2.width - 0.5).abs() < 1e-4, "{w2:?}");
    }

    #[test]
    fn flat_rectangle() {
        let g = geom();
        let w = 3e-3;
        let grid = crate::numeric::linspace(-w, w, 11);
        let s = PatternSeries::from_values(
            Quantity::Probability,
            Order::First,
            None,
            DetectionScheme::SamePoint,
            g,
            Route::Catalog,
            grid,
            vec![1.0; 11],
            1.0,
            EnvelopeModel::None,
        );
        let want = g.wavenumber * g.slit_width / (std::f64::consts::PI * g.screen_distance) * 2.0 * w;
        assert!((effective_width(&s, &g).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn sampled_series_width() {
        let g = geom();
        let v_max = 80.0;
        let rho = v_max * g.rho_per_u() * g.ratio();
        let grid = crate::numeric::linspace(-rho, rho, 6401);
        let s =
            catalog_pattern(&StateSpec::coherent(1.0), Order::Second, DetectionScheme::SamePoint, &grid, &g).unwrap();
        assert!((effective_width(&s, &g).unwrap() - 0.5).abs() < 1e-4);
        let narrow = catalog_pattern(
            &StateSpec::coherent(1.0),
            Order::Second,
            DetectionScheme::SamePoint,
            &g.default_grid(),
            &g,
        )
        .unwrap();
        assert!(matches!(effective_width(&narrow, &g), Err(Error::TailBound { .. })));
    }

    #[test]
    fn chaotic_width_is_rejected() {
        assert!(effective_width_for(&StateSpec::chaotic(1.0), Order::First, &geom()).is_err());
    }
}
