//! Closed-form first- and second-order patterns per state family.

use serde::Serialize;

use super::{DetectionScheme, EnvelopeModel, PatternSeries, Point, Quantity, Route, SlitGeometry};
use crate::correlator::Order;
use crate::error::{Error, Result};
use crate::numeric::sinc;
use crate::states::{StateKind, StateSpec};

/// `P_O` times a bracket built from fringe/envelope terms.
///
/// Order 1, Difference: `difference·cos(u₁−u₂)sinc(v₁−v₂)`.
/// Order 2, Difference: `constant + difference·cos²(u₁−u₂)sinc²(v₁−v₂)
/// + sum·cos²(u₁+u₂+φ/2)sinc²(v₁+v₂)`.
/// Factored: `(cos u₁ cos u₂ sinc v₁ sinc v₂)^O`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogForm {
    pub order: Order,
    pub scale: f64,
    pub model: EnvelopeModel,
    pub constant: f64,
    pub difference: f64,
    pub sum: f64,
    pub sum_phase: f64,
}

impl CatalogForm {
    fn factored(order: Order, scale: f64) -> Self {
        CatalogForm {
            order,
            scale,
            model: EnvelopeModel::Factored,
            constant: 0.0,
            difference: 0.0,
            sum: 0.0,
            sum_phase: 0.0,
        }
    }

    fn difference(order: Order, scale: f64, constant: f64, difference: f64) -> Self {
        CatalogForm { order, scale, model: EnvelopeModel::Difference, constant, difference, sum: 0.0, sum_phase: 0.0 }
    }

    pub fn bracket(&self, p: &Point) -> f64 {
        let o = self.order.value() as i32;
        match self.model {
            EnvelopeModel::Factored => (p.u1.cos() * p.u2.cos() * sinc(p.v1) * sinc(p.v2)).powi(o),
            _ => {
                let d = (p.u1 - p.u2).cos() * sinc(p.v1 - p.v2);
                if o == 1 {
                    return self.constant + self.difference * d;
                }
                let s = (p.u1 + p.u2 + self.sum_phase / 2.0).cos() * sinc(p.v1 + p.v2);
                self.constant + self.difference * d * d + self.sum * s * s
            }
        }
    }

    pub fn value(&self, p: &Point) -> f64 {
        self.scale * self.bracket(p)
    }

    /// Flat part of `value`.
    pub fn background(&self) -> f64 {
        self.scale * self.constant
    }

    /// Bracket value at `ρ₁ = ρ₂ = 0`.
    pub fn bracket_peak(&self) -> f64 {
        match self.model {
            EnvelopeModel::Factored => 1.0,
            _ => self.constant + self.difference + self.sum * (self.sum_phase / 2.0).cos().powi(2),
        }
    }
}

/// Closed form for `spec` at `order`, or `OutOfCatalog`.
pub fn catalog_form(spec: &StateSpec, order: Order) -> Result<CatalogForm> {
    spec.validate()?;
    let mean = spec.mean_n;
    let n = spec.n_photons as f64;
    let phi = spec.phases.first().copied().unwrap_or(0.0);
    use StateKind::*;
    if spec.kind == Noon && spec.n_photons < 2 {
        return Err(Error::OutOfCatalog(format!("{} has no closed form below N = 2", spec.label())));
    }
    let form = match order {
        Order::First => match spec.kind {
            CollectiveCoherent => CatalogForm::factored(order, 2.0 * mean),
            CoherentSubstate => CatalogForm::factored(order, n),
            PhaseDiffused | Chaotic => CatalogForm::difference(order, mean, 0.0, 1.0),
            _ => CatalogForm::difference(order, n / 2.0, 0.0, 1.0),
        },
        Order::Second => match spec.kind {
            CollectiveCoherent => CatalogForm::factored(order, 4.0 * mean * mean),
            CoherentSubstate => CatalogForm::factored(order, n * (n - 1.0)),
            PhaseDiffused => CatalogForm::difference(order, mean * mean, 0.5, 1.0),
            PhaseDiffusedSubstate => CatalogForm::difference(order, n * (n - 1.0) / 4.0, 0.5, 1.0),
            Chaotic => CatalogForm::difference(order, mean * mean, 1.0, 1.0),
            ChaoticSubstate => CatalogForm::difference(order, n * (n - 1.0) / 6.0, 1.0, 1.0),
            Noon if spec.n_photons == 2 => CatalogForm {
                order,
                scale: 1.0,
                model: EnvelopeModel::Difference,
                constant: 0.0,
                difference: 0.0,
                sum: 1.0,
                sum_phase: phi,
            },
            Noon => CatalogForm {
                model: EnvelopeModel::None,
                ..CatalogForm::difference(order, n * (n - 1.0) / 4.0, 1.0, 0.0)
            },
            NumberState if spec.n_photons == 2 => CatalogForm::difference(order, 1.0, 0.0, 1.0),
            NumberState => CatalogForm::difference(order, n / 8.0, n - 2.0, 2.0 * n),
        },
    };
    Ok(form)
}

/// Catalog series for `spec` at `order` along `grid`.
pub fn catalog_pattern(
    spec: &StateSpec,
    order: Order,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    geom.validate()?;
    let form = catalog_form(spec, order)?;
    let values = grid.iter().map(|&rho| form.value(&Point::new(geom, &scheme, rho))).collect();
    Ok(PatternSeries::from_values(
        Quantity::Probability,
        order,
        Some(spec.clone()),
        scheme,
        *geom,
        Route::Catalog,
        grid.to_vec(),
        values,
        form.scale,
        form.model,
    ))
}

pub fn catalog_p1(
    spec: &StateSpec,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    catalog_pattern(spec, Order::First, scheme, grid, geom)
}

pub fn catalog_p2(
    spec: &StateSpec,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    catalog_pattern(spec, Order::Second, scheme, grid, geom)
}
