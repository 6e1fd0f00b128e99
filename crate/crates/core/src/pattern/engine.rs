//! Patterns assembled from Fock-engine matrix elements.

use num_complex::Complex64;

use super::catalog::{catalog_form, CatalogForm};
use super::{DetectionScheme, EnvelopeModel, PatternSeries, Point, Quantity, Route, SlitGeometry};
use crate::correlator::{
    faulty_entries, first_order_components, matrix_elements, p1, p2, second_order_components, AssemblyFault,
    FirstOrderComponents, MatrixElementTable, Order, PhaseAverage, SecondOrderComponents,
};
use crate::error::{Error, Result};
use crate::numeric::sinc;
use crate::states::{DistributionKind, StateSpec};

/// Evaluates a pattern at any detector pair.
#[derive(Clone, Debug)]
pub enum Evaluator {
    Catalog(CatalogForm),
    Engine(EngineForm),
}

#[derive(Clone, Debug)]
pub struct EngineForm {
    pub table: MatrixElementTable,
    pub model: EnvelopeModel,
    pub scale: f64,
    first: Option<FirstOrderComponents>,
    second: Option<SecondOrderComponents>,
}

fn apply_fault(table: &MatrixElementTable, fault: Option<AssemblyFault>) -> MatrixElementTable {
    MatrixElementTable { entries: faulty_entries(table, fault), ..table.clone() }
}

/// Envelope model and `P_O` used for `spec`; point-source with unit scale outside the catalog.
fn model_of(spec: &StateSpec, order: Order) -> (EnvelopeModel, f64) {
    match catalog_form(spec, order) {
        Ok(f) => (f.model, f.scale),
        Err(_) => (EnvelopeModel::None, 1.0),
    }
}

impl Evaluator {
    pub fn catalog(spec: &StateSpec, order: Order) -> Result<Self> {
        Ok(Evaluator::Catalog(catalog_form(spec, order)?))
    }

    pub fn engine(spec: &StateSpec, order: Order, avg: &PhaseAverage, fault: Option<AssemblyFault>) -> Result<Self> {
        let table = matrix_elements(spec, order, avg)?;
        let (model, scale) = model_of(spec, order);
        Self::from_table(apply_fault(&table, fault), model, scale)
    }

    pub fn from_table(table: MatrixElementTable, model: EnvelopeModel, scale: f64) -> Result<Self> {
        let (first, second) = match table.order {
            Order::First => (Some(first_order_components(&table)?), None),
            Order::Second => (None, Some(second_order_components(&table)?)),
        };
        if let (EnvelopeModel::Difference, Some(c)) = (model, &second) {
            let noise = table.stderr.as_ref().map(|s| s.iter().cloned().fold(0.0, f64::max)).unwrap_or(0.0);
            let tol = 1e-9 * table.scale().max(1.0) + 6.0 * noise;
            if c.single_frequency > tol {
                return Err(Error::OutOfCatalog(format!(
                    "single-frequency harmonics of size {:e} have no slit-envelope rule",
                    c.single_frequency
                )));
            }
        }
        Ok(Evaluator::Engine(EngineForm { table, model, scale, first, second }))
    }

    pub fn order(&self) -> Order {
        match self {
            Evaluator::Catalog(f) => f.order,
            Evaluator::Engine(e) => e.table.order,
        }
    }

    pub fn model(&self) -> EnvelopeModel {
        match self {
            Evaluator::Catalog(f) => f.model,
            Evaluator::Engine(e) => e.model,
        }
    }

    pub fn scale(&self) -> f64 {
        match self {
            Evaluator::Catalog(f) => f.scale,
            Evaluator::Engine(e) => e.scale,
        }
    }

    pub fn route(&self) -> Route {
        match self {
            Evaluator::Catalog(_) => Route::Catalog,
            Evaluator::Engine(_) => Route::Engine,
        }
    }

    /// Flat part of the second-order pattern under the Difference model.
    pub fn background(&self) -> Option<f64> {
        match self {
            Evaluator::Catalog(f) => Some(f.background()),
            Evaluator::Engine(e) => match (e.model, &e.second) {
                (EnvelopeModel::Factored, _) => Some(0.0),
                (_, Some(c)) => Some(c.background()),
                _ => None,
            },
        }
    }

    pub fn value(&self, p: &Point) -> Result<f64> {
        match self {
            Evaluator::Catalog(f) => Ok(f.value(p)),
            Evaluator::Engine(e) => e.value(p),
        }
    }
}

impl EngineForm {
    fn value(&self, p: &Point) -> Result<f64> {
        let order = self.table.order;
        match (self.model, order) {
            (EnvelopeModel::None, Order::First) => p1(&self.table, p.u1, p.u2),
            (EnvelopeModel::None, Order::Second) => p2(&self.table, p.u1, p.u2),
            (EnvelopeModel::Factored, Order::First) => Ok(p1(&self.table, p.u1, p.u2)? * sinc(p.v1) * sinc(p.v2)),
            (EnvelopeModel::Factored, Order::Second) => {
                Ok(p2(&self.table, p.u1, p.u2)? * (sinc(p.v1) * sinc(p.v2)).powi(2))
            }
            (EnvelopeModel::Difference, Order::First) => {
                let c = self.first.as_ref().expect("first-order components");
                let (d, s) = (p.u1 - p.u2, p.u1 + p.u2);
                let rot = |x: f64| Complex64::from_polar(1.0, x);
                let z = (c.difference * rot(d) + c.difference_conj * rot(-d)) * sinc(p.v1 - p.v2)
                    + (c.sum * rot(s) + c.sum_conj * rot(-s)) * sinc(p.v1 + p.v2);
                if z.im.abs() > 1e-10 * self.table.scale().max(1.0) {
                    return Err(Error::Inconsistent(format!("imaginary residue {:e}", z.im)));
                }
                Ok(z.re)
            }
            (EnvelopeModel::Difference, Order::Second) => {
                let c = self.second.as_ref().expect("second-order components");
                let fringe = |coef: Complex64, x: f64, env: f64| {
                    let arg = if coef.norm() > 0.0 { coef.arg() } else { 0.0 };
                    4.0 * coef.norm() * (x + arg / 2.0).cos().powi(2) * env * env
                };
                Ok(c.background()
                    + fringe(c.difference, p.u1 - p.u2, sinc(p.v1 - p.v2))
                    + fringe(c.sum, p.u1 + p.u2, sinc(p.v1 + p.v2)))
            }
        }
    }
}

fn series_from(
    eval: &Evaluator,
    spec: &StateSpec,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    geom.validate()?;
    let values = grid.iter().map(|&rho| eval.value(&Point::new(geom, &scheme, rho))).collect::<Result<Vec<_>>>()?;
    Ok(PatternSeries::from_values(
        Quantity::Probability,
        eval.order(),
        Some(spec.clone()),
        scheme,
        *geom,
        eval.route(),
        grid.to_vec(),
        values,
        eval.scale(),
        eval.model(),
    ))
}

/// Engine-route pattern with the state's envelope model applied.
pub fn engine_pattern(
    spec: &StateSpec,
    order: Order,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
    avg: &PhaseAverage,
) -> Result<PatternSeries> {
    engine_pattern_with_fault(spec, order, scheme, grid, geom, avg, None)
}

pub fn engine_pattern_with_fault(
    spec: &StateSpec,
    order: Order,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
    avg: &PhaseAverage,
    fault: Option<AssemblyFault>,
) -> Result<PatternSeries> {
    let eval = Evaluator::engine(spec, order, avg, fault)?;
    series_from(&eval, spec, scheme, grid, geom)
}

/// `Σ_N |c_N|²·pattern(substate N)` truncated where the weight tail drops below `tail`.
///
/// `diffused` selects phase-diffused rather than coherent substates for the
/// Poisson family; it is ignored for Bose-Einstein weights.
#[allow(clippy::too_many_arguments)]
pub fn weighted_substate_pattern(
    family: DistributionKind,
    diffused: bool,
    mean_n: f64,
    order: Order,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
    tail: f64,
) -> Result<PatternSeries> {
    let n_max = family.cutoff_for_tail(mean_n, tail);
    let kind = family.substate_kind(diffused);
    let mut total = vec![0.0; grid.len()];
    for n in 0..=n_max {
        let w = family.weight(mean_n, n);
        let sub = StateSpec::of_kind(kind, 0.0, n);
        let avg = PhaseAverage::default_for(&sub)?;
        let s = engine_pattern(&sub, order, scheme, grid, geom, &avg)?;
        for (t, v) in total.iter_mut().zip(&s.values) {
            *t += w * v;
        }
    }
    let collective = match family {
        DistributionKind::BoseEinstein => StateSpec::chaotic(mean_n),
        DistributionKind::Poisson if diffused => StateSpec::phase_diffused(mean_n),
        DistributionKind::Poisson => StateSpec::coherent(mean_n),
    };
    let (model, scale) = model_of(&collective, order);
    Ok(PatternSeries::from_values(
        Quantity::Probability,
        order,
        Some(collective),
        scheme,
        *geom,
        Route::Engine,
        grid.to_vec(),
        total,
        scale,
        model,
    ))
}

#[cfg(test)]
mod tests {
    use super::super::catalog::catalog_pattern;
    use super::*;

    fn geom() -> SlitGeometry {
        SlitGeometry::with_ratio(4.0).unwrap()
    }

    fn grid512() -> Vec<f64> {
        geom().grid_in_u(-7.0, 7.0, 512)
    }

    fn both(spec: &StateSpec, order: Order, scheme: DetectionScheme) -> f64 {
        let g = geom();
        let avg = PhaseAverage::default_for(spec).unwrap();
        let e = engine_pattern(spec, order, scheme, &grid512(), &g, &avg).unwrap();
        let c = catalog_pattern(spec, order, scheme, &grid512(), &g).unwrap();
        e.max_abs_deviation(&c)
    }

    #[test]
    fn coherent_first_order_matches_catalog() {
        for mean in [1.0, 2.0, 4.0] {
            for scheme in
                [DetectionScheme::SamePoint, DetectionScheme::Opposite, DetectionScheme::General { rho2: 3e-4 }]
            {
                assert!(both(&StateSpec::coherent(mean), Order::First, scheme) < 1e-9);
            }
        }
    }

    #[test]
    fn every_kind_matches_catalog_in_both_orders() {
        let specs = [
            StateSpec::coherent(1.5),
            StateSpec::coherent_substate(3),
            StateSpec::phase_diffused(1.0),
            StateSpec::phase_diffused_substate(4),
            StateSpec::chaotic(0.5),
            StateSpec::chaotic_substate(3),
            StateSpec::noon(2).with_phases(vec![0.9]),
            StateSpec::noon(5),
            StateSpec::number(2),
            StateSpec::number(6),
        ];
        for spec in &specs {
            for order in [Order::First, Order::Second] {
                for scheme in
                    [DetectionScheme::SamePoint, DetectionScheme::Opposite, DetectionScheme::General { rho2: -2e-4 }]
                {
                    let d = both(spec, order, scheme);
                    assert!(d < 1e-9, "{spec} order {} {:?}: {d:e}", order.value(), scheme);
                }
            }
        }
    }

    #[test]
    fn vacuum_is_zero() {
        let g = geom();
        for order in [Order::First, Order::Second] {
            let s = engine_pattern(
                &StateSpec::coherent(0.0),
                order,
                DetectionScheme::Opposite,
                &grid512(),
                &g,
                &PhaseAverage::None,
            )
            .unwrap();
            assert!(s.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn fault_breaks_agreement() {
        let g = geom();
        let spec = StateSpec::phase_diffused_substate(2);
        let avg = PhaseAverage::default_for(&spec).unwrap();
        let res = engine_pattern_with_fault(
            &spec,
            Order::Second,
            DetectionScheme::Opposite,
            &grid512(),
            &g,
            &avg,
            Some(AssemblyFault::SwapBC),
        );
        let c = catalog_pattern(&spec, Order::Second, DetectionScheme::Opposite, &grid512(), &g).unwrap();
        // The swap may also surface as an inconsistency error.
        if let Ok(e) = res {
            assert!(e.max_abs_deviation(&c) > 1e-3);
        }
    }
}
