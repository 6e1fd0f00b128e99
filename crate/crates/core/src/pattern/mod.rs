//! Detection patterns on the screen: geometry reduction, slit envelopes,
//! closed-form catalog, engine route, degrees of coherence and widths.

mod catalog;
mod coherence;
mod decompose;
mod engine;
mod width;

pub use catalog::{catalog_form, catalog_p1, catalog_p2, catalog_pattern, CatalogForm};
pub use coherence::{coherence_series, g1, g2, UNDEFINED_THRESHOLD};
pub use decompose::{decompose_n2, N2Decomposition};
pub use engine::{engine_pattern, engine_pattern_with_fault, weighted_substate_pattern, Evaluator};
pub use width::{effective_width, effective_width_for, WidthReport, WIDTH_TAIL_LIMIT};

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::correlator::Order;
use crate::error::{Error, Result};
use crate::numeric::{fmt_real, linspace};
use crate::states::StateSpec;

/// Far-field threshold `z₀ ≥ 100·ℓ`.
pub const FAR_FIELD_FACTOR: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitGeometry {
    pub wavenumber: f64,
    pub slit_separation: f64,
    pub slit_width: f64,
    pub screen_distance: f64,
}

impl SlitGeometry {
    pub fn new(wavenumber: f64, slit_separation: f64, slit_width: f64, screen_distance: f64) -> Result<Self> {
        let g = SlitGeometry { wavenumber, slit_separation, slit_width, screen_distance };
        g.validate()?;
        Ok(g)
    }

    /// 500 nm light, ℓ = 100 µm, z₀ = 1 m and `a = ℓ/ratio`.
    pub fn with_ratio(ratio: f64) -> Result<Self> {
        let l = 100e-6;
        Self::new(std::f64::consts::TAU / 500e-9, l, l / ratio, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.wavenumber, self.slit_separation, self.slit_width, self.screen_distance];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidGeometry(format!("parameters must be positive and finite: {all:?}")));
        }
        if self.slit_separation < 2.0 * self.slit_width {
            return Err(Error::InvalidGeometry(format!(
                "slit separation {} below twice the slit width {}",
                self.slit_separation, self.slit_width
            )));
        }
        Ok(())
    }

    /// Message when the screen is closer than the far-field threshold.
    pub fn far_field_warning(&self) -> Option<String> {
        (self.screen_distance < FAR_FIELD_FACTOR * self.slit_separation).then(|| {
            format!(
                "screen distance {} is below {}·ℓ = {}; far-field formulas may be inaccurate",
                self.screen_distance,
                FAR_FIELD_FACTOR,
                FAR_FIELD_FACTOR * self.slit_separation
            )
        })
    }

    /// `ℓ/a`.
    pub fn ratio(&self) -> f64 {
        self.slit_separation / self.slit_width
    }

    /// ρ per unit of `u`.
    pub fn rho_per_u(&self) -> f64 {
        2.0 * self.screen_distance / (self.wavenumber * self.slit_separation)
    }

    /// Grid of `points` positions spanning `u ∈ [u_lo, u_hi]`.
    pub fn grid_in_u(&self, u_lo: f64, u_hi: f64, points: usize) -> Vec<f64> {
        let s = self.rho_per_u();
        linspace(u_lo * s, u_hi * s, points)
    }

    /// Default scan: 1001 points over `u ∈ [−2π, 2π]`.
    pub fn default_grid(&self) -> Vec<f64> {
        let tau = std::f64::consts::TAU;
        self.grid_in_u(-tau, tau, 1001)
    }
}

/// `(u, v) = (kℓρ/2z₀, kaρ/2z₀)`.
pub fn reduce_coords(geom: &SlitGeometry, rho: f64) -> (f64, f64) {
    let f = geom.wavenumber * rho / (2.0 * geom.screen_distance);
    (f * geom.slit_separation, f * geom.slit_width)
}

/// Placement of the two detectors as the scan variable `ρ` moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum DetectionScheme {
    /// `ρ₁ = ρ₂ = ρ`.
    SamePoint,
    /// `ρ₁ = −ρ₂ = ρ`.
    Opposite,
    /// `ρ₁ = ρ`, second detector fixed at `rho2`.
    General { rho2: f64 },
}

impl DetectionScheme {
    pub fn positions(&self, rho: f64) -> (f64, f64) {
        match *self {
            DetectionScheme::SamePoint => (rho, rho),
            DetectionScheme::Opposite => (rho, -rho),
            DetectionScheme::General { rho2 } => (rho, rho2),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            DetectionScheme::SamePoint => "same",
            DetectionScheme::Opposite => "opposite",
            DetectionScheme::General { .. } => "general",
        }
    }

    pub fn parse(s: &str, rho2: f64) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "same" | "same-point" | "blue" => Ok(DetectionScheme::SamePoint),
            "opposite" | "red" => Ok(DetectionScheme::Opposite),
            "general" => Ok(DetectionScheme::General { rho2 }),
            other => Err(Error::InvalidInput(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How the finite slit width enters a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeModel {
    /// Product of single-slit envelopes `sinc v₁ sinc v₂` (squared at second order).
    Factored,
    /// Fringes in `u₁ ∓ u₂` carry `sinc(v₁ ∓ v₂)` (squared at second order).
    Difference,
    /// Point-source result, no envelope.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Catalog,
    Engine,
    Ensemble,
}

impl Route {
    pub fn label(self) -> &'static str {
        match self {
            Route::Catalog => "catalog",
            Route::Engine => "engine",
            Route::Ensemble => "ensemble",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// Detection probability `⟨P⁽ᴼ⁾⟩`.
    Probability,
    G1,
    G2,
}

/// Values sampled over a grid of scan positions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternSeries {
    pub quantity: Quantity,
    pub order: Order,
    /// `None` for semiclassical ensembles.
    pub state: Option<StateSpec>,
    pub source: String,
    pub scheme: DetectionScheme,
    pub geometry: SlitGeometry,
    pub route: Route,
    pub grid: Vec<f64>,
    /// `scale_factor · shape`; NaN where undefined.
    pub values: Vec<f64>,
    /// Normalized shape 𝒢; NaN where undefined.
    pub shape: Vec<f64>,
    pub defined: Vec<bool>,
    /// `P_O`.
    pub scale_factor: f64,
    pub envelope_model: EnvelopeModel,
    /// Set when some value is negative (a correlation, not a probability).
    pub signed_shape: bool,
    pub stderr: Option<Vec<f64>>,
}

impl PatternSeries {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_values(
        quantity: Quantity,
        order: Order,
        state: Option<StateSpec>,
        scheme: DetectionScheme,
        geometry: SlitGeometry,
        route: Route,
        grid: Vec<f64>,
        values: Vec<f64>,
        scale_factor: f64,
        envelope_model: EnvelopeModel,
    ) -> Self {
        let defined: Vec<bool> = values.iter().map(|v| v.is_finite()).collect();
        let shape = values.iter().map(|v| if scale_factor != 0.0 { v / scale_factor } else { v * 0.0 }).collect();
        let signed_shape = values.iter().any(|&v| v < 0.0);
        let source = state.as_ref().map(|s| s.to_string()).unwrap_or_default();
        PatternSeries {
            quantity,
            order,
            state,
            source,
            scheme,
            geometry,
            route,
            grid,
            values,
            shape,
            defined,
            scale_factor,
            envelope_model,
            signed_shape,
            stderr: None,
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest |difference| of values over points defined in both series.
    pub fn max_abs_deviation(&self, other: &PatternSeries) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Shape scaled so its largest |value| is one.
    pub fn peak_normalized(&self) -> Vec<f64> {
        let peak = self.values.iter().filter(|v| v.is_finite()).map(|v| v.abs()).fold(0.0, f64::max);
        self.values.iter().map(|v| if peak > 0.0 { v / peak } else { *v }).collect()
    }

    /// CSV with columns `rho,u,v,value,shape,defined` (plus `stderr_estimate`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let with_err = self.stderr.is_some();
        write!(w, "rho,u,v,value,shape,defined")?;
        if with_err {
            write!(w, ",stderr_estimate")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            let (u, v) = reduce_coords(&self.geometry, self.grid[i]);
            let num = fmt_real;
            write!(
                w,
                "{},{},{},{},{},{}",
                num(self.grid[i]),
                num(u),
                num(v),
                num(self.values[i]),
                num(self.shape[i]),
                self.defined[i]
            )?;
            if let Some(se) = &self.stderr {
                write!(w, ",{}", num(se[i]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "quantity": self.quantity,
            "state": self.state,
            "source": self.source,
            "order": self.order.value(),
            "scheme": self.scheme,
            "route": self.route,
            "P_O": self.scale_factor,
            "envelope_model": self.envelope_model,
            "signed_shape": self.signed_shape,
            "geometry": self.geometry,
            "points": self.len(),
            "shape_normalization": "shape = value / P_O; the shape equals the closed-form bracket, whose value at rho = 0 is its peak",
        })
    }
}

/// Fringe-and-envelope factors at one detector pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub u1: f64,
    pub u2: f64,
    pub v1: f64,
    pub v2: f64,
}

impl Point {
    pub fn new(geom: &SlitGeometry, scheme: &DetectionScheme, rho: f64) -> Self {
        let (r1, r2) = scheme.positions(rho);
        Self::at(geom, r1, r2)
    }

    pub fn at(geom: &SlitGeometry, rho1: f64, rho2: f64) -> Self {
        let (u1, v1) = reduce_coords(geom, rho1);
        let (u2, v2) = reduce_coords(geom, rho2);
        Point { u1, u2, v1, v2 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinate_reduction() {
        let g = SlitGeometry::new(std::f64::consts::TAU / 500e-9, 100e-6, 25e-6, 1.0).unwrap();
        assert_eq!(reduce_coords(&g, 0.0), (0.0, 0.0));
        let (u, v) = reduce_coords(&g, 5e-3);
        assert!((u - std::f64::consts::PI).abs() < 1e-12);
        assert!((v - u / 4.0).abs() < 1e-15);
    }

    #[test]
    fn geometry_validation() {
        assert!(SlitGeometry::new(1.0, 1.0, 0.6, 1000.0).is_err());
        assert!(SlitGeometry::new(1.0, 1.0, 0.0, 1000.0).is_err());
        let near = SlitGeometry::new(1.0, 1.0, 0.25, 10.0).unwrap();
        assert!(near.far_field_warning().is_some());
        assert!(SlitGeometry::with_ratio(4.0).unwrap().far_field_warning().is_none());
    }

    #[test]
    fn default_grid_spans_two_pi() {
        let g = SlitGeometry::with_ratio(4.0).unwrap();
        let grid = g.default_grid();
        assert_eq!(grid.len(), 1001);
        let (u, _) = reduce_coords(&g, grid[1000]);
        assert!((u - std::f64::consts::TAU).abs() < 1e-12);
        assert_eq!(grid[500], 0.0);
    }
}
