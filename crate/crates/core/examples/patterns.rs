//! First- and second-order patterns along the opposite-detector scan,
//! from the closed-form catalog and from the Fock engine.
//!
//! `cargo run --example patterns`

use qdiffract::correlator::{Order, PhaseAverage};
use qdiffract::pattern::{catalog_pattern, engine_pattern, DetectionScheme, SlitGeometry};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let geom = SlitGeometry::with_ratio(4.0)?;
    let grid = geom.grid_in_u(-6.0, 6.0, 13);
    let states = [
        StateSpec::coherent(1.0),
        StateSpec::phase_diffused(1.0),
        StateSpec::chaotic(1.0),
        StateSpec::noon(2),
        StateSpec::number(2),
    ];
    for order in [Order::First, Order::Second] {
        println!("order {} shapes 𝒢 at u = -6..6", order.value());
        for spec in &states {
            let avg = PhaseAverage::default_for(spec)?;
            let c = catalog_pattern(spec, order, DetectionScheme::Opposite, &grid, &geom)?;
            let e = engine_pattern(spec, order, DetectionScheme::Opposite, &grid, &geom, &avg)?;
            let row: Vec<String> = c.shape.iter().map(|v| format!("{v:6.3}")).collect();
            println!(
                "{:>16} P_O = {:5.2} |{}| engine Δ = {:.1e}",
                spec.to_string(),
                c.scale_factor,
                row.join(""),
                c.max_abs_deviation(&e)
            );
        }
    }
    Ok(())
}
