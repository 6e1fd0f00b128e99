//! Degrees of first- and second-order coherence for the opposite-detector scan.
//!
//! `cargo run --example coherence`

use qdiffract::pattern::{g1, g2, SlitGeometry};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let geom = SlitGeometry::with_ratio(4.0)?;
    let grid = geom.grid_in_u(0.0, 3.0, 7);
    println!("u values: {:?}", grid.iter().map(|r| r / geom.rho_per_u()).collect::<Vec<_>>());
    for spec in [
        StateSpec::coherent(1.0),
        StateSpec::coherent_substate(2),
        StateSpec::coherent_substate(4),
        StateSpec::phase_diffused(1.0),
        StateSpec::chaotic(1.0),
        StateSpec::noon(2),
        StateSpec::number(2),
    ] {
        let show = |v: &[f64]| {
            v.iter().map(|x| if x.is_finite() { format!("{x:7.4}") } else { "   null".into() }).collect::<String>()
        };
        println!(
            "{:>14}  g1 {}  g2 {}",
            spec.to_string(),
            show(&g1(&spec, &grid, &geom)?.values),
            show(&g2(&spec, &grid, &geom)?.values)
        );
    }
    Ok(())
}
