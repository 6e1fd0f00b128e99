//! Semiclassical field ensembles: fixed-phase fields reproduce coherent light,
//! circular Gaussian fields reproduce chaotic bunching.
//!
//! `cargo run --release --example field_ensembles`

use qdiffract::correlator::Order;
use qdiffract::oracle::{ensemble_p1, ensemble_p2, EnsembleModel, EnsembleSpec};
use qdiffract::pattern::{catalog_pattern, g2, DetectionScheme, SlitGeometry};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let geom = SlitGeometry::with_ratio(4.0)?;
    let grid = geom.grid_in_u(-4.0, 4.0, 9);
    let fixed = EnsembleSpec::new(EnsembleModel::FixedPhase, 1, 0, 51)?;
    let e = ensemble_p1(&fixed, DetectionScheme::Opposite, &grid, &geom)?;
    let c = catalog_pattern(&StateSpec::coherent(1.0), Order::First, DetectionScheme::Opposite, &grid, &geom)?;
    println!(
        "fixed phase, 51 sub-sources per slit: max shape deviation {:.2e}",
        e.shape.iter().zip(&c.shape).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    );
    for model in [EnsembleModel::RandomRelativePhase, EnsembleModel::CircularGaussian] {
        let spec = EnsembleSpec::new(model, 20_000, 7, 51)?;
        let s = ensemble_p2(&spec, DetectionScheme::Opposite, &grid, &geom)?;
        let se = s.stderr.clone().unwrap_or_default();
        println!("{} second-order shape:", model.label());
        for ((u, v), e) in grid.iter().zip(&s.shape).zip(&se) {
            println!("  u = {:5.2}  {v:.4} ± {e:.4}", u / geom.rho_per_u());
        }
    }
    let chaotic = g2(&StateSpec::chaotic(1.0), &grid, &geom)?;
    println!(
        "chaotic g2 for comparison: {:?}",
        chaotic.values.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()
    );
    Ok(())
}
