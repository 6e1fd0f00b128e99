//! Simulated detection events drawn from a pattern, binned and tested
//! against the expected counts.
//!
//! `cargo run --release --example coincidence_histogram -- [events] [seed]`

use qdiffract::correlator::Order;
use qdiffract::mc::{gof, simulate, DetectionRun};
use qdiffract::pattern::{catalog_pattern, DetectionScheme, SlitGeometry};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let mut args = std::env::args().skip(1);
    let events = args.next().and_then(|s| s.parse().ok()).unwrap_or(100_000);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let geom = SlitGeometry::with_ratio(4.0)?;
    let series = catalog_pattern(
        &StateSpec::chaotic(1.0),
        Order::Second,
        DetectionScheme::Opposite,
        &geom.default_grid(),
        &geom,
    )?;
    let run = simulate(&DetectionRun::from_series(&series, events, seed, 25)?)?;
    let peak = *run.histogram.iter().max().unwrap_or(&1) as f64;
    for i in 0..run.bins {
        let bar = "#".repeat((50.0 * run.histogram[i] as f64 / peak).round() as usize);
        println!("{:8.5} {:7} {:9.1} {bar}", run.edges[i], run.histogram[i], run.expected[i]);
    }
    let g = gof(&run)?;
    println!("χ² = {:.2} on {} dof, p = {:.4}", g.chi_square, g.dof, g.p_value);
    Ok(())
}
