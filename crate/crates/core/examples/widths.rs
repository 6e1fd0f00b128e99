//! Effective pattern widths of coherent light at first and second order.
//!
//! `cargo run --example widths -- [ratio]`

use qdiffract::correlator::Order;
use qdiffract::pattern::{effective_width_for, SlitGeometry};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let ratio = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let geom = SlitGeometry::with_ratio(ratio)?;
    for order in [Order::First, Order::Second] {
        let r = effective_width_for(&StateSpec::coherent(1.0), order, &geom)?;
        println!(
            "order {}: width {:.8} (tail bound {:.1e}, half range v = {:.3e}, step {:.3e})",
            r.order.value(),
            r.width,
            r.tail_bound,
            r.half_range_v,
            r.step_v
        );
    }
    Ok(())
}
