//! Two-photon states split into |1,1⟩, |2,0⟩ and |0,2⟩ amplitudes; the
//! flat second-order background follows from the last two once the
//! relative phases of the three components are averaged away.
//!
//! `cargo run --example two_photon_decomposition`

use qdiffract::correlator::{Order, PhaseAverage};
use qdiffract::pattern::{decompose_n2, Evaluator};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    for spec in [
        StateSpec::coherent_substate(2),
        StateSpec::phase_diffused_substate(2),
        StateSpec::chaotic_substate(2),
        StateSpec::noon(2),
        StateSpec::number(2),
    ] {
        let d = decompose_n2(&spec)?;
        let engine = Evaluator::engine(&spec, Order::Second, &PhaseAverage::default_for(&spec)?, None)?;
        let bg = engine.background().map_or("n/a".to_string(), |b| format!("{b:.6}"));
        // Without phase averaging two populated components stay coherent and no flat part separates out.
        let populated = [d.a11, d.a20, d.a02].iter().filter(|a| **a > 0.0).count();
        let predicted = if !spec.kind.is_phase_parameterized() && populated > 1 {
            "n/a (coherent components)".to_string()
        } else {
            format!("{:.6}", d.predicted_background())
        };
        println!(
            "{:>12}: a11 {:.4} a20 {:.4} a02 {:.4}  predicted background {predicted}  engine {bg}",
            spec.to_string(),
            d.a11,
            d.a20,
            d.a02,
        );
    }
    Ok(())
}
