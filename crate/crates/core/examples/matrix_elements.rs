//! Phase-averaged matrix elements from the Fock engine next to their closed forms.
//!
//! `cargo run --example matrix_elements -- [state] [order]`, e.g. `cha 2` or `ent2 2`.

use qdiffract::correlator::{closed_form_matrix_elements, matrix_elements, Order, PhaseAverage};
use qdiffract::states::StateSpec;

fn main() -> qdiffract::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let spec = StateSpec::parse(args.first().map_or("cha", String::as_str), 1.0, None)?;
    let order = Order::from_value(args.get(1).map_or(Ok(2), |s| s.parse()).unwrap_or(2))?;
    let avg = PhaseAverage::default_for(&spec)?;
    let engine = matrix_elements(&spec, order, &avg)?;
    let closed = closed_form_matrix_elements(&spec, order)?;
    println!("{spec}, order {}, averaging {}", order.value(), avg.label());
    for ((sig, e), c) in engine.iter().zip(&closed.entries) {
        println!("{:>28}  engine {:>22.12}  closed {:>22.12}", sig.to_string(), e, c);
    }
    let mc = matrix_elements(&spec, order, &PhaseAverage::MonteCarlo { samples: 2000, seed: 1 });
    if let Ok(mc) = mc {
        let se = mc.stderr.unwrap_or_default();
        let worst = mc.entries.iter().zip(&closed.entries).zip(&se).map(|((a, b), s)| (a - b).norm() / s.max(1e-300));
        println!("Monte Carlo (2000 samples) worst deviation in standard errors: {:.2}", worst.fold(0.0, f64::max));
    }
    Ok(())
}
