//! Poisson and Bose-Einstein substate weights and their sum rules.
//!
//! `cargo run --example photon_statistics`

use qdiffract::states::{check_sum_rules, coefficient_distribution, DistributionKind};

fn main() {
    for kind in [DistributionKind::Poisson, DistributionKind::BoseEinstein] {
        println!("{} weights |c_N|² for N = 0..8", kind.label());
        for m in [1.0, 2.0, 4.0, 9.0] {
            let d = coefficient_distribution(kind, m, 8);
            let row: Vec<String> = d.weights.iter().map(|w| format!("{w:.4}")).collect();
            println!("  ⟨n⟩ = {m}: {}  (tail {:.2e})", row.join(" "), d.tail);
        }
        for m in [1.0, 2.0, 4.0, 9.0] {
            let r = check_sum_rules(kind, m, 1e-10);
            println!(
                "  sum rules at ⟨n⟩ = {m}: norm {:.3e}, first {:.3e}, second {:.3e} over {} terms",
                r.norm_residual, r.first_order_residual, r.second_order_residual, r.terms
            );
        }
    }
}
