//! The full verification suite, optionally with the deliberate B/C swap.
//!
//! `cargo run --release --example verify_suite -- [swap-BC]`

use qdiffract::cli::{run_checks, VerifyOptions};
use qdiffract::correlator::AssemblyFault;

fn main() -> qdiffract::Result<()> {
    let fault = std::env::args().nth(1).filter(|a| a == "swap-BC").map(|_| AssemblyFault::SwapBC);
    let checks = run_checks(&VerifyOptions { only: None, fault, seed: 0 })?;
    for c in &checks {
        println!(
            "{} {:<28} residual {:>10.2e} < {:<8.0e} {}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", checks.len());
    Ok(())
}
