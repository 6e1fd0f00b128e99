//! Ladder operators on a truncated two-mode Fock space.
//!
//! `cargo run --example fock_ladder`

use qdiffract::fock::{expect_normal_ordered, FockBasis, LadderOp, Mode, TwoModeState};

fn main() -> qdiffract::Result<()> {
    let basis = FockBasis::new(4)?;
    let ket = TwoModeState::basis_ket(basis, 2, 1)?;
    let (ak, ak_dag) = (LadderOp::annihilate(Mode::K), LadderOp::create(Mode::K));
    let (ap, ap_dag) = (LadderOp::annihilate(Mode::KPrime), LadderOp::create(Mode::KPrime));
    println!("state |2,1⟩ on a basis of dimension {}", basis.dimension());
    for (label, ops) in [
        ("⟨a†K aK⟩", vec![ak_dag, ak]),
        ("⟨a†K' aK'⟩", vec![ap_dag, ap]),
        ("⟨a†K a†K aK aK⟩", vec![ak_dag, ak_dag, ak, ak]),
        ("⟨a†K a†K' aK aK'⟩", vec![ak_dag, ap_dag, ak, ap]),
        ("⟨a†K aK'⟩", vec![ak_dag, ap]),
    ] {
        println!("{label:>20} = {:.6}", expect_normal_ordered(&ket, &ops)?);
    }
    Ok(())
}
