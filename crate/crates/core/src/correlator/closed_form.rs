//! Closed-form phase-averaged matrix elements, written from the photon-number
//! structure of each state without touching the Fock engine.

use num_complex::Complex64;

use super::{MatrixElementTable, Order, PhaseAverage, Signature};
use crate::error::Result;
use crate::fock::Mode;
use crate::states::{StateKind, StateSpec};

fn k_count(v: &[Mode]) -> usize {
    v.iter().filter(|&&m| m == Mode::K).count()
}

/// Matrix elements after averaging, per state family.
pub fn closed_form_matrix_elements(spec: &StateSpec, order: Order) -> Result<MatrixElementTable> {
    spec.validate()?;
    let o = order.value() as i32;
    let mean = spec.mean_n;
    let n = spec.n_photons as f64;
    let phi = spec.phases.first().copied().unwrap_or(0.0);
    let falling = |n: f64| if o == 1 { n } else { n * (n - 1.0) };
    let entries = Signature::all(order)
        .into_iter()
        .map(|sig| {
            let (ck, ak) = (k_count(&sig.creators), k_count(&sig.annihilators));
            let balanced = ck == ak;
            // Pairs from one mode only: both creators and both annihilators in the same mode.
            let same_mode = o == 2 && (ck == 2 || ck == 0) && balanced;
            let real = |x: f64| Complex64::new(x, 0.0);
            match spec.kind {
                StateKind::CollectiveCoherent => real(mean.powi(o)),
                StateKind::CoherentSubstate => real(falling(n) / 2f64.powi(o)),
                StateKind::PhaseDiffused if balanced => real(mean.powi(o)),
                StateKind::PhaseDiffusedSubstate if balanced => real(falling(n) / 2f64.powi(o)),
                StateKind::Chaotic if balanced => real(mean.powi(o) * if same_mode { 2.0 } else { 1.0 }),
                StateKind::ChaoticSubstate if balanced => {
                    if o == 1 {
                        real(n / 2.0)
                    } else {
                        real(n * (n - 1.0) / if same_mode { 3.0 } else { 6.0 })
                    }
                }
                StateKind::Noon => noon_entry(spec.n_photons, phi, &sig),
                StateKind::NumberState if balanced => {
                    if o == 1 {
                        real(n / 2.0)
                    } else if same_mode {
                        real(n * (n - 2.0) / 4.0)
                    } else {
                        real(n * n / 4.0)
                    }
                }
                _ => real(0.0),
            }
        })
        .collect();
    Ok(MatrixElementTable { order, entries, stderr: None, averaging: PhaseAverage::None })
}

fn noon_entry(n: usize, phi: f64, sig: &Signature) -> Complex64 {
    let (ck, ak) = (k_count(&sig.creators), k_count(&sig.annihilators));
    let o = sig.creators.len();
    let nf = n as f64;
    let zero = Complex64::new(0.0, 0.0);
    if o == 1 {
        return match (ck, ak) {
            (1, 1) | (0, 0) => Complex64::new(nf / 2.0, 0.0),
            // Single-photon coherence survives only for N = 1.
            (1, 0) if n == 1 => Complex64::from_polar(0.5, phi),
            (0, 1) if n == 1 => Complex64::from_polar(0.5, -phi),
            _ => zero,
        };
    }
    match (ck, ak) {
        (2, 2) | (0, 0) => Complex64::new(nf * (nf - 1.0) / 2.0, 0.0),
        (2, 0) if n == 2 => Complex64::from_polar(1.0, phi),
        (0, 2) if n == 2 => Complex64::from_polar(1.0, -phi),
        _ => zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chaotic_pair_values() {
        let t = closed_form_matrix_elements(&StateSpec::chaotic(2.0), Order::Second).unwrap();
        assert_eq!(t.get(&Signature::parse("k,k|k,k").unwrap()).re, 8.0);
        assert_eq!(t.get(&Signature::parse("k,kp|kp,k").unwrap()).re, 4.0);
        assert_eq!(t.get(&Signature::parse("k,k|kp,kp").unwrap()).re, 0.0);
    }

    #[test]
    fn number_state_values() {
        let t = closed_form_matrix_elements(&StateSpec::number(2), Order::Second).unwrap();
        assert_eq!(t.get(&Signature::parse("k,k|k,k").unwrap()).re, 0.0);
        assert_eq!(t.get(&Signature::parse("k,kp|k,kp").unwrap()).re, 1.0);
    }
}
