//! Two-photon states as combinations of `|1,1⟩`, `|2,0⟩` and `|0,2⟩`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::states::{build_state, StateSpec};

/// `a₁₁e^{iφ₁₁}|1,1⟩ + a₂₀e^{iφ₂₀}|2,0⟩ + a₀₂e^{iφ₀₂}|0,2⟩` with non-negative `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct N2Decomposition {
    pub a11: f64,
    pub a20: f64,
    pub a02: f64,
    pub phi11: f64,
    pub phi20: f64,
    pub phi02: f64,
}

impl N2Decomposition {
    /// Flat Opposite-scheme background of `⟨P⁽²⁾⟩`, in absolute units.
    ///
    /// Only the `|2,0⟩` and `|0,2⟩` populations contribute once their relative
    /// phase is averaged away.
    pub fn predicted_background(&self) -> f64 {
        0.5 * (self.a20 * self.a20 + self.a02 * self.a02)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a11 * self.a11 + self.a20 * self.a20 + self.a02 * self.a02
    }
}

/// Coefficients of a two-photon substate, read from the built state.
pub fn decompose_n2(spec: &StateSpec) -> Result<N2Decomposition> {
    spec.validate()?;
    if spec.kind.is_collective() || spec.n_photons != 2 {
        return Err(Error::InvalidInput(format!("{} is not a two-photon substate", spec.label())));
    }
    let basis = FockBasis::new(2)?;
    let state = build_state(spec, basis)?;
    let amp = |n, m| state.amplitude(n, m);
    let (c11, c20, c02) = (amp(1, 1), amp(2, 0), amp(0, 2));
    let arg = |z: num_complex::Complex64| if z.norm() > 0.0 { z.arg() } else { 0.0 };
    Ok(N2Decomposition {
        a11: c11.norm(),
        a20: c20.norm(),
        a02: c02.norm(),
        phi11: arg(c11),
        phi20: arg(c20),
        phi02: arg(c02),
    })
}

#[cfg(test)]
mod tests {
    use super::super::catalog::catalog_form;
    use super::*;
    use crate::correlator::Order;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn documented_coefficients() {
        let d = decompose_n2(&StateSpec::coherent_substate(2)).unwrap();
        assert!((d.a11 - FRAC_1_SQRT_2).abs() < 1e-15 && (d.a20 - 0.5).abs() < 1e-15 && (d.a02 - 0.5).abs() < 1e-15);
        assert_eq!((d.phi11, d.phi20, d.phi02), (0.0, 0.0, 0.0));
        let spec = StateSpec::chaotic_substate(2).with_phases(vec![0.4, 1.1]);
        let d = decompose_n2(&spec).unwrap();
        let third = 1.0 / 3f64.sqrt();
        assert!([d.a11, d.a20, d.a02].iter().all(|a| (a - third).abs() < 1e-15));
        let d = decompose_n2(&StateSpec::number(2)).unwrap();
        assert_eq!((d.a11, d.a20, d.a02), (1.0, 0.0, 0.0));
        assert!(decompose_n2(&StateSpec::number(4)).is_err());
        assert!(decompose_n2(&StateSpec::chaotic(1.0)).is_err());
    }

    #[test]
    fn background_prediction_matches_catalog() {
        for spec in [StateSpec::phase_diffused_substate(2), StateSpec::chaotic_substate(2), StateSpec::number(2)] {
            let d = decompose_n2(&spec).unwrap();
            assert!((d.norm_sqr() - 1.0).abs() < 1e-14);
            let form = catalog_form(&spec, Order::Second).unwrap();
            assert!((d.predicted_background() - form.background()).abs() < 1e-14, "{spec}");
        }
    }
}
