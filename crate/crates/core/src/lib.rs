//! Quantum double-slit diffraction on a truncated two-mode Fock space.
//!
//! The library builds coherent, phase-diffused, chaotic, NOON and number
//! states of two-slit light, evaluates first- and second-order normally
//! ordered correlations with a brute-force ladder-operator engine, and turns
//! them into detection patterns, degrees of coherence and simulated
//! coincidence histograms. A closed-form catalog and semiclassical field
//! ensembles serve as independent cross-checks of the engine.
//!
//! ```
//! use qdiffract::correlator::{matrix_elements, Order, PhaseAverage};
//! use qdiffract::states::StateSpec;
//!
//! let table = matrix_elements(&StateSpec::chaotic(1.0), Order::Second, &PhaseAverage::Pairing).unwrap();
//! let bunched = qdiffract::correlator::p2(&table, 0.0, 0.0).unwrap();
//! assert!((bunched - 2.0).abs() < 1e-9);
//! ```

// `!(x >= 0.0)` style comparisons deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod correlator;
pub mod error;
pub mod fock;
pub mod mc;
pub mod numeric;
pub mod oracle;
pub mod pattern;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
