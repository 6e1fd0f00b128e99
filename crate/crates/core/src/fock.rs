//! Truncated two-mode bosonic Fock space.
//!
//! Kets are `|n⟩_k |m⟩_k′` with `0 ≤ n, m ≤ n_max`, stored densely in
//! row-major order: the `k` occupation selects the row.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Default per-mode cutoff budget.
pub const MAX_CUTOFF: usize = 255;

/// One of the two plane-wave modes, one per slit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "k")]
    K,
    #[serde(rename = "kp")]
    KPrime,
}

impl Mode {
    pub const BOTH: [Mode; 2] = [Mode::K, Mode::KPrime];

    /// Sign of the fringe phase carried by this mode: `k·x = kz₀ − sign·u`.
    pub fn sign(self) -> f64 {
        match self {
            Mode::K => 1.0,
            Mode::KPrime => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::K => "k",
            Mode::KPrime => "kp",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A creation (`dagger`) or annihilation operator on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LadderOp {
    pub mode: Mode,
    pub dagger: bool,
}

impl LadderOp {
    pub const fn create(mode: Mode) -> Self {
        LadderOp { mode, dagger: true }
    }

    pub const fn annihilate(mode: Mode) -> Self {
        LadderOp { mode, dagger: false }
    }
}

impl fmt::Display for LadderOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dagger {
            write!(f, "a†{}", self.mode)
        } else {
            write!(f, "a{}", self.mode)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockBasis {
    n_max: usize,
}

impl FockBasis {
    pub fn new(n_max: usize) -> Result<Self> {
        Self::with_limit(n_max, MAX_CUTOFF)
    }

    pub fn with_limit(n_max: usize, limit: usize) -> Result<Self> {
        if n_max > limit {
            return Err(Error::CutoffTooLarge { requested: n_max, limit });
        }
        Ok(FockBasis { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Number of occupations per mode, `n_max + 1`.
    pub fn side(&self) -> usize {
        self.n_max + 1
    }

    pub fn dimension(&self) -> usize {
        self.side() * self.side()
    }

    /// Flat index of `|n, m⟩`.
    pub fn index(&self, n: usize, m: usize) -> usize {
        debug_assert!(n <= self.n_max && m <= self.n_max);
        n * self.side() + m
    }

    /// Inverse of [`FockBasis::index`].
    pub fn ket(&self, index: usize) -> (usize, usize) {
        (index / self.side(), index % self.side())
    }
}

/// Pure state on a truncated two-mode basis.
///
/// Operator results share this type, so the norm is not forced to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoModeState {
    basis: FockBasis,
    amplitudes: Vec<Complex64>,
    truncation_loss: f64,
}

impl TwoModeState {
    pub fn new(basis: FockBasis, amplitudes: Vec<Complex64>, truncation_loss: f64) -> Result<Self> {
        if amplitudes.len() != basis.dimension() {
            return Err(Error::InvalidState(format!(
                "{} amplitudes for a basis of dimension {}",
                amplitudes.len(),
                basis.dimension()
            )));
        }
        if !(truncation_loss >= 0.0) {
            return Err(Error::InvalidState(format!("truncation loss {truncation_loss}")));
        }
        Ok(TwoModeState { basis, amplitudes, truncation_loss })
    }

    pub fn zero(basis: FockBasis) -> Self {
        TwoModeState { basis, amplitudes: vec![Complex64::new(0.0, 0.0); basis.dimension()], truncation_loss: 0.0 }
    }

    pub fn basis_ket(basis: FockBasis, n: usize, m: usize) -> Result<Self> {
        if n > basis.n_max() || m > basis.n_max() {
            return Err(Error::CutoffTooSmall {
                n_max: basis.n_max(),
                reason: format!("ket |{n},{m}⟩ lies outside the basis"),
            });
        }
        let mut s = Self::zero(basis);
        s.amplitudes[basis.index(n, m)] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn basis(&self) -> FockBasis {
        self.basis
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize, m: usize) -> Complex64 {
        if n > self.basis.n_max() || m > self.basis.n_max() {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[self.basis.index(n, m)]
    }

    pub fn truncation_loss(&self) -> f64 {
        self.truncation_loss
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Raw ladder action; amplitude pushed past `n_max` by a creator is added to
/// the result's `truncation_loss`.
pub fn apply_ladder(state: &TwoModeState, op: LadderOp) -> TwoModeState {
    let basis = state.basis;
    let side = basis.side();
    let src = &state.amplitudes;
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let mut lost = 0.0;
    let top = basis.n_max();
    match (op.mode, op.dagger) {
        (Mode::K, false) => {
            for n in 1..side {
                let s = (n as f64).sqrt();
                let (row_src, row_dst) = (n * side, (n - 1) * side);
                for m in 0..side {
                    out[row_dst + m] = src[row_src + m] * s;
                }
            }
        }
        (Mode::K, true) => {
            for n in 0..top {
                let s = ((n + 1) as f64).sqrt();
                let (row_src, row_dst) = (n * side, (n + 1) * side);
                for m in 0..side {
                    out[row_dst + m] = src[row_src + m] * s;
                }
            }
            let row = top * side;
            lost = (top + 1) as f64 * src[row..row + side].iter().map(|c| c.norm_sqr()).sum::<f64>();
        }
        (Mode::KPrime, false) => {
            let roots: Vec<f64> = (0..side).map(|m| (m as f64).sqrt()).collect();
            for n in 0..side {
                let row = n * side;
                for m in 1..side {
                    out[row + m - 1] = src[row + m] * roots[m];
                }
            }
        }
        (Mode::KPrime, true) => {
            let roots: Vec<f64> = (0..side).map(|m| ((m + 1) as f64).sqrt()).collect();
            for n in 0..side {
                let row = n * side;
                for m in 0..top {
                    out[row + m + 1] = src[row + m] * roots[m];
                }
                lost += (top + 1) as f64 * src[row + top].norm_sqr();
            }
        }
    }
    TwoModeState { basis, amplitudes: out, truncation_loss: state.truncation_loss + lost }
}

/// `Σ conj(bra)·ket`.
pub fn inner(bra: &TwoModeState, ket: &TwoModeState) -> Result<Complex64> {
    if bra.basis != ket.basis {
        return Err(Error::BasisMismatch { left: bra.basis.n_max(), right: ket.basis.n_max() });
    }
    Ok(dot(&bra.amplitudes, &ket.amplitudes))
}

pub(crate) fn dot(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (b, k) in bra.iter().zip(ket) {
        re += b.re * k.re + b.im * k.im;
        im += b.re * k.im - b.im * k.re;
    }
    Complex64::new(re, im)
}

/// Applies annihilators in slice order, first element first.
pub(crate) fn lower(state: &TwoModeState, modes: &[Mode]) -> TwoModeState {
    let mut cur = state.clone();
    for &m in modes {
        cur = apply_ladder(&cur, LadderOp::annihilate(m));
    }
    cur
}

/// `⟨ψ| ops |ψ⟩` for a normally ordered product of at most four operators.
pub fn expect_normal_ordered(state: &TwoModeState, ops: &[LadderOp]) -> Result<Complex64> {
    let creators = ops.iter().take_while(|o| o.dagger).count();
    if ops.len() > 4 || ops[creators..].iter().any(|o| o.dagger) {
        let listed: Vec<String> = ops.iter().map(|o| o.to_string()).collect();
        return Err(Error::NotNormallyOrdered(listed.join(" ")));
    }
    // ⟨ψ|a†X a†Y = (aY aX|ψ⟩)†, so creators lower the bra in listed order.
    let bra_modes: Vec<Mode> = ops[..creators].iter().map(|o| o.mode).collect();
    let ket_modes: Vec<Mode> = ops[creators..].iter().rev().map(|o| o.mode).collect();
    let bra = lower(state, &bra_modes);
    let ket = lower(state, &ket_modes);
    inner(&bra, &ket)
}
