//! First- and second-order detection correlations assembled from the 4 and
//! 16 normally ordered matrix elements of a state.
//!
//! Reduced coordinates: mode `k` carries `k·x_j = kz₀ − u_j` and mode `k′`
//! carries `kz₀ + u_j`, so each operator contributes `e^{±i sign·u}`.

mod closed_form;

pub use closed_form::closed_form_matrix_elements;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;

use crate::error::{Error, Result};
use crate::fock::{dot, lower, FockBasis, Mode, TwoModeState};
use crate::rng;
use crate::states::{auto_basis, build_state, StateKind, StateSpec};

/// Tolerance on the imaginary residue of an assembled probability.
pub const IMAG_TOLERANCE: f64 = 1e-10;
/// Relative tolerance for the symmetry relations between table entries.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    First,
    Second,
}

impl Order {
    pub fn value(self) -> usize {
        match self {
            Order::First => 1,
            Order::Second => 2,
        }
    }

    pub fn from_value(v: usize) -> Result<Self> {
        match v {
            1 => Ok(Order::First),
            2 => Ok(Order::Second),
            _ => Err(Error::InvalidInput(format!("order must be 1 or 2, got {v}"))),
        }
    }

    pub fn signature_count(self) -> usize {
        match self {
            Order::First => 4,
            Order::Second => 16,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Order::from_value(v as usize)
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        o.value() as u8
    }
}

/// Operator term groups of the second-order correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermGroup {
    /// One photon from each mode on both sides.
    A,
    /// Both creators share a mode and both annihilators share a mode.
    B,
    /// Remaining terms whose phase depends on `u₁` only.
    C,
    /// Remaining terms whose phase depends on `u₂` only.
    D,
}

/// `a†_{c₁} a†_{c₂} … a_{a₁} a_{a₂}`; slot `j` of each list belongs to detector `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub creators: Vec<Mode>,
    pub annihilators: Vec<Mode>,
}

fn mode_index(m: Mode) -> usize {
    match m {
        Mode::K => 0,
        Mode::KPrime => 1,
    }
}

impl Signature {
    /// All signatures of an order in table order.
    pub fn all(order: Order) -> Vec<Signature> {
        let o = order.value();
        (0..order.signature_count())
            .map(|i| {
                let bits: Vec<Mode> =
                    (0..2 * o).rev().map(|b| if (i >> b) & 1 == 0 { Mode::K } else { Mode::KPrime }).collect();
                Signature { creators: bits[..o].to_vec(), annihilators: bits[o..].to_vec() }
            })
            .collect()
    }

    pub fn order(&self) -> Order {
        if self.creators.len() == 1 {
            Order::First
        } else {
            Order::Second
        }
    }

    /// Position in [`Signature::all`].
    pub fn index(&self) -> usize {
        self.creators.iter().chain(&self.annihilators).fold(0, |acc, &m| acc * 2 + mode_index(m))
    }

    pub fn ops(&self) -> Vec<crate::fock::LadderOp> {
        use crate::fock::LadderOp;
        self.creators
            .iter()
            .map(|&m| LadderOp::create(m))
            .chain(self.annihilators.iter().map(|&m| LadderOp::annihilate(m)))
            .collect()
    }

    /// Signature of the Hermitian adjoint operator.
    pub fn adjoint(&self) -> Signature {
        Signature {
            creators: self.annihilators.iter().rev().copied().collect(),
            annihilators: self.creators.iter().rev().copied().collect(),
        }
    }

    /// Coefficients `(f₁, f₂)` of the phase `e^{i(f₁u₁ + f₂u₂)}`.
    pub fn frequencies(&self) -> (i32, i32) {
        let s = |m: Mode| mode_index(m) as i32 * -2 + 1;
        match self.order() {
            Order::First => (s(self.creators[0]), -s(self.annihilators[0])),
            Order::Second => {
                (s(self.creators[0]) - s(self.annihilators[0]), s(self.creators[1]) - s(self.annihilators[1]))
            }
        }
    }

    /// Net change of the `k` occupation between ket and bra.
    pub fn photon_shift(&self) -> i32 {
        let count = |v: &[Mode]| v.iter().filter(|&&m| m == Mode::K).count() as i32;
        count(&self.creators) - count(&self.annihilators)
    }

    /// Second-order group; `None` at first order.
    pub fn group(&self) -> Option<TermGroup> {
        if self.order() == Order::First {
            return None;
        }
        let mixed = |v: &[Mode]| v[0] != v[1];
        Some(match (mixed(&self.creators), mixed(&self.annihilators)) {
            (true, true) => TermGroup::A,
            (false, false) => TermGroup::B,
            _ => match self.frequencies() {
                (_, 0) => TermGroup::C,
                _ => TermGroup::D,
            },
        })
    }

    /// Compact form such as `k,kp|kp,k`.
    pub fn label(&self) -> String {
        let join = |v: &[Mode]| v.iter().map(|m| m.label()).collect::<Vec<_>>().join(",");
        format!("{}|{}", join(&self.creators), join(&self.annihilators))
    }

    pub fn parse(label: &str) -> Result<Signature> {
        let bad = || Error::InvalidInput(format!("bad signature '{label}'"));
        let (c, a) = label.split_once('|').ok_or_else(bad)?;
        let modes = |s: &str| -> Result<Vec<Mode>> {
            s.split(',')
                .map(|t| match t.trim() {
                    "k" => Ok(Mode::K),
                    "kp" | "k'" => Ok(Mode::KPrime),
                    _ => Err(bad()),
                })
                .collect()
        };
        let sig = Signature { creators: modes(c)?, annihilators: modes(a)? };
        if sig.creators.len() != sig.annihilators.len() || !(1..=2).contains(&sig.creators.len()) {
            return Err(bad());
        }
        Ok(sig)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in self.ops() {
            write!(f, "{op} ")?;
        }
        Ok(())
    }
}

/// Averaging over the random phases of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PhaseAverage {
    None,
    /// Equal-weight nodes `2πj/K`; exact for trigonometric polynomials of degree `< K`.
    PeriodicQuadrature {
        nodes: usize,
    },
    /// Uniform i.i.d. phases; sample `i` draws from stream `i` of `seed`.
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    /// Keeps only contributions in which bra and ket come from the same Fock term.
    Pairing,
}

impl PhaseAverage {
    /// Exact default: quadrature for a shared phase, pairing for per-term phases.
    pub fn default_for(spec: &StateSpec) -> Result<PhaseAverage> {
        if !spec.kind.is_phase_parameterized() {
            return Ok(PhaseAverage::None);
        }
        if spec.kind.has_single_phase() {
            let basis = auto_basis(spec)?;
            return Ok(PhaseAverage::PeriodicQuadrature { nodes: 2 * spec.max_total_photons(basis) + 3 });
        }
        Ok(PhaseAverage::Pairing)
    }

    pub fn label(&self) -> String {
        match self {
            PhaseAverage::None => "none".into(),
            PhaseAverage::PeriodicQuadrature { nodes } => format!("quad:{nodes}"),
            PhaseAverage::MonteCarlo { samples, seed } => format!("mc:{samples}@{seed}"),
            PhaseAverage::Pairing => "pairing".into(),
        }
    }
}

/// The 4 (first order) or 16 (second order) matrix elements of a state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixElementTable {
    pub order: Order,
    /// Indexed by [`Signature::index`].
    pub entries: Vec<Complex64>,
    /// Per-entry standard error of a Monte Carlo mean.
    pub stderr: Option<Vec<f64>>,
    pub averaging: PhaseAverage,
}

#[derive(Serialize)]
struct EntryJson {
    signature: String,
    re: f64,
    im: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<f64>,
}

impl MatrixElementTable {
    pub fn zero(order: Order) -> Self {
        MatrixElementTable {
            order,
            entries: vec![Complex64::new(0.0, 0.0); order.signature_count()],
            stderr: None,
            averaging: PhaseAverage::None,
        }
    }

    pub fn get(&self, sig: &Signature) -> Complex64 {
        self.entries[sig.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Signature, Complex64)> + '_ {
        Signature::all(self.order).into_iter().zip(self.entries.iter().copied())
    }

    pub fn scale(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of conjugate symmetry, diagonal realness and
    /// creator/annihilator exchange symmetry, relative to the table scale.
    pub fn symmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (sig, v) in self.iter() {
            let adj = sig.adjoint();
            worst = worst.max((v - self.get(&adj).conj()).norm());
            if adj == sig {
                worst = worst.max(v.im.abs());
            }
            if self.order == Order::Second {
                let mut c = sig.clone();
                c.creators.swap(0, 1);
                let mut a = sig.clone();
                a.annihilators.swap(0, 1);
                worst = worst.max((v - self.get(&c)).norm()).max((v - self.get(&a)).norm());
            }
        }
        worst / self.scale().max(1.0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<EntryJson> = self
            .iter()
            .enumerate()
            .map(|(i, (sig, v))| EntryJson {
                signature: sig.label(),
                re: v.re,
                im: v.im,
                stderr: self.stderr.as_ref().map(|s| s[i]),
            })
            .collect();
        serde_json::json!({
            "order": self.order.value(),
            "averaging": self.averaging,
            "entries": entries,
        })
    }
}

/// All entries of one pure state, reusing the lowered kets.
///
/// Each entry applies exactly the operations of `expect_normal_ordered`.
pub(crate) fn evaluate_state(state: &TwoModeState, order: Order) -> Vec<Complex64> {
    match order {
        Order::First => {
            let l = [lower(state, &[Mode::K]), lower(state, &[Mode::KPrime])];
            Signature::all(order)
                .iter()
                .map(|s| dot(l[mode_index(s.creators[0])].amplitudes(), l[mode_index(s.annihilators[0])].amplitudes()))
                .collect()
        }
        Order::Second => {
            let single = [lower(state, &[Mode::K]), lower(state, &[Mode::KPrime])];
            let pair: Vec<TwoModeState> = [Mode::K, Mode::KPrime]
                .iter()
                .flat_map(|&x| {
                    let first = &single[mode_index(x)];
                    [Mode::K, Mode::KPrime].map(|y| lower(first, &[y]))
                })
                .collect();
            let at = |x: Mode, y: Mode| &pair[2 * mode_index(x) + mode_index(y)];
            Signature::all(order)
                .iter()
                .map(|s| {
                    let bra = at(s.creators[0], s.creators[1]);
                    let ket = at(s.annihilators[1], s.annihilators[0]);
                    dot(bra.amplitudes(), ket.amplitudes())
                })
                .collect()
        }
    }
}

/// Random-phase structure of a phase-parameterized state.
enum PhaseLayout {
    /// Ket `(n, m)` picks up `e^{imφ}`.
    Shared,
    /// Every basis ket has its own phase.
    PerKet,
    /// Ket `(j, N−j)` with `j < N` has its own phase.
    PerShellTerm(usize),
}

fn layout(spec: &StateSpec) -> PhaseLayout {
    match spec.kind {
        StateKind::PhaseDiffused | StateKind::PhaseDiffusedSubstate => PhaseLayout::Shared,
        StateKind::Chaotic => PhaseLayout::PerKet,
        _ => PhaseLayout::PerShellTerm(spec.n_photons),
    }
}

fn rotated_shared(base: &TwoModeState, phi: f64) -> TwoModeState {
    let basis = base.basis();
    let turns: Vec<Complex64> = (0..basis.side()).map(|m| Complex64::from_polar(1.0, m as f64 * phi)).collect();
    let amps = base.amplitudes().iter().enumerate().map(|(i, a)| a * turns[i % basis.side()]).collect();
    TwoModeState::new(basis, amps, base.truncation_loss()).expect("same basis")
}

fn rotated_random<R: Rng>(base: &TwoModeState, layout: &PhaseLayout, rng: &mut R) -> TwoModeState {
    let basis = base.basis();
    let amps = match layout {
        PhaseLayout::Shared => return rotated_shared(base, rng.random::<f64>() * TAU),
        PhaseLayout::PerKet => {
            base.amplitudes().iter().map(|a| a * Complex64::from_polar(1.0, rng.random::<f64>() * TAU)).collect()
        }
        PhaseLayout::PerShellTerm(n) => {
            let mut amps = base.amplitudes().to_vec();
            for j in 0..*n {
                amps[basis.index(j, n - j)] *= Complex64::from_polar(1.0, rng.random::<f64>() * TAU);
            }
            amps
        }
    };
    TwoModeState::new(basis, amps, base.truncation_loss()).expect("same basis")
}

fn base_state(spec: &StateSpec) -> Result<TwoModeState> {
    let spec = spec.clone().with_phases(Vec::new());
    build_state(&spec, auto_basis(&spec)?)
}

/// Welford accumulation of complex samples.
struct Moments {
    n: usize,
    mean: Vec<Complex64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments { n: 0, mean: vec![Complex64::new(0.0, 0.0); len], m2: vec![0.0; len] }
    }

    fn push(&mut self, x: &[Complex64]) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for ((mu, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *mu;
            *mu += d * inv;
            *m2 += (d * (v - *mu).conj()).re;
        }
    }

    fn stderr(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2.iter().map(|m| (m.max(0.0) / (n - 1.0) / n).sqrt()).collect()
    }
}

fn monte_carlo_range(
    spec: &StateSpec,
    order: Order,
    seed: u64,
    range: std::ops::Range<usize>,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let base = base_state(spec)?;
    let layout = layout(spec);
    let mut acc = Moments::new(order.signature_count());
    for i in range {
        let mut r = rng::stream(seed, i as u64);
        let state = rotated_random(&base, &layout, &mut r);
        acc.push(&evaluate_state(&state, order));
    }
    let stderr = acc.stderr();
    Ok((acc.mean, stderr))
}

/// Phase-averaged matrix elements of `spec`.
pub fn matrix_elements(spec: &StateSpec, order: Order, avg: &PhaseAverage) -> Result<MatrixElementTable> {
    spec.validate()?;
    let basis = auto_basis(spec)?;
    let (entries, stderr) = if !spec.kind.is_phase_parameterized() {
        (evaluate_state(&build_state(spec, basis)?, order), None)
    } else {
        match avg {
            PhaseAverage::None => return Err(Error::MissingAveraging(spec.label())),
            PhaseAverage::Pairing => {
                let mut e = evaluate_state(&base_state(spec)?, order);
                for (sig, v) in Signature::all(order).iter().zip(e.iter_mut()) {
                    if sig.photon_shift() != 0 {
                        *v = Complex64::new(0.0, 0.0);
                    }
                }
                (e, None)
            }
            PhaseAverage::PeriodicQuadrature { nodes } => {
                if !spec.kind.has_single_phase() {
                    return Err(Error::InvalidAveraging(format!(
                        "{} has one phase per Fock term; quadrature needs a single shared phase",
                        spec.label()
                    )));
                }
                let need = 2 * spec.max_total_photons(basis) + 2;
                if *nodes < need {
                    return Err(Error::InvalidAveraging(format!("{nodes} quadrature nodes, need ≥ {need}")));
                }
                let base = base_state(spec)?;
                let mut acc = vec![Complex64::new(0.0, 0.0); order.signature_count()];
                for j in 0..*nodes {
                    let state = rotated_shared(&base, TAU * j as f64 / *nodes as f64);
                    for (a, v) in acc.iter_mut().zip(evaluate_state(&state, order)) {
                        *a += v;
                    }
                }
                let w = 1.0 / *nodes as f64;
                (acc.into_iter().map(|a| a * w).collect(), None)
            }
            PhaseAverage::MonteCarlo { samples, seed } => {
                if *samples == 0 {
                    return Err(Error::InvalidAveraging("zero Monte Carlo samples".into()));
                }
                let (mean, se) = monte_carlo_range(spec, order, *seed, 0..*samples)?;
                (mean, Some(se))
            }
        }
    };
    let table = MatrixElementTable { order, entries, stderr, averaging: avg.clone() };
    let residual = table.symmetry_residual();
    if residual > SYMMETRY_TOLERANCE {
        return Err(Error::Inconsistent(format!("symmetry residual {residual:e}")));
    }
    Ok(table)
}

/// Splits a Monte Carlo average into `batches` tables over consecutive
/// sample ranges; their mean reproduces the single-run table.
pub fn monte_carlo_batches(
    spec: &StateSpec,
    order: Order,
    samples: usize,
    seed: u64,
    batches: usize,
) -> Result<Vec<MatrixElementTable>> {
    spec.validate()?;
    if batches == 0 || samples < batches {
        return Err(Error::InvalidAveraging(format!("{samples} samples in {batches} batches")));
    }
    (0..batches)
        .map(|b| {
            let range = b * samples / batches..(b + 1) * samples / batches;
            let (entries, se) = monte_carlo_range(spec, order, seed, range)?;
            Ok(MatrixElementTable {
                order,
                entries,
                stderr: Some(se),
                averaging: PhaseAverage::MonteCarlo { samples, seed },
            })
        })
        .collect()
}

fn require_order(table: &MatrixElementTable, order: Order) -> Result<()> {
    if table.order != order {
        return Err(Error::InvalidInput(format!("expected an order-{} table", order.value())));
    }
    Ok(())
}

fn real_part(z: Complex64, scale: f64) -> Result<f64> {
    if z.im.abs() > IMAG_TOLERANCE * scale.max(1.0) {
        return Err(Error::Inconsistent(format!("imaginary residue {:e}", z.im)));
    }
    Ok(z.re)
}

fn phase(sig: &Signature, u1: f64, u2: f64) -> Complex64 {
    let (f1, f2) = sig.frequencies();
    Complex64::from_polar(1.0, f1 as f64 * u1 + f2 as f64 * u2)
}

/// Point-source first-order detection probability.
pub fn p1(table: &MatrixElementTable, u1: f64, u2: f64) -> Result<f64> {
    require_order(table, Order::First)?;
    let z: Complex64 = table.iter().map(|(s, v)| v * phase(&s, u1, u2)).sum::<Complex64>() * 0.5;
    real_part(z, table.scale())
}

/// Deliberate assembly faults used to prove that the checks can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssemblyFault {
    /// Exchanges the matrix elements of the B and C groups.
    SwapBC,
}

pub(crate) fn faulty_entries(table: &MatrixElementTable, fault: Option<AssemblyFault>) -> Vec<Complex64> {
    let mut e = table.entries.clone();
    if fault == Some(AssemblyFault::SwapBC) && table.order == Order::Second {
        let sigs = Signature::all(Order::Second);
        let of = |g: TermGroup| sigs.iter().filter(|s| s.group() == Some(g)).map(Signature::index).collect::<Vec<_>>();
        for (b, c) in of(TermGroup::B).into_iter().zip(of(TermGroup::C)) {
            e.swap(b, c);
        }
    }
    e
}

/// Point-source second-order coincidence probability.
pub fn p2(table: &MatrixElementTable, u1: f64, u2: f64) -> Result<f64> {
    p2_with_fault(table, u1, u2, None)
}

pub fn p2_with_fault(table: &MatrixElementTable, u1: f64, u2: f64, fault: Option<AssemblyFault>) -> Result<f64> {
    require_order(table, Order::Second)?;
    let entries = faulty_entries(table, fault);
    let z: Complex64 =
        Signature::all(Order::Second).iter().zip(&entries).map(|(s, v)| v * phase(s, u1, u2)).sum::<Complex64>() * 0.25;
    real_part(z, table.scale())
}

/// `⟨A⟩, ⟨B⟩, ⟨C⟩, ⟨D⟩` at one detector pair; `p2 = (A+B+C+D)/4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TermValues {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

pub fn term_values(table: &MatrixElementTable, u1: f64, u2: f64) -> Result<TermValues> {
    require_order(table, Order::Second)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut t = TermValues { a: zero, b: zero, c: zero, d: zero };
    for (s, v) in table.iter() {
        let x = v * phase(&s, u1, u2);
        match s.group().expect("second order") {
            TermGroup::A => t.a += x,
            TermGroup::B => t.b += x,
            TermGroup::C => t.c += x,
            TermGroup::D => t.d += x,
        }
    }
    Ok(t)
}

/// Fourier content of a first-order table: `p1 = Σ coeff·e^{i(f₁u₁+f₂u₂)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FirstOrderComponents {
    /// Coefficient of `e^{i(u₁−u₂)}`.
    pub difference: Complex64,
    /// Coefficient of `e^{−i(u₁−u₂)}`.
    pub difference_conj: Complex64,
    /// Coefficient of `e^{i(u₁+u₂)}`.
    pub sum: Complex64,
    /// Coefficient of `e^{−i(u₁+u₂)}`.
    pub sum_conj: Complex64,
}

pub fn first_order_components(table: &MatrixElementTable) -> Result<FirstOrderComponents> {
    require_order(table, Order::First)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut c = FirstOrderComponents { difference: zero, difference_conj: zero, sum: zero, sum_conj: zero };
    for (s, v) in table.iter() {
        let slot = match s.frequencies() {
            (1, -1) => &mut c.difference,
            (-1, 1) => &mut c.difference_conj,
            (1, 1) => &mut c.sum,
            _ => &mut c.sum_conj,
        };
        *slot += v * 0.5;
    }
    Ok(c)
}

/// Fourier content of a second-order table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SecondOrderComponents {
    /// Phase-free part.
    pub constant: f64,
    /// Coefficient of `e^{2i(u₁−u₂)}`; its conjugate multiplies `e^{−2i(u₁−u₂)}`.
    pub difference: Complex64,
    /// Coefficient of `e^{2i(u₁+u₂)}`; its conjugate multiplies `e^{−2i(u₁+u₂)}`.
    pub sum: Complex64,
    /// Largest coefficient among the single-frequency harmonics.
    pub single_frequency: f64,
}

impl SecondOrderComponents {
    /// Flat part left once both fringe systems are written as `cos²`.
    pub fn background(&self) -> f64 {
        self.constant - 2.0 * self.difference.norm() - 2.0 * self.sum.norm()
    }
}

pub fn second_order_components(table: &MatrixElementTable) -> Result<SecondOrderComponents> {
    require_order(table, Order::Second)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut bins = std::collections::BTreeMap::<(i32, i32), Complex64>::new();
    for (s, v) in table.iter() {
        *bins.entry(s.frequencies()).or_insert(zero) += v * 0.25;
    }
    let get = |k: (i32, i32)| bins.get(&k).copied().unwrap_or(zero);
    let single = bins.iter().filter(|((a, b), _)| (*a == 0) != (*b == 0)).map(|(_, v)| v.norm()).fold(0.0, f64::max);
    Ok(SecondOrderComponents {
        constant: real_part(get((0, 0)), table.scale())?,
        difference: get((2, -2)),
        sum: get((2, 2)),
        single_frequency: single,
    })
}

/// Outcome of testing `|⟨C+D⟩| = 2√(⟨A⟩⟨B⟩)` over a grid of detector pairs.
///
/// The identity is tested squared, `(C+D)² = 4AB`, because the square root
/// amplifies rounding near the zeros of `⟨A⟩` or `⟨B⟩`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    /// `max |(C+D)² − 4AB| / max 4AB`.
    pub residual: f64,
    /// `max | |C+D| − 2√(AB) |`, unscaled and ill-conditioned near zeros.
    pub sqrt_form_residual: f64,
    pub max_cd: f64,
    pub max_two_sqrt_ab: f64,
    pub points: usize,
}

impl IdentityReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

/// Evaluates the interference identity on a 41×41 grid over `u ∈ [−π, π]²`.
pub fn interference_identity_check(spec: &StateSpec) -> Result<IdentityReport> {
    let table = matrix_elements(spec, Order::Second, &PhaseAverage::default_for(spec)?)?;
    let n = 41;
    let grid = crate::numeric::linspace(-std::f64::consts::PI, std::f64::consts::PI, n);
    let mut rep =
        IdentityReport { residual: 0.0, sqrt_form_residual: 0.0, max_cd: 0.0, max_two_sqrt_ab: 0.0, points: n * n };
    let mut worst_sq: f64 = 0.0;
    for &u1 in &grid {
        for &u2 in &grid {
            let t = term_values(&table, u1, u2)?;
            let cd = (t.c + t.d).norm();
            let four_ab = 4.0 * t.a.re.max(0.0) * t.b.re.max(0.0);
            worst_sq = worst_sq.max((cd * cd - four_ab).abs());
            rep.sqrt_form_residual = rep.sqrt_form_residual.max((cd - four_ab.sqrt()).abs());
            rep.max_cd = rep.max_cd.max(cd);
            rep.max_two_sqrt_ab = rep.max_two_sqrt_ab.max(four_ab.sqrt());
        }
    }
    let norm = rep.max_two_sqrt_ab.powi(2).max(rep.max_cd.powi(2));
    rep.residual = if norm > 0.0 { worst_sq / norm } else { 0.0 };
    Ok(rep)
}

/// Basis actually used by [`matrix_elements`] for `spec`.
pub fn engine_basis(spec: &StateSpec) -> Result<FockBasis> {
    auto_basis(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::expect_normal_ordered;
    use crate::states::build_state;
    use proptest::prelude::*;

    fn table(spec: StateSpec, order: Order) -> MatrixElementTable {
        let avg = PhaseAverage::default_for(&spec).unwrap();
        matrix_elements(&spec, order, &avg).unwrap()
    }

    #[test]
    fn signature_enumeration() {
        let all = Signature::all(Order::Second);
        assert_eq!(all.len(), 16);
        for (i, s) in all.iter().enumerate() {
            assert_eq!(s.index(), i);
            assert_eq!(Signature::parse(&s.label()).unwrap(), *s);
        }
        let count = |g| all.iter().filter(|s| s.group() == Some(g)).count();
        assert_eq!((count(TermGroup::A), count(TermGroup::B), count(TermGroup::C), count(TermGroup::D)), (4, 4, 4, 4));
        assert_eq!(Signature::all(Order::First).len(), 4);
    }

    #[test]
    fn group_phases() {
        for s in Signature::all(Order::Second) {
            let (f1, f2) = s.frequencies();
            match s.group().unwrap() {
                TermGroup::A => assert!(f1 == -f2),
                TermGroup::B => assert!(f1 == f2),
                TermGroup::C => assert!(f1 != 0 && f2 == 0),
                TermGroup::D => assert!(f1 == 0 && f2 != 0),
            }
        }
    }

    #[test]
    fn cached_route_matches_direct_expectations() {
        let spec = StateSpec::noon(3).with_phases(vec![0.4]);
        let s = build_state(&spec, FockBasis::new(3).unwrap()).unwrap();
        for order in [Order::First, Order::Second] {
            let fast = evaluate_state(&s, order);
            for sig in Signature::all(order) {
                assert_eq!(fast[sig.index()], expect_normal_ordered(&s, &sig.ops()).unwrap());
            }
        }
    }

    #[test]
    fn coherent_first_order_entries() {
        let t = table(StateSpec::coherent(1.0), Order::First);
        for v in &t.entries {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert!((p1(&t, 0.0, 0.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn chaotic_first_order_entries() {
        let t = table(StateSpec::chaotic(1.0), Order::First);
        for (s, v) in t.iter() {
            let want = if s.creators == s.annihilators { 1.0 } else { 0.0 };
            assert!((v.re - want).abs() < 1e-9 && v.im.abs() < 1e-12);
        }
        for u in [-1.0, 0.2, 2.5] {
            assert!((p1(&t, u, u).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn diffused_cross_term_averages_out() {
        let t = table(StateSpec::phase_diffused(2.0), Order::Second);
        let sig = Signature::parse("k,k|kp,kp").unwrap();
        assert!(t.get(&sig).norm() < 1e-12);
    }

    #[test]
    fn second_order_point_values() {
        let t = table(StateSpec::coherent(1.0), Order::Second);
        assert!((p2(&t, 0.0, 0.0).unwrap() - 4.0).abs() < 1e-9);
        let t = table(StateSpec::number(2), Order::Second);
        for u in [-1.0, 0.3] {
            assert!((p2(&t, u, u).unwrap() - 1.0).abs() < 1e-12);
        }
        let t = table(StateSpec::noon(2), Order::Second);
        let q = std::f64::consts::FRAC_PI_4;
        assert!(p2(&t, q, q).unwrap().abs() < 1e-12);
        assert!((p2(&t, q, -q).unwrap() - 1.0).abs() < 1e-12);
        let vac = table(StateSpec::coherent(0.0), Order::Second);
        assert_eq!(p2(&vac, 0.3, 0.1).unwrap(), 0.0);
        assert_eq!(p1(&MatrixElementTable::zero(Order::First), 0.1, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn missing_or_invalid_averaging() {
        let dif = StateSpec::phase_diffused(1.0);
        assert!(matches!(matrix_elements(&dif, Order::First, &PhaseAverage::None), Err(Error::MissingAveraging(_))));
        let few = PhaseAverage::PeriodicQuadrature { nodes: 3 };
        assert!(matches!(matrix_elements(&dif, Order::First, &few), Err(Error::InvalidAveraging(_))));
        let quad = PhaseAverage::PeriodicQuadrature { nodes: 99 };
        assert!(matrix_elements(&StateSpec::chaotic(1.0), Order::First, &quad).is_err());
        assert!(p2(&MatrixElementTable::zero(Order::First), 0.0, 0.0).is_err());
    }

    #[test]
    fn inconsistent_table_is_reported() {
        let mut t = MatrixElementTable::zero(Order::First);
        t.entries[1] = Complex64::new(0.0, 1.0);
        assert!(p1(&t, 0.3, 0.0).is_err());
        assert!(t.symmetry_residual() > 0.5);
    }

    #[test]
    fn interference_identity() {
        let r = interference_identity_check(&StateSpec::coherent(2.0)).unwrap();
        assert!(r.holds(1e-9), "{r:?}");
        let r = interference_identity_check(&StateSpec::coherent_substate(3)).unwrap();
        assert!(r.holds(1e-9), "{r:?}");
        let r = interference_identity_check(&StateSpec::chaotic(1.0)).unwrap();
        assert!(r.max_cd < 1e-12);
        assert!(r.max_two_sqrt_ab > 1.0);
        assert!(!r.holds(1e-9));
    }

    #[test]
    fn swapped_groups_change_the_pattern() {
        let t = table(StateSpec::chaotic(1.0), Order::Second);
        let good = p2(&t, 0.7, 0.2).unwrap();
        let bad = p2_with_fault(&t, 0.7, 0.2, Some(AssemblyFault::SwapBC)).unwrap();
        assert!((good - bad).abs() > 0.1);
    }

    #[test]
    fn monte_carlo_is_reproducible_and_batchable() {
        let spec = StateSpec::chaotic_substate(3);
        let avg = PhaseAverage::MonteCarlo { samples: 200, seed: 9 };
        let a = matrix_elements(&spec, Order::Second, &avg).unwrap();
        let b = matrix_elements(&spec, Order::Second, &avg).unwrap();
        assert_eq!(a, b);
        let batches = monte_carlo_batches(&spec, Order::Second, 200, 9, 4).unwrap();
        for i in 0..16 {
            let m: Complex64 = batches.iter().map(|t| t.entries[i]).sum::<Complex64>() / 4.0;
            assert!((m - a.entries[i]).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn quadrature_is_exact_above_the_bound(n in 1usize..7, extra in 0usize..20, phi in 0.0f64..1.0) {
            let spec = StateSpec::phase_diffused_substate(n).with_phases(vec![phi]);
            let base = PhaseAverage::PeriodicQuadrature { nodes: 2 * n + 2 };
            let more = PhaseAverage::PeriodicQuadrature { nodes: 2 * n + 2 + extra };
            for order in [Order::First, Order::Second] {
                let x = matrix_elements(&spec, order, &base).unwrap();
                let y = matrix_elements(&spec, order, &more).unwrap();
                for (a, b) in x.entries.iter().zip(&y.entries) {
                    prop_assert!((a - b).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn tables_are_self_consistent(kind_ix in 0usize..8, mean in 0.0f64..3.0, n in 2usize..6) {
            let kind = StateKind::ALL[kind_ix];
            let n = if kind == StateKind::NumberState { 2 * (n / 2) } else { n };
            let spec = StateSpec::of_kind(kind, mean, n);
            let avg = PhaseAverage::default_for(&spec).unwrap();
            for order in [Order::First, Order::Second] {
                let t = matrix_elements(&spec, order, &avg).unwrap();
                prop_assert!(t.symmetry_residual() < 1e-12);
            }
        }
    }
}
