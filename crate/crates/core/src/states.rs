//! Constructors for the collective, substate, NOON and number states of
//! two-slit light, plus their photon-number coefficient distributions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use std::fmt;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, TwoModeState, MAX_CUTOFF};
use crate::numeric::NeumaierSum;

pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    CollectiveCoherent,
    CoherentSubstate,
    PhaseDiffused,
    PhaseDiffusedSubstate,
    Chaotic,
    ChaoticSubstate,
    Noon,
    NumberState,
}

impl StateKind {
    pub const ALL: [StateKind; 8] = [
        StateKind::CollectiveCoherent,
        StateKind::CoherentSubstate,
        StateKind::PhaseDiffused,
        StateKind::PhaseDiffusedSubstate,
        StateKind::Chaotic,
        StateKind::ChaoticSubstate,
        StateKind::Noon,
        StateKind::NumberState,
    ];

    /// Specified by ⟨n⟩ rather than a photon number.
    pub fn is_collective(self) -> bool {
        matches!(self, StateKind::CollectiveCoherent | StateKind::PhaseDiffused | StateKind::Chaotic)
    }

    /// Carries random phases that must be averaged.
    pub fn is_phase_parameterized(self) -> bool {
        matches!(
            self,
            StateKind::PhaseDiffused
                | StateKind::PhaseDiffusedSubstate
                | StateKind::Chaotic
                | StateKind::ChaoticSubstate
        )
    }

    /// One shared phase rather than one per Fock term.
    pub fn has_single_phase(self) -> bool {
        matches!(self, StateKind::PhaseDiffused | StateKind::PhaseDiffusedSubstate)
    }

    pub fn is_coherent_family(self) -> bool {
        matches!(self, StateKind::CollectiveCoherent | StateKind::CoherentSubstate)
    }
}

/// Full description of a state; collective kinds read `mean_n`, the others `n_photons`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    pub kind: StateKind,
    pub mean_n: f64,
    pub n_photons: usize,
    /// Literal phases. Chaotic: one per basis index (empty = all zero).
    /// ChaoticSubstate: `phases[m]` for `|m, N−m⟩`, `m < N`; `|N, 0⟩` has phase 0.
    /// Others: at most one shared phase.
    pub phases: Vec<f64>,
    pub epsilon: f64,
}

impl StateSpec {
    fn collective(kind: StateKind, mean_n: f64) -> Self {
        StateSpec { kind, mean_n, n_photons: 0, phases: Vec::new(), epsilon: DEFAULT_EPSILON }
    }

    fn counted(kind: StateKind, n: usize) -> Self {
        StateSpec { kind, mean_n: 0.0, n_photons: n, phases: Vec::new(), epsilon: DEFAULT_EPSILON }
    }

    pub fn coherent(mean_n: f64) -> Self {
        Self::collective(StateKind::CollectiveCoherent, mean_n)
    }
    pub fn phase_diffused(mean_n: f64) -> Self {
        Self::collective(StateKind::PhaseDiffused, mean_n)
    }
    pub fn chaotic(mean_n: f64) -> Self {
        Self::collective(StateKind::Chaotic, mean_n)
    }
    pub fn coherent_substate(n: usize) -> Self {
        Self::counted(StateKind::CoherentSubstate, n)
    }
    pub fn phase_diffused_substate(n: usize) -> Self {
        Self::counted(StateKind::PhaseDiffusedSubstate, n)
    }
    pub fn chaotic_substate(n: usize) -> Self {
        Self::counted(StateKind::ChaoticSubstate, n)
    }
    pub fn noon(n: usize) -> Self {
        Self::counted(StateKind::Noon, n)
    }
    pub fn number(n: usize) -> Self {
        Self::counted(StateKind::NumberState, n)
    }

    /// Builds a spec of the same family: collective kinds take `mean_n`, others `n`.
    pub fn of_kind(kind: StateKind, mean_n: f64, n: usize) -> Self {
        if kind.is_collective() {
            Self::collective(kind, mean_n)
        } else {
            Self::counted(kind, n)
        }
    }

    pub fn with_phases(mut self, phases: Vec<f64>) -> Self {
        self.phases = phases;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    /// Parses short names such as `coherent`, `coh2`, `dif`, `difN`, `cha3`,
    /// `ent2`, `noon`, `num4`. Trailing digits set `N`; otherwise `n` is used.
    pub fn parse(name: &str, mean_n: f64, n: Option<usize>) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let stem = lower.trim_end_matches(|c: char| c.is_ascii_digit());
        let digits = &lower[stem.len()..];
        let count = if digits.is_empty() {
            n
        } else {
            Some(digits.parse::<usize>().map_err(|e| Error::InvalidState(e.to_string()))?)
        };
        let need = |k: StateKind| -> Result<StateSpec> {
            let n = count.ok_or_else(|| Error::InvalidState(format!("state '{name}' needs a photon number")))?;
            Ok(Self::counted(k, n))
        };
        let counted = !digits.is_empty();
        let spec = match stem {
            "coherent" | "coh" if !counted => Self::coherent(mean_n),
            "coherent" | "coh" | "cohn" => need(StateKind::CoherentSubstate)?,
            "dif" | "diffused" if !counted => Self::phase_diffused(mean_n),
            "dif" | "diffused" | "difn" => need(StateKind::PhaseDiffusedSubstate)?,
            "cha" | "chaotic" | "thermal" if !counted => Self::chaotic(mean_n),
            "cha" | "chaotic" | "chan" => need(StateKind::ChaoticSubstate)?,
            "ent" | "noon" => need(StateKind::Noon)?,
            "num" | "number" => need(StateKind::NumberState)?,
            _ => return Err(Error::InvalidState(format!("unknown state '{name}'"))),
        };
        Ok(spec)
    }

    /// Short name in the style accepted by [`StateSpec::parse`].
    pub fn label(&self) -> String {
        let n = self.n_photons;
        match self.kind {
            StateKind::CollectiveCoherent => "coherent".into(),
            StateKind::PhaseDiffused => "dif".into(),
            StateKind::Chaotic => "cha".into(),
            StateKind::CoherentSubstate => format!("coh{n}"),
            StateKind::PhaseDiffusedSubstate => format!("dif{n}"),
            StateKind::ChaoticSubstate => format!("cha{n}"),
            StateKind::Noon => format!("ent{n}"),
            StateKind::NumberState => format!("num{n}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidState(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if self.kind.is_collective() && !(self.mean_n.is_finite() && self.mean_n >= 0.0) {
            return Err(Error::InvalidState(format!("mean_n {} must be finite and ≥ 0", self.mean_n)));
        }
        if self.phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidState("non-finite phase".into()));
        }
        let n = self.n_photons;
        match self.kind {
            StateKind::NumberState if n < 2 || n % 2 == 1 => {
                Err(Error::InvalidState(format!("number state needs even N ≥ 2, got {n}")))
            }
            StateKind::Noon if n == 0 => Err(Error::InvalidState("NOON state needs N ≥ 1".into())),
            StateKind::CoherentSubstate | StateKind::NumberState if !self.phases.is_empty() => {
                Err(Error::InvalidState(format!("{} takes no phases", self.label())))
            }
            StateKind::CollectiveCoherent
            | StateKind::PhaseDiffused
            | StateKind::PhaseDiffusedSubstate
            | StateKind::Noon
                if self.phases.len() > 1 =>
            {
                Err(Error::InvalidState(format!("{} takes one phase", self.label())))
            }
            StateKind::ChaoticSubstate if !self.phases.is_empty() && self.phases.len() != n => {
                Err(Error::InvalidState(format!("{} takes {n} phases, got {}", self.label(), self.phases.len())))
            }
            _ => Ok(()),
        }
    }

    fn phase(&self) -> f64 {
        self.phases.first().copied().unwrap_or(0.0)
    }

    /// Largest total photon number the state occupies on `basis`.
    pub fn max_total_photons(&self, basis: FockBasis) -> usize {
        if self.kind.is_collective() {
            2 * basis.n_max()
        } else {
            self.n_photons
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind.is_collective() {
            write!(f, "{}(⟨n⟩={})", self.label(), self.mean_n)
        } else {
            f.write_str(&self.label())
        }
    }
}

/// Single-mode occupation law of a collective state.
fn single_mode_weight(kind: StateKind, mean: f64, n: usize) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    match kind {
        StateKind::Chaotic => (nf * mean.ln() - (nf + 1.0) * mean.ln_1p()).exp(),
        _ => (nf * mean.ln() - mean - ln_factorial(n as u64)).exp(),
    }
}

/// Σ_{n > n_max} of the single-mode law.
fn single_mode_tail(kind: StateKind, mean: f64, n_max: usize) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    match kind {
        StateKind::Chaotic => ((n_max + 1) as f64 * (mean / (1.0 + mean)).ln()).exp(),
        _ => poisson_tail(mean, n_max),
    }
}

fn poisson_tail(mean: f64, k: usize) -> f64 {
    let mut sum = NeumaierSum::default();
    let mut n = k + 1;
    loop {
        let w = (n as f64 * mean.ln() - mean - ln_factorial(n as u64)).exp();
        sum.add(w);
        if (n as f64) > mean && w <= sum.value() * 1e-18 {
            break;
        }
        if w == 0.0 && (n as f64) > mean {
            break;
        }
        n += 1;
    }
    sum.value()
}

/// Smallest cutoff whose per-mode tails lose less than `epsilon` of the norm.
pub fn auto_basis(spec: &StateSpec) -> Result<FockBasis> {
    spec.validate()?;
    let n_max = match spec.kind {
        StateKind::NumberState => spec.n_photons / 2,
        k if k.is_collective() => {
            let mut n = 0;
            while single_mode_tail(k, spec.mean_n, n) >= spec.epsilon / 4.0 {
                n += 1;
                if n > MAX_CUTOFF {
                    return Err(Error::CutoffTooLarge { requested: n, limit: MAX_CUTOFF });
                }
            }
            n
        }
        _ => spec.n_photons,
    };
    FockBasis::new(n_max)
}

/// Builds the state with phases substituted literally.
pub fn build_state(spec: &StateSpec, basis: FockBasis) -> Result<TwoModeState> {
    spec.validate()?;
    let n_max = basis.n_max();
    let mut amps = vec![Complex64::new(0.0, 0.0); basis.dimension()];
    let too_small = |reason: String| Error::CutoffTooSmall { n_max, reason };
    if !spec.kind.is_collective() {
        let need = if spec.kind == StateKind::NumberState { spec.n_photons / 2 } else { spec.n_photons };
        if need > n_max {
            return Err(too_small(format!("{} needs n_max ≥ {need}", spec.label())));
        }
    }
    let n = spec.n_photons;
    let mut loss = 0.0;
    match spec.kind {
        StateKind::CollectiveCoherent | StateKind::PhaseDiffused | StateKind::Chaotic => {
            let tail = single_mode_tail(spec.kind, spec.mean_n, n_max);
            loss = 2.0 * tail - tail * tail;
            if loss >= spec.epsilon {
                return Err(too_small(format!("truncation loss {loss:e} ≥ ε = {:e}", spec.epsilon)));
            }
            if spec.kind == StateKind::Chaotic && !spec.phases.is_empty() && spec.phases.len() != amps.len() {
                return Err(Error::InvalidState(format!(
                    "chaotic state takes one phase per basis ket ({}), got {}",
                    amps.len(),
                    spec.phases.len()
                )));
            }
            let mags: Vec<f64> = (0..=n_max).map(|j| single_mode_weight(spec.kind, spec.mean_n, j).sqrt()).collect();
            let phi = spec.phase();
            for a in 0..=n_max {
                for b in 0..=n_max {
                    let idx = basis.index(a, b);
                    let theta = match spec.kind {
                        StateKind::CollectiveCoherent => (a + b) as f64 * phi,
                        StateKind::PhaseDiffused => b as f64 * phi,
                        _ => spec.phases.get(idx).copied().unwrap_or(0.0),
                    };
                    amps[idx] = Complex64::from_polar(mags[a] * mags[b], theta);
                }
            }
        }
        StateKind::CoherentSubstate | StateKind::PhaseDiffusedSubstate => {
            let phi = spec.phase();
            for m in 0..=n {
                let ln_mag = 0.5
                    * (ln_factorial(n as u64)
                        - ln_factorial(m as u64)
                        - ln_factorial((n - m) as u64)
                        - n as f64 * std::f64::consts::LN_2);
                let theta = if spec.kind == StateKind::PhaseDiffusedSubstate { (n - m) as f64 * phi } else { 0.0 };
                amps[basis.index(m, n - m)] = Complex64::from_polar(ln_mag.exp(), theta);
            }
        }
        StateKind::ChaoticSubstate => {
            let mag = 1.0 / ((n + 1) as f64).sqrt();
            for m in 0..=n {
                let theta = if m == n { 0.0 } else { spec.phases.get(m).copied().unwrap_or(0.0) };
                amps[basis.index(m, n - m)] = Complex64::from_polar(mag, theta);
            }
        }
        StateKind::Noon => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            amps[basis.index(n, 0)] += Complex64::new(h, 0.0);
            amps[basis.index(0, n)] += Complex64::from_polar(h, spec.phase());
        }
        StateKind::NumberState => {
            amps[basis.index(n / 2, n / 2)] = Complex64::new(1.0, 0.0);
        }
    }
    TwoModeState::new(basis, amps, loss)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistributionKind {
    /// Substate weights of the coherent and phase-diffused states.
    Poisson,
    /// Substate weights of the chaotic state.
    BoseEinstein,
}

impl DistributionKind {
    pub fn label(self) -> &'static str {
        match self {
            DistributionKind::Poisson => "poisson",
            DistributionKind::BoseEinstein => "bose",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poisson" | "coherent" | "alpha" => Ok(DistributionKind::Poisson),
            "bose" | "bose-einstein" | "thermal" | "chaotic" | "beta" => Ok(DistributionKind::BoseEinstein),
            other => Err(Error::InvalidInput(format!("unknown distribution '{other}'"))),
        }
    }

    /// `|c_N|²` for total photon number `N`, evaluated in log space.
    pub fn weight(self, mean_n: f64, n: usize) -> f64 {
        if mean_n == 0.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        let nf = n as f64;
        match self {
            DistributionKind::Poisson => (nf * (2.0 * mean_n).ln() - 2.0 * mean_n - ln_factorial(n as u64)).exp(),
            DistributionKind::BoseEinstein => ((nf + 1.0).ln() + nf * mean_n.ln() - (nf + 2.0) * mean_n.ln_1p()).exp(),
        }
    }

    /// Mass beyond `n_total_max`.
    pub fn tail(self, mean_n: f64, n_total_max: usize) -> f64 {
        if mean_n == 0.0 {
            return 0.0;
        }
        match self {
            DistributionKind::Poisson => poisson_tail(2.0 * mean_n, n_total_max),
            DistributionKind::BoseEinstein => {
                let q = mean_n / (1.0 + mean_n);
                let m = n_total_max as f64;
                ((m + 1.0) * q.ln()).exp() * ((m + 2.0) - (m + 1.0) * q)
            }
        }
    }

    /// Matching substate kind for a collective family.
    pub fn substate_kind(self, diffused: bool) -> StateKind {
        match (self, diffused) {
            (DistributionKind::BoseEinstein, _) => StateKind::ChaoticSubstate,
            (DistributionKind::Poisson, false) => StateKind::CoherentSubstate,
            (DistributionKind::Poisson, true) => StateKind::PhaseDiffusedSubstate,
        }
    }

    /// Smallest `M` whose tail mass is below `tail`.
    pub fn cutoff_for_tail(self, mean_n: f64, tail: f64) -> usize {
        let mut m = 0;
        while self.tail(mean_n, m) >= tail {
            m += 1;
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientDistribution {
    pub kind: DistributionKind,
    pub mean_n: f64,
    /// `|c_N|²` for `N = 0..=n_total_max`.
    pub weights: Vec<f64>,
    pub tail: f64,
}

pub fn coefficient_distribution(kind: DistributionKind, mean_n: f64, n_total_max: usize) -> CoefficientDistribution {
    let weights = (0..=n_total_max).map(|n| kind.weight(mean_n, n)).collect();
    CoefficientDistribution { kind, mean_n, weights, tail: kind.tail(mean_n, n_total_max) }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumRuleReport {
    pub kind: DistributionKind,
    pub mean_n: f64,
    pub norm: f64,
    pub first_order_sum: f64,
    pub second_order_sum: f64,
    pub norm_residual: f64,
    pub first_order_residual: f64,
    pub second_order_residual: f64,
    pub terms: usize,
    pub epsilon: f64,
}

impl SumRuleReport {
    pub fn max_residual(&self) -> f64 {
        self.norm_residual.max(self.first_order_residual).max(self.second_order_residual)
    }

    pub fn passed(&self) -> bool {
        self.max_residual() < self.epsilon
    }
}

/// Evaluates the normalization and the first- and second-order sum rules.
pub fn check_sum_rules(kind: DistributionKind, mean_n: f64, epsilon: f64) -> SumRuleReport {
    let pair = match kind {
        DistributionKind::Poisson => 4.0,
        DistributionKind::BoseEinstein => 6.0,
    };
    let (mut norm, mut first, mut second) = (NeumaierSum::default(), NeumaierSum::default(), NeumaierSum::default());
    let mut n = 0usize;
    loop {
        let w = kind.weight(mean_n, n);
        let nf = n as f64;
        norm.add(w);
        first.add(nf / 2.0 * w);
        second.add(nf * (nf - 1.0) / pair * w);
        let past_peak = nf > 2.0 * mean_n + 2.0;
        if past_peak && (w * (nf + 1.0) * (nf + 1.0) < 1e-30 || w == 0.0) {
            break;
        }
        n += 1;
    }
    let (norm, first, second) = (norm.value(), first.value(), second.value());
    SumRuleReport {
        kind,
        mean_n,
        norm,
        first_order_sum: first,
        second_order_sum: second,
        norm_residual: (norm - 1.0).abs(),
        first_order_residual: (first - mean_n).abs(),
        second_order_residual: (second - mean_n * mean_n).abs(),
        terms: n + 1,
        epsilon,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstateRow {
    pub kind: DistributionKind,
    pub mean_n: f64,
    pub n: usize,
    pub weight: f64,
}

/// Substate weights for each ⟨n⟩, `N = 0..=n_max_total`.
pub fn substate_table(kind: DistributionKind, mean_n_list: &[f64], n_max_total: usize) -> Vec<SubstateRow> {
    let mut rows = Vec::with_capacity(mean_n_list.len() * (n_max_total + 1));
    for &mean_n in mean_n_list {
        for n in 0..=n_max_total {
            rows.push(SubstateRow { kind, mean_n, n, weight: kind.weight(mean_n, n) });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{expect_normal_ordered, LadderOp, Mode};
    use proptest::prelude::*;

    fn built(spec: &StateSpec) -> TwoModeState {
        build_state(spec, auto_basis(spec).unwrap()).unwrap()
    }

    #[test]
    fn coherent_pair_amplitudes() {
        let s = built(&StateSpec::coherent_substate(2));
        assert!((s.amplitude(1, 1).re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((s.amplitude(2, 0).re - 0.5).abs() < 1e-15);
        assert!((s.amplitude(0, 2).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn number_and_noon_amplitudes() {
        let s = built(&StateSpec::number(2));
        assert_eq!(s.amplitude(1, 1), Complex64::new(1.0, 0.0));
        let s = built(&StateSpec::noon(2));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitude(2, 0).re - h).abs() < 1e-15);
        assert!((s.amplitude(0, 2).re - h).abs() < 1e-15);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(StateSpec::number(3).validate().is_err());
        assert!(StateSpec::number(0).validate().is_err());
        assert!(StateSpec::noon(0).validate().is_err());
        assert!(StateSpec::coherent(-1.0).validate().is_err());
        let small = FockBasis::new(2).unwrap();
        assert!(matches!(build_state(&StateSpec::coherent(4.0), small), Err(Error::CutoffTooSmall { .. })));
        assert!(build_state(&StateSpec::coherent_substate(3), small).is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!(StateSpec::parse("coherent", 1.0, None).unwrap().kind, StateKind::CollectiveCoherent);
        assert_eq!(StateSpec::parse("num2", 0.0, None).unwrap(), StateSpec::number(2));
        assert_eq!(StateSpec::parse("noon", 0.0, Some(4)).unwrap(), StateSpec::noon(4));
        assert_eq!(StateSpec::parse("cha", 2.0, None).unwrap(), StateSpec::chaotic(2.0));
        assert_eq!(StateSpec::parse("chaN", 0.0, Some(3)).unwrap(), StateSpec::chaotic_substate(3));
        assert_eq!(StateSpec::parse("coh2", 0.0, None).unwrap(), StateSpec::coherent_substate(2));
        assert_eq!(StateSpec::parse("ent2", 0.0, None).unwrap(), StateSpec::noon(2));
        assert!(StateSpec::parse("laser", 1.0, None).is_err());
        for spec in [StateSpec::coherent(1.0), StateSpec::phase_diffused_substate(3), StateSpec::noon(2)] {
            let back = StateSpec::parse(&spec.label(), spec.mean_n, None).unwrap();
            assert_eq!(back.kind, spec.kind);
        }
    }

    #[test]
    fn distribution_values() {
        let w = DistributionKind::Poisson.weight(1.0, 2);
        assert!((w - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((DistributionKind::BoseEinstein.weight(1.0, 0) - 0.25).abs() < 1e-15);
        assert_eq!(DistributionKind::Poisson.weight(0.0, 0), 1.0);
    }

    #[test]
    fn distribution_modes() {
        let p = coefficient_distribution(DistributionKind::Poisson, 1.0, 10);
        let top = p.weights.iter().cloned().fold(0.0, f64::max);
        let argmax: Vec<usize> = (0..=10).filter(|&n| (p.weights[n] - top).abs() < 1e-15).collect();
        assert_eq!(argmax, vec![1, 2]);
        let b = coefficient_distribution(DistributionKind::BoseEinstein, 1.0, 10);
        let top = b.weights.iter().cloned().fold(0.0, f64::max);
        let argmax: Vec<usize> = (0..=10).filter(|&n| (b.weights[n] - top).abs() < 1e-15).collect();
        assert_eq!(argmax, vec![0, 1]);
        assert!((top - 0.25).abs() < 1e-15);
    }

    #[test]
    fn tail_mass_at_sixty() {
        let p = coefficient_distribution(DistributionKind::Poisson, 9.0, 60);
        assert!(p.weights.iter().sum::<f64>() > 1.0 - 1e-9);
        assert!(p.tail < 1e-9);
        // The Bose-Einstein law at ⟨n⟩ = 9 decays as 0.9^N, leaving far more than 1e-9 past 60.
        let b = coefficient_distribution(DistributionKind::BoseEinstein, 9.0, 60);
        let total: f64 = b.weights.iter().sum::<f64>() + b.tail;
        assert!((total - 1.0).abs() < 1e-12);
        assert!(b.tail > 1e-2);
    }

    #[test]
    fn sum_rules() {
        let r = check_sum_rules(DistributionKind::Poisson, 2.0, 1e-10);
        assert!(r.passed(), "{r:?}");
        let r = check_sum_rules(DistributionKind::BoseEinstein, 4.0, 1e-9);
        assert!((r.second_order_sum - 16.0).abs() < 1e-9);
        for kind in [DistributionKind::Poisson, DistributionKind::BoseEinstein] {
            let r = check_sum_rules(kind, 0.0, 1e-10);
            assert_eq!((r.norm, r.first_order_sum, r.second_order_sum), (1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn substate_table_shape() {
        let rows = substate_table(DistributionKind::BoseEinstein, &[0.0], 0);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].weight, 1.0);
        let rows = substate_table(DistributionKind::Poisson, &[1.0, 2.0, 4.0, 9.0], 40);
        assert_eq!(rows.len(), 4 * 41);
    }

    #[test]
    fn substates_rebuild_collective_amplitudes() {
        for mean in [0.3, 1.0, 2.0] {
            for (collective, diffused) in
                [(StateSpec::coherent(mean), false), (StateSpec::phase_diffused(mean).with_phases(vec![0.7]), true)]
            {
                let s = built(&collective);
                let basis = s.basis();
                let mut rebuilt = vec![Complex64::new(0.0, 0.0); basis.dimension()];
                for n_tot in 0..=2 * basis.n_max() {
                    let c = DistributionKind::Poisson.weight(mean, n_tot).sqrt();
                    let sub = StateSpec::of_kind(DistributionKind::Poisson.substate_kind(diffused), 0.0, n_tot)
                        .with_phases(collective.phases.clone());
                    let sub = build_state(&sub, FockBasis::new(n_tot).unwrap()).unwrap();
                    for m in 0..=n_tot {
                        let (a, b) = (m, n_tot - m);
                        if a <= basis.n_max() && b <= basis.n_max() {
                            rebuilt[basis.index(a, b)] += sub.amplitude(a, b) * c;
                        }
                    }
                }
                for (x, y) in rebuilt.iter().zip(s.amplitudes()) {
                    assert!((x - y).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn chaotic_shells_match_bose_weights() {
        for mean in [0.5, 1.0, 2.0] {
            let s = built(&StateSpec::chaotic(mean));
            let basis = s.basis();
            for n_tot in 0..=basis.n_max() {
                let shell: f64 = (0..=n_tot).map(|m| s.amplitude(m, n_tot - m).norm_sqr()).sum();
                assert!((shell - DistributionKind::BoseEinstein.weight(mean, n_tot)).abs() < 1e-12);
            }
        }
    }

    fn photon_number(s: &TwoModeState, mode: Mode) -> f64 {
        expect_normal_ordered(s, &[LadderOp::create(mode), LadderOp::annihilate(mode)]).unwrap().re
    }

    proptest! {
        #[test]
        fn collective_states_normalized(kind_ix in 0usize..3, mean in 0.0f64..6.0, phi in -3.2f64..3.2) {
            let kind = [StateKind::CollectiveCoherent, StateKind::PhaseDiffused, StateKind::Chaotic][kind_ix];
            let mut spec = StateSpec::of_kind(kind, mean, 0);
            if kind != StateKind::Chaotic {
                spec = spec.with_phases(vec![phi]);
            }
            let s = built(&spec);
            prop_assert!((s.norm_sqr() + s.truncation_loss() - 1.0).abs() < 1e-10);
            prop_assert!(s.truncation_loss() <= spec.epsilon);
            for mode in Mode::BOTH {
                prop_assert!((photon_number(&s, mode) - mean).abs() < 1e-9);
            }
        }

        #[test]
        fn counted_states_normalized(kind_ix in 0usize..5, n in 1usize..9, phi in -3.2f64..3.2) {
            let kind = [
                StateKind::CoherentSubstate,
                StateKind::PhaseDiffusedSubstate,
                StateKind::ChaoticSubstate,
                StateKind::Noon,
                StateKind::NumberState,
            ][kind_ix];
            let n = if kind == StateKind::NumberState { 2 * n } else { n };
            let mut spec = StateSpec::of_kind(kind, 0.0, n);
            match kind {
                StateKind::PhaseDiffusedSubstate | StateKind::Noon => spec = spec.with_phases(vec![phi]),
                StateKind::ChaoticSubstate => spec = spec.with_phases((0..n).map(|j| phi * j as f64).collect()),
                _ => {}
            }
            let s = built(&spec);
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            prop_assert_eq!(s.truncation_loss(), 0.0);
            for mode in Mode::BOTH {
                prop_assert!((photon_number(&s, mode) - n as f64 / 2.0).abs() < 1e-9);
            }
        }

        #[test]
        fn distribution_plus_tail_is_one(kind_ix in 0usize..2, mean in 0.0f64..9.0, m in 0usize..80) {
            let kind = [DistributionKind::Poisson, DistributionKind::BoseEinstein][kind_ix];
            let d = coefficient_distribution(kind, mean, m);
            let total: f64 = d.weights.iter().sum::<f64>() + d.tail;
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
