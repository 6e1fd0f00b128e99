//! The verification suite behind `qdiffract verify`.

use serde::Serialize;

use crate::correlator::{
    closed_form_matrix_elements, interference_identity_check, matrix_elements, AssemblyFault, Order, PhaseAverage,
};
use crate::error::{Error, Result};
use crate::oracle::{ensemble_p1, ensemble_p2, EnsembleModel, EnsembleSpec};
use crate::pattern::{
    catalog_form, catalog_pattern, coherence_series, decompose_n2, effective_width_for, engine_pattern_with_fault, g2,
    weighted_substate_pattern, DetectionScheme, Evaluator, Point, Route, SlitGeometry,
};
use crate::states::{check_sum_rules, DistributionKind, StateSpec};

/// Check names accepted by `--only`, in run order.
pub const CHECKS: [&str; 14] = [
    "matrix-elements",
    "engine-vs-catalog",
    "sum-rules",
    "interference-identity",
    "chaotic-identity-violation",
    "shape-squaring",
    "substate-reconstruction",
    "g2-values",
    "widths",
    "n2-background",
    "coherent-factorization",
    "scheme-equality",
    "degeneracy-lift",
    "ensemble-oracle",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &str, residual: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckResult { name: name.into(), residual, tolerance, passed: residual < tolerance, detail: detail.into() }
    }

    fn errored(name: &str, e: &Error) -> Self {
        CheckResult { name: name.into(), residual: f64::NAN, tolerance: f64::NAN, passed: false, detail: e.to_string() }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub only: Option<String>,
    pub fault: Option<AssemblyFault>,
    pub seed: u64,
}

pub fn run_checks(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let selected: Vec<&str> = match &opts.only {
        Some(name) if CHECKS.contains(&name.as_str()) => vec![CHECKS.iter().find(|c| **c == name).unwrap()],
        Some(name) => return Err(Error::InvalidInput(format!("unknown check '{name}'; known: {}", CHECKS.join(", ")))),
        None => CHECKS.to_vec(),
    };
    let geom = SlitGeometry::with_ratio(4.0)?;
    Ok(selected
        .into_iter()
        .map(|name| run_one(name, opts, &geom).unwrap_or_else(|e| CheckResult::errored(name, &e)))
        .collect())
}

fn run_one(name: &str, opts: &VerifyOptions, geom: &SlitGeometry) -> Result<CheckResult> {
    match name {
        "matrix-elements" => matrix_element_check(opts.fault),
        "engine-vs-catalog" => engine_vs_catalog(geom, opts.fault),
        "sum-rules" => sum_rules(),
        "interference-identity" => interference_identity(),
        "chaotic-identity-violation" => chaotic_violation(),
        "shape-squaring" => shape_squaring(geom, opts.fault),
        "substate-reconstruction" => substate_reconstruction(geom),
        "g2-values" => g2_values(geom),
        "widths" => widths(geom),
        "n2-background" => n2_background(),
        "coherent-factorization" => factorization(geom),
        "scheme-equality" => scheme_equality(geom),
        "degeneracy-lift" => degeneracy_lift(geom),
        "ensemble-oracle" => ensemble_oracle(geom, opts.seed),
        _ => unreachable!("check list and dispatch agree"),
    }
}

fn catalog_states() -> Vec<StateSpec> {
    let mut v = Vec::new();
    for m in [0.5, 1.0, 2.0, 4.0] {
        v.extend([StateSpec::coherent(m), StateSpec::phase_diffused(m), StateSpec::chaotic(m)]);
    }
    for n in [2, 3, 4, 6] {
        v.extend([
            StateSpec::coherent_substate(n),
            StateSpec::phase_diffused_substate(n),
            StateSpec::chaotic_substate(n),
            StateSpec::noon(n),
        ]);
    }
    v.push(StateSpec::noon(2).with_phases(vec![0.7]));
    v.extend([StateSpec::number(2), StateSpec::number(4), StateSpec::number(6)]);
    v
}

fn matrix_element_check(fault: Option<AssemblyFault>) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for spec in catalog_states() {
        if spec.kind == crate::states::StateKind::Chaotic && spec.mean_n > 2.0 {
            continue;
        }
        for order in [Order::First, Order::Second] {
            let avg = PhaseAverage::default_for(&spec)?;
            let mut engine = matrix_elements(&spec, order, &avg)?;
            engine.entries = crate::correlator::faulty_entries(&engine, fault);
            let closed = closed_form_matrix_elements(&spec, order)?;
            let d = engine.entries.iter().zip(&closed.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
                / closed.scale().max(1.0);
            if d > worst {
                worst = d;
                at = format!("{spec} order {}", order.value());
            }
        }
    }
    Ok(CheckResult::below("matrix-elements", worst, 1e-9, format!("worst at {at}")))
}

fn engine_vs_catalog(geom: &SlitGeometry, fault: Option<AssemblyFault>) -> Result<CheckResult> {
    let grid = geom.grid_in_u(-7.0, 7.0, 201);
    let schemes = [
        DetectionScheme::SamePoint,
        DetectionScheme::Opposite,
        DetectionScheme::General { rho2: 0.37 * geom.rho_per_u() },
    ];
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for spec in catalog_states() {
        for order in [Order::First, Order::Second] {
            let avg = PhaseAverage::default_for(&spec)?;
            for scheme in schemes {
                let e = engine_pattern_with_fault(&spec, order, scheme, &grid, geom, &avg, fault)?;
                let c = catalog_pattern(&spec, order, scheme, &grid, geom)?;
                let d = e.max_abs_deviation(&c) / c.scale_factor.max(1.0);
                if d > worst {
                    worst = d;
                    at = format!("{spec} order {} {}", order.value(), scheme.label());
                }
            }
        }
    }
    Ok(CheckResult::below("engine-vs-catalog", worst, 1e-9, format!("worst at {at}")))
}

fn sum_rules() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for kind in [DistributionKind::Poisson, DistributionKind::BoseEinstein] {
        for m in [1.0, 2.0, 4.0, 9.0] {
            worst = worst.max(check_sum_rules(kind, m, 1e-10).max_residual());
        }
    }
    Ok(CheckResult::below("sum-rules", worst, 1e-10, "Poisson and Bose-Einstein at ⟨n⟩ = 1, 2, 4, 9"))
}

fn interference_identity() -> Result<CheckResult> {
    let specs = [
        StateSpec::coherent(1.0),
        StateSpec::coherent(2.5),
        StateSpec::coherent_substate(2),
        StateSpec::coherent_substate(3),
        StateSpec::coherent_substate(4),
    ];
    let mut worst: f64 = 0.0;
    for s in &specs {
        worst = worst.max(interference_identity_check(s)?.residual);
    }
    Ok(CheckResult::below("interference-identity", worst, 1e-9, "(C+D)² = 4AB, coherent family"))
}

fn chaotic_violation() -> Result<CheckResult> {
    let r = interference_identity_check(&StateSpec::chaotic(1.0))?;
    let mut c = CheckResult::below(
        "chaotic-identity-violation",
        r.max_cd,
        1e-9,
        format!("max |C+D| = {:e}, max 2√(AB) = {}", r.max_cd, r.max_two_sqrt_ab),
    );
    c.passed &= r.max_two_sqrt_ab > 0.1;
    Ok(c)
}

/// Order-2 fine structure `(𝒢₂ − bg)/(peak₂ − bg)` against `(𝒢₁/peak₁)²`.
pub fn shape_squaring_residual(
    spec: &StateSpec,
    grid: &[f64],
    geom: &SlitGeometry,
    fault: Option<AssemblyFault>,
) -> Result<f64> {
    let first = Evaluator::engine(spec, Order::First, &PhaseAverage::default_for(spec)?, None)?;
    let second = Evaluator::engine(spec, Order::Second, &PhaseAverage::default_for(spec)?, fault)?;
    let scheme2 = if spec.kind == crate::states::StateKind::Noon {
        DetectionScheme::SamePoint
    } else {
        DetectionScheme::Opposite
    };
    let bg = second.background().ok_or_else(|| Error::OutOfCatalog(spec.label()))?;
    let peak1 = first.value(&Point::new(geom, &DetectionScheme::Opposite, 0.0))?;
    let peak2 = second.value(&Point::new(geom, &scheme2, 0.0))?;
    let mut worst: f64 = 0.0;
    for &rho in grid {
        let a = first.value(&Point::new(geom, &DetectionScheme::Opposite, rho))? / peak1;
        let b = (second.value(&Point::new(geom, &scheme2, rho))? - bg) / (peak2 - bg);
        worst = worst.max((b - a * a).abs());
    }
    Ok(worst)
}

pub fn shape_squaring_states() -> Vec<StateSpec> {
    vec![
        StateSpec::coherent(1.0),
        StateSpec::coherent_substate(2),
        StateSpec::coherent_substate(3),
        StateSpec::phase_diffused(1.0),
        StateSpec::phase_diffused_substate(2),
        StateSpec::phase_diffused_substate(4),
        StateSpec::chaotic(1.0),
        StateSpec::chaotic_substate(2),
        StateSpec::chaotic_substate(3),
        StateSpec::noon(2),
        StateSpec::number(2),
        StateSpec::number(4),
        StateSpec::number(6),
    ]
}

fn shape_squaring(geom: &SlitGeometry, fault: Option<AssemblyFault>) -> Result<CheckResult> {
    let grid = geom.default_grid();
    let mut worst: f64 = 0.0;
    let mut at = String::new();
    for spec in shape_squaring_states() {
        let r = shape_squaring_residual(&spec, &grid, geom, fault)?;
        if r >= worst {
            worst = r;
            at = spec.label();
        }
    }
    Ok(CheckResult::below("shape-squaring", worst, 1e-9, format!("worst at {at}; NOON with N > 2 is flat and exempt")))
}

fn substate_reconstruction(geom: &SlitGeometry) -> Result<CheckResult> {
    let grid = geom.grid_in_u(-7.0, 7.0, 201);
    let mut worst: f64 = 0.0;
    for (family, diffused, collective) in [
        (DistributionKind::Poisson, false, StateSpec::coherent(1.0)),
        (DistributionKind::Poisson, true, StateSpec::phase_diffused(1.0)),
        (DistributionKind::BoseEinstein, false, StateSpec::chaotic(1.0)),
    ] {
        for order in [Order::First, Order::Second] {
            let scheme = DetectionScheme::Opposite;
            let w = weighted_substate_pattern(family, diffused, 1.0, order, scheme, &grid, geom, 1e-12)?;
            let c = catalog_pattern(&collective, order, scheme, &grid, geom)?;
            worst = worst.max(w.max_abs_deviation(&c));
        }
    }
    Ok(CheckResult::below("substate-reconstruction", worst, 1e-8, "weighted substates vs collective, ⟨n⟩ = 1"))
}

fn g2_values(geom: &SlitGeometry) -> Result<CheckResult> {
    let grid = geom.grid_in_u(-6.0, 6.0, 121);
    let mut worst_catalog: f64 = 0.0;
    let mut worst_engine: f64 = 0.0;
    let flat = [
        (StateSpec::coherent(1.0), 1.0),
        (StateSpec::coherent_substate(2), 0.5),
        (StateSpec::coherent_substate(4), 0.75),
        (StateSpec::noon(2), 1.0),
    ];
    for route in [Route::Catalog, Route::Engine] {
        let mut worst: f64 = 0.0;
        for (spec, want) in &flat {
            let s = coherence_series(spec, Order::Second, &grid, geom, route, None)?;
            for v in s.values.iter().filter(|v| v.is_finite()) {
                worst = worst.max((v - want).abs());
            }
        }
        for (spec, peak, background) in [
            (StateSpec::chaotic(1.0), 2.0, 1.0),
            (StateSpec::phase_diffused(1.0), 1.5, 0.5),
            (StateSpec::number(2), 1.0, 0.0),
        ] {
            let s = coherence_series(&spec, Order::Second, &[0.0], geom, route, None)?;
            worst = worst.max((s.values[0] - peak).abs());
            let first = match route {
                Route::Catalog => Evaluator::catalog(&spec, Order::First)?,
                _ => Evaluator::engine(&spec, Order::First, &PhaseAverage::default_for(&spec)?, None)?,
            };
            let second = match route {
                Route::Catalog => Evaluator::catalog(&spec, Order::Second)?,
                _ => Evaluator::engine(&spec, Order::Second, &PhaseAverage::default_for(&spec)?, None)?,
            };
            let p1 = first.value(&Point::new(geom, &DetectionScheme::SamePoint, 0.0))?;
            let bg = second.background().unwrap_or(f64::NAN) / (p1 * p1);
            worst = worst.max((bg - background).abs());
        }
        match route {
            Route::Catalog => worst_catalog = worst,
            _ => worst_engine = worst,
        }
    }
    let mut c = CheckResult::below(
        "g2-values",
        worst_catalog,
        1e-9,
        format!("catalog residual {worst_catalog:e}, engine residual {worst_engine:e} (limit 1e-3)"),
    );
    c.passed &= worst_engine < 1e-3;
    Ok(c)
}

fn widths(geom: &SlitGeometry) -> Result<CheckResult> {
    let w1 = effective_width_for(&StateSpec::coherent(1.0), Order::First, geom)?;
    let w2 = effective_width_for(&StateSpec::coherent(1.0), Order::Second, geom)?;
    let r = (w1.width - 1.0).abs().max((w2.width - 0.5).abs());
    Ok(CheckResult::below("widths", r, 1e-4, format!("order 1 → {}, order 2 → {}", w1.width, w2.width)))
}

fn n2_background() -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for spec in [StateSpec::phase_diffused_substate(2), StateSpec::chaotic_substate(2), StateSpec::number(2)] {
        let d = decompose_n2(&spec)?;
        let engine = Evaluator::engine(&spec, Order::Second, &PhaseAverage::default_for(&spec)?, None)?;
        let bg = engine.background().unwrap_or(f64::NAN);
        worst = worst.max((d.predicted_background() - bg).abs());
        worst = worst.max((d.predicted_background() - catalog_form(&spec, Order::Second)?.background()).abs());
    }
    Ok(CheckResult::below("n2-background", worst, 1e-12, "½(a₂₀² + a₀₂²) against engine and catalog backgrounds"))
}

fn factorization(geom: &SlitGeometry) -> Result<CheckResult> {
    let pts = geom.grid_in_u(-5.0, 5.0, 23);
    let mut worst: f64 = 0.0;
    for spec in [StateSpec::coherent(1.0), StateSpec::coherent_substate(3)] {
        for order in [Order::First, Order::Second] {
            let e = Evaluator::engine(&spec, order, &PhaseAverage::default_for(&spec)?, None)?;
            let f = |a: f64, b: f64| e.value(&Point::at(geom, a, b));
            let f00 = f(0.0, 0.0)?;
            for &r1 in &pts {
                for &r2 in &pts {
                    worst = worst.max((f(r1, r2)? * f00 - f(r1, 0.0)? * f(0.0, r2)?).abs() / (f00 * f00));
                }
            }
        }
    }
    Ok(CheckResult::below("coherent-factorization", worst, 1e-9, "f(ρ₁,ρ₂)f(0,0) = f(ρ₁,0)f(0,ρ₂)"))
}

fn scheme_equality(geom: &SlitGeometry) -> Result<CheckResult> {
    let grid = geom.default_grid();
    let mut worst: f64 = 0.0;
    for spec in [StateSpec::coherent(2.0), StateSpec::coherent_substate(4)] {
        for order in [Order::First, Order::Second] {
            let a = catalog_pattern(&spec, order, DetectionScheme::SamePoint, &grid, geom)?;
            let b = catalog_pattern(&spec, order, DetectionScheme::Opposite, &grid, geom)?;
            worst = worst.max(a.max_abs_deviation(&b));
        }
    }
    Ok(CheckResult::below("scheme-equality", worst, 1e-12, "coherent family, SamePoint vs Opposite"))
}

/// The five states whose first-order curves coincide up to the coherent one.
pub fn degeneracy_states() -> [StateSpec; 5] {
    [
        StateSpec::coherent(1.0),
        StateSpec::phase_diffused(1.0),
        StateSpec::chaotic(1.0),
        StateSpec::noon(2),
        StateSpec::number(2),
    ]
}

/// Largest within-group first-order deviation and smallest pairwise second-order deviation.
pub fn degeneracy_measures(geom: &SlitGeometry, grid: &[f64]) -> Result<(f64, f64, f64)> {
    let curves = |order| -> Result<Vec<Vec<f64>>> {
        degeneracy_states()
            .iter()
            .map(|s| {
                let avg = PhaseAverage::default_for(s)?;
                Ok(engine_pattern_with_fault(s, order, DetectionScheme::Opposite, grid, geom, &avg, None)?
                    .peak_normalized())
            })
            .collect()
    };
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let first = curves(Order::First)?;
    let within = (2..5).map(|j| dev(&first[1], &first[j])).fold(0.0, f64::max);
    let between = dev(&first[0], &first[1]);
    let second = curves(Order::Second)?;
    let mut apart = f64::INFINITY;
    for i in 0..5 {
        for j in i + 1..5 {
            apart = apart.min(dev(&second[i], &second[j]));
        }
    }
    Ok((within, between, apart))
}

fn degeneracy_lift(geom: &SlitGeometry) -> Result<CheckResult> {
    let (within, between, apart) = degeneracy_measures(geom, &geom.default_grid())?;
    let mut c = CheckResult::below(
        "degeneracy-lift",
        within,
        1e-12,
        format!("first order: within-group {within:e}, coherent vs rest {between}; second order: closest pair {apart}"),
    );
    c.passed &= between > 0.1 && apart > 0.1;
    Ok(c)
}

fn ensemble_oracle(geom: &SlitGeometry, seed: u64) -> Result<CheckResult> {
    let grid = geom.grid_in_u(-6.0, 6.0, 121);
    let coh = StateSpec::coherent(1.0);
    let fixed = EnsembleSpec::new(EnsembleModel::FixedPhase, 1, seed, 51)?;
    let mut det: f64 = 0.0;
    for scheme in [DetectionScheme::SamePoint, DetectionScheme::Opposite] {
        let e = ensemble_p1(&fixed, scheme, &grid, geom)?;
        let c = catalog_pattern(&coh, Order::First, scheme, &grid, geom)?;
        det = det.max(e.shape.iter().zip(&c.shape).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    let gauss = EnsembleSpec::new(EnsembleModel::CircularGaussian, 20_000, seed, 51)?;
    let coarse = geom.grid_in_u(-5.0, 5.0, 21);
    let e = ensemble_p2(&gauss, DetectionScheme::Opposite, &coarse, geom)?;
    let c = g2(&StateSpec::chaotic(1.0), &coarse, geom)?;
    let se = e.stderr.clone().unwrap_or_default();
    let z = e.shape.iter().zip(&c.values).zip(&se).map(|((a, b), s)| (a - b).abs() / s).fold(0.0, f64::max);
    let mut r = CheckResult::below(
        "ensemble-oracle",
        det,
        1e-3,
        format!("fixed-phase M=51 shape deviation {det:e}; Gaussian-field g2 worst |z| = {z:.2} (limit 4)"),
    );
    r.passed &= z < 4.0;
    Ok(r)
}
