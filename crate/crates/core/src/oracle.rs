//! Semiclassical field ensembles: an independent route to first-order
//! patterns and to the intensity-fluctuation backgrounds of second order.
//!
//! Each slit is a row of `M` point sub-sources at the cell midpoints
//! `a((j+½)/M − ½)` around its centre. The field at the screen is
//! `E(ρ) = Σ A_{s,j} e^{i(s·u + 2v·t_j)}` with `t_j` the offset in units of `a`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::correlator::Order;
use crate::error::{Error, Result};
use crate::pattern::{reduce_coords, DetectionScheme, EnvelopeModel, PatternSeries, Quantity, Route, SlitGeometry};
use crate::rng;

/// Samples drawn from one RNG stream.
pub const ENSEMBLE_BATCH: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleModel {
    /// Every sub-source has amplitude `1/M`; no fluctuations.
    FixedPhase,
    /// One uniform phase per slit, shared by its sub-sources.
    RandomRelativePhase,
    /// Independent circular complex Gaussian per sub-source, `E|g|² = 1`, scaled by `1/√M`.
    CircularGaussian,
}

impl EnsembleModel {
    pub fn label(self) -> &'static str {
        match self {
            EnsembleModel::FixedPhase => "fixed",
            EnsembleModel::RandomRelativePhase => "random-relative",
            EnsembleModel::CircularGaussian => "gaussian",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" | "fixed-phase" => Ok(EnsembleModel::FixedPhase),
            "random" | "random-relative" | "random-relative-phase" => Ok(EnsembleModel::RandomRelativePhase),
            "gaussian" | "circular-gaussian" => Ok(EnsembleModel::CircularGaussian),
            other => Err(Error::InvalidInput(format!("unknown ensemble model '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub model: EnsembleModel,
    pub samples: usize,
    pub seed: u64,
    pub sub_sources_per_slit: usize,
}

impl EnsembleSpec {
    pub fn new(model: EnsembleModel, samples: usize, seed: u64, sub_sources_per_slit: usize) -> Result<Self> {
        let s = EnsembleSpec { model, samples, seed, sub_sources_per_slit };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 || self.sub_sources_per_slit == 0 {
            return Err(Error::InvalidInput(format!(
                "ensemble needs samples ≥ 1 and sub-sources ≥ 1, got {} and {}",
                self.samples, self.sub_sources_per_slit
            )));
        }
        Ok(())
    }

    fn source(&self) -> String {
        format!(
            "ensemble:{} M={} samples={} seed={}",
            self.model.label(),
            self.sub_sources_per_slit,
            self.samples,
            self.seed
        )
    }

    fn envelope_model(&self) -> EnvelopeModel {
        match self.model {
            EnsembleModel::CircularGaussian => EnvelopeModel::Difference,
            _ => EnvelopeModel::Factored,
        }
    }
}

/// `(1/M)·Σ_j e^{2iv·t_j}`, the discretized single-slit envelope.
fn slit_sum(v: f64, m: usize) -> Complex64 {
    let mf = m as f64;
    (0..m).map(|j| Complex64::from_polar(1.0, 2.0 * v * ((j as f64 + 0.5) / mf - 0.5))).sum::<Complex64>() / mf
}

/// Propagation phases `e^{i(s·u + 2v·t_j)}` for every sub-source, slit `s = +1` first.
fn propagators(geom: &SlitGeometry, rho: f64, m: usize) -> Vec<Complex64> {
    let (u, v) = reduce_coords(geom, rho);
    let mf = m as f64;
    [1.0, -1.0]
        .iter()
        .flat_map(|&s| (0..m).map(move |j| Complex64::from_polar(1.0, s * u + 2.0 * v * ((j as f64 + 0.5) / mf - 0.5))))
        .collect()
}

/// Per-slit propagators `e^{isu}·slit_sum(v)`.
fn slit_propagators(geom: &SlitGeometry, rho: f64, m: usize) -> [Complex64; 2] {
    let (u, v) = reduce_coords(geom, rho);
    let s = slit_sum(v, m);
    [Complex64::from_polar(1.0, u) * s, Complex64::from_polar(1.0, -u) * s]
}

/// `⟨I(ρ)⟩` in closed form for the model.
pub fn mean_intensity(spec: &EnsembleSpec, geom: &SlitGeometry, rho: f64) -> f64 {
    let [a, b] = slit_propagators(geom, rho, spec.sub_sources_per_slit);
    match spec.model {
        EnsembleModel::FixedPhase => (a + b).norm_sqr(),
        EnsembleModel::RandomRelativePhase => a.norm_sqr() + b.norm_sqr(),
        EnsembleModel::CircularGaussian => 2.0,
    }
}

/// Fields at both detectors for every grid point, one sample at a time.
struct FieldSampler {
    model: EnsembleModel,
    m: usize,
    /// Per grid point: propagators to detector 1 and detector 2.
    paths: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    amps: Vec<Complex64>,
}

impl FieldSampler {
    fn new(spec: &EnsembleSpec, scheme: &DetectionScheme, grid: &[f64], geom: &SlitGeometry) -> Self {
        let m = spec.sub_sources_per_slit;
        let paths = grid
            .iter()
            .map(|&rho| {
                let (r1, r2) = scheme.positions(rho);
                match spec.model {
                    EnsembleModel::CircularGaussian => (propagators(geom, r1, m), propagators(geom, r2, m)),
                    _ => (slit_propagators(geom, r1, m).to_vec(), slit_propagators(geom, r2, m).to_vec()),
                }
            })
            .collect();
        let len = if spec.model == EnsembleModel::CircularGaussian { 2 * m } else { 2 };
        FieldSampler { model: spec.model, m, paths, amps: vec![Complex64::new(1.0, 0.0); len] }
    }

    fn draw<R: Rng>(&mut self, rng: &mut R) {
        match self.model {
            EnsembleModel::FixedPhase => {}
            EnsembleModel::RandomRelativePhase => {
                for a in self.amps.iter_mut() {
                    *a = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
                }
            }
            EnsembleModel::CircularGaussian => {
                let scale = std::f64::consts::FRAC_1_SQRT_2 / (self.m as f64).sqrt();
                for a in self.amps.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *a = Complex64::new(re, im) * scale;
                }
            }
        }
    }

    fn fields(&self, i: usize) -> (Complex64, Complex64) {
        let (p1, p2) = &self.paths[i];
        let e = |p: &[Complex64]| p.iter().zip(&self.amps).map(|(x, a)| x * a).sum::<Complex64>();
        (e(p1), e(p2))
    }
}

/// Running mean and variance per grid point.
struct Welford {
    n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford { n: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for ((mu, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let d = v - *mu;
            *mu += d * inv;
            *m2 += d * (v - *mu);
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

/// Sample mean of `f(E₁, E₂)` over the ensemble, with standard errors.
fn average<F>(spec: &EnsembleSpec, scheme: &DetectionScheme, grid: &[f64], geom: &SlitGeometry, f: F) -> Welford
where
    F: Fn(Complex64, Complex64) -> f64,
{
    let mut sampler = FieldSampler::new(spec, scheme, grid, geom);
    let mut acc = Welford::new(grid.len());
    let mut row = vec![0.0; grid.len()];
    let batches = spec.samples.div_ceil(ENSEMBLE_BATCH);
    for b in 0..batches {
        let mut rng = rng::stream(spec.seed, b as u64);
        let count = ENSEMBLE_BATCH.min(spec.samples - b * ENSEMBLE_BATCH);
        for _ in 0..count {
            sampler.draw(&mut rng);
            for (i, r) in row.iter_mut().enumerate() {
                let (e1, e2) = sampler.fields(i);
                *r = f(e1, e2);
            }
            acc.push(&row);
        }
    }
    acc
}

fn series(
    spec: &EnsembleSpec,
    order: Order,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
    acc: Welford,
    scale: f64,
) -> PatternSeries {
    let stderr = acc.stderr();
    let mut s = PatternSeries::from_values(
        Quantity::Probability,
        order,
        None,
        scheme,
        *geom,
        Route::Ensemble,
        grid.to_vec(),
        acc.mean,
        scale,
        spec.envelope_model(),
    );
    s.source = spec.source();
    s.stderr = Some(stderr);
    s
}

/// `⟨Re E*(ρ₁)E(ρ₂)⟩`; `shape` divides by the point-source peak intensity.
pub fn ensemble_p1(
    spec: &EnsembleSpec,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    spec.validate()?;
    geom.validate()?;
    let acc = average(spec, &scheme, grid, geom, |e1, e2| (e1.conj() * e2).re);
    let peak = match spec.model {
        EnsembleModel::FixedPhase => 4.0,
        _ => 2.0,
    };
    Ok(series(spec, Order::First, scheme, grid, geom, acc, peak))
}

/// `⟨I(ρ₁)I(ρ₂)⟩`; `shape` divides by `⟨I(ρ₁)⟩⟨I(ρ₂)⟩` (closed-form means).
///
/// `shape` and `stderr` are in the same normalized units; points whose mean
/// product is negligible are undefined.
pub fn ensemble_p2(
    spec: &EnsembleSpec,
    scheme: DetectionScheme,
    grid: &[f64],
    geom: &SlitGeometry,
) -> Result<PatternSeries> {
    spec.validate()?;
    geom.validate()?;
    let acc = average(spec, &scheme, grid, geom, |e1, e2| e1.norm_sqr() * e2.norm_sqr());
    let norms: Vec<f64> = grid
        .iter()
        .map(|&rho| {
            let (r1, r2) = scheme.positions(rho);
            mean_intensity(spec, geom, r1) * mean_intensity(spec, geom, r2)
        })
        .collect();
    let top = norms.iter().cloned().fold(0.0, f64::max);
    let mut s = series(spec, Order::Second, scheme, grid, geom, acc, 1.0);
    let stderr = s.stderr.take().unwrap_or_default();
    let mut se = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        if norms[i] >= crate::pattern::UNDEFINED_THRESHOLD * top && top > 0.0 {
            s.shape[i] = s.values[i] / norms[i];
            se.push(stderr[i] / norms[i]);
        } else {
            s.shape[i] = f64::NAN;
            s.defined[i] = false;
            se.push(f64::NAN);
        }
    }
    s.stderr = Some(se);
    Ok(s)
}
