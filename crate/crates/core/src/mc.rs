//! Detection-event sampling from a tabulated pattern and goodness-of-fit.
//!
//! The law is piecewise constant on the grid cells: cell `[x_i, x_{i+1}]`
//! carries the trapezoid mass `(x_{i+1}−x_i)(y_i+y_{i+1})/2`, spread uniformly.
//! Expected bin counts are exact for that law.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numeric::{fmt_real, NeumaierSum};
use crate::pattern::PatternSeries;
use crate::rng;

/// Events drawn from one RNG stream.
pub const EVENT_BATCH: u64 = 65_536;

/// Smallest expected count per merged bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRun {
    /// Description of the pattern the law came from.
    pub source: serde_json::Value,
    pub grid: Vec<f64>,
    pub law: Vec<f64>,
    pub n_events: u64,
    pub seed: u64,
    pub bins: usize,
    /// `bins + 1` equally spaced edges spanning the grid.
    pub edges: Vec<f64>,
    pub histogram: Vec<u64>,
    pub expected: Vec<f64>,
}

impl DetectionRun {
    /// Run over an arbitrary non-negative tabulated law.
    pub fn from_law(grid: Vec<f64>, law: Vec<f64>, n_events: u64, seed: u64, bins: usize) -> Result<Self> {
        if grid.len() < 2 || grid.len() != law.len() {
            return Err(Error::InvalidInput(format!(
                "law needs matching grid and values with at least two points, got {} and {}",
                grid.len(),
                law.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid must be strictly increasing".into()));
        }
        if let Some((i, v)) = law.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::InvalidInput(format!(
                "pattern value {v:e} at grid point {i} is not a probability; signed shapes cannot be sampled"
            )));
        }
        if n_events == 0 || bins == 0 {
            return Err(Error::InvalidInput("n_events and bins must be at least 1".into()));
        }
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let edges = crate::numeric::linspace(lo, hi, bins + 1);
        let mut run = DetectionRun {
            source: serde_json::Value::Null,
            grid,
            law,
            n_events,
            seed,
            bins,
            edges,
            histogram: vec![0; bins],
            expected: Vec::new(),
        };
        let masses = run.cell_masses();
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("pattern has zero total mass".into()));
        }
        run.expected = expected_counts(&run.grid, &run.law, &run.edges, n_events);
        Ok(run)
    }

    /// Run whose law is the `values` of `series`.
    pub fn from_series(series: &PatternSeries, n_events: u64, seed: u64, bins: usize) -> Result<Self> {
        let mut run = Self::from_law(series.grid.clone(), series.values.clone(), n_events, seed, bins)?;
        run.source = series.metadata();
        Ok(run)
    }

    fn cell_masses(&self) -> Vec<f64> {
        cell_masses(&self.grid, &self.law)
    }

    /// Histogram CSV with columns `bin_lo,bin_hi,count,expected`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "bin_lo,bin_hi,count,expected")?;
        for i in 0..self.bins {
            let (lo, hi, e) = (fmt_real(self.edges[i]), fmt_real(self.edges[i + 1]), fmt_real(self.expected[i]));
            writeln!(w, "{lo},{hi},{},{e}", self.histogram[i])?;
        }
        Ok(())
    }

    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "source": self.source,
            "n_events": self.n_events,
            "seed": self.seed,
            "bins": self.bins,
            "grid_points": self.grid.len(),
            "rng": rng::RNG_ALGORITHM,
            "event_batch": EVENT_BATCH,
        })
    }
}

fn cell_masses(grid: &[f64], law: &[f64]) -> Vec<f64> {
    grid.windows(2).zip(law.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).collect()
}

/// Expected counts per bin for `n_events` draws from the cell law of `(grid, law)`.
pub fn expected_counts(grid: &[f64], law: &[f64], edges: &[f64], n_events: u64) -> Vec<f64> {
    let masses = cell_masses(grid, law);
    let mut total = NeumaierSum::default();
    masses.iter().for_each(|&m| total.add(m));
    let total = total.value();
    let mut out = vec![NeumaierSum::default(); edges.len().saturating_sub(1)];
    for (i, &m) in masses.iter().enumerate() {
        let (x0, x1) = (grid[i], grid[i + 1]);
        let density = m / (x1 - x0);
        for (k, slot) in out.iter_mut().enumerate() {
            let overlap = x1.min(edges[k + 1]) - x0.max(edges[k]);
            if overlap > 0.0 {
                slot.add(density * overlap);
            }
        }
    }
    out.iter().map(|s| s.value() / total * n_events as f64).collect()
}

/// Draws the events and fills `histogram`; the same seed gives the same counts.
pub fn simulate(run: &DetectionRun) -> Result<DetectionRun> {
    let mut run = DetectionRun::from_law(run.grid.clone(), run.law.clone(), run.n_events, run.seed, run.bins)
        .map(|fresh| DetectionRun { source: run.source.clone(), ..fresh })?;
    let masses = run.cell_masses();
    let mut cdf = Vec::with_capacity(masses.len());
    let mut acc = NeumaierSum::default();
    for m in &masses {
        acc.add(*m);
        cdf.push(acc.value());
    }
    let total = acc.value();
    let (lo, hi) = (run.edges[0], run.edges[run.bins]);
    let width = (hi - lo) / run.bins as f64;
    let batches = run.n_events.div_ceil(EVENT_BATCH);
    for b in 0..batches {
        let mut r = rng::stream(run.seed, b);
        let count = EVENT_BATCH.min(run.n_events - b * EVENT_BATCH);
        for _ in 0..count {
            let target = r.random::<f64>() * total;
            let mut cell = cdf.partition_point(|&c| c <= target).min(masses.len() - 1);
            while masses[cell] == 0.0 && cell + 1 < masses.len() {
                cell += 1;
            }
            let x = run.grid[cell] + r.random::<f64>() * (run.grid[cell + 1] - run.grid[cell]);
            let bin = (((x - lo) / width) as usize).min(run.bins - 1);
            run.histogram[bin] += 1;
        }
    }
    Ok(run)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GofReport {
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub merged_bins: usize,
}

/// Pearson chi-square of `run.histogram` against its own `expected`.
pub fn gof(run: &DetectionRun) -> Result<GofReport> {
    gof_against(run, &run.expected)
}

/// Pearson chi-square of `run.histogram` against another expectation, rescaled to `n_events`.
pub fn gof_against(run: &DetectionRun, expected: &[f64]) -> Result<GofReport> {
    if expected.len() != run.histogram.len() {
        return Err(Error::InvalidInput(format!(
            "expected has {} bins, histogram has {}",
            expected.len(),
            run.histogram.len()
        )));
    }
    let total: f64 = expected.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidInput("expected counts sum to zero".into()));
    }
    let scale = run.n_events as f64 / total;
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for (x, &c) in expected.iter().zip(&run.histogram) {
        e += x * scale;
        o += c as f64;
        if e >= MIN_EXPECTED {
            groups.push((e, o));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match groups.last_mut() {
            Some(last) => {
                last.0 += e;
                last.1 += o;
            }
            None => groups.push((e, o)),
        }
    }
    if groups.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "histogram merges into {} bin(s) with expected ≥ {MIN_EXPECTED}; chi-square needs two",
            groups.len()
        )));
    }
    let chi_square: f64 = groups.iter().map(|(e, o)| (o - e).powi(2) / e).sum();
    let dof = groups.len() - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(GofReport { chi_square, dof, p_value: dist.sf(chi_square), merged_bins: groups.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(n: u64, bins: usize, seed: u64) -> DetectionRun {
        let grid = crate::numeric::linspace(-1.0, 1.0, 101);
        DetectionRun::from_law(grid, vec![1.0; 101], n, seed, bins).unwrap()
    }

    #[test]
    fn flat_law_bins() {
        let run = simulate(&flat(1_000_000, 10, 5)).unwrap();
        for (&c, &e) in run.histogram.iter().zip(&run.expected) {
            assert!((e - 1e5).abs() < 1e-6);
            assert!((c as f64 - 1e5).abs() < 4.0 * 1e5f64.sqrt());
        }
        assert_eq!(run.histogram.iter().sum::<u64>(), 1_000_000);
    }

    #[test]
    fn single_event() {
        let run = simulate(&flat(1, 7, 0)).unwrap();
        assert_eq!(run.histogram.iter().sum::<u64>(), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let grid = vec![0.0, 1.0, 2.0];
        assert!(DetectionRun::from_law(grid.clone(), vec![1.0, -0.1, 1.0], 10, 0, 2).is_err());
        assert!(DetectionRun::from_law(grid.clone(), vec![0.0; 3], 10, 0, 2).is_err());
        assert!(DetectionRun::from_law(grid, vec![1.0; 3], 0, 0, 2).is_err());
        let one_bin = simulate(&flat(1000, 1, 0)).unwrap();
        assert!(gof(&one_bin).is_err());
    }

    #[test]
    fn expected_counts_for_sloped_law() {
        let grid = vec![0.0, 1.0, 2.0];
        let run = DetectionRun::from_law(grid, vec![0.0, 2.0, 2.0], 400, 0, 4).unwrap();
        // Cell masses 1 and 2; cell 0 density 1, cell 1 density 2.
        let want = [200.0 / 3.0, 200.0 / 3.0, 400.0 / 3.0, 400.0 / 3.0];
        for (e, w) in run.expected.iter().zip(want) {
            assert!((e - w).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_over_seeds() {
        let grid = crate::numeric::linspace(0.0, 3.0, 61);
        let law: Vec<f64> = grid.iter().map(|x| 1.0 + (2.0 * x).cos().powi(2)).collect();
        let low = (0..100)
            .filter(|&s| {
                let run = simulate(&DetectionRun::from_law(grid.clone(), law.clone(), 20_000, s, 20).unwrap()).unwrap();
                gof(&run).unwrap().p_value < 0.1
            })
            .count();
        assert!((2..=30).contains(&low), "{low} of 100 seeds below 0.1");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn counts_and_expectation_totals(n in 1u64..5000, bins in 1usize..40, seed in any::<u64>()) {
            let run = simulate(&flat(n, bins, seed)).unwrap();
            prop_assert_eq!(run.histogram.iter().sum::<u64>(), n);
            prop_assert!((run.expected.iter().sum::<f64>() - n as f64).abs() < 1e-9 * n as f64);
            prop_assert_eq!(simulate(&flat(n, bins, seed)).unwrap().histogram, run.histogram);
        }
    }
}
