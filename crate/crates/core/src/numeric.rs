//! Small numerical helpers shared across modules.

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Composite trapezoid rule over a possibly non-uniform grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let mut s = NeumaierSum::default();
    for i in 1..x.len() {
        s.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
    }
    s.value()
}

/// `points` equally spaced values from `lo` to `hi` inclusive; symmetric
/// ranges hit zero exactly at the midpoint.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let last = (points - 1) as f64;
            (0..points)
                .map(|i| {
                    let t = i as f64 / last;
                    lo * (1.0 - t) + hi * t
                })
                .collect()
        }
    }
}

/// Shortest round-trip decimal, switching to exponent form outside `[1e-5, 1e16)`.
/// Non-finite values become `null`.
pub fn fmt_real(x: f64) -> String {
    if !x.is_finite() {
        "null".into()
    } else if x == 0.0 || (1e-5..1e16).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_keeps_small_terms() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn sinc_series_matches_direct() {
        for x in [1e-5, 9.9e-5, 1e-4, 0.3, -2.0] {
            assert!((sinc(x) - if x.abs() < 1e-3 { 1.0 - x * x / 6.0 } else { x.sin() / x }).abs() < 1e-12);
        }
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn trapezoid_exact_for_lines() {
        let x = linspace(-1.0, 3.0, 7);
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t + 1.0).collect();
        assert!((trapezoid(&x, &y) - 12.0).abs() < 1e-14);
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn real_formatting_round_trips() {
        for x in [0.1, -2.5e-7, 1e300, 123456.789, 1.0 / 3.0, -0.0] {
            assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_real(1e-300), "1e-300");
        assert_eq!(fmt_real(f64::NAN), "null");
    }
}
