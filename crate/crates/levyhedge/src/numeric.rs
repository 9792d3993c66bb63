//! Small numerical helpers: compensated summation, sample statistics, grids.

/// Neumaier-compensated accumulator. Order-independent reductions over large
/// Monte-Carlo batches go through this so that results do not depend on how
/// work was chunked.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator.
pub fn sum_compensated<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Sample mean, unbiased variance, and standard error of the mean.
#[derive(Debug, Clone, Copy)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub std_err: f64,
}

/// Two-pass compensated statistics. `values` must be non-empty.
pub fn sample_stats(values: &[f64]) -> SampleStats {
    let n = values.len();
    assert!(n > 0, "sample_stats on empty slice");
    let mean = sum_compensated(values.iter().copied()) / n as f64;
    if n == 1 {
        return SampleStats {
            n,
            mean,
            var: 0.0,
            std_err: 0.0,
        };
    }
    let ss = sum_compensated(values.iter().map(|&v| (v - mean) * (v - mean)));
    let var = (ss / (n - 1) as f64).max(0.0);
    SampleStats {
        n,
        mean,
        var,
        std_err: (var / n as f64).sqrt(),
    }
}

/// `n` evenly spaced points from `a` to `b` inclusive, endpoints exact.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
    out[0] = a;
    out[n - 1] = b;
    out
}

/// Standard error of a Bernoulli rate estimate.
pub fn binomial_se(p_hat: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p_hat * (1.0 - p_hat) / n as f64).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        s.add(1e100);
        s.add(1.0);
        s.add(-1e100);
        assert_eq!(s.value(), 2.0);
    }

    #[test]
    fn linspace_endpoints_exact() {
        let g = linspace(0.0, 2.0, 81);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[80], 2.0);
        assert_eq!(g.len(), 81);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn stats_match_hand_values() {
        let s = sample_stats(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.var - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.std_err - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
    }
}
