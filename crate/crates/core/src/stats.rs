//! Order-insensitive accumulation helpers.

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &KahanSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum(values: &[f64]) -> f64 {
    values.iter().copied().collect::<KahanSum>().value()
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    compensated_sum(values) / values.len() as f64
}

/// Running sample mean and standard error, built from compensated sums of
/// `x` and `x²`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAccumulator {
    n: usize,
    sum: KahanSum,
    sum_sq: KahanSum,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn merge(&mut self, other: &MeanAccumulator) {
        self.n += other.n;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum.value() / self.n as f64
        }
    }

    /// Standard error of the mean; zero for fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let mean = self.mean();
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Mean and standard error of a slice (sample variance, `n - 1`).
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = compensated_mean(values);
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .collect::<KahanSum>()
        .value()
        / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut v = vec![1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(&v), 1.0);
        v.reverse();
        assert_eq!(compensated_sum(&v), 1.0);
    }

    #[test]
    fn single_sample_has_zero_stderr() {
        let (m, s) = mean_and_stderr(&[3.5]);
        assert_eq!(m, 3.5);
        assert_eq!(s, 0.0);
        let mut acc = MeanAccumulator::new();
        acc.add(3.5);
        assert_eq!(acc.stderr(), 0.0);
    }

    #[test]
    fn accumulator_matches_two_pass() {
        let xs: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let mut acc = MeanAccumulator::new();
        xs.iter().for_each(|&x| acc.add(x));
        let (m, s) = mean_and_stderr(&xs);
        assert!((acc.mean() - m).abs() < 1e-14);
        assert!((acc.stderr() - s).abs() < 1e-12);
    }
}
