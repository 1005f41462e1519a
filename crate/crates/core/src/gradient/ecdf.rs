use crate::num::Real;

/// Right-continuous empirical CDF: `cdf(x)` is the fraction of samples `<= x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf<R> {
    sorted: Vec<R>,
}

impl<R: Real> Ecdf<R> {
    pub fn new(mut samples: Vec<R>) -> Self {
        samples.sort_by(R::cmp_total);
        Self { sorted: samples }
    }

    pub fn from_counts(counts: &[u64]) -> Self {
        Self::new(counts.iter().map(|&c| R::from_count(c)).collect())
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples at most `x`; 0 for an empty sample.
    pub fn cdf(&self, x: R) -> R {
        if self.sorted.is_empty() {
            return R::zero();
        }
        let at_most = self.sorted.partition_point(|&v| v <= x);
        R::from_count(at_most as u64) / R::from_count(self.sorted.len() as u64)
    }

    /// Number of samples strictly below `x`.
    pub fn count_below(&self, x: R) -> usize {
        self.sorted.partition_point(|&v| v < x)
    }

    pub fn max(&self) -> Option<R> {
        self.sorted.last().copied()
    }

    pub fn min(&self) -> Option<R> {
        self.sorted.first().copied()
    }

    pub fn samples(&self) -> &[R] {
        &self.sorted
    }
}

/// Lower median: the element at index `(n - 1) / 2` of the sorted values,
/// so the result is always one of the inputs.
pub fn lower_median<R: Real>(values: &[R]) -> Option<R> {
    if values.is_empty() {
        return None;
    }
    let mut buf = values.to_vec();
    let mid = (buf.len() - 1) / 2;
    let (_, m, _) = buf.select_nth_unstable_by(mid, R::cmp_total);
    Some(*m)
}
