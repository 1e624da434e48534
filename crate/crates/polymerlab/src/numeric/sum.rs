//! Neumaier-compensated summation.
//!
//! Lattice sweeps in this crate add up millions of nonnegative terms that
//! span many orders of magnitude; plain left-to-right `f64` addition loses
//! digits we rely on.  The Kahan–Babuška–Neumaier scheme keeps a running
//! compensation term and recovers near-exact sums at the cost of a couple
//! of extra flops per element.

/// Running compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add one term.
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of an iterator of `f64` terms.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in terms {
        acc.add(x);
    }
    acc.total()
}
