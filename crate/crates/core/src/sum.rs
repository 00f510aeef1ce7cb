//! Compensated and reproducible summation.
//!
//! Large sums (pair sums over a grid) are cut into fixed-size chunks. Each
//! chunk is reduced with Neumaier compensation and the partials are combined
//! in chunk order, so the result does not depend on how many threads ran.

/// Chunk length used by every chunked reduction in the crate.
pub const CHUNK: usize = 512;

/// Execution policy for data-parallel loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, sequential otherwise.
    #[default]
    Parallel,
}

/// Running Neumaier sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
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

/// Compensated sum of a slice.
pub fn sum(values: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated sum of `term(i)` for `i in 0..len`, computed chunk by chunk.
///
/// Bit-identical under both execution policies.
pub fn chunked_sum<F>(len: usize, exec: Exec, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let mut acc = Neumaier::new();
        for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
            acc.add(term(i));
        }
        acc.value()
    };
    let partials = map_indices(chunks, exec, partial);
    sum(&partials)
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub fn map_indices<T, F>(len: usize, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel if len > 1 => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(sum(&v), 2.0);
        assert_eq!(v.iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn policies_agree_bitwise() {
        let term = |i: usize| ((i as f64) * 0.37).sin() * 1e-3 + 1.0 / (1.0 + i as f64);
        let a = chunked_sum(10_000, Exec::Sequential, term);
        let b = chunked_sum(10_000, Exec::Parallel, term);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(chunked_sum(0, Exec::Parallel, |_| 1.0), 0.0);
        assert_eq!(sum(&[]), 0.0);
    }
}
