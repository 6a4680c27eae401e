//! Seeded PCG32 (XSH-RR 64/32) generator with Box–Muller normals.
//!
//! Output depends only on the seed, so runs reproduce across platforms.

use std::f64::consts::PI;

use super::dense::DenseMatrix;

const PCG_MULTIPLIER: u64 = 6_364_136_223_846_793_005;
/// Fixed stream selector; the increment is `(STREAM << 1) | 1`.
const PCG_STREAM: u64 = 1_442_695_040_888_963_407;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededRng {
    state: u64,
    inc: u64,
}

impl SeededRng {
    /// Seeds the generator the same way as the reference `pcg32_srandom_r`.
    pub fn new(seed: u64) -> Self {
        let mut rng = Self {
            state: 0,
            inc: (PCG_STREAM << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(seed);
        rng.next_u32();
        rng
    }

    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.state = old.wrapping_mul(PCG_MULTIPLIER).wrapping_add(self.inc);
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let hi = u64::from(self.next_u32());
        let lo = u64::from(self.next_u32());
        (hi << 32) | lo
    }

    /// Uniform on `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, bound)`, unbiased (rejection on the low zone).
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below(0)");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    /// Uniform on `[lo, hi]`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// One Box–Muller pair `(r cos θ, r sin θ)`.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        // 1 - u lies in (0, 1], so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * PI * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Fills a `rows × cols` matrix with i.i.d. standard normals in row-major
/// order, consuming both outputs of every Box–Muller pair.
pub fn sample_standard_normal(rng: &mut SeededRng, rows: usize, cols: usize) -> DenseMatrix {
    let n = rows * cols;
    let mut data = Vec::with_capacity(n);
    while data.len() + 1 < n {
        let (a, b) = rng.normal_pair();
        data.push(a);
        data.push(b);
    }
    if data.len() < n {
        data.push(rng.normal_pair().0);
    }
    DenseMatrix::new(rows, cols, data).expect("length matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = SeededRng::new(42);
        let mut b = SeededRng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u32(), b.next_u32());
        }
        assert_ne!(SeededRng::new(1).next_u64(), SeededRng::new(2).next_u64());
    }

    #[test]
    fn matches_reference_pcg32_output() {
        // First outputs of pcg32 seeded with (42, 54) in the reference C
        // implementation; checks the XSH-RR output permutation.
        let mut rng = SeededRng {
            state: 0,
            inc: (54u64 << 1) | 1,
        };
        rng.next_u32();
        rng.state = rng.state.wrapping_add(42);
        rng.next_u32();
        let got: Vec<u32> = (0..6).map(|_| rng.next_u32()).collect();
        assert_eq!(
            got,
            [0xa15c02b7, 0x7b47f409, 0xba1d3330, 0x83d2f293, 0xbfa4784b, 0xcbed606e]
        );
    }

    #[test]
    fn unit_interval_bounds() {
        let mut rng = SeededRng::new(7);
        for _ in 0..10_000 {
            let u = rng.next_f64();
            assert!((0.0..1.0).contains(&u));
        }
    }

    #[test]
    fn below_stays_in_range() {
        let mut rng = SeededRng::new(3);
        let mut seen = [false; 5];
        for _ in 0..1000 {
            seen[rng.below(5) as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn normal_draws_are_reproducible() {
        let a = sample_standard_normal(&mut SeededRng::new(9), 3, 5);
        let b = sample_standard_normal(&mut SeededRng::new(9), 3, 5);
        assert_eq!(a, b);
        assert_eq!(a.shape(), (3, 5));
    }

    #[test]
    fn empty_normal_request() {
        let m = sample_standard_normal(&mut SeededRng::new(0), 0, 0);
        assert_eq!(m.shape(), (0, 0));
    }

    #[test]
    fn normal_moments() {
        let m = sample_standard_normal(&mut SeededRng::new(2024), 1000, 100);
        let n = m.as_slice().len() as f64;
        let mean = m.as_slice().iter().sum::<f64>() / n;
        let var = m.as_slice().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }
}
