//! Per-trial random streams.
//!
//! Every trial gets its own ChaCha8 stream selected by `(seed, trial_index)`,
//! so a trial's draws do not depend on how trials are scheduled across threads.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn new(seed: u64, trial_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial_index);
        TrialRng(rng)
    }

    /// Uniform on `(0, 1]` with 53 random bits.
    fn uniform_open_closed(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[0, 1)`.
    fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `CN(0, 1)`: real and imaginary parts independent `N(0, 1/2)`, by Box–Muller.
    pub fn standard_complex(&mut self) -> Complex64 {
        let r = (-self.uniform_open_closed().ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * self.uniform()).sin_cos();
        Complex64::new(r * c, r * s)
    }

    /// `CN(0, var)`.
    pub fn complex_normal(&mut self, var: f64) -> Complex64 {
        self.standard_complex() * var.sqrt()
    }

    pub fn complex_vector(&mut self, n: usize, var: f64) -> Vec<Complex64> {
        (0..n).map(|_| self.complex_normal(var)).collect()
    }
}
