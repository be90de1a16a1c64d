//! Reproducible random streams.
//!
//! A stream is identified by `(seed, stream index)`. Uniforms come from a
//! ChaCha8 block counter keyed by the seed with the stream index selecting
//! one of 2⁶⁴ independent nonces; normals use the Box–Muller transform with
//! `libm` transcendentals so sequences do not depend on the platform's libm.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream-index namespaces. Independent experiments in one run draw from
/// disjoint index ranges: `domain << 40 | block`.
pub mod domain {
    pub const STATES: u64 = 1;
    pub const MOMENTS: u64 = 2;
    pub const SUBSPACE: u64 = 3;
    pub const TYPICALITY: u64 = 4;
    pub const LIPSCHITZ: u64 = 5;
    pub const AVERAGE_STATE: u64 = 6;
    pub const MODEL: u64 = 7;
    pub const SPHERE: u64 = 8;
    pub const CAP: u64 = 9;
    pub const BELT: u64 = 10;
    pub const LEVY_MEDIAN: u64 = 11;
    pub const LEVY_TAIL: u64 = 12;
    pub const NORMS: u64 = 13;

    pub const fn base(tag: u64) -> u64 {
        tag << 40
    }
}

const TWO_PI: f64 = std::f64::consts::TAU;
const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
            spare: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform on `(0, 1]`.
    fn uniform_open_low(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Two independent standard normals.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open_low();
        let u2 = self.uniform();
        let r = (-2.0 * libm::log(u1)).sqrt();
        let (s, c) = libm::sincos(TWO_PI * u2);
        (r * c, r * s)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = self.normal_pair();
        self.spare = Some(b);
        a
    }

    /// `x + iy` with `x, y` independent standard normals.
    pub fn complex_normal(&mut self) -> Complex64 {
        let (x, y) = self.normal_pair();
        Complex64::new(x, y)
    }

    /// Uniform integer in `0..n` (Lemire-style rejection, unbiased).
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }
}
