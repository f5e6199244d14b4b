//! Deterministic sample generation.
//!
//! Every sweep draws from a ChaCha8 stream seeded explicitly, so a fixed
//! seed reproduces the same points, fibers, disk points and tangent
//! vectors on every platform.

use nalgebra::Vector4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bivector::FiberVector3;
use crate::error::{Error, Result};
use crate::geometry::{ChartBounds, Point4};

/// Fiber coordinates `y2, y3` are drawn from `[-FIBER_RANGE, FIBER_RANGE]`.
pub const FIBER_RANGE: f64 = 2.0;

/// Disk samples stay inside `|z| ≤ 1 - DISK_GUARD`.
pub const DISK_GUARD: f64 = 1e-3;

/// Points are drawn from the box shrunk by this fraction on every side so
/// that finite-difference stencils stay close to the chart.
pub const INTERIOR_MARGIN: f64 = 0.02;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..=hi)
    }

    pub fn point(&mut self, bounds: &ChartBounds) -> Point4 {
        Point4(std::array::from_fn(|i| {
            let pad = INTERIOR_MARGIN * (bounds.hi[i] - bounds.lo[i]);
            self.uniform(bounds.lo[i] + pad, bounds.hi[i] - pad)
        }))
    }

    /// A point of the upper hyperboloid sheet `y1 > 0`.
    pub fn fiber(&mut self) -> FiberVector3 {
        let y2 = self.uniform(-FIBER_RANGE, FIBER_RANGE);
        let y3 = self.uniform(-FIBER_RANGE, FIBER_RANGE);
        FiberVector3::new((1.0 + y2 * y2 + y3 * y3).sqrt(), y2, y3)
    }

    /// A vector in the tangent plane of the hyperboloid at `y`.
    pub fn fiber_tangent(&mut self, y: &FiberVector3) -> FiberVector3 {
        let v2 = self.uniform(-1.0, 1.0);
        let v3 = self.uniform(-1.0, 1.0);
        FiberVector3::new((y[1] * v2 + y[2] * v3) / y[0], v2, v3)
    }

    pub fn vector(&mut self) -> Vector4<f64> {
        Vector4::from_fn(|_, _| self.uniform(-1.0, 1.0))
    }

    /// Uniform (by area) in the guarded unit disk.
    pub fn disk(&mut self) -> Complex64 {
        let r_max = 1.0 - DISK_GUARD;
        let r = r_max * self.uniform(0.0, 1.0).sqrt();
        let theta = self.uniform(0.0, std::f64::consts::TAU);
        Complex64::from_polar(r, theta)
    }
}

/// `n` points uniformly distributed in the chart interior.
pub fn sample_points(bounds: &ChartBounds, n: usize, seed: u64) -> Result<Vec<Point4>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    if bounds.is_empty() {
        return Err(Error::EmptyChart(format!("{:?} .. {:?}", bounds.lo, bounds.hi)));
    }
    let mut sampler = Sampler::new(seed);
    Ok((0..n).map(|_| sampler.point(bounds)).collect())
}
