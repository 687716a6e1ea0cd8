//! Uniform tensor grids on `T^d` and the d-dimensional FFT over them.
//!
//! Spectral arrays are stored flat in row-major order with `m` points per
//! axis; index `j` along an axis holds wave number `j` for `j <= m/2` and
//! `j - m` above that (standard FFT ordering). Physical samples are
//! `u(x_j) = sum_k u_k exp(i <x_j, k>)` with `x_j = 2 pi j / m`.

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::Frequency;

#[derive(Clone)]
pub struct GridTransform {
    dim: usize,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl GridTransform {
    pub fn new(dim: usize, points: usize) -> Self {
        assert!(dim >= 1 && points >= 1);
        let mut planner = FftPlanner::new();
        GridTransform {
            dim,
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat array index of wave vector `k` (aliased modulo the grid size).
    pub fn index_of(&self, k: &Frequency) -> usize {
        let m = self.points as i64;
        k.components()
            .iter()
            .fold(0usize, |acc, &c| acc * self.points + c.rem_euclid(m) as usize)
    }

    /// Signed wave vector stored at a flat index.
    pub fn frequency_at(&self, mut index: usize) -> Frequency {
        let m = self.points;
        let mut comps = vec![0i64; self.dim];
        for slot in comps.iter_mut().rev() {
            let j = index % m;
            index /= m;
            *slot = if j <= m / 2 { j as i64 } else { j as i64 - m as i64 };
        }
        Frequency::new(comps)
    }

    /// Grid point coordinates for a flat index.
    pub fn point_at(&self, mut index: usize) -> Vec<f64> {
        let m = self.points;
        let h = 2.0 * std::f64::consts::PI / m as f64;
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = (index % m) as f64 * h;
            index /= m;
        }
        x
    }

    /// Spectral coefficients to physical samples (unnormalized inverse DFT).
    pub fn to_physical(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    /// Physical samples to spectral coefficients (DFT scaled by `1/m^d`).
    pub fn to_spectral(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
        let scale = 1.0 / self.len() as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len());
        let m = self.points;
        if self.dim == 1 {
            fft.process(data);
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..self.dim {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            let block = stride * m;
            for outer in (0..data.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = data[base + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, z) in line.iter().enumerate() {
                        data[base + j * stride] = *z;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = GridTransform::new(2, 7);
        for idx in 0..g.len() {
            let k = g.frequency_at(idx);
            assert_eq!(g.index_of(&k), idx);
        }
    }

    #[test]
    fn transform_roundtrip_2d() {
        let g = GridTransform::new(2, 6);
        let mut data: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let orig = data.clone();
        g.to_spectral(&mut data);
        g.to_physical(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_mode_samples() {
        let g = GridTransform::new(2, 8);
        let k = Frequency::from([1, -2]);
        let mut data = vec![Complex64::new(0.0, 0.0); g.len()];
        data[g.index_of(&k)] = Complex64::new(1.0, 0.0);
        g.to_physical(&mut data);
        for (i, z) in data.iter().enumerate() {
            let x = g.point_at(i);
            let expect = Complex64::from_polar(1.0, k.dot(&x));
            assert!((z - expect).norm() < 1e-12);
        }
    }
}
