//! Discrete Fourier machinery on the periodic grid.
//!
//! The continuous transform `f̂(ξ) = ∫ f(x) e^{-2πi ξ·x} dx` is approximated by
//! `h^n · DFT(f)[k]` at the lattice frequencies `ξ = k / L`, with
//! `k ∈ {-N/2, …, N/2-1}^n`. The frequency cell volume is `Δξ = L^{-n}`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::grid::{signed_offset, GridFunction};
use crate::params::SolverParams;

/// Unnormalized n-dimensional DFT over the full lattice.
pub struct NdFft {
    params: SolverParams,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl NdFft {
    pub fn new(params: &SolverParams) -> Self {
        let mut planner = FftPlanner::new();
        let size = params.grid_size();
        Self {
            params: *params,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse transform including the `1/N^n` normalization; returns the real part.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, true);
        let scale = 1.0 / self.params.node_count() as f64;
        data.into_iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        let size = self.params.grid_size();
        let n = self.params.dim();
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis: contiguous rows
        fft.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::new(0.0, 0.0); size];
        for axis in 0..n - 1 {
            let stride = size.pow((n - 1 - axis) as u32);
            let block = stride * size;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Norm `|ξ|` (cycles per unit length) at every flat frequency index.
pub fn frequency_norms(params: &SolverParams) -> Vec<f64> {
    let inv_l = 1.0 / params.box_length();
    (0..params.node_count())
        .map(|i| {
            let k = signed_offset(params, i);
            let k2: f64 = k.iter().take(params.dim()).map(|&v| (v * v) as f64).sum();
            k2.sqrt() * inv_l
        })
        .collect()
}

/// `h^n · DFT(f)`: samples of the continuous transform at the lattice frequencies.
pub fn transform(f: &GridFunction) -> Vec<Complex64> {
    let params = f.params();
    let cell = params.cell_volume();
    let mut spec = NdFft::new(params).forward_real(f.values());
    for c in &mut spec {
        *c *= cell;
    }
    spec
}

/// Applies a real radial multiplier `symbol(|ξ|)` and transforms back.
pub fn apply_radial_multiplier(f: &GridFunction, symbol: impl Fn(f64) -> f64) -> Vec<f64> {
    let params = f.params();
    let fft = NdFft::new(params);
    let mut spec = fft.forward_real(f.values());
    for (c, xi) in spec.iter_mut().zip(frequency_norms(params)) {
        *c *= symbol(xi);
    }
    fft.inverse_real(spec)
}

/// Frequency-domain quadrature `Σ_ξ w(|ξ|) |f̂(ξ)|² Δξ` over ξ ≠ 0.
pub fn weighted_energy(f: &GridFunction, weight: impl Fn(usize, f64) -> f64) -> f64 {
    let params = f.params();
    let dxi = params.box_length().powi(-(params.dim() as i32));
    transform(f)
        .iter()
        .zip(frequency_norms(params))
        .enumerate()
        .filter(|(_, (_, xi))| *xi > 0.0)
        .map(|(i, (c, xi))| weight(i, xi) * c.norm_sqr())
        .sum::<f64>()
        * dxi
}
