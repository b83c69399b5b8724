//! Fractional Laplacian and Riesz potentials on the periodic grid.
//!
//! One operator `Δˢ` is used throughout: its symbol is `+(2π|ξ|)^{2s}`, and the
//! singular-integral form carries the sign that makes both definitions agree,
//! `Δˢf(x) = −c_δ ∫ [f(x+y) − 2f(x) + f(x−y)] / |y|^{n+2s} dy`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::constants::{c_delta, c_riesz, sphere_area};
use crate::quadrature::{taper, GaussLegendre};
use crate::error::{Error, Result};
use crate::grid::{signed_offset, GridFunction};
use crate::params::{check_order, SolverParams};
use crate::spectral::{frequency_norms, NdFft};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MultiplierKind {
    FracLaplacian { s: f64 },
    Riesz { sigma: f64 },
}

/// Radial Fourier multiplier sampled on the lattice. The symbol is zero at ξ = 0.
#[derive(Clone, Debug)]
pub struct MultiplierOp {
    kind: MultiplierKind,
    params: SolverParams,
    symbol: Vec<f64>,
}

impl MultiplierOp {
    pub fn frac_laplacian(params: &SolverParams, s: f64) -> Result<Self> {
        check_order(s)?;
        Ok(Self::from_radial(params, MultiplierKind::FracLaplacian { s }, |xi| {
            (2.0 * PI * xi).powf(2.0 * s)
        }))
    }

    pub fn riesz(params: &SolverParams, sigma: f64) -> Result<Self> {
        check_riesz_order(params.dim(), sigma)?;
        Ok(Self::from_radial(params, MultiplierKind::Riesz { sigma }, |xi| {
            (2.0 * PI * xi).powf(-sigma)
        }))
    }

    fn from_radial(params: &SolverParams, kind: MultiplierKind, f: impl Fn(f64) -> f64) -> Self {
        let symbol = frequency_norms(params)
            .into_iter()
            .map(|xi| if xi > 0.0 { f(xi) } else { 0.0 })
            .collect();
        Self {
            kind,
            params: *params,
            symbol,
        }
    }

    pub fn kind(&self) -> MultiplierKind {
        self.kind
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if !self.params.same_grid(f.params()) {
            return Err(Error::InvalidArgument("multiplier built for a different grid".into()));
        }
        apply_symbol(f, &self.symbol)
    }
}

fn apply_symbol(f: &GridFunction, symbol: &[f64]) -> Result<GridFunction> {
    let fft = NdFft::new(f.params());
    let mut spec = fft.forward_real(f.values());
    for (c, w) in spec.iter_mut().zip(symbol) {
        *c *= *w;
    }
    GridFunction::new(*f.params(), fft.inverse_real(spec))
}

fn check_riesz_order(n: usize, sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma < n as f64 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "Riesz order {sigma} outside (0, {n})"
        )))
    }
}

/// `Δˢf` through the multiplier `(2π|ξ|)^{2s}`.
pub fn delta_s_fourier(f: &GridFunction, s: f64) -> Result<GridFunction> {
    MultiplierOp::frac_laplacian(f.params(), s)?.apply(f)
}

/// `I_σ f` through the multiplier `(2π|ξ|)^{-σ}`; rejects inputs whose mean
/// exceeds `1e-10` times their RMS value.
pub fn riesz_fourier(f: &GridFunction, sigma: f64) -> Result<GridFunction> {
    let rms = (f.values().iter().map(|v| v * v).sum::<f64>() / f.values().len() as f64).sqrt();
    if f.mean().abs() > 1e-10 * rms {
        return Err(Error::InvalidArgument(format!(
            "Riesz potential needs a zero-mean input (mean {:e}, rms {:e})",
            f.mean(),
            rms
        )));
    }
    MultiplierOp::riesz(f.params(), sigma)?.apply(f)
}

/// Minimum-image lattice weights `h^n |y|^q` over the cube `[-L/2, L/2]^n`,
/// with trapezoid half-weights on the faces and zero at `y = 0`.
fn power_lattice(params: &SolverParams, q: f64) -> Vec<f64> {
    let n = params.dim();
    let half = params.grid_size() as isize / 2;
    let h = params.spacing();
    let cell = params.cell_volume();
    let span = (2 * half + 1) as usize;
    let mut weights = vec![0.0; params.node_count()];
    for flat in 0..span.pow(n as u32) {
        let mut rest = flat;
        let mut j = [0isize; 3];
        for slot in j.iter_mut().take(n) {
            *slot = (rest % span) as isize - half;
            rest /= span;
        }
        let r2 = j.iter().map(|&c| (c * c) as f64).sum::<f64>() * h * h;
        if r2 == 0.0 {
            continue;
        }
        let trap: f64 = j
            .iter()
            .take(n)
            .map(|&c| if c.abs() == half { 0.5 } else { 1.0 })
            .product();
        weights[crate::grid::flat_index(params, &j)] += trap * cell * r2.powf(q / 2.0);
    }
    weights
}

/// `ω ∫_0^∞ χ(r) r^{e-1} dr` for the taper `χ` switching off on `[a, b]`, `e > 0`.
fn tapered_moment(n: usize, e: f64, a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::new(64);
    let breaks: Vec<f64> = (0..=16).map(|i| a + (b - a) * i as f64 / 16.0).collect();
    sphere_area(n) * (a.powf(e) / e + gl.integrate_panels(&breaks, |r| taper(r, a, b) * r.powf(e - 1.0)))
}

/// Symbol of the five-point (seven-point in 3-D) discrete Laplacian.
fn discrete_laplacian_symbol(params: &SolverParams, i: usize) -> f64 {
    let k = signed_offset(params, i);
    let size = params.grid_size() as f64;
    let h = params.spacing();
    k.iter()
        .take(params.dim())
        .map(|&c| (2.0 * (2.0 * PI * c as f64 / size).cos() - 2.0) / (h * h))
        .sum()
}

/// Tapered lattice weights `h^n χ(|y|) |y|^q` folded onto torus offsets.
/// Returns `(Σ w, Σ w |y|², weights)`, excluding `y = 0`.
fn tapered_lattice(params: &SolverParams, q: f64, a: f64, b: f64) -> (f64, f64, Vec<f64>) {
    let n = params.dim();
    let h = params.spacing();
    let cell = params.cell_volume();
    let reach = (b / h).ceil() as isize;
    let span = (2 * reach + 1) as usize;
    let mut weights = vec![0.0; params.node_count()];
    let (mut s0, mut s2) = (0.0, 0.0);
    for flat in 0..span.pow(n as u32) {
        let mut rest = flat;
        let mut j = [0isize; 3];
        for slot in j.iter_mut().take(n) {
            *slot = (rest % span) as isize - reach;
            rest /= span;
        }
        let r2 = j.iter().map(|&c| (c * c) as f64).sum::<f64>() * h * h;
        if r2 == 0.0 || r2 >= b * b {
            continue;
        }
        let w = cell * taper(r2.sqrt(), a, b) * r2.powf(q / 2.0);
        s0 += w;
        s2 += w * r2;
        weights[crate::grid::flat_index(params, &j)] += w;
    }
    (s0, s2, weights)
}

/// `Δˢf` by quadrature of the second-difference singular integral.
///
/// The kernel is split with a smooth radial taper that switches off between
/// `L/4` and `13L/2`. The tapered part is summed on the lattice, folding
/// periodic images onto the torus, with the lattice defect of the quadratic
/// Taylor term restored through the discrete Laplacian. The remainder is
/// smooth and slowly varying, so it sees `f` only through `2(mean f − f(x))`
/// against its exact mass. The periodic convolution is evaluated with FFTs.
pub fn delta_s_singular(f: &GridFunction, s: f64) -> Result<GridFunction> {
    check_order(s)?;
    let params = *f.params();
    let n = params.dim();
    let q = -(n as f64) - 2.0 * s;
    let (inner, outer) = (params.box_length() / 4.0, 6.5 * params.box_length());
    let (total, second, weights) = tapered_lattice(&params, q, inner, outer);

    let taylor = (tapered_moment(n, 2.0 - 2.0 * s, inner, outer) - second) / n as f64;
    let gl = GaussLegendre::new(64);
    let breaks: Vec<f64> = (0..=16).map(|i| inner + (outer - inner) * i as f64 / 16.0).collect();
    let exterior = sphere_area(n)
        * (outer.powf(-2.0 * s) / (2.0 * s)
            + gl.integrate_panels(&breaks, |r| (1.0 - taper(r, inner, outer)) * r.powf(-1.0 - 2.0 * s)));
    let c = c_delta(n, s);

    let fft = NdFft::new(&params);
    let w_hat = fft.forward_real(&weights);
    let symbol: Vec<f64> = w_hat
        .iter()
        .enumerate()
        .map(|(i, wk)| {
            if i == 0 {
                return 0.0;
            }
            let lap = discrete_laplacian_symbol(&params, i);
            -c * (2.0 * wk.re - 2.0 * total + taylor * lap - 2.0 * exterior)
        })
        .collect();
    apply_symbol(f, &symbol)
}

/// `I_σ f = Γ_σ ∗ f` by direct kernel quadrature, `Γ_σ(x) = c |x|^{-(n-σ)}`.
///
/// Uses minimum-image offsets within the cube `[-L/2, L/2]^n` and neglects all
/// further periodic images. The lattice defects of the constant and quadratic
/// Taylor terms at the singularity are measured on a smoothly tapered copy of
/// the kernel; they set the origin weight and a discrete-Laplacian correction.
pub fn riesz_kernel(f: &GridFunction, sigma: f64) -> Result<GridFunction> {
    let params = *f.params();
    let n = params.dim();
    check_riesz_order(n, sigma)?;
    let q = sigma - n as f64;
    let mut weights = power_lattice(&params, q);
    let (inner, outer) = (params.box_length() / 16.0, params.box_length() / 4.0);
    let (total, second, _) = tapered_lattice(&params, q, inner, outer);
    weights[0] = tapered_moment(n, sigma, inner, outer) - total;
    let taylor = 0.5 * (tapered_moment(n, sigma + 2.0, inner, outer) - second) / n as f64;
    let c = c_riesz(n, sigma);

    let fft = NdFft::new(&params);
    let w_hat: Vec<Complex64> = fft.forward_real(&weights);
    let symbol: Vec<f64> = w_hat
        .iter()
        .enumerate()
        .map(|(i, wk)| c * (wk.re + taylor * discrete_laplacian_symbol(&params, i)))
        .collect();
    apply_symbol(f, &symbol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp_norms::{dual_pairing, hs_norm_angular, LPFilterBank};

    fn params(n: usize, size: usize, l: f64) -> SolverParams {
        SolverParams::new(n, 0.5, size, l).unwrap()
    }

    fn gauss(p: SolverParams, c: [f64; 3], w: f64) -> GridFunction {
        GridFunction::from_fn(p, |x| {
            let r2: f64 = (0..p.dim()).map(|a| (x[a] - c[a]).powi(2)).sum();
            (-r2 / (2.0 * w * w)).exp()
        })
        .unwrap()
    }

    fn rel_l2(a: &GridFunction, b: &GridFunction) -> f64 {
        a.combine(1.0, b, -1.0).unwrap().l2_norm() / b.l2_norm()
    }

    #[test]
    fn constant_maps_to_zero() {
        let p = params(2, 32, 4.0);
        let c = GridFunction::from_fn(p, |_| 3.7).unwrap();
        for s in [0.2, 0.5, 0.9] {
            assert!(delta_s_fourier(&c, s).unwrap().max_abs() < 1e-12);
            assert!(delta_s_singular(&c, s).unwrap().max_abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_is_an_eigenfunction() {
        let p = params(2, 32, 4.0);
        let l = p.box_length();
        let k = [2.0, -1.0];
        let f = GridFunction::from_fn(p, |x| (2.0 * PI * (k[0] * x[0] + k[1] * x[1]) / l).cos())
            .unwrap();
        let s = 0.35;
        let lam = (2.0 * PI * (5f64).sqrt() / l).powf(2.0 * s);
        let out = delta_s_fourier(&f, s).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - lam * b).abs() < 1e-12);
        }
        let sigma = 0.8;
        let out = riesz_fourier(&f, sigma).unwrap();
        let mu = (2.0 * PI * (5f64).sqrt() / l).powf(-sigma);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - mu * b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_form_agrees_on_a_low_mode() {
        let p = params(2, 64, 4.0);
        let l = p.box_length();
        let f = GridFunction::from_fn(p, |x| (2.0 * PI * (x[0] + 2.0 * x[1]) / l).sin()).unwrap();
        for s in [0.25, 0.5, 0.75] {
            let a = delta_s_singular(&f, s).unwrap();
            let b = delta_s_fourier(&f, s).unwrap();
            assert!(rel_l2(&a, &b) < 1e-2, "s = {s}: {}", rel_l2(&a, &b));
        }
    }

    #[test]
    fn singular_form_is_linear() {
        let p = params(2, 32, 4.0);
        let f = gauss(p, [2.0, 2.0, 0.0], 0.3);
        let g = gauss(p, [1.5, 2.5, 0.0], 0.5);
        let combo = f.combine(2.0, &g, -0.5).unwrap();
        let lhs = delta_s_singular(&combo, 0.4).unwrap();
        let rhs = delta_s_singular(&f, 0.4)
            .unwrap()
            .combine(2.0, &delta_s_singular(&g, 0.4).unwrap(), -0.5)
            .unwrap();
        assert!(rel_l2(&lhs, &rhs) < 1e-13);
    }

    #[test]
    fn riesz_rejects_bad_input() {
        let p = params(2, 32, 4.0);
        let f = gauss(p, [2.0, 2.0, 0.0], 0.3);
        assert!(riesz_fourier(&f, 1.0).is_err());
        assert!(riesz_fourier(&f.centered(), 2.0).is_err());
        assert!(riesz_kernel(&f.centered(), 2.0).is_err());
        assert!(riesz_kernel(&f.centered(), 0.0).is_err());
        assert!(delta_s_fourier(&f, 1.0).is_err());
    }

    #[test]
    fn riesz_kernel_of_zero_is_zero() {
        let p = params(2, 32, 4.0);
        let z = GridFunction::zeros(p);
        assert_eq!(riesz_kernel(&z, 1.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn inverse_pair_round_trip() {
        let p = params(3, 16, 3.0);
        let f = gauss(p, [1.5, 1.4, 1.6], 0.4).centered();
        let s = 0.3;
        let back = delta_s_fourier(&riesz_fourier(&f, 2.0 * s).unwrap(), s).unwrap();
        assert!(back.combine(1.0, &f, -1.0).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn fourier_laplacian_is_symmetric_in_the_pairing() {
        let p = params(2, 32, 4.0);
        let bank = LPFilterBank::new(&p);
        let f = gauss(p, [2.0, 2.0, 0.0], 0.3);
        let g = gauss(p, [1.7, 2.4, 0.0], 0.45);
        let a = dual_pairing(&delta_s_fourier(&f, 0.6).unwrap(), &g, &bank).unwrap();
        let b = dual_pairing(&f, &delta_s_fourier(&g, 0.6).unwrap(), &bank).unwrap();
        assert!((a - b).abs() < 1e-10 * a.abs());
    }

    #[test]
    fn riesz_potential_pairing_is_positive() {
        let p = params(2, 32, 4.0);
        let bank = LPFilterBank::new(&p);
        let f = gauss(p, [2.0, 2.0, 0.0], 0.3)
            .combine(1.0, &gauss(p, [2.6, 1.9, 0.0], 0.2), -1.5)
            .unwrap()
            .centered();
        let v = dual_pairing(&f, &riesz_fourier(&f, 1.2).unwrap(), &bank).unwrap();
        assert!(v > 0.0);
    }

    #[test]
    fn riesz_isometry_in_angular_norm() {
        let p = params(2, 32, 4.0);
        let f = gauss(p, [2.0, 2.0, 0.0], 0.3).centered();
        for alpha in [0.0, 0.3] {
            for sigma in [0.5, 1.0] {
                let lhs = hs_norm_angular(&riesz_fourier(&f, sigma).unwrap(), alpha + sigma).unwrap();
                let rhs = hs_norm_angular(&f, alpha).unwrap();
                assert!((lhs - rhs).abs() < 1e-10 * rhs);
            }
        }
    }

    #[test]
    fn singular_form_agrees_on_gaussians() {
        for size in [64, 128] {
            let p = params(2, size, 8.0);
            let f = gauss(p, [3.8, 4.1, 0.0], 0.5);
            for s in [0.25, 0.5, 0.75] {
                let err = rel_l2(&delta_s_singular(&f, s).unwrap(), &delta_s_fourier(&f, s).unwrap());
                assert!(err < 1e-2, "N {size} s {s}: {err}");
            }
        }
    }

    #[test]
    fn riesz_kernel_matches_multiplier_on_bump_difference() {
        let p = params(2, 128, 8.0);
        let f = gauss(p, [4.0, 4.0, 0.0], 0.4)
            .combine(1.0, &gauss(p, [4.0, 4.0, 0.0], 0.6), -0.16 / 0.36)
            .unwrap()
            .centered();
        let k = riesz_kernel(&f, 0.5).unwrap().centered();
        let err = rel_l2(&k, &riesz_fourier(&f, 0.5).unwrap());
        assert!(err < 2e-2, "{err}");
    }

    #[test]
    fn riesz_kernel_far_field_is_a_point_source() {
        let p = params(2, 128, 16.0);
        let w = 0.3;
        let f = gauss(p, [4.0, 8.0, 0.0], w);
        let mass = 2.0 * PI * w * w;
        for sigma in [0.5, 1.0, 1.5] {
            let u = riesz_kernel(&f, sigma).unwrap();
            // node (10, 8) lies at distance 6 from the source
            let i = crate::grid::flat_index(&p, &[80, 64, 0]);
            let expected = c_riesz(2, sigma) * 6f64.powf(sigma - 2.0) * mass;
            assert!((u.values()[i] / expected - 1.0).abs() < 1e-2, "sigma {sigma}");
        }
    }
}
