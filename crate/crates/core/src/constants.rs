//! Normalization constants and closed-form geometric integrals.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::quadrature::GaussLegendre;

/// Surface area of the unit sphere `S^{n-1}` in `ℝⁿ`.
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

/// Constant multiplying `∫ [f(x+y) − 2f(x) + f(x−y)] / |y|^{n+2s} dy` so that the
/// negated integral has Fourier symbol `(2π|ξ|)^{2s}`.
///
/// This is half of `4ˢ Γ(n/2+s) / (π^{n/2} |Γ(−s)|)`, the constant of the
/// one-sided form `∫ (f(x) − f(y)) / |x−y|^{n+2s} dy`; the second difference
/// counts every pair twice.
pub fn c_delta(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    0.5 * 4f64.powf(s) * gamma(nf / 2.0 + s) / (PI.powf(nf / 2.0) * gamma(-s).abs())
}

/// Constant of the Riesz kernel `Γ_σ(x) = c |x|^{-(n-σ)}` whose transform is
/// `(2π|ξ|)^{-σ}`.
pub fn c_riesz(n: usize, sigma: f64) -> f64 {
    let nf = n as f64;
    gamma((nf - sigma) / 2.0) / (2f64.powf(sigma) * PI.powf(nf / 2.0) * gamma(sigma / 2.0))
}

/// Normalization of the Poisson kernel of a ball for the 2s-stable process.
pub fn c_ball(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    gamma(nf / 2.0) * PI.powf(-nf / 2.0 - 1.0) * (PI * s).sin()
}

/// `∫_{S^{n-1}} ρ(θ)^p dθ` where `ρ(θ)` is the distance from the centre of the
/// cube `[-a, a]^n` to its surface along `θ`.
pub fn cube_radial_moment(n: usize, a: f64, p: f64) -> f64 {
    let gl = GaussLegendre::new(48);
    match n {
        // each face at distance a subtends dθ = a du / r^n
        2 => 8.0 * gl.integrate(0.0, a, |u| a * (a * a + u * u).powf((p - 2.0) / 2.0)),
        3 => {
            24.0 * gl.integrate(0.0, a, |u| {
                gl.integrate(0.0, a, |v| a * (a * a + u * u + v * v).powf((p - 3.0) / 2.0))
            })
        }
        _ => panic!("cube moments implemented for n = 2, 3"),
    }
}

/// `∫_{[-a,a]^n} |y|^q dy`, valid for `q > −n`.
pub fn cube_power_integral(n: usize, a: f64, q: f64) -> f64 {
    let e = q + n as f64;
    assert!(e > 0.0, "power {q} not integrable at the origin");
    cube_radial_moment(n, a, e) / e
}

/// `∫_{ℝⁿ \ [-a,a]^n} |y|^q dy`, valid for `q < −n`.
pub fn cube_exterior_power_integral(n: usize, a: f64, q: f64) -> f64 {
    let e = q + n as f64;
    assert!(e < 0.0, "power {q} not integrable at infinity");
    -cube_radial_moment(n, a, e) / e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn constants_are_positive() {
        for n in [2, 3] {
            for s in [0.01, 0.25, 0.5, 0.75, 0.99] {
                assert!(c_delta(n, s) > 0.0);
                assert!(c_riesz(n, 2.0 * s) > 0.0);
                assert!(c_ball(n, s) > 0.0);
            }
        }
    }

    #[test]
    fn riesz_constant_known_values() {
        // n = 3, σ = 2: Newtonian potential 1/(4π|x|)
        assert!((c_riesz(3, 2.0) - 1.0 / (4.0 * PI)).abs() < 1e-14);
        // n = 2, σ = 1: 1/(2π|x|)
        assert!((c_riesz(2, 1.0) - 1.0 / (2.0 * PI)).abs() < 1e-14);
    }

    #[test]
    fn cube_moments_match_volume_and_brute_force() {
        // p = n gives n * volume
        for n in [2, 3] {
            let m = cube_radial_moment(n, 1.5, n as f64);
            assert!((m - n as f64 * 3f64.powi(n as i32)).abs() < 1e-10, "{n}: {m}");
        }
        // ∫_{[-1,1]^2} |y|^{-1} dy by midpoint brute force on an offset grid
        let m = 2000;
        let h = 2.0 / m as f64;
        let mut brute = 0.0;
        for i in 0..m {
            for j in 0..m {
                let x = -1.0 + (i as f64 + 0.5) * h;
                let y = -1.0 + (j as f64 + 0.5) * h;
                brute += h * h / (x * x + y * y).sqrt();
            }
        }
        let v = cube_power_integral(2, 1.0, -1.0);
        assert!((v - brute).abs() < 2e-3 * v, "{v} vs {brute}");
        // closed form: 8 asinh(1)
        assert!((v - 8.0 * 1f64.asinh()).abs() < 1e-12);
    }
}
