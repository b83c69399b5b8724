//! Poisson kernel of a ball for the 2s-stable process,
//! `K(x, y) = C_ball(n, s) [(r² − |x−c|²)/(|y−c|² − r²)]ˢ |x − y|^{−n}`,
//! with quadrature of `u(x) = ∫_{|y−c|>r} K(x, y) F(y) dy` and sampled checks
//! of the two-sided kernel bounds.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::constants::c_ball;
use crate::error::{Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::{dist, Point};
use crate::params::check_order;
use crate::quadrature::{graded_breaks, GaussLegendre};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallKernel<const D: usize> {
    center: Point<D>,
    radius: f64,
    s: f64,
    norm: f64,
}

impl<const D: usize> BallKernel<D> {
    pub fn new(center: Point<D>, radius: f64, s: f64) -> Result<Self> {
        check_order(s)?;
        if !(D == 2 || D == 3) {
            return Err(Error::InvalidParams(format!("unsupported dimension {D}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Geometry(format!("invalid ball radius {radius}")));
        }
        Ok(Self { center, radius, s, norm: c_ball(D, s) })
    }

    pub fn center(&self) -> Point<D> {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    /// `K(x, y)` for `x` inside and `y` outside the ball.
    pub fn eval(&self, x: &Point<D>, y: &Point<D>) -> Result<f64> {
        let (a, b) = (dist(x, &self.center), dist(y, &self.center));
        if !(a < self.radius) || !(b > self.radius) {
            return Err(Error::InvalidArgument(format!(
                "kernel needs |x-c| < r < |y-c|, got {a} and {b} for r = {}",
                self.radius
            )));
        }
        Ok(self.eval_unchecked(x, y))
    }

    fn eval_unchecked(&self, x: &Point<D>, y: &Point<D>) -> f64 {
        let r2 = self.radius * self.radius;
        let a2: f64 = (0..D).map(|i| (x[i] - self.center[i]).powi(2)).sum();
        let b2: f64 = (0..D).map(|i| (y[i] - self.center[i]).powi(2)).sum();
        self.norm * ((r2 - a2) / (b2 - r2)).powf(self.s) * dist(x, y).powi(-(D as i32))
    }
}

pub fn ball_kernel_eval<const D: usize>(k: &BallKernel<D>, x: &Point<D>, y: &Point<D>) -> Result<f64> {
    k.eval(x, y)
}

/// Orthonormal frame whose first vector points from the centre towards `x`.
fn frame<const D: usize>(c: &Point<D>, x: &Point<D>) -> [Point<D>; D] {
    let a = dist(x, c);
    let mut e0 = [0.0; D];
    if a > 0.0 {
        for i in 0..D {
            e0[i] = (x[i] - c[i]) / a;
        }
    } else {
        e0[0] = 1.0;
    }
    let mut basis = [[0.0; D]; D];
    basis[0] = e0;
    let mut filled = 1;
    for axis in 0..D {
        if filled == D {
            break;
        }
        let mut v = [0.0; D];
        v[axis] = 1.0;
        for b in basis.iter().take(filled) {
            let dot: f64 = (0..D).map(|i| v[i] * b[i]).sum();
            for i in 0..D {
                v[i] -= dot * b[i];
            }
        }
        let len = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if len > 1e-8 {
            basis[filled] = v.map(|t| t / len);
            filled += 1;
        }
    }
    basis
}

const AZIMUTH_POINTS: usize = 48;
const OUTER_SHELLS: usize = 22;

/// `∫_{|y−c|>r} K(x, y) F(y) dy` by graded product quadrature.
///
/// The radial variable `u = |y−c|/r − 1` is integrated with the substitution
/// `u = w^{1/(1−s)}` on the first panel, geometric panels up to `u = 1`, and
/// doubling shells in `|y−c|` beyond. The angular rule is graded toward the
/// direction of `x − c`. The far tail is extrapolated from the last shells;
/// shell contributions that stop decaying are reported as divergence.
pub fn solve_ball_quadrature<const D: usize>(
    k: &BallKernel<D>,
    f: &ExteriorData<D>,
    x: &Point<D>,
) -> Result<f64> {
    let (c, r, s) = (k.center, k.radius, k.s);
    let a = dist(x, &c);
    if !(a < r) {
        return Err(Error::InvalidArgument(format!("point {x:?} is not inside the ball")));
    }
    if f.growth() >= 2.0 * s {
        return Err(Error::Numerical(format!(
            "exterior data grows like |y|^{} which is not integrable against the kernel",
            f.growth()
        )));
    }
    let basis = frame(&c, x);
    let gap = (r - a) / r;
    let gl = GaussLegendre::new(16);
    let ang = GaussLegendre::new(12);

    // radial panels in u, grouped into shells for the tail analysis
    let u0 = (0.25 * gap).min(0.05);
    let p = 1.0 / (1.0 - s);
    let mut panels: Vec<(f64, f64, usize)> = Vec::new();
    let mut lo = u0;
    while lo < 1.0 {
        panels.push((lo, (2.0 * lo).min(1.0), 0));
        lo *= 2.0;
    }
    for shell in 0..OUTER_SHELLS {
        let rho = 2f64.powi(shell as i32);
        panels.push((2.0 * rho - 1.0, 4.0 * rho - 1.0, shell + 1));
    }

    // integrand over the sphere |y − c| = r(1 + u), times r^n (1+u)^{n−1}
    let sphere = |u: f64| -> f64 {
        let rho = 1.0 + u;
        let big = r * rho;
        let radial = k.norm * ((r * r - a * a) / (r * r * u * (2.0 + u))).powf(s);
        let point = |cos: f64, dirs: &[f64]| -> Point<D> {
            let sin = (1.0 - cos * cos).max(0.0).sqrt();
            std::array::from_fn(|i| {
                let mut v = c[i] + big * cos * basis[0][i];
                for (j, d) in dirs.iter().enumerate() {
                    v += big * sin * d * basis[j + 1][i];
                }
                v
            })
        };
        let width = ((big - a) / big).max(1e-12);
        let breaks = graded_breaks(0.25 * width, PI);
        let angular = match D {
            2 => ang.integrate_panels(&breaks, |phi| {
                let cos = phi.cos();
                let d = (a * a + big * big - 2.0 * a * big * cos).sqrt();
                let kern = d.powi(-2);
                kern * (f.eval(&point(cos, &[1.0])) + f.eval(&point(cos, &[-1.0])))
            }),
            _ => ang.integrate_panels(&breaks, |theta| {
                let cos = theta.cos();
                let d = (a * a + big * big - 2.0 * a * big * cos).sqrt();
                let kern = d.powi(-3) * theta.sin();
                let mut ring = 0.0;
                for m in 0..AZIMUTH_POINTS {
                    let psi = 2.0 * PI * m as f64 / AZIMUTH_POINTS as f64;
                    ring += f.eval(&point(cos, &[psi.cos(), psi.sin()]));
                }
                kern * ring * 2.0 * PI / AZIMUTH_POINTS as f64
            }),
        };
        radial * angular * r.powi(D as i32) * rho.powi(D as i32 - 1)
    };

    let first = gl.integrate(0.0, u0.powf(1.0 - s), |w| sphere(w.powf(p)) * p * w.powf(p - 1.0));
    let contributions: Vec<(usize, f64)> = panels
        .par_iter()
        .map(|&(lo, hi, shell)| (shell, gl.integrate(lo, hi, &sphere)))
        .collect();
    let mut shells = vec![0.0; OUTER_SHELLS + 1];
    shells[0] = first;
    for (shell, v) in contributions {
        shells[shell] += v;
    }
    let total: f64 = shells.iter().sum();

    let (prev, last) = (shells[OUTER_SHELLS - 1], shells[OUTER_SHELLS]);
    let tail = if last == 0.0 {
        0.0
    } else {
        let q = last / prev;
        if !(q.is_finite() && q.abs() < 0.95) {
            return Err(Error::Numerical(format!(
                "kernel quadrature tail does not decay (shell ratio {q})"
            )));
        }
        last * q / (1.0 - q)
    };
    Ok(total + tail)
}

/// Sampling region for the kernel-bound ratio.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSampling {
    /// Interior points satisfy `δ(x) > min_interior_distance`.
    pub min_interior_distance: f64,
    /// Exterior points satisfy `δ(y) ∈ (lo, hi)` if given; otherwise `δ(y)`
    /// has the heavy-tailed density `(1 + δ)^{−2}`.
    pub exterior_range: Option<(f64, f64)>,
}

impl Default for BoundSampling {
    fn default() -> Self {
        Self { min_interior_distance: 0.0, exterior_range: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelBounds {
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// Extremes over `m` random pairs of
/// `K(x, y) δ(y)ˢ (δ(y) + 1)ˢ |x − y|ⁿ / δ(x)ˢ`.
pub fn check_kernel_bounds<const D: usize>(
    k: &BallKernel<D>,
    m: usize,
    seed: u64,
    sampling: &BoundSampling,
) -> Result<KernelBounds> {
    let r = k.radius;
    if m == 0 || !(sampling.min_interior_distance >= 0.0 && sampling.min_interior_distance < r) {
        return Err(Error::InvalidArgument("invalid bound sampling request".into()));
    }
    const SHARDS: usize = 16;
    let parts: Vec<Result<(f64, f64)>> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let count = m / SHARDS + usize::from(shard < m % SHARDS);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for _ in 0..count {
                let inner = r - sampling.min_interior_distance;
                let rad_x = inner * rng.random::<f64>().powf(1.0 / D as f64);
                let dx = direction::<D>(&mut rng);
                let x: Point<D> = std::array::from_fn(|i| k.center[i] + rad_x * dx[i]);
                let delta_y = match sampling.exterior_range {
                    Some((a, b)) => a + (b - a) * rng.random::<f64>(),
                    None => {
                        let u: f64 = rng.random();
                        u / (1.0 - u)
                    }
                };
                if delta_y <= 0.0 {
                    continue;
                }
                let dy = direction::<D>(&mut rng);
                let y: Point<D> = std::array::from_fn(|i| k.center[i] + (r + delta_y) * dy[i]);
                let delta_x = r - rad_x;
                let ratio = k.eval_unchecked(&x, &y)
                    * (delta_y * (delta_y + 1.0)).powf(k.s)
                    * dist(&x, &y).powi(D as i32)
                    / delta_x.powf(k.s);
                if !ratio.is_finite() {
                    return Err(Error::Numerical(format!("non-finite bound ratio at {x:?}, {y:?}")));
                }
                lo = lo.min(ratio);
                hi = hi.max(ratio);
            }
            Ok((lo, hi))
        })
        .collect();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for part in parts {
        let (a, b) = part?;
        lo = lo.min(a);
        hi = hi.max(b);
    }
    Ok(KernelBounds { ratio_min: lo, ratio_max: hi })
}

fn direction<const D: usize>(rng: &mut impl Rng) -> Point<D> {
    let v: Point<D> = std::array::from_fn(|_| rng.sample(StandardNormal));
    let len = v.iter().map(|t| t * t).sum::<f64>().sqrt();
    v.map(|t| t / len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_mass_is_one() {
        let k2 = BallKernel::new([0.0, 0.0], 1.0, 0.5).unwrap();
        let k3 = BallKernel::new([1.0, 0.0, -1.0], 2.0, 0.3).unwrap();
        let one = ExteriorData::Constant(1.0);
        for a in [0.0, 0.3, 0.6, 0.9] {
            let m2 = solve_ball_quadrature(&k2, &one, &[0.0, a]).unwrap();
            assert!((m2 - 1.0).abs() < 1e-3, "2d a {a}: {m2}");
            let m3 = solve_ball_quadrature(&k3, &ExteriorData::Constant(1.0), &[1.0 + 2.0 * a, 0.0, -1.0]).unwrap();
            assert!((m3 - 1.0).abs() < 1e-3, "3d a {a}: {m3}");
        }
        for s in [0.1, 0.25, 0.75, 0.9] {
            let k = BallKernel::new([0.0, 0.0], 1.0, s).unwrap();
            let m = solve_ball_quadrature(&k, &one, &[0.5, 0.2]).unwrap();
            assert!((m - 1.0).abs() < 1e-3, "s {s}: {m}");
        }
    }

    #[test]
    fn centre_value_is_radial_and_decreasing() {
        let k = BallKernel::new([0.0, 0.0], 1.0, 0.4).unwrap();
        let a = k.eval(&[0.0, 0.0], &[1.5, 0.0]).unwrap();
        let b = k.eval(&[0.0, 0.0], &[0.0, -1.5]).unwrap();
        assert!((a - b).abs() < 1e-15 * a);
        let mut last = f64::INFINITY;
        for i in 1..200 {
            let v = k.eval(&[0.0, 0.0], &[1.0 + 0.05 * i as f64, 0.0]).unwrap();
            assert!(v > 0.0 && v < last);
            last = v;
        }
        assert!(k.eval(&[2.0, 0.0], &[3.0, 0.0]).is_err());
        assert!(k.eval(&[0.0, 0.0], &[0.5, 0.0]).is_err());
    }

    #[test]
    fn distant_half_space_gets_less_than_half() {
        let k = BallKernel::new([0.0, 0.0], 1.0, 0.5).unwrap();
        let f = ExteriorData::HalfSpace { normal: [1.0, 0.0], offset: 3.0, value: 1.0 };
        let v = solve_ball_quadrature(&k, &f, &[0.0, 0.0]).unwrap();
        assert!(v > 0.0 && v < 0.5, "{v}");
    }

    #[test]
    fn growing_data_is_flagged() {
        let k = BallKernel::new([0.0, 0.0], 1.0, 0.5).unwrap();
        let f = ExteriorData::RadialPower { center: [0.0, 0.0], exponent: 1.2 };
        assert!(solve_ball_quadrature(&k, &f, &[0.0, 0.0]).is_err());
        let g = ExteriorData::RadialPower { center: [0.0, 0.0], exponent: 0.3 };
        assert!(solve_ball_quadrature(&k, &g, &[0.0, 0.0]).unwrap().is_finite());
    }

    #[test]
    fn bound_ratios_lie_in_the_closed_form_bracket() {
        // for the ball the ratio is C((r+|x−c|)(1+δ_y)/(2r+δ_y))ˢ
        let k = BallKernel::new([0.0, 0.0], 1.0, 0.5).unwrap();
        let b = check_kernel_bounds(&k, 20_000, 3, &BoundSampling::default()).unwrap();
        let c = c_ball(2, 0.5);
        assert!(b.ratio_min >= c * 0.5f64.sqrt() * (1.0 - 1e-12));
        assert!(b.ratio_max <= c * 2f64.sqrt() * (1.0 + 1e-12));
        assert!(b.ratio_min > 0.0 && b.ratio_min <= b.ratio_max);
    }
}
