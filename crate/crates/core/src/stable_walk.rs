//! Exit positions of the isotropic 2s-stable process and the walk-on-spheres
//! estimator of `u(x) = E_x F(X_τ)`.
//!
//! From the centre of a ball of radius `r` the exit point is `c + r ρ θ` with
//! `θ` uniform on the sphere and `ρ > 1` distributed with density
//! `(2 sin πs / π) / (ρ (ρ² − 1)^s)`, independently of the dimension.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exterior::ExteriorData;
use crate::geometry::{AnnulusFamily, Domain, Point, Region};
use crate::params::check_order;
use crate::quadrature::GaussLegendre;

const TABLE_NODES: usize = 4096;
const TABLE_MAX: f64 = 1e8;
const TABLE_GRADING: f64 = 0.02;

/// Tabulated inverse CDF of the radial exit factor `ρ`.
///
/// The table is kept in the variable `w = (ρ² − 1)^{1−s}`, in which the CDF is
/// `F(w) = c ∫_0^w dv / (1 + v^p)` with `p = 1/(1−s)` and `c = sin πs / (π(1−s))`.
/// Beyond the last node the asymptotic tail `1 − F ≈ c w^{1−p}/(p − 1)` is
/// inverted in closed form.
#[derive(Clone, Debug)]
pub struct ExitLaw {
    s: f64,
    p: f64,
    c: f64,
    w: Vec<f64>,
    cdf: Vec<f64>,
}

impl ExitLaw {
    pub fn new(s: f64) -> Result<Self> {
        check_order(s)?;
        let p = 1.0 / (1.0 - s);
        let c = (PI * s).sin() / (PI * (1.0 - s));
        let top = (1.0 + TABLE_MAX / TABLE_GRADING).ln();
        let w: Vec<f64> = (0..TABLE_NODES)
            .map(|i| TABLE_GRADING * ((top * i as f64 / (TABLE_NODES - 1) as f64).exp() - 1.0))
            .collect();
        let gl = GaussLegendre::new(12);
        let density = |v: f64| c / (1.0 + v.powf(p));
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        cdf.push(0.0);
        for i in 1..TABLE_NODES {
            let (a, b) = (w[i - 1], w[i]);
            // split at v = 1 where the integrand bends for s near 1
            let piece = if a < 1.0 && b > 1.0 {
                gl.integrate(a, 1.0, density) + gl.integrate(1.0, b, density)
            } else {
                gl.integrate(a, b, density)
            };
            cdf.push(cdf[i - 1] + piece);
        }
        Ok(Self { s, p, c, w, cdf })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    fn slope(&self, w: f64) -> f64 {
        self.c / (1.0 + w.powf(self.p))
    }

    /// Exact radial CDF `P(ρ ≤ t) = I_{1 − 1/t²}(1 − s, s)`.
    pub fn radial_cdf(&self, t: f64) -> f64 {
        if t <= 1.0 {
            return 0.0;
        }
        statrs::function::beta::beta_reg(1.0 - self.s, self.s, 1.0 - 1.0 / (t * t))
    }

    /// Radial CDF as represented by the table (Hermite interpolation).
    pub fn tabulated_cdf(&self, t: f64) -> f64 {
        if t <= 1.0 {
            return 0.0;
        }
        self.cdf_w(((t - 1.0) * (t + 1.0)).powf(1.0 - self.s))
    }

    fn cdf_w(&self, w: f64) -> f64 {
        let last = *self.w.last().unwrap();
        if w >= last {
            return 1.0 - self.c * w.powf(1.0 - self.p) / (self.p - 1.0);
        }
        let i = self.w.partition_point(|&v| v <= w) - 1;
        self.hermite(i, w)
    }

    fn hermite(&self, i: usize, w: f64) -> f64 {
        let (a, b) = (self.w[i], self.w[i + 1]);
        let len = b - a;
        let u = (w - a) / len;
        let (h00, h10) = (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u);
        let (h01, h11) = (-2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
        h00 * self.cdf[i]
            + h10 * len * self.slope(a)
            + h01 * self.cdf[i + 1]
            + h11 * len * self.slope(b)
    }

    /// Radial factor `ρ > 1` for a uniform variate `u ∈ [0, 1)`.
    pub fn radial_quantile(&self, u: f64) -> f64 {
        // ρ − 1 can underflow for tiny u; keep the point strictly outside
        (1.0 + self.quantile_w(u).powf(self.p)).sqrt().max(1.0 + f64::EPSILON)
    }

    fn quantile_w(&self, u: f64) -> f64 {
        let top = *self.cdf.last().unwrap();
        if u >= top {
            ((1.0 - u).max(f64::MIN_POSITIVE) * (self.p - 1.0) / self.c).powf(1.0 / (1.0 - self.p))
        } else {
            let i = self.cdf.partition_point(|&v| v <= u).saturating_sub(1).min(self.w.len() - 2);
            // the Hermite segment is increasing: safeguarded Newton on it
            let (mut lo, mut hi) = (self.w[i], self.w[i + 1]);
            let mut x = lo + (hi - lo) * (u - self.cdf[i]) / (self.cdf[i + 1] - self.cdf[i]);
            for _ in 0..60 {
                let g = self.hermite(i, x) - u;
                if g == 0.0 {
                    break;
                }
                if g > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                let step = g / self.slope(x).max(1e-300);
                if step.abs() <= 1e-15 * x.max(1e-300) || (hi - lo) <= 1e-15 * hi.max(1e-300) {
                    break;
                }
                let next = x - step;
                x = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            }
            x
        }
    }

    /// Exit point of the process started at the centre of `B(center, radius)`.
    pub fn sample<const D: usize, R: Rng + ?Sized>(
        &self,
        center: &Point<D>,
        radius: f64,
        rng: &mut R,
    ) -> Point<D> {
        let rho = self.radial_quantile(rng.random::<f64>());
        let dir: [f64; D] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let len = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        std::array::from_fn(|a| center[a] + radius * rho * dir[a] / len)
    }
}

pub fn sample_ball_exit<const D: usize, R: Rng + ?Sized>(
    law: &ExitLaw,
    center: &Point<D>,
    radius: f64,
    rng: &mut R,
) -> Point<D> {
    law.sample(center, radius, rng)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkConfig {
    /// Fraction of δ(x) used as the sampling-ball radius.
    pub beta: f64,
    pub max_steps: usize,
    /// Number of independent RNG streams; results are reproducible per layout.
    pub shards: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { beta: 1.0, max_steps: 100_000, shards: 64 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) || self.max_steps == 0 || self.shards == 0 {
            return Err(Error::InvalidParams(format!(
                "walk needs beta in (0, 1], positive step cap and shard count, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkPath<const D: usize> {
    pub positions: Vec<Point<D>>,
    pub radii: Vec<f64>,
    pub exit_point: Point<D>,
    pub steps: usize,
}

/// One walk from `x` until it leaves `region`, with the full path recorded.
pub fn walk_path<const D: usize, G: Region<D>, R: Rng + ?Sized>(
    region: &G,
    law: &ExitLaw,
    x: &Point<D>,
    cfg: &WalkConfig,
    rng: &mut R,
) -> Result<WalkPath<D>> {
    let mut positions = vec![*x];
    let mut radii = Vec::new();
    let exit = run_walk(region, law, x, cfg, rng, |p, r| {
        positions.push(*p);
        radii.push(r);
    })?;
    positions.pop();
    Ok(WalkPath { positions, radii, exit_point: exit.0, steps: exit.1 })
}

fn run_walk<const D: usize, G: Region<D>, R: Rng + ?Sized>(
    region: &G,
    law: &ExitLaw,
    x: &Point<D>,
    cfg: &WalkConfig,
    rng: &mut R,
    mut visit: impl FnMut(&Point<D>, f64),
) -> Result<(Point<D>, usize)> {
    let mut cur = *x;
    for step in 1..=cfg.max_steps {
        let radius = cfg.beta * region.boundary_distance(&cur);
        let next = law.sample(&cur, radius, rng);
        visit(&next, radius);
        if !region.contains(&next) {
            return Ok((next, step));
        }
        cur = next;
    }
    Err(Error::Numerical(format!("walk from {x:?} hit the step cap {}", cfg.max_steps)))
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    pub mean_steps: f64,
}

#[derive(Clone, Copy, Default)]
struct Moments {
    count: usize,
    mean: f64,
    m2: f64,
    steps: f64,
}

impl Moments {
    fn push(&mut self, v: f64, steps: usize) {
        self.count += 1;
        let d = v - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (v - self.mean);
        self.steps += steps as f64;
    }

    fn merge(self, o: Moments) -> Moments {
        if self.count == 0 {
            return o;
        }
        if o.count == 0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count as f64 / count as f64,
            m2: self.m2 + o.m2 + d * d * (self.count * o.count) as f64 / count as f64,
            steps: self.steps + o.steps,
        }
    }

    fn estimate(&self) -> McEstimate {
        let n = self.count as f64;
        let var = if self.count > 1 { self.m2 / (n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            stderr: (var / n).sqrt(),
            samples: self.count,
            mean_steps: self.steps / n,
        }
    }
}

/// Runs `samples` walks split across `cfg.shards` streams of `seed` and
/// reduces the per-walk scores in shard order.
fn sharded<const D: usize, G: Region<D>>(
    region: &G,
    law: &ExitLaw,
    x: &Point<D>,
    samples: usize,
    seed: u64,
    cfg: &WalkConfig,
    score: impl Fn(&Point<D>) -> Result<f64> + Sync,
) -> Result<McEstimate> {
    cfg.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let shards = cfg.shards.min(samples);
    let per = samples / shards;
    let extra = samples % shards;
    let parts: Vec<Result<Moments>> = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut m = Moments::default();
            for _ in 0..per + usize::from(i < extra) {
                let (z, steps) = run_walk(region, law, x, cfg, &mut rng, |_, _| {})?;
                m.push(score(&z)?, steps);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for part in parts {
        total = total.merge(part?);
    }
    Ok(total.estimate())
}

/// Walk-on-spheres estimate of `E_x F(X_τ)`.
pub fn wos_estimate<const D: usize>(
    domain: &Domain<D>,
    f: &ExteriorData<D>,
    x: &Point<D>,
    law: &ExitLaw,
    samples: usize,
    seed: u64,
    cfg: &WalkConfig,
) -> Result<McEstimate> {
    if !domain.contains(x) {
        return Err(Error::InvalidArgument(format!("start point {x:?} is not inside the domain")));
    }
    sharded(domain, law, x, samples, seed, cfg, |z| {
        let v = f.eval(z);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Numerical(format!("exterior data is not finite at {z:?}")))
        }
    })
}

/// `p_k = P_x(X_{τ_k} ∈ Ω \ Ω_k)` for the exit from each shrunken domain
/// `Ω_k`, with common random numbers across `k`.
pub fn annulus_exit_mass<const D: usize>(
    fam: &AnnulusFamily<D>,
    x: &Point<D>,
    law: &ExitLaw,
    samples: usize,
    seed: u64,
    cfg: &WalkConfig,
) -> Result<Vec<McEstimate>> {
    if !fam.region(0).contains(x) {
        return Err(Error::InvalidArgument(format!(
            "start point {x:?} is outside the smallest shrunken domain"
        )));
    }
    let domain = fam.domain();
    (0..fam.offsets().len())
        .map(|k| {
            let region = fam.region(k);
            sharded(&region, law, x, samples, seed, cfg, |z| {
                Ok(if domain.contains(z) { 1.0 } else { 0.0 })
            })
        })
        .collect()
}
