//! Exterior Galerkin solver: find a density `φ = Σ c_j ψ_j` on a truncated
//! exterior annulus with `(I_{2s} φ)|_{Ωᶜ} = F` in the weak sense, then set
//! `u = I_{2s} φ`.
//!
//! Basis functions are translates of the Wendland C² profile
//! `W(q) = (1 − q)⁴(4q + 1)` scaled to support radius `h` on the lattice of
//! spacing `h`, so every Gram entry is `h^{n+2s} a₁(|k_i − k_j|)` for a single
//! scale-free function `a₁` of the integer lattice offset.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constants::{c_riesz, sphere_area};
use crate::error::{Error, Result};
use crate::exterior::{smooth_bump, ExteriorData};
use crate::frac_ops::delta_s_fourier;
use crate::geometry::{dist, Domain, Point, Region};
use crate::grid::{node_coords, GridFunction};
use crate::lp_norms::{dual_pairing, hs_norm_angular, hs_norm_lp, LPFilterBank};
use crate::params::{check_order, SolverParams};
use crate::quadrature::GaussLegendre;

/// Wendland C² profile with unit support.
pub fn wendland(q: f64) -> f64 {
    if q >= 1.0 {
        0.0
    } else {
        (1.0 - q).powi(4) * (4.0 * q + 1.0)
    }
}

/// `∫_0^1 W(q) q^m dq`, from `∫_0^1 (1−q)⁴ q^k dq = 24 k!/(k+5)!`.
pub fn wendland_moment(m: usize) -> f64 {
    let beta = |k: usize| 24.0 / ((k + 1)..=(k + 5)).map(|v| v as f64).product::<f64>();
    4.0 * beta(m + 1) + beta(m)
}

/// `∫ W(|x|) dx` over ℝⁿ.
pub fn wendland_mass(n: usize) -> f64 {
    sphere_area(n) * wendland_moment(n - 1)
}

const TABLE_END: f64 = 6.0;
const TABLE_STEP: f64 = 1.0 / 512.0;
const MULTIPOLE_TERMS: usize = 16;
/// Pairs at distance `≥ FAR_RATIO (h_i + h_j)` use the multipole series.
const FAR_RATIO: f64 = 3.0;

/// `g₁ = Γ_{2s} ∗ W(|·|)` as a radial profile: tabulated on `[0, 6]` and
/// expanded in multipoles beyond.
#[derive(Clone, Debug)]
pub struct BumpPotential {
    n: usize,
    s: f64,
    table: Vec<f64>,
    // m_k of the mean-value expansion and L_K = Δᴷ|x|ᵖ / |x|^{p−2K}
    moments: Vec<f64>,
    lap: Vec<f64>,
}

impl BumpPotential {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        check_order(s)?;
        if !(n == 2 || n == 3) {
            return Err(Error::InvalidParams(format!("unsupported dimension {n}")));
        }
        let count = (TABLE_END / TABLE_STEP).round() as usize + 3;
        let table: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|i| direct_potential(n, s, i as f64 * TABLE_STEP))
            .collect();
        // mean-value expansion: ∫ W(|y|) f(x − y) dy = Σ_k m_k Δᵏ f(x), with
        // m_k = ω ∫ W(t) t^{n−1+2k} dt / (2ᵏ k! n(n+2)…(n+2k−2)) and
        // Δᵏ|x|ᵖ = Π_j (p − 2j)(p − 2j + n − 2) |x|^{p−2k}
        let nf = n as f64;
        let p = 2.0 * s - nf;
        let mut moments = Vec::with_capacity(MULTIPOLE_TERMS);
        let mut denom = 1.0;
        for k in 0..MULTIPOLE_TERMS {
            if k > 0 {
                denom *= 2.0 * k as f64 * (nf + 2.0 * (k - 1) as f64);
            }
            moments.push(sphere_area(n) * wendland_moment(n - 1 + 2 * k) / denom);
        }
        let mut lap = vec![1.0];
        for j in 0..2 * MULTIPOLE_TERMS {
            let j = j as f64;
            let next = lap.last().unwrap() * (p - 2.0 * j) * (p - 2.0 * j + nf - 2.0);
            lap.push(next);
        }
        Ok(Self { n, s, table, moments, lap })
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `g₁(r)`.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= TABLE_END {
            let p = 2.0 * self.s - self.n as f64;
            let inv2 = 1.0 / (r * r);
            let mut term = r.powf(p);
            let mut acc = 0.0;
            for (m, l) in self.moments.iter().zip(&self.lap) {
                acc += m * l * term;
                term *= inv2;
            }
            return c_riesz(self.n, 2.0 * self.s) * acc;
        }
        // four-point Lagrange interpolation
        let x = r / TABLE_STEP;
        let i = (x.floor() as usize).clamp(1, self.table.len() - 3);
        let t = x - i as f64;
        let (a, b, c, d) =
            (self.table[i - 1], self.table[i], self.table[i + 1], self.table[i + 2]);
        -t * (t - 1.0) * (t - 2.0) / 6.0 * a + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * b
            - (t + 1.0) * t * (t - 2.0) / 2.0 * c
            + (t + 1.0) * t * (t - 1.0) / 6.0 * d
    }

    /// `∫ W(|z|) g₁(|d e + ρ z|) dz`: the pairing of a bump of radius `ρ`
    /// with the potential of a unit bump at distance `d`.
    pub fn pair(&self, d: f64, rho: f64) -> f64 {
        self.pair_with(d, rho, 16, 4)
    }

    fn pair_with(&self, d: f64, rho: f64, order: usize, panels: usize) -> f64 {
        let gl = GaussLegendre::new(order);
        let q_breaks: Vec<f64> = (0..=panels).map(|k| k as f64 / panels as f64).collect();
        match self.n {
            2 => {
                let phi_breaks: Vec<f64> = (0..=panels).map(|k| PI * k as f64 / panels as f64).collect();
                gl.integrate_panels(&q_breaks, |q| {
                    let t = rho * q;
                    let ring = gl.integrate_panels(&phi_breaks, |phi| {
                        self.eval((d * d + t * t + 2.0 * d * t * phi.cos()).max(0.0).sqrt())
                    });
                    2.0 * ring * wendland(q) * q
                })
            }
            _ => gl.integrate_panels(&q_breaks, |q| {
                let t = rho * q;
                let shell = if d * t == 0.0 {
                    4.0 * PI * self.eval(t.max(d))
                } else {
                    let (lo, hi) = ((d - t).abs(), d + t);
                    let mid = 0.5 * (lo + hi);
                    2.0 * PI / (d * t)
                        * (gl.integrate(lo, mid, |r| self.eval(r) * r)
                            + gl.integrate(mid, hi, |r| self.eval(r) * r))
                };
                shell * wendland(q) * q * q
            }),
        }
    }

    /// `⟨ψ_a, I_{2s} ψ_b⟩` for bumps of radii `ha`, `hb` at distance `d`.
    pub fn interaction(&self, d: f64, ha: f64, hb: f64) -> f64 {
        let (hi, hj) = if ha <= hb { (ha, hb) } else { (hb, ha) };
        if d >= FAR_RATIO * (hi + hj) {
            return self.far_interaction(d, hi, hj);
        }
        hi.powi(self.n as i32) * hj.powf(2.0 * self.s) * self.pair(d / hj, hi / hj)
    }

    /// Double mean-value series `c Σ_{k,l} m_k m_l L_{k+l} h_a^{n+2k} h_b^{n+2l} d^{p−2(k+l)}`,
    /// exact for `d > h_a + h_b`.
    fn far_interaction(&self, d: f64, ha: f64, hb: f64) -> f64 {
        let n = self.n as i32;
        let p = 2.0 * self.s - self.n as f64;
        let (a2, b2, inv2) = (ha * ha, hb * hb, 1.0 / (d * d));
        let mut total = 0.0;
        let mut pa = ha.powi(n);
        for k in 0..MULTIPOLE_TERMS {
            let mut pb = hb.powi(n);
            let mut dk = d.powf(p) * inv2.powi(k as i32);
            for l in 0..MULTIPOLE_TERMS - k {
                total += self.moments[k] * self.moments[l] * self.lap[k + l] * pa * pb * dk;
                pb *= b2;
                dk *= inv2;
            }
            pa *= a2;
        }
        c_riesz(self.n, 2.0 * self.s) * total
    }
}

/// `g₁(r)` by quadrature in polar coordinates about the evaluation point,
/// with `τ = ρ^{2s}` removing the kernel singularity.
fn direct_potential(n: usize, s: f64, r: f64) -> f64 {
    let gl = GaussLegendre::new(24);
    // A(ρ) = ∫_{S^{n−1}} W(|x + ρθ|) dθ
    let sphere = |rho: f64| -> f64 {
        if r == 0.0 {
            return sphere_area(n) * wendland(rho);
        }
        match n {
            2 => {
                let kappa = (1.0 - r * r - rho * rho) / (2.0 * r * rho);
                if kappa <= -1.0 {
                    return 0.0;
                }
                let phi0 = if kappa >= 1.0 { 0.0 } else { kappa.acos() };
                2.0 * gl.integrate(phi0, PI, |phi| {
                    wendland((r * r + rho * rho + 2.0 * r * rho * phi.cos()).max(0.0).sqrt())
                })
            }
            _ => {
                let (lo, hi) = ((r - rho).abs(), (r + rho).min(1.0));
                if lo >= hi {
                    return 0.0;
                }
                // polynomial integrand: the rule is exact
                2.0 * PI / (r * rho) * gl.integrate(lo, hi, |q| wendland(q) * q)
            }
        }
    };
    let lo = (r - 1.0).max(0.0);
    let hi = r + 1.0;
    let mut breaks = vec![lo, hi, (1.0 - r).abs(), r];
    breaks.retain(|b| *b >= lo && *b <= hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let two_s = 2.0 * s;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (ta, tb) = (w[0].powf(two_s), w[1].powf(two_s));
        for k in 0..4 {
            let a = ta + (tb - ta) * k as f64 / 4.0;
            let b = ta + (tb - ta) * (k + 1) as f64 / 4.0;
            total += gl.integrate(a, b, |tau| sphere(tau.powf(1.0 / two_s)));
        }
    }
    c_riesz(n, two_s) * total / two_s
}

/// Bump centres on nested exterior lattices. Level 0 has spacing and support
/// radius `h`; level `ℓ ≥ 1` has `h_ℓ = h/2^ℓ` and fills the boundary layer
/// `h_ℓ < δ ≤ h_{ℓ−1}` that the coarser bumps cannot reach.
#[derive(Clone, Debug)]
pub struct ExteriorBasis<const D: usize> {
    nodes: Vec<Point<D>>,
    levels: Vec<u32>,
    lattice: Vec<[i64; D]>,
    origin: Point<D>,
    h: f64,
    depth: u32,
    overlap: f64,
}

impl<const D: usize> ExteriorBasis<D> {
    /// Single-level basis: nodes of `exterior_annulus_nodes` whose bump
    /// support stays in Ωᶜ.
    pub fn new(domain: &Domain<D>, r_trunc: f64, h: f64, box_length: f64) -> Result<Self> {
        Self::layered(domain, r_trunc, h, 0, 1.0, box_length)
    }

    /// Basis with `depth` boundary-layer levels below the coarse lattice.
    pub fn layered(
        domain: &Domain<D>,
        r_trunc: f64,
        h: f64,
        depth: u32,
        overlap: f64,
        box_length: f64,
    ) -> Result<Self> {
        if !(1.0..=4.0).contains(&overlap) {
            return Err(Error::InvalidParams(format!("overlap must lie in [1, 4], got {overlap}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParams(format!("spacing must be positive, got {h}")));
        }
        if depth > 8 {
            return Err(Error::InvalidParams(format!("at most 8 layer levels, got {depth}")));
        }
        let origin = domain.center();
        if r_trunc < domain.outer_radius() + 2.0 * overlap * h {
            return Err(Error::Geometry(format!(
                "truncation radius {r_trunc} leaves no margin of 2h around the domain"
            )));
        }
        let finest = h / f64::from(1u32 << depth);
        let (mut nodes, mut levels) = (Vec::new(), Vec::new());
        for level in 0..=depth {
            let hl = h / f64::from(1u32 << level);
            let support = overlap * hl;
            let upper = if level == 0 { f64::INFINITY } else { 2.0 * support };
            for x in domain.exterior_annulus_nodes(r_trunc, hl, box_length)? {
                let delta = domain.boundary_distance(&x);
                if delta > support * (1.0 + 1e-9) && delta <= upper {
                    nodes.push(x);
                    levels.push(level);
                }
            }
        }
        let lattice = nodes
            .iter()
            .map(|x| std::array::from_fn(|a| ((x[a] - origin[a]) / finest).round() as i64))
            .collect();
        Ok(Self { nodes, levels, lattice, origin, h, depth, overlap })
    }

    pub fn nodes(&self) -> &[Point<D>] {
        &self.nodes
    }

    /// Coarse spacing `h`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn level(&self, j: usize) -> u32 {
        self.levels[j]
    }

    /// Support radius of bump `j`.
    pub fn radius(&self, j: usize) -> f64 {
        self.overlap * self.h / f64::from(1u32 << self.levels[j])
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn origin(&self) -> Point<D> {
        self.origin
    }

    fn offset2(&self, i: usize, j: usize) -> i64 {
        (0..D).map(|a| (self.lattice[i][a] - self.lattice[j][a]).pow(2)).sum()
    }

    fn distance(&self, i: usize, j: usize) -> f64 {
        (self.offset2(i, j) as f64).sqrt() * self.h / f64::from(1u32 << self.depth)
    }

    /// `ψ_j(x)`.
    pub fn eval(&self, j: usize, x: &Point<D>) -> f64 {
        wendland(dist(x, &self.nodes[j]) / self.radius(j))
    }
}

/// Gram matrix `A_jk = ⟨ψ_j, I_{2s} ψ_k⟩`, load vector `b_j = ⟨ψ_j, F⟩`.
#[derive(Clone, Debug)]
pub struct GramSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
}

pub fn assemble_gram<const D: usize>(
    basis: &ExteriorBasis<D>,
    potential: &BumpPotential,
) -> Result<DMatrix<f64>> {
    if potential.dim() != D {
        return Err(Error::InvalidArgument("potential dimension does not match basis".into()));
    }
    let m = basis.len();
    let near = |i: usize, j: usize| {
        basis.distance(i, j) < FAR_RATIO * (basis.radius(i) + basis.radius(j))
    };
    // near entries depend only on the two levels and the lattice offset
    let key = |i: usize, j: usize| {
        let (a, b) = (basis.levels[i], basis.levels[j]);
        (a.min(b), a.max(b), basis.offset2(i, j))
    };
    let mut keys: Vec<(u32, u32, i64)> = (0..m)
        .into_par_iter()
        .flat_map_iter(|i| (i..m).filter(move |&j| near(i, j)).map(move |j| (i, j)))
        .map(|(i, j)| key(i, j))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let h = basis.h;
    let finest = h / f64::from(1u32 << basis.depth);
    let values: HashMap<(u32, u32, i64), f64> = keys
        .par_iter()
        .map(|&(a, b, q)| {
            let (ha, hb) = (
                basis.overlap * h / f64::from(1u32 << a),
                basis.overlap * h / f64::from(1u32 << b),
            );
            ((a, b, q), potential.interaction((q as f64).sqrt() * finest, ha, hb))
        })
        .collect();
    let mut data = vec![0.0; m * m];
    data.par_chunks_mut(m.max(1)).enumerate().for_each(|(j, column)| {
        for (i, entry) in column.iter_mut().enumerate() {
            *entry = if near(i, j) {
                values[&key(i, j)]
            } else {
                potential.interaction(basis.distance(i, j), basis.radius(i), basis.radius(j))
            };
        }
    });
    Ok(DMatrix::from_vec(m, m, data))
}

/// `b_j = ∫ ψ_j F` by polar quadrature about each node.
pub fn assemble_rhs<const D: usize>(basis: &ExteriorBasis<D>, f: &ExteriorData<D>) -> DVector<f64> {
    let gl = GaussLegendre::new(16);
    let values: Vec<f64> = (0..basis.len())
        .into_par_iter()
        .map(|j| {
            let c = basis.nodes[j];
            let h = basis.radius(j);
            let at = |q: f64, dir: &[f64]| -> f64 {
                let y: Point<D> = std::array::from_fn(|a| c[a] + h * q * dir[a]);
                f.eval(&y)
            };
            const AZ: usize = 32;
            let radial = |q: f64| -> f64 {
                match D {
                    2 => {
                        let mut ring = 0.0;
                        for k in 0..AZ {
                            let t = 2.0 * PI * k as f64 / AZ as f64;
                            ring += at(q, &[t.cos(), t.sin()]);
                        }
                        ring * 2.0 * PI / AZ as f64 * q
                    }
                    _ => {
                        let polar = gl.integrate(-1.0, 1.0, |mu| {
                            let sin = (1.0 - mu * mu).sqrt();
                            let mut acc = 0.0;
                            for k in 0..AZ {
                                let t = 2.0 * PI * k as f64 / AZ as f64;
                                acc += at(q, &[sin * t.cos(), sin * t.sin(), mu]);
                            }
                            acc * 2.0 * PI / AZ as f64
                        });
                        polar * q * q
                    }
                }
            };
            h.powi(D as i32) * gl.integrate_panels(&[0.0, 0.5, 1.0], |q| wendland(q) * radial(q))
        })
        .collect();
    DVector::from_vec(values)
}

pub fn build_system<const D: usize>(
    basis: &ExteriorBasis<D>,
    potential: &BumpPotential,
    f: &ExteriorData<D>,
) -> Result<GramSystem> {
    Ok(GramSystem { matrix: assemble_gram(basis, potential)?, rhs: assemble_rhs(basis, f) })
}

/// Coefficients and diagnostics of an SPD solve.
#[derive(Clone, Debug)]
pub struct ExteriorSolution {
    pub coefficients: DVector<f64>,
    pub relative_residual: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl ExteriorSolution {
    pub fn condition_number(&self) -> f64 {
        self.max_eigenvalue / self.min_eigenvalue
    }
}

/// `c = A⁻¹ b` by Cholesky with one step of iterative refinement.
pub fn solve_exterior(system: &GramSystem) -> Result<ExteriorSolution> {
    let a = &system.matrix;
    let b = &system.rhs;
    let m = a.nrows();
    if a.ncols() != m || b.len() != m {
        return Err(Error::InvalidArgument("Gram system is not square".into()));
    }
    let asym = (a - a.transpose()).amax();
    if asym > 1e-12 * a.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!("Gram matrix is not symmetric ({asym:e})")));
    }
    if m == 0 {
        return Ok(ExteriorSolution {
            coefficients: DVector::zeros(0),
            relative_residual: 0.0,
            min_eigenvalue: f64::NAN,
            max_eigenvalue: f64::NAN,
        });
    }
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("Gram matrix is not positive definite".into()))?;
    let mut c = chol.solve(b);
    let r = b - a * &c;
    c += chol.solve(&r);
    let bnorm = b.norm();
    let relative_residual = if bnorm == 0.0 { (a * &c).norm() } else { (b - a * &c).norm() / bnorm };
    if relative_residual >= 1e-10 {
        return Err(Error::Numerical(format!("Gram solve residual {relative_residual:e}")));
    }

    let max_eig = lanczos_top(m, &|v| a * v);
    let inv_eig = lanczos_top(m, &|v| chol.solve(v));
    Ok(ExteriorSolution {
        coefficients: c,
        relative_residual,
        min_eigenvalue: 1.0 / inv_eig,
        max_eigenvalue: max_eig,
    })
}

/// Largest eigenvalue of a symmetric positive operator by Lanczos with full
/// reorthogonalization from a fixed random start.
fn lanczos_top(m: usize, apply: &dyn Fn(&DVector<f64>) -> DVector<f64>) -> f64 {
    let steps = m.min(80);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut basis = vec![DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0)).normalize()];
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for k in 0..steps {
        let mut w = apply(&basis[k]);
        alpha.push(w.dot(&basis[k]));
        for _ in 0..2 {
            for q in &basis {
                let proj = w.dot(q);
                w.axpy(-proj, q, 1.0);
            }
        }
        let b = w.norm();
        if k + 1 == steps || b <= 1e-14 * alpha[0].abs() {
            break;
        }
        beta.push(b);
        basis.push(w / b);
    }
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| match i.abs_diff(j) {
        0 => alpha[i],
        1 => beta[i.min(j)],
        _ => 0.0,
    });
    t.symmetric_eigenvalues().max()
}

/// `u(x) = Σ_j c_j (I_{2s} ψ_j)(x) = Σ_j c_j h_j^{2s} g₁(|x − x_j| / h_j)`.
pub fn evaluate_u<const D: usize>(
    basis: &ExteriorBasis<D>,
    potential: &BumpPotential,
    c: &DVector<f64>,
    x: &Point<D>,
) -> f64 {
    let two_s = 2.0 * potential.order();
    let scales: Vec<f64> =
        (0..=basis.depth).map(|l| basis.overlap * basis.h / f64::from(1u32 << l)).collect();
    let weights: Vec<f64> = scales.iter().map(|h| h.powf(two_s)).collect();
    basis
        .nodes
        .iter()
        .zip(&basis.levels)
        .zip(c.iter())
        .map(|((node, &l), cj)| {
            let l = l as usize;
            cj * weights[l] * potential.eval(dist(x, node) / scales[l])
        })
        .sum::<f64>()
}

/// `u` sampled on the periodic grid; the basis must lie in the grid box.
pub fn reconstruct_u<const D: usize>(
    basis: &ExteriorBasis<D>,
    potential: &BumpPotential,
    c: &DVector<f64>,
    params: &SolverParams,
) -> Result<GridFunction> {
    if params.dim() != D {
        return Err(Error::InvalidArgument("grid dimension does not match basis".into()));
    }
    let values: Vec<f64> = (0..params.node_count())
        .into_par_iter()
        .map(|i| {
            let x = node_coords(params, i);
            evaluate_u(basis, potential, c, &std::array::from_fn(|a| x[a]))
        })
        .collect();
    GridFunction::new(*params, values)
}

/// Smooth test bumps with supports strictly inside Ω.
#[derive(Clone, Debug)]
pub struct TestFamily<const D: usize> {
    pub centers: Vec<Point<D>>,
    pub radius: f64,
}

impl<const D: usize> TestFamily<D> {
    /// Bumps of radius `ρ = δ_max / 3` on a lattice of spacing `ρ`, kept where
    /// `δ(x) ≥ 1.25 ρ`; `δ_max` is the largest δ over a sampling lattice.
    pub fn inside(domain: &Domain<D>) -> Self {
        let (lo, hi) = domain.bounds();
        let steps = 40usize;
        let mut best = 0.0f64;
        for flat in 0..(steps + 1).pow(D as u32) {
            let mut rest = flat;
            let x: Point<D> = std::array::from_fn(|a| {
                let k = rest % (steps + 1);
                rest /= steps + 1;
                lo[a] + (hi[a] - lo[a]) * k as f64 / steps as f64
            });
            if domain.contains(&x) {
                best = best.max(domain.boundary_distance(&x));
            }
        }
        let radius = best / 3.0;
        let mut centers = Vec::new();
        let c = domain.center();
        let reach = ((hi[0] - lo[0]).max(hi[D - 1] - lo[D - 1]) / radius).ceil() as i64;
        let span = (2 * reach + 1) as usize;
        for flat in 0..span.pow(D as u32) {
            let mut rest = flat;
            let x: Point<D> = std::array::from_fn(|a| {
                let k = (rest % span) as i64 - reach;
                rest /= span;
                c[a] + radius * k as f64
            });
            if domain.contains(&x) && domain.boundary_distance(&x) >= 1.25 * radius {
                centers.push(x);
            }
        }
        Self { centers, radius }
    }

    pub fn grid_function(&self, k: usize, params: &SolverParams) -> Result<GridFunction> {
        let c = self.centers[k];
        GridFunction::from_fn(*params, |x| {
            let r = (0..D).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt();
            smooth_bump(r / self.radius)
        })
    }
}

/// `max_ψ |⟨Δˢu, ψ⟩| / (‖u‖_{Ḣˢ} ‖ψ‖_{Ḣˢ})` over the interior test family,
/// norms with the `(2π|ξ|)` weight so the ratio is at most one.
pub fn weak_residual<const D: usize>(
    u: &GridFunction,
    domain: &Domain<D>,
    s: f64,
    bank: &LPFilterBank,
) -> Result<f64> {
    let params = *u.params();
    let family = TestFamily::inside(domain);
    if family.centers.is_empty() {
        return Err(Error::Geometry("no interior test bump fits in the domain".into()));
    }
    if family.radius < 2.0 * params.spacing() {
        return Err(Error::Geometry(format!(
            "interior test bumps of radius {} are not resolved by grid spacing {}",
            family.radius,
            params.spacing()
        )));
    }
    for c in &family.centers {
        if domain.boundary_distance(c) <= family.radius {
            return Err(Error::Geometry("test bump support touches the boundary".into()));
        }
    }
    let u_norm = hs_norm_angular(u, s)?;
    if u_norm == 0.0 {
        return Ok(0.0);
    }
    let lap = delta_s_fourier(u, s)?;
    let mut worst = 0.0f64;
    for k in 0..family.centers.len() {
        let psi = family.grid_function(k, &params)?;
        let pairing = dual_pairing(&lap, &psi, bank)?;
        worst = worst.max(pairing.abs() / (u_norm * hs_norm_angular(&psi, s)?));
    }
    Ok(worst)
}

/// `‖u‖_{Ḣˢ} / ‖F‖_{Ḣˢ}` with both norms from the filter bank; `F` is sampled
/// on the grid as its own extension. Zero data with zero `u` gives 0.
pub fn stability_ratio<const D: usize>(
    u: &GridFunction,
    f: &ExteriorData<D>,
    s: f64,
    bank: &LPFilterBank,
) -> Result<f64> {
    let params = *u.params();
    let fg = GridFunction::from_fn(params, |x| f.eval(&std::array::from_fn(|a| x[a])))?;
    let (un, fnorm) = (hs_norm_lp(u, s, bank)?, hs_norm_lp(&fg, s, bank)?);
    if fnorm == 0.0 {
        if un == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Numerical("nonzero solution for zero exterior data".into()));
    }
    Ok(un / fnorm)
}

/// Random smooth field supported inside Ω (negative control for the residual).
pub fn random_interior_field<const D: usize>(
    domain: &Domain<D>,
    params: &SolverParams,
    seed: u64,
) -> Result<GridFunction> {
    let family = TestFamily::inside(domain);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = family.centers.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
    GridFunction::from_fn(*params, |x| {
        family
            .centers
            .iter()
            .zip(&amps)
            .map(|(c, a)| {
                let r = (0..D).map(|i| (x[i] - c[i]).powi(2)).sum::<f64>().sqrt();
                a * smooth_bump(r / family.radius)
            })
            .sum()
    })
}

/// Discretization settings for one exterior solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalerkinConfig {
    pub r_trunc: f64,
    /// Coarse lattice spacing.
    pub h: f64,
    /// Boundary-layer levels below the coarse lattice.
    pub depth: u32,
    /// Support radius over lattice spacing.
    pub overlap: f64,
    pub box_length: f64,
}

impl GalerkinConfig {
    pub fn new(r_trunc: f64, h: f64, box_length: f64) -> Self {
        Self { r_trunc, h, depth: 3, overlap: 1.5, box_length }
    }

    pub fn with_spacing(&self, h: f64) -> Self {
        Self { h, ..*self }
    }

    pub fn with_truncation(&self, r_trunc: f64) -> Self {
        Self { r_trunc, ..*self }
    }
}

/// Exterior density and the potential it generates.
#[derive(Clone, Debug)]
pub struct GalerkinSolution<const D: usize> {
    pub basis: ExteriorBasis<D>,
    pub solve: ExteriorSolution,
    potential: BumpPotential,
    r_trunc: f64,
}

impl<const D: usize> GalerkinSolution<D> {
    pub fn u(&self, x: &Point<D>) -> f64 {
        evaluate_u(&self.basis, &self.potential, &self.solve.coefficients, x)
    }

    pub fn grid(&self, params: &SolverParams) -> Result<GridFunction> {
        reconstruct_u(&self.basis, &self.potential, &self.solve.coefficients, params)
    }

    /// Root-mean-square of `u − F` over rings from the boundary out to
    /// `R_trunc / 2`, skipping sample points inside Ω.
    pub fn trace_error(&self, domain: &Domain<D>, f: &ExteriorData<D>) -> f64 {
        let c = domain.center();
        let r0 = 1.02 * domain.outer_radius();
        let r1 = 0.5 * self.r_trunc;
        let (mut sum, mut count) = (0.0, 0usize);
        for dir in sample_directions::<D>(64) {
            for k in 0..=32 {
                let r = r0 + (r1 - r0) * k as f64 / 32.0;
                let x: Point<D> = std::array::from_fn(|a| c[a] + r * dir[a]);
                if !domain.contains(&x) {
                    sum += (self.u(&x) - f.eval(&x)).powi(2);
                    count += 1;
                }
            }
        }
        if count == 0 {
            0.0
        } else {
            (sum / count as f64).sqrt()
        }
    }
}

/// Unit directions: equally spaced in 2D, a Fibonacci sphere in 3D.
fn sample_directions<const D: usize>(count: usize) -> Vec<Point<D>> {
    (0..count)
        .map(|k| {
            let mut v = [0.0; D];
            if D == 2 {
                let t = 2.0 * PI * (k as f64 + 0.5) / count as f64;
                v[0] = t.cos();
                v[1] = t.sin();
            } else {
                let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                let r = (1.0 - z * z).sqrt();
                let t = PI * (3.0 - 5f64.sqrt()) * k as f64;
                v[0] = r * t.cos();
                v[1] = r * t.sin();
                v[2] = z;
            }
            v
        })
        .collect()
}

/// Assemble, factor and solve for exterior data supported in `B(c, R_trunc/2)`.
pub fn solve_galerkin<const D: usize>(
    domain: &Domain<D>,
    f: &ExteriorData<D>,
    potential: &BumpPotential,
    cfg: &GalerkinConfig,
) -> Result<GalerkinSolution<D>> {
    f.validate()?;
    match f.support_radius(&domain.center()) {
        Some(r) if r <= 0.5 * cfg.r_trunc * (1.0 + 1e-12) => {}
        _ => {
            return Err(Error::InvalidParams(format!(
                "exterior data must vanish outside B(center, R_trunc/2) = {}",
                0.5 * cfg.r_trunc
            )))
        }
    }
    solve_unchecked(domain, f, potential, cfg)
}

fn solve_unchecked<const D: usize>(
    domain: &Domain<D>,
    f: &ExteriorData<D>,
    potential: &BumpPotential,
    cfg: &GalerkinConfig,
) -> Result<GalerkinSolution<D>> {
    let basis =
        ExteriorBasis::layered(domain, cfg.r_trunc, cfg.h, cfg.depth, cfg.overlap, cfg.box_length)?;
    let system = build_system(&basis, potential, f)?;
    let solve = solve_exterior(&system)?;
    Ok(GalerkinSolution { basis, solve, potential: potential.clone(), r_trunc: cfg.r_trunc })
}

/// Probe values at spacings `h, 2h, 4h` with an extrapolated value and
/// error budget per probe.
#[derive(Clone, Debug)]
pub struct RefinementEstimate {
    /// `[u_h, u_2h, u_4h]` per probe.
    pub ladder: Vec<[f64; 3]>,
    /// Observed convergence order, `NaN` when the differences vanish.
    pub observed_order: Vec<f64>,
    pub extrapolated: Vec<f64>,
    /// `|extrapolated − u_h|`.
    pub discretization: Vec<f64>,
    /// `|u(R_trunc) − u(3 R_trunc / 4)|` at spacing `4h`.
    pub truncation: Vec<f64>,
    pub min_eigenvalue: f64,
    pub max_condition: f64,
}

impl RefinementEstimate {
    pub fn budget(&self, i: usize) -> f64 {
        self.discretization[i] + self.truncation[i]
    }
}

/// Richardson extrapolation across `h, 2h, 4h`. The order used is the
/// observed one clamped to `[1/4, 1]`, so faster apparent convergence is
/// never trusted.
pub fn refinement_estimate<const D: usize>(
    domain: &Domain<D>,
    f: &ExteriorData<D>,
    potential: &BumpPotential,
    cfg: &GalerkinConfig,
    probes: &[Point<D>],
) -> Result<RefinementEstimate> {
    for x in probes {
        if !domain.contains(x) {
            return Err(Error::InvalidArgument(format!("probe {x:?} is not inside the domain")));
        }
    }
    let mut ladder = vec![[0.0; 3]; probes.len()];
    let (mut min_eig, mut max_cond) = (f64::INFINITY, 0.0f64);
    let mut coarse = None;
    for (level, scale) in [1.0, 2.0, 4.0].into_iter().enumerate() {
        let sol = solve_galerkin(domain, f, potential, &cfg.with_spacing(scale * cfg.h))?;
        for (row, x) in ladder.iter_mut().zip(probes) {
            row[level] = sol.u(x);
        }
        if !sol.basis.is_empty() {
            min_eig = min_eig.min(sol.solve.min_eigenvalue);
            max_cond = max_cond.max(sol.solve.condition_number());
        }
        coarse = Some(sol);
    }
    let coarse = coarse.expect("three levels solved");
    // the shorter basis only has to cover supp F, not twice it
    let short_cfg = cfg.with_spacing(4.0 * cfg.h).with_truncation(0.75 * cfg.r_trunc);
    match f.support_radius(&domain.center()) {
        Some(r) if r <= short_cfg.r_trunc => {}
        _ => {
            return Err(Error::InvalidParams(
                "exterior data must vanish outside B(center, 3 R_trunc / 4) for the truncation estimate".into(),
            ))
        }
    }
    let short = solve_unchecked(domain, f, potential, &short_cfg)?;
    let truncation: Vec<f64> = probes.iter().map(|x| (coarse.u(x) - short.u(x)).abs()).collect();
    let mut observed_order = Vec::new();
    let mut extrapolated = Vec::new();
    let mut discretization = Vec::new();
    for [u1, u2, u4] in &ladder {
        let (d1, d2) = (u1 - u2, u2 - u4);
        let p = (d2.abs() / d1.abs()).log2();
        let used = if p.is_finite() { p.clamp(0.25, 1.0) } else { 1.0 };
        let correction = d1 / (2f64.powf(used) - 1.0);
        observed_order.push(if p.is_finite() { p } else { f64::NAN });
        extrapolated.push(u1 + correction);
        discretization.push(correction.abs());
    }
    Ok(RefinementEstimate {
        ladder,
        observed_order,
        extrapolated,
        discretization,
        truncation,
        min_eigenvalue: min_eig,
        max_condition: max_cond,
    })
}
