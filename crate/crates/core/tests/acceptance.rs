//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use fraclap_core::exterior::ExteriorData;
use fraclap_core::frac_ops::{delta_s_fourier, delta_s_singular, riesz_fourier};
use fraclap_core::galerkin::{
    assemble_gram, assemble_rhs, random_interior_field, refinement_estimate, solve_exterior,
    solve_galerkin, stability_ratio, weak_residual, BumpPotential, ExteriorBasis, GalerkinConfig,
    GalerkinSolution, GramSystem,
};
use fraclap_core::geometry::{AnnulusFamily, Domain, Point};
use fraclap_core::lp_norms::{
    gagliardo_seminorm, hs_norm_angular, hs_norm_direct, hs_norm_lp, LPFilterBank,
};
use fraclap_core::poisson_kernel::{
    check_kernel_bounds, solve_ball_quadrature, BallKernel, BoundSampling,
};
use fraclap_core::quadrature::GaussLegendre;
use fraclap_core::stable_walk::{
    annulus_exit_mass, walk_path, wos_estimate, ExitLaw, WalkConfig,
};
use fraclap_core::{GridFunction, SolverParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

static ASSEMBLIES: AtomicUsize = AtomicUsize::new(0);
static SPD: AtomicUsize = AtomicUsize::new(0);

fn record_assembly(min_eigenvalue: f64) {
    ASSEMBLIES.fetch_add(1, Ordering::Relaxed);
    if min_eigenvalue > 0.0 {
        SPD.fetch_add(1, Ordering::Relaxed);
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gaussian(p: SolverParams, c: [f64; 3], w: f64) -> GridFunction {
    GridFunction::from_fn(p, |x| {
        let r2: f64 = (0..p.dim()).map(|a| (x[a] - c[a]).powi(2)).sum();
        (-r2 / (2.0 * w * w)).exp()
    })
    .unwrap()
}

fn rel_l2(a: &GridFunction, b: &GridFunction) -> f64 {
    a.combine(1.0, b, -1.0).unwrap().l2_norm() / b.l2_norm()
}

const CENTER: Point<2> = [8.0, 8.0];

fn unit_ball() -> Domain<2> {
    Domain::ball(CENTER, 1.0).unwrap()
}

fn flagship_data() -> ExteriorData<2> {
    ExteriorData::AnnulusBump { center: CENTER, inner: 1.2, outer: 1.8, amplitude: 1.0 }
}

fn c1_definition_consistency() -> Outcome {
    let family = [
        ([3.8, 4.1, 0.0], 0.5),
        ([4.0, 4.0, 0.0], 0.6),
        ([4.3, 3.7, 0.0], 0.45),
        ([3.5, 4.4, 0.0], 0.7),
        ([4.1, 3.9, 0.0], 0.55),
    ];
    let mut worst = 0.0f64;
    let mut monotone = true;
    for s in [0.25, 0.5, 0.75] {
        for (c, w) in family {
            let errs: Vec<f64> = [64, 128]
                .iter()
                .map(|&n| {
                    let p = SolverParams::new(2, s, n, 8.0).unwrap();
                    let f = gaussian(p, c, w);
                    rel_l2(&delta_s_singular(&f, s).unwrap(), &delta_s_fourier(&f, s).unwrap())
                })
                .collect();
            worst = worst.max(errs[1]);
            monotone &= errs[1] < errs[0];
        }
    }
    // three-dimensional smoke check
    let p3 = SolverParams::new(3, 0.5, 32, 8.0).unwrap();
    let f3 = gaussian(p3, [4.0, 4.1, 3.9], 0.7);
    let e3 = rel_l2(&delta_s_singular(&f3, 0.5).unwrap(), &delta_s_fourier(&f3, 0.5).unwrap());
    outcome(
        worst < 1e-2 && monotone && e3 < 1e-2,
        format!("max rel L2 {worst:.2e} at N=128, decreasing {monotone}, 3D N=32 {e3:.2e}"),
    )
}

fn band_limited(p: SolverParams, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<([f64; 3], f64, f64)> = (0..12)
        .map(|_| {
            let k = [
                rng.random_range(-6i32..=6) as f64,
                rng.random_range(-6i32..=6) as f64,
                rng.random_range(-6i32..=6) as f64,
            ];
            (k, rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI))
        })
        .collect();
    let l = p.box_length();
    let f = GridFunction::from_fn(p, |x| {
        modes
            .iter()
            .map(|(k, a, phase)| {
                let dot: f64 = (0..p.dim()).map(|d| k[d] * x[d]).sum();
                a * (2.0 * PI * dot / l + phase).cos()
            })
            .sum()
    })
    .unwrap();
    f.centered()
}

fn c2_inverse_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (n, size) in [(2, 128), (3, 32)] {
        for s in [0.25, 0.5, 0.75] {
            for seed in 0..3 {
                let p = SolverParams::new(n, s, size, 8.0).unwrap();
                let f = band_limited(p, seed);
                let back = delta_s_fourier(&riesz_fourier(&f, 2.0 * s).unwrap(), s).unwrap();
                worst = worst.max(rel_l2(&back, &f));
            }
        }
    }
    outcome(worst < 1e-10, format!("max round-trip error {worst:.2e}"))
}

fn c3_riesz_isometry() -> Outcome {
    let mut worst = 0.0f64;
    for (n, size) in [(2, 128), (3, 32)] {
        let p = SolverParams::new(n, 0.5, size, 8.0).unwrap();
        let f = band_limited(p, 11);
        for alpha in [0.0, 0.3, 0.6] {
            for sigma in [0.5, 1.0] {
                let lhs = hs_norm_angular(&riesz_fourier(&f, sigma).unwrap(), alpha + sigma).unwrap();
                let rhs = hs_norm_angular(&f, alpha).unwrap();
                worst = worst.max((lhs / rhs - 1.0).abs());
            }
        }
    }
    outcome(worst < 1e-10, format!("max relative norm defect {worst:.2e}"))
}

/// `C(n, α)` relating the second-difference seminorm to the direct norm:
/// `(2π)^{2α} (8 − 2·4^α) π^{n/2} Γ(1 − α) / (α 4^α Γ(n/2 + α))`, with the
/// limit `(2π)² 8 ln 4 π^{n/2} / (4 Γ(n/2 + 1))` at α = 1.
fn second_difference_constant(n: usize, alpha: f64) -> f64 {
    use statrs::function::gamma::gamma;
    let half = n as f64 / 2.0;
    if (alpha - 1.0).abs() < 1e-12 {
        return (2.0 * PI).powi(2) * 8.0 * 4f64.ln() * PI.powf(half) / (4.0 * gamma(half + 1.0));
    }
    (2.0 * PI).powf(2.0 * alpha) * (8.0 - 2.0 * 4f64.powf(alpha)) * PI.powf(half)
        * gamma(1.0 - alpha)
        / (alpha * 4f64.powf(alpha) * gamma(half + alpha))
}

fn c4_norm_machinery() -> Outcome {
    let p = SolverParams::new(2, 0.5, 64, 8.0).unwrap();
    let bank = LPFilterBank::new(&p);
    let partition = (1..p.node_count())
        .map(|k| (bank.partition_sum(k) - 1.0).abs())
        .fold(0.0, f64::max);
    let family: Vec<GridFunction> = [
        ([4.0, 4.0, 0.0], 0.35),
        ([3.7, 4.2, 0.0], 0.45),
        ([4.0, 4.0, 0.0], 0.55),
        ([4.2, 3.9, 0.0], 0.65),
        ([3.9, 4.1, 0.0], 0.75),
    ]
    .iter()
    .map(|&(c, w)| gaussian(p, c, w))
    .chain((0..3).map(|seed| band_limited(p, 100 + seed)))
    .collect();
    let c_eq = 2.0;
    let mut lp_lo = f64::INFINITY;
    let mut lp_hi = 0.0f64;
    for f in &family {
        for alpha in [-0.5, 0.25, 0.5, 1.0, 1.5] {
            let lp = hs_norm_lp(f, alpha, &bank).unwrap();
            let direct = if alpha >= 0.0 {
                hs_norm_direct(f, alpha).unwrap()
            } else {
                // negative order: weight |ξ|^{2α} over the nonzero modes
                let scaled = riesz_fourier(&f.centered(), -2.0 * alpha).unwrap();
                hs_norm_direct(&scaled, -alpha).unwrap() * (2.0 * PI).powf(-2.0 * alpha)
            };
            let r = lp / direct;
            lp_lo = lp_lo.min(r);
            lp_hi = lp_hi.max(r);
        }
    }
    let mut spread = 0.0f64;
    let mut closed_form = 0.0f64;
    for alpha in [0.25, 0.5, 0.75] {
        let ratios: Vec<f64> = family[..5]
            .iter()
            .map(|f| {
                let g = gagliardo_seminorm(f, alpha).unwrap();
                let d = hs_norm_direct(f, alpha).unwrap();
                g * g / (d * d)
            })
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        spread = spread.max(hi / lo - 1.0);
        let c = second_difference_constant(2, alpha);
        closed_form = closed_form.max(ratios.iter().map(|r| (r / c - 1.0).abs()).fold(0.0, f64::max));
    }
    outcome(
        partition < 1e-12 && lp_lo >= 1.0 / c_eq && lp_hi <= c_eq && spread < 2e-2,
        format!(
            "partition defect {partition:.1e}, LP/direct in [{lp_lo:.3}, {lp_hi:.3}] (bracket 1/{c_eq}..{c_eq}), \
             Gagliardo ratio spread {:.2}% (closed-form constant within {:.2}%)",
            100.0 * spread,
            100.0 * closed_form
        ),
    )
}

fn c5_exit_law() -> Outcome {
    let s = 0.5;
    let law = ExitLaw::new(s).unwrap();
    let draws = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut radii: Vec<f64> = (0..draws)
        .map(|_| {
            let z = law.sample(&[0.0, 0.0], 1.0, &mut rng);
            (z[0] * z[0] + z[1] * z[1]).sqrt()
        })
        .collect();
    radii.sort_by(f64::total_cmp);
    let nf = draws as f64;
    let ks = radii
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = law.tabulated_cdf(t);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);

    // exit position of full walks from an off-centre point against the kernel
    let domain = unit_ball();
    let kernel = BallKernel::new(CENTER, 1.0, s).unwrap();
    let x0 = [8.5, 8.0];
    let edges = [1.0, 1.02, 1.05, 1.1, 1.2, 1.4, 1.7, 2.2, 3.0, 5.0];
    let sectors = 8;
    let bins = edges.len() * sectors;
    let mut counts = vec![0usize; bins];
    let cfg = WalkConfig::default();
    let walks = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..walks {
        let z = walk_path(&domain, &law, &x0, &cfg, &mut rng).unwrap().exit_point;
        let (dx, dy) = (z[0] - CENTER[0], z[1] - CENTER[1]);
        let rho = (dx * dx + dy * dy).sqrt();
        let ring = edges.iter().rposition(|&e| rho >= e).unwrap_or(0);
        let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
        let sector = ((angle / (2.0 * PI) * sectors as f64) as usize).min(sectors - 1);
        counts[ring * sectors + sector] += 1;
    }
    let gl = GaussLegendre::new(24);
    let expo = 1.0 / (1.0 - s);
    let mut probs = vec![0.0; bins];
    for ring in 0..edges.len() - 1 {
        // ρ = 1 + w^{1/(1−s)} removes the boundary singularity
        let (wa, wb) = ((edges[ring] - 1.0).powf(1.0 - s), (edges[ring + 1] - 1.0).powf(1.0 - s));
        for sector in 0..sectors {
            let (ta, tb) = (
                2.0 * PI * sector as f64 / sectors as f64,
                2.0 * PI * (sector + 1) as f64 / sectors as f64,
            );
            probs[ring * sectors + sector] = gl.integrate(wa, wb, |w| {
                let rho = 1.0 + w.powf(expo);
                let jac = expo * w.powf(expo - 1.0);
                jac * rho
                    * gl.integrate(ta, tb, |t| {
                        let y = [CENTER[0] + rho * t.cos(), CENTER[1] + rho * t.sin()];
                        kernel.eval(&x0, &y).unwrap()
                    })
            });
        }
    }
    // outermost ring: angular shares from a far shell, mass from the rest
    let inner_mass: f64 = probs.iter().sum();
    let far_weights: Vec<f64> = (0..sectors)
        .map(|sector| {
            let (ta, tb) = (
                2.0 * PI * sector as f64 / sectors as f64,
                2.0 * PI * (sector + 1) as f64 / sectors as f64,
            );
            gl.integrate(5.0, 40.0, |rho| {
                rho * gl.integrate(ta, tb, |t| {
                    kernel.eval(&x0, &[CENTER[0] + rho * t.cos(), CENTER[1] + rho * t.sin()]).unwrap()
                })
            })
        })
        .collect();
    let far_total: f64 = far_weights.iter().sum();
    let last = edges.len() - 1;
    for sector in 0..sectors {
        probs[last * sectors + sector] = (1.0 - inner_mass) * far_weights[sector] / far_total;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&o, &p)| {
            let e = p * walks as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (bins - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
    outcome(
        ks < 0.005 && p_value > 0.01,
        format!("KS {ks:.2e} at 1e6 draws, chi2 {chi2:.1} on {dof} dof, p = {p_value:.3}"),
    )
}

fn c6_kernel_mass() -> Outcome {
    let domain = unit_ball();
    let one = ExteriorData::Constant(1.0);
    let law = ExitLaw::new(0.5).unwrap();
    let kernel = BallKernel::new(CENTER, 1.0, 0.5).unwrap();
    let points: Vec<Point<2>> = (0..10)
        .map(|k| {
            let r = 0.09 * k as f64;
            let t = 0.7 * k as f64;
            [CENTER[0] + r * t.cos(), CENTER[1] + r * t.sin()]
        })
        .collect();
    let mut mass_err = 0.0f64;
    let mut wos_worst = 0.0f64;
    let mut wos_sigma = 0.0f64;
    for (k, x) in points.iter().enumerate() {
        mass_err = mass_err.max((solve_ball_quadrature(&kernel, &one, x).unwrap() - 1.0).abs());
        let e = wos_estimate(&domain, &one, x, &law, 1_000_000, 600 + k as u64, &WalkConfig::default())
            .unwrap();
        wos_worst = wos_worst.max((e.mean - 1.0).abs() - 3.0 * e.stderr);
        wos_sigma = wos_sigma.max(e.stderr);
    }
    // Galerkin data must be supported in the annulus, so constants are outside
    // its class; report its trace accuracy on the flagship data instead
    let pot = BumpPotential::new(2, 0.5).unwrap();
    let sol = solve_galerkin(&domain, &flagship_data(), &pot, &GalerkinConfig::new(3.6, 0.2, 16.0))
        .unwrap();
    let trace = sol.trace_error(&domain, &flagship_data());
    outcome(
        mass_err < 1e-3 && wos_worst <= 0.0 && wos_sigma < 5e-3,
        format!(
            "kernel mass error {mass_err:.1e} at 10 points, WOS excess over 3 sigma {:.1e} (sigma {wos_sigma:.1e}), \
             Galerkin trace RMS {trace:.2e} at h = 0.2 (reported)",
            wos_worst.max(0.0)
        ),
    )
}

const PROBES: [Point<2>; 5] = [[8.0, 8.0], [8.3, 8.0], [8.0, 8.6], [7.4, 7.6], [8.85, 8.0]];

fn c7_cross_validation() -> Outcome {
    let s = 0.5;
    let domain = unit_ball();
    let f = flagship_data();
    let kernel = BallKernel::new(CENTER, 1.0, s).unwrap();
    let law = ExitLaw::new(s).unwrap();
    let pot = BumpPotential::new(2, s).unwrap();
    let est = match refinement_estimate(&domain, &f, &pot, &GalerkinConfig::new(3.6, 0.1, 16.0), &PROBES) {
        Ok(e) => e,
        Err(e) => return outcome(false, format!("Galerkin ladder failed: {e}")),
    };
    for _ in 0..4 {
        record_assembly(est.min_eigenvalue);
    }
    let mut pass = true;
    let mut worst = [0.0f64; 3];
    for (i, x) in PROBES.iter().enumerate() {
        let q = solve_ball_quadrature(&kernel, &f, x).unwrap();
        let w = wos_estimate(&domain, &f, x, &law, 1_000_000, 700 + i as u64, &WalkConfig::default())
            .unwrap();
        let g = est.extrapolated[i];
        let (bq, bw, bg) = (1e-3, 3.0 * w.stderr, est.budget(i));
        let pairs = [(g - q).abs() / (bg + bq), (w.mean - q).abs() / (bw + bq), (g - w.mean).abs() / (bg + bw)];
        for (k, r) in pairs.iter().enumerate() {
            worst[k] = worst[k].max(*r);
            pass &= *r <= 1.0;
        }
        println!(
            "    probe {x:?}: quadrature {q:.5}, WOS {:.5} +- {:.1e}, Galerkin {g:.5} (h-ladder {:.5} {:.5} {:.5}, order {:.2}, budget {bg:.1e} incl. truncation {:.1e})",
            w.mean, w.stderr, est.ladder[i][0], est.ladder[i][1], est.ladder[i][2], est.observed_order[i], est.truncation[i]
        );
    }
    outcome(
        pass,
        format!(
            "worst |difference| / budget: Galerkin-quadrature {:.2}, WOS-quadrature {:.2}, Galerkin-WOS {:.2}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn c8_weak_solution() -> Outcome {
    let s = 0.5;
    let domain = unit_ball();
    let pot = BumpPotential::new(2, s).unwrap();
    let sol = solve_galerkin(&domain, &flagship_data(), &pot, &GalerkinConfig::new(3.6, 0.2, 16.0)).unwrap();
    record_assembly(sol.solve.min_eigenvalue);
    let residual = |sol: &GalerkinSolution<2>, n: usize| {
        let params = SolverParams::new(2, s, n, 16.0).unwrap();
        let u = sol.grid(&params).unwrap();
        weak_residual(&u, &domain, s, &LPFilterBank::new(&params)).unwrap()
    };
    let (r128, r256) = (residual(&sol, 128), residual(&sol, 256));
    let params = SolverParams::new(2, s, 128, 16.0).unwrap();
    let noise = random_interior_field(&domain, &params, 5).unwrap();
    let control = weak_residual(&noise, &domain, s, &LPFilterBank::new(&params)).unwrap();
    let zero = ExteriorData::AnnulusBump { center: CENTER, inner: 1.2, outer: 1.8, amplitude: 0.0 };
    let z = solve_galerkin(&domain, &zero, &pot, &GalerkinConfig::new(3.6, 0.2, 16.0)).unwrap();
    record_assembly(z.solve.min_eigenvalue);
    let zero_max = z.grid(&params).unwrap().max_abs().max(z.solve.coefficients.amax());
    // SPD sweep over orders, spacings, layer depths and a box domain
    let boxed = Domain::cuboid([7.2, 7.4], [8.8, 8.6]).unwrap();
    for s in [0.2, 0.5, 0.8] {
        let pot = BumpPotential::new(2, s).unwrap();
        for (h, depth, overlap) in [(0.4, 0, 1.0), (0.3, 2, 1.5), (0.25, 3, 2.0)] {
            for d in [&domain, &boxed] {
                let basis = ExteriorBasis::layered(d, 3.6, h, depth, overlap, 16.0).unwrap();
                let gram = assemble_gram(&basis, &pot).unwrap();
                let m = basis.len();
                let sys = GramSystem { matrix: gram, rhs: nalgebra::DVector::from_element(m, 1.0) };
                match solve_exterior(&sys) {
                    Ok(sol) => record_assembly(sol.min_eigenvalue),
                    Err(_) => record_assembly(f64::NAN),
                }
            }
        }
    }
    let (total, ok) = (ASSEMBLIES.load(Ordering::Relaxed), SPD.load(Ordering::Relaxed));
    outcome(
        r256 < 5e-3 && r256 < r128 && zero_max == 0.0 && control > 0.1 && ok == total,
        format!(
            "weak residual {r128:.2e} (N=128) -> {r256:.2e} (N=256), random-field control {control:.2}, \
             zero data max |u| {zero_max:.1e}, SPD assemblies {ok}/{total}"
        ),
    )
}

fn stability_family() -> Vec<ExteriorData<2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut family = vec![flagship_data()];
    family.push(ExteriorData::AnnulusBump { center: CENTER, inner: 1.1, outer: 1.5, amplitude: -2.0 });
    while family.len() < 12 {
        let parts = rng.random_range(1..=3);
        let bumps = (0..parts)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..2.0 * PI);
                let r = rng.random_range(1.4..1.5);
                ExteriorData::Bump {
                    center: [CENTER[0] + r * t.cos(), CENTER[1] + r * t.sin()],
                    radius: rng.random_range(0.15..0.3),
                    amplitude: rng.random_range(-1.0..1.0),
                }
            })
            .collect();
        family.push(ExteriorData::Sum(bumps));
    }
    family
}

fn c9_stability() -> Outcome {
    let s = 0.5;
    let domain = unit_ball();
    let pot = BumpPotential::new(2, s).unwrap();
    let params = SolverParams::new(2, s, 128, 16.0).unwrap();
    let bank = LPFilterBank::new(&params);
    let family = stability_family();
    let frozen = 2.0;
    let mut ratios = vec![[0.0; 2]; family.len()];
    for (level, h) in [0.4, 0.2].into_iter().enumerate() {
        let cfg = GalerkinConfig::new(3.6, h, 16.0);
        let basis = ExteriorBasis::layered(&domain, cfg.r_trunc, h, cfg.depth, cfg.overlap, cfg.box_length)
            .unwrap();
        let gram = assemble_gram(&basis, &pot).unwrap();
        for (i, f) in family.iter().enumerate() {
            let sys = GramSystem { matrix: gram.clone(), rhs: assemble_rhs(&basis, f) };
            let solved = solve_exterior(&sys).unwrap();
            record_assembly(solved.min_eigenvalue);
            let u = fraclap_core::galerkin::reconstruct_u(&basis, &pot, &solved.coefficients, &params).unwrap();
            ratios[i][level] = stability_ratio(&u, f, s, &bank).unwrap();
        }
    }
    let max_ratio = ratios.iter().map(|r| r[0].max(r[1])).fold(0.0, f64::max);
    let drift = ratios.iter().map(|r| (r[1] / r[0] - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        max_ratio <= frozen && drift <= 0.25,
        format!(
            "{} data: max ratio {max_ratio:.3} (frozen bound {frozen}), max change under h-refinement {:.1}%",
            family.len(),
            100.0 * drift
        ),
    )
}

fn c10_kernel_bounds() -> Outcome {
    let kernel = BallKernel::new(CENTER, 1.0, 0.5).unwrap();
    let bounds: Vec<_> = (1..=4)
        .map(|seed| check_kernel_bounds(&kernel, 100_000, seed, &BoundSampling::default()).unwrap())
        .collect();
    let finite = bounds.iter().all(|b| {
        b.ratio_min.is_finite() && b.ratio_max.is_finite() && b.ratio_min > 0.0 && b.ratio_max >= b.ratio_min
    });
    let spread = |get: fn(&fraclap_core::poisson_kernel::KernelBounds) -> f64| {
        let v: Vec<f64> = bounds.iter().map(get).collect();
        v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0
    };
    let (lo, hi) = (spread(|b| b.ratio_min), spread(|b| b.ratio_max));
    outcome(
        finite && lo <= 0.1 && hi <= 0.1,
        format!(
            "bracket [{:.4}, {:.4}] at seed 1, seed-to-seed spread {:.1}% / {:.1}%",
            bounds[0].ratio_min,
            bounds[0].ratio_max,
            100.0 * lo,
            100.0 * hi
        ),
    )
}

fn c11_boundary_layer() -> Outcome {
    let law = ExitLaw::new(0.5).unwrap();
    let fam = AnnulusFamily::dyadic(unit_ball(), 0.4, 4).unwrap();
    let p = annulus_exit_mass(&fam, &CENTER, &law, 400_000, 11, &WalkConfig::default()).unwrap();
    let monotone = p.windows(2).all(|w| w[1].mean <= w[0].mean + 3.0 * (w[0].stderr + w[1].stderr));
    let halved = p[3].mean < 0.5 * p[0].mean;
    let listing: Vec<String> = fam
        .offsets()
        .iter()
        .zip(&p)
        .map(|(r, e)| format!("p({r}) = {:.4}", e.mean))
        .collect();
    outcome(monotone && halved, format!("{}, monotone {monotone}", listing.join(", ")))
}

fn main() {
    let criteria: [(u32, &str, u64, fn() -> Outcome); 11] = [
        (1, "definition consistency", 60, c1_definition_consistency),
        (2, "inverse identity", 10, c2_inverse_identity),
        (3, "Riesz isometry", 10, c3_riesz_isometry),
        (4, "norm machinery", 120, c4_norm_machinery),
        (5, "ball exit law", 120, c5_exit_law),
        (6, "kernel mass and representation", 300, c6_kernel_mass),
        (7, "three-way cross-validation", 600, c7_cross_validation),
        (8, "weak solution and uniqueness", 600, c8_weak_solution),
        (9, "stability", 600, c9_stability),
        (10, "kernel bounds", 60, c10_kernel_bounds),
        (11, "boundary-layer decay", 300, c11_boundary_layer),
    ];
    let mut failed = 0;
    for (id, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let pass = result.pass && elapsed <= Duration::from_secs(limit);
        failed += usize::from(!pass);
        println!(
            "criterion {id:>2} {}: {name}: {} ({:.1}s of {limit}s)",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    let (total, ok) = (ASSEMBLIES.load(Ordering::Relaxed), SPD.load(Ordering::Relaxed));
    println!("Gram assemblies positive definite: {ok}/{total}");
    if failed > 0 || ok != total {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
