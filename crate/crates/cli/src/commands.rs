use fraclap_core::exterior::ExteriorData;
use fraclap_core::frac_ops::{delta_s_fourier, delta_s_singular, riesz_fourier};
use fraclap_core::galerkin::{
    refinement_estimate, solve_galerkin, stability_ratio, weak_residual, BumpPotential, GalerkinConfig,
};
use fraclap_core::geometry::{AnnulusFamily, Point};
use fraclap_core::lp_norms::{gagliardo_seminorm, hs_norm_angular, hs_norm_direct, hs_norm_lp, LPFilterBank};
use fraclap_core::poisson_kernel::{check_kernel_bounds, solve_ball_quadrature, BallKernel, BoundSampling};
use fraclap_core::stable_walk::{annulus_exit_mass, wos_estimate, ExitLaw};
use fraclap_core::{GridFunction, SolverParams};
use serde_json::json;

use crate::config::Job;
use crate::output::{coord_header, num, RunResult, Table};
use crate::{Command, Failure};

/// Frozen norm-equivalence constant for the filter-bank norm.
const C_EQ: f64 = 2.0;

pub fn run<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    match job.command {
        Command::Norms => norms(job),
        Command::FraclapCheck => fraclap_check(job),
        Command::KernelCheck => kernel_check(job),
        Command::SolveWos => solve_wos(job),
        Command::SolveGalerkin => galerkin(job),
        Command::SolveBallQuadrature => ball_quadrature(job),
        Command::Compare => compare(job),
        Command::AnnulusDecay => annulus_decay(job),
    }
}

fn header<const D: usize>(tail: &[&str]) -> Vec<String> {
    let mut h = coord_header::<D>("x");
    h.extend(tail.iter().map(|s| s.to_string()));
    h
}

fn row<const D: usize>(x: &Point<D>, tail: &[f64]) -> Vec<String> {
    x.iter().chain(tail).map(|v| num(*v)).collect()
}

fn table(name: &str, header: Vec<String>) -> Table {
    Table { name: name.into(), header, rows: Vec::new() }
}

fn sample_data<const D: usize>(f: &ExteriorData<D>, p: &SolverParams) -> Result<GridFunction, Failure> {
    Ok(GridFunction::from_fn(*p, |x| f.eval(&std::array::from_fn(|a| x[a])))?)
}

/// The input field of the grid commands, loaded or sampled.
fn input_field<const D: usize>(job: &Job<D>) -> Result<GridFunction, Failure> {
    let p = job.params.expect("validated");
    let g = match (&job.field, &job.data) {
        (Some(path), _) => GridFunction::load(path)?,
        (None, Some(f)) => sample_data(f, &p)?,
        _ => unreachable!("validated"),
    };
    if !g.params().same_grid(&p) {
        return Err(Failure::Config("field file does not match the configured grid".into()));
    }
    if g.values().iter().any(|v| !v.is_finite()) {
        return Err(Failure::Config("input field has non-finite values".into()));
    }
    Ok(g)
}

fn norms<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let f = input_field(job)?;
    let bank = LPFilterBank::new(f.params());
    let mut out = RunResult::default();
    let mut t = Table::new("norms", &["alpha", "lp", "direct", "angular", "gagliardo", "lp_over_direct"]);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &alpha in &job.alphas {
        let lp = hs_norm_lp(&f, alpha, &bank)?;
        let direct = if alpha >= 0.0 {
            hs_norm_direct(&f, alpha)?
        } else {
            let scaled = riesz_fourier(&f.centered(), -2.0 * alpha)?;
            hs_norm_direct(&scaled, -alpha)? * (2.0 * std::f64::consts::PI).powf(-2.0 * alpha)
        };
        let angular = if alpha >= 0.0 { num(hs_norm_angular(&f, alpha)?) } else { String::new() };
        let gag = if alpha > 0.0 && alpha < 1.0 { num(gagliardo_seminorm(&f, alpha)?) } else { String::new() };
        let ratio = lp / direct;
        if direct > 0.0 {
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        t.push(vec![num(alpha), num(lp), num(direct), angular, gag, num(ratio)]);
    }
    out.tables.push(t);
    if lo <= hi {
        out.metric("lp_over_direct_min", lo);
        out.metric("lp_over_direct_max", hi);
        if lo < 1.0 / C_EQ || hi > C_EQ {
            out.violations.push(format!("filter-bank norm outside [1/{C_EQ}, {C_EQ}] times the direct norm"));
        }
    }
    Ok(out)
}

fn fraclap_check<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let f = input_field(job)?;
    let s = job.s;
    let fourier = delta_s_fourier(&f, s)?;
    let singular = delta_s_singular(&f, s)?;
    let scale = fourier.l2_norm();
    let gap = if scale > 0.0 { singular.combine(1.0, &fourier, -1.0)?.l2_norm() / scale } else { 0.0 };
    let centered = f.centered();
    let back = riesz_fourier(&fourier, 2.0 * s)?;
    let round_trip = if centered.l2_norm() > 0.0 {
        back.combine(1.0, &centered, -1.0)?.l2_norm() / centered.l2_norm()
    } else {
        back.l2_norm()
    };
    let (a, b) = (hs_norm_angular(&fourier, 0.0)?, hs_norm_angular(&f, 2.0 * s)?);
    let isometry = if b > 0.0 { (a / b - 1.0).abs() } else { a };
    let mut out = RunResult::default();
    let mut t = Table::new("fraclap_check", &["s", "definition_gap", "round_trip_error", "isometry_defect"]);
    t.push(vec![num(s), num(gap), num(round_trip), num(isometry)]);
    out.tables.push(t);
    out.grids.push(("delta_s".into(), fourier));
    out.metric("definition_gap", gap);
    out.metric("round_trip_error", round_trip);
    out.metric("isometry_defect", isometry);
    if gap > job.tol.definition_gap {
        out.violations.push(format!("definition gap {gap:e} above {:e}", job.tol.definition_gap));
    }
    if round_trip > 1e-10 || isometry > 1e-10 {
        out.violations.push("inverse identity or isometry defect above 1e-10".into());
    }
    Ok(out)
}

fn ball_kernel<const D: usize>(job: &Job<D>) -> Result<BallKernel<D>, Failure> {
    let d = job.domain.as_ref().expect("validated");
    Ok(BallKernel::new(d.center(), d.outer_radius(), job.s)?)
}

fn kernel_check<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let k = ball_kernel(job)?;
    let b = job.bounds.expect("validated");
    let mut out = RunResult::default();
    let one = ExteriorData::Constant(1.0);
    let f = job.data.as_ref().unwrap_or(&one);
    let mut t = table("kernel", header::<D>(&["u", "mass"]));
    let mut worst = 0.0f64;
    for x in &job.points {
        let u = solve_ball_quadrature(&k, f, x)?;
        let mass = solve_ball_quadrature(&k, &one, x)?;
        worst = worst.max((mass - 1.0).abs());
        t.push(row(x, &[u, mass]));
    }
    out.tables.push(t);
    let sampling =
        BoundSampling { min_interior_distance: b.min_interior_distance, exterior_range: b.exterior_range };
    let bounds = check_kernel_bounds(&k, b.samples, job.seed, &sampling)?;
    let mut t = Table::new("bounds", &["samples", "seed", "ratio_min", "ratio_max"]);
    t.push(vec![b.samples.to_string(), job.seed.to_string(), num(bounds.ratio_min), num(bounds.ratio_max)]);
    out.tables.push(t);
    out.metric("ratio_min", bounds.ratio_min);
    out.metric("ratio_max", bounds.ratio_max);
    out.metric("max_mass_defect", worst);
    if worst > job.tol.kernel_mass {
        out.violations.push(format!("kernel mass defect {worst:e} above {:e}", job.tol.kernel_mass));
    }
    if !(bounds.ratio_min > 0.0 && bounds.ratio_max.is_finite()) {
        out.violations.push("kernel bound ratios are not finite and positive".into());
    }
    Ok(out)
}

/// Seed for the walks from point `i`, so points are statistically independent.
fn point_seed(seed: u64, i: usize) -> u64 {
    seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn solve_wos<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let domain = job.domain.as_ref().expect("validated");
    let f = job.data.as_ref().expect("validated");
    let law = ExitLaw::new(job.s)?;
    let mut out = RunResult::default();
    let mut t = table("wos", header::<D>(&["mean", "stderr", "mean_steps"]));
    let mut steps = 0.0f64;
    for (i, x) in job.points.iter().enumerate() {
        let e = wos_estimate(domain, f, x, &law, job.samples, point_seed(job.seed, i), &job.walk)?;
        steps = steps.max(e.mean_steps);
        t.push(row(x, &[e.mean, e.stderr, e.mean_steps]));
    }
    out.tables.push(t);
    out.metric("samples", job.samples);
    out.metric("max_mean_steps", steps);
    Ok(out)
}

fn galerkin_config<const D: usize>(job: &Job<D>) -> GalerkinConfig {
    job.galerkin.expect("validated").0
}

fn galerkin<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let domain = job.domain.as_ref().expect("validated");
    let f = job.data.as_ref().expect("validated");
    let (cfg, refine) = job.galerkin.expect("validated");
    let params = job.params.expect("validated");
    let potential = BumpPotential::new(D, job.s)?;
    let sol = solve_galerkin(domain, f, &potential, &cfg)?;
    let mut out = RunResult::default();
    let mut t = if refine {
        table("galerkin", header::<D>(&["u", "extrapolated", "budget", "observed_order"]))
    } else {
        table("galerkin", header::<D>(&["u"]))
    };
    if refine {
        let est = refinement_estimate(domain, f, &potential, &cfg, &job.points)?;
        for (i, x) in job.points.iter().enumerate() {
            t.push(row(x, &[est.ladder[i][0], est.extrapolated[i], est.budget(i), est.observed_order[i]]));
        }
    } else {
        for x in &job.points {
            t.push(row(x, &[sol.u(x)]));
        }
    }
    out.tables.push(t);
    let u = sol.grid(&params)?;
    let bank = LPFilterBank::new(&params);
    let residual = weak_residual(&u, domain, job.s, &bank)?;
    let stability = stability_ratio(&u, f, job.s, &bank)?;
    out.metric("basis_size", sol.basis.len());
    out.metric("gram_min_eig", sol.solve.min_eigenvalue);
    out.metric("gram_max_eig", sol.solve.max_eigenvalue);
    out.metric("condition_number", sol.solve.condition_number());
    out.metric("relative_residual", sol.solve.relative_residual);
    out.metric("weak_residual", residual);
    out.metric("trace_error", sol.trace_error(domain, f));
    out.metric("stability_ratio", stability);
    out.grids.push(("u".into(), u));
    if residual > job.tol.weak_residual {
        out.violations.push(format!("weak residual {residual:e} above {:e}", job.tol.weak_residual));
    }
    if stability > job.tol.stability_bound {
        out.violations.push(format!("stability ratio {stability} above {}", job.tol.stability_bound));
    }
    Ok(out)
}

fn ball_quadrature<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let k = ball_kernel(job)?;
    let f = job.data.as_ref().expect("validated");
    let mut out = RunResult::default();
    let mut t = table("quadrature", header::<D>(&["u"]));
    for x in &job.points {
        t.push(row(x, &[solve_ball_quadrature(&k, f, x)?]));
    }
    out.tables.push(t);
    Ok(out)
}

fn compare<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let domain = job.domain.as_ref().expect("validated");
    let f = job.data.as_ref().expect("validated");
    let k = ball_kernel(job)?;
    let law = ExitLaw::new(job.s)?;
    let potential = BumpPotential::new(D, job.s)?;
    let est = refinement_estimate(domain, f, &potential, &galerkin_config(job), &job.points)?;
    let tol = job.tol;
    let mut out = RunResult::default();
    let mut t = table(
        "compare",
        header::<D>(&[
            "quadrature",
            "wos",
            "wos_stderr",
            "galerkin",
            "galerkin_budget",
            "galerkin_minus_quadrature",
            "wos_minus_quadrature",
            "galerkin_minus_wos",
        ]),
    );
    let mut worst = 0.0f64;
    for (i, x) in job.points.iter().enumerate() {
        let q = solve_ball_quadrature(&k, f, x)?;
        let w = wos_estimate(domain, f, x, &law, job.samples, point_seed(job.seed, i), &job.walk)?;
        let (g, bg) = (est.extrapolated[i], est.budget(i));
        let sw = tol.mc_sigmas * w.stderr;
        let checks = [
            ("galerkin/quadrature", (g - q).abs(), bg + tol.quadrature),
            ("wos/quadrature", (w.mean - q).abs(), sw + tol.quadrature),
            ("galerkin/wos", (g - w.mean).abs(), bg + sw),
        ];
        for (name, gap, budget) in checks {
            worst = worst.max(gap / budget);
            if gap > budget {
                out.violations.push(format!("point {i}: {name} gap {gap:e} exceeds budget {budget:e}"));
            }
        }
        t.push(row(x, &[q, w.mean, w.stderr, g, bg, g - q, w.mean - q, g - w.mean]));
    }
    out.tables.push(t);
    out.metric("worst_gap_over_budget", worst);
    out.metric("gram_min_eig", est.min_eigenvalue);
    out.metric("max_condition", est.max_condition);
    Ok(out)
}

fn annulus_decay<const D: usize>(job: &Job<D>) -> Result<RunResult, Failure> {
    let domain = job.domain.clone().expect("validated");
    let a = job.annulus.expect("validated");
    let fam = AnnulusFamily::dyadic(domain, a.first, a.count)?;
    let law = ExitLaw::new(job.s)?;
    let x = &job.points[0];
    let p = annulus_exit_mass(&fam, x, &law, job.samples, job.seed, &job.walk)?;
    let mut out = RunResult::default();
    let mut t = Table::new("annulus", &["k", "offset", "p", "stderr"]);
    for (k, (e, off)) in p.iter().zip(fam.offsets()).enumerate() {
        t.push(vec![k.to_string(), num(*off), num(e.mean), num(e.stderr)]);
    }
    out.tables.push(t);
    let monotone = p.windows(2).all(|w| {
        w[1].mean <= w[0].mean + job.tol.mc_sigmas * (w[0].stderr.hypot(w[1].stderr))
    });
    let ratio = p.last().map(|e| e.mean).unwrap_or(0.0) / p[0].mean;
    out.metric("monotone", monotone);
    out.metric("last_over_first", ratio);
    out.metric("profile", json!(p.iter().map(|e| e.mean).collect::<Vec<_>>()));
    if !monotone {
        out.violations.push("annulus exit mass is not decreasing within the Monte Carlo tolerance".into());
    }
    Ok(out)
}
