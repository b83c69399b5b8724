//! JSON run configuration and its validation into typed solver inputs.

use std::path::PathBuf;

use fraclap_core::exterior::ExteriorData;
use fraclap_core::galerkin::GalerkinConfig;
use fraclap_core::geometry::{Domain, Point, Region};
use fraclap_core::stable_walk::WalkConfig;
use fraclap_core::SolverParams;
use serde::{Deserialize, Serialize};

use crate::Command;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub s: f64,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub data: Option<DataSpec>,
    /// Binary grid file used by `norms` and `fraclap-check` instead of `data`.
    #[serde(default)]
    pub field: Option<PathBuf>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub walk: WalkSpec,
    #[serde(default)]
    pub galerkin: Option<GalerkinSpec>,
    #[serde(default)]
    pub bounds: Option<BoundsSpec>,
    #[serde(default)]
    pub annulus: Option<AnnulusSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_alphas() -> Vec<f64> {
    vec![0.25, 0.5, 1.0]
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub size: usize,
    pub box_length: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant { value: f64 },
    AnnulusBump { center: Vec<f64>, inner: f64, outer: f64, amplitude: f64 },
    Bump { center: Vec<f64>, radius: f64, amplitude: f64 },
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    HalfSpace { normal: Vec<f64>, offset: f64, value: f64 },
    RadialPower { center: Vec<f64>, exponent: f64 },
    Sum { terms: Vec<DataSpec> },
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSpec {
    pub beta: f64,
    pub max_steps: usize,
    pub shards: usize,
}

impl Default for WalkSpec {
    fn default() -> Self {
        let d = WalkConfig::default();
        Self { beta: d.beta, max_steps: d.max_steps, shards: d.shards }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GalerkinSpec {
    pub r_trunc: f64,
    pub h: f64,
    #[serde(default = "default_depth")]
    pub depth: u32,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    /// Also solve at `2h` and `4h` and report an extrapolated value with an
    /// error budget.
    #[serde(default)]
    pub refine: bool,
}

fn default_depth() -> u32 {
    3
}

fn default_overlap() -> f64 {
    1.5
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSpec {
    pub samples: usize,
    #[serde(default)]
    pub min_interior_distance: f64,
    #[serde(default)]
    pub exterior_range: Option<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusSpec {
    pub first: f64,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub kernel_mass: f64,
    pub quadrature: f64,
    pub weak_residual: f64,
    pub mc_sigmas: f64,
    pub stability_bound: f64,
    pub definition_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel_mass: 1e-3,
            quadrature: 1e-3,
            weak_residual: 5e-3,
            mc_sigmas: 3.0,
            stability_bound: 2.0,
            definition_gap: 1e-2,
        }
    }
}

/// Configuration problem; maps to exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn point<const D: usize>(v: &[f64], what: &str) -> Result<Point<D>, ConfigError> {
    if v.len() != D {
        return bad(format!("{what} has {} coordinates, expected {D}", v.len()));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return bad(format!("{what} has non-finite coordinates"));
    }
    Ok(std::array::from_fn(|a| v[a]))
}

impl DomainSpec {
    pub fn build<const D: usize>(&self) -> Result<Domain<D>, ConfigError> {
        let d = match self {
            DomainSpec::Ball { center, radius } => Domain::ball(point(center, "domain center")?, *radius),
            DomainSpec::Box { lo, hi } => Domain::cuboid(point(lo, "box lo")?, point(hi, "box hi")?),
            DomainSpec::Polygon { vertices } => Domain::polygon(vertices.clone()),
        };
        d.map_err(|e| ConfigError(e.to_string()))
    }
}

impl DataSpec {
    pub fn build<const D: usize>(&self) -> Result<ExteriorData<D>, ConfigError> {
        let f = match self {
            DataSpec::Constant { value } => ExteriorData::Constant(*value),
            DataSpec::AnnulusBump { center, inner, outer, amplitude } => ExteriorData::AnnulusBump {
                center: point(center, "data center")?,
                inner: *inner,
                outer: *outer,
                amplitude: *amplitude,
            },
            DataSpec::Bump { center, radius, amplitude } => ExteriorData::Bump {
                center: point(center, "data center")?,
                radius: *radius,
                amplitude: *amplitude,
            },
            DataSpec::Gaussian { center, width, amplitude } => ExteriorData::Gaussian {
                center: point(center, "data center")?,
                width: *width,
                amplitude: *amplitude,
            },
            DataSpec::HalfSpace { normal, offset, value } => ExteriorData::HalfSpace {
                normal: point(normal, "half-space normal")?,
                offset: *offset,
                value: *value,
            },
            DataSpec::RadialPower { center, exponent } => ExteriorData::RadialPower {
                center: point(center, "data center")?,
                exponent: *exponent,
            },
            DataSpec::Sum { terms } => {
                ExteriorData::Sum(terms.iter().map(|t| t.build()).collect::<Result<_, _>>()?)
            }
        };
        f.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(f)
    }
}

/// Fully validated inputs for one command.
#[derive(Clone, Debug)]
pub struct Job<const D: usize> {
    pub command: Command,
    pub s: f64,
    pub params: Option<SolverParams>,
    pub domain: Option<Domain<D>>,
    pub data: Option<ExteriorData<D>>,
    pub field: Option<PathBuf>,
    pub points: Vec<Point<D>>,
    pub alphas: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub walk: WalkConfig,
    pub galerkin: Option<(GalerkinConfig, bool)>,
    pub bounds: Option<BoundsSpec>,
    pub annulus: Option<AnnulusSpec>,
    pub tol: Tolerances,
}

impl RunConfig {
    pub fn validate<const D: usize>(&self, command: Command) -> Result<Job<D>, ConfigError> {
        if self.dim != D {
            return bad(format!("dimension {} is not supported", self.dim));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return bad(format!("order s must lie in (0, 1), got {}", self.s));
        }
        let params = match self.grid {
            Some(g) => Some(
                SolverParams::new(D, self.s, g.size, g.box_length)
                    .map_err(|e| ConfigError(e.to_string()))?,
            ),
            None => None,
        };
        let domain = self.domain.as_ref().map(|d| d.build::<D>()).transpose()?;
        let data = self.data.as_ref().map(|d| d.build::<D>()).transpose()?;
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| point::<D>(p, &format!("point {i}")))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(d) = &domain {
            if let Some(i) = points.iter().position(|p| !d.contains(p)) {
                return bad(format!("point {i} is not inside the domain"));
            }
        }
        let walk = WalkConfig { beta: self.walk.beta, max_steps: self.walk.max_steps, shards: self.walk.shards };
        walk.validate().map_err(|e| ConfigError(e.to_string()))?;
        let galerkin = self.galerkin.map(|g| {
            let box_length = self.grid.map(|g| g.box_length).unwrap_or(f64::NAN);
            (
                GalerkinConfig { r_trunc: g.r_trunc, h: g.h, depth: g.depth, overlap: g.overlap, box_length },
                g.refine,
            )
        });
        let t = self.tolerances;
        if [t.kernel_mass, t.quadrature, t.weak_residual, t.mc_sigmas, t.stability_bound, t.definition_gap]
            .iter()
            .any(|v| !(*v > 0.0 && v.is_finite()))
        {
            return bad("tolerances must be positive and finite");
        }
        if self.alphas.iter().any(|a| !a.is_finite()) {
            return bad("alphas must be finite");
        }
        let job = Job {
            command,
            s: self.s,
            params,
            domain,
            data,
            field: self.field.clone(),
            points,
            alphas: self.alphas.clone(),
            samples: self.samples.unwrap_or(0),
            seed: self.seed,
            walk,
            galerkin,
            bounds: self.bounds,
            annulus: self.annulus,
            tol: t,
        };
        job.check_required()?;
        Ok(job)
    }
}

impl<const D: usize> Job<D> {
    fn check_required(&self) -> Result<(), ConfigError> {
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { bad(format!("{} needs {what}", self.command.name())) };
        let ball = matches!(self.domain, Some(Domain::Ball { .. }));
        match self.command {
            Command::Norms | Command::FraclapCheck => {
                need(self.params.is_some(), "a grid")?;
                need(self.field.is_some() != self.data.is_some(), "exactly one of field or data")?;
            }
            Command::KernelCheck => {
                need(ball, "a ball domain")?;
                need(self.bounds.is_some(), "a bounds section")?;
                if let Some(b) = self.bounds {
                    need(b.samples > 0, "a positive bounds sample count")?;
                }
            }
            Command::SolveWos => {
                need(self.domain.is_some() && self.data.is_some(), "a domain and data")?;
                need(!self.points.is_empty(), "points")?;
                need(self.samples > 0, "a positive sample count")?;
            }
            Command::SolveGalerkin => {
                need(self.domain.is_some() && self.data.is_some(), "a domain and data")?;
                need(self.galerkin.is_some(), "a galerkin section")?;
                need(self.params.is_some(), "a grid (box length and residual grid)")?;
            }
            Command::SolveBallQuadrature => {
                need(ball && self.data.is_some(), "a ball domain and data")?;
                need(!self.points.is_empty(), "points")?;
            }
            Command::Compare => {
                need(ball && self.data.is_some(), "a ball domain and data")?;
                need(!self.points.is_empty(), "points")?;
                need(self.samples > 0, "a positive sample count")?;
                need(self.galerkin.is_some() && self.params.is_some(), "a galerkin section and a grid")?;
            }
            Command::AnnulusDecay => {
                need(self.domain.is_some(), "a domain")?;
                need(self.annulus.is_some(), "an annulus section")?;
                need(self.points.len() == 1, "exactly one start point")?;
                need(self.samples > 0, "a positive sample count")?;
            }
        }
        if let Some((g, refine)) = &self.galerkin {
            if !(g.r_trunc > 0.0 && g.h > 0.0) {
                return bad("galerkin r_trunc and h must be positive");
            }
            if !(1.0..=4.0).contains(&g.overlap) || g.depth > 8 {
                return bad("galerkin overlap must lie in [1, 4] and depth be at most 8");
            }
            if let (Some(d), Some(f)) = (&self.domain, &self.data) {
                let support = f.support_radius(&d.center());
                match support {
                    Some(r) if r <= 0.5 * g.r_trunc => {}
                    _ => return bad("galerkin data must vanish outside B(center, r_trunc / 2)"),
                }
                // the refinement ladder also solves at 4h, and at 4h with 3 r_trunc / 4
                let ladder = *refine || self.command == Command::Compare;
                let (coarsest, shortest) = if ladder { (4.0 * g.h, 0.75 * g.r_trunc) } else { (g.h, g.r_trunc) };
                if shortest < d.outer_radius() + 2.0 * g.overlap * coarsest {
                    return bad(format!(
                        "r_trunc {} leaves no margin of 2 overlap h around the domain at spacing {coarsest}",
                        g.r_trunc
                    ));
                }
                if ladder && support.is_some_and(|r| r > shortest) {
                    return bad("galerkin data must vanish outside B(center, 3 r_trunc / 4) for the truncation estimate");
                }
                d.check_fits(g.box_length).map_err(|e| ConfigError(e.to_string()))?;
                if g.r_trunc > 0.25 * g.box_length {
                    return bad("galerkin r_trunc must lie in the central half of the grid box");
                }
            }
        }
        if let Some(a) = self.annulus {
            if !(a.first > 0.0 && a.count > 0) {
                return bad("annulus needs a positive first offset and count");
            }
        }
        Ok(())
    }
}
