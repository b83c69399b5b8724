//! Bounded domains Ω, boundary distance δ, inward-offset families and the
//! truncated exterior annulus.

use crate::error::{Error, Result};

pub type Point<const D: usize> = [f64; D];

/// Points closer than this to ∂Ω are treated as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-12;

pub fn norm<const D: usize>(x: &Point<D>) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dist<const D: usize>(a: &Point<D>, b: &Point<D>) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Anything the walk can run in: open membership plus distance to the boundary.
pub trait Region<const D: usize>: Sync {
    fn contains(&self, x: &Point<D>) -> bool;
    fn boundary_distance(&self, x: &Point<D>) -> f64;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain<const D: usize> {
    Ball { center: Point<D>, radius: f64 },
    Box { lo: Point<D>, hi: Point<D> },
    /// Simple, counter-clockwise polygon. Only valid for `D = 2`.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl<const D: usize> Domain<D> {
    pub fn ball(center: Point<D>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry(format!("invalid ball radius {radius}")));
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn cuboid(lo: Point<D>, hi: Point<D>) -> Result<Self> {
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Geometry("box needs lo < hi in every coordinate".into()));
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        if D != 2 {
            return Err(Error::Geometry("polygons are only supported in two dimensions".into()));
        }
        let m = vertices.len();
        if m < 3 || vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("polygon needs at least three finite vertices".into()));
        }
        if signed_area(&vertices) <= 0.0 {
            return Err(Error::Geometry("polygon must be positively oriented".into()));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let adjacent = j == i + 1 || (i == 0 && j == m - 1);
                if !adjacent
                    && segments_intersect(
                        vertices[i],
                        vertices[(i + 1) % m],
                        vertices[j],
                        vertices[(j + 1) % m],
                    )
                {
                    return Err(Error::Geometry(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        Ok(Domain::Polygon { vertices })
    }

    /// Axis-aligned bounding box of Ω̄.
    pub fn bounds(&self) -> (Point<D>, Point<D>) {
        match self {
            Domain::Ball { center, radius } => {
                (center.map(|c| c - radius), center.map(|c| c + radius))
            }
            Domain::Box { lo, hi } => (*lo, *hi),
            Domain::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; D];
                let mut hi = [f64::NEG_INFINITY; D];
                for v in vertices {
                    for a in 0..2 {
                        lo[a] = lo[a].min(v[a]);
                        hi[a] = hi[a].max(v[a]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Centre of the bounding box (the ball centre for a ball).
    pub fn center(&self) -> Point<D> {
        let (lo, hi) = self.bounds();
        std::array::from_fn(|a| 0.5 * (lo[a] + hi[a]))
    }

    /// Radius of the smallest ball about `center()` containing Ω̄.
    pub fn outer_radius(&self) -> f64 {
        let c = self.center();
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Box { lo, hi } => {
                norm(&std::array::from_fn::<f64, D, _>(|a| 0.5 * (hi[a] - lo[a])))
            }
            Domain::Polygon { vertices } => vertices
                .iter()
                .map(|v| ((v[0] - c[0]).powi(2) + (v[1] - c[1]).powi(2)).sqrt())
                .fold(0.0, f64::max),
        }
    }

    /// Checks that Ω̄ lies in the central half `[L/4, 3L/4]^D` of the torus box.
    pub fn check_fits(&self, box_length: f64) -> Result<()> {
        let (lo, hi) = self.bounds();
        let (a, b) = (0.25 * box_length, 0.75 * box_length);
        if lo.iter().any(|&v| v < a) || hi.iter().any(|&v| v > b) {
            return Err(Error::Geometry(format!(
                "domain does not fit in the central half [{a}, {b}] of the box"
            )));
        }
        Ok(())
    }

    fn raw_distance(&self, x: &Point<D>) -> f64 {
        match self {
            Domain::Ball { center, radius } => (dist(x, center) - radius).abs(),
            Domain::Box { lo, hi } => {
                let inside = (0..D).all(|a| lo[a] <= x[a] && x[a] <= hi[a]);
                if inside {
                    (0..D)
                        .map(|a| (x[a] - lo[a]).min(hi[a] - x[a]))
                        .fold(f64::INFINITY, f64::min)
                } else {
                    (0..D)
                        .map(|a| (lo[a] - x[a]).max(x[a] - hi[a]).max(0.0).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
            }
            Domain::Polygon { vertices } => {
                let p = [x[0], x[1]];
                let m = vertices.len();
                (0..m)
                    .map(|i| segment_distance(p, vertices[i], vertices[(i + 1) % m]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    fn raw_inside(&self, x: &Point<D>) -> bool {
        match self {
            Domain::Ball { center, radius } => dist(x, center) < *radius,
            Domain::Box { lo, hi } => (0..D).all(|a| lo[a] < x[a] && x[a] < hi[a]),
            Domain::Polygon { vertices } => winding_inside([x[0], x[1]], vertices),
        }
    }

    /// Lattice nodes `center + h k` in `B(center, R) \ Ω̄` at distance `> h/2`
    /// from ∂Ω. The ball must fit in the central half of the torus box.
    pub fn exterior_annulus_nodes(
        &self,
        r_trunc: f64,
        h: f64,
        box_length: f64,
    ) -> Result<Vec<Point<D>>> {
        if !(h > 0.0 && r_trunc > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "annulus needs positive spacing and radius, got h = {h}, R = {r_trunc}"
            )));
        }
        let c = self.center();
        let (a, b) = (0.25 * box_length, 0.75 * box_length);
        if c.iter().any(|&v| v - r_trunc < a || v + r_trunc > b) {
            return Err(Error::Geometry(format!(
                "annulus of radius {r_trunc} escapes the central half of the box"
            )));
        }
        let reach = (r_trunc / h).floor() as i64;
        let span = (2 * reach + 1) as usize;
        let mut nodes = Vec::new();
        for flat in 0..span.pow(D as u32) {
            let mut rest = flat;
            let x: Point<D> = std::array::from_fn(|a| {
                let k = (rest % span) as i64 - reach;
                rest /= span;
                c[a] + h * k as f64
            });
            if dist(&x, &c) < r_trunc && !self.raw_inside(&x) && self.raw_distance(&x) > 0.5 * h {
                nodes.push(x);
            }
        }
        Ok(nodes)
    }
}

impl<const D: usize> Region<D> for Domain<D> {
    fn contains(&self, x: &Point<D>) -> bool {
        self.raw_inside(x) && self.raw_distance(x) > BOUNDARY_TOL
    }

    fn boundary_distance(&self, x: &Point<D>) -> f64 {
        self.raw_distance(x)
    }
}

/// `Ω_r = {x ∈ Ω : δ(x) > r}`.
#[derive(Clone, Debug)]
pub struct Shrunken<'a, const D: usize> {
    pub domain: &'a Domain<D>,
    pub offset: f64,
}

impl<const D: usize> Region<D> for Shrunken<'_, D> {
    fn contains(&self, x: &Point<D>) -> bool {
        self.domain.raw_inside(x) && self.domain.raw_distance(x) > self.offset + BOUNDARY_TOL
    }

    /// Exact for interior points: δ decreases at unit rate towards the
    /// nearest boundary point of Ω.
    fn boundary_distance(&self, x: &Point<D>) -> f64 {
        if self.domain.raw_inside(x) {
            (self.domain.raw_distance(x) - self.offset).abs()
        } else {
            self.domain.raw_distance(x) + self.offset
        }
    }
}

/// Inward offsets `r_1 > r_2 > … > r_K > 0` defining `Ω_k = {δ > r_k}`.
#[derive(Clone, Debug)]
pub struct AnnulusFamily<const D: usize> {
    domain: Domain<D>,
    offsets: Vec<f64>,
}

impl<const D: usize> AnnulusFamily<D> {
    pub fn new(domain: Domain<D>, offsets: Vec<f64>) -> Result<Self> {
        if offsets.is_empty() || offsets.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("offsets must be positive and finite".into()));
        }
        if offsets.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("offsets must be strictly decreasing".into()));
        }
        Ok(Self { domain, offsets })
    }

    /// Offsets halving from `first`, `K` of them.
    pub fn dyadic(domain: Domain<D>, first: f64, count: usize) -> Result<Self> {
        Self::new(domain, (0..count).map(|k| first * 0.5f64.powi(k as i32)).collect())
    }

    pub fn domain(&self) -> &Domain<D> {
        &self.domain
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn region(&self, k: usize) -> Shrunken<'_, D> {
        Shrunken { domain: &self.domain, offset: self.offsets[k] }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let m = v.len();
    0.5 * (0..m)
        .map(|i| {
            let (p, q) = (v[i], v[(i + 1) % m]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum::<f64>()
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0)) && d1 != 0.0 && d2 != 0.0 {
        return true;
    }
    // touching or collinear overlap
    let on = |a: [f64; 2], b: [f64; 2], p: [f64; 2], d: f64| {
        d == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn winding_inside(p: [f64; 2], v: &[[f64; 2]]) -> bool {
    let m = v.len();
    let mut winding = 0i32;
    for i in 0..m {
        let (a, b) = (v[i], v[(i + 1) % m]);
        if a[1] <= p[1] {
            if b[1] > p[1] && cross(a, b, p) > 0.0 {
                winding += 1;
            }
        } else if b[1] <= p[1] && cross(a, b, p) < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}
