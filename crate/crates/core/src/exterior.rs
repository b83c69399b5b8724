//! Exterior Dirichlet data F on Ωᶜ.

use crate::error::{Error, Result};
use crate::geometry::{dist, Point};

/// `exp(1 − 1/(1 − t²))` on `|t| < 1`, zero outside; peak value 1 at `t = 0`.
pub fn smooth_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExteriorData<const D: usize> {
    Constant(f64),
    /// Radial C^∞ bump supported in `inner < |y − center| < outer`.
    AnnulusBump { center: Point<D>, inner: f64, outer: f64, amplitude: f64 },
    /// C^∞ bump supported in the ball `B(center, radius)`.
    Bump { center: Point<D>, radius: f64, amplitude: f64 },
    Gaussian { center: Point<D>, width: f64, amplitude: f64 },
    /// `value` on `{y : y·normal > offset}`, zero elsewhere.
    HalfSpace { normal: Point<D>, offset: f64, value: f64 },
    /// `|y − center|^exponent`; unbounded for positive exponents.
    RadialPower { center: Point<D>, exponent: f64 },
    Sum(Vec<ExteriorData<D>>),
}

impl<const D: usize> ExteriorData<D> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        match self {
            ExteriorData::Constant(c) if !c.is_finite() => bad("constant must be finite".into()),
            ExteriorData::AnnulusBump { inner, outer, amplitude, .. }
                if !(*inner >= 0.0 && inner < outer && amplitude.is_finite()) =>
            {
                bad(format!("annulus bump needs 0 <= inner < outer, got {inner}, {outer}"))
            }
            ExteriorData::Bump { radius, amplitude, .. }
                if !(*radius > 0.0 && amplitude.is_finite()) =>
            {
                bad(format!("bump radius must be positive, got {radius}"))
            }
            ExteriorData::Gaussian { width, amplitude, .. }
                if !(*width > 0.0 && amplitude.is_finite()) =>
            {
                bad(format!("gaussian width must be positive, got {width}"))
            }
            ExteriorData::HalfSpace { normal, offset, value }
                if !(offset.is_finite() && value.is_finite())
                    || (normal.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() > 1e-9 =>
            {
                bad("half-space needs a unit normal and finite offset".into())
            }
            ExteriorData::RadialPower { exponent, .. } if !exponent.is_finite() => {
                bad("power exponent must be finite".into())
            }
            ExteriorData::Sum(parts) => parts.iter().try_for_each(|p| p.validate()),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, y: &Point<D>) -> f64 {
        match self {
            ExteriorData::Constant(c) => *c,
            ExteriorData::AnnulusBump { center, inner, outer, amplitude } => {
                let r = dist(y, center);
                amplitude * smooth_bump((2.0 * r - inner - outer) / (outer - inner))
            }
            ExteriorData::Bump { center, radius, amplitude } => {
                amplitude * smooth_bump(dist(y, center) / radius)
            }
            ExteriorData::Gaussian { center, width, amplitude } => {
                let r = dist(y, center);
                amplitude * (-0.5 * (r / width).powi(2)).exp()
            }
            ExteriorData::HalfSpace { normal, offset, value } => {
                let proj: f64 = y.iter().zip(normal).map(|(a, b)| a * b).sum();
                if proj > *offset {
                    *value
                } else {
                    0.0
                }
            }
            ExteriorData::RadialPower { center, exponent } => dist(y, center).powf(*exponent),
            ExteriorData::Sum(parts) => parts.iter().map(|p| p.eval(y)).sum(),
        }
    }

    /// Radius about `c` outside of which F vanishes, if F has compact support.
    pub fn support_radius(&self, c: &Point<D>) -> Option<f64> {
        match self {
            ExteriorData::AnnulusBump { center, outer, amplitude, .. } => {
                Some(if *amplitude == 0.0 { 0.0 } else { dist(c, center) + outer })
            }
            ExteriorData::Bump { center, radius, amplitude } => {
                Some(if *amplitude == 0.0 { 0.0 } else { dist(c, center) + radius })
            }
            ExteriorData::Constant(v) | ExteriorData::HalfSpace { value: v, .. } => {
                (*v == 0.0).then_some(0.0)
            }
            ExteriorData::Gaussian { amplitude, .. } => (*amplitude == 0.0).then_some(0.0),
            ExteriorData::RadialPower { .. } => None,
            ExteriorData::Sum(parts) => parts
                .iter()
                .map(|p| p.support_radius(c))
                .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r))),
        }
    }

    /// Growth exponent `p` with `|F(y)| = O(|y|^p)` at infinity.
    pub fn growth(&self) -> f64 {
        match self {
            ExteriorData::RadialPower { exponent, .. } => exponent.max(0.0),
            ExteriorData::Sum(parts) => parts.iter().map(|p| p.growth()).fold(0.0, f64::max),
            _ => 0.0,
        }
    }

    /// Whether F is identically zero.
    pub fn is_zero(&self) -> bool {
        self.support_radius(&[0.0; D]) == Some(0.0)
    }
}
