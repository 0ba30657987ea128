//! Closed convex sets with exact Euclidean projection.
//!
//! Every set in the catalogue is nonempty, closed and convex by construction,
//! and its projection has a closed form. The normal cone test and the
//! set-to-set distance are built on top of the projection.

use crate::error::{GhwpError, Result};
use crate::point::Point;

/// Default absolute tolerance for membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Relative slack on the tangential part of a normal-cone candidate, as a
/// fraction of its length.
pub const ANGULAR_TOL: f64 = 1e-9;

const SET_DISTANCE_MAX_ITER: usize = 10_000;
const SET_DISTANCE_MIN_IMPROVEMENT: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Ball {
        center: Point,
        radius: f64,
    },
    Box {
        center: Point,
        half_widths: Vec<f64>,
    },
    /// `{y : <normal, y> <= offset}`
    HalfSpace {
        normal: Point,
        offset: f64,
    },
    Singleton {
        point: Point,
    },
}

impl ConvexSet {
    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GhwpError::invalid(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn cube(center: Point, half_width: f64) -> Result<Self> {
        let half_widths = vec![half_width; center.dim()];
        ConvexSet::r#box(center, half_widths)
    }

    pub fn r#box(center: Point, half_widths: Vec<f64>) -> Result<Self> {
        if half_widths.len() != center.dim() {
            return Err(GhwpError::invalid(format!(
                "box has {} half widths for a {}-dimensional center",
                half_widths.len(),
                center.dim()
            )));
        }
        if let Some(h) = half_widths.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(GhwpError::invalid(format!(
                "box half widths must be positive and finite, got {h}"
            )));
        }
        Ok(ConvexSet::Box {
            center,
            half_widths,
        })
    }

    pub fn half_space(normal: Point, offset: f64) -> Result<Self> {
        if !offset.is_finite() {
            return Err(GhwpError::invalid("half-space offset must be finite"));
        }
        if normal.norm() <= 0.0 {
            return Err(GhwpError::invalid("half-space normal must be nonzero"));
        }
        Ok(ConvexSet::HalfSpace { normal, offset })
    }

    pub fn singleton(point: Point) -> Self {
        ConvexSet::Singleton { point }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Ball { center, .. } | ConvexSet::Box { center, .. } => center.dim(),
            ConvexSet::HalfSpace { normal, .. } => normal.dim(),
            ConvexSet::Singleton { point } => point.dim(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ConvexSet::Ball { .. } => "ball",
            ConvexSet::Box { .. } => "box",
            ConvexSet::HalfSpace { .. } => "halfspace",
            ConvexSet::Singleton { .. } => "singleton",
        }
    }

    /// Euclidean projection of `x` onto the set.
    pub fn project(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim(), "projected point")?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Point) -> Point {
        match self {
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let len = d.norm();
                if len > *radius {
                    center.axpy(radius / len, &d)
                } else {
                    x.clone()
                }
            }
            ConvexSet::Box {
                center,
                half_widths,
            } => Point::from_raw(
                x.coords()
                    .iter()
                    .zip(center.coords())
                    .zip(half_widths)
                    .map(|((&xi, &ci), &hi)| xi.clamp(ci - hi, ci + hi))
                    .collect(),
            ),
            ConvexSet::HalfSpace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess > 0.0 {
                    x.axpy(-excess / normal.norm_squared(), normal)
                } else {
                    x.clone()
                }
            }
            ConvexSet::Singleton { point } => point.clone(),
        }
    }

    pub fn distance(&self, x: &Point) -> Result<f64> {
        let p = self.project(x)?;
        Ok(x.distance_to(&p))
    }

    pub fn contains(&self, x: &Point, tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConvexSet::HalfSpace { .. })
    }

    /// A representative point of the set: centers for balls and boxes, the
    /// point itself for singletons, the projection of the origin for
    /// half-spaces.
    pub fn anchor(&self) -> Point {
        match self {
            ConvexSet::Ball { center, .. } | ConvexSet::Box { center, .. } => center.clone(),
            ConvexSet::Singleton { point } => point.clone(),
            ConvexSet::HalfSpace { .. } => self.project_unchecked(&Point::zeros(self.dim())),
        }
    }

    /// Decides whether `v` lies in the normal cone of the set at `x`, up to
    /// `tol`.
    ///
    /// At interior points the cone is `{0}`, so only `|v| <= tol` passes. On
    /// a smooth boundary (ball, half-space) `v` is split into its component
    /// `t` along the outward unit normal and a tangential remainder `w`; it
    /// passes when `t >= -tol` and `|w| <= tol + ANGULAR_TOL * |v|`. Boxes
    /// are checked face by face. Every vector is normal to a singleton.
    pub fn normal_cone_contains(&self, x: &Point, v: &Point, tol: f64) -> Result<bool> {
        v.check_dim(self.dim(), "normal vector")?;
        if !self.contains(x, tol)? {
            return Err(GhwpError::invalid(format!(
                "normal cone requested at {x}, which is not in the {} (tol {tol})",
                self.kind()
            )));
        }
        let ok = match self {
            ConvexSet::Singleton { .. } => true,
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let len = d.norm();
                if len < radius - tol || len == 0.0 {
                    v.norm() <= tol
                } else {
                    radial_check(&d.scale(1.0 / len), v, tol)
                }
            }
            ConvexSet::HalfSpace { normal, offset } => {
                let nlen = normal.norm();
                let slack = (offset - normal.dot(x)) / nlen;
                if slack > tol {
                    v.norm() <= tol
                } else {
                    radial_check(&normal.scale(1.0 / nlen), v, tol)
                }
            }
            ConvexSet::Box {
                center,
                half_widths,
            } => x
                .coords()
                .iter()
                .zip(v.coords())
                .zip(center.coords().iter().zip(half_widths))
                .all(|((&xi, &vi), (&ci, &hi))| {
                    let upper = xi >= ci + hi - tol;
                    let lower = xi <= ci - hi + tol;
                    match (lower, upper) {
                        (true, true) => true,
                        (false, true) => vi >= -tol,
                        (true, false) => vi <= tol,
                        (false, false) => vi.abs() <= tol,
                    }
                }),
        };
        Ok(ok)
    }

    /// Distance between two sets, `inf |a - b|` over `a` in `self` and `b`
    /// in `other`. Exact for ball pairs and singletons; other pairs run
    /// alternating projections.
    pub fn set_distance(&self, other: &ConvexSet) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(GhwpError::invalid(format!(
                "set dimensions differ: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let d = match (self, other) {
            (
                ConvexSet::Ball {
                    center: c1,
                    radius: r1,
                },
                ConvexSet::Ball {
                    center: c2,
                    radius: r2,
                },
            ) => (c1.distance_to(c2) - r1 - r2).max(0.0),
            (ConvexSet::Singleton { point }, set) | (set, ConvexSet::Singleton { point }) => {
                set.distance(point)?
            }
            _ => self.alternating_projection_distance(other),
        };
        Ok(d)
    }

    fn alternating_projection_distance(&self, other: &ConvexSet) -> f64 {
        let mut b = other.anchor();
        let mut a = self.project_unchecked(&b);
        let mut best = a.distance_to(&b);
        for _ in 0..SET_DISTANCE_MAX_ITER {
            b = other.project_unchecked(&a);
            a = self.project_unchecked(&b);
            let d = a.distance_to(&b);
            let improvement = best - d;
            best = best.min(d);
            if improvement < SET_DISTANCE_MIN_IMPROVEMENT {
                break;
            }
        }
        best
    }
}

fn radial_check(unit_normal: &Point, v: &Point, tol: f64) -> bool {
    let t = v.dot(unit_normal);
    let tangential = v.axpy(-t, unit_normal).norm();
    t >= -tol && tangential <= tol + ANGULAR_TOL * v.norm()
}
