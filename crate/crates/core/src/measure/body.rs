use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ifs::{is_diagonal, Matrix, Vector};

const CONTACT_TOLERANCE: f64 = 1e-12;

/// An ellipsoid `{M u : |u| ≤ radius}` with its inverse cached for membership tests.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearImage {
    matrix: Matrix,
    inverse: Matrix,
    radius: f64,
}

impl LinearImage {
    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// A convex body symmetric about the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    Ball { radius: f64 },
    Box { halfwidths: Vec<f64> },
    LinearImageBall(LinearImage),
}

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

impl Shape {
    pub fn ball(radius: f64) -> Result<Shape> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::UnsupportedShape(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Shape::Ball { radius })
    }

    pub fn cube(halfwidths: Vec<f64>) -> Result<Shape> {
        if halfwidths.is_empty() || halfwidths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::UnsupportedShape(format!(
                "box halfwidths must be positive, got {halfwidths:?}"
            )));
        }
        Ok(Shape::Box { halfwidths })
    }

    /// `matrix · B(0, radius)`. In dimension 1 this is the ball of radius `|m|·radius`.
    pub fn linear_image_ball(matrix: Matrix, radius: f64) -> Result<Shape> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::UnsupportedShape("ellipsoid matrix must be square".into()));
        }
        if matrix.nrows() == 1 {
            return Shape::ball(matrix[(0, 0)].abs() * radius);
        }
        Shape::ball(radius)?;
        let inverse = matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::UnsupportedShape("ellipsoid matrix is singular".into()))?;
        Ok(Shape::LinearImageBall(LinearImage {
            matrix,
            inverse,
            radius,
        }))
    }

    /// Is `v` (an offset from the center) inside the closed body?
    pub fn contains_offset(&self, v: &[f64]) -> bool {
        match self {
            Shape::Ball { radius } => v.iter().map(|x| x * x).sum::<f64>() <= radius * radius,
            Shape::Box { halfwidths } => v.iter().zip(halfwidths).all(|(x, h)| x.abs() <= *h),
            Shape::LinearImageBall(e) => {
                let u = &e.inverse * Vector::from_column_slice(v);
                u.norm_squared() <= e.radius * e.radius
            }
        }
    }

    /// `v ∈ scale·E`, with boundary contact counted as inside up to a relative `1e-12`.
    pub fn contains_scaled_offset(&self, v: &[f64], scale: f64) -> bool {
        let slack = 1.0 + CONTACT_TOLERANCE;
        match self {
            Shape::Ball { radius } => {
                v.iter().map(|x| x * x).sum::<f64>().sqrt() <= scale * radius * slack
            }
            Shape::Box { halfwidths } => v
                .iter()
                .zip(halfwidths)
                .all(|(x, h)| x.abs() <= scale * h * slack),
            Shape::LinearImageBall(e) => {
                let u = &e.inverse * Vector::from_column_slice(v);
                u.norm() <= scale * e.radius * slack
            }
        }
    }

    /// Half the side lengths of the axis-aligned bounding box.
    pub fn half_extent(&self, d: usize) -> Vec<f64> {
        match self {
            Shape::Ball { radius } => vec![*radius; d],
            Shape::Box { halfwidths } => halfwidths.clone(),
            Shape::LinearImageBall(e) => (0..d).map(|i| e.radius * e.matrix.row(i).norm()).collect(),
        }
    }

    pub fn volume(&self, d: usize) -> f64 {
        match self {
            Shape::Ball { radius } => radius.powi(d as i32) * unit_ball_volume(d),
            Shape::Box { halfwidths } => halfwidths.iter().map(|h| 2.0 * h).product(),
            Shape::LinearImageBall(e) => {
                e.matrix.determinant().abs() * e.radius.powi(d as i32) * unit_ball_volume(d)
            }
        }
    }

    pub fn scaled(&self, s: f64) -> Result<Shape> {
        match self {
            Shape::Ball { radius } => Shape::ball(radius * s),
            Shape::Box { halfwidths } => Shape::cube(halfwidths.iter().map(|h| h * s).collect()),
            Shape::LinearImageBall(e) => Shape::linear_image_ball(e.matrix.clone(), e.radius * s),
        }
    }

    /// The image `a · self`. Boxes only survive diagonal maps.
    pub fn transformed(&self, a: &Matrix) -> Result<Shape> {
        match self {
            Shape::Ball { radius } => Shape::linear_image_ball(a.clone(), *radius),
            Shape::LinearImageBall(e) => Shape::linear_image_ball(a * &e.matrix, e.radius),
            Shape::Box { halfwidths } => {
                if !is_diagonal(a) {
                    return Err(Error::UnsupportedShape(
                        "a box is only closed under diagonal linear maps".into(),
                    ));
                }
                Shape::cube(
                    halfwidths
                        .iter()
                        .enumerate()
                        .map(|(i, h)| a[(i, i)].abs() * h)
                        .collect(),
                )
            }
        }
    }

    /// Offsets `[left, right]` of the chord cut by the horizontal line at
    /// vertical offset `y`, for a planar body.
    pub(crate) fn chord(&self, y: f64) -> Option<(f64, f64)> {
        match self {
            Shape::Ball { radius } => {
                let q = radius * radius - y * y;
                (q >= 0.0).then(|| {
                    let x = q.sqrt();
                    (-x, x)
                })
            }
            Shape::Box { halfwidths } => (y.abs() <= halfwidths[1]).then(|| (-halfwidths[0], halfwidths[0])),
            Shape::LinearImageBall(e) => {
                // |M^{-1} p|² = pᵀ Q p with Q = M^{-T} M^{-1}
                let inv = &e.inverse;
                let q11 = inv[(0, 0)].powi(2) + inv[(1, 0)].powi(2);
                let q12 = inv[(0, 0)] * inv[(0, 1)] + inv[(1, 0)] * inv[(1, 1)];
                let q22 = inv[(0, 1)].powi(2) + inv[(1, 1)].powi(2);
                let b = q12 * y;
                let disc = b * b - q11 * (q22 * y * y - e.radius * e.radius);
                (disc >= 0.0).then(|| {
                    let root = disc.sqrt();
                    ((-b - root) / q11, (-b + root) / q11)
                })
            }
        }
    }

    /// Vertical offset of the leftmost point of a planar body (the rightmost
    /// point sits at the negated offset).
    pub(crate) fn leftmost_y(&self) -> f64 {
        match self {
            Shape::Ball { .. } | Shape::Box { .. } => 0.0,
            Shape::LinearImageBall(e) => {
                let row0 = e.matrix.row(0);
                let n0 = row0.norm();
                if n0 == 0.0 {
                    return 0.0;
                }
                -e.radius * row0.dot(&e.matrix.row(1)) / n0
            }
        }
    }

    /// Horizontal extent of the body inside the band `lo ≤ y ≤ hi`, or `None`
    /// if they do not meet. Uses convexity of the chord endpoints in `y`.
    pub(crate) fn band_extent(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        let ymax = self.half_extent(2)[1];
        let (lo, hi) = (lo.max(-ymax), hi.min(ymax));
        if lo > hi {
            return None;
        }
        let mut left = f64::INFINITY;
        let mut right = f64::NEG_INFINITY;
        let yl = self.leftmost_y();
        let mut probe = |y: f64| {
            if let Some((a, b)) = self.chord(y) {
                left = left.min(a);
                right = right.max(b);
            }
        };
        probe(lo);
        probe(hi);
        if (lo..=hi).contains(&yl) {
            probe(yl);
        }
        if (lo..=hi).contains(&-yl) {
            probe(-yl);
        }
        // Rounding can make the chord at the exact tip empty; fall back to
        // the bounding box, which is a superset.
        if left > right {
            let w = self.half_extent(2)[0];
            return Some((-w, w));
        }
        Some((left, right))
    }
}

/// A shape translated to `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedBody {
    pub center: Vector,
    pub shape: Shape,
}

impl PlacedBody {
    pub fn new(center: Vector, shape: Shape) -> Result<Self> {
        let d = center.len();
        let consistent = match &shape {
            Shape::Ball { .. } => true,
            Shape::Box { halfwidths } => halfwidths.len() == d,
            Shape::LinearImageBall(e) => e.matrix.nrows() == d,
        };
        if !consistent || d == 0 {
            return Err(Error::UnsupportedShape(format!("shape does not live in dimension {d}")));
        }
        Ok(PlacedBody { center, shape })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let v: Vec<f64> = x.iter().zip(self.center.iter()).map(|(a, c)| a - c).collect();
        self.shape.contains_offset(&v)
    }

    pub fn volume(&self) -> f64 {
        self.shape.volume(self.dim())
    }

    /// Axis-aligned bounding box as `(lo, hi)` corners.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let e = self.shape.half_extent(self.dim());
        let lo = self.center.iter().zip(&e).map(|(c, h)| c - h).collect();
        let hi = self.center.iter().zip(&e).map(|(c, h)| c + h).collect();
        (lo, hi)
    }

    /// Endpoints of a one-dimensional body.
    pub(crate) fn interval(&self) -> (f64, f64) {
        let h = self.shape.half_extent(1)[0];
        (self.center[0] - h, self.center[0] + h)
    }
}
