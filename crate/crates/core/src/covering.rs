//! Greedy covering of shrinking rectangles and separation statistics for
//! point families.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measure::Shape;

/// Exhaustive maximum search is limited to this many points.
pub const EXACT_SEPARATION_LIMIT: usize = 20;

/// An axis-parallel box `center + Π[-δ_i, δ_i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rectangle {
    pub center: Vec<f64>,
    pub halfwidths: Vec<f64>,
}

impl Rectangle {
    pub fn new(center: Vec<f64>, halfwidths: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != halfwidths.len() {
            return Err(Error::Precondition(format!(
                "rectangle center has {} coordinates but {} halfwidths",
                center.len(),
                halfwidths.len()
            )));
        }
        if center.iter().any(|c| !c.is_finite()) || halfwidths.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
            return Err(Error::Precondition("rectangle coordinates must be finite, halfwidths nonnegative".into()));
        }
        Ok(Rectangle { center, halfwidths })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Closed boxes intersect unless they are separated along some axis.
    pub fn intersects(&self, other: &Rectangle) -> bool {
        (0..self.dim()).all(|i| {
            (self.center[i] - other.center[i]).abs() <= self.halfwidths[i] + other.halfwidths[i]
        })
    }

    pub fn dilate(&self, factor: f64) -> Rectangle {
        Rectangle {
            center: self.center.clone(),
            halfwidths: self.halfwidths.iter().map(|h| h * factor).collect(),
        }
    }

    pub fn contains_rect(&self, other: &Rectangle) -> bool {
        (0..self.dim()).all(|i| {
            other.center[i] - other.halfwidths[i] >= self.center[i] - self.halfwidths[i]
                && other.center[i] + other.halfwidths[i] <= self.center[i] + self.halfwidths[i]
        })
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|i| (x[i] - self.center[i]).abs() <= self.halfwidths[i])
    }
}

/// Rectangles whose side lengths are nonincreasing along every axis.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkingRectangleFamily {
    rectangles: Vec<Rectangle>,
}

impl ShrinkingRectangleFamily {
    pub fn new(rectangles: Vec<Rectangle>) -> Result<Self> {
        if let Some(first) = rectangles.first() {
            let d = first.dim();
            for (n, pair) in rectangles.windows(2).enumerate() {
                if pair[1].dim() != d {
                    return Err(Error::Precondition(format!("rectangle {} has dimension {}, expected {d}", n + 1, pair[1].dim())));
                }
                for i in 0..d {
                    if pair[1].halfwidths[i] > pair[0].halfwidths[i] {
                        return Err(Error::Precondition(format!(
                            "side lengths increase on axis {i} between rectangles {n} and {}",
                            n + 1
                        )));
                    }
                }
            }
        }
        Ok(ShrinkingRectangleFamily { rectangles })
    }

    pub fn rectangles(&self) -> &[Rectangle] {
        &self.rectangles
    }

    pub fn len(&self) -> usize {
        self.rectangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rectangles.is_empty()
    }
}

/// Scans the family in index order and keeps every rectangle disjoint from
/// all rectangles kept so far. Each skipped rectangle meets an earlier,
/// larger kept one and therefore lies in its 3-dilate.
pub fn greedy_disjoint_cover(family: &ShrinkingRectangleFamily) -> Vec<usize> {
    let rects = family.rectangles();
    let mut selected: Vec<usize> = Vec::new();
    for (n, r) in rects.iter().enumerate() {
        if selected.iter().all(|&k| !rects[k].intersects(r)) {
            selected.push(n);
        }
    }
    selected
}

/// For each rectangle, the first selected index whose 3-dilate contains it.
pub fn cover_witnesses(family: &ShrinkingRectangleFamily, selected: &[usize]) -> Vec<Option<usize>> {
    let rects = family.rectangles();
    rects
        .iter()
        .map(|r| {
            selected
                .iter()
                .copied()
                .find(|&k| rects[k].dilate(3.0).contains_rect(r))
        })
        .collect()
}

fn check_points(points: &[Vec<f64>], shape: &Shape, s: f64) -> Result<usize> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale s must be positive, got {s}")));
    }
    let d = match points.first() {
        Some(p) => p.len(),
        None => return Ok(0),
    };
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::Precondition("points must share a positive dimension".into()));
    }
    let shape_dim_ok = match shape {
        Shape::Ball { .. } => true,
        Shape::Box { halfwidths } => halfwidths.len() == d,
        Shape::LinearImageBall(e) => e.matrix().nrows() == d,
    };
    if !shape_dim_ok {
        return Err(Error::UnsupportedShape(format!("shape does not live in dimension {d}")));
    }
    Ok(d)
}

/// `(x + sE) ∩ (y + sE) ≠ ∅`, i.e. `x - y ∈ 2sE` for symmetric convex `E`.
pub fn translates_intersect(x: &[f64], y: &[f64], shape: &Shape, s: f64) -> bool {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    shape.contains_scaled_offset(&diff, 2.0 * s)
}

/// First-fit maximal `(s, E)`-separated subset, in input order.
pub fn max_separated_subset(points: &[Vec<f64>], shape: &Shape, s: f64) -> Result<Vec<usize>> {
    check_points(points, shape, s)?;
    let mut selected: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if selected.iter().all(|&k| !translates_intersect(&points[k], p, shape, s)) {
            selected.push(i);
        }
    }
    Ok(selected)
}

/// A separated subset of maximum size, by exhaustive branch-and-bound. Among
/// maxima the lexicographically smallest index list is returned.
pub fn exact_max_separated_subset(points: &[Vec<f64>], shape: &Shape, s: f64) -> Result<Vec<usize>> {
    check_points(points, shape, s)?;
    let k = points.len();
    if k > EXACT_SEPARATION_LIMIT {
        return Err(Error::budget("points for exact search", k as u128, EXACT_SEPARATION_LIMIT as u128));
    }
    let mut conflicts = vec![0u32; k];
    for i in 0..k {
        for j in 0..k {
            if i != j && translates_intersect(&points[i], &points[j], shape, s) {
                conflicts[i] |= 1 << j;
            }
        }
    }

    fn search(i: usize, k: usize, allowed: u32, chosen: u32, conflicts: &[u32], best: &mut u32) {
        if i == k {
            if chosen.count_ones() > best.count_ones() {
                *best = chosen;
            }
            return;
        }
        let remaining = (allowed >> i).count_ones();
        if chosen.count_ones() + remaining <= best.count_ones() {
            return;
        }
        if allowed & (1 << i) != 0 {
            search(i + 1, k, allowed & !conflicts[i], chosen | (1 << i), conflicts, best);
        }
        search(i + 1, k, allowed & !(1 << i), chosen, conflicts, best);
    }

    let mut best = 0u32;
    let all = (1u32 << k) - 1;
    search(0, k, all, 0, &conflicts, &mut best);
    Ok((0..k).filter(|&i| best & (1 << i) != 0).collect())
}

/// Number of ordered pairs `(l, l')`, `l ≠ l'`, whose `sE` translates meet.
pub fn count_overlap_pairs(points: &[Vec<f64>], shape: &Shape, s: f64) -> Result<u64> {
    check_points(points, shape, s)?;
    let unordered: u64 = (0..points.len())
        .into_par_iter()
        .map(|i| {
            ((i + 1)..points.len())
                .filter(|&j| translates_intersect(&points[i], &points[j], shape, s))
                .count() as u64
        })
        .sum();
    Ok(2 * unordered)
}

/// Reads one point per row; blank lines and `#` comments are skipped.
pub fn parse_points_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("point row {}: {e}", row + 1)))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let p = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("point row {}: bad number {f:?}: {e}", row + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        points.push(p);
    }
    if let Some(first) = points.first() {
        if points.iter().any(|p| p.len() != first.len()) {
            return Err(Error::Parse("points have differing numbers of coordinates".into()));
        }
    }
    Ok(points)
}
