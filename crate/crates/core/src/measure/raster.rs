use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::body::PlacedBody;

pub const MIN_RESOLUTION: usize = 2;
pub const MAX_RESOLUTION: usize = 1 << 20;
/// Default cap on the total number of cells in one mask.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 30;

const ROWS_PER_TASK: usize = 8;

/// An axis-aligned box `[lo_0, hi_0] × … × [lo_{d-1}, hi_{d-1}]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !a.is_finite() || !b.is_finite() || a >= b) {
            return Err(Error::Precondition(format!("invalid window lo = {lo:?}, hi = {hi:?}")));
        }
        Ok(Window { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.width(i)).product()
    }

    /// Smallest window containing every body, widened by `pad` times its width on each side.
    pub fn bounding(bodies: &[PlacedBody], pad: f64) -> Result<Self> {
        let first = bodies
            .first()
            .ok_or_else(|| Error::Precondition("cannot bound an empty body list".into()))?;
        let d = first.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for b in bodies {
            let (l, h) = b.bounding_box();
            for i in 0..d {
                lo[i] = lo[i].min(l[i]);
                hi[i] = hi[i].max(h[i]);
            }
        }
        for i in 0..d {
            let w = (hi[i] - lo[i]).max(f64::MIN_POSITIVE);
            lo[i] -= pad * w;
            hi[i] += pad * w;
        }
        Self::new(lo, hi)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }
}

/// Cell geometry along one axis. Every edge and center is computed by the
/// same expression, so masks over one window agree cell by cell.
#[derive(Clone, Copy, Debug)]
struct Axis {
    lo: f64,
    width: f64,
    cells: usize,
}

impl Axis {
    fn edge(&self, i: usize) -> f64 {
        self.lo + self.width * (i as f64 / self.cells as f64)
    }

    fn center(&self, i: usize) -> f64 {
        self.lo + self.width * ((i as f64 + 0.5) / self.cells as f64)
    }

    fn guess(&self, x: f64) -> usize {
        let g = ((x - self.lo) / self.width * self.cells as f64).floor();
        if g.is_nan() || g < 0.0 {
            0
        } else {
            (g as usize).min(self.cells)
        }
    }

    /// Smallest `i` in `0..=limit` with `f(i) ≥ x` (or `> x` when `strict`),
    /// for nondecreasing `f`; `limit` if there is none.
    fn search(&self, f: impl Fn(usize) -> f64, limit: usize, x: f64, strict: bool) -> usize {
        let ok = |i: usize| if strict { f(i) > x } else { f(i) >= x };
        let mut i = self.guess(x).min(limit);
        while i > 0 && ok(i - 1) {
            i -= 1;
        }
        while i < limit && !ok(i) {
            i += 1;
        }
        i
    }

    /// Cells whose centers lie in `[a, b]`.
    fn centers_in(&self, a: f64, b: f64) -> (usize, usize) {
        let n = self.cells;
        let start = self.search(|i| self.center(i), n, a, false);
        let end = self.search(|i| self.center(i), n, b, true);
        (start, end.max(start))
    }

    /// Cells meeting `[a, b]`.
    fn touching(&self, a: f64, b: f64) -> (usize, usize) {
        let n = self.cells;
        let start = self.search(|i| self.edge(i + 1), n, a, false);
        let end = self.search(|i| self.edge(i), n, b, true);
        (start, end.max(start))
    }

    /// Cells contained in `[a, b]`.
    fn inside(&self, a: f64, b: f64) -> (usize, usize) {
        let n = self.cells;
        let start = self.search(|i| self.edge(i), n, a, false);
        let end = self.search(|i| self.edge(i + 1), n, b, true);
        (start, end.max(start))
    }

    fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.lo + self.width) {
            return None;
        }
        let i = self.guess(x).min(self.cells - 1);
        // the guess can be off by one near an edge
        if x < self.edge(i) {
            Some(i.saturating_sub(1))
        } else if i + 1 < self.cells && x >= self.edge(i + 1) {
            Some(i + 1)
        } else {
            Some(i)
        }
    }
}

/// Occupancy of a rasterized subset of a 1D or 2D window, plus the cells
/// where center sampling may disagree with the true set.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelMask {
    window: Window,
    resolution: Vec<usize>,
    /// `u64` words per row; rows start word-aligned.
    stride: usize,
    rows: usize,
    bits: Vec<u64>,
    boundary: Vec<u64>,
}

fn range_counts(diff: &mut [i32], (a, b): (usize, usize)) {
    if a < b {
        diff[a] += 1;
        diff[b] -= 1;
    }
}

impl PixelMask {
    pub fn empty(window: Window, resolution: Vec<usize>) -> Result<Self> {
        let d = window.dim();
        if d > 2 {
            return Err(Error::UnsupportedDimension(d));
        }
        if resolution.len() != d {
            return Err(Error::Precondition(format!(
                "resolution has {} axes, window has {d}",
                resolution.len()
            )));
        }
        if let Some(r) = resolution
            .iter()
            .find(|r| !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(*r))
        {
            return Err(Error::Precondition(format!(
                "resolution {r} outside [{MIN_RESOLUTION}, {MAX_RESOLUTION}]"
            )));
        }
        let cells: u128 = resolution.iter().map(|&r| r as u128).product();
        if cells > DEFAULT_CELL_BUDGET {
            return Err(Error::budget("raster cells", cells, DEFAULT_CELL_BUDGET));
        }
        let stride = resolution[0].div_ceil(64);
        let rows = if d == 2 { resolution[1] } else { 1 };
        Ok(PixelMask {
            window,
            resolution,
            stride,
            rows,
            bits: vec![0; stride * rows],
            boundary: vec![0; stride * rows],
        })
    }

    /// Builds a mask cell by cell; `f` receives the cell index per axis.
    pub fn from_fn(window: Window, resolution: Vec<usize>, f: impl Fn(&[usize]) -> bool) -> Result<Self> {
        let mut mask = Self::empty(window, resolution)?;
        let d = mask.dim();
        for row in 0..mask.rows {
            for col in 0..mask.resolution[0] {
                let idx = if d == 2 { vec![col, row] } else { vec![col] };
                if f(&idx) {
                    mask.bits[row * mask.stride + col / 64] |= 1 << (col % 64);
                }
            }
        }
        Ok(mask)
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn cell_count(&self) -> u64 {
        self.resolution.iter().map(|&r| r as u64).product()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.window.width(i) / self.resolution[i] as f64)
            .product()
    }

    fn axis(&self, i: usize) -> Axis {
        Axis {
            lo: self.window.lo[i],
            width: self.window.width(i),
            cells: self.resolution[i],
        }
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn boundary_count(&self) -> u64 {
        self.boundary.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Occupied cells times cell volume.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_volume()
    }

    /// Cells whose status center sampling cannot settle, times cell volume;
    /// bounds the gap between [`measure`](Self::measure) and the true measure.
    pub fn boundary_error(&self) -> f64 {
        self.boundary_count() as f64 * self.cell_volume()
    }

    pub fn get(&self, idx: &[usize]) -> bool {
        let (col, row) = (idx[0], if self.dim() == 2 { idx[1] } else { 0 });
        self.bits[row * self.stride + col / 64] >> (col % 64) & 1 == 1
    }

    pub fn is_boundary(&self, idx: &[usize]) -> bool {
        let (col, row) = (idx[0], if self.dim() == 2 { idx[1] } else { 0 });
        self.boundary[row * self.stride + col / 64] >> (col % 64) & 1 == 1
    }

    /// Index of the cell containing `x`, if `x` is in the window.
    pub fn cell_of(&self, x: &[f64]) -> Option<Vec<usize>> {
        (0..self.dim()).map(|i| self.axis(i).cell_of(x[i])).collect()
    }

    /// Is the cell containing `x` occupied?
    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.cell_of(x).is_some_and(|idx| self.get(&idx))
    }

    /// Width of one cell along each axis.
    pub fn cell_widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.window.width(i) / self.resolution[i] as f64)
            .collect()
    }

    fn check_compatible(&self, other: &PixelMask) -> Result<()> {
        if self.window != other.window || self.resolution != other.resolution {
            return Err(Error::WindowMismatch);
        }
        Ok(())
    }

    fn combine(&self, other: &PixelMask, op: impl Fn(u64, u64) -> u64) -> Result<PixelMask> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.bits.iter_mut().zip(&other.bits) {
            *a = op(*a, *b);
        }
        for (a, b) in out.boundary.iter_mut().zip(&other.boundary) {
            *a |= b;
        }
        Ok(out)
    }

    /// Cellwise or. Boundary cells of either operand stay boundary cells.
    pub fn union(&self, other: &PixelMask) -> Result<PixelMask> {
        self.combine(other, |a, b| a | b)
    }

    /// Cellwise and. Boundary cells of either operand stay boundary cells.
    pub fn intersection(&self, other: &PixelMask) -> Result<PixelMask> {
        self.combine(other, |a, b| a & b)
    }

    /// Number of cells occupied in both masks.
    pub fn and_count(&self, other: &PixelMask) -> Result<u64> {
        self.check_compatible(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    /// Binary PGM (P5), 255 for occupied cells; the first row written is the top (largest y).
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let (w, h) = (self.resolution[0], self.resolution[1]);
        let io = |e: io::Error| Error::Parse(format!("write failed: {e}"));
        write!(out, "P5\n{w} {h}\n255\n").map_err(io)?;
        let mut line = vec![0u8; w];
        for row in (0..h).rev() {
            for (col, px) in line.iter_mut().enumerate() {
                *px = if self.get(&[col, row]) { 255 } else { 0 };
            }
            out.write_all(&line).map_err(io)?;
        }
        Ok(())
    }

    /// Maximal runs of occupied cells as `(start_cell, run_length)`.
    pub fn runs(&self) -> Vec<(usize, usize)> {
        let n = self.resolution[0];
        let mut runs = Vec::new();
        let mut start = None;
        for i in 0..=n {
            let on = i < n && self.get(&[i]);
            match (on, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    runs.push((s, i - s));
                    start = None;
                }
                _ => {}
            }
        }
        runs
    }

    /// CSV with header `start_cell,run_length,x_lo,x_hi`, one row per run.
    pub fn write_runs_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if self.dim() != 1 {
            return Err(Error::UnsupportedDimension(self.dim()));
        }
        let io = |e: io::Error| Error::Parse(format!("write failed: {e}"));
        let axis = self.axis(0);
        writeln!(out, "start_cell,run_length,x_lo,x_hi").map_err(io)?;
        for (s, len) in self.runs() {
            writeln!(out, "{s},{len},{:e},{:e}", axis.edge(s), axis.edge(s + len)).map_err(io)?;
        }
        Ok(())
    }
}

/// Center-sampled rasterization: a cell is occupied iff its center lies in
/// some body. A cell is marked boundary when it meets a body without lying
/// inside any single body.
pub fn rasterize(bodies: &[PlacedBody], window: &Window, resolution: &[usize]) -> Result<PixelMask> {
    let d = window.dim();
    if d > 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if let Some(b) = bodies.iter().find(|b| b.dim() != d) {
        return Err(Error::Precondition(format!(
            "body of dimension {} in a {d}-dimensional window",
            b.dim()
        )));
    }
    let mut mask = PixelMask::empty(window.clone(), resolution.to_vec())?;
    if d == 1 {
        rasterize_1d(bodies, &mut mask);
    } else {
        rasterize_2d(bodies, &mut mask);
    }
    Ok(mask)
}

fn fill_row(bits: &mut [u64], boundary: &mut [u64], occ: &[i32], touch: &[i32], full: &[i32]) {
    let (mut o, mut t, mut f) = (0, 0, 0);
    for col in 0..occ.len() - 1 {
        o += occ[col];
        t += touch[col];
        f += full[col];
        if o > 0 {
            bits[col / 64] |= 1 << (col % 64);
        }
        if t > 0 && f == 0 {
            boundary[col / 64] |= 1 << (col % 64);
        }
    }
}

fn rasterize_1d(bodies: &[PlacedBody], mask: &mut PixelMask) {
    let axis = mask.axis(0);
    let n = axis.cells;
    let mut occ = vec![0i32; n + 1];
    let mut touch = vec![0i32; n + 1];
    let mut full = vec![0i32; n + 1];
    for b in bodies {
        let (a, c) = b.interval();
        range_counts(&mut occ, axis.centers_in(a, c));
        range_counts(&mut touch, axis.touching(a, c));
        range_counts(&mut full, axis.inside(a, c));
    }
    fill_row(&mut mask.bits, &mut mask.boundary, &occ, &touch, &full);
}

fn rasterize_2d(bodies: &[PlacedBody], mask: &mut PixelMask) {
    let xa = mask.axis(0);
    let ya = mask.axis(1);
    let nx = xa.cells;
    let stride = mask.stride;
    // rows each body can meet
    let spans: Vec<(usize, usize)> = bodies
        .iter()
        .map(|b| {
            let (lo, hi) = b.bounding_box();
            ya.touching(lo[1], hi[1])
        })
        .collect();

    mask.bits
        .par_chunks_mut(stride * ROWS_PER_TASK)
        .zip(mask.boundary.par_chunks_mut(stride * ROWS_PER_TASK))
        .enumerate()
        .for_each(|(task, (bits, boundary))| {
            let row0 = task * ROWS_PER_TASK;
            let row1 = (row0 + ROWS_PER_TASK).min(ya.cells);
            let active: Vec<usize> = spans
                .iter()
                .enumerate()
                .filter(|(_, (a, b))| *a < row1 && *b > row0)
                .map(|(i, _)| i)
                .collect();
            let mut occ = vec![0i32; nx + 1];
            let mut touch = vec![0i32; nx + 1];
            let mut full = vec![0i32; nx + 1];
            for row in row0..row1 {
                occ.iter_mut().for_each(|v| *v = 0);
                touch.iter_mut().for_each(|v| *v = 0);
                full.iter_mut().for_each(|v| *v = 0);
                let (y0, y1, yc) = (ya.edge(row), ya.edge(row + 1), ya.center(row));
                for &i in &active {
                    let (a, b) = spans[i];
                    if row < a || row >= b {
                        continue;
                    }
                    let body = &bodies[i];
                    let (cx, cy) = (body.center[0], body.center[1]);
                    let shape = &body.shape;
                    if let Some((l, r)) = shape.chord(yc - cy) {
                        range_counts(&mut occ, xa.centers_in(cx + l, cx + r));
                    }
                    if let Some((l, r)) = shape.band_extent(y0 - cy, y1 - cy) {
                        range_counts(&mut touch, xa.touching(cx + l, cx + r));
                    }
                    if let (Some((l0, r0)), Some((l1, r1))) = (shape.chord(y0 - cy), shape.chord(y1 - cy)) {
                        let (l, r) = (l0.max(l1), r0.min(r1));
                        if l <= r {
                            range_counts(&mut full, xa.inside(cx + l, cx + r));
                        }
                    }
                }
                let off = (row - row0) * stride;
                fill_row(
                    &mut bits[off..off + stride],
                    &mut boundary[off..off + stride],
                    &occ,
                    &touch,
                    &full,
                );
            }
        });
}

/// Measure of the cellwise union of the masks.
pub fn measure_union(mask: &PixelMask) -> f64 {
    mask.measure()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::{Matrix, Vector};
    use crate::measure::body::Shape;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn interval(c: f64, r: f64) -> PlacedBody {
        PlacedBody::new(Vector::from_element(1, c), Shape::ball(r).unwrap()).unwrap()
    }

    fn unit_window_1d() -> Window {
        Window::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn half_window_interval() {
        let m = rasterize(&[interval(0.25, 0.25)], &unit_window_1d(), &[1024]).unwrap();
        assert!((m.measure() - 0.5).abs() <= 2.0 / 1024.0);
        assert_eq!(m.count(), 512);
    }

    #[test]
    fn empty_and_full() {
        let m = rasterize(&[], &unit_window_1d(), &[64]).unwrap();
        assert_eq!(m.measure(), 0.0);
        let w = Window::new(vec![0.0, 0.0], vec![2.0, 3.0]).unwrap();
        let full = PixelMask::from_fn(w.clone(), vec![16, 8], |_| true).unwrap();
        assert_abs_diff_eq!(full.measure(), 6.0, epsilon = 1e-12);
        let checker = PixelMask::from_fn(w, vec![16, 8], |i| (i[0] + i[1]) % 2 == 0).unwrap();
        assert_abs_diff_eq!(checker.measure(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn disjoint_intervals_add() {
        let w = unit_window_1d();
        let a = rasterize(&[interval(0.2, 0.1)], &w, &[1000]).unwrap();
        let b = rasterize(&[interval(0.7, 0.15)], &w, &[1000]).unwrap();
        let ab = rasterize(&[interval(0.2, 0.1), interval(0.7, 0.15)], &w, &[1000]).unwrap();
        assert_eq!(ab.count(), a.count() + b.count());
        assert_eq!(a.union(&b).unwrap().count(), ab.count());
    }

    #[test]
    fn boundary_cells_bracket_true_length() {
        let w = Window::interval(-0.3, 2.3).unwrap();
        let bodies = vec![interval(0.1234, 0.2), interval(0.3, 0.05), interval(1.777, 0.001)];
        let m = rasterize(&bodies, &w, &[777]).unwrap();
        // [-0.0766, 0.3234] ∪ [0.25, 0.35] ∪ [1.776, 1.778]
        let exact = (0.35 - (0.1234 - 0.2)) + 0.002;
        assert!((m.measure() - exact).abs() <= m.boundary_error() + 1e-12);
        assert!(m.boundary_count() <= 6);
    }

    #[test]
    fn disk_area_within_boundary_error() {
        let w = Window::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let disk = PlacedBody::new(Vector::from_vec(vec![0.1, -0.05]), Shape::ball(0.7).unwrap()).unwrap();
        let m = rasterize(&[disk], &w, &[512, 512]).unwrap();
        let area = std::f64::consts::PI * 0.49;
        assert!((m.measure() - area).abs() <= m.boundary_error());
        assert!(m.boundary_error() < 0.05 * area);
    }

    #[test]
    fn tilted_ellipse_area() {
        let w = Window::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let mat = Matrix::from_row_slice(2, 2, &[0.6, 0.3, -0.2, 0.4]);
        let e = PlacedBody::new(Vector::from_vec(vec![0.05, 0.1]), Shape::linear_image_ball(mat.clone(), 1.0).unwrap()).unwrap();
        let m = rasterize(std::slice::from_ref(&e), &w, &[600, 400]).unwrap();
        let area = e.volume();
        assert!((m.measure() - area).abs() <= m.boundary_error());
        // every occupied cell center is inside, every empty non-boundary cell is outside
        let xs = m.cell_widths();
        for row in (0..400).step_by(7) {
            for col in (0..600).step_by(5) {
                let c = [-1.0 + (col as f64 + 0.5) * xs[0], -1.0 + (row as f64 + 0.5) * xs[1]];
                assert_eq!(m.get(&[col, row]), e.contains(&c));
            }
        }
    }

    #[test]
    fn mismatched_windows_are_rejected() {
        let a = rasterize(&[], &unit_window_1d(), &[64]).unwrap();
        let b = rasterize(&[], &unit_window_1d(), &[128]).unwrap();
        assert_eq!(a.and_count(&b), Err(Error::WindowMismatch));
    }

    #[test]
    fn dimension_three_is_unsupported() {
        let w = Window::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
        assert_eq!(rasterize(&[], &w, &[4, 4, 4]), Err(Error::UnsupportedDimension(3)));
    }

    #[test]
    fn exports() {
        let m = rasterize(&[interval(0.25, 0.1), interval(0.75, 0.1)], &unit_window_1d(), &[20]).unwrap();
        let mut csv = Vec::new();
        m.write_runs_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "start_cell,run_length,x_lo,x_hi");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("3,4,"));

        let w = Window::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let top = PixelMask::from_fn(w, vec![3, 2], |i| i[1] == 1).unwrap();
        let mut pgm = Vec::new();
        top.write_pgm(&mut pgm).unwrap();
        assert_eq!(&pgm[..11], b"P5\n3 2\n255\n");
        assert_eq!(&pgm[11..], &[255, 255, 255, 0, 0, 0]);
    }

    #[test]
    fn point_lookup() {
        let m = rasterize(&[interval(0.5, 0.1)], &unit_window_1d(), &[100]).unwrap();
        assert!(m.contains_point(&[0.5]));
        assert!(!m.contains_point(&[0.3]));
        assert!(!m.contains_point(&[1.5]));
    }

    proptest! {
        #[test]
        fn raster_matches_center_rule_1d(
            bodies in prop::collection::vec((-0.5f64..1.5, 0.001f64..0.3), 0..12),
            res in 2usize..300,
        ) {
            let w = Window::interval(-0.1, 1.1).unwrap();
            let placed: Vec<PlacedBody> = bodies.iter().map(|&(c, r)| interval(c, r)).collect();
            let m = rasterize(&placed, &w, &[res]).unwrap();
            for i in 0..res {
                let center = -0.1 + 1.2 * ((i as f64 + 0.5) / res as f64);
                let inside = placed.iter().any(|b| b.contains(&[center]));
                prop_assert_eq!(m.get(&[i]), inside);
            }
        }

        #[test]
        fn raster_matches_center_rule_2d(
            bodies in prop::collection::vec((-0.2f64..1.2, -0.2f64..1.2, 0.01f64..0.4, -1.0f64..1.0), 0..6),
        ) {
            let w = Window::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
            let placed: Vec<PlacedBody> = bodies
                .iter()
                .map(|&(x, y, r, k)| {
                    let mat = Matrix::from_row_slice(2, 2, &[1.0, k, 0.0, 0.5]);
                    PlacedBody::new(Vector::from_vec(vec![x, y]), Shape::linear_image_ball(mat, r).unwrap()).unwrap()
                })
                .collect();
            let m = rasterize(&placed, &w, &[40, 30]).unwrap();
            for row in 0..30 {
                for col in 0..40 {
                    let c = [(col as f64 + 0.5) / 40.0, (row as f64 + 0.5) / 30.0];
                    let inside = placed.iter().any(|b| b.contains(&c));
                    prop_assert_eq!(m.get(&[col, row]), inside, "cell {} {}", col, row);
                    if !m.is_boundary(&[col, row]) {
                        // settled cells lie inside one body, or meet none of them
                        let (x0, x1) = (col as f64 / 40.0, (col + 1) as f64 / 40.0);
                        let (y0, y1) = (row as f64 / 30.0, (row + 1) as f64 / 30.0);
                        let corners = [[x0, y0], [x1, y0], [x0, y1], [x1, y1]];
                        if inside {
                            prop_assert!(placed.iter().any(|b| corners.iter().all(|p| b.contains(p))));
                        } else {
                            for p in corners.iter().chain(std::iter::once(&c)) {
                                prop_assert!(!placed.iter().any(|b| b.contains(p)));
                            }
                        }
                    }
                }
            }
        }
    }
}
