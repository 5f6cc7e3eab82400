use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::raster::PixelMask;

/// Pairwise intersection cell counts of a mask family, kept as integers so the
/// classical lower bounds can be compared with the union exactly.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntersectionTable {
    pub counts: Vec<Vec<u64>>,
    pub cell_volume: f64,
}

impl IntersectionTable {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Entry `(n, m)` is the measure of `E_n ∩ E_m`.
    pub fn measures(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| row.iter().map(|&c| c as f64 * self.cell_volume).collect())
            .collect()
    }

    fn diagonal_sum(&self) -> u128 {
        (0..self.len()).map(|i| self.counts[i][i] as u128).sum()
    }

    fn total_sum(&self) -> u128 {
        self.counts.iter().flatten().map(|&c| c as u128).sum()
    }

    fn upper_sum(&self) -> u128 {
        (0..self.len())
            .flat_map(|i| (i + 1..self.len()).map(move |j| (i, j)))
            .map(|(i, j)| self.counts[i][j] as u128)
            .sum()
    }

    /// `(Σ|E_n|)² ≤ |∪E_n| · Σ_{n,m}|E_n ∩ E_m|` in exact cell arithmetic.
    pub fn kochen_stone_holds(&self, union_cells: u64) -> bool {
        let s = self.diagonal_sum();
        let lhs = s.checked_mul(s);
        let rhs = (union_cells as u128).checked_mul(self.total_sum());
        match (lhs, rhs) {
            (Some(l), Some(r)) => l <= r,
            _ => false,
        }
    }

    /// `Σ|E_n| - Σ_{n<m}|E_n ∩ E_m| ≤ |∪E_n|` in exact cell arithmetic.
    pub fn bonferroni_holds(&self, union_cells: u64) -> bool {
        self.diagonal_sum() as i128 - self.upper_sum() as i128 <= union_cells as i128
    }
}

pub fn pairwise_intersection_table(masks: &[PixelMask]) -> Result<IntersectionTable> {
    let first = masks
        .first()
        .ok_or_else(|| Error::Precondition("need at least one mask".into()))?;
    for m in &masks[1..] {
        if m.window() != first.window() || m.resolution() != first.resolution() {
            return Err(Error::WindowMismatch);
        }
    }
    let q = masks.len();
    let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i..q).map(move |j| (i, j))).collect();
    let values: Vec<u64> = pairs
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                Ok(masks[i].count())
            } else {
                masks[i].and_count(&masks[j])
            }
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![vec![0u64; q]; q];
    for (&(i, j), v) in pairs.iter().zip(values) {
        counts[i][j] = v;
        counts[j][i] = v;
    }
    Ok(IntersectionTable {
        counts,
        cell_volume: first.cell_volume(),
    })
}

fn check_table(table: &[Vec<f64>]) -> Result<()> {
    let q = table.len();
    if q == 0 || table.iter().any(|row| row.len() != q) {
        return Err(Error::Precondition("intersection table must be a nonempty square matrix".into()));
    }
    for (i, row) in table.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("entry ({i}, {j}) = {v} is not a finite nonnegative number")));
            }
            if (v - table[j][i]).abs() > 1e-12 * v.abs().max(1.0) {
                return Err(Error::Precondition("intersection table is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// `(Σ μ(E_n))² / Σ_{n,m} μ(E_n ∩ E_m)`, a lower bound for `μ(∪ E_n)`.
pub fn kochen_stone_bound(table: &[Vec<f64>]) -> Result<f64> {
    check_table(table)?;
    let diag: f64 = (0..table.len()).map(|i| table[i][i]).sum();
    let total: f64 = table.iter().flatten().sum();
    if diag <= 0.0 || total <= 0.0 {
        return Err(Error::UndefinedBound("every set in the family has measure zero".into()));
    }
    Ok(diag * diag / total)
}

/// `Σ μ(E_k) - Σ_{k<k'} μ(E_k ∩ E_{k'})`; may be negative.
pub fn bonferroni_bound(table: &[Vec<f64>]) -> Result<f64> {
    check_table(table)?;
    let q = table.len();
    let diag: f64 = (0..q).map(|i| table[i][i]).sum();
    let upper: f64 = (0..q).flat_map(|i| (i + 1..q).map(move |j| (i, j))).map(|(i, j)| table[i][j]).sum();
    Ok(diag - upper)
}

/// Finite proxy for the upper density: the largest prefix ratio
/// `#{j ≤ n : indicator[j]} / n` over `n ∈ [⌈N/2⌉, N]`.
pub fn upper_density_estimate(indicator: &[bool]) -> Result<f64> {
    let n = indicator.len();
    if n == 0 {
        return Err(Error::Precondition("indicator sequence is empty".into()));
    }
    let mut hits = 0usize;
    let mut best = 0.0f64;
    for (k, &b) in indicator.iter().enumerate() {
        hits += b as usize;
        let len = k + 1;
        if len >= n.div_ceil(2) {
            best = best.max(hits as f64 / len as f64);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::Vector;
    use crate::measure::body::{PlacedBody, Shape};
    use crate::measure::raster::{rasterize, Window};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mask(intervals: &[(f64, f64)]) -> PixelMask {
        let bodies: Vec<PlacedBody> = intervals
            .iter()
            .map(|&(c, r)| PlacedBody::new(Vector::from_element(1, c), Shape::ball(r).unwrap()).unwrap())
            .collect();
        rasterize(&bodies, &Window::interval(0.0, 1.0).unwrap(), &[1000]).unwrap()
    }

    #[test]
    fn table_cases() {
        let a = mask(&[(0.2, 0.1)]);
        let t = pairwise_intersection_table(&[a.clone(), a.clone(), a.clone()]).unwrap();
        assert!(t.counts.iter().flatten().all(|&c| c == 200));
        let b = mask(&[(0.7, 0.1)]);
        let t = pairwise_intersection_table(&[a.clone(), b]).unwrap();
        assert_eq!(t.counts[0][1], 0);
        let inner = mask(&[(0.2, 0.05)]);
        let t = pairwise_intersection_table(&[a, inner]).unwrap();
        assert_eq!(t.counts[0][1], t.counts[1][1]);
    }

    #[test]
    fn kochen_stone_examples() {
        let v = 0.3;
        let same = vec![vec![v; 4]; 4];
        assert_abs_diff_eq!(kochen_stone_bound(&same).unwrap(), v, epsilon = 1e-15);
        let disjoint: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { v } else { 0.0 }).collect()).collect();
        assert_abs_diff_eq!(kochen_stone_bound(&disjoint).unwrap(), 4.0 * v, epsilon = 1e-15);
        let two = vec![vec![0.3, 0.1], vec![0.1, 0.3]];
        assert_abs_diff_eq!(kochen_stone_bound(&two).unwrap(), 0.45, epsilon = 1e-15);
        assert!(kochen_stone_bound(&two).unwrap() <= 0.5);
        assert!(matches!(kochen_stone_bound(&[vec![0.0]]), Err(Error::UndefinedBound(_))));
    }

    #[test]
    fn bonferroni_examples() {
        let two = vec![vec![0.3, 0.1], vec![0.1, 0.3]];
        assert_abs_diff_eq!(bonferroni_bound(&two).unwrap(), 0.5, epsilon = 1e-15);
        let disjoint = vec![vec![0.2, 0.0], vec![0.0, 0.3]];
        assert_abs_diff_eq!(bonferroni_bound(&disjoint).unwrap(), 0.5, epsilon = 1e-15);
        let v = 0.3;
        let same = vec![vec![v; 4]; 4];
        assert_abs_diff_eq!(bonferroni_bound(&same).unwrap(), 4.0 * v - 6.0 * v, epsilon = 1e-15);
        assert!(bonferroni_bound(&same).unwrap() < 0.0);
    }

    #[test]
    fn density_examples() {
        assert_eq!(upper_density_estimate(&[true; 10]).unwrap(), 1.0);
        assert_eq!(upper_density_estimate(&[false; 10]).unwrap(), 0.0);
        let even: Vec<bool> = (0..1000).map(|j| j % 2 == 0).collect();
        assert!((upper_density_estimate(&even).unwrap() - 0.5).abs() <= 1.0 / 500.0);
        assert!(upper_density_estimate(&[]).is_err());
    }

    proptest! {
        #[test]
        fn classical_bounds_never_exceed_union(
            family in prop::collection::vec(prop::collection::vec((0.0f64..1.0, 0.005f64..0.2), 1..5), 1..6),
        ) {
            let masks: Vec<PixelMask> = family.iter().map(|iv| mask(iv)).collect();
            let table = pairwise_intersection_table(&masks).unwrap();
            let mut union = masks[0].clone();
            for m in &masks[1..] {
                union = union.union(m).unwrap();
            }
            let u = union.count();
            prop_assert!(table.bonferroni_holds(u));
            if table.counts.iter().enumerate().any(|(i, r)| r[i] > 0) {
                prop_assert!(table.kochen_stone_holds(u));
            }
            let sum: u64 = masks.iter().map(|m| m.count()).sum();
            prop_assert!(u <= sum);
        }
    }
}
