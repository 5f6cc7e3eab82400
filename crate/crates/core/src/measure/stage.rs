use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::AffineIfs;
use crate::measure::body::PlacedBody;
use crate::measure::bounds::{bonferroni_bound, kochen_stone_bound, pairwise_intersection_table};
use crate::measure::raster::{rasterize, PixelMask, Window};
use crate::measure::target::{stage_recurrence_bodies, stage_target_bodies, TargetSpec};

/// Level-`n` bodies of either kind of target.
pub fn stage_bodies(ifs: &AffineIfs, spec: &TargetSpec, n: usize) -> Result<Vec<PlacedBody>> {
    if spec.is_recurrence() {
        stage_recurrence_bodies(ifs, spec, n)
    } else {
        stage_target_bodies(ifs, spec, n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelMeasure {
    pub level: usize,
    pub bodies: usize,
    pub union_measure: f64,
    pub boundary_error: f64,
    /// `Σ` of the analytic body volumes, an upper bound for the true union.
    pub analytic_volume_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassicalBounds {
    pub kochen_stone: Option<f64>,
    pub bonferroni: f64,
    /// Measure of the union of all stage masks in the range.
    pub union_of_levels: f64,
    /// Exact cell-arithmetic confirmation that both bounds sit below the union.
    pub kochen_stone_le_union: Option<bool>,
    pub bonferroni_le_union: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageMeasureReport {
    pub level: usize,
    pub bodies: usize,
    pub union_measure: f64,
    pub boundary_error: f64,
    pub window: Window,
    pub resolution: Vec<usize>,
    pub levels: Vec<LevelMeasure>,
    pub bounds: ClassicalBounds,
}

/// Rasterizes the stage sets for every level in `first..=last` and reports
/// per-level measures together with the Kochen–Stone and Bonferroni bounds
/// for the union of the stages. `masks` receives the per-level masks when given.
pub fn stage_measure_report(
    ifs: &AffineIfs,
    spec: &TargetSpec,
    first: usize,
    last: usize,
    window: &Window,
    resolution: &[usize],
    masks: Option<&mut Vec<PixelMask>>,
) -> Result<StageMeasureReport> {
    if first == 0 || first > last {
        return Err(Error::Precondition(format!("invalid level range {first}..={last}")));
    }
    let mut levels = Vec::new();
    let mut stage_masks = Vec::new();
    for n in first..=last {
        let bodies = stage_bodies(ifs, spec, n)?;
        let mask = rasterize(&bodies, window, resolution)?;
        levels.push(LevelMeasure {
            level: n,
            bodies: bodies.len(),
            union_measure: mask.measure(),
            boundary_error: mask.boundary_error(),
            analytic_volume_sum: bodies.iter().map(|b| b.volume()).sum(),
        });
        stage_masks.push(mask);
    }
    let table = pairwise_intersection_table(&stage_masks)?;
    let mut union = stage_masks[0].clone();
    for m in &stage_masks[1..] {
        union = union.union(m)?;
    }
    let measures = table.measures();
    let kochen_stone = match kochen_stone_bound(&measures) {
        Ok(v) => Some(v),
        Err(Error::UndefinedBound(_)) => None,
        Err(e) => return Err(e),
    };
    let union_cells = union.count();
    let bounds = ClassicalBounds {
        kochen_stone,
        bonferroni: bonferroni_bound(&measures)?,
        union_of_levels: union.measure(),
        kochen_stone_le_union: kochen_stone.map(|_| table.kochen_stone_holds(union_cells)),
        bonferroni_le_union: table.bonferroni_holds(union_cells),
    };
    let top = levels.last().expect("nonempty range").clone();
    if let Some(out) = masks {
        out.extend(stage_masks);
    }
    Ok(StageMeasureReport {
        level: top.level,
        bodies: top.bodies,
        union_measure: top.union_measure,
        boundary_error: top.boundary_error,
        window: window.clone(),
        resolution: resolution.to_vec(),
        levels,
        bounds,
    })
}

/// Fraction of the cells of `ball` covered by the level-`n` bodies, on a
/// raster of the ball's bounding box.
pub fn restricted_coverage(
    ifs: &AffineIfs,
    spec: &TargetSpec,
    n: usize,
    ball: &PlacedBody,
    resolution: &[usize],
) -> Result<f64> {
    let (lo, hi) = ball.bounding_box();
    let window = Window::new(lo, hi)?;
    let bodies = stage_bodies(ifs, spec, n)?;
    let covered = rasterize(&bodies, &window, resolution)?;
    let region = rasterize(std::slice::from_ref(ball), &window, resolution)?;
    let inside = region.count();
    if inside == 0 {
        return Err(Error::Precondition("the ball covers no raster cell".into()));
    }
    Ok(covered.and_count(&region)? as f64 / inside as f64)
}
