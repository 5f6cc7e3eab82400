//! Finite-stage shrinking-target and recurrence sets, their rasterized
//! measures, and the classical bounds built from them.

pub mod body;
pub mod bounds;
pub mod overlap;
pub mod raster;
pub mod stage;
pub mod target;

pub use body::{unit_ball_volume, PlacedBody, Shape};
pub use bounds::{
    bonferroni_bound, kochen_stone_bound, pairwise_intersection_table, upper_density_estimate,
    IntersectionTable,
};
pub use overlap::{
    borel_cantelli_report, detect_exact_overlaps, exact_overlap_gamma, product_ifs_criterion,
    BorelCantelliReport, ClassificationHint, OverlapPair, OverlapSeries,
};
pub use raster::{measure_union, rasterize, PixelMask, Window};
pub use stage::{restricted_coverage, stage_bodies, stage_measure_report, LevelMeasure, StageMeasureReport};
pub use target::{
    recurrence_body, stage_recurrence_bodies, stage_target_bodies, BodyGenerator, Centers, HFamily,
    HMembership, TargetMode, TargetSpec,
};
