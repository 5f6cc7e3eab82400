//! Monte Carlo over the translation parameters `T ∈ [-R, R]^{m·d}`: pair
//! counts of the level-`n` ellipses and union measures of shrinking-target
//! and recurrence stages.

use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{
    fixed_point, is_diagonal, neumann_resolvent_of, AffineIfs, AffineMap, ContractionMode, Matrix, SymbolicSequence, Vector,
    DEFAULT_WORD_BUDGET,
};
use crate::measure::{rasterize, unit_ball_volume, PlacedBody, Shape, Window};

/// Default `s` grid for scaling sweeps.
pub const DEFAULT_GRID: [f64; 7] = [0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4];

const CONTACT_TOLERANCE: f64 = 1e-12;
const BOUND_SLACK: f64 = 1e-12;
const WINDOW_PAD: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct McBudget {
    pub max_level: usize,
    pub max_samples: usize,
}

impl Default for McBudget {
    fn default() -> Self {
        McBudget {
            max_level: 8,
            max_samples: 500,
        }
    }
}

/// One point of the parameter box, reproducible from `(seed, index)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParameterSample {
    pub seed: u64,
    pub index: u64,
    /// `translations[i]` is `t_i`.
    pub translations: Vec<Vector>,
}

impl ParameterSample {
    pub fn coordinates(&self) -> Vec<f64> {
        self.translations.iter().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn ifs(&self, matrices: &[Matrix]) -> Result<AffineIfs> {
        if matrices.len() != self.translations.len() {
            return Err(Error::InvalidIfs(format!(
                "{} matrices for {} translations",
                matrices.len(),
                self.translations.len()
            )));
        }
        let maps = matrices
            .iter()
            .zip(&self.translations)
            .map(|(a, t)| AffineMap::new(a.clone(), t.clone()))
            .collect::<Result<Vec<_>>>()?;
        AffineIfs::new(maps)
    }
}

/// Sample `index` of the stream `seed`: ChaCha8 keyed by the seed, stream
/// number `index`, and coordinate `k` taken from the `k`-th output word.
pub fn sample_at(m: usize, d: usize, r: f64, seed: u64, index: u64) -> ParameterSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let translations = (0..m)
        .map(|_| {
            Vector::from_iterator(
                d,
                (0..d).map(|_| {
                    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                    -r + 2.0 * r * u
                }),
            )
        })
        .collect();
    ParameterSample { seed, index, translations }
}

pub fn sample_translations(m: usize, d: usize, r: f64, count: usize, seed: u64) -> Result<Vec<ParameterSample>> {
    if count == 0 {
        return Err(Error::Precondition("sample count must be at least 1".into()));
    }
    if m == 0 || d == 0 {
        return Err(Error::Precondition("need m ≥ 1 maps in dimension d ≥ 1".into()));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!("parameter box radius must be finite and nonnegative, got {r}")));
    }
    Ok((0..count as u64).map(|i| sample_at(m, d, r, seed, i)).collect())
}

/// The common positive diagonal matrix of the family, or an error.
pub fn common_positive_diagonal(matrices: &[Matrix]) -> Result<Matrix> {
    let a = matrices
        .first()
        .ok_or_else(|| Error::InvalidIfs("no matrices given".into()))?;
    let ok = a.is_square()
        && is_diagonal(a)
        && (0..a.nrows()).all(|i| a[(i, i)] > 0.0)
        && matrices.iter().all(|b| b == a);
    if !ok {
        return Err(Error::UnsupportedConfiguration(
            "pair statistics need one positive diagonal matrix shared by all maps".into(),
        ));
    }
    Ok(a.clone())
}

fn check_level(n: usize, budget: &McBudget) -> Result<()> {
    if n == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    if n > budget.max_level {
        return Err(Error::budget("Monte Carlo level", n as u128, budget.max_level as u128));
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("s grid is empty".into()));
    }
    if grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(format!("s grid must be positive and strictly increasing: {grid:?}")));
    }
    Ok(())
}

/// `π_T(w · tail) = S_w(π_T(tail))` for all `w ∈ I^n`, in lexicographic order.
pub fn level_centers(ifs: &AffineIfs, tail: &SymbolicSequence, n: usize) -> Result<Vec<Vector>> {
    let x = ifs.project(tail)?;
    Ok(ifs
        .level_maps(n, DEFAULT_WORD_BUDGET)?
        .iter()
        .map(|m| m.apply(&x))
        .collect())
}

/// Distances `|A^{-n}(c_j - c_k)| · λ^{n/d} / 2` over unordered pairs, kept
/// when at most `s_max`. A pair overlaps at scale `s` iff its entry is `≤ s`.
fn scaled_pair_distances(a: &Matrix, lambda: f64, centers: &[Vector], n: usize, s_max: f64) -> Vec<f64> {
    let d = a.nrows();
    let scale = lambda.powf(n as f64 / d as f64) / 2.0;
    let inv: Vec<f64> = (0..d).map(|i| a[(i, i)].powi(-(n as i32)) * scale).collect();
    let mut pts: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| c.iter().zip(&inv).map(|(x, f)| x * f).collect())
        .collect();
    pts.sort_by(|p, q| p[0].total_cmp(&q[0]));
    let reach = s_max * (1.0 + CONTACT_TOLERANCE);
    let mut dists: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let p = &pts[i];
            pts[i + 1..]
                .iter()
                .take_while(move |q| q[0] - p[0] <= reach)
                .filter_map(move |q| {
                    let dist = p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
                    (dist <= reach).then_some(dist)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    dists
}

/// Unordered pair counts `#{j < k : π_T(j·tail) - π_T(k·tail) ∈ 2E_n}` for
/// each `s` of a strictly increasing grid, `E_n = A^n B(0, s / λ^{n/d})`.
pub fn pair_overlap_counts(
    matrices: &[Matrix],
    sample: &ParameterSample,
    tail: &SymbolicSequence,
    n: usize,
    grid: &[f64],
) -> Result<Vec<u64>> {
    let a = common_positive_diagonal(matrices)?;
    check_grid(grid)?;
    let ifs = sample.ifs(matrices)?;
    let centers = level_centers(&ifs, tail, n)?;
    let dists = scaled_pair_distances(&a, ifs.lambda_value(), &centers, n, grid[grid.len() - 1]);
    Ok(grid
        .iter()
        .map(|s| dists.partition_point(|&x| x <= s * (1.0 + CONTACT_TOLERANCE)) as u64)
        .collect())
}

pub fn pair_overlap_statistic(
    matrices: &[Matrix],
    sample: &ParameterSample,
    tail: &SymbolicSequence,
    n: usize,
    s: f64,
) -> Result<u64> {
    Ok(pair_overlap_counts(matrices, sample, tail, n, &[s])?[0])
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Unweighted least squares `y = slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Parameters shared by every sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct McConfig {
    pub matrices: Vec<Matrix>,
    pub n: usize,
    pub radius: f64,
    pub grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub budget: McBudget,
}

impl McConfig {
    fn validate(&self) -> Result<(usize, usize)> {
        let m = self.matrices.len();
        let d = self.matrices.first().map(|a| a.nrows()).unwrap_or(0);
        if m == 0 || d == 0 {
            return Err(Error::InvalidIfs("no matrices given".into()));
        }
        check_level(self.n, &self.budget)?;
        check_grid(&self.grid)?;
        if self.samples == 0 {
            return Err(Error::Precondition("sample count must be at least 1".into()));
        }
        if self.samples > self.budget.max_samples {
            return Err(Error::budget("Monte Carlo samples", self.samples as u128, self.budget.max_samples as u128));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::Domain(format!("parameter box radius must be finite and nonnegative, got {}", self.radius)));
        }
        Ok((m, d))
    }

    fn samples(&self, m: usize, d: usize) -> Vec<ParameterSample> {
        (0..self.samples as u64)
            .map(|i| sample_at(m, d, self.radius, self.seed, i))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Log-log fit over the grid points with a positive mean.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Grid points left out of the fit because every sample counted zero pairs.
    pub excluded: Vec<f64>,
    /// `mean / (m^n s^d)`, the empirical constant of the pair-count estimate.
    pub ratios: Vec<f64>,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub seed: u64,
    pub samples: usize,
    /// `statistics[sample][grid index]`.
    #[serde(skip)]
    pub statistics: Vec<Vec<u64>>,
}

impl ScalingReport {
    /// Long format `s,sample_index,statistic`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self
            .statistics
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(g, v)| (g, i, *v as f64)));
        write_long_csv(out, &self.grid, rows)
    }
}

fn write_long_csv<W: Write>(out: W, grid: &[f64], rows: impl Iterator<Item = (usize, usize, f64)>) -> Result<()> {
    let io = |e: csv::Error| Error::Numeric(format!("CSV write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "sample_index", "statistic"]).map_err(io)?;
    let mut rows: Vec<_> = rows.collect();
    rows.sort_by_key(|&(g, i, _)| (g, i));
    for (g, i, v) in rows {
        w.write_record([format!("{:?}", grid[g]), i.to_string(), format!("{v:?}")])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("CSV write failed: {e}")))
}

/// Means of the pair statistic over the sampled parameters, per grid point,
/// with a log-log slope fit.
pub fn mc_scaling(config: &McConfig, tail: &SymbolicSequence) -> Result<ScalingReport> {
    let (m, d) = config.validate()?;
    common_positive_diagonal(&config.matrices)?;
    let statistics: Vec<Vec<u64>> = config
        .samples(m, d)
        .par_iter()
        .map(|sample| pair_overlap_counts(&config.matrices, sample, tail, config.n, &config.grid))
        .collect::<Result<_>>()?;
    let count = (m as f64).powi(config.n as i32);
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut ratios = Vec::new();
    let (mut xs, mut ys, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (g, &s) in config.grid.iter().enumerate() {
        let column: Vec<f64> = statistics.iter().map(|row| row[g] as f64).collect();
        let (mean, se) = mean_and_stderr(&column);
        means.push(mean);
        stderrs.push(se);
        ratios.push(mean / (count * s.powi(d as i32)));
        if mean > 0.0 {
            xs.push(s.ln());
            ys.push(mean.ln());
        } else {
            excluded.push(s);
        }
    }
    let fit = least_squares(&xs, &ys);
    Ok(ScalingReport {
        grid: config.grid.clone(),
        means,
        stderrs,
        slope: fit.map(|f| f.0),
        intercept: fit.map(|f| f.1),
        excluded,
        ratios,
        n: config.n,
        m,
        d,
        r: config.radius,
        seed: config.seed,
        samples: config.samples,
        statistics,
    })
}

/// A rasterized union measure with its hard upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnionSample {
    pub measure: f64,
    pub boundary_error: f64,
    pub bound: f64,
}

impl UnionSample {
    /// `measure - bound - boundary_error`; never positive for a correct run.
    pub fn excess(&self) -> f64 {
        self.measure - self.bound - self.boundary_error
    }
}

fn check_union(sample: UnionSample, what: &str) -> Result<UnionSample> {
    if sample.measure > sample.bound * (1.0 + BOUND_SLACK) + sample.boundary_error {
        return Err(Error::Consistency(format!(
            "{what} union measure {} exceeds its bound {} by more than the raster error {}",
            sample.measure, sample.bound, sample.boundary_error
        )));
    }
    Ok(sample)
}

fn raster_union(bodies: &[PlacedBody], resolution: usize) -> Result<(f64, f64)> {
    let window = Window::bounding(bodies, WINDOW_PAD)?;
    let res = vec![resolution; window.dim()];
    let mask = rasterize(bodies, &window, &res)?;
    Ok((mask.measure(), mask.boundary_error()))
}

/// Radius of the ball of volume `λ^{-n}` in `R^d`.
fn unit_volume_radius(lambda: f64, n: usize, d: usize) -> f64 {
    (lambda.powi(-(n as i32)) / unit_ball_volume(d)).powf(1.0 / d as f64)
}

/// `L_d(∪_w S_w(π_T(tail) + sE_n))` with `E_n` the ball of volume `λ^{-n}`;
/// the bound is `s^d`.
pub fn union_measure_statistic(
    ifs: &AffineIfs,
    tail: &SymbolicSequence,
    n: usize,
    s: f64,
    resolution: usize,
) -> Result<UnionSample> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale s must be positive, got {s}")));
    }
    let d = ifs.dim();
    let x = ifs.project(tail)?;
    let e = Shape::ball(s * unit_volume_radius(ifs.lambda_value(), n, d))?;
    let bodies = ifs
        .level_maps(n, DEFAULT_WORD_BUDGET)?
        .iter()
        .map(|m| PlacedBody::new(m.apply(&x), e.transformed(&m.matrix)?))
        .collect::<Result<Vec<_>>>()?;
    let (measure, boundary_error) = raster_union(&bodies, resolution)?;
    check_union(
        UnionSample {
            measure,
            boundary_error,
            bound: s.powi(d as i32),
        },
        "shrinking-target",
    )
}

/// `Σ_w |det Σ_{k≥1} A_w^k| / λ^n`, the recurrence bound divided by `s^d`.
pub fn recurrence_bound_constant(ifs: &AffineIfs, n: usize) -> Result<f64> {
    let sum = ifs
        .level_maps(n, DEFAULT_WORD_BUDGET)?
        .iter()
        .map(|m| Ok(neumann_resolvent_of(&m.matrix)?.determinant().abs()))
        .sum::<Result<f64>>()?;
    Ok(sum / ifs.lambda_value().powi(n as i32))
}

/// Union over `w ∈ I^n` of `π_T(w^∞) + Σ_{k≥1} A_w^k (sE_n)`, with `E_n` the
/// ball of volume `λ^{-n}`; the bound is `s^d` times [`recurrence_bound_constant`].
pub fn recurrence_union_statistic(ifs: &AffineIfs, n: usize, s: f64, resolution: usize) -> Result<UnionSample> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("scale s must be positive, got {s}")));
    }
    ifs.check_contraction(ContractionMode::Strict)?;
    let d = ifs.dim();
    let e = Shape::ball(s * unit_volume_radius(ifs.lambda_value(), n, d))?;
    let maps = ifs.level_maps(n, DEFAULT_WORD_BUDGET)?;
    let mut det_sum = 0.0;
    let mut bodies = Vec::with_capacity(maps.len());
    for m in &maps {
        let resolvent = neumann_resolvent_of(&m.matrix)?;
        det_sum += resolvent.determinant().abs();
        bodies.push(PlacedBody::new(fixed_point(m)?, e.transformed(&resolvent)?)?);
    }
    let (measure, boundary_error) = raster_union(&bodies, resolution)?;
    check_union(
        UnionSample {
            measure,
            boundary_error,
            bound: s.powi(d as i32) * det_sum / ifs.lambda_value().powi(n as i32),
        },
        "recurrence",
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionReport {
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// `mean / s^d`.
    pub ratios: Vec<f64>,
    /// Per-sample bound divided by `s^d`.
    pub bound_constant: f64,
    /// Largest `measure - bound - boundary_error` seen; never positive.
    pub max_excess: f64,
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub seed: u64,
    pub samples: usize,
    pub resolution: usize,
    /// `statistics[sample][grid index]`.
    #[serde(skip)]
    pub statistics: Vec<Vec<UnionSample>>,
}

impl UnionReport {
    /// Long format `s,sample_index,statistic` with the union measure as statistic.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let rows = self
            .statistics
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(g, v)| (g, i, v.measure)));
        write_long_csv(out, &self.grid, rows)
    }
}

fn union_sweep(
    config: &McConfig,
    resolution: usize,
    bound_constant: f64,
    stat: impl Fn(&AffineIfs, f64) -> Result<UnionSample> + Sync,
) -> Result<UnionReport> {
    let (m, d) = config.validate()?;
    let statistics: Vec<Vec<UnionSample>> = config
        .samples(m, d)
        .par_iter()
        .map(|sample| {
            let ifs = sample.ifs(&config.matrices)?;
            config.grid.iter().map(|&s| stat(&ifs, s)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut ratios = Vec::new();
    for (g, &s) in config.grid.iter().enumerate() {
        let column: Vec<f64> = statistics.iter().map(|row| row[g].measure).collect();
        let (mean, se) = mean_and_stderr(&column);
        means.push(mean);
        stderrs.push(se);
        ratios.push(mean / s.powi(d as i32));
    }
    let max_excess = statistics
        .iter()
        .flatten()
        .map(|u| u.excess())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(UnionReport {
        grid: config.grid.clone(),
        means,
        stderrs,
        ratios,
        bound_constant,
        max_excess,
        n: config.n,
        m,
        d,
        r: config.radius,
        seed: config.seed,
        samples: config.samples,
        resolution,
        statistics,
    })
}

/// [`union_measure_statistic`] over the sampled parameters.
pub fn mc_union(config: &McConfig, tail: &SymbolicSequence, resolution: usize) -> Result<UnionReport> {
    union_sweep(config, resolution, 1.0, |ifs, s| {
        union_measure_statistic(ifs, tail, config.n, s, resolution)
    })
}

/// [`recurrence_union_statistic`] over the sampled parameters.
pub fn mc_recurrence(config: &McConfig, resolution: usize) -> Result<UnionReport> {
    let (m, d) = config.validate()?;
    let probe = sample_at(m, d, 0.0, config.seed, 0).ifs(&config.matrices)?;
    probe.check_contraction(ContractionMode::Strict)?;
    let constant = recurrence_bound_constant(&probe, config.n)?;
    union_sweep(config, resolution, constant, |ifs, s| {
        recurrence_union_statistic(ifs, config.n, s, resolution)
    })
}
