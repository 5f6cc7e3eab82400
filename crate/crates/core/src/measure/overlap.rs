use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ifs::{word_count, AffineIfs, Word, WordSpace, DEFAULT_WORD_BUDGET};
use crate::measure::target::{TargetMode, TargetSpec};

/// Coefficient tolerance for calling two composed maps equal.
pub const OVERLAP_TOLERANCE: f64 = 1e-9;
const MAX_REPORTED_PAIRS: usize = 1 << 20;

/// `γ = 1 - |det A_w| / λ(A)^{|w|}`.
pub fn exact_overlap_gamma(ifs: &AffineIfs, w: &Word) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::Precondition("word must be nonempty".into()));
    }
    w.check_alphabet(ifs.alphabet_size())?;
    let det: f64 = w
        .symbols()
        .iter()
        .map(|&s| ifs.maps()[s].determinant().abs())
        .product();
    Ok(1.0 - det / ifs.lambda_value().powi(w.len() as i32))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapPair {
    pub u: Word,
    pub v: Word,
    /// Largest absolute difference between the coefficients of `S_u` and `S_v`.
    pub max_coefficient_gap: f64,
    /// Whether `S_u = S_v` holds exactly for the binary values of the input coefficients.
    pub exact_confirmed: bool,
}

type RationalMap = (Vec<Vec<BigRational>>, Vec<BigRational>);

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}

fn rational_generators(ifs: &AffineIfs) -> Vec<RationalMap> {
    let d = ifs.dim();
    ifs.maps()
        .iter()
        .map(|m| {
            let a = (0..d)
                .map(|r| (0..d).map(|c| rational(m.matrix[(r, c)])).collect())
                .collect();
            let t = (0..d).map(|r| rational(m.translation[r])).collect();
            (a, t)
        })
        .collect()
}

fn compose_rational(gens: &[RationalMap], w: &Word) -> RationalMap {
    let (mut a, mut t) = gens[w.symbols()[0]].clone();
    let d = t.len();
    for &s in &w.symbols()[1..] {
        let (b, c) = &gens[s];
        let mut na = vec![vec![BigRational::zero(); d]; d];
        let mut nt = t.clone();
        for r in 0..d {
            for k in 0..d {
                nt[r] += &a[r][k] * &c[k];
                for col in 0..d {
                    na[r][col] += &a[r][k] * &b[k][col];
                }
            }
        }
        a = na;
        t = nt;
    }
    (a, t)
}

/// Pairs of distinct equal-length words `u < v` with `|u| ≤ max_len` whose
/// composed maps agree to within [`OVERLAP_TOLERANCE`]. Each candidate is
/// rechecked in exact rational arithmetic.
pub fn detect_exact_overlaps(ifs: &AffineIfs, max_len: usize) -> Result<Vec<OverlapPair>> {
    if max_len == 0 {
        return Err(Error::Precondition("max_len must be at least 1".into()));
    }
    let m = ifs.alphabet_size();
    let total: u128 = (1..=max_len).map(|k| word_count(m, k)).fold(0u128, |a, b| a.saturating_add(b));
    if total > DEFAULT_WORD_BUDGET {
        return Err(Error::budget("words", total, DEFAULT_WORD_BUDGET));
    }
    let gens = rational_generators(ifs);
    let mut pairs = Vec::new();
    for len in 1..=max_len {
        let space = WordSpace::with_budget(m, len, DEFAULT_WORD_BUDGET)?;
        let maps = ifs.level_maps(len, DEFAULT_WORD_BUDGET)?;
        let mut order: Vec<usize> = (0..maps.len()).collect();
        order.sort_by(|&i, &j| maps[i].translation[0].total_cmp(&maps[j].translation[0]).then(i.cmp(&j)));
        for (pos, &i) in order.iter().enumerate() {
            let key = maps[i].translation[0];
            for &j in &order[pos + 1..] {
                if maps[j].translation[0] - key > OVERLAP_TOLERANCE {
                    break;
                }
                let gap = maps[i].max_abs_diff(&maps[j]);
                if gap > OVERLAP_TOLERANCE {
                    continue;
                }
                if pairs.len() >= MAX_REPORTED_PAIRS {
                    return Err(Error::budget("overlap pairs", MAX_REPORTED_PAIRS as u128 + 1, MAX_REPORTED_PAIRS as u128));
                }
                let (lo, hi) = (i.min(j), i.max(j));
                let u = space.word_at(lo as u64);
                let v = space.word_at(hi as u64);
                let exact_confirmed = compose_rational(&gens, &u) == compose_rational(&gens, &v);
                pairs.push(OverlapPair {
                    u,
                    v,
                    max_coefficient_gap: gap,
                    exact_confirmed,
                });
            }
        }
    }
    pairs.sort_by(|a, b| (a.u.len(), &a.u, &a.v).cmp(&(b.u.len(), &b.u, &b.v)));
    Ok(pairs)
}

/// `min_l #I_l λ_l / (Π_l #I_l λ_l)^{1/d}` for a product of `d` homogeneous
/// one-dimensional factors; values below 1 certify the zero-measure regime.
pub fn product_ifs_criterion(factor_sizes: &[usize], factor_ratios: &[f64]) -> Result<f64> {
    let d = factor_sizes.len();
    if d < 2 || factor_ratios.len() != d {
        return Err(Error::Precondition(format!(
            "need matching lists of length at least 2, got {} sizes and {} ratios",
            d,
            factor_ratios.len()
        )));
    }
    if factor_sizes.contains(&0) {
        return Err(Error::Precondition("every factor needs at least one map".into()));
    }
    if let Some(r) = factor_ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::Domain(format!("contraction ratio {r} is not in (0, 1)")));
    }
    let products: Vec<f64> = factor_sizes
        .iter()
        .zip(factor_ratios)
        .map(|(&n, &r)| n as f64 * r)
        .collect();
    let min = products.iter().copied().fold(f64::INFINITY, f64::min);
    let geo = products.iter().map(|p| p.ln()).sum::<f64>() / d as f64;
    Ok(min / geo.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClassificationHint {
    ConvergesAnalytically,
    DivergesAnalytically,
    /// Only partial sums are available; they certify nothing.
    Numeric,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapSeries {
    pub gamma: f64,
    pub k: usize,
    /// Partial sums of `Σ_{n≥1} γ^{⌊n/k⌋}`.
    pub partial_sums: Vec<f64>,
    /// `k / (1 - γ)`, which bounds the whole series.
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorelCantelliReport {
    /// Upper bounds on the measure of the level-`n` hit set, `n = 1..=N`.
    pub level_bounds: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub hint: ClassificationHint,
    pub overlap: Option<OverlapSeries>,
}

/// Partial sums of the first Borel–Cantelli series for the stage sets, with
/// an analytic verdict only for closed-form `h`. When an exact overlap of
/// length `k` with ratio `γ` is supplied, the decay series is reported too.
pub fn borel_cantelli_report(
    ifs: &AffineIfs,
    spec: &TargetSpec,
    big_n: usize,
    overlap: Option<(f64, usize)>,
) -> Result<BorelCantelliReport> {
    if big_n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    let lambda = ifs.lambda_value();
    let d = ifs.dim();
    let mut level_bounds = Vec::with_capacity(big_n);
    for n in 1..=big_n {
        let e = spec.neighbourhood(ifs, n)?;
        let vol = e.volume(d);
        let bound = if spec.is_recurrence() {
            // Σ_w |det (A_w^{-1} - I)^{-1}| · vol(E_n); the sum over w̄ equals the sum over w
            let maps = ifs.level_maps(n, DEFAULT_WORD_BUDGET)?;
            let mut det_sum = 0.0;
            for m in &maps {
                det_sum += crate::ifs::neumann_resolvent_of(&m.matrix)?.determinant().abs();
            }
            det_sum * vol
        } else {
            lambda.powi(n as i32) * vol
        };
        level_bounds.push(bound);
    }
    let partial_sums = level_bounds
        .iter()
        .scan(0.0, |acc, b| {
            *acc += b;
            Some(*acc)
        })
        .collect();
    let hint = match &spec.mode {
        TargetMode::ShrinkingBall(h) | TargetMode::Recurrence(h) => match h.series_converges() {
            Some(true) => ClassificationHint::ConvergesAnalytically,
            Some(false) => ClassificationHint::DivergesAnalytically,
            None => ClassificationHint::Numeric,
        },
        _ => ClassificationHint::Numeric,
    };
    let overlap = overlap
        .map(|(gamma, k)| {
            if !(gamma > 0.0 && gamma < 1.0) || k == 0 {
                return Err(Error::Domain(format!("need γ in (0, 1) and k ≥ 1, got γ = {gamma}, k = {k}")));
            }
            let partial_sums = (1..=big_n)
                .scan(0.0, |acc, n| {
                    *acc += gamma.powi((n / k) as i32);
                    Some(*acc)
                })
                .collect();
            Ok(OverlapSeries {
                gamma,
                k,
                partial_sums,
                tail_bound: k as f64 / (1.0 - gamma),
            })
        })
        .transpose()?;
    Ok(BorelCantelliReport {
        level_bounds,
        partial_sums,
        hint,
        overlap,
    })
}
