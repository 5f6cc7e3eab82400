//! Closed-form Hausdorff dimension lower bound for diagonal self-affine
//! shrinking targets, and the Hausdorff-measure dichotomy on the line.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::HFamily;

const DEDUP_TOLERANCE: f64 = 1e-14;
const RANGE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionInput {
    /// Diagonal entries `λ_1 … λ_d`, each in `(0, 1/2)`.
    pub lambdas: Vec<f64>,
    /// `λ(A) > 1`.
    pub lambda_a: f64,
    /// Shrinking exponent, `s > 1`.
    pub s: f64,
}

impl DimensionInput {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::Domain("need at least one diagonal entry".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(**l > 0.0 && **l < 0.5)) {
            return Err(Error::Domain(format!("diagonal entries must lie in (0, 1/2), got {l}")));
        }
        if !(self.lambda_a > 1.0 && self.lambda_a.is_finite()) {
            return Err(Error::Domain(format!("λ(A) must exceed 1, got {}", self.lambda_a)));
        }
        if !(self.s > 1.0 && self.s.is_finite()) {
            return Err(Error::Domain(format!("the bound needs s > 1, got {}", self.s)));
        }
        Ok(())
    }

    /// `a_i = log λ_i / log λ(A)^{-1} + 1/d`.
    pub fn exponents(&self) -> Vec<f64> {
        let d = self.lambdas.len() as f64;
        let denom = (1.0 / self.lambda_a).ln();
        self.lambdas.iter().map(|l| l.ln() / denom + 1.0 / d).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub p: f64,
    pub value: f64,
}

/// The minimum over the candidate set together with its minimizer and the
/// index partition there (indices are 0-based).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionBound {
    pub value: f64,
    pub p_star: f64,
    #[serde(rename = "K1")]
    pub k1: Vec<usize>,
    #[serde(rename = "K2")]
    pub k2: Vec<usize>,
    #[serde(rename = "K3")]
    pub k3: Vec<usize>,
    pub exponents: Vec<f64>,
    pub candidates: Vec<Candidate>,
}

struct Partition {
    k1: Vec<usize>,
    k2: Vec<usize>,
    k3: Vec<usize>,
}

fn partition(a: &[f64], shift: f64, p: f64) -> Result<Partition> {
    let k1: Vec<usize> = (0..a.len()).filter(|&i| a[i] >= p).collect();
    let k2: Vec<usize> = (0..a.len()).filter(|&i| a[i] + shift <= p).collect();
    let k3: Vec<usize> = (0..a.len()).filter(|&i| !k1.contains(&i) && !k2.contains(&i)).collect();
    if k1.iter().any(|i| k2.contains(i)) || k1.len() + k2.len() + k3.len() != a.len() {
        return Err(Error::Consistency(format!("K sets at p = {p} do not partition the axes")));
    }
    Ok(Partition { k1, k2, k3 })
}

/// `#K1 + #K2 (1 - (s-1)/(dp)) + #K3/(dp) + Σ_{K3} log λ_i / (p log λ(A)^{-1})`.
fn evaluate(input: &DimensionInput, part: &Partition, p: f64) -> f64 {
    let d = input.lambdas.len() as f64;
    let denom = (1.0 / input.lambda_a).ln();
    let mut terms: Vec<f64> = part.k3.iter().map(|&i| input.lambdas[i].ln() / (p * denom)).collect();
    terms.sort_by(f64::total_cmp);
    let tail: f64 = terms.iter().sum();
    part.k1.len() as f64
        + part.k2.len() as f64 * (1.0 - (input.s - 1.0) / (d * p))
        + part.k3.len() as f64 / (d * p)
        + tail
}

pub fn dim_lower_bound(input: &DimensionInput) -> Result<DimensionBound> {
    input.validate()?;
    let d = input.lambdas.len() as f64;
    let a = input.exponents();
    let shift = (input.s - 1.0) / d;
    let mut ps: Vec<f64> = a.iter().flat_map(|&ai| [ai, ai + shift]).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup_by(|later, kept| (*later - *kept).abs() <= DEDUP_TOLERANCE);

    let mut candidates = Vec::with_capacity(ps.len());
    let mut best: Option<(f64, f64, Partition)> = None;
    for &p in &ps {
        let part = partition(&a, shift, p)?;
        let value = evaluate(input, &part, p);
        if !(value >= -RANGE_SLACK && value <= d + RANGE_SLACK) {
            return Err(Error::Consistency(format!("candidate value {value} at p = {p} lies outside [0, {d}]")));
        }
        candidates.push(Candidate { p, value });
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, p, part));
        }
    }
    let (value, p_star, part) = best.expect("candidate set is nonempty");
    Ok(DimensionBound {
        value,
        p_star,
        k1: part.k1,
        k2: part.k2,
        k3: part.k3,
        exponents: a,
        candidates,
    })
}

/// `d - (s-1)/(a + (s-1)/d)` for equal diagonal entries `λ`.
pub fn isotropic_closed_form(lambda: f64, d: usize, lambda_a: f64, s: f64) -> f64 {
    let df = d as f64;
    let a = lambda.ln() / (1.0 / lambda_a).ln() + 1.0 / df;
    df - (s - 1.0) / (a + (s - 1.0) / df)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DichotomyVerdict {
    ZeroMeasure,
    FullMeasure,
    Undecided,
}

impl fmt::Display for DichotomyVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DichotomyVerdict::ZeroMeasure => "ZeroMeasure",
            DichotomyVerdict::FullMeasure => "FullMeasure",
            DichotomyVerdict::Undecided => "Undecided",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub s: f64,
    pub h: String,
    pub verdict: DichotomyVerdict,
    /// Whether `Σ 2^{n(1-s)} h(n)^s` diverges, when decided.
    pub series_diverges: Option<bool>,
    pub note: Option<String>,
}

/// Classifies `Σ_n 2^{n(1-s)} h(n)^s`: divergence means the recurrence set
/// has full `H^s` measure in every ball, convergence means zero.
pub fn garsia_hausdorff_criterion(s: f64, h: &HFamily) -> Result<DichotomyReport> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("s must be positive, got {s}")));
    }
    h.validate()?;
    if h.is_bounded() == Some(false) {
        return Err(Error::Domain(format!("h must be bounded, got {h}")));
    }
    let report = |verdict, series_diverges, note: Option<&str>| DichotomyReport {
        s,
        h: h.to_string(),
        verdict,
        series_diverges,
        note: note.map(str::to_string),
    };
    if s > 1.0 {
        return Ok(report(
            DichotomyVerdict::Undecided,
            None,
            Some("s > 1: every subset of the line has zero s-dimensional Hausdorff measure"),
        ));
    }
    let diverges = match h {
        HFamily::Custom { .. } => {
            return Ok(report(
                DichotomyVerdict::Undecided,
                None,
                Some("a tabulated h says nothing about the tail of the series"),
            ))
        }
        HFamily::Constant { c } | HFamily::PowerLaw { c, .. } if *c == 0.0 => false,
        // 2^{n(1-s)} grows geometrically and beats any polynomial decay
        _ if s < 1.0 => true,
        HFamily::Constant { .. } => true,
        HFamily::PowerLaw { alpha, .. } => *alpha <= 1.0,
    };
    let verdict = if diverges {
        DichotomyVerdict::FullMeasure
    } else {
        DichotomyVerdict::ZeroMeasure
    };
    Ok(report(verdict, Some(diverges), None))
}
