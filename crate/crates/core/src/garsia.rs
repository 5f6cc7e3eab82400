//! Garsia-number certification, sign-vector separation minima and the
//! finite-level Bernoulli convolution `μ_{λ,n}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::ifs::{word_count, DEFAULT_WORD_BUDGET};

/// Roots closer than this to the unit circle give an inconclusive verdict.
pub const UNIT_CIRCLE_MARGIN: f64 = 1e-9;
pub const MAX_DEGREE: usize = 12;
pub const MAX_SEPARATION_LEVEL: usize = 16;

const REAL_ROOT_TOLERANCE: f64 = 1e-10;
const INTEGER_TOLERANCE: f64 = 1e-6;
const NEWTON_ITERATIONS: usize = 60;

/// Integer polynomial, leading coefficient first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coefficients: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(coefficients: Vec<BigInt>) -> Result<Self> {
        let first_nonzero = coefficients.iter().position(|c| !c.is_zero());
        let coefficients = match first_nonzero {
            Some(k) => coefficients[k..].to_vec(),
            None => return Err(Error::Parse("zero polynomial".into())),
        };
        Ok(IntPolynomial { coefficients })
    }

    pub fn from_i64(coefficients: &[i64]) -> Result<Self> {
        Self::new(coefficients.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn is_monic(&self) -> bool {
        self.coefficients[0].is_one()
    }

    pub fn constant_term(&self) -> &BigInt {
        self.coefficients.last().expect("nonempty")
    }

    fn float_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    /// Exact division by a monic divisor; `None` if the remainder is nonzero.
    pub fn divide_exact(&self, divisor: &IntPolynomial) -> Option<IntPolynomial> {
        if !divisor.is_monic() || divisor.degree() > self.degree() {
            return None;
        }
        let mut rem = self.coefficients.clone();
        let dd = divisor.degree();
        let qlen = self.degree() - dd + 1;
        let mut quotient = Vec::with_capacity(qlen);
        for i in 0..qlen {
            let q = rem[i].clone();
            for (j, d) in divisor.coefficients.iter().enumerate() {
                rem[i + j] -= &q * d;
            }
            quotient.push(q);
        }
        if rem[qlen..].iter().all(Zero::is_zero) {
            IntPolynomial::new(quotient).ok()
        } else {
            None
        }
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let deg = self.degree();
        let mut first = true;
        for (i, c) in self.coefficients.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let power = deg - i;
            let sign = if c.is_negative() { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let coef = if mag.is_one() && power > 0 { String::new() } else { mag.to_string() };
            let var = match power {
                0 => String::new(),
                1 => "x".to_string(),
                p => format!("x^{p}"),
            };
            write!(f, "{sign}{coef}{var}")?;
            first = false;
        }
        Ok(())
    }
}

/// Accepts `x^6+x^5-x-2`, `3*x^2 - 2` or a JSON coefficient list `[1,1,0,0,0,-1,-2]`.
impl FromStr for IntPolynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            let coeffs: Vec<BigInt> = serde_json::from_str::<Vec<serde_json::Number>>(s)
                .map_err(|e| Error::Parse(format!("bad coefficient list: {e}")))?
                .iter()
                .map(|n| {
                    n.to_string()
                        .parse::<BigInt>()
                        .map_err(|_| Error::Parse(format!("coefficient {n} is not an integer")))
                })
                .collect::<Result<_>>()?;
            return IntPolynomial::new(coeffs);
        }
        parse_expression(s)
    }
}

fn parse_expression(s: &str) -> Result<IntPolynomial> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut terms: Vec<(BigInt, usize)> = Vec::new();
    let mut start = 0;
    let bytes = compact.as_bytes();
    for i in 1..=bytes.len() {
        let boundary = i == bytes.len() || ((bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'^');
        if boundary {
            terms.push(parse_term(&compact[start..i])?);
            start = i;
        }
    }
    let degree = terms.iter().map(|t| t.1).max().unwrap_or(0);
    let mut coefficients = vec![BigInt::zero(); degree + 1];
    for (c, p) in terms {
        coefficients[degree - p] += c;
    }
    IntPolynomial::new(coefficients)
}

fn parse_term(term: &str) -> Result<(BigInt, usize)> {
    let bad = || Error::Parse(format!("cannot parse term {term:?}"));
    let (negative, body) = match term.as_bytes().first() {
        Some(b'-') => (true, &term[1..]),
        Some(b'+') => (false, &term[1..]),
        _ => (false, term),
    };
    if body.is_empty() {
        return Err(bad());
    }
    let (coef, power) = match body.find('x') {
        None => (body.parse::<BigInt>().map_err(|_| bad())?, 0),
        Some(pos) => {
            let coef_text = body[..pos].trim_end_matches('*');
            let coef = if coef_text.is_empty() {
                BigInt::one()
            } else {
                coef_text.parse::<BigInt>().map_err(|_| bad())?
            };
            let rest = &body[pos + 1..];
            let power = if rest.is_empty() {
                1
            } else {
                rest.strip_prefix('^')
                    .ok_or_else(bad)?
                    .parse::<usize>()
                    .map_err(|_| bad())?
            };
            (coef, power)
        }
    };
    Ok((if negative { -coef } else { coef }, power))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Irreducibility {
    Certified,
    NotCertified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GarsiaVerdict {
    Garsia,
    NotGarsia,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GarsiaReport {
    pub polynomial: String,
    #[serde(serialize_with = "serialize_bigint")]
    pub constant_term: BigInt,
    pub roots: Vec<[f64; 2]>,
    pub real_root_in_1_2: Option<f64>,
    /// Moduli of every root except `real_root_in_1_2`, descending.
    pub conjugate_moduli: Vec<f64>,
    pub min_conjugate_modulus: Option<f64>,
    pub irreducibility: Irreducibility,
    /// A nontrivial monic integer factor, when one was found.
    #[serde(serialize_with = "serialize_factor")]
    pub factor: Option<IntPolynomial>,
    pub verdict: GarsiaVerdict,
    pub reason: String,
}

impl GarsiaReport {
    /// `1/β` for a certified Garsia number `β`.
    pub fn lambda(&self) -> Option<f64> {
        match (self.verdict, self.real_root_in_1_2) {
            (GarsiaVerdict::Garsia, Some(beta)) => Some(1.0 / beta),
            _ => None,
        }
    }
}

fn serialize_bigint<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v.to_i64() {
        Some(i) => s.serialize_i64(i),
        None => s.serialize_str(&v.to_string()),
    }
}

fn serialize_factor<S: Serializer>(v: &Option<IntPolynomial>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(p) => s.serialize_some(&p.to_string()),
        None => s.serialize_none(),
    }
}

fn horner(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of a monic polynomial, via the balanced companion matrix
/// followed by Newton polishing on the original coefficients.
pub fn polynomial_roots(p: &IntPolynomial) -> Result<Vec<Complex<f64>>> {
    let k = p.degree();
    if !(1..=MAX_DEGREE).contains(&k) {
        return Err(Error::UnsupportedDegree(k));
    }
    if !p.is_monic() {
        return Err(Error::Domain(format!("polynomial {p} is not monic")));
    }
    let coeffs = p.float_coefficients();
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Numeric("coefficients exceed floating-point range".into()));
    }
    let mut companion = DMatrix::<f64>::zeros(k, k);
    for j in 0..k {
        companion[(0, j)] = -coeffs[j + 1];
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    balance_parlett_reinsch(&mut companion);
    let schur = Schur::try_new(companion, f64::EPSILON, 100_000)
        .ok_or_else(|| Error::Numeric("companion eigenvalue iteration did not converge".into()))?;
    let mut roots: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    for z in roots.iter_mut() {
        *z = newton_polish(&coeffs, *z);
        if z.im.abs() <= REAL_ROOT_TOLERANCE * z.norm().max(1.0) {
            z.im = 0.0;
        }
    }
    roots.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)));
    Ok(roots)
}

fn newton_polish(coeffs: &[f64], mut z: Complex<f64>) -> Complex<f64> {
    let (mut pz, _) = horner(coeffs, z);
    for _ in 0..NEWTON_ITERATIONS {
        let (_, dp) = horner(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let next = z - pz / dp;
        let (pn, _) = horner(coeffs, next);
        if pn.norm() >= pz.norm() {
            break;
        }
        let step = (next - z).norm();
        z = next;
        pz = pn;
        if step <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    z
}

/// Searches for a monic integer factor among the products `Π_{i∈S} (x - r_i)`
/// over proper nonempty subsets `S` of the numeric roots.
fn find_factor(p: &IntPolynomial, roots: &[Complex<f64>]) -> Option<IntPolynomial> {
    let k = roots.len();
    if k < 2 {
        return None;
    }
    // A subset and its complement give the same factorization, so only
    // subsets of size ≤ k/2 are needed.
    for mask in 1u32..(1u32 << k) - 1 {
        let size = mask.count_ones() as usize;
        if 2 * size > k {
            continue;
        }
        let mut prod = vec![Complex::new(1.0, 0.0)];
        for (i, r) in roots.iter().enumerate() {
            if mask & (1 << i) != 0 {
                let mut next = vec![Complex::new(0.0, 0.0); prod.len() + 1];
                for (j, c) in prod.iter().enumerate() {
                    next[j] += c;
                    next[j + 1] -= c * r;
                }
                prod = next;
            }
        }
        let mut coeffs = Vec::with_capacity(prod.len());
        let mut integral = true;
        for c in &prod {
            let rounded = c.re.round();
            let scale = c.re.abs().max(1.0);
            if c.im.abs() > INTEGER_TOLERANCE * scale
                || (c.re - rounded).abs() > INTEGER_TOLERANCE * scale
                || rounded.abs() > 9.0e15
            {
                integral = false;
                break;
            }
            coeffs.push(BigInt::from(rounded as i64));
        }
        if !integral {
            continue;
        }
        let candidate = IntPolynomial::new(coeffs).ok()?;
        if p.divide_exact(&candidate).is_some() {
            return Some(candidate);
        }
    }
    None
}

/// Decides whether the roots of `p` include a Garsia number.
pub fn is_garsia(p: &IntPolynomial) -> Result<GarsiaReport> {
    let degree = p.degree();
    if !(1..=MAX_DEGREE).contains(&degree) {
        return Err(Error::UnsupportedDegree(degree));
    }
    if !p.is_monic() {
        return Err(Error::Domain(format!("polynomial {p} is not monic")));
    }
    let constant_term = p.constant_term().clone();
    let numeric = polynomial_roots(p);
    let roots = match &numeric {
        Ok(r) => r.clone(),
        Err(_) => Vec::new(),
    };
    let factor = if numeric.is_ok() { find_factor(p, &roots) } else { None };
    let irreducibility = if numeric.is_ok() && factor.is_none() {
        Irreducibility::Certified
    } else {
        Irreducibility::NotCertified
    };

    let in_1_2: Vec<usize> = roots
        .iter()
        .enumerate()
        .filter(|(_, z)| z.im == 0.0 && z.re > 1.0 && z.re < 2.0)
        .map(|(i, _)| i)
        .collect();
    let real_root_in_1_2 = (in_1_2.len() == 1).then(|| roots[in_1_2[0]].re);
    let conjugate_moduli: Vec<f64> = roots
        .iter()
        .enumerate()
        .filter(|(i, _)| real_root_in_1_2.is_none() || *i != in_1_2[0])
        .map(|(_, z)| z.norm())
        .collect();
    let min_conjugate_modulus = conjugate_moduli.iter().copied().reduce(f64::min);
    let min_modulus = roots.iter().map(|z| z.norm()).reduce(f64::min);

    let (verdict, reason) = if constant_term.abs() != BigInt::from(2) {
        (GarsiaVerdict::NotGarsia, format!("constant term {constant_term} is not ±2"))
    } else if let Some(f) = &factor {
        (GarsiaVerdict::NotGarsia, format!("reducible: divisible by {f}"))
    } else if let Err(e) = &numeric {
        (GarsiaVerdict::Inconclusive, format!("root computation failed: {e}"))
    } else if min_modulus.is_some_and(|m| m <= 1.0 - UNIT_CIRCLE_MARGIN) {
        (GarsiaVerdict::NotGarsia, "a root lies inside the unit disk".to_string())
    } else if min_modulus.is_some_and(|m| m <= 1.0 + UNIT_CIRCLE_MARGIN) {
        (GarsiaVerdict::Inconclusive, "a root lies within the margin of the unit circle".to_string())
    } else if in_1_2.is_empty() {
        (GarsiaVerdict::NotGarsia, "no real root in (1, 2)".to_string())
    } else if in_1_2.len() > 1 {
        (
            GarsiaVerdict::Inconclusive,
            format!("{} real roots in (1, 2); the candidate is ambiguous", in_1_2.len()),
        )
    } else {
        (GarsiaVerdict::Garsia, "norm ±2, irreducible, all conjugates outside the unit disk".to_string())
    };

    Ok(GarsiaReport {
        polynomial: p.to_string(),
        constant_term,
        roots: roots.iter().map(|z| [z.re, z.im]).collect(),
        real_root_in_1_2,
        conjugate_moduli,
        min_conjugate_modulus,
        irreducibility,
        factor,
        verdict,
        reason,
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.5 && lambda < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("lambda must lie in (1/2, 1), got {lambda}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationDetail {
    pub lambda: f64,
    pub n: usize,
    pub value: f64,
    /// A sign-canonical vector `c` attaining the minimum.
    pub minimizer: Vec<i8>,
    /// Number of sign-canonical vectors evaluated, `(3^n - 1)/2`.
    pub evaluated: u64,
}

/// Digits of `index` in base 3 mapped to `{-1, 0, 1}`, least significant first.
fn ternary_signs(mut index: u64, len: usize) -> Vec<i8> {
    (0..len)
        .map(|_| {
            let d = (index % 3) as i8 - 1;
            index /= 3;
            d
        })
        .collect()
}

/// `Σ_j c_j λ^{offset+j}` for every `c ∈ {-1,0,1}^len`, indexed by base-3 code.
fn signed_sums(lambda: f64, offset: usize, len: usize) -> Vec<f64> {
    let mut sums = vec![0.0];
    for j in 0..len {
        let p = lambda.powi((offset + j) as i32);
        let mut next = Vec::with_capacity(sums.len() * 3);
        for d in [-1.0, 0.0, 1.0] {
            for s in &sums {
                next.push(s + d * p);
            }
        }
        sums = next;
    }
    sums
}

/// `min |Σ_{i=1}^n c_i λ^{i-1}|` over nonzero `c ∈ {-1,0,1}^n`, by exhaustive
/// enumeration of the vectors whose first nonzero entry is `+1`.
pub fn separation_min_detail(lambda: f64, n: usize) -> Result<SeparationDetail> {
    check_lambda(lambda)?;
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    if n > MAX_SEPARATION_LEVEL {
        let requested = (word_count(3, n) - 1) / 2;
        let budget = (word_count(3, MAX_SEPARATION_LEVEL) - 1) / 2;
        return Err(Error::budget("sign vectors", requested, budget));
    }

    // Vectors are grouped by the position k of their leading +1; the free
    // tail after k is split into a middle block and a low block so that the
    // inner loop runs over a precomputed table.
    let mut tasks: Vec<(usize, usize, usize, u64)> = Vec::new();
    let mut tables: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for k in 0..n {
        let free = n - 1 - k;
        let mid_len = free / 2;
        let low_len = free - mid_len;
        let mid = signed_sums(lambda, k + 1, mid_len);
        let low = signed_sums(lambda, k + 1 + mid_len, low_len);
        for mid_idx in 0..mid.len() as u64 {
            tasks.push((k, mid_len, low_len, mid_idx));
        }
        tables.push((mid, low));
    }

    let best = tasks
        .par_iter()
        .map(|&(k, _, _, mid_idx)| {
            let (mid, low) = &tables[k];
            let head = lambda.powi(k as i32) + mid[mid_idx as usize];
            let mut best = (f64::INFINITY, 0u64);
            for (low_idx, l) in low.iter().enumerate() {
                let v = (head + l).abs();
                if v < best.0 {
                    best = (v, low_idx as u64);
                }
            }
            (best.0, k, mid_idx, best.1, low.len() as u64)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, 0, 0, 0),
            |a, b| {
                // Ties go to the earliest (k, mid, low) so the witness is deterministic.
                let ka = (a.1, a.2, a.3);
                let kb = (b.1, b.2, b.3);
                if b.0 < a.0 || (b.0 == a.0 && kb < ka) { b } else { a }
            },
        );

    let evaluated: u64 = tasks
        .iter()
        .map(|&(k, ..)| tables[k].1.len() as u64)
        .sum();
    let (value, k, mid_idx, low_idx, _) = best;
    let free = n - 1 - k;
    let mid_len = free / 2;
    let mut minimizer = vec![0i8; k];
    minimizer.push(1);
    minimizer.extend(ternary_signs(mid_idx, mid_len));
    minimizer.extend(ternary_signs(low_idx, free - mid_len));
    Ok(SeparationDetail {
        lambda,
        n,
        value,
        minimizer,
        evaluated,
    })
}

pub fn separation_min(lambda: f64, n: usize) -> Result<f64> {
    Ok(separation_min_detail(lambda, n)?.value)
}

/// Minimal gap between distinct level-`n` periodic points `π_λ(a^∞)`.
pub fn periodic_separation(lambda: f64, n: usize) -> Result<f64> {
    Ok(separation_min(lambda, n)? / (1.0 - lambda.powi(n as i32)))
}

#[derive(Clone, Debug, Serialize)]
pub struct SeparationProfile {
    pub lambda: f64,
    pub levels: Vec<usize>,
    pub separation: Vec<f64>,
    /// `separation_min(λ, n) · 2^n`.
    pub scaled: Vec<f64>,
    /// Smallest scaled value over the range; an empirical infimum, not a proven constant.
    pub empirical_inf: f64,
    pub max_over_min: f64,
}

pub fn separation_profile(lambda: f64, levels: impl IntoIterator<Item = usize>) -> Result<SeparationProfile> {
    let levels: Vec<usize> = levels.into_iter().collect();
    if levels.is_empty() {
        return Err(Error::Precondition("empty level range".into()));
    }
    let separation = levels
        .iter()
        .map(|&n| separation_min(lambda, n))
        .collect::<Result<Vec<_>>>()?;
    let scaled: Vec<f64> = levels
        .iter()
        .zip(&separation)
        .map(|(&n, s)| s * 2f64.powi(n as i32))
        .collect();
    let min = scaled.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scaled.iter().copied().fold(0.0, f64::max);
    Ok(SeparationProfile {
        lambda,
        levels,
        separation,
        scaled,
        empirical_inf: min,
        max_over_min: max / min,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// `μ_{λ,n} = 2^{-n} Σ_a δ_{π_λ(a^∞)}` over `a ∈ {0,1}^n`, atoms in lexicographic order of `a`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomMeasure {
    pub level: usize,
    pub lambda: f64,
    pub atoms: Vec<Atom>,
}

impl AtomMeasure {
    pub fn support_end(&self) -> f64 {
        1.0 / (1.0 - self.lambda)
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    pub fn min_gap(&self) -> Option<f64> {
        let mut locs: Vec<f64> = self.atoms.iter().map(|a| a.location).collect();
        locs.sort_by(f64::total_cmp);
        locs.windows(2).map(|w| w[1] - w[0]).reduce(f64::min)
    }
}

pub fn bernoulli_atoms(lambda: f64, n: usize) -> Result<AtomMeasure> {
    check_lambda(lambda)?;
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let count = word_count(2, n);
    if count > DEFAULT_WORD_BUDGET {
        return Err(Error::budget("atoms", count, DEFAULT_WORD_BUDGET));
    }
    let denom = 1.0 - lambda.powi(n as i32);
    let weight = 0.5f64.powi(n as i32);
    let atoms = (0..count as u64)
        .map(|code| {
            // bit n-1-i of the code is a_{i+1}, so code order is lexicographic
            let mut sum = 0.0;
            let mut p = 1.0;
            for i in 0..n {
                if (code >> (n - 1 - i)) & 1 == 1 {
                    sum += p;
                }
                p *= lambda;
            }
            Atom {
                location: sum / denom,
                weight,
            }
        })
        .collect();
    Ok(AtomMeasure {
        level: n,
        lambda,
        atoms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn total_mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.bin_width
    }
}

/// Atom mass per unit length on `bins` equal bins of `[0, 1/(1-λ)]`.
pub fn empirical_density(atoms: &AtomMeasure, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::Precondition("bins must be at least 1".into()));
    }
    let hi = atoms.support_end();
    let width = hi / bins as f64;
    let mut mass = vec![0.0; bins];
    for a in &atoms.atoms {
        let idx = ((a.location / width).floor() as isize).clamp(0, bins as isize - 1) as usize;
        mass[idx] += a.weight;
    }
    Ok(Histogram {
        lo: 0.0,
        hi,
        bin_width: width,
        densities: mass.into_iter().map(|m| m / width).collect(),
    })
}
