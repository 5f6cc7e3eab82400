//! Word algebra and affine iterated function systems.
//!
//! An [`AffineIfs`] is a finite family of contractions `S_i(x) = A_i x + t_i`
//! on `R^d`. Words index compositions `S_w = S_{w_1} ∘ … ∘ S_{w_n}`, and the
//! inverse branches `T_i = S_i^{-1}` satisfy `S_w^{-1} = T_{reverse(w)}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Default cap on the number of words a single call may enumerate.
pub const DEFAULT_WORD_BUDGET: u128 = 1 << 24;

const DET_TOLERANCE: f64 = 1e-14;
const NORM_TOLERANCE: f64 = 1e-10;
const NORM_MAX_ITERATIONS: usize = 10_000;
const MATRIX_EQ_TOLERANCE: f64 = 1e-12;

/// A finite string over the alphabet `{0, …, m-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut symbols = self.0.clone();
        symbols.extend_from_slice(&other.0);
        Word(symbols)
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= alphabet) {
            Some(&symbol) => Err(Error::SymbolOutOfRange { symbol, alphabet }),
            None => Ok(()),
        }
    }
}

impl From<Vec<usize>> for Word {
    fn from(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }
}

impl From<&[usize]> for Word {
    fn from(symbols: &[usize]) -> Self {
        Word(symbols.to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// `|u ∧ v|`: the 1-based position of the first differing symbol.
pub fn common_prefix_length(u: &Word, v: &Word) -> Result<usize> {
    if u.len() != v.len() {
        return Err(Error::Precondition(format!(
            "words must have equal length, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    u.symbols()
        .iter()
        .zip(v.symbols())
        .position(|(a, b)| a != b)
        .map(|k| k + 1)
        .ok_or(Error::EqualWords)
}

/// An eventually periodic infinite string `preperiod · period · period · …`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicSequence {
    preperiod: Word,
    period: Word,
}

impl SymbolicSequence {
    pub fn new(preperiod: Word, period: Word) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::Precondition("period must be nonempty".into()));
        }
        Ok(SymbolicSequence { preperiod, period })
    }

    /// `w^∞`.
    pub fn periodic(period: Word) -> Result<Self> {
        Self::new(Word::empty(), period)
    }

    /// `i^∞` for a single symbol.
    pub fn constant(symbol: usize) -> Self {
        SymbolicSequence {
            preperiod: Word::empty(),
            period: Word(vec![symbol]),
        }
    }

    pub fn preperiod(&self) -> &Word {
        &self.preperiod
    }

    pub fn period(&self) -> &Word {
        &self.period
    }

    /// `w · self`, still eventually periodic.
    pub fn prepend(&self, word: &Word) -> SymbolicSequence {
        SymbolicSequence {
            preperiod: word.concat(&self.preperiod),
            period: self.period.clone(),
        }
    }

    /// Symbol at 0-based position `k`.
    pub fn symbol_at(&self, k: usize) -> usize {
        let pre = self.preperiod.len();
        if k < pre {
            self.preperiod.0[k]
        } else {
            self.period.0[(k - pre) % self.period.len()]
        }
    }

    pub fn prefix(&self, len: usize) -> Word {
        Word((0..len).map(|k| self.symbol_at(k)).collect())
    }

    pub fn check_alphabet(&self, alphabet: usize) -> Result<()> {
        self.preperiod.check_alphabet(alphabet)?;
        self.period.check_alphabet(alphabet)
    }
}

impl fmt::Display for SymbolicSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.preperiod, self.period)
    }
}

fn parse_symbols(text: &str) -> Result<Vec<usize>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parse = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("bad symbol {s:?}: {e}")))
    };
    if text.contains(',') {
        text.split(',').map(parse).collect()
    } else {
        text.chars().map(|c| parse(&c.to_string())).collect()
    }
}

/// Parses `PRE(PERIOD)`, e.g. `0(01)` for `0·(01)^∞` or `(1)` for `1^∞`.
/// Symbols are single digits, or comma separated when the alphabet is larger.
impl FromStr for SymbolicSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let open = s
            .find('(')
            .ok_or_else(|| Error::Parse(format!("expected PRE(PERIOD), got {s:?}")))?;
        let body = s[open + 1..]
            .strip_suffix(')')
            .ok_or_else(|| Error::Parse(format!("missing closing parenthesis in {s:?}")))?;
        let pre = s[..open].trim_end_matches(',');
        SymbolicSequence::new(Word(parse_symbols(pre)?), Word(parse_symbols(body)?))
    }
}

/// `x ↦ matrix · x + translation`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub translation: Vector,
}

impl AffineMap {
    pub fn new(matrix: Matrix, translation: Vector) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() != translation.len() {
            return Err(Error::InvalidIfs(format!(
                "matrix is {}x{} but translation has length {}",
                matrix.nrows(),
                matrix.ncols(),
                translation.len()
            )));
        }
        Ok(AffineMap {
            matrix,
            translation,
        })
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap {
            matrix: Matrix::identity(dim, dim),
            translation: Vector::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.translation
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            matrix: &self.matrix * &inner.matrix,
            translation: &self.matrix * &inner.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> Result<AffineMap> {
        let inv = self
            .matrix
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular matrix has no inverse".into()))?;
        let translation = -(&inv * &self.translation);
        Ok(AffineMap {
            matrix: inv,
            translation,
        })
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    /// Largest absolute difference over all matrix and translation entries.
    pub fn max_abs_diff(&self, other: &AffineMap) -> f64 {
        let m = (&self.matrix - &other.matrix).amax();
        let t = (&self.translation - &other.translation).amax();
        m.max(t)
    }
}

/// Largest singular value, by power iteration on `AᵀA`.
pub fn operator_norm(a: &Matrix) -> f64 {
    let n = a.ncols();
    if n == 0 {
        return 0.0;
    }
    let ata = a.transpose() * a;
    let mut v = Vector::from_element(n, 1.0 / (n as f64).sqrt());
    // A start vector orthogonal to the top singular vector would stall, so
    // perturb it off the diagonal direction.
    for (k, x) in v.iter_mut().enumerate() {
        *x += 1e-3 * (k as f64 + 1.0);
    }
    v.normalize_mut();
    let mut sigma2 = 0.0;
    for _ in 0..NORM_MAX_ITERATIONS {
        let w = &ata * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = w / norm;
        let converged = (norm - sigma2).abs() <= NORM_TOLERANCE * norm.max(1.0);
        sigma2 = norm;
        v = next;
        if converged {
            break;
        }
    }
    sigma2.sqrt()
}

/// Contractivity requirement checked by [`AffineIfs::check_contraction`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractionMode {
    /// Every `‖A_i‖ < 1`.
    General,
    /// Every `‖A_i‖ < 1/2`, needed by the transversality estimates.
    Strict,
}

impl ContractionMode {
    fn bound(self) -> f64 {
        match self {
            ContractionMode::General => 1.0,
            ContractionMode::Strict => 0.5,
        }
    }
}

/// Sufficient condition for differentiation regularity that could be certified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShmerkinVerdict {
    AllEqual2D,
    SimultaneouslyDiagonalizable,
    /// Not certified. This never means "not regular".
    Unknown,
}

#[derive(Clone, Debug)]
pub struct AffineIfs {
    maps: Vec<AffineMap>,
    dim: usize,
    lambda: f64,
    norms: Vec<f64>,
}

impl AffineIfs {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::InvalidIfs("an IFS needs at least one map".into()))?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::InvalidIfs("dimension must be at least 1".into()));
        }
        let mut lambda = 0.0;
        let mut norms = Vec::with_capacity(maps.len());
        for (i, map) in maps.iter().enumerate() {
            if map.dim() != dim || !map.matrix.is_square() || map.matrix.nrows() != dim {
                return Err(Error::InvalidIfs(format!(
                    "map {i} has dimension {}, expected {dim}",
                    map.dim()
                )));
            }
            let det = map.determinant();
            if !det.is_finite() || det.abs() <= DET_TOLERANCE {
                return Err(Error::InvalidIfs(format!("map {i} has singular matrix (det = {det})")));
            }
            let norm = operator_norm(&map.matrix);
            if norm >= 1.0 {
                return Err(Error::InvalidIfs(format!(
                    "map {i} is not a contraction (operator norm {norm})"
                )));
            }
            lambda += det.abs();
            norms.push(norm);
        }
        Ok(AffineIfs {
            maps,
            dim,
            lambda,
            norms,
        })
    }

    /// Same matrix for every generator, one translation per generator.
    pub fn with_common_matrix(matrix: &Matrix, translations: &[Vector]) -> Result<Self> {
        let maps = translations
            .iter()
            .map(|t| AffineMap::new(matrix.clone(), t.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps)
    }

    /// One-dimensional IFS `{ratio·x + t}` for each translation.
    pub fn similarity_1d(ratios_and_translations: &[(f64, f64)]) -> Result<Self> {
        let maps = ratios_and_translations
            .iter()
            .map(|&(a, t)| AffineMap::new(Matrix::from_element(1, 1, a), Vector::from_element(1, t)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(maps)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> Result<&AffineMap> {
        self.maps.get(i).ok_or(Error::SymbolOutOfRange {
            symbol: i,
            alphabet: self.maps.len(),
        })
    }

    /// `λ(A) = Σ_i |det A_i|`.
    pub fn lambda_value(&self) -> f64 {
        self.lambda
    }

    pub fn operator_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn max_operator_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn check_contraction(&self, mode: ContractionMode) -> Result<()> {
        let bound = mode.bound();
        match self.norms.iter().position(|&n| n >= bound) {
            Some(i) => Err(Error::Precondition(format!(
                "map {i} has operator norm {} but {mode:?} mode requires < {bound}",
                self.norms[i]
            ))),
            None => Ok(()),
        }
    }

    /// `S_w = S_{w_1} ∘ … ∘ S_{w_n}`.
    pub fn compose_word(&self, w: &Word) -> Result<AffineMap> {
        if w.is_empty() {
            return Err(Error::Precondition("word must be nonempty".into()));
        }
        w.check_alphabet(self.alphabet_size())?;
        let mut acc = self.maps[w.0[0]].clone();
        for &s in &w.0[1..] {
            acc = acc.compose(&self.maps[s]);
        }
        Ok(acc)
    }

    /// `T_w = T_{w_1} ∘ … ∘ T_{w_n}` with `T_i = S_i^{-1}`.
    pub fn inverse_map(&self, w: &Word) -> Result<AffineMap> {
        if w.is_empty() {
            return Err(Error::Precondition("word must be nonempty".into()));
        }
        w.check_alphabet(self.alphabet_size())?;
        let inverses = self
            .maps
            .iter()
            .map(AffineMap::inverse)
            .collect::<Result<Vec<_>>>()?;
        let mut acc = inverses[w.0[0]].clone();
        for &s in &w.0[1..] {
            acc = acc.compose(&inverses[s]);
        }
        Ok(acc)
    }

    /// The unique fixed point of `S_w`, from `(I - A_w) x = t_w`.
    pub fn periodic_fixed_point(&self, w: &Word) -> Result<Vector> {
        let map = self.compose_word(w)?;
        fixed_point(&map)
    }

    /// `π(s)` for an eventually periodic `s`: `S_pre(fixed point of S_period)`.
    pub fn project(&self, s: &SymbolicSequence) -> Result<Vector> {
        s.check_alphabet(self.alphabet_size())?;
        let x = self.periodic_fixed_point(s.period())?;
        if s.preperiod().is_empty() {
            Ok(x)
        } else {
            Ok(self.compose_word(s.preperiod())?.apply(&x))
        }
    }

    /// `S_w(0)` together with the bound `ρ^|w| · R` on its distance to
    /// `π(w · anything)`, where `ρ` is the largest operator norm and `R`
    /// bounds the attractor around the origin.
    pub fn project_truncated(&self, w: &Word) -> Result<(Vector, f64)> {
        let map = self.compose_word(w)?;
        let rho = self.max_operator_norm();
        let radius = self.attractor_radius();
        Ok((map.translation, rho.powi(w.len() as i32) * radius))
    }

    /// `max_i |t_i| / (1 - ρ)`: every attractor point lies within this distance of 0.
    pub fn attractor_radius(&self) -> f64 {
        let rho = self.max_operator_norm();
        let tmax = self
            .maps
            .iter()
            .map(|m| m.translation.norm())
            .fold(0.0, f64::max);
        tmax / (1.0 - rho)
    }

    /// `(A_w^{-1} - I)^{-1} = Σ_{l≥1} A_w^l`, by a direct solve of `(I - A_w) M = A_w`.
    pub fn neumann_resolvent(&self, w: &Word) -> Result<Matrix> {
        let a = self.compose_word(w)?.matrix;
        neumann_resolvent_of(&a)
    }

    /// The `m^n` composed maps of level `n`, in lexicographic word order.
    pub fn level_maps(&self, n: usize, budget: u128) -> Result<Vec<AffineMap>> {
        if n == 0 {
            return Err(Error::Precondition("level must be at least 1".into()));
        }
        let count = word_count(self.alphabet_size(), n);
        if count > budget {
            return Err(Error::budget("words", count, budget));
        }
        let mut level: Vec<AffineMap> = self.maps.clone();
        for _ in 1..n {
            let mut next = Vec::with_capacity(level.len() * self.maps.len());
            for parent in &level {
                for gen in &self.maps {
                    next.push(parent.compose(gen));
                }
            }
            level = next;
        }
        Ok(level)
    }

    pub fn shmerkin_sufficient(&self) -> ShmerkinVerdict {
        let first = &self.maps[0].matrix;
        let all_equal = self
            .maps
            .iter()
            .all(|m| (&m.matrix - first).amax() <= MATRIX_EQ_TOLERANCE);
        if self.dim == 2 && all_equal {
            return ShmerkinVerdict::AllEqual2D;
        }
        let all_diagonal = self.maps.iter().all(|m| is_diagonal(&m.matrix));
        if all_diagonal {
            ShmerkinVerdict::SimultaneouslyDiagonalizable
        } else {
            ShmerkinVerdict::Unknown
        }
    }

    /// Same matrices, new translations (row `i` of `translations` is `t_i`).
    pub fn with_translations(&self, translations: &[Vector]) -> Result<Self> {
        if translations.len() != self.maps.len() {
            return Err(Error::InvalidIfs(format!(
                "{} translations for {} maps",
                translations.len(),
                self.maps.len()
            )));
        }
        let maps = self
            .maps
            .iter()
            .zip(translations)
            .map(|(m, t)| AffineMap::new(m.matrix.clone(), t.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(AffineIfs {
            maps,
            dim: self.dim,
            lambda: self.lambda,
            norms: self.norms.clone(),
        })
    }
}

pub(crate) fn is_diagonal(m: &Matrix) -> bool {
    (0..m.nrows()).all(|r| (0..m.ncols()).all(|c| r == c || m[(r, c)].abs() <= MATRIX_EQ_TOLERANCE))
}

pub fn fixed_point(map: &AffineMap) -> Result<Vector> {
    let d = map.dim();
    let system = Matrix::identity(d, d) - &map.matrix;
    let lu = system.lu();
    if lu.determinant().abs() <= DET_TOLERANCE {
        return Err(Error::Numeric("I - A_w is numerically singular".into()));
    }
    lu.solve(&map.translation)
        .ok_or_else(|| Error::Numeric("fixed point solve failed".into()))
}

pub fn neumann_resolvent_of(a: &Matrix) -> Result<Matrix> {
    let d = a.nrows();
    let lu = (Matrix::identity(d, d) - a).lu();
    if lu.determinant().abs() <= DET_TOLERANCE {
        return Err(Error::Numeric("I - A_w is numerically singular".into()));
    }
    lu.solve(a)
        .ok_or_else(|| Error::Numeric("resolvent solve failed".into()))
}

pub(crate) fn word_count(m: usize, n: usize) -> u128 {
    (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// The words of `I^n` in lexicographic order, addressable by index so callers
/// can split the index range across threads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordSpace {
    alphabet: usize,
    length: usize,
    count: u64,
}

/// `I^n` as a lexicographic stream, failing when `m^n` exceeds the default budget.
pub fn enumerate_words(m: usize, n: usize) -> Result<WordSpace> {
    WordSpace::with_budget(m, n, DEFAULT_WORD_BUDGET)
}

impl WordSpace {
    pub fn with_budget(m: usize, n: usize, budget: u128) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition(format!(
                "need m >= 1 and n >= 1, got m = {m}, n = {n}"
            )));
        }
        let count = word_count(m, n);
        if count > budget {
            return Err(Error::budget("words", count, budget));
        }
        Ok(WordSpace {
            alphabet: m,
            length: n,
            count: count as u64,
        })
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn word_at(&self, mut index: u64) -> Word {
        let mut symbols = vec![0; self.length];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % self.alphabet as u64) as usize;
            index /= self.alphabet as u64;
        }
        Word(symbols)
    }

    pub fn iter(&self) -> WordIter {
        self.iter_range(0, self.count)
    }

    /// Words with lexicographic index in `start..end`.
    pub fn iter_range(&self, start: u64, end: u64) -> WordIter {
        let end = end.min(self.count);
        WordIter {
            alphabet: self.alphabet,
            current: (start < end).then(|| self.word_at(start)),
            remaining: end.saturating_sub(start),
        }
    }
}

impl IntoIterator for WordSpace {
    type Item = Word;
    type IntoIter = WordIter;

    fn into_iter(self) -> WordIter {
        self.iter()
    }
}

pub struct WordIter {
    alphabet: usize,
    current: Option<Word>,
    remaining: u64,
}

impl Iterator for WordIter {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        if self.remaining == 0 {
            return None;
        }
        let word = self.current.take()?;
        self.remaining -= 1;
        if self.remaining > 0 {
            let mut next = word.clone();
            for slot in next.0.iter_mut().rev() {
                *slot += 1;
                if *slot < self.alphabet {
                    break;
                }
                *slot = 0;
            }
            self.current = Some(next);
        }
        Some(word)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = usize::try_from(self.remaining).unwrap_or(usize::MAX);
        (n, Some(n))
    }
}

/// On-disk form: `{"d": 1, "maps": [{"A": [[0.5]], "t": [0.0]}]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IfsFile {
    pub d: usize,
    pub maps: Vec<MapFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub t: Vec<f64>,
}

impl IfsFile {
    pub fn to_ifs(&self) -> Result<AffineIfs> {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                if m.a.len() != self.d || m.a.iter().any(|row| row.len() != self.d) || m.t.len() != self.d {
                    return Err(Error::InvalidIfs(format!("map {i} does not match d = {}", self.d)));
                }
                let matrix = Matrix::from_fn(self.d, self.d, |r, c| m.a[r][c]);
                AffineMap::new(matrix, Vector::from_vec(m.t.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        AffineIfs::new(maps)
    }

    pub fn from_ifs(ifs: &AffineIfs) -> Self {
        IfsFile {
            d: ifs.dim(),
            maps: ifs
                .maps()
                .iter()
                .map(|m| MapFile {
                    a: (0..m.dim())
                        .map(|r| (0..m.dim()).map(|c| m.matrix[(r, c)]).collect())
                        .collect(),
                    t: m.translation.iter().copied().collect(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_half() -> AffineIfs {
        AffineIfs::similarity_1d(&[(0.5, 0.0), (0.5, 1.0)]).unwrap()
    }

    fn diag2(a: f64, b: f64) -> Matrix {
        Matrix::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn lambda_examples() {
        assert_eq!(two_half().lambda_value(), 1.0);
        let bern = AffineIfs::similarity_1d(&[(0.6, 0.0), (0.6, 1.0)]).unwrap();
        assert_abs_diff_eq!(bern.lambda_value(), 1.2, epsilon = 1e-15);
        let t: Vec<Vector> = (0..9).map(|k| Vector::from_vec(vec![k as f64, 0.0])).collect();
        let ifs = AffineIfs::with_common_matrix(&diag2(0.4, 0.3), &t).unwrap();
        assert_abs_diff_eq!(ifs.lambda_value(), 1.08, epsilon = 1e-14);
    }

    #[test]
    fn singular_or_expanding_maps_are_rejected() {
        let singular = AffineIfs::with_common_matrix(&diag2(0.5, 0.0), &[Vector::zeros(2)]);
        assert!(matches!(singular, Err(Error::InvalidIfs(_))));
        let expanding = AffineIfs::similarity_1d(&[(1.2, 0.0)]);
        assert!(matches!(expanding, Err(Error::InvalidIfs(_))));
        assert!(matches!(AffineIfs::new(vec![]), Err(Error::InvalidIfs(_))));
    }

    #[test]
    fn strict_mode_rejects_norm_half() {
        let ifs = two_half();
        assert!(ifs.check_contraction(ContractionMode::General).is_ok());
        assert!(ifs.check_contraction(ContractionMode::Strict).is_err());
        let ok = AffineIfs::similarity_1d(&[(0.45, 0.0), (0.45, 1.0)]).unwrap();
        assert!(ok.check_contraction(ContractionMode::Strict).is_ok());
    }

    #[test]
    fn compose_examples() {
        let ifs = two_half();
        let s11 = ifs.compose_word(&Word::new(vec![1, 1])).unwrap();
        assert_abs_diff_eq!(s11.matrix[(0, 0)], 0.25);
        assert_abs_diff_eq!(s11.translation[0], 1.5);
        let s1 = ifs.compose_word(&Word::new(vec![1])).unwrap();
        assert_eq!(&s1, ifs.map(1).unwrap());

        let t: Vec<Vector> = vec![Vector::zeros(2), Vector::from_vec(vec![1.0, 1.0])];
        let ifs2 = AffineIfs::with_common_matrix(&diag2(0.4, 0.3), &t).unwrap();
        let m = ifs2.compose_word(&Word::new(vec![0, 1, 0])).unwrap().matrix;
        assert_abs_diff_eq!(m[(0, 0)], 0.064, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)], 0.027, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn compose_rejects_bad_symbols() {
        let err = two_half().compose_word(&Word::new(vec![0, 2])).unwrap_err();
        assert_eq!(err, Error::SymbolOutOfRange { symbol: 2, alphabet: 2 });
        assert!(two_half().compose_word(&Word::empty()).is_err());
    }

    #[test]
    fn inverse_examples() {
        let ifs = two_half();
        let t1 = ifs.inverse_map(&Word::new(vec![1])).unwrap();
        assert_abs_diff_eq!(t1.apply(&Vector::from_element(1, 2.0))[0], 2.0);
        // T_i(x) = A_i^{-1}(x - t_i)
        assert_abs_diff_eq!(t1.apply(&Vector::from_element(1, 0.0))[0], -2.0);
        let w = Word::new(vec![0, 1, 1, 0]);
        let id = ifs
            .inverse_map(&w.reversed())
            .unwrap()
            .compose(&ifs.compose_word(&w).unwrap());
        assert!(id.max_abs_diff(&AffineMap::identity(1)) < 1e-12);
    }

    #[test]
    fn projection_examples() {
        let ifs = two_half();
        let p = |s: &str| ifs.project(&s.parse().unwrap()).unwrap()[0];
        assert_abs_diff_eq!(p("(0)"), 0.0);
        assert_abs_diff_eq!(p("(1)"), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p("(01)"), 2.0 / 3.0, epsilon = 1e-15);
        // 1·0^∞ = S_1(0)
        assert_abs_diff_eq!(p("1(0)"), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn projection_matches_truncated_series() {
        let ifs = AffineIfs::similarity_1d(&[(0.6, 0.0), (0.6, 1.0), (0.3, -0.7)]).unwrap();
        let seq: SymbolicSequence = "21(102)".parse().unwrap();
        let exact = ifs.project(&seq).unwrap()[0];
        // π(i) = t_{i1} + Σ A_{i1..in} t_{i(n+1)}
        let mut series = 0.0;
        let mut scale = 1.0;
        for k in 0..200 {
            let m = &ifs.maps()[seq.symbol_at(k)];
            series += scale * m.translation[0];
            scale *= m.matrix[(0, 0)];
        }
        assert!((exact - series).abs() <= 1e-12 * series.abs().max(1.0));
        let (approx, bound) = ifs.project_truncated(&seq.prefix(40)).unwrap();
        assert!((approx[0] - exact).abs() <= bound);
    }

    #[test]
    fn fixed_point_examples() {
        let ifs = two_half();
        assert_abs_diff_eq!(ifs.periodic_fixed_point(&Word::new(vec![0])).unwrap()[0], 0.0);
        assert_abs_diff_eq!(
            ifs.periodic_fixed_point(&Word::new(vec![0, 1])).unwrap()[0],
            2.0 / 3.0,
            epsilon = 1e-15
        );
        let t = vec![Vector::from_vec(vec![1.0, 2.0]), Vector::zeros(2)];
        let ifs2 = AffineIfs::with_common_matrix(&diag2(0.4, 0.3), &t).unwrap();
        let x = ifs2.periodic_fixed_point(&Word::new(vec![0])).unwrap();
        assert_abs_diff_eq!(x[0], 1.0 / 0.6, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0 / 0.7, epsilon = 1e-14);
    }

    #[test]
    fn resolvent_examples() {
        let ifs = two_half();
        let m = ifs.neumann_resolvent(&Word::new(vec![0])).unwrap();
        assert_abs_diff_eq!(m[(0, 0)], 1.0, epsilon = 1e-15);
        let lam: f64 = 0.7;
        let bern = AffineIfs::similarity_1d(&[(lam, 0.0), (lam, 1.0)]).unwrap();
        let m = bern.neumann_resolvent(&Word::new(vec![1, 0, 1])).unwrap();
        let ln = lam.powi(3);
        assert_abs_diff_eq!(m[(0, 0)], ln / (1.0 - ln), epsilon = 1e-14);

        let t = vec![Vector::zeros(2)];
        let ifs2 = AffineIfs::with_common_matrix(&diag2(0.5, 0.25), &t).unwrap();
        let m = ifs2.neumann_resolvent(&Word::new(vec![0, 0])).unwrap();
        assert_abs_diff_eq!(m[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)], 1.0 / 15.0, epsilon = 1e-15);
    }

    #[test]
    fn common_prefix_examples() {
        let w = |v: &[usize]| Word::from(v);
        assert_eq!(common_prefix_length(&w(&[0, 1, 1]), &w(&[1, 1, 1])).unwrap(), 1);
        assert_eq!(common_prefix_length(&w(&[0, 1, 0]), &w(&[0, 1, 1])).unwrap(), 3);
        assert_eq!(common_prefix_length(&w(&[0, 0]), &w(&[0, 1])).unwrap(), 2);
        assert_eq!(common_prefix_length(&w(&[0, 0]), &w(&[0, 0])), Err(Error::EqualWords));
        assert!(common_prefix_length(&w(&[0]), &w(&[0, 0])).is_err());
    }

    #[test]
    fn enumerate_examples() {
        let words: Vec<Word> = enumerate_words(2, 2).unwrap().iter().collect();
        let expected: Vec<Word> = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]
            .into_iter()
            .map(Word::new)
            .collect();
        assert_eq!(words, expected);
        let words: Vec<Word> = enumerate_words(3, 1).unwrap().iter().collect();
        assert_eq!(words.len(), 3);
        assert_eq!(words[2], Word::new(vec![2]));
        assert_eq!(enumerate_words(2, 20).unwrap().iter().count(), 1_048_576);
    }

    #[test]
    fn enumerate_budget_and_ranges() {
        let err = enumerate_words(2, 25).unwrap_err();
        assert!(matches!(err, Error::Budget { budget, .. } if budget == DEFAULT_WORD_BUDGET));
        let space = enumerate_words(3, 4).unwrap();
        let whole: Vec<Word> = space.iter().collect();
        let split: Vec<Word> = space.iter_range(0, 30).chain(space.iter_range(30, 81)).collect();
        assert_eq!(whole, split);
        assert_eq!(space.word_at(80), Word::new(vec![2, 2, 2, 2]));
    }

    #[test]
    fn level_maps_follow_lexicographic_order() {
        let ifs = AffineIfs::similarity_1d(&[(0.5, 0.0), (0.5, 0.5), (0.5, 1.0)]).unwrap();
        let maps = ifs.level_maps(3, DEFAULT_WORD_BUDGET).unwrap();
        for (w, m) in enumerate_words(3, 3).unwrap().iter().zip(&maps) {
            assert!(ifs.compose_word(&w).unwrap().max_abs_diff(m) < 1e-15);
        }
    }

    #[test]
    fn shmerkin_examples() {
        let t = vec![Vector::zeros(2), Vector::from_vec(vec![1.0, 0.0])];
        let a = Matrix::from_row_slice(2, 2, &[0.3, 0.1, -0.1, 0.3]);
        let eq = AffineIfs::with_common_matrix(&a, &t).unwrap();
        assert_eq!(eq.shmerkin_sufficient(), ShmerkinVerdict::AllEqual2D);

        let maps = (0..2)
            .map(|k| {
                AffineMap::new(
                    Matrix::from_diagonal(&Vector::from_vec(vec![0.3, 0.4 + 0.1 * k as f64, 0.2])),
                    Vector::zeros(3),
                )
                .unwrap()
            })
            .collect();
        let diag = AffineIfs::new(maps).unwrap();
        assert_eq!(diag.shmerkin_sufficient(), ShmerkinVerdict::SimultaneouslyDiagonalizable);

        let shear_rot = |theta: f64, k: f64| {
            let (s, c) = theta.sin_cos();
            let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let shear = Matrix::from_row_slice(2, 2, &[1.0, k, 0.0, 1.0]);
            AffineMap::new(rot * shear * 0.3, Vector::zeros(2)).unwrap()
        };
        let mixed = AffineIfs::new(vec![shear_rot(0.4, 0.5), shear_rot(1.1, -0.3)]).unwrap();
        assert_eq!(mixed.shmerkin_sufficient(), ShmerkinVerdict::Unknown);
    }

    #[test]
    fn operator_norm_matches_svd() {
        let a = Matrix::from_row_slice(3, 3, &[0.2, 0.1, 0.0, -0.3, 0.4, 0.05, 0.0, 0.2, 0.1]);
        let svd = a.clone().svd(false, false);
        let expected = svd.singular_values.max();
        assert_abs_diff_eq!(operator_norm(&a), expected, epsilon = 1e-9);
        assert_abs_diff_eq!(operator_norm(&diag2(0.0, 0.4)), 0.4, epsilon = 1e-9);
    }

    #[test]
    fn sequence_parsing() {
        let s: SymbolicSequence = "0(01)".parse().unwrap();
        assert_eq!(s.prefix(5), Word::new(vec![0, 0, 1, 0, 1]));
        let s: SymbolicSequence = "10,11(3)".parse().unwrap();
        assert_eq!(s.prefix(3), Word::new(vec![10, 11, 3]));
        assert!("01".parse::<SymbolicSequence>().is_err());
        assert!("0()".parse::<SymbolicSequence>().is_err());
        assert_eq!(s.to_string(), "10,11(3)");
    }

    #[test]
    fn ifs_file_roundtrip() {
        let json = r#"{"d": 1, "maps": [{"A": [[0.5]], "t": [0.0]}, {"A": [[0.5]], "t": [1.0]}]}"#;
        let file: IfsFile = serde_json::from_str(json).unwrap();
        let ifs = file.to_ifs().unwrap();
        assert_eq!(ifs.lambda_value(), 1.0);
        assert_eq!(IfsFile::from_ifs(&ifs), file);
        assert!(serde_json::from_str::<IfsFile>(r#"{"d":1,"maps":[],"x":1}"#).is_err());
    }
}
