use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ifs::{
    fixed_point, neumann_resolvent_of, AffineIfs, Matrix, SymbolicSequence, Vector, Word, WordSpace,
    DEFAULT_WORD_BUDGET,
};
use crate::measure::body::{PlacedBody, Shape};

/// Rate function `h: N → [0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HFamily {
    /// `h(n) = c · n^{-alpha}`
    PowerLaw { c: f64, alpha: f64 },
    Constant { c: f64 },
    /// `h(n) = values[n - 1]`
    Custom { values: Vec<f64> },
}

/// Whether `h` is known to lie in the class `H`. `Unknown` is not a negative answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HMembership {
    InH,
    NotInH,
    Unknown,
}

impl HFamily {
    pub fn eval(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Precondition("h is indexed from n = 1".into()));
        }
        match self {
            HFamily::PowerLaw { c, alpha } => Ok(c * (n as f64).powf(-alpha)),
            HFamily::Constant { c } => Ok(*c),
            HFamily::Custom { values } => values.get(n - 1).copied().ok_or_else(|| {
                Error::Precondition(format!("custom h has {} values, level {n} requested", values.len()))
            }),
        }
    }

    pub fn membership(&self) -> HMembership {
        match self {
            HFamily::PowerLaw { c, alpha } if *c > 0.0 && *alpha == 1.0 => HMembership::InH,
            HFamily::PowerLaw { c, alpha } if *c == 0.0 || *alpha > 1.0 => HMembership::NotInH,
            HFamily::Constant { c } if *c == 0.0 => HMembership::NotInH,
            _ => HMembership::Unknown,
        }
    }

    /// `Some(true)` if `Σ h(n)` is known to converge, `Some(false)` if known to diverge.
    pub fn series_converges(&self) -> Option<bool> {
        match self {
            HFamily::PowerLaw { c, alpha } => Some(*c == 0.0 || *alpha > 1.0),
            HFamily::Constant { c } => Some(*c == 0.0),
            HFamily::Custom { .. } => None,
        }
    }

    pub fn is_bounded(&self) -> Option<bool> {
        match self {
            HFamily::PowerLaw { c, alpha } => Some(*c == 0.0 || *alpha >= 0.0),
            HFamily::Constant { .. } => Some(true),
            HFamily::Custom { .. } => None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let ok = match self {
            HFamily::PowerLaw { c, alpha } => *c >= 0.0 && c.is_finite() && alpha.is_finite(),
            HFamily::Constant { c } => *c >= 0.0 && c.is_finite(),
            HFamily::Custom { values } => values.iter().all(|v| *v >= 0.0 && v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("h must be finite and nonnegative: {self}")))
        }
    }
}

impl fmt::Display for HFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFamily::PowerLaw { c, alpha } => write!(f, "power:{c},{alpha}"),
            HFamily::Constant { c } => write!(f, "const:{c}"),
            HFamily::Custom { values } => {
                let parts: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                write!(f, "table:{}", parts.join(","))
            }
        }
    }
}

/// `const:C`, `power:c,alpha` or `table:h1,h2,...`.
impl FromStr for HFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected KIND:ARGS for h, got {s:?}")))?;
        let nums = args
            .split(',')
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number {a:?} in h: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let h = match (kind.trim(), nums.as_slice()) {
            ("const", [c]) => HFamily::Constant { c: *c },
            ("power", [c, alpha]) => HFamily::PowerLaw { c: *c, alpha: *alpha },
            ("table", values) if !values.is_empty() => HFamily::Custom { values: values.to_vec() },
            _ => return Err(Error::Parse(format!("unrecognised h specification {s:?}"))),
        };
        h.validate()?;
        Ok(h)
    }
}

/// Level-`n` neighbourhoods `E_n` beyond the plain `h`-balls.
#[derive(Clone, Debug, PartialEq)]
pub enum BodyGenerator {
    /// `B(0, scale / λ(A)^{n/d})`
    ScaledBall { scale: f64 },
    /// `A^n B(0, scale / λ(A)^{n/d})` for a family sharing the matrix `A`.
    ScaledEllipse { scale: f64 },
    /// The same body at every level.
    Fixed(Shape),
    /// `levels[n - 1]` at level `n`.
    PerLevel(Vec<Shape>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetMode {
    ShrinkingBall(HFamily),
    ShrinkingGeneral(BodyGenerator),
    Recurrence(HFamily),
    RecurrenceGeneral(BodyGenerator),
}

/// Target centers `x_n`; recurrence modes ignore them.
#[derive(Clone, Debug, PartialEq)]
pub enum Centers {
    /// The constant target `π(s)`.
    Sequence(SymbolicSequence),
    Point(Vector),
    /// `points[n - 1]` at level `n`.
    PerLevel(Vec<Vector>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub mode: TargetMode,
    pub centers: Centers,
}

impl TargetSpec {
    pub fn shrinking_ball(h: HFamily, centers: Centers) -> Self {
        TargetSpec {
            mode: TargetMode::ShrinkingBall(h),
            centers,
        }
    }

    pub fn recurrence(h: HFamily) -> Self {
        TargetSpec {
            mode: TargetMode::Recurrence(h),
            centers: Centers::Point(Vector::zeros(0)),
        }
    }

    pub fn is_recurrence(&self) -> bool {
        matches!(self.mode, TargetMode::Recurrence(_) | TargetMode::RecurrenceGeneral(_))
    }

    pub fn h(&self) -> Option<&HFamily> {
        match &self.mode {
            TargetMode::ShrinkingBall(h) | TargetMode::Recurrence(h) => Some(h),
            _ => None,
        }
    }

    /// The level-`n` neighbourhood `E_n`, centred at the origin.
    pub fn neighbourhood(&self, ifs: &AffineIfs, n: usize) -> Result<Shape> {
        let d = ifs.dim();
        let lambda = ifs.lambda_value();
        match &self.mode {
            TargetMode::ShrinkingBall(h) | TargetMode::Recurrence(h) => {
                h.validate()?;
                let radius = (h.eval(n)? / lambda.powi(n as i32)).powf(1.0 / d as f64);
                Shape::ball(radius)
            }
            TargetMode::ShrinkingGeneral(g) | TargetMode::RecurrenceGeneral(g) => generate(g, ifs, n),
        }
    }

    fn center(&self, ifs: &AffineIfs, n: usize) -> Result<Vector> {
        let x = match &self.centers {
            Centers::Sequence(s) => ifs.project(s)?,
            Centers::Point(p) => p.clone(),
            Centers::PerLevel(points) => points.get(n - 1).cloned().ok_or_else(|| {
                Error::Precondition(format!("{} target centers given, level {n} requested", points.len()))
            })?,
        };
        if x.len() != ifs.dim() {
            return Err(Error::Precondition(format!(
                "target center has dimension {}, IFS has {}",
                x.len(),
                ifs.dim()
            )));
        }
        Ok(x)
    }
}

fn generate(g: &BodyGenerator, ifs: &AffineIfs, n: usize) -> Result<Shape> {
    let d = ifs.dim();
    let radius_scale = ifs.lambda_value().powf(-(n as f64) / d as f64);
    match g {
        BodyGenerator::ScaledBall { scale } => Shape::ball(scale * radius_scale),
        BodyGenerator::ScaledEllipse { scale } => {
            let a = common_matrix(ifs)?;
            let mut an = a.clone();
            for _ in 1..n {
                an = &an * &a;
            }
            Shape::linear_image_ball(an, scale * radius_scale)
        }
        BodyGenerator::Fixed(shape) => Ok(shape.clone()),
        BodyGenerator::PerLevel(levels) => levels.get(n - 1).cloned().ok_or_else(|| {
            Error::Precondition(format!("{} level shapes given, level {n} requested", levels.len()))
        }),
    }
}

pub(crate) fn common_matrix(ifs: &AffineIfs) -> Result<Matrix> {
    let a = &ifs.maps()[0].matrix;
    if ifs.maps().iter().any(|m| (&m.matrix - a).amax() > 1e-12) {
        return Err(Error::UnsupportedConfiguration(
            "this neighbourhood needs all generators to share one matrix".into(),
        ));
    }
    Ok(a.clone())
}

fn check_level(ifs: &AffineIfs, n: usize) -> Result<WordSpace> {
    if n == 0 {
        return Err(Error::Precondition("level must be at least 1".into()));
    }
    WordSpace::with_budget(ifs.alphabet_size(), n, DEFAULT_WORD_BUDGET)
}

/// `S_w(x_n + E_n)` for every `w ∈ I^n`, in lexicographic word order.
pub fn stage_target_bodies(ifs: &AffineIfs, spec: &TargetSpec, n: usize) -> Result<Vec<PlacedBody>> {
    if spec.is_recurrence() {
        return Err(Error::Precondition("recurrence targets use stage_recurrence_bodies".into()));
    }
    check_level(ifs, n)?;
    let e = spec.neighbourhood(ifs, n)?;
    let x = spec.center(ifs, n)?;
    ifs.level_maps(n, DEFAULT_WORD_BUDGET)?
        .into_iter()
        .map(|m| PlacedBody::new(m.apply(&x), e.transformed(&m.matrix)?))
        .collect()
}

/// The body `{x : T_w(x) - x ∈ E}` for one word, namely
/// `π(w̄^∞) + (A_w̄^{-1} - I)^{-1} E`.
pub fn recurrence_body(ifs: &AffineIfs, w: &Word, e: &Shape) -> Result<PlacedBody> {
    let rev = w.reversed();
    let center = ifs.periodic_fixed_point(&rev)?;
    let resolvent = ifs.neumann_resolvent(&rev)?;
    PlacedBody::new(center, e.transformed(&resolvent)?)
}

/// One recurrence body per word of length `n`, in lexicographic word order.
pub fn stage_recurrence_bodies(ifs: &AffineIfs, spec: &TargetSpec, n: usize) -> Result<Vec<PlacedBody>> {
    if !spec.is_recurrence() {
        return Err(Error::Precondition("shrinking targets use stage_target_bodies".into()));
    }
    let words = check_level(ifs, n)?;
    let e = spec.neighbourhood(ifs, n)?;
    // S_w̄ for all w, obtained from the lexicographic level maps by index reversal.
    let maps = ifs.level_maps(n, DEFAULT_WORD_BUDGET)?;
    let m = ifs.alphabet_size() as u64;
    words
        .iter()
        .map(|w| {
            let rev_index = w.symbols().iter().rev().fold(0u64, |acc, &s| acc * m + s as u64);
            let map = &maps[rev_index as usize];
            let center = fixed_point(map)?;
            let resolvent = neumann_resolvent_of(&map.matrix)?;
            PlacedBody::new(center, e.transformed(&resolvent)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ifs::enumerate_words;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn two_half() -> AffineIfs {
        AffineIfs::similarity_1d(&[(0.5, 0.0), (0.5, 1.0)]).unwrap()
    }

    #[test]
    fn h_parsing_and_tags() {
        let h: HFamily = "power:1,1".parse().unwrap();
        assert_eq!(h, HFamily::PowerLaw { c: 1.0, alpha: 1.0 });
        assert_eq!(h.membership(), HMembership::InH);
        assert_eq!("power:2,2".parse::<HFamily>().unwrap().membership(), HMembership::NotInH);
        assert_eq!("const:1".parse::<HFamily>().unwrap().membership(), HMembership::Unknown);
        assert_eq!("table:1,0.5".parse::<HFamily>().unwrap().eval(2).unwrap(), 0.5);
        assert!("power:1".parse::<HFamily>().is_err());
        assert!("const:-1".parse::<HFamily>().is_err());
        assert_eq!(h.to_string(), "power:1,1");
    }

    #[test]
    fn stage_target_level_one() {
        // λ(A) = 1 and h ≡ 1 give E_1 = B(0, 1)
        let spec = TargetSpec::shrinking_ball(HFamily::Constant { c: 1.0 }, Centers::Sequence(SymbolicSequence::constant(0)));
        let bodies = stage_target_bodies(&two_half(), &spec, 1).unwrap();
        assert_eq!(bodies.len(), 2);
        let (a, b) = bodies[0].interval();
        assert_abs_diff_eq!(a, -0.5);
        assert_abs_diff_eq!(b, 0.5);
        let (a, b) = bodies[1].interval();
        assert_abs_diff_eq!(a, 0.5);
        assert_abs_diff_eq!(b, 1.5);
    }

    #[test]
    fn stage_target_diagonal_semiaxes() {
        let a = Matrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.3]);
        let t: Vec<Vector> = (0..9).map(|k| Vector::from_vec(vec![(k % 3) as f64, (k / 3) as f64])).collect();
        let ifs = AffineIfs::with_common_matrix(&a, &t).unwrap();
        let h = HFamily::Constant { c: 0.5 };
        let spec = TargetSpec::shrinking_ball(h, Centers::Point(Vector::zeros(2)));
        let bodies = stage_target_bodies(&ifs, &spec, 4).unwrap();
        assert_eq!(bodies.len(), 9usize.pow(4));
        let r4 = (0.5 / 1.08f64.powi(4)).sqrt();
        let e = bodies[17].shape.half_extent(2);
        assert_abs_diff_eq!(e[0], 0.4f64.powi(4) * r4, epsilon = 1e-15);
        assert_abs_diff_eq!(e[1], 0.3f64.powi(4) * r4, epsilon = 1e-15);
        // Σ_w vol = h(n) · vol(unit ball)
        let total: f64 = bodies.iter().map(|b| b.volume()).sum();
        assert_abs_diff_eq!(total, 0.5 * std::f64::consts::PI, epsilon = 1e-9);
    }

    #[test]
    fn recurrence_body_level_one() {
        let spec = TargetSpec {
            mode: TargetMode::RecurrenceGeneral(BodyGenerator::Fixed(Shape::ball(0.1).unwrap())),
            centers: Centers::Point(Vector::zeros(1)),
        };
        let bodies = stage_recurrence_bodies(&two_half(), &spec, 1).unwrap();
        let (a, b) = bodies[1].interval();
        assert_abs_diff_eq!(a, 1.9, epsilon = 1e-15);
        assert_abs_diff_eq!(b, 2.1, epsilon = 1e-15);
    }

    #[test]
    fn recurrence_bodies_match_direct_construction() {
        let ifs = AffineIfs::similarity_1d(&[(0.45, 0.0), (0.4, 1.0), (0.3, -0.5)]).unwrap();
        let spec = TargetSpec::recurrence(HFamily::PowerLaw { c: 1.0, alpha: 1.0 });
        let e = spec.neighbourhood(&ifs, 3).unwrap();
        let bodies = stage_recurrence_bodies(&ifs, &spec, 3).unwrap();
        for (w, b) in enumerate_words(3, 3).unwrap().iter().zip(&bodies) {
            let direct = recurrence_body(&ifs, &w, &e).unwrap();
            assert!((direct.center[0] - b.center[0]).abs() < 1e-13);
            assert!((direct.interval().1 - b.interval().1).abs() < 1e-13);
        }
    }

    #[test]
    fn recurrence_diagonal_radii() {
        let a = Matrix::from_row_slice(2, 2, &[0.4, 0.0, 0.0, 0.3]);
        let t = vec![Vector::zeros(2), Vector::from_vec(vec![1.0, 1.0])];
        let ifs = AffineIfs::with_common_matrix(&a, &t).unwrap();
        let r = 0.2;
        let e = Shape::ball(r).unwrap();
        let b = recurrence_body(&ifs, &Word::new(vec![0, 1, 1]), &e).unwrap();
        let ext = b.shape.half_extent(2);
        let n = 3;
        assert_abs_diff_eq!(ext[0], 0.4f64.powi(n) * r / (1.0 - 0.4f64.powi(n)), epsilon = 1e-15);
        assert_abs_diff_eq!(ext[1], 0.3f64.powi(n) * r / (1.0 - 0.3f64.powi(n)), epsilon = 1e-15);
    }

    #[test]
    fn ellipse_generator_needs_common_matrix() {
        let ifs = AffineIfs::similarity_1d(&[(0.45, 0.0), (0.4, 1.0)]).unwrap();
        let spec = TargetSpec {
            mode: TargetMode::ShrinkingGeneral(BodyGenerator::ScaledEllipse { scale: 0.1 }),
            centers: Centers::Point(Vector::zeros(1)),
        };
        assert!(matches!(
            stage_target_bodies(&ifs, &spec, 2),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    proptest! {
        #[test]
        fn recurrence_membership_matches_inverse_orbit(
            word in prop::collection::vec(0usize..2, 1..6),
            r in 0.01f64..0.5,
            x in -1.0f64..4.0,
        ) {
            let lambda = 0.5f64.sqrt();
            let ifs = AffineIfs::similarity_1d(&[(lambda, 0.0), (lambda, 1.0)]).unwrap();
            let w = Word::new(word);
            let body = recurrence_body(&ifs, &w, &Shape::ball(r).unwrap()).unwrap();
            let t = ifs.inverse_map(&w).unwrap();
            let gap = (t.apply(&Vector::from_element(1, x))[0] - x).abs();
            // away from the boundary the two descriptions must agree
            if (gap - r).abs() > 1e-9 * (1.0 + r) {
                prop_assert_eq!(body.contains(&[x]), gap <= r);
            }
        }
    }
}
