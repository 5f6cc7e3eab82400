use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use ifs_recur::covering::{
    count_overlap_pairs, cover_witnesses, exact_max_separated_subset, greedy_disjoint_cover, max_separated_subset,
    parse_points_csv, Rectangle, ShrinkingRectangleFamily,
};
use ifs_recur::dimension::{dim_lower_bound, garsia_hausdorff_criterion, DimensionInput};
use ifs_recur::garsia::{is_garsia, separation_profile, IntPolynomial};
use ifs_recur::ifs::{AffineIfs, Matrix, SymbolicSequence};
use ifs_recur::measure::{
    borel_cantelli_report, detect_exact_overlaps, exact_overlap_gamma, product_ifs_criterion, stage_bodies,
    stage_measure_report, Centers, HFamily, PixelMask, Shape, TargetSpec, Window,
};
use ifs_recur::transversality::{mc_recurrence, mc_scaling, mc_union, McBudget, McConfig, DEFAULT_GRID};
use ifs_recur::Error;

use crate::config::{ExperimentConfig, Kind};
use crate::error::CliError;
use crate::output::to_json;

const WINDOW_PAD: f64 = 0.05;

/// What a successful experiment hands back to the runner.
pub struct Outcome {
    pub result: Value,
    /// Text for standard output.
    pub stdout: String,
    pub artifacts: Vec<String>,
}

impl Outcome {
    fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        let result = serde_json::to_value(value).map_err(|e| CliError::Config(format!("cannot encode result: {e}")))?;
        Ok(Outcome {
            stdout: to_json(&result),
            result,
            artifacts: Vec::new(),
        })
    }
}

fn required<T: Clone>(value: &Option<T>, key: &str) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))
}

/// Fills `slot` with `default` when unset and returns the value, so the resolved config records it.
fn defaulted<T: Clone>(slot: &mut Option<T>, default: T) -> T {
    slot.get_or_insert(default).clone()
}

fn parse_h(text: &str) -> Result<HFamily, CliError> {
    Ok(text.parse::<HFamily>()?)
}

fn parse_sequence(text: &str) -> Result<SymbolicSequence, CliError> {
    Ok(text.parse::<SymbolicSequence>()?)
}

fn parse_shape(text: &str) -> Result<Shape, CliError> {
    let (kind, args) = text
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("expected ball:R or box:h1,h2,..., got {text:?}")))?;
    let nums = args
        .split(',')
        .map(|a| {
            a.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Config(format!("bad number {a:?} in shape: {e}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    match (kind.trim(), nums.as_slice()) {
        ("ball", [r]) => Ok(Shape::ball(*r)?),
        ("box", h) => Ok(Shape::cube(h.to_vec())?),
        _ => Err(CliError::Config(format!("unrecognised shape {text:?}"))),
    }
}

fn parse_window(values: &[f64], d: usize) -> Result<Window, CliError> {
    if values.len() != 2 * d {
        return Err(CliError::Config(format!(
            "window needs {} numbers for d = {d}, got {}",
            2 * d,
            values.len()
        )));
    }
    let lo = values.iter().step_by(2).copied().collect();
    let hi = values.iter().skip(1).step_by(2).copied().collect();
    Ok(Window::new(lo, hi)?)
}

fn window_values(w: &Window) -> Vec<f64> {
    w.lo.iter().zip(&w.hi).flat_map(|(l, h)| [*l, *h]).collect()
}

fn check_words(m: usize, n: usize, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let words = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    let budget = cfg.budgets.words as u128;
    if words > budget {
        return Err(Error::Budget {
            what: "words per level",
            requested: words,
            budget,
        }
        .into());
    }
    Ok(())
}

fn check_cells(resolution: usize, d: usize, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let cells = (resolution as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    let budget = cfg.budgets.cells as u128;
    if cells > budget {
        return Err(Error::Budget {
            what: "raster cells",
            requested: cells,
            budget,
        }
        .into());
    }
    Ok(())
}

fn read_text(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {path}: {e}")))
}

fn create(out_dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = out_dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

fn polynomial(cfg: &ExperimentConfig) -> Result<IntPolynomial, CliError> {
    Ok(required(&cfg.poly, "poly")?.parse::<IntPolynomial>()?)
}

fn mc_config(cfg: &mut ExperimentConfig, matrices: Vec<Matrix>) -> McConfig {
    McConfig {
        matrices,
        n: defaulted(&mut cfg.n, 6),
        radius: defaulted(&mut cfg.radius, 1.0),
        grid: defaulted(&mut cfg.grid, DEFAULT_GRID.to_vec()),
        samples: defaulted(&mut cfg.samples, 100),
        seed: defaulted(&mut cfg.seed, 0),
        budget: McBudget {
            max_level: cfg.budgets.max_level,
            max_samples: cfg.budgets.samples,
        },
    }
}

fn matrices(ifs: &AffineIfs) -> Vec<Matrix> {
    ifs.maps().iter().map(|m| m.matrix.clone()).collect()
}

/// Runs the experiment named by `cfg.kind`, filling defaults into `cfg` as it goes.
pub fn execute(cfg: &mut ExperimentConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let kind = cfg
        .kind
        .ok_or_else(|| CliError::Config("no experiment kind given".into()))?;
    match kind {
        Kind::Lambda => lambda(cfg),
        Kind::GarsiaCheck => Outcome::json(&is_garsia(&polynomial(cfg)?)?),
        Kind::GarsiaSep => garsia_sep(cfg),
        Kind::StageMeasure | Kind::RecurrenceMeasure => stage_measure(cfg, kind, out_dir),
        Kind::Bounds => bounds(cfg),
        Kind::Cover => cover(cfg),
        Kind::Separated => separated(cfg),
        Kind::McTransversality => mc_transversality(cfg, out_dir),
        Kind::McRecurrence => mc_recurrence_cmd(cfg, out_dir),
        Kind::Dim => {
            let input = DimensionInput {
                lambdas: required(&cfg.lambdas, "lambdas")?,
                lambda_a: required(&cfg.lambda_a, "lambda_a")?,
                s: required(&cfg.s, "s")?,
            };
            Outcome::json(&dim_lower_bound(&input)?)
        }
        Kind::GarsiaCriterion => {
            let h = parse_h(&required(&cfg.h, "h")?)?;
            Outcome::json(&garsia_hausdorff_criterion(required(&cfg.s, "s")?, &h)?)
        }
        Kind::ExactOverlap => exact_overlap(cfg),
        Kind::ProductCriterion => {
            let sizes = required(&cfg.sizes, "sizes")?;
            let ratios = required(&cfg.ratios, "ratios")?;
            let value = product_ifs_criterion(&sizes, &ratios)?;
            Outcome::json(&json!({
                "sizes": sizes,
                "ratios": ratios,
                "criterion": value,
                "zero_measure_certified": value < 1.0,
            }))
        }
    }
}

fn lambda(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let value = ifs.lambda_value();
    let mut out = Outcome::json(&json!({
        "lambda": value,
        "d": ifs.dim(),
        "m": ifs.alphabet_size(),
        "operator_norms": ifs.operator_norms(),
        "max_operator_norm": ifs.max_operator_norm(),
    }))?;
    out.stdout = format!("{value:?}\n");
    Ok(out)
}

fn garsia_sep(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let lambda = match (cfg.lambda, &cfg.poly) {
        (Some(l), _) => l,
        (None, Some(_)) => {
            let report = is_garsia(&polynomial(cfg)?)?;
            report.lambda().ok_or_else(|| {
                CliError::Core(Error::Domain(format!(
                    "{} is not a certified Garsia polynomial ({:?})",
                    report.polynomial, report.verdict
                )))
            })?
        }
        (None, None) => return Err(CliError::Config("garsia-sep needs `lambda` or `poly`".into())),
    };
    let first = defaulted(&mut cfg.n_min, 1);
    let last = defaulted(&mut cfg.n, 10);
    Outcome::json(&separation_profile(lambda, first..=last)?)
}

fn stage_measure(cfg: &mut ExperimentConfig, kind: Kind, out_dir: &Path) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let d = ifs.dim();
    let h = parse_h(&required(&cfg.h, "h")?)?;
    let spec = if kind == Kind::RecurrenceMeasure {
        TargetSpec::recurrence(h)
    } else {
        let center = parse_sequence(&defaulted(&mut cfg.center, "(0)".into()))?;
        TargetSpec::shrinking_ball(h, Centers::Sequence(center))
    };
    let last = required(&cfg.n, "n")?;
    let first = defaulted(&mut cfg.n_min, 1);
    if first == 0 || first > last {
        return Err(CliError::Config(format!("need 1 <= n_min <= n, got n_min = {first}, n = {last}")));
    }
    check_words(ifs.alphabet_size(), last, cfg)?;
    let resolution = defaulted(&mut cfg.resolution, if d == 1 { 1 << 14 } else { 512 });
    check_cells(resolution, d, cfg)?;
    let window = match &cfg.window {
        Some(values) => parse_window(values, d)?,
        None => {
            let mut bodies = Vec::new();
            for n in first..=last {
                bodies.extend(stage_bodies(&ifs, &spec, n)?);
            }
            let w = Window::bounding(&bodies, WINDOW_PAD)?;
            cfg.window = Some(window_values(&w));
            w
        }
    };
    let mut masks: Vec<PixelMask> = Vec::new();
    let report = stage_measure_report(&ifs, &spec, first, last, &window, &vec![resolution; d], Some(&mut masks))?;
    if !report.bounds.bonferroni_le_union || report.bounds.kochen_stone_le_union == Some(false) {
        return Err(Error::Consistency("a classical lower bound exceeds the measured union".into()).into());
    }
    let mut out = Outcome::json(&report)?;
    let top = masks.last().expect("at least one level");
    if let Some(name) = &cfg.pgm {
        let w = create(out_dir, name)?;
        top.write_pgm(w)?;
        out.artifacts.push(name.clone());
    }
    if let Some(name) = &cfg.csv {
        let w = create(out_dir, name)?;
        top.write_runs_csv(w)?;
        out.artifacts.push(name.clone());
    }
    Ok(out)
}

fn bounds(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let h = parse_h(&required(&cfg.h, "h")?)?;
    let membership = h.membership();
    let spec = match defaulted(&mut cfg.target, "shrinking".into()).as_str() {
        "shrinking" => {
            let center = parse_sequence(&defaulted(&mut cfg.center, "(0)".into()))?;
            TargetSpec::shrinking_ball(h, Centers::Sequence(center))
        }
        "recurrence" => TargetSpec::recurrence(h),
        other => return Err(CliError::Config(format!("target must be shrinking or recurrence, got {other:?}"))),
    };
    let n = defaulted(&mut cfg.n, 12);
    if spec.is_recurrence() {
        check_words(ifs.alphabet_size(), n, cfg)?;
    }
    let mut pair = None;
    let mut overlap = None;
    if let Some(max_len) = cfg.max_len {
        check_words(ifs.alphabet_size(), max_len, cfg)?;
        if let Some(p) = detect_exact_overlaps(&ifs, max_len)?.into_iter().find(|p| p.exact_confirmed) {
            let gamma = exact_overlap_gamma(&ifs, &p.u)?;
            if gamma > 0.0 && gamma < 1.0 {
                overlap = Some((gamma, p.u.len()));
            }
            pair = Some(p);
        }
    }
    let report = borel_cantelli_report(&ifs, &spec, n, overlap)?;
    Outcome::json(&json!({
        "borel_cantelli": report,
        "h_membership": membership,
        "exact_overlap": pair,
    }))
}

fn cover(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let rows = parse_points_csv(&read_text(&required(&cfg.rectangles, "rectangles")?)?)?;
    let rects = rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            if row.is_empty() || row.len() % 2 != 0 {
                return Err(CliError::Config(format!(
                    "rectangle row {i} needs center coordinates followed by half-widths"
                )));
            }
            let d = row.len() / 2;
            Ok(Rectangle::new(row[..d].to_vec(), row[d..].to_vec())?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let family = ShrinkingRectangleFamily::new(rects)?;
    let selected = greedy_disjoint_cover(&family);
    let witnesses = cover_witnesses(&family, &selected);
    if witnesses.iter().any(Option::is_none) {
        return Err(Error::Consistency("a rectangle escaped the 3-dilates of the selection".into()).into());
    }
    Outcome::json(&json!({
        "rectangles": family.len(),
        "selected": selected,
        "witnesses": witnesses,
    }))
}

fn separated(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let points = parse_points_csv(&read_text(&required(&cfg.points, "points")?)?)?;
    let shape = parse_shape(&defaulted(&mut cfg.shape, "ball:1".into()))?;
    let s = required(&cfg.s, "s")?;
    let selected = max_separated_subset(&points, &shape, s)?;
    let exact = if defaulted(&mut cfg.exact, false) {
        Some(exact_max_separated_subset(&points, &shape, s)?)
    } else {
        None
    };
    Outcome::json(&json!({
        "points": points.len(),
        "selected": selected,
        "size": selected.len(),
        "overlap_pairs": count_overlap_pairs(&points, &shape, s)?,
        "exact": exact,
    }))
}

fn mc_transversality(cfg: &mut ExperimentConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let mc = mc_config(cfg, matrices(&ifs));
    check_words(ifs.alphabet_size(), mc.n, cfg)?;
    let tail = parse_sequence(&defaulted(&mut cfg.tail, "(0)".into()))?;
    let scaling = mc_scaling(&mc, &tail)?;
    let union = match cfg.union_resolution {
        Some(res) => {
            check_cells(res, ifs.dim(), cfg)?;
            Some(mc_union(&mc, &tail, res)?)
        }
        None => None,
    };
    let mut out = Outcome::json(&json!({ "scaling": scaling, "union": union }))?;
    if let Some(name) = &cfg.csv {
        let w = create(out_dir, name)?;
        scaling.write_csv(w)?;
        out.artifacts.push(name.clone());
    }
    Ok(out)
}

fn mc_recurrence_cmd(cfg: &mut ExperimentConfig, out_dir: &Path) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let d = ifs.dim();
    let mc = mc_config(cfg, matrices(&ifs));
    check_words(ifs.alphabet_size(), mc.n, cfg)?;
    let resolution = defaulted(&mut cfg.resolution, if d == 1 { 1 << 12 } else { 256 });
    check_cells(resolution, d, cfg)?;
    let report = mc_recurrence(&mc, resolution)?;
    let mut out = Outcome::json(&report)?;
    if let Some(name) = &cfg.csv {
        let w = create(out_dir, name)?;
        report.write_csv(w)?;
        out.artifacts.push(name.clone());
    }
    Ok(out)
}

fn exact_overlap(cfg: &mut ExperimentConfig) -> Result<Outcome, CliError> {
    let ifs = cfg.resolve_ifs()?;
    let max_len = defaulted(&mut cfg.max_len, 4);
    check_words(ifs.alphabet_size(), max_len, cfg)?;
    let pairs = detect_exact_overlaps(&ifs, max_len)?;
    let gammas = pairs
        .iter()
        .map(|p| exact_overlap_gamma(&ifs, &p.u))
        .collect::<Result<Vec<f64>, Error>>()?;
    Outcome::json(&json!({
        "max_len": max_len,
        "pairs": pairs,
        "gammas": gammas,
    }))
}
