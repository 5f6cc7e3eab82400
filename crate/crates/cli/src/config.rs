use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use ifs_recur::ifs::{AffineIfs, IfsFile};

use crate::error::CliError;

pub const FORMAT_VERSION: &str = "ifs-recur/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Lambda,
    GarsiaCheck,
    GarsiaSep,
    StageMeasure,
    RecurrenceMeasure,
    Bounds,
    Cover,
    Separated,
    McTransversality,
    McRecurrence,
    Dim,
    GarsiaCriterion,
    ExactOverlap,
    ProductCriterion,
}

impl Kind {
    pub const ALL: [Kind; 14] = [
        Kind::Lambda,
        Kind::GarsiaCheck,
        Kind::GarsiaSep,
        Kind::StageMeasure,
        Kind::RecurrenceMeasure,
        Kind::Bounds,
        Kind::Cover,
        Kind::Separated,
        Kind::McTransversality,
        Kind::McRecurrence,
        Kind::Dim,
        Kind::GarsiaCriterion,
        Kind::ExactOverlap,
        Kind::ProductCriterion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Lambda => "lambda",
            Kind::GarsiaCheck => "garsia-check",
            Kind::GarsiaSep => "garsia-sep",
            Kind::StageMeasure => "stage-measure",
            Kind::RecurrenceMeasure => "recurrence-measure",
            Kind::Bounds => "bounds",
            Kind::Cover => "cover",
            Kind::Separated => "separated",
            Kind::McTransversality => "mc-transversality",
            Kind::McRecurrence => "mc-recurrence",
            Kind::Dim => "dim",
            Kind::GarsiaCriterion => "garsia-criterion",
            Kind::ExactOverlap => "exact-overlap",
            Kind::ProductCriterion => "product-criterion",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A path to an IFS file, or the IFS itself. Resolved configs always carry the inline form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IfsSource {
    Path(String),
    Inline(IfsFile),
}

impl IfsSource {
    pub fn load(&self) -> Result<IfsFile, CliError> {
        match self {
            IfsSource::Inline(f) => Ok(f.clone()),
            IfsSource::Path(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("cannot read {p}: {e}")))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad IFS file {p}: {e}")))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Cap on `m^n`, the number of words enumerated at one level.
    pub words: u64,
    /// Cap on raster cells per mask.
    pub cells: u64,
    pub samples: usize,
    /// Deepest level allowed in Monte Carlo sweeps.
    pub max_level: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            words: 1 << 24,
            cells: 1 << 30,
            samples: 500,
            max_level: 8,
        }
    }
}

/// One experiment. Keys irrelevant to `kind` are ignored; unknown keys are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "format_version")]
    pub format_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ifs: Option<IfsSource>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poly: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    /// `const:C`, `power:c,alpha` or `table:h1,h2,...`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    /// Symbolic target sequence such as `(0)` or `1,2(0,1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<String>,
    /// `shrinking` or `recurrence`, for `bounds`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// `[lo, hi]` or `[lo1, hi1, lo2, hi2]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<f64>>,
    /// Cells per axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rectangles: Option<String>,
    /// `ball:R` or `box:h1,h2,...`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(rename = "R", skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub union_resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default)]
    pub budgets: Budgets,
    /// Worker cap; 0 lets rayon decide.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pgm: Option<String>,
}

fn format_version() -> String {
    FORMAT_VERSION.to_string()
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),*) => {
        $(if $top.$field.is_some() {
            $base.$field = $top.$field;
        })*
    };
}

impl ExperimentConfig {
    pub fn new() -> Self {
        ExperimentConfig {
            format_version: format_version(),
            ..Default::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(CliError::Config(format!(
                "format_version {:?} is not supported, expected {FORMAT_VERSION:?}",
                cfg.format_version
            )));
        }
        Ok(cfg)
    }

    /// Reads a config file, or the embedded config of an earlier `results.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{} is not JSON: {e}", path.display())))?;
        match value.get("config") {
            Some(embedded) if value.get("result").is_some() => Self::from_json(&embedded.to_string()),
            _ => Self::from_json(&text),
        }
    }

    /// Every key set in `top` replaces the one here. Budgets are taken from `top` only when they differ from the defaults.
    pub fn overlay(&mut self, top: ExperimentConfig) {
        overlay!(self, top; kind, ifs, poly, lambda, n, n_min, h, center, target, window, resolution, s,
            points, rectangles, shape, exact, samples, seed, radius, grid, tail, union_resolution, lambdas,
            lambda_a, max_len, sizes, ratios, threads, out, csv, pgm);
        if top.budgets != Budgets::default() {
            self.budgets = top.budgets;
        }
    }

    /// Loads the IFS and replaces a path source with the inline description.
    pub fn resolve_ifs(&mut self) -> Result<AffineIfs, CliError> {
        let source = self
            .ifs
            .as_ref()
            .ok_or_else(|| CliError::Config("this experiment needs an IFS (--ifs)".into()))?;
        let file = source.load()?;
        let ifs = file.to_ifs()?;
        self.ifs = Some(IfsSource::Inline(file));
        Ok(ifs)
    }
}
