use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, IfsSource, Kind};

#[derive(Debug, Parser)]
#[command(
    name = "ifs-recur",
    version,
    about = "Finite-stage shrinking-target and recurrence experiments for affine iterated function systems",
    after_help = "Every run writes results.json (and results.meta.json) into --out. \
Flags override the keys of --config. Exit codes: 0 ok, 2 config or input error, 3 budget exceeded, 4 consistency failure."
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every experiment.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON experiment config; flags given on the command line take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for results.json and other artifacts
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads, 0 = automatic (falls back to IFS_RECUR_THREADS)
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Cap on words enumerated per level
    #[arg(long, global = true)]
    pub budget_words: Option<u64>,
    /// Cap on raster cells per mask
    #[arg(long, global = true)]
    pub budget_cells: Option<u64>,
    /// Cap on Monte Carlo samples
    #[arg(long, global = true)]
    pub budget_samples: Option<usize>,
    /// Deepest Monte Carlo level
    #[arg(long, global = true)]
    pub budget_max_level: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the Lebesgue contraction factor λ(A) = Σ|det A_i|
    Lambda(IfsArgs),
    /// Decide whether a monic integer polynomial has a Garsia number as root
    GarsiaCheck(PolyArgs),
    /// Separation profile of {-1,0,1} power sums for λ or a Garsia polynomial
    GarsiaSep(SepArgs),
    /// Measure shrinking-target stage sets and their classical lower bounds
    StageMeasure(StageArgs),
    /// Measure quantitative-recurrence stage sets and their classical lower bounds
    RecurrenceMeasure(StageArgs),
    /// First Borel–Cantelli partial sums, with the overlap decay series when one is found
    Bounds(BoundsArgs),
    /// Greedy disjoint subfamily of shrinking rectangles read from CSV
    Cover(CoverArgs),
    /// Greedy separated subset of points read from CSV
    Separated(SeparatedArgs),
    /// Monte Carlo pair-count scaling over random translations
    McTransversality(McArgs),
    /// Monte Carlo recurrence-union statistic against its per-sample bound
    McRecurrence(McArgs),
    /// Hausdorff dimension lower bound for a diagonal system
    Dim(DimArgs),
    /// Zero/full measure verdict for Garsia-type diagonal systems
    GarsiaCriterion(CriterionArgs),
    /// Search for exact overlaps S_u = S_v among words up to a length
    ExactOverlap(OverlapArgs),
    /// Zero-measure criterion for products of homogeneous systems
    ProductCriterion(ProductArgs),
    /// Run the experiment described entirely by --config
    Run,
}

#[derive(Debug, Args)]
pub struct IfsArgs {
    /// IFS JSON file
    #[arg(long)]
    pub ifs: Option<String>,
}

#[derive(Debug, Args)]
pub struct PolyArgs {
    /// Polynomial such as "x^2-2" or a coefficient list "[1,0,-2]"
    #[arg(long)]
    pub poly: Option<String>,
}

#[derive(Debug, Args)]
pub struct SepArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub poly: Option<String>,
    /// Deepest level
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub n_min: Option<usize>,
}

#[derive(Debug, Args)]
pub struct StageArgs {
    #[arg(long)]
    pub ifs: Option<String>,
    /// Deepest level
    #[arg(long)]
    pub n: Option<usize>,
    /// First level of the range (default 1)
    #[arg(long)]
    pub n_min: Option<usize>,
    /// Rate function: const:C, power:c,alpha or table:h1,h2,...
    #[arg(long)]
    pub h: Option<String>,
    /// Target sequence, e.g. "(0)" or "1(0,1)"; shrinking targets only
    #[arg(long)]
    pub center: Option<String>,
    /// lo,hi or lo1,hi1,lo2,hi2 (default: bounding box of the bodies)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub window: Option<Vec<f64>>,
    /// Cells per axis
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Write the deepest level's mask as PGM (d = 2)
    #[arg(long)]
    pub pgm: Option<String>,
    /// Write the deepest level's mask as run-length CSV
    #[arg(long)]
    pub csv: Option<String>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub ifs: Option<String>,
    #[arg(long)]
    pub h: Option<String>,
    /// shrinking or recurrence
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub center: Option<String>,
    /// Number of levels
    #[arg(long)]
    pub n: Option<usize>,
    /// Search exact overlaps up to this word length
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    /// CSV rows: center coordinates then half-widths
    #[arg(long)]
    pub rectangles: Option<String>,
}

#[derive(Debug, Args)]
pub struct SeparatedArgs {
    /// CSV rows of point coordinates
    #[arg(long)]
    pub points: Option<String>,
    #[arg(long)]
    pub s: Option<f64>,
    /// ball:R or box:h1,h2,...
    #[arg(long)]
    pub shape: Option<String>,
    /// Also compute an exact maximum subset (at most 20 points)
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct McArgs {
    /// IFS whose matrices are kept; translations are sampled
    #[arg(long)]
    pub ifs: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Half-width R of the translation box
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated scales s
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    /// Tail sequence for the projected targets (mc-transversality)
    #[arg(long)]
    pub tail: Option<String>,
    /// Also rasterize unions at this resolution (mc-transversality)
    #[arg(long)]
    pub union_resolution: Option<usize>,
    /// Raster resolution per axis (mc-recurrence)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Long-format statistics table
    #[arg(long)]
    pub csv: Option<String>,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda_a: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CriterionArgs {
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub h: Option<String>,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    #[arg(long)]
    pub ifs: Option<String>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ProductArgs {
    /// Number of maps in each factor
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Contraction ratio of each factor
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
}

impl Command {
    /// The experiment kind and the config keys set by flags.
    pub fn into_overrides(self) -> (Option<Kind>, ExperimentConfig) {
        let mut c = ExperimentConfig::new();
        let kind = match self {
            Command::Lambda(a) => {
                c.ifs = a.ifs.map(IfsSource::Path);
                Kind::Lambda
            }
            Command::GarsiaCheck(a) => {
                c.poly = a.poly;
                Kind::GarsiaCheck
            }
            Command::GarsiaSep(a) => {
                c.lambda = a.lambda;
                c.poly = a.poly;
                c.n = a.n;
                c.n_min = a.n_min;
                Kind::GarsiaSep
            }
            Command::StageMeasure(a) => {
                a.apply(&mut c);
                Kind::StageMeasure
            }
            Command::RecurrenceMeasure(a) => {
                a.apply(&mut c);
                Kind::RecurrenceMeasure
            }
            Command::Bounds(a) => {
                c.ifs = a.ifs.map(IfsSource::Path);
                c.h = a.h;
                c.target = a.target;
                c.center = a.center;
                c.n = a.n;
                c.max_len = a.max_len;
                Kind::Bounds
            }
            Command::Cover(a) => {
                c.rectangles = a.rectangles;
                Kind::Cover
            }
            Command::Separated(a) => {
                c.points = a.points;
                c.s = a.s;
                c.shape = a.shape;
                c.exact = a.exact.then_some(true);
                Kind::Separated
            }
            Command::McTransversality(a) => {
                a.apply(&mut c);
                Kind::McTransversality
            }
            Command::McRecurrence(a) => {
                a.apply(&mut c);
                Kind::McRecurrence
            }
            Command::Dim(a) => {
                c.lambdas = a.lambdas;
                c.lambda_a = a.lambda_a;
                c.s = a.s;
                Kind::Dim
            }
            Command::GarsiaCriterion(a) => {
                c.s = a.s;
                c.h = a.h;
                Kind::GarsiaCriterion
            }
            Command::ExactOverlap(a) => {
                c.ifs = a.ifs.map(IfsSource::Path);
                c.max_len = a.max_len;
                Kind::ExactOverlap
            }
            Command::ProductCriterion(a) => {
                c.sizes = a.sizes;
                c.ratios = a.ratios;
                Kind::ProductCriterion
            }
            Command::Run => return (None, c),
        };
        (Some(kind), c)
    }
}

impl StageArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.ifs = self.ifs.map(IfsSource::Path);
        c.n = self.n;
        c.n_min = self.n_min;
        c.h = self.h;
        c.center = self.center;
        c.window = self.window;
        c.resolution = self.resolution;
        c.pgm = self.pgm;
        c.csv = self.csv;
    }
}

impl McArgs {
    fn apply(self, c: &mut ExperimentConfig) {
        c.ifs = self.ifs.map(IfsSource::Path);
        c.n = self.n;
        c.samples = self.samples;
        c.radius = self.radius;
        c.seed = self.seed;
        c.grid = self.grid;
        c.tail = self.tail;
        c.union_resolution = self.union_resolution;
        c.resolution = self.resolution;
        c.csv = self.csv;
    }
}
